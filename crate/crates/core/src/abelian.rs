//! Finite abelian groups presented as products of cyclic groups.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intmat::{inverse_mod, IntMatrix};

/// `Z_{n_1} × … × Z_{n_t}`; the factors need not be in invariant-factor form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGroup", into = "RawGroup")]
pub struct AbelianGroup {
    moduli: Vec<u64>,
    order: u64,
    exponent: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroup {
    moduli: Vec<u64>,
}

impl TryFrom<RawGroup> for AbelianGroup {
    type Error = Error;

    fn try_from(raw: RawGroup) -> Result<Self> {
        AbelianGroup::new(raw.moduli)
    }
}

impl From<AbelianGroup> for RawGroup {
    fn from(g: AbelianGroup) -> Self {
        RawGroup { moduli: g.moduli }
    }
}

/// Residue vector; always stored reduced.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<u64>);

impl GroupElement {
    pub fn residues(&self) -> &[u64] {
        &self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "(")?;
            for (i, r) in self.0.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{r}")?;
            }
            write!(f, ")")
        }
    }
}

/// Deduplicated, lexicographically sorted set of elements.
pub type ElementSet = BTreeSet<GroupElement>;

impl AbelianGroup {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::Invalid(
                "group needs at least one cyclic factor".into(),
            ));
        }
        if moduli.contains(&0) {
            return Err(Error::Invalid("cyclic orders must be at least 1".into()));
        }
        let order = moduli
            .iter()
            .try_fold(1u64, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Invalid("group order overflows u64".into()))?;
        let exponent = moduli.iter().fold(1u64, |acc, &n| acc.lcm(&n));
        Ok(Self {
            moduli,
            order,
            exponent,
        })
    }

    pub fn cyclic(n: u64) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement(vec![0; self.moduli.len()])
    }

    /// Element from arbitrary integers, reduced componentwise.
    pub fn element(&self, residues: &[i64]) -> Result<GroupElement> {
        if residues.len() != self.moduli.len() {
            return Err(Error::Invalid(format!(
                "element has {} components, group has {}",
                residues.len(),
                self.moduli.len()
            )));
        }
        Ok(GroupElement(
            residues
                .iter()
                .zip(&self.moduli)
                .map(|(&r, &n)| r.rem_euclid(n as i64) as u64)
                .collect(),
        ))
    }

    /// True when `g` has the right length and reduced residues.
    pub fn contains(&self, g: &GroupElement) -> bool {
        g.0.len() == self.moduli.len() && g.0.iter().zip(&self.moduli).all(|(r, n)| r < n)
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.moduli)
                .map(|((x, y), &n)| ((*x as u128 + *y as u128) % n as u128) as u64)
                .collect(),
        )
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &n)| if x == 0 { 0 } else { n - x })
                .collect(),
        )
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    /// `s · g` for any integer `s`.
    pub fn scale(&self, s: &BigInt, g: &GroupElement) -> GroupElement {
        GroupElement(
            g.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &n)| {
                    let c = reduce_big(s, n);
                    mul_mod(c, x, n)
                })
                .collect(),
        )
    }

    /// All elements in lexicographic order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        let total = self.order;
        (0..total).map(move |mut idx| {
            let mut res = vec![0u64; self.moduli.len()];
            for (slot, &n) in res.iter_mut().zip(&self.moduli).rev() {
                *slot = idx % n;
                idx /= n;
            }
            GroupElement(res)
        })
    }

    pub fn full_set(&self) -> ElementSet {
        self.elements().collect()
    }

    /// True when `set` is the whole group.
    pub fn is_full(&self, set: &ElementSet) -> bool {
        set.len() as u64 == self.order && set.iter().all(|g| self.contains(g))
    }
}

pub(crate) fn reduce_big(x: &BigInt, n: u64) -> u64 {
    x.mod_floor(&BigInt::from(n))
        .to_u64()
        .expect("residue fits in u64")
}

pub(crate) fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn inverse_mod_u64(a: u64, n: u64) -> Option<u64> {
    let e = (a as i128).extended_gcd(&(n as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(n as i128) as u64)
}

/// The integer `d'` in `[1, exponent]` with `d'·(d·g) = g` for every `g`.
pub fn scalar_inverse(d: &BigInt, group: &AbelianGroup) -> Result<BigInt> {
    if !d.gcd(&BigInt::from(group.order)).is_one() {
        return Err(Error::NotInvertible(format!(
            "{d} is not coprime to the group order {}",
            group.order
        )));
    }
    let e = group.exponent;
    if e == 1 {
        return Ok(BigInt::one());
    }
    let inv = inverse_mod_u64(reduce_big(d, e), e).expect("coprime to the exponent");
    Ok(BigInt::from(inv))
}

/// Integer matrix inducing the inverse of `g ↦ B g` on `G^k`, entries in
/// `[0, exponent)`.
pub fn linear_map_inverse(b: &IntMatrix, group: &AbelianGroup) -> Result<IntMatrix> {
    // det is a unit mod the order iff it is one mod the exponent
    match inverse_mod(b, group.exponent)? {
        Some(inv) => Ok(inv),
        None => Err(Error::NotInvertible(format!(
            "det = {} is not coprime to the group order {}",
            b.det()?,
            group.order
        ))),
    }
}

/// The subgroup `s·G`.
pub fn scaling_image(s: &BigInt, group: &AbelianGroup) -> ElementSet {
    let per_component: Vec<Vec<u64>> = group
        .moduli
        .iter()
        .map(|&n| {
            let step = reduce_big(s, n).gcd(&n);
            (0..n).step_by(step as usize).collect()
        })
        .collect();
    cartesian(&per_component)
}

/// All `y` with `s·y = x`; empty when `x ∉ s·G`.
pub fn scaling_preimage(s: &BigInt, x: &GroupElement, group: &AbelianGroup) -> ElementSet {
    let mut per_component = Vec::with_capacity(group.moduli.len());
    for (&target, &n) in x.0.iter().zip(&group.moduli) {
        let a = reduce_big(s, n);
        let g = a.gcd(&n);
        if target % g != 0 {
            return ElementSet::new();
        }
        let step = n / g;
        let base = if step == 1 {
            0
        } else {
            let inv = inverse_mod_u64((a / g) % step, step).expect("coprime after division");
            mul_mod(target / g, inv, step)
        };
        per_component.push((0..g).map(|t| base + t * step).collect());
    }
    cartesian(&per_component)
}

fn cartesian(parts: &[Vec<u64>]) -> ElementSet {
    let mut out = vec![Vec::new()];
    for part in parts {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                part.iter().map(move |&x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out.into_iter().map(GroupElement).collect()
}

/// Integer matrix reduced per cyclic factor, for evaluating `A x` on `G^m`.
#[derive(Clone, Debug)]
pub struct GroupMatrix {
    rows: usize,
    cols: usize,
    moduli: Vec<u64>,
    // coeffs[c][i * cols + j] = A[i][j] mod n_c
    coeffs: Vec<Vec<u64>>,
}

impl GroupMatrix {
    pub fn new(a: &IntMatrix, group: &AbelianGroup) -> Self {
        let coeffs = group
            .moduli
            .iter()
            .map(|&n| a.entries().iter().map(|x| reduce_big(x, n)).collect())
            .collect();
        Self {
            rows: a.rows(),
            cols: a.cols(),
            moduli: group.moduli.clone(),
            coeffs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `Σ_{j ∈ cols} A[i][j] x[j]`.
    pub fn row_dot(
        &self,
        i: usize,
        x: &[GroupElement],
        cols: std::ops::Range<usize>,
    ) -> GroupElement {
        let mut out = Vec::with_capacity(self.moduli.len());
        for (c, &n) in self.moduli.iter().enumerate() {
            let row = &self.coeffs[c][i * self.cols..(i + 1) * self.cols];
            let mut acc: u128 = 0;
            for j in cols.clone() {
                acc = (acc + row[j] as u128 * x[j].0[c] as u128) % n as u128;
            }
            out.push(acc as u64);
        }
        GroupElement(out)
    }

    pub fn apply(&self, x: &[GroupElement]) -> Vec<GroupElement> {
        (0..self.rows)
            .map(|i| self.row_dot(i, x, 0..self.cols))
            .collect()
    }
}

/// Zero check used by verifiers.
pub fn is_zero_element(g: &GroupElement) -> bool {
    g.0.iter().all(Zero::is_zero)
}
