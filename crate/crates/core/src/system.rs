//! Restricted systems `{A, b, X}` over a finite abelian group and the
//! extensions relating them.
//!
//! A solution of `{A, b, X}` is a vector `x ∈ G^m` with `A x = b` and
//! `x_i ∈ X_i`. An [`Extension`] records a larger system together with a
//! coordinate matching `σ` and explicit per-coordinate maps `φ_i`; the
//! [`verify_extension`] check enumerates both solution sets and confirms
//! that the induced map is a bijection.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::de;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::abelian::{is_zero_element, AbelianGroup, ElementSet, GroupElement, GroupMatrix};
use crate::error::{Error, Result};
use crate::intmat::{top_divisor, IntMatrix};

pub type Solution = Vec<GroupElement>;

/// Upper bound on the number of candidate vectors an enumeration may visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget(u64);

impl Budget {
    pub const DEFAULT: Budget = Budget(10_000_000);

    pub fn new(limit: u64) -> Result<Self> {
        if limit == 0 {
            return Err(Error::Invalid("budget must be at least 1".into()));
        }
        Ok(Budget(limit))
    }

    pub fn limit(self) -> u64 {
        self.0
    }

    pub fn check(self, needed: u128) -> Result<()> {
        if needed > self.0 as u128 {
            Err(Error::Budget {
                needed,
                budget: self.0,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}

fn product_size<'a>(sets: impl Iterator<Item = &'a ElementSet>) -> u128 {
    sets.fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedSystem {
    group: AbelianGroup,
    matrix: IntMatrix,
    rhs: Vec<GroupElement>,
    restrictions: Vec<ElementSet>,
    dk: BigInt,
}

impl RestrictedSystem {
    pub fn new(
        group: AbelianGroup,
        matrix: IntMatrix,
        rhs: Vec<GroupElement>,
        restrictions: Vec<ElementSet>,
    ) -> Result<Self> {
        let dk = if matrix.has_identity_prefix() {
            BigInt::one()
        } else {
            top_divisor(&matrix)
        };
        Self::with_divisor(group, matrix, rhs, restrictions, dk)
    }

    fn with_divisor(
        group: AbelianGroup,
        matrix: IntMatrix,
        rhs: Vec<GroupElement>,
        restrictions: Vec<ElementSet>,
        dk: BigInt,
    ) -> Result<Self> {
        let (k, m) = matrix.shape();
        if k > m {
            return Err(Error::Dimension(format!(
                "system matrix must have rows <= cols, got {k}x{m}"
            )));
        }
        if rhs.len() != k {
            return Err(Error::Dimension(format!(
                "right-hand side has {} entries, matrix has {k} rows",
                rhs.len()
            )));
        }
        if restrictions.len() != m {
            return Err(Error::Dimension(format!(
                "{} restriction sets for {m} unknowns",
                restrictions.len()
            )));
        }
        if let Some(bad) = rhs.iter().find(|g| !group.contains(g)) {
            return Err(Error::Invalid(format!(
                "{bad:?} is not an element of the group"
            )));
        }
        for (i, set) in restrictions.iter().enumerate() {
            if let Some(bad) = set.iter().find(|g| !group.contains(g)) {
                return Err(Error::Invalid(format!(
                    "X_{} contains {bad:?}, not an element of the group",
                    i + 1
                )));
            }
        }
        Ok(Self {
            group,
            matrix,
            rhs,
            restrictions,
            dk,
        })
    }

    /// Homogeneous system with every unknown ranging over the whole group.
    pub fn unrestricted(group: AbelianGroup, matrix: IntMatrix) -> Result<Self> {
        let rhs = vec![group.zero(); matrix.rows()];
        let restrictions = vec![group.full_set(); matrix.cols()];
        Self::new(group, matrix, rhs, restrictions)
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[GroupElement] {
        &self.rhs
    }

    pub fn restrictions(&self) -> &[ElementSet] {
        &self.restrictions
    }

    /// Number of equations.
    pub fn k(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of unknowns.
    pub fn m(&self) -> usize {
        self.matrix.cols()
    }

    /// `d_k(A)`.
    pub fn top_divisor(&self) -> &BigInt {
        &self.dk
    }

    /// `gcd(d_k(A), |G|) = 1`.
    pub fn is_coprime(&self) -> bool {
        self.dk.gcd(&BigInt::from(self.group.order())).is_one()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.rhs.iter().all(is_zero_element)
    }

    /// Same matrix and right-hand side, new restriction sets.
    pub fn with_restrictions(&self, restrictions: Vec<ElementSet>) -> Result<Self> {
        Self::with_divisor(
            self.group.clone(),
            self.matrix.clone(),
            self.rhs.clone(),
            restrictions,
            self.dk.clone(),
        )
    }

    /// The system with `X_i \ removed_i` in place of `X_i`.
    pub fn without(&self, removed: &[ElementSet]) -> Result<Self> {
        if removed.len() != self.m() {
            return Err(Error::Dimension(format!(
                "{} removal sets for {} unknowns",
                removed.len(),
                self.m()
            )));
        }
        let restrictions = self
            .restrictions
            .iter()
            .zip(removed)
            .map(|(x, r)| x.difference(r).cloned().collect())
            .collect();
        self.with_restrictions(restrictions)
    }

    pub fn is_solution(&self, x: &[GroupElement]) -> bool {
        x.len() == self.m()
            && x.iter()
                .zip(&self.restrictions)
                .all(|(v, set)| set.contains(v))
            && GroupMatrix::new(&self.matrix, &self.group).apply(x) == self.rhs
    }
}

/// All solutions in lexicographic order.
///
/// When `A = (I_k | B)` only the free unknowns `x_{k+1..m}` are enumerated
/// and the pivot block is solved for; otherwise every vector of
/// `X_1 × … × X_m` is tried. Either way the candidate count must fit the
/// budget.
pub fn enumerate_solutions(sys: &RestrictedSystem, budget: Budget) -> Result<Vec<Solution>> {
    let (k, m) = sys.matrix.shape();
    let gm = GroupMatrix::new(&sys.matrix, &sys.group);
    let sets: Vec<Vec<GroupElement>> = sys
        .restrictions
        .iter()
        .map(|s| s.iter().cloned().collect())
        .collect();
    let free_from = if sys.matrix.has_identity_prefix() {
        k
    } else {
        0
    };
    budget.check(product_size(sys.restrictions[free_from..].iter()))?;
    if sets.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }

    let mut out = Vec::new();
    let mut x: Solution = (0..m).map(|_| sys.group.zero()).collect();
    let mut idx = vec![0usize; m];
    for j in free_from..m {
        x[j] = sets[j][0].clone();
    }
    loop {
        if free_from == k {
            let ok = (0..k).all(|i| {
                let s = gm.row_dot(i, &x, k..m);
                let v = sys.group.sub(&sys.rhs[i], &s);
                let hit = sys.restrictions[i].contains(&v);
                x[i] = v;
                hit
            });
            if ok {
                out.push(x.clone());
            }
        } else if gm.apply(&x) == sys.rhs {
            out.push(x.clone());
        }

        // odometer over the free coordinates, last coordinate fastest
        let mut j = m;
        loop {
            if j == free_from {
                if free_from == k {
                    out.sort();
                }
                return Ok(out);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < sets[j].len() {
                x[j] = sets[j][idx[j]].clone();
                break;
            }
            idx[j] = 0;
            x[j] = sets[j][0].clone();
        }
    }
}

pub fn count_solutions(sys: &RestrictedSystem, budget: Budget) -> Result<usize> {
    enumerate_solutions(sys, budget).map(|s| s.len())
}

/// A coordinate fixed across all solutions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinWitness {
    /// Zero-based coordinate index.
    pub coordinate: usize,
    /// Common value; `None` only when the system has no solutions.
    pub value: Option<GroupElement>,
}

impl ThinWitness {
    pub fn is_vacuous(&self) -> bool {
        self.value.is_none()
    }
}

/// Smallest coordinate that is constant over all solutions. Systems with at
/// most one solution are thin at the first coordinate; with no solutions the
/// witness value is absent.
pub fn is_thin(sys: &RestrictedSystem, budget: Budget) -> Result<Option<ThinWitness>> {
    let sols = enumerate_solutions(sys, budget)?;
    Ok(thin_coordinate(&sols))
}

pub(crate) fn thin_coordinate(sols: &[Solution]) -> Option<ThinWitness> {
    let Some(first) = sols.first() else {
        return Some(ThinWitness {
            coordinate: 0,
            value: None,
        });
    };
    (0..first.len())
        .find(|&j| sols.iter().all(|s| s[j] == first[j]))
        .map(|j| ThinWitness {
            coordinate: j,
            value: Some(first[j].clone()),
        })
}

/// Explicit finite map `Y_i → X_σ(i)`.
pub type CoordinateMap = BTreeMap<GroupElement, GroupElement>;

/// One matched coordinate: target index `i ∈ I_0`, source index `σ(i)` and `φ_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    pub target: usize,
    pub source: usize,
    pub map: CoordinateMap,
}

/// A larger system whose solutions correspond to those of `source`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    target: RestrictedSystem,
    source: RestrictedSystem,
    couplings: Vec<Coupling>,
}

impl Extension {
    pub fn new(
        target: RestrictedSystem,
        source: RestrictedSystem,
        mut couplings: Vec<Coupling>,
    ) -> Result<Self> {
        couplings.sort_by_key(|c| c.target);
        let mut seen_t = BTreeSet::new();
        let mut seen_s = BTreeSet::new();
        for c in &couplings {
            if c.target >= target.m() || c.source >= source.m() {
                return Err(Error::Index(format!(
                    "coupling {} -> {} outside {} and {} coordinates",
                    c.target + 1,
                    c.source + 1,
                    target.m(),
                    source.m()
                )));
            }
            if !seen_t.insert(c.target) || !seen_s.insert(c.source) {
                return Err(Error::Invalid(format!(
                    "coordinate matching is not injective at {} -> {}",
                    c.target + 1,
                    c.source + 1
                )));
            }
        }
        Ok(Self {
            target,
            source,
            couplings,
        })
    }

    /// `σ` and every `φ_i` are identities.
    pub fn identity(sys: &RestrictedSystem) -> Self {
        let couplings = sys
            .restrictions
            .iter()
            .enumerate()
            .map(|(i, set)| Coupling {
                target: i,
                source: i,
                map: set.iter().map(|g| (g.clone(), g.clone())).collect(),
            })
            .collect();
        Self {
            target: sys.clone(),
            source: sys.clone(),
            couplings,
        }
    }

    pub fn target(&self) -> &RestrictedSystem {
        &self.target
    }

    pub fn source(&self) -> &RestrictedSystem {
        &self.source
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// `I_0`, sorted, zero-based.
    pub fn matched(&self) -> Vec<usize> {
        self.couplings.iter().map(|c| c.target).collect()
    }

    pub fn sigma(&self, target: usize) -> Option<usize> {
        self.coupling(target).map(|c| c.source)
    }

    pub fn coupling(&self, target: usize) -> Option<&Coupling> {
        self.couplings
            .binary_search_by_key(&target, |c| c.target)
            .ok()
            .map(|i| &self.couplings[i])
    }

    /// Source-coordinate index to target-coordinate index (`σ⁻¹`).
    pub fn sigma_inverse(&self, source: usize) -> Option<usize> {
        self.couplings
            .iter()
            .find(|c| c.source == source)
            .map(|c| c.target)
    }

    /// True when every `φ_i` is injective.
    pub fn maps_injective(&self) -> bool {
        self.couplings.iter().all(|c| {
            let image: BTreeSet<_> = c.map.values().collect();
            image.len() == c.map.len()
        })
    }

    /// The induced map on vectors: `φ(y)_σ(i) = φ_i(y_i)`. `None` when some
    /// `y_i` is outside the domain of `φ_i` or the matching is incomplete.
    pub fn apply(&self, y: &[GroupElement]) -> Option<Solution> {
        let mut out: Vec<Option<GroupElement>> = vec![None; self.source.m()];
        for c in &self.couplings {
            out[c.source] = Some(c.map.get(y.get(c.target)?)?.clone());
        }
        out.into_iter().collect()
    }

    /// Chains `self` (target → mid) with `lower` (mid → source).
    pub fn then(&self, lower: &Extension) -> Result<Extension> {
        if self.source.m() != lower.target.m() || self.source.k() != lower.target.k() {
            return Err(Error::Dimension(
                "extensions do not share a middle system".into(),
            ));
        }
        let mut couplings = Vec::new();
        for c in &self.couplings {
            let Some(l) = lower.coupling(c.source) else {
                continue;
            };
            let mut map = CoordinateMap::new();
            for (y, mid) in &c.map {
                let z = l.map.get(mid).ok_or_else(|| {
                    Error::Internal(format!(
                        "φ image {mid:?} at coordinate {} is outside the next map's domain",
                        c.source + 1
                    ))
                })?;
                map.insert(y.clone(), z.clone());
            }
            couplings.push(Coupling {
                target: c.target,
                source: l.source,
                map,
            });
        }
        Extension::new(self.target.clone(), lower.source.clone(), couplings)
    }
}

/// Outcome of [`verify_extension`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionReport {
    pub e1_dimensions: bool,
    pub e2_full_group: bool,
    pub e3_bijection: bool,
    pub target_solutions: usize,
    pub source_solutions: usize,
    pub issues: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Solution>,
}

impl ExtensionReport {
    pub fn holds(&self) -> bool {
        self.e1_dimensions && self.e2_full_group && self.e3_bijection
    }
}

/// Checks E1 (dimensions), E2 (unmatched target coordinates range over all
/// of `G`) and E3 (the induced map is a bijection of solution sets) by
/// exhaustive enumeration.
pub fn verify_extension(ext: &Extension, budget: Budget) -> Result<ExtensionReport> {
    let (t, s) = (&ext.target, &ext.source);
    let mut issues = Vec::new();

    let e1 = t.k() >= s.k() && t.m() >= s.m() && t.m() - t.k() == s.m() - s.k();
    if !e1 {
        issues.push(format!(
            "E1: target is {}x{}, source is {}x{}",
            t.k(),
            t.m(),
            s.k(),
            s.m()
        ));
    }

    let mut e2 = true;
    if ext.couplings.len() != s.m() {
        e2 = false;
        issues.push(format!(
            "E2: |I_0| = {} but the source has {} unknowns",
            ext.couplings.len(),
            s.m()
        ));
    }
    for i in 0..t.m() {
        if ext.coupling(i).is_none() && !t.group.is_full(&t.restrictions[i]) {
            e2 = false;
            issues.push(format!(
                "E2: unmatched coordinate {} does not range over G",
                i + 1
            ));
        }
    }

    let mut e3 = e2;
    for c in &ext.couplings {
        let domain: ElementSet = c.map.keys().cloned().collect();
        if domain != t.restrictions[c.target] {
            e3 = false;
            issues.push(format!(
                "E3: φ_{} is not defined exactly on Y_{}",
                c.target + 1,
                c.target + 1
            ));
        }
        if let Some((y, x)) = c
            .map
            .iter()
            .find(|(_, x)| !s.restrictions[c.source].contains(*x))
        {
            e3 = false;
            issues.push(format!(
                "E3: φ_{}({y}) = {x} is outside X_{}",
                c.target + 1,
                c.source + 1
            ));
        }
    }

    let target_sols = enumerate_solutions(t, budget)?;
    let source_sols = enumerate_solutions(s, budget)?;
    let source_set: BTreeSet<&Solution> = source_sols.iter().collect();
    let mut images = BTreeSet::new();
    let mut counterexample = None;
    for y in &target_sols {
        match ext.apply(y) {
            Some(x) if source_set.contains(&x) => {
                if !images.insert(x) {
                    e3 = false;
                    issues.push("E3: two target solutions share an image".into());
                    counterexample.get_or_insert_with(|| y.clone());
                }
            }
            Some(_) => {
                e3 = false;
                issues.push("E3: a target solution maps outside the source solutions".into());
                counterexample.get_or_insert_with(|| y.clone());
            }
            None => {
                e3 = false;
                issues.push("E3: a target solution is outside the domain of φ".into());
                counterexample.get_or_insert_with(|| y.clone());
            }
        }
    }
    if let Some(missed) = source_sols.iter().find(|x| !images.contains(*x)) {
        e3 = false;
        issues.push("E3: a source solution is not hit".into());
        counterexample.get_or_insert_with(|| missed.clone());
    }
    issues.dedup();

    Ok(ExtensionReport {
        e1_dimensions: e1,
        e2_full_group: e2,
        e3_bijection: e3,
        target_solutions: target_sols.len(),
        source_solutions: source_sols.len(),
        issues,
        counterexample,
    })
}

#[allow(clippy::large_enum_variant)]
pub enum Homogenized {
    /// Equivalent system with zero right-hand side.
    Equivalent {
        extension: Extension,
        witness: Option<Solution>,
    },
    /// The system has no solutions, so nothing needs removing.
    SolutionFree,
}

/// Translates by the smallest solution `y`: `X'_i = X_i − y_i`, `φ_i(z) = z + y_i`.
pub fn homogenize(sys: &RestrictedSystem, budget: Budget) -> Result<Homogenized> {
    if sys.is_homogeneous() {
        return Ok(Homogenized::Equivalent {
            extension: Extension::identity(sys),
            witness: None,
        });
    }
    let sols = enumerate_solutions(sys, budget)?;
    let Some(y) = sols.into_iter().next() else {
        return Ok(Homogenized::SolutionFree);
    };
    let g = &sys.group;
    let mut restrictions = Vec::with_capacity(sys.m());
    let mut couplings = Vec::with_capacity(sys.m());
    for (i, (set, yi)) in sys.restrictions.iter().zip(&y).enumerate() {
        let mut map = CoordinateMap::new();
        for x in set {
            map.insert(g.sub(x, yi), x.clone());
        }
        restrictions.push(map.keys().cloned().collect());
        couplings.push(Coupling {
            target: i,
            source: i,
            map,
        });
    }
    let target = RestrictedSystem::with_divisor(
        g.clone(),
        sys.matrix.clone(),
        vec![g.zero(); sys.k()],
        restrictions,
        sys.dk.clone(),
    )?;
    Ok(Homogenized::Equivalent {
        extension: Extension::new(target, sys.clone(), couplings)?,
        witness: Some(y),
    })
}

/// Carries a removal on the target system back to the source: the source
/// removes `φ_i(Y'_i)` at coordinate `σ(i)`.
pub fn pull_back_removal(ext: &Extension, removed: &[ElementSet]) -> Result<Vec<ElementSet>> {
    if removed.len() != ext.target.m() {
        return Err(Error::Dimension(format!(
            "{} removal sets for a target with {} unknowns",
            removed.len(),
            ext.target.m()
        )));
    }
    let mut out = vec![ElementSet::new(); ext.source.m()];
    for (i, set) in removed.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let Some(c) = ext.coupling(i) else {
            return Err(Error::Precondition(format!(
                "removal on coordinate {} outside I_0",
                i + 1
            )));
        };
        for y in set {
            let x = c
                .map
                .get(y)
                .ok_or_else(|| Error::Precondition(format!("removed {y} is not in Y_{}", i + 1)))?;
            out[c.source].insert(x.clone());
        }
    }
    Ok(out)
}

// ---- JSON ----

/// A group element written either as a bare integer (cyclic groups) or as a
/// residue array.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawElement {
    Scalar(i64),
    Vector(Vec<i64>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawSet {
    /// `"G"` for the whole group.
    Keyword(String),
    Elements(Vec<RawElement>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    group: AbelianGroup,
    #[serde(rename = "A")]
    matrix: IntMatrix,
    #[serde(default)]
    b: Option<Vec<RawElement>>,
    #[serde(rename = "X", default)]
    restrictions: Option<Vec<RawSet>>,
}

fn ingest_element(group: &AbelianGroup, raw: RawElement) -> Result<GroupElement> {
    match raw {
        RawElement::Scalar(v) => group.element(&[v]),
        RawElement::Vector(v) => group.element(&v),
    }
}

impl TryFrom<RawSystem> for RestrictedSystem {
    type Error = Error;

    fn try_from(raw: RawSystem) -> Result<Self> {
        let group = raw.group;
        let rhs = match raw.b {
            Some(b) => b
                .into_iter()
                .map(|e| ingest_element(&group, e))
                .collect::<Result<_>>()?,
            None => vec![group.zero(); raw.matrix.rows()],
        };
        let restrictions = match raw.restrictions {
            Some(sets) => sets
                .into_iter()
                .map(|s| match s {
                    RawSet::Keyword(k) if k == "G" => Ok(group.full_set()),
                    RawSet::Keyword(k) => Err(Error::Invalid(format!(
                        "unknown restriction keyword {k:?} (expected \"G\")"
                    ))),
                    RawSet::Elements(v) => {
                        v.into_iter().map(|e| ingest_element(&group, e)).collect()
                    }
                })
                .collect::<Result<_>>()?,
            None => vec![group.full_set(); raw.matrix.cols()],
        };
        RestrictedSystem::new(group, raw.matrix, rhs, restrictions)
    }
}

impl<'de> Deserialize<'de> for RestrictedSystem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawSystem::deserialize(deserializer)?;
        RestrictedSystem::try_from(raw).map_err(de::Error::custom)
    }
}

#[derive(Serialize)]
struct SystemJson<'a> {
    group: &'a AbelianGroup,
    #[serde(rename = "A")]
    matrix: &'a IntMatrix,
    b: &'a [GroupElement],
    #[serde(rename = "X")]
    restrictions: &'a [ElementSet],
}

impl Serialize for RestrictedSystem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SystemJson {
            group: &self.group,
            matrix: &self.matrix,
            b: &self.rhs,
            restrictions: &self.restrictions,
        }
        .serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: u64) -> AbelianGroup {
        AbelianGroup::cyclic(n).unwrap()
    }

    fn set(g: &AbelianGroup, vals: &[i64]) -> ElementSet {
        vals.iter().map(|&v| g.element(&[v]).unwrap()).collect()
    }

    fn sol(g: &AbelianGroup, vals: &[i64]) -> Solution {
        vals.iter().map(|&v| g.element(&[v]).unwrap()).collect()
    }

    fn system(g: &AbelianGroup, a: &[Vec<i64>], b: &[i64], x: Vec<ElementSet>) -> RestrictedSystem {
        RestrictedSystem::new(
            g.clone(),
            IntMatrix::from_rows(a).unwrap(),
            b.iter().map(|&v| g.element(&[v]).unwrap()).collect(),
            x,
        )
        .unwrap()
    }

    #[test]
    fn enumerate_examples() {
        let g = z(4);
        let sys = system(
            &g,
            &[vec![1, 1, 1]],
            &[0],
            vec![set(&g, &[0]), set(&g, &[1]), g.full_set()],
        );
        assert_eq!(
            enumerate_solutions(&sys, Budget::DEFAULT).unwrap(),
            vec![sol(&g, &[0, 1, 3])]
        );

        let g5 = z(5);
        let sys = RestrictedSystem::unrestricted(
            g5.clone(),
            IntMatrix::from_rows(&[vec![1, 1, 1]]).unwrap(),
        )
        .unwrap();
        assert_eq!(count_solutions(&sys, Budget::DEFAULT).unwrap(), 25);

        let empty = sys
            .with_restrictions(vec![ElementSet::new(), g5.full_set(), g5.full_set()])
            .unwrap();
        assert!(enumerate_solutions(&empty, Budget::DEFAULT)
            .unwrap()
            .is_empty());

        let sys = RestrictedSystem::unrestricted(
            g5.clone(),
            IntMatrix::from_rows(&[vec![1, 0, 1, 1], vec![0, 1, 1, 2]]).unwrap(),
        )
        .unwrap();
        assert_eq!(count_solutions(&sys, Budget::DEFAULT).unwrap(), 25);
    }

    #[test]
    fn identity_form_and_brute_force_agree() {
        let g = AbelianGroup::new(vec![2, 3]).unwrap();
        let a = IntMatrix::from_rows(&[vec![1, 0, 2, 5], vec![0, 1, 1, 3]]).unwrap();
        let sys = RestrictedSystem::unrestricted(g.clone(), a.clone()).unwrap();
        let fast = enumerate_solutions(&sys, Budget::DEFAULT).unwrap();
        // same system with the first two columns swapped and swapped back in the output
        let swapped = IntMatrix::from_rows(&[vec![0, 1, 2, 5], vec![1, 0, 1, 3]]).unwrap();
        let slow_sys = RestrictedSystem::unrestricted(g.clone(), swapped).unwrap();
        let mut slow: Vec<Solution> = enumerate_solutions(&slow_sys, Budget::DEFAULT)
            .unwrap()
            .into_iter()
            .map(|mut x| {
                x.swap(0, 1);
                x
            })
            .collect();
        slow.sort();
        assert_eq!(fast, slow);
        assert_eq!(fast.len(), 36);
        assert!(fast.iter().all(|x| sys.is_solution(x)));
    }

    #[test]
    fn budget_is_enforced() {
        let g = z(5);
        let sys =
            RestrictedSystem::unrestricted(g, IntMatrix::from_rows(&[vec![2, 1, 1]]).unwrap())
                .unwrap();
        let err = enumerate_solutions(&sys, Budget::new(100).unwrap()).unwrap_err();
        assert_eq!(
            err,
            Error::Budget {
                needed: 125,
                budget: 100
            }
        );
        assert!(Budget::new(0).is_err());
    }

    #[test]
    fn thin_examples() {
        let g = z(3);
        let sys =
            RestrictedSystem::unrestricted(g.clone(), IntMatrix::from_rows(&[vec![1, 0]]).unwrap())
                .unwrap();
        let w = is_thin(&sys, Budget::DEFAULT).unwrap().unwrap();
        assert_eq!((w.coordinate, w.value), (0, Some(g.zero())));

        let g5 = z(5);
        let sys = RestrictedSystem::unrestricted(
            g5.clone(),
            IntMatrix::from_rows(&[vec![1, 1, 1]]).unwrap(),
        )
        .unwrap();
        assert_eq!(is_thin(&sys, Budget::DEFAULT).unwrap(), None);

        let none = sys
            .with_restrictions(vec![set(&g5, &[1]), set(&g5, &[1]), set(&g5, &[1])])
            .unwrap();
        let w = is_thin(&none, Budget::DEFAULT).unwrap().unwrap();
        assert!(w.is_vacuous());
        assert_eq!(w.coordinate, 0);
    }

    #[test]
    fn homogenize_examples() {
        let g = z(3);
        let sys = system(
            &g,
            &[vec![1, 1]],
            &[1],
            vec![set(&g, &[0, 1]), set(&g, &[0, 1])],
        );
        let Homogenized::Equivalent { extension, witness } =
            homogenize(&sys, Budget::DEFAULT).unwrap()
        else {
            panic!("expected an equivalent system");
        };
        assert_eq!(witness, Some(sol(&g, &[0, 1])));
        assert_eq!(
            extension.target().restrictions(),
            &[set(&g, &[0, 1]), set(&g, &[2, 0])]
        );
        assert_eq!(
            enumerate_solutions(extension.target(), Budget::DEFAULT).unwrap(),
            vec![sol(&g, &[0, 0]), sol(&g, &[1, 2])]
        );
        assert!(verify_extension(&extension, Budget::DEFAULT)
            .unwrap()
            .holds());

        let homog = system(
            &g,
            &[vec![1, 1]],
            &[0],
            vec![set(&g, &[0, 1]), g.full_set()],
        );
        let Homogenized::Equivalent { extension, witness } =
            homogenize(&homog, Budget::DEFAULT).unwrap()
        else {
            panic!();
        };
        assert!(witness.is_none());
        assert_eq!(extension, Extension::identity(&homog));

        let single = system(&g, &[vec![1, 1]], &[2], vec![set(&g, &[1]), set(&g, &[1])]);
        let Homogenized::Equivalent { extension, .. } =
            homogenize(&single, Budget::DEFAULT).unwrap()
        else {
            panic!();
        };
        assert_eq!(
            enumerate_solutions(extension.target(), Budget::DEFAULT).unwrap(),
            vec![sol(&g, &[0, 0])]
        );

        let free = system(&g, &[vec![1, 1]], &[1], vec![set(&g, &[0]), set(&g, &[0])]);
        assert!(matches!(
            homogenize(&free, Budget::DEFAULT).unwrap(),
            Homogenized::SolutionFree
        ));
    }

    #[test]
    fn corrupted_sigma_is_rejected_with_counterexample() {
        let g = z(5);
        let sys = system(
            &g,
            &[vec![1, 2, 3]],
            &[1],
            vec![set(&g, &[0, 1, 2]), g.full_set(), set(&g, &[4])],
        );
        let Homogenized::Equivalent { extension, .. } = homogenize(&sys, Budget::DEFAULT).unwrap()
        else {
            panic!();
        };
        assert!(verify_extension(&extension, Budget::DEFAULT)
            .unwrap()
            .holds());

        let mut couplings = extension.couplings().to_vec();
        let (a, b) = (couplings[0].source, couplings[1].source);
        couplings[0].source = b;
        couplings[1].source = a;
        let bad = Extension::new(extension.target().clone(), sys.clone(), couplings).unwrap();
        let report = verify_extension(&bad, Budget::DEFAULT).unwrap();
        assert!(!report.holds());
        assert!(report.counterexample.is_some());
    }

    #[test]
    fn pull_back_examples() {
        let g = z(3);
        let sys = system(
            &g,
            &[vec![1, 1]],
            &[1],
            vec![set(&g, &[0, 1]), set(&g, &[0, 1])],
        );
        let id = Extension::identity(&sys);
        let none = vec![ElementSet::new(); 2];
        assert_eq!(pull_back_removal(&id, &none).unwrap(), none);
        let r = vec![set(&g, &[0]), ElementSet::new()];
        assert_eq!(pull_back_removal(&id, &r).unwrap(), r);

        let Homogenized::Equivalent { extension, witness } =
            homogenize(&sys, Budget::DEFAULT).unwrap()
        else {
            panic!();
        };
        let y = witness.unwrap();
        let removed = vec![ElementSet::new(), set(&g, &[2])];
        let back = pull_back_removal(&extension, &removed).unwrap();
        let expected = g.add(&g.element(&[2]).unwrap(), &y[1]);
        assert_eq!(back[1], [expected].into_iter().collect());
        assert!(back[0].is_empty());
    }

    #[test]
    fn pull_back_rejects_unmatched_coordinates() {
        let g = z(3);
        let small = system(&g, &[vec![1, 1]], &[0], vec![g.full_set(), g.full_set()]);
        let big = system(
            &g,
            &[vec![1, 1, 0], vec![0, 1, 1]],
            &[0, 0],
            vec![g.full_set(); 3],
        );
        let couplings = (0..2)
            .map(|i| Coupling {
                target: i,
                source: i,
                map: g.elements().map(|e| (e.clone(), e)).collect(),
            })
            .collect();
        let ext = Extension::new(big, small, couplings).unwrap();
        let removed = vec![ElementSet::new(), ElementSet::new(), set(&g, &[1])];
        assert!(matches!(
            pull_back_removal(&ext, &removed),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn json_round_trip_and_shorthands() {
        let text = r#"{"group":{"moduli":[4]},"A":{"rows":1,"cols":3,"data":[[1,1,1]]},"b":[-4],"X":[[0],[[1]],"G"]}"#;
        let sys: RestrictedSystem = serde_json::from_str(text).unwrap();
        assert_eq!(sys.restrictions()[2].len(), 4);
        assert!(sys.is_homogeneous());
        let back: RestrictedSystem =
            serde_json::from_str(&serde_json::to_string(&sys).unwrap()).unwrap();
        assert_eq!(back, sys);

        let bad =
            r#"{"group":{"moduli":[4]},"A":{"rows":1,"cols":2,"data":[[1,1]]},"X":["H","G"]}"#;
        assert!(serde_json::from_str::<RestrictedSystem>(bad).is_err());
    }

    #[test]
    fn coprimality_flag() {
        let g = z(4);
        let a = IntMatrix::from_rows(&[vec![2, 4]]).unwrap();
        let sys = RestrictedSystem::unrestricted(g, a.clone()).unwrap();
        assert_eq!(sys.top_divisor(), &BigInt::from(2));
        assert!(!sys.is_coprime());
        let sys = RestrictedSystem::unrestricted(z(5), a).unwrap();
        assert!(sys.is_coprime());
    }
}
