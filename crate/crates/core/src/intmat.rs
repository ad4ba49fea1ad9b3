//! Dense matrices over the integers with exact, arbitrary-precision entries.
//!
//! Besides the usual arithmetic this module provides the integer-specific
//! kernels the reduction pipeline is built on: the Smith normal form with
//! its transforms, determinantal divisors, completion of a `k × m` matrix to
//! a square matrix whose determinant is the `k`-th determinantal divisor, and
//! the padding of a square matrix into a tall matrix whose windows of
//! consecutive rows all have determinant coprime to `n`.

use std::fmt;
use std::ops::Index;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense row-major integer matrix with at least one row and one column.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must have at least one row and column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<T>(rows: &[Vec<T>]) -> Result<Self>
    where
        T: Clone + Into<BigInt>,
    {
        let big = rows
            .iter()
            .map(|r| r.iter().cloned().map(Into::into).collect())
            .collect();
        Self::from_big_rows(big)
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|row| row.len() != c) {
            return Err(Error::Dimension(format!(
                "row {bad} has {} entries, expected {c}",
                rows[bad].len()
            )));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: BigInt) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        self.data
            .chunks(self.cols)
            .map(<[BigInt]>::to_vec)
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = BigInt::zero();
                for t in 0..self.cols {
                    let a = self.get(i, t);
                    if !a.is_zero() {
                        acc += a * other.get(t, j);
                    }
                }
                data.push(acc);
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn scale(&self, factor: &BigInt) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// Submatrix on the given row and column indices (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// Vertical concatenation.
    pub fn stack(blocks: &[&IntMatrix]) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::Dimension("nothing to stack".into()));
        };
        if let Some(b) = blocks.iter().find(|b| b.cols != first.cols) {
            return Err(Error::Dimension(format!(
                "cannot stack blocks with {} and {} columns",
                first.cols, b.cols
            )));
        }
        let data = blocks.iter().flat_map(|b| b.data.iter().cloned()).collect();
        Self::new(blocks.iter().map(|b| b.rows).sum(), first.cols, data)
    }

    /// Horizontal concatenation `(self | other)`.
    pub fn augment(&self, other: &IntMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "cannot augment {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Self::new(self.rows, self.cols + other.cols, data)
    }

    /// Entries reduced into `[0, n)`.
    pub fn reduce_mod(&self, n: u64) -> Self {
        let n = BigInt::from(n);
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.mod_floor(&n)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let x = self.get(i, j);
                    if i == j {
                        x.is_one()
                    } else {
                        x.is_zero()
                    }
                })
            })
    }

    /// True when the leftmost `rows × rows` block is the identity.
    pub fn has_identity_prefix(&self) -> bool {
        self.rows <= self.cols
            && (0..self.rows).all(|i| {
                (0..self.rows).all(|j| {
                    let x = self.get(i, j);
                    if i == j {
                        x.is_one()
                    } else {
                        x.is_zero()
                    }
                })
            })
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<BigInt> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "determinant of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok(bareiss_det(self.to_rows()))
    }

    /// Transposed cofactor matrix, so that `L · adj(L) = det(L) · I`.
    pub fn adjugate(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "adjugate of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        if n == 1 {
            return Ok(Self::identity(1));
        }
        if let Some(adj) = self.adjugate_by_elimination() {
            return Ok(adj);
        }
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                // C[i][j] = (-1)^(i+j) * minor with row j and column i deleted
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let minor = bareiss_det(self.select(&rows, &cols).to_rows());
                out.set(i, j, if (i + j) % 2 == 0 { minor } else { -minor });
            }
        }
        Ok(out)
    }

    /// Fraction-free Gauss–Jordan on `(A | I)`, which ends at
    /// `(d·I | d·A⁻¹)` with `d = ±det A`. `None` when `A` is singular.
    fn adjugate_by_elimination(&self) -> Option<Self> {
        let n = self.rows;
        let w = 2 * n;
        let mut m: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                let mut row = self.row(i).to_vec();
                row.extend((0..n).map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                }));
                row
            })
            .collect();
        let mut prev = BigInt::one();
        let mut negate = false;
        for k in 0..n {
            let p = (k..n).find(|&i| !m[i][k].is_zero())?;
            if p != k {
                m.swap(p, k);
                negate = !negate;
            }
            let pivot_row = m[k].clone();
            for (i, row) in m.iter_mut().enumerate() {
                if i == k {
                    continue;
                }
                let factor = row[k].clone();
                for j in 0..w {
                    row[j] = (&pivot_row[k] * &row[j] - &factor * &pivot_row[j]) / &prev;
                }
            }
            prev = pivot_row[k].clone();
        }
        let mut out = Self::zeros(n, n);
        for (i, row) in m.into_iter().enumerate() {
            for (j, x) in row.into_iter().skip(n).enumerate() {
                out.set(i, j, if negate { -x } else { x });
            }
        }
        Some(out)
    }

    pub fn rank(&self) -> usize {
        smith_normal_form(self).rank()
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;

    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        self.get(i, j)
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntMatrix{:?}", self.to_rows())
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.data.chunks(self.cols).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "[{}]", row.iter().join(", "))?;
        }
        Ok(())
    }
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = 1;
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}

/// Inverse of a matrix with determinant ±1.
pub fn unimodular_inverse(m: &IntMatrix) -> Result<IntMatrix> {
    let d = m.det()?;
    if !d.abs().is_one() {
        return Err(Error::NotInvertible(format!(
            "matrix has determinant {d}, not ±1"
        )));
    }
    Ok(m.adjugate()?.scale(&d))
}

/// Block diagonal matrix `diag(a, b)`.
pub fn block_diag(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let mut out = IntMatrix::zeros(a.rows + b.rows, a.cols + b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            out.set(i, j, a.get(i, j).clone());
        }
    }
    for i in 0..b.rows {
        for j in 0..b.cols {
            out.set(a.rows + i, a.cols + j, b.get(i, j).clone());
        }
    }
    out
}

/// Smith normal form `U · A · V = S` with unimodular `U`, `V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
}

impl SnfResult {
    /// The diagonal of `S` (length `min(rows, cols)`).
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let n = self.s.rows.min(self.s.cols);
        (0..n).map(|i| self.s.get(i, i).clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors()
            .iter()
            .take_while(|x| !x.is_zero())
            .count()
    }
}

struct SnfWork {
    s: Vec<Vec<BigInt>>,
    u: Vec<Vec<BigInt>>,
    v: Vec<Vec<BigInt>>,
}

impl SnfWork {
    fn rows(&self) -> usize {
        self.s.len()
    }

    fn cols(&self) -> usize {
        self.s[0].len()
    }

    // Smallest nonzero magnitude in the trailing submatrix; row-major scan so
    // ties resolve to the lowest row, then the lowest column.
    fn pivot(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        for i in t..self.rows() {
            for j in t..self.cols() {
                let x = &self.s[i][j];
                if x.is_zero() {
                    continue;
                }
                let mag = x.abs();
                if best.as_ref().is_none_or(|(_, _, b)| mag < *b) {
                    best = Some((i, j, mag));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            self.s.swap(a, b);
            self.u.swap(a, b);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for row in self.s.iter_mut().chain(self.v.iter_mut()) {
                row.swap(a, b);
            }
        }
    }

    // row[dst] += q * row[src]
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        for m in [&mut self.s, &mut self.u] {
            let src_row = m[src].clone();
            for (d, s) in m[dst].iter_mut().zip(src_row) {
                *d += q * s;
            }
        }
    }

    // col[dst] += q * col[src]
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        for m in [&mut self.s, &mut self.v] {
            for row in m.iter_mut() {
                let s = row[src].clone();
                row[dst] += q * s;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for x in self.s[i].iter_mut().chain(self.u[i].iter_mut()) {
            *x = -std::mem::take(x);
        }
    }

    /// Clears row and column `t`; returns false when the trailing block is zero.
    fn diagonalize_at(&mut self, t: usize) -> bool {
        let (r, c) = (self.rows(), self.cols());
        loop {
            let Some((pi, pj)) = self.pivot(t) else {
                return false;
            };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);

            let mut clean = true;
            for i in t + 1..r {
                if !self.s[i][t].is_zero() {
                    let q = self.s[i][t].div_floor(&self.s[t][t]);
                    self.add_row(i, t, &-q);
                    clean &= self.s[i][t].is_zero();
                }
            }
            for j in t + 1..c {
                if !self.s[t][j].is_zero() {
                    let q = self.s[t][j].div_floor(&self.s[t][t]);
                    self.add_col(j, t, &-q);
                    clean &= self.s[t][j].is_zero();
                }
            }
            if !clean {
                continue;
            }

            let p = self.s[t][t].clone();
            let offender =
                (t + 1..r).find(|&i| (t + 1..c).any(|j| !self.s[i][j].mod_floor(&p).is_zero()));
            match offender {
                Some(i) => self.add_row(t, i, &BigInt::one()),
                None => return true,
            }
        }
    }
}

fn identity_rows(n: usize) -> Vec<Vec<BigInt>> {
    IntMatrix::identity(n).to_rows()
}

/// Smith normal form with smallest-magnitude pivoting; diagonal entries are
/// nonnegative and each divides the next.
pub fn smith_normal_form(a: &IntMatrix) -> SnfResult {
    let (r, c) = a.shape();
    let mut w = SnfWork {
        s: a.to_rows(),
        u: identity_rows(r),
        v: identity_rows(c),
    };
    let diag = r.min(c);
    for t in 0..diag {
        if !w.diagonalize_at(t) {
            break;
        }
    }
    for t in 0..diag {
        if w.s[t][t].is_negative() {
            w.negate_row(t);
        }
    }
    let build = |rows: Vec<Vec<BigInt>>| IntMatrix::from_big_rows(rows).expect("nonempty");
    SnfResult {
        u: build(w.u),
        s: build(w.s),
        v: build(w.v),
    }
}

/// gcd of all `k × k` minors of `a` (rows and columns chosen freely).
pub fn determinantal_divisor(a: &IntMatrix, k: usize) -> Result<BigInt> {
    if k == 0 || k > a.rows.min(a.cols) {
        return Err(Error::Index(format!(
            "k = {k} outside 1..={} for a {}x{} matrix",
            a.rows.min(a.cols),
            a.rows,
            a.cols
        )));
    }
    let mut g = BigInt::zero();
    for rows in (0..a.rows).combinations(k) {
        for cols in (0..a.cols).combinations(k) {
            let minor = bareiss_det(a.select(&rows, &cols).to_rows());
            g = g.gcd(&minor);
            if g.is_one() {
                return Ok(g);
            }
        }
    }
    Ok(g)
}

/// `d_k` of a `k × m` matrix with `k ≤ m`, read off its Smith normal form.
pub fn top_divisor(a: &IntMatrix) -> BigInt {
    let snf = smith_normal_form(a);
    let k = a.rows.min(a.cols);
    snf.invariant_factors()[..k].iter().product()
}

/// Extends a `k × m` matrix (`k ≤ m`) to an `m × m` matrix containing it in
/// the first `k` rows with determinant `d_k(A)`.
///
/// The construction writes `A = P⁻¹ (D | 0) Q⁻¹` from the Smith form
/// `P A Q = (D | 0)` and returns `diag(P⁻¹, I) · diag(D, I) · Q⁻¹`, flipping
/// the sign of the last row when needed. For `k = m` the output is `A`
/// itself and its determinant is `±d_k(A)`.
pub fn complete_to_square(a: &IntMatrix) -> Result<IntMatrix> {
    let (k, m) = a.shape();
    if k > m {
        return Err(Error::Dimension(format!(
            "completion needs rows <= cols, got {k}x{m}"
        )));
    }
    let snf = smith_normal_form(a);
    let factors = snf.invariant_factors();
    if factors.iter().any(Zero::is_zero) {
        return Err(Error::RankDeficient(format!(
            "d_{k} of the {k}x{m} matrix is zero"
        )));
    }
    if k == m {
        return Ok(a.clone());
    }
    let dk: BigInt = factors.iter().product();

    let p_inv = unimodular_inverse(&snf.u)?;
    let q_inv = unimodular_inverse(&snf.v)?;
    let mut d = IntMatrix::zeros(k, k);
    for (i, f) in factors.into_iter().enumerate() {
        d.set(i, i, f);
    }
    let rest = IntMatrix::identity(m - k);
    let u_bar = block_diag(&p_inv, &rest);
    let s_bar = block_diag(&d, &rest);
    let mut out = u_bar.mul(&s_bar)?.mul(&q_inv)?;

    let det = out.det()?;
    if det == -&dk {
        for j in 0..m {
            let x = out.get(m - 1, j).clone();
            out.set(m - 1, j, -x);
        }
    } else if det != dk {
        return Err(Error::Internal(format!(
            "completion has determinant {det}, expected ±{dk}"
        )));
    }
    debug_assert!((0..k).all(|i| out.row(i) == a.row(i)));
    Ok(out)
}

fn coprime(x: &BigInt, n: u64) -> bool {
    x.gcd(&BigInt::from(n)).is_one()
}

/// Every window of `r` consecutive rows of the `t × r` matrix has determinant
/// coprime to `n`.
pub fn is_n_good(a: &IntMatrix, n: u64) -> Result<bool> {
    let (t, r) = a.shape();
    if t < r {
        return Err(Error::Dimension(format!(
            "n-good test needs at least {r} rows, got {t}"
        )));
    }
    let cols: Vec<usize> = (0..r).collect();
    Ok((0..=t - r).all(|start| {
        let rows: Vec<usize> = (start..start + r).collect();
        coprime(&bareiss_det(a.select(&rows, &cols).to_rows()), n)
    }))
}

/// Stacks `(I_r; S; M; T; I_r)` with `r(2r+1)` rows so that every window of
/// `r` consecutive rows has determinant coprime to `n`.
pub fn n_good_padding(m: &IntMatrix, n: u64) -> Result<IntMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "padding needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    let det = m.det()?;
    if !coprime(&det, n) {
        return Err(Error::Precondition(format!(
            "det(M) = {det} is not coprime to n = {n}"
        )));
    }
    let r = m.rows;
    let filler = r * r - r;
    let (top, bottom) = if n == 1 {
        let zero = vec![vec![BigInt::zero(); r]; filler];
        (zero.clone(), zero)
    } else {
        let bottom = tail_rows(&m.to_rows(), n)?;
        let mut top = tail_rows(&rotate(&m.to_rows()), n)?;
        top.truncate(filler);
        let mut bottom = bottom;
        bottom.truncate(filler);
        (rotate(&top), bottom)
    };

    let ident = identity_rows(r);
    let mut rows = ident.clone();
    rows.extend(top);
    rows.extend(m.to_rows());
    rows.extend(bottom);
    rows.extend(ident);
    let out = IntMatrix::from_big_rows(rows)?;
    if !is_n_good(&out, n)? {
        return Err(Error::Internal("padded matrix is not n-good".into()));
    }
    Ok(out)
}

// Rows reversed and each row reversed (a 180° rotation); window
// determinants are unchanged.
fn rotate(rows: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    rows.iter()
        .rev()
        .map(|r| r.iter().rev().cloned().collect())
        .collect()
}

/// Extended gcd folded left to right: returns `(g, c)` with
/// `Σ c_i v_i = g ≥ 0`.
fn bezout(values: &[BigInt]) -> (BigInt, Vec<BigInt>) {
    let mut g = BigInt::zero();
    let mut coeffs: Vec<BigInt> = Vec::with_capacity(values.len());
    for v in values {
        let e = g.extended_gcd(v);
        // e.gcd = e.x * g + e.y * v, with e.gcd >= 0 for BigInt
        for c in coeffs.iter_mut() {
            *c *= &e.x;
        }
        coeffs.push(e.y);
        g = e.gcd;
    }
    if g.is_negative() {
        g = -g;
        for c in coeffs.iter_mut() {
            *c = -std::mem::take(c);
        }
    }
    (g, coeffs)
}

/// Rows appended below the `r × r` matrix `m` (`r²` of them, the last `r`
/// forming `I_r`) so that the result is `n`-good. Requires `n > 1` and
/// `gcd(det m, n) = 1`.
fn tail_rows(m: &[Vec<BigInt>], n: u64) -> Result<Vec<Vec<BigInt>>> {
    let r = m.len();
    if r == 1 {
        return Ok(vec![vec![BigInt::one()]]);
    }
    let first_col: Vec<BigInt> = m.iter().map(|row| row[0].clone()).collect();

    // λ_1 c_1 + Σ_{i≥2} λ_i c_i = d' with λ_1 coprime to n. The admissible
    // λ_1 form the progression a + b·t where b = gcd(c_2..c_r) / d'.
    let (d_prime, _) = bezout(&first_col);
    if d_prime.is_zero() {
        return Err(Error::Precondition("first column is zero".into()));
    }
    let (g_rest, beta) = bezout(&first_col[1..]);
    let head = &first_col[0];
    let e = head.extended_gcd(&g_rest);
    let a = if e.gcd.is_negative() { -e.x } else { e.x };
    let b = &g_rest / &d_prime;
    let lambda1 = (0..=n)
        .map(|t| &a + &b * BigInt::from(t))
        .find(|l| coprime(l, n))
        .ok_or_else(|| Error::Internal("no admissible λ_1 in range".into()))?;
    let mut lambda = vec![lambda1.clone()];
    if g_rest.is_zero() {
        lambda.extend(std::iter::repeat_n(BigInt::zero(), r - 1));
    } else {
        let mu = (&d_prime - &lambda1 * head) / &g_rest;
        lambda.extend(beta.iter().map(|x| x * &mu));
    }

    let mut t1 = vec![BigInt::zero(); r];
    for (l, row) in lambda.iter().zip(m) {
        for (acc, x) in t1.iter_mut().zip(row) {
            *acc += l * x;
        }
    }
    debug_assert_eq!(t1[0], d_prime);

    // T_i = M_i - (M_{i,1} / d') T_1 has a zero in its first column.
    let reduced: Vec<Vec<BigInt>> = m[1..]
        .iter()
        .map(|row| {
            let q = &row[0] / &d_prime;
            row.iter().zip(&t1).map(|(x, t)| x - &q * t).collect()
        })
        .collect();
    let inner: Vec<Vec<BigInt>> = reduced.iter().map(|row| row[1..].to_vec()).collect();

    let mut inner_full = inner.clone();
    inner_full.extend(tail_rows(&inner, n)?);

    let mut e1 = vec![BigInt::zero(); r];
    e1[0] = BigInt::one();
    let mut out = Vec::with_capacity(r * r);
    out.push(t1);
    for (idx, row) in inner_full.into_iter().enumerate() {
        if idx > 0 && idx % (r - 1) == 0 {
            out.push(e1.clone());
        }
        let mut padded = vec![BigInt::zero()];
        padded.extend(row);
        out.push(padded);
    }
    debug_assert_eq!(out.len(), r * r);
    Ok(out)
}

/// Distinct prime divisors in increasing order.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn det_mod_prime(m: &IntMatrix, p: u64) -> u64 {
    let n = m.rows;
    let pb = BigInt::from(p);
    let mut a: Vec<Vec<u64>> = m
        .data
        .chunks(n)
        .map(|r| {
            r.iter()
                .map(|x| x.mod_floor(&pb).to_u64().expect("reduced"))
                .collect()
        })
        .collect();
    let mulm = |x: u64, y: u64| ((x as u128 * y as u128) % p as u128) as u64;
    let mut det = 1u64;
    for col in 0..n {
        let Some(piv) = (col..n).find(|&i| a[i][col] != 0) else {
            return 0;
        };
        if piv != col {
            a.swap(piv, col);
            det = (p - det) % p;
        }
        det = mulm(det, a[col][col]);
        let e = (a[col][col] as i128).extended_gcd(&(p as i128));
        let inv = e.x.rem_euclid(p as i128) as u64;
        for i in col + 1..n {
            if a[i][col] == 0 {
                continue;
            }
            let f = mulm(a[i][col], inv);
            let (top, rest) = a.split_at_mut(i);
            let pivot = &top[col];
            for (x, &y) in rest[0][col..].iter_mut().zip(&pivot[col..]) {
                *x = (*x + p - mulm(f, y)) % p;
            }
        }
    }
    det
}

/// `gcd(det(m), n) = 1`, decided prime by prime without forming `det(m)`.
pub fn det_is_unit_mod(m: &IntMatrix, n: u64) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "determinant of a non-square {}x{} matrix",
            m.rows, m.cols
        )));
    }
    Ok(prime_factors(n)
        .into_iter()
        .all(|p| det_mod_prime(m, p) != 0))
}

/// Inverse of `m` modulo `n` with entries in `[0, n)`, or `None` when
/// `det(m)` is not a unit mod `n`. Works for composite `n` by combining rows
/// with Bézout coefficients instead of dividing by pivots.
pub fn inverse_mod(m: &IntMatrix, n: u64) -> Result<Option<IntMatrix>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "inverse of a non-square {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let k = m.rows;
    if n == 1 {
        return Ok(Some(IntMatrix::zeros(k, k)));
    }
    let nb = BigInt::from(n);
    let w = 2 * k;
    let mut a: Vec<Vec<u64>> = (0..k)
        .map(|i| {
            let mut row: Vec<u64> = m
                .row(i)
                .iter()
                .map(|x| x.mod_floor(&nb).to_u64().expect("reduced"))
                .collect();
            row.extend((0..k).map(|j| u64::from(i == j)));
            row
        })
        .collect();
    let mulm = |x: u64, y: u64| ((x as u128 * y as u128) % n as u128) as u64;
    // a·r1 + b·r2 with signed small coefficients
    let combine = |r1: &[u64], r2: &[u64], c1: i128, c2: i128| -> Vec<u64> {
        let c1 = c1.rem_euclid(n as i128) as u64;
        let c2 = c2.rem_euclid(n as i128) as u64;
        r1.iter()
            .zip(r2)
            .map(|(&x, &y)| (mulm(c1, x) + mulm(c2, y)) % n)
            .collect()
    };
    for col in 0..k {
        for i in col + 1..k {
            let (p, q) = (a[col][col] as i128, a[i][col] as i128);
            if q == 0 {
                continue;
            }
            let e = p.extended_gcd(&q);
            let top = combine(&a[col], &a[i], e.x, e.y);
            let bottom = combine(&a[col], &a[i], -q / e.gcd, p / e.gcd);
            a[col] = top;
            a[i] = bottom;
        }
        let pivot = a[col][col];
        let e = (pivot as i128).extended_gcd(&(n as i128));
        if e.gcd != 1 {
            return Ok(None);
        }
        let inv = e.x.rem_euclid(n as i128) as u64;
        for x in a[col].iter_mut() {
            *x = mulm(*x, inv);
        }
        let pivot_row = a[col].clone();
        for (i, row) in a.iter_mut().enumerate() {
            let f = row[col];
            if i == col || f == 0 {
                continue;
            }
            for j in 0..w {
                row[j] = (row[j] + n - mulm(f, pivot_row[j])) % n;
            }
        }
    }
    let data = a
        .into_iter()
        .flat_map(|row| row.into_iter().skip(k).map(BigInt::from))
        .collect();
    Ok(Some(IntMatrix::new(k, k, data)?))
}

pub(crate) fn ser_bigint<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    JsonInt(x).serialize(s)
}

pub(crate) fn ser_bigints<S: Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<JsonInt<'_>> = xs.iter().map(JsonInt).collect();
    v.serialize(s)
}

/// Integers above 2^53 - 1 in magnitude are written as decimal strings.
const MAX_SAFE_JSON_INT: i64 = (1 << 53) - 1;

pub(crate) struct JsonInt<'a>(pub &'a BigInt);

impl Serialize for JsonInt<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(v) if v.abs() <= MAX_SAFE_JSON_INT => serializer.serialize_i64(v),
            _ => serializer.serialize_str(&self.0.to_string()),
        }
    }
}

/// Integer read from a JSON number or a decimal string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct DecimalInt(pub BigInt);

impl<'de> Deserialize<'de> for DecimalInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = DecimalInt;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a decimal string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<DecimalInt, E> {
                Ok(DecimalInt(v.into()))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<DecimalInt, E> {
                Ok(DecimalInt(v.into()))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<DecimalInt, E> {
                Err(E::custom(format!(
                    "{v} is not an exact integer; write large values as decimal strings"
                )))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<DecimalInt, E> {
                v.trim()
                    .parse::<BigInt>()
                    .map(DecimalInt)
                    .map_err(|_| E::custom(format!("{v:?} is not a decimal integer")))
            }
        }
        deserializer.deserialize_any(V)
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<JsonInt<'_>>> = self
            .data
            .chunks(self.cols)
            .map(|r| r.iter().map(JsonInt).collect())
            .collect();
        let mut st = serializer.serialize_struct("IntMatrix", 3)?;
        st.serialize_field("rows", &self.rows)?;
        st.serialize_field("cols", &self.cols)?;
        st.serialize_field("data", &rows)?;
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Vec<DecimalInt>>,
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawMatrix::deserialize(deserializer)?;
        if raw.data.len() != raw.rows {
            return Err(de::Error::custom(format!(
                "\"rows\" is {} but \"data\" has {} rows",
                raw.rows,
                raw.data.len()
            )));
        }
        if let Some(bad) = raw.data.iter().position(|r| r.len() != raw.cols) {
            return Err(de::Error::custom(format!(
                "\"cols\" is {} but data row {bad} has {} entries",
                raw.cols,
                raw.data[bad].len()
            )));
        }
        let data = raw.data.into_iter().flatten().map(|d| d.0).collect();
        IntMatrix::new(raw.rows, raw.cols, data).map_err(de::Error::custom)
    }
}
