//! Reduction of a restricted system to a homogeneous system whose matrix is
//! standard `n`-circular.
//!
//! The chain is: translate by a solution ([`homogenize`]), lift to the
//! identity form `(I_m | B)` with coprime rows ([`extend_to_identity_form`]),
//! then stack `n`-good paddings of the rows of `B` ([`circularize`]). Every
//! stage is an [`Extension`], so solution sets stay in explicit bijection.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::abelian::{
    linear_map_inverse, scalar_inverse, scaling_image, scaling_preimage, AbelianGroup, ElementSet,
    GroupElement,
};
use crate::error::{Error, Result};
use crate::intmat::{
    complete_to_square, det_is_unit_mod, n_good_padding, ser_bigint, ser_bigints, IntMatrix,
};
use crate::system::{
    enumerate_solutions, homogenize, verify_extension, Budget, CoordinateMap, Coupling, Extension,
    ExtensionReport, Homogenized, RestrictedSystem, Solution, ThinWitness,
};

/// Column indices of the `m` circular windows of width `k`, starting at
/// columns `0, 1, …, m-1`.
fn circular_windows(k: usize, m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..m).map(move |j| (0..k).map(|t| (j + t) % m).collect())
}

/// Every `k` circularly consecutive columns have determinant coprime to `n`.
pub fn is_circular(a: &IntMatrix, n: u64) -> bool {
    let (k, m) = a.shape();
    if k > m {
        return false;
    }
    let rows: Vec<usize> = (0..k).collect();
    circular_windows(k, m)
        .all(|cols| det_is_unit_mod(&a.select(&rows, &cols), n).expect("square window"))
}

/// Exact determinants of the circular windows, in order of their first column.
pub fn window_determinants(a: &IntMatrix) -> Result<Vec<BigInt>> {
    let (k, m) = a.shape();
    if k > m {
        return Err(Error::Dimension(format!(
            "{k}x{m} matrix has no k-column windows"
        )));
    }
    let rows: Vec<usize> = (0..k).collect();
    circular_windows(k, m)
        .map(|cols| a.select(&rows, &cols).det())
        .collect()
}

/// Row-equivalent matrix modulo `n` whose left `k × k` block is `I_k`.
///
/// Matrices already of the form `(I_k | B)` are returned unchanged; otherwise
/// the result is `L' A mod n` where `L'` inverts the left block modulo `n`.
pub fn standardize(a: &IntMatrix, n: u64) -> Result<IntMatrix> {
    if a.has_identity_prefix() {
        return Ok(a.clone());
    }
    if !is_circular(a, n) {
        return Err(Error::Precondition(format!("matrix is not {n}-circular")));
    }
    let k = a.rows();
    let idx: Vec<usize> = (0..k).collect();
    let left = a.select(&idx, &idx);
    let zn = AbelianGroup::cyclic(n)?;
    let inv = linear_map_inverse(&left, &zn)
        .map_err(|_| Error::Internal("left block of a circular matrix is not invertible".into()))?;
    let out = inv.mul(a)?.reduce_mod(n);
    if n > 1 && !out.has_identity_prefix() {
        return Err(Error::Internal(
            "standardization did not produce (I|B)".into(),
        ));
    }
    Ok(out)
}

/// The `m × m` matrix `C` with `C_{j,j} ≡ -1`, support of column `j` in the
/// circular interval `[j-k, j]`, and `A C ≡ 0 (mod n)`. Entries lie in `[0, n)`.
pub fn build_c_matrix(a: &IntMatrix, n: u64) -> Result<IntMatrix> {
    let (k, m) = a.shape();
    if m < k + 2 {
        return Err(Error::Precondition(format!(
            "C-matrix needs m >= k + 2, got k = {k}, m = {m}"
        )));
    }
    let zn = AbelianGroup::cyclic(n)?;
    let rows: Vec<usize> = (0..k).collect();
    let mut c = IntMatrix::zeros(m, m);
    for j in 0..m {
        let window: Vec<usize> = (0..k).map(|t| (j + m - k + t) % m).collect();
        let w = a.select(&rows, &window);
        let w_inv = linear_map_inverse(&w, &zn).map_err(|_| {
            Error::Precondition(format!(
                "window before column {} is not invertible mod {n}",
                j + 1
            ))
        })?;
        let col = IntMatrix::new(k, 1, a.column(j))?;
        let coeffs = w_inv.mul(&col)?.reduce_mod(n);
        for (t, &i) in window.iter().enumerate() {
            c.set(i, j, coeffs.get(t, 0).clone());
        }
        c.set(j, j, BigInt::from(n - 1));
    }
    Ok(c.reduce_mod(n))
}

/// A standard `n`-circular matrix together with its C-matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CircularSystem {
    #[serde(rename = "A")]
    matrix: IntMatrix,
    #[serde(rename = "C")]
    c: IntMatrix,
    #[serde(rename = "n")]
    modulus: u64,
}

impl CircularSystem {
    pub fn new(matrix: IntMatrix, modulus: u64) -> Result<Self> {
        if !matrix.has_identity_prefix() {
            return Err(Error::Precondition(
                "matrix is not of the form (I|B)".into(),
            ));
        }
        if !is_circular(&matrix, modulus) {
            return Err(Error::Precondition(format!(
                "matrix is not {modulus}-circular"
            )));
        }
        let c = build_c_matrix(&matrix, modulus)?;
        Ok(Self { matrix, c, modulus })
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn c_matrix(&self) -> &IntMatrix {
        &self.c
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn k(&self) -> usize {
        self.matrix.rows()
    }

    pub fn m(&self) -> usize {
        self.matrix.cols()
    }
}

/// Output of [`extend_to_identity_form`] when the system is not detected thin.
#[derive(Clone, Debug)]
pub struct IdentityForm {
    pub extension: Extension,
    /// Square completion `M` of the source matrix.
    pub completion: IntMatrix,
    /// `det(M)`.
    pub determinant: BigInt,
    /// `adj(M)` applied to the appended identity block, before row division.
    pub unscaled: IntMatrix,
    /// Row gcds `s_i` divided out of `unscaled`.
    pub row_divisors: Vec<BigInt>,
}

#[derive(Clone, Debug)]
pub enum IdentityFormOutcome {
    Extended(Box<IdentityForm>),
    Thin(ThinWitness),
}

fn check_reducible(sys: &RestrictedSystem) -> Result<()> {
    if sys.top_divisor().is_zero() {
        return Err(Error::RankDeficient(format!("d_{}(A) = 0", sys.k())));
    }
    if !sys.is_coprime() {
        return Err(Error::Precondition(format!(
            "gcd(d_k(A), n) = gcd({}, {}) > 1",
            sys.top_divisor(),
            sys.group().order()
        )));
    }
    Ok(())
}

/// Extends a homogeneous system `{A, 0, X}` (`A` of size `k × m`) to
/// `{(I_m | B), 0, Y}` of size `m × (2m − k)` where every row of `B` has gcd
/// 1 and the appended unknowns range over `G`; or reports thinness when a
/// row of `B` vanishes.
pub fn extend_to_identity_form(sys: &RestrictedSystem) -> Result<IdentityFormOutcome> {
    if !sys.is_homogeneous() {
        return Err(Error::Precondition("system must be homogeneous".into()));
    }
    check_reducible(sys)?;
    let group = sys.group();
    let (k, m) = (sys.k(), sys.m());
    let free = m - k;
    if free == 0 {
        // A is square and invertible on G^m: only x = 0 solves it
        return Ok(IdentityFormOutcome::Thin(ThinWitness {
            coordinate: 0,
            value: Some(group.zero()),
        }));
    }

    let completion = complete_to_square(sys.matrix())?;
    let determinant = completion.det()?;
    let d_inv = scalar_inverse(&determinant, group)?;
    let adj = completion.adjugate()?;
    let all_rows: Vec<usize> = (0..m).collect();
    let tail: Vec<usize> = (k..m).collect();
    let unscaled = adj.select(&all_rows, &tail);

    if let Some(j) = (0..m).find(|&i| unscaled.row(i).iter().all(Zero::is_zero)) {
        return Ok(IdentityFormOutcome::Thin(ThinWitness {
            coordinate: j,
            value: Some(group.zero()),
        }));
    }

    let mut b = IntMatrix::zeros(m, free);
    let mut row_divisors = Vec::with_capacity(m);
    let mut restrictions = Vec::with_capacity(2 * m - k);
    let mut couplings = Vec::with_capacity(m);
    for i in 0..m {
        let s = unscaled.row(i).iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        for (j, x) in unscaled.row(i).iter().enumerate() {
            b.set(i, j, x / &s);
        }
        // y ∈ Y_i  ⟺  s·y ∈ d·X_i, and then x_i = d'·s·y
        let scaled: ElementSet = sys.restrictions()[i]
            .iter()
            .map(|x| group.scale(&determinant, x))
            .collect();
        let image = scaling_image(&s, group);
        let mut map = CoordinateMap::new();
        for z in scaled.intersection(&image) {
            for y in scaling_preimage(&s, z, group) {
                let x = group.scale(&d_inv, z);
                map.insert(y, x);
            }
        }
        restrictions.push(map.keys().cloned().collect());
        couplings.push(Coupling {
            target: i,
            source: i,
            map,
        });
        row_divisors.push(s);
    }
    restrictions.extend(std::iter::repeat_n(group.full_set(), free));

    let matrix = IntMatrix::identity(m).augment(&b)?;
    let target = RestrictedSystem::new(group.clone(), matrix, vec![group.zero(); m], restrictions)?;
    let extension = Extension::new(target, sys.clone(), couplings)?;
    Ok(IdentityFormOutcome::Extended(Box::new(IdentityForm {
        extension,
        completion,
        determinant,
        unscaled,
        row_divisors,
    })))
}

/// Output of [`circularize`].
#[derive(Clone, Debug)]
pub struct Circularized {
    pub extension: Extension,
    /// Square completions of the rows of `B`, in row order.
    pub row_completions: Vec<IntMatrix>,
    /// The stacked block matrix `B'`.
    pub stacked: IntMatrix,
}

/// Extends `{(I_k | B), 0, X}` with `gcd(B_i) = 1` for every row to a system
/// whose matrix `(I_{k'} | B')` is standard `n`-circular, `n = |G|`.
///
/// `B'` stacks, for each row `B_i`, the padding `(I; S_i; B̄_i; T_i; I)` of
/// a unimodular completion `B̄_i` of `B_i`, consecutive blocks sharing their
/// identity seams. The row of `B'` equal to `B_i` takes over unknown `i`;
/// the free unknowns keep their order at the end.
pub fn circularize(sys: &RestrictedSystem) -> Result<Circularized> {
    if !sys.matrix().has_identity_prefix() {
        return Err(Error::Precondition(
            "matrix must be of the form (I|B)".into(),
        ));
    }
    if !sys.is_homogeneous() {
        return Err(Error::Precondition("system must be homogeneous".into()));
    }
    let group = sys.group();
    let n = group.order();
    let (k, m) = (sys.k(), sys.m());
    let r = m - k;
    if r == 0 {
        return Err(Error::Precondition(
            "no free unknowns to circularize".into(),
        ));
    }
    let free: Vec<usize> = (k..m).collect();

    let block = r * (2 * r + 1);
    let stride = block - r;
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(k * stride + r);
    let mut row_completions = Vec::with_capacity(k);
    let mut anchors = Vec::with_capacity(k);
    for i in 0..k {
        let row = sys.matrix().select(&[i], &free);
        let g = row.entries().iter().fold(BigInt::zero(), |g, x| g.gcd(x));
        if !g.is_one() {
            return Err(Error::Precondition(format!(
                "row {} of B has gcd {g}, expected 1",
                i + 1
            )));
        }
        let completed = complete_to_square(&row)?;
        let padded = n_good_padding(&completed, n)?;
        let mut padded_rows = padded.to_rows();
        if i + 1 < k {
            padded_rows.truncate(stride);
        }
        anchors.push(rows.len() + r * r);
        rows.extend(padded_rows);
        row_completions.push(completed);
    }
    let stacked = IntMatrix::from_big_rows(rows)?;
    let k_new = stacked.rows();
    let matrix = IntMatrix::identity(k_new).augment(&stacked)?;
    if !is_circular(&matrix, n) {
        return Err(Error::Internal("stacked matrix is not n-circular".into()));
    }

    let mut restrictions = vec![group.full_set(); k_new + r];
    let mut couplings = Vec::with_capacity(m);
    let identity_on = |set: &ElementSet| -> CoordinateMap {
        set.iter().map(|g| (g.clone(), g.clone())).collect()
    };
    for (i, &row) in anchors.iter().enumerate() {
        debug_assert_eq!(stacked.row(row), sys.matrix().select(&[i], &free).row(0));
        restrictions[row] = sys.restrictions()[i].clone();
        couplings.push(Coupling {
            target: row,
            source: i,
            map: identity_on(&sys.restrictions()[i]),
        });
    }
    for t in 0..r {
        restrictions[k_new + t] = sys.restrictions()[k + t].clone();
        couplings.push(Coupling {
            target: k_new + t,
            source: k + t,
            map: identity_on(&sys.restrictions()[k + t]),
        });
    }
    let target = RestrictedSystem::new(
        group.clone(),
        matrix,
        vec![group.zero(); k_new],
        restrictions,
    )?;
    Ok(Circularized {
        extension: Extension::new(target, sys.clone(), couplings)?,
        row_completions,
        stacked,
    })
}

/// Every stage of a successful reduction.
#[derive(Clone, Debug)]
pub struct FullExtension {
    pub homogenization: Extension,
    pub witness: Option<Solution>,
    pub identity_form: IdentityForm,
    pub circularization: Circularized,
    /// Target of the last stage over the original system.
    pub composed: Extension,
    pub circular: CircularSystem,
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum PipelineOutcome {
    Circular(Box<FullExtension>),
    /// A coordinate fixed across all solutions, in source coordinates.
    Thin(ThinWitness),
    SolutionFree,
    /// `m − k ≤ 1`: handled directly by the removal module.
    SmallCodimension {
        homogenization: Extension,
    },
}

/// Runs homogenization, the identity-form extension and circularization, and
/// composes them into a single extension over the input system.
pub fn full_extension(sys: &RestrictedSystem, budget: Budget) -> Result<PipelineOutcome> {
    check_reducible(sys)?;
    let (homogenization, witness) = match homogenize(sys, budget)? {
        Homogenized::SolutionFree => return Ok(PipelineOutcome::SolutionFree),
        Homogenized::Equivalent { extension, witness } => (extension, witness),
    };
    if sys.m() - sys.k() <= 1 {
        return Ok(PipelineOutcome::SmallCodimension { homogenization });
    }
    let identity_form = match extend_to_identity_form(homogenization.target())? {
        IdentityFormOutcome::Thin(w) => {
            let group = sys.group();
            let shift = witness
                .as_ref()
                .map_or_else(|| group.zero(), |y| y[w.coordinate].clone());
            let value = w.value.map(|v| group.add(&v, &shift));
            return Ok(PipelineOutcome::Thin(ThinWitness {
                coordinate: w.coordinate,
                value,
            }));
        }
        IdentityFormOutcome::Extended(f) => *f,
    };
    let circularization = circularize(identity_form.extension.target())?;
    let composed = circularization
        .extension
        .then(&identity_form.extension)?
        .then(&homogenization)?;
    let circular = CircularSystem::new(
        circularization.extension.target().matrix().clone(),
        sys.group().order(),
    )?;
    Ok(PipelineOutcome::Circular(Box::new(FullExtension {
        homogenization,
        witness,
        identity_form,
        circularization,
        composed,
        circular,
    })))
}

// ---- reports ----

/// Shape and coordinate matching of one stage, indices one-based.
#[derive(Clone, Debug, Serialize)]
pub struct StageSummary {
    pub stage: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub matched: Vec<usize>,
    /// Pairs `[i, σ(i)]`.
    pub sigma: Vec<[usize; 2]>,
    pub solutions: usize,
    pub verification: ExtensionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<IntMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restrictions: Option<Vec<ElementSet>>,
}

impl StageSummary {
    fn new(stage: &'static str, ext: &Extension, budget: Budget, trace: bool) -> Result<Self> {
        let t = ext.target();
        let verification = verify_extension(ext, budget)?;
        Ok(Self {
            stage,
            rows: t.k(),
            cols: t.m(),
            matched: ext.matched().iter().map(|i| i + 1).collect(),
            sigma: ext
                .couplings()
                .iter()
                .map(|c| [c.target + 1, c.source + 1])
                .collect(),
            solutions: verification.target_solutions,
            verification,
            matrix: trace.then(|| t.matrix().clone()),
            restrictions: trace.then(|| t.restrictions().to_vec()),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThinSummary {
    /// One-based coordinate.
    pub coordinate: usize,
    pub value: Option<GroupElement>,
    pub vacuous: bool,
}

impl From<&ThinWitness> for ThinSummary {
    fn from(w: &ThinWitness) -> Self {
        Self {
            coordinate: w.coordinate + 1,
            value: w.value.clone(),
            vacuous: w.is_vacuous(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityTrace {
    pub completion: IntMatrix,
    #[serde(serialize_with = "ser_bigint")]
    pub determinant: BigInt,
    pub unscaled: IntMatrix,
    pub row_completions: Vec<IntMatrix>,
    pub stacked: IntMatrix,
    #[serde(rename = "C")]
    pub c: IntMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub outcome: &'static str,
    pub k: usize,
    pub m: usize,
    pub n: u64,
    #[serde(serialize_with = "ser_bigint")]
    pub dk: BigInt,
    pub source_solutions: usize,
    pub stages: Vec<StageSummary>,
    #[serde(serialize_with = "ser_bigints")]
    pub row_divisors: Vec<BigInt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub circular: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composed: Option<StageSummary>,
    /// All stage targets have as many solutions as the source.
    pub conservation: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thin: Option<ThinSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<IdentityTrace>,
}

impl PipelineReport {
    /// Verdict: every recorded extension verified, counts conserved and the
    /// final matrix circular (when reached).
    pub fn passed(&self) -> bool {
        self.conservation
            && self.stages.iter().all(|s| s.verification.holds())
            && self
                .composed
                .as_ref()
                .is_none_or(|s| s.verification.holds())
            && self.circular.unwrap_or(true)
    }
}

/// Verifies every stage of `outcome` exhaustively and summarises it.
pub fn pipeline_report(
    sys: &RestrictedSystem,
    outcome: &PipelineOutcome,
    budget: Budget,
    trace: bool,
) -> Result<PipelineReport> {
    let source_solutions = enumerate_solutions(sys, budget)?.len();
    let mut report = PipelineReport {
        outcome: "",
        k: sys.k(),
        m: sys.m(),
        n: sys.group().order(),
        dk: sys.top_divisor().abs(),
        source_solutions,
        stages: Vec::new(),
        row_divisors: Vec::new(),
        circular: None,
        composed: None,
        conservation: true,
        thin: None,
        trace: None,
    };
    match outcome {
        PipelineOutcome::SolutionFree => report.outcome = "solution-free",
        PipelineOutcome::Thin(w) => {
            report.outcome = "thin";
            report.thin = Some(w.into());
        }
        PipelineOutcome::SmallCodimension { homogenization } => {
            report.outcome = "small-codimension";
            report.stages.push(StageSummary::new(
                "homogenize",
                homogenization,
                budget,
                trace,
            )?);
        }
        PipelineOutcome::Circular(full) => {
            report.outcome = "circular";
            report.stages = vec![
                StageSummary::new("homogenize", &full.homogenization, budget, trace)?,
                StageSummary::new(
                    "identity-form",
                    &full.identity_form.extension,
                    budget,
                    trace,
                )?,
                StageSummary::new(
                    "circularize",
                    &full.circularization.extension,
                    budget,
                    trace,
                )?,
            ];
            report.row_divisors = full.identity_form.row_divisors.clone();
            report.circular = Some(is_circular(full.circular.matrix(), full.circular.modulus()));
            report.composed = Some(StageSummary::new(
                "composed",
                &full.composed,
                budget,
                trace,
            )?);
            if trace {
                report.trace = Some(IdentityTrace {
                    completion: full.identity_form.completion.clone(),
                    determinant: full.identity_form.determinant.clone(),
                    unscaled: full.identity_form.unscaled.clone(),
                    row_completions: full.circularization.row_completions.clone(),
                    stacked: full.circularization.stacked.clone(),
                    c: full.circular.c_matrix().clone(),
                });
            }
        }
    }
    report.conservation = report
        .stages
        .iter()
        .chain(report.composed.iter())
        .all(|s| s.solutions == source_solutions);
    Ok(report)
}

/// Unknowns of the final target that are not matched to the input system.
pub fn unmatched(ext: &Extension) -> BTreeSet<usize> {
    let matched: BTreeSet<usize> = ext.matched().into_iter().collect();
    (0..ext.target().m())
        .filter(|i| !matched.contains(i))
        .collect()
}
