use std::collections::BTreeSet;
use std::fmt;

use linrm::hypergraph::{enumerate_copies, verify_claim1, verify_claim2, HostHypergraph};
use linrm::intmat::{
    complete_to_square, determinantal_divisor, is_n_good, n_good_padding, smith_normal_form,
    top_divisor,
};
use linrm::pipeline::{
    build_c_matrix, full_extension, is_circular, pipeline_report, standardize, unmatched,
    window_determinants, PipelineOutcome, ThinSummary,
};
use linrm::removal::{greedy_removal, min_removal_exact, RemovalSolution};
use linrm::system::{count_solutions, enumerate_solutions, is_thin, pull_back_removal};
use linrm::{Budget, Error, IntMatrix, RestrictedSystem};
use num_bigint::BigInt;
use num_traits::Zero;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

pub enum CliError {
    Parse(String),
    Io(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                Error::Invalid(_) => 2,
                Error::Dimension(_)
                | Error::Index(_)
                | Error::RankDeficient(_)
                | Error::NotInvertible(_)
                | Error::Precondition(_)
                | Error::WrongRoute(_) => 3,
                Error::Budget { .. } => 4,
                Error::Infeasible(_) => 5,
                Error::Internal(_) => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(msg) => write!(f, "parse error: {msg}"),
            CliError::Io(msg) => write!(f, "cannot read input: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub struct Report {
    pub body: Value,
    pub exit_code: u8,
}

impl Report {
    fn ok(body: Value) -> Self {
        Self { body, exit_code: 0 }
    }

    /// Exit code 1 when a self-check failed; the report is still written.
    fn checked(body: Value, passed: bool) -> Self {
        Self {
            body,
            exit_code: if passed { 0 } else { 1 },
        }
    }
}

type Outcome = Result<Report, CliError>;

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

/// Integers beyond 2^53 − 1 in magnitude become strings, as in matrices.
fn int(x: &BigInt) -> Value {
    const SAFE: i64 = (1 << 53) - 1;
    match i64::try_from(x) {
        Ok(v) if (-SAFE..=SAFE).contains(&v) => json!(v),
        _ => json!(x.to_string()),
    }
}

fn ints(xs: &[BigInt]) -> Value {
    Value::Array(xs.iter().map(int).collect())
}

pub fn snf(a: &IntMatrix) -> Outcome {
    let r = smith_normal_form(a);
    let verified = r.u.mul(a)?.mul(&r.v)? == r.s;
    if !verified {
        return Err(Error::Internal("U·A·V differs from S".into()).into());
    }
    Ok(Report::ok(json!({
        "U": to_value(&r.u),
        "S": to_value(&r.s),
        "V": to_value(&r.v),
        "invariant_factors": ints(&r.invariant_factors()),
        "rank": r.rank(),
        "verified": verified,
    })))
}

pub fn dk(a: &IntMatrix, k: Option<usize>) -> Outcome {
    let ks: Vec<usize> = match k {
        Some(k) => vec![k],
        None => (1..=a.rows().min(a.cols())).collect(),
    };
    let divisors = ks
        .iter()
        .map(|&k| Ok(json!({ "k": k, "dk": int(&determinantal_divisor(a, k)?) })))
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(Report::ok(json!({ "divisors": divisors })))
}

pub fn complete(a: &IntMatrix) -> Outcome {
    let m = complete_to_square(a)?;
    Ok(Report::ok(json!({
        "M": to_value(&m),
        "det": int(&m.det()?),
        "dk": int(&top_divisor(a)),
    })))
}

pub fn ngood(m: &IntMatrix, n: u64) -> Outcome {
    let padded = n_good_padding(m, n)?;
    let good = is_n_good(&padded, n)?;
    Ok(Report::checked(
        json!({
            "n": n,
            "r": m.rows(),
            "rows": padded.rows(),
            "padded": to_value(&padded),
            "n_good": good,
        }),
        good,
    ))
}

pub fn circular(a: &IntMatrix, n: u64) -> Outcome {
    let is_circ = is_circular(a, n);
    let standardized = if is_circ {
        Some(to_value(&standardize(a, n)?))
    } else {
        None
    };
    Ok(Report::ok(json!({
        "n": n,
        "circular": is_circ,
        "standard": a.has_identity_prefix(),
        "window_determinants": ints(&window_determinants(a)?),
        "standardized": standardized,
    })))
}

pub fn cmatrix(a: &IntMatrix, n: u64) -> Outcome {
    let standard = standardize(a, n)?;
    let c = build_c_matrix(&standard, n)?;
    let kernel = standard.mul(&c)?.reduce_mod(n).is_zero();
    Ok(Report::checked(
        json!({
            "n": n,
            "standardized": !a.has_identity_prefix(),
            "A": to_value(&standard),
            "C": to_value(&c),
            "kernel": kernel,
        }),
        kernel,
    ))
}

pub fn solve(sys: &RestrictedSystem, budget: Budget) -> Outcome {
    let solutions = enumerate_solutions(sys, budget)?;
    let thin = is_thin(sys, budget)?.map(|w| ThinSummary::from(&w));
    Ok(Report::ok(json!({
        "count": solutions.len(),
        "solutions": solutions,
        "thin": thin,
    })))
}

pub fn pipeline(sys: &RestrictedSystem, budget: Budget, trace: bool) -> Outcome {
    let outcome = full_extension(sys, budget)?;
    let report = pipeline_report(sys, &outcome, budget, trace)?;
    let passed = report.passed();
    let mut body = to_value(&report);
    body["verdict"] = json!(if passed { "PASS" } else { "FAIL" });
    Ok(Report::checked(body, passed))
}

/// The host hypergraph for `sys`, or the reason there is none.
#[allow(clippy::large_enum_variant)]
enum Host {
    Built {
        route: &'static str,
        host: HostHypergraph,
        system: RestrictedSystem,
    },
    Thin(ThinSummary),
    SolutionFree,
}

/// Homogeneous systems whose matrix is already `n`-circular are encoded
/// directly (after standardization, which keeps the solution set); all others
/// go through the full reduction first.
fn host_for(sys: &RestrictedSystem, budget: Budget) -> Result<Host, CliError> {
    let n = sys.group().order();
    if sys.is_homogeneous() && sys.m() >= sys.k() + 2 && is_circular(sys.matrix(), n) {
        let matrix = standardize(sys.matrix(), n)?;
        let system = RestrictedSystem::new(
            sys.group().clone(),
            matrix,
            sys.rhs().to_vec(),
            sys.restrictions().to_vec(),
        )?;
        let host = HostHypergraph::from_system(&system)?;
        return Ok(Host::Built {
            route: "direct",
            host,
            system,
        });
    }
    match full_extension(sys, budget)? {
        PipelineOutcome::Circular(full) => {
            let system = full.composed.target().clone();
            let host = HostHypergraph::new(
                sys.group().clone(),
                &full.circular,
                system.restrictions().to_vec(),
            )?;
            Ok(Host::Built {
                route: "pipeline",
                host,
                system,
            })
        }
        PipelineOutcome::Thin(w) => Ok(Host::Thin(ThinSummary::from(&w))),
        PipelineOutcome::SolutionFree => Ok(Host::SolutionFree),
        PipelineOutcome::SmallCodimension { .. } => Err(Error::WrongRoute(format!(
            "m - k = {} leaves no circular template; use `remove` directly",
            sys.m() - sys.k()
        ))
        .into()),
    }
}

fn degenerate(host: &Host) -> Option<Value> {
    match host {
        Host::Thin(w) => Some(json!({ "route": "thin", "thin": w })),
        Host::SolutionFree => Some(json!({ "route": "solution-free", "copies": 0, "classes": 0 })),
        Host::Built { .. } => None,
    }
}

pub fn copies(sys: &RestrictedSystem, budget: Budget, full: bool) -> Outcome {
    let resolved = host_for(sys, budget)?;
    if let Some(body) = degenerate(&resolved) {
        return Ok(Report::ok(body));
    }
    let Host::Built { route, host, .. } = resolved else {
        unreachable!()
    };
    let copies = enumerate_copies(&host, budget)?;
    let classes: BTreeSet<_> = copies.iter().map(|c| &c.labels).collect();
    let n = host.group().order();
    let mut body = json!({
        "route": route,
        "n": n,
        "k": host.k(),
        "m": host.m(),
        "copies": copies.len(),
        "classes": classes.len(),
        "class_size": n.checked_pow(host.k() as u32),
    });
    if full {
        body["list"] = to_value(&copies);
    }
    Ok(Report::ok(body))
}

pub fn verify(sys: &RestrictedSystem, budget: Budget) -> Outcome {
    let resolved = host_for(sys, budget)?;
    if let Some(body) = degenerate(&resolved) {
        return Ok(Report::ok(body));
    }
    let Host::Built {
        route,
        host,
        system,
    } = resolved
    else {
        unreachable!()
    };
    let copies = enumerate_copies(&host, budget)?;
    let solutions = enumerate_solutions(&system, budget)?;
    let claim1 = verify_claim1(&host, &copies, &solutions);
    let claim2 = verify_claim2(&host, &copies);
    let passed = claim1.holds() && claim2.holds();
    Ok(Report::checked(
        json!({
            "route": route,
            "n": host.group().order(),
            "k": host.k(),
            "m": host.m(),
            "solutions": solutions.len(),
            "copies": copies.len(),
            "classes": claim1.classes,
            "claim1": claim1,
            "claim2": claim2,
            "verdict": if passed { "PASS" } else { "FAIL" },
        }),
        passed,
    ))
}

fn run_solver(
    sys: &RestrictedSystem,
    protected: &[usize],
    budget: Budget,
    exact: bool,
) -> Result<RemovalSolution, Error> {
    if exact {
        min_removal_exact(sys, protected, budget)
    } else {
        greedy_removal(sys, protected, budget)
    }
}

/// Solves on the reduced circular system when there is one and carries the
/// answer back; otherwise solves on the input system directly.
pub fn remove(sys: &RestrictedSystem, budget: Budget, exact: bool, protect: &[usize]) -> Outcome {
    let m = sys.m();
    if let Some(&bad) = protect.iter().find(|&&i| i == 0 || i > m) {
        return Err(
            Error::Index(format!("protected coordinate {bad} out of range 1..={m}")).into(),
        );
    }
    let protected: Vec<usize> = protect
        .iter()
        .map(|i| i - 1)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    // with every coordinate protected only the source can name the culprit
    let reducible = sys.is_coprime() && !sys.top_divisor().is_zero() && protected.len() < m;
    let outcome = if reducible {
        Some(full_extension(sys, budget)?)
    } else {
        None
    };

    let (route, removed, certificate) = match outcome {
        Some(PipelineOutcome::Circular(full)) => {
            let ext = &full.composed;
            let mut target_protected: Vec<usize> = unmatched(ext).into_iter().collect();
            for &i in &protected {
                target_protected.push(ext.sigma_inverse(i).ok_or_else(|| {
                    Error::Internal(format!(
                        "coordinate {} is not matched by the reduction",
                        i + 1
                    ))
                })?);
            }
            let on_target = run_solver(ext.target(), &target_protected, budget, exact)?;
            let removed = pull_back_removal(ext, &on_target.removed)?;
            let mut certificate = on_target.certificate;
            // target and source instances coincide only when every map is injective
            certificate.optimal &= ext.maps_injective();
            ("pipeline", removed, certificate)
        }
        other => {
            let route = match other {
                None => "direct",
                Some(PipelineOutcome::Thin(_)) => "thin",
                Some(PipelineOutcome::SolutionFree) => "solution-free",
                Some(PipelineOutcome::SmallCodimension { .. }) => "small-codimension",
                Some(PipelineOutcome::Circular(_)) => unreachable!(),
            };
            let direct = run_solver(sys, &protected, budget, exact)?;
            (route, direct.removed, direct.certificate)
        }
    };

    let post_count = count_solutions(&sys.without(&removed)?, budget)?;
    if post_count != 0 {
        return Err(Error::Internal(format!("{post_count} solutions survive the removal")).into());
    }
    let solutions = count_solutions(sys, budget)?;
    let n = sys.group().order();
    let total_size: usize = removed.iter().map(|s| s.len()).sum();
    Ok(Report::ok(json!({
        "route": route,
        "removed": removed,
        "total_size": total_size,
        "certificate": certificate,
        "post_count": post_count,
        "summary": {
            "solutions": solutions,
            "n": n,
            "n_pow_m_minus_k": n.checked_pow(m.saturating_sub(sys.k()) as u32),
            "largest_removed_set": removed.iter().map(|s| s.len()).max().unwrap_or(0),
        },
    })))
}
