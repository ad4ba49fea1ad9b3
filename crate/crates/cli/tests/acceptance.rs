//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. All randomness is seeded.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use linrm::hypergraph::{enumerate_copies, verify_claim1, verify_claim2, HostHypergraph};
use linrm::intmat::{
    complete_to_square, det_is_unit_mod, determinantal_divisor, is_n_good, n_good_padding,
    smith_normal_form,
};
use linrm::pipeline::{full_extension, is_circular, PipelineOutcome};
use linrm::removal::{greedy_removal, min_removal_exact};
use linrm::system::{count_solutions, enumerate_solutions, verify_extension};
use linrm::{AbelianGroup, Budget, ElementSet, IntMatrix, RestrictedSystem, Solution};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    failures: Vec<String>,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            detail: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn deadline(&mut self, start: Instant, limit: Duration) {
        let took = start.elapsed();
        self.check(took < limit, || format!("took {took:.2?}, limit {limit:?}"));
        self.detail = format!("{}; {took:.2?}", self.detail);
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64) -> IntMatrix {
    let data: Vec<Vec<i64>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-bound..=bound)).collect())
        .collect();
    IntMatrix::from_rows(&data).unwrap()
}

fn random_subset(rng: &mut ChaCha8Rng, g: &AbelianGroup, p: f64) -> ElementSet {
    g.elements().filter(|_| rng.gen_bool(p)).collect()
}

fn criterion_1() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    for case in 0..500 {
        let (rows, cols) = (rng.gen_range(1..=6), rng.gen_range(1..=8));
        let a = random_matrix(&mut rng, rows, cols, 30);
        let snf = smith_normal_form(&a);
        out.check(snf.u.mul(&a).unwrap().mul(&snf.v).unwrap() == snf.s, || {
            format!("case {case}: U A V != S")
        });
        out.check(
            snf.u.det().unwrap().abs().is_one() && snf.v.det().unwrap().abs().is_one(),
            || format!("case {case}: U or V not unimodular"),
        );
        let d = snf.invariant_factors();
        let diagonal = (0..rows).all(|i| (0..cols).all(|j| i == j || snf.s.get(i, j).is_zero()));
        let chain = d.windows(2).all(|w| {
            if w[0].is_zero() {
                w[1].is_zero()
            } else {
                (&w[1] % &w[0]).is_zero()
            }
        });
        out.check(
            diagonal && chain && d.iter().all(|x| !x.is_negative()),
            || format!("case {case}: S is not a Smith form"),
        );
        let mut product = BigInt::one();
        for k in 1..=snf.rank() {
            product *= &d[k - 1];
            out.check(
                determinantal_divisor(&a, k).unwrap() == product.abs(),
                || format!("case {case}: d_{k} disagrees with the invariant factors"),
            );
        }
    }
    out.detail = "500 matrices".into();
    out.deadline(start, Duration::from_secs(10));
    out
}

fn criterion_2() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut done, mut square_negative) = (0, 0);
    while done < 200 {
        let m = rng.gen_range(1..=6);
        let k = rng.gen_range(1..=m);
        let a = random_matrix(&mut rng, k, m, 20);
        let dk = determinantal_divisor(&a, k).unwrap();
        if dk.is_zero() {
            continue;
        }
        done += 1;
        let c = complete_to_square(&a).unwrap();
        out.check((0..k).all(|i| c.row(i) == a.row(i)), || {
            format!("{a}: first rows differ")
        });
        let det = c.det().unwrap();
        if k == m && det.is_negative() {
            // M = A is forced, so det(M) = -d_k is the only possible value
            square_negative += 1;
            out.check(det.abs() == dk, || format!("{a}: |det| != d_k"));
        } else {
            out.check(det == dk, || format!("{a}: det {det} != d_k {dk}"));
        }
    }
    out.detail = format!("200 matrices, {square_negative} square with det(A) < 0 checked on |det|");
    out
}

fn criterion_3() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let mut total = 0;
    for r in 1..=3usize {
        for n in 2..=12u64 {
            let mut done = 0;
            while done < 20 {
                let m = random_matrix(&mut rng, r, r, 9);
                if !det_is_unit_mod(&m, n).unwrap() {
                    continue;
                }
                done += 1;
                total += 1;
                let p = n_good_padding(&m, n).unwrap();
                let cols: Vec<usize> = (0..r).collect();
                let rows = |range: std::ops::Range<usize>| -> Vec<usize> { range.collect() };
                out.check(p.rows() == r * (2 * r + 1), || {
                    format!("r = {r}, n = {n}: {} rows", p.rows())
                });
                out.check(is_n_good(&p, n).unwrap(), || {
                    format!("r = {r}, n = {n}: not n-good")
                });
                out.check(
                    p.select(&rows(0..r), &cols).is_identity()
                        && p.select(&rows(p.rows() - r..p.rows()), &cols).is_identity(),
                    || format!("r = {r}, n = {n}: identity caps missing"),
                );
                out.check(p.select(&rows(r * r..r * r + r), &cols) == m, || {
                    format!("r = {r}, n = {n}: M not in the middle block")
                });
            }
        }
    }
    out.detail = format!("{total} paddings");
    out.deadline(start, Duration::from_secs(30));
    out
}

fn system(
    g: &AbelianGroup,
    a: &[Vec<i64>],
    b: &[Vec<i64>],
    x: Vec<ElementSet>,
) -> RestrictedSystem {
    let rhs = b.iter().map(|v| g.element(v).unwrap()).collect();
    RestrictedSystem::new(g.clone(), IntMatrix::from_rows(a).unwrap(), rhs, x).unwrap()
}

fn criterion_4() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let budget = Budget::DEFAULT;
    let mut suite = Vec::new();
    for moduli in [vec![5], vec![7], vec![3, 5]] {
        let g = AbelianGroup::new(moduli.clone()).unwrap();
        let full = vec![g.full_set(); 3];
        suite.push(system(&g, &[vec![1, 1, 1]], &[vec![0; moduli.len()]], full));
        let mut found = 0;
        while found < 4 {
            let k = rng.gen_range(1..=2);
            let m = rng.gen_range(k + 2..=4);
            if (g.order() as u128).pow(m as u32) > 1_000_000 {
                continue;
            }
            let a: Vec<Vec<i64>> = (0..k)
                .map(|_| (0..m).map(|_| rng.gen_range(-5..=5)).collect())
                .collect();
            let b: Vec<Vec<i64>> = (0..k)
                .map(|_| moduli.iter().map(|&q| rng.gen_range(0..q as i64)).collect())
                .collect();
            let x = (0..m).map(|_| random_subset(&mut rng, &g, 0.8)).collect();
            let sys = system(&g, &a, &b, x);
            if !sys.is_coprime() || count_solutions(&sys, budget).unwrap() == 0 {
                continue;
            }
            if let Ok(PipelineOutcome::Circular(_)) = full_extension(&sys, budget) {
                found += 1;
                suite.push(sys);
            }
        }
    }
    for sys in &suite {
        let name = format!("{}x{} over {:?}", sys.k(), sys.m(), sys.group().moduli());
        let Ok(PipelineOutcome::Circular(full)) = full_extension(sys, budget) else {
            out.failures.push(format!("{name}: no circular outcome"));
            continue;
        };
        let expected = count_solutions(sys, budget).unwrap();
        for (stage, ext) in [
            ("homogenize", &full.homogenization),
            ("identity form", &full.identity_form.extension),
            ("circularize", &full.circularization.extension),
            ("composed", &full.composed),
        ] {
            let report = verify_extension(ext, budget).unwrap();
            out.check(report.holds(), || {
                format!("{name}: {stage} fails E1-E3: {:?}", report.issues)
            });
            out.check(report.target_solutions == expected, || {
                format!(
                    "{name}: {stage} has {} solutions, source {expected}",
                    report.target_solutions
                )
            });
        }
        out.check(
            is_circular(full.composed.target().matrix(), sys.group().order()),
            || format!("{name}: target not circular"),
        );
    }
    out.detail = format!("{} systems", suite.len());
    out.check(suite.len() >= 10, || "fewer than 10 systems".into());
    out
}

fn claims(
    sys: &RestrictedSystem,
    copies_expected: usize,
    classes_expected: usize,
    out: &mut Outcome,
) {
    let name = format!("Z_{} with {copies_expected} copies", sys.group().order());
    let host = HostHypergraph::from_system(sys).unwrap();
    let copies = enumerate_copies(&host, Budget::DEFAULT).unwrap();
    let solutions: Vec<Solution> = enumerate_solutions(sys, Budget::DEFAULT).unwrap();
    let c1 = verify_claim1(&host, &copies, &solutions);
    let c2 = verify_claim2(&host, &copies);
    out.check(copies.len() == copies_expected, || {
        format!("{name}: got {} copies", copies.len())
    });
    out.check(c1.classes == classes_expected, || {
        format!("{name}: got {} classes", c1.classes)
    });
    out.check(c1.holds(), || format!("{name}: {:?}", c1.violations));
    out.check(c2.holds(), || format!("{name}: {:?}", c2.violations));
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let z5 = AbelianGroup::cyclic(5).unwrap();
    let z7 = AbelianGroup::cyclic(7).unwrap();
    let a = [vec![1, 1, 1]];
    claims(
        &system(&z5, &a, &[vec![0]], vec![z5.full_set(); 3]),
        125,
        25,
        &mut out,
    );
    let x1: ElementSet = [0, 1].iter().map(|&v| z5.element(&[v]).unwrap()).collect();
    claims(
        &system(&z5, &a, &[vec![0]], vec![x1, z5.full_set(), z5.full_set()]),
        50,
        10,
        &mut out,
    );
    claims(
        &system(&z7, &a, &[vec![0]], vec![z7.full_set(); 3]),
        343,
        49,
        &mut out,
    );
    out.detail = "125/25, 50/10, 343/49".into();
    out.deadline(start, Duration::from_secs(5));
    out
}

/// Smallest number of (coordinate, value) removals hitting every solution,
/// trying subsets of candidates in nondecreasing size.
fn brute_force(solutions: &[Solution], protected: &[usize]) -> Option<usize> {
    let m = solutions.first().map_or(0, Vec::len);
    let pairs: Vec<_> = solutions
        .iter()
        .flat_map(|x| {
            (0..m)
                .filter(|i| !protected.contains(i))
                .map(move |i| (i, x[i].clone()))
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    fn search(
        pairs: &[(usize, linrm::GroupElement)],
        sols: &[Solution],
        size: usize,
        from: usize,
        chosen: &mut Vec<usize>,
    ) -> bool {
        if chosen.len() == size {
            return sols
                .iter()
                .all(|x| chosen.iter().any(|&c| x[pairs[c].0] == pairs[c].1));
        }
        (from..pairs.len()).any(|c| {
            chosen.push(c);
            let hit = search(pairs, sols, size, c + 1, chosen);
            chosen.pop();
            hit
        })
    }
    (0..=pairs.len()).find(|&size| search(&pairs, solutions, size, 0, &mut Vec::new()))
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let budget = Budget::DEFAULT;
    let mut instances = 0;
    while instances < 100 {
        let moduli = [vec![3], vec![5], vec![2, 2], vec![7]][rng.gen_range(0..4)].clone();
        let g = AbelianGroup::new(moduli.clone()).unwrap();
        let k = rng.gen_range(1..=2);
        let m = rng.gen_range(k + 1..=4);
        let a: Vec<Vec<i64>> = (0..k)
            .map(|_| (0..m).map(|_| rng.gen_range(-4..=4)).collect())
            .collect();
        let b: Vec<Vec<i64>> = (0..k)
            .map(|_| moduli.iter().map(|&q| rng.gen_range(0..q as i64)).collect())
            .collect();
        let x = (0..m).map(|_| random_subset(&mut rng, &g, 0.5)).collect();
        let sys = system(&g, &a, &b, x);
        let solutions = enumerate_solutions(&sys, budget).unwrap();
        if solutions.is_empty() || solutions.len() > 20 {
            continue;
        }
        instances += 1;
        let protected: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.2)).collect();
        let Some(best) = brute_force(&solutions, &protected) else {
            out.check(min_removal_exact(&sys, &protected, budget).is_err(), || {
                "infeasible case accepted".into()
            });
            continue;
        };
        let exact = min_removal_exact(&sys, &protected, budget).unwrap();
        let greedy = greedy_removal(&sys, &protected, budget).unwrap();
        out.check(exact.total_size == best, || {
            format!("exact {} vs brute force {best}", exact.total_size)
        });
        out.check(greedy.total_size >= exact.total_size, || {
            "greedy beat exact".into()
        });
        for r in [&exact, &greedy] {
            let after = count_solutions(&sys.without(&r.removed).unwrap(), budget).unwrap();
            out.check(after == 0, || format!("{after} solutions survive"));
            out.check(protected.iter().all(|&j| r.removed[j].is_empty()), || {
                "protected coordinate touched".into()
            });
        }
    }
    out.detail = format!("{instances} instances");
    out
}

fn fixtures() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
}

fn run(args: &[&str]) -> (Option<i32>, Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_linrm"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code(), out.stdout, out.stderr)
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    let mut runs = 0;
    for file in fixtures() {
        let path = file.to_str().unwrap();
        let text = std::fs::read_to_string(&file).unwrap();
        let commands: Vec<Vec<&str>> = if text.contains("\"group\"") {
            vec![
                vec!["solve"],
                vec!["pipeline", "--trace"],
                vec!["copies", "--full"],
                vec!["verify"],
                vec!["remove", "--exact"],
                vec!["remove", "--greedy"],
                vec!["remove", "--protect", "1"],
            ]
        } else {
            vec![
                vec!["snf"],
                vec!["dk"],
                vec!["complete"],
                vec!["ngood", "-n", "5"],
                vec!["circular", "-n", "5"],
                vec!["cmatrix", "-n", "5"],
            ]
        };
        for mut args in commands {
            args.push(path);
            let first = run(&args);
            let second = run(&args);
            runs += 2;
            out.check(first == second, || format!("{args:?} differs between runs"));
        }
    }
    out.detail = format!("{runs} runs over {} fixtures", fixtures().len());
    out
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 SNF suite", criterion_1),
        ("2 square completion", criterion_2),
        ("3 n-good padding", criterion_3),
        ("4 pipeline conservation", criterion_4),
        ("5 copy counts", criterion_5),
        ("6 removal exactness", criterion_6),
        ("7 CLI determinism", criterion_7),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = check();
        let verdict = if outcome.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!("criterion {name}: {verdict} ({})", outcome.detail);
        for f in outcome.failures.iter().take(5) {
            println!("    {f}");
        }
        if !outcome.failures.is_empty() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
