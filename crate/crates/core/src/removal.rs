//! Minimum removal sets: the smallest `X'_i ⊆ X_i` such that
//! `{A, b, X \ X'}` has no solution.
//!
//! Each solution is destroyed by removing any one of its coordinate values,
//! so the problem is a hitting set over `(coordinate, element)` pairs. The
//! exact solver is a branch-and-bound seeded with the greedy value.

use serde::Serialize;

use crate::abelian::{ElementSet, GroupElement};
use crate::error::{Error, Result};
use crate::system::{enumerate_solutions, Budget, RestrictedSystem, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Greedy,
    SmallCodimension,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub optimal: bool,
    /// Size of a family of pairwise disjoint solutions; no removal is smaller.
    pub lower_bound: usize,
    pub method: Method,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RemovalSolution {
    pub removed: Vec<ElementSet>,
    pub total_size: usize,
    pub certificate: Certificate,
}

impl RemovalSolution {
    fn from_pairs(m: usize, pairs: &[(usize, GroupElement)], certificate: Certificate) -> Self {
        let mut removed = vec![ElementSet::new(); m];
        for (i, x) in pairs {
            removed[*i].insert(x.clone());
        }
        let total_size = removed.iter().map(ElementSet::len).sum();
        Self {
            removed,
            total_size,
            certificate,
        }
    }
}

/// Solutions as sets of candidate indices; candidates are the unprotected
/// `(coordinate, element)` pairs occurring in some solution, in canonical order.
struct HittingSet {
    candidates: Vec<(usize, GroupElement)>,
    sets: Vec<Vec<usize>>,
}

impl HittingSet {
    fn new(sys: &RestrictedSystem, solutions: &[Solution], protected: &[usize]) -> Result<Self> {
        let m = sys.m();
        if let Some(&j) = protected.iter().find(|&&j| j >= m) {
            return Err(Error::Index(format!(
                "protected coordinate {} out of range 1..={m}",
                j + 1
            )));
        }
        let free: Vec<usize> = (0..m).filter(|i| !protected.contains(i)).collect();
        let mut candidates: Vec<(usize, GroupElement)> = solutions
            .iter()
            .flat_map(|x| free.iter().map(move |&i| (i, x[i].clone())))
            .collect();
        candidates.sort();
        candidates.dedup();
        let mut sets = Vec::with_capacity(solutions.len());
        for x in solutions {
            if free.is_empty() {
                return Err(Error::Infeasible(format!(
                    "solution ({}) has every coordinate protected",
                    x.iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
            let mut set: Vec<usize> = free
                .iter()
                .map(|&i| {
                    candidates
                        .binary_search(&(i, x[i].clone()))
                        .expect("pair was collected")
                })
                .collect();
            set.sort_unstable();
            sets.push(set);
        }
        Ok(Self { candidates, sets })
    }

    /// Greedy pass over the uncovered sets, with a disjoint-set lower bound.
    fn packing_bound(&self, uncovered: &[usize], chosen: &[bool]) -> usize {
        let mut used = vec![false; self.candidates.len()];
        let mut bound = 0;
        let mut order: Vec<usize> = uncovered.to_vec();
        order.sort_by_key(|&s| (self.sets[s].iter().filter(|&&c| !chosen[c]).count(), s));
        for s in order {
            if self.sets[s].iter().all(|&c| !used[c]) {
                bound += 1;
                for &c in &self.sets[s] {
                    used[c] = true;
                }
            }
        }
        bound
    }

    fn greedy(&self) -> Vec<usize> {
        let mut covered = vec![false; self.sets.len()];
        let mut picks = Vec::new();
        loop {
            let mut counts = vec![0usize; self.candidates.len()];
            for (s, set) in self.sets.iter().enumerate() {
                if !covered[s] {
                    for &c in set {
                        counts[c] += 1;
                    }
                }
            }
            // max count, ties to the smallest candidate index
            let Some((best, &count)) = counts
                .iter()
                .enumerate()
                .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))
            else {
                break;
            };
            if count == 0 {
                break;
            }
            picks.push(best);
            for (s, set) in self.sets.iter().enumerate() {
                if set.contains(&best) {
                    covered[s] = true;
                }
            }
        }
        picks.sort_unstable();
        picks
    }

    fn exact(&self, budget: Budget) -> Result<Vec<usize>> {
        let all: Vec<usize> = (0..self.sets.len()).collect();
        let root_bound = self.packing_bound(&all, &vec![false; self.candidates.len()]);
        let mut search = Search {
            inst: self,
            best: self.greedy(),
            chosen: vec![false; self.candidates.len()],
            path: Vec::new(),
            nodes: 0,
            budget,
        };
        if search.best.len() > root_bound {
            search.branch(all)?;
        }
        let mut best = search.best;
        best.sort_unstable();
        Ok(best)
    }
}

struct Search<'a> {
    inst: &'a HittingSet,
    best: Vec<usize>,
    chosen: Vec<bool>,
    path: Vec<usize>,
    nodes: u64,
    budget: Budget,
}

impl Search<'_> {
    fn branch(&mut self, uncovered: Vec<usize>) -> Result<()> {
        self.nodes += 1;
        self.budget.check(self.nodes as u128)?;
        if uncovered.is_empty() {
            if self.path.len() < self.best.len() {
                self.best = self.path.clone();
            }
            return Ok(());
        }
        if self.path.len() + self.inst.packing_bound(&uncovered, &self.chosen) >= self.best.len() {
            return Ok(());
        }
        // branch on the uncovered solution with the fewest candidates
        let pivot = *uncovered
            .iter()
            .min_by_key(|&&s| (self.inst.sets[s].len(), s))
            .expect("nonempty");
        for &c in &self.inst.sets[pivot] {
            self.chosen[c] = true;
            self.path.push(c);
            let rest: Vec<usize> = uncovered
                .iter()
                .copied()
                .filter(|&s| !self.inst.sets[s].contains(&c))
                .collect();
            self.branch(rest)?;
            self.path.pop();
            self.chosen[c] = false;
            if self.path.len() + 1 >= self.best.len() {
                break;
            }
        }
        Ok(())
    }
}

fn solve(
    sys: &RestrictedSystem,
    protected: &[usize],
    budget: Budget,
    exact: bool,
) -> Result<RemovalSolution> {
    let solutions = enumerate_solutions(sys, budget)?;
    let inst = HittingSet::new(sys, &solutions, protected)?;
    let (picks, certificate) = if exact {
        // a completed search proves the incumbent optimal
        let picks = inst.exact(budget)?;
        let certificate = Certificate {
            optimal: true,
            lower_bound: picks.len(),
            method: Method::Exact,
        };
        (picks, certificate)
    } else {
        let picks = inst.greedy();
        let all: Vec<usize> = (0..inst.sets.len()).collect();
        let lower_bound = inst.packing_bound(&all, &vec![false; inst.candidates.len()]);
        let certificate = Certificate {
            optimal: picks.len() == lower_bound,
            lower_bound,
            method: Method::Greedy,
        };
        (picks, certificate)
    };
    let pairs: Vec<(usize, GroupElement)> =
        picks.iter().map(|&c| inst.candidates[c].clone()).collect();
    Ok(RemovalSolution::from_pairs(sys.m(), &pairs, certificate))
}

/// Minimum removal leaving the coordinates in `protected` (zero-based)
/// untouched.
pub fn min_removal_exact(
    sys: &RestrictedSystem,
    protected: &[usize],
    budget: Budget,
) -> Result<RemovalSolution> {
    solve(sys, protected, budget, true)
}

/// Greedy removal: repeatedly take the pair hitting the most remaining
/// solutions, ties to the lowest coordinate and then the smallest element.
pub fn greedy_removal(
    sys: &RestrictedSystem,
    protected: &[usize],
    budget: Budget,
) -> Result<RemovalSolution> {
    solve(sys, protected, budget, false)
}

/// Direct removal for `m − k ≤ 1`. With `m = k` the first coordinate of every
/// solution is removed, with `m = k + 1` the last one.
pub fn small_m_removal(sys: &RestrictedSystem, budget: Budget) -> Result<RemovalSolution> {
    let (k, m) = (sys.k(), sys.m());
    let coordinate = match m.checked_sub(k) {
        Some(0) => 0,
        Some(1) => m - 1,
        _ => {
            return Err(Error::WrongRoute(format!(
                "m - k = {} is not at most 1; use the exact or greedy solver",
                m as i64 - k as i64
            )))
        }
    };
    let solutions = enumerate_solutions(sys, budget)?;
    let inst = HittingSet::new(sys, &solutions, &[])?;
    let all: Vec<usize> = (0..inst.sets.len()).collect();
    let lower_bound = inst.packing_bound(&all, &vec![false; inst.candidates.len()]);
    let pairs: Vec<(usize, GroupElement)> = solutions
        .iter()
        .map(|x| (coordinate, x[coordinate].clone()))
        .collect();
    let mut out = RemovalSolution::from_pairs(
        m,
        &pairs,
        Certificate {
            optimal: false,
            lower_bound,
            method: Method::SmallCodimension,
        },
    );
    out.certificate.optimal = out.total_size == lower_bound;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::AbelianGroup;
    use crate::intmat::IntMatrix;
    use crate::system::count_solutions;

    fn z(n: u64) -> AbelianGroup {
        AbelianGroup::cyclic(n).unwrap()
    }

    fn singleton(g: &AbelianGroup, v: i64) -> ElementSet {
        [g.element(&[v]).unwrap()].into_iter().collect()
    }

    fn single_solution() -> RestrictedSystem {
        let g = z(5);
        let a = IntMatrix::from_rows(&[vec![1, 1, 1]]).unwrap();
        RestrictedSystem::new(
            g.clone(),
            a,
            vec![g.element(&[4]).unwrap()],
            vec![singleton(&g, 0), singleton(&g, 1), singleton(&g, 3)],
        )
        .unwrap()
    }

    fn triangle(n: u64) -> RestrictedSystem {
        RestrictedSystem::unrestricted(z(n), IntMatrix::from_rows(&[vec![1, 1, 1]]).unwrap())
            .unwrap()
    }

    #[test]
    fn single_solution_examples() {
        let sys = single_solution();
        let r = min_removal_exact(&sys, &[], Budget::DEFAULT).unwrap();
        assert_eq!(r.total_size, 1);
        assert_eq!(r.removed[0], singleton(sys.group(), 0));
        assert!(r.certificate.optimal);
        assert_eq!(
            greedy_removal(&sys, &[], Budget::DEFAULT)
                .unwrap()
                .total_size,
            1
        );
        assert!(matches!(
            min_removal_exact(&sys, &[0, 1, 2], Budget::DEFAULT),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn triangle_needs_a_whole_coordinate() {
        let sys = triangle(5);
        let exact = min_removal_exact(&sys, &[], Budget::DEFAULT).unwrap();
        assert_eq!(exact.total_size, 5);
        assert_eq!(exact.certificate.lower_bound, 5);
        let greedy = greedy_removal(&sys, &[], Budget::DEFAULT).unwrap();
        assert_eq!(greedy.total_size, 5);
        for r in [exact, greedy] {
            let after = sys.without(&r.removed).unwrap();
            assert_eq!(count_solutions(&after, Budget::DEFAULT).unwrap(), 0);
        }
    }

    #[test]
    fn protection_is_respected() {
        let sys = triangle(5);
        let r = min_removal_exact(&sys, &[0, 2], Budget::DEFAULT).unwrap();
        assert!(r.removed[0].is_empty() && r.removed[2].is_empty());
        assert_eq!(r.total_size, 5);
    }

    #[test]
    fn small_codimension() {
        let g = z(5);
        let square = RestrictedSystem::new(
            g.clone(),
            IntMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap(),
            vec![g.element(&[1]).unwrap(), g.zero()],
            vec![singleton(&g, 0), g.full_set()],
        )
        .unwrap();
        assert_eq!(
            small_m_removal(&square, Budget::DEFAULT)
                .unwrap()
                .total_size,
            0
        );

        let x: ElementSet = [0, 1, 2]
            .iter()
            .map(|&v| g.element(&[v]).unwrap())
            .collect();
        let line = RestrictedSystem::new(
            g.clone(),
            IntMatrix::from_rows(&[vec![1, 1]]).unwrap(),
            vec![g.zero()],
            vec![x, g.full_set()],
        )
        .unwrap();
        let r = small_m_removal(&line, Budget::DEFAULT).unwrap();
        assert_eq!(r.total_size, 3);
        assert!(r.removed[0].is_empty());
        assert_eq!(r.removed[1].len(), 3);

        let empty = line
            .with_restrictions(vec![g.full_set(), ElementSet::new()])
            .unwrap();
        assert_eq!(
            small_m_removal(&empty, Budget::DEFAULT).unwrap().total_size,
            0
        );

        assert!(matches!(
            small_m_removal(&triangle(5), Budget::DEFAULT),
            Err(Error::WrongRoute(_))
        ));
    }
}
