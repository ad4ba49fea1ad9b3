//! Independent oracles and generators shared by the integration tests.
//! Nothing here calls into the library's enumeration or solver code.
#![allow(dead_code)]

use itertools::Itertools;
use linrm::{AbelianGroup, ElementSet, IntMatrix, RestrictedSystem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Vector = Vec<Vec<u64>>;

/// Plain description of a system over `Z_{q_1} × … × Z_{q_t}`.
#[derive(Clone, Debug)]
pub struct Plain {
    pub moduli: Vec<u64>,
    pub a: Vec<Vec<i64>>,
    pub b: Vec<Vec<u64>>,
    pub x: Vec<Vec<Vec<u64>>>,
}

impl Plain {
    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.a[0].len()
    }

    pub fn group_elements(&self) -> Vec<Vec<u64>> {
        self.moduli
            .iter()
            .map(|&q| 0..q)
            .multi_cartesian_product()
            .collect()
    }

    pub fn to_system(&self) -> RestrictedSystem {
        let g = AbelianGroup::new(self.moduli.clone()).unwrap();
        let elem = |v: &[u64]| {
            g.element(&v.iter().map(|&x| x as i64).collect::<Vec<_>>())
                .unwrap()
        };
        let restrictions: Vec<ElementSet> = self
            .x
            .iter()
            .map(|set| set.iter().map(|v| elem(v)).collect())
            .collect();
        RestrictedSystem::new(
            g.clone(),
            IntMatrix::from_rows(&self.a).unwrap(),
            self.b.iter().map(|v| elem(v)).collect(),
            restrictions,
        )
        .unwrap()
    }

    /// All solutions, by trying every vector of `∏ X_i`.
    pub fn solutions(&self) -> Vec<Vector> {
        let mut out: Vec<Vector> = self
            .x
            .iter()
            .map(|set| set.iter().cloned())
            .multi_cartesian_product()
            .filter(|x| self.solves(x))
            .collect();
        if self.m() == 0 {
            out.clear();
        }
        out.sort();
        out
    }

    pub fn solves(&self, x: &[Vec<u64>]) -> bool {
        self.a.iter().zip(&self.b).all(|(row, rhs)| {
            self.moduli.iter().enumerate().all(|(c, &q)| {
                let q = q as i128;
                let s: i128 = row
                    .iter()
                    .zip(x)
                    .map(|(&a, v)| a as i128 * v[c] as i128)
                    .sum();
                s.rem_euclid(q) == rhs[c] as i128
            })
        })
    }
}

pub fn residues(x: &[linrm::GroupElement]) -> Vector {
    x.iter().map(|g| g.residues().to_vec()).collect()
}

/// Minimum number of `(coordinate, value)` removals hitting every solution,
/// found by trying all subsets of candidate pairs in nondecreasing size.
pub fn brute_force_removal(solutions: &[Vector], protected: &[usize]) -> Option<usize> {
    let m = solutions.first().map_or(0, Vec::len);
    let pairs: Vec<(usize, Vec<u64>)> = solutions
        .iter()
        .flat_map(|x| {
            (0..m)
                .filter(|i| !protected.contains(i))
                .map(move |i| (i, x[i].clone()))
        })
        .sorted()
        .dedup()
        .collect();
    for size in 0..=pairs.len() {
        for subset in pairs.iter().combinations(size) {
            if solutions
                .iter()
                .all(|x| subset.iter().any(|(i, v)| &x[*i] == v))
            {
                return Some(size);
            }
        }
    }
    None
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64) -> Vec<Vec<i64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-bound..=bound)).collect())
        .collect()
}

/// Random subset of the group with each element kept with probability `p`.
pub fn random_subset(rng: &mut ChaCha8Rng, moduli: &[u64], p: f64) -> Vec<Vec<u64>> {
    moduli
        .iter()
        .map(|&q| 0..q)
        .multi_cartesian_product()
        .filter(|_| rng.gen_bool(p))
        .collect()
}

pub fn full(moduli: &[u64]) -> Vec<Vec<u64>> {
    moduli
        .iter()
        .map(|&q| 0..q)
        .multi_cartesian_product()
        .collect()
}
