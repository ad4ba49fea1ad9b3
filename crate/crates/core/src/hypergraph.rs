//! The colored hypergraph encoding of a standard `n`-circular system.
//!
//! The template `H` has vertices `0..m` and one edge per color `i`, the
//! circular window `{i, …, i+k}`. The host `K` lives on `G × [0, m)`; it is
//! never materialized, since an edge of color `i` on `(g_i, …, g_{i+k})` is
//! present exactly when its label `a_i = Σ_t C[i][i+t]·g_{i+t}` lies in `X_i`.
//! A copy of `H` in `K` is then a vector `g ∈ G^m` with `C·g ∈ ∏ X_i`.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::Serialize;

use crate::abelian::{is_zero_element, AbelianGroup, ElementSet, GroupElement, GroupMatrix};
use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::pipeline::CircularSystem;
use crate::system::{Budget, RestrictedSystem, Solution};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TemplateHypergraph {
    m: usize,
    k: usize,
    edges: Vec<Vec<usize>>,
}

impl TemplateHypergraph {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Edge of color `i`, as zero-based vertices.
    pub fn edge(&self, i: usize) -> &[usize] {
        &self.edges[i]
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.contains(&v)).count()
    }
}

/// The `m` circular windows of `k + 1` vertices.
pub fn build_template(m: usize, k: usize) -> Result<TemplateHypergraph> {
    if m < k + 2 {
        return Err(Error::Precondition(format!(
            "template needs m >= k + 2, got k = {k}, m = {m}"
        )));
    }
    let edges = (0..m)
        .map(|i| (0..=k).map(|t| (i + t) % m).collect())
        .collect();
    Ok(TemplateHypergraph { m, k, edges })
}

#[derive(Clone, Debug)]
pub struct HostHypergraph {
    group: AbelianGroup,
    matrix: IntMatrix,
    c: IntMatrix,
    restrictions: Vec<ElementSet>,
    template: TemplateHypergraph,
    c_group: GroupMatrix,
    a_group: GroupMatrix,
}

impl HostHypergraph {
    /// Host for `circular` with restriction sets `restrictions`.
    pub fn new(
        group: AbelianGroup,
        circular: &CircularSystem,
        restrictions: Vec<ElementSet>,
    ) -> Result<Self> {
        if circular.modulus() != group.order() {
            return Err(Error::Precondition(format!(
                "circular system is over modulus {}, group has order {}",
                circular.modulus(),
                group.order()
            )));
        }
        Self::with_c_matrix(
            group,
            circular.matrix().clone(),
            circular.c_matrix().clone(),
            restrictions,
        )
    }

    /// Host of a homogeneous restricted system whose matrix is standard
    /// `|G|`-circular.
    pub fn from_system(sys: &RestrictedSystem) -> Result<Self> {
        if !sys.is_homogeneous() {
            return Err(Error::Precondition(
                "hypergraph encoding needs a homogeneous system".into(),
            ));
        }
        let circular = CircularSystem::new(sys.matrix().clone(), sys.group().order())?;
        Self::new(sys.group().clone(), &circular, sys.restrictions().to_vec())
    }

    /// Host with an arbitrary `C`; the claim verifiers report whatever fails.
    pub fn with_c_matrix(
        group: AbelianGroup,
        matrix: IntMatrix,
        c: IntMatrix,
        restrictions: Vec<ElementSet>,
    ) -> Result<Self> {
        let (k, m) = matrix.shape();
        let template = build_template(m, k)?;
        if c.shape() != (m, m) {
            return Err(Error::Dimension(format!(
                "C must be {m}x{m}, got {}x{}",
                c.rows(),
                c.cols()
            )));
        }
        if restrictions.len() != m {
            return Err(Error::Dimension(format!(
                "{} restriction sets for {m} unknowns",
                restrictions.len()
            )));
        }
        if let Some(x) = restrictions.iter().flatten().find(|x| !group.contains(x)) {
            return Err(Error::Invalid(format!(
                "{x} is not an element of the group"
            )));
        }
        let c_group = GroupMatrix::new(&c, &group);
        let a_group = GroupMatrix::new(&matrix, &group);
        Ok(Self {
            group,
            matrix,
            c,
            restrictions,
            template,
            c_group,
            a_group,
        })
    }

    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn c_matrix(&self) -> &IntMatrix {
        &self.c
    }

    pub fn restrictions(&self) -> &[ElementSet] {
        &self.restrictions
    }

    pub fn template(&self) -> &TemplateHypergraph {
        &self.template
    }

    pub fn k(&self) -> usize {
        self.template.k
    }

    pub fn m(&self) -> usize {
        self.template.m
    }

    /// Label of the color-`i` edge on `window = (g_i, …, g_{i+k})` and
    /// whether that edge belongs to the host.
    pub fn edge_label(&self, i: usize, window: &[GroupElement]) -> Result<(GroupElement, bool)> {
        let (k, m) = (self.k(), self.m());
        if i >= m {
            return Err(Error::Index(format!(
                "color {} out of range 1..={m}",
                i + 1
            )));
        }
        if window.len() != k + 1 {
            return Err(Error::Dimension(format!(
                "window has {} elements, expected {}",
                window.len(),
                k + 1
            )));
        }
        let mut label = self.group.zero();
        for (t, g) in window.iter().enumerate() {
            let j = (i + t) % m;
            label = self
                .group
                .add(&label, &self.group.scale(self.c.get(i, j), g));
        }
        let present = self.restrictions[i].contains(&label);
        Ok((label, present))
    }

    fn window(&self, i: usize, g: &[GroupElement]) -> Vec<GroupElement> {
        self.template.edges[i]
            .iter()
            .map(|&v| g[v].clone())
            .collect()
    }
}

fn check_size(group: &AbelianGroup, exponent: usize, budget: Budget) -> Result<()> {
    budget.check((group.order() as u128).saturating_pow(exponent as u32))
}

/// A copy of the template: vertex `(g_i, i)` for every `i`, with the labels
/// `C·g` of its edges.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct HCopy {
    pub g: Vec<GroupElement>,
    pub labels: Vec<GroupElement>,
}

/// Vectors `g ∈ G^m` whose labels lie in `X_i` for every color outside
/// `omitted`, in lexicographic order of `g`.
fn copies_avoiding(host: &HostHypergraph, omitted: &[usize], budget: Budget) -> Result<Vec<HCopy>> {
    let m = host.m();
    check_size(&host.group, m, budget)?;
    if host
        .restrictions
        .iter()
        .enumerate()
        .any(|(i, x)| x.is_empty() && !omitted.contains(&i))
    {
        return Ok(Vec::new());
    }
    let elements: Vec<GroupElement> = host.group.elements().collect();
    let mut out = Vec::new();
    for g in (0..m)
        .map(|_| elements.iter().cloned())
        .multi_cartesian_product()
    {
        let labels = host.c_group.apply(&g);
        let accepted = labels
            .iter()
            .enumerate()
            .all(|(i, x)| omitted.contains(&i) || host.restrictions[i].contains(x));
        if accepted {
            out.push(HCopy { g, labels });
        }
    }
    Ok(out)
}

/// All copies of the template in the host.
pub fn enumerate_copies(host: &HostHypergraph, budget: Budget) -> Result<Vec<HCopy>> {
    copies_avoiding(host, &[], budget)
}

/// Copies of the template with the edges of colors in `omitted` deleted.
pub fn enumerate_partial_copies(
    host: &HostHypergraph,
    omitted: &[usize],
    budget: Budget,
) -> Result<Vec<HCopy>> {
    if let Some(&i) = omitted.iter().find(|&&i| i >= host.m()) {
        return Err(Error::Index(format!(
            "color {} out of range 1..={}",
            i + 1,
            host.m()
        )));
    }
    copies_avoiding(host, omitted, budget)
}

/// Number of host edges of color `i`, counted over all windows.
pub fn count_edges(host: &HostHypergraph, i: usize, budget: Budget) -> Result<usize> {
    let k = host.k();
    check_size(&host.group, k + 1, budget)?;
    let elements: Vec<GroupElement> = host.group.elements().collect();
    let mut count = 0;
    for window in (0..=k)
        .map(|_| elements.iter().cloned())
        .multi_cartesian_product()
    {
        if host.edge_label(i, &window)?.1 {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Claim1Report {
    pub copies: usize,
    pub classes: usize,
    /// Expected size `n^k` of every class.
    pub class_size: u128,
    pub kernel_ok: bool,
    pub classes_match_solutions: bool,
    pub class_sizes_ok: bool,
    pub edge_disjoint: bool,
    pub violations: Vec<String>,
}

impl Claim1Report {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Groups `copies` by label vector and checks the classes against
/// `solutions`: one class per solution, each of `n^k` pairwise
/// edge-disjoint copies.
pub fn verify_claim1(
    host: &HostHypergraph,
    copies: &[HCopy],
    solutions: &[Solution],
) -> Claim1Report {
    let n = host.group.order();
    let k = host.k();
    let mut report = Claim1Report {
        copies: copies.len(),
        class_size: (n as u128).pow(k as u32),
        kernel_ok: true,
        classes_match_solutions: true,
        class_sizes_ok: true,
        edge_disjoint: true,
        ..Default::default()
    };

    let product = host
        .matrix
        .mul(&host.c)
        .expect("shapes checked on construction");
    if !host
        .group
        .moduli()
        .iter()
        .all(|&q| product.reduce_mod(q).is_zero())
    {
        report.kernel_ok = false;
        report.violations.push("A·C is not zero on G".into());
    }

    let mut classes: BTreeMap<&[GroupElement], Vec<&HCopy>> = BTreeMap::new();
    for copy in copies {
        classes.entry(&copy.labels).or_default().push(copy);
    }
    report.classes = classes.len();

    let mut expected: Vec<&[GroupElement]> = solutions.iter().map(Vec::as_slice).collect();
    expected.sort();
    expected.dedup();
    let found: Vec<&[GroupElement]> = classes.keys().copied().collect();
    if found != expected {
        report.classes_match_solutions = false;
        let extra = found.iter().find(|x| expected.binary_search(x).is_err());
        let missing = expected.iter().find(|x| found.binary_search(x).is_err());
        report.violations.push(format!(
            "{} classes for {} solutions; first unexpected class {:?}, first missing solution {:?}",
            found.len(),
            expected.len(),
            extra.map(|x| fmt_vector(x)),
            missing.map(|x| fmt_vector(x)),
        ));
    }

    for (labels, members) in &classes {
        if members.len() as u128 != report.class_size {
            report.class_sizes_ok = false;
            report.violations.push(format!(
                "class {} has {} copies, expected {}",
                fmt_vector(labels),
                members.len(),
                report.class_size
            ));
        }
        for i in 0..host.m() {
            let windows: Vec<Vec<GroupElement>> =
                members.iter().map(|c| host.window(i, &c.g)).collect();
            if windows.iter().all_unique() {
                continue;
            }
            report.edge_disjoint = false;
            report.violations.push(format!(
                "two copies in class {} share their color-{} edge",
                fmt_vector(labels),
                i + 1
            ));
        }
    }
    report
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Claim2Report {
    pub copies: usize,
    pub violations: Vec<String>,
}

impl Claim2Report {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that the labels of every copy solve `A x = 0`.
pub fn verify_claim2(host: &HostHypergraph, copies: &[HCopy]) -> Claim2Report {
    let mut report = Claim2Report {
        copies: copies.len(),
        violations: Vec::new(),
    };
    for copy in copies {
        if !host.a_group.apply(&copy.labels).iter().all(is_zero_element) {
            report.violations.push(format!(
                "labels {} of copy {} do not solve the system",
                fmt_vector(&copy.labels),
                fmt_vector(&copy.g)
            ));
        }
    }
    report
}

fn fmt_vector(x: &[GroupElement]) -> String {
    format!("({})", x.iter().join(", "))
}
