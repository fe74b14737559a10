//! The coarsening map from independent sets to frozen configurations, and
//! validation of frozen configurations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::graphgen::RegularGraph;
use crate::isalg::{is_independent, IndepSet};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Spin {
    Zero,
    One,
    Free,
}

impl Spin {
    pub fn symbol(self) -> char {
        match self {
            Spin::Zero => '0',
            Spin::One => '1',
            Spin::Free => 'f',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '0' => Some(Spin::Zero),
            '1' => Some(Spin::One),
            'f' => Some(Spin::Free),
            _ => None,
        }
    }
}

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Intensity {
    twice: u64,
}

impl Intensity {
    pub fn from_counts(ones: usize, frees: usize) -> Self {
        Self { twice: 2 * ones as u64 + frees as u64 }
    }

    pub fn from_integer(k: usize) -> Self {
        Self { twice: 2 * k as u64 }
    }

    pub fn twice(self) -> u64 {
        self.twice
    }

    pub fn as_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl fmt::Display for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}.5", self.twice / 2)
        }
    }
}

impl Serialize for Intensity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FrozenConfig {
    pub eta: Vec<Spin>,
    /// Matched free pairs as half-edge pairs `(a, b)` with `a < b`.
    pub matched_pairs: Vec<(usize, usize)>,
}

impl FrozenConfig {
    pub fn count(&self, s: Spin) -> usize {
        self.eta.iter().filter(|&&e| e == s).count()
    }

    pub fn intensity(&self) -> Intensity {
        intensity(self)
    }

    /// Spin string over `{0,1,f}` on the first line, `a:b` half-edge pairs on the second.
    pub fn to_text(&self) -> String {
        let spins: String = self.eta.iter().map(|s| s.symbol()).collect();
        let pairs: Vec<String> = self.matched_pairs.iter().map(|(a, b)| format!("{a}:{b}")).collect();
        format!("{spins}\n{}\n", pairs.join(" "))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let spins = lines.next().ok_or_else(|| Error::Parse("missing spin line".into()))?;
        let eta = spins
            .trim()
            .chars()
            .map(|c| Spin::from_symbol(c).ok_or_else(|| Error::Parse(format!("bad spin {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut matched_pairs = Vec::new();
        for tok in lines.next().unwrap_or("").split_whitespace() {
            let (a, b) = tok.split_once(':').ok_or_else(|| Error::Parse(format!("bad pair {tok:?}")))?;
            let a: usize = a.parse().map_err(|_| Error::Parse(format!("bad pair {tok:?}")))?;
            let b: usize = b.parse().map_err(|_| Error::Parse(format!("bad pair {tok:?}")))?;
            matched_pairs.push((a.min(b), a.max(b)));
        }
        Ok(Self { eta, matched_pairs })
    }
}

pub fn intensity(cfg: &FrozenConfig) -> Intensity {
    Intensity::from_counts(cfg.count(Spin::One), cfg.count(Spin::Free))
}

/// Output of the coarsening map with a record of the moves it made.
#[derive(Clone, Debug, Serialize)]
pub struct Coarsening {
    pub config: FrozenConfig,
    /// Vertex pairs `(v, u)` in the order Step 1 formed them; `v` was the zero.
    pub step1_moves: Vec<(usize, usize)>,
    /// Zeros relabelled free by Step 2, ascending.
    pub step2_vertices: Vec<usize>,
    /// Intensity before any move, then after each Step 1 move, then after each Step 2 move.
    pub intensity_trace: Vec<Intensity>,
}

impl Coarsening {
    pub fn step2_fired(&self) -> bool {
        !self.step2_vertices.is_empty()
    }
}

pub fn coarsen(g: &RegularGraph, x: &IndepSet) -> Result<Coarsening> {
    if !is_independent(g, x.membership())? {
        return Err(Error::NotIndependent);
    }
    let n = g.n();
    let mut eta: Vec<Spin> = x.membership().iter().map(|&b| if b { Spin::One } else { Spin::Zero }).collect();
    // Number of incident edges leading to a one, with multiplicity.
    let mut one_edges = vec![0usize; n];
    for v in 0..n {
        if eta[v] == Spin::One {
            for u in g.neighbors(v) {
                one_edges[u] += 1;
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| eta[v] == Spin::Zero && one_edges[v] == 1).collect();
    let mut trace = vec![Intensity::from_counts(x.size(), 0)];
    let mut ones = x.size();
    let mut frees = 0usize;
    let mut matched_pairs = Vec::new();
    let mut step1_moves = Vec::new();

    while let Some(v) = ready.pop_first() {
        let h = g
            .half_edges(v)
            .find(|&h| eta[g.vertex_of(g.partner(h))] == Spin::One)
            .expect("a ready zero has a one-neighbor");
        let hu = g.partner(h);
        let u = g.vertex_of(hu);
        eta[v] = Spin::Free;
        eta[u] = Spin::Free;
        ones -= 1;
        frees += 2;
        matched_pairs.push((h.min(hu), h.max(hu)));
        step1_moves.push((v, u));
        for w in g.neighbors(u) {
            one_edges[w] -= 1;
            if eta[w] == Spin::Zero {
                match one_edges[w] {
                    1 => {
                        ready.insert(w);
                    }
                    _ => {
                        ready.remove(&w);
                    }
                }
            }
        }
        trace.push(Intensity::from_counts(ones, frees));
    }

    let mut step2_vertices = Vec::new();
    for v in 0..n {
        if eta[v] == Spin::Zero && one_edges[v] == 0 {
            step2_vertices.push(v);
        }
    }
    for &v in &step2_vertices {
        eta[v] = Spin::Free;
        frees += 1;
        trace.push(Intensity::from_counts(ones, frees));
    }
    // Step 2 only relabels zeros without one-neighbors, so Step 1 cannot fire again.
    assert!(
        (0..n).all(|v| eta[v] != Spin::Zero || one_edges[v] >= 2),
        "coarsening left a zero with fewer than two one-edges"
    );
    Ok(Coarsening {
        config: FrozenConfig { eta, matched_pairs },
        step1_moves,
        step2_vertices,
        intensity_trace: trace,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    LengthMismatch { expected: usize, got: usize },
    /// (a)(i): a one adjacent to a non-zero vertex.
    OneNeighborNotZero { vertex: usize, neighbor: usize },
    /// (a)(ii): a zero joined to ones by fewer than two edges.
    ZeroUnderForced { vertex: usize, one_edges: usize },
    /// (a)(iii): a free adjacent to a one.
    FreeNeighborOne { vertex: usize, neighbor: usize },
    /// (a)(iii): a free with no free neighbor.
    IsolatedFree { vertex: usize },
    /// (b): a tree component of the free subgraph without a perfect matching.
    TreeWithoutPerfectMatching { vertices: Vec<usize> },
    /// Weighted (iii): a listed pair is not an edge joining two frees.
    BadMatchedPair { pair: (usize, usize) },
    /// Weighted (iii): a free covered by zero or several matched pairs.
    FreeCoverage { vertex: usize, times: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub weighted: bool,
    pub violations: Vec<Violation>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_frozen(g: &RegularGraph, cfg: &FrozenConfig, weighted: bool) -> Verdict {
    let mut violations = Vec::new();
    let n = g.n();
    if cfg.eta.len() != n {
        violations.push(Violation::LengthMismatch { expected: n, got: cfg.eta.len() });
        return Verdict { weighted, violations };
    }
    let eta = &cfg.eta;
    for v in 0..n {
        match eta[v] {
            Spin::One => {
                if let Some(w) = g.neighbors(v).find(|&w| eta[w] != Spin::Zero) {
                    violations.push(Violation::OneNeighborNotZero { vertex: v, neighbor: w });
                }
            }
            Spin::Zero => {
                let k = g.neighbors(v).filter(|&w| eta[w] == Spin::One).count();
                if k < 2 {
                    violations.push(Violation::ZeroUnderForced { vertex: v, one_edges: k });
                }
            }
            Spin::Free => {
                if let Some(w) = g.neighbors(v).find(|&w| eta[w] == Spin::One) {
                    violations.push(Violation::FreeNeighborOne { vertex: v, neighbor: w });
                }
                if !weighted && !g.neighbors(v).any(|w| eta[w] == Spin::Free) {
                    violations.push(Violation::IsolatedFree { vertex: v });
                }
            }
        }
    }
    if weighted {
        let mut cover = vec![0usize; n];
        for &(a, b) in &cfg.matched_pairs {
            let ok = a < g.half_edge_count()
                && b < g.half_edge_count()
                && g.partner(a) == b
                && eta[g.vertex_of(a)] == Spin::Free
                && eta[g.vertex_of(b)] == Spin::Free
                && g.vertex_of(a) != g.vertex_of(b);
            if !ok {
                violations.push(Violation::BadMatchedPair { pair: (a, b) });
                continue;
            }
            cover[g.vertex_of(a)] += 1;
            cover[g.vertex_of(b)] += 1;
        }
        for v in 0..n {
            if eta[v] == Spin::Free && cover[v] != 1 {
                violations.push(Violation::FreeCoverage { vertex: v, times: cover[v] });
            }
        }
    } else {
        for comp in free_components(g, eta) {
            if comp.is_tree && !comp.perfect_matching {
                violations.push(Violation::TreeWithoutPerfectMatching { vertices: comp.vertices });
            }
        }
    }
    Verdict { weighted, violations }
}

#[derive(Clone, Debug, Serialize)]
pub struct FreeComponent {
    pub vertices: Vec<usize>,
    pub edge_count: usize,
    pub is_tree: bool,
    /// Only decided for trees; false otherwise.
    pub perfect_matching: bool,
}

/// Connected components of the subgraph induced by free vertices.
pub fn free_components(g: &RegularGraph, eta: &[Spin]) -> Vec<FreeComponent> {
    let n = g.n();
    let mut comp_of = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if eta[s] != Spin::Free || comp_of[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![s];
        let mut vertices = Vec::new();
        comp_of[s] = id;
        while let Some(v) = stack.pop() {
            vertices.push(v);
            for w in g.neighbors(v) {
                if eta[w] == Spin::Free && comp_of[w] == usize::MAX {
                    comp_of[w] = id;
                    stack.push(w);
                }
            }
        }
        vertices.sort_unstable();
        comps.push(vertices);
    }
    let mut edge_counts = vec![0usize; comps.len()];
    for (a, b) in g.edges() {
        let (u, v) = (g.vertex_of(a), g.vertex_of(b));
        if eta[u] == Spin::Free && eta[v] == Spin::Free {
            edge_counts[comp_of[u]] += 1;
        }
    }
    comps
        .into_iter()
        .zip(edge_counts)
        .map(|(vertices, edge_count)| {
            let is_tree = edge_count + 1 == vertices.len();
            let perfect_matching = is_tree && tree_has_perfect_matching(g, &vertices);
            FreeComponent { vertices, edge_count, is_tree, perfect_matching }
        })
        .collect()
}

/// Greedy leaf matching, which decides perfect matchability of a tree.
fn tree_has_perfect_matching(g: &RegularGraph, vertices: &[usize]) -> bool {
    if vertices.len() % 2 == 1 {
        return false;
    }
    let inside = |v: usize| vertices.binary_search(&v).is_ok();
    let mut alive: BTreeSet<usize> = vertices.iter().copied().collect();
    let degree = |v: usize, alive: &BTreeSet<usize>| g.neighbors(v).filter(|&w| inside(w) && alive.contains(&w)).count();
    while let Some(&leaf) = alive.iter().find(|&&v| degree(v, &alive) <= 1) {
        let Some(w) = g.neighbors(leaf).find(|&w| inside(w) && alive.contains(&w)) else {
            return false;
        };
        alive.remove(&leaf);
        alive.remove(&w);
    }
    alive.is_empty()
}

#[derive(Clone, Debug, Serialize)]
pub struct FreeSubgraphReport {
    pub component_sizes: Vec<usize>,
    pub odd_component_count: usize,
    pub tree_component_count: usize,
    pub tree_components_with_perfect_matching: usize,
    pub free_fraction: f64,
    /// The comparison constant `d^{-3/2}` for the free fraction.
    pub beta_max: f64,
}

pub fn free_subgraph_report(g: &RegularGraph, cfg: &FrozenConfig) -> FreeSubgraphReport {
    let comps = free_components(g, &cfg.eta);
    FreeSubgraphReport {
        component_sizes: comps.iter().map(|c| c.vertices.len()).collect(),
        odd_component_count: comps.iter().filter(|c| c.vertices.len() % 2 == 1).count(),
        tree_component_count: comps.iter().filter(|c| c.is_tree).count(),
        tree_components_with_perfect_matching: comps.iter().filter(|c| c.perfect_matching).count(),
        free_fraction: cfg.count(Spin::Free) as f64 / g.n() as f64,
        beta_max: (g.d() as f64).powf(-1.5),
    }
}
