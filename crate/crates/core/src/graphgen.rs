//! Configuration-model sampling of d-regular multigraphs.
//!
//! Half-edge `i` belongs to vertex `i / d`. A graph is a fixed-point-free
//! involution on the `n * d` half-edges.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

/// Identifier of the generator behind every seeded sampler in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.9/seed_from_u64";

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularGraph {
    n: usize,
    d: usize,
    matching: Vec<usize>,
}

impl RegularGraph {
    /// Builds a graph from an explicit matching, checking that it is a perfect matching.
    pub fn from_matching(n: usize, d: usize, matching: Vec<usize>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter(format!("n = {n}, d = {d} must be positive")));
        }
        let m = n * d;
        if matching.len() != m {
            return Err(Error::InvalidParameter(format!(
                "matching has {} entries, expected {m}",
                matching.len()
            )));
        }
        for (i, &j) in matching.iter().enumerate() {
            if j >= m || j == i || matching[j] != i {
                return Err(Error::InvalidParameter(format!("half-edge {i} is not properly matched")));
            }
        }
        Ok(Self { n, d, matching })
    }

    /// Builds a graph from a list of half-edge pairs.
    pub fn from_pairs(n: usize, d: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let m = n * d;
        let mut matching = vec![usize::MAX; m];
        for &(a, b) in pairs {
            if a >= m || b >= m || matching[a] != usize::MAX || matching[b] != usize::MAX {
                return Err(Error::InvalidParameter(format!("bad pair ({a}, {b})")));
            }
            matching[a] = b;
            matching[b] = a;
        }
        Self::from_matching(n, d, matching)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn half_edge_count(&self) -> usize {
        self.n * self.d
    }

    pub fn matching(&self) -> &[usize] {
        &self.matching
    }

    pub fn partner(&self, h: usize) -> usize {
        self.matching[h]
    }

    pub fn vertex_of(&self, h: usize) -> usize {
        h / self.d
    }

    pub fn half_edges(&self, v: usize) -> std::ops::Range<usize> {
        v * self.d..(v + 1) * self.d
    }

    /// Neighbors of `v` listed once per incident half-edge; a self-loop lists `v` twice.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.half_edges(v).map(move |h| self.matching[h] / self.d)
    }

    /// Edges as half-edge pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.matching
            .iter()
            .enumerate()
            .filter(|&(a, &b)| a < b)
            .map(|(a, &b)| (a, b))
    }

    pub fn has_self_loop(&self, v: usize) -> bool {
        self.half_edges(v).any(|h| self.matching[h] / self.d == v)
    }

    /// Text form: `n d` on the first line, the matching on the second.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.d);
        for (i, m) in self.matching.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{m}");
        }
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let head = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let nums: Vec<usize> = head
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token {t:?}"))))
            .collect::<Result<_>>()?;
        if nums.len() != 2 {
            return Err(Error::Parse("header must be `n d`".into()));
        }
        let body = lines.next().unwrap_or("");
        let matching: Vec<usize> = body
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad matching token {t:?}"))))
            .collect::<Result<_>>()?;
        Self::from_matching(nums[0], nums[1], matching)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub self_loop_count: usize,
    /// Excess multiplicity summed over vertex pairs: a triple edge counts 2.
    pub multi_edge_count: usize,
    pub is_simple: bool,
}

pub fn graph_stats(g: &RegularGraph) -> GraphStats {
    let mut self_loops = 0;
    let mut mult: HashMap<(usize, usize), usize> = HashMap::new();
    for (a, b) in g.edges() {
        let (u, v) = (g.vertex_of(a), g.vertex_of(b));
        if u == v {
            self_loops += 1;
        } else {
            *mult.entry((u.min(v), u.max(v))).or_insert(0) += 1;
        }
    }
    let multi = mult.values().map(|&m| m - 1).sum();
    GraphStats {
        self_loop_count: self_loops,
        multi_edge_count: multi,
        is_simple: self_loops == 0 && multi == 0,
    }
}

/// Uniform perfect matching on `[n d]` drawn from `rng`.
pub fn sample_config_model_with<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<RegularGraph> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    if (n * d) % 2 == 1 {
        return Err(Error::InvalidParameter(format!("n d = {} is odd", n * d)));
    }
    let mut perm: Vec<usize> = (0..n * d).collect();
    perm.shuffle(rng);
    let mut matching = vec![0; n * d];
    for pair in perm.chunks_exact(2) {
        matching[pair[0]] = pair[1];
        matching[pair[1]] = pair[0];
    }
    Ok(RegularGraph { n, d, matching })
}

pub fn sample_config_model(n: usize, d: usize, seed: u64) -> Result<RegularGraph> {
    sample_config_model_with(n, d, &mut rng_from_seed(seed))
}

#[derive(Clone, Debug)]
pub struct SimpleSample {
    pub graph: RegularGraph,
    pub attempts: usize,
}

/// Rejection-samples configuration-model graphs until one is simple.
pub fn sample_simple(n: usize, d: usize, seed: u64, max_attempts: usize) -> Result<SimpleSample> {
    if max_attempts == 0 {
        return Err(Error::InvalidParameter("max_attempts must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    for attempt in 1..=max_attempts {
        let g = sample_config_model_with(n, d, &mut rng)?;
        if graph_stats(&g).is_simple {
            return Ok(SimpleSample { graph: g, attempts: attempt });
        }
    }
    Err(Error::AttemptsExhausted(max_attempts))
}
