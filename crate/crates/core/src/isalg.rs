//! Exact and greedy independent sets.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::graphgen::{rng_from_seed, RegularGraph};
use crate::{Error, Result};

/// Largest instance accepted by the exact solver.
pub const MAX_EXACT_N: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndepSet {
    membership: Vec<bool>,
}

impl IndepSet {
    pub fn new(membership: Vec<bool>) -> Self {
        Self { membership }
    }

    pub fn empty(n: usize) -> Self {
        Self { membership: vec![false; n] }
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }

    pub fn contains(&self, v: usize) -> bool {
        self.membership[v]
    }

    pub fn size(&self) -> usize {
        self.membership.iter().filter(|&&b| b).count()
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.membership.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v)
    }
}

pub fn is_independent(g: &RegularGraph, membership: &[bool]) -> Result<bool> {
    if membership.len() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), got: membership.len() });
    }
    Ok(g
        .edges()
        .all(|(a, b)| !(membership[g.vertex_of(a)] && membership[g.vertex_of(b)])))
}

/// True if the set is independent and no unoccupied vertex can be added.
pub fn is_maximal(g: &RegularGraph, set: &IndepSet) -> bool {
    if !is_independent(g, set.membership()).unwrap_or(false) {
        return false;
    }
    (0..g.n()).all(|v| set.contains(v) || g.has_self_loop(v) || g.neighbors(v).any(|u| set.contains(u)))
}

/// Neighbor bitmasks (self excluded) and the mask of self-looped vertices.
pub fn adjacency_masks(g: &RegularGraph) -> (Vec<u32>, u32) {
    assert!(g.n() <= MAX_EXACT_N);
    let mut adj = vec![0u32; g.n()];
    let mut looped = 0u32;
    for (a, b) in g.edges() {
        let (u, v) = (g.vertex_of(a), g.vertex_of(b));
        if u == v {
            looped |= 1 << u;
        } else {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
    }
    (adj, looped)
}

struct Search<'a> {
    adj: &'a [u32],
    best: u32,
    best_size: u32,
}

impl Search<'_> {
    fn run(&mut self, mut cand: u32, mut chosen: u32) {
        // Vertices of degree at most one inside `cand` belong to some maximum set.
        loop {
            let mut changed = false;
            let mut rest = cand;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if cand & (1 << v) == 0 {
                    continue;
                }
                if (self.adj[v] & cand).count_ones() <= 1 {
                    chosen |= 1 << v;
                    cand &= !(1 << v) & !self.adj[v];
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let size = chosen.count_ones();
        if cand == 0 {
            if size > self.best_size {
                self.best_size = size;
                self.best = chosen;
            }
            return;
        }
        if size + bound(self.adj, cand) <= self.best_size {
            return;
        }
        let mut pivot = 0;
        let mut pivot_deg = 0;
        let mut rest = cand;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let deg = (self.adj[v] & cand).count_ones();
            if deg > pivot_deg {
                pivot_deg = deg;
                pivot = v;
            }
        }
        let bit = 1u32 << pivot;
        self.run(cand & !bit & !self.adj[pivot], chosen | bit);
        self.run(cand & !bit, chosen);
    }
}

/// Upper bound on the independence number of the subgraph induced by `cand`
/// from a greedy clique cover by edges and singletons.
fn bound(adj: &[u32], mut cand: u32) -> u32 {
    let mut parts = 0;
    while cand != 0 {
        let v = cand.trailing_zeros() as usize;
        cand &= !(1 << v);
        let nb = adj[v] & cand;
        if nb != 0 {
            cand &= !(1 << nb.trailing_zeros());
        }
        parts += 1;
    }
    parts
}

/// Exact maximum independent set by branch and bound over bitmasks.
pub fn brute_force_mis(g: &RegularGraph) -> Result<(usize, IndepSet)> {
    if g.n() > MAX_EXACT_N {
        return Err(Error::TooLarge { n: g.n(), max: MAX_EXACT_N });
    }
    let (adj, looped) = adjacency_masks(g);
    let all = if g.n() == 32 { u32::MAX } else { (1u32 << g.n()) - 1 };
    let mut s = Search { adj: &adj, best: 0, best_size: 0 };
    s.run(all & !looped, 0);
    let membership = (0..g.n()).map(|v| s.best & (1 << v) != 0).collect();
    Ok((s.best_size as usize, IndepSet::new(membership)))
}

/// Inclusion-maximal independent set built along a uniformly random vertex order.
pub fn greedy_maximal_with<R: Rng + ?Sized>(g: &RegularGraph, rng: &mut R) -> IndepSet {
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.shuffle(rng);
    let mut member = vec![false; g.n()];
    let mut blocked = vec![false; g.n()];
    for v in 0..g.n() {
        if g.has_self_loop(v) {
            blocked[v] = true;
        }
    }
    for v in order {
        if blocked[v] {
            continue;
        }
        member[v] = true;
        blocked[v] = true;
        for u in g.neighbors(v) {
            blocked[u] = true;
        }
    }
    IndepSet::new(member)
}

pub fn greedy_maximal(g: &RegularGraph, seed: u64) -> IndepSet {
    greedy_maximal_with(g, &mut rng_from_seed(seed))
}
