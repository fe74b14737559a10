//! Conditioned forcing probabilities for small instances.
//!
//! Scalar case: `X^1..X^n` i.i.d. `Bin(d, θ)`, probability that every `X^i >= k`
//! given `sum X^i = E`. Pair case: `X^i` i.i.d. multinomial over the edge types
//! `11, 10, 01, 00` with `d` trials; a vertex is bad when
//! `min(x11 + x10, x11 + x01) < k`, and the conditioning fixes the totals of the
//! first three types.

use serde::Serialize;

use crate::numeric::{ln_factorials, log_sum_exp};
use crate::{Error, Result};

/// Largest `n d` accepted by the convolution.
pub const MAX_HALF_EDGES: usize = 10_000;
/// Largest `n d` accepted by direct enumeration.
pub const MAX_ENUMERATION: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ForcingTotal {
    Scalar(usize),
    /// Totals of the `11`, `10` and `01` types.
    Pair([usize; 3]),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForcingSpec {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub total: ForcingTotal,
    /// One success probability in the scalar case; type probabilities of
    /// `11, 10, 01` in the pair case.
    pub theta: Vec<f64>,
}

impl ForcingSpec {
    pub fn scalar(n: usize, d: usize, k: usize, total: usize, theta: f64) -> Self {
        Self { n, d, k, total: ForcingTotal::Scalar(total), theta: vec![theta] }
    }

    pub fn pair(n: usize, d: usize, k: usize, total: [usize; 3], theta: [f64; 3]) -> Self {
        Self { n, d, k, total: ForcingTotal::Pair(total), theta: theta.to_vec() }
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        Self { theta, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("n and d must be positive".into()));
        }
        let m = self.n * self.d;
        match self.total {
            ForcingTotal::Scalar(e) => {
                if self.theta.len() != 1 {
                    return Err(Error::InvalidParameter("scalar case takes one theta".into()));
                }
                if e > m {
                    return Err(Error::Infeasible(format!("total {e} exceeds n d = {m}")));
                }
            }
            ForcingTotal::Pair(e) => {
                if self.theta.len() != 3 {
                    return Err(Error::InvalidParameter("pair case takes three thetas".into()));
                }
                if e.iter().sum::<usize>() > m {
                    return Err(Error::Infeasible(format!("totals {e:?} exceed n d = {m}")));
                }
                if !(self.theta.iter().sum::<f64>() < 1.0) {
                    return Err(Error::InvalidParameter("pair thetas must sum below 1".into()));
                }
            }
        }
        if self.theta.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::InvalidParameter(format!("theta {:?} must lie strictly inside (0, 1)", self.theta)));
        }
        Ok(())
    }
}

/// Log-domain product of two truncated polynomials given by log coefficients.
fn convolve(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; len];
    let mut buf = Vec::with_capacity(b.len());
    for (t, o) in out.iter_mut().enumerate() {
        buf.clear();
        for (j, &bj) in b.iter().enumerate().take(t + 1) {
            if t - j < a.len() {
                buf.push(a[t - j] + bj);
            }
        }
        *o = log_sum_exp(&buf);
    }
    out
}

fn scalar_probability(spec: &ForcingSpec, e: usize) -> Result<f64> {
    let (n, d, k) = (spec.n, spec.d, spec.k);
    let theta = spec.theta[0];
    let lf = ln_factorials(n * d);
    let (lt, lu) = (theta.ln(), (-theta).ln_1p());
    let pmf: Vec<f64> = (0..=d)
        .map(|x| {
            if x < k {
                f64::NEG_INFINITY
            } else {
                lf[d] - lf[x] - lf[d - x] + x as f64 * lt + (d - x) as f64 * lu
            }
        })
        .collect();
    let len = e + 1;
    let mut acc = vec![f64::NEG_INFINITY; len];
    acc[0] = 0.0;
    for _ in 0..n {
        acc = convolve(&acc, &pmf, len);
    }
    let num = acc[e];
    let den = lf[n * d] - lf[e] - lf[n * d - e] + e as f64 * lt + (n * d - e) as f64 * lu;
    Ok(if num == f64::NEG_INFINITY { 0.0 } else { (num - den).exp().min(1.0) })
}

/// Three-dimensional log-domain convolution truncated at the target totals.
fn pair_probability(spec: &ForcingSpec, e: [usize; 3]) -> Result<f64> {
    let (n, d, k) = (spec.n, spec.d, spec.k);
    let dims = [e[0] + 1, e[1] + 1, e[2] + 1];
    let cells = dims[0] * dims[1] * dims[2];
    if cells > 2_000_000 {
        return Err(Error::TooLarge { n: cells, max: 2_000_000 });
    }
    let lf = ln_factorials(n * d);
    let lt: Vec<f64> = spec.theta.iter().map(|t| t.ln()).collect();
    let l00 = (1.0 - spec.theta.iter().sum::<f64>()).ln();
    let at = |a: usize, b: usize, c: usize| (a * dims[1] + b) * dims[2] + c;
    // Single-vertex law restricted to good vertices and to the target box.
    let mut single = Vec::new();
    for a in 0..=d.min(e[0]) {
        for b in 0..=(d - a).min(e[1]) {
            for c in 0..=(d - a - b).min(e[2]) {
                if (a + b).min(a + c) < k {
                    continue;
                }
                let z = d - a - b - c;
                let w = lf[d] - lf[a] - lf[b] - lf[c] - lf[z]
                    + a as f64 * lt[0]
                    + b as f64 * lt[1]
                    + c as f64 * lt[2]
                    + z as f64 * l00;
                single.push(([a, b, c], w));
            }
        }
    }
    let mut acc = vec![f64::NEG_INFINITY; cells];
    acc[0] = 0.0;
    let mut terms: Vec<Vec<f64>> = vec![Vec::new(); cells];
    for _ in 0..n {
        for t in terms.iter_mut() {
            t.clear();
        }
        for a in 0..dims[0] {
            for b in 0..dims[1] {
                for c in 0..dims[2] {
                    let v = acc[at(a, b, c)];
                    if v == f64::NEG_INFINITY {
                        continue;
                    }
                    for &([x, y, z], w) in &single {
                        if a + x < dims[0] && b + y < dims[1] && c + z < dims[2] {
                            terms[at(a + x, b + y, c + z)].push(v + w);
                        }
                    }
                }
            }
        }
        for (slot, t) in acc.iter_mut().zip(&terms) {
            *slot = log_sum_exp(t);
        }
    }
    let num = acc[at(e[0], e[1], e[2])];
    let m = n * d;
    let e00 = m - e[0] - e[1] - e[2];
    let den = lf[m] - lf[e[0]] - lf[e[1]] - lf[e[2]] - lf[e00]
        + e[0] as f64 * lt[0]
        + e[1] as f64 * lt[1]
        + e[2] as f64 * lt[2]
        + e00 as f64 * l00;
    Ok(if num == f64::NEG_INFINITY { 0.0 } else { (num - den).exp().min(1.0) })
}

/// Conditional probability that no vertex is bad, by exact convolution.
pub fn forcing_probability_exact(spec: &ForcingSpec) -> Result<f64> {
    spec.validate()?;
    if spec.n * spec.d > MAX_HALF_EDGES {
        return Err(Error::TooLarge { n: spec.n * spec.d, max: MAX_HALF_EDGES });
    }
    if spec.k == 0 {
        return Ok(1.0);
    }
    match spec.total {
        ForcingTotal::Scalar(e) => scalar_probability(spec, e),
        ForcingTotal::Pair(e) => pair_probability(spec, e),
    }
}

fn binom_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Conditional probability by summing over histograms of per-vertex types, in
/// exact integer arithmetic; `theta` cancels and is ignored.
///
/// A vertex type is its count vector; a histogram with `m_t` vertices of type
/// `t` stands for `n! / prod m_t!` assignments, each carrying the product of the
/// multinomial half-edge counts of its types.
pub fn forcing_probability_enumerate(spec: &ForcingSpec) -> Result<f64> {
    spec.validate()?;
    let (n, d, k) = (spec.n, spec.d, spec.k);
    if n * d > MAX_ENUMERATION {
        return Err(Error::TooLarge { n: n * d, max: MAX_ENUMERATION });
    }
    // Each type: counts of the tracked kinds, weight, and whether it is good.
    let (types, target): (Vec<(Vec<usize>, u128, bool)>, Vec<usize>) = match spec.total {
        ForcingTotal::Scalar(e) => ((0..=d).map(|x| (vec![x], binom_u128(d, x), x >= k)).collect(), vec![e]),
        ForcingTotal::Pair(e) => {
            let mut v = Vec::new();
            for a in 0..=d {
                for b in 0..=d - a {
                    for c in 0..=d - a - b {
                        let w = binom_u128(d, a) * binom_u128(d - a, b) * binom_u128(d - a - b, c);
                        v.push((vec![a, b, c], w, (a + b).min(a + c) >= k));
                    }
                }
            }
            (v, e.to_vec())
        }
    };
    struct Sweep<'a> {
        types: &'a [(Vec<usize>, u128, bool)],
        all: u128,
        good: u128,
    }
    fn rec(s: &mut Sweep, t: usize, vertices: usize, left: &mut Vec<usize>, w: u128, ok: bool) {
        if vertices == 0 {
            if left.iter().all(|&x| x == 0) {
                s.all += w;
                if ok {
                    s.good += w;
                }
            }
            return;
        }
        if t == s.types.len() {
            return;
        }
        let (counts, tw, fine) = (&s.types[t].0, s.types[t].1, s.types[t].2);
        let mut wm = w;
        for m in 0..=vertices {
            if m > 0 {
                if counts.iter().zip(left.iter()).any(|(&c, &l)| c > l) {
                    // Undo the m - 1 copies taken so far.
                    for (l, &c) in left.iter_mut().zip(counts) {
                        *l += c * (m - 1);
                    }
                    return;
                }
                for (l, &c) in left.iter_mut().zip(counts) {
                    *l -= c;
                }
                // C(vertices, m) tw^m built one factor at a time.
                wm = wm * (vertices - m + 1) as u128 / m as u128 * tw;
            }
            if wm > 0 {
                rec(s, t + 1, vertices - m, left, wm, ok && (m == 0 || fine));
            }
        }
        for (l, &c) in left.iter_mut().zip(counts) {
            *l += c * vertices;
        }
    }
    let mut s = Sweep { types: &types, all: 0, good: 0 };
    let mut left = target;
    rec(&mut s, 0, n, &mut left, 1, true);
    if s.all == 0 {
        return Err(Error::Infeasible("no assignment reaches the totals".into()));
    }
    Ok(s.good as f64 / s.all as f64)
}

/// Largest pairwise difference of the conditional probability across `thetas`.
pub fn theta_invariance_check(spec: &ForcingSpec, thetas: &[Vec<f64>]) -> Result<f64> {
    if thetas.len() < 2 {
        return Err(Error::InvalidParameter("need at least two theta values".into()));
    }
    let vals = thetas
        .iter()
        .map(|t| forcing_probability_exact(&spec.with_theta(t.clone())))
        .collect::<Result<Vec<f64>>>()?;
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}
