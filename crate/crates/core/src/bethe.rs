//! Auxiliary message model on the factor tree.
//!
//! Spins are coded 0 = zero, 1 = one, 2 = free. A message spin is an ordered
//! pair (variable-to-clause, clause-to-variable) stored at index `3 a + b`.

use serde::Serialize;

use crate::analytic::{solve_q, FrozenFixedPoint};
use crate::coarsen::Spin;
use crate::numeric::{ln_factorials, log_sum_exp, pow1m};
use crate::{Error, Result};

pub const ALPHABET: [&str; 9] = ["00", "01", "0f", "10", "11", "1f", "f0", "f1", "ff"];

pub const S00: usize = 0;
pub const S01: usize = 1;
pub const S0F: usize = 2;
pub const S10: usize = 3;
pub const S11: usize = 4;
pub const S1F: usize = 5;
pub const SF0: usize = 6;
pub const SF1: usize = 7;
pub const SFF: usize = 8;

/// Reflection `ab -> ba` as an index table.
pub const REFLECT: [usize; 9] = [0, 3, 6, 1, 4, 7, 2, 5, 8];

pub fn reflect(s: usize) -> usize {
    REFLECT[s]
}

pub fn spin_index(out: Spin, inc: Spin) -> usize {
    3 * code(out) + code(inc)
}

fn code(s: Spin) -> usize {
    match s {
        Spin::Zero => 0,
        Spin::One => 1,
        Spin::Free => 2,
    }
}

/// Outgoing spin from the incoming ones: one if none are one, free if exactly one, else zero.
pub fn chi_map(incoming: &[Spin]) -> Spin {
    match incoming.iter().filter(|&&s| s == Spin::One).count() {
        0 => Spin::One,
        1 => Spin::Free,
        _ => Spin::Zero,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BetheSolution {
    pub d: usize,
    pub lambda: f64,
    pub h_hat: [f64; 9],
    pub h_dot: [f64; 9],
    pub z_dot: f64,
    pub ln_z_dot: f64,
    pub z_hat: f64,
}

impl BetheSolution {
    /// Largest entrywise change between two solutions.
    pub fn distance(&self, other: &BetheSolution) -> f64 {
        self.h_hat
            .iter()
            .zip(&other.h_hat)
            .chain(self.h_dot.iter().zip(&other.h_dot))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn check_lambda(d: usize, lambda: f64) -> Result<()> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!("d = {d} must be at least 3")));
    }
    if !(lambda > crate::analytic::LAMBDA_MIN) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must exceed 1 + 1e-9")));
    }
    Ok(())
}

/// Symmetric solution built from the frozen fixed point.
pub fn symmetric_solution(d: usize, lambda: f64) -> Result<BetheSolution> {
    check_lambda(d, lambda)?;
    let fp = solve_q(d, lambda)?;
    Ok(symmetric_from_fixed_point(&fp))
}

pub fn symmetric_from_fixed_point(fp: &FrozenFixedPoint) -> BetheSolution {
    let (d, lambda) = (fp.d, fp.lambda);
    let q = fp.q();
    let shrink = 1.0 - 1.0 / lambda;
    let z_hat = 1.0 / (1.0 - q[1] * shrink / 3.0);
    let mut h_hat = [0.0; 9];
    let mut h_dot = [0.0; 9];
    for s in 0..9 {
        h_hat[s] = q[s % 3] / 3.0;
        let w = if s == S11 { 1.0 / lambda } else { 1.0 };
        h_dot[s] = w * q[s / 3] * z_hat / 3.0;
    }
    let ln_z_dot = 9f64.ln() - d as f64 * 3f64.ln() - z_hat.ln() - (-q[1] * shrink).ln_1p();
    BetheSolution { d, lambda, h_hat, h_dot, z_dot: ln_z_dot.exp(), ln_z_dot, z_hat }
}

/// One application of the variable recursions followed by the clause recursion.
pub fn bp_step(d: usize, lambda: f64, h: &BetheSolution) -> Result<BetheSolution> {
    check_lambda(d, lambda)?;
    let hh = &h.h_hat;
    if hh.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidParameter("message law has negative or non-finite entries".into()));
    }
    let lf = ln_factorials(d);
    let df = d as f64;
    let ln = |x: f64| x.ln();
    let one_z = ln(hh[S10] + hh[S1F]);
    let free_z = ln(hh[SF0] + hh[SFF]);
    let zero_z = ln(hh[S00] + hh[S0F]);
    let l01 = ln(hh[S01]);
    let lf1 = ln(hh[SF1]);
    let lnm1 = ln(df - 1.0);

    // Robust zeros: at least two further incoming ones among the d - 1 other edges.
    let tail = |kmin: usize| -> f64 {
        let terms: Vec<f64> = (kmin..d)
            .map(|k| lf[d - 1] - lf[k] - lf[d - 1 - k] + k as f64 * l01 + (d - 1 - k) as f64 * zero_z)
            .map(|t| if t.is_nan() { f64::NEG_INFINITY } else { t })
            .collect();
        log_sum_exp(&terms)
    };
    let pair_coef = lf[d - 1] - lf[2] - lf[d - 3];
    let suscept = pair_coef + 2.0 * lf1 + (df - 3.0) * zero_z;

    let mut l = [0.0; 9];
    l[S10] = lambda.ln() + (df - 1.0) * one_z;
    l[S1F] = l[S10];
    l[S11] = (df - 1.0) * free_z;
    l[SF0] = lnm1 + ln(hh[S11]) + (df - 2.0) * free_z;
    l[SFF] = l[SF0];
    l[SF1] = lnm1 + lf1 + (df - 2.0) * zero_z;
    l[S01] = tail(2);
    l[S00] = log_sum_exp(&[tail(3), suscept]);
    l[S0F] = l[S00];
    for x in l.iter_mut() {
        if x.is_nan() {
            *x = f64::NEG_INFINITY;
        }
    }
    let ln_z_dot = log_sum_exp(&l);
    if !ln_z_dot.is_finite() {
        return Err(Error::DegenerateNormalizer("variable normalizer"));
    }
    let mut h_dot = [0.0; 9];
    for s in 0..9 {
        h_dot[s] = (l[s] - ln_z_dot).exp();
    }
    let (h_hat, z_hat) = clause_step(lambda, &h_dot)?;
    Ok(BetheSolution { d, lambda, h_hat, h_dot, z_dot: ln_z_dot.exp(), ln_z_dot, z_hat })
}

/// Clause recursion `z_hat h_hat[s] = lambda^[s = 11] h_dot[R s]`.
pub fn clause_step(lambda: f64, h_dot: &[f64; 9]) -> Result<([f64; 9], f64)> {
    let z_hat = 1.0 + (lambda - 1.0) * h_dot[S11];
    if !(z_hat > 0.0 && z_hat.is_finite()) {
        return Err(Error::DegenerateNormalizer("clause normalizer"));
    }
    let mut h_hat = [0.0; 9];
    for s in 0..9 {
        let w = if s == S11 { lambda } else { 1.0 };
        h_hat[s] = w * h_dot[REFLECT[s]] / z_hat;
    }
    Ok((h_hat, z_hat))
}

pub fn bp_residual(d: usize, lambda: f64, h: &BetheSolution) -> Result<f64> {
    Ok(bp_step(d, lambda, h)?.distance(h))
}

#[derive(Clone, Debug, Serialize)]
pub struct BpRun {
    pub solution: BetheSolution,
    pub iterations: usize,
    pub converged: bool,
    /// Distance to `target` after each step, when a target was given.
    pub trace: Vec<f64>,
}

/// Iterates `h_hat <- (1 - damping) h_hat + damping step(h_hat)` until successive
/// iterates agree to `tol` or `target` is reached within `tol`.
pub fn bp_iterate(
    d: usize,
    lambda: f64,
    start: &BetheSolution,
    damping: f64,
    max_iter: usize,
    tol: f64,
    target: Option<&BetheSolution>,
) -> Result<BpRun> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping = {damping} must lie in (0, 1]")));
    }
    let mut h = start.clone();
    let mut trace = Vec::new();
    for it in 1..=max_iter {
        let next = match bp_step(d, lambda, &h) {
            Ok(n) => n,
            Err(_) => return Ok(BpRun { solution: h, iterations: it, converged: false, trace }),
        };
        let moved = next.distance(&h);
        let mut mixed = next;
        if damping < 1.0 {
            for s in 0..9 {
                mixed.h_hat[s] = (1.0 - damping) * h.h_hat[s] + damping * mixed.h_hat[s];
            }
        }
        h = mixed;
        let done = match target {
            Some(t) => {
                let dist = h.distance(t);
                trace.push(dist);
                dist <= tol
            }
            None => moved <= tol,
        };
        if done {
            return Ok(BpRun { solution: h, iterations: it, converged: true, trace });
        }
    }
    Ok(BpRun { solution: h, iterations: max_iter, converged: false, trace })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VarKind {
    /// Spin one; every incoming message is zero or free.
    One,
    /// Spin free; exactly one incoming one.
    Free,
    /// Spin zero with exactly two incoming ones.
    Susceptible,
    /// Spin zero with at least three incoming ones.
    Robust,
}

/// A symmetric family of variable configurations.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VarClass {
    pub kind: VarKind,
    /// Number of incoming ones.
    pub ones: usize,
    /// Number of edges carrying the first of the two remaining message spins.
    pub j: usize,
    pub ln_count: f64,
    /// Total probability of the family.
    pub prob: f64,
}

impl VarClass {
    /// Message-spin counts over the d incident edges.
    pub fn counts(&self, d: usize) -> [usize; 9] {
        let mut c = [0; 9];
        match self.kind {
            VarKind::One => {
                c[S10] = self.j;
                c[S1F] = d - self.j;
            }
            VarKind::Free => {
                c[S11] = 1;
                c[SF0] = self.j;
                c[SFF] = d - 1 - self.j;
            }
            VarKind::Susceptible => {
                c[SF1] = 2;
                c[S00] = self.j;
                c[S0F] = d - 2 - self.j;
            }
            VarKind::Robust => {
                c[S01] = self.ones;
                c[S00] = self.j;
                c[S0F] = d - self.ones - self.j;
            }
        }
        c
    }

    pub fn is_one(&self) -> bool {
        self.kind == VarKind::One
    }
}

/// Largest degree for which the class list is materialized.
pub const MAX_CLASS_DEGREE: usize = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalMeasure {
    pub d: usize,
    pub lambda: f64,
    #[serde(skip)]
    pub var_classes: Vec<VarClass>,
    /// Clause law over the pairs `(s, R s)`, indexed by `s`.
    pub clause: [f64; 9],
    pub edge: [f64; 9],
    pub ln_z_dot_bar: f64,
    pub ln_z_hat_bar: f64,
    pub ln_z_bar: f64,
    pub prob_one: f64,
    pub prob_free: f64,
    pub prob_susceptible: f64,
    pub prob_robust: f64,
    pub intensity: f64,
}

impl EmpiricalMeasure {
    /// Edge marginal seen from the variables, `d^-1` times the expected spin counts.
    pub fn variable_edge_marginal(&self) -> [f64; 9] {
        let mut m = [0.0; 9];
        for c in &self.var_classes {
            for (s, &n) in c.counts(self.d).iter().enumerate() {
                m[s] += c.prob * n as f64;
            }
        }
        m.map(|x| x / self.d as f64)
    }

    /// Edge marginal seen from the clauses, half the expected spin counts.
    pub fn clause_edge_marginal(&self) -> [f64; 9] {
        let mut m = [0.0; 9];
        for s in 0..9 {
            m[s] += 0.5 * self.clause[s];
            m[REFLECT[s]] += 0.5 * self.clause[s];
        }
        m
    }

    /// Intensity from the edge marginal: `h(10) + h(1f) + (d/2) h(11)`.
    pub fn edge_intensity(&self) -> f64 {
        self.edge[S10] + self.edge[S1F] + 0.5 * self.d as f64 * self.edge[S11]
    }

    /// Generic group form with factor weights taken at `lambda`.
    pub fn factor_measure(&self, lambda: f64) -> FactorMeasure {
        let ll = lambda.ln();
        let variables = self
            .var_classes
            .iter()
            .map(|c| Group { prob: c.prob, ln_count: c.ln_count, ln_psi: if c.is_one() { ll } else { 0.0 } })
            .collect();
        let clauses = (0..9)
            .map(|s| Group { prob: self.clause[s], ln_count: 0.0, ln_psi: if s == S11 { ll } else { 0.0 } })
            .collect();
        FactorMeasure { d: self.d, variables, clauses, edges: self.edge.to_vec() }
    }
}

/// Measures induced by a fixed point of the recursions, aggregated over symmetric classes.
pub fn empirical_measure(d: usize, lambda: f64, h: &BetheSolution) -> Result<EmpiricalMeasure> {
    check_lambda(d, lambda)?;
    if d > MAX_CLASS_DEGREE {
        return Err(Error::TooLarge { n: d, max: MAX_CLASS_DEGREE });
    }
    let res = bp_residual(d, lambda, h)?;
    if !(res <= 1e-9) {
        return Err(Error::InvalidParameter(format!("input is not a fixed point (residual {res:e})")));
    }
    let lf = ln_factorials(d);
    let lh = h.h_hat.map(f64::ln);
    let ll = lambda.ln();
    let mut classes = Vec::new();
    let mut push = |kind, ones, j| classes.push(VarClass { kind, ones, j, ln_count: 0.0, prob: 0.0 });
    for j in 0..=d {
        push(VarKind::One, 0, j);
    }
    for j in 0..d {
        push(VarKind::Free, 1, j);
    }
    for j in 0..=d - 2 {
        push(VarKind::Susceptible, 2, j);
    }
    for k in 3..=d {
        for j in 0..=d - k {
            push(VarKind::Robust, k, j);
        }
    }
    let mut logw = Vec::with_capacity(classes.len());
    for c in classes.iter_mut() {
        let counts = c.counts(d);
        c.ln_count = lf[d] - counts.iter().map(|&n| lf[n]).sum::<f64>();
        let mut w = c.ln_count + if c.is_one() { ll } else { 0.0 };
        for (s, &n) in counts.iter().enumerate() {
            if n > 0 {
                w += n as f64 * lh[s];
            }
        }
        logw.push(if w.is_nan() { f64::NEG_INFINITY } else { w });
    }
    let ln_z_dot_bar = log_sum_exp(&logw);
    if !ln_z_dot_bar.is_finite() {
        return Err(Error::DegenerateNormalizer("variable measure"));
    }
    let mut by_kind = [0.0; 4];
    for (c, w) in classes.iter_mut().zip(&logw) {
        c.prob = (w - ln_z_dot_bar).exp();
        by_kind[c.kind as usize] += c.prob;
    }

    let mut clause = [0.0; 9];
    for s in 0..9 {
        clause[s] = if s == S11 { lambda } else { 1.0 } * h.h_dot[s] * h.h_dot[REFLECT[s]];
    }
    let z_hat_bar: f64 = clause.iter().sum();
    clause = clause.map(|x| x / z_hat_bar);

    let mut edge = [0.0; 9];
    for s in 0..9 {
        edge[s] = h.h_hat[s] * h.h_dot[s];
    }
    let z_bar: f64 = edge.iter().sum();
    edge = edge.map(|x| x / z_bar);

    let [one, free, sus, rob] = by_kind;
    Ok(EmpiricalMeasure {
        d,
        lambda,
        var_classes: classes,
        clause,
        edge,
        ln_z_dot_bar,
        ln_z_hat_bar: z_hat_bar.ln(),
        ln_z_bar: z_bar.ln(),
        prob_one: one,
        prob_free: free,
        prob_susceptible: sus,
        prob_robust: rob,
        intensity: one + 0.5 * free,
    })
}

/// A family of equally weighted configurations of one factor.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Group {
    pub prob: f64,
    pub ln_count: f64,
    pub ln_psi: f64,
}

/// Variable, clause and edge laws in label-free form.
#[derive(Clone, Debug, Serialize)]
pub struct FactorMeasure {
    pub d: usize,
    pub variables: Vec<Group>,
    pub clauses: Vec<Group>,
    pub edges: Vec<f64>,
}

fn group_sum(groups: &[Group]) -> Result<f64> {
    let mut acc = 0.0;
    for g in groups {
        if g.prob <= 0.0 {
            continue;
        }
        if g.ln_psi == f64::NEG_INFINITY {
            return Err(Error::Infeasible("measure charges a configuration of zero weight".into()));
        }
        acc += g.prob * (g.ln_psi + g.ln_count - g.prob.ln());
    }
    Ok(acc)
}

fn product_groups(a: &[Group], b: &[Group]) -> Vec<Group> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(Group { prob: x.prob * y.prob, ln_count: x.ln_count + y.ln_count, ln_psi: x.ln_psi + y.ln_psi });
        }
    }
    out
}

impl FactorMeasure {
    /// Bethe functional: variable and clause entropy-plus-energy terms minus the edge correction.
    pub fn bethe_functional(&self) -> Result<f64> {
        let v = group_sum(&self.variables)?;
        let c = group_sum(&self.clauses)?;
        let e: f64 = self.edges.iter().map(|&x| crate::numeric::xlogx(x)).sum();
        let df = self.d as f64;
        Ok(v + 0.5 * df * c + df * e)
    }

    /// Law of two independent copies.
    pub fn product(&self, other: &FactorMeasure) -> Result<FactorMeasure> {
        if self.d != other.d {
            return Err(Error::InvalidParameter("product of measures with different degrees".into()));
        }
        let edges = self.edges.iter().flat_map(|&x| other.edges.iter().map(move |&y| x * y)).collect();
        Ok(FactorMeasure {
            d: self.d,
            variables: product_groups(&self.variables, &other.variables),
            clauses: product_groups(&self.clauses, &other.clauses),
            edges,
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FreeEnergy {
    /// Direct evaluation of the functional over classes.
    pub long: f64,
    /// `ln z_dot_bar + (d/2) ln z_hat_bar - d ln z_bar`.
    pub shortcut: f64,
}

pub fn bethe_free_energy(d: usize, measure: &EmpiricalMeasure, lambda: f64) -> Result<FreeEnergy> {
    if measure.d != d {
        return Err(Error::InvalidParameter(format!("measure has d = {}, expected {d}", measure.d)));
    }
    let long = measure.factor_measure(lambda).bethe_functional()?;
    let df = d as f64;
    let shortcut = measure.ln_z_dot_bar + 0.5 * df * measure.ln_z_hat_bar - df * measure.ln_z_bar;
    Ok(FreeEnergy { long, shortcut })
}

/// Frozen exponent at fugacity `lambda` through the message model:
/// the functional at the symmetric point minus intensity times `ln lambda`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct VariationalPoint {
    pub d: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub phi_lambda: f64,
    pub phi_lambda_shortcut: f64,
    pub phi: f64,
}

pub fn variational_phi(d: usize, lambda: f64) -> Result<VariationalPoint> {
    let h = symmetric_solution(d, lambda)?;
    let m = empirical_measure(d, lambda, &h)?;
    let fe = bethe_free_energy(d, &m, lambda)?;
    Ok(VariationalPoint {
        d,
        lambda,
        alpha: m.intensity,
        phi_lambda: fe.long,
        phi_lambda_shortcut: fe.shortcut,
        phi: fe.long - m.intensity * lambda.ln(),
    })
}

/// Pair laws over `{0,1,f}^2`, index `3 a + b` with `a` the first copy.
pub type PairLaw = [f64; 9];

/// Fixed points of both copies and their derived constants.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairSetup {
    pub d: usize,
    pub lambda: [f64; 2],
    pub q: [[f64; 3]; 2],
    /// `1 + sum_i (lambda_i - 1)(1 - q_i)^(d-1)`.
    pub base: f64,
}

impl PairSetup {
    pub fn new(d: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        check_lambda(d, lambda1)?;
        check_lambda(d, lambda2)?;
        let a = solve_q(d, lambda1)?;
        let b = solve_q(d, lambda2)?;
        let df = d as f64;
        let base = 1.0 + (lambda1 - 1.0) * pow1m(a.q_one, df - 1.0) + (lambda2 - 1.0) * pow1m(b.q_one, df - 1.0);
        Ok(Self { d, lambda: [lambda1, lambda2], q: [a.q(), b.q()], base })
    }

    /// Product of the two single-copy laws.
    pub fn product(&self) -> PairLaw {
        let mut p = [0.0; 9];
        for a in 0..3 {
            for b in 0..3 {
                p[3 * a + b] = self.q[0][a] * self.q[1][b];
            }
        }
        p
    }

    /// Completes a law from its four free coordinates `(11, 1f, f1, ff)` and the pinned marginals.
    pub fn complete(&self, q11: f64, q1f: f64, qf1: f64, qff: f64) -> PairLaw {
        let [r, c] = self.q;
        let mut p = [0.0; 9];
        p[S11] = q11;
        p[S1F] = q1f;
        p[SF1] = qf1;
        p[SFF] = qff;
        p[S10] = r[1] - q11 - q1f;
        p[SF0] = r[2] - qf1 - qff;
        p[S01] = c[1] - q11 - qf1;
        p[S0F] = c[2] - q1f - qff;
        p[S00] = 1.0 - p[1..].iter().sum::<f64>();
        p
    }

    /// One undamped application of the pair recursions.
    pub fn step(&self, p: &PairLaw) -> PairLaw {
        let df = self.d as f64;
        let [l1, l2] = self.lambda;
        let q11 = p[S11];
        let one_z = self.q[0][1] - q11;
        let z_one = self.q[1][1] - q11;
        let w = 1.0 - self.q[0][1] - self.q[1][1] + q11;
        let z = self.base + (l1 - 1.0) * (l2 - 1.0) * w.powf(df - 1.0);
        let n11 = l1 * l2 * w.powf(df - 1.0);
        let n1f = l1 * (df - 1.0) * z_one * w.powf(df - 2.0);
        let nf1 = l2 * (df - 1.0) * one_z * w.powf(df - 2.0);
        let nff = (df - 1.0) * q11 * w.powf(df - 2.0) + (df - 1.0) * (df - 2.0) * one_z * z_one * w.powf(df - 3.0);
        self.complete(n11 / z, n1f / z, nf1 / z, nff / z)
    }

    pub fn residual(&self, p: &PairLaw) -> f64 {
        let t = self.step(p);
        t.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// The scalar function whose roots are the possible values of the 11 entry.
    pub fn uniqueness_f(&self, x: f64) -> f64 {
        let df = self.d as f64;
        let [l1, l2] = self.lambda;
        let w = self.w(x);
        x * self.base - w.powf(df - 1.0) * (l1 * l2 - x * (l1 - 1.0) * (l2 - 1.0))
    }

    pub fn uniqueness_f_prime(&self, x: f64) -> f64 {
        let df = self.d as f64;
        let [l1, l2] = self.lambda;
        let w = self.w(x);
        let m = (l1 - 1.0) * (l2 - 1.0);
        self.base - w.powf(df - 2.0) * ((df - 1.0) * (l1 * l2 - x * m) - w * m)
    }

    fn w(&self, x: f64) -> f64 {
        1.0 - self.q[0][1] - self.q[1][1] + x
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairSolution {
    pub law: PairLaw,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped iteration of the pair recursions from `init`, marginals pinned.
pub fn pair_solve(d: usize, lambda1: f64, lambda2: f64, init: &PairLaw) -> Result<PairSolution> {
    let setup = PairSetup::new(d, lambda1, lambda2)?;
    let s: f64 = init.iter().sum();
    if (s - 1.0).abs() > 1e-9 || init.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParameter("initial pair law is not a probability vector".into()));
    }
    let mut p = setup.complete(init[S11], init[S1F], init[SF1], init[SFF]);
    if p.iter().zip(init).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::InvalidParameter("initial pair law has the wrong marginals".into()));
    }
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    for it in 0..10_000 {
        let res = setup.residual(&p);
        if res <= 1e-14 {
            return Ok(PairSolution { law: p, residual: res, iterations: it });
        }
        if res < best {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 100 {
                break;
            }
        }
        let t = setup.step(&p);
        for s in 0..9 {
            p[s] = 0.5 * (p[s] + t[s]);
        }
    }
    let res = setup.residual(&p);
    if res <= 1e-12 {
        return Ok(PairSolution { law: p, residual: res, iterations: 10_000 });
    }
    Err(Error::Divergence(format!("pair recursions stalled at residual {res:e}")))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairScan {
    pub x_max: f64,
    pub points: usize,
    pub sign_changes: usize,
    /// Grid locations just before each sign change.
    pub crossings: Vec<f64>,
    /// The root predicted by the product law.
    pub product_root: f64,
    pub f_prime_min: f64,
    pub f_prime_max: f64,
}

/// Sign changes of the uniqueness function and the range of its derivative on `[0, x_max]`.
pub fn pair_uniqueness_scan(d: usize, lambda1: f64, lambda2: f64, x_max: f64, points: usize) -> Result<PairScan> {
    if points < 2 {
        return Err(Error::InvalidParameter("scan needs at least two points".into()));
    }
    let setup = PairSetup::new(d, lambda1, lambda2)?;
    let mut crossings = Vec::new();
    let mut prev = setup.uniqueness_f(0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut prev_x = 0.0;
    for i in 0..points {
        let x = x_max * i as f64 / (points - 1) as f64;
        let fx = setup.uniqueness_f(x);
        if i > 0 && fx != 0.0 && prev != 0.0 && fx.signum() != prev.signum() {
            crossings.push(prev_x);
        }
        if fx != 0.0 {
            prev = fx;
            prev_x = x;
        }
        let fp = setup.uniqueness_f_prime(x);
        lo = lo.min(fp);
        hi = hi.max(fp);
    }
    Ok(PairScan {
        x_max,
        points,
        sign_changes: crossings.len(),
        crossings,
        product_root: setup.q[0][1] * setup.q[1][1],
        f_prime_min: lo,
        f_prime_max: hi,
    })
}
