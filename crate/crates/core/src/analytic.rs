//! Scalar formulas: first-moment exponents, Lambert W, the frozen fixed point,
//! the explicit frozen exponent and the thresholds derived from it.
//!
//! Logs are natural throughout. Powers like `(1 - q)^(d - 1)` go through
//! `exp((d - 1) log1p(-q))` so that `d` can be large.

use serde::Serialize;

use crate::numeric::{bisect, entropy2, golden_min, pow1m};
use crate::{Error, Result};

/// Smallest degree for which the threshold routines claim their regime.
pub const D_MIN_CONFIG: usize = 20;

fn check_d(d: usize, min: usize) -> Result<f64> {
    if d < min {
        return Err(Error::InvalidParameter(format!("d = {d} must be at least {min}")));
    }
    Ok(d as f64)
}

fn log_d_over_d(d: f64) -> f64 {
    d.ln() / d
}

/// Principal branch of the Lambert W function by Halley iteration.
pub fn lambert_w(z: f64) -> Result<f64> {
    let branch = -(-1f64).exp();
    if !(z >= branch) || !z.is_finite() {
        return Err(Error::InvalidParameter(format!("lambert_w needs z >= -1/e, got {z}")));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == branch {
        return Ok(-1.0);
    }
    let mut w = if z < -0.25 {
        -1.0 + (2.0 * (1.0 + std::f64::consts::E * z)).max(0.0).sqrt()
    } else if z < 3.0 {
        z.ln_1p() * 0.8
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(1e-300);
        w = next;
        if done {
            break;
        }
    }
    Ok(w)
}

/// Region of the intensity and of `q = x log(d)/d` on which the explicit
/// frozen exponent is proven to apply.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModelRegime {
    pub d: usize,
    pub alpha_lbd: f64,
    pub alpha_ubd: f64,
    pub beta_max: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl ModelRegime {
    pub fn new(d: usize) -> Self {
        let df = d as f64;
        let l = log_d_over_d(df);
        Self {
            d,
            alpha_lbd: 5.0 / 3.0 * l,
            alpha_ubd: 2.0 * l,
            beta_max: df.powf(-1.5),
            x_lo: 1.6,
            x_hi: 3.0,
        }
    }

    pub fn q_lo(&self) -> f64 {
        self.x_lo * log_d_over_d(self.d as f64)
    }

    pub fn q_hi(&self) -> f64 {
        self.x_hi * log_d_over_d(self.d as f64)
    }

    pub fn contains_alpha(&self, alpha: f64) -> bool {
        alpha >= self.alpha_lbd && alpha <= self.alpha_ubd
    }
}

/// `(1 - a) log(1 - a)` with the value 0 at `a = 1`.
fn one_minus_log(a: f64) -> f64 {
    if a >= 1.0 {
        0.0
    } else {
        (1.0 - a) * (-a).ln_1p()
    }
}

/// First-moment exponent of independent sets of density `alpha`.
pub fn phi_indep(d: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1/2]")));
    }
    let df = d as f64;
    Ok(entropy2(alpha) - df * (0.5 * one_minus_log(2.0 * alpha) - one_minus_log(alpha)))
}

/// Derivative of [`phi_indep`] in `alpha`.
pub fn phi_indep_derivative(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    ((1.0 - alpha) / alpha).ln() - df * ((1.0 - alpha).ln() - (1.0 - 2.0 * alpha).ln())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AlphaFm {
    pub alpha_fm: f64,
    /// `(2/(d+1)) W((d+1) e / 2)`.
    pub alpha_fm_tilde: f64,
    /// Location of the maximum of the exponent.
    pub alpha_max: f64,
    pub residual: f64,
}

/// Zero of the independent-set exponent above its maximum.
pub fn alpha_fm(d: usize) -> Result<AlphaFm> {
    let df = check_d(d, 3)?;
    let lo = 1e-300f64.max(1.0 / (df * df * df * 16.0));
    let alpha_max = bisect(|a| phi_indep_derivative(d, a), lo, 0.5 - 1e-15, "phi_indep derivative")?;
    let a = bisect(|a| phi_indep(d, a).unwrap(), alpha_max, 0.5, "phi_indep")?;
    let tilde = 2.0 / (df + 1.0) * lambert_w((df + 1.0) * std::f64::consts::E / 2.0)?;
    Ok(AlphaFm { alpha_fm: a, alpha_fm_tilde: tilde, alpha_max, residual: phi_indep(d, a)?.abs() })
}

/// Solution of the frozen-model tree recursions at fugacity `lambda`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FrozenFixedPoint {
    pub d: usize,
    pub lambda: f64,
    pub q_one: f64,
    pub q_free: f64,
    pub q_zero: f64,
}

impl FrozenFixedPoint {
    /// Residuals of the two recursion lines.
    pub fn residuals(&self) -> (f64, f64) {
        let df = self.d as f64;
        let q = self.q_one;
        let p = pow1m(q, df - 1.0);
        let den = (self.lambda - 1.0) * p + 1.0;
        let r1 = q - self.lambda * p / den;
        let r2 = self.q_free - (df - 1.0) * q * pow1m(q, df - 2.0) / den;
        (r1.abs(), r2.abs())
    }

    pub fn residual(&self) -> f64 {
        let (a, b) = self.residuals();
        a.max(b)
    }

    /// The probabilities indexed by spin code 0 = zero, 1 = one, 2 = free.
    pub fn q(&self) -> [f64; 3] {
        [self.q_zero, self.q_one, self.q_free]
    }
}

/// `(1 - q)^(d-1) (lambda + q - lambda q) - q`, decreasing in `q`.
pub fn frozen_f(d: usize, lambda: f64, q: f64) -> f64 {
    pow1m(q, d as f64 - 1.0) * (lambda + q - lambda * q) - q
}

pub fn fixed_point_from_q(d: usize, lambda: f64, q: f64) -> FrozenFixedPoint {
    let df = d as f64;
    let q_free = (df - 1.0) * q * q / (lambda * (1.0 - q));
    FrozenFixedPoint { d, lambda, q_one: q, q_free, q_zero: 1.0 - q - q_free }
}

/// Minimal fugacity accepted by the solvers.
pub const LAMBDA_MIN: f64 = 1.0 + 1e-9;

pub fn solve_q(d: usize, lambda: f64) -> Result<FrozenFixedPoint> {
    check_d(d, 2)?;
    if !(lambda > LAMBDA_MIN) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must exceed 1 + 1e-9")));
    }
    let q = bisect(|q| frozen_f(d, lambda, q), 0.0, 1.0, "frozen recursion")?;
    Ok(fixed_point_from_q(d, lambda, q))
}

/// Fugacity for which `q` is the fixed point.
pub fn lambda_of_q(d: usize, q: f64) -> f64 {
    ln_lambda_of_q(d, q).exp()
}

/// `log` of [`lambda_of_q`], usable when the fugacity overflows.
pub fn ln_lambda_of_q(d: usize, q: f64) -> f64 {
    let df = d as f64;
    let one_minus_p = -((df - 1.0) * (-q).ln_1p()).exp_m1();
    q.ln() + one_minus_p.ln() - df * (-q).ln_1p()
}

/// Intensity as a function of the fixed point `q`.
pub fn alpha_of_q(d: usize, q: f64) -> f64 {
    let df = d as f64;
    let p = pow1m(q, df - 1.0);
    q * (1.0 + (df / 2.0 - 1.0) * p) / (1.0 + q - p)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QSolution {
    pub q: f64,
    pub lambda: f64,
    pub ln_lambda: f64,
    /// `q` in units of `log(d)/d`.
    pub x: f64,
    pub residual: f64,
}

fn q_solution(d: usize, alpha: f64, q: f64) -> QSolution {
    let ln_lambda = ln_lambda_of_q(d, q);
    QSolution {
        q,
        lambda: ln_lambda.exp(),
        ln_lambda,
        x: q / log_d_over_d(d as f64),
        residual: (alpha_of_q(d, q) - alpha).abs(),
    }
}

/// Solves `alpha = alpha(q)` with `q` in the proven bracket `[1.6, 3] log(d)/d`.
pub fn q_of_alpha(d: usize, alpha: f64) -> Result<QSolution> {
    check_d(d, 3)?;
    let r = ModelRegime::new(d);
    let q = bisect(|q| alpha_of_q(d, q) - alpha, r.q_lo(), r.q_hi(), "alpha(q) on the proven bracket")?;
    Ok(q_solution(d, alpha, q))
}

/// Minimizer of `alpha(q)`; the map is increasing to its right.
pub fn q_turn(d: usize) -> f64 {
    golden_min(|q| alpha_of_q(d, q), 1e-300, 1.0 - 1e-12)
}

/// Solves `alpha = alpha(q)` on the whole increasing branch `[q_turn, 1)`.
pub fn q_of_alpha_branch(d: usize, alpha: f64) -> Result<QSolution> {
    check_d(d, 3)?;
    let q = bisect(|q| alpha_of_q(d, q) - alpha, q_turn(d), 1.0 - 1e-15, "alpha(q) on the increasing branch")?;
    Ok(q_solution(d, alpha, q))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PhiStar {
    pub alpha: f64,
    pub phi: f64,
    pub q: f64,
    pub lambda: f64,
    pub ln_lambda: f64,
    pub residual: f64,
}

/// Explicit frozen exponent at the fixed point `q`.
pub fn phi_star_at_q(d: usize, q: f64) -> PhiStar {
    let df = d as f64;
    let ln_lambda = ln_lambda_of_q(d, q);
    let inv = (-ln_lambda).exp();
    let alpha = alpha_of_q(d, q);
    let phi = -(-q * (1.0 - inv)).ln_1p() - (df / 2.0 - 1.0) * (-q * q * (1.0 - inv)).ln_1p() - alpha * ln_lambda;
    PhiStar { alpha, phi, q, lambda: ln_lambda.exp(), ln_lambda, residual: 0.0 }
}

fn phi_star_from(d: usize, alpha: f64, s: QSolution) -> PhiStar {
    let mut p = phi_star_at_q(d, s.q);
    // Evaluate the intensity term at the requested alpha.
    p.phi += (p.alpha - alpha) * p.ln_lambda;
    p.alpha = alpha;
    p.residual = s.residual;
    p
}

/// Explicit frozen exponent with `q` restricted to the proven bracket.
pub fn phi_star(d: usize, alpha: f64) -> Result<PhiStar> {
    Ok(phi_star_from(d, alpha, q_of_alpha(d, alpha)?))
}

/// Explicit frozen exponent with `q` on the full increasing branch.
pub fn phi_star_branch(d: usize, alpha: f64) -> Result<PhiStar> {
    Ok(phi_star_from(d, alpha, q_of_alpha_branch(d, alpha)?))
}

/// Central-difference derivative, refined by one Richardson step.
pub fn richardson_derivative<F: FnMut(f64) -> f64>(mut f: F, x: f64, h: f64) -> f64 {
    let mut central = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    let d1 = central(h);
    let d2 = central(h / 2.0);
    (4.0 * d2 - d1) / 3.0
}

/// Plain central difference of the frozen exponent on the branch.
pub fn phi_star_derivative_fd(d: usize, alpha: f64, h: f64) -> Result<f64> {
    let hi = phi_star_branch(d, alpha + h)?.phi;
    let lo = phi_star_branch(d, alpha - h)?.phi;
    Ok((hi - lo) / (2.0 * h))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdSummary {
    pub d: usize,
    pub alpha_fm: f64,
    pub alpha_fm_tilde: f64,
    pub alpha_star: f64,
    pub lambda_star: f64,
    pub q_star: f64,
    /// `q_star` in units of `log(d)/d`.
    pub x_star: f64,
    pub c_star: f64,
    /// `-1 / (2 phi_star'(alpha_star))` with a finite-difference derivative.
    pub c_star_fd: f64,
    /// True when `alpha_star` lies in `[alpha_lbd, alpha_ubd]`, `q_star` in the
    /// proven bracket and `d >= D_MIN_CONFIG`.
    pub in_proven_regime: bool,
    pub phi_star_residual: f64,
    pub mis_location: Vec<(u64, f64)>,
}

impl ThresholdSummary {
    /// `n alpha_star - c_star log n`.
    pub fn mis_location_at(&self, n: u64) -> f64 {
        n as f64 * self.alpha_star - self.c_star * (n as f64).ln()
    }
}

/// Zero of the frozen exponent.
///
/// The proven window is tried first. When the zero lies outside it, the search
/// continues along the increasing branch of `alpha(q)` and the summary is
/// marked as outside the proven regime.
pub fn alpha_star(d: usize) -> Result<(f64, bool)> {
    check_d(d, 3)?;
    let r = ModelRegime::new(d);
    let proven = match (phi_star(d, r.alpha_lbd), phi_star(d, r.alpha_ubd)) {
        (Ok(a), Ok(b)) if a.phi > 0.0 && b.phi < 0.0 => {
            Some(bisect(|a| phi_star(d, a).map(|p| p.phi).unwrap_or(f64::NAN), r.alpha_lbd, r.alpha_ubd, "phi_star")?)
        }
        _ => None,
    };
    if let Some(a) = proven {
        return Ok((a, d >= D_MIN_CONFIG));
    }
    let qt = q_turn(d);
    let lo = alpha_of_q(d, qt) * (1.0 + 1e-12);
    let f = |a: f64| phi_star_branch(d, a).map(|p| p.phi).unwrap_or(f64::NAN);
    let top = 0.5 - 1e-9;
    let mut hi = r.alpha_ubd.max(lo * 1.01).min(top);
    while f(hi) > 0.0 && hi < top {
        hi = (hi * 1.25).min(top);
    }
    let a = bisect(f, lo, hi, "phi_star on the increasing branch")?;
    Ok((a, false))
}

pub fn threshold_summary(d: usize, n_values: &[u64]) -> Result<ThresholdSummary> {
    let fm = alpha_fm(d)?;
    let (a, proven) = alpha_star(d)?;
    let p = phi_star_branch(d, a)?;
    let r = ModelRegime::new(d);
    let x = p.q / log_d_over_d(d as f64);
    let in_regime = proven && r.contains_alpha(a) && x >= r.x_lo && x <= r.x_hi;
    let c_star = 1.0 / (2.0 * p.ln_lambda);
    let h = a * 1e-4;
    let deriv = richardson_derivative(|t| phi_star_branch(d, t).map(|p| p.phi).unwrap_or(f64::NAN), a, h);
    let mut s = ThresholdSummary {
        d,
        alpha_fm: fm.alpha_fm,
        alpha_fm_tilde: fm.alpha_fm_tilde,
        alpha_star: a,
        lambda_star: p.lambda,
        q_star: p.q,
        x_star: x,
        c_star,
        c_star_fd: -1.0 / (2.0 * deriv),
        in_proven_regime: in_regime,
        phi_star_residual: p.phi.abs(),
        mis_location: Vec::new(),
    };
    s.mis_location = n_values.iter().map(|&n| (n, s.mis_location_at(n))).collect();
    Ok(s)
}

/// `(alpha_fm - alpha_star) (2d / (e log d))^2`.
pub fn threshold_gap_ratio(d: usize) -> Result<f64> {
    let fm = alpha_fm(d)?;
    let (a, _) = alpha_star(d)?;
    let df = d as f64;
    let scale = 2.0 * df / (std::f64::consts::E * df.ln());
    Ok((fm.alpha_fm - a) * scale * scale)
}

/// Hard-core variational form of the independent-set exponent.
pub fn hardcore_phi(d: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1/2)")));
    }
    let df = d as f64;
    let q = alpha / (1.0 - alpha);
    let ln_lam = q.ln() - df * (-q).ln_1p();
    let lam_term = (ln_lam + df * (-q).ln_1p()).exp();
    Ok(lam_term.ln_1p() - df / 2.0 * (-q * q).ln_1p() - alpha * ln_lam)
}

/// Residual of the hard-core tree recursion at the point used by [`hardcore_phi`].
pub fn hardcore_residual(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    let q = alpha / (1.0 - alpha);
    let ln_lam = q.ln() - df * (-q).ln_1p();
    let t = (ln_lam + (df - 1.0) * (-q).ln_1p()).exp();
    (q - t / (t + 1.0)).abs()
}

/// Exponent of the expected number of pairs of independent sets of density
/// `alpha` with overlap `rho`, relative to the first moment.
pub fn overlap_rate(d: usize, alpha: f64, rho: f64) -> Result<f64> {
    if !(0.0 <= rho && rho <= alpha && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("need 0 <= rho <= alpha < 1/2, got rho = {rho}, alpha = {alpha}")));
    }
    let df = d as f64;
    Ok(alpha * entropy2(rho / alpha) + (1.0 - alpha) * entropy2((alpha - rho) / (1.0 - alpha)) - df / 2.0 * alpha * alpha
        + df / 2.0 * rho * rho)
}

pub fn overlap_rate_derivative(d: usize, alpha: f64, rho: f64) -> f64 {
    2.0 * (alpha - rho).ln() - rho.ln() - (1.0 - 2.0 * alpha + rho).ln() + d as f64 * rho
}

pub fn overlap_rate_second_derivative(d: usize, alpha: f64, rho: f64) -> f64 {
    d as f64 - 2.0 / (alpha - rho) - 1.0 / rho - 1.0 / (1.0 - 2.0 * alpha + rho)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OverlapMinimizer {
    pub rho: f64,
    /// False when the derivative keeps one sign and the minimum sits at an end.
    pub interior: bool,
    pub lo: f64,
    pub hi: f64,
}

/// Minimizer of the overlap rate on `[2/d, alpha - 3/d]` by Newton steps
/// safeguarded with bisection.
pub fn overlap_minimizer(d: usize, alpha: f64) -> Result<OverlapMinimizer> {
    let df = d as f64;
    if alpha <= 5.0 / df || alpha >= 0.5 {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} leaves an empty interval at d = {d}")));
    }
    let (lo, hi) = (2.0 / df, alpha - 3.0 / df);
    let g = |r: f64| overlap_rate_derivative(d, alpha, r);
    let (glo, ghi) = (g(lo), g(hi));
    if glo >= 0.0 {
        return Ok(OverlapMinimizer { rho: lo, interior: false, lo, hi });
    }
    if ghi <= 0.0 {
        return Ok(OverlapMinimizer { rho: hi, interior: false, lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let gx = g(x);
        if gx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let h2 = overlap_rate_second_derivative(d, alpha, x);
        let mut next = x - gx / h2;
        if !(next > a && next < b) || !next.is_finite() {
            next = 0.5 * (a + b);
        }
        if (next - x).abs() <= 1e-16 * x {
            x = next;
            break;
        }
        x = next;
    }
    Ok(OverlapMinimizer { rho: x, interior: true, lo, hi })
}
