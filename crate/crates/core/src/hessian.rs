//! Edge transition matrix at the symmetric point and the definiteness check.

use nalgebra::{DMatrix, DVector, SMatrix};
use serde::Serialize;

use crate::analytic::FrozenFixedPoint;
use crate::bethe::{EmpiricalMeasure, REFLECT, S00, S01, S0F, S10, S11, S1F, SF0, SF1, SFF};
use crate::{Error, Result};

pub type Matrix9 = SMatrix<f64, 9, 9>;

pub const BLOCK_ONE: [usize; 2] = [S10, S1F];
pub const BLOCK_FREE: [usize; 3] = [S11, SF0, SFF];
pub const BLOCK_ZERO: [usize; 4] = [SF1, S01, S00, S0F];

#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub d: usize,
    pub entries: Matrix9,
    pub epsilon: f64,
    /// Stationary edge law `h(ab) ∝ q_a q_b lambda^-[ab = 11]`.
    pub edge: [f64; 9],
    pub fixed_point: FrozenFixedPoint,
}

/// Edge law of the symmetric point.
pub fn edge_law(fp: &FrozenFixedPoint) -> [f64; 9] {
    let q = fp.q();
    let mut h = [0.0; 9];
    for s in 0..9 {
        h[s] = q[s / 3] * q[s % 3] * if s == S11 { 1.0 / fp.lambda } else { 1.0 };
    }
    let t: f64 = h.iter().sum();
    h.map(|x| x / t)
}

/// The vector with `d - 1` at 11, `-1` at f0 and ff.
pub fn x_bar(d: usize) -> [f64; 9] {
    let mut x = [0.0; 9];
    x[S11] = d as f64 - 1.0;
    x[SF0] = -1.0;
    x[SFF] = -1.0;
    x
}

pub fn build_m(d: usize, fp: &FrozenFixedPoint) -> TransitionMatrix {
    let df = d as f64;
    let [q0, q1, qf] = fp.q();
    let a = q0 / (1.0 - q1);
    let b = qf / (1.0 - q1);
    let r = (df - 2.0) / (df - 1.0);
    let eps = r * q1 * qf / ((1.0 - q1) * q0);
    let mut m = Matrix9::zeros();
    let mut set = |rows: &[usize], cols: &[usize], vals: &[&[f64]]| {
        for (i, &ri) in rows.iter().enumerate() {
            for (j, &cj) in cols.iter().enumerate() {
                m[(ri, cj)] = vals[i][j];
            }
        }
    };
    set(&BLOCK_ONE, &BLOCK_ONE, &[&[a, b], &[a, b]]);
    let inv = 1.0 / (df - 1.0);
    set(&BLOCK_FREE, &BLOCK_FREE, &[&[0.0, a, b], &[inv, r * a, r * b], &[inv, r * a, r * b]]);
    let c = 1.0 - eps;
    set(
        &BLOCK_ZERO,
        &BLOCK_ZERO,
        &[
            &[inv, 0.0, r * a, r * b],
            &[0.0, eps + q1 * c, q0 * c, qf * c],
            &[eps, q1 * c, q0 * c, qf * c],
            &[eps, q1 * c, q0 * c, qf * c],
        ],
    );
    TransitionMatrix { d, entries: m, epsilon: eps, edge: edge_law(fp), fixed_point: *fp }
}

/// Transition matrix from the variable classes: the law of the spin on a second,
/// uniformly chosen edge given the spin on the first.
pub fn m_from_measure(measure: &EmpiricalMeasure) -> Matrix9 {
    let d = measure.d;
    let mut joint = Matrix9::zeros();
    for c in &measure.var_classes {
        let n = c.counts(d);
        for s in 0..9 {
            if n[s] == 0 {
                continue;
            }
            for t in 0..9 {
                let other = if s == t { n[t].saturating_sub(1) } else { n[t] };
                joint[(s, t)] += c.prob * (n[s] * other) as f64;
            }
        }
    }
    let norm = (d * (d - 1)) as f64;
    let mut m = Matrix9::zeros();
    for s in 0..9 {
        let hs = measure.edge[s];
        if hs > 0.0 {
            for t in 0..9 {
                m[(s, t)] = joint[(s, t)] / norm / hs;
            }
        }
    }
    m
}

impl TransitionMatrix {
    pub fn row_sum_error(&self) -> f64 {
        (0..9).map(|i| (self.entries.row(i).sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest `|h(s) M(s,t) - h(t) M(t,s)|` against a given edge law.
    pub fn reversibility_error(&self, h: &[f64; 9]) -> f64 {
        let mut e: f64 = 0.0;
        for s in 0..9 {
            for t in 0..9 {
                e = e.max((h[s] * self.entries[(s, t)] - h[t] * self.entries[(t, s)]).abs());
            }
        }
        e
    }

    /// `H^{1/2} M H^{-1/2}` restricted to a block.
    pub fn symmetrized_block(&self, block: &[usize]) -> DMatrix<f64> {
        let k = block.len();
        DMatrix::from_fn(k, k, |i, j| {
            let (s, t) = (block[i], block[j]);
            (self.edge[s] / self.edge[t]).sqrt() * self.entries[(s, t)]
        })
    }

    pub fn block(&self, block: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(block.len(), block.len(), |i, j| self.entries[(block[i], block[j])])
    }

    /// `max |((I + (d-1) M) x)_s|` for the kernel vector.
    pub fn x_bar_residual(&self) -> f64 {
        let x = x_bar(self.d);
        let df = self.d as f64;
        (0..9)
            .map(|s| (x[s] + (df - 1.0) * (0..9).map(|t| self.entries[(s, t)] * x[t]).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    /// `det[M0 - I/(d-1)]` computed numerically.
    pub fn zero_block_det(&self) -> f64 {
        let inv = 1.0 / (self.d as f64 - 1.0);
        let b = self.block(&BLOCK_ZERO) - DMatrix::identity(4, 4) * inv;
        b.determinant()
    }

    /// `det[M0 - I/(d-1)]` from its closed form.
    pub fn zero_block_det_closed(&self) -> f64 {
        let df = self.d as f64;
        let q1 = self.fixed_point.q_one;
        let e = self.epsilon;
        let s = q1 + e - q1 * e;
        (df - 2.0) * e / (df - 1.0).powi(3) * (df * s - (1.0 + s))
    }

    /// `H^{1/2} M H^{-1/2}` over all nine spins.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let all: Vec<usize> = (0..9).collect();
        self.symmetrized_block(&all)
    }
}

fn block_eigen(m: &TransitionMatrix, block: &[usize]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let s = m.symmetrized_block(block);
    let sym = (&s + s.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(sym, 1e-15, 10_000)
        .ok_or_else(|| Error::Divergence("symmetric eigensolver did not converge".into()))?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub d: usize,
    /// All nine eigenvalues, largest magnitude first.
    pub eigenvalues: Vec<f64>,
    pub block_one: Vec<f64>,
    pub block_free: Vec<f64>,
    pub block_zero: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub qdot_eigenvalues: Vec<f64>,
    pub restricted_hessian_max_eigenvalue: Option<f64>,
    /// Asymmetry of the symmetrized zero block.
    pub symmetrization_error: f64,
}

/// Per-block eigenvalues of the transition matrix.
pub fn spectrum(m: &TransitionMatrix, d: usize) -> Result<SpectrumReport> {
    let (one, _) = block_eigen(m, &BLOCK_ONE)?;
    let (free, _) = block_eigen(m, &BLOCK_FREE)?;
    let (zero, vecs) = block_eigen(m, &BLOCK_ZERO)?;
    // Trivial directions of the zero block: the stationary one (eigenvalue 1)
    // and the difference of the identical 00 and 0f rows (eigenvalue 0).
    let u1 = DVector::from_iterator(4, BLOCK_ZERO.iter().map(|&s| m.edge[s].sqrt())).normalize();
    let mut u0 = DVector::zeros(4);
    u0[2] = 1.0 / m.edge[S00].sqrt();
    u0[3] = -1.0 / m.edge[S0F].sqrt();
    let u0 = u0.normalize();
    let mut idx: Vec<usize> = (0..4).collect();
    let overlap = |i: usize, u: &DVector<f64>| vecs.column(i).dot(u).abs();
    idx.sort_by(|&i, &j| overlap(j, &u1).total_cmp(&overlap(i, &u1)));
    let rest = &mut idx[1..];
    rest.sort_by(|&i, &j| overlap(j, &u0).total_cmp(&overlap(i, &u0)));
    let inv = 1.0 / (d as f64 - 1.0);
    let (a, b) = (zero[idx[2]], zero[idx[3]]);
    let (lambda1, lambda2) = if (a - inv).abs() < (b - inv).abs() { (b, a) } else { (a, b) };

    let mut all: Vec<f64> = one.iter().chain(&free).chain(&zero).copied().collect();
    all.sort_by(|x, y| y.abs().total_cmp(&x.abs()));
    let zb = m.symmetrized_block(&BLOCK_ZERO);
    let symmetrization_error = (&zb - zb.transpose()).abs().max();
    let mut non_kernel: Vec<f64> = Vec::new();
    let mut dropped = false;
    for &e in &all {
        if !dropped && (e + inv).abs() < 1e-9 {
            dropped = true;
        } else {
            non_kernel.push(e);
        }
    }
    let qdot = qdot_spectrum(d, &non_kernel)?.values;
    Ok(SpectrumReport {
        d,
        eigenvalues: all,
        block_one: one,
        block_free: free,
        block_zero: zero,
        lambda1,
        lambda2,
        qdot_eigenvalues: qdot,
        restricted_hessian_max_eigenvalue: None,
        symmetrization_error,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QdotSpectrum {
    pub values: Vec<f64>,
    pub singular: bool,
}

/// `d / (1 + (d-1) l) - d/2` for each eigenvalue `l` of the transition matrix.
pub fn qdot_spectrum(d: usize, eigenvalues: &[f64]) -> Result<QdotSpectrum> {
    let df = d as f64;
    let inv = 1.0 / (df - 1.0);
    if let Some(e) = eigenvalues.iter().find(|&&e| (e + inv).abs() < 1e-12) {
        return Err(Error::InvalidParameter(format!("eigenvalue {e} equals -1/(d-1)")));
    }
    let values: Vec<f64> = eigenvalues.iter().map(|&l| df / (1.0 + (df - 1.0) * l) - df / 2.0).collect();
    let singular = values.iter().any(|v| v.abs() < 1e-10);
    Ok(QdotSpectrum { values, singular })
}

/// Orthonormal basis of the orthogonal complement of `v` in R^n.
fn complement_basis(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let u = v.normalize();
    let p = DMatrix::identity(n, n) - &u * u.transpose();
    let eig = nalgebra::SymmetricEigen::new(p);
    let cols: Vec<DVector<f64>> =
        (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).map(|i| eig.eigenvectors.column(i).into_owned()).collect();
    DMatrix::from_columns(&cols)
}

/// Orthonormal basis of the null space of the rows of `c`.
fn null_space(c: &DMatrix<f64>, expected: usize) -> Result<DMatrix<f64>> {
    let g = c.transpose() * c;
    let eig = nalgebra::SymmetricEigen::new(g);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let cols: Vec<DVector<f64>> = (0..c.ncols())
        .filter(|&i| eig.eigenvalues[i].abs() < 1e-10 * scale)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.len() != expected {
        return Err(Error::Infeasible(format!(
            "constraint rows have nullity {}, expected {expected}",
            cols.len()
        )));
    }
    Ok(DMatrix::from_columns(&cols))
}

#[derive(Clone, Debug, Serialize)]
pub struct HessianCheck {
    /// Eigenvalues of the constructed `(U^T S U)^{-1} - (d/2) I`, ascending.
    pub qdot_constructed: Vec<f64>,
    /// Eigenvalues of the quadratic form on permissible directions, ascending.
    pub restricted_eigenvalues: Vec<f64>,
    pub max_eigenvalue: f64,
    pub permissible_dimension: usize,
}

/// Quadratic form `-(U^T H^{-1/2} δ)^T Qdot (U^T H^{-1/2} δ)` on edge-marginal
/// perturbations δ that keep total mass, the reflection symmetry and the intensity,
/// and are orthogonal to the kernel vector.
pub fn restricted_hessian_check(d: usize, fp: &FrozenFixedPoint, measure: Option<&EmpiricalMeasure>) -> Result<HessianCheck> {
    let m = build_m(d, fp);
    let h = match measure {
        Some(meas) => meas.edge,
        None => m.edge,
    };
    let df = d as f64;
    let hs = DVector::from_iterator(9, h.iter().map(|x| x.sqrt()));
    let s_mat = {
        let a = Matrix9::identity() + m.entries * (df - 1.0);
        DMatrix::from_fn(9, 9, |i, j| hs[i] / hs[j] * a[(i, j)] / df)
    };
    let s_mat = (&s_mat + s_mat.transpose()) * 0.5;
    let xb = x_bar(d);
    let kernel = DVector::from_iterator(9, (0..9).map(|i| hs[i] * xb[i]));
    let u = complement_basis(&kernel);
    let inner = u.transpose() * &s_mat * &u;
    let inv = inner
        .try_inverse()
        .ok_or_else(|| Error::Infeasible("restricted S is singular".into()))?;
    let qdot = &inv - DMatrix::identity(8, 8) * (df / 2.0);
    let qdot = (&qdot + qdot.transpose()) * 0.5;
    let mut qdot_constructed: Vec<f64> = nalgebra::SymmetricEigen::new(qdot.clone()).eigenvalues.iter().copied().collect();
    qdot_constructed.sort_by(f64::total_cmp);

    let mut rows: Vec<[f64; 9]> = vec![[1.0; 9], xb];
    for &(a, b) in &[(S01, S10), (S0F, SF0), (S1F, SF1)] {
        debug_assert_eq!(REFLECT[a], b);
        let mut r = [0.0; 9];
        r[a] = 1.0;
        r[b] = -1.0;
        rows.push(r);
    }
    let mut iota = [0.0; 9];
    iota[S10] = 1.0;
    iota[S1F] = 1.0;
    iota[S11] = df / 2.0;
    rows.push(iota);
    let c = DMatrix::from_fn(rows.len(), 9, |i, j| rows[i][j]);
    let basis = null_space(&c, 9 - rows.len())?;
    let hinv = DMatrix::from_diagonal(&hs.map(|x| 1.0 / x));
    let y = u.transpose() * hinv * &basis;
    let form = -(y.transpose() * qdot * &y);
    let form = (&form + form.transpose()) * 0.5;
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(form).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(HessianCheck {
        qdot_constructed,
        max_eigenvalue: *ev.last().unwrap_or(&f64::NAN),
        permissible_dimension: basis.ncols(),
        restricted_eigenvalues: ev,
    })
}

/// Smallest `|l l' - 1/(d-1)|` over pairs of eigenvalues.
pub fn pair_gap(d: usize, eigenvalues: &[f64]) -> f64 {
    let inv = 1.0 / (d as f64 - 1.0);
    let mut g = f64::INFINITY;
    for &a in eigenvalues {
        for &b in eigenvalues {
            g = g.min((a * b - inv).abs());
        }
    }
    g
}

/// Full spectral workup at one fixed point.
pub fn analyze(d: usize, fp: &FrozenFixedPoint) -> Result<SpectrumReport> {
    let m = build_m(d, fp);
    let mut rep = spectrum(&m, d)?;
    rep.restricted_hessian_max_eigenvalue = Some(restricted_hessian_check(d, fp, None)?.max_eigenvalue);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::solve_q;

    fn at(d: usize, lambda: f64) -> TransitionMatrix {
        build_m(d, &solve_q(d, lambda).unwrap())
    }

    #[test]
    fn rows_and_reversibility() {
        let m = at(100, 90.0);
        assert!(m.row_sum_error() < 1e-14);
        assert!(m.reversibility_error(&m.edge) < 1e-12);
    }

    #[test]
    fn free_block_eigenvector() {
        let m = at(100, 90.0);
        let b = m.block(&BLOCK_FREE);
        let v = DVector::from_vec(vec![99.0, -1.0, -1.0]);
        let r = &b * &v + &v / 99.0;
        assert!(r.amax() < 1e-12);
        assert!(m.x_bar_residual() < 1e-12);
    }

    #[test]
    fn one_block_spectrum() {
        let rep = spectrum(&at(100, 90.0), 100).unwrap();
        let mut e = rep.block_one.clone();
        e.sort_by(f64::total_cmp);
        assert!(e[0].abs() < 1e-12 && (e[1] - 1.0).abs() < 1e-12);
        assert_eq!(rep.eigenvalues.len(), 9);
    }

    #[test]
    fn qdot_examples() {
        let q = qdot_spectrum(10, &[1.0, 0.0]).unwrap();
        assert!((q.values[0] - (1.0 - 5.0)).abs() < 1e-15);
        assert!((q.values[1] - 5.0).abs() < 1e-15);
        assert!(qdot_spectrum(10, &[-1.0 / 9.0]).is_err());
    }

    #[test]
    fn det_closed_form() {
        let m = at(60, 40.0);
        let (a, b) = (m.zero_block_det(), m.zero_block_det_closed());
        assert!((a - b).abs() < 1e-12 * b.abs().max(1e-300) + 1e-18, "{a} vs {b}");
    }
}
