//! Reductions and distinguishability metrics on truncated states.

use super::{joint_dim, occupations, FockOperator, FockVector, HERMITIAN_TOLERANCE};
use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, hermitian_eigen, hermitian_eigen_2x2, symmetrize, CMatrix};
use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

/// Tolerance for positivity and unit trace of density inputs.
pub const DENSITY_TOLERANCE: f64 = 1e-10;

fn check_density(rho: &FockOperator) -> Result<CMatrix> {
    let dev = rho.hermitian_deviation();
    if dev > DENSITY_TOLERANCE {
        return Err(Error::NotDensity(format!("not Hermitian (deviation {dev:.3e})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOLERANCE || tr.im.abs() > DENSITY_TOLERANCE {
        return Err(Error::NotDensity(format!("trace {tr} is not 1")));
    }
    let m = symmetrize(rho.matrix());
    // m is PSD iff its real embedding [[Re, -Im], [Im, Re]] is; a Cholesky
    // factor of the shifted embedding certifies eigenvalues >= -tol
    let n = m.nrows();
    let embed = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        let diag = if i == j { DENSITY_TOLERANCE } else { 0.0 };
        diag + match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    if Cholesky::new(embed).is_none() {
        return Err(Error::NotDensity(
            "negative eigenvalue below -1e-10".into(),
        ));
    }
    Ok(m)
}

fn check_keep(keep: &[usize], modes: usize) -> Result<()> {
    if keep.is_empty() {
        return Err(Error::Invalid("keep at least one mode".into()));
    }
    for (k, &m) in keep.iter().enumerate() {
        if m >= modes {
            return Err(Error::InvalidMode { index: m, modes });
        }
        if keep[..k].contains(&m) {
            return Err(Error::Invalid(format!("mode {m} listed twice")));
        }
    }
    Ok(())
}

/// Splits each joint index into (kept index, traced index).
fn split_indices(cutoff: usize, modes: usize, keep: &[usize]) -> Vec<(usize, usize)> {
    let base = cutoff + 1;
    let dim = base.pow(modes as u32);
    (0..dim)
        .map(|idx| {
            let occ = occupations(idx, cutoff, modes);
            let kept = keep.iter().fold(0, |acc, &m| acc * base + occ[m]);
            let traced = (0..modes)
                .filter(|m| !keep.contains(m))
                .fold(0, |acc, m| acc * base + occ[m]);
            (kept, traced)
        })
        .collect()
}

/// Reduced density matrix on `keep` (in the listed order).
pub fn partial_trace(rho: &FockOperator, keep: &[usize]) -> Result<FockOperator> {
    check_keep(keep, rho.modes())?;
    let m = check_density(rho)?;
    let (cutoff, modes) = (rho.cutoff(), rho.modes());
    let kept_dim = joint_dim(cutoff, keep.len())?;
    let split = split_indices(cutoff, modes, keep);
    let traced_dim = m.nrows() / kept_dim;
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    for (full, &(k, t)) in split.iter().enumerate() {
        groups[t].push((k, full));
    }
    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for group in &groups {
        for &(k1, f1) in group {
            for &(k2, f2) in group {
                out[(k1, k2)] += m[(f1, f2)];
            }
        }
    }
    FockOperator::new(cutoff, keep.len(), symmetrize(&out), true)
}

/// Reduced density matrix of a pure state, without forming |psi><psi|.
pub fn partial_trace_pure(state: &FockVector, keep: &[usize]) -> Result<FockOperator> {
    check_keep(keep, state.modes())?;
    let (cutoff, modes) = (state.cutoff(), state.modes());
    let kept_dim = joint_dim(cutoff, keep.len())?;
    if kept_dim > super::MAX_OPERATOR_DIM {
        return Err(Error::Sizing {
            dim: kept_dim as u128,
            limit: super::MAX_OPERATOR_DIM,
        });
    }
    let traced_dim = state.dim() / kept_dim;
    let mut psi = CMatrix::zeros(kept_dim, traced_dim);
    let norm2 = state.amplitudes().norm_squared();
    for (full, &(k, t)) in split_indices(cutoff, modes, keep).iter().enumerate() {
        psi[(k, t)] = state.amplitudes()[full];
    }
    let rho = (&psi * psi.adjoint()).map(|z| z / norm2);
    FockOperator::new(cutoff, keep.len(), symmetrize(&rho), true)
}

/// Sum of absolute eigenvalues of a Hermitian operator.
pub fn trace_norm(op: &FockOperator) -> Result<f64> {
    let dev = op.hermitian_deviation();
    if dev > HERMITIAN_TOLERANCE.max(DENSITY_TOLERANCE) {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let (vals, _) = hermitian_eigen(&symmetrize(op.matrix()));
    Ok(compensated_sum(vals.into_iter().map(f64::abs)))
}

/// Two-outcome minimum-error measurement for equal priors.
#[derive(Debug, Clone)]
pub struct HelstromPovm {
    /// Projector onto the positive eigenspace of rho - sigma (guess rho).
    pub positive: FockOperator,
    /// Complementary projector (negative eigenspace plus kernel).
    pub negative: FockOperator,
    pub trace_norm: f64,
    pub success_probability: f64,
}

pub fn helstrom_povm(rho: &FockOperator, sigma: &FockOperator) -> Result<HelstromPovm> {
    if rho.cutoff() != sigma.cutoff() || rho.modes() != sigma.modes() {
        return Err(Error::Dimension("density matrices act on different spaces".into()));
    }
    let a = check_density(rho)?;
    let b = check_density(sigma)?;
    let diff = a - b;
    let (vals, vecs) = hermitian_eigen(&diff);
    let n = diff.nrows();
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut pos = CMatrix::zeros(n, n);
    for (k, &v) in vals.iter().enumerate() {
        if v > 1e-14 * scale {
            let col = vecs.column(k);
            pos += &col * col.adjoint();
        }
    }
    let neg = CMatrix::identity(n, n) - &pos;
    let tn = compensated_sum(vals.iter().map(|v| v.abs()));
    Ok(HelstromPovm {
        positive: FockOperator::new(rho.cutoff(), rho.modes(), symmetrize(&pos), true)?,
        negative: FockOperator::new(rho.cutoff(), rho.modes(), symmetrize(&neg), true)?,
        trace_norm: tn,
        success_probability: 0.5 + tn / 4.0,
    })
}

/// <A^2> - <A>^2 in a (not necessarily normalized) state.
pub fn variance(op: &FockOperator, state: &FockVector) -> Result<f64> {
    let dev = op.hermitian_deviation();
    if dev > HERMITIAN_TOLERANCE {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let applied = state.apply(op)?;
    let norm2 = state.amplitudes().norm_squared();
    let mean = state.amplitudes().dotc(applied.amplitudes()).re / norm2;
    let second = applied.amplitudes().norm_squared() / norm2;
    Ok(second - mean * mean)
}

/// Helstrom discrimination of two pure states with equal priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDiscrimination {
    pub overlap: Complex64,
    pub trace_norm: f64,
    pub success_probability: f64,
    /// Computed from the eigenprojectors directly, so it keeps relative
    /// precision when it is far below machine epsilon.
    pub error_probability: f64,
}

/// Diagonalizes |u><u| - |v><v| in the orthonormal frame
/// e1 = u, e2 = (v - s u)/t where s = <u|v>.
pub fn pure_pair_discrimination(overlap: Complex64) -> PairDiscrimination {
    let s = overlap;
    let t = (1.0 - s.norm_sqr()).max(0.0).sqrt();
    let tc = Complex64::new(t, 0.0);
    // v = (s, t); rho - sigma = [[1-|s|^2, -s t], [-conj(s) t, -t^2]]
    let m = [
        [Complex64::new(t * t, 0.0), -s * tc],
        [-s.conj() * tc, Complex64::new(-t * t, 0.0)],
    ];
    let (vals, vecs) = hermitian_eigen_2x2(m);
    let (minus, plus) = (vecs[0], vecs[1]);
    // errors: guess sigma on rho (|<w-|u>|^2) and guess rho on sigma (|<w+|v>|^2)
    let miss_rho = minus[0].norm_sqr();
    let miss_sigma = (plus[0].conj() * s + plus[1].conj() * tc).norm_sqr();
    let error = 0.5 * (miss_rho + miss_sigma);
    let tn = vals[0].abs() + vals[1].abs();
    PairDiscrimination {
        overlap: s,
        trace_norm: tn,
        success_probability: 1.0 - error,
        error_probability: error,
    }
}

pub fn pure_pair_discrimination_vectors(u: &FockVector, v: &FockVector) -> Result<PairDiscrimination> {
    let s = u.inner(v)? / (u.norm() * v.norm());
    Ok(pure_pair_discrimination(s))
}
