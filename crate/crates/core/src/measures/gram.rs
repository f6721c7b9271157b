//! Exact moments of sums of single-mode generators in two-branch states.
//!
//! A state c1 |u>^N + c2 |v>^N is fully described by two single-mode vectors
//! and two coefficients. For A = sum_i a_i (the same `a` on every mode),
//!
//! <x^N|y^N>     = s^N
//! <x^N|A|y^N>   = N m1 s^{N-1}
//! <x^N|A^2|y^N> = N m2 s^{N-1} + N(N-1) m1^2 s^{N-2}
//!
//! with s = <x|y>, m1 = <x|a|y>, m2 = <x|a^2|y>, so no joint space is built.

use crate::error::{Error, Result};
use crate::fock::{apply_single_mode, FockVector};
use crate::linalg::{CMatrix, CVector, ZERO};
use num_complex::Complex64;

/// Two-branch state c1 |u>^N + c2 |v>^N.
#[derive(Debug, Clone)]
pub struct TwoBranchState {
    pub coeffs: [Complex64; 2],
    pub branches: [CVector; 2],
    pub modes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub norm2: f64,
    pub mean: f64,
    pub second: f64,
}

impl Moments {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }
}

fn pow0(z: Complex64, k: i64) -> Complex64 {
    // 0^0 = 1, negative powers only arise with zero prefactors
    if k < 0 {
        ZERO
    } else {
        z.powi(k as i32)
    }
}

impl TwoBranchState {
    pub fn new(coeffs: [Complex64; 2], u: CVector, v: CVector, modes: usize) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::Dimension("branch vectors differ in length".into()));
        }
        if modes == 0 {
            return Err(Error::Invalid("modes must be at least 1".into()));
        }
        Ok(TwoBranchState {
            coeffs,
            branches: [u, v],
            modes,
        })
    }

    /// One branch alone, as a product state.
    pub fn branch(&self, k: usize) -> TwoBranchState {
        let mut coeffs = [ZERO; 2];
        coeffs[k] = Complex64::new(1.0, 0.0);
        TwoBranchState {
            coeffs,
            branches: self.branches.clone(),
            modes: self.modes,
        }
    }

    pub fn moments(&self, a: &CMatrix) -> Moments {
        let n = self.modes as i64;
        let nf = n as f64;
        let (mut norm, mut e1, mut e2) = (ZERO, ZERO, ZERO);
        let applied: Vec<CVector> = self.branches.iter().map(|b| a * b).collect();
        for i in 0..2 {
            for j in 0..2 {
                let w = self.coeffs[i].conj() * self.coeffs[j];
                if w == ZERO {
                    continue;
                }
                let (x, y) = (&self.branches[i], &self.branches[j]);
                let s = x.dotc(y);
                let m1 = x.dotc(&applied[j]);
                let m2 = applied[i].dotc(&applied[j]);
                norm += w * pow0(s, n);
                e1 += w * m1 * nf * pow0(s, n - 1);
                e2 += w * (m2 * nf * pow0(s, n - 1) + m1 * m1 * nf * (nf - 1.0) * pow0(s, n - 2));
            }
        }
        // <x|a^2|y> = <a^dagger x|a y> needs a Hermitian; callers pass Hermitian a
        let norm2 = norm.re;
        Moments {
            norm2,
            mean: e1.re / norm2,
            second: e2.re / norm2,
        }
    }

    pub fn variance(&self, a: &CMatrix) -> f64 {
        self.moments(a).variance()
    }

    /// Dense joint vector, for oracle comparisons at small N.
    pub fn to_fock(&self, cutoff: usize) -> Result<FockVector> {
        let mut parts = Vec::with_capacity(2);
        for b in &self.branches {
            let single = FockVector::from_amplitudes(cutoff, 1, b.clone())?;
            let mut p = single.clone();
            for _ in 1..self.modes {
                p = p.tensor(&single)?;
            }
            parts.push(p);
        }
        parts[0].scale(self.coeffs[0]).add(&parts[1].scale(self.coeffs[1]))
    }
}

/// Variance of sum_i a_i in a dense N-mode state, applying `a` mode by mode.
pub fn dense_sum_variance(state: &FockVector, a: &CMatrix) -> Result<f64> {
    let mut applied = CVector::zeros(state.dim());
    for mode in 0..state.modes() {
        applied += apply_single_mode(state, a, mode)?.amplitudes();
    }
    let psi = state.amplitudes();
    let norm2 = psi.norm_squared();
    let mean = psi.dotc(&applied).re / norm2;
    Ok(applied.norm_squared() / norm2 - mean * mean)
}
