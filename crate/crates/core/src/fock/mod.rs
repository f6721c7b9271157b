//! Truncated Fock-space oracle.
//!
//! Every closed form elsewhere in the crate is checked against the dense
//! states and operators built here. Joint N-mode spaces use row-major
//! indexing with mode 0 most significant: `index = sum_i n_i (cutoff+1)^(N-1-i)`.

mod metrics;
mod ops;

pub use metrics::{
    helstrom_povm, partial_trace, partial_trace_pure, pure_pair_discrimination,
    pure_pair_discrimination_vectors, trace_norm, variance, HelstromPovm, PairDiscrimination,
};
pub use ops::{
    apply_single_mode, apply_splitter_network, apply_two_mode_gate, beamsplitter_gate,
    beamsplitter_op, composite_beamsplitter, displacement_matrix, displacement_op,
    embed_single_mode, mode_ops, network_angles, phase_shift_state, phase_shifter,
    with_vacuum_ancillas, ModeOps, TwoModeGate,
};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_deviation, symmetrize, CMatrix, CVector, ZERO};
use num_complex::Complex64;

/// Largest joint dimension the dense oracle accepts for state vectors.
pub const MAX_JOINT_DIM: usize = 1 << 22;
/// Largest dimension for which a dense operator matrix is materialised.
pub const MAX_OPERATOR_DIM: usize = 4096;
/// Tail mass tolerated by constructors unless the caller overrides it.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;
/// Hermiticity tolerance for operators flagged Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Per-mode cutoff large enough that a coherent amplitude of modulus
/// `alpha_max` loses less than ~1e-12 of its probability.
pub fn default_cutoff(alpha_max: f64) -> usize {
    let a = alpha_max.abs();
    (a * a + 8.0 * a + 20.0).ceil() as usize
}

/// Smallest cutoff whose Poisson(mean) tail is at most `tail`.
pub fn cutoff_for_tail(mean: f64, tail: f64) -> usize {
    let mut c = mean.ceil() as usize;
    while poisson_tail(mean, c) > tail {
        c += 1;
    }
    c.max(1)
}

/// Probability that Poisson(mean) exceeds `cutoff`.
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    // pmf at cutoff+1 in log domain, then forward summation
    let k0 = cutoff + 1;
    let mut log_p = -mean + k0 as f64 * mean.ln() - ln_factorial(k0);
    let mut total = 0.0;
    let mut k = k0;
    loop {
        let p = log_p.exp();
        total += p;
        if (p < total * 1e-17 && k as f64 > mean) || k > k0 + 100_000 {
            break;
        }
        k += 1;
        log_p += mean.ln() - (k as f64).ln();
    }
    total.min(1.0)
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

pub fn joint_dim(cutoff: usize, modes: usize) -> Result<usize> {
    let dim = (cutoff as u128 + 1).pow(modes as u32);
    if dim > MAX_JOINT_DIM as u128 {
        return Err(Error::Sizing {
            dim,
            limit: MAX_JOINT_DIM,
        });
    }
    Ok(dim as usize)
}

/// Quality of a truncated representation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TruncationReport {
    pub cutoff_used: usize,
    pub tail_mass: f64,
    pub converged: bool,
}

impl TruncationReport {
    pub fn new(cutoff_used: usize, tail_mass: f64, tolerance: f64) -> Self {
        let tail_mass = tail_mass.clamp(0.0, 1.0);
        TruncationReport {
            cutoff_used,
            tail_mass,
            converged: tail_mass <= tolerance,
        }
    }
}

/// State vector on `modes` oscillators, each truncated at `cutoff` photons.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    cutoff: usize,
    modes: usize,
    amplitudes: CVector,
}

impl FockVector {
    pub fn from_amplitudes(cutoff: usize, modes: usize, amplitudes: CVector) -> Result<Self> {
        if cutoff == 0 || modes == 0 {
            return Err(Error::Invalid("cutoff and modes must be positive".into()));
        }
        let dim = joint_dim(cutoff, modes)?;
        if amplitudes.len() != dim {
            return Err(Error::Dimension(format!(
                "expected {dim} amplitudes for cutoff {cutoff} and {modes} modes, got {}",
                amplitudes.len()
            )));
        }
        Ok(FockVector {
            cutoff,
            modes,
            amplitudes,
        })
    }

    pub fn vacuum(cutoff: usize, modes: usize) -> Result<Self> {
        let dim = joint_dim(cutoff, modes)?;
        let mut amps = CVector::zeros(dim);
        amps[0] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(cutoff, modes, amps)
    }

    /// Single-mode number state |n>.
    pub fn number_state(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::Invalid(format!("number state {n} above cutoff {cutoff}")));
        }
        let mut amps = CVector::zeros(cutoff + 1);
        amps[n] = Complex64::new(1.0, 0.0);
        Self::from_amplitudes(cutoff, 1, amps)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// |‖v‖ − 1|; reported, never corrected silently.
    pub fn norm_deviation(&self) -> f64 {
        (self.norm() - 1.0).abs()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        FockVector {
            cutoff: self.cutoff,
            modes: self.modes,
            amplitudes: self.amplitudes.map(|z| z / n),
        }
    }

    /// <self|other>
    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        self.check_same_space(other.cutoff, other.modes)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        FockVector {
            cutoff: self.cutoff,
            modes: self.modes,
            amplitudes: self.amplitudes.map(|z| z * c),
        }
    }

    pub fn add(&self, other: &FockVector) -> Result<Self> {
        self.check_same_space(other.cutoff, other.modes)?;
        Ok(FockVector {
            cutoff: self.cutoff,
            modes: self.modes,
            amplitudes: &self.amplitudes + &other.amplitudes,
        })
    }

    pub fn tensor(&self, other: &FockVector) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::Dimension("tensor factors need equal cutoffs".into()));
        }
        let modes = self.modes + other.modes;
        joint_dim(self.cutoff, modes)?;
        Ok(FockVector {
            cutoff: self.cutoff,
            modes,
            amplitudes: crate::linalg::kron_vec(&self.amplitudes, &other.amplitudes),
        })
    }

    /// |self><self| as a density operator.
    pub fn density(&self) -> Result<FockOperator> {
        if self.dim() > MAX_OPERATOR_DIM {
            return Err(Error::Sizing {
                dim: self.dim() as u128,
                limit: MAX_OPERATOR_DIM,
            });
        }
        let m = &self.amplitudes * self.amplitudes.adjoint();
        FockOperator::new(self.cutoff, self.modes, m, true)
    }

    /// Copy into a larger per-mode cutoff, zero-padding the new levels.
    pub fn padded(&self, cutoff: usize) -> Result<Self> {
        if cutoff < self.cutoff {
            return Err(Error::Invalid("padding cannot shrink the cutoff".into()));
        }
        let dim = joint_dim(cutoff, self.modes)?;
        let mut amps = CVector::zeros(dim);
        for (idx, &a) in self.amplitudes.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let occ = occupations(idx, self.cutoff, self.modes);
            amps[index_of(&occ, cutoff)] = a;
        }
        Self::from_amplitudes(cutoff, self.modes, amps)
    }

    /// Probability mass on basis states with `n_i == cutoff` for some mode.
    pub fn edge_mass(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| occupations(*idx, self.cutoff, self.modes).contains(&self.cutoff))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Distribution of total photon number sum_i n_i (length modes*cutoff + 1).
    pub fn total_number_distribution(&self) -> Vec<f64> {
        let mut pmf = vec![0.0; self.modes * self.cutoff + 1];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let total: usize = occupations(idx, self.cutoff, self.modes).iter().sum();
            pmf[total] += a.norm_sqr();
        }
        pmf
    }

    pub fn apply(&self, op: &FockOperator) -> Result<Self> {
        self.check_same_space(op.cutoff, op.modes)?;
        Ok(FockVector {
            cutoff: self.cutoff,
            modes: self.modes,
            amplitudes: &op.matrix * &self.amplitudes,
        })
    }

    /// <self|op|self> / <self|self>
    pub fn expectation(&self, op: &FockOperator) -> Result<Complex64> {
        let applied = self.apply(op)?;
        Ok(self.amplitudes.dotc(&applied.amplitudes) / self.amplitudes.norm_squared())
    }

    fn check_same_space(&self, cutoff: usize, modes: usize) -> Result<()> {
        if self.cutoff != cutoff || self.modes != modes {
            return Err(Error::Dimension(format!(
                "space (cutoff {}, modes {}) vs (cutoff {cutoff}, modes {modes})",
                self.cutoff, self.modes
            )));
        }
        Ok(())
    }
}

/// Dense operator on a truncated N-mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    cutoff: usize,
    modes: usize,
    matrix: CMatrix,
    hermitian_hint: bool,
}

impl FockOperator {
    /// Wraps a matrix. With `hermitian_hint`, deviations up to 1e-12 are
    /// symmetrized away and larger ones rejected.
    pub fn new(cutoff: usize, modes: usize, matrix: CMatrix, hermitian_hint: bool) -> Result<Self> {
        if cutoff == 0 || modes == 0 {
            return Err(Error::Invalid("cutoff and modes must be positive".into()));
        }
        let dim = joint_dim(cutoff, modes)?;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::Dimension(format!(
                "operator must be {dim}x{dim}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let matrix = if hermitian_hint {
            let dev = hermitian_deviation(&matrix);
            if dev > HERMITIAN_TOLERANCE {
                return Err(Error::NonHermitian { deviation: dev });
            }
            symmetrize(&matrix)
        } else {
            matrix
        };
        Ok(FockOperator {
            cutoff,
            modes,
            matrix,
            hermitian_hint,
        })
    }

    pub fn identity(cutoff: usize, modes: usize) -> Result<Self> {
        let dim = joint_dim(cutoff, modes)?;
        if dim > MAX_OPERATOR_DIM {
            return Err(Error::Sizing {
                dim: dim as u128,
                limit: MAX_OPERATOR_DIM,
            });
        }
        Self::new(cutoff, modes, CMatrix::identity(dim, dim), true)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    pub fn adjoint(&self) -> Self {
        FockOperator {
            cutoff: self.cutoff,
            modes: self.modes,
            matrix: self.matrix.adjoint(),
            hermitian_hint: self.hermitian_hint,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn compose(&self, other: &FockOperator) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(FockOperator {
            cutoff: self.cutoff,
            modes: self.modes,
            matrix: &self.matrix * &other.matrix,
            hermitian_hint: false,
        })
    }

    /// Linear combination a*self + b*other; Hermitian if both are and a, b are real.
    pub fn combine(&self, a: f64, other: &FockOperator, b: f64) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(FockOperator {
            cutoff: self.cutoff,
            modes: self.modes,
            matrix: self.matrix.map(|z| z * a) + other.matrix.map(|z| z * b),
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        })
    }

    pub fn tensor(&self, other: &FockOperator) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::Dimension("tensor factors need equal cutoffs".into()));
        }
        let modes = self.modes + other.modes;
        let dim = joint_dim(self.cutoff, modes)?;
        if dim > MAX_OPERATOR_DIM {
            return Err(Error::Sizing {
                dim: dim as u128,
                limit: MAX_OPERATOR_DIM,
            });
        }
        Ok(FockOperator {
            cutoff: self.cutoff,
            modes,
            matrix: crate::linalg::kron(&self.matrix, &other.matrix),
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        })
    }

    /// Largest |(U^dagger U - I)_{ij}| restricted to basis states whose
    /// per-mode occupations are at most `max_occupation`.
    pub fn unitarity_defect(&self, max_occupation: usize) -> f64 {
        let prod = self.matrix.adjoint() * &self.matrix;
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&i| {
                occupations(i, self.cutoff, self.modes)
                    .iter()
                    .all(|&n| n <= max_occupation)
            })
            .collect();
        let mut worst = 0.0f64;
        for &i in &keep {
            for &j in &keep {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    fn check_same_space(&self, other: &FockOperator) -> Result<()> {
        if self.cutoff != other.cutoff || self.modes != other.modes {
            return Err(Error::Dimension("operators act on different spaces".into()));
        }
        Ok(())
    }
}

/// Per-mode occupations of a joint basis index.
pub fn occupations(mut index: usize, cutoff: usize, modes: usize) -> Vec<usize> {
    let base = cutoff + 1;
    let mut occ = vec![0; modes];
    for slot in occ.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    occ
}

pub fn index_of(occ: &[usize], cutoff: usize) -> usize {
    occ.iter().fold(0, |acc, &n| acc * (cutoff + 1) + n)
}

/// Coherent state |alpha> at `cutoff`, rejecting truncations whose tail mass
/// exceeds [`DEFAULT_TAIL_TOLERANCE`].
pub fn coherent_vector(alpha: Complex64, cutoff: usize) -> Result<(FockVector, TruncationReport)> {
    coherent_vector_with_tolerance(alpha, cutoff, DEFAULT_TAIL_TOLERANCE)
}

pub fn coherent_vector_with_tolerance(
    alpha: Complex64,
    cutoff: usize,
    tolerance: f64,
) -> Result<(FockVector, TruncationReport)> {
    let (v, report) = coherent_vector_unchecked(alpha, cutoff)?;
    if !report.converged && report.tail_mass > tolerance {
        return Err(Error::Truncation {
            cutoff,
            tail_mass: report.tail_mass,
            tolerance,
        });
    }
    Ok((
        v,
        TruncationReport::new(report.cutoff_used, report.tail_mass, tolerance),
    ))
}

/// Coherent amplitudes c_n = e^{-|a|^2/2} a^n / sqrt(n!) with no tolerance check.
pub fn coherent_vector_unchecked(
    alpha: Complex64,
    cutoff: usize,
) -> Result<(FockVector, TruncationReport)> {
    if cutoff == 0 {
        return Err(Error::Invalid("cutoff must be at least 1".into()));
    }
    let mut amps = CVector::zeros(cutoff + 1);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps[0] = c;
    for n in 1..=cutoff {
        c = c * alpha / (n as f64).sqrt();
        amps[n] = c;
    }
    let tail = poisson_tail(alpha.norm_sqr(), cutoff);
    let v = FockVector::from_amplitudes(cutoff, 1, amps)?;
    Ok((v, TruncationReport::new(cutoff, tail, DEFAULT_TAIL_TOLERANCE)))
}

/// Product of coherent states |a_1> ⊗ ... ⊗ |a_N> at a common cutoff.
pub fn product_coherent(alphas: &[Complex64], cutoff: usize) -> Result<FockVector> {
    build_product(alphas, cutoff, |a| coherent_vector(a, cutoff))
}

/// As [`product_coherent`] but accepts any tail loss.
pub fn product_coherent_truncated(alphas: &[Complex64], cutoff: usize) -> Result<FockVector> {
    build_product(alphas, cutoff, |a| coherent_vector_unchecked(a, cutoff))
}

fn build_product<F>(alphas: &[Complex64], cutoff: usize, single: F) -> Result<FockVector>
where
    F: Fn(Complex64) -> Result<(FockVector, TruncationReport)>,
{
    if alphas.is_empty() {
        return Err(Error::Invalid("at least one mode required".into()));
    }
    joint_dim(cutoff, alphas.len())?;
    let mut state = single(alphas[0])?.0;
    for &a in &alphas[1..] {
        state = state.tensor(&single(a)?.0)?;
    }
    Ok(state)
}

/// Normalized N-mode entangled coherent state (|a>^N + |-a>^N)/norm.
pub fn omega_vector(modes: usize, alpha: Complex64, cutoff: usize) -> Result<FockVector> {
    let plus = product_coherent(&vec![alpha; modes], cutoff)?;
    let minus = product_coherent(&vec![-alpha; modes], cutoff)?;
    Ok(plus.add(&minus)?.normalized())
}

/// Normalized single-mode kitten |a> ± |-a>.
pub fn kitten_vector(alpha: Complex64, even: bool, cutoff: usize) -> Result<FockVector> {
    let (p, _) = coherent_vector(alpha, cutoff)?;
    let (m, _) = coherent_vector(-alpha, cutoff)?;
    let sign = if even { 1.0 } else { -1.0 };
    let v = p.add(&m.scale(Complex64::new(sign, 0.0)))?;
    if v.norm() < 1e-300 {
        return Err(Error::Degenerate("odd kitten at alpha = 0".into()));
    }
    Ok(v.normalized())
}

/// Normalized hierarchical cat (|+>^N + |->^N)/sqrt(2) built from kittens.
pub fn hcs_vector(modes: usize, alpha: Complex64, cutoff: usize) -> Result<FockVector> {
    let even = kitten_vector(alpha, true, cutoff)?;
    let odd = kitten_vector(alpha, false, cutoff)?;
    let mut e = even.clone();
    let mut o = odd.clone();
    for _ in 1..modes {
        e = e.tensor(&even)?;
        o = o.tensor(&odd)?;
    }
    Ok(e.add(&o)?.normalized())
}
