//! Ladder operators, displacements and linear-optics gates.

use super::{index_of, joint_dim, occupations, FockOperator, FockVector, MAX_OPERATOR_DIM};
use crate::error::{Error, Result};
use crate::linalg::{expm, kron, CMatrix, CVector, I, ZERO};
use num_complex::Complex64;

/// Single-mode ladder algebra at a fixed cutoff.
#[derive(Debug, Clone)]
pub struct ModeOps {
    pub cutoff: usize,
    pub annihilation: FockOperator,
    pub creation: FockOperator,
    pub number: FockOperator,
    pub parity: FockOperator,
}

impl ModeOps {
    /// x^(phi) = (a e^{-i phi} + a^dagger e^{i phi}) / sqrt(2)
    pub fn quadrature(&self, phi: f64) -> FockOperator {
        let e = Complex64::from_polar(1.0, phi);
        let m = (self.annihilation.matrix().map(|z| z * e.conj())
            + self.creation.matrix().map(|z| z * e))
        .map(|z| z / std::f64::consts::SQRT_2);
        FockOperator::new(self.cutoff, 1, m, true).expect("quadrature is Hermitian")
    }
}

pub(crate) fn annihilation_matrix(cutoff: usize) -> CMatrix {
    let mut a = CMatrix::zeros(cutoff + 1, cutoff + 1);
    for n in 1..=cutoff {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn mode_ops(cutoff: usize) -> Result<ModeOps> {
    if cutoff == 0 {
        return Err(Error::Invalid("cutoff must be at least 1".into()));
    }
    let a = annihilation_matrix(cutoff);
    let ad = a.adjoint();
    let dim = cutoff + 1;
    let number = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    });
    let parity = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            ZERO
        }
    });
    Ok(ModeOps {
        cutoff,
        annihilation: FockOperator::new(cutoff, 1, a, false)?,
        creation: FockOperator::new(cutoff, 1, ad, false)?,
        number: FockOperator::new(cutoff, 1, number, true)?,
        parity: FockOperator::new(cutoff, 1, parity, true)?,
    })
}

/// exp(alpha a^dagger - conj(alpha) a) in the truncated space.
pub fn displacement_matrix(alpha: Complex64, cutoff: usize) -> CMatrix {
    let a = annihilation_matrix(cutoff);
    let gen = a.adjoint().map(|z| z * alpha) - a.map(|z| z * alpha.conj());
    expm(&gen)
}

pub fn displacement_op(alpha: Complex64, cutoff: usize) -> Result<FockOperator> {
    if cutoff == 0 {
        return Err(Error::Invalid("cutoff must be at least 1".into()));
    }
    FockOperator::new(cutoff, 1, displacement_matrix(alpha, cutoff), false)
}

fn check_mode(mode: usize, modes: usize) -> Result<()> {
    if mode >= modes {
        return Err(Error::InvalidMode { index: mode, modes });
    }
    Ok(())
}

/// Lifts a single-mode matrix to act on `mode` of an N-mode space.
pub fn embed_single_mode(
    op: &CMatrix,
    mode: usize,
    modes: usize,
    cutoff: usize,
) -> Result<FockOperator> {
    check_mode(mode, modes)?;
    if op.nrows() != cutoff + 1 || op.ncols() != cutoff + 1 {
        return Err(Error::Dimension("single-mode operator has the wrong size".into()));
    }
    let dim = joint_dim(cutoff, modes)?;
    if dim > MAX_OPERATOR_DIM {
        return Err(Error::Sizing {
            dim: dim as u128,
            limit: MAX_OPERATOR_DIM,
        });
    }
    let id = CMatrix::identity(cutoff + 1, cutoff + 1);
    let mut m = if mode == 0 { op.clone() } else { id.clone() };
    for k in 1..modes {
        m = kron(&m, if k == mode { op } else { &id });
    }
    FockOperator::new(cutoff, modes, m, false)
}

/// Applies a single-mode matrix to one mode of a state without building the
/// joint operator.
pub fn apply_single_mode(state: &FockVector, op: &CMatrix, mode: usize) -> Result<FockVector> {
    check_mode(mode, state.modes())?;
    let base = state.cutoff() + 1;
    if op.nrows() != base || op.ncols() != base {
        return Err(Error::Dimension("single-mode operator has the wrong size".into()));
    }
    let stride = base.pow((state.modes() - 1 - mode) as u32);
    let outer = state.dim() / (base * stride);
    let src = state.amplitudes();
    let mut out = CVector::zeros(state.dim());
    let mut col = vec![ZERO; base];
    for o in 0..outer {
        for inner in 0..stride {
            let start = o * base * stride + inner;
            for (n, slot) in col.iter_mut().enumerate() {
                *slot = src[start + n * stride];
            }
            for m in 0..base {
                let mut acc = ZERO;
                for (n, &c) in col.iter().enumerate() {
                    acc += op[(m, n)] * c;
                }
                out[start + m * stride] = acc;
            }
        }
    }
    FockVector::from_amplitudes(state.cutoff(), state.modes(), out)
}

/// Multiplies the amplitudes by e^{i phi n_mode}.
pub fn phase_shift_state(state: &FockVector, phi: f64, mode: usize) -> Result<FockVector> {
    check_mode(mode, state.modes())?;
    let (cutoff, modes) = (state.cutoff(), state.modes());
    let phases: Vec<Complex64> = (0..=cutoff)
        .map(|n| Complex64::from_polar(1.0, phi * n as f64))
        .collect();
    let amps = CVector::from_iterator(
        state.dim(),
        state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(idx, &a)| a * phases[occupations(idx, cutoff, modes)[mode]]),
    );
    FockVector::from_amplitudes(cutoff, modes, amps)
}

/// Dense P(phi) = e^{i phi n} on `mode`.
pub fn phase_shifter(phi: f64, mode: usize, modes: usize, cutoff: usize) -> Result<FockOperator> {
    let single = CMatrix::from_fn(cutoff + 1, cutoff + 1, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, phi * i as f64)
        } else {
            ZERO
        }
    });
    embed_single_mode(&single, mode, modes, cutoff)
}

/// Two-mode gate that conserves n_i + n_j, stored as one dense block per
/// total photon number K. Block K acts on the pairs (p, K - p) that fit
/// under the cutoff, ordered by increasing p.
#[derive(Debug, Clone)]
pub struct TwoModeGate {
    cutoff: usize,
    blocks: Vec<CMatrix>,
}

impl TwoModeGate {
    fn block_range(cutoff: usize, total: usize) -> std::ops::RangeInclusive<usize> {
        total.saturating_sub(cutoff)..=total.min(cutoff)
    }

    /// B(theta) = exp(i theta (a_i^dagger a_j + a_j^dagger a_i)).
    pub fn beamsplitter(theta: f64, cutoff: usize) -> Self {
        let blocks = (0..=2 * cutoff)
            .map(|k| {
                let range = Self::block_range(cutoff, k);
                let lo = *range.start();
                let size = range.end() - lo + 1;
                let mut gen = CMatrix::zeros(size, size);
                for p in range.clone() {
                    let q = k - p;
                    // a_i^dagger a_j |p, q> = sqrt((p+1) q) |p+1, q-1>
                    if p < cutoff && q > 0 {
                        let amp = ((p + 1) as f64 * q as f64).sqrt();
                        gen[(p + 1 - lo, p - lo)] = I * (theta * amp);
                        gen[(p - lo, p + 1 - lo)] = I * (theta * amp);
                    }
                }
                expm(&gen)
            })
            .collect();
        TwoModeGate { cutoff, blocks }
    }

    /// Multiplies on both sides by e^{i phi_i n_i + i phi_j n_j}.
    pub fn sandwich_phases(&self, left: (f64, f64), right: (f64, f64)) -> Self {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let lo = *Self::block_range(self.cutoff, k).start();
                let phase = |(pi, pj): (f64, f64), p: usize| {
                    Complex64::from_polar(1.0, pi * p as f64 + pj * (k - p) as f64)
                };
                CMatrix::from_fn(b.nrows(), b.ncols(), |r, c| {
                    phase(left, r + lo) * b[(r, c)] * phase(right, c + lo)
                })
            })
            .collect();
        TwoModeGate {
            cutoff: self.cutoff,
            blocks,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Dense matrix on the full N-mode space.
    pub fn to_operator(&self, mode_i: usize, mode_j: usize, modes: usize) -> Result<FockOperator> {
        check_pair(mode_i, mode_j, modes)?;
        let dim = joint_dim(self.cutoff, modes)?;
        if dim > MAX_OPERATOR_DIM {
            return Err(Error::Sizing {
                dim: dim as u128,
                limit: MAX_OPERATOR_DIM,
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        self.for_each_block(mode_i, mode_j, modes, |idx, block| {
            for (r, &ir) in idx.iter().enumerate() {
                for (c, &ic) in idx.iter().enumerate() {
                    m[(ir, ic)] = block[(r, c)];
                }
            }
        });
        FockOperator::new(self.cutoff, modes, m, false)
    }

    fn for_each_block<F: FnMut(&[usize], &CMatrix)>(
        &self,
        mode_i: usize,
        mode_j: usize,
        modes: usize,
        mut f: F,
    ) {
        let base = self.cutoff + 1;
        let dim = base.pow(modes as u32);
        let si = base.pow((modes - 1 - mode_i) as u32);
        let sj = base.pow((modes - 1 - mode_j) as u32);
        let mut idx = Vec::with_capacity(base);
        for anchor in 0..dim {
            if (anchor / si) % base != 0 || (anchor / sj) % base != 0 {
                continue;
            }
            for (k, block) in self.blocks.iter().enumerate() {
                idx.clear();
                idx.extend(Self::block_range(self.cutoff, k).map(|p| anchor + p * si + (k - p) * sj));
                f(&idx, block);
            }
        }
    }
}

fn check_pair(mode_i: usize, mode_j: usize, modes: usize) -> Result<()> {
    check_mode(mode_i, modes)?;
    check_mode(mode_j, modes)?;
    if mode_i == mode_j {
        return Err(Error::InvalidMode {
            index: mode_j,
            modes,
        });
    }
    Ok(())
}

pub fn beamsplitter_gate(theta: f64, cutoff: usize) -> TwoModeGate {
    TwoModeGate::beamsplitter(theta, cutoff)
}

/// Composite splitter acting on coherent amplitudes as
/// (a, b) -> (a cos t + b sin t, a sin t - b cos t).
///
/// Realised as P_j(-pi/2) B_ij(t) P_j(-pi/2).
pub fn composite_beamsplitter(theta: f64, cutoff: usize) -> TwoModeGate {
    let h = -std::f64::consts::FRAC_PI_2;
    TwoModeGate::beamsplitter(theta, cutoff).sandwich_phases((0.0, h), (0.0, h))
}

pub fn beamsplitter_op(
    theta: f64,
    mode_i: usize,
    mode_j: usize,
    modes: usize,
    cutoff: usize,
) -> Result<FockOperator> {
    check_pair(mode_i, mode_j, modes)?;
    TwoModeGate::beamsplitter(theta, cutoff).to_operator(mode_i, mode_j, modes)
}

/// Applies a two-mode gate blockwise; cost is linear in the joint dimension.
pub fn apply_two_mode_gate(
    state: &FockVector,
    gate: &TwoModeGate,
    mode_i: usize,
    mode_j: usize,
) -> Result<FockVector> {
    check_pair(mode_i, mode_j, state.modes())?;
    if gate.cutoff != state.cutoff() {
        return Err(Error::Dimension("gate and state cutoffs differ".into()));
    }
    let src = state.amplitudes();
    let mut out = CVector::zeros(state.dim());
    let mut buf = Vec::with_capacity(gate.cutoff + 1);
    gate.for_each_block(mode_i, mode_j, state.modes(), |idx, block| {
        buf.clear();
        buf.extend(idx.iter().map(|&i| src[i]));
        if buf.iter().all(|z| *z == ZERO) {
            return;
        }
        for (r, &ir) in idx.iter().enumerate() {
            let mut acc = ZERO;
            for (c, &v) in buf.iter().enumerate() {
                acc += block[(r, c)] * v;
            }
            out[ir] = acc;
        }
    });
    FockVector::from_amplitudes(state.cutoff(), state.modes(), out)
}

/// Lemma angles theta_q = (atan o sec)^{M-1-q}(pi/4), q = 1..M-1.
pub fn network_angles(m: usize) -> Vec<f64> {
    (1..m)
        .map(|q| {
            let mut t = std::f64::consts::FRAC_PI_4;
            for _ in 0..(m - 1 - q) {
                t = (1.0 / t.cos()).atan();
            }
            t
        })
        .collect()
}

/// Runs the splitter chain B_{q,q+1}(theta_q), q = 1 first, on an M-mode state.
pub fn apply_splitter_network(state: &FockVector) -> Result<FockVector> {
    let m = state.modes();
    let mut out = state.clone();
    for (q, theta) in network_angles(m).into_iter().enumerate() {
        let gate = composite_beamsplitter(theta, state.cutoff());
        out = apply_two_mode_gate(&out, &gate, q, q + 1)?;
    }
    Ok(out)
}

/// |x> ⊗ |0>^{M-1} embedded at the given cutoff.
pub fn with_vacuum_ancillas(first: &FockVector, modes: usize) -> Result<FockVector> {
    if first.modes() != 1 {
        return Err(Error::Dimension("first factor must be single-mode".into()));
    }
    let cutoff = first.cutoff();
    let dim = joint_dim(cutoff, modes)?;
    let stride = (cutoff + 1).pow((modes - 1) as u32);
    let mut amps = CVector::zeros(dim);
    for (n, &a) in first.amplitudes().iter().enumerate() {
        let mut occ = vec![0; modes];
        occ[0] = n;
        debug_assert_eq!(index_of(&occ, cutoff), n * stride);
        amps[n * stride] = a;
    }
    FockVector::from_amplitudes(cutoff, modes, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_vector, product_coherent, product_coherent_truncated, FockVector};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn number_annihilation_commutator() {
        let ops = mode_ops(12).unwrap();
        let n = ops.number.matrix();
        let a = ops.annihilation.matrix();
        let comm = n * a - a * n + a;
        for r in 0..12 {
            for col in 0..=12 {
                assert!(comm[(r, col)].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn coherent_number_mean() {
        let ops = mode_ops(40).unwrap();
        let (v, _) = coherent_vector(Complex64::new(1.2, -0.7), 40).unwrap();
        let mean = v.expectation(&ops.number).unwrap();
        assert!((mean.re - (1.44 + 0.49)).abs() < 1e-9);
    }

    #[test]
    fn parity_flips_coherent_amplitude() {
        let ops = mode_ops(30).unwrap();
        let alpha = Complex64::new(0.9, 0.4);
        let (v, _) = coherent_vector(alpha, 30).unwrap();
        let (w, _) = coherent_vector(-alpha, 30).unwrap();
        let pv = v.apply(&ops.parity).unwrap();
        assert!((pv.amplitudes() - w.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn displacement_of_zero_is_identity() {
        let d = displacement_op(c(0.0), 15).unwrap();
        assert!(max_abs(&(d.matrix() - CMatrix::identity(16, 16))) < 1e-15);
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        for alpha in [c(0.5), Complex64::new(1.0, 1.0), c(-2.0)] {
            let d = displacement_op(alpha, 40).unwrap();
            let vac = FockVector::vacuum(40, 1).unwrap();
            let (coh, _) = coherent_vector(alpha, 40).unwrap();
            let ov = vac.apply(&d).unwrap().inner(&coh).unwrap().norm_sqr();
            assert!(ov >= 1.0 - 1e-10, "alpha {alpha}: {ov}");
        }
    }

    #[test]
    fn displacement_inverse_on_low_subspace() {
        let alpha = Complex64::new(1.5, 0.5);
        let d = displacement_op(alpha, 50).unwrap();
        let dinv = displacement_op(-alpha, 50).unwrap();
        let prod = d.compose(&dinv).unwrap();
        let id = CMatrix::identity(51, 51);
        let diff = prod.matrix() - id;
        let low = diff.view((0, 0), (30, 30));
        assert!(low.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
        assert!(d.unitarity_defect(30) < 1e-9);
    }

    #[test]
    fn quadrature_variance_in_coherent_state() {
        let ops = mode_ops(40).unwrap();
        let (v, _) = coherent_vector(Complex64::new(1.3, 0.2), 40).unwrap();
        for phi in [0.0, 0.7, 2.0] {
            let var = crate::fock::variance(&ops.quadrature(phi), &v).unwrap();
            assert!((var - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn beamsplitter_zero_angle_is_identity() {
        let b = beamsplitter_op(0.0, 0, 1, 2, 6).unwrap();
        assert!(max_abs(&(b.matrix() - CMatrix::identity(49, 49))) < 1e-15);
    }

    #[test]
    fn beamsplitter_conserves_photon_number() {
        let cutoff = 5;
        let b = beamsplitter_op(0.83, 0, 2, 3, cutoff).unwrap();
        let total = CMatrix::from_fn(216, 216, |i, j| {
            if i == j {
                c(occupations(i, cutoff, 3).iter().sum::<usize>() as f64)
            } else {
                ZERO
            }
        });
        let comm = b.matrix() * &total - &total * b.matrix();
        assert!(max_abs(&comm) < 1e-12);
        assert!(b.unitarity_defect(cutoff) < 1e-12);
    }

    #[test]
    fn blockwise_application_matches_dense() {
        let cutoff = 4;
        let state =
            product_coherent_truncated(&[c(0.4), Complex64::new(0.1, 0.3), c(-0.5)], cutoff).unwrap();
        let gate = composite_beamsplitter(0.37, cutoff);
        let fast = apply_two_mode_gate(&state, &gate, 2, 0).unwrap();
        let dense = state.apply(&gate.to_operator(2, 0, 3).unwrap()).unwrap();
        assert!((fast.amplitudes() - dense.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn composite_splitter_maps_coherent_pairs() {
        let cutoff = 40;
        let (a, b) = (Complex64::new(1.1, -0.4), Complex64::new(-0.6, 0.9));
        let theta = 0.61;
        let input = product_coherent(&[a, b], cutoff).unwrap();
        let out = apply_two_mode_gate(&input, &composite_beamsplitter(theta, cutoff), 0, 1).unwrap();
        let (s, co) = theta.sin_cos();
        let expect = product_coherent(&[a * co + b * s, a * s - b * co], cutoff).unwrap();
        let fid = out.inner(&expect).unwrap().norm_sqr();
        assert!(fid >= 1.0 - 1e-8, "fidelity {fid}");
    }

    #[test]
    fn literal_phase_placement_fails_the_coherent_identity() {
        // P_i(pi/2) B_ij P_j(pi/2) does not give the real-coefficient map
        let cutoff = 30;
        let (a, b) = (c(1.0), c(0.5));
        let theta = 0.61;
        let h = std::f64::consts::FRAC_PI_2;
        let gate = TwoModeGate::beamsplitter(theta, cutoff).sandwich_phases((h, 0.0), (0.0, h));
        let input = product_coherent(&[a, b], cutoff).unwrap();
        let out = apply_two_mode_gate(&input, &gate, 0, 1).unwrap();
        let (s, co) = theta.sin_cos();
        let expect = product_coherent(&[a * co + b * s, a * s - b * co], cutoff).unwrap();
        assert!(out.inner(&expect).unwrap().norm_sqr() < 0.9);
    }

    #[test]
    fn phase_shifter_special_angles() {
        let p0 = phase_shifter(0.0, 1, 2, 5).unwrap();
        assert!(max_abs(&(p0.matrix() - CMatrix::identity(36, 36))) < 1e-15);
        let ppi = phase_shifter(std::f64::consts::PI, 0, 1, 5).unwrap();
        let parity = mode_ops(5).unwrap().parity;
        assert!(max_abs(&(ppi.matrix() - parity.matrix())) < 1e-15);
    }

    #[test]
    fn phase_shifter_rotates_amplitude() {
        let alpha = Complex64::new(0.8, 0.3);
        let phi = 1.1;
        let (v, _) = coherent_vector(alpha, 35).unwrap();
        let (w, _) = coherent_vector(alpha * Complex64::from_polar(1.0, phi), 35).unwrap();
        let dense = v.apply(&phase_shifter(phi, 0, 1, 35).unwrap()).unwrap();
        let fast = phase_shift_state(&v, phi, 0).unwrap();
        assert!((dense.amplitudes() - w.amplitudes()).norm() < 1e-10);
        assert!((fast.amplitudes() - w.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn network_angles_small_cases() {
        let t = network_angles(2);
        assert!((t[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let t = network_angles(3);
        // theta_1 = atan(sec(pi/4)) = atan(sqrt 2)
        assert!((t[0] - 2f64.sqrt().atan()).abs() < 1e-15);
        assert!((t[1] - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn single_mode_application_matches_embedding() {
        let cutoff = 3;
        let state =
            product_coherent_truncated(&[c(0.3), c(0.2), Complex64::new(0.0, 0.4)], cutoff).unwrap();
        let a = annihilation_matrix(cutoff);
        let fast = apply_single_mode(&state, &a, 1).unwrap();
        let dense = state.apply(&embed_single_mode(&a, 1, 3, cutoff).unwrap()).unwrap();
        assert!((fast.amplitudes() - dense.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn invalid_modes_are_rejected() {
        assert!(matches!(
            beamsplitter_op(0.1, 1, 1, 2, 3),
            Err(Error::InvalidMode { .. })
        ));
        assert!(matches!(
            beamsplitter_op(0.1, 0, 2, 2, 3),
            Err(Error::InvalidMode { .. })
        ));
    }
}
