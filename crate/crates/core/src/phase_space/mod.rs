//! Wigner functions in the displaced-parity convention
//! W(g) = (2/pi)^m <D(g) P D(-g)>, closed-form and numeric.

mod features;
mod grid;

pub use features::{extract_features, FringeMeasurement, LobeFit, PhaseSpaceFeatures};
pub use grid::{
    evaluate_grid, wigner_grid, wigner_grid_numeric, AxisSpec, FixedMode, ModeAxes, SliceSpec, WignerGrid, CONVENTION,
    MAX_GRID_POINTS,
};

use crate::closed::{hcs_norms, CatStateSpec, StateFamily};
use crate::error::{Error, Result};
use crate::fock::{
    apply_single_mode, default_cutoff, displacement_matrix, hcs_vector, joint_dim, kitten_vector, occupations,
    omega_vector, partial_trace_pure, product_coherent, with_vacuum_ancillas, FockOperator, FockVector, MAX_JOINT_DIM,
};
use crate::linalg::{hermitian_eigen, CVector, ONE, ZERO};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{FRAC_2_PI, PI};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// <b'| D(g) P D(-g) |b> = e^{g* b - g b*} <b'|2g - b>
fn coherent_kernel(bp: Complex64, b: Complex64, g: Complex64) -> Complex64 {
    let d = 2.0 * g - b;
    let phase = g.conj() * b - g * b.conj();
    (phase - 0.5 * bp.norm_sqr() - 0.5 * d.norm_sqr() + bp.conj() * d).exp()
}

fn coherent_overlap(bp: Complex64, b: Complex64) -> Complex64 {
    (-0.5 * bp.norm_sqr() - 0.5 * b.norm_sqr() + bp.conj() * b).exp()
}

/// Single-mode vector as a finite sum of coherent states.
type CoherentSum = Vec<(Complex64, Complex64)>;

/// c0 (x)_i u_i + c1 (x)_i v_i with every u_i, v_i a short sum of coherent
/// states. Covers every named family.
#[derive(Debug, Clone)]
pub struct CoherentExpansion {
    pub coeffs: [Complex64; 2],
    /// Per mode, the two branch vectors.
    pub modes: Vec<[CoherentSum; 2]>,
}

impl CoherentExpansion {
    pub fn from_spec(state: &CatStateSpec) -> Result<Self> {
        let a = state.alpha;
        let n = state.modes;
        let single = |b: Complex64| vec![(ONE, b)];
        let uniform = |u: CoherentSum, v: CoherentSum| vec![[u, v]; n];
        let exp = match state.family {
            StateFamily::Omega => CoherentExpansion {
                coeffs: [ONE, ONE],
                modes: uniform(single(a), single(-a)),
            },
            StateFamily::EvenCat | StateFamily::OddCat => {
                let sign = if state.family == StateFamily::EvenCat { 1.0 } else { -1.0 };
                CoherentExpansion {
                    coeffs: [ONE, c(sign)],
                    modes: uniform(single(a), single(-a)),
                }
            }
            StateFamily::ProductCoherent => CoherentExpansion {
                coeffs: [ONE, ZERO],
                modes: uniform(single(a), single(a)),
            },
            StateFamily::OmegaPrime => {
                let big = a * (n as f64).sqrt();
                let mut modes = vec![[single(big), single(-big)]];
                modes.extend(std::iter::repeat_n([single(ZERO), single(ZERO)], n - 1));
                CoherentExpansion { coeffs: [ONE, ONE], modes }
            }
            StateFamily::Hcs => {
                let (ap, am) = hcs_norms(a);
                let am = am.ok_or_else(|| Error::Degenerate("HCS needs alpha != 0".into()))?;
                let even = vec![(c(1.0 / ap), a), (c(1.0 / ap), -a)];
                let odd = vec![(c(1.0 / am), a), (c(-1.0 / am), -a)];
                CoherentExpansion {
                    coeffs: [ONE, ONE],
                    modes: uniform(even, odd),
                }
            }
            StateFamily::GhzDistilled => {
                // |e2> = (|-a> - s|a>)/sqrt(1 - s^2)
                let s = (-2.0 * a.norm_sqr()).exp();
                if s >= 1.0 {
                    return Err(Error::Degenerate("GHZ_DISTILLED needs alpha != 0".into()));
                }
                let t = (1.0 - s * s).sqrt();
                let e2 = vec![(c(1.0 / t), -a), (c(-s / t), a)];
                CoherentExpansion {
                    coeffs: [ONE, ONE],
                    modes: uniform(single(a), e2),
                }
            }
        };
        Ok(exp)
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    fn pair_sum(x: &CoherentSum, y: &CoherentSum, f: impl Fn(Complex64, Complex64) -> Complex64) -> Complex64 {
        let mut acc = ZERO;
        for &(cx, bx) in x {
            for &(cy, by) in y {
                acc += cx.conj() * cy * f(bx, by);
            }
        }
        acc
    }

    fn norm2(&self) -> f64 {
        let mut acc = ZERO;
        for j in 0..2 {
            for k in 0..2 {
                let w = self.coeffs[j].conj() * self.coeffs[k];
                if w == ZERO {
                    continue;
                }
                let prod: Complex64 = self
                    .modes
                    .iter()
                    .map(|m| Self::pair_sum(&m[j], &m[k], coherent_overlap))
                    .product();
                acc += w * prod;
            }
        }
        acc.re
    }

    /// W at one phase-space point (one complex value per mode).
    pub fn wigner(&self, gamma: &[Complex64]) -> Result<f64> {
        if gamma.len() != self.num_modes() {
            return Err(Error::Dimension(format!(
                "{} displacement values for {} modes",
                gamma.len(),
                self.num_modes()
            )));
        }
        let mut acc = ZERO;
        for j in 0..2 {
            for k in 0..2 {
                let w = self.coeffs[j].conj() * self.coeffs[k];
                if w == ZERO {
                    continue;
                }
                let prod: Complex64 = self
                    .modes
                    .iter()
                    .zip(gamma)
                    .map(|(m, &g)| Self::pair_sum(&m[j], &m[k], |bp, b| coherent_kernel(bp, b, g)))
                    .product();
                acc += w * prod;
            }
        }
        Ok(FRAC_2_PI.powi(self.num_modes() as i32) * acc.re / self.norm2())
    }
}

/// Closed-form Wigner function of a named family at one point.
pub fn wigner_cat_closed(state: &CatStateSpec, gamma: &[Complex64]) -> Result<f64> {
    CoherentExpansion::from_spec(state)?.wigner(gamma)
}

/// Wigner function of the two-mode hierarchical cat, written as the sum of
/// the even-even and odd-odd kitten products plus their cross terms:
///
/// (2/pi^2) sum_e (2 + 2e s)^{-2} [G1 G2 + 2e h2 cos t2 G1 + 2e h1 cos t1 G2 + 4 h1 h2 cos t1 cos t2]
/// + (1/pi^2) (1 - s^2)^{-1} [(g1- - g1+)(g2- - g2+) - 4 h1 h2 sin t1 sin t2]
///
/// with g+- = e^{-2|a +- g|^2}, G = g- + g+, h = e^{-2|g|^2},
/// t = 4 Im(conj(a) g) and s = e^{-2|a|^2}.
pub fn wigner_hcs2_closed(gamma1: Complex64, gamma2: Complex64, alpha: Complex64) -> Result<f64> {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return Err(Error::Degenerate("HCS needs alpha != 0".into()));
    }
    let s = (-2.0 * x).exp();
    let parts = |g: Complex64| {
        let gm = (-2.0 * (alpha - g).norm_sqr()).exp();
        let gp = (-2.0 * (alpha + g).norm_sqr()).exp();
        let h = (-2.0 * g.norm_sqr()).exp();
        let t = 4.0 * (alpha.conj() * g).im;
        (gm, gp, h, t)
    };
    let (gm1, gp1, h1, t1) = parts(gamma1);
    let (gm2, gp2, h2, t2) = parts(gamma2);
    let (big1, big2) = (gm1 + gp1, gm2 + gp2);
    let mut diag = 0.0;
    for e in [1.0, -1.0] {
        let den = if e > 0.0 { 2.0 + 2.0 * s } else { -2.0 * (-2.0 * x).exp_m1() };
        diag += (big1 * big2
            + 2.0 * e * h2 * t2.cos() * big1
            + 2.0 * e * h1 * t1.cos() * big2
            + 4.0 * h1 * h2 * t1.cos() * t2.cos())
            / (den * den);
    }
    // 1 - s^2 = -expm1(-4x)
    let one_minus_s2 = -(-4.0 * x).exp_m1();
    let cross = ((gm1 - gp1) * (gm2 - gp2) - 4.0 * h1 * h2 * t1.sin() * t2.sin()) / one_minus_s2;
    Ok(2.0 / (PI * PI) * diag + cross / (PI * PI))
}

/// Numeric Wigner value with the imaginary part left by the truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericWigner {
    pub value: f64,
    pub imag_residue: f64,
    pub cutoff_used: usize,
}

/// Levels added above the state's cutoff before displacing by `g`.
fn displacement_headroom(gmax: f64) -> usize {
    default_cutoff(gmax)
}

fn padded_cutoff(cutoff: usize, modes: usize, gamma: &[Complex64]) -> Result<usize> {
    let gmax = gamma.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let needed = cutoff + displacement_headroom(gmax);
    let fits = |c: usize| joint_dim(c, modes).is_ok_and(|d| d <= MAX_JOINT_DIM);
    if fits(needed) {
        return Ok(needed);
    }
    let limit = (cutoff..needed).rev().find(|&c| fits(c)).unwrap_or(cutoff);
    Err(Error::Headroom { needed, limit })
}

/// Mass within five levels of the edge; the displaced state must not reach it.
const EDGE_BAND: usize = 5;
const EDGE_TOLERANCE: f64 = 1e-14;

fn check_edge(v: &FockVector, needed: usize) -> Result<()> {
    let cut = v.cutoff();
    let mass: f64 = v
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| occupations(*i, cut, v.modes()).iter().any(|&n| n + EDGE_BAND > cut))
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if mass > EDGE_TOLERANCE * v.amplitudes().norm_squared() {
        return Err(Error::Headroom { needed, limit: cut });
    }
    Ok(())
}

fn parity_signs(cutoff: usize, modes: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| {
            let total: usize = occupations(i, cutoff, modes).iter().sum();
            if total % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Explicit Fock vector for a named family at `cutoff`, for the numeric route.
pub fn fock_state(state: &CatStateSpec, cutoff: usize) -> Result<FockVector> {
    let (n, a) = (state.modes, state.alpha);
    match state.family {
        StateFamily::Omega => omega_vector(n, a, cutoff),
        StateFamily::EvenCat => kitten_vector(a, true, cutoff),
        StateFamily::OddCat => kitten_vector(a, false, cutoff),
        StateFamily::ProductCoherent => product_coherent(&vec![a; n], cutoff),
        StateFamily::Hcs => hcs_vector(n, a, cutoff),
        StateFamily::OmegaPrime => {
            let cat = kitten_vector((n as f64).sqrt() * a, true, cutoff)?;
            with_vacuum_ancillas(&cat, n)
        }
        other => Err(Error::UnsupportedFamily {
            op: "fock_state",
            family: other.name().into(),
        }),
    }
}

/// (2/pi)^m Re <psi| (x)D(g_i) P (x)D(-g_i) |psi> / <psi|psi>.
///
/// The state is zero-padded so that the displaced vector stays clear of the
/// truncation edge; otherwise a headroom error is returned.
pub fn wigner_numeric(state: &FockVector, gamma: &[Complex64]) -> Result<NumericWigner> {
    let modes = state.modes();
    if gamma.len() != modes {
        return Err(Error::Dimension(format!("{} displacement values for {modes} modes", gamma.len())));
    }
    let big = padded_cutoff(state.cutoff(), modes, gamma)?;
    let psi = state.padded(big)?;
    let mut phi = psi.clone();
    let mut fwd = Vec::with_capacity(modes);
    for (mode, &g) in gamma.iter().enumerate() {
        let d = displacement_matrix(g, big);
        phi = apply_single_mode(&phi, &d.adjoint(), mode)?;
        fwd.push(d);
    }
    check_edge(&phi, big)?;
    let signs = parity_signs(big, modes, phi.dim());
    let parity: CVector = phi
        .amplitudes()
        .iter()
        .zip(&signs)
        .map(|(a, s)| a * *s)
        .collect::<Vec<_>>()
        .into();
    let mut back = FockVector::from_amplitudes(big, modes, parity)?;
    for (mode, d) in fwd.iter().enumerate() {
        back = apply_single_mode(&back, d, mode)?;
    }
    let z = psi.amplitudes().dotc(back.amplitudes()) / psi.amplitudes().norm_squared();
    let pref = FRAC_2_PI.powi(modes as i32);
    Ok(NumericWigner {
        value: pref * z.re,
        imag_residue: (pref * z.im).abs(),
        cutoff_used: big,
    })
}

/// (2/pi)^m Tr[P D(-g) rho D(g)] for a density operator, summed over its
/// eigenvectors.
pub fn wigner_numeric_density(rho: &FockOperator, gamma: &[Complex64]) -> Result<NumericWigner> {
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let trace: f64 = vals.iter().sum();
    let mut out = NumericWigner {
        value: 0.0,
        imag_residue: 0.0,
        cutoff_used: rho.cutoff(),
    };
    for (k, &p) in vals.iter().enumerate() {
        if p.abs() <= 1e-15 * trace.abs() {
            continue;
        }
        let v = FockVector::from_amplitudes(rho.cutoff(), rho.modes(), vecs.column(k).into_owned())?;
        let w = wigner_numeric(&v, gamma)?;
        out.value += p * w.value / trace;
        out.imag_residue += (p * w.imag_residue / trace).abs();
        out.cutoff_used = w.cutoff_used;
    }
    Ok(out)
}

/// Interference suppression after tracing out whole modes.
#[derive(Debug, Clone, Serialize)]
pub struct FringeSuppression {
    pub modes: usize,
    pub traced: usize,
    /// e^{-2 n |a|^2}, the coherence factor of the reduced state.
    pub coherence_factor: f64,
    /// e^{-n |a|^2 / 2}
    pub alternative_factor: f64,
    /// Interference amplitude at the origin relative to the untraced value,
    /// measured from the numeric reduced-state Wigner function.
    pub measured: Option<f64>,
    /// -ln(measured) / (n |a|^2)
    pub measured_exponent: Option<f64>,
}

/// Suppression of the entangled coherent state's interference term when
/// `traced` of its `modes` modes are traced out. With `numeric_cutoff`
/// the factor is also measured from the reduced density operator.
pub fn partial_trace_fringe_suppression(
    modes: usize,
    traced: usize,
    alpha: Complex64,
    numeric_cutoff: Option<usize>,
) -> Result<FringeSuppression> {
    if modes == 0 || traced >= modes {
        return Err(Error::out_of_range("n_traced", traced as f64, "0 <= n_traced < N"));
    }
    let x = alpha.norm_sqr();
    let n = traced as f64;
    let mut out = FringeSuppression {
        modes,
        traced,
        coherence_factor: (-2.0 * n * x).exp(),
        alternative_factor: (-0.5 * n * x).exp(),
        measured: None,
        measured_exponent: None,
    };
    if let Some(cutoff) = numeric_cutoff {
        let kept = modes - traced;
        let keep: Vec<usize> = (0..kept).collect();
        let psi = omega_vector(modes, alpha, cutoff)?;
        let rho = partial_trace_pure(&psi, &keep)?;
        let origin = vec![ZERO; kept];
        let w = wigner_numeric_density(&rho, &origin)?.value;
        // dephased reduced state: w2 (|a><a| + |-a><-a|) on the kept modes
        let w2 = crate::closed::omega_norm(modes, alpha).powi(2);
        let lobes: f64 = [alpha, -alpha]
            .iter()
            .map(|&b| wigner_numeric(&product_coherent(&vec![b; kept], cutoff)?, &origin).map(|v| v.value))
            .sum::<Result<f64>>()?;
        let untraced = 2.0 * w2 * FRAC_2_PI.powi(kept as i32);
        let measured = (w - w2 * lobes) / untraced;
        out.measured = Some(measured);
        out.measured_exponent = if traced > 0 && x > 0.0 && measured > 0.0 {
            Some(-measured.ln() / (n * x))
        } else {
            None
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_vector, hcs_vector, kitten_vector};

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_and_coherent_numeric() {
        let vac = FockVector::vacuum(10, 1).unwrap();
        let w = wigner_numeric(&vac, &[ZERO]).unwrap();
        assert!((w.value - FRAC_2_PI).abs() < 1e-12);
        let beta = z(0.8, -0.3);
        let (coh, _) = coherent_vector(beta, 30).unwrap();
        for g in [z(0.0, 0.0), z(1.0, 0.5), z(-0.7, 1.2)] {
            let w = wigner_numeric(&coh, &[g]).unwrap();
            let expect = FRAC_2_PI * (-2.0 * (g - beta).norm_sqr()).exp();
            assert!((w.value - expect).abs() < 1e-8, "{g}");
            assert!(w.imag_residue < 1e-9);
        }
    }

    #[test]
    fn even_cat_origin() {
        let a = 2.0f64;
        let cat = kitten_vector(c(a), true, 40).unwrap();
        let w = wigner_numeric(&cat, &[ZERO]).unwrap().value;
        let s = (-2.0 * a * a).exp();
        let expect = FRAC_2_PI * (2.0 * s + 2.0) / (2.0 + 2.0 * s);
        assert!((w - expect).abs() < 1e-9);
        let spec = CatStateSpec::new(StateFamily::EvenCat, 1, c(a)).unwrap();
        assert!((wigner_cat_closed(&spec, &[ZERO]).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn closed_kernels_match_numeric() {
        let pts = [z(0.3, -0.4), z(-1.1, 0.2), z(0.0, 0.9)];
        for (fam, modes, a) in [
            (StateFamily::EvenCat, 1, z(1.3, 0.4)),
            (StateFamily::OddCat, 1, z(0.9, 0.0)),
            (StateFamily::Omega, 2, z(1.0, 0.0)),
            (StateFamily::ProductCoherent, 2, z(-0.6, 0.5)),
            (StateFamily::Hcs, 2, z(1.1, 0.0)),
        ] {
            let spec = CatStateSpec::new(fam, modes, a).unwrap();
            let cutoff = 24;
            let psi = match fam {
                StateFamily::EvenCat => kitten_vector(a, true, cutoff).unwrap(),
                StateFamily::OddCat => kitten_vector(a, false, cutoff).unwrap(),
                StateFamily::Omega => omega_vector(modes, a, cutoff).unwrap(),
                StateFamily::ProductCoherent => product_coherent(&vec![a; modes], cutoff).unwrap(),
                _ => hcs_vector(modes, a, cutoff).unwrap(),
            };
            for p in pts {
                let g: Vec<Complex64> = (0..modes).map(|k| p * (1.0 - 0.3 * k as f64)).collect();
                let closed = wigner_cat_closed(&spec, &g).unwrap();
                let num = wigner_numeric(&psi, &g).unwrap().value;
                assert!((closed - num).abs() < 1e-8, "{fam:?} at {p}: {closed} vs {num}");
            }
        }
    }

    #[test]
    fn hcs2_structured_form_matches_expansion() {
        let a = z(1.5, 0.0);
        let spec = CatStateSpec::new(StateFamily::Hcs, 2, a).unwrap();
        for (g1, g2) in [(z(0.2, 0.1), z(-0.5, 0.7)), (z(1.5, 0.0), z(1.4, -0.2)), (z(0.0, 0.3), z(0.0, -0.3))] {
            let w = wigner_hcs2_closed(g1, g2, a).unwrap();
            let e = wigner_cat_closed(&spec, &[g1, g2]).unwrap();
            assert!((w - e).abs() < 1e-13, "{w} vs {e}");
            assert!((w - wigner_hcs2_closed(g2, g1, a).unwrap()).abs() < 1e-15);
        }
        let complex_a = z(0.7, -0.8);
        let spec = CatStateSpec::new(StateFamily::Hcs, 2, complex_a).unwrap();
        let (g1, g2) = (z(0.4, 0.2), z(-0.3, 0.6));
        let w = wigner_hcs2_closed(g1, g2, complex_a).unwrap();
        assert!((w - wigner_cat_closed(&spec, &[g1, g2]).unwrap()).abs() < 1e-13);
        assert!(wigner_hcs2_closed(g1, g2, ZERO).is_err());
    }

    #[test]
    fn density_route_matches_pure_route() {
        let psi = omega_vector(2, c(0.8), 16).unwrap();
        let rho = psi.density().unwrap();
        let g = [z(0.2, 0.3), z(-0.4, 0.1)];
        let a = wigner_numeric(&psi, &g).unwrap().value;
        let b = wigner_numeric_density(&rho, &g).unwrap().value;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn headroom_error_for_large_displacement() {
        let psi = omega_vector(3, c(1.0), 20).unwrap();
        let err = wigner_numeric(&psi, &[z(40.0, 0.0), ZERO, ZERO]).unwrap_err();
        assert!(matches!(err, Error::Headroom { .. }), "{err}");
    }

    #[test]
    fn fringe_suppression_follows_coherence_factor() {
        let f = partial_trace_fringe_suppression(2, 1, c(1.0), Some(20)).unwrap();
        let measured = f.measured.unwrap();
        assert!((measured / f.coherence_factor - 1.0).abs() < 0.05);
        assert!((f.measured_exponent.unwrap() - 2.0).abs() < 1e-6);
        let none = partial_trace_fringe_suppression(4, 0, c(1.0), None).unwrap();
        assert_eq!(none.coherence_factor, 1.0);
        assert!(partial_trace_fringe_suppression(2, 2, c(1.0), None).is_err());
    }
}
