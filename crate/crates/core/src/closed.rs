//! Closed-form expressions for entangled coherent states and their kin.
//!
//! Throughout, `x = |alpha|^2`. Quantities built from e^{-k x} use `exp_m1`
//! and `ln_1p` so that both the near-identical (x -> 0) and the near-orthogonal
//! (x large) regimes keep full relative precision.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StateFamily {
    /// (|a>^N + |-a>^N) / sqrt(2 + 2 e^{-2N|a|^2})
    Omega,
    /// Single-mode cat with amplitude sqrt(N) a followed by N - 1 vacua.
    OmegaPrime,
    /// Hierarchical cat: product of even kittens plus product of odd kittens.
    Hcs,
    EvenCat,
    OddCat,
    ProductCoherent,
    /// (|a>^N + |e2>^N)/sqrt(2), the output of successful distillation.
    GhzDistilled,
}

impl StateFamily {
    pub fn name(self) -> &'static str {
        match self {
            StateFamily::Omega => "OMEGA",
            StateFamily::OmegaPrime => "OMEGA_PRIME",
            StateFamily::Hcs => "HCS",
            StateFamily::EvenCat => "EVEN_CAT",
            StateFamily::OddCat => "ODD_CAT",
            StateFamily::ProductCoherent => "PRODUCT_COHERENT",
            StateFamily::GhzDistilled => "GHZ_DISTILLED",
        }
    }
}

/// Symbolic state description: family, mode count and per-mode amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatStateSpec {
    pub family: StateFamily,
    pub modes: usize,
    #[serde(serialize_with = "crate::envelope::complex_pair")]
    pub alpha: Complex64,
    #[serde(serialize_with = "crate::envelope::optional_complex_pair")]
    pub aux: Option<Complex64>,
}

impl CatStateSpec {
    pub fn new(family: StateFamily, modes: usize, alpha: Complex64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::Invalid("modes must be at least 1".into()));
        }
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::Invalid("alpha must be finite".into()));
        }
        let single_mode = matches!(family, StateFamily::EvenCat | StateFamily::OddCat);
        if single_mode && modes != 1 {
            return Err(Error::Invalid(format!(
                "{} is a single-mode family",
                family.name()
            )));
        }
        if matches!(family, StateFamily::OddCat | StateFamily::Hcs) && alpha.norm_sqr() == 0.0 {
            return Err(Error::Degenerate(format!(
                "{} needs alpha != 0 (odd kitten norm vanishes)",
                family.name()
            )));
        }
        Ok(CatStateSpec {
            family,
            modes,
            alpha,
            aux: None,
        })
    }

    pub fn omega(modes: usize, alpha: Complex64) -> Result<Self> {
        Self::new(StateFamily::Omega, modes, alpha)
    }

    pub fn with_aux(mut self, beta: Complex64) -> Self {
        self.aux = Some(beta);
        self
    }

    /// |alpha|^2
    pub fn intensity(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn a_plus(&self) -> f64 {
        hcs_norms(self.alpha).0
    }

    pub fn a_minus(&self) -> Result<f64> {
        hcs_norms(self.alpha)
            .1
            .ok_or_else(|| Error::Degenerate("A_minus vanishes at alpha = 0".into()))
    }
}

/// Generator kinds that can be combined into a Fisher-information family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GeneratorKind {
    BoundedLocal,
    Quadrature,
    Number,
    SpinSandwich,
}

impl GeneratorKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bounded" | "bounded-local" => Some(GeneratorKind::BoundedLocal),
            "quadrature" => Some(GeneratorKind::Quadrature),
            "number" => Some(GeneratorKind::Number),
            "spin" | "spin-sandwich" => Some(GeneratorKind::SpinSandwich),
            _ => None,
        }
    }
}

/// Parameters shared by the measures. Unused fields stay `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MeasureParams {
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub generator_family: Vec<GeneratorKind>,
    /// Number of equally spaced quadrature phases in [0, pi).
    pub quadrature_phases: Option<usize>,
}

impl MeasureParams {
    pub fn with_delta(delta: f64) -> Self {
        MeasureParams {
            delta: Some(delta),
            ..Default::default()
        }
    }

    pub fn with_lambda(lambda: f64) -> Self {
        MeasureParams {
            lambda: Some(lambda),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.delta {
            check_delta(d)?;
        }
        if let Some(l) = self.lambda {
            check_lambda(l)?;
        }
        Ok(())
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::out_of_range("delta", delta, "0 < delta < 1/2"));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::out_of_range("lambda", lambda, "0 <= lambda <= 1"));
    }
    Ok(())
}

fn check_nonzero(alpha: Complex64) -> Result<f64> {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return Err(Error::Degenerate("alpha = 0 makes the branches identical".into()));
    }
    Ok(x)
}

/// <alpha|beta> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(alpha) beta)
pub fn overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-0.5 * alpha.norm_sqr() - 0.5 * beta.norm_sqr() + alpha.conj() * beta).exp()
}

/// Normalization 1/sqrt(2 + 2 e^{-2N|alpha|^2}) of the entangled coherent state.
pub fn omega_norm(modes: usize, alpha: Complex64) -> f64 {
    let y = 2.0 * modes as f64 * alpha.norm_sqr();
    1.0 / (2.0 * (1.0 + (-y).exp())).sqrt()
}

/// 1 - e^{-y} for y >= 0 without cancellation.
fn one_minus_exp(y: f64) -> f64 {
    -(-y).exp_m1()
}

/// Helstrom success probability for n modes of the two branches.
pub fn helstrom_success_n_modes(n: f64, alpha: Complex64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(Error::out_of_range("n", n, "n >= 0"));
    }
    Ok(0.5 + 0.5 * one_minus_exp(4.0 * n * alpha.norm_sqr()).sqrt())
}

/// 1 - helstrom_success_n_modes, accurate when it is tiny.
pub fn helstrom_error_n_modes(n: f64, alpha: Complex64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(Error::out_of_range("n", n, "n >= 0"));
    }
    let e = (-4.0 * n * alpha.norm_sqr()).exp();
    Ok(e / (2.0 * (1.0 + one_minus_exp(4.0 * n * alpha.norm_sqr()).sqrt())))
}

/// ln(4 delta - 4 delta^2), accurate at both ends of (0, 1/2).
pub fn log_delta_term(delta: f64) -> f64 {
    if delta < 0.25 {
        (4.0 * delta).ln() + (-delta).ln_1p()
    } else {
        let g = 1.0 - 2.0 * delta;
        (-(g * g)).ln_1p()
    }
}

/// Real solution n of helstrom_success_n_modes(n, alpha) = 1 - delta.
pub fn n_eff_real(delta: f64, alpha: Complex64) -> Result<f64> {
    check_delta(delta)?;
    let x = check_nonzero(alpha)?;
    Ok(log_delta_term(delta) / (-4.0 * x))
}

/// Ceiling of [`n_eff_real`], never below one mode.
///
/// Values within a few ulps of an integer are snapped to it first, so the
/// interval endpoints land on 1 and N rather than one above.
pub fn n_eff_integer(delta: f64, alpha: Complex64) -> Result<u64> {
    let r = n_eff_real(delta, alpha)?;
    let nearest = r.round();
    let snapped = if (r - nearest).abs() <= 8.0 * f64::EPSILON * nearest.max(1.0) {
        nearest
    } else {
        r.ceil()
    };
    Ok((snapped as u64).max(1))
}

/// delta range for which 1 <= n_eff <= N.
pub fn delta_validity_interval(modes: usize, alpha: Complex64) -> Result<(f64, f64)> {
    let x = check_nonzero(alpha)?;
    let end = |k: f64| {
        let e = (-4.0 * k * x).exp();
        // 1/2 - sqrt(1 - e)/2 rewritten without cancellation
        e / (2.0 * (1.0 + one_minus_exp(4.0 * k * x).sqrt()))
    };
    Ok((end(modes as f64), end(1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatSizeC {
    pub n_eff: u64,
    pub value: f64,
    /// -4 N |alpha|^2 / ln(4 delta - 4 delta^2)
    pub approximation: f64,
}

/// Integer-mode branch-distinguishability size C = N / n_eff.
pub fn cat_size_c(delta: f64, modes: usize, alpha: Complex64) -> Result<CatSizeC> {
    check_delta(delta)?;
    let (lo, hi) = delta_validity_interval(modes, alpha)?;
    let tol = 8.0 * f64::EPSILON;
    if delta < lo * (1.0 - tol) || delta > hi * (1.0 + tol) {
        return Err(Error::DeltaOutsideInterval { delta, lo, hi });
    }
    let n_eff = n_eff_integer(delta, alpha)?.min(modes as u64);
    let x = alpha.norm_sqr();
    Ok(CatSizeC {
        n_eff,
        value: modes as f64 / n_eff as f64,
        approximation: -4.0 * modes as f64 * x / log_delta_term(delta),
    })
}

/// Real-valued size N / n_eff_real; no interval restriction.
pub fn cat_size_real(delta: f64, modes: usize, alpha: Complex64) -> Result<f64> {
    Ok(modes as f64 / n_eff_real(delta, alpha)?)
}

/// Poisson parameter s = N |alpha|^2 of the recursive-subspace measure.
pub fn marquardt_s(modes: usize, alpha: Complex64) -> f64 {
    modes as f64 * alpha.norm_sqr()
}

/// Poisson(N|alpha|^2) probability of subspace label d.
pub fn marquardt_pd(d: u64, modes: usize, alpha: Complex64) -> f64 {
    poisson_pmf(d, marquardt_s(modes, alpha))
}

pub fn poisson_pmf(d: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if d == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=d).map(|k| (k as f64).ln()).sum();
    (-mean + d as f64 * mean.ln() - ln_fact).exp()
}

/// Lower bound from the pseudo-sigma_z generator:
/// [N(1 - e^{-4x}) + e^{-2Nx} + e^{-4x}] / (1 + e^{-2Nx}).
pub fn rqfi_bound_bounded(modes: usize, alpha: Complex64) -> f64 {
    let n = modes as f64;
    let x = alpha.norm_sqr();
    let y = (-2.0 * n * x).exp();
    // written as 1 + (N - 1)(1 - e^{-4x})/(1 + y), equal term by term
    1.0 + (n - 1.0) * one_minus_exp(4.0 * x) / (1.0 + y)
}

/// N x tanh(N x) + x + 1/(2N)
pub fn rqfi_bound_quadrature(modes: usize, alpha: Complex64) -> f64 {
    let n = modes as f64;
    let x = alpha.norm_sqr();
    n * x * (n * x).tanh() + x + 0.5 / n
}

/// N^2 x tanh(N x) + N x + 1/2, the stated ceiling on the quadrature variance.
pub fn quadrature_variance_omega_bound(modes: usize, alpha: Complex64) -> f64 {
    let n = modes as f64;
    let x = alpha.norm_sqr();
    n * n * x * (n * x).tanh() + n * x + 0.5
}

/// Exact variance of sum_i x^(phi)_i in the entangled coherent state,
/// maximised over phi (phi aligned with alpha): N^2 x (1 + tanh(N x)) + N/2.
pub fn quadrature_variance_omega_exact(modes: usize, alpha: Complex64) -> f64 {
    let n = modes as f64;
    let x = alpha.norm_sqr();
    n * n * x * (1.0 + (n * x).tanh()) + 0.5 * n
}

/// Probability that the first E1 outcome happens at measurement m:
/// e^{(N-2m+1)x} sinh(x) / cosh(N x) = s^{m-1}(1 - s)/(1 + s^N), s = e^{-2x}.
pub fn distill_pm(m: usize, modes: usize, alpha: Complex64) -> Result<f64> {
    if m == 0 || m > modes {
        return Err(Error::out_of_range("m", m as f64, "1 <= m <= N"));
    }
    let x = alpha.norm_sqr();
    let ln_s = -2.0 * x;
    let ln_num = (m as f64 - 1.0) * ln_s + ln_one_minus_exp(2.0 * x);
    let ln_den = (modes as f64 * ln_s).exp().ln_1p();
    Ok((ln_num - ln_den).exp())
}

/// ln(1 - e^{-y}) for y > 0.
fn ln_one_minus_exp(y: f64) -> f64 {
    if y > std::f64::consts::LN_2 {
        (-(-y).exp()).ln_1p()
    } else {
        (-(-y).exp_m1()).ln()
    }
}

/// N (1 - e^{-2x}) / (1 + e^{-2N x})
pub fn distill_expected_n(modes: usize, alpha: Complex64) -> f64 {
    let n = modes as f64;
    let x = alpha.norm_sqr();
    n * one_minus_exp(2.0 * x) / (1.0 + (-2.0 * n * x).exp())
}

/// The printed expression for P(n(N) = n):
/// C(N, n) e^{-(N-1)x} (e^{2x} - 1) sinh(x) / cosh(N x).
///
/// It does not sum to one over n; kept for comparison only.
pub fn distill_pn_as_printed(n: usize, modes: usize, alpha: Complex64) -> Result<f64> {
    if n > modes {
        return Err(Error::out_of_range("n", n as f64, "0 <= n <= N"));
    }
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return Ok(0.0);
    }
    let nn = modes as f64;
    let ln_binom = ln_binomial(modes, n);
    // sinh(x)/cosh(Nx) = e^{(1-N)x} (1 - e^{-2x}) / (1 + e^{-2Nx})
    let ln_ratio = (1.0 - nn) * x + ln_one_minus_exp(2.0 * x) - (-2.0 * nn * x).exp().ln_1p();
    let ln_e2 = 2.0 * x + ln_one_minus_exp(2.0 * x);
    Ok((ln_binom - (nn - 1.0) * x + ln_e2 + ln_ratio).exp())
}

pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    let lf = |m: usize| (1..=m).map(|j| (j as f64).ln()).sum::<f64>();
    lf(n) - lf(k) - lf(n - k)
}

/// Expected coherence of the entangled coherent state after independent
/// whole-mode loss: e^{-2N lambda x} / (2 + 2 e^{-2N x}).
pub fn mode_loss_offdiag(modes: usize, lambda: f64, alpha: Complex64) -> Result<f64> {
    check_lambda(lambda)?;
    let n = modes as f64;
    let x = alpha.norm_sqr();
    Ok((-2.0 * n * lambda * x).exp() / (2.0 + 2.0 * (-2.0 * n * x).exp()))
}

/// The single-exponent rewrite e^{-2N lambda x - ln(2 + 2 e^{-2N lambda x})}.
/// It differs from [`mode_loss_offdiag`] whenever 0 < lambda < 1.
pub fn mode_loss_offdiag_rewrite(modes: usize, lambda: f64, alpha: Complex64) -> Result<f64> {
    check_lambda(lambda)?;
    let n = modes as f64;
    let x = alpha.norm_sqr();
    let y = -2.0 * n * lambda * x;
    Ok((y - (2.0 + 2.0 * y.exp()).ln()).exp())
}

/// Exact mean coherence under independent loss:
/// omega_norm^2 (1 - lambda + lambda e^{-2x})^N.
pub fn mode_loss_offdiag_exact(modes: usize, lambda: f64, alpha: Complex64) -> Result<f64> {
    check_lambda(lambda)?;
    let x = alpha.norm_sqr();
    let per_mode = 1.0 - lambda * one_minus_exp(2.0 * x);
    Ok(omega_norm(modes, alpha).powi(2) * per_mode.powi(modes as i32))
}

/// (1/2)(1 - lambda)^N for the reference GHZ state.
pub fn ghz_offdiag(modes: usize, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(0.5 * (1.0 - lambda).powi(modes as i32))
}

/// M = 2 N |alpha|^2
pub fn equivalent_ghz_size(modes: usize, alpha: Complex64) -> f64 {
    2.0 * modes as f64 * alpha.norm_sqr()
}

/// Trace of the particle-defined one-body density matrix: N x tanh(N x).
pub fn rdm_particle_trace(modes: usize, alpha: Complex64) -> f64 {
    let y = modes as f64 * alpha.norm_sqr();
    y * y.tanh()
}

/// Trace of the mode-defined one-body reduced state (always 1).
pub const RDM_MODE_TRACE: f64 = 1.0;

/// (A_plus, A_minus) = sqrt(2 +- 2 e^{-2x}); A_minus is None at alpha = 0.
pub fn hcs_norms(alpha: Complex64) -> (f64, Option<f64>) {
    let x = alpha.norm_sqr();
    let plus = (2.0 + 2.0 * (-2.0 * x).exp()).sqrt();
    let minus = if x == 0.0 {
        None
    } else {
        Some((2.0 * one_minus_exp(2.0 * x)).sqrt())
    };
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn overlap_special_cases() {
        let a = Complex64::new(0.7, -1.1);
        assert!((overlap(a, a) - c(1.0)).norm() < 1e-15);
        assert!((overlap(c(1.0), c(-1.0)).norm() - (-2.0f64).exp()).abs() < 1e-15);
        let b = Complex64::new(0.3, 0.4);
        assert!((overlap(c(0.0), b).re - (-0.125f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn omega_norm_limits() {
        assert_eq!(omega_norm(3, c(0.0)), 0.5);
        assert!((omega_norm(50, c(5.0)) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn helstrom_limits_and_monotonicity() {
        assert_eq!(helstrom_success_n_modes(0.0, c(1.0)).unwrap(), 0.5);
        assert!((helstrom_success_n_modes(100.0, c(1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(helstrom_success_n_modes(-1.0, c(1.0)).is_err());
        let e = helstrom_error_n_modes(3.0, c(2.0)).unwrap();
        assert!(e > 0.0 && e < 1e-20);
    }

    #[test]
    fn n_eff_examples() {
        assert_eq!(n_eff_integer(0.05, c(1.0)).unwrap(), 1);
        assert_eq!(n_eff_integer(0.01, c(0.5)).unwrap(), 4);
        assert!((n_eff_real(0.01, c(0.5)).unwrap() - 3.2289).abs() < 1e-4);
        assert!((n_eff_real(0.01, c(1.0)).unwrap() - 0.8073).abs() < 1e-4);
        assert_eq!(n_eff_integer(0.4999999, c(0.3)).unwrap(), 1);
    }

    #[test]
    fn n_eff_real_solves_the_success_condition() {
        for (delta, a) in [(0.01, 1.0), (0.2, 0.4), (1e-8, 2.5), (0.49, 0.1)] {
            let n = n_eff_real(delta, c(a)).unwrap();
            let p = helstrom_success_n_modes(n, c(a)).unwrap();
            assert!((p - (1.0 - delta)).abs() < 1e-12, "delta {delta} alpha {a}");
        }
    }

    #[test]
    fn validity_interval_examples() {
        let (lo, hi) = delta_validity_interval(2, c(1.0)).unwrap();
        assert!((lo / 8.39e-5 - 1.0).abs() < 1e-3, "{lo}");
        assert!((hi / 4.60e-3 - 1.0).abs() < 1e-3, "{hi}");
        assert_eq!(n_eff_integer(hi, c(1.0)).unwrap(), 1);
        assert_eq!(n_eff_integer(lo, c(1.0)).unwrap(), 2);
        let (lo1, hi1) = delta_validity_interval(1, c(0.8)).unwrap();
        assert_eq!(lo1, hi1);
        assert!(delta_validity_interval(1, c(0.0)).is_err());
    }

    #[test]
    fn cat_size_rejects_delta_outside_interval() {
        match cat_size_c(0.2, 2, c(1.0)) {
            Err(Error::DeltaOutsideInterval { lo, hi, .. }) => {
                assert!(lo < hi);
                let msg = cat_size_c(0.2, 2, c(1.0)).unwrap_err().to_string();
                assert!(msg.contains("8.39"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        let r = cat_size_c(0.01, 10, c(0.5)).unwrap();
        assert_eq!(r.n_eff, 4);
        assert_eq!(r.value, 2.5);
    }

    #[test]
    fn marquardt_pmf() {
        assert!((marquardt_pd(0, 2, c(1.0)) - (-2.0f64).exp()).abs() < 1e-16);
        let total: f64 = (0..60).map(|d| marquardt_pd(d, 4, c(1.0))).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert_eq!(marquardt_s(4, c(1.0)), 4.0);
    }

    #[test]
    fn bounded_rqfi_bound_identities() {
        for a in [0.0, 0.3, 1.0, 2.5] {
            assert!((rqfi_bound_bounded(1, c(a)) - 1.0).abs() < 1e-15);
        }
        assert!((rqfi_bound_bounded(7, c(6.0)) - 7.0).abs() < 1e-12);
        assert!((rqfi_bound_bounded(7, c(0.0)) - 1.0).abs() < 1e-15);
        // agrees with the unsimplified printed form
        let (n, x) = (5.0, 0.36f64);
        let y = (-2.0 * n * x).exp();
        let q = (-4.0 * x).exp();
        let printed = n * (1.0 - q) / (1.0 + y) + (y + q) / (1.0 + y);
        assert!((rqfi_bound_bounded(5, c(0.6)) - printed).abs() < 1e-14);
    }

    #[test]
    fn quadrature_bounds() {
        assert_eq!(rqfi_bound_quadrature(4, c(0.0)), 0.125);
        let r = rqfi_bound_quadrature(200, c(3.0)) / (200.0 * 9.0);
        assert!((r - 1.0).abs() < 0.01);
        // the stated variance ceiling is exact only for one mode
        assert!(
            (quadrature_variance_omega_bound(1, c(1.3)) - quadrature_variance_omega_exact(1, c(1.3)))
                .abs()
                < 1e-13
        );
        assert!(quadrature_variance_omega_exact(3, c(1.0)) > quadrature_variance_omega_bound(3, c(1.0)));
    }

    #[test]
    fn distill_first_success_sums_to_tanh() {
        for modes in [1, 2, 7, 50] {
            for x in [0.01, 0.5, 3.0, 10.0] {
                let a = c(f64::sqrt(x));
                let total: f64 = (1..=modes).map(|m| distill_pm(m, modes, a).unwrap()).sum();
                assert!((total - (modes as f64 * x).tanh()).abs() < 1e-12);
            }
        }
        assert!(distill_pm(0, 3, c(1.0)).is_err());
        assert!(distill_pm(4, 3, c(1.0)).is_err());
    }

    #[test]
    fn distill_pm_matches_printed_hyperbolic_form() {
        let (modes, x) = (6usize, 0.49f64);
        for m in 1..=modes {
            let printed = ((modes as f64 - 2.0 * m as f64 + 1.0) * x).exp() * x.sinh()
                / (modes as f64 * x).cosh();
            assert!((distill_pm(m, modes, c(0.7)).unwrap() - printed).abs() < 1e-14);
        }
    }

    #[test]
    fn distill_expected_limits() {
        assert!((distill_expected_n(1, c(1.0)) - 1f64.tanh()).abs() < 1e-15);
        assert!((distill_expected_n(9, c(8.0)) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn printed_pn_is_not_normalized() {
        let total: f64 = (0..=2).map(|n| distill_pn_as_printed(n, 2, c(1.0)).unwrap()).sum();
        assert!((total - 1.0).abs() > 0.05);
    }

    #[test]
    fn mode_loss_forms() {
        let a = c(1.0);
        let intact = mode_loss_offdiag(4, 0.0, a).unwrap();
        assert!((intact - omega_norm(4, a).powi(2)).abs() < 1e-16);
        assert!((mode_loss_offdiag_exact(4, 0.0, a).unwrap() - intact).abs() < 1e-16);
        // total loss: every mode is traced, coherence e^{-2N x} omega_norm^2
        let full = mode_loss_offdiag(5, 1.0, c(2.0)).unwrap();
        let exact = mode_loss_offdiag_exact(5, 1.0, c(2.0)).unwrap();
        assert!((full / exact - 1.0).abs() < 1e-12);
        assert!(mode_loss_offdiag(3, 1.5, a).is_err());
        assert!((ghz_offdiag(6, 0.25).unwrap() - 0.5 * 0.75f64.powi(6)).abs() < 1e-16);
        assert!((equivalent_ghz_size(3, c(2f64.sqrt())) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn rdm_trace_values() {
        assert_eq!(rdm_particle_trace(3, c(0.0)), 0.0);
        assert!((rdm_particle_trace(1, c(1.0)) - 0.7615941559557649).abs() < 1e-15);
    }

    #[test]
    fn hcs_norm_values() {
        let (p, m) = hcs_norms(c(0.0));
        assert_eq!(p, 2.0);
        assert!(m.is_none());
        let (p, m) = hcs_norms(c(10.0));
        assert!((p - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(CatStateSpec::new(StateFamily::Hcs, 2, c(0.0)).is_err());
    }
}
