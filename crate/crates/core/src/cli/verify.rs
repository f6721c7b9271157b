//! Cross-validation battery: closed forms against the Fock-space oracle,
//! the splitter-network lemma, POVM invariants and Wigner kernels.

use super::envelope::Check;
use crate::closed::{self, CatStateSpec, GeneratorKind, StateFamily};
use crate::error::{Error, Result};
use crate::fock::{
    apply_splitter_network, coherent_vector, cutoff_for_tail, default_cutoff, kitten_vector, omega_vector,
    product_coherent, trace_norm, with_vacuum_ancillas,
};
use crate::measures::{
    branch_dist_size_real, brute_force_n_eff, marquardt_size, rqfi_evaluate, wigner_empirical_size,
    GeneratorFamily, MarquardtCheck,
};
use crate::phase_space::{
    extract_features, fock_state, partial_trace_fringe_suppression, wigner_cat_closed, wigner_grid,
    wigner_hcs2_closed, wigner_numeric, AxisSpec, SliceSpec,
};
use crate::simulate::{
    build_distillation_povm, distillation_sequence_probability, simulate_branch_collapse, simulate_distillation,
    simulate_mode_loss, CollapseProblem,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fast,
    Full,
}

impl Suite {
    fn pick<T>(self, fast: T, full: T) -> T {
        match self {
            Suite::Fast => fast,
            Suite::Full => full,
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Runs every check of the suite. The seed drives the random parameter
/// draws and the Monte Carlo runs.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    n_eff_against_oracle(&mut out, &mut rng, suite.pick(10, 50));
    trace_norm_identity(&mut out);
    splitter_lemma(&mut out);
    marquardt_sectors(&mut out);
    rqfi_identities(&mut out);
    distillation_invariants(&mut out);
    mode_loss_reference(&mut out);
    wigner_kernels(&mut out, &mut rng, suite);
    wigner_features(&mut out);
    invariance_axiom(&mut out, &mut rng, 20);
    monte_carlo(&mut out, suite, seed);
    out
}

fn guard(out: &mut Vec<Check>, name: &str, f: impl FnOnce() -> Result<Check>) {
    out.push(f().unwrap_or_else(|e| Check::errored(name, &e)));
}

fn n_eff_against_oracle(out: &mut Vec<Check>, rng: &mut ChaCha8Rng, draws: usize) {
    guard(out, "n_eff_closed_form_vs_oracle", || {
        let modes = 12;
        let mut mismatches = Vec::new();
        for _ in 0..draws {
            let a = c(rng.random_range(0.3..3.0));
            let (lo, hi) = closed::delta_validity_interval(modes, a)?;
            let t: f64 = rng.random_range(0.02..0.98);
            let delta = (lo.ln() + t * (hi.ln() - lo.ln())).exp();
            let closed_n = closed::n_eff_integer(delta, a)?;
            let oracle_n = brute_force_n_eff(delta, a, modes as u64 + 1)?;
            if oracle_n != Some(closed_n) {
                mismatches.push(json!({"alpha": a.re, "delta": delta, "closed": closed_n, "oracle": oracle_n}));
            }
        }
        Ok(Check::equal("n_eff_closed_form_vs_oracle", json!(mismatches), json!([])))
    });
}

fn trace_norm_identity(out: &mut Vec<Check>) {
    for a in [0.5, 1.0, 2.0] {
        let name = format!("trace_norm_identity[alpha={a}]");
        guard(out, &name.clone(), || {
            let cutoff = default_cutoff(a);
            let (p, _) = coherent_vector(c(a), cutoff)?;
            let (m, _) = coherent_vector(c(-a), cutoff)?;
            let diff = p.density()?.combine(1.0, &m.density()?, -1.0)?;
            let observed = trace_norm(&diff)?;
            let expected = 2.0 * (-(-4.0 * a * a).exp_m1()).sqrt();
            Ok(Check::close(name, observed, expected, 1e-10))
        });
    }
}

/// |<target|out>|^2 with both vectors at the same cutoff.
fn fidelity(a: &crate::fock::FockVector, b: &crate::fock::FockVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

fn splitter_lemma(out: &mut Vec<Check>) {
    for m in [2usize, 3, 4] {
        for a in [0.5, 1.0, 1.5] {
            let name = format!("splitter_network[M={m},alpha={a}]");
            guard(out, &name.clone(), || {
                let big = (m as f64).sqrt() * a;
                let cutoff = cutoff_for_tail(big * big, 1e-13);
                let (first, _) = coherent_vector(c(big), cutoff)?;
                let input = with_vacuum_ancillas(&first, m)?;
                let output = apply_splitter_network(&input)?;
                let target = product_coherent(&vec![c(a); m], cutoff)?;
                Ok(Check::at_least(name, fidelity(&target, &output)?, 1.0 - 1e-8))
            });
        }
    }
    guard(out, "cat_splitting[N=3,alpha=0.8]", || {
        let (n, a) = (3usize, 0.8);
        let big = (n as f64).sqrt() * a;
        let cutoff = cutoff_for_tail(big * big, 1e-13);
        let cat = kitten_vector(c(big), true, cutoff)?;
        let output = apply_splitter_network(&with_vacuum_ancillas(&cat, n)?)?;
        let target = omega_vector(n, c(a), cutoff)?;
        Ok(Check::at_least("cat_splitting[N=3,alpha=0.8]", fidelity(&target, &output)?, 1.0 - 1e-8))
    });
}

fn marquardt_sectors(out: &mut Vec<Check>) {
    guard(out, "marquardt_sector_pmf[N=2,alpha=1]", || {
        let st = CatStateSpec::omega(2, c(1.0))?;
        let r = marquardt_size(&st, Some(MarquardtCheck::default()))?;
        let diff = r.diagnostic_f64("pmf_max_abs_diff").unwrap_or(f64::NAN);
        Ok(Check::close("marquardt_sector_pmf[N=2,alpha=1]", diff, 0.0, 1e-10))
    });
    guard(out, "marquardt_sector_mean[N=2,alpha=1]", || {
        let st = CatStateSpec::omega(2, c(1.0))?;
        let r = marquardt_size(&st, Some(MarquardtCheck::default()))?;
        let mean = r.diagnostic_f64("numeric_mean").unwrap_or(f64::NAN);
        Ok(Check::close("marquardt_sector_mean[N=2,alpha=1]", mean, r.value, 1e-8))
    });
}

fn rqfi_identities(out: &mut Vec<Check>) {
    let bounded = GeneratorFamily::new(&[GeneratorKind::BoundedLocal]);
    for a in [0.5, 1.5] {
        let name = format!("rqfi_single_mode_bounded[alpha={a}]");
        guard(out, &name.clone(), || {
            let ev = rqfi_evaluate(&CatStateSpec::omega(1, c(a))?, &bounded, None)?;
            Ok(Check::close(name, ev.value, 1.0, 1e-9))
        });
    }
    for n in [1usize, 2, 4] {
        let name = format!("rqfi_bounded_ratio_closed_form[N={n},alpha=1.5]");
        guard(out, &name.clone(), || {
            let ev = rqfi_evaluate(&CatStateSpec::omega(n, c(1.5))?, &bounded, None)?;
            let r = ev
                .row("pseudo_sigma_z")
                .ok_or_else(|| Error::Invalid("pseudo_sigma_z missing".into()))?
                .ratio;
            Ok(Check::close(name, r, closed::rqfi_bound_bounded(n, c(1.5)), 1e-9))
        });
    }
    guard(out, "rqfi_bounded_scaling[N=4/N=2,alpha=1.5]", || {
        let r2 = rqfi_evaluate(&CatStateSpec::omega(2, c(1.5))?, &bounded, None)?.value;
        let r4 = rqfi_evaluate(&CatStateSpec::omega(4, c(1.5))?, &bounded, None)?.value;
        Ok(Check::close("rqfi_bounded_scaling[N=4/N=2,alpha=1.5]", r4 / r2, 2.0, 0.1))
    });
}

fn distillation_invariants(out: &mut Vec<Check>) {
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for n in [1usize, 2, 5, 10, 50] {
        for x in [0.01, 0.5, 1.0, 10.0] {
            let a = c(f64::sqrt(x));
            let sum: Result<f64> = (1..=n).map(|m| closed::distill_pm(m, n, a)).sum();
            match sum {
                Ok(s) => worst = worst.max((s - (n as f64 * x).tanh()).abs()),
                Err(e) => failure = Some(e),
            }
        }
    }
    out.push(match failure {
        Some(e) => Check::errored("distill_pm_sums_to_tanh", &e),
        None => Check::close("distill_pm_sums_to_tanh", worst, 0.0, 1e-12),
    });
    for a in [0.3, 1.0, 2.0] {
        let name = format!("distill_povm_completeness[alpha={a}]");
        guard(out, &name.clone(), || {
            let povm = build_distillation_povm(c(a))?;
            let spec = povm.e2_spectrum();
            let ok = povm.completeness_defect() <= 1e-12 && spec.iter().all(|&v| v >= -1e-12);
            Ok(Check::flag(
                name,
                ok,
                json!({"completeness_defect": povm.completeness_defect(), "e2_spectrum": spec}),
                json!({"completeness_defect": 0.0, "e2_spectrum": "non-negative"}),
                Some(1e-12),
            ))
        });
    }
    guard(out, "distill_sequences_sum_to_one[N=4,alpha=0.7]", || {
        let n = 4;
        let mut total = 0.0;
        for bits in 0u32..(1 << n) {
            let seq: Vec<bool> = (0..n).map(|k| bits >> k & 1 == 1).collect();
            total += distillation_sequence_probability(n, c(0.7), &seq)?;
        }
        Ok(Check::close("distill_sequences_sum_to_one[N=4,alpha=0.7]", total, 1.0, 1e-12))
    });
}

fn mode_loss_reference(out: &mut Vec<Check>) {
    guard(out, "mode_loss_ghz_reference[N=6,lambda=0.25]", || {
        let observed = closed::ghz_offdiag(6, 0.25)?;
        Ok(Check::close(
            "mode_loss_ghz_reference[N=6,lambda=0.25]",
            observed,
            0.5 * 0.75f64.powi(6),
            1e-15,
        ))
    });
}

fn random_point(rng: &mut ChaCha8Rng, modes: usize, r: f64) -> Vec<Complex64> {
    (0..modes)
        .map(|_| Complex64::new(rng.random_range(-r..r), rng.random_range(-r..r)))
        .collect()
}

fn wigner_kernels(out: &mut Vec<Check>, rng: &mut ChaCha8Rng, suite: Suite) {
    let points = suite.pick(12, 100);
    for (fam, modes, a) in [
        (StateFamily::EvenCat, 1, Complex64::new(2.0, 0.0)),
        (StateFamily::OddCat, 1, Complex64::new(1.2, -0.5)),
        (StateFamily::Omega, 2, Complex64::new(1.0, 0.0)),
        (StateFamily::ProductCoherent, 2, Complex64::new(-0.8, 0.6)),
        (StateFamily::Omega, 1, Complex64::new(1.7, 0.0)),
    ] {
        let name = format!("wigner_closed_vs_numeric[{},N={modes},alpha={}]", fam.name(), a);
        guard(out, &name.clone(), || {
            let spec = CatStateSpec::new(fam, modes, a)?;
            let psi = fock_state(&spec, default_cutoff(a.norm()))?;
            let mut worst: f64 = 0.0;
            for _ in 0..points {
                let g = random_point(rng, modes, a.norm() + 1.5);
                let d = wigner_cat_closed(&spec, &g)? - wigner_numeric(&psi, &g)?.value;
                worst = worst.max(d.abs());
            }
            Ok(Check::close(name, worst, 0.0, 1e-8))
        });
    }
    for (a, cutoff, count) in [(1.5, 40, suite.pick(20, 200)), (3.0, 60, suite.pick(4, 12))] {
        let name = format!("wigner_hcs2_closed_vs_numeric[alpha={a},cutoff={cutoff}]");
        guard(out, &name.clone(), || {
            let spec = CatStateSpec::new(StateFamily::Hcs, 2, c(a))?;
            let psi = fock_state(&spec, cutoff)?;
            let mut worst: f64 = 0.0;
            for _ in 0..count {
                let g = random_point(rng, 2, a + 1.0);
                let d = wigner_hcs2_closed(g[0], g[1], c(a))? - wigner_numeric(&psi, &g)?.value;
                worst = worst.max(d.abs());
            }
            Ok(Check::close(name, worst, 0.0, 1e-6))
        });
    }
    guard(out, "fringe_suppression[N=2,n=1,alpha=1]", || {
        let f = partial_trace_fringe_suppression(2, 1, c(1.0), Some(20))?;
        let measured = f.measured.unwrap_or(f64::NAN);
        Ok(Check::close(
            "fringe_suppression[N=2,n=1,alpha=1]",
            measured / f.coherence_factor,
            1.0,
            0.05,
        ))
    });
}

fn wigner_features(out: &mut Vec<Check>) {
    guard(out, "hcs2_origin_peak[alpha=3,gamma2=0]", || {
        let spec = CatStateSpec::new(StateFamily::Hcs, 2, c(3.0))?;
        let ax = AxisSpec::new(-5.0, 5.0, 201)?;
        let grid = wigner_grid(&spec, SliceSpec::plane(2, 0, ax, ax, &[c(0.0)])?)?;
        let f = extract_features(&grid)?;
        let top = f.peak_locations[0][0];
        let side = f.peak_values.get(1).copied().unwrap_or(0.0);
        Ok(Check::flag(
            "hcs2_origin_peak[alpha=3,gamma2=0]",
            top == [0.0, 0.0] && f.peak_values[0].abs() > side.abs(),
            json!({"top_location": top, "top_value": f.peak_values[0], "next_value": side}),
            json!({"top_location": [0.0, 0.0]}),
            None,
        ))
    });
    guard(out, "wigner_even_cat_features[alpha=2]", || {
        let r = wigner_empirical_size(&CatStateSpec::new(StateFamily::EvenCat, 1, c(2.0))?)?;
        let step = r.diagnostic_f64("grid_step").unwrap_or(f64::NAN);
        let sep = r.diagnostic_f64("peak_separation").unwrap_or(f64::NAN);
        let wl = r.diagnostic_f64("fringe_wavelength").unwrap_or(f64::NAN);
        let ok = (sep - 4.0).abs() <= step && (wl / (PI / 4.0) - 1.0).abs() <= 0.05;
        Ok(Check::flag(
            "wigner_even_cat_features[alpha=2]",
            ok,
            json!({"peak_separation": sep, "fringe_wavelength": wl}),
            json!({"peak_separation": 4.0, "fringe_wavelength": PI / 4.0}),
            Some(step),
        ))
    });
}

fn invariance_axiom(out: &mut Vec<Check>, rng: &mut ChaCha8Rng, draws: usize) {
    guard(out, "vacuum_mixing_invariance", || {
        let mut worst: f64 = 0.0;
        for _ in 0..draws {
            let n = rng.random_range(1..=12usize);
            let a = Complex64::from_polar(rng.random_range(0.2..2.0), rng.random_range(0.0..2.0 * PI));
            let delta = rng.random_range(1e-4..0.4);
            let lhs = branch_dist_size_real(&CatStateSpec::omega(n, a)?, delta)?.value;
            let single = CatStateSpec::new(StateFamily::EvenCat, 1, (n as f64).sqrt() * a)?;
            let rhs = branch_dist_size_real(&single, delta)?.value;
            worst = worst.max((lhs - rhs).abs() / lhs.abs());
        }
        Ok(Check::close("vacuum_mixing_invariance", worst, 0.0, 4.0 * f64::EPSILON))
    });
}

fn monte_carlo(out: &mut Vec<Check>, suite: Suite, seed: u64) {
    let trials = suite.pick(20_000u64, 100_000);
    guard(out, "mc_distillation_mean[N=5,alpha=0.8]", || {
        let run = simulate_distillation(5, c(0.8), trials, seed)?;
        let exp = closed::distill_expected_n(5, c(0.8));
        Ok(Check::close(
            "mc_distillation_mean[N=5,alpha=0.8]",
            run.n.mean,
            exp,
            3.0 * run.n.std_error,
        ))
    });
    guard(out, "mc_mode_loss_mean[N=6,alpha=1,lambda=0.25]", || {
        let run = simulate_mode_loss(6, c(1.0), 0.25, trials, seed)?;
        let exact = closed::mode_loss_offdiag_exact(6, 0.25, c(1.0))?;
        Ok(Check::close(
            "mc_mode_loss_mean[N=6,alpha=1,lambda=0.25]",
            run.omega.mean,
            exact,
            3.0 * run.omega.std_error,
        ))
    });
    if suite == Suite::Fast {
        out.push(Check::skipped("mc_branch_collapse", "full suite only"));
        return;
    }
    let a = c(10f64.sqrt());
    guard(out, "mc_collapse_cat_vs_branch[|alpha|^2=10]", || {
        let run = simulate_branch_collapse(a, 200_000, seed, CollapseProblem::CatVsBranch)?;
        Ok(Check::close(
            "mc_collapse_cat_vs_branch[|alpha|^2=10]",
            run.reported.mean,
            0.5 + 0.5 / 2f64.sqrt(),
            3.0 * run.reported.std_error,
        ))
    });
    guard(out, "mc_collapse_cat_vs_mixed[|alpha|^2=10]", || {
        let run = simulate_branch_collapse(a, trials, seed, CollapseProblem::CatVsMixed)?;
        Ok(Check::close("mc_collapse_cat_vs_mixed[|alpha|^2=10]", run.reported.mean, 1.0, 0.0))
    });
    guard(out, "mc_collapse_branch_vs_branch[|alpha|^2=2]", || {
        let run = simulate_branch_collapse(c(2f64.sqrt()), trials, seed, CollapseProblem::BranchVsBranch)?;
        Ok(Check::close(
            "mc_collapse_branch_vs_branch[|alpha|^2=2]",
            run.reported.mean,
            0.5,
            3.0 * run.reported.std_error,
        ))
    });
}
