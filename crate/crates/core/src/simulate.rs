//! Monte Carlo trajectories of the sequential measurement protocols.
//!
//! Every single-mode state involved lives in the span of |a> and |-a>, so
//! the simulations work in the orthonormal Gram frame
//! e1 = |a>, e2 = (|-a> - s|a>)/c with s = e^{-2|a|^2}, c = sqrt(1 - s^2).
//! Multi-mode states stay superpositions of two product vectors.
//!
//! Trajectory i draws from ChaCha8 seeded with `seed` on stream i, so the
//! statistics do not depend on how trajectories are scheduled.

use crate::closed::{self, omega_norm};
use crate::error::{Error, Result};
use crate::linalg::{compensated_sum, hermitian_eigen_2x2, ONE, ZERO};
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

pub type C2 = Vector2<Complex64>;
pub type M2 = Matrix2<Complex64>;

pub const SEED_SCHEME: &str = "chacha8(seed_from_u64(seed)), stream = trajectory index";

/// Largest trajectory count accepted by the simulators.
pub const MAX_TRIALS: u64 = 1 << 32;

pub const NORM_TOLERANCE: f64 = 1e-10;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(Error::out_of_range("trials", trials as f64, "1 <= trials <= 2^32"));
    }
    Ok(())
}

fn check_alpha(alpha: Complex64) -> Result<f64> {
    let x = alpha.norm_sqr();
    if !x.is_finite() {
        return Err(Error::Invalid("alpha must be finite".into()));
    }
    if x == 0.0 {
        return Err(Error::Degenerate("alpha = 0: the span of |a> and |-a> is one-dimensional".into()));
    }
    Ok(x)
}

/// Gram-frame coordinates of |a> and |-a>.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramFrame {
    pub overlap: f64,
    #[serde(skip)]
    pub plus: C2,
    #[serde(skip)]
    pub minus: C2,
}

impl GramFrame {
    pub fn new(alpha: Complex64) -> Result<Self> {
        let x = check_alpha(alpha)?;
        let s = (-2.0 * x).exp();
        // c = sqrt(1 - s^2) = sqrt(-expm1(-4x)), accurate for small x
        let cc = (-(-4.0 * x).exp_m1()).sqrt();
        Ok(GramFrame {
            overlap: s,
            plus: C2::new(ONE, ZERO),
            minus: C2::new(c(s), c(cc)),
        })
    }

    /// Normalized even (+) or odd (-) kitten.
    pub fn kitten(&self, even: bool) -> C2 {
        let v = if even { self.plus + self.minus } else { self.plus - self.minus };
        v / c(v.norm())
    }
}

/// Helstrom measurement between two pure states of the frame, as
/// orthogonal projectors onto the positive and negative eigenvectors.
#[derive(Debug, Clone, Copy)]
pub struct FrameHelstrom {
    pub positive: C2,
    pub negative: C2,
    pub eigenvalues: [f64; 2],
}

impl FrameHelstrom {
    /// Eigenprojectors of |u><u| - |v><v| (or of the given difference).
    pub fn from_difference(m: M2) -> Self {
        let (vals, vecs) = hermitian_eigen_2x2([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]);
        FrameHelstrom {
            negative: C2::new(vecs[0][0], vecs[0][1]),
            positive: C2::new(vecs[1][0], vecs[1][1]),
            eigenvalues: vals,
        }
    }

    pub fn pure(u: &C2, v: &C2) -> Self {
        Self::from_difference(u * u.adjoint() - v * v.adjoint())
    }
}

/// Per-mode two-outcome POVM {E1^dag E1, E2^dag E2} that maps the branch
/// pair onto the orthonormal pair (e2, e1) on outcome E1.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DistillationPovm {
    #[serde(serialize_with = "crate::envelope::complex_pair")]
    pub alpha: Complex64,
    pub overlap: f64,
    pub k: f64,
    #[serde(skip)]
    pub e1: C2,
    #[serde(skip)]
    pub e2: C2,
    #[serde(skip)]
    pub phi_minus: C2,
    #[serde(skip)]
    pub chi: C2,
    #[serde(skip)]
    pub frame: GramFrame,
    #[serde(skip)]
    pub kraus1: M2,
    #[serde(skip)]
    pub kraus2: M2,
}

/// E1 = k (|e1><e2| + |e2><phi_-|) with phi_- orthogonal to |-a>.
///
/// E1^dag E1 has eigenvalues k^2 (1 +- s); the largest k keeping the POVM
/// valid puts the top one at 1, which leaves I - E1^dag E1 of rank one.
pub fn build_distillation_povm(alpha: Complex64) -> Result<DistillationPovm> {
    let frame = GramFrame::new(alpha)?;
    let s = frame.overlap;
    let cc = frame.minus[1].re;
    let e1 = C2::new(ONE, ZERO);
    let e2 = C2::new(ZERO, ONE);
    let phi_minus = C2::new(c(cc), c(-s));
    let k = (1.0 / (1.0 + s)).sqrt();
    let kraus1 = (e1 * e2.adjoint() + e2 * phi_minus.adjoint()) * c(k);
    let gram = kraus1.adjoint() * kraus1;
    let (_, vecs) = hermitian_eigen_2x2([[gram[(0, 0)], gram[(0, 1)]], [gram[(1, 0)], gram[(1, 1)]]]);
    let chi = C2::new(vecs[0][0], vecs[0][1]);
    let weight = (2.0 * s / (1.0 + s)).sqrt();
    let kraus2 = chi * chi.adjoint() * c(weight);
    Ok(DistillationPovm {
        alpha,
        overlap: s,
        k,
        e1,
        e2,
        phi_minus,
        chi,
        frame,
        kraus1,
        kraus2,
    })
}

impl DistillationPovm {
    /// max |E1^dag E1 + E2^dag E2 - I|
    pub fn completeness_defect(&self) -> f64 {
        let sum = self.kraus1.adjoint() * self.kraus1 + self.kraus2.adjoint() * self.kraus2;
        (sum - M2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of E2^dag E2, ascending.
    pub fn e2_spectrum(&self) -> [f64; 2] {
        let g = self.kraus2.adjoint() * self.kraus2;
        hermitian_eigen_2x2([[g[(0, 0)], g[(0, 1)]], [g[(1, 0)], g[(1, 1)]]]).0
    }

    /// Probability of E1 on |a> and on |-a>.
    pub fn e1_probabilities(&self) -> [f64; 2] {
        [
            (self.kraus1 * self.frame.plus).norm_squared(),
            (self.kraus1 * self.frame.minus).norm_squared(),
        ]
    }

    pub fn kraus(&self, outcome_e1: bool) -> &M2 {
        if outcome_e1 {
            &self.kraus1
        } else {
            &self.kraus2
        }
    }
}

/// c0 (x) u_i + c1 (x) v_i with unit per-mode vectors; weights live in
/// the coefficients. `cross` is the product of <u_i|v_i> over measured
/// modes; unmeasured modes all still hold (|a>, |-a>).
#[derive(Debug, Clone)]
struct TwoBranchTrajectory {
    coeffs: [Complex64; 2],
    cross: Complex64,
    measured: usize,
    modes: usize,
    overlap: f64,
}

impl TwoBranchTrajectory {
    fn omega(modes: usize, alpha: Complex64, frame: &GramFrame) -> Self {
        let w = c(omega_norm(modes, alpha));
        TwoBranchTrajectory {
            coeffs: [w, w],
            cross: ONE,
            measured: 0,
            modes,
            overlap: frame.overlap,
        }
    }

    fn norm2_with(&self, cross: Complex64) -> f64 {
        let [a, b] = self.coeffs;
        (a.norm_sqr() + b.norm_sqr() + 2.0 * (a.conj() * b * cross).re).max(0.0)
    }

    fn norm2(&self) -> f64 {
        let rest = self.overlap.powi((self.modes - self.measured) as i32);
        self.norm2_with(self.cross * rest)
    }

    /// Applies `kraus` to the next unmeasured mode without renormalizing;
    /// returns the squared norm of the result relative to before.
    fn apply(&mut self, kraus: &M2, frame: &GramFrame) -> f64 {
        let before = self.norm2();
        let u = kraus * frame.plus;
        let v = kraus * frame.minus;
        let (nu, nv) = (u.norm(), v.norm());
        self.coeffs[0] *= nu;
        self.coeffs[1] *= nv;
        let local = if nu > 0.0 && nv > 0.0 { u.dotc(&v) / (nu * nv) } else { ZERO };
        self.cross *= local;
        self.measured += 1;
        self.norm2() / before
    }

    fn renormalize(&mut self) -> f64 {
        let n = self.norm2().sqrt();
        self.coeffs[0] /= n;
        self.coeffs[1] /= n;
        (self.norm2() - 1.0).abs()
    }
}

/// Summary statistics over integer-labelled trajectories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    pub trials: u64,
    pub histogram: BTreeMap<i64, u64>,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub seed: u64,
    pub seed_scheme: &'static str,
}

impl TrajectoryStats {
    /// Mean and unbiased variance of value(label) weighted by counts.
    pub fn from_histogram(histogram: BTreeMap<i64, u64>, seed: u64, value: impl Fn(i64) -> f64) -> Self {
        let trials: u64 = histogram.values().sum();
        let n = trials as f64;
        let mean = if trials == 0 {
            f64::NAN
        } else {
            compensated_sum(histogram.iter().map(|(&k, &cnt)| cnt as f64 * value(k))) / n
        };
        let variance = if trials > 1 {
            compensated_sum(histogram.iter().map(|(&k, &cnt)| {
                let d = value(k) - mean;
                cnt as f64 * d * d
            })) / (n - 1.0)
        } else {
            0.0
        };
        TrajectoryStats {
            trials,
            histogram,
            mean,
            variance,
            std_error: if trials > 0 { (variance / n).sqrt() } else { f64::NAN },
            seed,
            seed_scheme: SEED_SCHEME,
        }
    }

    pub fn frequency(&self, label: i64) -> f64 {
        *self.histogram.get(&label).unwrap_or(&0) as f64 / self.trials as f64
    }

    /// Whether `target` lies within `k` standard errors of the mean. A zero
    /// standard error falls back to a 1e-12 absolute window.
    pub fn within(&self, target: f64, k: f64) -> bool {
        let window = (k * self.std_error).max(1e-12);
        (self.mean - target).abs() <= window
    }
}

type Histograms<const L: usize> = [BTreeMap<i64, u64>; L];

/// Runs `trials` trajectories in parallel and tallies their labels.
/// Integer counts make the reduction independent of scheduling.
fn tally<const L: usize, F>(trials: u64, seed: u64, f: F) -> (Histograms<L>, f64)
where
    F: Fn(&mut ChaCha8Rng) -> ([i64; L], f64) + Sync,
{
    let empty = || (std::array::from_fn::<_, L, _>(|_| BTreeMap::new()), 0.0f64);
    (0..trials)
        .into_par_iter()
        .fold(empty, |(mut hs, worst), i| {
            let mut rng = trajectory_rng(seed, i);
            let (labels, dev) = f(&mut rng);
            for (h, l) in hs.iter_mut().zip(labels) {
                *h.entry(l).or_insert(0) += 1;
            }
            (hs, worst.max(dev))
        })
        .reduce(empty, |(mut a, wa), (b, wb)| {
            for (ha, hb) in a.iter_mut().zip(b) {
                for (k, v) in hb {
                    *ha.entry(k).or_insert(0) += v;
                }
            }
            (a, wa.max(wb))
        })
}

#[derive(Debug, Clone, Serialize)]
pub struct DistillationRun {
    pub modes: usize,
    pub povm: DistillationPovm,
    /// Number of E1 outcomes per trajectory.
    pub n: TrajectoryStats,
    /// Index of the first E1 outcome, 0 when none occurred.
    pub first_success: TrajectoryStats,
    pub max_norm_deviation: f64,
}

impl DistillationRun {
    /// Every trajectory kept unit norm after each Kraus step.
    pub fn norm_conserved(&self) -> bool {
        self.max_norm_deviation < NORM_TOLERANCE
    }
}

fn check_modes(modes: usize) -> Result<()> {
    if modes == 0 || modes > i32::MAX as usize {
        return Err(Error::out_of_range("N", modes as f64, "N >= 1"));
    }
    Ok(())
}

/// One distillation trajectory: (number of E1 outcomes, first E1 index).
fn distill_once(povm: &DistillationPovm, modes: usize, rng: &mut ChaCha8Rng) -> ([i64; 2], f64) {
    let mut st = TwoBranchTrajectory::omega(modes, povm.alpha, &povm.frame);
    let mut worst = st.renormalize();
    let (mut count, mut first) = (0i64, 0i64);
    for j in 0..modes {
        let mut trial = st.clone();
        let p1 = trial.apply(&povm.kraus1, &povm.frame);
        let e1 = rng.random::<f64>() < p1;
        if e1 {
            st = trial;
            count += 1;
            if first == 0 {
                first = j as i64 + 1;
            }
        } else {
            st.apply(&povm.kraus2, &povm.frame);
        }
        worst = worst.max(st.renormalize());
    }
    ([count, first], worst)
}

pub fn simulate_distillation(modes: usize, alpha: Complex64, trials: u64, seed: u64) -> Result<DistillationRun> {
    check_modes(modes)?;
    check_trials(trials)?;
    let povm = build_distillation_povm(alpha)?;
    let ([hn, hf], worst) = tally(trials, seed, |rng| distill_once(&povm, modes, rng));
    Ok(DistillationRun {
        modes,
        povm,
        n: TrajectoryStats::from_histogram(hn, seed, |k| k as f64),
        first_success: TrajectoryStats::from_histogram(hf, seed, |k| k as f64),
        max_norm_deviation: worst,
    })
}

/// Exact probability of a sequence of outcomes (true = E1) on the first
/// modes of the entangled coherent state.
pub fn distillation_sequence_probability(modes: usize, alpha: Complex64, outcomes: &[bool]) -> Result<f64> {
    check_modes(modes)?;
    if outcomes.len() > modes {
        return Err(Error::Invalid("more outcomes than modes".into()));
    }
    let povm = build_distillation_povm(alpha)?;
    let mut st = TwoBranchTrajectory::omega(modes, povm.alpha, &povm.frame);
    st.renormalize();
    let mut p = 1.0;
    for &o in outcomes {
        p *= st.apply(povm.kraus(o), &povm.frame);
        st.renormalize();
    }
    Ok(p)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeLossRun {
    pub modes: usize,
    pub lambda: f64,
    /// Histogram keyed by the number of lost modes; values are the
    /// surviving coherence omega_norm^2 e^{-2k|a|^2}.
    pub omega: TrajectoryStats,
    /// Same loss samples applied to the GHZ reference: 1/2 if nothing was lost.
    pub ghz: TrajectoryStats,
}

pub fn simulate_mode_loss(modes: usize, alpha: Complex64, lambda: f64, trials: u64, seed: u64) -> Result<ModeLossRun> {
    check_modes(modes)?;
    check_trials(trials)?;
    closed::check_lambda(lambda)?;
    let x = alpha.norm_sqr();
    if !x.is_finite() {
        return Err(Error::Invalid("alpha must be finite".into()));
    }
    let w2 = omega_norm(modes, alpha).powi(2);
    let ([h], _) = tally(trials, seed, |rng| {
        let lost = (0..modes).filter(|_| rng.random::<f64>() < lambda).count();
        ([lost as i64], 0.0)
    });
    Ok(ModeLossRun {
        modes,
        lambda,
        omega: TrajectoryStats::from_histogram(h.clone(), seed, |k| w2 * (-2.0 * k as f64 * x).exp()),
        ghz: TrajectoryStats::from_histogram(h, seed, |k| if k == 0 { 0.5 } else { 0.0 }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CollapseProblem {
    BranchVsBranch,
    CatVsMixed,
    CatVsBranch,
}

impl CollapseProblem {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "BRANCH_VS_BRANCH" => Ok(CollapseProblem::BranchVsBranch),
            "CAT_VS_MIXED" => Ok(CollapseProblem::CatVsMixed),
            "CAT_VS_BRANCH" => Ok(CollapseProblem::CatVsBranch),
            other => Err(Error::Invalid(format!("unknown collapse problem '{other}'"))),
        }
    }
}

/// Outcome labels: 1 for the positive Helstrom outcome (xi_+, the cat, or
/// the cat respectively), 0 for the other. For CAT_VS_BRANCH the follow-up
/// measurement adds 10 when it finds |-a>.
#[derive(Debug, Clone, Serialize)]
pub struct BranchCollapseRun {
    pub problem: CollapseProblem,
    #[serde(serialize_with = "crate::envelope::complex_pair")]
    pub alpha: Complex64,
    pub outcomes: TrajectoryStats,
    /// The headline frequency: xi_+ for BRANCH_VS_BRANCH, the cat outcome for
    /// CAT_VS_MIXED, final |a> given the branch outcome for CAT_VS_BRANCH.
    pub reported: TrajectoryStats,
    pub exact_probability: f64,
    /// |<a|xi>|^2 and |<-a|xi>|^2 for the positive and negative post-states.
    pub post_fidelities: [[f64; 2]; 2],
}

pub fn simulate_branch_collapse(
    alpha: Complex64,
    trials: u64,
    seed: u64,
    problem: CollapseProblem,
) -> Result<BranchCollapseRun> {
    check_trials(trials)?;
    let frame = GramFrame::new(alpha)?;
    let cat = frame.kitten(true);
    let (u, v) = (frame.plus, frame.minus);
    let proj = |x: &C2| x * x.adjoint();
    let helstrom = match problem {
        CollapseProblem::BranchVsBranch => FrameHelstrom::pure(&u, &v),
        CollapseProblem::CatVsMixed => {
            let mixed = (proj(&u) + proj(&v)) * c(0.5);
            FrameHelstrom::from_difference(proj(&cat) - mixed)
        }
        CollapseProblem::CatVsBranch => FrameHelstrom::pure(&cat, &u),
    };
    let (pos, neg) = (helstrom.positive, helstrom.negative);
    let p_pos = pos.dotc(&cat).norm_sqr();
    let fid = |x: &C2| [u.dotc(x).norm_sqr(), v.dotc(x).norm_sqr()];
    let post_fidelities = [fid(&pos), fid(&neg)];

    // symmetric orthonormalization of {|a>, |-a>} for the follow-up measurement
    let (ya, yb) = lowdin_pair(&u, &v);
    let p_a_given_neg = ya.dotc(&neg).norm_sqr() / (ya.dotc(&neg).norm_sqr() + yb.dotc(&neg).norm_sqr());
    let p_a_given_pos = ya.dotc(&pos).norm_sqr() / (ya.dotc(&pos).norm_sqr() + yb.dotc(&pos).norm_sqr());

    let ([h], _) = tally(trials, seed, |rng| {
        let positive = rng.random::<f64>() < p_pos;
        let mut label = positive as i64;
        if problem == CollapseProblem::CatVsBranch {
            let pa = if positive { p_a_given_pos } else { p_a_given_neg };
            if rng.random::<f64>() >= pa {
                label += 10;
            }
        }
        ([label], 0.0)
    });
    let outcomes = TrajectoryStats::from_histogram(h.clone(), seed, |k| (k % 10) as f64);
    let (reported, exact) = match problem {
        CollapseProblem::CatVsBranch => {
            let cond: BTreeMap<i64, u64> = h
                .iter()
                .filter(|(k, _)| *k % 10 == 0)
                .map(|(&k, &n)| (k, n))
                .collect();
            (
                TrajectoryStats::from_histogram(cond, seed, |k| if k == 0 { 1.0 } else { 0.0 }),
                p_a_given_neg,
            )
        }
        _ => (outcomes.clone(), p_pos),
    };
    Ok(BranchCollapseRun {
        problem,
        alpha,
        outcomes,
        reported,
        exact_probability: exact,
        post_fidelities,
    })
}

/// S^{-1/2}-orthonormalized pair, symmetric under exchange.
fn lowdin_pair(u: &C2, v: &C2) -> (C2, C2) {
    let s = u.dotc(v);
    // for real overlap s, S^{-1/2} has entries (p, q) with
    // p = (1/sqrt(1+s) + 1/sqrt(1-s))/2, q = (1/sqrt(1+s) - 1/sqrt(1-s))/2
    let sr = s.re;
    let a = 1.0 / (1.0 + sr).sqrt();
    let b = 1.0 / (1.0 - sr).sqrt();
    let (p, q) = (0.5 * (a + b), 0.5 * (a - b));
    (u * c(p) + v * c(q), u * c(q) + v * c(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_vector, omega_vector};
    use crate::linalg::CMatrix;

    #[test]
    fn povm_invariants() {
        for a in [0.5, 1.0, 2.0] {
            let p = build_distillation_povm(c(a)).unwrap();
            assert!(p.completeness_defect() < 1e-12, "alpha {a}");
            assert!(p.e2_spectrum()[0].abs() < 1e-12);
            let expect = -(-2.0 * a * a as f64).exp_m1();
            for q in p.e1_probabilities() {
                assert!((q - expect).abs() < 1e-10);
            }
        }
        let far = build_distillation_povm(c(6.0)).unwrap();
        assert!(far.e1_probabilities()[0] > 1.0 - 1e-12);
        assert!(build_distillation_povm(c(0.0)).is_err());
    }

    #[test]
    fn phi_minus_is_orthogonal_to_minus_alpha() {
        let p = build_distillation_povm(c(0.7)).unwrap();
        assert!(p.phi_minus.dotc(&p.frame.minus).norm() < 1e-15);
    }

    #[test]
    fn sequence_probabilities_sum_and_match_first_success() {
        let (n, a) = (4, c(0.6));
        let mut total = 0.0;
        for bits in 0..(1u32 << n) {
            let seq: Vec<bool> = (0..n).map(|j| bits >> j & 1 == 1).collect();
            total += distillation_sequence_probability(n, a, &seq).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-12);
        for m in 1..=n {
            let mut seq = vec![false; m - 1];
            seq.push(true);
            let p = distillation_sequence_probability(n, a, &seq).unwrap();
            assert!((p - closed::distill_pm(m, n, a).unwrap()).abs() < 1e-12, "m {m}");
        }
    }

    /// Embeds a frame operator into the truncated single-mode space.
    fn embed(frame_op: &M2, alpha: Complex64, cutoff: usize) -> CMatrix {
        let (pa, _) = coherent_vector(alpha, cutoff).unwrap();
        let (ma, _) = coherent_vector(-alpha, cutoff).unwrap();
        let e1 = pa.amplitudes().clone();
        let s = pa.inner(&ma).unwrap();
        let mut e2 = ma.amplitudes() - &e1 * s;
        let nn = e2.norm();
        e2 /= c(nn);
        let basis = [e1, e2];
        let mut out = CMatrix::zeros(cutoff + 1, cutoff + 1);
        for i in 0..2 {
            for j in 0..2 {
                out += &basis[i] * basis[j].adjoint() * frame_op[(i, j)];
            }
        }
        out
    }

    #[test]
    fn sequence_probability_matches_fock_oracle() {
        let (n, a, cutoff) = (2, c(0.8), 24);
        let povm = build_distillation_povm(a).unwrap();
        let psi = omega_vector(n, a, cutoff).unwrap();
        let k = [embed(&povm.kraus2, a, cutoff), embed(&povm.kraus1, a, cutoff)];
        for (o0, o1) in [(false, false), (false, true), (true, false), (true, true)] {
            let op = crate::linalg::kron(&k[o0 as usize], &k[o1 as usize]);
            let out = &op * psi.amplitudes();
            let dense = out.norm_squared();
            let gram = distillation_sequence_probability(n, a, &[o0, o1]).unwrap();
            assert!((dense - gram).abs() < 1e-10, "{o0} {o1}: {dense} vs {gram}");
        }
        // the embedded POVM is complete on the span
        let sum = k[0].adjoint() * &k[0] + k[1].adjoint() * &k[1];
        let (pa, _) = coherent_vector(a, cutoff).unwrap();
        let back = &sum * pa.amplitudes();
        assert!((back - pa.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn distillation_monte_carlo() {
        let (n, a) = (5, c(0.8));
        let run = simulate_distillation(n, a, 20_000, 11).unwrap();
        assert_eq!(run.n.trials, 20_000);
        assert!(run.norm_conserved());
        assert!(run.n.within(closed::distill_expected_n(n, a), 4.0), "{:?}", run.n);
    }

    #[test]
    fn distillation_large_alpha_keeps_every_mode() {
        let run = simulate_distillation(6, c(3.0), 5_000, 3).unwrap();
        assert!(run.n.frequency(6) >= 0.999);
    }

    #[test]
    fn determinism_independent_of_threads() {
        let a = simulate_distillation(5, c(0.8), 3_000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_distillation(5, c(0.8), 3_000, 42).unwrap());
        assert_eq!(a.n, b.n);
        assert_eq!(a.first_success, b.first_success);
    }

    #[test]
    fn mode_loss_zero_lambda_is_constant() {
        let run = simulate_mode_loss(4, c(0.9), 0.0, 1_000, 1).unwrap();
        let w2 = omega_norm(4, c(0.9)).powi(2);
        assert_eq!(run.omega.variance, 0.0);
        assert!((run.omega.mean - w2).abs() < 1e-15);
        assert_eq!(run.ghz.mean, 0.5);
    }

    #[test]
    fn mode_loss_tracks_exact_mean() {
        let run = simulate_mode_loss(6, c(1.0), 0.25, 20_000, 9).unwrap();
        let exact = closed::mode_loss_offdiag_exact(6, 0.25, c(1.0)).unwrap();
        assert!(run.omega.within(exact, 4.0));
        assert!(run.ghz.within(closed::ghz_offdiag(6, 0.25).unwrap(), 4.0));
    }

    #[test]
    fn collapse_problems() {
        let bb = simulate_branch_collapse(c(2f64.sqrt()), 20_000, 5, CollapseProblem::BranchVsBranch).unwrap();
        assert!(bb.reported.within(0.5, 4.0));
        assert!(bb.post_fidelities[0][0] >= 0.99 && bb.post_fidelities[1][1] >= 0.99);
        let cm = simulate_branch_collapse(c(1.0), 1_000, 5, CollapseProblem::CatVsMixed).unwrap();
        assert_eq!(cm.outcomes.frequency(1), 1.0);
        let cb = simulate_branch_collapse(c(10f64.sqrt()), 50_000, 5, CollapseProblem::CatVsBranch).unwrap();
        let target = 0.5 + 0.5 / 2f64.sqrt();
        assert!((cb.exact_probability - target).abs() < 1e-3);
        assert!(cb.reported.within(target, 4.0));
    }

    #[test]
    fn std_error_shrinks_with_trials() {
        let a = simulate_mode_loss(6, c(0.5), 0.3, 10_000, 2).unwrap();
        let b = simulate_mode_loss(6, c(0.5), 0.3, 20_000, 2).unwrap();
        let r = a.omega.std_error / b.omega.std_error;
        assert!((r / 2f64.sqrt() - 1.0).abs() < 0.1, "{r}");
    }
}
