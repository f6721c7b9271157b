//! Relative Fisher-information size over finite generator families.

use super::gram::{dense_sum_variance, TwoBranchState};
use crate::closed::{self, CatStateSpec, GeneratorKind, StateFamily};
use crate::error::{Error, Result};
use crate::fock::{coherent_vector, default_cutoff, joint_dim, mode_ops};
use crate::linalg::{hermitian_eigenvalues, CMatrix, CVector};
use num_complex::Complex64;
use serde::Serialize;

/// Default number of quadrature phases sampled in [0, pi).
pub const DEFAULT_QUADRATURE_PHASES: usize = 16;
/// Largest joint dimension used for the dense cross-check.
pub const DEFAULT_ORACLE_BUDGET: usize = 1 << 18;

/// Finite set of single-mode generators; A = sum_i a_i for each member a.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorFamily {
    pub kinds: Vec<GeneratorKind>,
    pub quadrature_phases: usize,
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub name: String,
    pub kind: GeneratorKind,
    pub matrix: CMatrix,
}

impl GeneratorFamily {
    pub fn new(kinds: &[GeneratorKind]) -> Self {
        let mut kinds = kinds.to_vec();
        kinds.sort();
        kinds.dedup();
        GeneratorFamily {
            kinds,
            quadrature_phases: DEFAULT_QUADRATURE_PHASES,
        }
    }

    pub fn with_phases(mut self, phases: usize) -> Self {
        self.quadrature_phases = phases.max(1);
        self
    }

    pub fn contains(&self, kind: GeneratorKind) -> bool {
        self.kinds.contains(&kind)
    }

    pub fn union(&self, other: &GeneratorFamily) -> GeneratorFamily {
        let mut kinds = self.kinds.clone();
        kinds.extend(other.kinds.iter().copied());
        GeneratorFamily::new(&kinds).with_phases(self.quadrature_phases.max(other.quadrature_phases))
    }

    /// Concrete single-mode matrices at `cutoff`. `frame` holds the two
    /// single-mode branch vectors of the state under study.
    pub fn members(
        &self,
        alpha: Complex64,
        frame: (&CVector, &CVector),
        cutoff: usize,
    ) -> Result<Vec<Generator>> {
        let ops = mode_ops(cutoff)?;
        let mut out = Vec::new();
        for &kind in &self.kinds {
            match kind {
                GeneratorKind::BoundedLocal => {
                    out.push(Generator {
                        name: "pseudo_sigma_z".into(),
                        kind,
                        matrix: pseudo_sigma_z(alpha, cutoff)?,
                    });
                    let (e1, e2) = orthonormal_frame(frame.0, frame.1)?;
                    for (name, m) in frame_paulis(&e1, &e2) {
                        out.push(Generator {
                            name: format!("frame_{name}"),
                            kind,
                            matrix: m,
                        });
                    }
                }
                GeneratorKind::Quadrature => {
                    // phases are measured from arg(alpha) so the grid turns with the state
                    for k in 0..self.quadrature_phases {
                        let phi = alpha.arg() + std::f64::consts::PI * k as f64 / self.quadrature_phases as f64;
                        out.push(Generator {
                            name: format!("quadrature[{k}/{}pi]", self.quadrature_phases),
                            kind,
                            matrix: ops.quadrature(phi).matrix().clone(),
                        });
                    }
                }
                GeneratorKind::Number => out.push(Generator {
                    name: "number".into(),
                    kind,
                    matrix: ops.number.matrix().clone(),
                }),
                GeneratorKind::SpinSandwich => {
                    let (plus, minus) = kittens(alpha, cutoff)?;
                    let a = ops.annihilation.matrix();
                    for (name, sigma) in frame_paulis(&plus, &minus) {
                        if name == "sigma_y" {
                            continue;
                        }
                        out.push(Generator {
                            name: format!("sandwich_{name}"),
                            kind,
                            matrix: a.adjoint() * sigma * a,
                        });
                    }
                }
            }
        }
        for g in &out {
            if g.kind == GeneratorKind::BoundedLocal {
                let norm = hermitian_eigenvalues(&g.matrix)
                    .into_iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()));
                if norm > 1.0 + 1e-9 {
                    return Err(Error::Invalid(format!(
                        "{} has operator norm {norm} above 1",
                        g.name
                    )));
                }
            }
        }
        Ok(out)
    }
}

/// (|a><a| - |-a><-a|) / sqrt(1 - e^{-4|a|^2})
pub fn pseudo_sigma_z(alpha: Complex64, cutoff: usize) -> Result<CMatrix> {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return Err(Error::Degenerate("pseudo sigma_z needs alpha != 0".into()));
    }
    let (p, _) = coherent_vector(alpha, cutoff)?;
    let (m, _) = coherent_vector(-alpha, cutoff)?;
    let (p, m) = (p.amplitudes(), m.amplitudes());
    let scale = 1.0 / (-(-4.0 * x).exp_m1()).sqrt();
    Ok((p * p.adjoint() - m * m.adjoint()).map(|z| z * scale))
}

/// Normalized even and odd kittens at the cutoff.
pub fn kittens(alpha: Complex64, cutoff: usize) -> Result<(CVector, CVector)> {
    let even = crate::fock::kitten_vector(alpha, true, cutoff)?;
    let odd = crate::fock::kitten_vector(alpha, false, cutoff)?;
    Ok((even.into_amplitudes(), odd.into_amplitudes()))
}

/// e1 = u/|u|, e2 = (v - <e1|v> e1)/|.|
pub fn orthonormal_frame(u: &CVector, v: &CVector) -> Result<(CVector, CVector)> {
    let e1 = u.map(|z| z / u.norm());
    let r = v - e1.map(|z| z * e1.dotc(v));
    let t = r.norm();
    if t < 1e-12 * v.norm() {
        return Err(Error::Degenerate("branch vectors are parallel".into()));
    }
    Ok((e1, r.map(|z| z / t)))
}

/// Pauli matrices embedded on span{e1, e2}, zero on the complement.
fn frame_paulis(e1: &CVector, e2: &CVector) -> Vec<(&'static str, CMatrix)> {
    let i = Complex64::new(0.0, 1.0);
    let p11 = e1 * e1.adjoint();
    let p22 = e2 * e2.adjoint();
    let p12 = e1 * e2.adjoint();
    let p21 = e2 * e1.adjoint();
    vec![
        ("sigma_z", &p11 - &p22),
        ("sigma_x", &p12 + &p21),
        ("sigma_y", p21.map(|z| z * i) - p12.map(|z| z * i)),
    ]
}

/// The superposition as a two-branch state plus its single-mode cutoff.
pub fn two_branch_form(state: &CatStateSpec, cutoff: usize) -> Result<TwoBranchState> {
    let n = state.modes;
    match state.family {
        StateFamily::Omega => {
            let (p, _) = coherent_vector(state.alpha, cutoff)?;
            let (m, _) = coherent_vector(-state.alpha, cutoff)?;
            let k = Complex64::new(closed::omega_norm(n, state.alpha), 0.0);
            TwoBranchState::new([k, k], p.into_amplitudes(), m.into_amplitudes(), n)
        }
        StateFamily::Hcs => {
            let (plus, minus) = kittens(state.alpha, cutoff)?;
            let k = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            TwoBranchState::new([k, k], plus, minus, n)
        }
        other => Err(Error::UnsupportedFamily {
            op: "rqfi_size",
            family: other.name().into(),
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorRow {
    pub name: String,
    pub kind: GeneratorKind,
    /// Var_psi(A)/N, i.e. (1/4N) F(psi, A)
    pub superposition: f64,
    /// Var_b(A)/N for each branch
    pub branches: [f64; 2],
    /// superposition / family denominator
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RqfiEvaluation {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub branch_maxima: [f64; 2],
    pub achieving_generator: String,
    pub bounded_cap_applied: bool,
    pub cutoff: usize,
    pub generators: Vec<GeneratorRow>,
}

impl RqfiEvaluation {
    pub fn row(&self, name: &str) -> Option<&GeneratorRow> {
        self.generators.iter().find(|r| r.name == name)
    }
}

/// Cutoff that keeps both the kittens and a^dagger a moments converged.
pub fn rqfi_cutoff(alpha: Complex64) -> usize {
    default_cutoff(alpha.norm()) + 8
}

pub fn rqfi_evaluate(
    state: &CatStateSpec,
    family: &GeneratorFamily,
    cutoff: Option<usize>,
) -> Result<RqfiEvaluation> {
    if family.kinds.is_empty() {
        return Err(Error::Invalid("generator family is empty".into()));
    }
    let cutoff = cutoff.unwrap_or_else(|| rqfi_cutoff(state.alpha));
    let tb = two_branch_form(state, cutoff)?;
    let members = family.members(
        state.alpha,
        (&tb.branches[0], &tb.branches[1]),
        cutoff,
    )?;
    let n = state.modes as f64;
    let branches = [tb.branch(0), tb.branch(1)];
    let mut rows: Vec<GeneratorRow> = members
        .iter()
        .map(|g| GeneratorRow {
            name: g.name.clone(),
            kind: g.kind,
            superposition: tb.variance(&g.matrix) / n,
            branches: [
                branches[0].variance(&g.matrix) / n,
                branches[1].variance(&g.matrix) / n,
            ],
            ratio: 0.0,
        })
        .collect();
    let bounded = family.contains(GeneratorKind::BoundedLocal);
    // product states reach at most one unit per mode under norm-one local generators
    let cap: f64 = if bounded { 1.0 } else { 0.0 };
    let mut branch_maxima = [cap; 2];
    for r in &rows {
        for b in 0..2 {
            branch_maxima[b] = branch_maxima[b].max(r.branches[b]);
        }
    }
    let denominator = 0.5 * (branch_maxima[0] + branch_maxima[1]);
    if !(denominator > 0.0) {
        return Err(Error::Degenerate(
            "branch Fisher information vanishes for every generator".into(),
        ));
    }
    for r in rows.iter_mut() {
        r.ratio = r.superposition / denominator;
    }
    let best = rows
        .iter()
        .max_by(|a, b| a.superposition.total_cmp(&b.superposition))
        .expect("family is non-empty");
    Ok(RqfiEvaluation {
        value: best.superposition / denominator,
        numerator: best.superposition,
        denominator,
        branch_maxima,
        achieving_generator: best.name.clone(),
        bounded_cap_applied: bounded,
        cutoff,
        generators: rows,
    })
}

/// Dense joint-space variance of the named generator, divided by N.
pub fn rqfi_oracle_numerator(
    state: &CatStateSpec,
    family: &GeneratorFamily,
    generator: &str,
    cutoff: usize,
    budget: usize,
) -> Result<f64> {
    let dim = joint_dim(cutoff, state.modes)?;
    if dim > budget {
        return Err(Error::Sizing {
            dim: dim as u128,
            limit: budget,
        });
    }
    let tb = two_branch_form(state, cutoff)?;
    let members = family.members(state.alpha, (&tb.branches[0], &tb.branches[1]), cutoff)?;
    let g = members
        .iter()
        .find(|g| g.name == generator)
        .ok_or_else(|| Error::Invalid(format!("unknown generator {generator}")))?;
    let dense = tb.to_fock(cutoff)?;
    Ok(dense_sum_variance(&dense, &g.matrix)? / state.modes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn omega(n: usize, a: f64) -> CatStateSpec {
        CatStateSpec::omega(n, c(a)).unwrap()
    }

    #[test]
    fn pseudo_sigma_z_reproduces_bounded_bound() {
        let fam = GeneratorFamily::new(&[GeneratorKind::BoundedLocal]);
        for n in [1, 2, 3, 7, 30] {
            for a in [0.3, 0.8, 1.5] {
                let ev = rqfi_evaluate(&omega(n, a), &fam, None).unwrap();
                let r = ev.row("pseudo_sigma_z").unwrap().ratio;
                let bound = closed::rqfi_bound_bounded(n, c(a));
                assert!((r - bound).abs() < 1e-9, "N {n} a {a}: {r} vs {bound}");
                assert!(ev.value >= bound - 1e-9);
            }
        }
    }

    #[test]
    fn single_mode_bounded_value_is_one() {
        let fam = GeneratorFamily::new(&[GeneratorKind::BoundedLocal]);
        for a in [0.4, 1.0, 2.0] {
            let ev = rqfi_evaluate(&omega(1, a), &fam, None).unwrap();
            assert!((ev.value - 1.0).abs() < 1e-9, "{}", ev.value);
        }
    }

    #[test]
    fn family_inclusion_is_monotone() {
        let small = GeneratorFamily::new(&[GeneratorKind::Quadrature]);
        let big = small.union(&GeneratorFamily::new(&[GeneratorKind::BoundedLocal]));
        let st = omega(3, 0.9);
        let a = rqfi_evaluate(&st, &small, None).unwrap();
        let b = rqfi_evaluate(&st, &big, None).unwrap();
        assert!(b.numerator >= a.numerator);
    }

    #[test]
    fn bounded_and_quadrature_meet_the_quadrature_bound() {
        let fam = GeneratorFamily::new(&[GeneratorKind::BoundedLocal, GeneratorKind::Quadrature]);
        for n in [1, 2, 5] {
            for a in [0.5, 1.5] {
                let ev = rqfi_evaluate(&omega(n, a), &fam, None).unwrap();
                assert!(ev.value >= closed::rqfi_bound_quadrature(n, c(a)) - 1e-9, "N {n} a {a}");
            }
        }
        let ev = rqfi_evaluate(&omega(1, 1.5), &fam, None).unwrap();
        let r = ev.row("quadrature[0/16pi]").unwrap().ratio;
        assert!((r - closed::rqfi_bound_quadrature(1, c(1.5))).abs() < 1e-9);
    }

    #[test]
    fn hcs_sizes() {
        let hcs = |n, a| CatStateSpec::new(StateFamily::Hcs, n, c(a)).unwrap();
        let qn = GeneratorFamily::new(&[GeneratorKind::Quadrature, GeneratorKind::Number]);
        // one mode is excluded: there the state is the coherent state |a> itself
        for n in [2, 3, 4] {
            for a in [0.5, 1.2, 2.0] {
                assert!(rqfi_evaluate(&hcs(n, a), &qn, None).unwrap().value >= 1.0 - 1e-9);
            }
        }
        let sw = GeneratorFamily::new(&[GeneratorKind::SpinSandwich]);
        let lo = rqfi_evaluate(&hcs(2, 1.5), &sw, None).unwrap().value;
        let hi = rqfi_evaluate(&hcs(2, 2.5), &sw, None).unwrap().value;
        assert!((hi / lo - 1.0).abs() <= 0.25, "{lo} {hi}");
    }

    #[test]
    fn reduction_agrees_with_dense_oracle() {
        let fam = GeneratorFamily::new(&[GeneratorKind::BoundedLocal, GeneratorKind::Quadrature]);
        let st = omega(2, 1.0);
        let ev = rqfi_evaluate(&st, &fam, Some(30)).unwrap();
        for name in ["pseudo_sigma_z", "quadrature[0/16pi]"] {
            let dense = rqfi_oracle_numerator(&st, &fam, name, 30, 1 << 12).unwrap();
            let gram = ev.row(name).unwrap().superposition;
            assert!((dense - gram).abs() < 1e-10, "{name}: {dense} vs {gram}");
        }
    }

    #[test]
    fn unsupported_family_is_rejected() {
        let st = CatStateSpec::new(StateFamily::EvenCat, 1, c(1.0)).unwrap();
        let fam = GeneratorFamily::new(&[GeneratorKind::Number]);
        assert!(matches!(
            rqfi_evaluate(&st, &fam, None),
            Err(Error::UnsupportedFamily { .. })
        ));
    }
}
