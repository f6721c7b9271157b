//! Peaks, lobe separation and fringe wavelength of a Wigner grid.
//!
//! Local maxima are found by dominance over every neighbour in the active
//! axes. Lobe positions come from a least-squares fit on the real-part
//! subgrid of two vacuum-width Gaussians at c +- v plus a third at their
//! midpoint, which is the exact shape of a two-branch cat there. Taking the
//! raw maxima instead biases the separation inward when the lobes overlap
//! the interference term.

use super::grid::{AxisSpec, WignerGrid};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeMeasurement {
    pub wavelength: f64,
    pub axis: String,
    pub crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LobeFit {
    /// Names of the fitted coordinates.
    pub axes: Vec<String>,
    pub center: Vec<f64>,
    /// Half the lobe-to-lobe vector.
    pub offset: Vec<f64>,
    /// Weights of the two lobes and the midpoint term.
    pub amplitudes: [f64; 3],
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceFeatures {
    /// One [re, im] pair per varying mode.
    pub peak_locations: Vec<Vec<[f64; 2]>>,
    pub peak_values: Vec<f64>,
    pub fringe_wavelength: Option<FringeMeasurement>,
    pub peak_separation: f64,
    pub lobe_fit: Option<LobeFit>,
}

/// Local maxima below this fraction of the largest |W| are noise.
const PEAK_FLOOR: f64 = 1e-6;
/// Fringe crossings where the demeaned signal is below this fraction of
/// its maximum are ignored.
const CROSSING_FLOOR: f64 = 1e-3;
/// Relative lobe weight below which the two-lobe fit is ignored.
const LOBE_FLOOR: f64 = 1e-3;
/// Fewer samples than this per half wavelength counts as aliasing.
const MIN_SAMPLES_PER_HALF_WAVE: f64 = 4.0;

pub fn extract_features(grid: &WignerGrid) -> Result<PhaseSpaceFeatures> {
    let spec = &grid.slice_spec;
    let axes = spec.axes();
    let names = spec.axis_names();
    let active: Vec<usize> = (0..axes.len()).filter(|&k| axes[k].is_active()).collect();
    if active.is_empty() {
        return Err(Error::PeakDetection("grid has no varying axis".into()));
    }
    check_resolution(grid, &axes)?;

    let peaks = local_maxima(grid, &axes, &active);
    if peaks.is_empty() {
        return Err(Error::PeakDetection("no interior local maximum".into()));
    }
    let peak_locations = peaks
        .iter()
        .map(|(idx, _)| {
            let x = spec.coords(idx);
            x.chunks(2).map(|p| [p[0], p[1]]).collect()
        })
        .collect();
    let peak_values: Vec<f64> = peaks.iter().map(|(_, w)| *w).collect();

    let lobe_fit = fit_lobes(grid, &axes, &names)?;
    let peak_separation = match &lobe_fit {
        Some(f) if has_lobes(f) => 2.0 * f.offset.iter().map(|v| v * v).sum::<f64>().sqrt(),
        _ => farthest_strong_pair(grid, &peaks),
    };
    let fringe_wavelength = fringe(grid, &axes, &names, lobe_fit.as_ref())?;
    Ok(PhaseSpaceFeatures {
        peak_locations,
        peak_values,
        fringe_wavelength,
        peak_separation,
        lobe_fit,
    })
}

fn check_resolution(grid: &WignerGrid, axes: &[AxisSpec]) -> Result<()> {
    let Some(state) = grid.state else { return Ok(()) };
    let a = state.alpha.norm();
    if a == 0.0 {
        return Ok(());
    }
    let required = PI / (2.0 * a) / 8.0;
    for ax in axes.iter().skip(1).step_by(2).filter(|ax| ax.is_active()) {
        if ax.step() > required {
            return Err(Error::Resolution {
                step: ax.step(),
                required,
            });
        }
    }
    Ok(())
}

/// Interior points not smaller than any neighbour, sorted by |W| descending.
fn local_maxima(grid: &WignerGrid, axes: &[AxisSpec], active: &[usize]) -> Vec<(Vec<usize>, f64)> {
    let spec = &grid.slice_spec;
    let top = grid.values.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let d = active.len();
    let neighbours: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut t| {
            (0..d)
                .map(|_| {
                    let o = (t % 3) as i64 - 1;
                    t /= 3;
                    o
                })
                .collect()
        })
        .filter(|o: &Vec<i64>| o.iter().any(|&x| x != 0))
        .collect();
    let mut out = Vec::new();
    for (i, &w) in grid.values.iter().enumerate() {
        if w <= PEAK_FLOOR * top {
            continue;
        }
        let idx = spec.unravel(i);
        if active.iter().any(|&k| idx[k] == 0 || idx[k] + 1 == axes[k].steps) {
            continue;
        }
        let dominant = neighbours.iter().all(|off| {
            let mut j = idx.clone();
            for (&k, &o) in active.iter().zip(off) {
                j[k] = (j[k] as i64 + o) as usize;
            }
            grid.value_at(&j) <= w
        });
        if dominant {
            out.push((idx, w));
        }
    }
    out.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    out
}

/// A single Gaussian is fitted equally well at any offset once the lobe
/// weights vanish, so the offset only means something when they do not.
fn has_lobes(f: &LobeFit) -> bool {
    let [a1, a2, b] = f.amplitudes;
    a1.abs().min(a2.abs()) > LOBE_FLOOR * (a1.abs() + a2.abs() + b.abs())
}

fn farthest_strong_pair(grid: &WignerGrid, peaks: &[(Vec<usize>, f64)]) -> f64 {
    let spec = &grid.slice_spec;
    let top = peaks[0].1.abs();
    let strong: Vec<Vec<f64>> = peaks
        .iter()
        .filter(|(_, w)| w.abs() >= 0.5 * top)
        .map(|(idx, _)| spec.coords(idx))
        .collect();
    let mut best = 0.0f64;
    for (i, p) in strong.iter().enumerate() {
        for q in &strong[i + 1..] {
            best = best.max(dist(p, q));
        }
    }
    best
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Samples of the real-part subgrid: active real axes vary, every other
/// axis sits at the index nearest zero.
struct Subgrid {
    axes: Vec<usize>,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

fn real_subgrid(grid: &WignerGrid, axes: &[AxisSpec]) -> Subgrid {
    let real: Vec<usize> = (0..axes.len()).step_by(2).filter(|&k| axes[k].is_active()).collect();
    let pinned: Vec<usize> = axes.iter().map(|a| a.nearest(0.0)).collect();
    let mut points = Vec::new();
    let mut values = Vec::new();
    let count: usize = real.iter().map(|&k| axes[k].steps).product();
    for mut t in 0..count {
        let mut idx = pinned.clone();
        for &k in real.iter().rev() {
            idx[k] = t % axes[k].steps;
            t /= axes[k].steps;
        }
        points.push(real.iter().map(|&k| axes[k].value(idx[k])).collect());
        values.push(grid.value_at(&idx));
    }
    Subgrid {
        axes: real,
        points,
        values,
    }
}

fn gauss(x: &[f64], c: &[f64], sign: f64, v: &[f64]) -> f64 {
    let r2: f64 = x
        .iter()
        .zip(c)
        .zip(v)
        .map(|((xi, ci), vi)| {
            let d = xi - ci - sign * vi;
            d * d
        })
        .sum();
    (-2.0 * r2).exp()
}

/// Best linear weights for the three Gaussians and the residual sum of squares.
fn project(sub: &Subgrid, c: &[f64], v: &[f64]) -> ([f64; 3], f64) {
    let n = sub.points.len();
    let mut a = DMatrix::<f64>::zeros(n, 3);
    let zero = vec![0.0; v.len()];
    for (i, x) in sub.points.iter().enumerate() {
        a[(i, 0)] = gauss(x, c, 1.0, v);
        a[(i, 1)] = gauss(x, c, -1.0, v);
        a[(i, 2)] = gauss(x, c, 0.0, &zero);
    }
    let b = DVector::from_column_slice(&sub.values);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let coef = ata
        .svd(true, true)
        .solve(&atb, 1e-12 * (1.0 + atb.norm()))
        .unwrap_or_else(|_| DVector::zeros(3));
    let resid = (&a * &coef - b).norm_squared();
    ([coef[0], coef[1], coef[2]], resid)
}

fn fit_lobes(grid: &WignerGrid, axes: &[AxisSpec], names: &[String]) -> Result<Option<LobeFit>> {
    let sub = real_subgrid(grid, axes);
    let d = sub.axes.len();
    if d == 0 {
        return Ok(None);
    }
    let total: f64 = sub.values.iter().map(|w| w.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::PeakDetection("no positive weight on the real subgrid".into()));
    }
    // moment start: centroid and the dominant spread direction
    let mut c0 = vec![0.0; d];
    for (x, w) in sub.points.iter().zip(&sub.values) {
        for k in 0..d {
            c0[k] += w.max(0.0) * x[k] / total;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (x, w) in sub.points.iter().zip(&sub.values) {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += w.max(0.0) * (x[i] - c0[i]) * (x[j] - c0[j]) / total;
            }
        }
    }
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.imax();
    let lam = eig.eigenvalues[top];
    let dir = eig.eigenvectors.column(top);
    let spread = (lam - 0.25).max(0.01).sqrt();
    let mut starts = Vec::new();
    for scale in [0.5, 1.0, 1.5] {
        let mut p = c0.clone();
        p.extend(dir.iter().map(|e| e * spread * scale));
        starts.push(p);
    }
    // start from the two outermost grid maxima along that direction, if any
    let proj = |x: &[f64]| x.iter().zip(dir.iter()).map(|(a, b)| a * b).sum::<f64>();
    let (imin, imax) = argminmax_local(&sub, &proj);
    if let (Some(i), Some(j)) = (imin, imax) {
        if i != j {
            let (p, q) = (&sub.points[i], &sub.points[j]);
            let mut s: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
            s.extend(p.iter().zip(q).map(|(a, b)| 0.5 * (b - a)));
            starts.push(s);
        }
    }
    let objective = |t: &[f64]| project(&sub, &t[..d], &t[d..]).1;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        let (t, f) = nelder_mead(&objective, s, 0.25);
        let (t, f) = nelder_mead(&objective, t.clone(), 0.02).min_by_f((t, f));
        if best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((t, f));
        }
    }
    let (t, f) = best.expect("at least one start");
    let (amplitudes, _) = project(&sub, &t[..d], &t[d..]);
    Ok(Some(LobeFit {
        axes: sub.axes.iter().map(|&k| names[k].clone()).collect(),
        center: t[..d].to_vec(),
        offset: t[d..].to_vec(),
        amplitudes,
        residual_rms: (f / sub.points.len() as f64).sqrt(),
    }))
}

/// Outermost subgrid local maxima (by the projection), in 1-D neighbour sense
/// along every subgrid axis.
fn argminmax_local(sub: &Subgrid, proj: &dyn Fn(&[f64]) -> f64) -> (Option<usize>, Option<usize>) {
    let top = sub.values.iter().fold(0.0f64, |m, w| m.max(*w));
    let n = sub.values.len();
    let mut lo: Option<(usize, f64)> = None;
    let mut hi: Option<(usize, f64)> = None;
    // a point is kept if it beats the points immediately before and after
    // it in flat order; cheap and adequate for picking starting values
    for i in 1..n.saturating_sub(1) {
        let w = sub.values[i];
        if w < 0.05 * top || w < sub.values[i - 1] || w < sub.values[i + 1] {
            continue;
        }
        let p = proj(&sub.points[i]);
        if lo.is_none_or(|(_, q)| p < q) {
            lo = Some((i, p));
        }
        if hi.is_none_or(|(_, q)| p > q) {
            hi = Some((i, p));
        }
    }
    (lo.map(|x| x.0), hi.map(|x| x.0))
}

trait MinByF {
    fn min_by_f(self, other: Self) -> Self;
}

impl MinByF for (Vec<f64>, f64) {
    fn min_by_f(self, other: Self) -> Self {
        if other.1 < self.1 {
            other
        } else {
            self
        }
    }
}

/// Plain Nelder-Mead on a smooth objective.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: Vec<f64>, step: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = f(&x0);
    simplex.push((x0.clone(), fx0));
    for k in 0..n {
        let mut x = x0.clone();
        x[k] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };
    for _ in 0..4000 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (fbest, fworst) = (simplex[0].1, simplex[n].1);
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| dist(x, &simplex[0].0))
            .fold(0.0, f64::max);
        if size < 1e-10 || (fworst - fbest).abs() <= 1e-15 * fbest.abs() + 1e-300 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for k in 0..n {
                centroid[k] += x[k] / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let xr = combine(&centroid, &worst, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = combine(&centroid, &worst, -2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < fworst {
                let x = combine(&centroid, &worst, -0.5);
                let fx = f(&x);
                (x, fx)
            } else {
                let x = combine(&centroid, &worst, 0.5);
                let fx = f(&x);
                (x, fx)
            };
            if fc < fworst.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    *x = combine(&best, x, 0.5);
                    *fx = f(x);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Zero crossings of the demeaned imaginary-axis line through the fitted
/// centre (or the origin).
fn fringe(
    grid: &WignerGrid,
    axes: &[AxisSpec],
    names: &[String],
    fit: Option<&LobeFit>,
) -> Result<Option<FringeMeasurement>> {
    let Some(k_im) = (1..axes.len()).step_by(2).find(|&k| axes[k].is_active()) else {
        return Ok(None);
    };
    let mut idx: Vec<usize> = axes.iter().map(|a| a.nearest(0.0)).collect();
    if let Some(f) = fit {
        for (name, &cv) in f.axes.iter().zip(&f.center) {
            if let Some(k) = names.iter().position(|n| n == name) {
                idx[k] = axes[k].nearest(cv);
            }
        }
    }
    let ax = axes[k_im];
    let line: Vec<f64> = (0..ax.steps)
        .map(|i| {
            idx[k_im] = i;
            grid.value_at(&idx)
        })
        .collect();
    let mean = line.iter().sum::<f64>() / line.len() as f64;
    let dm: Vec<f64> = line.iter().map(|w| w - mean).collect();
    let amp = dm.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    if amp == 0.0 {
        return Ok(None);
    }
    let mut crossings = Vec::new();
    for i in 0..dm.len() - 1 {
        let (a, b) = (dm[i], dm[i + 1]);
        if a.abs().max(b.abs()) < CROSSING_FLOOR * amp {
            continue;
        }
        if (a < 0.0) != (b < 0.0) {
            let t = a / (a - b);
            crossings.push(ax.value(i) + t * ax.step());
        }
    }
    if crossings.len() < 3 {
        return Ok(None);
    }
    let mut gaps: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let half = gaps[gaps.len() / 2];
    if half < MIN_SAMPLES_PER_HALF_WAVE * ax.step() {
        return Err(Error::Resolution {
            step: ax.step(),
            required: half / MIN_SAMPLES_PER_HALF_WAVE,
        });
    }
    Ok(Some(FringeMeasurement {
        wavelength: 2.0 * half,
        axis: names[k_im].clone(),
        crossings: crossings.len(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::{CatStateSpec, StateFamily};
    use crate::phase_space::grid::{wigner_grid, SliceSpec};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn plane(r: f64, step: f64) -> SliceSpec {
        let ax = AxisSpec::with_step(-r, r, step).unwrap();
        SliceSpec::plane(1, 0, ax, ax, &[]).unwrap()
    }

    #[test]
    fn even_cat_lobes_and_fringes() {
        let st = CatStateSpec::new(StateFamily::EvenCat, 1, c(2.0)).unwrap();
        let g = wigner_grid(&st, plane(4.0, 0.05)).unwrap();
        let f = extract_features(&g).unwrap();
        assert!((f.peak_separation - 4.0).abs() < 0.05, "{}", f.peak_separation);
        let fr = f.fringe_wavelength.unwrap();
        assert_eq!(fr.axis, "im");
        assert!((fr.wavelength / (PI / 4.0) - 1.0).abs() < 0.05, "{}", fr.wavelength);
        // the interference maximum at the origin dominates the lobes
        assert!(f.peak_locations[0][0][0].abs() < 1e-9);
    }

    #[test]
    fn vacuum_has_one_peak_and_no_fringes() {
        let st = CatStateSpec::new(StateFamily::ProductCoherent, 1, c(0.0)).unwrap();
        let g = wigner_grid(&st, plane(3.0, 0.1)).unwrap();
        let f = extract_features(&g).unwrap();
        assert_eq!(f.peak_values.len(), 1);
        assert!(f.peak_locations[0][0].iter().all(|x| x.abs() < 1e-9));
        assert!(f.fringe_wavelength.is_none());
        assert!(f.peak_separation < 1e-3);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let st = CatStateSpec::new(StateFamily::EvenCat, 1, c(2.0)).unwrap();
        let g = wigner_grid(&st, plane(4.0, 0.2)).unwrap();
        assert!(matches!(extract_features(&g), Err(Error::Resolution { .. })));
    }

    #[test]
    fn omega_two_mode_separation() {
        let st = CatStateSpec::omega(2, c(1.0)).unwrap();
        let ax = AxisSpec::with_step(-3.0, 3.0, 0.05).unwrap();
        let g = wigner_grid(&st, SliceSpec::real_hypercube(2, ax).unwrap()).unwrap();
        let f = extract_features(&g).unwrap();
        assert!((f.peak_separation - 2.0 * 2f64.sqrt()).abs() < 0.05, "{}", f.peak_separation);
    }

    #[test]
    fn merged_lobes_still_resolved_by_fit() {
        // at alpha = 1 the lobes are not separate local maxima on the real axis
        let st = CatStateSpec::new(StateFamily::EvenCat, 1, c(1.0)).unwrap();
        let g = wigner_grid(&st, plane(4.0, 0.05)).unwrap();
        let f = extract_features(&g).unwrap();
        assert!((f.peak_separation - 2.0).abs() < 1e-6, "{}", f.peak_separation);
    }
}
