use crate::closed::CatStateSpec;
use crate::error::{Error, Result};
use crate::fock::FockVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use super::{wigner_numeric, CoherentExpansion};

pub const CONVENTION: &str = "W = (2/pi)^m <D(gamma) P_tot D(-gamma)> over all m modes";

/// Largest number of grid points evaluated in one call.
pub const MAX_GRID_POINTS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::Invalid("axis bounds must be finite".into()));
        }
        if steps == 0 {
            return Err(Error::Invalid("an axis needs at least one step".into()));
        }
        if steps > 1 && max <= min {
            return Err(Error::Invalid(format!("axis [{min}, {max}] is empty")));
        }
        Ok(AxisSpec { min, max, steps })
    }

    /// Axis covering [min, max] with spacing no larger than `step`.
    pub fn with_step(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Invalid("step must be positive".into()));
        }
        let steps = ((max - min) / step).round() as usize + 1;
        Self::new(min, max, steps.max(2))
    }

    pub fn fixed(value: f64) -> Self {
        AxisSpec {
            min: value,
            max: value,
            steps: 1,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }

    /// Grid spacing, zero for a fixed axis.
    pub fn step(&self) -> f64 {
        if self.steps == 1 {
            0.0
        } else {
            (self.max - self.min) / (self.steps - 1) as f64
        }
    }

    pub fn is_active(&self) -> bool {
        self.steps > 1
    }

    /// Index of the grid value closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        if self.steps == 1 {
            return 0;
        }
        let t = ((x - self.min) / self.step()).round();
        t.clamp(0.0, (self.steps - 1) as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeAxes {
    pub mode: usize,
    pub re: AxisSpec,
    pub im: AxisSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedMode {
    pub mode: usize,
    #[serde(serialize_with = "crate::envelope::complex_pair")]
    pub value: Complex64,
}

/// Which modes vary over which axes; the rest sit at fixed values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceSpec {
    pub modes: usize,
    pub varying: Vec<ModeAxes>,
    pub fixed: Vec<FixedMode>,
}

impl SliceSpec {
    pub fn new(modes: usize, varying: Vec<ModeAxes>, fixed: Vec<FixedMode>) -> Result<Self> {
        let mut seen = vec![false; modes];
        for m in varying.iter().map(|v| v.mode).chain(fixed.iter().map(|f| f.mode)) {
            if m >= modes || seen[m] {
                return Err(Error::InvalidMode { index: m, modes });
            }
            seen[m] = true;
        }
        if let Some(m) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!("mode {m} is neither varying nor fixed")));
        }
        if varying.is_empty() {
            return Err(Error::Invalid("a slice needs at least one varying mode".into()));
        }
        for f in &fixed {
            if !f.value.re.is_finite() || !f.value.im.is_finite() {
                return Err(Error::Invalid("fixed displacement must be finite".into()));
            }
        }
        let s = SliceSpec { modes, varying, fixed };
        s.len()?;
        Ok(s)
    }

    /// Complex plane of mode `mode`, every other mode fixed.
    pub fn plane(modes: usize, mode: usize, re: AxisSpec, im: AxisSpec, others: &[Complex64]) -> Result<Self> {
        let fixed: Vec<FixedMode> = (0..modes)
            .filter(|&m| m != mode)
            .zip(others.iter().copied().chain(std::iter::repeat(Complex64::new(0.0, 0.0))))
            .map(|(m, value)| FixedMode { mode: m, value })
            .collect();
        Self::new(modes, vec![ModeAxes { mode, re, im }], fixed)
    }

    /// Real parts of every mode on the same axis, imaginary parts zero.
    pub fn real_hypercube(modes: usize, axis: AxisSpec) -> Result<Self> {
        let varying = (0..modes)
            .map(|mode| ModeAxes {
                mode,
                re: axis,
                im: AxisSpec::fixed(0.0),
            })
            .collect();
        Self::new(modes, varying, vec![])
    }

    /// Flattened axes in storage order: (re, im) of each varying mode.
    pub fn axes(&self) -> Vec<AxisSpec> {
        self.varying.iter().flat_map(|v| [v.re, v.im]).collect()
    }

    pub fn axis_names(&self) -> Vec<String> {
        let one = self.varying.len() == 1;
        self.varying
            .iter()
            .enumerate()
            .flat_map(|(k, _)| {
                if one {
                    ["re".to_string(), "im".to_string()]
                } else {
                    [format!("re{}", k + 1), format!("im{}", k + 1)]
                }
            })
            .collect()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes().iter().map(|a| a.steps).collect()
    }

    pub fn len(&self) -> Result<usize> {
        let mut n: usize = 1;
        for s in self.shape() {
            n = n
                .checked_mul(s)
                .filter(|&n| n <= MAX_GRID_POINTS)
                .ok_or(Error::Sizing {
                    dim: self.shape().iter().map(|&s| s as u128).product(),
                    limit: MAX_GRID_POINTS,
                })?;
        }
        Ok(n)
    }

    /// Multi-index of a flat position, last axis fastest.
    pub fn unravel(&self, mut index: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for (k, &s) in shape.iter().enumerate().rev() {
            out[k] = index % s;
            index /= s;
        }
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        self.shape().iter().zip(idx).fold(0, |acc, (&s, &i)| acc * s + i)
    }

    /// Axis coordinates of a multi-index.
    pub fn coords(&self, idx: &[usize]) -> Vec<f64> {
        self.axes().iter().zip(idx).map(|(a, &i)| a.value(i)).collect()
    }

    /// Full displacement vector (one complex value per mode).
    pub fn point(&self, idx: &[usize]) -> Vec<Complex64> {
        let mut g = vec![Complex64::new(0.0, 0.0); self.modes];
        for f in &self.fixed {
            g[f.mode] = f.value;
        }
        for (k, v) in self.varying.iter().enumerate() {
            g[v.mode] = Complex64::new(v.re.value(idx[2 * k]), v.im.value(idx[2 * k + 1]));
        }
        g
    }
}

/// Dense Wigner values over a slice, row-major with the last axis fastest.
#[derive(Debug, Clone, Serialize)]
pub struct WignerGrid {
    pub slice_spec: SliceSpec,
    pub state: Option<CatStateSpec>,
    pub values: Vec<f64>,
    pub convention: &'static str,
}

/// Evaluates `f` at every grid point in parallel; order is fixed by index.
pub fn evaluate_grid<F>(slice: &SliceSpec, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[Complex64]) -> Result<f64> + Sync,
{
    let n = slice.len()?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let w = f(&slice.point(&slice.unravel(i)))?;
            if !w.is_finite() {
                return Err(Error::Invalid(format!("non-finite Wigner value at grid index {i}")));
            }
            Ok(w)
        })
        .collect()
}

/// Closed-form grid for a named family.
pub fn wigner_grid(state: &CatStateSpec, slice: SliceSpec) -> Result<WignerGrid> {
    if slice.modes != state.modes {
        return Err(Error::Dimension(format!(
            "slice has {} modes, state has {}",
            slice.modes, state.modes
        )));
    }
    let exp = CoherentExpansion::from_spec(state)?;
    let values = evaluate_grid(&slice, |g| exp.wigner(g))?;
    Ok(WignerGrid {
        slice_spec: slice,
        state: Some(*state),
        values,
        convention: CONVENTION,
    })
}

/// Grid from the displaced-parity oracle on an explicit Fock vector.
pub fn wigner_grid_numeric(psi: &FockVector, slice: SliceSpec) -> Result<WignerGrid> {
    if slice.modes != psi.modes() {
        return Err(Error::Dimension("slice and state mode counts differ".into()));
    }
    let values = evaluate_grid(&slice, |g| wigner_numeric(psi, g).map(|w| w.value))?;
    Ok(WignerGrid {
        slice_spec: slice,
        state: None,
        values,
        convention: CONVENTION,
    })
}

impl WignerGrid {
    pub fn value_at(&self, idx: &[usize]) -> f64 {
        self.values[self.slice_spec.ravel(idx)]
    }

    /// Checks length, finiteness and the single-mode bound |W| <= 2/pi.
    pub fn check_invariants(&self) -> Result<()> {
        if self.values.len() != self.slice_spec.len()? {
            return Err(Error::Dimension("value count does not match the axes".into()));
        }
        if let Some(i) = self.values.iter().position(|w| !w.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value at index {i}")));
        }
        if self.slice_spec.modes == 1 {
            let bound = std::f64::consts::FRAC_2_PI + 1e-9;
            if let Some(w) = self.values.iter().find(|w| w.abs() > bound) {
                return Err(Error::Invalid(format!("single-mode value {w} exceeds 2/pi")));
            }
        }
        Ok(())
    }

    /// CSV with one column per varying coordinate and a final `w` column.
    /// Floats use the shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let names = self.slice_spec.axis_names();
        writeln!(out, "{},w", names.join(","))?;
        for (i, w) in self.values.iter().enumerate() {
            let coords = self.slice_spec.coords(&self.slice_spec.unravel(i));
            for x in coords {
                write!(out, "{x:?},")?;
            }
            writeln!(out, "{w:?}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Invalid(e.to_string()))
    }
}
