//! Dense complex linear algebra used by the Fock-space oracle.
//!
//! The matrix exponential uses scaling and squaring with a degree-13 Padé
//! approximant (Higham 2005). Hermitian spectra come from nalgebra's
//! `SymmetricEigen`; a dedicated Jacobi rotation handles the 2x2 case so
//! that tiny eigenvector components keep their relative precision.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &CMatrix, s: f64) -> CMatrix {
    a.map(|z| z * s)
}

/// exp(A) for a square complex matrix.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scaled(a, 0.5f64.powi(squarings));
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = &PADE13;

    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = &a
        * (&a6 * inner_u
            + scaled(&a6, b[7])
            + scaled(&a4, b[5])
            + scaled(&a2, b[3])
            + scaled(&id, b[1]));
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&id, b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Pade denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Largest elementwise |M - M^dagger|.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues ascending; columns
/// of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 2 {
        let (vals, vecs) = hermitian_eigen_2x2([
            [m[(0, 0)], m[(0, 1)]],
            [m[(1, 0)], m[(1, 1)]],
        ]);
        let mut out = CMatrix::zeros(2, 2);
        for k in 0..2 {
            out[(0, k)] = vecs[k][0];
            out[(1, k)] = vecs[k][1];
        }
        return (vals.to_vec(), out);
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 2 {
        return hermitian_eigen(m).0;
    }
    let mut v: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Jacobi rotation for a 2x2 Hermitian matrix [[a, b], [conj(b), d]].
///
/// Returns eigenvalues ascending and unit eigenvectors. Components are formed
/// from half-angle sines and cosines, so a tiny off-diagonal element yields
/// an eigenvector component with full relative precision.
pub fn hermitian_eigen_2x2(m: [[Complex64; 2]; 2]) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = m[0][1];
    let bn = b.norm();
    let phase = if bn > 0.0 { b / bn } else { ONE };
    // rotation angle 2t = atan2(2|b|, a - d)
    let two_t = (2.0 * bn).atan2(a - d);
    let (s, c) = (0.5 * two_t).sin_cos();
    let mean = 0.5 * (a + d);
    let half = (0.25 * (a - d) * (a - d) + bn * bn).sqrt();
    // upper eigenvector (c, conj(phase) s) for eigenvalue mean + half
    let upper = [Complex64::new(c, 0.0), phase.conj() * s];
    let lower = [Complex64::new(-s, 0.0) * phase, Complex64::new(c, 0.0)];
    ([mean - half, mean + half], [lower, upper])
}

/// Kronecker product of two matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, &x) in a.iter().enumerate() {
        for (k, &y) in b.iter().enumerate() {
            out[i * b.len() + k] = x * y;
        }
    }
    out
}

/// Kahan-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMatrix::zeros(5, 5);
        assert!(max_abs_diff(&expm(&z), &CMatrix::identity(5, 5)) < 1e-15);
    }

    #[test]
    fn expm_matches_diagonal_exponentials() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(0.3, 1.0),
            Complex64::new(-2.0, 0.5),
            Complex64::new(7.5, -3.0),
        ]));
        let e = expm(&d);
        for k in 0..3 {
            let expect = d[(k, k)].exp();
            assert!((e[(k, k)] - expect).norm() < 1e-12 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(i t sigma_x) = cos t + i sin t sigma_x
        let t = 11.3;
        let mut g = CMatrix::zeros(2, 2);
        g[(0, 1)] = I * t;
        g[(1, 0)] = I * t;
        let e = expm(&g);
        assert!((e[(0, 0)] - Complex64::new(t.cos(), 0.0)).norm() < 1e-13);
        assert!((e[(0, 1)] - I * t.sin()).norm() < 1e-13);
    }

    #[test]
    fn expm_of_nilpotent_is_truncated_series() {
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 1)] = ONE * 2.0;
        a[(1, 2)] = ONE * 3.0;
        let e = expm(&a);
        // I + A + A^2/2
        assert!((e[(0, 2)] - ONE * 3.0).norm() < 1e-13);
        assert!((e[(0, 1)] - ONE * 2.0).norm() < 1e-13);
    }

    #[test]
    fn jacobi_2x2_matches_general_solver() {
        let m = [
            [Complex64::new(0.7, 0.0), Complex64::new(0.2, -0.4)],
            [Complex64::new(0.2, 0.4), Complex64::new(-1.1, 0.0)],
        ];
        let (vals, vecs) = hermitian_eigen_2x2(m);
        let mut full = CMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                full[(i, j)] = m[i][j];
            }
        }
        let general = SymmetricEigen::new(full.clone());
        let mut g: Vec<f64> = general.eigenvalues.iter().copied().collect();
        g.sort_by(f64::total_cmp);
        assert!((vals[0] - g[0]).abs() < 1e-14 && (vals[1] - g[1]).abs() < 1e-14);
        for k in 0..2 {
            let v = CVector::from_vec(vecs[k].to_vec());
            let mv = &full * &v;
            assert!((mv - v.map(|z| z * vals[k])).norm() < 1e-14);
        }
    }

    #[test]
    fn jacobi_keeps_tiny_components() {
        let eps = 1e-20;
        let m = [
            [Complex64::new(1.0, 0.0), Complex64::new(eps, 0.0)],
            [Complex64::new(eps, 0.0), Complex64::new(-1.0, 0.0)],
        ];
        let (_, vecs) = hermitian_eigen_2x2(m);
        // lower eigenvector has first component ~ -eps/2
        let tiny = vecs[0][0].norm();
        assert!((tiny / (eps / 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kron_dimensions_and_values() {
        let a = CMatrix::from_row_slice(2, 2, &[ONE, ONE * 2.0, ONE * 3.0, ONE * 4.0]);
        let b = CMatrix::identity(2, 2);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k[(0, 2)], ONE * 2.0);
        assert_eq!(k[(3, 1)], ONE * 3.0);
    }
}
