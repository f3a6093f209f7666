//! Shared dense complex linear-algebra helpers.
//!
//! Thin wrappers around nalgebra that pin down the conventions used across
//! the toolkit: descending singular values, full right-singular bases, and
//! Hermitian matrix functions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Unit-magnitude complex number `exp(j*theta)`.
#[inline]
pub fn phasor(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// One draw of a standard circularly-symmetric complex Gaussian:
/// real and imaginary parts are each N(0, 1/2), total variance 1.
#[inline]
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    // Fill in row-major order so draws are reproducible across layouts.
    let mut m = CMat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = standard_complex(rng);
        }
    }
    m
}

/// SVD with singular values (and the matching U columns / V columns)
/// sorted in descending order. Returns `(u, sigma, v)` with `a = u * diag(sigma) * v^H`.
pub fn svd_sorted(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let vt = svd.v_t.expect("svd requested v_t");
    let s = svd.singular_values.as_slice().to_vec();

    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap());

    let k = s.len();
    let mut us = CMat::zeros(u.nrows(), k);
    let mut vs = CMat::zeros(vt.ncols(), k);
    let mut ss = Vec::with_capacity(k);
    for (out, &i) in idx.iter().enumerate() {
        us.set_column(out, &u.column(i));
        vs.set_column(out, &vt.row(i).adjoint());
        ss.push(s[i]);
    }
    (us, ss, vs)
}

/// Singular values only, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut s = a.clone().svd(false, false).singular_values.as_slice().to_vec();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Orthonormal completion of a set of orthonormal columns: the returned
/// n x (n - r) block is orthogonal to `basis` (deterministic, via
/// Householder QR of `[basis | I]`).
pub fn orthonormal_completion(basis: &CMat) -> CMat {
    let n = basis.nrows();
    let r = basis.ncols();
    if r >= n {
        return CMat::zeros(n, 0);
    }
    let mut ext = CMat::zeros(n, r + n);
    ext.view_mut((0, 0), (n, r)).copy_from(basis);
    for i in 0..n {
        ext[(i, r + i)] = ONE;
    }
    let q = ext.qr().q();
    q.view((0, r), (n, n - r)).into_owned()
}

/// Descending singular values of `a` together with a full unitary right basis.
///
/// The first `min(n, m)` columns of the returned basis are the right singular
/// vectors in descending order; the remaining columns complete the row space
/// orthonormally.
pub fn svd_full_right_basis(a: &CMat) -> (Vec<f64>, CMat) {
    let m = a.ncols();
    let (_, s, v1) = svd_sorted(a);
    let r = v1.ncols();
    if r == m {
        return (s, v1);
    }
    let comp = orthonormal_completion(&v1);
    let mut v = CMat::zeros(m, m);
    v.view_mut((0, 0), (m, r)).copy_from(&v1);
    v.view_mut((0, r), (m, m - r)).copy_from(&comp);
    (s, v)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen_sorted(h: &CMat) -> (Vec<f64>, CMat) {
    let se = nalgebra::SymmetricEigen::new(h.clone());
    let vals = se.eigenvalues.as_slice().to_vec();
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let mut v = CMat::zeros(h.nrows(), h.ncols());
    let mut out = Vec::with_capacity(vals.len());
    for (o, &i) in idx.iter().enumerate() {
        v.set_column(o, &se.eigenvectors.column(i));
        out.push(vals[i]);
    }
    (out, v)
}

/// Unique Hermitian positive-semidefinite inverse square root `h^{-1/2}`.
/// `h` must be Hermitian positive definite.
pub fn hermitian_inv_sqrt(h: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen_sorted(h);
    let d = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| Complex64::new(1.0 / x.max(f64::MIN_POSITIVE).sqrt(), 0.0)),
    );
    &vecs * CMat::from_diagonal(&d) * vecs.adjoint()
}

/// log2(det(m)) of a Hermitian positive-definite matrix via Cholesky.
pub fn log2_det_hpd(m: &CMat) -> f64 {
    let chol = nalgebra::Cholesky::new(m.clone()).expect("matrix must be Hermitian positive definite");
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        acc += l[(i, i)].re.ln();
    }
    2.0 * acc / std::f64::consts::LN_2
}

/// Frobenius norm.
#[inline]
pub fn fro_norm(m: &CMat) -> f64 {
    m.norm()
}
