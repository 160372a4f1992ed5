//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Complex, DMatrix, DVector};

/// Complex double.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    let h = hermitian_part(m);
    let mut v = h.symmetric_eigenvalues();
    v.as_mut_slice().sort_by(f64::total_cmp);
    v
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).iter().copied().fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Principal square root of a Hermitian matrix, with negative eigenvalues
/// clipped to zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| c(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Moore–Penrose pseudo-inverse of a Hermitian matrix, dropping eigenvalues
/// below `tol` times the largest magnitude.
pub fn hermitian_pinv(m: &CMatrix, tol: f64) -> CMatrix {
    let eig = hermitian_part(m).symmetric_eigen();
    let scale = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let inv = eig.eigenvalues.map(|l| if l.abs() > tol * scale && l != 0.0 { c(1.0 / l, 0.0) } else { c(0.0, 0.0) });
    &eig.eigenvectors * CMatrix::from_diagonal(&inv) * eig.eigenvectors.adjoint()
}

/// Promote a real matrix to complex.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
