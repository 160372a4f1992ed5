use super::{kappa_tcl, RateQuery};
use crate::error::{Error, Result};
use crate::linalg::{c, hermiticity_defect, min_hermitian_eigenvalue, CMatrix};

/// Rate matrix over coupling channels, each labelled by its coupling index
/// and Bohr frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct KossakowskiBlock {
    pub labels: Vec<(usize, f64)>,
    pub matrix: CMatrix,
    /// Smallest eigenvalue of `matrix`.
    pub psd_margin: f64,
}

impl KossakowskiBlock {
    /// Wrap an explicit matrix; labels default to `(alpha, omega_alpha)`.
    pub fn from_matrix(labels: Vec<(usize, f64)>, matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != labels.len() {
            return Err(Error::Construction(format!(
                "rate matrix is {}x{} but there are {} labels",
                matrix.nrows(),
                matrix.ncols(),
                labels.len()
            )));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if hermiticity_defect(&matrix) > 1e-12 * scale {
            return Err(Error::Construction("rate matrix is not Hermitian".into()));
        }
        let psd_margin = if matrix.is_empty() { 0.0 } else { min_hermitian_eigenvalue(&matrix) };
        Ok(Self { labels, matrix, psd_margin })
    }

    /// Trace of the block.
    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }
}

/// `matrix[a][b] = F_a conj(F_b) kappa(omega)` for channels sharing a Bohr
/// frequency; channels at different frequencies do not mix.
///
/// `cross_phases` is the Gram matrix of the coupling amplitudes and must be
/// positive semidefinite. All queries must share kernel and environment.
pub fn assemble_kossakowski(queries: &[RateQuery], cross_phases: &CMatrix) -> Result<KossakowskiBlock> {
    let n = queries.len();
    if cross_phases.nrows() != n || cross_phases.ncols() != n {
        return Err(Error::Construction(format!(
            "{n} rate queries but a {}x{} coupling matrix",
            cross_phases.nrows(),
            cross_phases.ncols()
        )));
    }
    if n == 0 {
        return KossakowskiBlock::from_matrix(Vec::new(), CMatrix::zeros(0, 0));
    }
    let first = &queries[0];
    if queries.iter().any(|q| q.kernel() != first.kernel() || q.env() != first.env()) {
        return Err(Error::Construction("rate queries must share kernel and environment".into()));
    }
    let scale = cross_phases.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if hermiticity_defect(cross_phases) > 1e-12 * scale.max(1.0) {
        return Err(Error::Construction("coupling matrix is not Hermitian".into()));
    }
    let trace: f64 = cross_phases.diagonal().iter().map(|z| z.re).sum();
    if min_hermitian_eigenvalue(cross_phases) < -1e-12 * trace.abs().max(scale) {
        return Err(Error::Construction("coupling matrix is not positive semidefinite".into()));
    }
    let mut rates: Vec<(f64, f64)> = Vec::new();
    let mut rate_of = |q: &RateQuery| -> Result<f64> {
        if let Some(&(_, r)) = rates.iter().find(|(w, _)| *w == q.omega()) {
            return Ok(r);
        }
        let r = kappa_tcl(q)?;
        rates.push((q.omega(), r));
        Ok(r)
    };
    let mut matrix = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if queries[a].omega() == queries[b].omega() {
                matrix[(a, b)] = cross_phases[(a, b)] * c(rate_of(&queries[a])?, 0.0);
            }
        }
    }
    let matrix = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
    let labels = queries.iter().enumerate().map(|(a, q)| (a, q.omega())).collect();
    KossakowskiBlock::from_matrix(labels, matrix)
}
