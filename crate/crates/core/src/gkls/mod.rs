//! Finite-dimensional GKLS generators, their complete-positivity
//! certificates and exact evolution.
//!
//! Density matrices are vectorised by column stacking, so
//! `vec(A X B) = (B^T kron A) vec(X)` and entry `(i, j)` of `X` sits at
//! index `i + j d`. The Choi matrix of a channel `Phi` is
//! `C[(i, a), (j, b)] = Phi(|i><j|)[a, b]` with row index `i d + a`.

mod bohr;
mod io;

pub use bohr::bohr_components;

use crate::error::{domain, Error, Result};
use crate::linalg::{c, hermiticity_defect, min_hermitian_eigenvalue, spectral_norm, CMatrix, C64};
use crate::rates::KossakowskiBlock;
use nalgebra::DVector;

/// A jump operator and the Bohr frequency it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub operator: CMatrix,
    pub omega: f64,
}

impl JumpOperator {
    pub fn new(operator: CMatrix, omega: f64) -> Self {
        Self { operator, omega }
    }
}

/// Hamiltonian, jump operators and their rate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GklsModel {
    system_hamiltonian: CMatrix,
    lamb_shift: CMatrix,
    jumps: Vec<JumpOperator>,
    kossakowski: KossakowskiBlock,
}

impl GklsModel {
    /// Validates Hermiticity, label alignment and that every jump operator
    /// satisfies `[H_S, L] = omega L`. Positivity of the rate matrix is not
    /// enforced; use [`cp_choi_check`] to certify it.
    pub fn new(system_hamiltonian: CMatrix, jumps: Vec<JumpOperator>, kossakowski: KossakowskiBlock) -> Result<Self> {
        let d = system_hamiltonian.nrows();
        if d == 0 || !system_hamiltonian.is_square() {
            return Err(Error::Construction("the Hamiltonian must be a non-empty square matrix".into()));
        }
        let h_scale = spectral_norm(&system_hamiltonian).max(1.0);
        if hermiticity_defect(&system_hamiltonian) > 1e-12 * h_scale {
            return Err(Error::Construction("the Hamiltonian is not Hermitian".into()));
        }
        if kossakowski.matrix.nrows() != jumps.len() || kossakowski.labels.len() != jumps.len() {
            return Err(Error::Construction(format!(
                "{} jump operators but a rate matrix with {} labels",
                jumps.len(),
                kossakowski.labels.len()
            )));
        }
        for (i, (jump, (_, label))) in jumps.iter().zip(&kossakowski.labels).enumerate() {
            if jump.operator.shape() != (d, d) {
                return Err(Error::Construction(format!("jump operator {i} is not {d}x{d}")));
            }
            if (jump.omega - label).abs() > 1e-12 * jump.omega.abs().max(1.0) {
                return Err(Error::Construction(format!(
                    "jump operator {i} carries frequency {} but its rate label is {label}",
                    jump.omega
                )));
            }
            let commutator = &system_hamiltonian * &jump.operator - &jump.operator * &system_hamiltonian;
            let defect = (commutator - &jump.operator * c(jump.omega, 0.0)).norm();
            if defect > 1e-10 * h_scale * jump.operator.norm().max(1.0) {
                return Err(Error::Construction(format!(
                    "jump operator {i} is not a Bohr eigenoperator at frequency {} (defect {defect:e})",
                    jump.omega
                )));
            }
        }
        Ok(Self { lamb_shift: CMatrix::zeros(d, d), system_hamiltonian, jumps, kossakowski })
    }

    /// Diagonal rates: jump `i` with rate `rates[i]`.
    pub fn with_diagonal_rates(system_hamiltonian: CMatrix, jumps: Vec<JumpOperator>, rates: &[f64]) -> Result<Self> {
        let labels = jumps.iter().enumerate().map(|(i, j)| (i, j.omega)).collect();
        let matrix = CMatrix::from_diagonal(&DVector::from_iterator(rates.len(), rates.iter().map(|&r| c(r, 0.0))));
        Self::new(system_hamiltonian, jumps, KossakowskiBlock::from_matrix(labels, matrix)?)
    }

    /// Add a Hermitian Lamb-shift term to the coherent part.
    pub fn with_lamb_shift(mut self, lamb_shift: CMatrix) -> Result<Self> {
        if lamb_shift.shape() != self.system_hamiltonian.shape() {
            return Err(Error::Construction("Lamb shift has the wrong dimension".into()));
        }
        if hermiticity_defect(&lamb_shift) > 1e-12 * spectral_norm(&lamb_shift).max(1.0) {
            return Err(Error::Construction("Lamb shift is not Hermitian".into()));
        }
        self.lamb_shift = lamb_shift;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.system_hamiltonian.nrows()
    }

    pub fn system_hamiltonian(&self) -> &CMatrix {
        &self.system_hamiltonian
    }

    pub fn lamb_shift(&self) -> &CMatrix {
        &self.lamb_shift
    }

    /// System Hamiltonian plus Lamb shift.
    pub fn hamiltonian(&self) -> CMatrix {
        &self.system_hamiltonian + &self.lamb_shift
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    pub fn kossakowski(&self) -> &KossakowskiBlock {
        &self.kossakowski
    }
}

/// A linear map on column-stacked `d x d` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub matrix: CMatrix,
    dim: usize,
}

impl Superoperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        let dim = (n as f64).sqrt().round() as usize;
        if !matrix.is_square() || dim * dim != n {
            return Err(Error::Construction(format!("a superoperator must be d^2 x d^2, got {n}x{}", matrix.ncols())));
        }
        Ok(Self { matrix, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = &self.matrix * vectorize(rho);
        unvectorize(&v, self.dim)
    }

    /// `|| S^dagger vec(I) ||`, zero for a trace-preserving generator.
    pub fn trace_preservation_defect(&self) -> f64 {
        let id = vectorize(&CMatrix::identity(self.dim, self.dim));
        (self.matrix.adjoint() * id).norm()
    }

    /// `exp(t S)`.
    pub fn exp(&self, t: f64) -> CMatrix {
        (&self.matrix * c(t, 0.0)).exp()
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

pub fn vectorize(m: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

/// `(B^T kron A)`, the matrix of `X -> A X B`.
fn sandwich(a: &CMatrix, b: &CMatrix) -> CMatrix {
    b.transpose().kronecker(a)
}

/// `L(rho) = -i[H, rho] + sum_ab k_ab (A_a rho A_b^dag - {A_b^dag A_a, rho}/2)`.
pub fn build_generator(model: &GklsModel) -> Superoperator {
    let operators: Vec<CMatrix> = model.jumps.iter().map(|j| j.operator.clone()).collect();
    lindbladian(&model.hamiltonian(), &operators, &model.kossakowski.matrix)
}

/// The GKLS-form superoperator of `hamiltonian`, `operators` and `rates`
/// with no structural checks. `rates` need not be positive semidefinite.
pub fn lindbladian(hamiltonian: &CMatrix, operators: &[CMatrix], rates: &CMatrix) -> Superoperator {
    let d = hamiltonian.nrows();
    let id = CMatrix::identity(d, d);
    let mut gen = (sandwich(hamiltonian, &id) - sandwich(&id, hamiltonian)) * c(0.0, -1.0);
    for (a, op_a) in operators.iter().enumerate() {
        for (b, op_b) in operators.iter().enumerate() {
            let rate = rates[(a, b)];
            if rate == c(0.0, 0.0) {
                continue;
            }
            let b_dag = op_b.adjoint();
            let product = &b_dag * op_a;
            let term = sandwich(op_a, &b_dag) - (sandwich(&product, &id) + sandwich(&id, &product)) * c(0.5, 0.0);
            gen += term * rate;
        }
    }
    Superoperator { matrix: gen, dim: d }
}

/// A normalised positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Requires Hermiticity, unit trace to 1e-12 and eigenvalues above -1e-10.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Construction("a density matrix must be square".into()));
        }
        if hermiticity_defect(&matrix) > 1e-12 {
            return Err(Error::Construction("density matrix is not Hermitian".into()));
        }
        let trace = matrix.trace();
        if (trace - c(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::Construction(format!("density matrix has trace {trace}")));
        }
        let min = min_hermitian_eigenvalue(&matrix);
        if min < -1e-10 {
            return Err(Error::Positivity(format!("density matrix has eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm2 = psi.norm_squared();
        if !(norm2 > 0.0) {
            return Err(domain("cannot normalise the zero vector"));
        }
        Ok(Self { matrix: psi * psi.adjoint() / c(norm2, 0.0) })
    }

    /// Projector onto basis state `k`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(domain(format!("basis index {k} out of range for dimension {d}")));
        }
        let mut m = CMatrix::zeros(d, d);
        m[(k, k)] = c(1.0, 0.0);
        Ok(Self { matrix: m })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: CMatrix::identity(d, d) / c(d as f64, 0.0) }
    }

    /// `exp(-beta H) / Z`.
    pub fn gibbs(hamiltonian: &CMatrix, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(domain(format!("Gibbs state needs finite beta >= 0, got {beta}")));
        }
        let eig = crate::linalg::hermitian_part(hamiltonian).symmetric_eigen();
        let e_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let weights = eig.eigenvalues.map(|e| (-beta * (e - e_min)).exp());
        let z: f64 = weights.sum();
        let diag = weights.map(|w| c(w / z, 0.0));
        let m = &eig.eigenvectors * CMatrix::from_diagonal(&diag) * eig.eigenvectors.adjoint();
        Ok(Self { matrix: m })
    }

    pub(crate) fn from_evolution(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.matrix)
    }

    /// Population of basis state `k`.
    pub fn population(&self, k: usize) -> f64 {
        self.matrix[(k, k)].re
    }
}

/// `rho(t) = exp(t L) rho_0`.
pub fn evolve(model: &GklsModel, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain(format!("evolution time must be finite and >= 0, got {t}")));
    }
    if rho0.dim() != model.dim() {
        return Err(Error::Construction("state and model dimensions differ".into()));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let gen = build_generator(model);
    Ok(DensityMatrix::from_evolution(gen.apply_exp(t, rho0.matrix())))
}

impl Superoperator {
    fn apply_exp(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let v = self.exp(t) * vectorize(rho);
        unvectorize(&v, self.dim)
    }
}

/// Outcome of a Choi-matrix positivity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChoiVerdict {
    CompletelyPositive { min_choi_eig: f64 },
    Violation { min_choi_eig: f64 },
}

impl ChoiVerdict {
    pub fn is_cp(&self) -> bool {
        matches!(self, Self::CompletelyPositive { .. })
    }

    pub fn min_choi_eig(&self) -> f64 {
        match *self {
            Self::CompletelyPositive { min_choi_eig } | Self::Violation { min_choi_eig } => min_choi_eig,
        }
    }
}

/// Tolerance on the Choi minimum eigenvalue.
pub const CHOI_TOL: f64 = 1e-10;

/// Choi matrix of a channel given in the column-stacked representation.
pub fn choi_matrix(channel: &CMatrix, d: usize) -> CMatrix {
    let mut choi = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let col = channel.column(i + j * d);
            for a in 0..d {
                for b in 0..d {
                    choi[(i * d + a, j * d + b)] = col[a + b * d];
                }
            }
        }
    }
    choi
}

/// Certify `exp(dt L)` by the smallest eigenvalue of its Choi matrix.
/// Requires `dt ||L|| <= 1`.
pub fn cp_choi_check(generator: &Superoperator, dt: f64) -> Result<ChoiVerdict> {
    if !(dt >= 0.0) {
        return Err(domain(format!("time step must be >= 0, got {dt}")));
    }
    let norm = generator.spectral_norm();
    if dt * norm > 1.0 + 1e-12 {
        return Err(Error::StepSize(format!("dt ||L|| = {} exceeds 1", dt * norm)));
    }
    let channel = generator.exp(dt);
    let choi = choi_matrix(&channel, generator.dim);
    let scale = spectral_norm(&choi);
    let mut min_choi_eig = min_hermitian_eigenvalue(&choi);
    if min_choi_eig.abs() <= 4.0 * f64::EPSILON * scale {
        min_choi_eig = 0.0;
    }
    Ok(if min_choi_eig >= -CHOI_TOL {
        ChoiVerdict::CompletelyPositive { min_choi_eig }
    } else {
        ChoiVerdict::Violation { min_choi_eig }
    })
}

/// Frobenius norm of `L(rho)`.
pub fn stationarity_check(model: &GklsModel, rho: &DensityMatrix) -> f64 {
    build_generator(model).apply(rho.matrix()).norm()
}

/// Two-level building blocks with basis `|0> = ground`, `|1> = excited`.
pub mod qubit {
    use super::*;

    /// `(omega0 / 2) diag(-1, 1)`.
    pub fn hamiltonian(omega0: f64) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_vec(vec![c(-0.5 * omega0, 0.0), c(0.5 * omega0, 0.0)]))
    }

    /// `|g><e|`.
    pub fn lowering() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
    }

    /// `|e><g|`.
    pub fn raising() -> CMatrix {
        lowering().adjoint()
    }

    /// `|e><e| - |g><g|`.
    pub fn sigma_z() -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_vec(vec![c(-1.0, 0.0), c(1.0, 0.0)]))
    }

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    /// Decay at `gamma_down` and excitation at `gamma_up`.
    pub fn relaxation_model(omega0: f64, gamma_down: f64, gamma_up: f64) -> Result<GklsModel> {
        GklsModel::with_diagonal_rates(
            hamiltonian(omega0),
            vec![JumpOperator::new(lowering(), -omega0), JumpOperator::new(raising(), omega0)],
            &[gamma_down, gamma_up],
        )
    }
}

/// Diagonal of `rho`.
pub fn populations(rho: &DensityMatrix) -> DVector<f64> {
    rho.matrix().diagonal().map(|z| z.re)
}
