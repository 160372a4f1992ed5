//! Hybrid classical-quantum clock dynamics: a classical clock reading `z`
//! coupled to a quantum system through backaction drift, classical
//! diffusion and quantum decoherence.
//!
//! The hybrid state is an operator-valued density `Upsilon(z)` on a grid
//! of cells. It evolves under
//!
//! ```text
//! dUpsilon/dt = -i[H(z), Upsilon] + sum_mn d0_mn D[L_m, L_n](Upsilon)
//!               - d/dz {B, Upsilon} + d2 d^2/dz^2 Upsilon,
//! B = sum_m d1_m (L_m + L_m^dag) / 2,
//! ```
//!
//! which is completely positive exactly when `2 d2 >= d1 d0^+ d1^dag` and
//! `d1` lies in the range of `d0`.
//!
//! On the grid the drift and diffusion are realised as a random walk with
//! rate `d2 / dz^2` per direction whose steps apply the Kraus operators
//! `1 +- dz B / (2 d2)`. That walk carries decoherence `D[B] / (2 d2)` of
//! its own, so the per-cell quantum step uses the remainder
//! `d0 - d1^T d1 / (2 d2)`. The remainder is positive semidefinite exactly
//! when the trade-off holds, so the whole scheme is a CP map then and
//! fails to be one otherwise.

use crate::error::{domain, Error, Result};
use crate::gkls::{lindbladian, unvectorize, vectorize, DensityMatrix, Superoperator};
use crate::linalg::{
    c, hermitian_part, hermitian_pinv, hermiticity_defect, min_hermitian_eigenvalue, spectral_norm, CMatrix, KahanSum,
};
use crate::sampling::{map_indexed, normal, stream};

/// Tolerance on positivity of the kernels and on the range condition.
pub const KERNEL_TOL: f64 = 1e-10;
/// Largest admissible `dt d2 / dz^2`.
pub const MAX_DIFFUSION_NUMBER: f64 = 0.2;
/// Largest admissible `dt ||generator||` for the per-cell quantum generator.
pub const MAX_GENERATOR_STEP: f64 = 0.1;

/// Decoherence, backaction and diffusion kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct CqKernels {
    d0: CMatrix,
    d1: CMatrix,
    d2: CMatrix,
}

impl CqKernels {
    /// `d0` is `n_l x n_l`, `d1` is `n_c x n_l` and `d2` is `n_c x n_c`.
    pub fn new(d0: CMatrix, d1: CMatrix, d2: CMatrix) -> Result<Self> {
        let n_l = d0.nrows();
        let n_c = d2.nrows();
        if !d0.is_square() || !d2.is_square() || d1.shape() != (n_c, n_l) {
            return Err(Error::Construction(format!(
                "kernel shapes d0 {:?}, d1 {:?}, d2 {:?} are not conformable",
                d0.shape(),
                d1.shape(),
                d2.shape()
            )));
        }
        for (name, m) in [("d0", &d0), ("d2", &d2)] {
            let scale = spectral_norm(m).max(1.0);
            if hermiticity_defect(m) > KERNEL_TOL * scale {
                return Err(Error::Construction(format!("{name} is not Hermitian")));
            }
            if !m.is_empty() && min_hermitian_eigenvalue(m) < -KERNEL_TOL * scale {
                return Err(Error::Construction(format!("{name} is not positive semidefinite")));
            }
        }
        Ok(Self { d0, d1, d2 })
    }

    /// One classical direction and one Lindblad operator.
    pub fn scalar(d0: f64, d1: f64, d2: f64) -> Result<Self> {
        let m = |v: f64| CMatrix::from_element(1, 1, c(v, 0.0));
        Self::new(m(d0), m(d1), m(d2))
    }

    pub fn d0(&self) -> &CMatrix {
        &self.d0
    }

    pub fn d1(&self) -> &CMatrix {
        &self.d1
    }

    pub fn d2(&self) -> &CMatrix {
        &self.d2
    }

    fn lindblad_count(&self) -> usize {
        self.d0.nrows()
    }

    /// Scalar diffusion and real backaction couplings of a one-dimensional
    /// clock.
    fn one_dimensional(&self) -> Result<(f64, Vec<f64>)> {
        if self.d2.nrows() != 1 {
            return Err(Error::Unsupported(format!(
                "the grid evolver has one classical direction, the kernels have {}",
                self.d2.nrows()
            )));
        }
        if self.d1.iter().any(|z| z.im.abs() > KERNEL_TOL * z.norm().max(1.0)) {
            return Err(Error::Unsupported("complex backaction couplings are not supported on the grid".into()));
        }
        Ok((self.d2[(0, 0)].re, self.d1.iter().map(|z| z.re).collect()))
    }
}

/// Result of the decoherence-diffusion trade-off test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TradeoffVerdict {
    /// `2 d2 - d1 d0^+ d1^dag` is positive semidefinite; `margin` is its
    /// smallest eigenvalue.
    Satisfied {
        margin: f64,
    },
    Violated {
        margin: f64,
    },
    /// `d1` has a component outside the range of `d0`.
    RangeViolation {
        margin: f64,
        range_defect: f64,
    },
}

impl TradeoffVerdict {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, Self::Satisfied { .. })
    }

    pub fn margin(&self) -> f64 {
        match *self {
            Self::Satisfied { margin } | Self::Violated { margin } | Self::RangeViolation { margin, .. } => margin,
        }
    }

    pub fn range_ok(&self) -> bool {
        !matches!(self, Self::RangeViolation { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Satisfied { .. } => "satisfied",
            Self::Violated { .. } => "violated",
            Self::RangeViolation { .. } => "range_violation",
        }
    }
}

/// Check `2 d2 >= d1 d0^+ d1^dag` together with `d1 (1 - d0^+ d0) = 0`.
pub fn tradeoff_check(k: &CqKernels) -> TradeoffVerdict {
    let n_l = k.lindblad_count();
    let pinv = hermitian_pinv(&k.d0, 1e-12);
    let m = &k.d2 * c(2.0, 0.0) - &k.d1 * &pinv * k.d1.adjoint();
    let margin = if m.is_empty() { 0.0 } else { min_hermitian_eigenvalue(&hermitian_part(&m)) };
    let projector_defect = CMatrix::identity(n_l, n_l) - &pinv * &k.d0;
    let range_defect = (&k.d1 * projector_defect).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if range_defect > KERNEL_TOL * spectral_norm(&k.d1).max(1.0) {
        TradeoffVerdict::RangeViolation { margin, range_defect }
    } else if margin >= -KERNEL_TOL * spectral_norm(&k.d2).max(1.0) {
        TradeoffVerdict::Satisfied { margin }
    } else {
        TradeoffVerdict::Violated { margin }
    }
}

/// Quantum system with a Hamiltonian linear in the clock reading,
/// `H(z) = h0 + z h1`, and the Lindblad operators the kernels refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    h0: CMatrix,
    h1: CMatrix,
    lindblad: Vec<CMatrix>,
}

impl HybridModel {
    pub fn new(h0: CMatrix, h1: CMatrix, lindblad: Vec<CMatrix>) -> Result<Self> {
        let d = h0.nrows();
        if d == 0 || !h0.is_square() || h1.shape() != (d, d) || lindblad.iter().any(|l| l.shape() != (d, d)) {
            return Err(Error::Construction("hybrid model operators must share one square dimension".into()));
        }
        for (name, h) in [("h0", &h0), ("h1", &h1)] {
            if hermiticity_defect(h) > 1e-12 * spectral_norm(h).max(1.0) {
                return Err(Error::Construction(format!("{name} is not Hermitian")));
            }
        }
        Ok(Self { h0, h1, lindblad })
    }

    /// Clock-independent Hamiltonian.
    pub fn static_hamiltonian(h: CMatrix, lindblad: Vec<CMatrix>) -> Result<Self> {
        let d = h.nrows();
        Self::new(h, CMatrix::zeros(d, d), lindblad)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn hamiltonian_at(&self, z: f64) -> CMatrix {
        &self.h0 + &self.h1 * c(z, 0.0)
    }

    pub fn lindblad(&self) -> &[CMatrix] {
        &self.lindblad
    }

    fn is_clock_independent(&self) -> bool {
        self.h1.iter().all(|z| *z == c(0.0, 0.0))
    }

    fn backaction(&self, d1: &[f64]) -> CMatrix {
        let d = self.dim();
        self.lindblad
            .iter()
            .zip(d1)
            .fold(CMatrix::zeros(d, d), |acc, (l, &w)| acc + (l + l.adjoint()) * c(0.5 * w, 0.0))
    }
}

/// Operator-valued density on a uniform grid of clock readings; each
/// block is `Upsilon(z_i) dz`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub z_grid: Vec<f64>,
    pub blocks: Vec<CMatrix>,
}

impl HybridState {
    /// `rho` times a classical profile sampled on `z_grid`, normalised to
    /// unit total weight.
    pub fn product(rho: &DensityMatrix, z_grid: Vec<f64>, profile: &[f64]) -> Result<Self> {
        if z_grid.len() < 3 || profile.len() != z_grid.len() {
            return Err(domain("a hybrid grid needs at least three cells and one weight per cell"));
        }
        let step = z_grid[1] - z_grid[0];
        if !(step > 0.0) || z_grid.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step) {
            return Err(domain("the clock grid must be uniform and increasing"));
        }
        if profile.iter().any(|&p| !(p >= 0.0)) {
            return Err(domain("classical weights must be >= 0"));
        }
        let total: f64 = profile.iter().sum();
        if !(total > 0.0) {
            return Err(domain("classical profile has no weight"));
        }
        let blocks = profile.iter().map(|p| rho.matrix() * c(p / total, 0.0)).collect();
        Ok(Self { z_grid, blocks })
    }

    /// `rho` times a Gaussian packet of the given centre and width on
    /// `n_cells` cells spanning `[z_min, z_max]`.
    pub fn gaussian_packet(
        rho: &DensityMatrix,
        z_min: f64,
        z_max: f64,
        n_cells: usize,
        centre: f64,
        width: f64,
    ) -> Result<Self> {
        if !(z_max > z_min) || n_cells < 3 || !(width > 0.0) {
            return Err(domain("packet needs z_max > z_min, at least three cells and a positive width"));
        }
        let step = (z_max - z_min) / n_cells as f64;
        let grid: Vec<f64> = (0..n_cells).map(|i| z_min + (i as f64 + 0.5) * step).collect();
        let profile: Vec<f64> = grid.iter().map(|z| (-0.5 * ((z - centre) / width).powi(2)).exp()).collect();
        Self::product(rho, grid, &profile)
    }

    pub fn spacing(&self) -> f64 {
        self.z_grid[1] - self.z_grid[0]
    }

    pub fn dim(&self) -> usize {
        self.blocks[0].nrows()
    }

    pub fn total_trace(&self) -> f64 {
        let mut sum = KahanSum::default();
        for b in &self.blocks {
            sum.add(b.trace().re);
        }
        sum.value()
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_block_eigenvalue(&self) -> f64 {
        self.blocks.iter().map(min_hermitian_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    /// Probability of each cell.
    pub fn z_marginal(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.trace().re).collect()
    }

    /// Reduced quantum state, `sum_i Upsilon_i`.
    pub fn quantum_marginal(&self) -> CMatrix {
        let d = self.dim();
        self.blocks.iter().fold(CMatrix::zeros(d, d), |acc, b| acc + b)
    }

    pub fn z_mean(&self) -> f64 {
        self.z_grid.iter().zip(self.z_marginal()).map(|(z, p)| z * p).sum::<f64>() / self.total_trace()
    }

    pub fn z_variance(&self) -> f64 {
        let mean = self.z_mean();
        self.z_grid.iter().zip(self.z_marginal()).map(|(z, p)| (z - mean).powi(2) * p).sum::<f64>() / self.total_trace()
    }
}

/// Per-cell quantum generator: Hamiltonian at `z`, the kernel's
/// decoherence and the compensating `-D[B] / (2 d2)`.
fn residual_generator(model: &HybridModel, k: &CqKernels, backaction: &CMatrix, d2: f64, z: f64) -> Superoperator {
    let n_l = k.lindblad_count();
    let mut operators = model.lindblad.clone();
    let mut rates = CMatrix::zeros(n_l + 1, n_l + 1);
    rates.view_mut((0, 0), (n_l, n_l)).copy_from(&k.d0);
    if d2 > 0.0 {
        operators.push(backaction.clone());
        rates[(n_l, n_l)] = c(-0.5 / d2, 0.0);
    } else {
        operators.push(CMatrix::zeros(model.dim(), model.dim()));
    }
    lindbladian(&model.hamiltonian_at(z), &operators, &rates)
}

fn apply(propagator: &CMatrix, block: &CMatrix) -> CMatrix {
    unvectorize(&(propagator * vectorize(block)), block.nrows())
}

/// Evolve a hybrid state for time `t` with Strang steps of at most `dt`:
/// half a quantum step per cell, one random-walk step of the clock, half a
/// quantum step. Cells at the ends of the grid reflect.
pub fn cq_evolve_grid(k: &CqKernels, model: &HybridModel, state: &HybridState, t: f64, dt: f64) -> Result<HybridState> {
    if !(t >= 0.0) || !t.is_finite() || !(dt > 0.0) || !dt.is_finite() {
        return Err(domain(format!("need finite t >= 0 and dt > 0, got t = {t}, dt = {dt}")));
    }
    if state.dim() != model.dim() || k.lindblad_count() != model.lindblad.len() {
        return Err(Error::Construction("state, model and kernels disagree on dimensions".into()));
    }
    let (d2, d1) = k.one_dimensional()?;
    if d2 == 0.0 && d1.iter().any(|&w| w != 0.0) {
        return Err(Error::Construction("backaction without classical diffusion has no lattice realisation".into()));
    }
    let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(state.clone());
    }
    let step = t / steps as f64;
    let dz = state.spacing();
    let hop_rate = d2 / (dz * dz);
    if step * hop_rate > MAX_DIFFUSION_NUMBER {
        return Err(Error::StepSize(format!("dt d2 / dz^2 = {:.3e} exceeds {MAX_DIFFUSION_NUMBER}", step * hop_rate)));
    }
    let d = model.dim();
    let backaction = model.backaction(&d1);
    let kraus_step = if d2 > 0.0 { dz / (2.0 * d2) } else { 0.0 };
    let b_norm = spectral_norm(&backaction);
    let z_extent = state.z_grid[0].abs().max(state.z_grid[state.z_grid.len() - 1].abs());
    let h_norm = spectral_norm(&model.h0) + z_extent * spectral_norm(&model.h1);
    let l_norms: Vec<f64> = model.lindblad.iter().map(spectral_norm).collect();
    let mut dissipation = 0.0;
    for (a, la) in l_norms.iter().enumerate() {
        for (b, lb) in l_norms.iter().enumerate() {
            dissipation += 2.0 * k.d0[(a, b)].norm() * la * lb;
        }
    }
    if d2 > 0.0 {
        dissipation += b_norm * b_norm / d2;
    }
    let generator_norm = 2.0 * h_norm + dissipation;
    if step * generator_norm > MAX_GENERATOR_STEP {
        return Err(Error::StepSize(format!(
            "dt ||generator|| = {:.3e} exceeds {MAX_GENERATOR_STEP}",
            step * generator_norm
        )));
    }
    let half_propagators: Vec<CMatrix> = if model.is_clock_independent() {
        let p = residual_generator(model, k, &backaction, d2, 0.0).exp(0.5 * step);
        vec![p; state.blocks.len()]
    } else {
        map_indexed(state.z_grid.len(), |i| {
            residual_generator(model, k, &backaction, d2, state.z_grid[i]).exp(0.5 * step)
        })
    };
    let id = CMatrix::identity(d, d);
    let forward = &id + &backaction * c(kraus_step, 0.0);
    let backward = &id - &backaction * c(kraus_step, 0.0);
    let stay_sq = &id * c(1.0 - 2.0 * step * hop_rate, 0.0)
        - &backaction * &backaction * c(2.0 * step * hop_rate * kraus_step * kraus_step, 0.0);
    let stay = crate::linalg::psd_sqrt(&stay_sq);
    let hop = c(step * hop_rate, 0.0);
    let n = state.blocks.len();
    let mut blocks = state.blocks.clone();
    for _ in 0..steps {
        blocks = map_indexed(n, |i| apply(&half_propagators[i], &blocks[i]));
        blocks = map_indexed(n, |i| {
            let mut next = &stay * &blocks[i] * &stay;
            let from_below = if i == 0 { None } else { Some(&blocks[i - 1]) };
            let from_above = if i + 1 == n { None } else { Some(&blocks[i + 1]) };
            if let Some(b) = from_below {
                next += &forward * b * &forward * hop;
            } else {
                next += &backward * &blocks[i] * &backward * hop;
            }
            if let Some(b) = from_above {
                next += &backward * b * &backward * hop;
            } else {
                next += &forward * &blocks[i] * &forward * hop;
            }
            next
        });
        blocks = map_indexed(n, |i| apply(&half_propagators[i], &blocks[i]));
    }
    Ok(HybridState { z_grid: state.z_grid.clone(), blocks })
}

/// Ensemble of hybrid trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct CqEnsemble {
    /// `E[rho]` at the final time.
    pub quantum_marginal: CMatrix,
    /// Frobenius standard error of `quantum_marginal`.
    pub stat_error: f64,
    /// Final clock reading of each trajectory.
    pub z_samples: Vec<f64>,
}

impl CqEnsemble {
    /// Fraction of samples in each cell of a uniform grid of cell centres;
    /// samples outside the grid are counted in the end cells.
    pub fn z_histogram(&self, z_grid: &[f64]) -> Vec<f64> {
        let n = z_grid.len();
        let mut counts = vec![0.0; n];
        if n == 0 || self.z_samples.is_empty() {
            return counts;
        }
        let step = if n > 1 { z_grid[1] - z_grid[0] } else { 1.0 };
        let lower = z_grid[0] - 0.5 * step;
        for &z in &self.z_samples {
            let cell = ((z - lower) / step).floor().clamp(0.0, (n - 1) as f64) as usize;
            counts[cell] += 1.0;
        }
        let total = self.z_samples.len() as f64;
        counts.iter().map(|c| c / total).collect()
    }
}

/// Unravel the hybrid dynamics into trajectories of a classical reading
/// and a normalised quantum state, starting from `rho0` at `z0`.
///
/// Each step draws `dZ = 2 <B> dt + sqrt(2 d2) dW`, applies the Kraus
/// operator `1 + dZ B / (2 d2) - dt B^2 / (4 d2)` with renormalisation and
/// then the residual quantum generator. The unraveling exists only when the
/// trade-off holds, so it is refused otherwise.
#[allow(clippy::too_many_arguments)]
pub fn cq_unravel(
    k: &CqKernels,
    model: &HybridModel,
    rho0: &DensityMatrix,
    z0: f64,
    t: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
) -> Result<CqEnsemble> {
    let verdict = tradeoff_check(k);
    if !verdict.is_satisfied() {
        return Err(Error::Refused(format!(
            "the trade-off is {} (margin {:e}); no completely positive unraveling exists",
            verdict.label(),
            verdict.margin()
        )));
    }
    if n_traj == 0 {
        return Err(domain("at least one trajectory is required"));
    }
    if !(t >= 0.0) || !t.is_finite() || !(dt > 0.0) || !dt.is_finite() {
        return Err(domain(format!("need finite t >= 0 and dt > 0, got t = {t}, dt = {dt}")));
    }
    if rho0.dim() != model.dim() || k.lindblad_count() != model.lindblad.len() {
        return Err(Error::Construction("state, model and kernels disagree on dimensions".into()));
    }
    let (d2, d1) = k.one_dimensional()?;
    let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
    let step = if steps == 0 { 0.0 } else { t / steps as f64 };
    let d = model.dim();
    let backaction = model.backaction(&d1);
    let b_squared = &backaction * &backaction;
    let fixed_propagator =
        model.is_clock_independent().then(|| residual_generator(model, k, &backaction, d2, 0.0).exp(step));
    let id = CMatrix::identity(d, d);
    let finals = map_indexed(n_traj, |r| {
        let mut rng = stream(seed, r);
        let mut rho = rho0.matrix().clone();
        let mut z = z0;
        for _ in 0..steps {
            if d2 > 0.0 {
                let mean_b = (&backaction * &rho).trace().re;
                let dz = 2.0 * mean_b * step + (2.0 * d2 * step).sqrt() * normal(&mut rng);
                let kraus = &id + &backaction * c(dz / (2.0 * d2), 0.0) - &b_squared * c(step / (4.0 * d2), 0.0);
                rho = &kraus * &rho * kraus.adjoint();
                let norm = rho.trace().re;
                rho /= c(norm, 0.0);
                z += dz;
            }
            let propagator = match &fixed_propagator {
                Some(p) => p.clone(),
                None => residual_generator(model, k, &backaction, d2, z).exp(step),
            };
            rho = apply(&propagator, &rho);
            rho = hermitian_part(&rho);
        }
        (rho, z)
    });
    let count = n_traj as f64;
    let mut mean = CMatrix::zeros(d, d);
    for (rho, _) in &finals {
        mean += rho;
    }
    mean /= c(count, 0.0);
    let stat_error = if n_traj < 2 {
        f64::INFINITY
    } else {
        let mut squares = KahanSum::default();
        for (rho, _) in &finals {
            squares.add((rho - &mean).norm_squared());
        }
        (squares.value() / (count - 1.0) / count).sqrt()
    };
    Ok(CqEnsemble { quantum_marginal: mean, stat_error, z_samples: finals.into_iter().map(|(_, z)| z).collect() })
}

/// Trace distance `||a - b||_1 / 2` of two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * crate::linalg::hermitian_eigenvalues(&(a - b)).iter().map(|l| l.abs()).sum::<f64>()
}
