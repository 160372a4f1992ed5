//! Stochastic unravelings: colored noise with the smeared environment
//! correlations, and linear diffusive state trajectories whose ensemble mean
//! follows the GKLS evolution.
//!
//! Every realization draws from its own ChaCha8 stream (`seed`, stream
//! index = realization index), so results do not depend on how work is
//! scheduled across threads.

use crate::correlators::{wightman_timelike, EnvironmentSpec};
use crate::error::{domain, Error, Result};
use crate::gkls::{build_generator, unvectorize, vectorize, DensityMatrix, GklsModel};
use crate::kernels::ClockKernel;
use crate::linalg::{c, hermitian_part, spectral_norm, CMatrix, KahanSum, C64};
use crate::sampling::{complex_normal, map_indexed, stream};
use nalgebra::DVector;
use std::io::Write;

/// Largest time grid accepted by [`sample_colored_noise`].
pub const MAX_NOISE_GRID: usize = 256;
/// Largest admissible `dt ||H_eff||` for [`unravel_linear`].
pub const MAX_STEP_PHASE: f64 = 0.05;
/// Recorded grid points per unraveling when no stride is given.
pub const DEFAULT_RECORD_INTERVALS: usize = 100;

/// Complex noise realizations on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    pub grid: Vec<f64>,
    /// `samples[r][j]` is realization `r` at `grid[j]`.
    pub samples: Vec<Vec<C64>>,
    pub target_covariance: CMatrix,
    /// Number of negative covariance eigenvalues clipped to zero.
    pub clipped_eigenvalues: usize,
    /// Largest magnitude among the clipped eigenvalues.
    pub clipped_magnitude: f64,
}

impl NoiseField {
    /// `(1/n) sum_r z_r z_r^dag`; the field has zero mean by construction.
    pub fn sample_covariance(&self) -> CMatrix {
        let n = self.grid.len();
        let mut acc = CMatrix::zeros(n, n);
        for row in &self.samples {
            let z = DVector::from_column_slice(row);
            acc += &z * z.adjoint();
        }
        acc / c(self.samples.len().max(1) as f64, 0.0)
    }

    /// `||sample - target||_F / ||target||_F`, or the absolute error when the
    /// target vanishes.
    pub fn covariance_relative_error(&self) -> f64 {
        let diff = (self.sample_covariance() - &self.target_covariance).norm();
        let scale = self.target_covariance.norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }
}

fn is_uniform(grid: &[f64]) -> bool {
    if grid.len() < 3 {
        return true;
    }
    let step = grid[1] - grid[0];
    grid.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-12 * step.abs().max(f64::MIN_POSITIVE))
}

/// Target covariance `M[j][k] = C(t_j - t_k)` of the smeared Wightman
/// function on `grid`.
pub fn noise_covariance(env: &EnvironmentSpec, kernel: &ClockKernel, grid: &[f64]) -> Result<CMatrix> {
    let n = grid.len();
    let cutoff = env.default_cutoff();
    let correlator = |s: f64| wightman_timelike(env, Some(kernel), s, cutoff);
    let mut m = CMatrix::zeros(n, n);
    if is_uniform(grid) && n > 1 {
        let step = grid[1] - grid[0];
        let lags: Vec<C64> = (0..n).map(|lag| correlator(lag as f64 * step)).collect::<Result<_>>()?;
        for j in 0..n {
            for k in 0..n {
                m[(j, k)] = if j >= k { lags[j - k] } else { lags[k - j].conj() };
            }
        }
    } else {
        for j in 0..n {
            for k in 0..=j {
                let value = correlator(grid[j] - grid[k])?;
                m[(j, k)] = value;
                m[(k, j)] = value.conj();
            }
        }
    }
    for j in 0..n {
        m[(j, j)].im = 0.0;
    }
    Ok(m)
}

/// Draw `n_real` realizations of a complex Gaussian field with covariance
/// `E[z(t_j) z(t_k)^*] = C(t_j - t_k)`, factorised through the Hermitian
/// square root of the covariance.
pub fn sample_colored_noise(
    env: &EnvironmentSpec,
    kernel: &ClockKernel,
    grid: &[f64],
    n_real: usize,
    seed: u64,
) -> Result<NoiseField> {
    if grid.is_empty() || grid.len() > MAX_NOISE_GRID {
        return Err(domain(format!("noise grid must hold 1..={MAX_NOISE_GRID} times, got {}", grid.len())));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(domain("noise grid times must be finite"));
    }
    let target = noise_covariance(env, kernel, grid)?;
    let eig = hermitian_part(&target).symmetric_eigen();
    let max_diag = target.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-8 * max_diag {
        return Err(Error::Positivity(format!(
            "noise covariance has eigenvalue {min_eig:e} against a largest variance {max_diag:e}; the kernel does not regularise the correlator"
        )));
    }
    let negatives: Vec<f64> = eig.eigenvalues.iter().copied().filter(|&l| l < 0.0).collect();
    let roots = eig.eigenvalues.map(|l| c(l.max(0.0).sqrt(), 0.0));
    let factor = &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint();
    let n = grid.len();
    let samples = map_indexed(n_real, |r| {
        let mut rng = stream(seed, r);
        let white = DVector::from_fn(n, |_, _| complex_normal(&mut rng, 1.0));
        (&factor * white).iter().copied().collect::<Vec<C64>>()
    });
    Ok(NoiseField {
        grid: grid.to_vec(),
        samples,
        target_covariance: target,
        clipped_eigenvalues: negatives.len(),
        clipped_magnitude: negatives.iter().map(|l| l.abs()).fold(0.0, f64::max),
    })
}

/// Independent white increments on a slice of `n_sites` sites, one row per
/// realization, with `E[dW_i dW_j^*] = dt delta_ij` and `E[dW_i dW_j] = 0`.
pub fn slice_increments(n_sites: usize, dt: f64, n_real: usize, seed: u64) -> Result<Vec<Vec<C64>>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(domain(format!("time step must be > 0, got {dt}")));
    }
    Ok(map_indexed(n_real, |r| {
        let mut rng = stream(seed, r);
        (0..n_sites).map(|_| complex_normal(&mut rng, dt)).collect()
    }))
}

/// Unnormalised pure-state trajectories and their ensemble statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub seed: u64,
    /// Recorded times.
    pub times: Vec<f64>,
    /// `states[r][k]` is trajectory `r` at `times[k]`.
    pub states: Vec<Vec<DVector<C64>>>,
    /// `E[|psi><psi|]` at each recorded time.
    pub mean_states: Vec<CMatrix>,
    /// Frobenius standard error of each mean state. Infinite for a single
    /// trajectory, where the spread cannot be estimated.
    pub stat_error: Vec<f64>,
}

impl TrajectoryEnsemble {
    fn from_states(seed: u64, times: Vec<f64>, states: Vec<Vec<DVector<C64>>>) -> Self {
        let n_traj = states.len();
        let d = states.first().and_then(|s| s.first()).map_or(0, |v| v.len());
        let mut mean_states = Vec::with_capacity(times.len());
        let mut stat_error = Vec::with_capacity(times.len());
        for k in 0..times.len() {
            let mut sums = vec![(KahanSum::default(), KahanSum::default()); d * d];
            for traj in &states {
                let psi = &traj[k];
                for j in 0..d {
                    for i in 0..d {
                        let z = psi[i] * psi[j].conj();
                        let slot = &mut sums[i + j * d];
                        slot.0.add(z.re);
                        slot.1.add(z.im);
                    }
                }
            }
            let count = n_traj as f64;
            let mean = CMatrix::from_fn(d, d, |i, j| {
                let slot = &sums[i + j * d];
                c(slot.0.value() / count, slot.1.value() / count)
            });
            let error = if n_traj < 2 {
                f64::INFINITY
            } else {
                let mut squares = KahanSum::default();
                for traj in &states {
                    let psi = &traj[k];
                    let outer = psi * psi.adjoint();
                    squares.add((outer - &mean).norm_squared());
                }
                (squares.value() / (count - 1.0) / count).sqrt()
            };
            mean_states.push(mean);
            stat_error.push(error);
        }
        Self { n_traj, seed, times, states, mean_states, stat_error }
    }

    /// `|Tr(mean_state) - 1|` at each recorded time.
    pub fn trace_defects(&self) -> Vec<f64> {
        self.mean_states.iter().map(|m| (m.trace() - c(1.0, 0.0)).norm()).collect()
    }

    /// Dump every trajectory as little-endian `f32` pairs `(re, im)`. The
    /// layout is trajectory-major, one row of `d` amplitudes per recorded
    /// time.
    pub fn write_raw<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for traj in &self.states {
            for psi in traj {
                for z in psi.iter() {
                    out.write_all(&(z.re as f32).to_le_bytes())?;
                    out.write_all(&(z.im as f32).to_le_bytes())?;
                }
            }
        }
        out.flush()
    }
}

/// Step `dt` actually used and the number of steps to reach `t`.
fn step_plan(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain(format!("final time must be finite and >= 0, got {t}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(domain(format!("time step must be > 0, got {dt}")));
    }
    let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok((0, dt));
    }
    Ok((steps, t / steps as f64))
}

fn pure_amplitudes(rho0: &DensityMatrix) -> Result<DVector<C64>> {
    let eig = hermitian_part(rho0.matrix()).symmetric_eigen();
    let (top, &weight) =
        eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("density matrices are non-empty");
    if weight < 1.0 - 1e-10 {
        return Err(domain(format!("the unraveling needs a pure initial state, largest weight is {weight}")));
    }
    let psi = eig.eigenvectors.column(top).into_owned();
    let pivot = psi.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).expect("non-empty");
    Ok(psi * (pivot.conj() / pivot.norm()) * c(weight.sqrt(), 0.0))
}

/// Linear diffusive unraveling in the Itô reading.
///
/// Each step maps `psi -> exp(-i H_eff dt) psi + sum_k sqrt(gamma_k) dxi_k L_k psi`
/// with `H_eff = H - (i/2) sum_k gamma_k L_k^dag L_k` and complex increments
/// obeying `E[dxi dxi^*] = dt`, `E[dxi dxi] = 0`. The rate matrix must be
/// diagonal. States are recorded on at most 101 evenly spaced times.
pub fn unravel_linear(
    model: &GklsModel,
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble> {
    let (steps, _) = step_plan(t, dt)?;
    let stride = steps.div_ceil(DEFAULT_RECORD_INTERVALS).max(1);
    unravel_linear_recorded(model, rho0, t, dt, n_traj, seed, stride)
}

/// [`unravel_linear`] recording every `record_every` steps. The final time
/// is always recorded.
pub fn unravel_linear_recorded(
    model: &GklsModel,
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
    record_every: usize,
) -> Result<TrajectoryEnsemble> {
    if n_traj == 0 {
        return Err(domain("at least one trajectory is required"));
    }
    if record_every == 0 {
        return Err(domain("the recording stride must be at least one step"));
    }
    if rho0.dim() != model.dim() {
        return Err(Error::Construction("state and model dimensions differ".into()));
    }
    let (steps, step) = step_plan(t, dt)?;
    let kossakowski = &model.kossakowski().matrix;
    let scale = kossakowski.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for a in 0..kossakowski.nrows() {
        for b in 0..kossakowski.ncols() {
            if a != b && kossakowski[(a, b)].norm() > 1e-12 * scale {
                return Err(Error::Construction(
                    "the unraveling needs a diagonal rate matrix; rotate to eigen-jumps first".into(),
                ));
            }
        }
    }
    let rates: Vec<f64> = kossakowski.diagonal().iter().map(|z| z.re).collect();
    if let Some(r) = rates.iter().find(|&&r| r < 0.0) {
        return Err(Error::Construction(format!("negative jump rate {r} cannot be unravelled")));
    }
    let d = model.dim();
    let mut h_eff = model.hamiltonian();
    for (jump, &rate) in model.jumps().iter().zip(&rates) {
        h_eff -= jump.operator.adjoint() * &jump.operator * c(0.0, 0.5 * rate);
    }
    let phase = step * spectral_norm(&h_eff);
    if phase > MAX_STEP_PHASE {
        return Err(Error::StepSize(format!("dt ||H_eff|| = {phase:.3e} exceeds {MAX_STEP_PHASE}")));
    }
    let drift = (&h_eff * c(0.0, -step)).exp();
    let channels: Vec<CMatrix> = model
        .jumps()
        .iter()
        .zip(&rates)
        .filter(|(_, &rate)| rate > 0.0)
        .map(|(jump, &rate)| &jump.operator * c(rate.sqrt(), 0.0))
        .collect();
    let psi0 = pure_amplitudes(rho0)?;
    let mut record_steps: Vec<usize> = (0..=steps).step_by(record_every).collect();
    if *record_steps.last().unwrap() != steps {
        record_steps.push(steps);
    }
    let times: Vec<f64> = record_steps.iter().map(|&k| k as f64 * step).collect();
    let states = map_indexed(n_traj, |r| {
        let mut rng = stream(seed, r);
        let mut psi = psi0.clone();
        let mut path = Vec::with_capacity(record_steps.len());
        let mut next = 0;
        for k in 0..=steps {
            if record_steps.get(next) == Some(&k) {
                path.push(psi.clone());
                next += 1;
            }
            if k == steps {
                break;
            }
            let mut updated = &drift * &psi;
            for channel in &channels {
                updated += channel * &psi * complex_normal(&mut rng, step);
            }
            psi = updated;
        }
        debug_assert_eq!(psi.len(), d);
        path
    });
    Ok(TrajectoryEnsemble::from_states(seed, times, states))
}

/// Largest deviation of an ensemble mean from exact evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleComparison {
    /// `max_t ||mean_state(t) - rho(t)||_F`.
    pub max_deviation: f64,
    /// The same deviation in units of the standard error at each time.
    pub max_sigma_units: f64,
}

/// Compare the ensemble mean with `evolve(model, rho0, t)` on the recorded
/// times.
pub fn ensemble_compare(
    ensemble: &TrajectoryEnsemble,
    model: &GklsModel,
    rho0: &DensityMatrix,
) -> Result<EnsembleComparison> {
    if rho0.dim() != model.dim() || ensemble.mean_states.first().is_some_and(|m| m.nrows() != model.dim()) {
        return Err(Error::Construction("ensemble, state and model dimensions differ".into()));
    }
    let generator = build_generator(model);
    let mut current = vectorize(rho0.matrix());
    let mut previous_time = 0.0;
    let mut max_deviation: f64 = 0.0;
    let mut max_sigma_units: f64 = 0.0;
    for ((&time, mean), &error) in ensemble.times.iter().zip(&ensemble.mean_states).zip(&ensemble.stat_error) {
        if time > previous_time {
            current = generator.exp(time - previous_time) * current;
            previous_time = time;
        }
        let deviation = (mean - unvectorize(&current, model.dim())).norm();
        let units = if error > 0.0 {
            deviation / error
        } else if deviation == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_deviation = max_deviation.max(deviation);
        max_sigma_units = max_sigma_units.max(units);
    }
    Ok(EnsembleComparison { max_deviation, max_sigma_units })
}
