//! Browser demo bindings.
//!
//! The page exposes three interactive operations: rate curves for a chosen
//! clock resolution and temperature, convergence of the smeared rate to its
//! sharp limit, and the classical-quantum trade-off explorer. Each binding is
//! a thin wrapper around a plain Rust function so the numerics can be tested
//! without a JavaScript host.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::DVector;
use relclock_core::correlators::EnvironmentSpec;
use relclock_core::gkls::{qubit, DensityMatrix};
use relclock_core::hybridcq::{cq_evolve_grid, tradeoff_check, CqKernels, HybridModel, HybridState};
use relclock_core::kernels::ClockKernel;
use relclock_core::linalg::C64;
use relclock_core::rates::{kappa_markov, kappa_tcl, RateQuery};
use wasm_bindgen::prelude::*;

/// Largest number of points a rate curve may request.
pub const MAX_CURVE_POINTS: usize = 400;

fn environment(beta: f64) -> Result<EnvironmentSpec, String> {
    let beta = if beta > 0.0 && beta.is_finite() { beta } else { f64::INFINITY };
    EnvironmentSpec::new(1.0, 1.0, beta, 0.0).map_err(|e| e.to_string())
}

/// Smeared and sharp rates on `points` frequencies in `[omega_min, omega_max]`,
/// flattened as `[omega, kappa_tcl, kappa_markov]` triples. A non-positive or
/// non-finite `beta` selects the vacuum.
pub fn rate_curve(sigma: f64, beta: f64, omega_min: f64, omega_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(2..=MAX_CURVE_POINTS).contains(&points) {
        return Err(format!("points must lie in 2..={MAX_CURVE_POINTS}"));
    }
    if !(omega_max > omega_min) {
        return Err("omega_max must exceed omega_min".into());
    }
    let env = environment(beta)?;
    let kernel = ClockKernel::gaussian(sigma).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let omega = omega_min + (omega_max - omega_min) * i as f64 / (points - 1) as f64;
        let q = RateQuery::new(omega, &kernel, &env).map_err(|e| e.to_string())?;
        out.extend([omega, kappa_tcl(&q).map_err(|e| e.to_string())?, kappa_markov(&env, omega)]);
    }
    Ok(out)
}

/// Relative error of the smeared vacuum rate at `omega` for each width in
/// `sigmas`.
pub fn markov_convergence(omega: f64, sigmas: &[f64]) -> Result<Vec<f64>, String> {
    let env = environment(f64::INFINITY)?;
    let sharp = kappa_markov(&env, omega);
    if sharp == 0.0 {
        return Err(format!("the sharp rate vanishes at omega = {omega}; pick omega < -1"));
    }
    sigmas
        .iter()
        .map(|&s| {
            let kernel = ClockKernel::gaussian(s).map_err(|e| e.to_string())?;
            let q = RateQuery::new(omega, &kernel, &env).map_err(|e| e.to_string())?;
            Ok(((kappa_tcl(&q).map_err(|e| e.to_string())? - sharp) / sharp).abs())
        })
        .collect()
}

/// Verdict of the trade-off explorer.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffReport {
    margin: f64,
    verdict: String,
    min_block_eigenvalue: f64,
    trace_drift: f64,
}

#[wasm_bindgen]
impl TradeoffReport {
    #[wasm_bindgen(getter)]
    pub fn margin(&self) -> f64 {
        self.margin
    }

    #[wasm_bindgen(getter)]
    pub fn verdict(&self) -> String {
        self.verdict.clone()
    }

    /// Smallest eigenvalue of any hybrid block seen during the evolution.
    #[wasm_bindgen(getter)]
    pub fn min_block_eigenvalue(&self) -> f64 {
        self.min_block_eigenvalue
    }

    #[wasm_bindgen(getter)]
    pub fn trace_drift(&self) -> f64 {
        self.trace_drift
    }
}

/// Check the trade-off for scalar kernels and evolve a dephasing qubit
/// coupled to a Gaussian clock packet for one time unit.
pub fn explore_tradeoff(d0: f64, d1: f64, d2: f64) -> Result<TradeoffReport, String> {
    let kernels = CqKernels::scalar(d0, d1, d2).map_err(|e| e.to_string())?;
    let verdict = tradeoff_check(&kernels);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus =
        DensityMatrix::pure(&DVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)])).map_err(|e| e.to_string())?;
    let model =
        HybridModel::static_hamiltonian(qubit::hamiltonian(0.0), vec![qubit::sigma_z()]).map_err(|e| e.to_string())?;
    let mut state = HybridState::gaussian_packet(&plus, -4.0, 4.0, 48, 0.0, 0.3).map_err(|e| e.to_string())?;
    // Keep the diffusion number of the explicit hop step below its bound.
    let spacing = state.spacing();
    let dt = (0.15 * spacing * spacing / d2.max(1e-12)).min(0.1 / (1.0 + 2.0 * d0 + d1 * d1 / d2.max(1e-12))).min(5e-3);
    let mut min_eig = state.min_block_eigenvalue();
    let mut drift: f64 = 0.0;
    for _ in 0..10 {
        state = cq_evolve_grid(&kernels, &model, &state, 0.1, dt).map_err(|e| e.to_string())?;
        min_eig = min_eig.min(state.min_block_eigenvalue());
        drift = drift.max((state.total_trace() - 1.0).abs());
    }
    Ok(TradeoffReport {
        margin: verdict.margin(),
        verdict: verdict.label().to_owned(),
        min_block_eigenvalue: min_eig,
        trace_drift: drift,
    })
}

#[wasm_bindgen(js_name = rateCurve)]
pub fn rate_curve_js(
    sigma: f64,
    beta: f64,
    omega_min: f64,
    omega_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    rate_curve(sigma, beta, omega_min, omega_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = markovConvergence)]
pub fn markov_convergence_js(omega: f64, sigmas: Vec<f64>) -> Result<Vec<f64>, JsError> {
    markov_convergence(omega, &sigmas).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = exploreTradeoff)]
pub fn explore_tradeoff_js(d0: f64, d1: f64, d2: f64) -> Result<TradeoffReport, JsError> {
    explore_tradeoff(d0, d1, d2).map_err(|e| JsError::new(&e))
}
