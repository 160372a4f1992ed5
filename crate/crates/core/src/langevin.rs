//! Single-mode quantum Langevin dynamics in the frame comoving with the
//! medium.
//!
//! A mode of energy `E` is damped at rate `Gamma` and driven by noise with
//! commutator `Gamma` and occupation `nbar`. Its first and second moments
//! have closed forms, which is all that a linear system needs.

use crate::correlators::EnvironmentSpec;
use crate::error::{domain, Error, Result};
use crate::kernels::ClockKernel;
use crate::linalg::{c, C64};
use crate::rates::{kappa_markov_kms, kappa_tcl, RateQuery};
use crate::specfun::{bose_occupation, Integrator};

/// Moments are considered stationary after this many damping times.
pub const STATIONARY_DAMPING_TIMES: f64 = 40.0;

/// Mode energy, damping rate and noise occupation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    energy: f64,
    gamma: f64,
    nbar: f64,
}

impl ModeParams {
    pub fn new(energy: f64, gamma: f64, nbar: f64) -> Result<Self> {
        if !energy.is_finite() {
            return Err(domain("mode energy must be finite"));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(domain(format!("damping rate must be >= 0, got {gamma}")));
        }
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(domain(format!("noise occupation must be >= 0, got {nbar}")));
        }
        Ok(Self { energy, gamma, nbar })
    }

    /// Damping and occupation from the sharp-resolution rates of `env`:
    /// `Gamma = K(-E) - K(+E)` and `nbar = K(+E) / Gamma`, which is the Bose
    /// occupation whenever the rates obey detailed balance.
    pub fn from_environment(env: &EnvironmentSpec, energy: f64) -> Result<Self> {
        if !(energy >= env.mass()) {
            return Err(domain(format!("mode energy {energy} lies below the mass gap {}", env.mass())));
        }
        let down = kappa_markov_kms(env, -energy);
        let up = kappa_markov_kms(env, energy);
        let gamma = down - up;
        let nbar = if gamma > 0.0 { up / gamma } else { 0.0 };
        Self::new(energy, gamma, nbar)
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }
}

/// `<a>`, `<a^dag a>`, `<a a>` and the commutator expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMoments {
    pub mean: C64,
    pub occupation: f64,
    pub anomalous: C64,
    pub ccr: f64,
}

impl ModeMoments {
    /// Moments of a coherent state `|alpha>`.
    pub fn coherent(alpha: C64) -> Self {
        Self { mean: alpha, occupation: alpha.norm_sqr(), anomalous: alpha * alpha, ccr: 1.0 }
    }

    /// Moments of a Fock or thermal state with mean occupation `n`.
    pub fn diagonal(n: f64) -> Self {
        Self { mean: c(0.0, 0.0), occupation: n, anomalous: c(0.0, 0.0), ccr: 1.0 }
    }

    /// `|<aa>| <= <a^dag a> + 1/2`.
    pub fn is_physical(&self) -> bool {
        self.occupation >= 0.0 && self.anomalous.norm() <= self.occupation + 0.5 + 1e-12
    }
}

/// Closed-form moments after time `tau`.
pub fn mode_evolve_moments(p: &ModeParams, m0: &ModeMoments, tau: f64) -> Result<ModeMoments> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(domain(format!("evolution time must be finite and >= 0, got {tau}")));
    }
    let decay = (-p.gamma * tau).exp();
    let mean = m0.mean * C64::from_polar((-0.5 * p.gamma * tau).exp(), -p.energy * tau);
    let occupation = p.nbar + (m0.occupation - p.nbar) * decay;
    let anomalous = m0.anomalous * C64::from_polar(decay, -2.0 * p.energy * tau);
    let ccr = m0.ccr * decay + (1.0 - decay);
    Ok(ModeMoments { mean, occupation, anomalous, ccr })
}

/// `| exp(-Gamma tau) + Gamma int_0^tau exp(-Gamma (tau - t)) dt - 1 |`, with
/// the integral computed by quadrature.
pub fn ccr_defect(p: &ModeParams, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(domain(format!("evolution time must be finite and >= 0, got {tau}")));
    }
    let homogeneous = (-p.gamma * tau).exp();
    let noise = if p.gamma == 0.0 || tau == 0.0 {
        0.0
    } else {
        let quad = Integrator { rel_tol: 1e-14, abs_tol: 1e-16, max_subdivisions: 2000 };
        p.gamma * quad.integrate(|t| (-p.gamma * (tau - t)).exp(), 0.0, tau)?.value
    };
    Ok((homogeneous + noise - 1.0).abs())
}

/// Stationary symmetrised occupation against the thermal prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdrCheck {
    /// `<{a, a^dag}> / 2` after relaxation.
    pub symmetrized_occupation: f64,
    /// `coth(beta E / 2) / 2`.
    pub coth_prediction: f64,
    pub deviation: f64,
}

/// Relax the mode from its ground state for 40 damping times and compare
/// `n + 1/2` with `coth(beta E / 2) / 2`.
pub fn stationary_fdr_check(p: &ModeParams, beta: f64) -> Result<FdrCheck> {
    if !(beta > 0.0) {
        return Err(domain(format!("inverse temperature must be > 0, got {beta}")));
    }
    if !(p.energy > 0.0) {
        return Err(domain("the fluctuation-dissipation check needs a positive mode energy"));
    }
    if !(p.gamma > 0.0) {
        return Err(domain("an undamped mode has no stationary state"));
    }
    let expected = bose_occupation(p.energy, beta)?;
    if (p.nbar - expected).abs() > 1e-12 * expected.max(1.0) {
        return Err(Error::Construction(format!(
            "noise occupation {} is inconsistent with the Bose occupation {expected} at this temperature",
            p.nbar
        )));
    }
    let tau = STATIONARY_DAMPING_TIMES / p.gamma;
    let relaxed = mode_evolve_moments(p, &ModeMoments::diagonal(0.0), tau)?;
    let symmetrized_occupation = relaxed.occupation + 0.5;
    let coth_prediction = if beta.is_infinite() { 0.5 } else { 0.5 / (0.5 * beta * p.energy).tanh() };
    Ok(FdrCheck {
        symmetrized_occupation,
        coth_prediction,
        deviation: (symmetrized_occupation - coth_prediction).abs(),
    })
}

/// Spectrum of the symmetrised smeared noise, `(kappa(-Omega) + kappa(Omega)) / 2`.
pub fn smeared_noise_spectrum(env: &EnvironmentSpec, kernel: &ClockKernel, omega: f64) -> Result<f64> {
    if env.rapidity() != 0.0 {
        return Err(Error::Unsupported("the noise spectrum is evaluated in the rest frame of the medium".into()));
    }
    let q = RateQuery::new(omega, kernel, env)?;
    let forward = kappa_tcl(&q)?;
    let backward = kappa_tcl(&q.with_omega(-omega))?;
    Ok(0.5 * (forward + backward))
}
