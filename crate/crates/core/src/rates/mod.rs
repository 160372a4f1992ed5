//! Time-convolutionless rate densities, their Markov limits and memory
//! corrections.
//!
//! Every rate is a Fourier-domain overlap between the environment spectral
//! density `j(E)` and the kernel spectrum `w_hat`. Integrals run over the
//! momentum variable so the square-root threshold of `j` is smooth.

mod kossakowski;
mod lamb;

pub use kossakowski::{assemble_kossakowski, KossakowskiBlock};
pub use lamb::{lamb_shift_coefficient, odd_transform, LambShiftCoefficient, MIN_CUTOFF_FACTOR};

use crate::correlators::{momentum_measure, vacuum_spectral_density, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::kernels::{positivity_gram_check, ClockKernel, SpectralDensity, DEFAULT_GRAM_TOL};
use crate::specfun::{bose_occupation, gaussian_ft, Integrator};
use std::f64::consts::PI;

/// `ln(1e18)`: Gaussian factors this far below their maximum are dropped.
const GAUSSIAN_WINDOW_LOG: f64 = 41.446_531_673_892_82;
const RATE_QUADRATURE: Integrator = Integrator { rel_tol: 1e-11, abs_tol: 0.0, max_subdivisions: 2000 };
const GRAM_PROBE_POINTS: usize = 24;

/// A Bohr frequency together with the kernel and environment it is probed
/// with.
#[derive(Debug, Clone, Copy)]
pub struct RateQuery<'a> {
    omega: f64,
    kernel: &'a ClockKernel,
    env: &'a EnvironmentSpec,
}

impl<'a> RateQuery<'a> {
    /// Fails if the kernel does not pass a Gram positive-type probe.
    pub fn new(omega: f64, kernel: &'a ClockKernel, env: &'a EnvironmentSpec) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::Domain(format!("Bohr frequency must be finite, got {omega}")));
        }
        let times: Vec<f64> = match kernel {
            // probe on the table's own nodes so no interpolation error enters
            ClockKernel::Tabulated(t) => {
                let nodes = t.nonnegative_nodes();
                let stride = (nodes.len() / GRAM_PROBE_POINTS).max(1);
                nodes.into_iter().step_by(stride).collect()
            }
            other => {
                let span = 4.0 * other.width();
                (0..GRAM_PROBE_POINTS).map(|i| span * i as f64 / (GRAM_PROBE_POINTS - 1) as f64).collect()
            }
        };
        let verdict = positivity_gram_check(kernel, &times, DEFAULT_GRAM_TOL)?;
        if !verdict.is_positive_type() {
            return Err(Error::Positivity(format!(
                "clock kernel is not of positive type (Gram eigenvalue {:e})",
                verdict.min_eigenvalue()
            )));
        }
        Ok(Self { omega, kernel, env })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn kernel(&self) -> &'a ClockKernel {
        self.kernel
    }

    pub fn env(&self) -> &'a EnvironmentSpec {
        self.env
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..*self }
    }
}

/// Vacuum rate `int j(E) w_hat(omega + k.n) dE` averaged over emission
/// directions. At zero rapidity this is `int j(E) w_hat(omega + E) dE`.
pub fn kappa_tcl_vacuum(q: &RateQuery) -> Result<f64> {
    if !q.env.is_vacuum() {
        return Err(Error::Unsupported("thermal environment: use kappa_tcl_kms".into()));
    }
    match q.kernel {
        ClockKernel::Gaussian { sigma } if q.env.rapidity() != 0.0 => boosted_gaussian_rate(q.env, *sigma, q.omega),
        _ => smeared_overlap(q.env, q.kernel, q.omega, &|_| 1.0),
    }
}

/// Thermal rate with emission weight `1 + n_B` and absorption weight `n_B`,
/// for a clock at rest in the medium.
pub fn kappa_tcl_kms(q: &RateQuery) -> Result<f64> {
    if q.env.is_vacuum() {
        return kappa_tcl_vacuum(q);
    }
    if q.env.rapidity() != 0.0 {
        return Err(Error::Unsupported(
            "thermal rates for a clock moving through the medium are not implemented".into(),
        ));
    }
    let beta = q.env.beta();
    let occupation = |e: f64| bose_occupation(e, beta).unwrap_or(0.0);
    let emission = smeared_overlap(q.env, q.kernel, q.omega, &|e| 1.0 + occupation(e))?;
    let absorption = smeared_overlap(q.env, q.kernel, -q.omega, &occupation)?;
    Ok(emission + absorption)
}

/// Dispatches to the vacuum or thermal rate.
pub fn kappa_tcl(q: &RateQuery) -> Result<f64> {
    if q.env.is_vacuum() {
        kappa_tcl_vacuum(q)
    } else {
        kappa_tcl_kms(q)
    }
}

/// Sharp-resolution vacuum rate `g^2/(2 pi) sqrt(omega^2 - m^2)` for
/// `omega < -m`, zero otherwise.
pub fn kappa_markov_vacuum(env: &EnvironmentSpec, omega: f64) -> f64 {
    2.0 * PI * vacuum_spectral_density(env, -omega)
}

/// Sharp-resolution thermal rate. Satisfies `K(omega) = exp(-beta omega) K(-omega)`.
pub fn kappa_markov_kms(env: &EnvironmentSpec, omega: f64) -> f64 {
    let energy = omega.abs();
    if energy < env.mass() {
        return 0.0;
    }
    let spectral = 2.0 * PI * vacuum_spectral_density(env, energy);
    let n = if env.is_vacuum() || spectral == 0.0 { 0.0 } else { bose_occupation(energy, env.beta()).unwrap_or(0.0) };
    if omega < 0.0 {
        spectral * (1.0 + n)
    } else {
        spectral * n
    }
}

/// Vacuum or thermal Markov rate according to the environment.
pub fn kappa_markov(env: &EnvironmentSpec, omega: f64) -> f64 {
    if env.is_vacuum() {
        kappa_markov_vacuum(env, omega)
    } else {
        kappa_markov_kms(env, omega)
    }
}

/// Finite-resolution correction `kappa_tcl - kappa_markov`.
pub fn delta_kappa_memory(q: &RateQuery) -> Result<f64> {
    if q.env.rapidity() != 0.0 {
        return Err(Error::Unsupported("memory corrections are evaluated in the rest frame of the medium".into()));
    }
    Ok(kappa_tcl(q)? - kappa_markov(q.env, q.omega))
}

/// `int_m^inf j(E) weight(E) w_hat(shift + E) dE` for any kernel.
fn smeared_overlap(
    env: &EnvironmentSpec,
    kernel: &ClockKernel,
    shift: f64,
    weight: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    if env.coupling() == 0.0 {
        return Ok(0.0);
    }
    let spectrum = kernel.spectrum()?;
    let mut total = 0.0;
    for atom in &spectrum.atoms {
        let energy = atom.frequency - shift;
        if energy > env.mass() {
            total += atom.weight * vacuum_spectral_density(env, energy) * weight(energy);
        }
    }
    match spectrum.density {
        Some(SpectralDensity::Gaussian { sigma }) => total += gaussian_overlap(env, sigma, shift, weight)?,
        Some(density @ SpectralDensity::Discrete { .. }) => {
            let (lo, hi) = density.support();
            let e_lo = (lo - shift).max(env.mass());
            let e_hi = hi - shift;
            if e_hi > e_lo {
                let k_lo = momentum(env, e_lo);
                let k_hi = momentum(env, e_hi);
                let r = RATE_QUADRATURE.integrate(
                    |k| {
                        let e = energy(env, k);
                        momentum_measure(env, k) * weight(e) * density.eval(shift + e)
                    },
                    k_lo,
                    k_hi,
                )?;
                total += r.value;
            }
        }
        None => {}
    }
    Ok(total.max(0.0))
}

/// Gaussian overlap restricted to where the Gaussian factor is within 1e-18
/// of its largest value on the spectrum, so deeply suppressed rates keep
/// full relative accuracy.
fn gaussian_overlap(env: &EnvironmentSpec, sigma: f64, shift: f64, weight: &dyn Fn(f64) -> f64) -> Result<f64> {
    let m = env.mass();
    let center = -shift;
    let nearest = center.max(m) - center;
    let reach = (nearest * nearest + 2.0 * GAUSSIAN_WINDOW_LOG / (sigma * sigma)).sqrt();
    let e_lo = (center - reach).max(m);
    let e_hi = center + reach;
    if e_hi <= e_lo {
        return Ok(0.0);
    }
    let integrand = |k: f64| {
        let e = energy(env, k);
        momentum_measure(env, k) * weight(e) * gaussian_ft(sigma, shift + e).unwrap_or(0.0)
    };
    let (k_lo, k_hi) = (momentum(env, e_lo), momentum(env, e_hi));
    if center > e_lo && center < e_hi {
        let k_mid = momentum(env, center);
        let a = RATE_QUADRATURE.integrate(integrand, k_lo, k_mid)?;
        let b = RATE_QUADRATURE.integrate(integrand, k_mid, k_hi)?;
        Ok(a.value + b.value)
    } else {
        Ok(RATE_QUADRATURE.integrate(integrand, k_lo, k_hi)?.value)
    }
}

/// Boosted vacuum rate as a double integral over momentum magnitude and the
/// emission angle relative to the clock normal.
fn boosted_gaussian_rate(env: &EnvironmentSpec, sigma: f64, omega: f64) -> Result<f64> {
    if env.coupling() == 0.0 {
        return Ok(0.0);
    }
    let m = env.mass();
    let eta = env.rapidity();
    let (ch, sh) = (eta.cosh(), eta.sinh());
    // k.n ranges over [E ch - k |sh|, E ch + k |sh|]; its minimum over k is m
    let nearest = (omega + m).max(0.0);
    let reach = (nearest * nearest + 2.0 * GAUSSIAN_WINDOW_LOG / (sigma * sigma)).sqrt();
    let top = -omega + reach;
    if top <= m {
        return Ok(0.0);
    }
    let root = ch * ((top - m) * (top + m)).sqrt();
    let k_lo = (top * sh.abs() - root).max(0.0);
    let k_hi = top * sh.abs() + root;
    let g2 = env.coupling() * env.coupling();
    let inner = |k: f64| -> f64 {
        let e = energy(env, k);
        let spread = k * sh.abs();
        let centre = omega + e * ch;
        let angular = if spread * sigma < 1e-9 {
            2.0 * gaussian_ft(sigma, centre).unwrap_or(0.0)
        } else {
            let u_lo = (centre - spread).max(-reach);
            let u_hi = (centre + spread).min(reach);
            if u_hi <= u_lo {
                0.0
            } else {
                RATE_QUADRATURE
                    .integrate(|u| gaussian_ft(sigma, u).unwrap_or(0.0), u_lo, u_hi)
                    .map(|r| r.value / spread)
                    .unwrap_or(f64::NAN)
            }
        };
        g2 * k * k / (8.0 * PI * PI * e) * angular
    };
    let r = RATE_QUADRATURE.integrate(inner, k_lo, k_hi)?;
    if r.value.is_nan() {
        return Err(Error::Accuracy { estimate: r.value, error: r.error_estimate });
    }
    Ok(r.value.max(0.0))
}

fn momentum(env: &EnvironmentSpec, energy: f64) -> f64 {
    let m = env.mass();
    ((energy - m) * (energy + m)).max(0.0).sqrt()
}

fn energy(env: &EnvironmentSpec, k: f64) -> f64 {
    (k * k + env.mass() * env.mass()).sqrt()
}
