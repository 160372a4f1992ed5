use crate::correlators::{vacuum_spectral_density, EnvironmentSpec};
use crate::error::{domain, Error, Result};
use crate::kernels::ClockKernel;
use crate::specfun::{dawson, Integrator};
use std::f64::consts::SQRT_2;

/// Smallest cutoff, in units of the environment mass, at which the linear
/// subtraction is attempted.
pub const MIN_CUTOFF_FACTOR: f64 = 10.0;
const FIT_POINTS: usize = 9;

/// Lamb-shift coefficient with its cutoff dependence exposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambShiftCoefficient {
    /// `2 sqrt(2) sigma int_m^cutoff j(E) D(sigma E / sqrt 2) dE`.
    pub raw_value: f64,
    pub cutoff: f64,
    /// `raw_value` minus the linear growth fitted over `[cutoff/2, cutoff]`.
    pub subtracted_value: f64,
    /// Fitted growth per unit cutoff.
    pub fitted_slope: f64,
}

/// Magnitude of the odd transform `int sgn(s) w(s) e^{-i Omega s} ds`, which
/// for the Gaussian kernel is `-i * 2 sqrt(2) sigma D(sigma Omega / sqrt 2)`.
pub fn odd_transform(sigma: f64, omega: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(2.0 * SQRT_2 * sigma * dawson(sigma * omega / SQRT_2)?)
}

/// Principal-value coefficient of the Lamb shift for a Gaussian clock. The
/// sign convention of the resulting Hamiltonian term is left to the caller;
/// the coefficient is reported as a real number.
pub fn lamb_shift_coefficient(
    env: &EnvironmentSpec,
    kernel: &ClockKernel,
    cutoff: f64,
) -> Result<LambShiftCoefficient> {
    let ClockKernel::Gaussian { sigma } = *kernel else {
        return Err(Error::Unsupported("the Lamb-shift coefficient is implemented for Gaussian kernels".into()));
    };
    if !env.is_vacuum() {
        return Err(Error::Unsupported("the Lamb-shift coefficient is implemented for the vacuum".into()));
    }
    let m = env.mass();
    if !(cutoff >= MIN_CUTOFF_FACTOR * m) || !cutoff.is_finite() {
        return Err(domain(format!("cutoff {cutoff} is below {MIN_CUTOFF_FACTOR} m")));
    }
    let integrand = |e: f64| {
        let d = dawson(sigma * e / SQRT_2).unwrap_or(0.0);
        2.0 * SQRT_2 * sigma * vacuum_spectral_density(env, e) * d
    };
    let quad = Integrator { rel_tol: 1e-12, abs_tol: 0.0, max_subdivisions: 2000 };
    let start = 0.5 * cutoff;
    let mut value = quad.integrate(integrand, m, start)?.value;
    let mut xs = Vec::with_capacity(FIT_POINTS);
    let mut ys = Vec::with_capacity(FIT_POINTS);
    xs.push(start);
    ys.push(value);
    for i in 1..FIT_POINTS {
        let lo = xs[i - 1];
        let hi = start + 0.5 * cutoff * i as f64 / (FIT_POINTS - 1) as f64;
        value += quad.integrate(integrand, lo, hi)?.value;
        xs.push(hi);
        ys.push(value);
    }
    let slope = least_squares_slope(&xs, &ys);
    Ok(LambShiftCoefficient { raw_value: value, cutoff, subtracted_value: value - slope * cutoff, fitted_slope: slope })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
