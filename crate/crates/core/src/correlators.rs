//! Two-point structure of a massive scalar environment.

use crate::error::{domain, Error, Result};
use crate::kernels::ClockKernel;
use crate::linalg::{c, C64};
use crate::specfun::{bose_occupation, Integrator};
use std::f64::consts::PI;

/// Default energy cutoff for time-domain correlators, in units of the
/// environment mass.
pub const DEFAULT_CUTOFF_FACTOR: f64 = 40.0;

/// A massive scalar environment coupled linearly to the clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentSpec {
    mass: f64,
    coupling: f64,
    beta: f64,
    rapidity: f64,
}

impl EnvironmentSpec {
    /// `beta = f64::INFINITY` is the vacuum; `rapidity` is the boost of the
    /// clock normal relative to the bath rest frame.
    pub fn new(mass: f64, coupling: f64, beta: f64, rapidity: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(domain(format!("environment mass must be > 0, got {mass}")));
        }
        if !(coupling >= 0.0) || !coupling.is_finite() {
            return Err(domain(format!("coupling must be >= 0, got {coupling}")));
        }
        if !(beta > 0.0) {
            return Err(domain(format!("inverse temperature must be > 0 or infinite, got {beta}")));
        }
        if !rapidity.is_finite() {
            return Err(domain("rapidity must be finite"));
        }
        Ok(Self { mass, coupling, beta, rapidity })
    }

    pub fn vacuum(mass: f64, coupling: f64) -> Result<Self> {
        Self::new(mass, coupling, f64::INFINITY, 0.0)
    }

    pub fn thermal(mass: f64, coupling: f64, beta: f64) -> Result<Self> {
        Self::new(mass, coupling, beta, 0.0)
    }

    pub fn with_rapidity(self, rapidity: f64) -> Result<Self> {
        Self::new(self.mass, self.coupling, self.beta, rapidity)
    }

    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(self.mass, self.coupling, beta, self.rapidity)
    }

    pub fn with_coupling(self, coupling: f64) -> Result<Self> {
        Self::new(self.mass, coupling, self.beta, self.rapidity)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rapidity(&self) -> f64 {
        self.rapidity
    }

    pub fn is_vacuum(&self) -> bool {
        self.beta.is_infinite()
    }

    /// Cutoff used when none is given: `40 m`.
    pub fn default_cutoff(&self) -> f64 {
        DEFAULT_CUTOFF_FACTOR * self.mass
    }
}

/// `j(E) = g^2 sqrt(E^2 - m^2) / (4 pi^2)` above threshold, zero below.
pub fn vacuum_spectral_density(env: &EnvironmentSpec, energy: f64) -> f64 {
    if energy <= env.mass {
        return 0.0;
    }
    let k = ((energy - env.mass) * (energy + env.mass)).sqrt();
    env.coupling * env.coupling * k / (4.0 * PI * PI)
}

/// `j(E) dE` written in the momentum variable: `g^2 k^2 / (4 pi^2 E) dk`.
pub(crate) fn momentum_measure(env: &EnvironmentSpec, k: f64) -> f64 {
    let e = (k * k + env.mass * env.mass).sqrt();
    env.coupling * env.coupling * k * k / (4.0 * PI * PI * e)
}

/// Emission and absorption weights `(1 + n_B(E), n_B(E))`.
pub fn kms_rate_weights(env: &EnvironmentSpec, energy: f64) -> Result<(f64, f64)> {
    if !(energy >= env.mass) {
        return Err(domain(format!("mode energy {energy} lies below the mass gap {}", env.mass)));
    }
    let n = bose_occupation(energy, env.beta)?;
    Ok((1.0 + n, n))
}

/// Samples of `j(E)` on an energy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSlice {
    pub energies: Vec<f64>,
    pub j_values: Vec<f64>,
}

pub fn spectral_slice(env: &EnvironmentSpec, energies: &[f64]) -> SpectralSlice {
    SpectralSlice {
        energies: energies.to_vec(),
        j_values: energies.iter().map(|&e| vacuum_spectral_density(env, e)).collect(),
    }
}

/// Smeared Wightman function along the clock worldline,
/// `C(s) = w(s) int_m^cutoff j(E) [(1 + n) e^{-isE} + n e^{isE}] dE`.
///
/// The bare function is a distribution, so `kernel = None` is refused.
pub fn wightman_timelike(env: &EnvironmentSpec, kernel: Option<&ClockKernel>, s: f64, cutoff: f64) -> Result<C64> {
    let kernel = kernel.ok_or_else(|| {
        Error::Unsupported("the unsmeared Wightman function is a distribution; supply a clock kernel".into())
    })?;
    if !(cutoff > env.mass) {
        return Err(domain(format!("cutoff {cutoff} must exceed the mass {}", env.mass)));
    }
    let w = kernel.eval(s)?;
    if w == 0.0 || env.coupling == 0.0 {
        return Ok(c(0.0, 0.0));
    }
    let k_max = ((cutoff - env.mass) * (cutoff + env.mass)).sqrt();
    let symmetric_weight = |k: f64| {
        if env.is_vacuum() {
            1.0
        } else {
            let e = (k * k + env.mass * env.mass).sqrt();
            1.0 + 2.0 * bose_occupation(e, env.beta).unwrap_or(0.0)
        }
    };
    let energy = |k: f64| (k * k + env.mass * env.mass).sqrt();
    let scale = Integrator::default().integrate(|k| momentum_measure(env, k) * symmetric_weight(k), 0.0, k_max)?.value;
    let quad = Integrator::with_tolerance(1e-12, 1e-14 * scale);
    let re = quad.integrate(|k| momentum_measure(env, k) * symmetric_weight(k) * (s * energy(k)).cos(), 0.0, k_max)?;
    let im = quad.integrate(|k| -momentum_measure(env, k) * (s * energy(k)).sin(), 0.0, k_max)?;
    Ok(c(w * re.value, w * im.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_env() -> EnvironmentSpec {
        EnvironmentSpec::vacuum(1.0, 1.0).unwrap()
    }

    #[test]
    fn spectral_density_values() {
        let env = unit_env();
        assert_eq!(vacuum_spectral_density(&env, 1.0), 0.0);
        assert_eq!(vacuum_spectral_density(&env, 0.3), 0.0);
        assert_relative_eq!(vacuum_spectral_density(&env, 2.0), 3f64.sqrt() / (4.0 * PI * PI), epsilon = 1e-16);
        let strong = env.with_coupling(2.0).unwrap();
        assert_relative_eq!(
            vacuum_spectral_density(&strong, 2.0),
            4.0 * vacuum_spectral_density(&env, 2.0),
            epsilon = 1e-16
        );
        let far = 1e6;
        assert_relative_eq!(vacuum_spectral_density(&env, far) / (far / (4.0 * PI * PI)), 1.0, epsilon = 1e-11);
    }

    #[test]
    fn spectral_density_against_monte_carlo_shell() {
        // j(E) = int d^3k/((2pi)^3 2E_k) delta(E - E_k) estimated with a
        // narrow box in E over uniformly sampled momenta
        let env = unit_env();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (e0, half_width, k_box): (f64, f64, f64) = (2.0, 0.02, 2.0);
        let samples = 4_000_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let k = [rng.random_range(-k_box..k_box), rng.random_range(-k_box..k_box), rng.random_range(-k_box..k_box)];
            let ek = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + 1.0).sqrt();
            if (ek - e0).abs() < half_width {
                acc += 1.0 / (2.0 * ek);
            }
        }
        let volume = (2.0 * k_box).powi(3);
        let estimate = acc * volume / samples as f64 / (2.0 * half_width) / (2.0 * PI).powi(3);
        let exact = vacuum_spectral_density(&env, e0);
        assert!((estimate / exact - 1.0).abs() < 0.01, "{estimate} vs {exact}");
    }

    #[test]
    fn kms_weights() {
        let env = unit_env();
        assert_eq!(kms_rate_weights(&env, 2.0).unwrap(), (1.0, 0.0));
        let hot = env.with_beta(1.0).unwrap();
        let (a, b) = kms_rate_weights(&hot, 2.0).unwrap();
        assert_relative_eq!(a, 1.156_517_642_749_665_8, epsilon = 1e-15);
        assert_relative_eq!(b, 0.156_517_642_749_665_8, epsilon = 1e-15);
        let light = EnvironmentSpec::thermal(0.5, 1.0, 1.0).unwrap();
        let (a, b) = kms_rate_weights(&light, 2f64.ln()).unwrap();
        assert_relative_eq!(a, 2.0, epsilon = 1e-14);
        assert_relative_eq!(b, 1.0, epsilon = 1e-14);
        assert!(kms_rate_weights(&hot, 0.5).is_err());
    }

    #[test]
    fn wightman_origin_equals_spectral_weight() {
        let env = unit_env();
        let k = ClockKernel::gaussian(1.0).unwrap();
        let c0 = wightman_timelike(&env, Some(&k), 0.0, 20.0).unwrap();
        // int_1^20 sqrt(E^2-1)/(4 pi^2) dE in closed form
        let big_e: f64 = 20.0;
        let root = (big_e * big_e - 1.0).sqrt();
        let exact = 0.5 * (big_e * root - (big_e + root).ln()) / (4.0 * PI * PI);
        assert_relative_eq!(c0.re, exact, epsilon = 1e-10);
        assert_relative_eq!(c0.re, 5.013_010_364_398_63, epsilon = 1e-9);
        assert_eq!(c0.im, 0.0);
    }

    #[test]
    fn wightman_hermiticity_and_domination() {
        let k = ClockKernel::gaussian(1.0).unwrap();
        for env in [unit_env(), unit_env().with_beta(0.7).unwrap()] {
            let plus = wightman_timelike(&env, Some(&k), 1.3, 40.0).unwrap();
            let minus = wightman_timelike(&env, Some(&k), -1.3, 40.0).unwrap();
            assert!((plus - minus.conj()).norm() < 1e-10);
            let origin = wightman_timelike(&env, Some(&k), 0.0, 40.0).unwrap().re;
            for &s in &[3.0, 4.5, 7.0] {
                let cs = wightman_timelike(&env, Some(&k), s, 40.0).unwrap();
                assert!(cs.norm() <= k.eval(s).unwrap() * origin);
            }
        }
    }

    #[test]
    fn unsmeared_request_is_refused() {
        assert!(matches!(wightman_timelike(&unit_env(), None, 1.0, 40.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn clock_direction_gram_is_positive() {
        let env = unit_env().with_beta(2.0).unwrap();
        let k = ClockKernel::gaussian(1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let n = rng.random_range(4..=32);
            let times: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let mut gram = crate::linalg::CMatrix::zeros(n, n);
            for a in 0..n {
                for b in a..n {
                    let v = wightman_timelike(&env, Some(&k), times[a] - times[b], 40.0).unwrap();
                    gram[(a, b)] = v;
                    gram[(b, a)] = v.conj();
                }
            }
            let diag = (0..n).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
            let min = crate::linalg::min_hermitian_eigenvalue(&gram);
            assert!(min >= -1e-8 * diag, "{min}");
        }
    }

    #[test]
    fn invalid_environments() {
        assert!(EnvironmentSpec::vacuum(0.0, 1.0).is_err());
        assert!(EnvironmentSpec::vacuum(1.0, -1.0).is_err());
        assert!(EnvironmentSpec::thermal(1.0, 1.0, 0.0).is_err());
        assert!(unit_env().with_rapidity(f64::NAN).is_err());
    }
}
