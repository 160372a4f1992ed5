//! Special functions and quadrature used by every rate integral.
//!
//! Units follow the usual natural convention: energies and inverse times share
//! a unit (by default the environment mass), and an inverse temperature of
//! `f64::INFINITY` denotes the vacuum.

mod quad;

pub use quad::{integrate_adaptive, Integrator, QuadratureResult};

use crate::error::{domain, Result};
use std::f64::consts::PI;

/// Below this magnitude the Maclaurin series is used.
const DAWSON_SERIES_MAX: f64 = 0.2;
/// Above this magnitude the asymptotic expansion is used.
const DAWSON_ASYMPTOTIC_MIN: f64 = 7.0;
/// Sampling step of the Rybicki series. The discretisation error scales as
/// exp(-(pi / 2h)^2), far below double precision at h = 0.2.
const RYBICKI_STEP: f64 = 0.2;
const RYBICKI_TERMS: i64 = 34;

/// Dawson's integral `D(z) = exp(-z^2) * int_0^z exp(t^2) dt`.
///
/// Three regimes: the Maclaurin series near the origin, Rybicki's
/// exponentially convergent sampling series for `0.2 <= |z| <= 7`, and the
/// asymptotic expansion `1/(2z) * sum (2k-1)!! / (2z^2)^k` beyond. The result
/// is accurate to about 1e-14 relative everywhere.
pub fn dawson(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(domain(format!("dawson argument must be finite, got {z}")));
    }
    let x = z.abs();
    let value = if x < DAWSON_SERIES_MAX {
        dawson_series(x)
    } else if x <= DAWSON_ASYMPTOTIC_MIN {
        dawson_rybicki(x)
    } else {
        dawson_asymptotic(x)
    };
    Ok(value.copysign(z))
}

fn dawson_series(x: f64) -> f64 {
    // D(x) = sum_n (-1)^n 2^n x^(2n+1) / (2n+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        term *= -2.0 * x2 / (2.0 * n + 3.0);
        sum += term;
        n += 1.0;
    }
    sum
}

fn dawson_rybicki(x: f64) -> f64 {
    let h = RYBICKI_STEP;
    // nearest even multiple of h
    let n0 = 2 * (0.5 * x / h).round() as i64;
    let y = x - n0 as f64 * h;
    let mut sum = 0.0;
    for k in 0..RYBICKI_TERMS {
        let odd = 2 * k + 1;
        for n in [odd, -odd] {
            let arg = y - n as f64 * h;
            sum += (-arg * arg).exp() / (n + n0) as f64;
        }
    }
    sum / PI.sqrt()
}

fn dawson_asymptotic(x: f64) -> f64 {
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (2.0 * k - 1.0) * inv;
        if next.abs() >= term.abs() || next.abs() < 1e-18 * sum {
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    sum / (2.0 * x)
}

/// Bose–Einstein occupation `1 / (exp(beta E) - 1)`.
///
/// `beta = f64::INFINITY` is the vacuum and returns 0. The mass gap keeps
/// `E > 0` in every caller, so `E <= 0` is rejected.
pub fn bose_occupation(energy: f64, beta: f64) -> Result<f64> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(domain(format!("bose occupation needs E > 0, got {energy}")));
    }
    if !(beta > 0.0) {
        return Err(domain(format!("inverse temperature must be > 0, got {beta}")));
    }
    if beta.is_infinite() {
        return Ok(0.0);
    }
    Ok(1.0 / (beta * energy).exp_m1())
}

/// Fourier transform of the Gaussian clock kernel `exp(-s^2 / (2 sigma^2))`:
/// `sqrt(2 pi) sigma exp(-sigma^2 Omega^2 / 2)`.
pub fn gaussian_ft(sigma: f64, omega: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(domain(format!("sigma must be > 0, got {sigma}")));
    }
    Ok((2.0 * PI).sqrt() * sigma * (-0.5 * sigma * sigma * omega * omega).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Independent oracle: composite Gauss-Legendre on the defining integral.
    fn dawson_by_quadrature(z: f64) -> f64 {
        // 5-point Gauss-Legendre nodes on [-1, 1]
        let nodes =
            [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
        let weights = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let panels = 4000;
        let width = z / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * width;
            for (x, w) in nodes.iter().zip(weights) {
                let t = mid + 0.5 * width * x;
                sum += w * 0.5 * width * (t * t - z * z).exp();
            }
        }
        sum
    }

    #[test]
    fn dawson_reference_points() {
        assert_eq!(dawson(0.0).unwrap(), 0.0);
        // global maximum
        let peak = dawson_by_quadrature(0.924_138_873_0);
        assert_relative_eq!(peak, 0.541_044_224_635_181_7, epsilon = 1e-13);
        assert_relative_eq!(dawson(0.924_138_873_0).unwrap(), peak, epsilon = 1e-9);
        // asymptotic regime: 1/(2z) + 1/(4z^3) = 0.050250 at leading orders
        assert_relative_eq!(dawson(10.0).unwrap(), 0.050_253_8, epsilon = 1e-6);
    }

    #[test]
    fn dawson_matches_quadrature_oracle() {
        for &z in &[1e-5, 0.1, 0.19, 0.2, 0.5, 1.0, 2.0, 3.0, 4.9, 5.0, 5.1, 6.9, 7.0, 7.1, 12.0] {
            let oracle = dawson_by_quadrature(z);
            let got = dawson(z).unwrap();
            assert!(((got - oracle) / oracle).abs() < 1e-12, "z={z}: {got} vs {oracle}");
        }
    }

    #[test]
    fn dawson_branches_agree_at_switch_points() {
        let x = DAWSON_ASYMPTOTIC_MIN;
        let a = dawson_rybicki(x);
        let b = dawson_asymptotic(x);
        assert!(((a - b) / a).abs() < 1e-13, "{a} vs {b}");
        let x = DAWSON_SERIES_MAX;
        let a = dawson_series(x);
        let b = dawson_rybicki(x);
        assert!(((a - b) / a).abs() < 1e-13, "{a} vs {b}");
    }

    #[test]
    fn dawson_is_odd_and_rejects_nan() {
        for &z in &[0.3, 1.7, 6.2, 40.0] {
            assert_eq!(dawson(-z).unwrap(), -dawson(z).unwrap());
        }
        assert!(dawson(f64::NAN).is_err());
        assert!(dawson(f64::INFINITY).is_err());
    }

    #[test]
    fn dawson_satisfies_its_ode() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..100 {
            let z: f64 = rng.random_range(-10.0..10.0);
            let d = dawson(z).unwrap();
            let deriv = (dawson(z + h).unwrap() - dawson(z - h).unwrap()) / (2.0 * h);
            assert!((deriv - (1.0 - 2.0 * z * d)).abs() < 1e-10, "z={z}");
        }
    }

    #[test]
    fn bose_values() {
        assert_relative_eq!(bose_occupation(2f64.ln(), 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(bose_occupation(1.0, f64::INFINITY).unwrap(), 0.0);
        assert_relative_eq!(bose_occupation(1.0, 1.0).unwrap(), 0.581_976_7, epsilon = 1e-7);
        assert!(bose_occupation(0.0, 1.0).is_err());
        assert!(bose_occupation(-1.0, 1.0).is_err());
        assert!(bose_occupation(1.0, 0.0).is_err());
    }

    #[test]
    fn bose_kms_identity_and_monotonicity() {
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let e = 0.05 * i as f64;
            let beta = 1.3;
            let n = bose_occupation(e, beta).unwrap();
            let lhs = 1.0 + n;
            let rhs = (beta * e).exp() * n;
            assert!(((lhs - rhs) / lhs).abs() < 1e-12);
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn gaussian_ft_values() {
        assert_relative_eq!(gaussian_ft(1.0, 0.0).unwrap(), (2.0 * PI).sqrt(), epsilon = 1e-15);
        // sqrt(2 pi) * 2 * exp(-2)
        assert_relative_eq!(gaussian_ft(2.0, 1.0).unwrap(), 0.678_470_495_032_176_5, epsilon = 1e-14);
        assert!(gaussian_ft(5.0, 10.0).unwrap() < 1e-300);
        assert_eq!(gaussian_ft(1.5, 0.7).unwrap(), gaussian_ft(1.5, -0.7).unwrap());
        assert!(gaussian_ft(0.0, 1.0).is_err());
        assert!(gaussian_ft(-1.0, 1.0).is_err());
    }

    #[test]
    fn gaussian_ft_parseval() {
        // integral over Omega equals 2 pi w(0) = 2 pi
        let r = integrate_adaptive(|w| gaussian_ft(0.7, w).unwrap(), f64::NEG_INFINITY, f64::INFINITY, 1e-12).unwrap();
        assert!((r.value - 2.0 * PI).abs() < 1e-8);
    }
}
