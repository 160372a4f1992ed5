//! Clock-resolution kernels: evaluation, spectra and positive-type checks.

use crate::error::{Error, Result};
use crate::linalg::min_symmetric_eigenvalue;
use crate::specfun::gaussian_ft;
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

/// Dropped Poisson tail weight allowed when truncating the coherent series.
pub const COHERENT_TAIL_BOUND: f64 = 1e-12;
/// Default tolerance on the Gram matrix minimum eigenvalue.
pub const DEFAULT_GRAM_TOL: f64 = 1e-10;
/// Negative spectral mass tolerated before a tabulated kernel is rejected.
const SPECTRAL_NEGATIVITY_TOL: f64 = 1e-8;

/// An even clock-resolution kernel `w(s)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClockKernel {
    /// `exp(-s^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
    /// Poisson mixture of cosines from a coherent-state readout.
    CoherentReadout(CoherentKernel),
    /// Interpolated samples.
    Tabulated(TabulatedKernel),
}

impl ClockKernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Construction(format!("gaussian width must be positive and finite, got {sigma}")));
        }
        Ok(Self::Gaussian { sigma })
    }

    /// Coherent readout with amplitude `R` and clock frequency `omega_c`; the
    /// series is truncated where the dropped tail falls below
    /// [`COHERENT_TAIL_BOUND`].
    pub fn coherent(amplitude: f64, clock_frequency: f64) -> Result<Self> {
        CoherentKernel::new(amplitude, clock_frequency).map(Self::CoherentReadout)
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        TabulatedKernel::new(samples).map(Self::Tabulated)
    }

    /// `w(s)`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        match self {
            Self::Gaussian { sigma } => Ok((-0.5 * (s / sigma).powi(2)).exp()),
            Self::CoherentReadout(k) => Ok(k.eval(s)),
            Self::Tabulated(k) => k.eval(s),
        }
    }

    /// Characteristic width: `sigma`, `1 / (R omega_c)`, or the half range of a
    /// table.
    pub fn width(&self) -> f64 {
        match self {
            Self::Gaussian { sigma } => *sigma,
            Self::CoherentReadout(k) => 1.0 / (k.amplitude.max(1e-300) * k.clock_frequency),
            Self::Tabulated(k) => k.half_range,
        }
    }

    /// Spectral measure of the kernel, normalised so its total mass is
    /// `2 pi w(0)`.
    pub fn spectrum(&self) -> Result<SpectralMeasure> {
        match self {
            Self::Gaussian { sigma } => {
                Ok(SpectralMeasure { atoms: Vec::new(), density: Some(SpectralDensity::Gaussian { sigma: *sigma }) })
            }
            Self::CoherentReadout(k) => Ok(SpectralMeasure { atoms: k.atoms(), density: None }),
            Self::Tabulated(k) => {
                let density = k.discrete_density();
                let negative = density.negative_mass();
                if negative < -SPECTRAL_NEGATIVITY_TOL {
                    return Err(Error::Positivity(format!("tabulated kernel has negative spectral mass {negative:e}")));
                }
                Ok(SpectralMeasure { atoms: Vec::new(), density: Some(density) })
            }
        }
    }
}

/// `w(s) = exp(-R^2) sum_n R^(2n)/n! cos(n omega_c s)`, truncated at `n = N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentKernel {
    amplitude: f64,
    clock_frequency: f64,
    weights: Vec<f64>,
}

impl CoherentKernel {
    pub fn new(amplitude: f64, clock_frequency: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::Construction(format!("readout amplitude must be >= 0, got {amplitude}")));
        }
        if !(clock_frequency > 0.0) || !clock_frequency.is_finite() {
            return Err(Error::Construction(format!("clock frequency must be > 0, got {clock_frequency}")));
        }
        let mut weights = poisson_weights(amplitude * amplitude);
        let mut tail_from = vec![0.0; weights.len() + 1];
        for n in (0..weights.len()).rev() {
            tail_from[n] = tail_from[n + 1] + weights[n];
        }
        let truncation =
            (0..weights.len()).find(|&n| tail_from[n + 1] < COHERENT_TAIL_BOUND).unwrap_or(weights.len() - 1);
        weights.truncate(truncation + 1);
        Ok(Self { amplitude, clock_frequency, weights })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn clock_frequency(&self) -> f64 {
        self.clock_frequency
    }

    /// Highest retained harmonic.
    pub fn truncation(&self) -> usize {
        self.weights.len() - 1
    }

    /// Poisson weights `exp(-R^2) R^(2n) / n!` for `n = 0..=N`.
    pub fn poisson_weights(&self) -> &[f64] {
        &self.weights
    }

    fn eval(&self, s: f64) -> f64 {
        self.weights.iter().enumerate().map(|(n, p)| p * (n as f64 * self.clock_frequency * s).cos()).sum()
    }

    fn atoms(&self) -> Vec<SpectralAtom> {
        let mut atoms = Vec::with_capacity(2 * self.weights.len());
        for (n, &p) in self.weights.iter().enumerate() {
            if n == 0 {
                atoms.push(SpectralAtom { frequency: 0.0, weight: 2.0 * PI * p });
            } else {
                let f = n as f64 * self.clock_frequency;
                atoms.push(SpectralAtom { frequency: -f, weight: PI * p });
                atoms.push(SpectralAtom { frequency: f, weight: PI * p });
            }
        }
        atoms
    }
}

/// Poisson probabilities for mean `lambda`, computed in log space out to
/// far beyond the tail bound.
fn poisson_weights(lambda: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return vec![1.0];
    }
    let n_max = (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as usize;
    let ln_lambda = lambda.ln();
    let mut ln_fact = 0.0;
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        out.push((n as f64 * ln_lambda - lambda - ln_fact).exp());
    }
    out
}

/// A kernel given by samples, interpolated with a monotone cubic (PCHIP) and
/// symmetrised as `(w(s) + w(-s)) / 2`. Tables covering only `s >= 0` are
/// mirrored.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    s: Vec<f64>,
    w: Vec<f64>,
    slopes: Vec<f64>,
    half_range: f64,
}

impl TabulatedKernel {
    pub fn new(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Construction("a tabulated kernel needs at least two samples".into()));
        }
        if samples.iter().any(|(s, w)| !s.is_finite() || !w.is_finite()) {
            return Err(Error::Construction("tabulated kernel samples must be finite".into()));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if samples.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::Construction("tabulated kernel has repeated sample times".into()));
        }
        if samples[0].0 >= 0.0 {
            let mirrored: Vec<_> = samples.iter().filter(|(s, _)| *s > 0.0).map(|&(s, w)| (-s, w)).rev().collect();
            samples.splice(0..0, mirrored);
        }
        let (s, w): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        let half_range = (-s[0]).min(s[s.len() - 1]);
        if !(half_range > 0.0) {
            return Err(Error::Construction("tabulated kernel must cover an interval around s = 0".into()));
        }
        let slopes = pchip_slopes(&s, &w);
        Ok(Self { s, w, slopes, half_range })
    }

    /// Load a two-column `s,w` CSV table with an optional header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut samples = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(format!("kernel table: {e}")))?;
            if record.len() != 2 {
                return Err(Error::Parse(format!(
                    "kernel table row {}: expected 2 columns, got {}",
                    i + 1,
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(s), Ok(w)) => samples.push((s, w)),
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("kernel table row {}: not numeric", i + 1))),
            }
        }
        Self::new(samples)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    /// Largest `|s|` at which the symmetrised kernel is defined.
    pub fn half_range(&self) -> f64 {
        self.half_range
    }

    /// Sample times in `[0, half_range]`.
    pub fn nonnegative_nodes(&self) -> Vec<f64> {
        self.s.iter().copied().filter(|&s| s >= 0.0 && s <= self.half_range).collect()
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s.abs() <= self.half_range) {
            return Err(Error::Range(format!(
                "tabulated kernel queried at s = {s}, outside [-{0}, {0}]",
                self.half_range
            )));
        }
        Ok(0.5 * (self.interpolate(s) + self.interpolate(-s)))
    }

    fn interpolate(&self, x: f64) -> f64 {
        let n = self.s.len();
        let i = match self.s.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.s[i], self.s[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.w[i] + h10 * h * self.slopes[i] + h01 * self.w[i + 1] + h11 * h * self.slopes[i + 1]
    }

    /// Trapezoid transform of the symmetrised samples, band-limited at the
    /// Nyquist frequency of the coarsest spacing.
    fn discrete_density(&self) -> SpectralDensity {
        let n = self.s.len();
        let mut times = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            let s = self.s[i];
            if s.abs() > self.half_range {
                continue;
            }
            let left = if i > 0 && self.s[i - 1].abs() <= self.half_range { s - self.s[i - 1] } else { 0.0 };
            let right = if i + 1 < n && self.s[i + 1].abs() <= self.half_range { self.s[i + 1] - s } else { 0.0 };
            let sym = 0.5 * (self.interpolate(s) + self.interpolate(-s));
            times.push(s);
            values.push(0.5 * (left + right) * sym);
        }
        let max_gap = self.s.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        SpectralDensity::Discrete { times, weights: values, band_limit: PI / max_gap }
    }
}

/// Fritsch–Carlson derivative estimates for a monotone piecewise cubic.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|p| p[1] - p[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// A point mass of the spectral measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralAtom {
    pub frequency: f64,
    pub weight: f64,
}

/// Continuous part of a kernel spectrum.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    Gaussian {
        sigma: f64,
    },
    /// `sum_i weights_i cos(Omega times_i)` for `|Omega| <= band_limit`, zero beyond.
    Discrete {
        times: Vec<f64>,
        weights: Vec<f64>,
        band_limit: f64,
    },
}

impl SpectralDensity {
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            Self::Gaussian { sigma } => gaussian_ft(*sigma, omega).expect("sigma validated at construction"),
            Self::Discrete { times, weights, band_limit } => {
                if omega.abs() > *band_limit {
                    return 0.0;
                }
                times.iter().zip(weights).map(|(t, q)| q * (omega * t).cos()).sum()
            }
        }
    }

    /// Frequencies outside which the density is negligible or zero.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::Gaussian { sigma } => {
                let reach = (2.0 * 41.5f64).sqrt() / sigma;
                (-reach, reach)
            }
            Self::Discrete { band_limit, .. } => (-band_limit, *band_limit),
        }
    }

    fn negative_mass(&self) -> f64 {
        match self {
            Self::Gaussian { .. } => 0.0,
            Self::Discrete { times, band_limit, .. } => {
                let points = 8 * times.len().max(64);
                let step = band_limit / points as f64;
                let mut mass = 0.0;
                for k in 0..=points {
                    let v = self.eval(k as f64 * step).min(0.0);
                    let edge = if k == 0 || k == points { 0.5 } else { 1.0 };
                    mass += edge * v * step;
                }
                2.0 * mass
            }
        }
    }
}

/// Atoms plus an optional continuous density.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub atoms: Vec<SpectralAtom>,
    pub density: Option<SpectralDensity>,
}

impl SpectralMeasure {
    /// Integrate `f` against the measure.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut total: f64 = self.atoms.iter().map(|a| a.weight * f(a.frequency)).sum();
        if let Some(density) = &self.density {
            let (lo, hi) = density.support();
            let r = crate::specfun::integrate_adaptive(|w| density.eval(w) * f(w), lo, hi, 1e-10)?;
            total += r.value;
        }
        Ok(total)
    }

    /// Total mass, `2 pi w(0)` by Fourier inversion.
    pub fn total_mass(&self) -> Result<f64> {
        self.integrate(|_| 1.0)
    }
}

/// Result of a Gram-matrix positive-type test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GramVerdict {
    PositiveType { min_eigenvalue: f64 },
    Violation { min_eigenvalue: f64 },
}

impl GramVerdict {
    pub fn is_positive_type(&self) -> bool {
        matches!(self, Self::PositiveType { .. })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match *self {
            Self::PositiveType { min_eigenvalue } | Self::Violation { min_eigenvalue } => min_eigenvalue,
        }
    }
}

/// Build `M_jk = w(t_j - t_k)` and compare its smallest eigenvalue with `-tol`.
pub fn positivity_gram_check(kernel: &ClockKernel, times: &[f64], tol: f64) -> Result<GramVerdict> {
    if times.len() < 2 {
        return Err(Error::Domain("a Gram check needs at least two times".into()));
    }
    let n = times.len();
    let mut gram = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let v = kernel.eval(times[j] - times[k])?;
            gram[(j, k)] = v;
            gram[(k, j)] = v;
        }
    }
    let min_eigenvalue = min_symmetric_eigenvalue(&gram);
    Ok(if min_eigenvalue >= -tol {
        GramVerdict::PositiveType { min_eigenvalue }
    } else {
        GramVerdict::Violation { min_eigenvalue }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_values() {
        let k = ClockKernel::gaussian(1.0).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 1.0);
        let k = ClockKernel::gaussian(2.0).unwrap();
        assert_relative_eq!(k.eval(2.0).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
        assert!(ClockKernel::gaussian(0.0).is_err());
    }

    #[test]
    fn coherent_values_and_truncation() {
        let k = ClockKernel::coherent(1.0, 1.0).unwrap();
        assert_relative_eq!(k.eval(0.0).unwrap(), 1.0, epsilon = 1e-12);
        let ClockKernel::CoherentReadout(c) = &k else { unreachable!() };
        let kept: f64 = c.poisson_weights().iter().sum();
        assert!(1.0 - kept < COHERENT_TAIL_BOUND);
        // the next shorter truncation would violate the bound
        let shorter: f64 = c.poisson_weights()[..c.truncation()].iter().sum();
        assert!(1.0 - shorter >= COHERENT_TAIL_BOUND);
        let atoms = k.spectrum().unwrap().atoms;
        let plus_one = atoms.iter().find(|a| a.frequency == 1.0).unwrap();
        assert_relative_eq!(plus_one.weight, PI * (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn static_clock_limit_is_single_atom() {
        let k = ClockKernel::coherent(0.0, 1.0).unwrap();
        let atoms = k.spectrum().unwrap().atoms;
        assert_eq!(atoms.len(), 1);
        assert_eq!(atoms[0], SpectralAtom { frequency: 0.0, weight: 2.0 * PI });
    }

    #[test]
    fn spectral_mass_matches_origin_value() {
        for k in [ClockKernel::gaussian(0.8).unwrap(), ClockKernel::coherent(2.0, 0.7).unwrap()] {
            let mass = k.spectrum().unwrap().total_mass().unwrap();
            assert!((mass - 2.0 * PI * k.eval(0.0).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn parseval_against_time_domain() {
        // <w, g> in time equals (1/2pi) <w_hat, g_hat> for the test Gaussian
        // g(s) = exp(-(s - 0.3)^2 / 2) whose transform at Omega is
        // sqrt(2 pi) exp(-Omega^2/2) exp(-i 0.3 Omega); the even kernel keeps
        // only the cosine part.
        let shift = 0.3;
        for k in [ClockKernel::gaussian(1.7).unwrap(), ClockKernel::coherent(1.5, 2.0).unwrap()] {
            let time = crate::specfun::integrate_adaptive(
                |s| k.eval(s).unwrap() * (-(s - shift).powi(2) / 2.0).exp(),
                f64::NEG_INFINITY,
                f64::INFINITY,
                1e-12,
            )
            .unwrap()
            .value;
            let freq = k
                .spectrum()
                .unwrap()
                .integrate(|w| (2.0 * PI).sqrt() * (-w * w / 2.0).exp() * (shift * w).cos())
                .unwrap()
                / (2.0 * PI);
            assert!((time - freq).abs() < 1e-6, "{time} vs {freq}");
        }
    }

    #[test]
    fn coherent_behaves_as_gaussian_envelope_at_small_times() {
        // The Poisson mixture is the real part of exp(R^2 (e^{i w s} - 1)).
        // Its modulus is the Gaussian envelope; the kernel itself carries
        // the carrier cos(R^2 w s).
        for &r in &[5.0, 7.0] {
            let wc = 1.3;
            let k = ClockKernel::coherent(r, wc).unwrap();
            let s_max = 0.1 / (r * wc);
            for i in 0..=50 {
                let s = s_max * i as f64 / 50.0;
                let gauss = (-(r * wc * s).powi(2) / 2.0).exp();
                let modulus = (r * r * ((wc * s).cos() - 1.0)).exp();
                assert!((modulus - gauss).abs() <= 1e-3);
                let carrier = (r * r * (wc * s).sin()).cos() * modulus;
                assert!((k.eval(s).unwrap() - carrier).abs() < 1e-10);
            }
        }
    }

    fn triangle_table() -> ClockKernel {
        let samples = (-16..=16).map(|i| {
            let s = 0.125 * i as f64;
            (s, 1.0 - s.abs() / 2.0)
        });
        ClockKernel::tabulated(samples.collect()).unwrap()
    }

    #[test]
    fn tabulated_triangle_is_positive_type() {
        let k = triangle_table();
        let times: Vec<f64> = (0..16).map(|i| -1.0 + 0.125 * i as f64).collect();
        let verdict = positivity_gram_check(&k, &times, DEFAULT_GRAM_TOL).unwrap();
        assert!(verdict.is_positive_type(), "{verdict:?}");
        let spectrum = k.spectrum().unwrap();
        assert!(spectrum.density.unwrap().negative_mass() > -1e-12);
    }

    #[test]
    fn tabulated_cosine_mixture_and_parabola() {
        let h = 0.05;
        let mix: Vec<(f64, f64)> = (-400..=400)
            .map(|i| {
                let s = h * i as f64;
                (s, ((s).cos() + 0.5 * (3.0 * s).cos()) / 1.5)
            })
            .collect();
        let k = ClockKernel::tabulated(mix).unwrap();
        let times: Vec<f64> = (0..24).map(|i| h * (7 * i) as f64 - 8.0).collect();
        assert!(positivity_gram_check(&k, &times, DEFAULT_GRAM_TOL).unwrap().is_positive_type());

        let parabola: Vec<(f64, f64)> =
            (-200..=200).map(|i| (0.01 * i as f64, 1.0 - (0.01 * i as f64).powi(2))).collect();
        let k = ClockKernel::tabulated(parabola).unwrap();
        let times: Vec<f64> = (0..40).map(|i| -1.0 + 0.05 * i as f64).collect();
        let verdict = positivity_gram_check(&k, &times, DEFAULT_GRAM_TOL).unwrap();
        assert!(!verdict.is_positive_type());
        assert!(verdict.min_eigenvalue() < -1e-6);
    }

    #[test]
    fn tabulated_range_and_mirroring() {
        let half: Vec<(f64, f64)> = (0..=10).map(|i| (0.1 * i as f64, (-(0.1 * i as f64)).exp())).collect();
        let k = ClockKernel::tabulated(half).unwrap();
        assert_relative_eq!(k.eval(-0.5).unwrap(), k.eval(0.5).unwrap(), epsilon = 1e-15);
        assert_relative_eq!(k.eval(0.3).unwrap(), (-0.3f64).exp(), epsilon = 1e-12);
        assert!(matches!(k.eval(1.5), Err(Error::Range(_))));
    }

    #[test]
    fn tabulated_from_csv_with_and_without_header() {
        let text = "s,w\n-1,0.5\n0,1\n1,0.5\n";
        let k = TabulatedKernel::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 1.0);
        let k = TabulatedKernel::from_csv_reader("0,1\n1,0.5\n2,0.1\n".as_bytes()).unwrap();
        assert_eq!(k.half_range(), 2.0);
        assert!(TabulatedKernel::from_csv_reader("0,1\nx,y\n".as_bytes()).is_err());
    }

    #[test]
    fn evenness_on_symmetric_grid() {
        let kernels = [ClockKernel::gaussian(1.3).unwrap(), ClockKernel::coherent(3.0, 0.4).unwrap(), triangle_table()];
        for k in &kernels {
            for i in 0..100 {
                let s = 0.019 * i as f64;
                assert!((k.eval(s).unwrap() - k.eval(-s).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn built_in_kernels_pass_random_gram_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..100 {
            let kernel = if trial % 2 == 0 {
                ClockKernel::gaussian(rng.random_range(0.2..5.0)).unwrap()
            } else {
                ClockKernel::coherent(rng.random_range(0.0..6.0), rng.random_range(0.1..3.0)).unwrap()
            };
            let n = rng.random_range(2..=64);
            let times: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let verdict = positivity_gram_check(&kernel, &times, DEFAULT_GRAM_TOL).unwrap();
            assert!(verdict.is_positive_type(), "{kernel:?}: {verdict:?}");
        }
    }

    proptest! {
        #[test]
        fn kernel_values_bounded(sigma in 0.05f64..20.0, r in 0.0f64..6.0, wc in 0.05f64..5.0, s in -50.0f64..50.0) {
            let g = ClockKernel::gaussian(sigma).unwrap().eval(s).unwrap();
            prop_assert!((0.0..=1.0).contains(&g));
            let c = ClockKernel::coherent(r, wc).unwrap().eval(s).unwrap();
            prop_assert!(c.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn coherent_atoms_nonnegative(r in 0.0f64..8.0, wc in 0.05f64..5.0) {
            let atoms = ClockKernel::coherent(r, wc).unwrap().spectrum().unwrap().atoms;
            prop_assert!(atoms.iter().all(|a| a.weight >= 0.0));
        }
    }
}
