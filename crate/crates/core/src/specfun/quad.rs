//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.

use crate::error::{domain, Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

/// Outcome of a converged integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive integrator settings.
///
/// Convergence means the summed error estimate is below
/// `max(rel_tol * |value|, abs_tol)`, or has reached the round-off floor of
/// the Kronrod rule.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 0.0, max_subdivisions: 2000 }
    }
}

/// Integrate `f` over `[a, b]` with relative tolerance `tol`. Either limit may
/// be infinite.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    Integrator { rel_tol: tol, ..Integrator::default() }.integrate(f, a, b)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl Integrator {
    pub fn with_tolerance(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadratureResult> {
        if a.is_nan() || b.is_nan() {
            return Err(domain("integration limits must not be NaN"));
        }
        if !(self.rel_tol >= 0.0) || !(self.abs_tol >= 0.0) || self.rel_tol + self.abs_tol == 0.0 {
            return Err(domain("quadrature tolerances must be non-negative and not both zero"));
        }
        if a == b {
            return Ok(QuadratureResult { value: 0.0, error_estimate: 0.0, evaluations: 0 });
        }
        if a > b {
            let r = self.integrate(f, b, a)?;
            return Ok(QuadratureResult { value: -r.value, ..r });
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => self.finite(&f, a, b),
            (true, false) => self.finite(&|t: f64| upper_map(&f, a, t), 0.0, 1.0),
            (false, true) => self.finite(&|t: f64| upper_map(&|x| f(-x), -b, t), 0.0, 1.0),
            (false, false) => self.finite(&|t: f64| upper_map(&f, 0.0, t) + upper_map(&|x| f(-x), 0.0, t), 0.0, 1.0),
        }
    }

    fn finite(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<QuadratureResult> {
        let mut heap = BinaryHeap::new();
        let first = kronrod21(f, a, b);
        let mut evaluations = 21;
        let mut value = first.value;
        let mut error = first.error;
        let mut abs_value = first.abs_value;
        heap.push(first);
        loop {
            let target = (self.rel_tol * value.abs()).max(self.abs_tol);
            let floor = 100.0 * f64::EPSILON * abs_value;
            if error <= target || error <= floor {
                break;
            }
            if heap.len() >= self.max_subdivisions {
                return Err(Error::Accuracy { estimate: value, error });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.a + worst.b);
            if !(worst.a < mid && mid < worst.b) {
                return Err(Error::Accuracy { estimate: value, error });
            }
            let left = kronrod21(f, worst.a, mid);
            let right = kronrod21(f, mid, worst.b);
            evaluations += 42;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            abs_value += left.abs_value + right.abs_value - worst.abs_value;
            heap.push(left);
            heap.push(right);
            if !value.is_finite() {
                return Err(domain("integrand produced a non-finite value"));
            }
        }
        // Re-sum to remove drift from the running updates.
        let mut total = 0.0;
        let mut comp = 0.0;
        let mut err_total = 0.0;
        for s in heap.iter() {
            let y = s.value - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
            err_total += s.error;
        }
        Ok(QuadratureResult { value: total, error_estimate: err_total, evaluations })
    }
}

/// Integrand on `[a, inf)` mapped to `t` in `[0, 1)` via `x = a + t / (1 - t)`.
fn upper_map(f: &dyn Fn(f64) -> f64, a: f64, t: f64) -> f64 {
    let one_minus = 1.0 - t;
    let x = a + t / one_minus;
    let jac = 1.0 / (one_minus * one_minus);
    let v = f(x);
    if v == 0.0 {
        0.0
    } else {
        v * jac
    }
}

fn kronrod21(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let abs_value = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_value);
    }
    Segment { a, b, value, error, abs_value }
}
