use crate::correlators::EnvironmentSpec;
use crate::error::{domain, Result};
use crate::linalg::{c, C64};
use crate::rates::kappa_markov_kms;
use nalgebra::{DMatrix, DVector};

/// Largest number of modes on a rapidity line.
pub const MAX_MODES: usize = 64;
/// Rapidity step of the finite boost.
pub const DEFAULT_BOOST_STEP: f64 = 1e-3;
/// Half width of the rapidity window.
pub const DEFAULT_RAPIDITY_HALF_WIDTH: f64 = 5.0;
/// Rapidity width of the reference wave packet.
pub const DEFAULT_PACKET_WIDTH: f64 = 0.85;

/// Where the damping rates of the modes come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateSource {
    /// Rates sampled along a fixed geometric normal; a boost relabels the
    /// modes but leaves the rates in place.
    GeometricNormal,
    /// Rates attached to the modes themselves and carried along by a boost.
    ComovingCovariant,
}

/// Damped field modes on a uniform rapidity line at fixed transverse
/// momentum, with `p_z = m_T sinh(y)` and `E = m_T cosh(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGridModel {
    env: EnvironmentSpec,
    rapidities: Vec<f64>,
    transverse_momentum: f64,
    rates: Vec<f64>,
    rate_source: RateSource,
}

impl MomentumGridModel {
    /// `n_modes` modes on `[-half_width, half_width]`.
    pub fn rapidity_line(
        env: &EnvironmentSpec,
        n_modes: usize,
        half_width: f64,
        transverse_momentum: f64,
        rate_source: RateSource,
    ) -> Result<Self> {
        if !(2..=MAX_MODES).contains(&n_modes) {
            return Err(domain(format!("a rapidity line holds 2..={MAX_MODES} modes, got {n_modes}")));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(domain(format!("rapidity window must be > 0, got {half_width}")));
        }
        if !(transverse_momentum >= 0.0) || !transverse_momentum.is_finite() {
            return Err(domain(format!("transverse momentum must be >= 0, got {transverse_momentum}")));
        }
        let step = 2.0 * half_width / (n_modes - 1) as f64;
        let rapidities: Vec<f64> = (0..n_modes).map(|j| -half_width + j as f64 * step).collect();
        let mut model = Self { env: *env, rapidities, transverse_momentum, rates: Vec::new(), rate_source };
        model.rates = model.rapidities.iter().map(|&y| model.rate_at(y)).collect();
        Ok(model)
    }

    /// Same line with every rate set to zero.
    pub fn without_damping(&self) -> Self {
        Self {
            env: self.env.with_coupling(0.0).expect("zero coupling is valid"),
            rates: vec![0.0; self.rates.len()],
            ..self.clone()
        }
    }

    fn transverse_mass(&self) -> f64 {
        self.env.mass().hypot(self.transverse_momentum)
    }

    pub fn energy_at(&self, rapidity: f64) -> f64 {
        self.transverse_mass() * rapidity.cosh()
    }

    /// Net damping `K(-E) - K(+E)` of the sharp-resolution rates.
    pub fn rate_at(&self, rapidity: f64) -> f64 {
        let e = self.energy_at(rapidity);
        kappa_markov_kms(&self.env, -e) - kappa_markov_kms(&self.env, e)
    }

    pub fn rapidities(&self) -> &[f64] {
        &self.rapidities
    }

    pub fn momenta(&self) -> Vec<f64> {
        self.rapidities.iter().map(|y| self.transverse_mass() * y.sinh()).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.rapidities.iter().map(|&y| self.energy_at(y)).collect()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate_source(&self) -> RateSource {
        self.rate_source
    }

    fn spacing(&self) -> f64 {
        self.rapidities[1] - self.rapidities[0]
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Outcome of a finite boost applied to the mode generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostResidual {
    /// `|| (B L - L' B) f || / d_eta` on the reference packet.
    pub residual: f64,
    /// The same quantity with all rates set to zero, i.e. the interpolation
    /// floor of the grid.
    pub free_residual: f64,
    /// Modes whose preimage left the grid; they were padded with zero.
    pub flagged_modes: usize,
}

fn commutator_norm(model: &MomentumGridModel, d_rapidity: f64) -> (f64, usize) {
    let y = &model.rapidities;
    let n = y.len();
    let h = model.spacing();
    let lower = y[0] - 1e-12 * h;
    let mut flagged = 0;
    let mut shift = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let source = y[j] - d_rapidity;
        if source < lower || source > y[n - 1] + 1e-12 * h {
            flagged += 1;
            continue;
        }
        for k in 0..n {
            shift[(j, k)] = sinc((source - y[k]) / h);
        }
    }
    let generator = |rate: f64, energy: f64| c(-0.5 * rate, -energy);
    let here: DVector<C64> = DVector::from_fn(n, |j, _| generator(model.rates[j], model.energy_at(y[j])));
    let moved: DVector<C64> = DVector::from_fn(n, |j, _| {
        let rate = match model.rate_source {
            RateSource::ComovingCovariant => model.rate_at(y[j] - d_rapidity),
            RateSource::GeometricNormal => model.rates[j],
        };
        generator(rate, model.energy_at(y[j] - d_rapidity))
    });
    let packet: DVector<C64> = DVector::from_fn(n, |j, _| c((-0.5 * (y[j] / DEFAULT_PACKET_WIDTH).powi(2)).exp(), 0.0));
    let shift = shift.map(|v| c(v, 0.0));
    let evolved_then_boosted = &shift * here.component_mul(&packet);
    let boosted_then_evolved = moved.component_mul(&(&shift * &packet));
    ((evolved_then_boosted - boosted_then_evolved).norm() * h.sqrt() / d_rapidity, flagged)
}

/// Commutator of a small boost with the mode generator, evaluated on a
/// Gaussian packet of width [`DEFAULT_PACKET_WIDTH`] centred at zero
/// rapidity. The boost shifts every mode by `d_rapidity` through
/// band-limited interpolation on the grid.
pub fn boost_interchange_residual(model: &MomentumGridModel, d_rapidity: f64) -> Result<BoostResidual> {
    if !(d_rapidity > 0.0) || !d_rapidity.is_finite() || d_rapidity >= model.spacing() {
        return Err(domain(format!("boost step must lie in (0, grid spacing), got {d_rapidity}")));
    }
    let (residual, flagged_modes) = commutator_norm(model, d_rapidity);
    let (free_residual, _) = commutator_norm(&model.without_damping(), d_rapidity);
    Ok(BoostResidual { residual, free_residual, flagged_modes })
}

/// Boost residuals over a sequence of grid refinements.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostRefinement {
    pub rate_source: RateSource,
    pub sizes: Vec<usize>,
    pub residuals: Vec<BoostResidual>,
}

impl BoostRefinement {
    /// `r_k / r_{k+1}` for consecutive grids.
    pub fn ratios(&self) -> Vec<f64> {
        self.residuals.windows(2).map(|w| w[0].residual / w[1].residual).collect()
    }

    /// Observed convergence order `ln(r_k / r_{k+1}) / ln(h_k / h_{k+1})`.
    pub fn orders(&self) -> Vec<f64> {
        self.residuals
            .windows(2)
            .zip(self.sizes.windows(2))
            .map(|(r, n)| {
                let spacing_ratio = (n[1] - 1) as f64 / (n[0] - 1) as f64;
                (r[0].residual / r[1].residual).ln() / spacing_ratio.ln()
            })
            .collect()
    }

    /// `(max - min) / min` of the residuals.
    pub fn relative_spread(&self) -> f64 {
        let values = self.residuals.iter().map(|r| r.residual);
        let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = values.fold(f64::INFINITY, f64::min);
        (max - min) / min
    }
}

/// Run [`boost_interchange_residual`] on rapidity lines of each size in
/// `sizes`, transverse momentum equal to the mass and the default window.
pub fn boost_refinement(
    env: &EnvironmentSpec,
    rate_source: RateSource,
    sizes: &[usize],
    d_rapidity: f64,
) -> Result<BoostRefinement> {
    let residuals = sizes
        .iter()
        .map(|&n| {
            let model = MomentumGridModel::rapidity_line(env, n, DEFAULT_RAPIDITY_HALF_WIDTH, env.mass(), rate_source)?;
            boost_interchange_residual(&model, d_rapidity)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoostRefinement { rate_source, sizes: sizes.to_vec(), residuals })
}
