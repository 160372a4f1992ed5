use crate::correlators::EnvironmentSpec;
use crate::error::{domain, Error, Result};
use crate::gkls::{build_generator, qubit, GklsModel, JumpOperator, Superoperator};
use crate::kernels::ClockKernel;
use crate::linalg::{spectral_norm, CMatrix};
use crate::rates::{kappa_tcl, RateQuery};

/// Largest slice the exact superoperator norms are computed for.
pub const MAX_SITES: usize = 6;
/// Level splitting of each site qubit in units of the environment mass.
pub const DEFAULT_SITE_GAP: f64 = 3.0;

/// How site rates depend on the local normal of the slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateMode {
    /// Rates evaluated in the rest frame, whatever the slice geometry.
    NormalIndependent,
    /// Each site's Bohr frequency is read along its discrete normal, so the
    /// rate is sampled at `omega cosh(eta_i)`.
    NormalSampled,
}

/// A one-dimensional slice of qubit sites at relational times `heights`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceLattice {
    heights: Vec<f64>,
    spacing: f64,
    rate_mode: RateMode,
    site_gap: f64,
}

impl SliceLattice {
    pub fn new(heights: Vec<f64>, spacing: f64, rate_mode: RateMode) -> Result<Self> {
        if heights.is_empty() || heights.len() > MAX_SITES {
            return Err(domain(format!("a slice holds 1..={MAX_SITES} sites, got {}", heights.len())));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(domain(format!("site spacing must be > 0, got {spacing}")));
        }
        if heights.iter().any(|h| !h.is_finite()) {
            return Err(domain("slice heights must be finite"));
        }
        let lattice = Self { heights, spacing, rate_mode, site_gap: DEFAULT_SITE_GAP };
        for pair in lattice.heights.windows(2) {
            if (pair[1] - pair[0]).abs() >= spacing {
                return Err(domain("neighbouring heights differ by at least the spacing; the slice is not spacelike"));
            }
        }
        lattice.rapidities()?;
        Ok(lattice)
    }

    /// A slice of constant tilt whose discrete normals all carry `rapidity`.
    pub fn tilted(n_sites: usize, spacing: f64, rapidity: f64, rate_mode: RateMode) -> Result<Self> {
        let slope = rapidity.tanh();
        Self::new((0..n_sites).map(|i| i as f64 * spacing * slope).collect(), spacing, rate_mode)
    }

    pub fn with_site_gap(mut self, gap: f64) -> Result<Self> {
        if !(gap > 0.0) || !gap.is_finite() {
            return Err(domain(format!("site gap must be > 0, got {gap}")));
        }
        self.site_gap = gap;
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.heights.len()
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn rate_mode(&self) -> RateMode {
        self.rate_mode
    }

    pub fn site_gap(&self) -> f64 {
        self.site_gap
    }

    /// Discrete normal rapidity at each site, `artanh` of the symmetric
    /// height difference over `2a` (one-sided at the ends).
    pub fn rapidities(&self) -> Result<Vec<f64>> {
        let n = self.heights.len();
        (0..n)
            .map(|i| {
                let slope = if n == 1 {
                    0.0
                } else if i == 0 {
                    (self.heights[1] - self.heights[0]) / self.spacing
                } else if i == n - 1 {
                    (self.heights[n - 1] - self.heights[n - 2]) / self.spacing
                } else {
                    (self.heights[i + 1] - self.heights[i - 1]) / (2.0 * self.spacing)
                };
                if slope.abs() >= 1.0 {
                    return Err(domain(format!("discrete normal at site {i} is not timelike (slope {slope})")));
                }
                Ok(slope.atanh())
            })
            .collect()
    }

    fn deformed(&self, site: usize, shift: f64) -> Result<Self> {
        let mut heights = self.heights.clone();
        heights[site] += shift;
        Ok(Self { heights, ..self.clone() })
    }
}

fn embed(op: &CMatrix, site: usize, n_sites: usize) -> CMatrix {
    let left = CMatrix::identity(1 << site, 1 << site);
    let right = CMatrix::identity(1 << (n_sites - site - 1), 1 << (n_sites - site - 1));
    left.kronecker(op).kronecker(&right)
}

/// Local GKLS generator of one site on the full slice Hilbert space.
pub fn build_slice_generator(
    lattice: &SliceLattice,
    site: usize,
    env: &EnvironmentSpec,
    kernel: &ClockKernel,
) -> Result<Superoperator> {
    let n = lattice.n_sites();
    if site >= n {
        return Err(domain(format!("site {site} is outside a slice of {n} sites")));
    }
    let rapidity = lattice.rapidities()?[site];
    let dilation = match lattice.rate_mode {
        RateMode::NormalIndependent => 1.0,
        RateMode::NormalSampled => rapidity.cosh(),
    };
    let gap = lattice.site_gap * env.mass();
    let query = RateQuery::new(-gap * dilation, kernel, env)?;
    let down = kappa_tcl(&query)?;
    let up = kappa_tcl(&query.with_omega(gap * dilation))?;
    let model = GklsModel::with_diagonal_rates(
        embed(&qubit::hamiltonian(gap), site, n),
        vec![
            JumpOperator::new(embed(&qubit::lowering(), site, n), -gap),
            JumpOperator::new(embed(&qubit::raising(), site, n), gap),
        ],
        &[down, up],
    )?;
    Ok(build_generator(&model))
}

/// Discrete functional curvature of two site generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurlResidual {
    /// `|| [L_x, L_y] + D_xy - D_yx ||`.
    pub value: f64,
    /// `|| [L_x, L_y] ||`.
    pub commutator_part: f64,
    /// `|| D_xy ||`, the response of `L_y` to moving site `x`.
    pub shape_part_xy: f64,
    /// `|| D_yx ||`.
    pub shape_part_yx: f64,
}

/// Curl of the local generators at `x` and `y`. Shape derivatives use a
/// central difference with height step `eps`; all norms are spectral norms
/// of the full superoperators.
pub fn functional_curl_residual(
    lattice: &SliceLattice,
    env: &EnvironmentSpec,
    kernel: &ClockKernel,
    x: usize,
    y: usize,
    eps: f64,
) -> Result<CurlResidual> {
    if x == y {
        return Err(domain("the curl needs two distinct sites"));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(domain(format!("height step must be > 0, got {eps}")));
    }
    let generator = |l: &SliceLattice, site| build_slice_generator(l, site, env, kernel).map(|g| g.matrix);
    let shape = |moved: usize, site: usize| -> Result<CMatrix> {
        let plus = generator(&lattice.deformed(moved, eps)?, site)?;
        let minus = generator(&lattice.deformed(moved, -eps)?, site)?;
        Ok((plus - minus) / crate::linalg::c(2.0 * eps, 0.0))
    };
    let lx = generator(lattice, x)?;
    let ly = generator(lattice, y)?;
    let commutator = &lx * &ly - &ly * &lx;
    let d_xy = shape(x, y)?;
    let d_yx = shape(y, x)?;
    let total = &commutator + &d_xy - &d_yx;
    let value = spectral_norm(&total);
    if !value.is_finite() {
        return Err(Error::Accuracy { estimate: value, error: f64::INFINITY });
    }
    Ok(CurlResidual {
        value,
        commutator_part: spectral_norm(&commutator),
        shape_part_xy: spectral_norm(&d_xy),
        shape_part_yx: spectral_norm(&d_yx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::kappa_tcl_vacuum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(sigma: f64) -> (EnvironmentSpec, ClockKernel) {
        (EnvironmentSpec::vacuum(1.0, 1.0).unwrap(), ClockKernel::gaussian(sigma).unwrap())
    }

    #[test]
    fn flat_slice_modes_agree() {
        let (env, k) = setup(2.0);
        let a = SliceLattice::new(vec![0.0; 3], 1.0, RateMode::NormalIndependent).unwrap();
        let b = SliceLattice::new(vec![0.0; 3], 1.0, RateMode::NormalSampled).unwrap();
        for site in 0..3 {
            let ga = build_slice_generator(&a, site, &env, &k).unwrap();
            let gb = build_slice_generator(&b, site, &env, &k).unwrap();
            assert!((ga.matrix - gb.matrix).norm() <= 1e-14);
        }
    }

    #[test]
    fn single_site_is_the_qubit_generator() {
        let (env, k) = setup(2.0);
        let l = SliceLattice::new(vec![0.0], 1.0, RateMode::NormalSampled).unwrap();
        let g = build_slice_generator(&l, 0, &env, &k).unwrap();
        let q = RateQuery::new(-3.0, &k, &env).unwrap();
        let model =
            qubit::relaxation_model(3.0, kappa_tcl(&q).unwrap(), kappa_tcl(&q.with_omega(3.0)).unwrap()).unwrap();
        assert!((g.matrix - build_generator(&model).matrix).norm() <= 1e-14);
    }

    #[test]
    fn tilted_rate_matches_boosted_quadrature() {
        // the rate along a tilted normal equals the boosted two-dimensional
        // quadrature at the dilated frequency
        let (env, k) = setup(2.0);
        let eta: f64 = 0.3;
        let l = SliceLattice::tilted(3, 1.0, eta, RateMode::NormalSampled).unwrap();
        assert!(l.rapidities().unwrap().iter().all(|r| (r - eta).abs() <= 1e-14));
        let g = build_slice_generator(&l, 1, &env, &k).unwrap();
        let boosted_env = env.with_rapidity(eta).unwrap();
        let boosted = kappa_tcl_vacuum(&RateQuery::new(-3.0 * eta.cosh(), &k, &boosted_env).unwrap()).unwrap();
        let rest = kappa_tcl(&RateQuery::new(-3.0, &k, &env).unwrap()).unwrap();
        assert!((boosted - rest).abs() > 1e-3 * rest);
        // decay rate of the excited population of site 1
        let d = 8;
        let excited = 2;
        let idx = excited + excited * d;
        assert!((-g.matrix[(idx, idx)].re - boosted).abs() <= 1e-7 * boosted);
    }

    #[test]
    fn null_geometries_have_no_curl() {
        let (env, k) = setup(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.random_range(2..=4);
            let mut heights = vec![0.0];
            for _ in 1..n {
                let last = *heights.last().unwrap();
                heights.push(last + rng.random_range(-0.45..0.45));
            }
            let l = SliceLattice::new(heights, 1.0, RateMode::NormalIndependent).unwrap();
            let x = rng.random_range(0..n);
            let y = (x + rng.random_range(1..n)) % n;
            let r = functional_curl_residual(&l, &env, &k, x, y, 1e-4).unwrap();
            assert!(r.value <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn sampled_normals_break_integrability_locally() {
        let (env, k) = setup(2.0);
        let l = SliceLattice::tilted(4, 1.0, 0.3, RateMode::NormalSampled).unwrap();
        let adjacent = functional_curl_residual(&l, &env, &k, 1, 2, 1e-4).unwrap();
        assert!(adjacent.value >= 1e-3, "{adjacent:?}");
        assert!(adjacent.value <= adjacent.commutator_part + adjacent.shape_part_xy + adjacent.shape_part_yx + 1e-12);
        let distant = functional_curl_residual(&l, &env, &k, 0, 3, 1e-4).unwrap();
        assert!(distant.value <= 1e-12);
        let flat = SliceLattice::new(vec![0.0; 4], 1.0, RateMode::NormalSampled).unwrap();
        assert!(functional_curl_residual(&flat, &env, &k, 1, 2, 1e-4).unwrap().value <= 1e-12);
    }

    #[test]
    fn rejects_non_timelike_normals() {
        assert!(SliceLattice::new(vec![0.0, 1.2], 1.0, RateMode::NormalSampled).is_err());
        assert!(SliceLattice::new(vec![0.0; 7], 1.0, RateMode::NormalSampled).is_err());
        let (env, k) = setup(2.0);
        let l = SliceLattice::new(vec![0.0, 0.9], 1.0, RateMode::NormalSampled).unwrap();
        assert!(functional_curl_residual(&l, &env, &k, 0, 1, 0.2).is_err());
    }
}
