//! One runner per scenario. Each turns a validated config into tables,
//! key outputs and invariant checks.

use crate::config::*;
use crate::output::{number, numbers, Cell, Report, Table};
use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use relclock_core::correlators::EnvironmentSpec;
use relclock_core::gkls::{build_generator, cp_choi_check, qubit, unvectorize, vectorize, DensityMatrix, GklsModel};
use relclock_core::hybridcq::{cq_evolve_grid, tradeoff_check, CqKernels, HybridModel, HybridState};
use relclock_core::integrability::{boost_refinement, functional_curl_residual, RateMode, RateSource, SliceLattice};
use relclock_core::kernels::{ClockKernel, TabulatedKernel};
use relclock_core::langevin::{ccr_defect, mode_evolve_moments, stationary_fdr_check, ModeMoments, ModeParams};
use relclock_core::linalg::{min_hermitian_eigenvalue, CMatrix, C64};
use relclock_core::rates::{
    kappa_markov, kappa_markov_kms, kappa_tcl, kappa_tcl_kms, lamb_shift_coefficient, RateQuery,
};
use relclock_core::specfun::bose_occupation;
use relclock_core::trajectories::{sample_colored_noise, unravel_linear_recorded};
use serde_json::Value;

/// Run the scenario described by `config`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<Report> {
    let env = environment(&config.environment)?;
    let mut report = Report::default();
    let seed = config.seed;
    match &config.parameters {
        Parameters::Rates(p) => rates(&env, p, &mut report),
        Parameters::LambShift(p) => lamb_shift(&env, p, &mut report),
        Parameters::MarkovLimit(p) => markov_limit(&env, p, &mut report),
        Parameters::Kms(p) => kms(&env, p, &mut report),
        Parameters::Gkls(p) => gkls(&env, p, &mut report),
        Parameters::Langevin(p) => langevin(&env, p, &mut report),
        Parameters::Unravel(p) => unravel(&env, p, seed.context("seed missing")?, &mut report),
        Parameters::Noise(p) => noise(&env, p, seed.context("seed missing")?, &mut report),
        Parameters::Curl(p) => curl(&env, p, &mut report),
        Parameters::Boost(p) => boost(&env, p, &mut report),
        Parameters::Cq(p) => cq(p, &mut report),
        Parameters::Tradeoff(p) => tradeoff(p, &mut report),
    }
    .with_context(|| format!("scenario {}", config.scenario))?;
    Ok(report)
}

fn environment(e: &Environment) -> Result<EnvironmentSpec> {
    Ok(EnvironmentSpec::new(e.mass, e.coupling, e.beta, e.rapidity)?)
}

fn gaussian(sigma: Option<f64>) -> Result<ClockKernel> {
    Ok(ClockKernel::gaussian(sigma.context("sigma unresolved")?)?)
}

fn is_sorted_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn rates(env: &EnvironmentSpec, p: &RatesParams, report: &mut Report) -> Result<()> {
    let kernel = match &p.kernel_csv {
        Some(path) => ClockKernel::Tabulated(TabulatedKernel::from_csv_path(path)?),
        None => gaussian(p.sigma)?,
    };
    let mut table = Table::new(["omega", "sigma", "beta", "rapidity", "kappa_tcl", "kappa_markov", "delta_kappa"]);
    let mut tcl_values = Vec::new();
    for omega in p.omega_grid.values() {
        let tcl = kappa_tcl(&RateQuery::new(omega, &kernel, env)?)?;
        let markov = kappa_markov(env, omega);
        tcl_values.push(tcl);
        table.push(vec![
            omega.into(),
            kernel.width().into(),
            env.beta().into(),
            env.rapidity().into(),
            tcl.into(),
            markov.into(),
            (tcl - markov).into(),
        ]);
    }
    let largest = tcl_values.iter().cloned().fold(0.0, f64::max);
    let smallest = tcl_values.iter().cloned().fold(f64::INFINITY, f64::min);
    report.table("rates.csv", table);
    report.output("points", tcl_values.len());
    report.output("kappa_tcl_max", number(largest));
    report.output("kappa_tcl_min", number(smallest));
    report.check("rates_nonnegative", smallest >= -1e-12 * largest.max(f64::MIN_POSITIVE));
    Ok(())
}

fn lamb_shift(env: &EnvironmentSpec, p: &LambShiftParams, report: &mut Report) -> Result<()> {
    let mut table = Table::new(["sigma", "cutoff", "raw_value", "subtracted_value", "fitted_slope"]);
    let mut finite = true;
    let mut subtracted = Vec::new();
    for &sigma in p.sigmas.as_deref().unwrap_or_default() {
        let kernel = ClockKernel::gaussian(sigma)?;
        for &cutoff in p.cutoffs.as_deref().unwrap_or_default() {
            let c = lamb_shift_coefficient(env, &kernel, cutoff)?;
            finite &= c.raw_value.is_finite() && c.subtracted_value.is_finite();
            subtracted.push(c.subtracted_value);
            table.push(vec![
                sigma.into(),
                cutoff.into(),
                c.raw_value.into(),
                c.subtracted_value.into(),
                c.fitted_slope.into(),
            ]);
        }
    }
    report.table("lamb_shift.csv", table);
    report.output("subtracted_values", numbers(&subtracted));
    report.check("finite", finite);
    Ok(())
}

fn markov_limit(env: &EnvironmentSpec, p: &MarkovLimitParams, report: &mut Report) -> Result<()> {
    let omega = p.omega.context("omega unresolved")?;
    let mut sigmas = p.sigmas.clone().context("sigmas unresolved")?;
    sigmas.sort_by(f64::total_cmp);
    let exact = kappa_markov(env, omega);
    if exact == 0.0 {
        bail!("the sharp rate vanishes at omega = {omega}, so relative errors are undefined");
    }
    let mut table = Table::new(["sigma", "kappa_tcl", "kappa_markov", "relative_error"]);
    let mut errors = Vec::new();
    for &sigma in &sigmas {
        let k = ClockKernel::gaussian(sigma)?;
        let tcl = kappa_tcl(&RateQuery::new(omega, &k, env)?)?;
        let err = ((tcl - exact) / exact).abs();
        errors.push(err);
        table.push(vec![sigma.into(), tcl.into(), exact.into(), err.into()]);
    }
    let orders: Vec<f64> =
        errors.windows(2).zip(sigmas.windows(2)).map(|(e, s)| (e[0] / e[1]).ln() / (s[1] / s[0]).ln()).collect();
    let monotone = is_sorted_decreasing(&errors);
    let within = errors.last().is_some_and(|&e| e <= p.tolerance.unwrap_or(1e-3));
    report.table("markov_limit.csv", table);
    report.output("omega", number(omega));
    report.output("kappa_markov", number(exact));
    report.output("relative_errors", numbers(&errors));
    report.output("observed_orders", numbers(&orders));
    report.output("converged", monotone && within);
    report.check("monotone_decrease", monotone);
    report.check("converged", monotone && within);
    Ok(())
}

fn kms(env: &EnvironmentSpec, p: &KmsParams, report: &mut Report) -> Result<()> {
    let beta = env.beta();
    let tolerance = p.tolerance.unwrap_or(1e-12);
    let mut sigmas = p.sigmas.clone().context("sigmas unresolved")?;
    sigmas.sort_by(f64::total_cmp);
    let mut table = Table::new(["omega", "sigma", "kappa_up", "kappa_down", "kms_defect"]);
    let mut sharp_worst: f64 = 0.0;
    let mut monotone = true;
    for omega in p.omegas.values().into_iter().map(f64::abs) {
        let defect =
            |up: f64, down: f64| if down > 0.0 { (up * (beta * omega).exp() / down - 1.0).abs() } else { f64::NAN };
        let (up, down) = (kappa_markov_kms(env, omega), kappa_markov_kms(env, -omega));
        let sharp = defect(up, down);
        if sharp.is_finite() {
            sharp_worst = sharp_worst.max(sharp);
        }
        table.push(vec![omega.into(), f64::INFINITY.into(), up.into(), down.into(), sharp.into()]);
        let mut finite_defects = Vec::new();
        for &sigma in &sigmas {
            let k = ClockKernel::gaussian(sigma)?;
            let up = kappa_tcl_kms(&RateQuery::new(omega, &k, env)?)?;
            let down = kappa_tcl_kms(&RateQuery::new(-omega, &k, env)?)?;
            let d = defect(up, down);
            finite_defects.push(d);
            table.push(vec![omega.into(), sigma.into(), up.into(), down.into(), d.into()]);
        }
        if omega >= env.mass() {
            monotone &= is_sorted_decreasing(&finite_defects);
        }
    }
    report.table("kms.csv", table);
    report.output("sharp_defect_max", number(sharp_worst));
    report.check("sharp_detailed_balance", sharp_worst <= tolerance);
    report.check("finite_sigma_monotone", monotone);
    Ok(())
}

/// The model and initial state shared by the `gkls` and `unravel` scenarios.
fn build_model(env: &EnvironmentSpec, m: &ModelParams, report: &mut Report) -> Result<(GklsModel, DensityMatrix)> {
    let model = match &m.model_file {
        Some(path) => GklsModel::from_toml_path(path)?,
        None => {
            let omega0 = m.omega0.context("omega0 unresolved")?;
            let kernel = gaussian(m.sigma)?;
            let down = match m.gamma_down {
                Some(g) => g,
                None => kappa_tcl(&RateQuery::new(-omega0, &kernel, env)?)?,
            };
            let up = match m.gamma_up {
                Some(g) => g,
                None => kappa_tcl(&RateQuery::new(omega0, &kernel, env)?)?,
            };
            report.output("gamma_down", number(down));
            report.output("gamma_up", number(up));
            qubit::relaxation_model(omega0, down, up)?
        }
    };
    let d = model.dim();
    let rho0 = DensityMatrix::basis(d, m.initial_state.unwrap_or(d - 1))?;
    Ok((model, rho0))
}

fn state_columns(d: usize, prefix: &str) -> Vec<String> {
    let mut cols = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            cols.push(format!("{prefix}{i}{j}_re"));
            cols.push(format!("{prefix}{i}{j}_im"));
        }
    }
    cols
}

fn state_cells(rho: &CMatrix) -> impl Iterator<Item = Cell> + '_ {
    let d = rho.nrows();
    (0..d).flat_map(move |i| (0..d).flat_map(move |j| [rho[(i, j)].re.into(), rho[(i, j)].im.into()]))
}

fn gkls(env: &EnvironmentSpec, p: &GklsParams, report: &mut Report) -> Result<()> {
    let (model, rho0) = build_model(env, &p.model(), report)?;
    let d = model.dim();
    let generator = build_generator(&model);
    let norm = generator.spectral_norm();
    let choi = if norm > 0.0 { cp_choi_check(&generator, 0.5 / norm)?.is_cp() } else { true };
    let n = p.n_times.unwrap_or(101);
    let step = p.t_final / (n - 1) as f64;
    let propagator = generator.exp(step);
    let mut header = vec!["t".to_owned()];
    header.extend(state_columns(d, "rho"));
    header.extend(["trace".to_owned(), "min_eig".to_owned()]);
    let mut table = Table::new(header);
    let mut state = vectorize(rho0.matrix());
    let mut worst_trace: f64 = 0.0;
    let mut worst_eig = f64::INFINITY;
    let mut rho = rho0.matrix().clone();
    for k in 0..n {
        if k > 0 {
            state = &propagator * state;
        }
        rho = unvectorize(&state, d);
        let trace = rho.trace().re;
        let min_eig = min_hermitian_eigenvalue(&rho);
        worst_trace = worst_trace.max((trace - 1.0).abs());
        worst_eig = worst_eig.min(min_eig);
        let mut row: Vec<Cell> = vec![(k as f64 * step).into()];
        row.extend(state_cells(&rho));
        row.extend([trace.into(), min_eig.into()]);
        table.push(row);
    }
    report.table("gkls.csv", table);
    report.output("final_populations", numbers(&(0..d).map(|i| rho[(i, i)].re).collect::<Vec<_>>()));
    report.output("max_trace_defect", number(worst_trace));
    report.output("min_eigenvalue", number(worst_eig));
    report.check("choi_cp", choi);
    report.check("trace_preserved", worst_trace <= 1e-10);
    report.check("positivity", worst_eig >= -1e-10);
    Ok(())
}

fn langevin(env: &EnvironmentSpec, p: &LangevinParams, report: &mut Report) -> Result<()> {
    let params = match p.gamma {
        Some(gamma) => {
            let nbar = match p.nbar {
                Some(n) => n,
                None if p.energy > 0.0 => bose_occupation(p.energy, env.beta())?,
                None => 0.0,
            };
            ModeParams::new(p.energy, gamma, nbar)?
        }
        None => {
            let sourced = ModeParams::from_environment(env, p.energy)?;
            match p.nbar {
                Some(n) => ModeParams::new(p.energy, sourced.gamma(), n)?,
                None => sourced,
            }
        }
    };
    let [re, im] = p.alpha0.unwrap_or([1.0, 0.0]);
    let initial = ModeMoments::coherent(C64::new(re, im));
    let n = p.n_points.unwrap_or(101);
    let mut table = Table::new(["tau", "re_mean", "im_mean", "n", "re_m", "im_m", "ccr_defect"]);
    let mut worst_ccr: f64 = 0.0;
    for k in 0..n {
        let tau = p.tau_max * k as f64 / (n - 1) as f64;
        let m = mode_evolve_moments(&params, &initial, tau)?;
        let defect = ccr_defect(&params, tau)?;
        worst_ccr = worst_ccr.max(defect);
        table.push(vec![
            tau.into(),
            m.mean.re.into(),
            m.mean.im.into(),
            m.occupation.into(),
            m.anomalous.re.into(),
            m.anomalous.im.into(),
            defect.into(),
        ]);
    }
    report.table("langevin.csv", table);
    report.output("gamma", number(params.gamma()));
    report.output("nbar", number(params.nbar()));
    report.output("max_ccr_defect", number(worst_ccr));
    report.check("ccr_preserved", worst_ccr <= 1e-12);
    let thermal = params.energy() > 0.0
        && params.gamma() > 0.0
        && bose_occupation(params.energy(), env.beta()).is_ok_and(|b| (b - params.nbar()).abs() <= 1e-12 * b.max(1.0));
    if thermal {
        let fdr = stationary_fdr_check(&params, env.beta())?;
        report.output("fdr_deviation", number(fdr.deviation));
        report.check("fdr", fdr.deviation <= 1e-9);
    }
    Ok(())
}

fn unravel(env: &EnvironmentSpec, p: &UnravelParams, seed: u64, report: &mut Report) -> Result<()> {
    let (model, rho0) = build_model(env, &p.model(), report)?;
    let d = model.dim();
    let steps = (p.t_final / p.dt - 1e-9).ceil().max(1.0) as usize;
    let stride = steps.div_ceil(p.record_intervals.unwrap_or(100)).max(1);
    let ensemble = unravel_linear_recorded(&model, &rho0, p.t_final, p.dt, p.n_traj, seed, stride)?;
    let generator = build_generator(&model);
    let abs_tol = p.abs_tolerance.unwrap_or(0.02);
    let sigma_factor = p.sigma_factor.unwrap_or(5.0);
    let mut header = vec!["t".to_owned()];
    header.extend(state_columns(d, "mean_rho"));
    header.extend(["stat_error".to_owned(), "deviation".to_owned()]);
    let mut table = Table::new(header);
    let mut agree = true;
    let mut worst: f64 = 0.0;
    for ((&t, mean), &err) in ensemble.times.iter().zip(&ensemble.mean_states).zip(&ensemble.stat_error) {
        let exact = unvectorize(&(generator.exp(t) * vectorize(rho0.matrix())), d);
        let deviation = (mean - exact).norm();
        worst = worst.max(deviation);
        agree &= deviation <= abs_tol.max(sigma_factor * err);
        let mut row: Vec<Cell> = vec![t.into()];
        row.extend(state_cells(mean));
        row.extend([err.into(), deviation.into()]);
        table.push(row);
    }
    report.table("unravel.csv", table);
    if p.raw_dump.unwrap_or(false) {
        let mut bytes = Vec::new();
        ensemble.write_raw(&mut bytes)?;
        report.blobs.push(("trajectories.bin".into(), bytes));
    }
    let trace_defect = ensemble.trace_defects().into_iter().fold(0.0, f64::max);
    report.output("n_traj", p.n_traj);
    report.output("recorded_times", ensemble.times.len());
    report.output("max_deviation", number(worst));
    report.output("max_mean_trace_defect", number(trace_defect));
    report.check("master_equation_agreement", agree);
    Ok(())
}

fn noise(env: &EnvironmentSpec, p: &NoiseParams, seed: u64, report: &mut Report) -> Result<()> {
    let kernel = gaussian(p.sigma)?;
    let grid = p.grid.values();
    let field = sample_colored_noise(env, &kernel, &grid, p.n_real, seed)?;
    let sample = field.sample_covariance();
    let mut table = Table::new(["i", "j", "s_i", "s_j", "target_re", "target_im", "sample_re", "sample_im"]);
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let (t, s) = (field.target_covariance[(i, j)], sample[(i, j)]);
            table.push(vec![
                i.into(),
                j.into(),
                grid[i].into(),
                grid[j].into(),
                t.re.into(),
                t.im.into(),
                s.re.into(),
                s.im.into(),
            ]);
        }
    }
    let error = field.covariance_relative_error();
    report.table("noise.csv", table);
    report.output("covariance_relative_error", number(error));
    report.output("clipped_eigenvalues", field.clipped_eigenvalues);
    report.output("clipped_magnitude", number(field.clipped_magnitude));
    report.check("covariance_match", error <= p.tolerance.unwrap_or(0.05));
    Ok(())
}

fn curl(env: &EnvironmentSpec, p: &CurlParams, report: &mut Report) -> Result<()> {
    let mode = match p.rate_mode.unwrap_or(CurlRateMode::NormalSampled) {
        CurlRateMode::NormalSampled => RateMode::NormalSampled,
        CurlRateMode::NormalIndependent => RateMode::NormalIndependent,
    };
    let spacing = p.spacing.context("spacing unresolved")?;
    let lattice = match &p.heights {
        Some(h) => SliceLattice::new(h.clone(), spacing, mode)?,
        None => SliceLattice::tilted(p.n_sites.unwrap_or(4), spacing, p.tilt_rapidity.unwrap_or(0.0), mode)?,
    }
    .with_site_gap(p.site_gap.context("site_gap unresolved")?)?;
    let rapidities = lattice.rapidities()?;
    let tilt = p.tilt_rapidity.unwrap_or_else(|| rapidities.iter().fold(0.0, |a: f64, r| a.max(r.abs())));
    let [x, y] = p.sites.unwrap_or([1, 2]);
    let eps = p.eps.unwrap_or(1e-4);
    let mut table =
        Table::new(["sigma", "tilt_rapidity", "curl_residual", "commutator_part", "shape_part_xy", "shape_part_yx"]);
    let mut worst: f64 = 0.0;
    for &sigma in p.sigmas.as_deref().unwrap_or_default() {
        let r = functional_curl_residual(&lattice, env, &ClockKernel::gaussian(sigma)?, x, y, eps)?;
        worst = worst.max(r.value);
        table.push(vec![
            sigma.into(),
            tilt.into(),
            r.value.into(),
            r.commutator_part.into(),
            r.shape_part_xy.into(),
            r.shape_part_yx.into(),
        ]);
    }
    report.table("curl.csv", table);
    report.output("residual", number(worst));
    report.output("rapidities", numbers(&rapidities));
    let null_geometry = mode == RateMode::NormalIndependent || rapidities.iter().all(|&r| r == 0.0);
    report.output("null_geometry", null_geometry);
    if null_geometry {
        report.check("null_residual", worst <= p.tolerance.unwrap_or(1e-12));
    }
    Ok(())
}

fn boost(env: &EnvironmentSpec, p: &BoostParams, report: &mut Report) -> Result<()> {
    let sizes = p.sizes.clone().context("sizes unresolved")?;
    let d_eta = p.d_eta.unwrap_or(1e-3);
    let sources: &[(RateSource, &str)] = match p.rate_source.unwrap_or(BoostSources::Both) {
        BoostSources::Comoving => &[(RateSource::ComovingCovariant, "comoving")],
        BoostSources::Geometric => &[(RateSource::GeometricNormal, "geometric")],
        BoostSources::Both => {
            &[(RateSource::ComovingCovariant, "comoving"), (RateSource::GeometricNormal, "geometric")]
        }
    };
    let mut table = Table::new(["grid_size", "rate_source", "residual", "free_residual", "flagged_modes"]);
    let mut finest = Vec::new();
    for &(source, label) in sources {
        let refinement = boost_refinement(env, source, &sizes, d_eta)?;
        for (&n, r) in refinement.sizes.iter().zip(&refinement.residuals) {
            table.push(vec![n.into(), label.into(), r.residual.into(), r.free_residual.into(), r.flagged_modes.into()]);
        }
        let orders = refinement.orders();
        report.output(&format!("{label}_orders"), numbers(&orders));
        report.output(&format!("{label}_relative_spread"), number(refinement.relative_spread()));
        if source == RateSource::ComovingCovariant && !orders.is_empty() {
            report.check("comoving_convergence", orders.iter().all(|&o| o >= 1.0));
        }
        finest.push(refinement.residuals.last().map_or(f64::NAN, |r| r.residual));
    }
    report.table("boost.csv", table);
    if let [covariant, geometric] = finest[..] {
        let gap = geometric / covariant;
        report.output("geometric_to_comoving_ratio", number(gap));
        report.check("geometric_plateau_gap", gap >= 100.0);
    }
    Ok(())
}

fn qubit_operator(op: QubitOperator) -> CMatrix {
    match op {
        QubitOperator::SigmaZ => qubit::sigma_z(),
        QubitOperator::SigmaX => qubit::sigma_x(),
        QubitOperator::Lowering => qubit::lowering(),
    }
}

fn qubit_state(s: QubitState) -> Result<DensityMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(match s {
        QubitState::Ground => DensityMatrix::basis(2, 0)?,
        QubitState::Excited => DensityMatrix::basis(2, 1)?,
        QubitState::Plus => DensityMatrix::pure(&DVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)]))?,
        QubitState::Mixed => DensityMatrix::maximally_mixed(2),
    })
}

/// Longest stretch evolved between two positivity probes.
const CQ_PROBE_STEPS: usize = 25;

fn cq(p: &CqParams, report: &mut Report) -> Result<()> {
    let kernels = CqKernels::scalar(p.d0, p.d1, p.d2)?;
    let verdict = tradeoff_check(&kernels);
    let h0 = qubit::hamiltonian(p.omega0.unwrap_or(0.0));
    let h1 = qubit::sigma_z() * C64::new(p.clock_coupling.unwrap_or(0.0), 0.0);
    let model = HybridModel::new(h0, h1, vec![qubit_operator(p.lindblad.unwrap_or(QubitOperator::SigmaZ))])?;
    let rho = qubit_state(p.initial.unwrap_or(QubitState::Plus))?;
    let mut state = HybridState::gaussian_packet(
        &rho,
        p.z_min.unwrap_or(-4.0),
        p.z_max.unwrap_or(4.0),
        p.n_cells.unwrap_or(64),
        p.centre.unwrap_or(0.0),
        p.width.unwrap_or(0.25),
    )?;
    let snapshots = p.snapshots.unwrap_or(5);
    let segment = p.t_final / snapshots as f64;
    let probes = ((segment / p.dt).ceil() as usize).div_ceil(CQ_PROBE_STEPS).max(1);
    let mut header = vec!["t".to_owned(), "z".to_owned(), "tr_block".to_owned()];
    header.extend(state_columns(2, "block"));
    let mut table = Table::new(header);
    let record = |table: &mut Table, t: f64, s: &HybridState| {
        for (z, block) in s.z_grid.iter().zip(&s.blocks) {
            let mut row: Vec<Cell> = vec![t.into(), (*z).into(), block.trace().re.into()];
            row.extend(state_cells(block));
            table.push(row);
        }
    };
    record(&mut table, 0.0, &state);
    let mut min_eig = state.min_block_eigenvalue();
    let mut drift = (state.total_trace() - 1.0).abs();
    for k in 1..=snapshots {
        for _ in 0..probes {
            state = cq_evolve_grid(&kernels, &model, &state, segment / probes as f64, p.dt)?;
            min_eig = min_eig.min(state.min_block_eigenvalue());
            drift = drift.max((state.total_trace() - 1.0).abs());
        }
        record(&mut table, segment * k as f64, &state);
    }
    report.table("cq.csv", table);
    report.output("verdict", verdict.label());
    report.output("margin", number(verdict.margin()));
    report.output("min_block_eigenvalue", number(min_eig));
    report.output("negativity_detected", min_eig <= -1e-4);
    report.output("trace_drift", number(drift));
    report.output("z_mean", number(state.z_mean()));
    report.output("z_variance", number(state.z_variance()));
    report.check("trace_conserved", drift <= 1e-8);
    if verdict.is_satisfied() {
        report.check("positivity", min_eig >= -1e-6);
    }
    Ok(())
}

fn real_matrix(m: &RealMatrix) -> CMatrix {
    let rows = m.rows();
    CMatrix::from_fn(rows.len(), rows[0].len(), |i, j| C64::new(rows[i][j], 0.0))
}

fn tradeoff(p: &TradeoffParams, report: &mut Report) -> Result<()> {
    let kernels = CqKernels::new(real_matrix(&p.d0), real_matrix(&p.d1), real_matrix(&p.d2))?;
    let verdict = tradeoff_check(&kernels);
    let mut table = Table::new(["margin", "range_ok", "verdict"]);
    table.push(vec![verdict.margin().into(), verdict.range_ok().into(), verdict.label().into()]);
    report.table("tradeoff.csv", table);
    report.output("margin", number(verdict.margin()));
    report.output("range_ok", verdict.range_ok());
    report.output("verdict", Value::from(verdict.label()));
    Ok(())
}
