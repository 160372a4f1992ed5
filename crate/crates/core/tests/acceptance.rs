//! End-to-end acceptance criteria. Each criterion prints one PASS or FAIL
//! line with the measured quantities, its tolerance and its runtime budget.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relclock_core::correlators::EnvironmentSpec;
use relclock_core::gkls::{
    bohr_components, build_generator, cp_choi_check, evolve, qubit, DensityMatrix, GklsModel, JumpOperator,
};
use relclock_core::hybridcq::{cq_evolve_grid, tradeoff_check, CqKernels, HybridModel, HybridState};
use relclock_core::integrability::{
    boost_refinement, functional_curl_residual, RateMode, RateSource, SliceLattice, DEFAULT_BOOST_STEP,
};
use relclock_core::kernels::ClockKernel;
use relclock_core::langevin::{ccr_defect, mode_evolve_moments, stationary_fdr_check, ModeMoments, ModeParams};
use relclock_core::linalg::{min_hermitian_eigenvalue, CMatrix, C64};
use relclock_core::rates::{
    assemble_kossakowski, kappa_markov_kms, kappa_markov_vacuum, kappa_tcl, kappa_tcl_kms, odd_transform, RateQuery,
};
use relclock_core::specfun::{bose_occupation, Integrator};
use relclock_core::trajectories::{sample_colored_noise, unravel_linear};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

type Outcome = Result<(bool, String), relclock_core::Error>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn vacuum() -> EnvironmentSpec {
    EnvironmentSpec::vacuum(1.0, 1.0).unwrap()
}

fn vacuum_markov_closed_form() -> Outcome {
    let env = vacuum();
    let value = kappa_markov_vacuum(&env, -2.0);
    let expected = 3f64.sqrt() / (2.0 * PI);
    let error = (value - expected).abs();
    let mut worst_heating: f64 = 0.0;
    for i in 0..=2000 {
        let omega = -1.0 + 1e-9 + i as f64 * 0.01;
        worst_heating = worst_heating.max(kappa_markov_vacuum(&env, omega).abs());
    }
    Ok((
        error <= 1e-12 && worst_heating == 0.0,
        format!("|k(-2) - sqrt3/2pi| = {error:.2e} (tol 1e-12), max k(w > -1) = {worst_heating:.1e}"),
    ))
}

fn markov_convergence() -> Outcome {
    let env = vacuum();
    let exact = kappa_markov_vacuum(&env, -3.0);
    let sigmas = [2.0, 5.0, 10.0, 20.0];
    let mut errors = Vec::new();
    for sigma in sigmas {
        let k = ClockKernel::gaussian(sigma)?;
        let value = kappa_tcl(&RateQuery::new(-3.0, &k, &env)?)?;
        errors.push(((value - exact) / exact).abs());
    }
    let orders: Vec<f64> =
        (0..3).map(|i| (errors[i] / errors[i + 1]).ln() / (sigmas[i + 1] / sigmas[i]).ln()).collect();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let order_ok = orders.iter().all(|p| (p - 2.0).abs() <= 0.25);
    Ok((
        decreasing && order_ok && errors[2] <= 1e-3,
        format!("rel errors {errors:?}, orders {orders:.3?} (|p - 2| <= 0.25), err(sigma=10) <= 1e-3"),
    ))
}

fn no_heating() -> Outcome {
    let env = vacuum();
    let mut worst: f64 = 0.0;
    for sigma in [5.0, 10.0, 20.0] {
        let k = ClockKernel::gaussian(sigma)?;
        let q = RateQuery::new(1.0, &k, &env)?;
        worst = worst.max(kappa_tcl(&q)? / kappa_tcl(&q.with_omega(-3.0))?);
    }
    Ok((worst <= 1e-10, format!("max k(+1)/k(-3) over sigma in {{5,10,20}} = {worst:.3e} (tol 1e-10)")))
}

fn dawson_odd_transform() -> Outcome {
    let sigma = 1.0;
    let quad = Integrator { rel_tol: 1e-13, abs_tol: 0.0, max_subdivisions: 20_000 };
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let omega = 0.1 * 100f64.powf(i as f64 / 19.0) / sigma;
        // int sgn(s) w(s) e^{-i Omega s} ds = -2i int_0^inf w(s) sin(Omega s) ds
        let half = quad.integrate(|s| (-0.5 * (s / sigma).powi(2)).exp() * (omega * s).sin(), 0.0, 40.0 * sigma)?.value;
        let quadrature = -2.0 * half;
        let closed = -odd_transform(sigma, omega)?;
        worst = worst.max(((quadrature - closed) / closed).abs());
    }
    Ok((worst <= 1e-8, format!("max relative mismatch over 20 points = {worst:.2e} (tol 1e-8)")))
}

fn detailed_balance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let beta = rng.random_range(0.1..5.0);
        let omega = rng.random_range(1.0..8.0);
        let env = EnvironmentSpec::thermal(1.0, rng.random_range(0.2..2.0), beta)?;
        let up = kappa_markov_kms(&env, omega);
        let down = kappa_markov_kms(&env, -omega);
        if down > 0.0 {
            worst = worst.max((up * (beta * omega).exp() / down - 1.0).abs());
        }
    }
    let env = EnvironmentSpec::thermal(1.0, 1.0, 1.0)?;
    let mut defects = Vec::new();
    for sigma in [2.0, 5.0, 10.0, 20.0] {
        let k = ClockKernel::gaussian(sigma)?;
        let up = kappa_tcl_kms(&RateQuery::new(2.0, &k, &env)?)?;
        let down = kappa_tcl_kms(&RateQuery::new(-2.0, &k, &env)?)?;
        defects.push((up * 2f64.exp() / down - 1.0).abs());
    }
    let monotone = defects.windows(2).all(|w| w[1] < w[0]);
    Ok((
        worst <= 1e-12 && monotone,
        format!("sharp defect max = {worst:.2e} (tol 1e-12); finite-sigma defects {defects:?} decreasing"),
    ))
}

/// A three-level system whose couplings are split into Bohr channels, with a
/// random Gram matrix of coupling amplitudes.
fn random_multichannel_model(
    rng: &mut ChaCha8Rng,
    env: &EnvironmentSpec,
    kernel: &ClockKernel,
) -> Result<GklsModel, relclock_core::Error> {
    let energies = [0.0, rng.random_range(1.2..2.5), rng.random_range(2.8..4.5)];
    let h = CMatrix::from_diagonal(&DVector::from_iterator(3, energies.iter().map(|&e| cx(e, 0.0))));
    let n_couplings = rng.random_range(1..=3);
    let amplitudes =
        CMatrix::from_fn(n_couplings, n_couplings, |_, _| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let gram = &amplitudes * amplitudes.adjoint();
    let mut jumps = Vec::new();
    let mut owners = Vec::new();
    for alpha in 0..n_couplings {
        let raw = CMatrix::from_fn(3, 3, |_, _| cx(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let coupling = &raw + raw.adjoint();
        for (omega, part) in bohr_components(&h, &coupling) {
            jumps.push(JumpOperator::new(part, omega));
            owners.push(alpha);
        }
    }
    let queries: Vec<RateQuery> =
        jumps.iter().map(|j| RateQuery::new(j.omega, kernel, env)).collect::<Result<_, _>>()?;
    let cross = CMatrix::from_fn(jumps.len(), jumps.len(), |a, b| gram[(owners[a], owners[b])]);
    let block = assemble_kossakowski(&queries, &cross)?;
    GklsModel::new(h, jumps, block)
}

fn kossakowski_positivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_margin = f64::INFINITY;
    let mut worst_choi = f64::INFINITY;
    let mut all_cp = true;
    for i in 0..100 {
        let env = if i % 2 == 0 { vacuum() } else { EnvironmentSpec::thermal(1.0, 1.0, rng.random_range(0.3..3.0))? };
        let kernel = ClockKernel::gaussian(rng.random_range(1.0..10.0))?;
        let model = random_multichannel_model(&mut rng, &env, &kernel)?;
        let block = model.kossakowski();
        let trace = block.trace();
        if trace > 0.0 {
            worst_margin = worst_margin.min(min_hermitian_eigenvalue(&block.matrix) / trace);
        }
        let generator = build_generator(&model);
        let verdict = cp_choi_check(&generator, 0.5 / generator.spectral_norm())?;
        all_cp &= verdict.is_cp();
        worst_choi = worst_choi.min(verdict.min_choi_eig());
    }
    Ok((
        worst_margin >= -1e-10 && all_cp,
        format!("min eig / trace = {worst_margin:.2e} (tol -1e-10), all Choi checks CP = {all_cp}, min Choi eig = {worst_choi:.2e}"),
    ))
}

fn ccr_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let gamma = rng.random_range(0.01..5.0);
        let p = ModeParams::new(rng.random_range(0.5..5.0), gamma, rng.random_range(0.0..3.0))?;
        for j in 0..=20 {
            worst = worst.max(ccr_defect(&p, j as f64 * 0.5 / gamma)?);
        }
    }
    Ok((worst <= 1e-12, format!("max ccr defect over Gamma tau in [0, 10] = {worst:.2e} (tol 1e-12)")))
}

fn fluctuation_dissipation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_fdr: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;
    for _ in 0..50 {
        let beta = rng.random_range(0.2..5.0);
        let energy = rng.random_range(1.05..6.0);
        let p = ModeParams::new(energy, rng.random_range(0.1..2.0), bose_occupation(energy, beta)?)?;
        worst_fdr = worst_fdr.max(stationary_fdr_check(&p, beta)?.deviation);
        let env = EnvironmentSpec::thermal(1.0, rng.random_range(0.2..2.0), beta)?;
        let sourced = ModeParams::from_environment(&env, energy)?;
        let relaxed = mode_evolve_moments(&sourced, &ModeMoments::diagonal(2.0), 40.0 / sourced.gamma())?;
        worst_cross = worst_cross.max((relaxed.occupation - bose_occupation(energy, beta)?).abs());
    }
    Ok((
        worst_fdr <= 1e-9 && worst_cross <= 1e-9,
        format!("max |n + 1/2 - coth/2| = {worst_fdr:.2e}, max |n_stat - n_B| from KMS rates = {worst_cross:.2e} (tol 1e-9)"),
    ))
}

fn trajectory_equivalence() -> Outcome {
    let model = qubit::relaxation_model(2.0, 1.0, 0.0)?;
    let rho0 = DensityMatrix::basis(2, 1)?;
    let ensemble = unravel_linear(&model, &rho0, 1.0, 1e-3, 10_000, 20_240_601)?;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_deviation: f64 = 0.0;
    for ((&t, mean), &err) in ensemble.times.iter().zip(&ensemble.mean_states).zip(&ensemble.stat_error) {
        let exact = evolve(&model, &rho0, t)?;
        let deviation = (mean - exact.matrix()).norm();
        worst_deviation = worst_deviation.max(deviation);
        worst_excess = worst_excess.max(deviation - 0.02f64.max(5.0 * err));
    }
    Ok((
        worst_excess <= 0.0,
        format!(
            "max deviation {worst_deviation:.3e} over {} grid times, within max(0.02, 5 stat_error)",
            ensemble.times.len()
        ),
    ))
}

fn colored_noise() -> Outcome {
    let kernel = ClockKernel::gaussian(1.0)?;
    let grid: Vec<f64> = (0..32).map(|j| j as f64 * 0.1).collect();
    let field = sample_colored_noise(&vacuum(), &kernel, &grid, 20_000, 10)?;
    let error = field.covariance_relative_error();
    Ok((
        error <= 0.05,
        format!("Frobenius relative error {error:.4} (tol 0.05), clipped eigenvalues {}", field.clipped_eigenvalues),
    ))
}

fn integrability_split() -> Outcome {
    let env = vacuum();
    let kernel = ClockKernel::gaussian(2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_null: f64 = 0.0;
    for _ in 0..10 {
        let mut heights = vec![0.0];
        for _ in 1..4 {
            let last = *heights.last().unwrap();
            heights.push(last + rng.random_range(-0.45..0.45));
        }
        let lattice = SliceLattice::new(heights, 1.0, RateMode::NormalIndependent)?;
        let x = rng.random_range(0..4);
        let y = (x + rng.random_range(1..4)) % 4;
        worst_null = worst_null.max(functional_curl_residual(&lattice, &env, &kernel, x, y, 1e-4)?.value);
    }
    let tilted = SliceLattice::tilted(4, 1.0, 0.3, RateMode::NormalSampled)?;
    let violation = functional_curl_residual(&tilted, &env, &kernel, 1, 2, 1e-4)?.value;
    let separation = if worst_null > 0.0 { (violation / worst_null).log10() } else { f64::INFINITY };
    Ok((
        worst_null <= 1e-12 && violation >= 1e-3 && separation >= 9.0,
        format!("null max {worst_null:.2e} (tol 1e-12), tilted {violation:.3e} (>= 1e-3), separation {separation:.1} decades"),
    ))
}

fn boost_split() -> Outcome {
    let env = vacuum();
    let sizes = [16, 32, 64];
    let covariant = boost_refinement(&env, RateSource::ComovingCovariant, &sizes, DEFAULT_BOOST_STEP)?;
    let geometric = boost_refinement(&env, RateSource::GeometricNormal, &sizes, DEFAULT_BOOST_STEP)?;
    let orders = covariant.orders();
    let ratios = covariant.ratios();
    let gap = geometric.residuals[2].residual / covariant.residuals[2].residual;
    let spread = geometric.relative_spread();
    Ok((
        orders.iter().all(|&p| p >= 1.0) && ratios.iter().all(|&r| r >= 1.7) && spread < 0.2 && gap >= 100.0,
        format!("covariant orders {orders:.2?}, ratios {ratios:.1?}; geometric spread {spread:.3} (< 0.2); gap at 64 = {gap:.2e} (>= 1e2)"),
    ))
}

fn cq_tradeoff() -> Outcome {
    let boundary = tradeoff_check(&CqKernels::scalar(2.0, 2.0, 1.0)?);
    let margin = boundary.margin();
    let plus = DensityMatrix::pure(&DVector::from_vec(vec![cx(0.5f64.sqrt(), 0.0), cx(0.5f64.sqrt(), 0.0)]))?;
    let model = HybridModel::static_hamiltonian(CMatrix::zeros(2, 2), vec![qubit::sigma_z()])?;
    let initial = HybridState::gaussian_packet(&plus, -4.0, 4.0, 64, 0.0, 0.25)?;
    let run = |k: &CqKernels| -> Result<(f64, f64), relclock_core::Error> {
        let mut state = initial.clone();
        let mut worst = f64::INFINITY;
        let mut trace_drift: f64 = 0.0;
        for _ in 0..20 {
            state = cq_evolve_grid(k, &model, &state, 0.05, 2e-3)?;
            worst = worst.min(state.min_block_eigenvalue());
            trace_drift = trace_drift.max((state.total_trace() - 1.0).abs());
        }
        Ok((worst, trace_drift))
    };
    let (violated_min, violated_drift) = run(&CqKernels::scalar(1.0, 2.0, 1.0)?)?;
    let (satisfied_min, satisfied_drift) = run(&CqKernels::scalar(2.0, 2.0, 1.0)?)?;
    let drift = violated_drift.max(satisfied_drift);
    Ok((
        boundary.is_satisfied() && margin.abs() <= 1e-12 && violated_min <= -1e-4 && satisfied_min >= -1e-6 && drift <= 1e-8,
        format!(
            "boundary margin {margin:.1e}; min block eig violated {violated_min:.3e} (<= -1e-4), satisfied {satisfied_min:.3e} (>= -1e-6); trace drift {drift:.1e} (tol 1e-8)"
        ),
    ))
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "vacuum Markov closed form",
            budget: Duration::from_secs(1),
            run: vacuum_markov_closed_form,
        },
        Criterion { id: 2, name: "Markov convergence", budget: Duration::from_secs(10), run: markov_convergence },
        Criterion { id: 3, name: "no-heating suppression", budget: Duration::from_secs(5), run: no_heating },
        Criterion { id: 4, name: "Dawson odd transform", budget: Duration::from_secs(5), run: dawson_odd_transform },
        Criterion { id: 5, name: "detailed balance", budget: Duration::from_secs(30), run: detailed_balance },
        Criterion {
            id: 6,
            name: "Kossakowski positivity",
            budget: Duration::from_secs(60),
            run: kossakowski_positivity,
        },
        Criterion { id: 7, name: "CCR preservation", budget: Duration::from_secs(1), run: ccr_preservation },
        Criterion {
            id: 8,
            name: "FDR and thermalization",
            budget: Duration::from_secs(5),
            run: fluctuation_dissipation,
        },
        Criterion {
            id: 9,
            name: "trajectory equivalence",
            budget: Duration::from_secs(120),
            run: trajectory_equivalence,
        },
        Criterion { id: 10, name: "colored-noise covariance", budget: Duration::from_secs(60), run: colored_noise },
        Criterion {
            id: 11,
            name: "integrability null/violation split",
            budget: Duration::from_secs(120),
            run: integrability_split,
        },
        Criterion { id: 12, name: "boost-interchange split", budget: Duration::from_secs(120), run: boost_split },
        Criterion { id: 13, name: "CQ trade-off", budget: Duration::from_secs(180), run: cq_tradeoff },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= c.budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{} [{:>2}] {}: {} ({:.2} s, budget {} s)",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
