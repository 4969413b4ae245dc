//! Acceptance criteria 1-10. Each test writes one PASS/FAIL line to stderr
//! (uncaptured) before asserting.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use winex_core::bernstein::{h_explicit, h_primitive, phi_discrete, sup_gap};
use winex_core::config::{ExperimentConfig, PhiSource, Reference};
use winex_core::exact::{
    build_generator, decomposition_residual, detailed_balance_residual, exact_expectation,
    gradient_identity_residual, h_representation_residual, stationarity_residual,
};
use winex_core::harness::{cmd_simulate, converge_report, RunOptions};
use winex_core::kmc::{sample_initial, SimState};
use winex_core::parallel::{with_workers, Execution};
use winex_core::pde::{
    solve, weak_residual, DensityField, FourierTest, HeatSolution, LinearPotential, Potential,
    SolverParams, TabulatedPotential,
};
use winex_core::{BetaFunction, Configuration, Model, ModelParams};

const EXEC: Execution = Execution::Parallel;

fn report(id: u32, pass: bool, detail: String) {
    let status = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2}: {status} {detail}");
}

fn model(n: usize, ell: usize, beta: &BetaFunction) -> Model {
    Model::new(ModelParams::new(n, ell, beta.clone())).unwrap()
}

#[test]
fn criterion_01_gradient_identity() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for beta in BetaFunction::presets() {
        for n in [8, 10] {
            for ell in [3, 4] {
                let (r1, r2) = gradient_identity_residual(&model(n, ell, &beta), EXEC).unwrap();
                worst = worst.max(r1).max(r2);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && secs < 10.0;
    report(1, pass, format!("max gradient residual {worst:e} (<= 1e-12) in {secs:.2}s (< 10s)"));
    assert!(pass);
}

#[test]
fn criterion_02_generator_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for beta in BetaFunction::presets() {
        let m = model(8, 3, &beta);
        let mut tables: Vec<Vec<f64>> = (0..4).map(|_| (0..256).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        tables.push((0..256u64).map(|i| (i & 1) as f64).collect());
        for f in &tables {
            worst = worst.max(decomposition_residual(&m, f, EXEC).unwrap());
        }
    }
    let pass = worst <= 1e-12;
    report(2, pass, format!("max decomposition residual {worst:e} (<= 1e-12)"));
    assert!(pass);
}

#[test]
fn criterion_03_stationarity_and_detailed_balance() {
    let t0 = Instant::now();
    let mut stat = 0.0f64;
    let mut balance = 0.0f64;
    for beta in BetaFunction::presets() {
        let q = build_generator(&model(10, 3, &beta), EXEC).unwrap();
        for i in 1..=9 {
            let alpha = i as f64 / 10.0;
            stat = stat.max(stationarity_residual(&q, alpha).unwrap());
            balance = balance.max(detailed_balance_residual(&q, alpha).unwrap());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = stat <= 1e-10 && balance <= 1e-10 && secs < 30.0;
    report(3, pass, format!("stationarity {stat:e}, detailed balance {balance:e} (<= 1e-10) in {secs:.2}s (< 30s)"));
    assert!(pass);
}

#[test]
fn criterion_04_h_representation() {
    let mut worst = 0.0f64;
    for beta in BetaFunction::presets() {
        worst = worst.max(h_representation_residual(&model(10, 4, &beta), EXEC).unwrap());
    }
    let pass = worst <= 1e-12;
    report(4, pass, format!("max |h - h_alt| {worst:e} (<= 1e-12)"));
    assert!(pass);
}

#[test]
fn criterion_05_phi_consistency() {
    let mut phi_err = 0.0f64;
    for beta in BetaFunction::presets() {
        let m = model(8, 4, &beta);
        for alpha in [0.25, 0.5, 0.75] {
            let mean_h = exact_expectation(8, |c: &Configuration| m.potential_h(c, 0), alpha, EXEC).unwrap();
            phi_err = phi_err.max((phi_discrete(&beta, 4, alpha).unwrap() - mean_h).abs());
        }
    }
    let mut prim_err = 0.0f64;
    for degree in 1..=32 {
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            for k in 0..=degree {
                let d = (h_explicit(k, degree, u).unwrap() - h_primitive(k, degree, u).unwrap()).abs();
                prim_err = prim_err.max(d);
            }
        }
    }
    let cos = BetaFunction::cosine();
    let gap64 = sup_gap(&cos, 64, 1001).unwrap();
    let gap8 = sup_gap(&cos, 8, 1001).unwrap();
    let one = BetaFunction::constant_one();
    let gap_one = [4, 8, 64].iter().map(|&l| sup_gap(&one, l, 1001).unwrap()).fold(0.0, f64::max);
    let pass = phi_err <= 1e-12 && prim_err <= 1e-9 && gap64 < gap8 && gap_one <= 1e-14;
    report(
        5,
        pass,
        format!(
            "phi vs E[h] {phi_err:e} (<= 1e-12), explicit vs primitive {prim_err:e} (<= 1e-9), sup-gap L=64 {gap64:e} < L=8 {gap8:e}, beta=1 gap {gap_one:e}"
        ),
    );
    assert!(pass);
}

fn convergence_config(beta: BetaFunction, tolerance: f64, reference: Reference) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.model.sizes = vec![64, 128, 256];
    cfg.model.beta = beta;
    cfg.ensemble.replicas = 200;
    cfg.ensemble.times = vec![0.01];
    cfg.ensemble.epsilon = 1.0 / 16.0;
    cfg.pde.cells = 512;
    cfg.pde.phi = PhiSource::Limit;
    cfg.comparison.tolerance = tolerance;
    cfg.comparison.reference = reference;
    cfg
}

fn convergence_criterion(id: u32, cfg: ExperimentConfig, limit_secs: f64) {
    let dir = tempfile::tempdir().unwrap();
    let t0 = Instant::now();
    let r = converge_report(&cfg, dir.path(), false).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let distances: Vec<String> = r
        .terminal_distances()
        .iter()
        .map(|(n, d)| format!("N={n}: {d:.5}"))
        .collect();
    let pass = r.passed() && secs <= limit_secs;
    report(
        id,
        pass,
        format!(
            "L1 distances [{}] (final <= {}), monotone {}, {secs:.0}s",
            distances.join(", "),
            r.tolerance,
            r.monotone()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_ssep_heat_cross_validation() {
    let cfg = convergence_config(BetaFunction::constant_one(), 0.02, Reference::Heat);
    convergence_criterion(6, cfg, 600.0);
}

#[test]
fn criterion_07_nonlinear_convergence() {
    let cfg = convergence_config(BetaFunction::cosine(), 0.03, Reference::Pde);
    convergence_criterion(7, cfg, 900.0);
}

fn cosine_field(k: usize) -> DensityField {
    DensityField::from_profile(k, |u| 0.5 + 0.25 * (2.0 * std::f64::consts::PI * u).cos()).unwrap()
}

#[test]
fn criterion_08_pde_solver_order() {
    let heat = HeatSolution::new(0.5, vec![(1, 0.25)]).unwrap();
    let max_err = |k: usize| {
        let params = SolverParams { cells: k, ..Default::default() };
        let f = solve(&cosine_field(k), &[0.05], &LinearPotential, &params).unwrap().outputs[0].1.clone();
        (0..k).map(|i| (f.cells()[i] - heat.value(0.05, f.center(i))).abs()).fold(0.0, f64::max)
    };
    let ratio = max_err(128) / max_err(256);
    let mut mass_err = 0.0f64;
    let mut bound_violation = 0.0f64;
    for beta in BetaFunction::presets() {
        let phi = TabulatedPotential::limit(&beta).unwrap();
        for rho0 in [
            cosine_field(256),
            DensityField::from_profile(256, |u| if u < 0.3 { 0.95 } else { 0.05 }).unwrap(),
        ] {
            let params = SolverParams { cells: 256, snapshot_stride: 16, ..Default::default() };
            let sol = solve(&rho0, &[0.01, 0.05, 0.1], &phi, &params).unwrap();
            for (_, f) in &sol.snapshots {
                mass_err = mass_err.max((f.mass() - rho0.mass()).abs());
                bound_violation = bound_violation.max(rho0.min() - f.min()).max(f.max() - rho0.max());
            }
        }
    }
    let pass = (3.0..=5.0).contains(&ratio) && mass_err <= 1e-12 && bound_violation <= 0.0;
    report(
        8,
        pass,
        format!("error ratio K=128/256 {ratio:.3} (in [3,5]), mass drift {mass_err:e} (<= 1e-12), max principle excess {bound_violation:e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_weak_residual() {
    let mut worst = 0.0f64;
    let mut one = 0.0f64;
    let rho0 = cosine_field(256);
    let t = 0.05;
    for beta in BetaFunction::presets() {
        let phi = TabulatedPotential::limit(&beta).unwrap();
        let sol = solve(&rho0, &[t], &phi, &SolverParams { cells: 256, ..Default::default() }).unwrap();
        for g in [FourierTest::Cos(1), FourierTest::Sin(1), FourierTest::Cos(2)] {
            worst = worst.max(weak_residual(&sol.snapshots, &rho0, &g, t, &phi as &dyn Potential).unwrap().abs());
        }
        one = one.max(weak_residual(&sol.snapshots, &rho0, &FourierTest::One, t, &phi).unwrap().abs());
    }
    let pass = worst <= 1e-3 && one <= 1e-12;
    report(9, pass, format!("max |F_t| over trigonometric G {worst:e} (<= 1e-3), G = 1 gives {one:e} (<= 1e-12)"));
    assert!(pass);
}

#[test]
fn criterion_10_simulator_audit_and_determinism() {
    let params = ModelParams::new(256, 16, BetaFunction::cosine());
    let model = std::sync::Arc::new(Model::new(params).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cfg = sample_initial(|u| 0.5 + 0.3 * (2.0 * std::f64::consts::PI * u).cos(), 256, &mut rng).unwrap();
    let mut state = SimState::new(model, cfg, rng).unwrap();
    state.set_audit_interval(None);
    for _ in 0..1_000_000 {
        state.step().unwrap();
    }
    let audit = state.audit();
    let audit_ok = audit.is_ok() && state.events() == 1_000_000;
    let (rate_err, total_err) = state.last_audit().map_or((f64::NAN, f64::NAN), |a| (a.max_rate_error, a.total_error));

    let dir = tempfile::tempdir().unwrap();
    let mut exp = ExperimentConfig::default();
    exp.model.sizes = vec![64, 128];
    exp.model.beta = BetaFunction::cosine();
    exp.ensemble.replicas = 16;
    exp.ensemble.times = vec![0.002, 0.01];
    let mut outputs = Vec::new();
    for workers in [1, 8] {
        let mut c = exp.clone();
        c.output_dir = dir.path().join(format!("w{workers}"));
        with_workers(Some(workers), || cmd_simulate(&c, &RunOptions::default())).unwrap();
        let files: Vec<Vec<u8>> = ["ensemble_N64.csv", "ensemble_N128.csv"]
            .iter()
            .map(|f| std::fs::read(c.output_dir.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    let identical = outputs[0] == outputs[1];
    let pass = audit_ok && identical;
    report(
        10,
        pass,
        format!("after 10^6 events rate error {rate_err:e}, total error {total_err:e} (<= 1e-9); outputs with 1 and 8 workers identical: {identical}"),
    );
    assert!(pass);
}
