//! Subcommand drivers. Each writes the resolved config, its outputs, metadata
//! sidecars and a content manifest into the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bernstein::{bernstein_row, h_explicit, h_primitive, phi_discrete, phi_table};
use crate::beta::BetaFunction;
use crate::compare::{distance, norm_of, ComparisonReport, ComparisonRow};
use crate::config::{ExperimentConfig, PhiSource};
use crate::error::{Error, Result};
use crate::exact::{
    build_generator, byparts_identity_check, decomposition_residual, detailed_balance_residual,
    exact_expectation, gradient_identity_residual, h_representation_residual,
    stationarity_residual,
};
use crate::kmc::{ensemble_profile, sample_initial, EnsembleProfile, EnsembleSpec, Profile, SimState, AUDIT_INTERVAL};
use crate::model::{Model, ModelParams};
use crate::output::{ensemble_csv, trajectory_csv, write_file, write_manifest, Metadata};
use crate::parallel::Execution;
use crate::pde::{
    solve, weak_residual, DensityField, FourierTest, HeatSolution, Potential, SolverParams, TestFunction,
    TabulatedPotential,
};

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub debug_audit: bool,
}

impl RunOptions {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.ensemble.master_seed = seed;
            cfg.verify.seed = seed;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub dir: PathBuf,
    /// Human-readable result lines.
    pub lines: Vec<String>,
}

fn exec() -> Execution {
    Execution::Parallel
}

fn start(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    write_file(&dir.join(RESOLVED_CONFIG), &cfg.to_toml())?;
    Ok(dir)
}

fn finish(dir: PathBuf, passed: bool, lines: Vec<String>) -> Result<Outcome> {
    write_manifest(&dir)?;
    Ok(Outcome { passed, dir, lines })
}

/// One checked quantity of the verification gate.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Metric {
    pub fn passed(&self) -> bool {
        self.value.abs() <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} = {:e} (tol {:e}) {}",
            self.name,
            self.value,
            self.tolerance,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

/// Exact small-lattice identities over the verify matrix.
pub fn verify_metrics(cfg: &ExperimentConfig) -> Result<Vec<Metric>> {
    let v = &cfg.verify;
    let mut out = Vec::new();
    let mut push = |name: String, value: f64, tolerance: f64| {
        out.push(Metric {
            name,
            value,
            tolerance,
        })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
    for beta in &v.betas {
        for &n in &v.sizes {
            for &ell in &v.windows {
                if ell + 2 > n {
                    continue;
                }
                let tag = format!("[beta={beta},n={n},ell={ell}]");
                let model = Model::new(ModelParams::new(n, ell, beta.clone()))?.with_rule(v.rule);
                let (r1, r2) = gradient_identity_residual(&model, exec())?;
                push(format!("gradient.current{tag}"), r1, 1e-12);
                push(format!("gradient.divergence{tag}"), r2, 1e-12);
                let q = build_generator(&model, exec())?;
                let f: Vec<f64> = (0..q.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
                push(format!("decomposition{tag}"), decomposition_residual(&model, &f, exec())?, 1e-12);
                push(format!("h_alt{tag}"), h_representation_residual(&model, exec())?, 1e-12);
                let (mut stat, mut balance, mut mean_g, mut phi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
                for &alpha in &v.alphas {
                    stat = stat.max(stationarity_residual(&q, alpha)?);
                    balance = balance.max(detailed_balance_residual(&q, alpha)?);
                    let g = exact_expectation(n, |c| model.potential_g(c, 0), alpha, exec())?;
                    mean_g = mean_g.max(g.abs());
                    let h = exact_expectation(n, |c| model.potential_h(c, 0), alpha, exec())?;
                    phi = phi.max((phi_discrete(beta, ell, alpha)? - h).abs());
                }
                push(format!("stationarity{tag}"), stat, 1e-10);
                push(format!("detailed_balance{tag}"), balance, 1e-10);
                push(format!("mean_g{tag}"), mean_g, 1e-12);
                push(format!("phi_discrete_vs_mean_h{tag}"), phi, 1e-12);
                let alpha = v.alphas[v.alphas.len() / 2];
                push(
                    format!("by_parts{tag}"),
                    byparts_identity_check(n, 0, n / 2, alpha, 3, rng.random())?,
                    1e-12,
                );
            }
        }
    }
    let mut unity = 0.0f64;
    let mut primitive = 0.0f64;
    for degree in [4usize, 8, 16, 32] {
        for i in 0..=64 {
            let u = i as f64 / 64.0;
            unity = unity.max((bernstein_row(degree, u)?.iter().sum::<f64>() - 1.0).abs());
            for m in 0..=degree {
                primitive = primitive.max((h_explicit(m, degree, u)? - h_primitive(m, degree, u)?).abs());
            }
        }
    }
    out.push(Metric {
        name: "bernstein.partition_of_unity".into(),
        value: unity,
        tolerance: 1e-12,
    });
    out.push(Metric {
        name: "bernstein.primitive".into(),
        value: primitive,
        tolerance: 1e-9,
    });
    Ok(out)
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = start(cfg)?;
    let t0 = Instant::now();
    let metrics = verify_metrics(cfg)?;
    let passed = metrics.iter().all(Metric::passed);
    let mut report = String::new();
    for m in &metrics {
        writeln!(report, "{}", m.line()).unwrap();
    }
    writeln!(report, "all_passed = {passed}").unwrap();
    write_file(&dir.join("verify_report.txt"), &report)?;
    let meta = Metadata::new()
        .with("rule", format!("{:?}", cfg.verify.rule))
        .with("metrics", metrics.len())
        .with("wall_time_s", t0.elapsed().as_secs_f64());
    write_file(&dir.join("verify_report.meta"), &meta.render())?;
    let mut lines: Vec<String> = metrics.iter().filter(|m| !m.passed()).map(Metric::line).collect();
    lines.push(format!(
        "verify: {} metrics, {}",
        metrics.len(),
        if passed { "all pass" } else { "failures above" }
    ));
    finish(dir, passed, lines)
}

fn ensemble_spec(cfg: &ExperimentConfig, n: usize, audit: bool) -> Result<EnsembleSpec> {
    let mut params = cfg.model.params(n)?;
    params.seed = cfg.ensemble.master_seed;
    Ok(EnsembleSpec {
        params,
        replicas: cfg.ensemble.replicas,
        times: cfg.ensemble.times.clone(),
        epsilon: cfg.ensemble.epsilon,
        master_seed: cfg.ensemble.master_seed,
        profile: cfg.ensemble.profile.clone(),
        audit,
    })
}

fn run_ensemble(cfg: &ExperimentConfig, dir: &Path, n: usize, audit: bool) -> Result<(EnsembleSpec, EnsembleProfile)> {
    let spec = ensemble_spec(cfg, n, audit)?;
    let t0 = Instant::now();
    let profile = ensemble_profile(&spec, exec())?;
    let wall = t0.elapsed().as_secs_f64();
    write_file(&dir.join(format!("ensemble_N{n}.csv")), &ensemble_csv(&profile))?;
    let meta = Metadata::new()
        .with("n", n)
        .with("ell", spec.params.ell)
        .with("beta", &spec.params.beta)
        .with("epsilon_requested", spec.epsilon)
        .with("epsilon", profile.epsilon)
        .with("replicas", spec.replicas)
        .with("master_seed", spec.master_seed)
        .with("replica_streams", format!("0..{}", spec.replicas))
        .with("times", join(&spec.times))
        .with("events_total", profile.total_events())
        .with("audit", audit)
        .with("wall_time_s", wall);
    write_file(&dir.join(format!("ensemble_N{n}.meta")), &meta.render())?;
    Ok((spec, profile))
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub fn cmd_simulate(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let dir = start(cfg)?;
    let mut lines = Vec::new();
    for &n in &cfg.model.sizes {
        let (spec, profile) = run_ensemble(cfg, &dir, n, opts.debug_audit)?;
        lines.push(format!(
            "simulate: N={n} ell={} replicas={} events={}",
            spec.params.ell,
            spec.replicas,
            profile.total_events()
        ));
    }
    finish(dir, true, lines)
}

/// `Phi` chosen by the config.
pub fn potential(beta: &BetaFunction, source: PhiSource) -> Result<TabulatedPotential> {
    match source {
        PhiSource::Limit => TabulatedPotential::limit(beta),
        PhiSource::Discrete { degree } => TabulatedPotential::discrete(beta, degree),
    }
}

pub fn initial_field(profile: &Profile, cells: usize) -> Result<DensityField> {
    DensityField::from_profile(cells, |u| profile.eval(u))
}

fn solver_params(cfg: &ExperimentConfig) -> SolverParams {
    SolverParams {
        cells: cfg.pde.cells,
        cfl: cfg.pde.cfl,
        snapshot_stride: cfg.pde.snapshot_stride,
    }
}

pub fn cmd_pde(cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = start(cfg)?;
    let t0 = Instant::now();
    let phi = potential(&cfg.model.beta, cfg.pde.phi)?;
    let rho0 = initial_field(&cfg.ensemble.profile, cfg.pde.cells)?;
    let times = cfg.pde_times();
    let sol = solve(&rho0, &times, &phi, &solver_params(cfg))?;
    let mut rows = vec![(0.0, rho0.clone())];
    rows.extend(sol.outputs.iter().filter(|o| o.0 > 0.0).cloned());
    write_file(&dir.join("pde.csv"), &trajectory_csv(&rows))?;
    let mut lines = vec![format!(
        "pde: K={} steps={} dt={:e} phi={}",
        cfg.pde.cells,
        sol.steps,
        sol.dt,
        phi.describe()
    )];
    if cfg.pde.weak_residual {
        let mut csv = String::from("time,test,residual\n");
        for &t in &times {
            for g in FourierTest::standard_set() {
                let r = weak_residual(&sol.snapshots, &rho0, &g, t, &phi)?;
                writeln!(csv, "{t},{},{r:e}", g.name()).unwrap();
                lines.push(format!("weak residual t={t} G={}: {r:e}", g.name()));
            }
        }
        write_file(&dir.join("weak_residual.csv"), &csv)?;
    }
    let degree = match cfg.pde.phi {
        PhiSource::Discrete { degree } => degree,
        PhiSource::Limit => cfg.model.params(*cfg.model.sizes.last().unwrap())?.ell,
    };
    let mut table = String::from("u,phi_discrete,phi_limit,bezier,beta\n");
    for r in phi_table(&cfg.model.beta, degree, 101)? {
        writeln!(table, "{},{},{},{},{}", r.u, r.phi_discrete, r.phi_limit, r.bezier, r.beta).unwrap();
    }
    write_file(&dir.join("phi_table.csv"), &table)?;
    let meta = Metadata::new()
        .with("cells", cfg.pde.cells)
        .with("cfl", cfg.pde.cfl)
        .with("dt", sol.dt)
        .with("steps", sol.steps)
        .with("phi", phi.describe())
        .with("phi_table_degree", degree)
        .with("times", join(&times))
        .with("wall_time_s", t0.elapsed().as_secs_f64());
    write_file(&dir.join("pde.meta"), &meta.render())?;
    finish(dir, true, lines)
}

/// Reference profiles on `cells` coarse cells at each ensemble time.
pub struct ReferenceFields {
    heat: Option<HeatSolution>,
    pde: Option<Vec<(f64, DensityField)>>,
    pub label: String,
}

impl ReferenceFields {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.heat_reference() {
            let heat = match cfg.ensemble.profile {
                Profile::Cosine {
                    mean,
                    amplitude,
                    mode,
                } if mode > 0 => HeatSolution::new(mean, vec![(mode, amplitude)])?,
                Profile::Cosine { mean, amplitude, .. } => HeatSolution::new(mean + amplitude, vec![])?,
                Profile::Constant { value } => HeatSolution::new(value, vec![])?,
                Profile::Step { .. } => {
                    return Err(Error::Config("the heat reference needs a cosine or constant profile".into()))
                }
            };
            if !cfg.model.beta.is_constant_one() {
                return Err(Error::Config("the heat reference requires beta = 1".into()));
            }
            return Ok(Self {
                heat: Some(heat),
                pde: None,
                label: "heat".into(),
            });
        }
        let phi = potential(&cfg.model.beta, cfg.pde.phi)?;
        let rho0 = initial_field(&cfg.ensemble.profile, cfg.pde.cells)?;
        let sol = solve(&rho0, &cfg.ensemble.times, &phi, &solver_params(cfg))?;
        Ok(Self {
            heat: None,
            pde: Some(sol.outputs),
            label: format!("pde[K={},{}]", cfg.pde.cells, phi.describe()),
        })
    }

    pub fn at(&self, time_index: usize, time: f64, cells: usize) -> Result<DensityField> {
        if let Some(h) = &self.heat {
            return Ok(h.field(time, cells));
        }
        let fields = self.pde.as_ref().expect("pde reference");
        fields[time_index].1.restrict(cells).map_err(|_| {
            Error::Config(format!(
                "pde.cells = {} is not a multiple of the {cells} coarse cells",
                fields[time_index].1.len()
            ))
        })
    }
}

pub fn converge_report(cfg: &ExperimentConfig, dir: &Path, audit: bool) -> Result<ComparisonReport> {
    if cfg.model.sizes.len() < 2 {
        return Err(Error::Config("converge needs at least two model sizes".into()));
    }
    let reference = ReferenceFields::build(cfg)?;
    let mut rows = Vec::new();
    let mut csv = String::from("n,time,cell,ensemble,stderr,reference\n");
    for &n in &cfg.model.sizes {
        let (spec, profile) = run_ensemble(cfg, dir, n, audit)?;
        for (ti, &t) in profile.times.iter().enumerate() {
            let mean = &profile.mean[ti];
            let target = reference.at(ti, t, mean.len())?;
            for (i, ((m, s), r)) in mean.cells().iter().zip(&profile.stderr[ti]).zip(target.cells()).enumerate() {
                writeln!(csv, "{n},{t},{i},{m},{s},{r}").unwrap();
            }
            rows.push(ComparisonRow {
                n,
                ell: spec.params.ell,
                time: t,
                distance: distance(mean, &target, cfg.comparison.norm)?,
                stderr: norm_of(&profile.stderr[ti], cfg.comparison.norm),
            });
        }
    }
    write_file(&dir.join("profiles.csv"), &csv)?;
    Ok(ComparisonReport {
        norm: cfg.comparison.norm,
        tolerance: cfg.comparison.tolerance,
        rows,
    })
}

pub fn cmd_converge(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let dir = start(cfg)?;
    let t0 = Instant::now();
    let report = converge_report(cfg, &dir, opts.debug_audit)?;
    write_file(&dir.join("converge.csv"), &report.to_csv())?;
    let passed = report.passed();
    let final_distance = report.final_distance().unwrap_or(f64::NAN);
    let meta = Metadata::new()
        .with("beta", &cfg.model.beta)
        .with("norm", report.norm)
        .with("tolerance", report.tolerance)
        .with("monotone", report.monotone())
        .with("final_distance", final_distance)
        .with("passed", passed)
        .with("wall_time_s", t0.elapsed().as_secs_f64());
    write_file(&dir.join("converge.meta"), &meta.render())?;
    let mut lines: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("N={} ell={} t={} d={:.5} stderr={:.5}", r.n, r.ell, r.time, r.distance, r.stderr))
        .collect();
    lines.push(format!(
        "converge: {} distance {final_distance:.5} (tol {}), monotone {}: {}",
        report.norm,
        report.tolerance,
        report.monotone(),
        if passed { "pass" } else { "FAIL" }
    ));
    finish(dir, passed, lines)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub ell: usize,
    pub events: u64,
    pub wall_s: f64,
    pub refresh_nodes: usize,
    pub audit_passed: bool,
}

impl BenchRow {
    pub fn events_per_second(&self) -> f64 {
        if self.wall_s > 0.0 {
            self.events as f64 / self.wall_s
        } else {
            0.0
        }
    }

    pub fn ns_per_event(&self) -> f64 {
        if self.events > 0 {
            self.wall_s * 1e9 / self.events as f64
        } else {
            0.0
        }
    }
}

/// Time `events` steps from a Bernoulli configuration, then audit.
pub fn bench_run(params: ModelParams, density: f64, events: u64, seed: u64, audit: bool) -> Result<BenchRow> {
    let n = params.n;
    let ell = params.ell;
    let model = Arc::new(Model::new(params)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = sample_initial(|_| density, n, &mut rng)?;
    let mut state = SimState::new(model, cfg, rng)?;
    state.set_audit_interval(audit.then_some(AUDIT_INTERVAL));
    let t0 = Instant::now();
    for _ in 0..events {
        if state.step()?.is_none() {
            break;
        }
    }
    let wall_s = t0.elapsed().as_secs_f64();
    state.audit()?;
    Ok(BenchRow {
        n,
        ell,
        events: state.events(),
        wall_s,
        refresh_nodes: (2 * ell + 3).min(n),
        audit_passed: true,
    })
}

pub fn cmd_bench(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome> {
    let dir = start(cfg)?;
    let b = &cfg.bench;
    let mut rows = Vec::new();
    let first = cfg.model.params(b.sizes[0]).or_else(|_| Ok::<_, Error>(ModelParams::new(b.sizes[0], 1, cfg.model.beta.clone())))?;
    rows.push(("empty", bench_run(first, 0.0, b.events, cfg.ensemble.master_seed, opts.debug_audit)?));
    for &n in &b.sizes {
        let params = ModelParams::new(n, cfg.model.window.window(n), cfg.model.beta.clone());
        rows.push(("bernoulli", bench_run(params, b.density, b.events, cfg.ensemble.master_seed, opts.debug_audit)?));
    }
    let mut csv = String::from("start,n,ell,events,wall_s,events_per_s,ns_per_event,refresh_nodes,audit\n");
    let mut lines = Vec::new();
    for (kind, r) in &rows {
        writeln!(
            csv,
            "{kind},{},{},{},{:.6},{:.1},{:.1},{},{}",
            r.n,
            r.ell,
            r.events,
            r.wall_s,
            r.events_per_second(),
            r.ns_per_event(),
            r.refresh_nodes,
            if r.audit_passed { "pass" } else { "fail" }
        )
        .unwrap();
        lines.push(format!(
            "bench {kind}: N={} ell={} events={} {:.0} events/s {:.0} ns/event refresh {} nodes audit {}",
            r.n,
            r.ell,
            r.events,
            r.events_per_second(),
            r.ns_per_event(),
            r.refresh_nodes,
            if r.audit_passed { "pass" } else { "fail" }
        ));
    }
    write_file(&dir.join("bench.csv"), &csv)?;
    finish(dir, true, lines)
}
