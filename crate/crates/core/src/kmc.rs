//! Event-driven simulation of the diffusively accelerated process, local
//! equilibrium initialization, coarse-graining and replica ensembles.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{wrap, Configuration};
use crate::model::{Model, ModelParams};
use crate::parallel::{kahan_sum, map_range, Execution};
use crate::pde::DensityField;

/// Events between exact sampler rebuilds.
pub const REBUILD_INTERVAL: u64 = 1 << 20;
/// Events between rate-cache audits when auditing is on.
pub const AUDIT_INTERVAL: u64 = 1 << 16;
/// Absolute tolerance of the rate-cache audit.
pub const AUDIT_TOL: f64 = 1e-9;

/// Audit interval used when none is requested explicitly.
pub fn default_audit_interval() -> Option<u64> {
    cfg!(debug_assertions).then_some(AUDIT_INTERVAL)
}

/// Complete binary tree of partial sums over the node rates.
#[derive(Clone, Debug)]
pub struct SumTree {
    size: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(weights: &[f64]) -> Self {
        let size = weights.len().next_power_of_two().max(1);
        let mut tree = Self {
            size,
            nodes: vec![0.0; 2 * size],
        };
        tree.nodes[size..size + weights.len()].copy_from_slice(weights);
        tree.rebuild();
        tree
    }

    /// Recompute every internal node from the leaves.
    pub fn rebuild(&mut self) {
        for i in (1..self.size).rev() {
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1.min(self.nodes.len() - 1)]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.nodes[self.size + i]
    }

    pub fn update(&mut self, i: usize, w: f64) {
        let mut k = self.size + i;
        self.nodes[k] = w;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Index `i` with `sum_{j<i} w_j <= u < sum_{j<=i} w_j`; never lands on a zero weight.
    pub fn sample(&self, mut u: f64) -> usize {
        if self.size == 1 {
            return 0;
        }
        let mut k = 1;
        while k < self.size {
            let left = self.nodes[2 * k];
            let right = self.nodes[2 * k + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        k - self.size
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    /// Macroscopic time elapsed since the previous event.
    pub dt: f64,
    /// Left site of the exchanged bond.
    pub node: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditReport {
    pub events: u64,
    pub max_rate_error: f64,
    pub total_error: f64,
}

/// One trajectory of the process run at speed `N^2`.
#[derive(Clone, Debug)]
pub struct SimState {
    model: Arc<Model>,
    cfg: Configuration,
    rates: Vec<f64>,
    tree: SumTree,
    clock: f64,
    rng: ChaCha8Rng,
    events: u64,
    audit_interval: Option<u64>,
    last_audit: Option<AuditReport>,
}

pub fn build_state(cfg: Configuration, params: ModelParams, seed: u64) -> Result<SimState> {
    let model = Arc::new(Model::new(params)?);
    SimState::new(model, cfg, ChaCha8Rng::seed_from_u64(seed))
}

impl SimState {
    pub fn new(model: Arc<Model>, cfg: Configuration, rng: ChaCha8Rng) -> Result<Self> {
        if cfg.len() != model.n() {
            return Err(Error::Parameter(format!(
                "configuration has {} sites, model expects {}",
                cfg.len(),
                model.n()
            )));
        }
        let rates: Vec<f64> = (0..model.n()).map(|x| model.rate_at(&cfg, x)).collect();
        let tree = SumTree::new(&rates);
        Ok(Self {
            model,
            cfg,
            rates,
            tree,
            clock: 0.0,
            rng,
            events: 0,
            audit_interval: default_audit_interval(),
            last_audit: None,
        })
    }

    pub fn set_audit_interval(&mut self, interval: Option<u64>) {
        self.audit_interval = interval.filter(|i| *i > 0);
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn configuration(&self) -> &Configuration {
        &self.cfg
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn last_audit(&self) -> Option<AuditReport> {
        self.last_audit
    }

    pub fn is_frozen(&self) -> bool {
        !(self.tree.total() > 0.0)
    }

    /// Draw the next holding time and bond, apply the exchange and advance the clock.
    /// Returns `None` without touching the state when no bond can fire.
    pub fn step(&mut self) -> Result<Option<Event>> {
        let Some((dt, node)) = self.draw() else {
            return Ok(None);
        };
        self.clock += dt;
        self.apply(node)?;
        Ok(Some(Event { dt, node }))
    }

    /// Advance to macroscopic time `t`. A holding time overshooting `t` is
    /// discarded, which is exact by memorylessness.
    pub fn run_until(&mut self, t: f64) -> Result<()> {
        if t < self.clock {
            return Err(Error::Domain(format!(
                "cannot run back from {} to {t}",
                self.clock
            )));
        }
        while let Some((dt, node)) = self.draw() {
            if self.clock + dt > t {
                break;
            }
            self.clock += dt;
            self.apply(node)?;
        }
        self.clock = t;
        Ok(())
    }

    fn draw(&mut self) -> Option<(f64, usize)> {
        let total = self.tree.total();
        if !(total > 0.0) {
            return None;
        }
        let n = self.model.n() as f64;
        let e: f64 = self.rng.sample(Exp1);
        let dt = e / (n * n * total);
        let u = self.rng.random::<f64>() * total;
        Some((dt, self.tree.sample(u)))
    }

    fn apply(&mut self, node: usize) -> Result<()> {
        let n = self.model.n();
        let ell = self.model.ell() as isize;
        self.cfg.exchange_in_place(node, (node + 1) % n);
        let x = node as isize;
        let span = (2 * ell + 3) as usize;
        for k in 0..span.min(n) {
            let y = wrap(n, x - ell - 1 + k as isize);
            let r = self.model.rate_at(&self.cfg, y);
            self.rates[y] = r;
            self.tree.update(y, r);
        }
        self.events += 1;
        if self.events.is_multiple_of(REBUILD_INTERVAL) {
            self.tree.rebuild();
        }
        if let Some(every) = self.audit_interval {
            if self.events.is_multiple_of(every) {
                self.audit()?;
            }
        }
        Ok(())
    }

    /// Compare the cached rates and sampler total with a full recomputation.
    pub fn audit(&mut self) -> Result<AuditReport> {
        let mut max_rate_error = 0.0f64;
        for x in 0..self.model.n() {
            let exact = self.model.rate_at(&self.cfg, x);
            max_rate_error = max_rate_error.max((exact - self.rates[x]).abs());
        }
        let exact_total = kahan_sum(self.rates.iter().copied());
        let total_error = (exact_total - self.tree.total()).abs() / exact_total.max(1.0);
        let report = AuditReport {
            events: self.events,
            max_rate_error,
            total_error,
        };
        self.last_audit = Some(report);
        if max_rate_error > AUDIT_TOL || total_error > AUDIT_TOL {
            return Err(Error::Audit(format!(
                "after {} events: rate error {max_rate_error:e}, total error {total_error:e}",
                self.events
            )));
        }
        Ok(report)
    }
}

/// Initial density profiles on the unit torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `mean + amplitude cos(2 pi mode u)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "one")]
        mode: u32,
    },
    /// `high` on `[0, split)`, `low` elsewhere.
    Step {
        high: f64,
        low: f64,
        #[serde(default = "half")]
        split: f64,
    },
}

fn one() -> u32 {
    1
}

fn half() -> f64 {
    0.5
}

impl Profile {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Cosine {
                mean,
                amplitude,
                mode,
            } => mean + amplitude * (2.0 * PI * mode as f64 * u).cos(),
            Profile::Step { high, low, split } => {
                if u.rem_euclid(1.0) < split {
                    high
                } else {
                    low
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = match *self {
            Profile::Constant { value } => (value, value),
            Profile::Cosine {
                mean, amplitude, ..
            } => (mean - amplitude.abs(), mean + amplitude.abs()),
            Profile::Step { high, low, split } => {
                if !(0.0..=1.0).contains(&split) {
                    return Err(Error::Domain(format!("step split {split} outside [0, 1]")));
                }
                (high.min(low), high.max(low))
            }
        };
        if !(lo >= 0.0 && hi <= 1.0) {
            return Err(Error::Domain(format!("profile {self:?} leaves [0, 1]")));
        }
        Ok(())
    }
}

/// Bernoulli product configuration with marginals `profile(x / N)`.
pub fn sample_initial<F, R>(profile: F, n: usize, rng: &mut R) -> Result<Configuration>
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    let probs: Vec<f64> = (0..n).map(|x| profile(x as f64 / n as f64)).collect();
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain(format!("profile value {p} outside [0, 1]")));
    }
    Ok(Configuration::from_occupations(
        probs.into_iter().map(|p| rng.random::<f64>() < p),
    ))
}

/// Box width `k / N` used for `eps`, with `k` the divisor of `N` nearest to `eps N`.
pub fn snap_epsilon(n: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("box width {eps} outside (0, 1]")));
    }
    let target = eps * n as f64;
    let best = (1..=n)
        .filter(|k| n.is_multiple_of(*k))
        .min_by(|a, b| {
            let da = (*a as f64 - target).abs();
            let db = (*b as f64 - target).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(n);
    Ok(best)
}

/// Box averages of `cfg` over `[i eps, (i+1) eps)`; returns the field and the snapped width.
pub fn coarse_density(cfg: &Configuration, eps: f64) -> Result<(DensityField, f64)> {
    let n = cfg.len();
    let k = snap_epsilon(n, eps)?;
    let cells = (0..n / k)
        .map(|i| cfg.count_run(i * k, k) as f64 / k as f64)
        .collect();
    Ok((DensityField::new(cells)?, k as f64 / n as f64))
}

/// `(1/N) sum_x |<tau^x eta>_l - <tau^{x+sep} eta>_L|` with boxes `[[0, l-1]]`.
pub fn block_gap_diagnostic(cfg: &Configuration, ell: usize, big_l: usize, separation: usize) -> Result<f64> {
    let n = cfg.len();
    if ell == 0 || big_l == 0 || ell > n || big_l > n {
        return Err(Error::Parameter(format!(
            "block sizes ({ell}, {big_l}) must lie in [1, {n}]"
        )));
    }
    let mut prefix = vec![0usize; 2 * n + 1];
    for i in 0..2 * n {
        prefix[i + 1] = prefix[i] + cfg.get(i % n) as usize;
    }
    let avg = |start: usize, len: usize| {
        let s = start % n;
        (prefix[s + len] - prefix[s]) as f64 / len as f64
    };
    let sum: f64 = (0..n)
        .map(|x| (avg(x, ell) - avg(x + separation, big_l)).abs())
        .sum();
    Ok(sum / n as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub params: ModelParams,
    pub replicas: usize,
    pub times: Vec<f64>,
    pub epsilon: f64,
    pub master_seed: u64,
    pub profile: Profile,
    /// Force the periodic rate-cache audit on.
    pub audit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleProfile {
    pub times: Vec<f64>,
    pub epsilon: f64,
    pub mean: Vec<DensityField>,
    pub stderr: Vec<Vec<f64>>,
    /// Events per replica up to the last time.
    pub events: Vec<u64>,
}

impl EnsembleProfile {
    pub fn total_events(&self) -> u64 {
        self.events.iter().sum()
    }
}

/// RNG for replica `index`: one ChaCha stream per replica under a shared key.
pub fn replica_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

/// Run one replica and return its coarse fields at every time and its event count.
pub fn run_replica(model: &Arc<Model>, spec: &EnsembleSpec, index: usize) -> Result<(Vec<DensityField>, u64)> {
    let mut rng = replica_rng(spec.master_seed, index);
    let cfg = sample_initial(|u| spec.profile.eval(u), model.n(), &mut rng)?;
    let mut state = SimState::new(Arc::clone(model), cfg, rng)?;
    if spec.audit {
        state.set_audit_interval(Some(AUDIT_INTERVAL));
    }
    let mut fields = Vec::with_capacity(spec.times.len());
    for &t in &spec.times {
        state.run_until(t)?;
        fields.push(coarse_density(state.configuration(), spec.epsilon)?.0);
    }
    if spec.audit {
        state.audit()?;
    }
    Ok((fields, state.events()))
}

/// Cellwise mean and standard error over `replicas` independent trajectories.
pub fn ensemble_profile(spec: &EnsembleSpec, exec: Execution) -> Result<EnsembleProfile> {
    if spec.replicas < 2 {
        return Err(Error::Parameter(format!(
            "standard error needs at least 2 replicas, got {}",
            spec.replicas
        )));
    }
    if spec.times.iter().any(|t| !(*t >= 0.0)) || spec.times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("observation times must be sorted and nonnegative".into()));
    }
    spec.profile.validate()?;
    let epsilon = spec.params.n as f64;
    let epsilon = snap_epsilon(spec.params.n, spec.epsilon)? as f64 / epsilon;
    let model = Arc::new(Model::new(spec.params.clone())?);
    let runs = map_range(exec, spec.replicas, |i| run_replica(&model, spec, i));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let m = spec.replicas as f64;
    let cells = runs[0].0.first().map_or(0, |f| f.len());
    let mut mean = Vec::with_capacity(spec.times.len());
    let mut stderr = Vec::with_capacity(spec.times.len());
    for ti in 0..spec.times.len() {
        let mut mu = Vec::with_capacity(cells);
        let mut se = Vec::with_capacity(cells);
        for c in 0..cells {
            let values = runs.iter().map(|r| r.0[ti].cells()[c]);
            let avg = kahan_sum(values.clone()) / m;
            let var = kahan_sum(values.map(|v| (v - avg) * (v - avg))) / (m - 1.0);
            mu.push(avg.clamp(0.0, 1.0));
            se.push((var / m).sqrt());
        }
        mean.push(DensityField::new(mu)?);
        stderr.push(se);
    }
    Ok(EnsembleProfile {
        times: spec.times.clone(),
        epsilon,
        mean,
        stderr,
        events: runs.iter().map(|r| r.1).collect(),
    })
}
