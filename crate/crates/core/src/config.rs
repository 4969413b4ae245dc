//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beta::{BetaFunction, BetaSpec};
use crate::compare::Norm;
use crate::error::{Error, Result};
use crate::exact::MAX_GRADIENT_SIZE;
use crate::kmc::Profile;
use crate::model::{default_window, ExclusionRule, ModelParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub ensemble: EnsembleBlock,
    #[serde(default)]
    pub pde: PdeBlock,
    #[serde(default)]
    pub comparison: ComparisonBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub bench: BenchBlock,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            output_dir: default_output_dir(),
            model: ModelBlock::default(),
            ensemble: EnsembleBlock::default(),
            pde: PdeBlock::default(),
            comparison: ComparisonBlock::default(),
            verify: VerifyBlock::default(),
            bench: BenchBlock::default(),
        }
    }
}

/// Window size rule: `ceil(N^exponent)` or a fixed size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindowRule {
    Exponent(f64),
    Fixed(usize),
}

impl Default for WindowRule {
    fn default() -> Self {
        WindowRule::Exponent(0.5)
    }
}

impl WindowRule {
    pub fn window(&self, n: usize) -> usize {
        match *self {
            WindowRule::Exponent(e) => default_window(n, e),
            WindowRule::Fixed(ell) => ell,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub window: WindowRule,
    pub beta: BetaFunction,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            sizes: vec![64, 128, 256],
            window: WindowRule::default(),
            beta: BetaFunction::constant_one(),
        }
    }
}

impl ModelBlock {
    pub fn params(&self, n: usize) -> Result<ModelParams> {
        let p = ModelParams::new(n, self.window.window(n), self.beta.clone());
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleBlock {
    pub replicas: usize,
    pub times: Vec<f64>,
    pub epsilon: f64,
    pub master_seed: u64,
    pub profile: Profile,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        Self {
            replicas: 200,
            times: vec![0.01],
            epsilon: 1.0 / 16.0,
            master_seed: 2024,
            profile: Profile::Cosine {
                mean: 0.5,
                amplitude: 0.25,
                mode: 1,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiSource {
    #[default]
    Limit,
    Discrete {
        degree: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeBlock {
    pub cells: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub phi: PhiSource,
    /// Output times; the ensemble times when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub weak_residual: bool,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_stride() -> usize {
    64
}

impl Default for PdeBlock {
    fn default() -> Self {
        Self {
            cells: 512,
            cfl: default_cfl(),
            snapshot_stride: default_stride(),
            phi: PhiSource::Limit,
            times: None,
            weak_residual: false,
        }
    }
}

/// What the ensemble is compared against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Analytic heat solution when `beta = 1` and the profile is a cosine or constant, else the PDE.
    #[default]
    Auto,
    Heat,
    Pde,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonBlock {
    #[serde(default)]
    pub norm: Norm,
    pub tolerance: f64,
    #[serde(default)]
    pub reference: Reference,
}

impl Default for ComparisonBlock {
    fn default() -> Self {
        Self {
            norm: Norm::L1,
            tolerance: 0.02,
            reference: Reference::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    pub sizes: Vec<usize>,
    pub windows: Vec<usize>,
    pub betas: Vec<BetaFunction>,
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub rule: ExclusionRule,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    7
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            sizes: vec![8, 10],
            windows: vec![3, 4],
            betas: BetaFunction::presets().to_vec(),
            alphas: (1..=9).map(|i| i as f64 / 10.0).collect(),
            rule: ExclusionRule::Consistent,
            seed: default_seed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchBlock {
    pub sizes: Vec<usize>,
    pub events: u64,
    #[serde(default = "default_density")]
    pub density: f64,
}

fn default_density() -> f64 {
    0.5
}

impl Default for BenchBlock {
    fn default() -> Self {
        Self {
            sizes: vec![256, 1024, 4096],
            events: 200_000,
            density: default_density(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.model.sizes.is_empty() {
            return bad("model.sizes is empty".into());
        }
        for &n in &self.model.sizes {
            self.model.params(n).map_err(|e| Error::Config(format!("model size {n}: {e}")))?;
        }
        if let WindowRule::Exponent(e) = self.model.window {
            if !(e > 0.0 && e < 1.0) {
                return bad(format!("window exponent {e} outside (0, 1)"));
            }
        }
        let ens = &self.ensemble;
        if ens.replicas < 2 {
            return bad(format!("ensemble.replicas = {} (need at least 2)", ens.replicas));
        }
        check_times("ensemble.times", &ens.times)?;
        if !(ens.epsilon > 0.0 && ens.epsilon <= 1.0) {
            return bad(format!("ensemble.epsilon = {} outside (0, 1]", ens.epsilon));
        }
        ens.profile.validate().map_err(|e| Error::Config(e.to_string()))?;
        let pde = &self.pde;
        if pde.cells < 3 {
            return bad("pde.cells must be at least 3".into());
        }
        if !(pde.cfl > 0.0 && pde.cfl <= 1.0) {
            return bad(format!("pde.cfl = {} outside (0, 1]", pde.cfl));
        }
        if pde.snapshot_stride == 0 {
            return bad("pde.snapshot_stride must be positive".into());
        }
        if let Some(t) = &pde.times {
            check_times("pde.times", t)?;
        }
        if let PhiSource::Discrete { degree } = pde.phi {
            if degree == 0 {
                return bad("pde.phi.degree must be positive".into());
            }
        }
        if !(self.comparison.tolerance >= 0.0) {
            return bad("comparison.tolerance must be nonnegative".into());
        }
        let v = &self.verify;
        if v.sizes.is_empty() || v.windows.is_empty() || v.betas.is_empty() || v.alphas.is_empty() {
            return bad("verify matrix is empty".into());
        }
        if let Some(n) = v.sizes.iter().find(|n| **n > 12 || **n > MAX_GRADIENT_SIZE) {
            return bad(format!("verify size {n} exceeds 12"));
        }
        if let Some(a) = v.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return bad(format!("verify alpha {a} outside (0, 1)"));
        }
        if self.bench.sizes.is_empty() {
            return bad("bench.sizes is empty".into());
        }
        if !(0.0..=1.0).contains(&self.bench.density) {
            return bad("bench.density outside [0, 1]".into());
        }
        Ok(())
    }

    /// PDE output times.
    pub fn pde_times(&self) -> Vec<f64> {
        self.pde.times.clone().unwrap_or_else(|| self.ensemble.times.clone())
    }

    /// True when the analytic heat solution is the exact reference.
    pub fn heat_reference(&self) -> bool {
        match self.comparison.reference {
            Reference::Heat => true,
            Reference::Pde => false,
            Reference::Auto => {
                self.model.beta.is_constant_one()
                    && matches!(
                        self.ensemble.profile,
                        Profile::Cosine { .. } | Profile::Constant { .. }
                    )
            }
        }
    }

    pub fn beta_spec(&self) -> &BetaSpec {
        self.model.beta.spec()
    }
}

fn check_times(name: &str, times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{name} must be increasing and nonnegative")));
    }
    Ok(())
}
