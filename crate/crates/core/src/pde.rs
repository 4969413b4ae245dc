//! Conservative explicit finite differences for `d_t rho = d_uu Phi(rho)` on the
//! unit torus, the analytic heat reference and the weak-formulation residual.

use std::f64::consts::PI;

use crate::bernstein::{PolynomialTable, PHI_LIMIT_TOL};
use crate::beta::BetaFunction;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Cell-averaged density on `K` uniform cells `[i/K, (i+1)/K)` of the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    cells: Vec<f64>,
}

impl DensityField {
    pub fn new(cells: Vec<f64>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Domain("density field needs at least one cell".into()));
        }
        if let Some(v) = cells.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!("density {v} outside [0, 1]")));
        }
        Ok(Self { cells })
    }

    /// Midpoint samples of `profile`.
    pub fn from_profile<F: Fn(f64) -> f64>(k: usize, profile: F) -> Result<Self> {
        Self::new((0..k).map(|i| profile((i as f64 + 0.5) / k as f64)).collect())
    }

    pub fn constant(k: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; k])
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn du(&self) -> f64 {
        1.0 / self.cells.len() as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.du()
    }

    /// `int rho du`.
    pub fn mass(&self) -> f64 {
        self.cells.iter().sum::<f64>() * self.du()
    }

    /// Average groups of cells down to `k` coarse cells (`k` must divide `len`).
    pub fn restrict(&self, k: usize) -> Result<DensityField> {
        if k == 0 || !self.len().is_multiple_of(k) {
            return Err(Error::Domain(format!(
                "cannot restrict {} cells onto {k}",
                self.len()
            )));
        }
        let group = self.len() / k;
        Ok(DensityField {
            cells: self
                .cells
                .chunks(group)
                .map(|c| c.iter().sum::<f64>() / group as f64)
                .collect(),
        })
    }

    /// `<rho, G> = du sum_i rho_i G(u_i)`.
    pub fn pair<G: Fn(f64) -> f64>(&self, test: G) -> f64 {
        let du = self.du();
        self.cells
            .iter()
            .enumerate()
            .map(|(i, r)| r * test(self.center(i)))
            .sum::<f64>()
            * du
    }

    /// Amplitude `a` in `rho ~ m + a cos(2 pi k u) + ...`.
    pub fn cosine_amplitude(&self, k: u32) -> f64 {
        2.0 * self.pair(|u| (2.0 * PI * k as f64 * u).cos())
    }

    pub fn min(&self) -> f64 {
        self.cells.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.cells.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// An increasing `Phi: [0,1] -> R` with `Phi(0) = 0`.
pub trait Potential: Send + Sync {
    fn phi(&self, rho: f64) -> f64;
    /// Upper bound of `Phi'` used by the CFL restriction.
    fn max_slope(&self) -> f64;
    fn describe(&self) -> String;
}

/// `Phi(rho) = rho`, the heat equation.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearPotential;

impl Potential for LinearPotential {
    fn phi(&self, rho: f64) -> f64 {
        rho
    }
    fn max_slope(&self) -> f64 {
        1.0
    }
    fn describe(&self) -> String {
        "linear".into()
    }
}

/// Default number of table intervals.
pub const TABLE_INTERVALS: usize = 4096;

/// Cubic Hermite interpolation of `Phi` through exact node values and slopes.
#[derive(Clone, Debug)]
pub struct TabulatedPotential {
    values: Vec<f64>,
    slopes: Vec<f64>,
    max_slope: f64,
    label: String,
}

impl TabulatedPotential {
    pub fn from_nodes(values: Vec<f64>, slopes: Vec<f64>, label: String) -> Result<Self> {
        if values.len() < 2 || values.len() != slopes.len() {
            return Err(Error::Parameter("potential table needs matching node arrays".into()));
        }
        if slopes.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Parameter("potential must be strictly increasing".into()));
        }
        let max_slope = slopes.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            values,
            slopes,
            max_slope,
            label,
        })
    }

    /// `Phi_beta(rho) = int_0^rho beta`, accumulated interval by interval.
    pub fn limit(beta: &BetaFunction) -> Result<Self> {
        let m = TABLE_INTERVALS;
        let h = 1.0 / m as f64;
        let mut values = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for i in 0..m {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            acc += adaptive_simpson(|u| beta.eval(u), a, b, PHI_LIMIT_TOL / m as f64);
            values.push(acc);
        }
        let slopes = (0..=m).map(|i| beta.eval(i as f64 * h)).collect();
        Self::from_nodes(values, slopes, format!("limit[{beta}]"))
    }

    /// `Phi_{beta,L}`, whose derivative is the Bezier sum of degree `L`.
    pub fn discrete(beta: &BetaFunction, degree: usize) -> Result<Self> {
        let table = PolynomialTable::new(beta, degree)?;
        let m = TABLE_INTERVALS;
        let grid = (0..=m).map(|i| i as f64 / m as f64);
        let values = grid.clone().map(|u| table.phi(u)).collect();
        let slopes = grid.map(|u| table.bezier(u)).collect();
        Self::from_nodes(values, slopes, format!("discrete[L={degree},{beta}]"))
    }
}

impl Potential for TabulatedPotential {
    fn phi(&self, rho: f64) -> f64 {
        let m = self.values.len() - 1;
        let x = rho.clamp(0.0, 1.0) * m as f64;
        let i = (x as usize).min(m - 1);
        let t = x - i as f64;
        let h = 1.0 / m as f64;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[i]
            + h10 * h * self.slopes[i]
            + h01 * self.values[i + 1]
            + h11 * h * self.slopes[i + 1]
    }
    fn max_slope(&self) -> f64 {
        self.max_slope
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub cells: usize,
    /// CFL safety factor in `(0, 1]`.
    pub cfl: f64,
    /// Record a snapshot every this many steps.
    pub snapshot_stride: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            cells: 256,
            cfl: 0.9,
            snapshot_stride: 64,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.cells < 3 {
            return Err(Error::Parameter("solver needs at least 3 cells".into()));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Parameter(format!("CFL factor {} outside (0, 1]", self.cfl)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Parameter("snapshot stride must be positive".into()));
        }
        Ok(())
    }

    pub fn time_step<P: Potential + ?Sized>(&self, potential: &P) -> f64 {
        let du = 1.0 / self.cells as f64;
        self.cfl * du * du / (2.0 * potential.max_slope())
    }
}

/// Largest stable step for `du` and `potential`.
pub fn cfl_limit<P: Potential + ?Sized>(du: f64, potential: &P) -> f64 {
    du * du / (2.0 * potential.max_slope())
}

/// One flux-form step `rho_i += dt/du^2 (Phi_{i+1} - 2 Phi_i + Phi_{i-1})`.
pub fn step_explicit<P: Potential + ?Sized>(
    field: &DensityField,
    dt: f64,
    potential: &P,
) -> Result<DensityField> {
    let du = field.du();
    let limit = cfl_limit(du, potential);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "time step {dt} violates the CFL bound {limit}"
        )));
    }
    let mut out = field.clone();
    advance(&mut out.cells, &mut Vec::new(), dt, du, potential);
    Ok(out)
}

fn advance<P: Potential + ?Sized>(cells: &mut [f64], phi: &mut Vec<f64>, dt: f64, du: f64, potential: &P) {
    let k = cells.len();
    phi.clear();
    phi.extend(cells.iter().map(|&r| potential.phi(r)));
    let lambda = dt / (du * du);
    // flux F_{i+1/2} = Phi_{i+1} - Phi_i; rho_i += lambda (F_{i+1/2} - F_{i-1/2})
    let mut left_flux = phi[0] - phi[k - 1];
    for i in 0..k {
        let right_flux = phi[(i + 1) % k] - phi[i];
        cells[i] += lambda * (right_flux - left_flux);
        left_flux = right_flux;
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Fields at the requested output times, in the order given.
    pub outputs: Vec<(f64, DensityField)>,
    /// Every `snapshot_stride` steps, at `t = 0`, and at each output time.
    pub snapshots: Vec<(f64, DensityField)>,
    pub steps: usize,
    pub dt: f64,
}

/// Integrate from `rho0` through the sorted output `times`. Steps are shortened
/// so that every output time is hit exactly.
pub fn solve<P: Potential + ?Sized>(
    rho0: &DensityField,
    times: &[f64],
    potential: &P,
    params: &SolverParams,
) -> Result<Solution> {
    params.validate()?;
    if rho0.len() != params.cells {
        return Err(Error::Parameter(format!(
            "initial field has {} cells, solver expects {}",
            rho0.len(),
            params.cells
        )));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("output times must be sorted and nonnegative".into()));
    }
    let dt_max = params.time_step(potential);
    let du = rho0.du();
    let mut cells = rho0.cells.clone();
    let mut scratch = Vec::with_capacity(cells.len());
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut outputs = Vec::with_capacity(times.len());
    let mut snapshots = vec![(0.0, rho0.clone())];
    for &target in times {
        while t < target {
            let remaining = target - t;
            let (dt, last) = if remaining <= dt_max * (1.0 + 1e-12) {
                (remaining, true)
            } else {
                (dt_max, false)
            };
            advance(&mut cells, &mut scratch, dt, du, potential);
            steps += 1;
            t = if last { target } else { t + dt };
            if steps.is_multiple_of(params.snapshot_stride) && t < target {
                snapshots.push((t, DensityField { cells: cells.clone() }));
            }
        }
        let field = DensityField { cells: cells.clone() };
        if snapshots.last().map(|s| s.0) != Some(t) {
            snapshots.push((t, field.clone()));
        }
        outputs.push((target, field));
    }
    Ok(Solution {
        outputs,
        snapshots,
        steps,
        dt: dt_max,
    })
}

/// `mean + sum_k a_k exp(-4 pi^2 k^2 t) cos(2 pi k u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatSolution {
    mean: f64,
    modes: Vec<(u32, f64)>,
}

impl HeatSolution {
    pub fn new(mean: f64, modes: Vec<(u32, f64)>) -> Result<Self> {
        let spread: f64 = modes.iter().map(|m| m.1.abs()).sum();
        if mean - spread < 0.0 || mean + spread > 1.0 {
            return Err(Error::Domain(format!(
                "heat profile with mean {mean} and total amplitude {spread} leaves [0, 1]"
            )));
        }
        if modes.iter().any(|m| m.0 == 0) {
            return Err(Error::Domain("mode 0 belongs in the mean".into()));
        }
        Ok(Self { mean, modes })
    }

    pub fn value(&self, t: f64, u: f64) -> f64 {
        self.mean
            + self
                .modes
                .iter()
                .map(|&(k, a)| {
                    let w = 2.0 * PI * k as f64;
                    a * (-w * w * t).exp() * (w * u).cos()
                })
                .sum::<f64>()
    }

    /// Exact average over `[a, b]`.
    pub fn cell_average(&self, t: f64, a: f64, b: f64) -> f64 {
        self.mean
            + self
                .modes
                .iter()
                .map(|&(k, amp)| {
                    let w = 2.0 * PI * k as f64;
                    amp * (-w * w * t).exp() * ((w * b).sin() - (w * a).sin()) / (w * (b - a))
                })
                .sum::<f64>()
    }

    /// Exact averages on `cells` uniform cells.
    pub fn field(&self, t: f64, cells: usize) -> DensityField {
        let h = 1.0 / cells as f64;
        DensityField {
            cells: (0..cells)
                .map(|i| self.cell_average(t, i as f64 * h, (i + 1) as f64 * h).clamp(0.0, 1.0))
                .collect(),
        }
    }
}

/// `heat_analytic(modes, t, u)` with the given mean.
pub fn heat_analytic(mean: f64, modes: &[(u32, f64)], t: f64, u: f64) -> Result<f64> {
    Ok(HeatSolution::new(mean, modes.to_vec())?.value(t, u))
}

/// A smooth space-time test function with its derivatives.
pub trait TestFunction {
    fn value(&self, s: f64, u: f64) -> f64;
    fn d_time(&self, s: f64, u: f64) -> f64;
    fn d_space2(&self, s: f64, u: f64) -> f64;
    fn name(&self) -> String;
}

/// Time-independent Fourier test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourierTest {
    One,
    Cos(u32),
    Sin(u32),
}

impl FourierTest {
    /// `{1, cos 2 pi u, sin 2 pi u, cos 4 pi u}`.
    pub fn standard_set() -> [FourierTest; 4] {
        [FourierTest::One, FourierTest::Cos(1), FourierTest::Sin(1), FourierTest::Cos(2)]
    }
}

impl TestFunction for FourierTest {
    fn value(&self, _s: f64, u: f64) -> f64 {
        match *self {
            FourierTest::One => 1.0,
            FourierTest::Cos(k) => (2.0 * PI * k as f64 * u).cos(),
            FourierTest::Sin(k) => (2.0 * PI * k as f64 * u).sin(),
        }
    }
    fn d_time(&self, _s: f64, _u: f64) -> f64 {
        0.0
    }
    fn d_space2(&self, s: f64, u: f64) -> f64 {
        match *self {
            FourierTest::One => 0.0,
            FourierTest::Cos(k) | FourierTest::Sin(k) => {
                let w = 2.0 * PI * k as f64;
                -w * w * self.value(s, u)
            }
        }
    }
    fn name(&self) -> String {
        match *self {
            FourierTest::One => "1".into(),
            FourierTest::Cos(k) => format!("cos({}pi u)", 2 * k),
            FourierTest::Sin(k) => format!("sin({}pi u)", 2 * k),
        }
    }
}

/// `<rho_t, G_t> - <rho0, G_0> - int_0^t {<rho_s, d_s G_s> + <Phi(rho_s), d_uu G_s>} ds`,
/// with the time integral taken by the trapezoid rule over `snapshots`
/// (which must start at `s = 0` and contain `t`).
pub fn weak_residual<G: TestFunction + ?Sized, P: Potential + ?Sized>(
    snapshots: &[(f64, DensityField)],
    rho0: &DensityField,
    test: &G,
    t: f64,
    potential: &P,
) -> Result<f64> {
    let used: Vec<&(f64, DensityField)> = snapshots.iter().take_while(|s| s.0 <= t).collect();
    match (used.first(), used.last()) {
        (Some(first), Some(last)) if first.0 == 0.0 && last.0 == t => {}
        _ => {
            return Err(Error::Domain(format!(
                "snapshots must start at 0 and include t = {t}"
            )))
        }
    }
    let integrand = |s: f64, f: &DensityField| {
        let du = f.du();
        f.cells
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let u = f.center(i);
                r * test.d_time(s, u) + potential.phi(r) * test.d_space2(s, u)
            })
            .sum::<f64>()
            * du
    };
    let mut integral = 0.0;
    let mut prev = (used[0].0, integrand(used[0].0, &used[0].1));
    for snap in &used[1..] {
        let cur = integrand(snap.0, &snap.1);
        integral += 0.5 * (snap.0 - prev.0) * (prev.1 + cur);
        prev = (snap.0, cur);
    }
    let last = &used[used.len() - 1].1;
    Ok(last.pair(|u| test.value(t, u)) - rho0.pair(|u| test.value(0.0, u)) - integral)
}
