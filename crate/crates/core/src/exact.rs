//! Exact computations on the full state space `{0,1}^N` for small `N`.
//!
//! States are indexed by the integer whose bit `x` is `eta(x)`; measures are
//! dense vectors of length `2^N`. All residuals are max-norms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::Configuration;
use crate::model::{Constraint, Model};
use crate::parallel::{kahan_sum, map_range, Execution};

/// Largest lattice whose full state space we build.
pub const MAX_STATE_SIZE: usize = 20;
/// Largest lattice for the gradient identity scan.
pub const MAX_GRADIENT_SIZE: usize = 14;
/// Largest lattice for the Dirichlet form.
pub const MAX_DIRICHLET_SIZE: usize = 16;

fn check_size(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::Capability(format!(
            "exact enumeration is limited to N <= {limit}, got {n}"
        )));
    }
    Ok(())
}

fn state_count(n: usize) -> usize {
    1usize << n
}

/// Bernoulli product measure `nu_alpha` on `{0,1}^n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductMeasure {
    pub alpha: f64,
    pub n: usize,
}

impl ProductMeasure {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("density {alpha} outside (0, 1)")));
        }
        check_size(n, MAX_STATE_SIZE)?;
        Ok(Self { alpha, n })
    }

    pub fn weight(&self, index: u64) -> f64 {
        let k = index.count_ones() as i32;
        self.alpha.powi(k) * (1.0 - self.alpha).powi(self.n as i32 - k)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..state_count(self.n) as u64).map(|i| self.weight(i)).collect()
    }
}

/// Sparse rate matrix of the exchange dynamics: off-diagonal rates stored per row,
/// diagonal equal to minus the row sum.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    n: usize,
    row_start: Vec<usize>,
    targets: Vec<u32>,
    rates: Vec<f64>,
    diagonal: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    /// Off-diagonal entries `(target, rate)` of the row of state `index`.
    pub fn row(&self, index: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_start[index], self.row_start[index + 1]);
        self.targets[a..b]
            .iter()
            .zip(&self.rates[a..b])
            .map(|(&t, &r)| (t as usize, r))
    }

    pub fn diagonal(&self, index: usize) -> f64 {
        self.diagonal[index]
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.row(from)
            .find(|&(t, _)| t == to)
            .map_or(0.0, |(_, r)| r)
    }

    /// `(Q f)(eta) = sum_eta' q(eta, eta') (f(eta') - f(eta))`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.dimension());
        (0..self.dimension())
            .map(|i| self.row(i).map(|(t, r)| r * (f[t] - f[i])).sum())
            .collect()
    }

    /// `max_eta |sum_eta' Q(eta, eta')|` including the diagonal.
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.dimension())
            .map(|i| (self.row(i).map(|(_, r)| r).sum::<f64>() + self.diagonal[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Whether every transition preserves the particle number.
    pub fn preserves_sectors(&self) -> bool {
        (0..self.dimension()).all(|i| {
            self.row(i)
                .all(|(t, _)| (t as u64).count_ones() == (i as u64).count_ones())
        })
    }

    pub fn min_off_diagonal(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn build_generator(model: &Model, exec: Execution) -> Result<GeneratorMatrix> {
    build_generator_with(model, Constraint::Beta, exec)
}

pub fn build_generator_with(
    model: &Model,
    constraint: Constraint,
    exec: Execution,
) -> Result<GeneratorMatrix> {
    let n = model.n();
    check_size(n, MAX_STATE_SIZE)?;
    if let Constraint::Bernstein(k) = constraint {
        if k > model.ell() {
            return Err(Error::Domain(format!("Bernstein index {k} exceeds window size")));
        }
    }
    let rows: Vec<Vec<(u32, f64)>> = map_range(exec, state_count(n), |i| {
        let eta = Configuration::from_index(n, i as u64);
        let mut row = Vec::new();
        for x in 0..n {
            let r = model
                .constrained_rate(constraint, &eta, x as isize)
                .expect("constraint index checked");
            if r > 0.0 {
                let y = (x + 1) % n;
                let target = i ^ (1 << x) ^ (1 << y);
                row.push((target as u32, r));
            }
        }
        row
    });
    let mut row_start = Vec::with_capacity(rows.len() + 1);
    let mut targets = Vec::new();
    let mut rates = Vec::new();
    let mut diagonal = Vec::with_capacity(rows.len());
    row_start.push(0);
    for row in rows {
        let mut out = 0.0;
        for (t, r) in row {
            targets.push(t);
            rates.push(r);
            out += r;
        }
        diagonal.push(-out);
        row_start.push(targets.len());
    }
    Ok(GeneratorMatrix {
        n,
        row_start,
        targets,
        rates,
        diagonal,
    })
}

/// `max_eta |(nu_alpha Q)(eta)|`.
pub fn stationarity_residual(q: &GeneratorMatrix, alpha: f64) -> Result<f64> {
    let nu = ProductMeasure::new(alpha, q.size())?.weights();
    let mut flow: Vec<f64> = nu.iter().zip(&q.diagonal).map(|(w, d)| w * d).collect();
    for (i, w) in nu.iter().enumerate() {
        for (t, r) in q.row(i) {
            flow[t] += w * r;
        }
    }
    Ok(flow.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// `max |nu(eta) q(eta, eta') - nu(eta') q(eta', eta)|` over transitions.
pub fn detailed_balance_residual(q: &GeneratorMatrix, alpha: f64) -> Result<f64> {
    let nu = ProductMeasure::new(alpha, q.size())?;
    let mut worst: f64 = 0.0;
    for i in 0..q.dimension() {
        for (t, r) in q.row(i) {
            let forward = nu.weight(i as u64) * r;
            let backward = nu.weight(t as u64) * q.rate(t, i);
            worst = worst.max((forward - backward).abs());
        }
    }
    Ok(worst)
}

/// `(r1, r2)`: `r1 = max |J(x) + H(x+1) - H(x)|`, `r2 = max |L pi_0 - (J(-1) - J(0))|`,
/// scanned over all states (and all sites for `r1`).
pub fn gradient_identity_residual(model: &Model, exec: Execution) -> Result<(f64, f64)> {
    let n = model.n();
    check_size(n, MAX_GRADIENT_SIZE)?;
    let per_state = map_range(exec, state_count(n), |i| {
        let eta = Configuration::from_index(n, i as u64);
        let big_h: Vec<f64> = (0..n as isize)
            .map(|x| model.potential_big_h(&eta, x))
            .collect();
        let mut r1: f64 = 0.0;
        for x in 0..n {
            let j = model.current_j(&eta, x as isize);
            r1 = r1.max((j + big_h[(x + 1) % n] - big_h[x]).abs());
        }
        let lhs = model.generator_apply(|c| c.at(0) as f64, &eta);
        let rhs = model.current_j(&eta, -1) - model.current_j(&eta, 0);
        (r1, (lhs - rhs).abs())
    });
    Ok(per_state
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (r1, r2)| (a.max(r1), b.max(r2))))
}

/// `max_eta |L f - sum_n beta(n/l) B^n f|` for the given table `f`.
pub fn decomposition_residual(model: &Model, f: &[f64], exec: Execution) -> Result<f64> {
    let n = model.n();
    check_size(n, MAX_STATE_SIZE)?;
    if f.len() != state_count(n) {
        return Err(Error::Domain("function table has the wrong length".into()));
    }
    let lookup = |c: &Configuration| f[c.to_index() as usize];
    let per_state = map_range(exec, state_count(n), |i| {
        let eta = Configuration::from_index(n, i as u64);
        let full = model.generator_apply(lookup, &eta);
        let parts: Vec<f64> = (0..=model.ell())
            .map(|k| {
                model.beta_at(k)
                    * model
                        .generator_apply_with(Constraint::Bernstein(k), lookup, &eta)
                        .expect("index in range")
            })
            .collect();
        (full - kahan_sum(parts)).abs()
    });
    Ok(per_state.into_iter().fold(0.0, f64::max))
}

/// `max_{eta, x} |h(eta, x) - h_alt(eta, x)|`.
pub fn h_representation_residual(model: &Model, exec: Execution) -> Result<f64> {
    let n = model.n();
    check_size(n, MAX_STATE_SIZE)?;
    let per_state = map_range(exec, state_count(n), |i| {
        let eta = Configuration::from_index(n, i as u64);
        (0..n as isize)
            .map(|x| {
                model
                    .potential_h_alt(&eta, x)
                    .map(|alt| (alt - model.potential_h(&eta, x)).abs())
            })
            .try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)))
    });
    per_state
        .into_iter()
        .try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)))
}

/// `E_{nu_alpha}[f]` by enumeration.
pub fn exact_expectation<F>(n: usize, f: F, alpha: f64, exec: Execution) -> Result<f64>
where
    F: Fn(&Configuration) -> f64 + Sync + Send,
{
    let nu = ProductMeasure::new(alpha, n)?;
    let terms = map_range(exec, state_count(n), |i| {
        nu.weight(i as u64) * f(&Configuration::from_index(n, i as u64))
    });
    Ok(kahan_sum(terms))
}

/// `int g (-N^2 L) g d nu_alpha`, i.e. half the Dirichlet form with the diffusive
/// time scaling included.
pub fn dirichlet_form(q: &GeneratorMatrix, g: &[f64], alpha: f64) -> Result<f64> {
    check_size(q.size(), MAX_DIRICHLET_SIZE)?;
    let nu = ProductMeasure::new(alpha, q.size())?;
    let lg = q.apply(g);
    let n2 = (q.size() * q.size()) as f64;
    let terms = (0..q.dimension()).map(|i| -nu.weight(i as u64) * g[i] * lg[i]);
    Ok(n2 * kahan_sum(terms))
}

/// `H(mu | nu_alpha) = sum mu log(mu / nu)` with `0 log 0 = 0`.
pub fn relative_entropy(mu: &[f64], alpha: f64) -> Result<f64> {
    if !mu.len().is_power_of_two() {
        return Err(Error::Domain("measure length must be 2^N".into()));
    }
    let n = mu.len().trailing_zeros() as usize;
    let nu = ProductMeasure::new(alpha, n)?;
    if mu.iter().any(|&p| p < 0.0) {
        return Err(Error::Domain("measure has negative mass".into()));
    }
    let total = kahan_sum(mu.iter().copied());
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("measure sums to {total}, not 1")));
    }
    let terms = mu.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, &p)| {
        let w = nu.weight(i as u64);
        p * (p.ln() - w.ln())
    });
    Ok(kahan_sum(terms).max(0.0))
}

/// Product measure with site marginals `profile[x]`, as a dense vector.
pub fn product_measure_vector(profile: &[f64]) -> Result<Vec<f64>> {
    let n = profile.len();
    check_size(n, MAX_STATE_SIZE)?;
    if profile.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain("profile leaves [0, 1]".into()));
    }
    Ok((0..state_count(n) as u64)
        .map(|i| {
            profile
                .iter()
                .enumerate()
                .map(|(x, &p)| if (i >> x) & 1 == 1 { p } else { 1.0 - p })
                .product()
        })
        .collect())
}

/// Checks `E[phi (eta(x) - eta(y)) g] = -1/2 E[phi (eta(x) - eta(y)) grad_{x,y} g]`
/// for random `g` and random `phi` invariant under swapping `x` and `y`.
/// Returns the largest absolute gap over `trials` draws.
pub fn byparts_identity_check(
    n: usize,
    x: usize,
    y: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let nu = ProductMeasure::new(alpha, n)?;
    if x >= n || y >= n {
        return Err(Error::Domain("sites must lie on the torus".into()));
    }
    let dim = state_count(n);
    let swap = |i: usize| {
        if ((i >> x) & 1) != ((i >> y) & 1) {
            i ^ (1 << x) ^ (1 << y)
        } else {
            i
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let phi: Vec<f64> = (0..dim).map(|i| raw[i] + raw[swap(i)]).collect();
        let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let diff = |i: usize| ((i >> x) & 1) as f64 - ((i >> y) & 1) as f64;
        let lhs = kahan_sum((0..dim).map(|i| nu.weight(i as u64) * phi[i] * diff(i) * g[i]));
        let rhs = -0.5
            * kahan_sum(
                (0..dim).map(|i| nu.weight(i as u64) * phi[i] * diff(i) * (g[swap(i)] - g[i])),
            );
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta::BetaFunction;
    use crate::model::ModelParams;

    fn model(n: usize, ell: usize, beta: BetaFunction) -> Model {
        Model::new(ModelParams::new(n, ell, beta)).unwrap()
    }

    /// Independently coded SSEP matrix: rate 1 across every bond with differing occupations.
    fn ssep_rates(n: usize) -> Vec<Vec<(usize, f64)>> {
        (0..1usize << n)
            .map(|i| {
                let mut row = vec![];
                for x in 0..n {
                    let y = (x + 1) % n;
                    if ((i >> x) & 1) != ((i >> y) & 1) {
                        row.push((i ^ (1 << x) ^ (1 << y), 1.0));
                    }
                }
                row.sort_by_key(|e| e.0);
                row
            })
            .collect()
    }

    #[test]
    fn guards() {
        let m = model(22, 3, BetaFunction::constant_one());
        assert!(matches!(build_generator(&m, Execution::Sequential), Err(Error::Capability(_))));
        assert!(Model::new(ModelParams::new(2, 1, BetaFunction::constant_one())).is_err());
        assert!(ProductMeasure::new(0.0, 4).is_err());
    }

    #[test]
    fn constant_beta_is_ssep() {
        let q = build_generator(&model(6, 3, BetaFunction::constant_one()), Execution::Sequential).unwrap();
        let oracle = ssep_rates(6);
        for (i, expected) in oracle.iter().enumerate() {
            let mut row: Vec<(usize, f64)> = q.row(i).collect();
            row.sort_by_key(|e| e.0);
            assert_eq!(&row, expected);
        }
        assert!(q.row_sum_residual() < 1e-12);
    }

    #[test]
    fn structural_invariants() {
        let q = build_generator(&model(9, 3, BetaFunction::cosine()), Execution::Parallel).unwrap();
        assert!(q.row_sum_residual() < 1e-12);
        assert!(q.preserves_sectors());
        assert!(q.min_off_diagonal() > 0.0);
    }

    #[test]
    fn matrix_action_matches_generator_apply() {
        use rand::Rng;
        let m = model(8, 3, BetaFunction::affine_half());
        let q = build_generator(&m, Execution::Sequential).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let f: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
            let qf = q.apply(&f);
            let i = rng.random_range(0..256usize);
            let direct = m.generator_apply(|c| f[c.to_index() as usize], &Configuration::from_index(8, i as u64));
            assert!((qf[i] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn stationarity_examples() {
        let q = build_generator(&model(8, 3, BetaFunction::constant_one()), Execution::Sequential).unwrap();
        assert!(stationarity_residual(&q, 0.5).unwrap() < 1e-12);
        let q = build_generator(&model(10, 3, BetaFunction::affine_half()), Execution::Parallel).unwrap();
        assert!(stationarity_residual(&q, 0.3).unwrap() <= 1e-10);
        assert!(detailed_balance_residual(&q, 0.3).unwrap() <= 1e-12);
    }

    #[test]
    fn non_product_measure_is_not_stationary() {
        // sanity: the residual detects a non-invariant measure
        let q = build_generator(&model(8, 3, BetaFunction::cosine()), Execution::Sequential).unwrap();
        let mu = product_measure_vector(&[0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1]).unwrap();
        let mut flow = vec![0.0; 256];
        for i in 0..256 {
            flow[i] += mu[i] * q.diagonal(i);
            for (t, r) in q.row(i) {
                flow[t] += mu[i] * r;
            }
        }
        assert!(flow.iter().map(|v| v.abs()).fold(0.0, f64::max) > 1e-3);
    }

    #[test]
    fn gradient_residuals_vanish() {
        let (r1, r2) = gradient_identity_residual(&model(8, 3, BetaFunction::constant_one()), Execution::Parallel).unwrap();
        assert!(r1 <= 1e-12 && r2 <= 1e-12);
        let (r1, r2) = gradient_identity_residual(&model(10, 4, BetaFunction::cosine()), Execution::Parallel).unwrap();
        assert!(r1 <= 1e-12 && r2 <= 1e-12, "{r1} {r2}");
        assert!(gradient_identity_residual(&model(15, 3, BetaFunction::cosine()), Execution::Parallel).is_err());
    }

    #[test]
    fn expectations() {
        let m = model(8, 4, BetaFunction::constant_one());
        assert!((exact_expectation(8, |_| 1.0, 0.3, Execution::Sequential).unwrap() - 1.0).abs() < 1e-15);
        assert!((exact_expectation(8, |c| c.at(0) as f64, 0.3, Execution::Sequential).unwrap() - 0.3).abs() < 1e-15);
        for alpha in [0.2, 0.5, 0.85] {
            let e = exact_expectation(8, |c| m.potential_h(c, 0), alpha, Execution::Parallel).unwrap();
            assert!((e - alpha).abs() < 1e-14);
        }
    }

    #[test]
    fn g_has_zero_mean() {
        let m = model(10, 3, BetaFunction::cosine());
        let eg = exact_expectation(10, |c| m.potential_g(c, 0), 0.5, Execution::Parallel).unwrap();
        assert!(eg.abs() < 1e-12);
        let eh = exact_expectation(10, |c| m.potential_h(c, 0), 0.37, Execution::Parallel).unwrap();
        let ebig = exact_expectation(10, |c| m.potential_big_h(c, 0), 0.37, Execution::Parallel).unwrap();
        assert!((eh - ebig).abs() < 1e-12);
    }

    /// `N^2 * 1/2 sum_x E[r_x (grad_{x,x+1} g)^2]`, summed over bonds.
    fn bond_sum_oracle(m: &Model, g: &[f64], alpha: f64) -> f64 {
        let n = m.n();
        let nu = ProductMeasure::new(alpha, n).unwrap();
        let mut total = 0.0;
        for i in 0..1usize << n {
            let eta = Configuration::from_index(n, i as u64);
            for x in 0..n {
                let y = (x + 1) % n;
                let differ = ((i >> x) ^ (i >> y)) & 1 == 1;
                let j = if differ { i ^ (1 << x) ^ (1 << y) } else { i };
                let r = m.node_rate(&eta, x as isize);
                total += nu.weight(i as u64) * r * (g[j] - g[i]).powi(2);
            }
        }
        0.5 * (n * n) as f64 * total
    }

    #[test]
    fn dirichlet_form_matches_bond_sum() {
        use rand::Rng;
        let m = model(6, 3, BetaFunction::constant_one());
        let q = build_generator(&m, Execution::Sequential).unwrap();
        let pi0: Vec<f64> = (0..64).map(|i| (i & 1) as f64).collect();
        let d = dirichlet_form(&q, &pi0, 0.5).unwrap();
        assert!((d - bond_sum_oracle(&m, &pi0, 0.5)).abs() < 1e-10);
        assert_eq!(dirichlet_form(&q, &vec![3.0; 64], 0.5).unwrap(), 0.0);

        let m = model(8, 3, BetaFunction::cosine());
        let q = build_generator(&m, Execution::Sequential).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g: Vec<f64> = (0..256).map(|_| rng.random_range(-2.0..2.0)).collect();
            let d = dirichlet_form(&q, &g, 0.35).unwrap();
            assert!(d >= 0.0);
            assert!((d - bond_sum_oracle(&m, &g, 0.35)).abs() < 1e-10 * d.max(1.0));
        }
        // constant on each particle-number sector
        let sector: Vec<f64> = (0..256u32).map(|i| (i.count_ones() as f64).sin()).collect();
        assert!(dirichlet_form(&q, &sector, 0.35).unwrap().abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_examples() {
        let nu = ProductMeasure::new(0.3, 6).unwrap().weights();
        assert!(relative_entropy(&nu, 0.3).unwrap() < 1e-14);
        let mut point = vec![0.0; 1 << 8];
        point[0] = 1.0;
        let h = relative_entropy(&point, 0.5).unwrap();
        assert!((h - 8.0 * 2f64.ln()).abs() < 1e-12);
        assert!(relative_entropy(&[0.5, 0.4], 0.5).is_err());

        let mut per_site = vec![];
        for n in [6usize, 8, 10] {
            let profile: Vec<f64> = (0..n)
                .map(|x| 0.5 + (2.0 * std::f64::consts::PI * x as f64 / n as f64).cos() / 4.0)
                .collect();
            let mu = product_measure_vector(&profile).unwrap();
            per_site.push(relative_entropy(&mu, 0.5).unwrap() / n as f64);
        }
        // closed form per-site bound: sup over p in [1/4, 3/4] of the binary KL to 1/2
        let kl = |p: f64| p * (2.0 * p).ln() + (1.0 - p) * (2.0 * (1.0 - p)).ln();
        assert!(per_site.iter().all(|&v| v > 0.0 && v <= kl(0.75)));
    }

    #[test]
    fn byparts_identity() {
        assert!(byparts_identity_check(8, 2, 5, 0.4, 5, 1).unwrap() < 1e-12);
        assert!(byparts_identity_check(8, 3, 3, 0.4, 2, 1).unwrap() < 1e-15);
        assert!(byparts_identity_check(8, 1, 2, 0.7, 5, 9).unwrap() < 1e-12);
    }

    #[test]
    fn decomposition_and_h_alt() {
        use rand::Rng;
        let m = model(8, 3, BetaFunction::cosine());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(decomposition_residual(&m, &f, Execution::Parallel).unwrap() < 1e-12);
        assert!(h_representation_residual(&m, Execution::Parallel).unwrap() < 1e-12);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let m = model(10, 3, BetaFunction::cosine());
        let a = gradient_identity_residual(&m, Execution::Sequential).unwrap();
        let b = gradient_identity_residual(&m, Execution::Parallel).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        let ea = exact_expectation(10, |c| m.potential_h(c, 0), 0.3, Execution::Sequential).unwrap();
        let eb = exact_expectation(10, |c| m.potential_h(c, 0), 0.3, Execution::Parallel).unwrap();
        assert_eq!(ea.to_bits(), eb.to_bits());
    }
}
