//! The window-constrained exclusion dynamics.
//!
//! A bond `{x, x+1}` exchanges its two occupations at rate
//! `c(x) = 1/(l+1) sum_{j=0}^{l} beta(<eta>_j)`, where `<eta>_j` is the
//! particle density on the window `x + [[-j, -j+l+1]] \ {x, x+1}` (exactly `l`
//! sites). This module evaluates the rates, the algebraic current `J` and the
//! local function `H = h + g` satisfying `J = -grad H` on every configuration.

use serde::{Deserialize, Serialize};

use crate::beta::BetaFunction;
use crate::error::{Error, Result};
use crate::lattice::{wrap, Configuration, TorusIndex};

/// Largest window for which [`Model::potential_h_alt`] enumerates subsets.
pub const SUBSET_ENUMERATION_LIMIT: usize = 20;

/// `ceil(n^exponent)`, the default window size rule.
pub fn default_window(n: usize, exponent: f64) -> usize {
    let raw = (n as f64).powf(exponent);
    // powf can land a hair above an exact integer
    let rounded = raw.round();
    let ell = if (raw - rounded).abs() < 1e-9 {
        rounded
    } else {
        raw.ceil()
    };
    (ell as usize).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub ell: usize,
    pub beta: BetaFunction,
    #[serde(default)]
    pub seed: u64,
}

impl ModelParams {
    pub fn new(n: usize, ell: usize, beta: BetaFunction) -> Self {
        Self {
            n,
            ell,
            beta,
            seed: 0,
        }
    }

    pub fn with_exponent(n: usize, exponent: f64, beta: BetaFunction) -> Result<Self> {
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(Error::Parameter(format!(
                "window exponent {exponent} must lie in (0, 1)"
            )));
        }
        Ok(Self::new(n, default_window(n, exponent), beta))
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell < 1 {
            return Err(Error::Parameter("window size must be at least 1".into()));
        }
        if self.ell + 2 > self.n {
            return Err(Error::Parameter(format!(
                "window size {} needs a torus of at least {} sites, got {}",
                self.ell,
                self.ell + 2,
                self.n
            )));
        }
        self.beta.validate_window_grid(self.ell)
    }
}

/// How the two hop indicators are built from `(eta(x), eta(x+1))`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExclusionRule {
    /// `e01 = eta(x)(1 - eta(x+1))`, `e10 = (1 - eta(x))eta(x+1)`.
    #[default]
    Consistent,
    /// `e01 = eta(x)(1 - eta(x+1)) + (1 - eta(x))eta(x+1)`; breaks the gradient identity.
    AsDisplayed,
}

/// Which constraint multiplies the exclusion indicators in the generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    Beta,
    /// Fraction of windows whose density is exactly `n / l`.
    Bernstein(usize),
}

/// An immutable model instance with `beta` tabulated on `{n / l}`.
#[derive(Clone, Debug)]
pub struct Model {
    params: ModelParams,
    table: Vec<f64>,
    /// `h_prefix[p] = 1/(l+1) sum_{n<p} beta(n/l)`.
    h_prefix: Vec<f64>,
    rule: ExclusionRule,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let ell = params.ell;
        let table: Vec<f64> = (0..=ell)
            .map(|n| params.beta.eval(n as f64 / ell as f64))
            .collect();
        let norm = 1.0 / (ell + 1) as f64;
        let mut h_prefix = Vec::with_capacity(ell + 2);
        let mut acc = 0.0;
        h_prefix.push(0.0);
        for v in &table {
            acc += v;
            h_prefix.push(acc * norm);
        }
        Ok(Self {
            params,
            table,
            h_prefix,
            rule: ExclusionRule::Consistent,
        })
    }

    pub fn with_rule(mut self, rule: ExclusionRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn ell(&self) -> usize {
        self.params.ell
    }

    pub fn beta(&self) -> &BetaFunction {
        &self.params.beta
    }

    pub fn rule(&self) -> ExclusionRule {
        self.rule
    }

    /// `beta(n / l)` from the memo table.
    #[inline]
    pub fn beta_at(&self, n: usize) -> f64 {
        self.table[n]
    }

    fn check_lattice(&self, cfg: &Configuration) {
        assert_eq!(cfg.len(), self.n(), "configuration size differs from model size");
    }

    /// Calls `f(j, count_j)` for `j = 0..=l`, where `count_j` is the number of
    /// particles in the `j`-th window of the bond at `x`.
    #[inline]
    pub fn for_each_window_count<F: FnMut(usize, usize)>(&self, cfg: &Configuration, x: usize, mut f: F) {
        let ell = self.ell() as isize;
        let x = x as isize;
        let mut count = cfg.count_run(wrap(self.n(), x + 2), self.ell());
        f(0, count);
        for j in 0..ell {
            count = count + cfg.at(x - j - 1) as usize - cfg.at(x - j + ell + 1) as usize;
            f((j + 1) as usize, count);
        }
    }

    pub fn window_counts(&self, cfg: &Configuration, x: isize) -> Vec<usize> {
        let mut out = vec![0; self.ell() + 1];
        self.for_each_window_count(cfg, wrap(self.n(), x), |j, c| out[j] = c);
        out
    }

    /// `c(x)`, the mean of `beta` over the `l + 1` window densities.
    pub fn constraint_c(&self, cfg: &Configuration, x: isize) -> f64 {
        self.check_lattice(cfg);
        self.constraint_at(cfg, wrap(self.n(), x))
    }

    #[inline]
    pub(crate) fn constraint_at(&self, cfg: &Configuration, x: usize) -> f64 {
        let mut sum = 0.0;
        self.for_each_window_count(cfg, x, |_, c| sum += self.table[c]);
        sum / (self.ell() + 1) as f64
    }

    pub fn bernstein_constraint(&self, cfg: &Configuration, x: isize, n: usize) -> Result<f64> {
        self.check_lattice(cfg);
        if n > self.ell() {
            return Err(Error::Domain(format!(
                "Bernstein index {n} exceeds window size {}",
                self.ell()
            )));
        }
        let mut hits = 0usize;
        self.for_each_window_count(cfg, wrap(self.n(), x), |_, c| hits += (c == n) as usize);
        Ok(hits as f64 / (self.ell() + 1) as f64)
    }

    pub fn exclusion_indicators(&self, cfg: &Configuration, x: isize) -> (u8, u8) {
        indicators(self.rule, cfg.at(x), cfg.at(x + 1))
    }

    /// Exchange rate of the bond `{x, x+1}`.
    pub fn node_rate(&self, cfg: &Configuration, x: isize) -> f64 {
        self.check_lattice(cfg);
        self.rate_at(cfg, wrap(self.n(), x))
    }

    #[inline]
    pub(crate) fn rate_at(&self, cfg: &Configuration, x: usize) -> f64 {
        let (e01, e10) = indicators(self.rule, cfg.at(x as isize), cfg.at(x as isize + 1));
        let e = e01 + e10;
        if e == 0 {
            0.0
        } else {
            e as f64 * self.constraint_at(cfg, x)
        }
    }

    pub fn constrained_rate(&self, constraint: Constraint, cfg: &Configuration, x: isize) -> Result<f64> {
        let (e01, e10) = self.exclusion_indicators(cfg, x);
        let c = match constraint {
            Constraint::Beta => self.constraint_c(cfg, x),
            Constraint::Bernstein(n) => self.bernstein_constraint(cfg, x, n)?,
        };
        Ok((e01 + e10) as f64 * c)
    }

    /// `J(x) = (e01 - e10) c(x)`.
    pub fn current_j(&self, cfg: &Configuration, x: isize) -> f64 {
        let (e01, e10) = self.exclusion_indicators(cfg, x);
        let d = e01 as f64 - e10 as f64;
        if d == 0.0 {
            0.0
        } else {
            d * self.constraint_c(cfg, x)
        }
    }

    /// `h` at `tau^x eta`: `1/(l+1) sum_{n < P} beta(n/l)` with `P` the
    /// particle count on `x + [[0, l]]`.
    pub fn potential_h(&self, cfg: &Configuration, x: isize) -> f64 {
        self.check_lattice(cfg);
        let p = cfg.count_run(wrap(self.n(), x), self.ell() + 1);
        self.h_prefix[p]
    }

    /// `h` through the subset expansion: for every `i` and `n <= i`, sum over the
    /// `(i - n)`-subsets `P` of `[[0, i-1]]` of
    /// `prod_{p in P}(1 - eta(p)) prod_{q in [[0,i]] \ P} eta(q)`.
    pub fn potential_h_alt(&self, cfg: &Configuration, x: isize) -> Result<f64> {
        self.check_lattice(cfg);
        let ell = self.ell();
        if ell > SUBSET_ENUMERATION_LIMIT {
            return Err(Error::Capability(format!(
                "subset expansion is limited to windows of size {SUBSET_ENUMERATION_LIMIT}, got {ell}"
            )));
        }
        let occ: Vec<u8> = (0..=ell as isize).map(|k| cfg.at(x + k)).collect();
        let mut total = 0.0;
        for n in 0..=ell {
            let mut weight = 0.0;
            for i in n..=ell {
                let holes = i - n;
                for mask in 0u32..(1u32 << i) {
                    if mask.count_ones() as usize != holes {
                        continue;
                    }
                    let mut prod = 1u8;
                    for (q, &eta_q) in occ.iter().enumerate().take(i + 1) {
                        let in_subset = q < i && (mask >> q) & 1 == 1;
                        prod &= if in_subset { 1 - eta_q } else { eta_q };
                        if prod == 0 {
                            break;
                        }
                    }
                    weight += prod as f64;
                }
            }
            total += self.table[n] * weight;
        }
        Ok(total / (ell + 1) as f64)
    }

    /// `g` at `tau^x eta`: `1/(l+1) sum_{j=1}^{l} sum_{i=0}^{j-1} J^j(x + i)`,
    /// where `J^j(y) = beta(<eta>_j at y)(e01 - e10)(y)`.
    pub fn potential_g(&self, cfg: &Configuration, x: isize) -> f64 {
        self.check_lattice(cfg);
        let ell = self.ell();
        let mut total = 0.0;
        for i in 0..ell {
            let y = x + i as isize;
            let (e01, e10) = self.exclusion_indicators(cfg, y);
            let d = e01 as f64 - e10 as f64;
            if d == 0.0 {
                continue;
            }
            let mut partial = 0.0;
            self.for_each_window_count(cfg, wrap(self.n(), y), |j, c| {
                if j > i {
                    partial += self.table[c];
                }
            });
            total += d * partial;
        }
        total / (ell + 1) as f64
    }

    /// `H = h + g`.
    pub fn potential_big_h(&self, cfg: &Configuration, x: isize) -> f64 {
        self.potential_h(cfg, x) + self.potential_g(cfg, x)
    }

    /// Unscaled generator `sum_x r(x) (f(theta_{x,x+1} eta) - f(eta))`.
    pub fn generator_apply<F: Fn(&Configuration) -> f64>(&self, f: F, cfg: &Configuration) -> f64 {
        self.generator_apply_with(Constraint::Beta, f, cfg)
            .expect("beta constraint is total")
    }

    pub fn generator_apply_with<F: Fn(&Configuration) -> f64>(
        &self,
        constraint: Constraint,
        f: F,
        cfg: &Configuration,
    ) -> Result<f64> {
        self.check_lattice(cfg);
        let base = f(cfg);
        let mut total = 0.0;
        let mut moved = cfg.clone();
        for x in 0..self.n() {
            let r = self.constrained_rate(constraint, cfg, x as isize)?;
            if r == 0.0 {
                continue;
            }
            let y = (x + 1) % self.n();
            moved.exchange_in_place(x, y);
            total += r * (f(&moved) - base);
            moved.exchange_in_place(x, y);
        }
        Ok(total)
    }
}

#[inline]
fn indicators(rule: ExclusionRule, a: u8, b: u8) -> (u8, u8) {
    let right = a & (1 - b);
    let left = (1 - a) & b;
    match rule {
        ExclusionRule::Consistent => (right, left),
        ExclusionRule::AsDisplayed => (right + left, left),
    }
}

/// Sites of the `j`-th window of the bond at `x`: `x + [[-j, -j+l+1]] \ {x, x+1}`.
pub fn window_sites(x: TorusIndex, j: usize, ell: usize) -> Result<Vec<TorusIndex>> {
    if j > ell {
        return Err(Error::Domain(format!("window index {j} exceeds {ell}")));
    }
    if ell + 2 > x.modulus() {
        return Err(Error::Parameter(format!(
            "window size {ell} does not fit a torus of size {}",
            x.modulus()
        )));
    }
    let j = j as isize;
    Ok((-j..=-j + ell as isize + 1)
        .filter(|&k| k != 0 && k != 1)
        .map(|k| x + k)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{exchange, Interval};
    use proptest::prelude::*;

    fn model(n: usize, ell: usize, beta: BetaFunction) -> Model {
        Model::new(ModelParams::new(n, ell, beta)).unwrap()
    }

    fn arb_cfg(n: usize) -> impl Strategy<Value = Configuration> {
        proptest::collection::vec(any::<bool>(), n).prop_map(Configuration::from_occupations)
    }

    #[test]
    fn default_window_rule() {
        assert_eq!(default_window(256, 0.5), 16);
        assert_eq!(default_window(64, 0.5), 8);
        assert_eq!(default_window(128, 0.5), 12);
        assert_eq!(default_window(100, 0.3), 4);
    }

    #[test]
    fn params_guard() {
        assert!(Model::new(ModelParams::new(4, 3, BetaFunction::constant_one())).is_err());
        assert!(Model::new(ModelParams::new(5, 3, BetaFunction::constant_one())).is_ok());
        assert!(Model::new(ModelParams::new(5, 0, BetaFunction::constant_one())).is_err());
    }

    #[test]
    fn window_endpoints() {
        let ell = 5;
        let x = TorusIndex::new(20, 0);
        let w0 = window_sites(x, 0, ell).unwrap();
        let expect0: Vec<_> = Interval::closed(20, 2, ell as isize + 1).sites().collect();
        assert_eq!(w0, expect0);
        let wl = window_sites(x, ell, ell).unwrap();
        let expectl: Vec<_> = Interval::closed(20, -(ell as isize), -1).sites().collect();
        assert_eq!(wl, expectl);
        for j in 0..=ell {
            let w = window_sites(x + 7, j, ell).unwrap();
            assert_eq!(w.len(), ell);
            assert!(!w.contains(&(x + 7)) && !w.contains(&(x + 8)));
        }
        assert!(window_sites(x, ell + 1, ell).is_err());
    }

    #[test]
    fn window_counts_match_sites() {
        let m = model(13, 4, BetaFunction::cosine());
        let eta: Configuration = "1101100101110".parse().unwrap();
        for x in 0..13 {
            let counts = m.window_counts(&eta, x);
            for j in 0..=4 {
                let sites = window_sites(TorusIndex::new(13, x), j, 4).unwrap();
                let direct = sites.iter().filter(|s| eta.get(s.value())).count();
                assert_eq!(counts[j], direct, "x={x} j={j}");
            }
        }
    }

    #[test]
    fn constraint_examples() {
        let one = model(12, 3, BetaFunction::constant_one());
        let eta: Configuration = "101010101010".parse().unwrap();
        assert_eq!(one.constraint_c(&eta, 4), 1.0);
        let cos = model(12, 3, BetaFunction::cosine());
        assert_eq!(cos.constraint_c(&Configuration::empty(12), 0), 1.0);

        // Node {0,1} of the alternating configuration with l = 3: windows
        // W0 = {2,3,4}, W1 = {-1,2,3}, W2 = {-2,-1,2}, W3 = {-3,-2,-1}.
        // Occupied sites are the even ones, so the counts are 2, 1, 2, 1.
        let affine = model(12, 3, BetaFunction::affine_half());
        let expected = (2.0 * (1.0 + 2.0 / 3.0) / 2.0 + 2.0 * (1.0 + 1.0 / 3.0) / 2.0) / 4.0;
        assert!((affine.constraint_c(&eta, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn indicator_cases() {
        let m = model(6, 2, BetaFunction::constant_one());
        for (s, e) in [("000000", (0, 0)), ("110000", (0, 0)), ("100000", (1, 0)), ("010000", (0, 1))] {
            let eta: Configuration = s.parse().unwrap();
            assert_eq!(m.exclusion_indicators(&eta, 0), e);
            let (a, b) = e;
            assert_eq!(a as i32 - b as i32, eta.at(0) as i32 - eta.at(1) as i32);
        }
        let shown = m.clone().with_rule(ExclusionRule::AsDisplayed);
        assert_eq!(shown.exclusion_indicators(&"010000".parse().unwrap(), 0), (1, 1));
    }

    #[test]
    fn rate_and_current_examples() {
        let one = model(10, 3, BetaFunction::constant_one());
        let eta: Configuration = "1100101000".parse().unwrap();
        assert_eq!(one.node_rate(&eta, 0), 0.0);
        assert_eq!(one.node_rate(&eta, 1), 1.0);
        assert_eq!(one.current_j(&eta, 1), 1.0);
        assert_eq!(one.current_j(&eta, 3), -1.0);
        assert_eq!(one.current_j(&eta, 0), 0.0);
    }

    #[test]
    fn bernstein_constraint_examples() {
        let m = model(10, 4, BetaFunction::cosine());
        let empty = Configuration::empty(10);
        assert_eq!(m.bernstein_constraint(&empty, 3, 0).unwrap(), 1.0);
        for n in 1..=4 {
            assert_eq!(m.bernstein_constraint(&empty, 3, n).unwrap(), 0.0);
        }
        assert!(m.bernstein_constraint(&empty, 0, 5).is_err());
    }

    #[test]
    fn potential_examples() {
        let m = model(10, 3, BetaFunction::cosine());
        let empty = Configuration::empty(10);
        let full = Configuration::full(10);
        assert_eq!(m.potential_h(&empty, 2), 0.0);
        assert_eq!(m.potential_h_alt(&empty, 2).unwrap(), 0.0);
        assert_eq!(m.potential_g(&empty, 0), 0.0);
        assert_eq!(m.potential_g(&full, 0), 0.0);
        let sum_all: f64 = (0..=3).map(|n| m.beta_at(n)).sum::<f64>() / 4.0;
        assert!((m.potential_h(&full, 0) - sum_all).abs() < 1e-15);
        assert!((m.potential_h_alt(&full, 0).unwrap() - sum_all).abs() < 1e-15);

        let one = model(10, 3, BetaFunction::constant_one());
        let eta: Configuration = "1101000110".parse().unwrap();
        assert!((one.potential_h(&eta, 0) - 3.0 / 4.0).abs() < 1e-15);
        assert!((one.potential_h(&eta, 6) - 2.0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn h_alt_capability_guard() {
        let m = model(30, 21, BetaFunction::constant_one());
        assert!(matches!(
            m.potential_h_alt(&Configuration::empty(30), 0),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn h_alt_matches_h_on_all_states() {
        let m = model(8, 3, BetaFunction::affine_half());
        for idx in 0..256 {
            let eta = Configuration::from_index(8, idx);
            for x in 0..8 {
                let a = m.potential_h(&eta, x);
                let b = m.potential_h_alt(&eta, x).unwrap();
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn generator_kills_constants_and_mass() {
        let m = model(9, 3, BetaFunction::cosine());
        let eta: Configuration = "110100110".parse().unwrap();
        assert_eq!(m.generator_apply(|_| 2.5, &eta), 0.0);
        assert!(m.generator_apply(|c| c.particle_total() as f64, &eta).abs() < 1e-15);
    }

    #[test]
    fn generator_on_pi0_is_current_divergence() {
        let m = model(8, 3, BetaFunction::cosine());
        for idx in 0..256 {
            let eta = Configuration::from_index(8, idx);
            let lhs = m.generator_apply(|c| c.at(0) as f64, &eta);
            let rhs = m.current_j(&eta, -1) - m.current_j(&eta, 0);
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_identity_by_enumeration() {
        for beta in BetaFunction::presets() {
            let m = model(8, 3, beta);
            for idx in 0..256 {
                let eta = Configuration::from_index(8, idx);
                for x in 0..8 {
                    let j = m.current_j(&eta, x);
                    let grad = m.potential_big_h(&eta, x + 1) - m.potential_big_h(&eta, x);
                    assert!((j + grad).abs() < 1e-13, "idx={idx} x={x}");
                }
            }
        }
    }

    #[test]
    fn corrupted_rule_breaks_gradient_identity() {
        let m = model(8, 3, BetaFunction::cosine()).with_rule(ExclusionRule::AsDisplayed);
        let worst = (0..256u64)
            .map(|idx| {
                let eta = Configuration::from_index(8, idx);
                (m.current_j(&eta, 0) + m.potential_big_h(&eta, 1) - m.potential_big_h(&eta, 0)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst > 0.1);
    }

    proptest! {
        #[test]
        fn rate_symmetric_under_bond_exchange(eta in arb_cfg(16), x in 0isize..16) {
            let m = model(16, 4, BetaFunction::cosine());
            let swapped = exchange(&eta, TorusIndex::new(16, x), TorusIndex::new(16, x + 1));
            prop_assert_eq!(m.node_rate(&eta, x), m.node_rate(&swapped, x));
            prop_assert!((m.current_j(&eta, x) + m.current_j(&swapped, x)).abs() < 1e-15);
        }

        #[test]
        fn bernstein_constraints_partition_unity(eta in arb_cfg(14), x in 0isize..14) {
            let m = model(14, 5, BetaFunction::affine_half());
            let total: f64 = (0..=5).map(|n| m.bernstein_constraint(&eta, x, n).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn bounds_hold(eta in arb_cfg(20), x in 0isize..20) {
            let m = model(20, 6, BetaFunction::cosine());
            let c = m.constraint_c(&eta, x);
            prop_assert!(c > 0.0 && c <= 1.0);
            let h = m.potential_h(&eta, x);
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!(m.potential_g(&eta, x).abs() <= 6.0);
            prop_assert!(m.node_rate(&eta, x) <= 1.0);
        }

        #[test]
        fn h_alt_agrees(eta in arb_cfg(10), x in 0isize..10) {
            let m = model(10, 4, BetaFunction::cosine());
            prop_assert!((m.potential_h(&eta, x) - m.potential_h_alt(&eta, x).unwrap()).abs() < 1e-13);
        }

        #[test]
        fn h_monotone_in_box(eta in arb_cfg(12), site in 0usize..5) {
            let m = model(12, 4, BetaFunction::cosine());
            let mut more = eta.clone();
            more.set(site, true);
            prop_assert!(m.potential_h(&more, 0) >= m.potential_h(&eta, 0));
        }
    }
}
