//! Bernstein polynomials, their Bezier combinations with coefficients
//! `beta(n/L)`, and the discretized diffusion potential `Phi_{beta,L}`.

use crate::beta::BetaFunction;
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;

/// Degrees up to this use the exact integer binomial triangle.
pub const EXACT_BINOMIAL_LIMIT: usize = 64;
/// Largest supported degree.
pub const MAX_DEGREE: usize = 1000;

/// Absolute tolerance for `Phi_beta` quadrature.
pub const PHI_LIMIT_TOL: f64 = 1e-10;
/// Absolute tolerance for the primitive of a basis polynomial.
pub const PRIMITIVE_TOL: f64 = 1e-12;

fn binomial_row_exact(n: usize) -> Vec<u64> {
    let mut row = vec![1u64; n + 1];
    for k in 1..n {
        // C(n, k) = C(n, k-1) (n - k + 1) / k, kept exact through u128.
        row[k] = (row[k - 1] as u128 * (n - k + 1) as u128 / k as u128) as u64;
    }
    row
}

/// `ln C(n, k)` by log-space accumulation.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
        .sum()
}

/// `C(n, k)` as a float: exact for `n <= 64`, log-space beyond.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= EXACT_BINOMIAL_LIMIT {
        binomial_row_exact(n)[k] as f64
    } else {
        ln_binomial(n, k).exp()
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(Error::Domain(format!(
            "degree {degree} outside 1..={MAX_DEGREE}"
        )));
    }
    Ok(())
}

fn check_unit(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("argument {rho} outside [0, 1]")));
    }
    Ok(())
}

/// Coefficients `beta(n/L)` and binomials for one degree `L`.
#[derive(Clone, Debug)]
pub struct PolynomialTable {
    degree: usize,
    coefficients: Vec<f64>,
    /// `ln C(L, n)` or exact values promoted to f64.
    binomials: Vec<f64>,
    log_space: bool,
}

impl PolynomialTable {
    pub fn new(beta: &BetaFunction, degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let coefficients = (0..=degree)
            .map(|n| beta.eval(n as f64 / degree as f64))
            .collect();
        let log_space = degree > EXACT_BINOMIAL_LIMIT;
        let binomials = if log_space {
            (0..=degree).map(|k| ln_binomial(degree, k)).collect()
        } else {
            binomial_row_exact(degree).into_iter().map(|c| c as f64).collect()
        };
        Ok(Self {
            degree,
            coefficients,
            binomials,
            log_space,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `B_{n,L}(rho) = C(L,n) rho^n (1-rho)^(L-n)`.
    pub fn basis(&self, n: usize, rho: f64) -> f64 {
        let l = self.degree;
        debug_assert!(n <= l);
        if rho == 0.0 {
            return (n == 0) as u8 as f64;
        }
        if rho == 1.0 {
            return (n == l) as u8 as f64;
        }
        if self.log_space {
            (self.binomials[n] + n as f64 * rho.ln() + (l - n) as f64 * (-rho).ln_1p()).exp()
        } else {
            self.binomials[n] * rho.powi(n as i32) * (1.0 - rho).powi((l - n) as i32)
        }
    }

    /// `sum_n beta(n/L) B_{n,L}(rho)` by de Casteljau's algorithm.
    pub fn bezier(&self, rho: f64) -> f64 {
        de_casteljau(&self.coefficients, rho)
    }

    /// `H_{n,L}(u) = 1/(L+1) sum_{i=n}^{L} C(i,n) u^(n+1) (1-u)^(i-n)`.
    pub fn h_explicit(&self, n: usize, u: f64) -> f64 {
        h_explicit_unchecked(n, self.degree, u)
    }

    /// `Phi_{beta,L}(u) = sum_n beta(n/L) H_{n,L}(u)`.
    pub fn phi(&self, u: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(n, b)| b * self.h_explicit(n, u))
            .sum()
    }
}

fn de_casteljau(coefficients: &[f64], t: f64) -> f64 {
    let mut work = coefficients.to_vec();
    let s = 1.0 - t;
    for level in (1..work.len()).rev() {
        for i in 0..level {
            work[i] = s * work[i] + t * work[i + 1];
        }
    }
    work[0]
}

fn h_explicit_unchecked(n: usize, l: usize, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let w = 1.0 - u;
    let mut sum = 0.0;
    if l <= EXACT_BINOMIAL_LIMIT {
        // C(i, n) w^(i-n), advanced in i
        let mut coeff = 1.0;
        let mut wpow = 1.0;
        for i in n..=l {
            if i > n {
                coeff = coeff * i as f64 / (i - n) as f64;
                wpow *= w;
            }
            sum += coeff * wpow;
        }
        sum * u.powi(n as i32 + 1) / (l + 1) as f64
    } else {
        let ln_u = u.ln();
        let ln_w = w.ln();
        for i in n..=l {
            let wterm = if i == n { 0.0 } else { (i - n) as f64 * ln_w };
            sum += (ln_binomial(i, n) + (n + 1) as f64 * ln_u + wterm).exp();
        }
        sum / (l + 1) as f64
    }
}

pub fn bernstein_basis(n: usize, degree: usize, rho: f64) -> Result<f64> {
    check_unit(rho)?;
    if n > degree || degree > MAX_DEGREE {
        return Err(Error::Domain(format!(
            "basis index {n} invalid for degree {degree}"
        )));
    }
    if degree == 0 {
        return Ok(1.0);
    }
    let table = PolynomialTable::new(&BetaFunction::constant_one(), degree)?;
    Ok(table.basis(n, rho))
}

/// All `B_{n,L}(rho)` for `n = 0..=L` by the triangle recurrence
/// `B_{k,m} = (1-rho) B_{k,m-1} + rho B_{k-1,m-1}`.
pub fn bernstein_row(degree: usize, rho: f64) -> Result<Vec<f64>> {
    check_unit(rho)?;
    let mut row = vec![0.0; degree + 1];
    row[0] = 1.0;
    for m in 1..=degree {
        for k in (1..=m).rev() {
            row[k] = (1.0 - rho) * row[k] + rho * row[k - 1];
        }
        row[0] *= 1.0 - rho;
    }
    Ok(row)
}

pub fn bezier_sum(beta: &BetaFunction, degree: usize, rho: f64) -> Result<f64> {
    check_unit(rho)?;
    Ok(PolynomialTable::new(beta, degree)?.bezier(rho))
}

pub fn h_explicit(n: usize, degree: usize, u: f64) -> Result<f64> {
    check_unit(u)?;
    if n > degree || degree > MAX_DEGREE {
        return Err(Error::Domain(format!(
            "index {n} invalid for degree {degree}"
        )));
    }
    Ok(h_explicit_unchecked(n, degree, u))
}

/// `int_0^v B_{n,L}(u) du` by adaptive quadrature.
pub fn h_primitive(n: usize, degree: usize, v: f64) -> Result<f64> {
    check_unit(v)?;
    if n > degree || degree > MAX_DEGREE || degree == 0 {
        return Err(Error::Domain(format!(
            "index {n} invalid for degree {degree}"
        )));
    }
    let table = PolynomialTable::new(&BetaFunction::constant_one(), degree)?;
    Ok(adaptive_simpson(|u| table.basis(n, u), 0.0, v, PRIMITIVE_TOL))
}

pub fn phi_discrete(beta: &BetaFunction, degree: usize, u: f64) -> Result<f64> {
    check_unit(u)?;
    Ok(PolynomialTable::new(beta, degree)?.phi(u))
}

/// `Phi_beta(rho) = int_0^rho beta`.
pub fn phi_limit(beta: &BetaFunction, rho: f64) -> Result<f64> {
    check_unit(rho)?;
    Ok(adaptive_simpson(|u| beta.eval(u), 0.0, rho, PHI_LIMIT_TOL))
}

/// `max_i |Phi_{beta,L}(u_i) - Phi_beta(u_i)|` over `gridsize` uniform points of `[0, 1]`.
pub fn sup_gap(beta: &BetaFunction, degree: usize, gridsize: usize) -> Result<f64> {
    if gridsize < 2 {
        return Err(Error::Domain("sup gap needs at least two grid points".into()));
    }
    let table = PolynomialTable::new(beta, degree)?;
    let mut gap: f64 = 0.0;
    for i in 0..gridsize {
        let u = i as f64 / (gridsize - 1) as f64;
        gap = gap.max((table.phi(u) - phi_limit(beta, u)?).abs());
    }
    Ok(gap)
}

/// One row of the `phi-table` export.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiRow {
    pub u: f64,
    pub phi_discrete: f64,
    pub phi_limit: f64,
    pub bezier: f64,
    pub beta: f64,
}

pub fn phi_table(beta: &BetaFunction, degree: usize, gridsize: usize) -> Result<Vec<PhiRow>> {
    if gridsize < 2 {
        return Err(Error::Domain("phi table needs at least two grid points".into()));
    }
    let table = PolynomialTable::new(beta, degree)?;
    (0..gridsize)
        .map(|i| {
            let u = i as f64 / (gridsize - 1) as f64;
            Ok(PhiRow {
                u,
                phi_discrete: table.phi(u),
                phi_limit: phi_limit(beta, u)?,
                bezier: table.bezier(u),
                beta: beta.eval(u),
            })
        })
        .collect()
}
