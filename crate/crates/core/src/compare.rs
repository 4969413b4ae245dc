//! Particle ensemble against PDE reference on the coarse-graining grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::DensityField;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    L1,
    Linf,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::Linf => "linf",
        })
    }
}

/// `sum_i du |a_i - b_i|` or `max_i |a_i - b_i|`.
pub fn distance(a: &DensityField, b: &DensityField, norm: Norm) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "fields on different grids ({} vs {} cells)",
            a.len(),
            b.len()
        )));
    }
    let diffs = a.cells().iter().zip(b.cells()).map(|(x, y)| (x - y).abs());
    Ok(match norm {
        Norm::L1 => diffs.sum::<f64>() * a.du(),
        Norm::Linf => diffs.fold(0.0, f64::max),
    })
}

/// The same norm applied to a per-cell error bar.
pub fn norm_of(values: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::L1 => values.iter().map(|v| v.abs()).sum::<f64>() / values.len().max(1) as f64,
        Norm::Linf => values.iter().map(|v| v.abs()).fold(0.0, f64::max),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub n: usize,
    pub ell: usize,
    pub time: f64,
    pub distance: f64,
    /// Norm of the cellwise standard error of the ensemble mean.
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub norm: Norm,
    pub tolerance: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn terminal_time(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.time).reduce(f64::max)
    }

    /// Distances at the terminal time, in the order the sizes were run.
    pub fn terminal_distances(&self) -> Vec<(usize, f64)> {
        let Some(t) = self.terminal_time() else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|r| r.time == t)
            .map(|r| (r.n, r.distance))
            .collect()
    }

    /// True iff the terminal distance strictly decreases along the size list.
    pub fn monotone(&self) -> bool {
        self.terminal_distances().windows(2).all(|w| w[1].1 < w[0].1)
    }

    /// Terminal distance of the last size.
    pub fn final_distance(&self) -> Option<f64> {
        self.terminal_distances().last().map(|r| r.1)
    }

    pub fn within_tolerance(&self) -> bool {
        self.final_distance().is_some_and(|d| d <= self.tolerance)
    }

    pub fn passed(&self) -> bool {
        self.within_tolerance() && self.monotone()
    }

    /// `n,ell,time,distance,stderr` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,ell,time,distance,stderr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.10e},{:.10e}\n",
                r.n, r.ell, r.time, r.distance, r.stderr
            ));
        }
        out
    }
}
