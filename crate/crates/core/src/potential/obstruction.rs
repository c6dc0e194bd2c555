use nalgebra::DMatrix;
use serde::Serialize;

use super::perron_data;
use crate::error::{Error, Result};
use crate::projection::{FactorSystem, FiberCocycle};

pub const OBSTRUCTION_TOL: f64 = 1e-10;

/// The three conditions, at least one of which a finite-range induced
/// potential forces, for a two-letter factor of a full shift with fibers of
/// size two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstructionReport {
    /// `𝓜₀₀` and `𝓜₁₁` share their positive eigenvector.
    pub shared_eigenvector: bool,
    /// Some `𝓜_ee'` has rank one.
    pub rank_one: bool,
    /// `𝟙ᵀ` is a left eigenvector of all four matrices.
    pub uniform_left_eigenvector: bool,
    /// `|D̂₀₀ − D̂₁₁|₁`, infinite when a Perron vector is unavailable.
    pub eigenvector_gap: f64,
    /// Smallest `|det 𝓜_ee'| / max(𝓜_ee')²`.
    pub min_relative_det: f64,
    /// Largest relative spread of column sums over the four matrices.
    pub max_column_sum_spread: f64,
}

impl ObstructionReport {
    /// None of the conditions holds, so `ψ` cannot have finite range.
    pub fn finite_range_excluded(&self) -> bool {
        !(self.shared_eigenvector || self.rank_one || self.uniform_left_eigenvector)
    }
}

fn relative_det(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).abs() / (scale * scale)
}

fn column_sum_spread(m: &DMatrix<f64>) -> f64 {
    let sums: Vec<f64> = m.column_iter().map(|c| c.sum()).collect();
    let hi = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

pub fn finite_range_obstruction(fs: &FactorSystem) -> Result<ObstructionReport> {
    if !fs.model().tmc().is_full_shift() {
        return Err(Error::Setting("obstruction test needs a full-shift source".into()));
    }
    if fs.factor_size() != 2 || (0..2).any(|b| fs.fiber_size(b) != 2) {
        return Err(Error::Setting(
            "obstruction test needs two fibers of size two".into(),
        ));
    }
    let eigenvector_gap = match (perron_data(fs.weight(0, 0)), perron_data(fs.weight(1, 1))) {
        (Ok(p0), Ok(p1)) => (&p0.d_hat - &p1.d_hat).abs().sum(),
        _ => f64::INFINITY,
    };
    let blocks = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let min_relative_det = blocks
        .iter()
        .map(|&(b, c)| relative_det(fs.weight(b, c)))
        .fold(f64::INFINITY, f64::min);
    let max_column_sum_spread = blocks
        .iter()
        .map(|&(b, c)| column_sum_spread(fs.weight(b, c)))
        .fold(0.0, f64::max);
    Ok(ObstructionReport {
        shared_eigenvector: eigenvector_gap < OBSTRUCTION_TOL,
        rank_one: min_relative_det < OBSTRUCTION_TOL,
        uniform_left_eigenvector: max_column_sum_spread < OBSTRUCTION_TOL,
        eigenvector_gap,
        min_relative_det,
        max_column_sum_spread,
    })
}
