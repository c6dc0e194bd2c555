//! Stationary 1-step Markov measures on a TMC and their range-2 potential.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tmc::{Tmc, Word};

/// Row sums and stationarity are checked to this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// A row-stochastic transition matrix compatible with a primitive TMC,
/// together with its (unique, strictly positive) stationary vector.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    tmc: Tmc,
    transition: DMatrix<f64>,
    stationary: DVector<f64>,
}

impl MarkovModel {
    pub fn new(tmc: Tmc, transition: DMatrix<f64>) -> Result<Self> {
        validate_transition(&tmc, &transition)?;
        let stationary = stationary_distribution(&transition, &tmc)?;
        Ok(Self {
            tmc,
            transition,
            stationary,
        })
    }

    /// Uniform probability over the allowed successors of each symbol.
    pub fn uniform_outgoing(tmc: Tmc) -> Result<Self> {
        let transition = uniform_outgoing(&tmc);
        Self::new(tmc, transition)
    }

    pub fn tmc(&self) -> &Tmc {
        &self.tmc
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }
}

pub fn uniform_outgoing(tmc: &Tmc) -> DMatrix<f64> {
    let n = tmc.size();
    DMatrix::from_fn(n, n, |i, j| {
        if tmc.allowed(i, j) {
            1.0 / tmc.successors(i).count() as f64
        } else {
            0.0
        }
    })
}

fn validate_transition(tmc: &Tmc, p: &DMatrix<f64>) -> Result<()> {
    let n = tmc.size();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::Dimension(format!("transition must be {n}x{n}")));
    }
    for i in 0..n {
        for j in 0..n {
            let v = p[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidTransition(format!(
                    "entry ({i}, {j}) = {v} is not a probability"
                )));
            }
            if (v > 0.0) != tmc.allowed(i, j) {
                return Err(Error::InvalidTransition(format!(
                    "support mismatch at ({}, {}): P = {v}, M = {}",
                    tmc.alphabet().label(i),
                    tmc.alphabet().label(j),
                    tmc.allowed(i, j) as u8
                )));
            }
        }
        let s: f64 = p.row(i).sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidTransition(format!(
                "row {} sums to {s}",
                tmc.alphabet().label(i)
            )));
        }
    }
    Ok(())
}

/// Unique left fixed vector of `P`: solves `(Pᵀ - I) μ = 0` with the last
/// equation replaced by `Σ μ = 1`.
pub fn stationary_distribution(p: &DMatrix<f64>, tmc: &Tmc) -> Result<DVector<f64>> {
    if !tmc.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let n = tmc.size();
    if p.nrows() != n || p.ncols() != n {
        return Err(Error::Dimension(format!("transition must be {n}x{n}")));
    }
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let mut mu = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidTransition("singular stationarity system".into()))?;
    // one step of iterative refinement
    if let Some(correction) = a.clone().lu().solve(&(&rhs - &a * &mu)) {
        mu += correction;
    }
    if let Some(i) = mu.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::InvalidTransition(format!(
            "stationary vector has non-positive mass at {}",
            tmc.alphabet().label(i)
        )));
    }
    let total = mu.sum();
    mu /= total;
    Ok(mu)
}

/// `φ(a, a') = log(μ[a] P(a, a') / μ[a'])` on allowed transitions and `-∞`
/// elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeTwoPotential {
    values: DMatrix<f64>,
}

impl RangeTwoPotential {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, a: usize, a_next: usize) -> f64 {
        self.values[(a, a_next)]
    }
}

pub fn derive_potential(model: &MarkovModel) -> RangeTwoPotential {
    let n = model.tmc.size();
    let mu = &model.stationary;
    let p = &model.transition;
    let values = DMatrix::from_fn(n, n, |i, j| {
        if model.tmc.allowed(i, j) {
            mu[i].ln() + p[(i, j)].ln() - mu[j].ln()
        } else {
            f64::NEG_INFINITY
        }
    });
    RangeTwoPotential { values }
}

/// `log μ[w]`, accumulated in log space.
pub fn log_cylinder_measure(model: &MarkovModel, w: &Word) -> Result<f64> {
    let s = w.symbols();
    if !model.tmc.is_admissible(s) {
        // Re-run through the checked constructor for a precise error.
        Word::new(&model.tmc, s.to_vec())?;
    }
    let mut acc = model.stationary[s[0]].ln();
    for pair in s.windows(2) {
        acc += model.transition[(pair[0], pair[1])].ln();
    }
    Ok(acc)
}

/// `μ[w] = μ[w₀] Π P(wᵢ, wᵢ₊₁)`.
pub fn cylinder_measure(model: &MarkovModel, w: &Word) -> Result<f64> {
    log_cylinder_measure(model, w).map(f64::exp)
}
