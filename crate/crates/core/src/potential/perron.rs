use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{EvalMode, PointSpec, PotentialEvaluation};
use crate::error::{Error, Result};
use crate::projection::FiberCocycle;

const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITER: usize = 100_000;

/// Perron root and eigenvectors of a nonnegative square matrix with a
/// strictly dominant eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronData {
    pub rho: f64,
    /// Left eigenvector, scaled so that `Gᵀ D = 1`.
    #[serde(serialize_with = "ser_vec")]
    pub left: DVector<f64>,
    /// Right eigenvector, `ℓ₁`-normalized (so it equals `d_hat`).
    #[serde(serialize_with = "ser_vec")]
    pub right: DVector<f64>,
    #[serde(serialize_with = "ser_vec")]
    pub d_hat: DVector<f64>,
    pub second_modulus: f64,
    /// `‖T D − ρ D‖₁`.
    pub right_residual: f64,
    /// `‖Gᵀ T − ρ Gᵀ‖₁`.
    pub left_residual: f64,
}

fn ser_vec<S: serde::Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

fn l1(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn power_iteration(t: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = t.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..POWER_MAX_ITER {
        let mut y = t * &x;
        let s = y.sum();
        if !(s > 0.0) {
            return Err(Error::Hypothesis("power iteration collapsed to zero".into()));
        }
        y /= s;
        let change = l1(&(&y - &x));
        x = y;
        if change <= POWER_TOL * 1e-2 {
            return Ok(x);
        }
        // Rounding floor reached: stop once the change no longer improves.
        if change < best {
            best = change;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 50 && best <= POWER_TOL {
                return Ok(x);
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "power iteration did not settle in {POWER_MAX_ITER} steps"
    )))
}

/// Perron data by power iteration; `|λ₂|` from the full spectrum.
///
/// Accepts reducible matrices as long as the Perron root is strictly
/// dominant, the right vector strictly positive and the left vector
/// nonnegative.
pub fn perron_data(t: &DMatrix<f64>) -> Result<PerronData> {
    let n = t.nrows();
    if n == 0 || t.ncols() != n {
        return Err(Error::Dimension("Perron data needs a nonempty square matrix".into()));
    }
    if t.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Dimension("Perron data needs a nonnegative finite matrix".into()));
    }
    let mut moduli: Vec<f64> = t.clone().complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let top = moduli[0];
    let second_modulus = moduli.get(1).copied().unwrap_or(0.0);
    if !(top > 0.0) || second_modulus >= top * (1.0 - 1e-8) {
        return Err(Error::Hypothesis(format!(
            "Perron root not strictly dominant (|λ₁| = {top}, |λ₂| = {second_modulus})"
        )));
    }
    let d_hat = power_iteration(t)?;
    if d_hat.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Hypothesis("right Perron vector is not strictly positive".into()));
    }
    let rho = (t * &d_hat).sum();
    let mut left = power_iteration(&t.transpose())?;
    let gd = left.dot(&d_hat);
    left /= gd;
    let right_residual = l1(&(t * &d_hat - &d_hat * rho));
    let left_residual = l1(&(t.transpose() * &left - &left * rho));
    let tol = 1e-12 * rho;
    if right_residual > tol * l1(&d_hat) || left_residual > tol * l1(&left) {
        return Err(Error::NoConvergence(format!(
            "Perron residuals {right_residual:e}, {left_residual:e} above tolerance"
        )));
    }
    Ok(PerronData {
        rho,
        left,
        right: d_hat.clone(),
        d_hat,
        second_modulus,
        right_residual,
        left_residual,
    })
}

fn column_norm(t: &DMatrix<f64>) -> f64 {
    t.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `ψ(b) = log ρ − log |𝓜_{b(1:p)} D̂|₁` at a purely periodic point, where
/// `ρ, D̂` belong to the one-period product `𝓜_{b(0:p)}`.
pub fn periodic_potential<C: FiberCocycle + ?Sized>(
    c: &C,
    point: &PointSpec,
) -> Result<(PotentialEvaluation, PerronData)> {
    if !point.preperiod().is_empty() {
        return Err(Error::Setting("periodic formula needs an empty preperiod".into()));
    }
    let p = point.period().len();
    let cycle = point.prefix(p + 1);
    let t = c.product(&cycle);
    let perron = perron_data(&t)?;
    let tail = c.product(&cycle[1..]);
    let image = &tail * &perron.d_hat;
    let mass = image.sum();
    let value = perron.rho.ln() - mass.ln();
    // eigenvector error from the residual and the spectral gap
    let gap = perron.rho - perron.second_modulus;
    let eta = perron.right_residual / gap;
    let radius = perron.right_residual / perron.rho
        + column_norm(&tail) * eta / mass
        + 16.0 * f64::EPSILON * (p as f64 + 1.0) * (1.0 + value.abs());
    Ok((
        PotentialEvaluation {
            value: Some(value),
            error_radius: radius,
            terms_used: p,
            mode: EvalMode::Certified,
        },
        perron,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab_product(g: f64) -> DMatrix<f64> {
        let a = DMatrix::from_row_slice(2, 2, &[2.0 * g, g, g, g]);
        let b = DMatrix::from_element(2, 2, 0.25);
        a * b
    }

    #[test]
    fn counterexample_blocks() {
        for g in [0.26, 0.30, 0.33] {
            let p = perron_data(&ab_product(g)).unwrap();
            assert!((p.rho - 5.0 * g / 4.0).abs() < 1e-12);
            assert!((p.d_hat[0] - 0.6).abs() < 1e-12 && (p.d_hat[1] - 0.4).abs() < 1e-12);
            assert!((p.left.dot(&p.right) - 1.0).abs() < 1e-12);
            assert!(p.second_modulus < 1e-12);
        }
        let ba = DMatrix::from_element(2, 2, 0.25) * DMatrix::from_row_slice(2, 2, &[0.6, 0.3, 0.3, 0.3]);
        let p = perron_data(&ba).unwrap();
        assert!((p.d_hat[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn refuses_periodic_structure() {
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(perron_data(&t), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn reducible_with_zero_column() {
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 1.0]);
        let p = perron_data(&t).unwrap();
        assert!((p.rho - 1.0).abs() < 1e-14);
        assert!((p.d_hat[0] - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(p.left[0], 0.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let p = perron_data(&t).unwrap();
        let rho = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((p.rho - rho).abs() < 1e-13);
        assert!((p.second_modulus - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-13);
    }
}
