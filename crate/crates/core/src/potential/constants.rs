use serde::Serialize;

use crate::error::{Error, Result};
use crate::projection::{check_h1, check_h2, FactorSystem, FiberCocycle};
use crate::projective::{apply_normalized, projective_distance, support_contraction_coefficient, SimplexPoint};
use crate::tmc::enumerate_words;

/// Lower bound applied to `τ` before forming `C₁ = 1/τ³`. Any `τ' ≥ τ` is a
/// valid contraction bound, and this keeps `C₁` finite when every short
/// period product has rank one.
pub const TAU_FLOOR: f64 = 1e-3;

/// The constants behind the uniform convergence and Hölder bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformConstants {
    /// Largest contraction coefficient over the short period products.
    pub tau_raw: f64,
    /// `max(tau_raw, TAU_FLOOR)`; used in every bound below.
    pub tau: f64,
    /// `τ^{1/(2(#B+1))}`.
    pub theta: f64,
    /// `1/τ³`.
    pub c1: f64,
    pub d_const: f64,
    /// `2 D C₁ / (1 - θ)`.
    pub c_total: f64,
    /// `D C₁ / ((1 - τ)(1 - θ))`.
    pub k_gibbs: f64,
    /// Bound on `|ψ(b) − log ν[b₀]|`, the one term of the Bowen–Gibbs
    /// telescoping product that the `n ≥ 1` approximation bound does not
    /// control.
    pub boundary: f64,
    /// Whether the short period products were strictly positive, as opposed
    /// to positive on their nonzero columns only.
    pub strict_h2: bool,
    pub factor_size: usize,
}

impl UniformConstants {
    /// `D C₁ / (1 - τ)`.
    pub fn summable_constant(&self) -> f64 {
        self.d_const * self.c1 / (1.0 - self.tau)
    }

    /// `(D C₁ / (1 - τ)) θⁿ`.
    pub fn certified_radius(&self, n: usize) -> f64 {
        self.summable_constant() * self.theta.powi(n as i32)
    }

    /// `C θⁿ`, the bound on `var_n ψ` for `n ≥ 1`. Points that agree on
    /// `b₀` alone are not comparable through the fiber products, so `n = 0`
    /// is unbounded.
    pub fn holder_bound(&self, n: usize) -> f64 {
        if n == 0 {
            f64::INFINITY
        } else {
            self.c_total * self.theta.powi(n as i32)
        }
    }

    /// `k_gibbs + boundary`: a certified Bowen–Gibbs constant.
    pub fn bgi_constant(&self) -> f64 {
        self.k_gibbs + self.boundary
    }

    /// `log(1/τ)`.
    pub fn holder_exponent(&self) -> f64 {
        -self.tau.ln()
    }

    /// Least `n ≥ 1` with `certified_radius(n) ≤ target`.
    pub fn terms_for(&self, target: f64) -> usize {
        let k = self.summable_constant();
        if k <= target {
            return 1;
        }
        let n = ((target / k).ln() / self.theta.ln()).ceil().max(1.0) as usize;
        // guard the float rounding of the logarithms
        (n.saturating_sub(1).max(1)..n + 2)
            .find(|&m| self.certified_radius(m) <= target)
            .unwrap_or(n + 2)
    }
}

/// Computes `τ, θ, C₁, D` and the derived constants.
///
/// Needs full row allowability and, for every periodic point of period
/// `≤ #B`, a one-period product that is strictly positive on its nonzero
/// columns. Zero columns do not enter the projective diameter of the image,
/// so `τ` is taken over the positive column block.
pub fn uniform_constants(fs: &FactorSystem) -> Result<UniformConstants> {
    let h1 = check_h1(fs);
    if !h1.pass {
        return Err(Error::Hypothesis(format!(
            "full row allowability fails in {} places",
            h1.failures.len()
        )));
    }
    let h2 = check_h2(fs, None);
    if !h2.support_pass {
        let bad = h2.witnesses.iter().find(|w| !w.support_positive).expect("some failure");
        return Err(Error::Hypothesis(format!(
            "period product at {} is not positive on its support",
            fs.factor().alphabet().render(bad.point.symbols())
        )));
    }
    let mut tau_raw: f64 = 0.0;
    for w in &h2.witnesses {
        tau_raw = tau_raw.max(support_contraction_coefficient(&w.product)?.tau);
    }
    if tau_raw >= 1.0 {
        return Err(Error::Hypothesis("a period product does not contract".into()));
    }
    let nb = fs.factor_size();
    let s = 2 * (nb + 1);
    let tau = tau_raw.max(TAU_FLOOR);
    let theta = tau.powf(1.0 / s as f64);
    let c1 = tau.powi(-3);
    let d_const = block_diameter(fs, s)?;
    let boundary = boundary_constant(fs, s)?;
    Ok(UniformConstants {
        tau_raw,
        tau,
        theta,
        c1,
        d_const,
        c_total: 2.0 * d_const * c1 / (1.0 - theta),
        k_gibbs: d_const * c1 / ((1.0 - tau) * (1.0 - theta)),
        boundary,
        strict_h2: h2.pass,
        factor_size: nb,
    })
}

/// `max δ(μ̂_{b₀}, x_{b₀⋯b_m})` over admissible blocks with `1 ≤ m < s`.
fn block_diameter(fs: &FactorSystem, s: usize) -> Result<f64> {
    let mut d: f64 = 0.0;
    for len in 2..=s {
        for w in enumerate_words(fs.factor(), len)? {
            let w = w.symbols();
            let target = SimplexPoint::new(fs.normalized_marginal(w[len - 1]))?;
            let x = apply_normalized(&fs.product(w), &target)?;
            let base = SimplexPoint::new(fs.normalized_marginal(w[0]))?;
            d = d.max(projective_distance(&base, &x)?);
        }
    }
    Ok(d)
}

/// `max |log(𝟙ᵀ 𝓜_{b₀b₁} y / |y|₁) − log ν[b₀]|` over admissible `b(0:s)`
/// and nonzero columns `y` of `𝓜_{b(1:s)}`. The limit `x_{b(1:∞)}` lies in
/// the cone spanned by those columns, so `ψ(b)` lies between the extreme
/// column values.
fn boundary_constant(fs: &FactorSystem, s: usize) -> Result<f64> {
    let mut c: f64 = 0.0;
    for w in enumerate_words(fs.factor(), s + 1)? {
        let w = w.symbols();
        let head = fs.weight(w[0], w[1]).row_sum_tr();
        let log_nu0 = fs.marginal(w[0]).sum().ln();
        let tail = fs.product(&w[1..]);
        for col in tail.column_iter() {
            let mass = col.sum();
            if mass > 0.0 {
                let v = (head.dot(&col) / mass).ln();
                c = c.max((v - log_nu0).abs());
            }
        }
    }
    Ok(c)
}

/// Pairs `(m(k), ℓ(k))` with `w[m(k)] = w[ℓ(k)]`, one per complete window
/// `[k(#B+1), (k+1)(#B+1))`: the first repeat inside each window.
pub fn factorization_sequence(w: &[usize], factor_size: usize) -> Result<Vec<(usize, usize)>> {
    let width = factor_size + 1;
    if w.len() < width {
        return Err(Error::WordTooShort {
            min: width,
            got: w.len(),
        });
    }
    let mut out = Vec::with_capacity(w.len() / width);
    for start in (0..=w.len() - width).step_by(width) {
        let window = &w[start..start + width];
        let pair = (1..width).find_map(|j| {
            window[..j].iter().position(|&x| x == window[j]).map(|i| (start + i, start + j))
        });
        match pair {
            Some(p) => out.push(p),
            None => {
                return Err(Error::Setting(format!(
                    "window at {start} has no repeated symbol; alphabet larger than {factor_size}"
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factorization_examples() {
        assert_eq!(factorization_sequence(&[0, 1, 2, 0, 1, 2], 3).unwrap(), vec![(0, 3)]);
        let w = [0, 1, 0, 1, 0, 1, 0, 1, 0];
        let f = factorization_sequence(&w, 2).unwrap();
        assert_eq!(f, vec![(0, 2), (3, 5), (6, 8)]);
        assert!(factorization_sequence(&[0, 1], 2).is_err());
    }

    proptest! {
        #[test]
        fn factorization_inequalities(w in prop::collection::vec(0usize..3, 40)) {
            let nb = 3;
            let f = factorization_sequence(&w, nb).unwrap();
            let mut last = None;
            for (k, &(m, l)) in f.iter().enumerate() {
                prop_assert!(m < l);
                prop_assert_eq!(w[m], w[l]);
                prop_assert!(k * (nb + 1) <= l && l < (k + 1) * (nb + 1));
                if let Some(prev) = last {
                    prop_assert!(prev < m);
                }
                last = Some(l);
            }
        }
    }
}
