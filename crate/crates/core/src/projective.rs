//! Hilbert projective metric on open simplices and the Birkhoff contraction
//! of nonnegative (possibly rectangular) matrices acting on them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Coordinates below this are treated as leaving the open simplex.
pub const MIN_COORDINATE: f64 = 1e-300;

/// A strictly positive vector normalized to unit ℓ₁ norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    coords: DVector<f64>,
}

impl SimplexPoint {
    /// Normalizes `v`; fails unless every coordinate is finite and positive.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        if let Some(i) = v.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::NotInSimplex(i));
        }
        let s = v.sum();
        Ok(Self { coords: v / s })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    /// Barycenter of a simplex with `dim` vertices.
    pub fn uniform(dim: usize) -> Self {
        Self {
            coords: DVector::from_element(dim, 1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.coords
    }
}

/// `δ(x, y) = log(max x/y / min x/y)`, computed from log differences.
pub fn projective_distance(x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::Dimension(format!(
            "simplex points on different fibers ({} vs {})",
            x.dim(),
            y.dim()
        )));
    }
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (i, (&a, &b)) in x.coords.iter().zip(y.coords.iter()).enumerate() {
        if a < MIN_COORDINATE || b < MIN_COORDINATE {
            return Err(Error::NotInSimplex(i));
        }
        let r = a.ln() - b.ln();
        hi = hi.max(r);
        lo = lo.min(r);
    }
    Ok((hi - lo).max(0.0))
}

/// Index of the first all-zero row, if any.
pub fn first_zero_row(t: &DMatrix<f64>) -> Option<usize> {
    (0..t.nrows()).find(|&i| t.row(i).iter().all(|&v| v == 0.0))
}

/// Every row has a positive entry.
pub fn is_row_allowable(t: &DMatrix<f64>) -> bool {
    t.nrows() > 0 && t.ncols() > 0 && first_zero_row(t).is_none()
}

pub fn is_positive(t: &DMatrix<f64>) -> bool {
    t.iter().all(|&v| v > 0.0)
}

/// `F_T(x) = T x / |T x|₁`, defined for row allowable `T`.
pub fn apply_normalized(t: &DMatrix<f64>, x: &SimplexPoint) -> Result<SimplexPoint> {
    if t.ncols() != x.dim() {
        return Err(Error::Dimension(format!(
            "matrix has {} columns, point has {} coordinates",
            t.ncols(),
            x.dim()
        )));
    }
    if let Some(r) = first_zero_row(t) {
        return Err(Error::ZeroRow(r));
    }
    let y = t * &x.coords;
    let s = y.sum();
    Ok(SimplexPoint { coords: y / s })
}

/// Birkhoff cross-ratio minimum `phi` and contraction coefficient
/// `tau = (1 - √phi) / (1 + √phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionCoefficient {
    pub phi: f64,
    pub tau: f64,
}

impl ContractionCoefficient {
    fn from_phi(phi: f64) -> Self {
        let r = phi.sqrt();
        Self {
            phi,
            tau: (1.0 - r) / (1.0 + r),
        }
    }

    pub fn is_contracting(&self) -> bool {
        self.tau < 1.0
    }
}

/// Exhaustive minimum of `T(e',e) T(f',f) / (T(e',f) T(f',e))`; zero (and
/// `tau = 1`) as soon as `T` has a zero entry.
pub fn contraction_coefficient(t: &DMatrix<f64>) -> Result<ContractionCoefficient> {
    if let Some(r) = first_zero_row(t) {
        return Err(Error::ZeroRow(r));
    }
    if !is_positive(t) {
        return Ok(ContractionCoefficient { phi: 0.0, tau: 1.0 });
    }
    let logs = t.map(f64::ln);
    let (rows, cols) = logs.shape();
    // degenerate quadruples give ratio 1, i.e. log ratio 0
    let mut min_log = 0.0f64;
    for e1 in 0..rows {
        for f1 in (e1 + 1)..rows {
            for e in 0..cols {
                for f in (e + 1)..cols {
                    let r = logs[(e1, e)] + logs[(f1, f)] - logs[(e1, f)] - logs[(f1, e)];
                    // the swapped quadruple gives -r
                    min_log = min_log.min(-r.abs());
                }
            }
        }
    }
    Ok(ContractionCoefficient::from_phi(min_log.exp()))
}

/// Contraction coefficient of `T` acting through its nonzero columns.
///
/// Coordinates on zero columns never reach `T x`, so when the nonzero
/// columns form a strictly positive block this is the Birkhoff
/// coefficient of that block, which is `< 1` even though `T` itself has
/// zeros. Otherwise it is `tau = 1`.
pub fn support_contraction_coefficient(t: &DMatrix<f64>) -> Result<ContractionCoefficient> {
    if let Some(r) = first_zero_row(t) {
        return Err(Error::ZeroRow(r));
    }
    let keep: Vec<usize> = (0..t.ncols())
        .filter(|&j| t.column(j).iter().any(|&v| v != 0.0))
        .collect();
    let reduced = t.select_columns(&keep);
    contraction_coefficient(&reduced)
}

/// Row allowable, and the nonzero columns are strictly positive.
pub fn is_column_support_positive(t: &DMatrix<f64>) -> bool {
    is_row_allowable(t)
        && (0..t.ncols()).all(|j| {
            let c = t.column(j);
            c.iter().all(|&v| v == 0.0) || c.iter().all(|&v| v > 0.0)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(v: &[f64]) -> SimplexPoint {
        SimplexPoint::from_slice(v).unwrap()
    }

    // every quadruple, including degenerate ones, straight from the definition
    fn brute_phi(t: &DMatrix<f64>) -> f64 {
        let mut m = f64::INFINITY;
        for e1 in 0..t.nrows() {
            for f1 in 0..t.nrows() {
                for e in 0..t.ncols() {
                    for f in 0..t.ncols() {
                        m = m.min(t[(e1, e)] * t[(f1, f)] / (t[(e1, f)] * t[(f1, e)]));
                    }
                }
            }
        }
        m
    }

    #[test]
    fn distance_examples() {
        let x = pt(&[0.5, 0.5]);
        assert_eq!(projective_distance(&x, &x).unwrap(), 0.0);
        let y = pt(&[0.25, 0.75]);
        assert!((projective_distance(&x, &y).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!(projective_distance(&x, &pt(&[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn simplex_point_rejects_zero() {
        assert_eq!(SimplexPoint::from_slice(&[1.0, 0.0]), Err(Error::NotInSimplex(1)));
    }

    #[test]
    fn apply_examples() {
        let x = pt(&[0.2, 0.3, 0.5]);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(apply_normalized(&id, &x).unwrap().coords(), x.coords());

        let rank1 = DMatrix::from_fn(2, 3, |i, j| (i as f64 + 1.0) * (j as f64 + 2.0));
        let a = apply_normalized(&rank1, &x).unwrap();
        let b = apply_normalized(&rank1, &pt(&[0.7, 0.2, 0.1])).unwrap();
        assert!(projective_distance(&a, &b).unwrap() < 1e-14);

        let zero_row = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(apply_normalized(&zero_row, &pt(&[0.5, 0.5])), Err(Error::ZeroRow(1)));
    }

    #[test]
    fn apply_nongibbs_block() {
        // the 4x4 self-transition block of the 6-state example, gamma = 0.3
        let g = 0.3;
        let m00 = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.0, 2.0 * g, g, 0.0, 0.0, g, g, 0.25, 0.25, 0.0, 0.0, 0.25, 0.25, 0.0, 0.0],
        );
        let out = apply_normalized(&m00, &SimplexPoint::uniform(4)).unwrap();
        let expected = [3.0 * g, 2.0 * g, 0.5, 0.5].map(|v| v / (5.0 * g + 1.0));
        for i in 0..4 {
            assert!((out.coords()[i] - expected[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn row_allowable_examples() {
        assert!(is_row_allowable(&DMatrix::from_element(2, 3, 0.5)));
        // rows {a, c} x cols {b, d} of the converse example
        let m01 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(first_zero_row(&m01), Some(1));
        assert_eq!(first_zero_row(&DMatrix::zeros(2, 2)), Some(0));
    }

    #[test]
    fn contraction_examples() {
        let ones = DMatrix::from_element(2, 2, 1.0);
        let c = contraction_coefficient(&ones).unwrap();
        assert_eq!((c.phi, c.tau), (1.0, 0.0));

        let t = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let c = contraction_coefficient(&t).unwrap();
        assert!((c.phi - brute_phi(&t)).abs() < 1e-15);
        assert!((c.phi - 0.5).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        assert!((c.tau - (1.0 - s) / (1.0 + s)).abs() < 1e-12);
        assert!((c.tau - 0.171573).abs() < 1e-6);

        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(contraction_coefficient(&z).unwrap().tau, 1.0);
        assert!(contraction_coefficient(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn support_contraction_ignores_zero_columns() {
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 3.0]);
        assert_eq!(contraction_coefficient(&t).unwrap().tau, 1.0);
        assert_eq!(support_contraction_coefficient(&t).unwrap().tau, 0.0);
        assert!(is_column_support_positive(&t));
        let mixed = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        assert!(!is_column_support_positive(&mixed));
        assert_eq!(support_contraction_coefficient(&mixed).unwrap().tau, 1.0);
    }

    fn positive_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(0.01f64..10.0, rows * cols)
            .prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
    }

    fn simplex(dim: usize) -> impl Strategy<Value = SimplexPoint> {
        proptest::collection::vec(0.01f64..1.0, dim).prop_map(|v| SimplexPoint::from_slice(&v).unwrap())
    }

    proptest! {
        #[test]
        fn quadruple_minimum_matches_brute_force(t in positive_matrix(3, 4)) {
            let c = contraction_coefficient(&t).unwrap();
            prop_assert!((c.phi - brute_phi(&t)).abs() <= 1e-12 * brute_phi(&t).max(1e-300));
        }

        #[test]
        fn scale_invariance(t in positive_matrix(3, 2), s in 0.001f64..1000.0) {
            let a = contraction_coefficient(&t).unwrap();
            let b = contraction_coefficient(&(t * s)).unwrap();
            prop_assert!((a.tau - b.tau).abs() < 1e-12);
        }

        #[test]
        fn positive_maps_contract(t in positive_matrix(3, 4), x in simplex(4), y in simplex(4)) {
            let tau = contraction_coefficient(&t).unwrap().tau;
            let d0 = projective_distance(&x, &y).unwrap();
            let d1 = projective_distance(&apply_normalized(&t, &x).unwrap(), &apply_normalized(&t, &y).unwrap()).unwrap();
            prop_assert!(d1 <= tau * d0 + 1e-12);
        }

        #[test]
        fn cocycle_property(t1 in positive_matrix(3, 4), t2 in positive_matrix(2, 3), x in simplex(4)) {
            let two_steps = apply_normalized(&t2, &apply_normalized(&t1, &x).unwrap()).unwrap();
            let product = apply_normalized(&(&t2 * &t1), &x).unwrap();
            prop_assert!((two_steps.coords() - product.coords()).abs().max() < 1e-13);
        }
    }
}
