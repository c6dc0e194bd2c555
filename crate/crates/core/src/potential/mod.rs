//! The induced potential `ψ(b) = lim log(ν[b(0:n)] / ν[b(1:n)])`.
//!
//! Values are computed from normalized fiber products along eventually
//! periodic points. With [`UniformConstants`] the error radius is certified;
//! without them evaluation falls back to a Cauchy criterion and a
//! subsequence analysis that recognizes oscillating limits.

mod constants;
mod holder;
mod obstruction;
mod perron;

use std::fmt;

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::projection::{log_nu_cylinder, FiberCocycle};
use crate::projective::{contraction_coefficient, first_zero_row, is_positive};
use crate::tmc::{is_primitive_word, Alphabet};

pub use constants::{factorization_sequence, uniform_constants, UniformConstants, TAU_FLOOR};
pub use holder::{holder_variation, HolderReport, HolderRow};
pub use obstruction::{finite_range_obstruction, ObstructionReport, OBSTRUCTION_TOL};
pub use perron::{perron_data, periodic_potential, PerronData};

/// Terms tried by adaptive evaluation before giving up.
pub const MAX_ADAPTIVE_TERMS: usize = 1 << 12;
/// Hard cap on the number of terms a certified evaluation may request.
pub const MAX_CERTIFIED_TERMS: usize = 1 << 20;
/// Subsequence clusters must be this tight ...
pub const CLUSTER_SPREAD: f64 = 1e-9;
/// ... and this far apart to count as divergence.
pub const CLUSTER_GAP: f64 = 1e-6;

/// The eventually periodic point `preperiod · period^∞`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PointSpec {
    preperiod: Vec<usize>,
    period: Vec<usize>,
}

impl PointSpec {
    pub fn new<C: FiberCocycle + ?Sized>(
        c: &C,
        preperiod: Vec<usize>,
        period: Vec<usize>,
    ) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::WordTooShort { min: 1, got: 0 });
        }
        let mut path = preperiod.clone();
        path.extend_from_slice(&period);
        path.push(period[0]);
        if !c.is_admissible(&path) {
            return Err(Error::Inadmissible {
                from: format!("{preperiod:?}"),
                to: format!("({period:?})^inf"),
            });
        }
        Ok(Self { preperiod, period })
    }

    pub fn periodic<C: FiberCocycle + ?Sized>(c: &C, period: Vec<usize>) -> Result<Self> {
        Self::new(c, Vec::new(), period)
    }

    /// Parses `pre/period`, e.g. `ab/cab` or `/0`.
    pub fn parse<C: FiberCocycle + ?Sized>(c: &C, alphabet: &Alphabet, text: &str) -> Result<Self> {
        let (pre, per) = text.split_once('/').ok_or_else(|| {
            Error::Setting(format!("point `{text}` must have the form preperiod/period"))
        })?;
        Self::new(c, alphabet.parse(pre)?, alphabet.parse(per)?)
    }

    pub fn preperiod(&self) -> &[usize] {
        &self.preperiod
    }

    pub fn period(&self) -> &[usize] {
        &self.period
    }

    pub fn symbol(&self, i: usize) -> usize {
        let k = self.preperiod.len();
        if i < k {
            self.preperiod[i]
        } else {
            self.period[(i - k) % self.period.len()]
        }
    }

    pub fn prefix(&self, len: usize) -> Vec<usize> {
        (0..len).map(|i| self.symbol(i)).collect()
    }

    /// `σ(b)`.
    pub fn shift(&self) -> Self {
        if self.preperiod.is_empty() {
            let mut period = self.period.clone();
            period.rotate_left(1);
            Self {
                preperiod: Vec::new(),
                period,
            }
        } else {
            Self {
                preperiod: self.preperiod[1..].to_vec(),
                period: self.period.clone(),
            }
        }
    }

    /// Same point, shortest description: primitive period, preperiod as short
    /// as possible.
    pub fn canonical(&self) -> Self {
        let mut period = self.period.clone();
        let p = period.len();
        if let Some(d) = (1..p).find(|&d| p.is_multiple_of(d) && (d..p).all(|i| period[i] == period[i - d])) {
            period.truncate(d);
        }
        debug_assert!(is_primitive_word(&period));
        let mut preperiod = self.preperiod.clone();
        while preperiod.last() == period.last() && !preperiod.is_empty() {
            preperiod.pop();
            period.rotate_right(1);
        }
        Self { preperiod, period }
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        format!("{}/{}", alphabet.render(&self.preperiod), alphabet.render(&self.period))
    }

    /// The finitely many transitions the point uses, with a position where
    /// each first occurs.
    fn transitions(&self) -> Vec<(usize, (usize, usize))> {
        let span = self.preperiod.len() + self.period.len();
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for i in 0..span {
            let t = (self.symbol(i), self.symbol(i + 1));
            if !seen.contains(&t) {
                seen.push(t);
                out.push((i, t));
            }
        }
        out
    }
}

impl fmt::Display for PointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{:?}", self.preperiod, self.period)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EvalMode {
    /// Radius from the uniform constants.
    Certified,
    /// Cauchy criterion plus a strictly positive window product.
    Adaptive,
    /// Apparent convergence without a contraction guarantee, or no
    /// convergence within the term budget.
    Uncertified,
    /// Residue subsequences converge to distinct values.
    Diverged { clusters: Vec<f64> },
}

impl EvalMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Certified => "certified",
            Self::Adaptive => "adaptive",
            Self::Uncertified => "uncertified",
            Self::Diverged { .. } => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialEvaluation {
    /// Absent when diverged.
    pub value: Option<f64>,
    pub error_radius: f64,
    pub terms_used: usize,
    #[serde(flatten)]
    pub mode: EvalMode,
}

impl PotentialEvaluation {
    pub fn is_diverged(&self) -> bool {
        matches!(self.mode, EvalMode::Diverged { .. })
    }

    /// The value, or the first cluster for a diverged point.
    pub fn representative(&self) -> f64 {
        match (&self.value, &self.mode) {
            (Some(v), _) => *v,
            (None, EvalMode::Diverged { clusters }) => clusters[0],
            (None, _) => f64::NAN,
        }
    }
}

/// `ψ_n(w) = log(ν[w] / ν[w(1:)])`.
pub fn markov_approx<C: FiberCocycle + ?Sized>(c: &C, w: &[usize]) -> Result<f64> {
    if w.len() < 2 {
        return Err(Error::WordTooShort { min: 2, got: w.len() });
    }
    let num = log_nu_cylinder(c, w)?;
    let den = log_nu_cylinder(c, &w[1..])?;
    if den == f64::NEG_INFINITY {
        return Err(Error::Hypothesis("ν of the shifted word vanishes".into()));
    }
    Ok(num - den)
}

/// Refuses points that cross a fiber matrix with an all-zero row.
fn check_rows<C: FiberCocycle + ?Sized>(c: &C, point: &PointSpec) -> Result<()> {
    for (pos, (b, b2)) in point.transitions() {
        if let Some(row) = first_zero_row(c.weight(b, b2)) {
            return Err(Error::Hypothesis(format!(
                "fiber matrix ({b}, {b2}) at position {pos} has zero row {row}"
            )));
        }
    }
    Ok(())
}

/// `log(𝟙ᵀ 𝓜_{b(0:1)} x_{b(1:n)})` for `n = 1..=n_max`; entry `n - 1` holds
/// the `n`-th iterate.
///
/// Uses the forward recursion on the normalized product `𝓜_{b(1:n)}`, which
/// yields every iterate in one pass.
pub fn iterate_values<C: FiberCocycle + ?Sized>(
    c: &C,
    point: &PointSpec,
    n_max: usize,
) -> Result<Vec<f64>> {
    check_rows(c, point)?;
    let b0 = point.symbol(0);
    let b1 = point.symbol(1);
    let u: RowDVector<f64> = RowDVector::from_element(c.fiber_size(b0), 1.0) * c.weight(b0, b1);
    let mut r: DMatrix<f64> = DMatrix::identity(c.fiber_size(b1), c.fiber_size(b1));
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n >= 2 {
            r = &r * c.weight(point.symbol(n - 1), point.symbol(n));
            let s = r.sum();
            r /= s;
        }
        let x: DVector<f64> = &r * c.normalized_marginal(point.symbol(n));
        let num = (&u * &x)[0];
        let den = x.sum();
        if !(den > 0.0 && num > 0.0) {
            return Err(Error::Hypothesis(format!("iterate {n} left the simplex")));
        }
        out.push(num.ln() - den.ln());
    }
    Ok(out)
}

/// The `n`-th iterate alone.
pub fn iterate_value<C: FiberCocycle + ?Sized>(c: &C, point: &PointSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::WordTooShort { min: 1, got: 0 });
    }
    Ok(*iterate_values(c, point, n)?.last().expect("n >= 1"))
}

/// Floating-point allowance for `n` normalized products of dimension `dim`.
fn rounding_allowance(n: usize, dim: usize) -> f64 {
    8.0 * f64::EPSILON * (n + 4) as f64 * dim.max(1) as f64
}

fn max_fiber<C: FiberCocycle + ?Sized>(c: &C) -> usize {
    (0..c.factor_size()).map(|b| c.fiber_size(b)).max().unwrap_or(1)
}

/// Evaluates `ψ` at `point`.
///
/// With `constants` the number of terms is chosen so that the certified
/// radius `(D C₁ / (1 - τ)) θⁿ` is at most `target_error`; otherwise the
/// adaptive procedure runs.
pub fn evaluate<C: FiberCocycle + ?Sized>(
    c: &C,
    point: &PointSpec,
    target_error: f64,
    constants: Option<&UniformConstants>,
) -> Result<PotentialEvaluation> {
    if !(target_error > 0.0) {
        return Err(Error::OptionRange {
            name: "target_error".into(),
            value: target_error,
            range: "(0, inf)".into(),
        });
    }
    match constants {
        Some(k) => evaluate_certified(c, point, target_error, k),
        None => evaluate_adaptive(c, point, target_error, MAX_ADAPTIVE_TERMS),
    }
}

fn evaluate_certified<C: FiberCocycle + ?Sized>(
    c: &C,
    point: &PointSpec,
    target: f64,
    k: &UniformConstants,
) -> Result<PotentialEvaluation> {
    let n = k.terms_for(target);
    if n > MAX_CERTIFIED_TERMS {
        return Err(Error::NoConvergence(format!(
            "certified radius needs {n} terms for target {target:e}"
        )));
    }
    let value = iterate_value(c, point, n)?;
    Ok(PotentialEvaluation {
        value: Some(value),
        error_radius: k.certified_radius(n) + rounding_allowance(n, max_fiber(c)),
        terms_used: n,
        mode: EvalMode::Certified,
    })
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

fn spread(values: impl IntoIterator<Item = f64>) -> (f64, f64, f64) {
    let (mut lo, mut hi, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
        n += 1;
    }
    (hi - lo, sum / n as f64, lo)
}

/// Cluster values when the residues mod `k·p` of `window` stabilize apart,
/// for the smallest such `k`.
fn detect_clusters(window: &[f64], p: usize, k_max: usize) -> Option<Vec<f64>> {
    for k in 2..=k_max {
        let m = k * p;
        if window.len() < 2 * m {
            break;
        }
        let classes: Vec<(f64, f64)> = (0..m)
            .map(|r| {
                let (s, mean, _) = spread(window.iter().skip(r).step_by(m).copied());
                (s, mean)
            })
            .collect();
        if classes.iter().any(|&(s, _)| s >= CLUSTER_SPREAD) {
            continue;
        }
        let (gap, _, _) = spread(classes.iter().map(|&(_, mean)| mean));
        if gap <= CLUSTER_GAP {
            continue;
        }
        let mut means: Vec<f64> = classes.iter().map(|&(_, mean)| mean).collect();
        means.sort_by(|a, b| b.total_cmp(a));
        means.dedup_by(|a, b| (*a - *b).abs() < CLUSTER_SPREAD);
        return Some(means);
    }
    None
}

fn same_clusters(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < CLUSTER_SPREAD)
}

/// Contraction coefficient of the worst length-`2(#B+1)` window in the
/// periodic tail; `None` when some window product is not strictly positive.
fn tail_window_tau<C: FiberCocycle + ?Sized>(c: &C, point: &PointSpec) -> Option<f64> {
    let s = 2 * (c.factor_size() + 1);
    let start = point.preperiod().len();
    let mut worst: f64 = 0.0;
    for j in 0..point.period().len() {
        let word: Vec<usize> = (start + j..=start + j + s).map(|i| point.symbol(i)).collect();
        let t = c.product(&word);
        if !is_positive(&t) {
            return None;
        }
        worst = worst.max(contraction_coefficient(&t).ok()?.tau);
    }
    Some(worst)
}

fn evaluate_adaptive<C: FiberCocycle + ?Sized>(
    c: &C,
    point: &PointSpec,
    target: f64,
    max_terms: usize,
) -> Result<PotentialEvaluation> {
    let p = point.period().len();
    let k_max = max_fiber(c);
    let block = (1..=k_max).fold(1, lcm) * p;
    let width = 2 * block;
    let tail_tau = tail_window_tau(c, point);
    let mut previous_clusters: Option<Vec<f64>> = None;
    let mut n = 32usize.max(point.preperiod().len() + 2 * width);
    loop {
        let values = iterate_values(c, point, n)?;
        let window = &values[n - width..];
        let (cauchy, _, _) = spread(window.iter().copied());
        let last = values[n - 1];
        if cauchy < target {
            let (mode, radius) = match tail_tau {
                Some(tau) if tau < 1.0 => {
                    (EvalMode::Adaptive, cauchy.max(rounding_allowance(n, k_max)) / (1.0 - tau))
                }
                _ => (EvalMode::Uncertified, cauchy.max(rounding_allowance(n, k_max))),
            };
            return Ok(PotentialEvaluation {
                value: Some(last),
                error_radius: radius,
                terms_used: n,
                mode,
            });
        }
        let clusters = detect_clusters(window, p, k_max);
        if let (Some(now), Some(before)) = (&clusters, &previous_clusters) {
            if same_clusters(now, before) {
                return Ok(PotentialEvaluation {
                    value: None,
                    error_radius: 0.0,
                    terms_used: n,
                    mode: EvalMode::Diverged {
                        clusters: now.clone(),
                    },
                });
            }
        }
        previous_clusters = clusters;
        if n >= max_terms {
            return Ok(PotentialEvaluation {
                value: Some(last),
                error_radius: cauchy,
                terms_used: n,
                mode: EvalMode::Uncertified,
            });
        }
        n = (2 * n).min(max_terms);
    }
}
