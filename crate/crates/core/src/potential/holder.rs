use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{evaluate, PointSpec, UniformConstants};
use crate::error::Result;
use crate::gibbs::canonical_extension;
use crate::projection::FactorSystem;
use crate::tmc::{enumerate_periodic, enumerate_words};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderRow {
    pub n: usize,
    pub words: usize,
    /// Largest spread of `ψ` over the tested extensions of a length-`n+1` word.
    pub var: f64,
    /// `C θⁿ`.
    pub bound: f64,
    /// Largest evaluation radius in the row.
    pub radius: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub rows: Vec<HolderRow>,
    /// `exp` of the least-squares slope of `log var_n` over the rows above
    /// the evaluation noise floor; `None` with fewer than two such rows.
    pub fitted_rate: Option<f64>,
    /// Every row with `n ≥ 1` is at the noise floor: `ψ` depends on `b₀b₁`
    /// only, as far as the evaluation can resolve.
    pub vanishing: bool,
    pub theta: f64,
    /// `log(1/τ)`.
    pub exponent: f64,
}

/// Extensions of `w`: `w` followed by every enterable cycle of period
/// `≤ #B`, plus the periodic completion of `w`.
fn extensions(fs: &FactorSystem, w: &[usize], cycles: &[Vec<usize>]) -> Vec<PointSpec> {
    let last = w[w.len() - 1];
    let mut out: Vec<PointSpec> = cycles
        .iter()
        .filter(|c| fs.factor().allowed(last, c[0]))
        .filter_map(|c| PointSpec::new(fs, w.to_vec(), c.clone()).ok())
        .map(|p| p.canonical())
        .collect();
    if let Ok(p) = canonical_extension(fs, w) {
        out.push(p.canonical());
    }
    out.sort();
    out.dedup();
    out
}

/// `var_n ψ` estimated over the tail extensions of every admissible word of
/// length `n + 1`, `0 ≤ n ≤ n_max`, each value certified to `tol`.
pub fn holder_variation(
    fs: &FactorSystem,
    constants: &UniformConstants,
    n_max: usize,
    tol: f64,
) -> Result<HolderReport> {
    let cycles: Vec<Vec<usize>> = enumerate_periodic(fs.factor(), fs.factor().size())
        .into_iter()
        .map(|p| p.symbols().to_vec())
        .collect();
    let mut rows = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let words = enumerate_words(fs.factor(), n + 1)?;
        let per_word: Vec<Vec<PointSpec>> = words
            .iter()
            .map(|w| extensions(fs, w.symbols(), &cycles))
            .collect();
        let mut points: Vec<PointSpec> = per_word.iter().flatten().cloned().collect();
        points.sort();
        points.dedup();
        let evaluated: Vec<(PointSpec, f64, f64)> = points
            .into_par_iter()
            .map(|p| {
                let e = evaluate(fs, &p, tol, Some(constants))?;
                Ok((p, e.representative(), e.error_radius))
            })
            .collect::<Result<_>>()?;
        let mut radius: f64 = 0.0;
        let table: BTreeMap<PointSpec, f64> = evaluated
            .into_iter()
            .map(|(p, v, r)| {
                radius = radius.max(r);
                (p, v)
            })
            .collect();
        let var = per_word
            .iter()
            .map(|ext| {
                let vals = ext.iter().map(|p| table[p]);
                let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
                let lo = vals.fold(f64::INFINITY, f64::min);
                if ext.len() < 2 {
                    0.0
                } else {
                    hi - lo
                }
            })
            .fold(0.0, f64::max);
        let bound = constants.holder_bound(n);
        rows.push(HolderRow {
            n,
            words: words.len(),
            var,
            bound,
            radius,
            within_bound: var <= bound + 2.0 * radius,
        });
    }
    let vanishing = rows.iter().filter(|r| r.n >= 1).all(|r| !above_noise(r));
    Ok(HolderReport {
        fitted_rate: fit_rate(&rows),
        vanishing,
        theta: constants.theta,
        exponent: constants.holder_exponent(),
        rows,
    })
}

fn above_noise(r: &HolderRow) -> bool {
    r.var > 20.0 * r.radius && r.var > 0.0
}

fn fit_rate(rows: &[HolderRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n >= 1 && above_noise(r))
        .map(|r| (r.n as f64, r.var.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, var: f64) -> HolderRow {
        HolderRow {
            n,
            words: 1,
            var,
            bound: 1.0,
            radius: 1e-12,
            within_bound: true,
        }
    }

    #[test]
    fn fit_recovers_geometric_rate() {
        let rows: Vec<HolderRow> = (0..10).map(|n| row(n, 3.0 * 0.4f64.powi(n as i32))).collect();
        assert!((fit_rate(&rows).unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(fit_rate(&[row(1, 1.0)]), None);
    }
}
