//! Numerical Bowen–Gibbs diagnostics for `ν` and the identities behind the
//! matrix formula.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::markov::{derive_potential, log_cylinder_measure};
use crate::potential::{evaluate, markov_approx, PointSpec, PotentialEvaluation, UniformConstants};
use crate::projection::{log_nu_cylinder, FactorSystem};
use crate::tmc::enumerate_words;

/// Tolerance for the measure identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for the Markov-potential identity on the source.
pub const MARKOV_IDENTITY_TOL: f64 = 1e-13;

/// Deterministic periodic completion of a factor word.
///
/// Closes `w` into a cycle through the shortest return path from its last
/// symbol to its first. If no return exists, follows least successors from
/// the last symbol until a symbol repeats and uses that cycle as tail.
pub fn canonical_extension(fs: &FactorSystem, w: &[usize]) -> Result<PointSpec> {
    if w.is_empty() {
        return Err(Error::WordTooShort { min: 1, got: 0 });
    }
    let n = fs.factor();
    let (first, last) = (w[0], w[w.len() - 1]);
    // BFS over paths of at least one edge from `last` to `first`
    let mut parent: Vec<Option<usize>> = vec![None; n.size()];
    let mut seen = vec![false; n.size()];
    let mut queue = VecDeque::new();
    for s in n.successors(last) {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        if v == first {
            let mut path = vec![v];
            let mut cur = v;
            while let Some(p) = parent[cur] {
                path.push(p);
                cur = p;
            }
            path.reverse();
            path.pop(); // `first` itself starts the next period
            let mut period = w.to_vec();
            period.extend(path);
            return PointSpec::periodic(fs, period);
        }
        for s in n.successors(v) {
            if !seen[s] {
                seen[s] = true;
                parent[s] = Some(v);
                queue.push_back(s);
            }
        }
    }
    let mut walk = vec![last];
    loop {
        let cur = *walk.last().expect("nonempty");
        let next = n.successors(cur).next().expect("no stranded symbols");
        if let Some(i) = walk.iter().position(|&x| x == next) {
            let mut full = w.to_vec();
            full.extend_from_slice(&walk[1..]);
            let cut = w.len() - 1 + i;
            let period = full.split_off(cut);
            return PointSpec::new(fs, full, period);
        }
        walk.push(next);
    }
}

/// Evaluates every point once, in parallel.
fn evaluate_all(
    fs: &FactorSystem,
    points: BTreeSet<PointSpec>,
    tol: f64,
    constants: Option<&UniformConstants>,
) -> Result<HashMap<PointSpec, PotentialEvaluation>> {
    points
        .into_par_iter()
        .map(|p| evaluate(fs, &p, tol, constants).map(|e| (p, e)))
        .collect()
}

fn orbit(point: &PointSpec, len: usize) -> Vec<PointSpec> {
    let mut out = Vec::with_capacity(len);
    let mut p = point.clone();
    for _ in 0..len {
        out.push(p.canonical());
        p = p.shift();
    }
    out
}

/// `log R_n(w) = log ν[w] − Σ_{j=0}^{n} ψ(σʲ b_w)` with `b_w` the canonical
/// extension; also returns the number of diverged points used.
pub fn cylinder_log_ratio(
    fs: &FactorSystem,
    w: &[usize],
    tol: f64,
    constants: Option<&UniformConstants>,
) -> Result<(f64, usize)> {
    let ext = canonical_extension(fs, w)?;
    let points = orbit(&ext, w.len());
    let values = evaluate_all(fs, points.iter().cloned().collect(), tol, constants)?;
    let mut sum = 0.0;
    let mut undefined = 0;
    for p in &points {
        let e = &values[p];
        undefined += e.is_diverged() as usize;
        sum += e.representative();
    }
    Ok((log_nu_cylinder(fs, w)? - sum, undefined))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BgiRow {
    pub n: usize,
    pub cylinder_count: usize,
    /// Largest `|log R_m(w)|` over cylinders of length `m + 1 ≤ n + 1`.
    pub k_emp: f64,
    pub k_cert: Option<f64>,
    /// `(n+1)` times the largest evaluation radius, plus, when certified,
    /// `C / (1 − θ)` for the choice of tail and the boundary term
    /// `sup |ψ(b) − log ν[b₀]|`.
    pub slack: f64,
    /// Diverged evaluations that entered the row.
    pub undefined: usize,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BgiReport {
    pub rows: Vec<BgiRow>,
}

impl BgiReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict == "pass")
    }
}

pub fn bgi_sweep(
    fs: &FactorSystem,
    constants: Option<&UniformConstants>,
    n_max: usize,
    tol: f64,
) -> Result<BgiReport> {
    let mut levels = Vec::with_capacity(n_max + 1);
    let mut needed = BTreeSet::new();
    for n in 0..=n_max {
        let words = enumerate_words(fs.factor(), n + 1)?;
        let mut level = Vec::with_capacity(words.len());
        for w in words {
            let orbit = orbit(&canonical_extension(fs, w.symbols())?, n + 1);
            needed.extend(orbit.iter().cloned());
            level.push((w, orbit));
        }
        levels.push(level);
    }
    let values = evaluate_all(fs, needed, tol, constants)?;
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut k_running: f64 = 0.0;
    for (n, level) in levels.into_iter().enumerate() {
        let mut radius: f64 = 0.0;
        let mut undefined = 0;
        let count = level.len();
        for (w, orbit) in level {
            let mut sum = 0.0;
            for p in &orbit {
                let e = &values[p];
                radius = radius.max(e.error_radius);
                undefined += e.is_diverged() as usize;
                sum += e.representative();
            }
            let log_r = log_nu_cylinder(fs, w.symbols())? - sum;
            k_running = k_running.max(log_r.abs());
        }
        let mut slack = (n + 1) as f64 * radius;
        let (k_cert, verdict) = match constants {
            Some(k) => {
                slack += k.c_total / (1.0 - k.theta) + k.boundary;
                let ok = undefined == 0 && k_running <= k.k_gibbs + slack;
                (Some(k.k_gibbs), if ok { "pass" } else { "fail" })
            }
            None => (None, "uncertified"),
        };
        rows.push(BgiRow {
            n,
            cylinder_count: count,
            k_emp: k_running,
            k_cert,
            slack,
            undefined,
            verdict: verdict.into(),
        });
    }
    Ok(BgiReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub check: &'static str,
    pub n: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
}

impl InvarianceReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn worst(&self, check: &str) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.check == check)
            .map(|r| r.worst_residual)
            .fold(0.0, f64::max)
    }
}

fn row(check: &'static str, n: usize, worst: f64, tolerance: f64) -> InvarianceRow {
    InvarianceRow {
        check,
        n,
        worst_residual: worst,
        tolerance,
        pass: worst <= tolerance,
    }
}

fn max_par(values: impl ParallelIterator<Item = Result<f64>>) -> Result<f64> {
    values.try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Worst residuals, per word length `n ≤ n_max`, of: total mass, shift
/// invariance and consistency of `ν`, the normalization
/// `Σ_{b₀} exp ψ_n(b₀ w) = 1`, and the range-two identity for `μ`.
pub fn invariance_suite(fs: &FactorSystem, n_max: usize) -> Result<InvarianceReport> {
    let factor = fs.factor();
    let nb = factor.size();
    let model = fs.model();
    let phi = derive_potential(model);
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let words = enumerate_words(factor, n)?;
        let logs: Vec<f64> = words
            .par_iter()
            .map(|w| log_nu_cylinder(fs, w.symbols()))
            .collect::<Result<_>>()?;
        let total: f64 = logs.iter().map(|l| l.exp()).sum();
        rows.push(row("total_mass", n, (total - 1.0).abs(), IDENTITY_TOL));

        let shift = max_par(words.par_iter().zip(&logs).map(|(w, &lw)| {
            let mut s = 0.0;
            for b0 in factor.predecessors(w.first()) {
                let mut v = vec![b0];
                v.extend_from_slice(w.symbols());
                s += log_nu_cylinder(fs, &v)?.exp();
            }
            Ok((s / lw.exp() - 1.0).abs())
        }))?;
        rows.push(row("shift_invariance", n, shift, IDENTITY_TOL));

        let consistency = max_par(words.par_iter().zip(&logs).map(|(w, &lw)| {
            let mut s = 0.0;
            for b1 in factor.successors(w.last()) {
                let mut v = w.symbols().to_vec();
                v.push(b1);
                s += log_nu_cylinder(fs, &v)?.exp();
            }
            Ok((s / lw.exp() - 1.0).abs())
        }))?;
        rows.push(row("consistency", n, consistency, IDENTITY_TOL));

        let g_norm = max_par(words.par_iter().map(|w| {
            let mut s = 0.0;
            for b0 in (0..nb).filter(|&b0| factor.allowed(b0, w.first())) {
                let mut v = vec![b0];
                v.extend_from_slice(w.symbols());
                s += markov_approx(fs, &v)?.exp();
            }
            Ok((s - 1.0).abs())
        }))?;
        rows.push(row("g_normalization", n, g_norm, IDENTITY_TOL));

        let source = enumerate_words(model.tmc(), n)?;
        let markov = max_par(source.par_iter().map(|w| {
            let s = w.symbols();
            let lhs = log_cylinder_measure(model, w)?.exp();
            let rhs = s.windows(2).map(|p| phi.get(p[0], p[1])).sum::<f64>().exp()
                * model.stationary()[w.last()];
            Ok((lhs - rhs).abs() / lhs)
        }))?;
        rows.push(row("markov_identity", n, markov, MARKOV_IDENTITY_TOL));
    }
    Ok(InvarianceReport { rows })
}
