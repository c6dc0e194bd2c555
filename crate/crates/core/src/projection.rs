//! One-block factor maps, the fiber matrices they induce, the image measure
//! `ν = μ ∘ π⁻¹`, and the structural hypotheses on the factor map.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::markov::{derive_potential, MarkovModel};
use crate::projective::{is_column_support_positive, is_positive};
use crate::tmc::{enumerate_periodic, Alphabet, PeriodicPoint, Tmc};

/// An onto alphabet map `π: A → B` with `#A > #B > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    source: Alphabet,
    target: Alphabet,
    map: Vec<usize>,
    fibers: Vec<Vec<usize>>,
}

impl Projection {
    pub fn new(source: Alphabet, target: Alphabet, map: Vec<usize>) -> Result<Self> {
        if map.len() != source.len() {
            return Err(Error::InvalidProjection(format!(
                "map has {} entries for {} source symbols",
                map.len(),
                source.len()
            )));
        }
        if target.len() <= 1 {
            return Err(Error::InvalidProjection(
                "target alphabet needs at least two symbols".into(),
            ));
        }
        if source.len() <= target.len() {
            return Err(Error::InvalidProjection(format!(
                "need #A > #B, got {} and {}",
                source.len(),
                target.len()
            )));
        }
        let mut fibers = vec![Vec::new(); target.len()];
        for (a, &b) in map.iter().enumerate() {
            if b >= target.len() {
                return Err(Error::InvalidProjection(format!("target index {b} out of range")));
            }
            fibers[b].push(a);
        }
        if let Some(b) = fibers.iter().position(Vec::is_empty) {
            return Err(Error::InvalidProjection(format!(
                "empty fiber over `{}`",
                target.label(b)
            )));
        }
        Ok(Self {
            source,
            target,
            map,
            fibers,
        })
    }

    /// Target labels are ordered by first appearance along the source
    /// alphabet.
    pub fn from_labels<'a>(
        source: &Alphabet,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut images: Vec<Option<String>> = vec![None; source.len()];
        for (a, b) in pairs {
            let i = source
                .index_of(a)
                .ok_or_else(|| Error::UnknownLabel(a.to_string()))?;
            if images[i].replace(b.to_string()).is_some() {
                return Err(Error::InvalidProjection(format!("`{a}` mapped twice")));
            }
        }
        let mut target_labels: Vec<String> = Vec::new();
        let mut map = Vec::with_capacity(source.len());
        for (i, img) in images.into_iter().enumerate() {
            let img = img.ok_or_else(|| {
                Error::InvalidProjection(format!("`{}` has no image", source.label(i)))
            })?;
            let j = match target_labels.iter().position(|l| *l == img) {
                Some(j) => j,
                None => {
                    target_labels.push(img);
                    target_labels.len() - 1
                }
            };
            map.push(j);
        }
        let target = Alphabet::new(target_labels)?;
        Self::new(source.clone(), target, map)
    }

    pub fn source(&self) -> &Alphabet {
        &self.source
    }

    pub fn target(&self) -> &Alphabet {
        &self.target
    }

    pub fn image(&self, a: usize) -> usize {
        self.map[a]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// `E_b = π⁻¹(b)` in source order.
    pub fn fiber(&self, b: usize) -> &[usize] {
        &self.fibers[b]
    }
}

/// Source of fiber weight matrices `𝓜_bb'` and marginals `μ_b`.
///
/// [`FactorSystem`] is the real thing; [`MatrixCocycle`] lets callers work
/// with hand-built matrices that do not come from a Markov measure.
pub trait FiberCocycle: Sync {
    fn factor_size(&self) -> usize;
    /// `N(b, b')`.
    fn transition_allowed(&self, b: usize, b_next: usize) -> bool;
    fn weight(&self, b: usize, b_next: usize) -> &DMatrix<f64>;
    fn marginal(&self, b: usize) -> &DVector<f64>;

    fn fiber_size(&self, b: usize) -> usize {
        self.marginal(b).len()
    }

    /// `𝓜_{w(0:n)}`; identity on `E_{w0}` for a one-letter word.
    fn product(&self, w: &[usize]) -> DMatrix<f64> {
        let mut acc = DMatrix::identity(self.fiber_size(w[0]), self.fiber_size(w[0]));
        for pair in w.windows(2) {
            acc *= self.weight(pair[0], pair[1]);
        }
        acc
    }

    /// `μ̂_b = μ_b / |μ_b|₁`.
    fn normalized_marginal(&self, b: usize) -> DVector<f64> {
        let m = self.marginal(b);
        m / m.sum()
    }

    fn is_admissible(&self, w: &[usize]) -> bool {
        !w.is_empty()
            && w.iter().all(|&b| b < self.factor_size())
            && w.windows(2).all(|p| self.transition_allowed(p[0], p[1]))
    }
}

/// Hand-assembled cocycle; `N(b, b')` is read off the nonzero weights.
#[derive(Debug, Clone)]
pub struct MatrixCocycle {
    size: usize,
    weights: Vec<DMatrix<f64>>,
    marginals: Vec<DVector<f64>>,
}

impl MatrixCocycle {
    /// `weights[b][b']` must be `|E_b| x |E_b'|`.
    pub fn new(weights: Vec<Vec<DMatrix<f64>>>, marginals: Vec<DVector<f64>>) -> Result<Self> {
        let size = marginals.len();
        if weights.len() != size || weights.iter().any(|r| r.len() != size) {
            return Err(Error::Dimension("weights must be indexed by symbol pairs".into()));
        }
        for (b, row) in weights.iter().enumerate() {
            for (c, w) in row.iter().enumerate() {
                if w.nrows() != marginals[b].len() || w.ncols() != marginals[c].len() {
                    return Err(Error::Dimension(format!("weight ({b}, {c}) has the wrong shape")));
                }
            }
        }
        Ok(Self {
            size,
            weights: weights.into_iter().flatten().collect(),
            marginals,
        })
    }
}

impl FiberCocycle for MatrixCocycle {
    fn factor_size(&self) -> usize {
        self.size
    }

    fn transition_allowed(&self, b: usize, b_next: usize) -> bool {
        self.weights[b * self.size + b_next].iter().any(|&v| v > 0.0)
    }

    fn weight(&self, b: usize, b_next: usize) -> &DMatrix<f64> {
        &self.weights[b * self.size + b_next]
    }

    fn marginal(&self, b: usize) -> &DVector<f64> {
        &self.marginals[b]
    }
}

/// A Markov model seen through a projection: the candidate factor TMC `N`,
/// the weighted fiber matrices `𝓜_bb'(a, a') = exp φ(a, a') M(a, a')` and the
/// fiber marginals `μ_b(a) = μ[a]`.
#[derive(Debug, Clone)]
pub struct FactorSystem {
    model: MarkovModel,
    projection: Projection,
    factor: Tmc,
    weights: Vec<DMatrix<f64>>,
    marginals: Vec<DVector<f64>>,
}

pub fn build_factor_system(model: MarkovModel, projection: Projection) -> Result<FactorSystem> {
    if projection.source() != model.tmc().alphabet() {
        return Err(Error::InvalidProjection(
            "projection source differs from the model alphabet".into(),
        ));
    }
    let nb = projection.target().len();
    let tmc = model.tmc();
    let phi = derive_potential(&model);
    let mut weights = Vec::with_capacity(nb * nb);
    let mut n_rows = vec![vec![false; nb]; nb];
    for b in 0..nb {
        for c in 0..nb {
            let rows = projection.fiber(b);
            let cols = projection.fiber(c);
            let w = DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
                let (a, a2) = (rows[i], cols[j]);
                if tmc.allowed(a, a2) {
                    phi.get(a, a2).exp()
                } else {
                    0.0
                }
            });
            n_rows[b][c] = rows.iter().any(|&a| cols.iter().any(|&a2| tmc.allowed(a, a2)));
            weights.push(w);
        }
    }
    let marginals = (0..nb)
        .map(|b| {
            let f = projection.fiber(b);
            DVector::from_fn(f.len(), |i, _| model.stationary()[f[i]])
        })
        .collect();
    let factor = Tmc::from_bool(projection.target().clone(), n_rows)?;
    Ok(FactorSystem {
        model,
        projection,
        factor,
        weights,
        marginals,
    })
}

impl FactorSystem {
    pub fn model(&self) -> &MarkovModel {
        &self.model
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    /// The TMC `B_N` on the target alphabet.
    pub fn factor(&self) -> &Tmc {
        &self.factor
    }

    /// The 0/1 block `M_bb'`.
    pub fn fiber_incidence(&self, b: usize, b_next: usize) -> DMatrix<f64> {
        let rows = self.projection.fiber(b);
        let cols = self.projection.fiber(b_next);
        let tmc = self.model.tmc();
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            tmc.allowed(rows[i], cols[j]) as u8 as f64
        })
    }

    pub fn nu_cylinder(&self, w: &[usize]) -> Result<f64> {
        nu_cylinder(self, w)
    }
}

impl FiberCocycle for FactorSystem {
    fn factor_size(&self) -> usize {
        self.projection.target().len()
    }

    fn transition_allowed(&self, b: usize, b_next: usize) -> bool {
        self.factor.allowed(b, b_next)
    }

    fn weight(&self, b: usize, b_next: usize) -> &DMatrix<f64> {
        &self.weights[b * self.factor_size() + b_next]
    }

    fn marginal(&self, b: usize) -> &DVector<f64> {
        &self.marginals[b]
    }
}

/// A row of `M_bb'` with no allowed transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct H1Failure {
    pub block: (usize, usize),
    /// Source symbol whose row is empty.
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct H1Report {
    pub pass: bool,
    pub failures: Vec<H1Failure>,
}

/// Full row allowability: every `M_bb'` with `N(b, b') = 1` has no zero row.
pub fn check_h1(fs: &FactorSystem) -> H1Report {
    let nb = fs.factor_size();
    let tmc = fs.model.tmc();
    let mut failures = Vec::new();
    for b in 0..nb {
        for c in 0..nb {
            if !fs.factor.allowed(b, c) {
                continue;
            }
            for &a in fs.projection.fiber(b) {
                if !fs.projection.fiber(c).iter().any(|&a2| tmc.allowed(a, a2)) {
                    failures.push(H1Failure {
                        block: (b, c),
                        row: a,
                    });
                }
            }
        }
    }
    H1Report {
        pass: failures.is_empty(),
        failures,
    }
}

/// One-period product at a periodic point of `N`.
#[derive(Debug, Clone)]
pub struct H2Witness {
    pub point: PeriodicPoint,
    pub product: DMatrix<f64>,
    /// Entrywise strictly positive.
    pub positive: bool,
    /// Row allowable with strictly positive nonzero columns.
    pub support_positive: bool,
}

#[derive(Debug, Clone)]
pub struct H2Report {
    /// Every one-period product is strictly positive.
    pub pass: bool,
    /// Every one-period product is positive on its nonzero columns; this is
    /// what the contraction argument actually consumes.
    pub support_pass: bool,
    pub horizon: usize,
    pub factor_primitive: bool,
    pub witnesses: Vec<H2Witness>,
}

impl H2Report {
    pub fn failures(&self) -> impl Iterator<Item = &H2Witness> {
        self.witnesses.iter().filter(|w| !w.positive)
    }
}

/// Positivity of `Π 𝓜_{b(i:i+1)}` over one period at every periodic point of
/// `N` with period `≤ horizon` (default `#B`).
pub fn check_h2<C: FiberCocycle + HasFactor>(fs: &C, horizon: Option<usize>) -> H2Report {
    let horizon = horizon.unwrap_or_else(|| fs.factor_size());
    let factor = fs.factor_tmc();
    let witnesses: Vec<H2Witness> = enumerate_periodic(factor, horizon)
        .into_iter()
        .map(|point| {
            let mut cyc = point.symbols().to_vec();
            cyc.push(cyc[0]);
            let product = fs.product(&cyc);
            H2Witness {
                positive: is_positive(&product),
                support_positive: is_column_support_positive(&product),
                point,
                product,
            }
        })
        .collect();
    H2Report {
        pass: witnesses.iter().all(|w| w.positive),
        support_pass: witnesses.iter().all(|w| w.support_positive),
        horizon,
        factor_primitive: factor.is_primitive(),
        witnesses,
    }
}

/// Access to the factor TMC `N` for types that have one.
pub trait HasFactor {
    fn factor_tmc(&self) -> &Tmc;
}

impl HasFactor for FactorSystem {
    fn factor_tmc(&self) -> &Tmc {
        &self.factor
    }
}

/// Whether the factor subshift is a TMC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkovVerdict {
    /// H1 holds, so the factor subshift equals `B_N`.
    Certified,
    /// `witness` is `N`-admissible but has no preimage: the factor subshift
    /// is strictly smaller than `B_N`.
    Refuted { witness: Vec<usize> },
    /// Every `N`-word up to `depth` has a preimage.
    Undecided { depth: usize, words_checked: usize },
}

/// Certifies through H1, otherwise searches `N`-words of length `≤ depth`
/// (shortest first) for one whose boolean fiber product vanishes.
pub fn check_topological_markov(fs: &FactorSystem, depth: usize) -> Result<MarkovVerdict> {
    if depth < 2 {
        return Err(Error::WordTooShort { min: 2, got: depth });
    }
    if check_h1(fs).pass {
        return Ok(MarkovVerdict::Certified);
    }
    let tmc = fs.model.tmc();
    let nb = fs.factor_size();
    // (word, set of source symbols reachable at its last position)
    let mut level: Vec<(Vec<usize>, BTreeSet<usize>)> = (0..nb)
        .map(|b| (vec![b], fs.projection.fiber(b).iter().copied().collect()))
        .collect();
    let mut checked = level.len();
    for _ in 2..=depth {
        let mut next = Vec::new();
        for (word, reach) in &level {
            let last = *word.last().expect("nonempty");
            for c in fs.factor.successors(last) {
                let set: BTreeSet<usize> = fs
                    .projection
                    .fiber(c)
                    .iter()
                    .copied()
                    .filter(|&a2| reach.iter().any(|&a| tmc.allowed(a, a2)))
                    .collect();
                let mut w = word.clone();
                w.push(c);
                checked += 1;
                if set.is_empty() {
                    return Ok(MarkovVerdict::Refuted { witness: w });
                }
                next.push((w, set));
            }
        }
        level = next;
    }
    Ok(MarkovVerdict::Undecided {
        depth,
        words_checked: checked,
    })
}

/// `log ν[w]` via `𝟙ᵀ (Π 𝓜) μ_{w_n}`, accumulated right to left with ℓ₁
/// rescaling at every factor.
pub fn log_nu_cylinder<C: FiberCocycle + ?Sized>(fs: &C, w: &[usize]) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::WordTooShort { min: 1, got: 0 });
    }
    if !fs.is_admissible(w) {
        return Err(Error::Inadmissible {
            from: format!("{w:?}"),
            to: "factor incidence".into(),
        });
    }
    let mut v = fs.marginal(w[w.len() - 1]).clone();
    let mut log_scale = 0.0;
    for i in (0..w.len() - 1).rev() {
        v = fs.weight(w[i], w[i + 1]) * v;
        let s = v.sum();
        if !(s > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        log_scale += s.ln();
        v /= s;
    }
    Ok(log_scale + v.sum().ln())
}

pub fn nu_cylinder<C: FiberCocycle + ?Sized>(fs: &C, w: &[usize]) -> Result<f64> {
    log_nu_cylinder(fs, w).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::cylinder_measure;
    use crate::tmc::{enumerate_words, Word};

    fn model(labels: &[&str], succ: &[&[usize]]) -> MarkovModel {
        let n = labels.len();
        let mut m = vec![vec![0u8; n]; n];
        for (i, s) in succ.iter().enumerate() {
            for &j in *s {
                m[i][j] = 1;
            }
        }
        let tmc = Tmc::new(Alphabet::new(labels.iter().copied()).unwrap(), &m).unwrap();
        MarkovModel::uniform_outgoing(tmc).unwrap()
    }

    fn adhoc() -> FactorSystem {
        let m = model(
            &["1", "2", "3", "4", "5"],
            &[&[1, 2, 3], &[0, 4], &[3], &[0, 4], &[1, 2, 3]],
        );
        let p = Projection::from_labels(
            m.tmc().alphabet(),
            [("1", "a"), ("2", "b"), ("3", "c"), ("4", "b"), ("5", "a")],
        )
        .unwrap();
        build_factor_system(m, p).unwrap()
    }

    fn converse() -> FactorSystem {
        let m = model(&["a", "b", "c", "d"], &[&[0, 1, 3], &[0, 1, 2], &[0], &[1]]);
        let p = Projection::from_labels(
            m.tmc().alphabet(),
            [("a", "0"), ("b", "1"), ("c", "0"), ("d", "1")],
        )
        .unwrap();
        build_factor_system(m, p).unwrap()
    }

    // E0 = {a}, E1 = {b, d}; the only 0→1 edge enters d, and d only moves on to b.
    fn refutable() -> FactorSystem {
        let m = model(&["a", "b", "d"], &[&[0, 2], &[0, 1], &[1]]);
        let p = Projection::from_labels(m.tmc().alphabet(), [("a", "0"), ("b", "1"), ("d", "1")]).unwrap();
        build_factor_system(m, p).unwrap()
    }

    // Σ over preimage words of μ[a-word], by enumeration.
    fn preimage_sum(fs: &FactorSystem, w: &[usize]) -> f64 {
        let tmc = fs.model().tmc();
        enumerate_words(tmc, w.len())
            .unwrap()
            .iter()
            .filter(|a| a.symbols().iter().zip(w).all(|(&x, &b)| fs.projection().image(x) == b))
            .map(|a| cylinder_measure(fs.model(), a).unwrap())
            .sum()
    }

    #[test]
    fn projection_validation() {
        let a = Alphabet::new(["x", "y", "z"]).unwrap();
        assert!(Projection::from_labels(&a, [("x", "0"), ("y", "0"), ("z", "0")]).is_err());
        assert!(Projection::from_labels(&a, [("x", "0"), ("y", "1")]).is_err());
        let p = Projection::from_labels(&a, [("x", "1"), ("y", "0"), ("z", "1")]).unwrap();
        assert_eq!(p.target().labels(), ["1", "0"]);
        assert_eq!(p.fiber(0), &[0, 2]);
        let b = Alphabet::new(["x", "y"]).unwrap();
        assert!(Projection::from_labels(&b, [("x", "0"), ("y", "1")]).is_err());
    }

    #[test]
    fn adhoc_factor_digraph() {
        let fs = adhoc();
        let n = fs.factor();
        let edges: Vec<(String, String)> = (0..3)
            .flat_map(|b| (0..3).map(move |c| (b, c)))
            .filter(|&(b, c)| n.allowed(b, c))
            .map(|(b, c)| (n.alphabet().label(b).into(), n.alphabet().label(c).into()))
            .collect();
        let expect: Vec<(String, String)> = [("a", "b"), ("a", "c"), ("b", "a"), ("c", "b")]
            .iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        assert_eq!(edges, expect);
    }

    #[test]
    fn weights_follow_potential() {
        let fs = adhoc();
        let phi = derive_potential(fs.model());
        let w = fs.weight(0, 1);
        // rows {1, 5}, cols {2, 4}
        assert!((w[(0, 1)] - phi.get(0, 3).exp()).abs() < 1e-15);
        assert_eq!(fs.weight(2, 1)[(0, 0)], 0.0);
        assert_eq!(fs.fiber_incidence(2, 1), DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
    }

    #[test]
    fn h1_examples() {
        assert!(check_h1(&adhoc()).pass);
        let r = check_h1(&converse());
        assert!(!r.pass);
        // (block 01, row c) and (block 10, row d)
        assert_eq!(
            r.failures,
            vec![H1Failure { block: (0, 1), row: 2 }, H1Failure { block: (1, 0), row: 3 }]
        );
    }

    #[test]
    fn h2_on_adhoc_is_literal() {
        let r = check_h2(&adhoc(), None);
        let names: Vec<String> = r
            .failures()
            .map(|w| adhoc().factor().alphabet().render(w.point.symbols()))
            .collect();
        // 𝓜_ba 𝓜_ac 𝓜_cb inherits the zero column of 𝓜_cb
        assert_eq!(names, vec!["bac"]);
        assert!(!r.pass);
        assert!(r.support_pass);
        let acb = r.witnesses.iter().find(|w| w.point.symbols() == [0, 2, 1]).unwrap();
        assert!(acb.positive);
    }

    #[test]
    fn topological_markov_verdicts() {
        assert_eq!(check_topological_markov(&adhoc(), 4).unwrap(), MarkovVerdict::Certified);
        match check_topological_markov(&converse(), 12).unwrap() {
            MarkovVerdict::Undecided { depth, words_checked } => {
                assert_eq!(depth, 12);
                assert_eq!(words_checked, (1 << 13) - 2);
            }
            v => panic!("{v:?}"),
        }
        let fs = refutable();
        assert!(!check_h1(&fs).pass);
        let v = check_topological_markov(&fs, 6).unwrap();
        assert_eq!(v, MarkovVerdict::Refuted { witness: vec![0, 1, 0] });
        assert_eq!(preimage_sum(&fs, &[0, 1, 0]), 0.0);
        assert!(check_topological_markov(&fs, 1).is_err());
    }

    #[test]
    fn nu_matches_preimage_sums() {
        for fs in [adhoc(), converse()] {
            for n in 1..=6 {
                for w in enumerate_words(fs.factor(), n).unwrap() {
                    let exact = preimage_sum(&fs, w.symbols());
                    let nu = nu_cylinder(&fs, w.symbols()).unwrap();
                    assert!((nu - exact).abs() <= 1e-12 * exact.max(1e-300), "{w:?}: {nu} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn nu_single_letter_is_fiber_mass() {
        let fs = adhoc();
        let nu = nu_cylinder(&fs, &[0]).unwrap();
        assert!((nu - fs.marginal(0).sum()).abs() < 1e-15);
        assert!(nu_cylinder(&fs, &[2, 2]).is_err());
        let w = Word::new(fs.factor(), vec![0, 2, 1]).unwrap();
        assert!(nu_cylinder(&fs, w.symbols()).unwrap() > 0.0);
    }

    #[test]
    fn h1_makes_products_row_allowable() {
        let fs = adhoc();
        for n in 2..=7 {
            for w in enumerate_words(fs.factor(), n).unwrap() {
                assert!(crate::projective::is_row_allowable(&fs.product(w.symbols())));
            }
        }
    }
}
