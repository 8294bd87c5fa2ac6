//! Bagged Gini decision trees with per-split feature subsampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ChronoError;

const IMPORTANCE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
    /// Compute out-of-bag permutation importance.
    pub importance: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 200, mtry: None, max_depth: None, min_leaf: 1, seed: 1, importance: false }
    }
}

impl ForestConfig {
    pub fn mtry_for(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Fraction of positive training samples in the leaf reached by `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(p) => return *p,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature as usize] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub config: ForestConfig,
    pub n_features: usize,
    trees: Vec<Tree>,
}

impl Forest {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean of per-tree scores, in `[0, 1]`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_batch<R: AsRef<[f64]> + Sync>(&self, x: &[R]) -> Vec<f64> {
        x.par_iter().map(|r| self.predict(r.as_ref())).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub training_accuracy: f64,
    /// Accuracy of out-of-bag scores at threshold 0.5 over samples that
    /// were out of bag for at least one tree.
    pub oob_accuracy: Option<f64>,
    /// Mean per-tree drop in out-of-bag accuracy when a feature is permuted.
    pub importance: Option<Vec<f64>>,
}

pub(crate) fn classify(score: f64) -> bool {
    score >= 0.5
}

struct Builder<'a, R> {
    x: &'a [R],
    y: &'a [bool],
    p: usize,
    mtry: usize,
    min_leaf: usize,
    max_depth: usize,
    nodes: Vec<Node>,
    scratch: Vec<(f64, bool)>,
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<R: AsRef<[f64]>> Builder<'_, R> {
    fn value(&self, i: usize, f: usize) -> f64 {
        self.x[i].as_ref()[f]
    }

    /// Best split on one feature, `None` when the feature is constant or
    /// no split respects `min_leaf`.
    fn split_on(&mut self, idx: &[usize], f: usize, pos: usize) -> Option<(f64, f64)> {
        self.scratch.clear();
        for &i in idx {
            self.scratch.push((self.x[i].as_ref()[f], self.y[i]));
        }
        self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = idx.len();
        if self.scratch[0].0 == self.scratch[n - 1].0 {
            return None;
        }
        let (nf, pf) = (n as f64, pos as f64);
        let mut best: Option<(f64, f64)> = None;
        let mut lp = 0usize;
        for k in 0..n - 1 {
            lp += usize::from(self.scratch[k].1);
            let nl = k + 1;
            if nl < self.min_leaf || n - nl < self.min_leaf || self.scratch[k].0 == self.scratch[k + 1].0 {
                continue;
            }
            let (l, lpf) = (nl as f64, lp as f64);
            let (r, rpf) = (nf - l, pf - lpf);
            // Maximising this minimises the weighted Gini impurity.
            let score = (lpf * lpf + (l - lpf).powi(2)) / l + (rpf * rpf + (r - rpf).powi(2)) / r;
            if best.is_none_or(|b| score > b.1) {
                let (a, b) = (self.scratch[k].0, self.scratch[k + 1].0);
                let mid = 0.5 * (a + b);
                best = Some((if mid < b { mid } else { a }, score));
            }
        }
        best
    }

    fn build(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let id = self.nodes.len() as u32;
        let n = idx.len();
        let pos = idx.iter().filter(|i| self.y[**i]).count();
        let leaf = Node::Leaf(pos as f64 / n as f64);
        if pos == 0 || pos == n || n < 2 * self.min_leaf || depth >= self.max_depth {
            self.nodes.push(leaf);
            return id;
        }
        let mut order: Vec<usize> = (0..self.p).collect();
        order.shuffle(rng);
        let mut best: Option<Best> = None;
        let mut tried = 0;
        for f in order {
            if tried >= self.mtry {
                break;
            }
            // Constant features do not count towards the subset size.
            if let Some((threshold, score)) = self.split_on(idx, f, pos) {
                tried += 1;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(Best { feature: f, threshold, score });
                }
            } else if self.scratch[0].0 != self.scratch[n - 1].0 {
                tried += 1;
            }
        }
        let Some(best) = best else {
            self.nodes.push(leaf);
            return id;
        };
        let mut split = 0;
        for k in 0..n {
            if self.value(idx[k], best.feature) <= best.threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        self.nodes.push(Node::Split { feature: best.feature as u32, threshold: best.threshold, left: 0, right: 0 });
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        if let Node::Split { left: a, right: b, .. } = &mut self.nodes[id as usize] {
            *a = left;
            *b = right;
        }
        id
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

struct Grown {
    tree: Tree,
    in_bag: Vec<bool>,
}

fn grow<R: AsRef<[f64]>>(x: &[R], y: &[bool], p: usize, config: &ForestConfig, t: usize) -> Grown {
    let n = x.len();
    let mut rng = tree_rng(config.seed, t);
    let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut in_bag = vec![false; n];
    for &i in &idx {
        in_bag[i] = true;
    }
    let mut b = Builder {
        x,
        y,
        p,
        mtry: config.mtry_for(p),
        min_leaf: config.min_leaf.max(1),
        max_depth: config.max_depth.unwrap_or(usize::MAX),
        nodes: Vec::new(),
        scratch: Vec::with_capacity(n),
    };
    b.build(&mut idx, 0, &mut rng);
    Grown { tree: Tree { nodes: b.nodes }, in_bag }
}

fn permutation_drop<R: AsRef<[f64]>>(x: &[R], y: &[bool], p: usize, g: &Grown, seed: u64, t: usize) -> Vec<f64> {
    let oob: Vec<usize> = (0..x.len()).filter(|i| !g.in_bag[*i]).collect();
    if oob.is_empty() {
        return vec![0.0; p];
    }
    let mut buf = vec![0.0; p];
    let mut accuracy = |permuted: Option<(usize, &[f64])>| {
        let mut hit = 0usize;
        for (k, &i) in oob.iter().enumerate() {
            buf.copy_from_slice(x[i].as_ref());
            if let Some((f, col)) = permuted {
                buf[f] = col[k];
            }
            hit += usize::from(classify(g.tree.predict(&buf)) == y[i]);
        }
        hit as f64 / oob.len() as f64
    };
    let base = accuracy(None);
    let mut rng = tree_rng(seed ^ IMPORTANCE_SALT, t);
    (0..p)
        .map(|f| {
            let mut col: Vec<f64> = oob.iter().map(|i| x[*i].as_ref()[f]).collect();
            col.shuffle(&mut rng);
            base - accuracy(Some((f, &col)))
        })
        .collect()
}

pub fn train_forest<R: AsRef<[f64]> + Sync>(
    x: &[R],
    y: &[bool],
    config: &ForestConfig,
) -> Result<(Forest, TrainReport), ChronoError> {
    if config.n_trees == 0 {
        return Err(ChronoError::Config("n_trees must be positive".into()));
    }
    if x.len() != y.len() || x.is_empty() {
        return Err(ChronoError::Config(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let p = x[0].as_ref().len();
    if p == 0 {
        return Err(ChronoError::FeatureShape { got: 0, expected: 1 });
    }
    if let Some(bad) = x.iter().find(|r| r.as_ref().len() != p) {
        return Err(ChronoError::FeatureShape { got: bad.as_ref().len(), expected: p });
    }
    if x.iter().any(|r| r.as_ref().iter().any(|v| !v.is_finite())) {
        return Err(ChronoError::Config("non-finite feature value".into()));
    }
    if y.iter().all(|v| *v) || y.iter().all(|v| !*v) {
        return Err(ChronoError::SingleClass);
    }
    let grown: Vec<Grown> = (0..config.n_trees).into_par_iter().map(|t| grow(x, y, p, config, t)).collect();

    let n = x.len();
    let (mut oob_sum, mut oob_n) = (vec![0.0; n], vec![0usize; n]);
    for g in &grown {
        for i in (0..n).filter(|i| !g.in_bag[*i]) {
            oob_sum[i] += g.tree.predict(x[i].as_ref());
            oob_n[i] += 1;
        }
    }
    let covered: Vec<usize> = (0..n).filter(|i| oob_n[*i] > 0).collect();
    let oob_accuracy = (!covered.is_empty()).then(|| {
        let hits = covered.iter().filter(|i| classify(oob_sum[**i] / oob_n[**i] as f64) == y[**i]).count();
        hits as f64 / covered.len() as f64
    });
    let importance = config.importance.then(|| {
        let drops: Vec<Vec<f64>> =
            grown.par_iter().enumerate().map(|(t, g)| permutation_drop(x, y, p, g, config.seed, t)).collect();
        let mut mean = vec![0.0; p];
        for d in &drops {
            for (m, v) in mean.iter_mut().zip(d) {
                *m += v / drops.len() as f64;
            }
        }
        mean
    });
    let forest = Forest { config: config.clone(), n_features: p, trees: grown.into_iter().map(|g| g.tree).collect() };
    let scores = forest.predict_batch(x);
    let training_accuracy = scores.iter().zip(y).filter(|(s, l)| classify(**s) == **l).count() as f64 / n as f64;
    Ok((forest, TrainReport { training_accuracy, oob_accuracy, importance }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let y = x.iter().map(|r| r[0] > 0.5).collect();
        (x, y)
    }

    #[test]
    fn separable_set_is_learned_exactly() {
        let (x, y) = toy(300, 3);
        let cfg = ForestConfig { n_trees: 25, importance: true, ..Default::default() };
        let (f, rep) = train_forest(&x, &y, &cfg).unwrap();
        assert_eq!(rep.training_accuracy, 1.0);
        assert!(rep.oob_accuracy.unwrap() > 0.95);
        let imp = rep.importance.unwrap();
        assert!(imp[0] > 10.0 * imp[1].abs().max(imp[2].abs()).max(1e-3), "{imp:?}");
        for r in &x {
            let s = f.predict(r);
            assert!((0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = toy(200, 5);
        let cfg = ForestConfig { n_trees: 10, ..Default::default() };
        let a = train_forest(&x, &y, &cfg).unwrap().0;
        let b = train_forest(&x, &y, &cfg).unwrap().0;
        assert_eq!(a, b);
        let c = train_forest(&x, &y, &ForestConfig { seed: 2, ..cfg }).unwrap().0;
        assert_ne!(a, c);
    }

    #[test]
    fn prediction_ignores_tree_order() {
        let (x, y) = toy(200, 8);
        let (mut f, _) = train_forest(&x, &y, &ForestConfig { n_trees: 16, ..Default::default() }).unwrap();
        let before: Vec<f64> = x.iter().map(|r| f.predict(r)).collect();
        f.trees.reverse();
        for (r, b) in x.iter().zip(before) {
            assert!((f.predict(r) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_and_leaf_limits() {
        let (x, y) = toy(200, 9);
        let cfg = ForestConfig { n_trees: 4, max_depth: Some(2), ..Default::default() };
        let (f, _) = train_forest(&x, &y, &cfg).unwrap();
        assert!(f.trees().iter().all(|t| t.depth() <= 2));
        let stump = ForestConfig { n_trees: 1, max_depth: Some(0), ..Default::default() };
        let (f, _) = train_forest(&x, &y, &stump).unwrap();
        assert_eq!(f.trees()[0].n_nodes(), 1);
    }

    #[test]
    fn single_class_is_an_error() {
        let x = vec![vec![0.0], vec![1.0]];
        assert_eq!(train_forest(&x, &[true, true], &ForestConfig::default()).unwrap_err(), ChronoError::SingleClass);
    }

    #[test]
    fn constant_features_are_skipped_when_searching() {
        // Only feature 3 varies; with mtry = 1 the search must move past
        // the constant ones.
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![1.0, 1.0, 1.0, f64::from(i)]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let cfg = ForestConfig { n_trees: 5, mtry: Some(1), ..Default::default() };
        let (_, rep) = train_forest(&x, &y, &cfg).unwrap();
        assert_eq!(rep.training_accuracy, 1.0);
    }

    #[test]
    fn mtry_default_is_ceil_sqrt() {
        assert_eq!(ForestConfig::default().mtry_for(52), 8);
        assert_eq!(ForestConfig::default().mtry_for(1), 1);
    }
}
