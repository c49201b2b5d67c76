//! CART trees on a rank-coded feature matrix.
//!
//! Feature values are replaced once per fit by their rank among the sorted
//! unique values, so split search is a counting sweep over ranks. Nodes with
//! few rows relative to a feature's unique count sort their rows instead.

use rand::seq::SliceRandom;

use crate::matrix::Matrix;
use crate::rng::Rng;

/// Column-major rank codes of a design matrix plus the unique values
/// behind them.
#[derive(Debug, Clone)]
pub struct RankedFeatures {
    pub n_rows: usize,
    /// `ranks[f][i]`: rank of row i's value of feature f.
    pub ranks: Vec<Vec<u32>>,
    /// `values[f]`: sorted unique values of feature f.
    pub values: Vec<Vec<f64>>,
    /// `mode[f]`: the most frequent rank of feature f.
    pub mode: Vec<u32>,
    /// `off_mode[f]`: rows whose rank differs from `mode[f]`, ascending.
    pub off_mode: Vec<Vec<usize>>,
}

impl RankedFeatures {
    pub fn new(x: &Matrix) -> Self {
        let n = x.rows();
        let mut ranks = Vec::with_capacity(x.cols());
        let mut values = Vec::with_capacity(x.cols());
        let mut mode = Vec::with_capacity(x.cols());
        let mut off_mode = Vec::with_capacity(x.cols());
        let mut order: Vec<usize> = (0..n).collect();
        for f in 0..x.cols() {
            let col = x.column(f);
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut r = vec![0u32; n];
            let mut uniq: Vec<f64> = Vec::new();
            for &i in &order {
                if uniq.last() != Some(&col[i]) {
                    uniq.push(col[i]);
                }
                r[i] = (uniq.len() - 1) as u32;
            }
            let mut counts = vec![0usize; uniq.len()];
            r.iter().for_each(|&k| counts[k as usize] += 1);
            let m = (0..counts.len()).max_by_key(|&k| (counts[k], std::cmp::Reverse(k))).unwrap_or(0) as u32;
            off_mode.push((0..n).filter(|&i| r[i] != m).collect());
            mode.push(m);
            ranks.push(r);
            values.push(uniq);
        }
        Self {
            n_rows: n,
            ranks,
            values,
            mode,
            off_mode,
        }
    }

    pub fn n_features(&self) -> usize {
        self.ranks.len()
    }

    fn threshold(&self, f: usize, rank: u32) -> f64 {
        let v = &self.values[f];
        0.5 * (v[rank as usize] + v[rank as usize + 1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

/// A fitted tree; leaves hold a class-1 probability or a regression value.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Leaf index reached by a row.
    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(_) => return k,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// Per-row statistics a split criterion accumulates.
trait Criterion {
    /// Accumulator over a set of rows.
    type Acc: Copy + Default;
    fn add(&self, acc: &mut Self::Acc, row: usize);
    fn merge(a: &mut Self::Acc, b: &Self::Acc);
    fn minus(a: &Self::Acc, b: &Self::Acc) -> Self::Acc;
    fn weight(acc: &Self::Acc) -> f64;
    /// Score to maximize for a (left, right) partition; larger is better.
    fn split_score(left: &Self::Acc, right: &Self::Acc) -> f64;
    /// The same score for the unsplit node.
    fn node_score(acc: &Self::Acc) -> f64;
    /// True if no split of `rows` can improve the node.
    fn is_pure(&self, acc: &Self::Acc, rows: &[usize]) -> bool;
}

/// Weighted Gini criterion. Accumulator: (total weight, class-1 weight).
struct Gini<'a> {
    w: &'a [f64],
    /// `w` times the 0/1 label.
    wy: Vec<f64>,
}

impl Criterion for Gini<'_> {
    type Acc = [f64; 2];

    #[inline]
    fn add(&self, acc: &mut [f64; 2], row: usize) {
        acc[0] += self.w[row];
        acc[1] += self.wy[row];
    }
    fn merge(a: &mut [f64; 2], b: &[f64; 2]) {
        a[0] += b[0];
        a[1] += b[1];
    }
    fn minus(a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
        [a[0] - b[0], a[1] - b[1]]
    }
    fn weight(acc: &[f64; 2]) -> f64 {
        acc[0]
    }
    // W * (1 - gini) = (w0² + w1²) / W, so maximizing the sum over children
    // minimizes weighted child impurity
    fn split_score(l: &[f64; 2], r: &[f64; 2]) -> f64 {
        Self::node_score(l) + Self::node_score(r)
    }
    fn node_score(a: &[f64; 2]) -> f64 {
        let w0 = a[0] - a[1];
        if a[0] <= 0.0 {
            0.0
        } else {
            (w0 * w0 + a[1] * a[1]) / a[0]
        }
    }
    fn is_pure(&self, a: &[f64; 2], _rows: &[usize]) -> bool {
        a[1] <= 0.0 || a[1] >= a[0]
    }
}

/// Squared-error criterion on targets `r`. Accumulator: (count, sum).
struct SquaredError<'a> {
    r: &'a [f64],
}

impl Criterion for SquaredError<'_> {
    type Acc = [f64; 2];

    #[inline]
    fn add(&self, acc: &mut [f64; 2], row: usize) {
        acc[0] += 1.0;
        acc[1] += self.r[row];
    }
    fn merge(a: &mut [f64; 2], b: &[f64; 2]) {
        a[0] += b[0];
        a[1] += b[1];
    }
    fn minus(a: &[f64; 2], b: &[f64; 2]) -> [f64; 2] {
        [a[0] - b[0], a[1] - b[1]]
    }
    fn weight(acc: &[f64; 2]) -> f64 {
        acc[0]
    }
    // SSE = Σr² − S²/n, so minimizing child SSE maximizes Σ S²/n
    fn split_score(l: &[f64; 2], r: &[f64; 2]) -> f64 {
        Self::node_score(l) + Self::node_score(r)
    }
    fn node_score(a: &[f64; 2]) -> f64 {
        if a[0] <= 0.0 {
            0.0
        } else {
            a[1] * a[1] / a[0]
        }
    }
    fn is_pure(&self, _a: &[f64; 2], rows: &[usize]) -> bool {
        rows.first().is_none_or(|&k| rows.iter().all(|&i| self.r[i] == self.r[k]))
    }
}

struct BestSplit {
    feature: usize,
    rank: u32,
    score: f64,
}

/// Scratch buffers reused across nodes.
struct Scratch<A> {
    buckets: Vec<A>,
    pairs: Vec<(u32, usize)>,
    /// `stamp[i] == node` marks row i as a member of the node being split.
    stamp: Vec<usize>,
    node: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` means all.
    pub mtry: Option<usize>,
    pub min_samples_split: f64,
}

struct Builder<'a, C: Criterion> {
    data: &'a RankedFeatures,
    crit: C,
    params: TreeParams,
    scratch: Scratch<C::Acc>,
    features: Vec<usize>,
    importance: Vec<f64>,
    nodes: Vec<Node>,
    /// Leaf node reached by each row, when requested.
    row_leaf: Option<Vec<usize>>,
}

impl<'a, C: Criterion> Builder<'a, C> {
    fn new(data: &'a RankedFeatures, crit: C, params: TreeParams) -> Self {
        let max_unique = data.values.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            data,
            crit,
            params,
            scratch: Scratch {
                buckets: vec![C::Acc::default(); max_unique],
                pairs: Vec::new(),
                stamp: vec![usize::MAX; data.n_rows],
                node: 0,
            },
            features: (0..data.n_features()).collect(),
            importance: vec![0.0; data.n_features()],
            nodes: Vec::new(),
            row_leaf: None,
        }
    }

    fn node_acc(&self, rows: &[usize]) -> C::Acc {
        let mut acc = C::Acc::default();
        for &i in rows {
            self.crit.add(&mut acc, i);
        }
        acc
    }

    /// Best split of `rows` on feature `f`, or `None` if the feature is
    /// constant on these rows.
    fn best_on_feature(&mut self, f: usize, rows: &[usize], total: &C::Acc) -> Option<(u32, f64)> {
        let ranks = &self.data.ranks[f];
        let n_unique = self.data.values[f].len();
        if n_unique < 2 {
            return None;
        }
        let mut best: Option<(u32, f64)> = None;
        if n_unique <= 2 * rows.len() {
            let buckets = &mut self.scratch.buckets[..n_unique];
            buckets.iter_mut().for_each(|b| *b = C::Acc::default());
            let (mut lo, mut hi) = (u32::MAX, 0u32);
            let off = &self.data.off_mode[f];
            if off.len() < rows.len() {
                // sparse: accumulate rows off the mode, recover the mode's
                // bucket by subtraction
                let (stamp, node) = (&self.scratch.stamp, self.scratch.node);
                let mut rest = C::Acc::default();
                for &i in off {
                    if stamp[i] == node {
                        let r = ranks[i];
                        self.crit.add(&mut buckets[r as usize], i);
                        self.crit.add(&mut rest, i);
                        lo = lo.min(r);
                        hi = hi.max(r);
                    }
                }
                let m = self.data.mode[f];
                let mode_acc = C::minus(total, &rest);
                if C::weight(&mode_acc) > 0.0 {
                    buckets[m as usize] = mode_acc;
                    lo = lo.min(m);
                    hi = hi.max(m);
                }
            } else {
                for &i in rows {
                    self.crit.add(&mut buckets[ranks[i] as usize], i);
                }
                let present = |r: &usize| C::weight(&buckets[*r]) > 0.0;
                lo = (0..n_unique).find(present).map_or(u32::MAX, |r| r as u32);
                hi = (0..n_unique).rfind(present).map_or(0, |r| r as u32);
            }
            if lo >= hi {
                return None;
            }
            let mut left = C::Acc::default();
            for r in lo..hi {
                let b = &buckets[r as usize];
                if C::weight(b) == 0.0 && r != lo {
                    continue;
                }
                C::merge(&mut left, b);
                let right = C::minus(total, &left);
                if C::weight(&left) <= 0.0 || C::weight(&right) <= 0.0 {
                    continue;
                }
                let s = C::split_score(&left, &right);
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((r, s));
                }
            }
            best
        } else {
            let pairs = &mut self.scratch.pairs;
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (ranks[i], i)));
            pairs.sort_unstable();
            if pairs[0].0 == pairs[pairs.len() - 1].0 {
                return None;
            }
            let mut left = C::Acc::default();
            let mut k = 0;
            while k < pairs.len() {
                let r = pairs[k].0;
                while k < pairs.len() && pairs[k].0 == r {
                    self.crit.add(&mut left, pairs[k].1);
                    k += 1;
                }
                if k == pairs.len() {
                    break;
                }
                let right = C::minus(total, &left);
                if C::weight(&left) <= 0.0 || C::weight(&right) <= 0.0 {
                    continue;
                }
                let s = C::split_score(&left, &right);
                if best.is_none_or(|(_, bs)| s > bs) {
                    best = Some((r, s));
                }
            }
            best
        }
    }

    fn build(&mut self, rows: &mut [usize], depth: usize, rng: &mut Option<&mut Rng>, leaf: &dyn Fn(&[usize]) -> f64) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let total = self.node_acc(rows);
        let stop = self.crit.is_pure(&total, rows)
            || C::weight(&total) < self.params.min_samples_split
            || rows.len() < 2
            || self.params.max_depth.is_some_and(|d| depth >= d);
        let split = if stop { None } else { self.find_split(rows, &total, rng) };
        let Some(best) = split else {
            self.nodes[id] = Node::Leaf(leaf(rows));
            if let Some(rl) = self.row_leaf.as_mut() {
                rows.iter().for_each(|&i| rl[i] = id);
            }
            return id;
        };
        let ranks = &self.data.ranks[best.feature];
        let mut mid = 0;
        for k in 0..rows.len() {
            if ranks[rows[k]] <= best.rank {
                rows.swap(k, mid);
                mid += 1;
            }
        }
        self.importance[best.feature] += best.score - C::node_score(&total);
        let threshold = self.data.threshold(best.feature, best.rank);
        let (lrows, rrows) = rows.split_at_mut(mid);
        let left = self.build(lrows, depth + 1, rng, leaf);
        let right = self.build(rrows, depth + 1, rng, leaf);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn find_split(&mut self, rows: &[usize], total: &C::Acc, rng: &mut Option<&mut Rng>) -> Option<BestSplit> {
        let p = self.features.len();
        let mtry = self.params.mtry.unwrap_or(p).clamp(1, p);
        self.scratch.node = self.nodes.len();
        for &i in rows {
            self.scratch.stamp[i] = self.scratch.node;
        }
        let mut best: Option<BestSplit> = None;
        let mut examined = 0;
        // Partial Fisher–Yates: draw features until `mtry` non-constant ones
        // have been examined or none are left.
        for k in 0..p {
            if examined >= mtry {
                break;
            }
            if let Some(r) = rng.as_deref_mut() {
                let pick = k + (rand::Rng::random_range(r, 0..(p - k)));
                self.features.swap(k, pick);
            }
            let f = self.features[k];
            if let Some((rank, score)) = self.best_on_feature(f, rows, total) {
                examined += 1;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(BestSplit {
                        feature: f,
                        rank,
                        score,
                    });
                }
            }
        }
        best
    }
}

/// Gini classification tree on rows weighted by `w` (bootstrap counts);
/// rows with zero weight are ignored. Leaves hold the weighted share of
/// class 1. Returns the tree and per-feature impurity decreases.
pub fn fit_classification_tree(
    data: &RankedFeatures,
    y: &[u8],
    w: &[f64],
    params: TreeParams,
    rng: &mut Rng,
) -> (Tree, Vec<f64>) {
    let mut rows: Vec<usize> = (0..data.n_rows).filter(|&i| w[i] > 0.0).collect();
    let wy = w.iter().zip(y).map(|(&wi, &yi)| wi * f64::from(yi)).collect();
    let mut b = Builder::new(data, Gini { w, wy }, params);
    // shuffle the feature order once so draws differ between trees
    b.features.shuffle(rng);
    let leaf = |rows: &[usize]| {
        let (mut w1, mut wt) = (0.0, 0.0);
        for &i in rows {
            wt += w[i];
            if y[i] == 1 {
                w1 += w[i];
            }
        }
        if wt > 0.0 {
            w1 / wt
        } else {
            0.5
        }
    };
    let mut r = Some(rng);
    b.build(&mut rows, 0, &mut r, &leaf);
    let imp = b.importance;
    (Tree { nodes: b.nodes }, imp)
}

/// Least-squares regression tree on targets `r` over all rows, examining
/// every feature at every split (deterministic). Leaf values come from
/// `leaf(rows)`. Also returns the leaf node index reached by each row.
pub fn fit_regression_tree(
    data: &RankedFeatures,
    r: &[f64],
    max_depth: usize,
    leaf: &dyn Fn(&[usize]) -> f64,
) -> (Tree, Vec<usize>) {
    let mut rows: Vec<usize> = (0..data.n_rows).collect();
    let params = TreeParams {
        max_depth: Some(max_depth),
        mtry: None,
        min_samples_split: 2.0,
    };
    let mut b = Builder::new(data, SquaredError { r }, params);
    b.row_leaf = Some(vec![0; data.n_rows]);
    let mut none = None;
    b.build(&mut rows, 0, &mut none, leaf);
    (Tree { nodes: b.nodes }, b.row_leaf.unwrap_or_default())
}

/// Rows of `data` grouped by the leaf they reach, keyed by node index.
pub fn leaf_rows(tree: &Tree, x: &Matrix) -> Vec<(usize, Vec<usize>)> {
    let mut by_leaf: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
    for i in 0..x.rows() {
        by_leaf[tree.leaf_of(x.row(i))].push(i);
    }
    by_leaf
        .into_iter()
        .enumerate()
        .filter(|(_, r)| !r.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn ranks_follow_sorted_unique_values() {
        let x = Matrix::from_row_vecs(&[vec![3.0], vec![1.0], vec![3.0], vec![2.0]]);
        let d = RankedFeatures::new(&x);
        assert_eq!(d.ranks[0], vec![2, 0, 2, 1]);
        assert_eq!(d.values[0], vec![1.0, 2.0, 3.0]);
        assert_eq!(d.mode[0], 2);
        assert_eq!(d.off_mode[0], vec![1, 3]);
    }

    #[test]
    fn sparse_and_dense_sweeps_agree() {
        // an indicator that is mostly zero takes the sparse path at the root
        // and the dense path in small children
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![f64::from(u8::from(i % 10 == 0)), (i % 7) as f64]).collect();
        let y: Vec<u8> = (0..200).map(|i| u8::from(i % 10 == 0 || i % 7 == 3)).collect();
        let x = Matrix::from_row_vecs(&rows);
        let d = RankedFeatures::new(&x);
        assert!(d.off_mode[0].len() < 200 / 4);
        let params = TreeParams {
            max_depth: None,
            mtry: None,
            min_samples_split: 2.0,
        };
        let (t, _) = fit_classification_tree(&d, &y, &vec![1.0; 200], params, &mut stream(4));
        for (row, &label) in rows.iter().zip(&y) {
            assert_eq!(t.predict(row), f64::from(label));
        }
    }

    #[test]
    fn classification_tree_fits_training_data() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64, (i / 7) as f64]).collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from((r[0] > 2.0) ^ (r[1] > 3.0))).collect();
        let x = Matrix::from_row_vecs(&rows);
        let d = RankedFeatures::new(&x);
        let params = TreeParams {
            max_depth: None,
            mtry: None,
            min_samples_split: 2.0,
        };
        let (t, imp) = fit_classification_tree(&d, &y, &vec![1.0; 40], params, &mut stream(1));
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(t.predict(r) >= 0.5, y[i] == 1);
        }
        assert!(imp.iter().all(|&v| v >= -1e-12) && imp.iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn depth_limit_is_respected() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..64).map(|i| (i % 2) as u8).collect();
        let d = RankedFeatures::new(&Matrix::from_row_vecs(&rows));
        let params = TreeParams {
            max_depth: Some(3),
            mtry: None,
            min_samples_split: 2.0,
        };
        let (t, _) = fit_classification_tree(&d, &y, &vec![1.0; 64], params, &mut stream(2));
        assert!(t.depth() <= 3);
    }

    #[test]
    fn regression_tree_splits_on_step() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let r: Vec<f64> = (0..20).map(|i| if i < 8 { -1.0 } else { 2.0 }).collect();
        let d = RankedFeatures::new(&Matrix::from_row_vecs(&rows));
        let mean = |rows: &[usize]| rows.iter().map(|&i| r[i]).sum::<f64>() / rows.len() as f64;
        let (t, row_leaf) = fit_regression_tree(&d, &r, 2, &mean);
        match t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 7.5);
            }
            Node::Leaf(_) => panic!("expected a split"),
        }
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(t.predict(row), r[i]);
            assert_eq!(t.leaf_of(row), row_leaf[i]);
        }
    }
}
