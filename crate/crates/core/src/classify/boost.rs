//! Gradient boosting on the logistic loss.
//!
//! Starts from the log-odds of the training base rate. Each round fits a
//! least-squares tree to the residuals `y − p` and replaces its leaf values
//! by one Newton step, `Σ r / Σ p(1 − p)` over the leaf. A leaf step that
//! would raise the training loss of its rows is halved until it does not, so
//! the training loss never increases from one stage to the next. There is
//! no subsampling: a fit with more trees extends a fit with fewer.

use super::tree::{fit_regression_tree, Node, RankedFeatures, Tree};
use crate::matrix::Matrix;

const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct Booster {
    pub init: f64,
    pub rate: f64,
    pub trees: Vec<Tree>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn row_loss(f: f64, y: f64) -> f64 {
    let sp = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
    sp - y * f
}

/// Mean logistic loss of scores `f` against labels `y`.
pub fn logistic_loss(f: &[f64], y: &[u8]) -> f64 {
    f.iter().zip(y).map(|(&fi, &yi)| row_loss(fi, f64::from(yi))).sum::<f64>() / f.len() as f64
}

pub fn fit_boost(x: &Matrix, data: &RankedFeatures, y: &[u8], n_trees: usize, rate: f64, depth: usize) -> Booster {
    let n = x.rows();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mean = (yf.iter().sum::<f64>() / n as f64).clamp(1e-12, 1.0 - 1e-12);
    let init = (mean / (1.0 - mean)).ln();
    let mut f = vec![init; n];
    let mut trees = Vec::with_capacity(n_trees);
    let mut resid = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut loss = vec![0.0; n];
    for _ in 0..n_trees {
        for i in 0..n {
            let p = sigmoid(f[i]);
            resid[i] = yf[i] - p;
            hess[i] = p * (1.0 - p);
            loss[i] = row_loss(f[i], yf[i]);
        }
        let leaf = |rows: &[usize]| {
            let num: f64 = rows.iter().map(|&i| resid[i]).sum();
            let den: f64 = rows.iter().map(|&i| hess[i]).sum();
            if den <= 1e-300 || num == 0.0 {
                return 0.0;
            }
            let base: f64 = rows.iter().map(|&i| loss[i]).sum();
            let mut gamma = num / den;
            for _ in 0..MAX_HALVINGS {
                let step = rate * gamma;
                let trial: f64 = rows.iter().map(|&i| row_loss(f[i] + step, yf[i])).sum();
                if trial <= base {
                    return gamma;
                }
                gamma *= 0.5;
            }
            0.0
        };
        let (tree, row_leaf) = fit_regression_tree(data, &resid, depth, &leaf);
        for (fi, &k) in f.iter_mut().zip(&row_leaf) {
            if let Node::Leaf(v) = tree.nodes[k] {
                *fi += rate * v;
            }
        }
        trees.push(tree);
    }
    Booster { init, rate, trees }
}

impl Booster {
    /// Raw score after the first `stages` trees.
    pub fn score_staged(&self, row: &[f64], stages: usize) -> f64 {
        self.init
            + self.rate
                * self.trees[..stages.min(self.trees.len())]
                    .iter()
                    .map(|t| t.predict(row))
                    .sum::<f64>()
    }

    /// Scores after each of the given stage counts (ascending), computed in
    /// one pass over the trees.
    pub fn scores_at(&self, row: &[f64], stages: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(stages.len());
        let mut f = self.init;
        let mut done = 0;
        for &s in stages {
            for t in &self.trees[done..s.min(self.trees.len())] {
                f += self.rate * t.predict(row);
            }
            done = done.max(s.min(self.trees.len()));
            out.push(f);
        }
        out
    }

    /// Label 1 iff the probability is at least 0.5.
    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.score_staged(row, self.trees.len()) >= 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_data() -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..80 {
            let a = (i % 9) as f64 - 4.0;
            let b = ((i * 5) % 11) as f64 - 5.0;
            rows.push(vec![a, b]);
            y.push(u8::from((a > 0.0) != (b > 0.0)));
        }
        (Matrix::from_row_vecs(&rows), y)
    }

    #[test]
    fn staged_training_loss_never_increases() {
        let (x, y) = xor_data();
        let data = RankedFeatures::new(&x);
        let b = fit_boost(&x, &data, &y, 40, 0.3, 2);
        let mut last = f64::INFINITY;
        for s in 0..=40 {
            let f: Vec<f64> = (0..x.rows()).map(|i| b.score_staged(x.row(i), s)).collect();
            let l = logistic_loss(&f, &y);
            assert!(l <= last + 1e-12, "stage {s}: {l} > {last}");
            last = l;
        }
    }

    #[test]
    fn longer_fit_extends_shorter_one() {
        let (x, y) = xor_data();
        let data = RankedFeatures::new(&x);
        let short = fit_boost(&x, &data, &y, 10, 0.1, 3);
        let long = fit_boost(&x, &data, &y, 25, 0.1, 3);
        assert_eq!(short.trees, long.trees[..10]);
        let staged = long.scores_at(x.row(3), &[10, 25]);
        assert_eq!(staged[0], short.score_staged(x.row(3), 10));
        assert_eq!(staged[1], long.score_staged(x.row(3), 25));
    }
}
