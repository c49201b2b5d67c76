//! Random forest: bagged Gini trees with a random feature subset per split.

use rand::Rng as _;

use super::tree::{fit_classification_tree, RankedFeatures, Tree, TreeParams};
use crate::rng::{derive, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Mean decrease in impurity per feature, summing to 1 (all zero if no
    /// tree ever split).
    pub importance: Vec<f64>,
}

/// Fits `n_trees` trees, tree `t` drawing its bootstrap sample and feature
/// subsets from a stream derived from `(seed, t)`.
pub fn fit_forest(
    data: &RankedFeatures,
    y: &[u8],
    n_trees: usize,
    max_depth: Option<usize>,
    mtry: usize,
    seed: u64,
) -> Forest {
    let n = data.n_rows;
    let params = TreeParams {
        max_depth,
        mtry: Some(mtry),
        min_samples_split: 2.0,
    };
    let mut trees = Vec::with_capacity(n_trees);
    let mut importance = vec![0.0; data.n_features()];
    let mut w = vec![0.0; n];
    for t in 0..n_trees {
        let mut rng = stream(derive(seed, t as u64));
        w.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..n {
            w[rng.random_range(0..n)] += 1.0;
        }
        let (tree, imp) = fit_classification_tree(data, y, &w, params, &mut rng);
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (acc, v) in importance.iter_mut().zip(&imp) {
                *acc += v / total;
            }
        }
        trees.push(tree);
    }
    let total: f64 = importance.iter().sum();
    if total > 0.0 {
        importance.iter_mut().for_each(|v| *v /= total);
    }
    Forest { trees, importance }
}

impl Forest {
    /// Number of trees voting for class 1 (a leaf share of exactly 0.5
    /// votes 1).
    pub fn votes(&self, row: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.predict(row) >= 0.5).count()
    }

    /// Majority vote; ties go to class 1.
    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(2 * self.votes(row) >= self.trees.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    #[test]
    fn tree_order_does_not_matter() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 10) as f64, (i / 10) as f64]).collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] > 7.0)).collect();
        let x = Matrix::from_row_vecs(&rows);
        let data = RankedFeatures::new(&x);
        let f = fit_forest(&data, &y, 15, None, 1, 3);
        let mut rev = f.clone();
        rev.trees.reverse();
        for r in &rows {
            assert_eq!(f.predict(r), rev.predict(r));
        }
        assert!((f.importance.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vote_ties_go_to_one() {
        use super::super::tree::Node;
        let f = Forest {
            trees: vec![
                Tree { nodes: vec![Node::Leaf(1.0)] },
                Tree { nodes: vec![Node::Leaf(0.0)] },
            ],
            importance: vec![],
        };
        assert_eq!(f.predict(&[]), 1);
    }
}
