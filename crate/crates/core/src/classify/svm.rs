//! Soft-margin RBF support vector machine.
//!
//! The dual is solved by sequential minimal optimization with second-order
//! working-set selection. Iteration stops once the maximal KKT violation
//! `m(α) − M(α)` falls below the tolerance, which bounds the per-point KKT
//! residual of every training point by the same tolerance.

use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

use crate::matrix::Matrix;

/// KKT tolerance of the solver.
pub const KKT_TOL: f64 = 1e-3;
/// Largest training size whose full kernel matrix is materialized.
pub const DENSE_LIMIT: usize = 3000;
const TAU: f64 = 1e-12;
const CACHE_BYTES: usize = 256 << 20;

/// Row access to an RBF kernel matrix (unit diagonal).
pub trait KernelRows {
    fn len(&self) -> usize;
    fn row(&mut self, i: usize) -> Rc<[f64]>;
}

/// Squared Euclidean distances between the rows of `a` and `b`, row-major
/// `a.rows() × b.rows()`.
pub fn squared_distances(a: &Matrix, b: &Matrix) -> Vec<f64> {
    let mut d = Vec::with_capacity(a.rows() * b.rows());
    for i in 0..a.rows() {
        let ai = a.row(i);
        for j in 0..b.rows() {
            d.push(ai.iter().zip(b.row(j)).map(|(u, v)| (u - v) * (u - v)).sum());
        }
    }
    d
}

/// Fully materialized kernel `exp(−γ D)`.
pub struct DenseKernel {
    rows: Vec<Rc<[f64]>>,
}

impl DenseKernel {
    /// From a square distance matrix of side `n`.
    pub fn from_distances(d: &[f64], n: usize, gamma: f64) -> Self {
        let rows = (0..n)
            .map(|i| d[i * n..(i + 1) * n].iter().map(|v| (-gamma * v).exp()).collect())
            .collect();
        Self { rows }
    }
}

impl KernelRows for DenseKernel {
    fn len(&self) -> usize {
        self.rows.len()
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        Rc::clone(&self.rows[i])
    }
}

/// Kernel rows computed on demand and kept in a first-in-first-out cache.
pub struct CachedKernel<'a> {
    x: &'a Matrix,
    gamma: f64,
    cache: HashMap<usize, Rc<[f64]>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> CachedKernel<'a> {
    pub fn new(x: &'a Matrix, gamma: f64) -> Self {
        let capacity = (CACHE_BYTES / (8 * x.rows().max(1))).max(2);
        Self {
            x,
            gamma,
            cache: HashMap::new(),
            order: VecDeque::new(),
            capacity,
        }
    }
}

impl KernelRows for CachedKernel<'_> {
    fn len(&self) -> usize {
        self.x.rows()
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        if let Some(r) = self.cache.get(&i) {
            return Rc::clone(r);
        }
        let xi = self.x.row(i);
        let r: Rc<[f64]> = (0..self.x.rows())
            .map(|j| {
                let d: f64 = xi.iter().zip(self.x.row(j)).map(|(u, v)| (u - v) * (u - v)).sum();
                (-self.gamma * d).exp()
            })
            .collect();
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.cache.remove(&old);
            }
        }
        self.order.push_back(i);
        self.cache.insert(i, Rc::clone(&r));
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `Σ αᵢ yᵢ K(xᵢ, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `min ½ αᵀQα − Σα` s.t. `yᵀα = 0`, `0 ≤ α ≤ C`, with
/// `Q_ij = y_i y_j K_ij` and labels `y ∈ {−1, +1}`.
pub fn solve_smo(kernel: &mut dyn KernelRows, y: &[f64], c: f64, eps: f64) -> SmoSolution {
    let n = kernel.len();
    let max_iter = (100 * n).max(10_000_000);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    while iterations < max_iter {
        // select i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        let ki = kernel.row(i);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let yg = y[t] * grad[t];
            gmax2 = gmax2.max(yg);
            let b = gmax + yg;
            if b > 0.0 {
                // unit diagonal: K_tt = 1
                let mut a = ki[i] + 1.0 - 2.0 * ki[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let v = -b * b / a;
                if v <= obj_min {
                    obj_min = v;
                    j_sel = Some(t);
                }
            }
        }
        if gmax + gmax2 < eps {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        iterations += 1;
        let kj = kernel.row(j);
        let qij = y[i] * y[j] * ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = ki[i] + kj[j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = ki[i] + kj[j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }
    let rho = compute_rho(&alpha, &grad, y, c);
    SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Fitted RBF machine: support vectors with coefficients `αᵢ yᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svm {
    pub gamma: f64,
    pub support: Matrix,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub converged: bool,
}

impl Svm {
    pub fn from_solution(x: &Matrix, y: &[f64], sol: &SmoSolution, gamma: f64) -> Self {
        let idx: Vec<usize> = (0..x.rows()).filter(|&i| sol.alpha[i] > 0.0).collect();
        Self {
            gamma,
            support: x.select_rows(&idx),
            coef: idx.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
            rho: sol.rho,
            converged: sol.converged,
        }
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        let mut s = -self.rho;
        for (k, c) in self.coef.iter().enumerate() {
            let d: f64 = self.support.row(k).iter().zip(row).map(|(u, v)| (u - v) * (u - v)).sum();
            s += c * (-self.gamma * d).exp();
        }
        s
    }

    /// Label 1 iff the decision value is nonnegative.
    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) >= 0.0)
    }
}

/// Maps {0, 1} labels to {−1, +1}.
pub fn signed_labels(y: &[u8]) -> Vec<f64> {
    y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect()
}

pub fn fit_svm(x: &Matrix, y: &[u8], c: f64, gamma: f64) -> Svm {
    let ys = signed_labels(y);
    let sol = if x.rows() <= DENSE_LIMIT {
        let d = squared_distances(x, x);
        solve_smo(&mut DenseKernel::from_distances(&d, x.rows(), gamma), &ys, c, KKT_TOL)
    } else {
        solve_smo(&mut CachedKernel::new(x, gamma), &ys, c, KKT_TOL)
    };
    Svm::from_solution(x, &ys, &sol, gamma)
}

/// Per-point KKT residuals of a fitted machine on its training data:
/// `max(0, 1 − y f)` at α = 0, `max(0, y f − 1)` at α = C, `|y f − 1|`
/// for free points.
pub fn kkt_residuals(x: &Matrix, y: &[u8], alpha: &[f64], rho: f64, c: f64, gamma: f64) -> Vec<f64> {
    let ys = signed_labels(y);
    (0..x.rows())
        .map(|i| {
            let mut f = -rho;
            for j in 0..x.rows() {
                if alpha[j] > 0.0 {
                    let d: f64 = x.row(i).iter().zip(x.row(j)).map(|(u, v)| (u - v) * (u - v)).sum();
                    f += alpha[j] * ys[j] * (-gamma * d).exp();
                }
            }
            let m = ys[i] * f;
            if alpha[i] <= 0.0 {
                (1.0 - m).max(0.0)
            } else if alpha[i] >= c {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blobs() -> (Matrix, Vec<u8>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let t = i as f64 * 0.37;
            let cls = (i % 2) as u8;
            let centre = if cls == 1 { 1.0 } else { -1.0 };
            rows.push(vec![centre + 0.8 * t.sin(), centre + 0.8 * (1.3 * t).cos()]);
            y.push(cls);
        }
        (Matrix::from_row_vecs(&rows), y)
    }

    #[test]
    fn kkt_holds_after_solve() {
        let (x, y) = two_blobs();
        for c in [0.1, 1.0, 10.0] {
            let ys = signed_labels(&y);
            let d = squared_distances(&x, &x);
            let sol = solve_smo(&mut DenseKernel::from_distances(&d, x.rows(), 0.5), &ys, c, KKT_TOL);
            assert!(sol.converged);
            let sum: f64 = sol.alpha.iter().zip(&ys).map(|(a, y)| a * y).sum();
            assert!(sum.abs() < 1e-9);
            let r = kkt_residuals(&x, &y, &sol.alpha, sol.rho, c, 0.5);
            let worst = r.iter().cloned().fold(0.0, f64::max);
            assert!(worst <= KKT_TOL, "C={c}: {worst}");
        }
    }

    #[test]
    fn cached_and_dense_kernels_agree() {
        let (x, y) = two_blobs();
        let ys = signed_labels(&y);
        let d = squared_distances(&x, &x);
        let a = solve_smo(&mut DenseKernel::from_distances(&d, x.rows(), 0.5), &ys, 1.0, KKT_TOL);
        let mut cached = CachedKernel::new(&x, 0.5);
        cached.capacity = 3;
        let b = solve_smo(&mut cached, &ys, 1.0, KKT_TOL);
        assert_eq!(a.iterations, b.iterations);
        for (u, v) in a.alpha.iter().zip(&b.alpha) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn separates_blobs() {
        let (x, y) = two_blobs();
        let m = fit_svm(&x, &y, 10.0, 0.5);
        let acc = (0..x.rows()).filter(|&i| m.predict(x.row(i)) == y[i]).count();
        assert_eq!(acc, x.rows());
    }
}
