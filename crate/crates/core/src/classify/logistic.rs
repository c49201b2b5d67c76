//! L2-regularized logistic regression by damped iteratively reweighted least
//! squares.
//!
//! Objective: mean negative log-likelihood + (λ/2)‖w‖², intercept
//! unpenalized. Each Newton step is halved until the objective does not
//! increase. Iteration stops when the largest coefficient change falls below
//! 1e-8 or after 100 iterations.

use crate::matrix::{cholesky_solve, weighted_gram_with_intercept, Matrix};

const MAX_ITER: usize = 100;
const COEF_TOL: f64 = 1e-8;
const DAMPING: f64 = 1e-8;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    /// Intercept first, then one weight per column.
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn linear_predictor(coef: &[f64], row: &[f64]) -> f64 {
    coef[0] + coef[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
}

pub fn probability(coef: &[f64], row: &[f64]) -> f64 {
    sigmoid(linear_predictor(coef, row))
}

/// Mean negative log-likelihood plus the ridge penalty.
pub fn objective(x: &Matrix, y: &[f64], lambda: f64, coef: &[f64]) -> f64 {
    let n = x.rows() as f64;
    let nll: f64 = (0..x.rows())
        .map(|i| {
            let z = linear_predictor(coef, x.row(i));
            softplus(z) - y[i] * z
        })
        .sum();
    nll / n + 0.5 * lambda * coef[1..].iter().map(|b| b * b).sum::<f64>()
}

/// Gradient of [`objective`].
pub fn gradient(x: &Matrix, y: &[f64], lambda: f64, coef: &[f64]) -> Vec<f64> {
    let n = x.rows() as f64;
    let mut g = vec![0.0; coef.len()];
    for i in 0..x.rows() {
        let r = probability(coef, x.row(i)) - y[i];
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(x.row(i)) {
            *gj += r * xj;
        }
    }
    g.iter_mut().for_each(|v| *v /= n);
    for (gj, b) in g[1..].iter_mut().zip(&coef[1..]) {
        *gj += lambda * b;
    }
    g
}

/// Fits the model; `init` warm-starts from a previous solution. A run that
/// hits the iteration cap returns its best iterate with `converged = false`.
pub fn fit_logistic(x: &Matrix, y: &[f64], lambda: f64, init: Option<&[f64]>) -> LogisticFit {
    let p = x.cols() + 1;
    let n = x.rows() as f64;
    let mut coef = init.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    if init.is_none() {
        // start the intercept at the log-odds of the mean
        let m = (y.iter().sum::<f64>() / n).clamp(1e-6, 1.0 - 1e-6);
        coef[0] = (m / (1.0 - m)).ln();
    }
    let mut obj = objective(x, y, lambda, &coef);
    let mut w = vec![0.0; x.rows()];
    let mut resid = vec![0.0; x.rows()];
    for it in 1..=MAX_ITER {
        for i in 0..x.rows() {
            let pi = probability(&coef, x.row(i));
            w[i] = pi * (1.0 - pi);
            resid[i] = pi - y[i];
        }
        let (mut h, mut g) = weighted_gram_with_intercept(x, &w, &resid);
        for v in h.iter_mut() {
            *v /= n;
        }
        for v in g.iter_mut() {
            *v /= n;
        }
        for j in 0..p {
            if j > 0 {
                h[j * p + j] += lambda;
                g[j] += lambda * coef[j];
            }
            h[j * p + j] += DAMPING;
        }
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let Some(step) = cholesky_solve(&h, &neg_g, p) else {
            return LogisticFit {
                coef,
                iterations: it,
                converged: false,
            };
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = coef.iter().zip(&step).map(|(c, s)| c + scale * s).collect();
            let t_obj = objective(x, y, lambda, &trial);
            if t_obj <= obj {
                accepted = Some((trial, t_obj));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, next_obj)) = accepted else {
            // no descent along the Newton direction: at the optimum to precision
            return LogisticFit {
                coef,
                iterations: it,
                converged: true,
            };
        };
        let change = step.iter().map(|s| (scale * s).abs()).fold(0.0, f64::max);
        coef = next;
        obj = next_obj;
        if change < COEF_TOL {
            return LogisticFit {
                coef,
                iterations: it,
                converged: true,
            };
        }
    }
    LogisticFit {
        coef,
        iterations: MAX_ITER,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_coefficients_on_large_sample() {
        use crate::rng::stream;
        use rand::Rng;
        let mut rng = stream(1);
        let n = 20_000;
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = rng.random_range(-2.0..2.0);
            let b: f64 = rng.random_range(-2.0..2.0);
            let p = sigmoid(0.5 + 1.5 * a - b);
            y.push(f64::from(u8::from(rng.random::<f64>() < p)));
            rows.push(vec![a, b]);
        }
        let fit = fit_logistic(&Matrix::from_row_vecs(&rows), &y, 0.0, None);
        assert!(fit.converged);
        for (got, want) in fit.coef.iter().zip([0.5, 1.5, -1.0]) {
            assert!((got - want).abs() < 0.1, "{got} vs {want}");
        }
    }

    #[test]
    fn stationary_point_has_zero_gradient() {
        let x = Matrix::from_row_vecs(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![1.5]]);
        let y = [0.0, 0.0, 1.0, 1.0, 0.0];
        let fit = fit_logistic(&x, &y, 0.1, None);
        assert!(fit.converged);
        let g = gradient(&x, &y, 0.1, &fit.coef);
        assert!(g.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn separable_data_hits_cap_but_classifies() {
        let x = Matrix::from_row_vecs(&[vec![-1.0], vec![-0.5], vec![0.5], vec![1.0]]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let fit = fit_logistic(&x, &y, 0.0, None);
        for i in 0..4 {
            assert_eq!(probability(&fit.coef, x.row(i)) >= 0.5, y[i] == 1.0);
        }
    }
}
