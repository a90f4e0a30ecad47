use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest diagonal jitter tried before a Gram matrix is declared ill-conditioned.
const MAX_JITTER: f64 = 1e-4;
/// Posterior variances below this (in standardized units) are an error, not round-off.
const NEGATIVE_VARIANCE_TOLERANCE: f64 = 1e-9;

/// Squared-exponential kernel with additive observation noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub signal_stddev: f64,
    pub length_scale: f64,
    pub noise_stddev: f64,
}

impl Kernel {
    pub fn covariance(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal_stddev * self.signal_stddev * (-sq / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0 && self.signal_stddev > 0.0 && self.noise_stddev >= 0.0) {
            return Err(Error::contract("kernel needs positive length scale and signal, non-negative noise"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub stddev: f64,
}

/// GP regression model with observations standardized to zero mean, unit variance.
#[derive(Clone, Debug)]
pub struct GaussianProcess {
    kernel: Kernel,
    points: Vec<Vec<f64>>,
    /// Lower Cholesky factor of `K + (σ_n² + jitter) I`, row-major.
    chol: Vec<f64>,
    /// `(K + σ_n² I)⁻¹ z`, where `z` are the standardized observations.
    weights: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    jitter: f64,
}

impl GaussianProcess {
    pub fn fit(points: &[Vec<f64>], values: &[f64], kernel: Kernel) -> Result<Self> {
        kernel.validate()?;
        let n = points.len();
        if n == 0 || n != values.len() {
            return Err(Error::contract("gp: need a non-empty set of points with one value each"));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::contract("gp: points have mixed dimensions"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("gp: observations must be finite"));
        }

        let y_mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
        let y_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let z: Vec<f64> = values.iter().map(|v| (v - y_mean) / y_scale).collect();

        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = kernel.covariance(&points[i], &points[j]);
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        let noise = kernel.noise_stddev * kernel.noise_stddev;
        let mut jitter = 0.0;
        let chol = loop {
            if let Some(l) = cholesky(&gram, n, noise + jitter) {
                break l;
            }
            jitter = if jitter == 0.0 { 1e-12 } else { jitter * 10.0 };
            if jitter > MAX_JITTER * (1.0 + 1e-9) {
                return Err(Error::IllConditioned {
                    message: format!("Cholesky failed on {n} points even with jitter {MAX_JITTER:e}"),
                    partial: None,
                });
            }
        };
        let weights = backward_substitute(&chol, n, &forward_substitute(&chol, n, &z));

        Ok(GaussianProcess { kernel, points: points.to_vec(), chol, weights, y_mean, y_scale, jitter })
    }

    /// Jitter that had to be added to the diagonal for the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn observation_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn observation_scale(&self) -> f64 {
        self.y_scale
    }

    /// Posterior mean and standard deviation in the original units.
    pub fn predict(&self, query: &[f64]) -> Result<Posterior> {
        let n = self.points.len();
        if query.len() != self.points[0].len() {
            return Err(Error::contract("gp: query has the wrong dimension"));
        }
        let cross: Vec<f64> = self.points.iter().map(|p| self.kernel.covariance(p, query)).collect();
        let mean_std: f64 = cross.iter().zip(&self.weights).map(|(k, w)| k * w).sum();
        let v = forward_substitute(&self.chol, n, &cross);
        let prior = self.kernel.signal_stddev * self.kernel.signal_stddev;
        let mut var = prior - v.iter().map(|x| x * x).sum::<f64>();
        if var < 0.0 {
            if var < -NEGATIVE_VARIANCE_TOLERANCE {
                return Err(Error::IllConditioned {
                    message: format!("posterior variance {var:e} is negative"),
                    partial: None,
                });
            }
            var = 0.0;
        }
        Ok(Posterior { mean: self.y_mean + self.y_scale * mean_std, stddev: self.y_scale * var.sqrt() })
    }
}

/// One-shot posterior at `query`.
pub fn gp_posterior(points: &[Vec<f64>], values: &[f64], kernel: Kernel, query: &[f64]) -> Result<Posterior> {
    GaussianProcess::fit(points, values, kernel)?.predict(query)
}

/// Expected improvement of a Gaussian prediction over `best`, offset by `xi`.
pub fn expected_improvement(mean: f64, stddev: f64, best: f64, xi: f64) -> f64 {
    let gain = mean - best - xi;
    if stddev <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / stddev;
    let normal = Normal::standard();
    gain * normal.cdf(z) + stddev * normal.pdf(z)
}

fn cholesky(a: &[f64], n: usize, diagonal_shift: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            if i == j {
                sum += diagonal_shift;
            }
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b`.
fn forward_substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * x[k]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    x
}

/// Solves `Lᵀ x = b`.
fn backward_substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (b[i] - s) / l[i * n + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel(length: f64, noise: f64) -> Kernel {
        Kernel { signal_stddev: 1.0, length_scale: length, noise_stddev: noise }
    }

    /// Gaussian elimination with partial pivoting on a copy of `a`.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    /// Posterior from the textbook formulas with an explicit dense solve.
    fn dense_posterior(points: &[Vec<f64>], values: &[f64], k: Kernel, q: &[f64]) -> (f64, f64) {
        let n = points.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let scale = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let z: Vec<f64> = values.iter().map(|v| (v - mean) / scale).collect();
        let gram: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| k.covariance(&points[i], &points[j]) + if i == j { k.noise_stddev.powi(2) } else { 0.0 })
                    .collect()
            })
            .collect();
        let cross: Vec<f64> = points.iter().map(|p| k.covariance(p, q)).collect();
        let alpha = dense_solve(gram.clone(), z);
        let beta = dense_solve(gram, cross.clone());
        let mu = cross.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>();
        let var = k.signal_stddev.powi(2) - cross.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
        (mean + scale * mu, scale * scale * var.max(0.0))
    }

    #[test]
    fn interpolates_observations_without_noise() {
        let points: Vec<Vec<f64>> = vec![vec![0.0], vec![0.3], vec![0.55], vec![1.0]];
        let values = vec![1.0, -2.0, 0.5, 3.0];
        let gp = GaussianProcess::fit(&points, &values, kernel(0.2, 1e-12)).unwrap();
        for (p, v) in points.iter().zip(&values) {
            let post = gp.predict(p).unwrap();
            assert!((post.mean - v).abs() < 1e-6);
            assert!(post.stddev < 1e-3);
        }
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let points = vec![vec![0.0, 0.0], vec![0.1, 0.2], vec![0.3, 0.1]];
        let values = vec![2.0, 4.0, 9.0];
        let gp = GaussianProcess::fit(&points, &values, kernel(0.2, 1e-4)).unwrap();
        let post = gp.predict(&[2.5, 2.5]).unwrap();
        let scale = gp.observation_scale();
        assert!((post.mean - gp.observation_mean()).abs() < 1e-3 * scale);
        assert!((post.stddev / scale - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_data_gives_symmetric_mean() {
        let xs = [-0.8, -0.3, 0.3, 0.8, 0.0];
        let points: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let values: Vec<f64> = xs.iter().map(|&x: &f64| (3.0 * x).cos()).collect();
        let gp = GaussianProcess::fit(&points, &values, kernel(0.4, 1e-4)).unwrap();
        for q in [0.1, 0.45, 0.9, 1.7] {
            let a = gp.predict(&[q]).unwrap().mean;
            let b = gp.predict(&[-q]).unwrap().mean;
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn agrees_with_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for trial in 0..10 {
            let dim = 1 + trial % 3;
            let points: Vec<Vec<f64>> = (0..20).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let values: Vec<f64> = (0..20).map(|_| rng.random_range(-5.0..5.0)).collect();
            let k = kernel(0.5, 1e-2);
            let gp = GaussianProcess::fit(&points, &values, k).unwrap();
            for _ in 0..10 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
                let post = gp.predict(&q).unwrap();
                let (mu, var) = dense_posterior(&points, &values, k, &q);
                assert!((post.mean - mu).abs() < 1e-8, "{} vs {mu}", post.mean);
                assert!((post.stddev.powi(2) - var).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn duplicate_points_need_jitter() {
        let points = vec![vec![0.5], vec![0.5], vec![0.5]];
        let values = vec![1.0, 1.0, 2.0];
        let gp = GaussianProcess::fit(&points, &values, kernel(0.2, 0.0)).unwrap();
        assert!(gp.jitter() > 0.0 && gp.jitter() <= MAX_JITTER);
    }

    #[test]
    fn hopeless_gram_is_ill_conditioned() {
        let points = vec![vec![0.0]; 3];
        let values = vec![1.0, 2.0, 3.0];
        // a huge signal variance swamps the largest jitter in round-off
        let k = Kernel { signal_stddev: 1e12, length_scale: 1.0, noise_stddev: 0.0 };
        assert!(matches!(GaussianProcess::fit(&points, &values, k), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn expected_improvement_cases() {
        assert_eq!(expected_improvement(1.0, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(expected_improvement(0.5, 0.0, 1.0, 0.01), 0.0);
        assert!((expected_improvement(2.0, 0.0, 1.0, 0.5) - 0.5).abs() < 1e-15);
        assert!((expected_improvement(3.0, 1.0, 3.0, 0.0) - 0.3989422804).abs() < 1e-9);
        for mu in [-2.0, -0.5, 0.0] {
            let mut prev = 0.0;
            for i in 0..200 {
                let sigma = i as f64 * 0.05;
                let ei = expected_improvement(mu, sigma, 0.0, 0.0);
                assert!(ei >= prev - 1e-15);
                prev = ei;
            }
        }
    }
}
