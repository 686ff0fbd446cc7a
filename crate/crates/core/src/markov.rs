//! Rouwenhorst discretization of an AR(1) in logs.
//!
//! Chosen over Tauchen because the chain's first-order autocorrelation equals
//! the AR(1) persistence exactly and the stationary variance of the log grid
//! equals `sigma^2 / (1 - rho^2)` exactly, at any grid size.

use ndarray::Array2;

use crate::error::{Result, SmeqError};
use crate::params::LevelNorm;

/// Discretized productivity process: levels, transition matrix, stationary weights.
#[derive(Debug, Clone)]
pub struct DiscreteAr1 {
    /// Productivity levels (exponentiated log grid).
    pub levels: Vec<f64>,
    /// Log grid before exponentiation.
    pub log_grid: Vec<f64>,
    /// Transition matrix, rows = current state.
    pub pi: Array2<f64>,
    /// Stationary distribution of the chain.
    pub stationary: Vec<f64>,
}

/// Rouwenhorst transition matrix for persistence `rho` on `n` states.
fn rouwenhorst_matrix(rho: f64, n: usize) -> Array2<f64> {
    let p = (1.0 + rho) / 2.0;
    let mut pi = Array2::from_elem((1, 1), 1.0);
    for m in 2..=n {
        let prev = pi;
        let mut next = Array2::zeros((m, m));
        for i in 0..m - 1 {
            for j in 0..m - 1 {
                let v = prev[(i, j)];
                next[(i, j)] += p * v;
                next[(i, j + 1)] += (1.0 - p) * v;
                next[(i + 1, j)] += (1.0 - p) * v;
                next[(i + 1, j + 1)] += p * v;
            }
        }
        // halve the interior rows that were filled twice
        for i in 1..m - 1 {
            for j in 0..m {
                next[(i, j)] *= 0.5;
            }
        }
        pi = next;
    }
    pi
}

/// Binomial(n-1, 1/2) weights: the exact stationary distribution of the
/// symmetric Rouwenhorst chain.
fn binomial_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    w[0] = 1.0;
    for m in 1..n {
        for i in (1..=m).rev() {
            w[i] = 0.5 * (w[i] + w[i - 1]);
        }
        w[0] *= 0.5;
    }
    w
}

/// Discretizes `log(s') = rho log(s) + eps`, `eps ~ N(0, sigma^2)` into an
/// `n`-state Markov chain and exponentiates the grid into levels.
pub fn discretize_ar1_with(rho: f64, sigma: f64, n: usize, norm: LevelNorm) -> Result<DiscreteAr1> {
    if rho.abs() >= 1.0 {
        return Err(SmeqError::invalid_param("rho", "|rho| must be < 1"));
    }
    if sigma <= 0.0 {
        return Err(SmeqError::invalid_param("sigma", "must be positive"));
    }
    if n == 0 {
        return Err(SmeqError::invalid_param("n", "grid size must be >= 1"));
    }
    let log_grid: Vec<f64> = if n == 1 {
        vec![0.0]
    } else {
        let sd = sigma / (1.0 - rho * rho).sqrt();
        let span = sd * ((n - 1) as f64).sqrt();
        (0..n)
            .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
            .collect()
    };
    let pi = rouwenhorst_matrix(rho, n);
    let stationary = binomial_weights(n);
    let mut levels: Vec<f64> = log_grid.iter().map(|&g| g.exp()).collect();
    if let LevelNorm::MeanOne = norm {
        let mean: f64 = levels.iter().zip(&stationary).map(|(l, w)| l * w).sum();
        for l in &mut levels {
            *l /= mean;
        }
    }
    Ok(DiscreteAr1 {
        levels,
        log_grid,
        pi,
        stationary,
    })
}

/// Spec'd operation: levels mean-normalized so the stationary mean of `s` is one.
pub fn discretize_ar1(rho: f64, sigma: f64, n: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let d = discretize_ar1_with(rho, sigma, n, LevelNorm::MeanOne)?;
    Ok((d.levels, d.pi))
}

impl DiscreteAr1 {
    /// Stationary variance of `log s` implied by the chain.
    pub fn stationary_log_variance(&self) -> f64 {
        let mean: f64 = self
            .log_grid
            .iter()
            .zip(&self.stationary)
            .map(|(g, w)| g * w)
            .sum();
        self.log_grid
            .iter()
            .zip(&self.stationary)
            .map(|(g, w)| w * (g - mean) * (g - mean))
            .sum()
    }

    /// First-order autocorrelation of the chain (on the log grid).
    pub fn persistence(&self) -> f64 {
        let n = self.log_grid.len();
        if n == 1 {
            return 0.0;
        }
        let mean: f64 = self
            .log_grid
            .iter()
            .zip(&self.stationary)
            .map(|(g, w)| g * w)
            .sum();
        let var = self.stationary_log_variance();
        let mut cov = 0.0;
        for i in 0..n {
            for j in 0..n {
                cov += self.stationary[i]
                    * self.pi[(i, j)]
                    * (self.log_grid[i] - mean)
                    * (self.log_grid[j] - mean);
            }
        }
        cov / var
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_stochastic() {
        let d = discretize_ar1_with(0.9411, 0.1680, 5, LevelNorm::LogMeanZero).unwrap();
        for row in d.pi.rows() {
            let sum: f64 = row.sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn stationary_log_variance_matches_ar1() {
        // sigma^2 / (1 - rho^2) at the benchmark parameters
        let d = discretize_ar1_with(0.9411, 0.1680, 5, LevelNorm::MeanOne).unwrap();
        let target = 0.1680_f64.powi(2) / (1.0 - 0.9411_f64.powi(2));
        let got = d.stationary_log_variance();
        assert!(
            (got - target).abs() / target < 1e-2,
            "got {got}, want {target}"
        );
        // Rouwenhorst is exact, not merely within 1%
        assert!((got - target).abs() / target < 1e-12);
    }

    #[test]
    fn persistence_is_exact() {
        for &n in &[2usize, 3, 5, 9] {
            let d = discretize_ar1_with(0.9411, 0.1680, n, LevelNorm::LogMeanZero).unwrap();
            assert!((d.persistence() - 0.9411).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn zero_persistence_gives_identical_rows() {
        let (_, pi) = discretize_ar1(0.0, 0.1, 3).unwrap();
        for j in 0..3 {
            assert!((pi[(0, j)] - pi[(1, j)]).abs() < 1e-14);
            assert!((pi[(1, j)] - pi[(2, j)]).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_grid() {
        let (levels, pi) = discretize_ar1(0.9, 0.1, 1).unwrap();
        assert_eq!(levels, vec![1.0]);
        assert_eq!(pi[(0, 0)], 1.0);
    }

    #[test]
    fn mean_one_normalization() {
        let d = discretize_ar1_with(0.9411, 0.1680, 5, LevelNorm::MeanOne).unwrap();
        let mean: f64 = d.levels.iter().zip(&d.stationary).map(|(l, w)| l * w).sum();
        assert!((mean - 1.0).abs() < 1e-6);
    }

    #[test]
    fn log_mean_zero_normalization() {
        let d = discretize_ar1_with(0.9411, 0.1680, 5, LevelNorm::LogMeanZero).unwrap();
        let mean_log: f64 = d
            .log_grid
            .iter()
            .zip(&d.stationary)
            .map(|(g, w)| g * w)
            .sum();
        assert!(mean_log.abs() < 1e-12);
        assert!((d.levels[2] - 1.0).abs() < 1e-14); // middle point is exp(0)
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(discretize_ar1(1.0, 0.1, 5).is_err());
        assert!(discretize_ar1(0.9, 0.1, 0).is_err());
        assert!(discretize_ar1(0.9, -0.1, 5).is_err());
    }
}
