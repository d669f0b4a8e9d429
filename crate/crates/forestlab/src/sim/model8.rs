//! The ten-variable benchmark model.
//!
//! `Y = d * (alpha . x' + eps) + (1 - d) * (beta . x' + zeta) + eta`, where
//! `d` is the agreement indicator of the two hidden binary variables
//! `(x1, x2)` and `x' = (x3..x10)` is a correlated Gaussian block. The
//! response is independent of each of `x1` and `x2` separately, yet the pair
//! determines which linear branch is active.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::bernstein::sample_bernstein;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Dimension of the Gaussian block `(x3..x10)`.
pub const BLOCK_DIM: usize = 8;

/// Choice of the second-branch coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaChoice {
    /// `beta = 3 alpha / 4`: branches are similar, the failure is a plateau.
    ThreeQuarterAlpha,
    /// `beta = -alpha`: branches cancel on average, the failure is dramatic.
    NegAlpha,
}

/// Parameters of the benchmark model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model8Params {
    /// First-branch coefficients, default `(1, 2, ..., 8) / 8`.
    pub alpha: [f64; BLOCK_DIM],
    /// Second-branch coefficients.
    pub beta: [f64; BLOCK_DIM],
    /// Covariance of the Gaussian block, default `sigma[j][k] = 2^-|j-k|`.
    pub sigma: [[f64; BLOCK_DIM]; BLOCK_DIM],
    /// Mean of the Gaussian block, default the diagonal of `sigma` (all ones).
    pub mu: [f64; BLOCK_DIM],
    /// Standard deviations of the three noise terms `(eps, zeta, eta)`.
    /// Setting entries to zero turns the noise off for deterministic tests.
    pub noise_sd: [f64; 3],
}

impl Model8Params {
    /// Default coefficient vector `(1, 2, ..., 8) / 8`.
    pub fn default_alpha() -> [f64; BLOCK_DIM] {
        std::array::from_fn(|j| (j + 1) as f64 / 8.0)
    }

    /// Default block covariance `sigma[j][k] = 2^-|j-k|`.
    pub fn default_sigma() -> [[f64; BLOCK_DIM]; BLOCK_DIM] {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| (2.0f64).powi(-((j as i32 - k as i32).abs())))
        })
    }

    /// Standard parameters with the given `beta` rule.
    pub fn new(beta: BetaChoice) -> Self {
        let alpha = Self::default_alpha();
        let beta = match beta {
            BetaChoice::ThreeQuarterAlpha => alpha.map(|a| 0.75 * a),
            BetaChoice::NegAlpha => alpha.map(|a| -a),
        };
        let sigma = Self::default_sigma();
        let mu = std::array::from_fn(|j| sigma[j][j]);
        Model8Params { alpha, beta, sigma, mu, noise_sd: [1.0; 3] }
    }

    /// Same parameters with all noise terms forced to zero.
    pub fn noise_free(mut self) -> Self {
        self.noise_sd = [0.0; 3];
        self
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
fn cholesky(sigma: &[[f64; BLOCK_DIM]; BLOCK_DIM]) -> Result<[[f64; BLOCK_DIM]; BLOCK_DIM]> {
    let mut l = [[0.0f64; BLOCK_DIM]; BLOCK_DIM];
    for i in 0..BLOCK_DIM {
        for j in 0..=i {
            if (sigma[i][j] - sigma[j][i]).abs() > 1e-12 {
                return Err(Error::InvalidParams("covariance matrix is not symmetric".into()));
            }
            let mut s = sigma[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::InvalidParams(
                        "covariance matrix is not positive definite".into(),
                    ));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Draw `n` rows of the correlated Gaussian block via the triangular factor
/// of `sigma`: each row is `mu + L z` with `z` standard normal.
pub fn sample_gaussian_block(
    n: usize,
    params: &Model8Params,
    rng: &mut impl Rng,
) -> Result<Vec<[f64; BLOCK_DIM]>> {
    let l = cholesky(&params.sigma)?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let z: [f64; BLOCK_DIM] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let mut row = params.mu;
        for (i, li) in l.iter().enumerate() {
            for (k, lik) in li.iter().enumerate().take(i + 1) {
                row[i] += lik * z[k];
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Simulate `n` observations of the benchmark model.
///
/// Columns are `x1, x2` (binary, as 0/1), `x3..x10` (the Gaussian block),
/// and the response. The triple's redundant first indicator is discarded;
/// only the pair `(x1, x2)` enters the data.
pub fn simulate_model8(n: usize, params: &Model8Params, rng: &mut impl Rng) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    let d = BLOCK_DIM + 2;
    let block = sample_gaussian_block(n, params, rng)?;
    let mut features = Vec::with_capacity(n * d);
    let mut response = Vec::with_capacity(n);
    let [sd_eps, sd_zeta, sd_eta] = params.noise_sd;
    for x_prime in block {
        let t = sample_bernstein(rng);
        let x1 = t.x1 as u8 as f64;
        let x2 = t.x2 as u8 as f64;
        let delta = t.x1 == t.x2;
        let eps: f64 = sd_eps * rng.sample::<f64, _>(StandardNormal);
        let zeta: f64 = sd_zeta * rng.sample::<f64, _>(StandardNormal);
        let eta: f64 = sd_eta * rng.sample::<f64, _>(StandardNormal);
        let dot = |c: &[f64; BLOCK_DIM]| -> f64 {
            c.iter().zip(&x_prime).map(|(a, x)| a * x).sum()
        };
        let y = if delta { dot(&params.alpha) + eps } else { dot(&params.beta) + zeta } + eta;
        features.push(x1);
        features.push(x2);
        features.extend_from_slice(&x_prime);
        response.push(y);
    }
    Dataset::new(features, response, Dataset::default_names(d))
}
