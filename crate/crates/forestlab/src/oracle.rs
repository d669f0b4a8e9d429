//! Closed-form reference predictors for the benchmark model.
//!
//! The conditional mean of the response given all ten covariates switches
//! between the two linear branches according to the agreement indicator, and
//! its test error equals the irreducible noise variance
//! `Var(eps + eta) = Var(zeta + eta) = 2`. The best predictor that sees only
//! the Gaussian block is the single linear map `gamma . x'` with
//! `gamma = (alpha + beta) / 2`; a forest that fails to exploit the hidden
//! pair is expected to plateau near its error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::Predictor;
use crate::sim::{Model8Params, BLOCK_DIM};

/// Branch coefficients and their average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub alpha: [f64; BLOCK_DIM],
    pub beta: [f64; BLOCK_DIM],
    /// `(alpha + beta) / 2`, the block-only optimal coefficients.
    pub gamma: [f64; BLOCK_DIM],
}

impl OracleSpec {
    pub fn new(alpha: [f64; BLOCK_DIM], beta: [f64; BLOCK_DIM]) -> Self {
        let gamma = std::array::from_fn(|j| 0.5 * (alpha[j] + beta[j]));
        OracleSpec { alpha, beta, gamma }
    }

    pub fn from_model(params: &Model8Params) -> Self {
        Self::new(params.alpha, params.beta)
    }
}

fn dot(c: &[f64; BLOCK_DIM], x: &[f64]) -> f64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// The conditional-mean predictor over full rows `(x1, x2, x3..x10)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPredictor {
    pub spec: OracleSpec,
}

impl OptimalPredictor {
    pub fn new(spec: OracleSpec) -> Self {
        OptimalPredictor { spec }
    }

    /// Checked prediction: the two leading coordinates must be binary.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != BLOCK_DIM + 2 {
            return Err(Error::InvalidParams(format!(
                "expected {} coordinates, got {}",
                BLOCK_DIM + 2,
                x.len()
            )));
        }
        for j in 0..2 {
            if x[j] != 0.0 && x[j] != 1.0 {
                return Err(Error::InvalidParams(format!(
                    "coordinate {} must be binary, got {}",
                    j + 1,
                    x[j]
                )));
            }
        }
        Ok(self.predict_row(x))
    }
}

impl Predictor for OptimalPredictor {
    fn predict_row(&self, x: &[f64]) -> f64 {
        let coeff = if x[0] == x[1] { &self.spec.alpha } else { &self.spec.beta };
        dot(coeff, &x[2..])
    }
}

/// The block-only optimal predictor `gamma . x'` over full rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPredictor {
    pub spec: OracleSpec,
}

impl MarginalPredictor {
    pub fn new(spec: OracleSpec) -> Self {
        MarginalPredictor { spec }
    }

    /// Prediction from the Gaussian block alone.
    pub fn predict_block(&self, x_prime: &[f64]) -> f64 {
        dot(&self.spec.gamma, x_prime)
    }
}

impl Predictor for MarginalPredictor {
    fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_block(&x[2..])
    }
}
