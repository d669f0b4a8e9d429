//! Regression random forests, their partitioned ("armed") variant, and a
//! simulation lab for data-generating models built on pairwise-independent
//! covariates.
//!
//! The crate has three layers:
//!
//! * [`sim`] generates datasets whose response depends on a pair of
//!   covariates jointly while being independent of each one separately,
//!   which hides the pair from one-variable-at-a-time greedy splitting.
//! * [`cart`] and [`forest`] implement regression trees, bagged forests, and
//!   [`forest::ArmedForest`], which trains one forest per cell of an initial
//!   partition of the feature space.
//! * [`diagnostics`] measures test error, permutation variable importance,
//!   and variable-usage statistics, and screens for the importance/usage
//!   discrepancies that indicate a hidden pair; [`oracle`] supplies the
//!   closed-form reference predictors of the benchmark model.
//!
//! Everything randomized is a pure function of its parameters and a master
//! seed; fits and diagnostics are bit-reproducible for any worker count.
//!
//! ```
//! use forestlab::forest::{ArmSpec, ArmedForest, Forest, ForestParams};
//! use forestlab::diagnostics::evaluate;
//! use forestlab::sim::{simulate_model8, BetaChoice, Model8Params};
//! use forestlab::rng::rng_from_seed;
//!
//! let params = Model8Params::new(BetaChoice::ThreeQuarterAlpha);
//! let train = simulate_model8(300, &params, &mut rng_from_seed(1)).unwrap();
//! let test = simulate_model8(300, &params, &mut rng_from_seed(2)).unwrap();
//!
//! let forest_params = ForestParams::new(7).with_n_trees(20);
//! let plain = Forest::fit(&train, &forest_params).unwrap();
//! let armed = ArmedForest::fit(&train, ArmSpec::delta(0, 1), &forest_params).unwrap();
//!
//! let plain_mse = evaluate(&plain, &test).mse;
//! let armed_mse = evaluate(&armed, &test).mse;
//! assert!(armed_mse.is_finite() && plain_mse.is_finite());
//! ```

pub mod cart;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod forest;
pub mod numeric;
pub mod oracle;
pub mod predictor;
pub mod rng;
pub mod sim;
pub mod stats;

pub use dataset::Dataset;
pub use error::{Error, Result};
pub use predictor::Predictor;

/// Compile and run the guide's code blocks as doc-tests, so the book under
/// `book/` cannot drift from the crate.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(introduction, "../../../book/src/introduction.md");
    chapter!(hidden_pairs, "../../../book/src/hidden-pairs.md");
    chapter!(simulation_models, "../../../book/src/simulation-models.md");
    chapter!(forests, "../../../book/src/forests.md");
    chapter!(armed_forests, "../../../book/src/armed-forests.md");
    chapter!(diagnostics, "../../../book/src/diagnostics.md");
    chapter!(harness, "../../../book/src/harness.md");
}
