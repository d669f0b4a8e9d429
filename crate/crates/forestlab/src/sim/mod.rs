//! Data generators for the adversarial models.
//!
//! Three building blocks live here:
//!
//! * [`BernsteinTriple`]: three pairwise-independent binary indicators built
//!   from three fair coins.
//! * [`Model8Params`] / [`simulate_model8`]: the ten-variable benchmark model
//!   whose response switches between two linear branches according to the
//!   agreement indicator of the two hidden binary variables.
//! * [`PairwiseDensitySpec`] / [`simulate_model3`]: the continuous
//!   density-perturbation family, sampled by rejection, with the first
//!   coordinate re-expressed through its conditional CDF so the response is a
//!   deterministic function of the observed blocks and fresh noise.
//!
//! All generators are pure functions of their parameters and a seeded RNG.

mod bernstein;
mod model8;
mod pairwise;

pub use bernstein::{sample_bernstein, BernsteinTriple};
pub use model8::{sample_gaussian_block, simulate_model8, BetaChoice, Model8Params, BLOCK_DIM};
pub use pairwise::{
    conditional_cdf_inverse, sample_pairwise_density, simulate_model3, ConditionalCdf, Marginal,
    PairwiseDensitySpec, Perturbation,
};
