//! The three-coin construction of pairwise-independent indicators.

use rand::Rng;

/// Three binary indicators that are pairwise independent but jointly
/// dependent: each is the equality indicator of a different pair out of
/// three fair coins, so any two look like independent fair bits while the
/// third is always determined by the other two (`x0 = 1` exactly when
/// `x1 == x2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BernsteinTriple {
    pub x0: bool,
    pub x1: bool,
    pub x2: bool,
}

impl BernsteinTriple {
    /// The four support points `(1,1,1), (1,0,0), (0,1,0), (0,0,1)`.
    pub fn support() -> [BernsteinTriple; 4] {
        [
            BernsteinTriple { x0: true, x1: true, x2: true },
            BernsteinTriple { x0: true, x1: false, x2: false },
            BernsteinTriple { x0: false, x1: true, x2: false },
            BernsteinTriple { x0: false, x1: false, x2: true },
        ]
    }
}

/// Draw a triple from three independent fair coins `b1, b2, b3`:
/// `x0 = [b1 == b2]`, `x1 = [b1 == b3]`, `x2 = [b2 == b3]`.
pub fn sample_bernstein(rng: &mut impl Rng) -> BernsteinTriple {
    let b1: bool = rng.random();
    let b2: bool = rng.random();
    let b3: bool = rng.random();
    BernsteinTriple { x0: b1 == b2, x1: b1 == b3, x2: b2 == b3 }
}
