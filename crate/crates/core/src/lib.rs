//! Regret functions of convex optimisation problems over state spaces of
//! finite-dimensional operator algebras, the divergences they induce, and
//! numerical checks of monotonicity, sufficiency and locality, with
//! applications to coding, scoring rules, statistical mechanics and
//! portfolio theory.

pub mod coding;
pub mod divergence;
pub mod error;
pub mod portfolio;
pub mod regret;
pub mod scoring;
pub mod state;
pub mod statmech;
pub mod sufficiency;

pub use divergence::{kl, quantum_relative_entropy, Divergence};
pub use error::{Error, Result};
pub use regret::{action_regret, state_regret, ActionSet, SmoothGenerator, ValueFunction};
pub use state::{AlgebraShape, BlockMatrix, Observable, State};
pub use sufficiency::CheckReport;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for sample `index` of a randomised run seeded with `seed`.
/// Streams are independent, so samples can be drawn in any order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
