//! Minimal dense-tensor compute with reverse-mode differentiation.
//!
//! All tensors are 2-D `(rows, cols)` row-major `f32` buffers; vectors are
//! `1 x n`, scalars `1 x 1`. Forward ops are recorded on a [`Graph`] tape and
//! replayed in reverse by [`Graph::backward`]. Reductions (softmax sums,
//! layer-norm statistics, loss means) accumulate in `f64`.

mod adam;
mod checkpoint;
mod graph;
mod param;

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointManifest, ParamSpec};
pub use graph::{Graph, NodeId};
pub use param::{Init, ParamBundle, Parameter};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG used everywhere randomness is needed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
