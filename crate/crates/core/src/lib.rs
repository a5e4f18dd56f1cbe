//! Discrete-time simulator of a UAV-swarm-assisted mobile edge computing
//! system. Leader UAVs head swarms of follower UAVs that serve ground IoT
//! devices; every slot each UAV decides whether to refuel, which
//! applications to carry, where to fly, which swarm to join and which tasks
//! to delegate, each decision driven by its own tabular Q-learner. The
//! training objective is the fleet's long-term energy efficiency in bits
//! per joule.

pub mod channel;
pub mod dynamics;
pub mod games;
pub mod qlearn;
pub mod trainer;
pub mod world;

pub use dynamics::{evaluate_slot, energy_efficiency, PropulsionParams, SlotLedger};
pub use qlearn::{LearnerParams, QTable, StateKey};
pub use trainer::{run_training, Mode, Trainer, TrainingOutput};
pub use world::{build_world, SimConfig, World};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent deterministic RNG stream derived from a root seed.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Cheap stateless seed mixer (splitmix64 step) for per-episode seeds.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
