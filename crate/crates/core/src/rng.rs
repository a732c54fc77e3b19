//! Seeded random sources shared by the certification and audit batches.
//!
//! Every batch item draws from its own stream derived from `(seed, index)`,
//! so results do not depend on the order in which parallel tasks run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Real field with independent standard normal values.
pub fn normal_field(len: usize, rng: &mut Rng) -> crate::evolution::Field {
    use rand::Rng as _;
    use rand_distr::StandardNormal;
    crate::evolution::Field::from_real((0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}
