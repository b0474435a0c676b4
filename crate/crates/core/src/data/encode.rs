use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stable identity of a sample for seeding its spike generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SampleKey(pub u64);

impl SampleKey {
    pub fn train(index: usize) -> Self {
        Self(index as u64)
    }

    pub fn test(index: usize) -> Self {
        Self((1 << 40) | index as u64)
    }
}

/// Bernoulli rate code: pixel `v` spikes with probability `v / 255 * r_max`
/// on each of `steps` timesteps. The generator is keyed by `(seed, key)`.
pub fn encode_poisson(image: &[u8], steps: usize, r_max: f64, seed: u64, key: SampleKey) -> Vec<Vec<bool>> {
    assert!(r_max > 0.0 && r_max <= 1.0, "r_max {r_max} outside (0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key.0);
    let probs: Vec<f64> = image.iter().map(|&v| v as f64 / 255.0 * r_max).collect();
    (0..steps)
        .map(|_| probs.iter().map(|&p| rng.random::<f64>() < p).collect())
        .collect()
}
