//! Lockstep comparison of the accelerator against the functional network.

use metaspike::arch::{Accelerator, ArchConfig};
use metaspike::fxp::Scalar;
use metaspike::network::{ModelConfig, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn frames(rng: &mut ChaCha8Rng, t: usize, n: usize) -> Vec<Vec<bool>> {
    let rate: f64 = rng.random_range(0.0..0.6);
    (0..t).map(|_| (0..n).map(|_| rng.random_bool(rate)).collect()).collect()
}

/// Drive both engines through `samples` training samples and one inference
/// sample, comparing spikes, traces and potentials after every step and
/// parameters after every sample. Returns the number of samples compared
/// and whether any weight moved.
pub fn lockstep<S: Scalar>(
    cfg: &ModelConfig,
    arch: &ArchConfig,
    seed: u64,
    samples: usize,
    t: usize,
) -> Result<(usize, bool), String> {
    let mut net = Network::<S>::new(cfg, seed).map_err(|e| e.to_string())?;
    let mut acc = Accelerator::<S>::new(cfg, arch, seed).map_err(|e| e.to_string())?;
    let initial = net.parameters();
    let feedback = net.pathway.feedback().to_vec();
    if acc.parameters() != initial {
        return Err(format!("seed {seed}: initial parameters differ"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    for n in 0..=samples {
        let x = frames(&mut rng, t, cfg.n_input);
        let label = rng.random_range(0..cfg.n_output);
        let learn = n < samples;
        net.reset_state();
        acc.reset_state();
        for (k, f) in x.iter().enumerate() {
            let target = learn.then_some(label);
            let a = net.step(f, target, k).map_err(|e| e.to_string())?;
            let b = acc.step(f, target, k).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("spikes differ: seed {seed} sample {n} step {k}"));
            }
            if net.state != acc.state {
                return Err(format!("state differs: seed {seed} sample {n} step {k}"));
            }
            if net.pathway.neurons.fp != acc.errors.fp || net.pathway.neurons.fn_ != acc.errors.fn_ {
                return Err(format!("error neurons differ: seed {seed} sample {n} step {k}"));
            }
        }
        if learn {
            net.consolidate();
            acc.consolidate().map_err(|e| e.to_string())?;
        }
        if net.parameters() != acc.parameters() {
            return Err(format!("parameters differ: seed {seed} sample {n}"));
        }
    }
    if acc.feedback() != feedback {
        return Err(format!("seed {seed}: feedback changed"));
    }
    Ok((samples + 1, net.parameters() != initial))
}
