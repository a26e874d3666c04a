//! Merge and shift augmentation of meta trajectories.
//!
//! Sampling order is fixed so outputs are reproducible: one `delta` draw per
//! merge group, left to right; then for every chunk but the last, one
//! Bernoulli(`beta`) draw followed by one `rho` draw if it succeeded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{Chunk, Provenance, Trajectory};

/// Upper end of the split proportion range.
pub const RHO_MAX: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub delta_min: usize,
    pub delta_max: usize,
    pub beta: f64,
    pub rho_min: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            delta_min: 2,
            delta_max: 10,
            beta: 0.5,
            rho_min: 0.5,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_min < 1 {
            return Err(Error::InvalidConfig("delta_min must be >= 1".into()));
        }
        if self.delta_max < self.delta_min {
            return Err(Error::InvalidConfig("delta_max must be >= delta_min".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidConfig("beta must lie in [0, 1]".into()));
        }
        if !(self.rho_min > 0.0 && self.rho_min < RHO_MAX) {
            return Err(Error::InvalidConfig("rho_min must lie in (0, 0.9)".into()));
        }
        Ok(())
    }
}

/// Source of the three random quantities the augmenter needs.
pub trait Sampler {
    /// Uniform integer in `min..=max`.
    fn delta(&mut self, min: usize, max: usize) -> usize;
    fn bernoulli(&mut self, p: f64) -> bool;
    /// Uniform real in `[rho_min, 0.9)`.
    fn rho(&mut self, rho_min: f64) -> f64;
}

/// ChaCha8-backed sampler.
#[derive(Clone, Debug)]
pub struct SeededSampler {
    rng: ChaCha8Rng,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for one sentence pair.
    pub fn for_pair(seed: u64, pair_id: usize) -> Self {
        Self::new(derive_seed(seed, pair_id as u64))
    }
}

impl Sampler for SeededSampler {
    fn delta(&mut self, min: usize, max: usize) -> usize {
        self.rng.gen_range(min..=max)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn rho(&mut self, rho_min: f64) -> f64 {
        let u: f64 = self.rng.gen();
        rho_min + u * (RHO_MAX - rho_min)
    }
}

/// Mixes the run seed with a pair ordinal (splitmix64 finalizer).
pub fn derive_seed(seed: u64, pair_id: u64) -> u64 {
    let mut z = seed ^ pair_id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Groups consecutive chunks, `delta` at a time, into single chunks.
pub fn merge(traj: &Trajectory, cfg: &AugmentConfig, sampler: &mut impl Sampler) -> Trajectory {
    debug_assert_eq!(traj.provenance, Provenance::Meta);
    let mut chunks = Vec::new();
    let mut rest = traj.chunks.as_slice();
    while !rest.is_empty() {
        let delta = sampler.delta(cfg.delta_min, cfg.delta_max).min(rest.len());
        let (group, tail) = rest.split_at(delta);
        chunks.push(Chunk {
            read: group.iter().flat_map(|c| c.read.iter().copied()).collect(),
            write: group.iter().flat_map(|c| c.write.iter().copied()).collect(),
            shifted_prefix_len: 0,
            flushed_suffix_len: group.iter().map(|c| c.flushed_suffix_len).sum(),
        });
        rest = tail;
    }
    Trajectory {
        pair_id: traj.pair_id,
        provenance: Provenance::Merged,
        chunks,
    }
}

/// With probability `beta`, moves the tail of a chunk's write into the next chunk.
///
/// The first `max(1, floor(rho * |W|))` words stay; chunks with fewer than two
/// words and the final chunk are left alone.
pub fn shift(traj: &Trajectory, cfg: &AugmentConfig, sampler: &mut impl Sampler) -> Trajectory {
    debug_assert_eq!(traj.provenance, Provenance::Merged);
    let mut chunks = traj.chunks.clone();
    for c in 0..chunks.len().saturating_sub(1) {
        if !sampler.bernoulli(cfg.beta) {
            continue;
        }
        let rho = sampler.rho(cfg.rho_min);
        let len = chunks[c].write.len();
        if len < 2 {
            continue;
        }
        let keep = ((rho * len as f64).floor() as usize).clamp(1, len - 1);
        let tail = chunks[c].write.split_off(keep);
        chunks[c].shifted_prefix_len = chunks[c].shifted_prefix_len.min(keep);
        let next = &mut chunks[c + 1];
        next.shifted_prefix_len += tail.len();
        next.write.splice(0..0, tail);
    }
    Trajectory {
        pair_id: traj.pair_id,
        provenance: Provenance::MergedShifted,
        chunks,
    }
}

/// `shift(merge(traj))` with a sampler derived from `(cfg.seed, pair_id)`.
pub fn augment_pipeline(traj: &Trajectory, cfg: &AugmentConfig) -> Trajectory {
    let mut sampler = SeededSampler::for_pair(cfg.seed, traj.pair_id);
    let merged = merge(traj, cfg, &mut sampler);
    shift(&merged, cfg, &mut sampler)
}
