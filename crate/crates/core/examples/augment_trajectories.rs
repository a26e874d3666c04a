//! Merge and shift a fine-grained trajectory under a fixed seed.

use simulmt::augment::{augment_pipeline, merge, shift, AugmentConfig, SeededSampler};
use simulmt::pipeline::curate_pair;
use simulmt::trajectory::verify;

fn main() -> simulmt::Result<()> {
    let src = "a1 a2 a3 a4 a5 a6 a7 a8 a9 a10 a11 a12";
    let tgt = "b1 b2 b3 b4 b5 b6 b7 b8 b9 b10 b11 b12";
    let diagonal = (0..12).map(|k| format!("{k}-{k}")).collect::<Vec<_>>().join(" ");
    let curated = curate_pair(0, src, tgt, &diagonal)?;
    println!("meta: {} chunks", curated.trajectory.num_chunks());

    let cfg = AugmentConfig {
        seed: 42,
        ..AugmentConfig::default()
    };
    let mut sampler = SeededSampler::for_pair(cfg.seed, 0);
    let merged = merge(&curated.trajectory, &cfg, &mut sampler);
    let shifted = shift(&merged, &cfg, &mut sampler);
    for (name, t) in [("merged", &merged), ("shifted", &shifted)] {
        let shape: Vec<_> = t
            .chunks
            .iter()
            .map(|c| format!("{}r/{}w+{}", c.read.len(), c.write.len() - c.shifted_prefix_len, c.shifted_prefix_len))
            .collect();
        println!("{name}: {}", shape.join(" | "));
        assert!(verify(t, &curated.plan).is_empty());
    }

    // same seed, same pair id, same result
    assert_eq!(augment_pipeline(&curated.trajectory, &cfg), shifted);
    Ok(())
}
