//! Chunk statistics for meta and augmented trajectories of a synthetic corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simulmt::augment::{augment_pipeline, AugmentConfig};
use simulmt::metrics::StatsAccumulator;
use simulmt::pipeline::curate_pair;

fn main() -> simulmt::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = AugmentConfig::default();
    let mut acc = StatsAccumulator::default();
    for id in 0..500 {
        let len = rng.gen_range(8..30);
        let src: Vec<String> = (0..len).map(|k| format!("s{k}")).collect();
        let tgt: Vec<String> = (0..len).map(|k| format!("t{k}")).collect();
        // mostly diagonal with local reordering
        let links: Vec<String> = (0..len)
            .map(|k| {
                let i = (k as i64 + rng.gen_range(-2..=2)).clamp(0, len as i64 - 1);
                format!("{i}-{k}")
            })
            .collect();
        let c = curate_pair(id, &src.join(" "), &tgt.join(" "), &links.join(" "))?;
        acc.add(&c.trajectory);
        acc.add(&augment_pipeline(&c.trajectory, &cfg));
    }
    print!("{}", acc.finish()?.to_table());
    Ok(())
}
