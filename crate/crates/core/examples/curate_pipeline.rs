//! Alignment to meta trajectory, one pair at a time.
//!
//! ```text
//! cargo run --example curate_pipeline
//! ```

use simulmt::alignment::{is_monotonic, sufficient_sets, SentencePair};
use simulmt::monotonic::{export_dot, monotonicize};
use simulmt::trajectory::{build_meta, verify};

fn main() -> simulmt::Result<()> {
    let pair = SentencePair::from_lines(0, "er hat das Buch gestern gelesen", "he read the book yesterday")?;
    // he-er, read-gelesen, the-das, book-Buch, yesterday-gestern
    let links = pair.parse_alignment("0-0 5-1 2-2 3-3 4-4")?;
    let sets = sufficient_sets(&pair, &links);
    println!("alignment monotonic: {}", is_monotonic(&sets));

    let plan = monotonicize(&sets, pair.source_len());
    println!("prefix requirements: {:?}", plan.prefix_req());
    println!("added edges (source, target): {:?}", plan.added_edges());

    let traj = build_meta(&plan, &pair);
    for (k, chunk) in traj.chunks.iter().enumerate() {
        let read: Vec<_> = chunk.read.iter().map(|&i| pair.source_word(i)).collect();
        let write: Vec<_> = chunk.write.iter().map(|&j| pair.target_word(j)).collect();
        println!("chunk {k}: READ {read:?} WRITE {write:?}");
    }
    assert!(verify(&traj, &plan).is_empty());

    println!("\n{}", export_dot(&plan, &sets, &pair));
    Ok(())
}
