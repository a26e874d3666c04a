//! Incremental decoding: prefix selection over a beam, a scripted run and the
//! prompt growth of the echo model.

use simulmt::simulator::{
    cache_savings, run, select_prefix, EchoModel, ScriptedModel, SelectStrategy, SimConfig,
};

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn beam(rows: &[&str]) -> Vec<Vec<String>> {
    rows.iter().map(|r| words(r)).collect()
}

fn main() -> simulmt::Result<()> {
    let first = beam(&["we see", "we see", "we meet", "we see", "us"]);
    for strategy in [SelectStrategy::Lcp, SelectStrategy::ralcp(0.6)?, SelectStrategy::Greedy] {
        println!("{strategy:?}: {:?}", select_prefix(&first, strategy));
    }

    // candidates continue after whatever RALCP committed in the previous round
    let source = words("wir sehen uns morgen");
    let model = ScriptedModel::new(vec![first, beam(&["see each other tomorrow", "see you tomorrow"])]);
    let cfg = SimConfig {
        chunk: 2,
        ..SimConfig::default()
    };
    let r = run(0, &source, &model, &cfg)?;
    for e in &r.events {
        println!("round {}: read {:?} commit {:?}", e.round, e.read_words, e.committed_words);
    }
    println!("output: {}", r.output().join(" "));

    let cfg = SimConfig {
        chunk: 1,
        ..SimConfig::default()
    };
    let r = run(1, &source, &EchoModel, &cfg)?;
    for p in &r.prompts {
        println!("{}", p.conversational);
    }
    let s = cache_savings(&r.events);
    println!(
        "recomputed words: conversational {} vs offline {}",
        s.total_conversational, s.total_offline
    );
    Ok(())
}
