//! Average Lagging of wait-k schedules and simulated word wall time.

use simulmt::metrics::{average_lagging, latency_report, CostModel};
use simulmt::simulator::{run, EchoModel, SimConfig};

fn main() -> simulmt::Result<()> {
    let (i, j) = (10, 10);
    for k in [1, 3, 5, 10] {
        let delays: Vec<usize> = (1..=j).map(|t| (k + t - 1).min(i)).collect();
        println!("wait-{k:<2} AL = {:.3}", average_lagging(&delays, i, j)?);
    }

    let source: Vec<String> = (1..=12).map(|k| format!("w{k}")).collect();
    let cost = CostModel {
        per_recomputed_token: 0.05,
        per_generated_word: 1.0,
    };
    for n in [3, 5, 7] {
        let cfg = SimConfig {
            chunk: n,
            ..SimConfig::default()
        };
        let r = latency_report(&run(0, &source, &EchoModel, &cfg)?.events, cost)?;
        println!(
            "n={n}: AL {:.2}, simulated WWT conversational {:.3} / offline {:.3}",
            r.al, r.simulated_wwt_conversational, r.simulated_wwt_offline
        );
    }
    Ok(())
}
