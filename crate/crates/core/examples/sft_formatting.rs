//! Conversational and offline renderings of one trajectory.

use simulmt::pipeline::curate_pair;
use simulmt::sftformat::{render_conversational, render_offline, ChatTemplate};

fn main() -> simulmt::Result<()> {
    let c = curate_pair(0, "das Haus ist klein", "the house is small", "0-0 1-1 2-2 3-3")?;
    let template = ChatTemplate::llama2();

    let rec = render_conversational(&c.trajectory, &c.pair, "Translate German to English.", &template);
    println!("{}\n", rec.text);
    for span in &rec.loss_mask_spans {
        println!("loss on {:?}: {:?}", span, rec.slice(*span));
    }
    println!("{}", serde_json::to_string(&rec).expect("record serializes"));

    let offline = render_offline(&c.pair, 3, &["the", "house"], "", &template);
    println!("\noffline prompt after 3 source words: {offline:?}");
    Ok(())
}
