//! Builds label-aligned stacked histograms from an event stream and writes
//! them as SHR1 tensors.
//!
//! ```bash
//! cargo run --release -p evsense --example build_histograms
//! ```

use std::path::PathBuf;

use evsense::io::write_histogram_file;
use evsense::representation::{windows_for_sequence, RepresentationSpec};
use evsense::scene::{generate_sequence, SceneSpec};
use evsense::sensor::{config_by_id, transduce_sequence};

fn main() -> evsense::Result<()> {
    let spec = SceneSpec::procedural(11, 320, 240, 20.0, 0.5, 90.0, 2);
    let (frames, labels) = generate_sequence(&spec)?;
    let events = transduce_sequence(&frames, config_by_id("base")?)?;
    println!("{} events from {} frames", events.len(), frames.frames.len());

    // One 50 ms window per labeled frame, 10 bins, 20 channels.
    let rep = RepresentationSpec::new(frames.width, frames.height);
    let label_ts: Vec<u64> = labels.iter().map(|l| l.t_ns).collect();
    let (histograms, plan) = windows_for_sequence(&events, &label_ts, &rep)?;
    println!(
        "{} windows of {} ms, {} overlapping",
        plan.windows.len(),
        rep.window_len_ns / 1_000_000,
        plan.overlapping
    );

    let out_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../target/example-output/build_histograms");
    std::fs::create_dir_all(&out_dir)?;
    for (i, h) in histograms.iter().enumerate() {
        let nonzero = h.data().iter().filter(|&&v| v > 0).count();
        let max = h.data().iter().copied().max().unwrap_or(0);
        println!(
            "window {i:02}: {:>7} events stored, {nonzero:>6} nonzero cells, max count {max}",
            h.total_count()
        );
        write_histogram_file(h, &out_dir.join(format!("{i:05}.shr1")))?;
    }
    println!("SHR1 tensors written to {}", out_dir.display());
    Ok(())
}
