//! Sweeps a scene set over the single-parameter-perturbation partition and
//! prints the aggregated score report.
//!
//! ```bash
//! cargo run --release -p evsense --example sweep_partition
//! ```

use std::path::PathBuf;

use evsense::dataset::partition_for;
use evsense::detector::DetectorParams;
use evsense::pipeline::{run_sweep, write_summary, PipelineOptions, SceneData};
use evsense::scene::{generate_sequence, SceneSpec};

fn main() -> evsense::Result<()> {
    let scenes: Vec<SceneData> = (0..4)
        .map(|i| {
            let spec = SceneSpec::procedural(900 + i, 320, 240, 20.0, 1.0, 90.0, 2);
            let (frames, labels) = generate_sequence(&spec)?;
            Ok(SceneData { sequence_id: format!("seq{i:03}"), frames, labels })
        })
        .collect::<evsense::Result<_>>()?;

    let partition = partition_for("test2")?;
    println!("sweeping {} scenes over {}: {}", scenes.len(), partition.name, partition.config_ids.join(", "));

    let options = PipelineOptions {
        detector: DetectorParams { density_threshold: 1, min_area: 50, dilation_radius: 4 },
        ..PipelineOptions::standard()
    };
    let out_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../target/example-output/sweep_partition");
    let output = run_sweep(&scenes, &partition, &options, Some(&out_dir), 0)?;

    for run in &output.runs {
        println!("config {:>4}: {:>9} events", run.config.id, run.event_count);
    }
    println!();
    let mut summary = Vec::new();
    write_summary(&output.report, &mut summary)?;
    print!("{}", String::from_utf8_lossy(&summary));
    println!("\nper-config artifacts under {}", out_dir.display());
    Ok(())
}
