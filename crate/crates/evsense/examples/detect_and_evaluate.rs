//! Runs the blob detector on one scene and scores it against the rendered
//! ground truth.
//!
//! ```bash
//! cargo run --release -p evsense --example detect_and_evaluate
//! ```

use evsense::detector::DetectorParams;
use evsense::eval::{coco_metrics, MetricId};
use evsense::pipeline::{eval_frames, process_scene, PipelineOptions, SceneData};
use evsense::scene::{generate_sequence, SceneSpec};
use evsense::sensor::config_by_id;

fn main() -> evsense::Result<()> {
    let spec = SceneSpec::procedural(2024, 320, 240, 20.0, 1.0, 90.0, 2);
    let (frames, labels) = generate_sequence(&spec)?;
    let scene = SceneData { sequence_id: "demo".into(), frames, labels };

    let options = PipelineOptions {
        detector: DetectorParams { density_threshold: 1, min_area: 50, dilation_radius: 4 },
        ..PipelineOptions::standard()
    };
    let config = config_by_id("base")?;
    let run = process_scene(&scene, config, &options)?;

    let detections: usize = run.detections.iter().map(|d| d.len()).sum();
    println!("config {}: {} events, {} detections", config.id, run.events.len(), detections);
    for (i, dets) in run.detections.iter().enumerate().take(5) {
        for d in dets {
            println!(
                "  frame {i}: box ({:.0}, {:.0}) {}x{} score {:.2}",
                d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h, d.score
            );
        }
    }

    let runs = vec![(run, &scene)];
    let metrics = coco_metrics(&eval_frames(&runs, options.filter_ground_truth));
    println!();
    for metric in MetricId::ALL {
        match metrics.get(metric) {
            Some(v) => println!("{:>5}: {v:.4}", metric.as_str()),
            None => println!("{:>5}: undefined (no ground truth in band)", metric.as_str()),
        }
    }
    Ok(())
}
