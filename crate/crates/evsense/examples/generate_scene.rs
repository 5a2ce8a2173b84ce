//! Renders a procedural scene to a FRM1 frame file plus a labels document.
//!
//! ```bash
//! cargo run --release -p evsense --example generate_scene
//! ```

use std::path::PathBuf;

use evsense::pipeline::{save_scene_dir, SceneData};
use evsense::scene::{generate_sequence, SceneSpec};

fn output_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../target/example-output")
        .join(name)
}

fn main() -> evsense::Result<()> {
    let spec = SceneSpec::procedural(42, 320, 240, 20.0, 1.0, 90.0, 3);
    println!("scene: {}x{} @ {} Hz, {} objects", spec.width, spec.height, spec.frame_rate_hz, spec.objects.len());
    for (i, obj) in spec.objects.iter().enumerate() {
        println!(
            "  object {i}: {:.1} m at ({:.1}, {:.1}, {:.1}), v = ({:.1}, {:.1}, {:.1}) m/s",
            obj.size_m,
            obj.position[0], obj.position[1], obj.position[2],
            obj.velocity[0], obj.velocity[1], obj.velocity[2],
        );
    }

    let (frames, labels) = generate_sequence(&spec)?;
    let boxes: usize = labels.iter().map(|l| l.boxes.len()).sum();
    println!("rendered {} frames with {} ground-truth boxes", frames.frames.len(), boxes);

    let dir = output_dir("generate_scene");
    let scene = SceneData { sequence_id: "demo".into(), frames, labels };
    save_scene_dir(&scene, &dir)?;
    println!("wrote {}", dir.join("frames.frm1").display());
    println!("wrote {}", dir.join("labels.jsonl").display());
    Ok(())
}
