//! Event-camera simulation and evaluation toolkit.
//!
//! `evsense` turns grayscale frame sequences into event streams under a
//! configurable sensor parameter tuple (contrast thresholds, refractory
//! period, field of view), builds stacked-histogram tensors from those
//! streams, manages the built-in 14-configuration registry with its
//! train/test partitions, and scores object-detector predictions with
//! COCO-style metrics. A procedural scene generator and a blob baseline
//! detector make the whole pipeline runnable end to end on a laptop.
//!
//! # Start with the examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! examples/
//! ├── registry_tour.rs       # the 14 sensor configs and their partitions
//! ├── generate_scene.rs      # procedural scenes -> FRM1 frames + labels
//! ├── simulate_events.rs     # frames -> events under different thresholds
//! ├── build_histograms.rs    # events -> stacked histograms -> SHR1 files
//! ├── detect_and_evaluate.rs # blob detector + metrics on one scene
//! └── sweep_partition.rs     # full per-config sweep with a score report
//! ```
//!
//! ```bash
//! cargo run --release -p evsense --example registry_tour
//! cargo run --release -p evsense --example generate_scene
//! cargo run --release -p evsense --example simulate_events
//! cargo run --release -p evsense --example build_histograms
//! cargo run --release -p evsense --example detect_and_evaluate
//! cargo run --release -p evsense --example sweep_partition
//! ```
//!
//! The same pipelines are scriptable through the `evsense` binary
//! (`gen-scene`, `simulate`, `represent`, `detect`, `eval`, `sweep`,
//! `report`); see the README for the CLI walkthrough.
//!
//! # Module map
//!
//! - [`sensor`]: DVS transduction model and the configuration registry
//! - [`scene`]: procedural scene generator with pinhole projection
//! - [`events`]: event/frame primitives and canonical stream order
//! - [`io`]: EVT1 / FRM1 / SHR1 binary containers
//! - [`representation`]: stacked-histogram tensors and window planning
//! - [`dataset`]: box filtering, town splits, partitions, manifests
//! - [`detector`]: event-density blob baseline and the predictions document
//! - [`eval`]: IoU, greedy matching, AP metrics, per-test-set aggregation
//! - [`pipeline`]: end-to-end orchestration and report emission
//! - [`cli`]: the command-line entry points

pub mod cli;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod eval;
pub mod events;
pub mod io;
pub mod pipeline;
pub mod representation;
pub mod scene;
pub mod sensor;

pub use dataset::{partition_for, BBox, DatasetManifest, Partition};
pub use detector::{Detection, DetectorParams};
pub use error::{Error, Result};
pub use events::{Event, FrameSequence, Polarity};
pub use eval::{coco_metrics, iou, score_partition, MetricValues, ScoreReport};
pub use representation::{RepresentationSpec, StackedHistogram};
pub use scene::{generate_sequence, SceneSpec};
pub use sensor::{builtin_configs, config_by_id, transduce_sequence, SensorConfig};
