//! Tour of the built-in sensor-configuration registry and its partitions.
//!
//! ```bash
//! cargo run --release -p evsense --example registry_tour
//! ```

use evsense::dataset::partition_for;
use evsense::sensor::{builtin_configs, config_by_id};

fn main() {
    println!("{:>6} {:>6} {:>6} {:>8} {:>6}  group", "config", "th_p", "th_n", "T_r[ms]", "FoV");
    for cfg in builtin_configs() {
        println!(
            "{:>6} {:>6} {:>6} {:>8} {:>6}  {:?}",
            cfg.id, cfg.th_p, cfg.th_n, cfg.refractory_ms, cfg.fov_deg, cfg.group
        );
    }

    println!();
    for name in ["train", "test1", "test2", "test3", "test4"] {
        let p = partition_for(name).unwrap();
        println!("{:>6}: {}", p.name, p.config_ids.join(", "));
    }

    // test2 configs sit one varied setting away from the training set.
    println!();
    let train = partition_for("train").unwrap();
    for id in partition_for("test2").unwrap().config_ids {
        let cfg = config_by_id(id).unwrap();
        let nearest = train
            .config_ids
            .iter()
            .map(|t| (t, cfg.varied_settings(config_by_id(t).unwrap())))
            .min_by_key(|(_, d)| *d)
            .unwrap();
        println!("{id}: differs from {} in {} setting(s)", nearest.0, nearest.1);
    }
}
