//! Trains on the `desk` planted benchmark with and without minority synthesis.

use std::collections::BTreeMap;

use hinbal_core::bench::{generate, PlantedHinConfig};
use hinbal_core::train::{run_experiment, TrainConfig};

fn main() -> Result<(), hinbal_core::Error> {
    let planted = generate(&PlantedHinConfig::desk())?;
    let full = TrainConfig::default();
    let mut vanilla = full.clone();
    vanilla.synthesis.enabled = false;
    vanilla.loss.lambda1 = 0.0;
    vanilla.loss.lambda2 = 0.0;
    for (name, cfg) in [("full", &full), ("vanilla", &vanilla)] {
        let e = run_experiment(&planted.graph, &planted.labels, cfg, &BTreeMap::new())?;
        println!(
            "{name:8} synthetic {:2}  test BACC {:.3}  macro-F1 {:.3}",
            e.batch.len(),
            e.test.balanced_accuracy,
            e.test.macro_f1
        );
    }
    Ok(())
}
