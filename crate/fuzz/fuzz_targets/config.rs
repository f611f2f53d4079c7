#![no_main]

use ionpair_grover::harness::{ConfigLayer, ExperimentConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(layer) = ConfigLayer::parse(data) {
        let _ = ExperimentConfig::from_layer(layer.clone().merge(ConfigLayer::default()));
        let _ = ExperimentConfig::from_layer(ConfigLayer::default().merge(layer));
    }
});
