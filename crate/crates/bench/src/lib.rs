//! Fixtures shared by the benchmarks.

use gaelab_core::graph::Graph;
use gaelab_core::synth::{generate, SynthConfig};

/// The default 1000-node synthetic graph with 64 features.
pub fn synthetic(seed: u64) -> Graph {
    generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .expect("default generator settings are valid")
}
