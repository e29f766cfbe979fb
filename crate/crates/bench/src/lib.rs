//! Shared fixtures for the selection benchmarks.

use swarmsel_core::pipeline::generate_synthetic;
use swarmsel_core::Dataset;

/// Scaled planted-feature dataset of the requested shape.
pub fn scaled_synthetic(n_samples: usize, n_features: usize, k_classes: usize) -> Dataset {
    let informative = (n_features / 20).max(2);
    let synth = generate_synthetic(
        n_samples,
        n_features - informative,
        informative,
        k_classes,
        0.9,
        1234,
    )
    .expect("valid benchmark shape");
    synth.dataset.min_max_scale()
}
