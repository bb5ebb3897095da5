#![allow(dead_code)]

use std::path::Path;

use flowsentry::pipeline::{cmd_run_all, PipelineConfig};
use flowsentry::synth::{write_synthetic_kdd, SynthKddConfig};

/// Synthetic NSL-KDD files plus the smoke preset rooted in `dir`.
pub fn smoke_config(dir: &Path) -> PipelineConfig {
    let data = dir.join("data");
    write_synthetic_kdd(
        &data,
        &SynthKddConfig {
            train_rows: 1500,
            test_rows: 800,
            seed: 11,
        },
    )
    .unwrap();
    PipelineConfig::smoke(&data, &dir.join("run"))
}

/// Every stage run once.
pub fn smoke_run(dir: &Path) -> PipelineConfig {
    let cfg = smoke_config(dir);
    cmd_run_all(&cfg).unwrap();
    cfg
}
