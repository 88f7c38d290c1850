//! Deployment layer: the steering-rate PSF lookup table, the parallel
//! frame pipeline and the timing benchmark.

mod bench;
mod lut;
mod run;

pub use bench::{
    bench, scaling_warning, synthetic_sequence, BenchConfig, BenchReport, BenchRow, BATCH_FRAMES,
    STREAMING_FRAMES,
};
pub use lut::{
    build_lut, camera_id, LutBuild, LutEntry, LutSource, PairsOptions, Provenance, PsfLut,
    INDEX_FILE,
};
pub use run::{machine_note, run_pipeline, FrameFailure, PipelineConfig, TimingReport};
