//! Training samples, scenarios, normalization and the dataset file.

pub mod dataset;
pub mod normalize;
pub mod sample;
pub mod scenario;
pub mod steps;

pub use dataset::{
    build_dataset, dataset_metadata, dataset_sidecar_path, decode_dataset, encode_dataset, read_dataset, write_dataset,
    Dataset, DatasetBuilder, Split, SplitPlan, DATASET_MAGIC,
};
pub use normalize::{Normalizer, Range};
pub use sample::{assemble_inputs, assemble_sample, assemble_sections, AssemblyStats, CaseInputs, InjectorFeature, Sample, CH_PERM, CH_PORO, CH_PRODUCERS, CH_RATE, CH_TIME, N_CHANNELS};
pub use scenario::{Period, RateFeature, Scenario, Target, SCENARIOS};
pub use steps::{cumulative_injection, select_time_steps};
