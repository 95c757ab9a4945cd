//! Configuration, sequence IO, the synthetic sequence generator and the
//! experiment runner behind the command-line tool.

mod config;
pub mod io;
mod run;
mod synthetic;

pub use config::{load_config, ExperimentConfig, ModelPaths, TransferModel, OUTPUT_DIR_ENV};
pub use io::{load_sequence, read_image, write_ppm, write_raw_image};
pub use run::{
    emit_plot_data, read_results, run_experiment, write_plot_csv, ResultRecord, RunOutcome,
    PRIMARY_MODEL, SCHEMA_VERSION,
};
pub use synthetic::{
    generate_synthetic_sequence, ground_truth_relatives, write_synthetic_sequence,
    SyntheticSequence, SyntheticSpec,
};
