//! Configuration-driven pipeline: data preparation, training, explanation,
//! auditing and reporting.

mod config;
mod report;
mod run;

pub use config::{DatasetSource, ExperimentConfig, ModelSize, RawConfig, SwapChoice, ENV_PREFIX};
pub use report::{
    coefficients_csv, correlation_table, map_summary, recall_table, render_correlation, render_recall, write_tables,
    CorrelationCell, RecallCell, ReportFormat, Study, MISSING,
};
pub use run::{
    checkpoint_dir, checkpoint_path, evaluate, ingest, model_config, prepare_dataset, run, run_studies, swap_for, test_windows, train_model,
    training_frames, RunOutput, Studies, Variant,
};
