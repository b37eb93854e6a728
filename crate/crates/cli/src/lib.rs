//! Configuration, orchestration and result emission for the epzero
//! experiments.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigErrors, Experiment, RunConfig};
pub use run::{run, Manifest, OutputEntry, MANIFEST_NAME, VERSION};

/// Sizes the global worker pool. Later calls are ignored.
pub fn configure_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs.filter(|n| *n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
