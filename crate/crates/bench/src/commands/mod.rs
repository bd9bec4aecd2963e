pub mod ablation;
pub mod esc_demo;
pub mod scan_q;
pub mod train;

mod runs;

pub use runs::{Job, JobResult, VariantSummary};
