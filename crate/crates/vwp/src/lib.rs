//! Command-line front end for the `vwp-core` verification engine: job
//! documents, JSON reports, fixed batteries and sweeps.

pub mod battery;
pub mod job;
pub mod report;
pub mod sweep;

pub use job::JobSpec;
pub use report::{exit_code, ReportJson};
