//! Tail-index and memory-parameter estimation from log-log regression of
//! block statistics along nested-block scans.

pub mod blockstats;
pub mod error;
pub mod estimate;
pub mod experiment;
pub mod format;
pub mod ratemap;
pub mod regress;
pub mod scan;
pub mod simulate;
pub mod stream;

pub use blockstats::{trajectory, Form, Statistic, Trajectory};
pub use error::{Error, Result};
pub use estimate::{estimate, Aggregation, EstimateReport, EstimatorSpec, ScanPolicy};
pub use ratemap::RateMap;
pub use regress::Method;
pub use scan::{ScanPath, Shrink};
pub use simulate::{generate, ModelSpec};
