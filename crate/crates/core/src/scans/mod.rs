//! Parameter sweeps over pump power, temperature or Larmor frequency.

mod persist;
mod run;
mod stats;

pub use persist::{write_scan, ScanFiles};
pub use run::{
    evaluate_point, run_scan, run_scan_with_workers, ScanAxis, ScanConfig, ScanPoint, ScanRecord, ScanResult,
    SweepSpec,
};
pub use stats::{
    linear_fit, minimum_location, relative_narrowing, relative_narrowing_from, trend_stats, Estimate,
    LinearFit, MinimumLocation, NarrowingPoint, TrendStats,
};
