//! Expanding-window protocol, classification metrics and rank tables.

mod metrics;
mod protocol;
mod report;
mod windows;

pub use metrics::{
    compute_metrics, confidence_histogram, metrics_from_confusion, rank_algorithms, ConfidenceBin,
    MetricsReport, CONFIDENCE_BINS,
};
pub use protocol::{
    run_protocol, AlgorithmSummary, AlgorithmWindow, ProtocolConfig, ProtocolResults, Stratum,
    StratumResult, WindowResult,
};
pub use report::{write_models, write_protocol_outputs};
pub use windows::{plan_windows, plan_windows_from, TailPolicy, Window, WindowPlan, MIN_TAIL};
