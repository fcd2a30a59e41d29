//! Split-sample anomaly detection for multi-link network telemetry.
//!
//! A subject window (default one hour) is compared with the referent window
//! directly before it (12 or 24 hours) by training a classifier to tell them
//! apart. If the classifier does clearly better than chance on held-out rows,
//! the subject window is flagged.
//!
//! - [`data`]: frames, CSV I/O, window pairs and labeled splits.
//! - [`simgen`]: synthetic six-link mesh data with injected level shifts.
//! - [`boost`]: AdaBoost over Gini stumps or deeper trees, AUC, importances.
//! - [`feedforward`]: ReLU network trained with Adam, chance-level cuts.
//! - [`detector`]: the sliding-window scanner and its report.

pub mod boost;
pub mod data;
pub mod detector;
pub mod error;
pub mod feedforward;
pub mod matrix;
pub mod simgen;

pub use boost::{auc, fit_adaboost, fit_tree, gini, BoostedModel, TreeNode};
pub use data::{make_split, make_window_pair, LabeledSplit, TimeSeriesFrame, WindowPair};
pub use detector::{
    attribute, merge_flags, scan, scan_at, Algorithm, BdtConfig, BdtScore, DetectionReport,
    FlaggedInterval, NnConfig, ScanConfig, WindowVerdict,
};
pub use error::{Error, Result};
pub use feedforward::{
    accuracy_threshold, bce_loss, binary_accuracy, chance_accuracy, count_params, init_mlp, train,
    AdamState, EpochRecord, MlpModel, TrainConfig,
};
pub use matrix::Matrix;
pub use simgen::{
    gen_normal, inject_anomaly, sensitivity_schedule, simulate, table2_schedule, AnomalyEvent,
    Scenario, SeriesProfile, Simulation,
};
