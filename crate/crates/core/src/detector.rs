//! Sliding-window split-sample scanner.
//!
//! For every subject window that has a full referent window behind it, the
//! scanner labels referent rows 0 and subject rows 1, trains a classifier on
//! a stratified 70% of them, and scores it on the rest. A window is flagged
//! when the score is strictly above the threshold: a fixed AUC cut for
//! boosted trees, the binomial significance cut for the neural network.

use std::io::{Read, Write};
use std::ops::Range;

use rayon::prelude::*;

use crate::boost::{auc, BoostedModel, DEFAULT_N_ESTIMATORS};
use crate::data::{
    format_timestamp, make_split, make_window_pair, parse_timestamp, TimeSeriesFrame,
    DEFAULT_SPLIT_FRACTION,
};
use crate::error::{Error, Result};
use crate::feedforward::{accuracy_threshold, chance_accuracy, init_mlp, train, EpochRecord, TrainConfig};
use crate::simgen::HOUR;

/// What the boosted ensemble hands to the AUC.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BdtScore {
    /// The alpha-weighted mean leaf score; the AUC is a pure ranking measure.
    #[default]
    Continuous,
    /// Hard majority votes (0 or 1); the AUC then equals the mean of the
    /// true-positive and true-negative rates.
    Votes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdtConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub auc_threshold: f64,
    pub score: BdtScore,
}

impl BdtConfig {
    pub const SIMULATED_THRESHOLD: f64 = 0.55;
    pub const REAL_DATA_THRESHOLD: f64 = 0.8;

    pub fn simulated() -> Self {
        Self {
            n_estimators: DEFAULT_N_ESTIMATORS,
            max_depth: 1,
            auc_threshold: Self::SIMULATED_THRESHOLD,
            score: BdtScore::Continuous,
        }
    }

    pub fn real_data() -> Self {
        Self {
            auc_threshold: Self::REAL_DATA_THRESHOLD,
            ..Self::simulated()
        }
    }
}

impl Default for BdtConfig {
    fn default() -> Self {
        Self::simulated()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnConfig {
    pub train: TrainConfig,
    pub alpha: f64,
}

impl NnConfig {
    pub const DEFAULT_ALPHA: f64 = 0.01;

    pub fn simulated() -> Self {
        Self {
            train: TrainConfig::simulated(),
            alpha: Self::DEFAULT_ALPHA,
        }
    }

    pub fn real_data() -> Self {
        Self {
            train: TrainConfig::real_data(),
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Bdt(BdtConfig),
    Nn(NnConfig),
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Bdt(_) => "bdt",
            Algorithm::Nn(_) => "nn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub algorithm: Algorithm,
    /// Seconds of history preceding each subject window.
    pub referent_len: i64,
    pub subject_len: i64,
    pub stride: i64,
    pub split_fraction: f64,
    pub seed: u64,
    /// Windows evaluated concurrently; 1 runs on the calling thread.
    pub workers: usize,
}

impl ScanConfig {
    /// Boosted stumps, 24 h referent, 1 h subject, AUC cut 0.55.
    pub fn bdt() -> Self {
        Self {
            algorithm: Algorithm::Bdt(BdtConfig::simulated()),
            referent_len: 24 * HOUR,
            subject_len: HOUR,
            stride: HOUR,
            split_fraction: DEFAULT_SPLIT_FRACTION,
            seed: 0,
            workers: 1,
        }
    }

    /// Boosted stumps with the stricter 0.8 cut used on production data.
    pub fn bdt_real_data() -> Self {
        Self {
            algorithm: Algorithm::Bdt(BdtConfig::real_data()),
            ..Self::bdt()
        }
    }

    /// Network with a 12 h referent, 60 epochs, batches of 256.
    pub fn nn_simulated() -> Self {
        Self {
            algorithm: Algorithm::Nn(NnConfig::simulated()),
            referent_len: 12 * HOUR,
            ..Self::bdt()
        }
    }

    /// Network with a 24 h referent, 100 epochs, batches of 10.
    pub fn nn_real_data() -> Self {
        Self {
            algorithm: Algorithm::Nn(NnConfig::real_data()),
            ..Self::bdt()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.subject_len <= 0 || self.referent_len < self.subject_len {
            return bad(format!(
                "need referent_len >= subject_len > 0, got {} and {}",
                self.referent_len, self.subject_len
            ));
        }
        if self.stride <= 0 {
            return bad(format!("stride must be positive, got {}", self.stride));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split fraction {} outside (0, 1)", self.split_fraction));
        }
        match &self.algorithm {
            Algorithm::Bdt(b) => {
                if !(b.auc_threshold > 0.5 && b.auc_threshold < 1.0) {
                    return bad(format!("AUC threshold {} outside (0.5, 1)", b.auc_threshold));
                }
                if b.n_estimators == 0 || b.max_depth == 0 {
                    return bad("estimators and depth must be at least 1".into());
                }
            }
            Algorithm::Nn(n) => {
                if !(n.alpha > 0.0 && n.alpha < 1.0) {
                    return bad(format!("alpha {} outside (0, 1)", n.alpha));
                }
                if n.train.epochs == 0 || n.train.batch_size == 0 {
                    return bad("epochs and batch size must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

/// Verdict for one subject window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowVerdict {
    pub subject_start: i64,
    /// Timestamps of the first and last referent rows.
    pub referent_first: i64,
    pub referent_last: i64,
    /// AUC (boosted trees) or test accuracy (network).
    pub score: f64,
    pub threshold: f64,
    pub flagged: bool,
    pub n_test: usize,
    /// Majority-class accuracy; network windows only.
    pub chance_level: Option<f64>,
    /// Boosted-tree windows only.
    pub feature_importances: Option<Vec<f64>>,
    /// Network windows only.
    pub epochs_history: Option<Vec<EpochRecord>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub algorithm: &'static str,
    pub series_names: Vec<String>,
    pub referent_len: i64,
    pub subject_len: i64,
    pub stride: i64,
    pub windows: Vec<WindowVerdict>,
}

impl DetectionReport {
    pub fn n_flagged(&self) -> usize {
        self.windows.iter().filter(|w| w.flagged).count()
    }

    pub fn window_at(&self, subject_start: i64) -> Option<&WindowVerdict> {
        self.windows
            .binary_search_by_key(&subject_start, |w| w.subject_start)
            .ok()
            .map(|i| &self.windows[i])
    }

    pub fn merge_flags(&self) -> Vec<FlaggedInterval> {
        merge_flags(self)
    }

    /// Writes `subject_start,score,threshold,flagged,chance_level,importances`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(writer);
        w.write_record(REPORT_HEADER)?;
        for v in &self.windows {
            let importances = v
                .feature_importances
                .as_ref()
                .map(|imp| imp.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
                .unwrap_or_default();
            w.write_record([
                format_timestamp(v.subject_start),
                v.score.to_string(),
                v.threshold.to_string(),
                u8::from(v.flagged).to_string(),
                v.chance_level.map(|c| c.to_string()).unwrap_or_default(),
                importances,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const REPORT_HEADER: [&str; 6] = [
    "subject_start",
    "score",
    "threshold",
    "flagged",
    "chance_level",
    "importances",
];

/// One row of a report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub subject_start: i64,
    pub score: f64,
    pub threshold: f64,
    pub flagged: bool,
    pub chance_level: Option<f64>,
    pub importances: Vec<f64>,
}

pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(REPORT_HEADER) {
        return Err(Error::InvalidArgument(format!(
            "unexpected report header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let invalid = |column: &str, value: &str| Error::InvalidValue {
            line,
            column: column.into(),
            value: value.into(),
        };
        let number = |i: usize| {
            record[i]
                .parse::<f64>()
                .map_err(|_| invalid(REPORT_HEADER[i], &record[i]))
        };
        let subject_start = parse_timestamp(&record[0]).ok_or_else(|| Error::MalformedTimestamp {
            line,
            value: record[0].to_string(),
        })?;
        let flagged = match &record[3] {
            "0" => false,
            "1" => true,
            other => return Err(invalid("flagged", other)),
        };
        let chance_level = if record[4].is_empty() { None } else { Some(number(4)?) };
        let importances = if record[5].is_empty() {
            Vec::new()
        } else {
            record[5]
                .split(';')
                .map(|s| s.parse::<f64>().map_err(|_| invalid("importances", s)))
                .collect::<Result<_>>()?
        };
        rows.push(ReportRow {
            subject_start,
            score: number(1)?,
            threshold: number(2)?,
            flagged,
            chance_level,
            importances,
        });
    }
    Ok(rows)
}

/// Subject-window start times with a full referent behind them, from the
/// first such time to the last window that fits, every `stride` seconds.
pub fn window_starts(frame: &TimeSeriesFrame, config: &ScanConfig) -> Result<Vec<i64>> {
    config.validate()?;
    let first = frame.start_time() + config.referent_len;
    let mut starts = Vec::new();
    let mut s = first;
    while s + config.subject_len <= frame.end_time() {
        starts.push(s);
        s += config.stride;
    }
    if starts.is_empty() {
        return Err(Error::FrameTooShort {
            rows: frame.n_rows(),
            covered: frame.end_time() - frame.start_time(),
            needed: config.referent_len + config.subject_len,
        });
    }
    Ok(starts)
}

/// Scores every subject window of the frame.
pub fn scan(frame: &TimeSeriesFrame, config: &ScanConfig) -> Result<DetectionReport> {
    let starts = window_starts(frame, config)?;
    scan_at(frame, config, &starts)
}

/// Scores the subject windows starting at the given times. Each window's
/// randomness derives from `(config.seed, subject_start)`, so a window gets
/// the same verdict here as in a full [`scan`].
pub fn scan_at(
    frame: &TimeSeriesFrame,
    config: &ScanConfig,
    subject_starts: &[i64],
) -> Result<DetectionReport> {
    config.validate()?;
    if frame.has_missing() {
        return Err(Error::MissingValues);
    }
    let mut starts = subject_starts.to_vec();
    starts.sort_unstable();
    starts.dedup();

    let windows = if config.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| {
            starts
                .par_iter()
                .map(|&s| evaluate_window(frame, config, s))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        starts
            .iter()
            .map(|&s| evaluate_window(frame, config, s))
            .collect::<Result<Vec<_>>>()?
    };

    Ok(DetectionReport {
        algorithm: config.algorithm.name(),
        series_names: frame.series_names().to_vec(),
        referent_len: config.referent_len,
        subject_len: config.subject_len,
        stride: config.stride,
        windows,
    })
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn evaluate_window(frame: &TimeSeriesFrame, config: &ScanConfig, subject_start: i64) -> Result<WindowVerdict> {
    let pair = make_window_pair(frame, subject_start, config.referent_len, config.subject_len)?;
    let window_seed = mix(config.seed ^ mix(subject_start as u64));
    let split = make_split(frame, &pair, config.split_fraction, window_seed)?;

    let mut verdict = WindowVerdict {
        subject_start,
        referent_first: frame.timestamp(pair.referent.start),
        referent_last: frame.timestamp(pair.referent.end - 1),
        score: 0.0,
        threshold: 0.0,
        flagged: false,
        n_test: split.n_test(),
        chance_level: None,
        feature_importances: None,
        epochs_history: None,
    };

    match &config.algorithm {
        Algorithm::Bdt(bdt) => {
            let model = BoostedModel::fit(&split.train_x, &split.train_y, bdt.n_estimators, bdt.max_depth)?;
            let scores: Vec<f64> = match bdt.score {
                BdtScore::Votes => model
                    .predict_labels(&split.test_x)
                    .into_iter()
                    .map(f64::from)
                    .collect(),
                BdtScore::Continuous => model.predict_scores(&split.test_x),
            };
            verdict.score = auc(&scores, &split.test_y)?;
            verdict.threshold = bdt.auc_threshold;
            verdict.feature_importances = Some(model.feature_importances()?);
        }
        Algorithm::Nn(nn) => {
            let model = init_mlp(frame.n_series(), mix(window_seed ^ 1))?;
            let train_config = TrainConfig {
                seed: mix(window_seed ^ 2),
                ..nn.train.clone()
            };
            let (_, history) = train(model, &split, &train_config)?;
            let chance = chance_accuracy(pair.referent_len(), pair.subject_len());
            verdict.score = history.last().map_or(chance, |r| r.accuracy);
            verdict.threshold = accuracy_threshold(split.n_test(), chance, nn.alpha)?;
            verdict.chance_level = Some(chance);
            verdict.epochs_history = Some(history);
        }
    }
    verdict.flagged = verdict.score > verdict.threshold;
    Ok(verdict)
}

/// A series' share in a window's decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub series: usize,
    pub name: String,
    pub importance: f64,
    /// False for series that no tree split on.
    pub involved: bool,
}

/// Series ranked by descending importance, ties by index; uninvolved series
/// come last.
pub fn attribute(window: &WindowVerdict, series_names: &[String]) -> Result<Vec<Attribution>> {
    let importances = window
        .feature_importances
        .as_ref()
        .ok_or(Error::AttributionUnsupported)?;
    rank_importances(importances, series_names)
}

pub fn rank_importances(importances: &[f64], series_names: &[String]) -> Result<Vec<Attribution>> {
    if importances.len() != series_names.len() {
        return Err(Error::DimensionMismatch {
            expected: series_names.len(),
            found: importances.len(),
        });
    }
    let mut ranked: Vec<Attribution> = importances
        .iter()
        .zip(series_names)
        .enumerate()
        .map(|(series, (&importance, name))| Attribution {
            series,
            name: name.clone(),
            importance,
            involved: importance > 0.0,
        })
        .collect();
    ranked.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.series.cmp(&b.series)));
    Ok(ranked)
}

/// Half-open `[start, end)` span covered by flagged windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlaggedInterval {
    pub start: i64,
    pub end: i64,
}

impl FlaggedInterval {
    pub fn duration(&self) -> i64 {
        self.end - self.start
    }

    pub fn as_range(&self) -> Range<i64> {
        self.start..self.end
    }
}

/// Coalesces runs of flagged windows whose spans touch or overlap.
pub fn merge_flags(report: &DetectionReport) -> Vec<FlaggedInterval> {
    merge_flagged_windows(
        report.windows.iter().map(|w| (w.subject_start, w.flagged)),
        report.subject_len,
    )
}

/// [`merge_flags`] over bare `(subject_start, flagged)` pairs.
pub fn merge_flagged_windows(
    windows: impl IntoIterator<Item = (i64, bool)>,
    subject_len: i64,
) -> Vec<FlaggedInterval> {
    let mut starts: Vec<i64> = windows
        .into_iter()
        .filter_map(|(s, flagged)| flagged.then_some(s))
        .collect();
    starts.sort_unstable();

    let mut out: Vec<FlaggedInterval> = Vec::new();
    for s in starts {
        let end = s + subject_len;
        match out.last_mut() {
            Some(last) if s <= last.end => last.end = last.end.max(end),
            _ => out.push(FlaggedInterval { start: s, end }),
        }
    }
    out
}
