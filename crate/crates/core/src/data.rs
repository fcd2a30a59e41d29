//! Time-series data model: uniform-cadence frames, CSV I/O, referent/subject
//! windows and the labeled train/test split shared by both learners.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Wall-clock format used at the CSV boundary (UTC).
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Name of the optional ground-truth column.
pub const FLAG_COLUMN: &str = "flag";

/// Parses `YYYY-MM-DD HH:MM:SS` (UTC) into epoch seconds.
pub fn parse_timestamp(text: &str) -> Option<i64> {
    NaiveDateTime::parse_from_str(text.trim(), TIMESTAMP_FORMAT)
        .ok()
        .map(|t| t.and_utc().timestamp())
}

pub fn format_timestamp(epoch: i64) -> String {
    match DateTime::from_timestamp(epoch, 0) {
        Some(t) => t.format(TIMESTAMP_FORMAT).to_string(),
        None => epoch.to_string(),
    }
}

/// Per-link measurements sampled on a strictly uniform time grid.
///
/// Row `i` is taken at `start_time + i * cadence`. Missing cells are stored
/// as NaN; NaN never appears as a measured value (the CSV reader rejects
/// non-finite numbers) so it is an unambiguous marker.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    start_time: i64,
    cadence: i64,
    series_names: Vec<String>,
    values: Vec<f64>,
    flags: Option<Vec<u8>>,
}

impl TimeSeriesFrame {
    pub fn new(
        start_time: i64,
        cadence: i64,
        series_names: Vec<String>,
        values: Vec<f64>,
        flags: Option<Vec<u8>>,
    ) -> Result<Self> {
        if cadence <= 0 {
            return Err(Error::InvalidArgument(format!(
                "cadence must be positive, got {cadence}"
            )));
        }
        let n_series = series_names.len();
        if n_series == 0 {
            return Err(Error::InvalidArgument("frame needs at least one series".into()));
        }
        if values.len() % n_series != 0 {
            return Err(Error::DimensionMismatch {
                expected: values.len().next_multiple_of(n_series),
                found: values.len(),
            });
        }
        let n_rows = values.len() / n_series;
        if n_rows == 0 {
            return Err(Error::TooFewRows { needed: 1, found: 0 });
        }
        if let Some(f) = &flags {
            if f.len() != n_rows {
                return Err(Error::DimensionMismatch {
                    expected: n_rows,
                    found: f.len(),
                });
            }
            if f.iter().any(|&v| v > 1) {
                return Err(Error::InvalidArgument("flags must be 0 or 1".into()));
            }
        }
        Ok(Self {
            start_time,
            cadence,
            series_names,
            values,
            flags,
        })
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn cadence(&self) -> i64 {
        self.cadence
    }

    /// One past the last sample: `start_time + n_rows * cadence`.
    pub fn end_time(&self) -> i64 {
        self.start_time + self.n_rows() as i64 * self.cadence
    }

    pub fn series_names(&self) -> &[String] {
        &self.series_names
    }

    pub fn n_series(&self) -> usize {
        self.series_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.series_names.len()
    }

    pub fn timestamp(&self, row: usize) -> i64 {
        self.start_time + row as i64 * self.cadence
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.n_series();
        &self.values[row * n..(row + 1) * n]
    }

    #[inline]
    pub fn value(&self, row: usize, series: usize) -> f64 {
        self.values[row * self.n_series() + series]
    }

    pub fn is_missing(&self, row: usize, series: usize) -> bool {
        self.value(row, series).is_nan()
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// Row-major cell buffer.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn flags(&self) -> Option<&[u8]> {
        self.flags.as_deref()
    }

    pub(crate) fn flags_mut(&mut self) -> &mut Vec<u8> {
        let n = self.n_rows();
        self.flags.get_or_insert_with(|| vec![0; n])
    }

    /// Index of the first row with timestamp `>= t`, clamped to `[0, n_rows]`.
    pub fn row_at_or_after(&self, t: i64) -> usize {
        if t <= self.start_time {
            return 0;
        }
        let offset = t - self.start_time;
        let idx = (offset + self.cadence - 1) / self.cadence;
        (idx as usize).min(self.n_rows())
    }

    /// Copy with every missing cell replaced by 0.0.
    pub fn fill_missing(&self) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut().filter(|v| v.is_nan()) {
            *v = 0.0;
        }
        out
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(BufReader::new(File::open(path)?))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::InvalidArgument(
                "header needs a timestamp column and at least one series".into(),
            ));
        }
        let has_flag = headers.get(headers.len() - 1) == Some(FLAG_COLUMN);
        let n_cols = headers.len();
        let value_cols = 1..n_cols - usize::from(has_flag);
        if value_cols.is_empty() {
            return Err(Error::InvalidArgument("no series columns".into()));
        }
        let series_names: Vec<String> = value_cols.clone().map(|c| headers[c].to_string()).collect();

        let mut values = Vec::new();
        let mut flags = Vec::new();
        let mut start_time = 0;
        let mut prev_time = 0;
        let mut cadence = 0;
        let mut n_rows = 0usize;

        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != n_cols {
                return Err(Error::RaggedRow {
                    line,
                    expected: n_cols,
                    found: record.len(),
                });
            }
            let t = parse_timestamp(&record[0]).ok_or_else(|| Error::MalformedTimestamp {
                line,
                value: record[0].to_string(),
            })?;
            match n_rows {
                0 => start_time = t,
                1 => {
                    cadence = t - prev_time;
                    if cadence <= 0 {
                        return Err(Error::NonUniformCadence {
                            line,
                            expected: 1,
                            found: cadence,
                        });
                    }
                }
                _ if t - prev_time != cadence => {
                    return Err(Error::NonUniformCadence {
                        line,
                        expected: cadence,
                        found: t - prev_time,
                    });
                }
                _ => {}
            }
            prev_time = t;

            for c in value_cols.clone() {
                let cell = &record[c];
                if cell.is_empty() {
                    values.push(f64::NAN);
                    continue;
                }
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => {
                        return Err(Error::InvalidValue {
                            line,
                            column: headers[c].to_string(),
                            value: cell.to_string(),
                        })
                    }
                }
            }
            if has_flag {
                let cell = &record[n_cols - 1];
                let flag = match cell {
                    "0" => 0,
                    "1" => 1,
                    _ => {
                        return Err(Error::InvalidValue {
                            line,
                            column: FLAG_COLUMN.into(),
                            value: cell.to_string(),
                        })
                    }
                };
                flags.push(flag);
            }
            n_rows += 1;
        }

        if n_rows < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                found: n_rows,
            });
        }
        Self::new(
            start_time,
            cadence,
            series_names,
            values,
            has_flag.then_some(flags),
        )
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes the frame; `f64` values use the shortest round-tripping form
    /// so a reload is cell-identical.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(self.n_series() + 2);
        header.push("timestamp".to_string());
        header.extend(self.series_names.iter().cloned());
        if self.flags.is_some() {
            header.push(FLAG_COLUMN.to_string());
        }
        w.write_record(&header)?;

        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.n_rows() {
            record.clear();
            record.push(format_timestamp(self.timestamp(i)));
            record.extend(self.row(i).iter().map(|v| {
                if v.is_nan() {
                    String::new()
                } else {
                    v.to_string()
                }
            }));
            if let Some(f) = &self.flags {
                record.push(f[i].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Referent rows immediately followed by subject rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPair {
    pub referent: Range<usize>,
    pub subject: Range<usize>,
}

impl WindowPair {
    pub fn referent_len(&self) -> usize {
        self.referent.len()
    }

    pub fn subject_len(&self) -> usize {
        self.subject.len()
    }
}

/// Builds the referent `[subject_start - referent_len, subject_start)` and
/// subject `[subject_start, subject_start + subject_len)` spans.
pub fn make_window_pair(
    frame: &TimeSeriesFrame,
    subject_start: i64,
    referent_len: i64,
    subject_len: i64,
) -> Result<WindowPair> {
    let cadence = frame.cadence();
    for (name, len) in [("referent", referent_len), ("subject", subject_len)] {
        if len <= 0 || len % cadence != 0 {
            return Err(Error::InvalidArgument(format!(
                "{name} length {len} s must be a positive multiple of the {cadence} s cadence"
            )));
        }
    }
    if (subject_start - frame.start_time()).rem_euclid(cadence) != 0 {
        return Err(Error::InvalidArgument(format!(
            "subject start {subject_start} is not on the frame's {cadence} s grid"
        )));
    }
    let referent_start = subject_start - referent_len;
    if referent_start < frame.start_time() {
        return Err(Error::InsufficientHistory {
            referent_start,
            frame_start: frame.start_time(),
        });
    }
    let subject_end = subject_start + subject_len;
    if subject_end > frame.end_time() {
        return Err(Error::OutOfRange {
            start: subject_start,
            end: subject_end,
            frame_start: frame.start_time(),
            frame_end: frame.end_time(),
        });
    }
    let index = |t: i64| ((t - frame.start_time()) / cadence) as usize;
    Ok(WindowPair {
        referent: index(referent_start)..index(subject_start),
        subject: index(subject_start)..index(subject_end),
    })
}

/// Default train share.
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.7;

/// Referent rows labeled 0, subject rows labeled 1, split into train/test.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    pub train_x: Matrix,
    pub train_y: Vec<u8>,
    pub test_x: Matrix,
    pub test_y: Vec<u8>,
    pub split_fraction: f64,
}

impl LabeledSplit {
    pub fn n_train(&self) -> usize {
        self.train_y.len()
    }

    pub fn n_test(&self) -> usize {
        self.test_y.len()
    }

    pub fn n_features(&self) -> usize {
        self.train_x.cols()
    }

    /// `(negatives, positives)` across train and test.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.train_y.iter().chain(&self.test_y).filter(|&&y| y == 1).count();
        (self.n_train() + self.n_test() - pos, pos)
    }
}

/// Stratified, seeded split of a window pair. Each class is shuffled on its
/// own and cut at `round(fraction * n_class)`, so class proportions in train
/// and test match the pooled proportion up to rounding.
pub fn make_split(
    frame: &TimeSeriesFrame,
    pair: &WindowPair,
    fraction: f64,
    seed: u64,
) -> Result<LabeledSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if pair.referent.end != pair.subject.start
        || pair.referent.is_empty()
        || pair.subject.is_empty()
        || pair.subject.end > frame.n_rows()
    {
        return Err(Error::InvalidArgument(format!("invalid window pair {pair:?}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut referent: Vec<usize> = pair.referent.clone().collect();
    let mut subject: Vec<usize> = pair.subject.clone().collect();
    referent.shuffle(&mut rng);
    subject.shuffle(&mut rng);

    let cut = |n: usize| (fraction * n as f64).round() as usize;
    let (ref_cut, sub_cut) = (cut(referent.len()), cut(subject.len()));
    for (what, k, n) in [
        ("referent", ref_cut, referent.len()),
        ("subject", sub_cut, subject.len()),
    ] {
        if k == 0 || k == n {
            return Err(Error::DegenerateSplit(format!(
                "{what} has {n} rows, {k} would go to training"
            )));
        }
    }

    let mut train: Vec<(usize, u8)> = referent[..ref_cut]
        .iter()
        .map(|&i| (i, 0))
        .chain(subject[..sub_cut].iter().map(|&i| (i, 1)))
        .collect();
    let mut test: Vec<(usize, u8)> = referent[ref_cut..]
        .iter()
        .map(|&i| (i, 0))
        .chain(subject[sub_cut..].iter().map(|&i| (i, 1)))
        .collect();
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);

    let gather = |rows: &[(usize, u8)]| {
        let mut data = Vec::with_capacity(rows.len() * frame.n_series());
        for &(i, _) in rows {
            data.extend_from_slice(frame.row(i));
        }
        let x = Matrix::from_vec(rows.len(), frame.n_series(), data)
            .expect("row length equals series count");
        let y = rows.iter().map(|&(_, y)| y).collect();
        (x, y)
    };
    let (train_x, train_y) = gather(&train);
    let (test_x, test_y) = gather(&test);
    Ok(LabeledSplit {
        train_x,
        train_y,
        test_x,
        test_y,
        split_fraction: fraction,
    })
}
