//! Synthetic mesh telemetry: quiet per-link noise plus injected level shifts.
//!
//! Each series gets a constant baseline in (0, 0.5) and a constant noise
//! sigma in [0.00625, 0.05]; samples are `baseline + N(0, sigma)` clamped to
//! [0, 1]. An anomaly adds `offset_sigma * sigma` to every affected series
//! over its span and sets the ground-truth flag.
//!
//! Randomness comes from `ChaCha8Rng` (rand_chacha 0.9) and the ziggurat
//! normal sampler of rand_distr 0.5; both are pinned in the workspace
//! manifest so seeds reproduce across builds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{parse_timestamp, TimeSeriesFrame};
use crate::error::{Error, Result};

/// 2017-08-01 00:00:00 UTC, the start of the simulated week.
pub const SIMULATION_START: i64 = 1_501_545_600;

pub const DAY: i64 = 86_400;
pub const HOUR: i64 = 3_600;

/// Longest event in the default schedule.
pub const MAX_EVENT_DURATION: i64 = 4 * HOUR;

const BASELINE_MAX: f64 = 0.5;
const SIGMA_MIN: f64 = 0.00625;
const SIGMA_MAX: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesProfile {
    pub baseline: f64,
    pub sigma: f64,
}

/// An injected level shift. `affected` is ordered most significant first.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyEvent {
    pub start: i64,
    pub end: i64,
    pub affected: Vec<usize>,
    pub offset_sigma: f64,
}

impl AnomalyEvent {
    pub fn duration(&self) -> i64 {
        self.end - self.start
    }

    fn validate(&self, n_series: usize) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::InvalidArgument(format!(
                "event start {} is not before end {}",
                self.start, self.end
            )));
        }
        if self.affected.is_empty() {
            return Err(Error::InvalidArgument("event affects no series".into()));
        }
        for (i, &s) in self.affected.iter().enumerate() {
            if s >= n_series {
                return Err(Error::InvalidArgument(format!(
                    "affected series {s} out of range for {n_series} series"
                )));
            }
            if self.affected[..i].contains(&s) {
                return Err(Error::InvalidArgument(format!("series {s} listed twice")));
            }
        }
        Ok(())
    }
}

/// Quiet multi-series frame with `duration / cadence` rows and all flags 0.
pub fn gen_normal(
    n_series: usize,
    start: i64,
    duration: i64,
    cadence: i64,
    seed: u64,
) -> Result<(TimeSeriesFrame, Vec<SeriesProfile>)> {
    if n_series == 0 {
        return Err(Error::InvalidArgument("need at least one series".into()));
    }
    if cadence <= 0 || duration < cadence {
        return Err(Error::InvalidArgument(format!(
            "duration {duration} s must cover at least one {cadence} s step"
        )));
    }
    let n_rows = (duration / cadence) as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: Vec<SeriesProfile> = (0..n_series)
        .map(|_| {
            let baseline = loop {
                let b = rng.random_range(0.0..BASELINE_MAX);
                if b > 0.0 {
                    break b;
                }
            };
            let sigma = rng.random_range(SIGMA_MIN..=SIGMA_MAX);
            SeriesProfile { baseline, sigma }
        })
        .collect();

    let mut values = Vec::with_capacity(n_rows * n_series);
    for _ in 0..n_rows {
        for p in &profiles {
            let z: f64 = rng.sample(StandardNormal);
            values.push((p.baseline + p.sigma * z).clamp(0.0, 1.0));
        }
    }
    let names = (0..n_series).map(|i| format!("link {i}")).collect();
    let frame = TimeSeriesFrame::new(start, cadence, names, values, Some(vec![0; n_rows]))?;
    Ok((frame, profiles))
}

/// Adds the event's level shift to the affected series over `[start, end)`
/// and flags those rows. Cells outside the span or series are untouched.
pub fn inject_anomaly(
    frame: &TimeSeriesFrame,
    profiles: &[SeriesProfile],
    event: &AnomalyEvent,
) -> Result<TimeSeriesFrame> {
    if profiles.len() != frame.n_series() {
        return Err(Error::DimensionMismatch {
            expected: frame.n_series(),
            found: profiles.len(),
        });
    }
    event.validate(frame.n_series())?;
    if event.start < frame.start_time() || event.end > frame.end_time() {
        return Err(Error::OutOfRange {
            start: event.start,
            end: event.end,
            frame_start: frame.start_time(),
            frame_end: frame.end_time(),
        });
    }

    let rows = frame.row_at_or_after(event.start)..frame.row_at_or_after(event.end);
    let mut out = frame.clone();
    let n = out.n_series();
    let values = out.values_mut();
    for r in rows.clone() {
        for &s in &event.affected {
            let cell = &mut values[r * n + s];
            *cell = (*cell + event.offset_sigma * profiles[s].sigma).clamp(0.0, 1.0);
        }
    }
    out.flags_mut()[rows].fill(1);
    Ok(out)
}

/// The six-event week used to illustrate the simulated dataset, ordered by
/// start time. The offset is not recorded for these events; 5 sigma is used.
pub fn table2_schedule() -> Vec<AnomalyEvent> {
    const EVENTS: [(&str, &str, &[usize]); 6] = [
        ("2017-08-03 07:36:42", "2017-08-03 07:58:06", &[2, 5]),
        ("2017-08-01 06:23:52", "2017-08-01 07:06:09", &[2, 0, 1, 4]),
        ("2017-08-05 18:30:38", "2017-08-05 19:24:01", &[1, 3, 2, 4, 5]),
        ("2017-08-02 11:27:58", "2017-08-02 12:21:16", &[5, 2, 3]),
        ("2017-08-05 07:20:14", "2017-08-05 10:35:35", &[2, 1, 4, 0, 5]),
        ("2017-08-03 19:20:06", "2017-08-03 20:17:46", &[3, 1]),
    ];
    let mut events: Vec<AnomalyEvent> = EVENTS
        .iter()
        .map(|&(start, end, affected)| AnomalyEvent {
            start: parse_timestamp(start).expect("valid literal"),
            end: parse_timestamp(end).expect("valid literal"),
            affected: affected.to_vec(),
            offset_sigma: 5.0,
        })
        .collect();
    events.sort_by_key(|e| e.start);
    events
}

/// Six events 24 h apart starting at `day_zero + 24 h`, covering every
/// combination of small/large offset, one/three series and one/three hours
/// that the sensitivity grid explores.
pub fn sensitivity_schedule(day_zero: i64) -> Vec<AnomalyEvent> {
    const GRID: [(f64, usize, i64); 6] = [
        (2.0, 1, 1),
        (2.0, 1, 3),
        (2.0, 3, 1),
        (5.0, 1, 1),
        (5.0, 1, 3),
        (5.0, 3, 1),
    ];
    GRID.iter()
        .enumerate()
        .map(|(k, &(offset_sigma, n_affected, hours))| {
            let start = day_zero + (k as i64 + 1) * DAY;
            AnomalyEvent {
                start,
                end: start + hours * HOUR,
                affected: (0..n_affected).collect(),
                offset_sigma,
            }
        })
        .collect()
}

/// Named injection schedules for the simulated week.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Table2,
    Sensitivity,
    Quiet,
}

impl Scenario {
    pub fn events(self, day_zero: i64) -> Vec<AnomalyEvent> {
        match self {
            Scenario::Table2 => table2_schedule(),
            Scenario::Sensitivity => sensitivity_schedule(day_zero),
            Scenario::Quiet => Vec::new(),
        }
    }
}

/// A simulated dataset together with what was injected into it.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub frame: TimeSeriesFrame,
    pub profiles: Vec<SeriesProfile>,
    pub events: Vec<AnomalyEvent>,
}

/// Generates `days` of six-series data from [`SIMULATION_START`] and injects
/// the scenario's events.
pub fn simulate(scenario: Scenario, days: i64, cadence: i64, seed: u64) -> Result<Simulation> {
    simulate_events(scenario.events(SIMULATION_START), 6, days, cadence, seed)
}

pub fn simulate_events(
    events: Vec<AnomalyEvent>,
    n_series: usize,
    days: i64,
    cadence: i64,
    seed: u64,
) -> Result<Simulation> {
    let (mut frame, profiles) = gen_normal(n_series, SIMULATION_START, days * DAY, cadence, seed)?;
    for e in &events {
        frame = inject_anomaly(&frame, &profiles, e)?;
    }
    Ok(Simulation {
        frame,
        profiles,
        events,
    })
}
