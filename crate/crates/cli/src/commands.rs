use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use splitscan_core::data::format_timestamp;
use splitscan_core::detector::{merge_flagged_windows, read_report_csv, ReportRow};
use splitscan_core::simgen::{Simulation, HOUR};
use splitscan_core::{
    scan, simulate as run_simulation, Algorithm, BdtConfig, BdtScore, DetectionReport, Scenario,
    ScanConfig, TimeSeriesFrame,
};

use crate::error::{CliError, CliResult, EXIT_FLAGGED};
use crate::plot::{render_svg, PlotInput};
use crate::{AlgoArg, BdtScoreArg, DetectArgs, PresetArg, ReportArgs, ScenarioArg, SimulateArgs};

fn is_stdio(path: &Option<PathBuf>) -> bool {
    path.as_deref().is_none_or(|p| p == Path::new("-"))
}

fn open_output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    if is_stdio(path) {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let path = path.as_ref().expect("checked above");
    let file = File::create(path).map_err(|e| CliError::File {
        path: path.clone(),
        source: e.into(),
    })?;
    Ok(Box::new(BufWriter::new(file)))
}

fn load_frame(path: &Option<PathBuf>) -> CliResult<TimeSeriesFrame> {
    if is_stdio(path) {
        return Ok(TimeSeriesFrame::read_csv(io::stdin().lock())?);
    }
    let path = path.as_ref().expect("checked above");
    TimeSeriesFrame::load_csv(path).map_err(|source| CliError::File {
        path: path.clone(),
        source,
    })
}

pub fn simulate(args: &SimulateArgs) -> CliResult<u8> {
    if args.days < 1 {
        return Err(CliError::Usage(format!("--days must be at least 1, got {}", args.days)));
    }
    if args.cadence < 1 || HOUR % args.cadence != 0 {
        return Err(CliError::Usage(format!(
            "--cadence must divide 3600 seconds, got {}",
            args.cadence
        )));
    }
    let scenario = match args.scenario {
        ScenarioArg::Table2 => Scenario::Table2,
        ScenarioArg::Sensitivity => Scenario::Sensitivity,
        ScenarioArg::Quiet => Scenario::Quiet,
    };
    let sim = run_simulation(scenario, args.days, args.cadence, args.seed)?;

    let mut out = open_output(&args.output)?;
    sim.frame.write_csv(&mut out)?;
    out.flush()?;
    drop(out);

    let table = events_table(&sim);
    if is_stdio(&args.output) {
        eprint!("{table}");
    } else {
        print!("{table}");
    }
    Ok(0)
}

fn events_table(sim: &Simulation) -> String {
    let names = sim.frame.series_names();
    let mut s = format!(
        "{:<3} {:<19}  {:<19}  {:>8}  {:>6}  {}\n",
        "#", "start", "end", "duration", "offset", "affected"
    );
    for (i, e) in sim.events.iter().enumerate() {
        let affected: Vec<&str> = e.affected.iter().map(|&k| names[k].as_str()).collect();
        s.push_str(&format!(
            "{:<3} {}  {}  {:>8}  {:>5}σ  {}\n",
            i + 1,
            format_timestamp(e.start),
            format_timestamp(e.end),
            clock(e.duration()),
            e.offset_sigma,
            affected.join(", ")
        ));
    }
    if sim.events.is_empty() {
        s.push_str("(no events)\n");
    }
    s
}

fn clock(secs: i64) -> String {
    format!("{}:{:02}:{:02}", secs / 3600, secs % 3600 / 60, secs % 60)
}

fn hours(flag: &str, value: f64) -> CliResult<i64> {
    let secs = value * HOUR as f64;
    if !(secs.is_finite() && secs >= 1.0) || (secs - secs.round()).abs() > 1e-6 {
        return Err(CliError::Usage(format!(
            "--{flag} must be a positive whole number of seconds in hours, got {value}"
        )));
    }
    Ok(secs.round() as i64)
}

fn reject(flag: &str, set: bool, algo: &str) -> CliResult<()> {
    if set {
        return Err(CliError::Usage(format!("--{flag} does not apply to --algo {algo}")));
    }
    Ok(())
}

/// Preset for the chosen learner, with any explicit flags applied on top.
pub fn scan_config(args: &DetectArgs) -> CliResult<ScanConfig> {
    let mut config = match (args.algo, args.preset) {
        (AlgoArg::Bdt, PresetArg::Simulated) => ScanConfig::bdt(),
        (AlgoArg::Bdt, PresetArg::Real) => ScanConfig::bdt_real_data(),
        (AlgoArg::Nn, PresetArg::Simulated) => ScanConfig::nn_simulated(),
        (AlgoArg::Nn, PresetArg::Real) => ScanConfig::nn_real_data(),
    };
    if let Some(h) = args.ref_hours {
        config.referent_len = hours("ref-hours", h)?;
    }
    if let Some(h) = args.subject_hours {
        config.subject_len = hours("subject-hours", h)?;
        config.stride = config.subject_len;
    }
    if let Some(h) = args.stride_hours {
        config.stride = hours("stride-hours", h)?;
    }
    config.seed = args.seed;
    if args.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    config.workers = args.workers;

    match &mut config.algorithm {
        Algorithm::Bdt(bdt) => {
            reject("epochs", args.epochs.is_some(), "bdt")?;
            reject("batch", args.batch.is_some(), "bdt")?;
            reject("alpha", args.alpha.is_some(), "bdt")?;
            reject("history", args.history.is_some(), "bdt")?;
            apply_bdt(bdt, args);
        }
        Algorithm::Nn(nn) => {
            reject("threshold", args.threshold.is_some(), "nn")?;
            reject("estimators", args.estimators.is_some(), "nn")?;
            reject("depth", args.depth.is_some(), "nn")?;
            reject("bdt-score", args.bdt_score.is_some(), "nn")?;
            if let Some(e) = args.epochs {
                nn.train.epochs = e;
            }
            if let Some(b) = args.batch {
                nn.train.batch_size = b;
            }
            if let Some(a) = args.alpha {
                nn.alpha = a;
            }
        }
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn apply_bdt(bdt: &mut BdtConfig, args: &DetectArgs) {
    if let Some(t) = args.threshold {
        bdt.auc_threshold = t;
    }
    if let Some(n) = args.estimators {
        bdt.n_estimators = n;
    }
    if let Some(d) = args.depth {
        bdt.max_depth = d;
    }
    if let Some(s) = args.bdt_score {
        bdt.score = match s {
            BdtScoreArg::Continuous => BdtScore::Continuous,
            BdtScoreArg::Votes => BdtScore::Votes,
        };
    }
}

pub fn detect(args: &DetectArgs) -> CliResult<u8> {
    let config = scan_config(args)?;
    let frame = load_frame(&args.input)?.fill_missing();
    let report = scan(&frame, &config)?;

    let mut out = open_output(&args.output)?;
    report.write_csv(&mut out)?;
    out.flush()?;
    drop(out);

    if let Some(path) = &args.history {
        write_history(&report, path)?;
    }
    eprintln!(
        "{} windows scanned with {}, {} flagged",
        report.windows.len(),
        report.algorithm,
        report.n_flagged()
    );
    Ok(if report.n_flagged() > 0 { EXIT_FLAGGED } else { 0 })
}

fn write_history(report: &DetectionReport, path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::File {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    let mut w = BufWriter::new(file);
    writeln!(w, "subject_start,epoch,loss,accuracy")?;
    for v in &report.windows {
        for r in v.epochs_history.iter().flatten() {
            writeln!(
                w,
                "{},{},{},{}",
                format_timestamp(v.subject_start),
                r.epoch,
                r.loss,
                r.accuracy
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn report(args: &ReportArgs) -> CliResult<u8> {
    let subject_len = hours("subject-hours", args.subject_hours)?;
    let file = File::open(&args.report).map_err(|e| CliError::File {
        path: args.report.clone(),
        source: e.into(),
    })?;
    let rows: Vec<ReportRow> =
        read_report_csv(BufReader::new(file)).map_err(|source| CliError::File {
            path: args.report.clone(),
            source,
        })?;
    let frame = match &args.frame {
        Some(p) => Some(load_frame(&Some(p.clone()))?),
        None => None,
    };

    let intervals =
        merge_flagged_windows(rows.iter().map(|r| (r.subject_start, r.flagged)), subject_len);
    let noun = if intervals.len() == 1 { "interval" } else { "intervals" };
    println!("{} {noun}", intervals.len());
    for i in &intervals {
        println!(
            "  {} .. {}  ({}h)",
            format_timestamp(i.start),
            format_timestamp(i.end),
            i.duration() as f64 / HOUR as f64
        );
    }

    let output = args
        .output
        .clone()
        .unwrap_or_else(|| args.report.with_extension("svg"));
    let svg = render_svg(&PlotInput {
        rows: &rows,
        frame: frame.as_ref(),
        intervals: &intervals,
        subject_len,
        sqrt: args.sqrt,
    });
    std::fs::write(&output, svg).map_err(|e| CliError::File {
        path: output.clone(),
        source: e.into(),
    })?;
    println!("plot written to {}", output.display());
    Ok(0)
}
