//! Hand-written SVG: optional series traces above a score trace, with
//! flagged intervals shaded across both panels.

use std::fmt::Write;

use splitscan_core::data::format_timestamp;
use splitscan_core::detector::ReportRow;
use splitscan_core::{FlaggedInterval, TimeSeriesFrame};

const WIDTH: f64 = 960.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const PANEL_GAP: f64 = 40.0;
const TOP: f64 = 30.0;
const SERIES_HEIGHT: f64 = 280.0;
const SCORE_HEIGHT: f64 = 180.0;
/// Points per series trace; longer series are decimated by striding.
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

pub struct PlotInput<'a> {
    pub rows: &'a [ReportRow],
    pub frame: Option<&'a TimeSeriesFrame>,
    pub intervals: &'a [FlaggedInterval],
    pub subject_len: i64,
    pub sqrt: bool,
}

struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let pad = ((hi - lo) * 0.05).max(1e-6);
    (lo - pad, hi + pad)
}

fn polyline(out: &mut String, points: &[(f64, f64)], color: &str, extra: &str) {
    if points.is_empty() {
        return;
    }
    let mut d = String::new();
    for (x, y) in points {
        let _ = write!(d, "{x:.1},{y:.1} ");
    }
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1" {extra} points="{}"/>"#,
        d.trim_end()
    );
}

fn display_value(v: f64, sqrt: bool) -> f64 {
    if sqrt {
        v.max(0.0).sqrt()
    } else {
        v
    }
}

fn time_range(input: &PlotInput) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    if let Some(f) = input.frame {
        lo = lo.min(f.start_time() as f64);
        hi = hi.max(f.end_time() as f64);
    }
    for r in input.rows {
        lo = lo.min(r.subject_start as f64);
        hi = hi.max((r.subject_start + input.subject_len) as f64);
    }
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

pub fn render_svg(input: &PlotInput) -> String {
    let (t0, t1) = time_range(input);
    let x = Axis::new(t0, t1, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let series_panel = input.frame.map(|_| (TOP, TOP + SERIES_HEIGHT));
    let score_top = series_panel.map_or(TOP, |(_, bottom)| bottom + PANEL_GAP);
    let score_panel = (score_top, score_top + SCORE_HEIGHT);
    let height = score_panel.1 + 50.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let panels: Vec<(f64, f64)> = series_panel.into_iter().chain([score_panel]).collect();
    for &(top, bottom) in &panels {
        for i in input.intervals {
            let (a, b) = (x.map(i.start as f64), x.map(i.end as f64));
            let _ = writeln!(
                out,
                r##"<rect class="flagged" x="{a:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="#d62728" fill-opacity="0.2"/>"##,
                (b - a).max(1.0),
                bottom - top
            );
        }
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN_LEFT}" y="{top}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            bottom - top
        );
    }

    if let (Some(frame), Some((top, bottom))) = (input.frame, series_panel) {
        draw_series(&mut out, frame, &x, top, bottom, input.sqrt);
    }
    draw_scores(&mut out, input.rows, input.subject_len, &x, score_panel);

    let base = score_panel.1 + 18.0;
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN_LEFT}" y="{base}">{}</text>"#,
        format_timestamp(t0 as i64)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{base}" text-anchor="end">{}</text>"#,
        WIDTH - MARGIN_RIGHT,
        format_timestamp(t1 as i64)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{} flagged interval(s)</text>"#,
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        base + 18.0,
        input.intervals.len()
    );
    out.push_str("</svg>\n");
    out
}

fn draw_series(out: &mut String, frame: &TimeSeriesFrame, x: &Axis, top: f64, bottom: f64, sqrt: bool) {
    let values: Vec<f64> = frame
        .values()
        .iter()
        .filter(|v| !v.is_nan())
        .map(|&v| display_value(v, sqrt))
        .collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { padded(lo, hi) } else { (0.0, 1.0) };
    let y = Axis::new(lo, hi, bottom, top);

    let step = frame.n_rows().div_ceil(MAX_POINTS).max(1);
    for (s, name) in frame.series_names().iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let points: Vec<(f64, f64)> = (0..frame.n_rows())
            .step_by(step)
            .filter(|&r| !frame.is_missing(r, s))
            .map(|r| {
                let v = display_value(frame.value(r, s), sqrt);
                (x.map(frame.timestamp(r) as f64), y.map(v))
            })
            .collect();
        polyline(out, &points, color, "");
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN_RIGHT + 10.0,
            top + 14.0 * (s as f64 + 1.0),
            escape(name)
        );
    }
    let label = if sqrt { "sqrt(value)" } else { "value" };
    let _ = writeln!(out, r#"<text x="8" y="{}">{label}</text>"#, top + 12.0);
    axis_ticks(out, &y, lo, hi);
}

fn draw_scores(out: &mut String, rows: &[ReportRow], subject_len: i64, x: &Axis, (top, bottom): (f64, f64)) {
    let _ = writeln!(out, r#"<text x="8" y="{}">score</text>"#, top + 12.0);
    if rows.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">no scored windows</text>"#,
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            (top + bottom) / 2.0
        );
        return;
    }
    let lo = rows.iter().map(|r| r.score.min(r.threshold)).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.score.max(r.threshold)).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = padded(lo.min(0.5), hi.max(1.0).min(1.0));
    let y = Axis::new(lo, hi, bottom, top);
    let mid = subject_len as f64 / 2.0;

    let scores: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (x.map(r.subject_start as f64 + mid), y.map(r.score)))
        .collect();
    let cuts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (x.map(r.subject_start as f64 + mid), y.map(r.threshold)))
        .collect();
    polyline(out, &cuts, "#444444", r#"stroke-dasharray="4 3""#);
    polyline(out, &scores, "#000000", "");
    for (r, (px, py)) in rows.iter().zip(&scores) {
        if r.flagged {
            let _ = writeln!(out, r##"<circle cx="{px:.1}" cy="{py:.1}" r="2.5" fill="#d62728"/>"##);
        }
    }
    let legend_x = WIDTH - MARGIN_RIGHT + 10.0;
    let _ = writeln!(out, r#"<text x="{legend_x}" y="{}">score</text>"#, top + 14.0);
    let _ = writeln!(out, r##"<text x="{legend_x}" y="{}" fill="#444444">threshold (dashed)</text>"##, top + 28.0);
    axis_ticks(out, &y, lo, hi);
}

fn axis_ticks(out: &mut String, y: &Axis, lo: f64, hi: f64) {
    for k in 0..=4 {
        let v = lo + (hi - lo) * f64::from(k) / 4.0;
        let py = y.map(v);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 4.0,
            py + 4.0,
            format_tick(v)
        );
    }
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
