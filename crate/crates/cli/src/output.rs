//! Result files.
//!
//! Per video, under `{out}/{video_id}/`: `frames.csv`, `windows.jsonl` and
//! `curve.svg`. Per run: `{out}/metrics.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use vad_core::agent::WindowResult;
use vad_core::eval::{MacroAverage, Metrics};
use vad_core::postprocess::{PostConfig, ScoreSeries};

pub const FRAMES_CSV: &str = "frames.csv";
pub const WINDOWS_JSONL: &str = "windows.jsonl";
pub const CURVE_SVG: &str = "curve.svg";
pub const METRICS_JSON: &str = "metrics.json";

pub fn frames_csv(series: &ScoreSeries) -> String {
    let mut out = String::from("frame_index,g,p,L,L_smooth,p_hat\n");
    for i in 0..series.len() {
        writeln!(
            out,
            "{i},{},{},{},{},{}",
            u8::from(series.flags[i]),
            series.probabilities[i],
            series.calibrated[i],
            series.smoothed[i],
            series.final_scores[i]
        )
        .expect("writing to a String");
    }
    out
}

pub fn windows_jsonl(results: &[WindowResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("window results serialize"));
        out.push('\n');
    }
    out
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 240.0;
const LEFT: f64 = 40.0;
const RIGHT: f64 = 10.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 30.0;

/// Frame index against final score, with labeled anomalous spans shaded.
pub fn curve_svg(title: &str, scores: &[f64], labels: Option<&[bool]>) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let n = scores.len().max(1);
    let x = |i: usize| LEFT + plot_w * i as f64 / n as f64;
    let y = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut svg = String::new();
    let mut w = |s: String| svg.push_str(&s);
    w(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    w(format!("<title>{}</title>\n", escape(title)));
    w(format!(
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    if let Some(labels) = labels {
        let mut i = 0;
        while i < labels.len() {
            if !labels[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < labels.len() && labels[i] {
                i += 1;
            }
            w(format!(
                "<rect class=\"ground-truth\" x=\"{:.2}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{plot_h}\" fill=\"#f4c7c3\"/>\n",
                x(start),
                x(i) - x(start)
            ));
        }
    }
    w(format!(
        "<path d=\"M{LEFT} {TOP} V{} H{}\" stroke=\"black\" fill=\"none\"/>\n",
        TOP + plot_h,
        LEFT + plot_w
    ));
    for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        w(format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{label}</text>\n",
            LEFT - 4.0,
            y(v) + 3.0
        ));
    }
    w(format!(
        "<text x=\"{LEFT}\" y=\"{}\" font-size=\"10\">0</text>\n<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\">{} frames</text>\n",
        HEIGHT - 10.0,
        LEFT + plot_w,
        HEIGHT - 10.0,
        scores.len()
    ));
    if !scores.is_empty() {
        let mut points = String::new();
        for (i, &v) in scores.iter().enumerate() {
            if i > 0 {
                points.push(' ');
            }
            write!(points, "{:.2},{:.2}", x(i) + 0.5 * plot_w / n as f64, y(v))
                .expect("writing to a String");
        }
        w(format!(
            "<polyline class=\"score\" points=\"{points}\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\"/>\n"
        ));
    }
    w("</svg>\n".to_string());
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn write_video_outputs(
    dir: &Path,
    id: &str,
    series: &ScoreSeries,
    results: &[WindowResult],
    labels: Option<&[bool]>,
) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(FRAMES_CSV), frames_csv(series))?;
    std::fs::write(dir.join(WINDOWS_JSONL), windows_jsonl(results))?;
    std::fs::write(
        dir.join(CURVE_SVG),
        curve_svg(id, &series.final_scores, labels),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VideoMetrics {
    pub frames: usize,
    pub windows: usize,
    pub failed_windows: usize,
    pub labeled: bool,
    /// `None` when the labels hold a single class.
    pub auc: Option<f64>,
    pub ap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub profile: String,
    pub post: PostConfig,
    pub videos: BTreeMap<String, VideoMetrics>,
    pub failures: BTreeMap<String, String>,
    /// Over all labeled frames concatenated.
    pub micro: Option<Metrics>,
    pub micro_error: Option<String>,
    #[serde(rename = "macro")]
    pub macro_average: MacroAverage,
}

pub fn write_metrics(path: &Path, report: &MetricsReport) -> io::Result<()> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, report).map_err(io::Error::other)?;
    f.write_all(b"\n")?;
    f.flush()
}
