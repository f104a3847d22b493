//! File output: CSV tables with six decimals, schema-versioned JSON, SVG
//! trajectory plots and binary checkpoints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::evaluate::{Comparison, EpisodeRecord, ReportRow, WallClock};
use super::train::{TrainOutput, TrainingCurve};
use crate::agents::DqnCheckpoint;
use crate::error::{Error, Result};

pub const REPORT_HEADER: &str = "method,setting,n_seeds,n_realizations,reward,contact_pct,high_quality_pct,operating_cost";

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn opt6(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            quote(&r.method),
            quote(&r.setting),
            r.n_seeds,
            r.n_realizations,
            f6(r.reward),
            f6(r.contact),
            opt6(r.high_quality),
            opt6(r.operating_cost)
        );
    }
    out
}

#[derive(Deserialize)]
struct CsvRow {
    method: String,
    setting: String,
    n_seeds: usize,
    n_realizations: usize,
    reward: f64,
    contact_pct: f64,
    high_quality_pct: Option<f64>,
    operating_cost: Option<f64>,
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Format(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != REPORT_HEADER {
        return Err(Error::Format("report.csv: unexpected header".into()));
    }
    reader
        .deserialize::<CsvRow>()
        .map(|row| {
            let r = row.map_err(|e| Error::Format(format!("report.csv: {e}")))?;
            Ok(ReportRow {
                method: r.method,
                setting: r.setting,
                n_seeds: r.n_seeds,
                n_realizations: r.n_realizations,
                reward: r.reward,
                contact: r.contact_pct,
                high_quality: r.high_quality_pct,
                operating_cost: r.operating_cost,
            })
        })
        .collect()
}

pub fn episodes_csv(records: &[(&str, &EpisodeRecord)]) -> String {
    let mut out = String::from(
        "method,seed,setting,realization,realization_hash,reward,contact_pct,high_quality_pct,operating_cost,sidetracks\n",
    );
    for (method, r) in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            quote(method),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            quote(&r.setting),
            r.realization,
            r.realization_hash,
            f6(r.reward),
            f6(r.contact),
            opt6(r.high_quality),
            opt6(r.operating_cost),
            r.sidetracks
        );
    }
    out
}

pub fn curves_csv(outputs: &[TrainOutput]) -> String {
    let mut out = String::from("seed,episode,reward,contact_pct,secondary,ma_reward,ma_contact_pct,ma_secondary\n");
    for o in outputs {
        let c = &o.curve;
        let ma: Vec<Vec<Option<f64>>> = [&c.reward, &c.contact, &c.secondary]
            .iter()
            .map(|s| TrainingCurve::moving_average(s))
            .collect();
        for i in 0..c.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                o.seed,
                i,
                f6(c.reward[i]),
                f6(c.contact[i]),
                f6(c.secondary[i]),
                opt6(ma[0][i]),
                opt6(ma[1][i]),
                opt6(ma[2][i])
            );
        }
    }
    out
}

/// Writes `report.csv`, `report.json` and `episodes.csv`; wall-clock
/// figures go to `timing.json` so the others stay reproducible.
pub fn write_comparison(dir: &Path, comparison: &Comparison) -> Result<Vec<PathBuf>> {
    let paths = [
        dir.join("report.csv"),
        dir.join("report.json"),
        dir.join("episodes.csv"),
        dir.join("timing.json"),
    ];
    write_file(&paths[0], report_csv(&comparison.rows()))?;
    write_file(&paths[1], serde_json::to_string_pretty(comparison).expect("report serializes") + "\n")?;
    let records: Vec<(&str, &EpisodeRecord)> = comparison
        .reports
        .iter()
        .flat_map(|r| r.records.iter().map(move |e| (r.method.as_str(), e)))
        .collect();
    write_file(&paths[2], episodes_csv(&records))?;
    let timing: Vec<&WallClock> = comparison.reports.iter().map(|r| &r.wall_clock).collect();
    write_file(&paths[3], serde_json::to_string_pretty(&timing).expect("timing serializes") + "\n")?;
    Ok(paths.to_vec())
}

pub fn checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("checkpoint_{seed}.bin"))
}

pub fn write_checkpoint(dir: &Path, checkpoint: &DqnCheckpoint) -> Result<PathBuf> {
    let path = checkpoint_path(dir, checkpoint.meta.seed);
    write_file(&path, checkpoint.to_bytes())?;
    Ok(path)
}

pub fn read_checkpoint(path: &Path) -> Result<DqnCheckpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    DqnCheckpoint::from_bytes(&bytes)
}

/// One drawn line of a trajectory plot.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
    pub colour: &'static str,
    pub dashed: bool,
}

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Depth section with depth increasing downward. `boundaries` are drawn in
/// black, `wells` in colour, and a legend lists the wells.
pub fn trajectory_svg(title: &str, dx: f64, boundaries: &[Series], wells: &[Series]) -> String {
    let (w, h) = (800.0, 420.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let all = boundaries.iter().chain(wells);
    let n = all.clone().map(|s| s.values.len()).max().unwrap_or(1).max(2);
    let (mut zmin, mut zmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in all.flat_map(|s| s.values.iter()).filter(|v| v.is_finite()) {
        zmin = zmin.min(*v);
        zmax = zmax.max(*v);
    }
    if !zmin.is_finite() {
        (zmin, zmax) = (0.0, 1.0);
    }
    let pad = 0.05 * (zmax - zmin).max(1.0);
    let (zmin, zmax) = (zmin - pad, zmax + pad);
    let xmax = (n - 1) as f64 * dx;
    let px = |x: f64| left + (w - left - right) * x / xmax;
    let py = |z: f64| top + (h - top - bottom) * (z - zmin) / (zmax - zmin);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        w / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>",
        w - left - right,
        h - top - bottom
    );
    for k in 0..=4 {
        let z = zmin + (zmax - zmin) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{z:.1}</text>",
            left - 6.0,
            py(z) + 4.0
        );
        let x = xmax * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{x:.0}</text>",
            px(x),
            h - bottom + 16.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">horizontal distance (m)</text>",
        w / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">TVD (m)</text>",
        h / 2.0,
        h / 2.0
    );
    let polyline = |s: &mut String, series: &Series, colour: &str, width: f64| {
        let pts: Vec<String> = series
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", px(i as f64 * dx), py(v)))
            .collect();
        let dash = if series.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"{width}\"{dash} points=\"{}\"/>",
            pts.join(" ")
        );
    };
    for b in boundaries {
        polyline(&mut s, b, b.colour, 1.5);
    }
    for (k, well) in wells.iter().enumerate() {
        polyline(&mut s, well, well.colour, 2.0);
        let y = top + 14.0 + 16.0 * k as f64;
        let x = w - right - 150.0;
        let _ = writeln!(
            s,
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>",
            x + 20.0,
            well.colour
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            x + 26.0,
            y + 4.0,
            xml_escape(&well.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, reward: f64, hq: Option<f64>) -> ReportRow {
        ReportRow {
            method: method.into(),
            setting: "v_prod=0.5".into(),
            n_seeds: 5,
            n_realizations: 1000,
            reward,
            contact: 91.123456789,
            high_quality: hq,
            operating_cost: None,
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(report_csv(&[]), format!("{REPORT_HEADER}\n"));
        assert!(parse_report_csv(&report_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn csv_reload_reproduces_printed_values() {
        let rows = vec![row("dqn-sensor", 11.49123456, Some(40.5)), row("a,\"b\"", -3.0000004, None)];
        let text = report_csv(&rows);
        let back = parse_report_csv(&text).unwrap();
        assert_eq!(report_csv(&back), text);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.method, b.method);
            assert_eq!(format!("{:.6}", a.reward).parse::<f64>().unwrap(), b.reward);
            assert_eq!(a.high_quality.is_some(), b.high_quality.is_some());
        }
    }

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let b = Series {
            label: "top".into(),
            values: vec![1.0, 2.0, 3.0],
            colour: "black",
            dashed: false,
        };
        let well = Series {
            label: "a<b".into(),
            values: vec![1.5, 2.5, f64::NAN],
            colour: PALETTE[0],
            dashed: false,
        };
        let s1 = trajectory_svg("t", 10.0, std::slice::from_ref(&b), std::slice::from_ref(&well));
        let s2 = trajectory_svg("t", 10.0, &[b], &[well]);
        assert_eq!(s1, s2);
        assert!(s1.starts_with("<svg") && s1.trim_end().ends_with("</svg>"));
        assert!(s1.contains("a&lt;b"));
        assert_eq!(s1.matches("<polyline").count(), 2);
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_file(&blocker.join("report.csv"), "x").unwrap_err();
        assert!(err.to_string().contains(blocker.to_str().unwrap()));
    }
}
