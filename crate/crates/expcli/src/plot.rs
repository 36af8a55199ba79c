//! Plot-ready CSVs and small static SVG renderings of finished runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use oscidisc_core::hybrid::HybridModel;
use oscidisc_core::trajectory::{csv_err, csv_writer, fmt_f64, read_matrix_csv};

use crate::error::{io_err, RunError, RunResult, StageExt};
use crate::sweep::{heatmap_name, write_heatmaps, SweepResult};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const MAX_SVG_POINTS: usize = 4000;

fn read_labels(dir: &Path) -> RunResult<Option<Vec<String>>> {
    let labels_path = dir.join("training_labels.csv");
    let model_path = dir.join("hybrid_model.json");
    if !labels_path.exists() || !model_path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&model_path).map_err(io_err(&model_path))?;
    let model = HybridModel::from_json(&text).stage("plot")?;
    let (_, _, ids) = read_matrix_csv(&labels_path).stage("plot")?;
    Ok(Some(
        ids.column(0)
            .iter()
            .map(|&v| model.label_name(v as usize).to_string())
            .collect(),
    ))
}

fn write_phase_plane(path: &Path, xy: &[(f64, f64)], labels: &[String]) -> oscidisc_core::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["x", "y", "label"]).map_err(csv_err)?;
    for ((x, y), l) in xy.iter().zip(labels) {
        w.write_record([fmt_f64(*x), fmt_f64(*y), l.clone()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_projection(path: &Path, t: &[f64], a: &[f64], b: &[f64], names: [&str; 2]) -> oscidisc_core::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["t", names[0], names[1]]).map_err(csv_err)?;
    for i in 0..t.len() {
        w.write_record([fmt_f64(t[i]), fmt_f64(a[i]), fmt_f64(b[i])]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// Scatter plot, one colour per group.
pub fn scatter_svg(points: &[(f64, f64)], groups: &[usize], title: &str, axes: [&str; 2]) -> String {
    let (w, h, pad) = (480.0, 400.0, 40.0);
    let stride = points.len().div_ceil(MAX_SVG_POINTS).max(1);
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (y0, y1) = bounds(points.iter().map(|p| p.1));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, w / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 8.0, axes[0]);
    let _ = writeln!(s, r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">{}</text>"#, h / 2.0, h / 2.0, axes[1]);
    let _ = writeln!(s, r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * pad, h - 2.0 * pad);
    for (p, g) in points.iter().zip(groups).step_by(stride) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{}"/>"#, sx(p.0), sy(p.1), PALETTE[g % PALETTE.len()]);
    }
    s.push_str("</svg>\n");
    s
}

/// Heat map of a row-major grid of values.
pub fn heatmap_svg(values: &[f64], rows: usize, cols: usize, title: &str) -> String {
    let (cw, ch, pad) = (24.0, 18.0, 40.0);
    let (w, h) = (2.0 * pad + cw * cols as f64, 2.0 * pad + ch * rows as f64);
    let (lo, hi) = bounds(values.iter().copied().filter(|v| v.is_finite()));
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, w / 2.0);
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r * cols + c];
            let shade = if v.is_finite() { ((v - lo) / (hi - lo) * 255.0).round() as u8 } else { 0 };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{cw}" height="{ch}" fill="rgb({shade},{},{})"/>"#,
                pad + cw * c as f64,
                pad + ch * r as f64,
                shade / 2,
                255 - shade
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn write_text(path: &Path, text: &str) -> RunResult<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Writes plot data for whatever artifacts `dir` holds and returns the
/// files created.
pub fn emit_plot_data(dir: &Path) -> RunResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let labels = read_labels(dir)?;

    for name in ["trajectory.csv", "modes.csv"] {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let (cols, t, x) = read_matrix_csv(&path).stage("plot")?;
        if x.ncols() < 2 {
            continue;
        }
        let xy: Vec<(f64, f64)> = (0..x.nrows()).map(|i| (x[(i, 0)], x[(i, 1)])).collect();
        if let Some(l) = labels.as_ref().filter(|l| l.len() == xy.len()) {
            let out = dir.join("phase_plane.csv");
            write_phase_plane(&out, &xy, l).stage("plot")?;
            written.push(out);
            let mut names: Vec<&String> = Vec::new();
            let groups: Vec<usize> = l
                .iter()
                .map(|s| match names.iter().position(|n| *n == s) {
                    Some(k) => k,
                    None => {
                        names.push(s);
                        names.len() - 1
                    }
                })
                .collect();
            let svg = dir.join("phase_plane.svg");
            write_text(&svg, &scatter_svg(&xy, &groups, "phase plane", [&cols[0], &cols[1]]))?;
            written.push(svg);
        }
        if name == "modes.csv" {
            let r = x.ncols().min(3);
            for a in 0..r {
                for b in (a + 1)..r {
                    let (na, nb) = (&cols[a], &cols[b]);
                    let out = dir.join(format!("projection_{na}_{nb}.csv"));
                    let ca: Vec<f64> = x.column(a).iter().copied().collect();
                    let cb: Vec<f64> = x.column(b).iter().copied().collect();
                    write_projection(&out, &t, &ca, &cb, [na, nb]).stage("plot")?;
                    written.push(out);
                    let pts: Vec<(f64, f64)> = ca.iter().copied().zip(cb.iter().copied()).collect();
                    let svg = dir.join(format!("projection_{na}_{nb}.svg"));
                    write_text(&svg, &scatter_svg(&pts, &vec![0; pts.len()], "projection", [na, nb]))?;
                    written.push(svg);
                }
            }
        }
    }

    let sweep_path = dir.join("sweep.json");
    if sweep_path.exists() {
        let text = std::fs::read_to_string(&sweep_path).map_err(io_err(&sweep_path))?;
        let result: SweepResult = serde_json::from_str(&text)
            .map_err(oscidisc_core::Error::from)
            .stage("plot")?;
        for name in write_heatmaps(dir, &result).stage("plot")? {
            written.push(dir.join(name));
        }
        let rows = result.axis_values[0].len();
        let cols = result.axis_values.get(1).map_or(1, Vec::len);
        for (k, &tau) in result.thresholds.iter().enumerate() {
            let values: Vec<f64> = result.cells.iter().map(|c| c.mean[k]).collect();
            let svg = dir.join(heatmap_name(tau).replace(".csv", ".svg"));
            write_text(&svg, &heatmap_svg(&values, rows, cols, &format!("mean dimension, {tau}")))?;
            written.push(svg);
        }
    }

    if written.is_empty() {
        return Err(RunError::MissingArtifacts {
            dir: dir.to_path_buf(),
            expected: vec![
                "trajectory.csv or modes.csv with training_labels.csv and hybrid_model.json".into(),
                "modes.csv".into(),
                "sweep.json".into(),
            ],
        });
    }
    Ok(written)
}
