use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::config::ExperimentConfig;
use super::report::{PlotSpec, RunReport, Table};
use super::{HarnessError, Result};

/// Present in an output directory while a run is incomplete or after it
/// failed.
pub const PARTIAL_MARKER: &str = ".partial";

pub(crate) fn begin(dir: &Path, config: &ExperimentConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let marker = dir.join(PARTIAL_MARKER);
    std::fs::write(&marker, format!("running {} with seed {}\n", config.kind.as_str(), config.seed))
        .map_err(|e| HarnessError::io(&marker, e))?;
    Ok(marker)
}

fn write_table(table: &Table, path: &Path) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => HarnessError::io(path, e),
        other => HarnessError::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub(crate) fn write_report(report: &RunReport, dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut written = Vec::new();
    for table in report.tables.iter().chain(std::iter::once(&report.checks_table())) {
        let path = dir.join(format!("{}.csv", table.name));
        write_table(table, &path)?;
        written.push(path);
    }
    let manifest = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&report.manifest).expect("manifest serializes");
    write_text(&manifest, &(json + "\n"))?;
    written.push(manifest);
    let config = dir.join("config.toml");
    write_text(&config, &report.config.to_toml())?;
    written.push(config);
    if plots {
        for p in &report.plots {
            let path = dir.join(format!("{}.svg", p.name));
            draw(p, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes the tables as CSV, `checks.csv`, `manifest.json`, the effective
/// `config.toml` and, if asked, one SVG per plot. Returns the paths written.
pub fn emit_outputs(report: &RunReport, dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    write_report(report, dir, plots)
}

fn draw(spec: &PlotSpec, path: &Path) -> Result<()> {
    let err = |e: &dyn std::fmt::Display| HarnessError::Plot {
        name: spec.name.clone(),
        reason: e.to_string(),
    };
    let points = spec
        .series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|&(x, y)| x.is_finite() && y.is_finite() && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 < x1) {
        (x0, x1) = if x0.is_finite() { (x0 * 0.5, x0 * 2.0 + 1.0) } else { (0.0, 1.0) };
    }
    if !(y0 < y1) {
        (y0, y1) = if y0.is_finite() { (y0 * 0.5, y0 * 2.0 + 1e-12) } else { (0.0, 1.0) };
    }
    if !spec.log_y {
        let pad = 0.05 * (y1 - y0);
        (y0, y1) = (y0 - pad, y1 + pad);
    }

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(&spec.title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(72);
    macro_rules! finish {
        ($chart:expr) => {{
            let mut chart = $chart.map_err(|e| err(&e))?;
            chart
                .configure_mesh()
                .x_desc(spec.x_label.as_str())
                .y_desc(spec.y_label.as_str())
                .draw()
                .map_err(|e| err(&e))?;
            for (i, (label, s)) in spec.series.iter().enumerate() {
                let color = Palette99::pick(i).to_rgba();
                let pts: Vec<(f64, f64)> = s
                    .iter()
                    .copied()
                    .filter(|&(x, y)| (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0))
                    .collect();
                chart
                    .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
                    .map_err(|e| err(&e))?
                    .label(label.as_str())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
                if pts.len() <= 60 {
                    chart
                        .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                        .map_err(|e| err(&e))?;
                }
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| err(&e))?;
        }};
    }
    match (spec.log_x, spec.log_y) {
        (false, false) => finish!(builder.build_cartesian_2d(x0..x1, y0..y1)),
        (true, false) => finish!(builder.build_cartesian_2d((x0..x1).log_scale(), y0..y1)),
        (false, true) => finish!(builder.build_cartesian_2d(x0..x1, (y0..y1).log_scale())),
        (true, true) => finish!(builder.build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())),
    }
    root.present().map_err(|e| err(&e))
}
