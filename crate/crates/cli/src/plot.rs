//! SVG plots of the CSV outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use plotters::prelude::*;

use snse_core::output::read_csv;

const SIZE: (u32, u32) = (900, 600);
const COLORS: [RGBColor; 4] = [BLUE, RED, GREEN, MAGENTA];

struct Table {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
    /// `# key=value` provenance lines, shown as the caption.
    tag: String,
}

impl Table {
    fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn load(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let tag = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .collect::<Vec<_>>()
        .join("  ");
    let (names, rows) = read_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Table { names, rows, tag })
}

/// Picks a plot from the CSV columns and writes `<stem>.svg` into `out`.
pub fn plot_csv(input: &Path, out: &Path) -> Result<PathBuf> {
    let table = load(input)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let target = out.join(format!("{stem}.svg"));
    let has = |c: &str| table.names.iter().any(|n| n == c);
    if has("norm_h_u") {
        let t = table.column("t").context("trajectory CSV without `t`")?;
        let series: Vec<(&str, Vec<f64>)> = ["norm_h_u", "norm_h_v", "norm_h_z"]
            .iter()
            .filter_map(|c| table.column(c).map(|v| (*c, v)))
            .collect();
        line_plot(&target, &table.tag, "t", "norm", &t, &series, false)?;
    } else if has("tail_mass") {
        let r = table.column("R").context("tightness CSV without `R`")?;
        let series = vec![
            ("tail_mass", table.column("tail_mass").unwrap_or_default()),
            ("markov_bound", table.column("markov_bound").context("tightness CSV without `markov_bound`")?),
        ];
        line_plot(&target, &table.tag, "R", "mass", &r, &series, true)?;
    } else if has("invariance_residual") {
        let t = table.column("T").context("stabilization CSV without `T`")?;
        let series = vec![
            ("distance_to_2T", table.column("distance_to_2T").unwrap_or_default()),
            ("invariance_residual", table.column("invariance_residual").unwrap_or_default()),
        ];
        line_plot(&target, &table.tag, "T", "energy distance", &t, &series, true)?;
    } else {
        bail!("{}: unrecognized columns {:?}", input.display(), table.names);
    }
    Ok(target)
}

fn finite_points(x: &[f64], y: &[f64], log: bool) -> Vec<(f64, f64)> {
    x.iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && (!log || (**a > 0.0 && **b > 0.0)))
        .map(|(a, b)| (*a, *b))
        .collect()
}

fn bounds(vals: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if lo == hi {
        return if log { (lo / 2.0, hi * 2.0) } else { (lo - 1.0, hi + 1.0) };
    }
    if log {
        (lo, hi)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn line_plot(
    target: &Path,
    caption: &str,
    xlabel: &str,
    ylabel: &str,
    x: &[f64],
    series: &[(&str, Vec<f64>)],
    log: bool,
) -> Result<()> {
    let pts: Vec<(&str, Vec<(f64, f64)>)> = series
        .iter()
        .map(|(n, y)| (*n, finite_points(x, y, log)))
        .filter(|(_, p)| !p.is_empty())
        .collect();
    if pts.is_empty() {
        bail!("no plottable points");
    }
    let (x0, x1) = bounds(pts.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)), log);
    let (y0, y1) = bounds(pts.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)), log);
    let root = SVGBackend::new(target, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(caption, ("sans-serif", 14))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(70);
    macro_rules! draw {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart.configure_mesh().x_desc(xlabel).y_desc(ylabel).draw()?;
            for (i, (name, p)) in pts.iter().enumerate() {
                let color = COLORS[i % COLORS.len()];
                chart
                    .draw_series(LineSeries::new(p.iter().copied(), &color))?
                    .label(*name)
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
                if log {
                    chart.draw_series(p.iter().map(|q| Circle::new(*q, 3, color.filled())))?;
                }
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()?;
        }};
    }
    if log {
        draw!(builder.build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())?);
    } else {
        draw!(builder.build_cartesian_2d(x0..x1, y0..y1)?);
    }
    root.present()?;
    Ok(())
}
