//! `plot`: turn run outputs into SVG figures plus the numbers behind them.
//!
//! `plot curves` reads training logs, groups them by parent directory
//! name (the critic variant in the `train` layout), interpolates every
//! log onto a shared step grid, and draws one mean line with a +/- one
//! standard deviation band per group. `plot epsilon` reads an `rpe-test`
//! rows table and draws one box per delta over the per-episode bounds.
//!
//! Figures are deterministic byte-for-byte: same inputs, same SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use iaac::actor_critic::read_log_csv;

use crate::error::{io_err, CliError};
use crate::manifest::{config_hash, write_manifest, RunManifest};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone, Serialize)]
pub struct CurveArgs {
    pub logs: Vec<PathBuf>,
    pub out_dir: PathBuf,
    pub points: usize,
    pub title: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonArgs {
    pub rows: PathBuf,
    pub out_dir: PathBuf,
    pub title: String,
}

struct Series {
    name: String,
    logs: Vec<Vec<(f64, f64)>>,
}

pub fn curves(args: &CurveArgs) -> Result<RunManifest, CliError> {
    if args.logs.is_empty() {
        return Err(CliError::Config("no log files given".into()));
    }
    if args.points < 2 {
        return Err(CliError::Config("points must be at least 2".into()));
    }

    // Group logs by parent directory name, in first-seen order.
    let mut series: Vec<Series> = Vec::new();
    for path in &args.logs {
        let name = path
            .parent()
            .and_then(|p| p.file_name())
            .and_then(|n| n.to_str())
            .unwrap_or("series")
            .to_string();
        let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
        let rows = read_log_csv(std::io::BufReader::new(file))
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        if rows.is_empty() {
            return Err(CliError::Runtime(format!("{}: log has no rows", path.display())));
        }
        let points: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.env_steps as f64, r.rolling_return_100))
            .collect();
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.logs.push(points),
            None => series.push(Series {
                name,
                logs: vec![points],
            }),
        }
    }

    // Shared grid: the step range every log covers.
    let lo = series
        .iter()
        .flat_map(|s| s.logs.iter().map(|l| l[0].0))
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = series
        .iter()
        .flat_map(|s| s.logs.iter().map(|l| l[l.len() - 1].0))
        .fold(f64::INFINITY, f64::min);
    if lo > hi {
        return Err(CliError::Runtime(
            "logs share no common step range to compare on".into(),
        ));
    }
    let grid: Vec<f64> = if lo == hi {
        vec![lo]
    } else {
        (0..args.points)
            .map(|k| lo + (hi - lo) * k as f64 / (args.points - 1) as f64)
            .collect()
    };

    struct Band {
        name: String,
        seeds: usize,
        mean: Vec<f64>,
        sd: Vec<f64>,
    }
    let mut bands = Vec::new();
    for s in &series {
        let per_log: Vec<Vec<f64>> = s
            .logs
            .iter()
            .map(|l| grid.iter().map(|&x| interpolate(l, x)).collect())
            .collect();
        let n = per_log.len() as f64;
        let mut mean = vec![0.0; grid.len()];
        let mut sd = vec![0.0; grid.len()];
        for (k, m) in mean.iter_mut().enumerate() {
            *m = per_log.iter().map(|l| l[k]).sum::<f64>() / n;
        }
        for (k, d) in sd.iter_mut().enumerate() {
            let var = per_log.iter().map(|l| (l[k] - mean[k]).powi(2)).sum::<f64>() / n;
            *d = var.sqrt();
        }
        bands.push(Band {
            name: s.name.clone(),
            seeds: s.logs.len(),
            mean,
            sd,
        });
    }

    let mut csv = String::from("series,env_steps,mean,std,seeds\n");
    for b in &bands {
        for (k, &x) in grid.iter().enumerate() {
            let _ = writeln!(csv, "{},{x},{},{},{}", b.name, b.mean[k], b.sd[k], b.seeds);
        }
    }

    // Figure bounds over every band's mean +/- sd.
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for b in &bands {
        for k in 0..grid.len() {
            y_lo = y_lo.min(b.mean[k] - b.sd[k]);
            y_hi = y_hi.max(b.mean[k] + b.sd[k]);
        }
    }
    if y_lo == y_hi {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let x_lo = grid[0];
    let x_hi = if lo == hi { lo + 1.0 } else { hi };

    let map = Mapper::new(x_lo, x_hi, y_lo, y_hi);
    let mut svg = svg_open();
    frame_and_axes(&mut svg, &map, &args.title, "environment steps", "rolling return (100 ep)");
    for (i, b) in bands.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band_pts = Vec::with_capacity(grid.len() * 2);
        for (k, &x) in grid.iter().enumerate() {
            band_pts.push(map.pt(x, b.mean[k] + b.sd[k]));
        }
        for (k, &x) in grid.iter().enumerate().rev() {
            band_pts.push(map.pt(x, b.mean[k] - b.sd[k]));
        }
        let _ = writeln!(
            svg,
            r##"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"##,
            join_points(&band_pts)
        );
        let line: Vec<(f64, f64)> = grid
            .iter()
            .enumerate()
            .map(|(k, &x)| map.pt(x, b.mean[k]))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"##,
            join_points(&line)
        );
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r##"<rect x="{x}" y="{y}" width="18" height="4" fill="{color}"/><text x="{tx}" y="{ty}" font-size="12" fill="#333">{name} ({seeds} seed{s})</text>"##,
            x = MARGIN_L + 10.0,
            y = ly - 2.0,
            tx = MARGIN_L + 34.0,
            ty = ly + 4.0,
            name = escape(&b.name),
            seeds = b.seeds,
            s = if b.seeds == 1 { "" } else { "s" },
        );
    }
    svg.push_str("</svg>\n");

    write_outputs(&args.out_dir, "curves", &svg, &csv, args)
}

/// Linear interpolation on a step-sorted log; clamps outside the range.
fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    if x <= points[0].0 {
        return points[0].1;
    }
    if x >= points[points.len() - 1].0 {
        return points[points.len() - 1].1;
    }
    let j = points.partition_point(|p| p.0 <= x);
    let (x0, y0) = points[j - 1];
    let (x1, y1) = points[j];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Per-delta box stats: type-7 quartiles, Tukey 1.5 IQR whiskers.
#[derive(Debug, Clone, Serialize)]
pub struct BoxStats {
    pub label: String,
    pub count: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

pub fn box_stats(label: &str, values: &[f64]) -> BoxStats {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile(&v, 0.25);
    let median = quantile(&v, 0.5);
    let q3 = quantile(&v, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let whisker_lo = v.iter().copied().find(|&x| x >= lo_fence).unwrap_or(q1);
    let whisker_hi = v
        .iter()
        .rev()
        .copied()
        .find(|&x| x <= hi_fence)
        .unwrap_or(q3);
    let outliers = v
        .iter()
        .copied()
        .filter(|&x| x < lo_fence || x > hi_fence)
        .collect();
    BoxStats {
        label: label.to_string(),
        count: v.len(),
        q1,
        median,
        q3,
        whisker_lo,
        whisker_hi,
        outliers,
    }
}

/// Type-7 quantile: linear interpolation at rank (n-1)p on sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty slice");
    let h = (n - 1) as f64 * p;
    let j = h.floor() as usize;
    let frac = h - j as f64;
    if j + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[j] + frac * (sorted[j + 1] - sorted[j])
    }
}

pub fn epsilon(args: &EpsilonArgs) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(&args.rows).map_err(|e| io_err(&args.rows, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("episode,delta,") || !header.contains(",epsilon,") {
        return Err(CliError::Runtime(format!(
            "{}: not an rpe-test rows table (header {header:?})",
            args.rows.display()
        )));
    }
    let eps_col = header
        .split(',')
        .position(|c| c == "epsilon")
        .expect("checked above");

    // Per-episode rows only; pooled rows have an empty episode column.
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() <= eps_col {
            return Err(CliError::Runtime(format!(
                "{}:{}: short row",
                args.rows.display(),
                idx + 2
            )));
        }
        if parts[0].is_empty() {
            continue;
        }
        let delta = parts[1].to_string();
        let eps: f64 = parts[eps_col].parse().map_err(|e| {
            CliError::Runtime(format!("{}:{}: {e}", args.rows.display(), idx + 2))
        })?;
        match groups.iter_mut().find(|(d, _)| *d == delta) {
            Some((_, v)) => v.push(eps),
            None => groups.push((delta, vec![eps])),
        }
    }
    if groups.is_empty() {
        return Err(CliError::Runtime("no per-episode rows to plot".into()));
    }

    let stats: Vec<BoxStats> = groups
        .iter()
        .map(|(d, v)| box_stats(&format!("delta {d}"), v))
        .collect();

    let mut csv = String::from("delta,count,q1,median,q3,whisker_lo,whisker_hi,outliers\n");
    for ((delta, _), s) in groups.iter().zip(&stats) {
        let _ = writeln!(
            csv,
            "{delta},{},{},{},{},{},{},{}",
            s.count,
            s.q1,
            s.median,
            s.q3,
            s.whisker_lo,
            s.whisker_hi,
            s.outliers.len()
        );
    }

    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in &stats {
        y_lo = y_lo.min(s.whisker_lo).min(0.0);
        y_hi = y_hi.max(s.whisker_hi).max(0.0);
        for &o in &s.outliers {
            y_lo = y_lo.min(o);
            y_hi = y_hi.max(o);
        }
    }
    if y_lo == y_hi {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad = 0.05 * (y_hi - y_lo);
    let map = Mapper::new(0.0, stats.len() as f64, y_lo - pad, y_hi + pad);

    let mut svg = svg_open();
    frame_and_axes_y_only(&mut svg, &map, &args.title, "per-episode lower bound");
    // The decision line: a bound above zero rejects.
    let (zx0, zy) = map.pt(0.0, 0.0);
    let (zx1, _) = map.pt(stats.len() as f64, 0.0);
    let _ = writeln!(
        svg,
        r##"<line x1="{zx0}" y1="{zy}" x2="{zx1}" y2="{zy}" stroke="#888" stroke-dasharray="4 3"/>"##
    );
    for (i, s) in stats.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cx = i as f64 + 0.5;
        let half = 0.28;
        let (bx0, by1) = map.pt(cx - half, s.q1);
        let (bx1, by3) = map.pt(cx + half, s.q3);
        let (_, bym) = map.pt(cx, s.median);
        let (cxp, wlo) = map.pt(cx, s.whisker_lo);
        let (_, whi) = map.pt(cx, s.whisker_hi);
        let _ = writeln!(
            svg,
            r##"<line x1="{cxp}" y1="{wlo}" x2="{cxp}" y2="{by1}" stroke="{color}"/>
<line x1="{cxp}" y1="{whi}" x2="{cxp}" y2="{by3}" stroke="{color}"/>
<line x1="{x0}" y1="{wlo}" x2="{x1}" y2="{wlo}" stroke="{color}"/>
<line x1="{x0}" y1="{whi}" x2="{x1}" y2="{whi}" stroke="{color}"/>
<rect x="{bx0}" y="{by3}" width="{w}" height="{h}" fill="{color}" fill-opacity="0.25" stroke="{color}"/>
<line x1="{bx0}" y1="{bym}" x2="{bx1}" y2="{bym}" stroke="{color}" stroke-width="2"/>"##,
            x0 = cxp - 12.0,
            x1 = cxp + 12.0,
            w = bx1 - bx0,
            h = by1 - by3,
        );
        for &o in &s.outliers {
            let (ox, oy) = map.pt(cx, o);
            let _ = writeln!(
                svg,
                r##"<circle cx="{ox}" cy="{oy}" r="2.5" fill="none" stroke="{color}"/>"##
            );
        }
        let (lx, _) = map.pt(cx, 0.0);
        let _ = writeln!(
            svg,
            r##"<text x="{lx}" y="{ly}" font-size="12" fill="#333" text-anchor="middle">{label}</text>"##,
            ly = HEIGHT - MARGIN_B + 18.0,
            label = escape(&s.label),
        );
    }
    svg.push_str("</svg>\n");

    write_outputs(&args.out_dir, "epsilon", &svg, &csv, args)
}

fn write_outputs<A: Serialize>(
    dir: &Path,
    stem: &str,
    svg: &str,
    csv: &str,
    args: &A,
) -> Result<RunManifest, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let svg_path = dir.join(format!("{stem}.svg"));
    fs::write(&svg_path, svg).map_err(|e| io_err(&svg_path, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, csv).map_err(|e| io_err(&csv_path, e))?;
    write_manifest(
        dir,
        &format!("plot-{stem}"),
        config_hash(args)?,
        0,
        &[
            PathBuf::from(format!("{stem}.svg")),
            PathBuf::from(format!("{stem}.csv")),
        ],
    )
}

/// Data-to-pixel mapping for the plot area.
struct Mapper {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Mapper {
    fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Mapper { x_lo, x_hi, y_lo, y_hi }
    }

    fn pt(&self, x: f64, y: f64) -> (f64, f64) {
        let px = MARGIN_L + (x - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = HEIGHT - MARGIN_B
            - (y - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);
        (px, py)
    }
}

fn svg_open() -> String {
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
"##
    )
}

fn frame_and_axes(svg: &mut String, map: &Mapper, title: &str, x_label: &str, y_label: &str) {
    frame_common(svg, map, title, y_label);
    for t in nice_ticks(map.x_lo, map.x_hi, 6) {
        let (px, _) = map.pt(t, map.y_lo);
        let _ = writeln!(
            svg,
            r##"<line x1="{px}" y1="{y0}" x2="{px}" y2="{y1}" stroke="#ddd"/>
<text x="{px}" y="{ty}" font-size="11" fill="#555" text-anchor="middle">{}</text>"##,
            tick_label(t),
            y0 = MARGIN_T,
            y1 = HEIGHT - MARGIN_B,
            ty = HEIGHT - MARGIN_B + 16.0,
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{cx}" y="{cy}" font-size="13" fill="#333" text-anchor="middle">{}</text>"##,
        escape(x_label),
        cx = MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        cy = HEIGHT - 12.0,
    );
}

fn frame_and_axes_y_only(svg: &mut String, map: &Mapper, title: &str, y_label: &str) {
    frame_common(svg, map, title, y_label);
}

fn frame_common(svg: &mut String, map: &Mapper, title: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r##"<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="none" stroke="#999"/>
<text x="{tx}" y="24" font-size="15" fill="#111" text-anchor="middle">{}</text>"##,
        escape(title),
        x = MARGIN_L,
        y = MARGIN_T,
        w = WIDTH - MARGIN_L - MARGIN_R,
        h = HEIGHT - MARGIN_T - MARGIN_B,
        tx = WIDTH / 2.0,
    );
    for t in nice_ticks(map.y_lo, map.y_hi, 6) {
        let (_, py) = map.pt(map.x_lo, t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x0}" y1="{py}" x2="{x1}" y2="{py}" stroke="#ddd"/>
<text x="{tx}" y="{ty}" font-size="11" fill="#555" text-anchor="end">{}</text>"##,
            tick_label(t),
            x0 = MARGIN_L,
            x1 = WIDTH - MARGIN_R,
            tx = MARGIN_L - 6.0,
            ty = py + 4.0,
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="16" y="{cy}" font-size="13" fill="#333" text-anchor="middle" transform="rotate(-90 16 {cy})">{}</text>"##,
        escape(y_label),
        cy = MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
    );
}

/// Round-number ticks covering [lo, hi], at most `target + 2` of them.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let range = hi - lo;
    if !(range > 0.0) || !range.is_finite() {
        return vec![lo];
    }
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * step {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn tick_label(t: f64) -> String {
    if t != 0.0 && t.abs() >= 10_000.0 {
        format!("{}k", t / 1000.0)
    } else {
        format!("{}", (t * 1e6).round() / 1e6)
    }
}

fn join_points(pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|(x, y)| format!("{:.2},{:.2}", x, y))
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
