//! Self-contained SVG figures from a sweep summary: error scatter plots and
//! final-profile line plots. No graphics dependency; the output is plain
//! text that tests can parse (each data point is one `<circle>`).

use std::fs;
use std::path::{Path, PathBuf};

use crate::runner::{read_fields_csv, read_summary, scenario_key, SummaryRow};
use crate::HarnessError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 6] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Scatter series render markers only; profiles also draw the line.
    pub line: bool,
}

pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

/// Emitted figure bookkeeping: where it went and how much data it consumed.
pub struct FigureInfo {
    pub path: PathBuf,
    /// Markers drawn (one per data point).
    pub points: usize,
    /// Summary rows this figure consumed.
    pub rows_consumed: usize,
}

fn axis_range(values: impl Iterator<Item = f64>, log: bool) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if !v.is_finite() || (log && v <= 0.0) {
            continue;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        return None;
    }
    if lo == hi {
        // Degenerate single-value range: pad so one point still renders.
        if log {
            return Some((lo / 2.0, hi * 2.0));
        }
        let pad = lo.abs().max(1.0);
        return Some((lo - pad, hi + pad));
    }
    if log {
        Some((lo / 1.3, hi * 1.3))
    } else {
        let pad = 0.05 * (hi - lo);
        Some((lo - pad, hi + pad))
    }
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let k_lo = lo.log10().ceil() as i32;
        let k_hi = hi.log10().floor() as i32;
        if k_lo <= k_hi {
            return (k_lo..=k_hi).map(|k| 10f64.powi(k)).collect();
        }
        return vec![lo, hi];
    }
    let span = hi - lo;
    let raw_step = span / 5.0;
    let mag = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| span / s <= 6.0)
        .unwrap_or(mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + 1e-12 * span {
        out.push(v);
        v += step;
    }
    out
}

/// Render a plot to SVG text. Returns `None` when no series has plottable
/// points (all empty, or nothing positive on a log axis).
pub fn render(spec: &PlotSpec, series: &[Series]) -> Option<(String, usize)> {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (x_lo, x_hi) = axis_range(xs, spec.log_x)?;
    let (y_lo, y_hi) = axis_range(ys, spec.log_y)?;

    let tx = |v: f64| -> f64 {
        let (v, lo, hi) = if spec.log_x {
            (v.log10(), x_lo.log10(), x_hi.log10())
        } else {
            (v, x_lo, x_hi)
        };
        MARGIN_L + (v - lo) / (hi - lo) * (WIDTH - MARGIN_L - MARGIN_R)
    };
    let ty = |v: f64| -> f64 {
        let (v, lo, hi) = if spec.log_y {
            (v.log10(), y_lo.log10(), y_hi.log10())
        } else {
            (v, y_lo, y_hi)
        };
        HEIGHT - MARGIN_B - (v - lo) / (hi - lo) * (HEIGHT - MARGIN_T - MARGIN_B)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        spec.title
    ));

    // Axes box.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    ));
    for t in ticks(x_lo, x_hi, spec.log_x) {
        let x = tx(t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#cccccc\"/>\n",
            MARGIN_T,
            HEIGHT - MARGIN_B
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_B + 18.0,
            fmt_tick(t)
        ));
    }
    for t in ticks(y_lo, y_hi, spec.log_y) {
        let y = ty(t);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#cccccc\"/>\n",
            WIDTH - MARGIN_R
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 6.0,
            y + 4.0,
            fmt_tick(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        spec.x_label
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        spec.y_label
    ));

    let mut total_points = 0usize;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let visible: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|&(x, y)| {
                x.is_finite()
                    && y.is_finite()
                    && (!spec.log_x || x > 0.0)
                    && (!spec.log_y || y > 0.0)
            })
            .collect();
        if s.line && visible.len() > 1 {
            let path: Vec<String> = visible
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", tx(x), ty(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.join(" ")
            ));
        }
        for &(x, y) in &visible {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                tx(x),
                ty(y)
            ));
        }
        total_points += visible.len();
        // Legend entry.
        let ly = MARGIN_T + 16.0 * i as f64 + 10.0;
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{ly}\" r=\"4\" fill=\"{color}\"/>\n",
            WIDTH - MARGIN_R + 14.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            WIDTH - MARGIN_R + 24.0,
            ly + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    Some((svg, total_points))
}

fn write_figure(
    out_dir: &Path,
    name: &str,
    spec: &PlotSpec,
    series: &[Series],
    rows_consumed: usize,
) -> Result<Option<FigureInfo>, HarnessError> {
    match render(spec, series) {
        None => Ok(None),
        Some((svg, points)) => {
            let path = out_dir.join(name);
            fs::write(&path, svg)?;
            Ok(Some(FigureInfo {
                path,
                points,
                rows_consumed,
            }))
        }
    }
}

fn is_godunov(seq: &str) -> bool {
    seq == "godunov_tc" || seq == "godunov_ct"
}

/// Render the standard figure set from a sweep summary:
///
/// - `fig1_profiles.svg`: final O3 profiles vs x, one series per grid
///   spacing (smallest dt, first sequence; needs the sibling fields CSVs),
/// - `fig2_rrms_vs_dx.svg`: species-mean RRMS vs dx, one series per
///   sequence, every row a point,
/// - `fig3_rrms_vs_dt.svg`: RRMS vs dt for the Godunov orderings at the
///   180 km spacing,
/// - `fig4_transport_only.svg`: the transport-only analog of fig2 (emitted
///   when transport-only rows exist).
pub fn emit_figures(summary: &Path, out_dir: &Path) -> Result<Vec<FigureInfo>, HarnessError> {
    let rows = read_summary(summary)?;
    if rows.is_empty() {
        return Err(HarnessError::Figure(format!(
            "{}: no data rows",
            summary.display()
        )));
    }
    fs::create_dir_all(out_dir)?;
    let fields_dir = summary.parent().unwrap_or(Path::new("."));
    let mut figures = Vec::new();

    // fig1: per-dx final profiles (one representative run per dx).
    {
        let mut dxs: Vec<f64> = rows.iter().map(|r| r.dx_km).collect();
        dxs.sort_by(f64::total_cmp);
        dxs.dedup();
        let mut series = Vec::new();
        let mut consumed = 0;
        for dx in dxs {
            let pick = rows.iter().filter(|r| r.dx_km == dx).min_by(|a, b| {
                (a.dt_s, &a.sequence)
                    .partial_cmp(&(b.dt_s, &b.sequence))
                    .unwrap()
            });
            let Some(row) = pick else { continue };
            let key = scenario_key_str(&row.sequence, row.dx_km, row.dt_s);
            let path = fields_dir.join(format!("fields_{key}.csv"));
            match read_fields_csv(&path) {
                Ok(profile) => {
                    consumed += 1;
                    series.push(Series {
                        label: format!("dx = {dx} km"),
                        points: profile.x_km.into_iter().zip(profile.o3).collect(),
                        line: true,
                    });
                }
                Err(_) => {
                    eprintln!(
                        "warning: fig1: missing or unreadable {}, skipping dx = {dx} km",
                        path.display()
                    );
                }
            }
        }
        if let Some(info) = write_figure(
            out_dir,
            "fig1_profiles.svg",
            &PlotSpec {
                title: "Final O3 profiles by grid spacing".into(),
                x_label: "x [km]".into(),
                y_label: "O3 concentration".into(),
                log_x: false,
                log_y: false,
            },
            &series,
            consumed,
        )? {
            figures.push(info);
        }
    }

    // fig2: rrms_mean vs dx, one series per sequence, all rows.
    {
        let series = per_sequence_series(&rows, |r| (r.dx_km, r.rrms_mean), |_| true);
        let consumed = rows.len();
        if let Some(info) = write_figure(
            out_dir,
            "fig2_rrms_vs_dx.svg",
            &PlotSpec {
                title: "Error vs grid spacing".into(),
                x_label: "dx [km]".into(),
                y_label: "species-mean RRMS".into(),
                log_x: true,
                log_y: true,
            },
            &series,
            consumed,
        )? {
            figures.push(info);
        }
    }

    // fig3: rrms_mean vs dt for the Godunov orderings at dx = 180 km.
    {
        let select = |r: &SummaryRow| (r.dx_km - 180.0).abs() < 1e-9 && is_godunov(&r.sequence);
        let series = per_sequence_series(&rows, |r| (r.dt_s, r.rrms_mean), select);
        let consumed = rows.iter().filter(|r| select(r)).count();
        if consumed > 0 {
            if let Some(info) = write_figure(
                out_dir,
                "fig3_rrms_vs_dt.svg",
                &PlotSpec {
                    title: "Godunov orderings at dx = 180 km".into(),
                    x_label: "dt [s]".into(),
                    y_label: "species-mean RRMS".into(),
                    log_x: true,
                    log_y: true,
                },
                &series,
                consumed,
            )? {
                figures.push(info);
            }
        }
    }

    // fig4: transport-only analog of fig2.
    {
        let select = |r: &SummaryRow| r.sequence == "transport_only";
        let series = per_sequence_series(&rows, |r| (r.dx_km, r.rrms_mean), select);
        let consumed = rows.iter().filter(|r| select(r)).count();
        if consumed > 0 {
            if let Some(info) = write_figure(
                out_dir,
                "fig4_transport_only.svg",
                &PlotSpec {
                    title: "Transport-only error vs grid spacing".into(),
                    x_label: "dx [km]".into(),
                    y_label: "species-mean RRMS".into(),
                    log_x: true,
                    log_y: true,
                },
                &series,
                consumed,
            )? {
                figures.push(info);
            }
        }
    }

    Ok(figures)
}

fn per_sequence_series(
    rows: &[SummaryRow],
    point: impl Fn(&SummaryRow) -> (f64, f64),
    select: impl Fn(&SummaryRow) -> bool,
) -> Vec<Series> {
    let mut labels: Vec<&str> = rows
        .iter()
        .filter(|r| select(r))
        .map(|r| r.sequence.as_str())
        .collect();
    labels.sort_unstable();
    labels.dedup();
    labels
        .iter()
        .map(|&label| Series {
            label: label.to_string(),
            points: rows
                .iter()
                .filter(|r| r.sequence == label && select(r))
                .map(&point)
                .collect(),
            line: false,
        })
        .collect()
}

fn scenario_key_str(sequence: &str, dx_km: f64, dt_s: f64) -> String {
    match splitlab_core::splitting::SplitSequence::parse(sequence) {
        Some(seq) => scenario_key(seq, dx_km, dt_s),
        None => format!("{sequence}_dx{dx_km}_dt{dt_s}"),
    }
}
