//! Per-step run metrics and their canonical CSV form. The CSV is the
//! contract: fixed column order, shortest round-trip float formatting,
//! byte-identical across repeated runs. Plots are best-effort SVG.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("cannot write metrics to `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty series: refusing to emit a file with no rows")]
    EmptySeries,
    #[error("metrics parse error at `{path}` line {line}: {reason}")]
    Parse { path: String, line: usize, reason: String },
}

/// Column order of the metrics CSV. The trailing two columns are empty on
/// every row except the final one, where they record run-level flags.
pub const COLUMNS: [&str; 17] = [
    "step",
    "n",
    "births",
    "deaths",
    "mean_f_true",
    "max_f_true",
    "mean_f_est",
    "value_corr",
    "mean_sigma_gen",
    "mean_sigma_learn",
    "mean_recall",
    "mean_precision",
    "symbol_agreement",
    "mean_cosine",
    "activation_fraction",
    "extinct_at",
    "capped_at",
];

/// One completed step's population aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub n: u64,
    pub births: u64,
    pub deaths: u64,
    pub mean_f_true: f64,
    pub max_f_true: f64,
    pub mean_f_est: f64,
    pub value_corr: f64,
    pub mean_sigma_gen: f64,
    pub mean_sigma_learn: f64,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub symbol_agreement: f64,
    pub mean_cosine: f64,
    pub activation_fraction: f64,
}

/// Initial row plus one row per completed step, with run-level flags.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries {
    pub rows: Vec<MetricsRow>,
    pub extinct_at: Option<u64>,
    pub capped_at: Option<u64>,
}

impl MetricsSeries {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Time-averaged mean true fitness over steps >= `from_step`.
    /// Extinct stretches contribute zero through the absent rows; an
    /// empty window scores 0.
    pub fn mean_f_true_from(&self, from_step: u64, t_steps: u64) -> f64 {
        let total_steps = t_steps.saturating_sub(from_step) + 1;
        if total_steps == 0 {
            return 0.0;
        }
        let sum: f64 = self
            .rows
            .iter()
            .filter(|r| r.step >= from_step)
            .map(|r| r.mean_f_true)
            .sum();
        sum / total_steps as f64
    }

    pub fn survived(&self) -> bool {
        self.extinct_at.is_none() && self.capped_at.is_none()
    }
}

fn fmt_opt(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render the series as CSV text (the canonical byte representation).
pub fn metrics_to_csv(series: &MetricsSeries) -> String {
    let mut out = String::with_capacity(series.rows.len() * 128 + 256);
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    let last = series.rows.len().saturating_sub(1);
    for (i, r) in series.rows.iter().enumerate() {
        let (extinct, capped) = if i == last {
            (fmt_opt(series.extinct_at), fmt_opt(series.capped_at))
        } else {
            (String::new(), String::new())
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            r.n,
            r.births,
            r.deaths,
            r.mean_f_true,
            r.max_f_true,
            r.mean_f_est,
            r.value_corr,
            r.mean_sigma_gen,
            r.mean_sigma_learn,
            r.mean_recall,
            r.mean_precision,
            r.symbol_agreement,
            r.mean_cosine,
            r.activation_fraction,
            extinct,
            capped,
        ));
    }
    out
}

/// Write the series as CSV. Errors on an empty series without creating a
/// file.
pub fn emit_metrics(series: &MetricsSeries, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let path = path.as_ref();
    if series.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    let text = metrics_to_csv(series);
    let mut file = std::fs::File::create(path)
        .map_err(|source| MetricsError::Io { path: path.display().to_string(), source })?;
    file.write_all(text.as_bytes())
        .map_err(|source| MetricsError::Io { path: path.display().to_string(), source })?;
    Ok(())
}

/// Parse a metrics CSV back into a series. Values round-trip exactly.
pub fn parse_metrics(path: impl AsRef<Path>) -> Result<MetricsSeries, MetricsError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| MetricsError::Io { path: path.display().to_string(), source })?;
    parse_metrics_text(&text, &path.display().to_string())
}

fn parse_metrics_text(text: &str, path: &str) -> Result<MetricsSeries, MetricsError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| MetricsError::Parse {
        path: path.to_string(),
        line: 1,
        reason: "missing header".into(),
    })?;
    if header != COLUMNS.join(",") {
        return Err(MetricsError::Parse {
            path: path.to_string(),
            line: 1,
            reason: "unexpected header".into(),
        });
    }
    let mut series = MetricsSeries::default();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(MetricsError::Parse {
                path: path.to_string(),
                line: idx + 1,
                reason: format!("expected {} fields, got {}", COLUMNS.len(), fields.len()),
            });
        }
        let err = |reason: String| MetricsError::Parse {
            path: path.to_string(),
            line: idx + 1,
            reason,
        };
        let pu = |s: &str| s.parse::<u64>().map_err(|e| err(e.to_string()));
        let pf = |s: &str| s.parse::<f64>().map_err(|e| err(e.to_string()));
        series.rows.push(MetricsRow {
            step: pu(fields[0])?,
            n: pu(fields[1])?,
            births: pu(fields[2])?,
            deaths: pu(fields[3])?,
            mean_f_true: pf(fields[4])?,
            max_f_true: pf(fields[5])?,
            mean_f_est: pf(fields[6])?,
            value_corr: pf(fields[7])?,
            mean_sigma_gen: pf(fields[8])?,
            mean_sigma_learn: pf(fields[9])?,
            mean_recall: pf(fields[10])?,
            mean_precision: pf(fields[11])?,
            symbol_agreement: pf(fields[12])?,
            mean_cosine: pf(fields[13])?,
            activation_fraction: pf(fields[14])?,
        });
        if !fields[15].is_empty() {
            series.extinct_at = Some(pu(fields[15])?);
        }
        if !fields[16].is_empty() {
            series.capped_at = Some(pu(fields[16])?);
        }
    }
    if series.rows.is_empty() {
        return Err(MetricsError::Parse {
            path: path.to_string(),
            line: 1,
            reason: "no data rows".into(),
        });
    }
    Ok(series)
}

/// Best-effort line chart of the headline series (population, fitness
/// levels, change rate, agreement) as a standalone SVG.
pub fn emit_plot(series: &MetricsSeries, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let path = path.as_ref();
    if series.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    let svg = render_svg(series);
    std::fs::write(path, svg)
        .map_err(|source| MetricsError::Io { path: path.display().to_string(), source })?;
    Ok(())
}

const PLOT_W: f64 = 900.0;
const PLOT_H: f64 = 420.0;
const MARGIN: f64 = 50.0;

fn render_svg(series: &MetricsSeries) -> String {
    let n_max = series.rows.iter().map(|r| r.n).max().unwrap_or(1).max(1) as f64;
    let f_max = series
        .rows
        .iter()
        .map(|r| r.max_f_true.max(r.mean_f_est))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let sigma_max = series.rows.iter().map(|r| r.mean_sigma_gen).fold(0.0f64, f64::max).max(1e-9);
    let step_max = series.rows.last().map(|r| r.step).unwrap_or(1).max(1) as f64;

    let x = |step: u64| MARGIN + (step as f64 / step_max) * (PLOT_W - 2.0 * MARGIN);
    let y = |frac: f64| PLOT_H - MARGIN - frac.clamp(0.0, 1.0) * (PLOT_H - 2.0 * MARGIN);

    let polyline = |points: &[(f64, f64)], color: &str| {
        let pts: Vec<String> =
            points.iter().map(|(px, py)| format!("{:.2},{:.2}", px, py)).collect();
        format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>",
            pts.join(" ")
        )
    };

    let line_of = |f: &dyn Fn(&MetricsRow) -> f64, scale: f64, color: &str| {
        let pts: Vec<(f64, f64)> =
            series.rows.iter().map(|r| (x(r.step), y(f(r) / scale))).collect();
        polyline(&pts, color)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" \
         viewBox=\"0 0 {PLOT_W} {PLOT_H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"#888\"/>\n",
        PLOT_W - 2.0 * MARGIN,
        PLOT_H - 2.0 * MARGIN
    ));
    svg.push_str(&line_of(&|r| r.n as f64, n_max, "#1f77b4"));
    svg.push('\n');
    svg.push_str(&line_of(&|r| r.mean_f_true, f_max, "#2ca02c"));
    svg.push('\n');
    svg.push_str(&line_of(&|r| r.mean_f_est, f_max, "#d62728"));
    svg.push('\n');
    svg.push_str(&line_of(&|r| r.mean_sigma_gen, sigma_max, "#9467bd"));
    svg.push('\n');
    svg.push_str(&line_of(&|r| r.symbol_agreement, 1.0, "#8c564b"));
    svg.push('\n');
    let legend = [
        ("#1f77b4", format!("N (max {})", n_max)),
        ("#2ca02c", format!("mean f_true (scale {:.3})", f_max)),
        ("#d62728", format!("mean f_est (scale {:.3})", f_max)),
        ("#9467bd", format!("mean sigma_gen (scale {:.3})", sigma_max)),
        ("#8c564b", "symbol agreement".to_string()),
    ];
    for (i, (color, label)) in legend.iter().enumerate() {
        let ly = 14.0 + 14.0 * i as f64;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\
             <text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">{label}</text>\n",
            MARGIN + 4.0,
            ly - 9.0,
            MARGIN + 18.0,
            ly
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">step (0..{})</text>\n",
        PLOT_W / 2.0 - 30.0,
        PLOT_H - MARGIN / 3.0,
        step_max
    ));
    svg.push_str("</svg>\n");
    svg
}
