//! Deterministic SVG rendering of sweep results (no timestamps, fixed
//! palette, shortest round-trip number formatting), so identical inputs
//! produce byte-identical plots.

use crate::csv::{fmt_f64, parse_csv};
use crate::Result;

const WIDTH: f64 = 680.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn axis_ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let lo_exp = lo.log10().floor() as i32;
        let hi_exp = hi.log10().ceil() as i32;
        (lo_exp..=hi_exp).map(|e| 10f64.powi(e)).collect()
    } else {
        let span = hi - lo;
        if span <= 0.0 {
            return vec![lo];
        }
        let step = 10f64.powf((span / 4.0).log10().floor());
        let step = if span / step > 8.0 {
            step * 2.0
        } else if span / step < 3.0 {
            step / 2.0
        } else {
            step
        };
        let mut ticks = Vec::new();
        let mut t = (lo / step).ceil() * step;
        while t <= hi + step * 1e-9 {
            ticks.push(t);
            t += step;
        }
        ticks
    }
}

/// Render a line plot as standalone SVG.
pub fn render(spec: &PlotSpec) -> String {
    let mut points: Vec<(f64, f64)> = Vec::new();
    for s in &spec.series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() && (!spec.log_x || x > 0.0) && (!spec.log_y || y > 0.0)
            {
                points.push((x, y));
            }
        }
    }
    let (x_lo, x_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let (y_lo, y_hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    let pad = |lo: f64, hi: f64, log: bool| -> (f64, f64) {
        if !lo.is_finite() || !hi.is_finite() {
            return (0.0, 1.0);
        }
        if log {
            (lo / 1.5, hi * 1.5)
        } else if hi > lo {
            let pad = (hi - lo) * 0.06;
            (lo - pad, hi + pad)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x_lo, x_hi) = pad(x_lo, x_hi, spec.log_x);
    let (y_lo, y_hi) = pad(y_lo, y_hi, spec.log_y);
    let tx = |x: f64| -> f64 {
        let (a, b) = if spec.log_x {
            (x_lo.log10(), x_hi.log10())
        } else {
            (x_lo, x_hi)
        };
        let v = if spec.log_x { x.log10() } else { x };
        MARGIN_L + (v - a) / (b - a) * (WIDTH - MARGIN_L - MARGIN_R)
    };
    let ty = |y: f64| -> f64 {
        let (a, b) = if spec.log_y {
            (y_lo.log10(), y_hi.log10())
        } else {
            (y_lo, y_hi)
        };
        let v = if spec.log_y { y.log10() } else { y };
        HEIGHT - MARGIN_B - (v - a) / (b - a) * (HEIGHT - MARGIN_T - MARGIN_B)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        spec.title
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN_B
    ));
    for t in axis_ticks(x_lo, x_hi, spec.log_x) {
        if t < x_lo || t > x_hi {
            continue;
        }
        let x = tx(t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            HEIGHT - MARGIN_B + 18.0,
            fmt_f64(t)
        ));
    }
    for t in axis_ticks(y_lo, y_hi, spec.log_y) {
        if t < y_lo || t > y_hi {
            continue;
        }
        let y = ty(t);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n",
            MARGIN_L - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 8.0,
            y + 4.0,
            fmt_f64(t)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 14.0,
        spec.x_label
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        spec.y_label
    ));

    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| {
                x.is_finite()
                    && y.is_finite()
                    && (!spec.log_x || *x > 0.0)
                    && (!spec.log_y || *y > 0.0)
            })
            .map(|&(x, y)| format!("{},{}", tx(x), ty(y)))
            .collect();
        if path.len() > 1 {
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
        } else if path.len() == 1 {
            let xy: Vec<&str> = path[0].split(',').collect();
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\"/>\n",
                xy[0], xy[1]
            ));
        }
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"3\" fill=\"{color}\"/>\n",
            WIDTH - MARGIN_R - 180.0,
            MARGIN_T + 16.0 * i as f64 + 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_R - 160.0,
            MARGIN_T + 16.0 * i as f64 + 9.0,
            series.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn column(rows: &[Vec<String>], name: &str) -> Option<usize> {
    rows.first()?.iter().position(|h| h == name)
}

/// Bound and measured distance against the margin `epsilon`, for the
/// first instance of a window-perturbation grid sweep.
pub fn render_theorem1_grid(csv_text: &str) -> Result<Option<String>> {
    let rows = parse_csv(csv_text);
    if rows.len() < 2 {
        return Ok(None);
    }
    let instance = column(&rows, "instance")
        .ok_or_else(|| crate::Error::InvalidParameter("grid csv missing `instance`".into()))?;
    let eps_col = column(&rows, "epsilon")
        .ok_or_else(|| crate::Error::InvalidParameter("grid csv missing `epsilon`".into()))?;
    let bound_col = column(&rows, "bound")
        .ok_or_else(|| crate::Error::InvalidParameter("grid csv missing `bound`".into()))?;
    let dist_col = column(&rows, "dist_full")
        .ok_or_else(|| crate::Error::InvalidParameter("grid csv missing `dist_full`".into()))?;
    let first = rows[1][instance].clone();
    let picked: Vec<&Vec<String>> = rows[1..]
        .iter()
        .filter(|r| r[instance] == first)
        .collect();
    let mut bound = Vec::new();
    let mut dist = Vec::new();
    for r in picked {
        let e: f64 = r[eps_col].parse().unwrap_or(f64::NAN);
        bound.push((e, r[bound_col].parse().unwrap_or(f64::NAN)));
        dist.push((e, r[dist_col].parse().unwrap_or(f64::NAN)));
    }
    Ok(Some(render(&PlotSpec {
        title: format!("Window-perturbation bound vs margin (instance {first})"),
        x_label: "epsilon (energy)".into(),
        y_label: "trace distance".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series {
                label: "bound".into(),
                points: bound,
            },
            Series {
                label: "measured distance".into(),
                points: dist,
            },
        ],
    })))
}

/// Kernel one-norm grid: numeric and closed form against `r - q`
/// (sharpest available `r` per gap).
pub fn render_kernel_grid(csv_text: &str) -> Result<Option<String>> {
    let rows = parse_csv(csv_text);
    if rows.len() < 2 {
        return Ok(None);
    }
    let gap_col = column(&rows, "r_minus_q")
        .ok_or_else(|| crate::Error::InvalidParameter("kernel csv missing `r_minus_q`".into()))?;
    let r_col = column(&rows, "r")
        .ok_or_else(|| crate::Error::InvalidParameter("kernel csv missing `r`".into()))?;
    let num_col = column(&rows, "one_norm_numeric").ok_or_else(|| {
        crate::Error::InvalidParameter("kernel csv missing `one_norm_numeric`".into())
    })?;
    let closed_col = column(&rows, "one_norm_closed_form").ok_or_else(|| {
        crate::Error::InvalidParameter("kernel csv missing `one_norm_closed_form`".into())
    })?;
    let mut best: std::collections::BTreeMap<u32, (u32, f64, f64)> = Default::default();
    for r in &rows[1..] {
        let gap: u32 = r[gap_col].parse().unwrap_or(0);
        let rr: u32 = r[r_col].parse().unwrap_or(0);
        let numeric: f64 = r[num_col].parse().unwrap_or(f64::NAN);
        let closed: f64 = r[closed_col].parse().unwrap_or(f64::NAN);
        let entry = best.entry(gap).or_insert((rr, numeric, closed));
        if rr > entry.0 {
            *entry = (rr, numeric, closed);
        }
    }
    let numeric: Vec<(f64, f64)> = best.iter().map(|(&g, v)| (g as f64, v.1)).collect();
    let closed: Vec<(f64, f64)> = best.iter().map(|(&g, v)| (g as f64, v.2)).collect();
    Ok(Some(render(&PlotSpec {
        title: "Kernel one-norm: numeric vs closed form".into(),
        x_label: "r - q".into(),
        y_label: "one norm".into(),
        log_x: false,
        log_y: true,
        series: vec![
            Series {
                label: "numeric".into(),
                points: numeric,
            },
            Series {
                label: "closed form".into(),
                points: closed,
            },
        ],
    })))
}

/// Counting comparison: exact distance and both bounds against the
/// window position.
pub fn render_counting(csv_text: &str) -> Result<Option<String>> {
    let rows = parse_csv(csv_text);
    if rows.len() < 2 {
        return Ok(None);
    }
    let e_col = column(&rows, "e_lower")
        .ok_or_else(|| crate::Error::InvalidParameter("counting csv missing `e_lower`".into()))?;
    let d_col = column(&rows, "dist_exact").ok_or_else(|| {
        crate::Error::InvalidParameter("counting csv missing `dist_exact`".into())
    })?;
    let g_col = column(&rows, "gamma_bound").ok_or_else(|| {
        crate::Error::InvalidParameter("counting csv missing `gamma_bound`".into())
    })?;
    let c_col = column(&rows, "counting_bound").ok_or_else(|| {
        crate::Error::InvalidParameter("counting csv missing `counting_bound`".into())
    })?;
    let mut triples: Vec<(f64, f64, f64, f64)> = rows[1..]
        .iter()
        .map(|r| {
            (
                r[e_col].parse().unwrap_or(f64::NAN),
                r[d_col].parse().unwrap_or(f64::NAN),
                r[g_col].parse().unwrap_or(f64::NAN),
                r[c_col].parse().unwrap_or(f64::NAN),
            )
        })
        .collect();
    triples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    Ok(Some(render(&PlotSpec {
        title: "Counting bound vs measured spectrum distance".into(),
        x_label: "window lower edge E (energy)".into(),
        y_label: "trace distance".into(),
        log_x: false,
        log_y: true,
        series: vec![
            Series {
                label: "measured".into(),
                points: triples.iter().map(|t| (t.0, t.1)).collect(),
            },
            Series {
                label: "curvature bound".into(),
                points: triples.iter().map(|t| (t.0, t.2)).collect(),
            },
            Series {
                label: "closed form".into(),
                points: triples.iter().map(|t| (t.0, t.3)).collect(),
            },
        ],
    })))
}

/// Sampled subsystem distance over time for the first initial state.
pub fn render_dynamics_timeseries(csv_text: &str) -> Result<Option<String>> {
    let rows = parse_csv(csv_text);
    if rows.len() < 2 {
        return Ok(None);
    }
    let t_col = column(&rows, "time")
        .ok_or_else(|| crate::Error::InvalidParameter("timeseries csv missing `time`".into()))?;
    let d_col = column(&rows, "distance").ok_or_else(|| {
        crate::Error::InvalidParameter("timeseries csv missing `distance`".into())
    })?;
    let mut points: Vec<(f64, f64)> = rows[1..]
        .iter()
        .map(|r| {
            (
                r[t_col].parse().unwrap_or(f64::NAN),
                r[d_col].parse().unwrap_or(f64::NAN),
            )
        })
        .collect();
    points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    Ok(Some(render(&PlotSpec {
        title: "Subsystem distance along the evolution".into(),
        x_label: "time (inverse energy)".into(),
        y_label: "trace distance".into(),
        log_x: false,
        log_y: false,
        series: vec![Series {
            label: "D(psi_t^S, reference)".into(),
            points,
        }],
    })))
}

/// Render every known results file; unknown or header-only files produce
/// warnings instead of output.
pub fn plot_files(inputs: &[(String, String)]) -> Result<(Vec<(String, String)>, Vec<String>)> {
    let mut outputs = Vec::new();
    let mut warnings = Vec::new();
    for (name, content) in inputs {
        let rendered = match name.as_str() {
            "theorem1_epsilon_grid.csv" => {
                render_theorem1_grid(content)?.map(|svg| ("theorem1_bounds.svg".to_string(), svg))
            }
            "fg_norms.csv" => {
                render_kernel_grid(content)?.map(|svg| ("fg_one_norm.svg".to_string(), svg))
            }
            "counting.csv" => {
                render_counting(content)?.map(|svg| ("counting_bounds.svg".to_string(), svg))
            }
            "dynamics_timeseries.csv" => render_dynamics_timeseries(content)?
                .map(|svg| ("dynamics_timeseries.svg".to_string(), svg)),
            _ => {
                continue;
            }
        };
        match rendered {
            Some(out) => outputs.push(out),
            None => warnings.push(format!("{name}: no data rows, nothing to plot")),
        }
    }
    Ok((outputs, warnings))
}
