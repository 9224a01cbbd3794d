//! Deterministic CSV and SVG emission for trajectories and regime maps.
//!
//! CSV columns are `t,D_0,S_0,H_0[,D_1,S_1,H_1,...]` with values printed to
//! 9 significant digits. SVG output is a standalone 800x600 document with
//! axes auto-scaled to the data (5% margins), one polyline per selected
//! series, five tick labels per axis, and a legend; all coordinates use fixed
//! 3-decimal precision so equal trajectories give byte-identical bytes.

use crate::error::{Error, Result};
use crate::integrator::{CultureSeries, TrajectorySet};
use crate::sweep::RegimeMap;

/// Shortest decimal form of `x` carrying `sig` significant digits: plain
/// positional notation for moderate exponents, `me<exp>` otherwise, trailing
/// zeros trimmed.
pub fn format_significant(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let formatted = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = formatted.split_once('e').expect("float e-format");
    let exp: i32 = exp.parse().expect("float exponent");
    let neg = mantissa.starts_with('-');
    let digits: Vec<u8> = mantissa.bytes().filter(|b| b.is_ascii_digit()).collect();
    let digits = String::from_utf8(digits).expect("ascii digits");

    let body = if (0..15).contains(&exp) {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            format!("{digits}{}", "0".repeat(int_len - digits.len()))
        } else {
            let frac = digits[int_len..].trim_end_matches('0');
            if frac.is_empty() {
                digits[..int_len].to_string()
            } else {
                format!("{}.{}", &digits[..int_len], frac)
            }
        }
    } else if (-4..0).contains(&exp) {
        let frac = digits.trim_end_matches('0');
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), frac)
    } else {
        let rest = digits[1..].trim_end_matches('0');
        if rest.is_empty() {
            format!("{}e{exp}", &digits[..1])
        } else {
            format!("{}.{rest}e{exp}", &digits[..1])
        }
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// One `t` column plus (D, S, H) per culture, 9 significant digits.
pub fn export_trajectory_csv(traj: &TrajectorySet) -> String {
    let mut out = String::from("t");
    for k in 0..traj.culture_count() {
        out.push_str(&format!(",D_{k},S_{k},H_{k}"));
    }
    out.push('\n');
    for (i, &t) in traj.times.iter().enumerate() {
        out.push_str(&format_significant(t, 9));
        for series in &traj.cultures {
            for v in [series.d[i], series.s[i], series.h[i]] {
                out.push(',');
                out.push_str(&format_significant(v, 9));
            }
        }
        out.push('\n');
    }
    out
}

/// Reads a trajectory back from the CSV form emitted by
/// [`export_trajectory_csv`]. Events and divergence markers are not part of
/// the format, so the result carries none.
pub fn parse_trajectory_csv(text: &str) -> Result<TrajectorySet> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".to_string()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"t") || !(columns.len() - 1).is_multiple_of(3) || columns.len() < 4
    {
        return Err(Error::Parse {
            line: 1,
            message: "expected header t,D_0,S_0,H_0[,...]".to_string(),
        });
    }
    let cultures = (columns.len() - 1) / 3;
    for k in 0..cultures {
        let expected = [format!("D_{k}"), format!("S_{k}"), format!("H_{k}")];
        for (j, name) in expected.iter().enumerate() {
            if columns[1 + 3 * k + j] != name {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected column {name}"),
                });
            }
        }
    }

    let mut traj = TrajectorySet {
        times: Vec::new(),
        cultures: vec![CultureSeries::default(); cultures],
        events: Vec::new(),
        divergence: None,
    };
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {} fields, got {}", columns.len(), fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("not a number: '{s}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "values must be finite".to_string(),
                });
            }
            Ok(v)
        };
        let t = parse(fields[0])?;
        if let Some(&prev) = traj.times.last() {
            if t <= prev {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "times must be strictly increasing".to_string(),
                });
            }
        }
        traj.times.push(t);
        for k in 0..cultures {
            traj.cultures[k].d.push(parse(fields[1 + 3 * k])?);
            traj.cultures[k].s.push(parse(fields[2 + 3 * k])?);
            traj.cultures[k].h.push(parse(fields[3 + 3 * k])?);
        }
    }
    if traj.times.is_empty() {
        return Err(Error::InvalidInput("CSV has no data rows".to_string()));
    }
    Ok(traj)
}

/// Axis-value columns in canonical cell order plus the regime label.
pub fn export_regime_map_csv(map: &RegimeMap) -> String {
    let mut out = String::new();
    for (i, axis) in map.axes.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&axis.path.to_string());
    }
    out.push_str(",label\n");
    for (i, label) in map.labels.iter().enumerate() {
        for (j, v) in map.cell_values(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_significant(*v, 9));
        }
        out.push_str(&format!(",{label}\n"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    D,
    S,
    H,
}

impl Variable {
    pub fn label(&self, culture: usize) -> String {
        match self {
            Variable::D => format!("D_{culture}"),
            Variable::S => format!("S_{culture}"),
            Variable::H => format!("H_{culture}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesRef {
    pub culture: usize,
    pub variable: Variable,
}

/// Which (culture, variable) series a plot shows, in drawing order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeriesSelection {
    pub series: Vec<SeriesRef>,
}

impl SeriesSelection {
    /// D and S of every culture.
    pub fn d_and_s(traj: &TrajectorySet) -> Self {
        let mut series = Vec::new();
        for culture in 0..traj.culture_count() {
            series.push(SeriesRef {
                culture,
                variable: Variable::D,
            });
            series.push(SeriesRef {
                culture,
                variable: Variable::S,
            });
        }
        SeriesSelection { series }
    }
}

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 600.0;
const PLOT_LEFT: f64 = 60.0;
const PLOT_RIGHT: f64 = 620.0;
const PLOT_TOP: f64 = 20.0;
const PLOT_BOTTOM: f64 = 550.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// Expands a possibly degenerate [lo, hi] by 1 on each side, then by 5%.
fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    let (lo, hi) = if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    };
    let margin = 0.05 * (hi - lo);
    (lo - margin, hi + margin)
}

/// Renders the selected series as a standalone SVG line chart.
pub fn render_svg_plot(traj: &TrajectorySet, selection: &SeriesSelection) -> Result<String> {
    if selection.series.is_empty() {
        return Err(Error::InvalidInput("empty series selection".to_string()));
    }
    if traj.sample_count() == 0 {
        return Err(Error::InvalidInput("empty trajectory".to_string()));
    }
    for s in &selection.series {
        if s.culture >= traj.culture_count() {
            return Err(Error::InvalidInput(format!(
                "selection references culture {} of {}",
                s.culture,
                traj.culture_count()
            )));
        }
    }

    let values_of = |s: &SeriesRef| -> &[f64] {
        let c = &traj.cultures[s.culture];
        match s.variable {
            Variable::D => &c.d,
            Variable::S => &c.s,
            Variable::H => &c.h,
        }
    };

    let (x_lo, x_hi) = padded_range(traj.times[0], *traj.times.last().expect("non-empty"));
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in &selection.series {
        for &v in values_of(s) {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    let (y_lo, y_hi) = padded_range(y_min, y_max);

    let sx = |x: f64| PLOT_LEFT + (x - x_lo) / (x_hi - x_lo) * (PLOT_RIGHT - PLOT_LEFT);
    let sy = |y: f64| PLOT_BOTTOM - (y - y_lo) / (y_hi - y_lo) * (PLOT_BOTTOM - PLOT_TOP);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" \
         viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{PLOT_LEFT}\" y=\"{PLOT_TOP}\" width=\"{}\" height=\"{}\" \
         fill=\"none\" stroke=\"black\"/>\n",
        PLOT_RIGHT - PLOT_LEFT,
        PLOT_BOTTOM - PLOT_TOP
    ));

    // 5 evenly spaced ticks per axis
    for i in 0..5 {
        let frac = i as f64 / 4.0;
        let xv = x_lo + frac * (x_hi - x_lo);
        let xp = sx(xv);
        svg.push_str(&format!(
            "<line x1=\"{xp:.3}\" y1=\"{PLOT_BOTTOM}\" x2=\"{xp:.3}\" y2=\"{}\" stroke=\"black\"/>\n",
            PLOT_BOTTOM + 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{xp:.3}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>\n",
            PLOT_BOTTOM + 20.0,
            format_significant(xv, 6)
        ));
        let yv = y_lo + frac * (y_hi - y_lo);
        let yp = sy(yv);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{yp:.3}\" x2=\"{PLOT_LEFT}\" y2=\"{yp:.3}\" stroke=\"black\"/>\n",
            PLOT_LEFT - 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.3}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"12\">{}</text>\n",
            PLOT_LEFT - 9.0,
            yp + 4.0,
            format_significant(yv, 6)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.3}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">t</text>\n",
        0.5 * (PLOT_LEFT + PLOT_RIGHT),
        PLOT_BOTTOM + 40.0
    ));

    for (i, s) in selection.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (j, &t) in traj.times.iter().enumerate() {
            if j > 0 {
                points.push(' ');
            }
            points.push_str(&format!("{:.3},{:.3}", sx(t), sy(values_of(s)[j])));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{points}\"/>\n"
        ));
    }

    // legend
    for (i, s) in selection.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = 40.0 + 22.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"640\" y1=\"{y:.3}\" x2=\"668\" y2=\"{y:.3}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"674\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            y + 4.0,
            s.variable.label(s.culture)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
