//! Static SVG emission for the CSV artifacts: line charts and heatmaps.
//!
//! Plotting is a convenience layer with no physics in it; the CSVs are the
//! contract of record. Output is deterministic: fixed canvas, fixed palette,
//! fixed float formatting, no timestamps.

use crate::error::{Error, Result};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 58.0;

/// Line colors, cycled in order.
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// One named polyline.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw dashed instead of solid; used to overlay paired models.
    pub dash: bool,
    /// Palette index; defaults to the series position.
    pub color: Option<usize>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            dash: false,
            color: None,
        }
    }
}

/// A complete line chart: every series drawn in shared axes with a legend.
#[derive(Clone, Debug, Default)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// A dense matrix rendered as colored cells, row 0 at the bottom.
#[derive(Clone, Debug)]
pub struct HeatmapSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// values[row][col]; rows must share one length.
    pub values: Vec<Vec<f64>>,
    /// Color on a log10 scale, floored six decades under the maximum. Meant
    /// for matrix elements spanning many orders of magnitude.
    pub log_scale: bool,
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Shortest-roundtrip float text, deterministic across runs.
fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Tick positions at 1/2/5 x 10^k spacing covering [lo, hi].
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target.max(1) as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let normalized = raw / magnitude;
    let step = if normalized <= 1.0 {
        1.0
    } else if normalized <= 2.0 {
        2.0
    } else if normalized <= 5.0 {
        5.0
    } else {
        10.0
    } * magnitude;
    let mut ticks = Vec::new();
    let mut t = (lo / step).ceil() * step;
    while t <= hi + 1e-9 * span {
        // snap near-zero ticks so the label prints "0", not "-1.2e-17"
        ticks.push(if t.abs() < 1e-12 * span { 0.0 } else { t });
        t += step;
    }
    ticks
}

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x_lo) / (self.x_hi - self.x_lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (v - self.y_lo) / (self.y_hi - self.y_lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_open(out: &mut String) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
}

fn draw_axes(out: &mut String, frame: &Frame, spec_title: &str, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (x0 + x1) / 2.0,
        esc(spec_title)
    ));
    for t in nice_ticks(frame.x_lo, frame.x_hi, 8) {
        let px = frame.x(t);
        out.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{y0:.1}\" x2=\"{px:.1}\" y2=\"{y1:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
            y0 + 18.0,
            fmt(t)
        ));
    }
    for t in nice_ticks(frame.y_lo, frame.y_hi, 6) {
        let py = frame.y(t);
        out.push_str(&format!(
            "<line x1=\"{x0:.1}\" y1=\"{py:.1}\" x2=\"{x1:.1}\" y2=\"{py:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"12\">{}</text>\n",
            x0 - 8.0,
            py + 4.0,
            fmt(t)
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"black\" stroke-width=\"1\"/>\n",
        x1 - x0,
        y0 - y1
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        esc(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 20 {:.1})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(y_label)
    ));
}

/// Render a multi-series line chart.
pub fn line_chart(spec: &ChartSpec) -> Result<String> {
    if spec.series.is_empty() {
        return Err(Error::Validation("line chart needs at least one series".into()));
    }
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for series in &spec.series {
        if series.points.is_empty() {
            return Err(Error::Validation(format!("series {:?} is empty", series.label)));
        }
        for &(x, y) in &series.points {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Validation(format!(
                    "series {:?} contains a non-finite point ({x}, {y})",
                    series.label
                )));
            }
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi <= y_lo {
        // flat data: open a symmetric band so the line sits mid-plot
        let pad = if y_lo == 0.0 { 1.0 } else { y_lo.abs() * 0.1 };
        y_hi = y_lo + pad;
        y_lo -= pad;
    } else {
        let pad = (y_hi - y_lo) * 0.05;
        y_lo -= pad;
        y_hi += pad;
    }
    let frame = Frame { x_lo, x_hi, y_lo, y_hi };

    let mut out = String::new();
    svg_open(&mut out);
    draw_axes(&mut out, &frame, &spec.title, &spec.x_label, &spec.y_label);
    for (i, series) in spec.series.iter().enumerate() {
        let color = PALETTE[series.color.unwrap_or(i) % PALETTE.len()];
        let dash = if series.dash { " stroke-dasharray=\"7 4\"" } else { "" };
        let mut points = String::new();
        for &(x, y) in &series.points {
            points.push_str(&format!("{:.2},{:.2} ", frame.x(x), frame.y(y)));
        }
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>\n",
            points.trim_end()
        ));
    }
    // legend, top-right inside the frame
    let lx = WIDTH - MARGIN_RIGHT - 180.0;
    for (i, series) in spec.series.iter().enumerate() {
        let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let color = PALETTE[series.color.unwrap_or(i) % PALETTE.len()];
        let dash = if series.dash { " stroke-dasharray=\"7 4\"" } else { "" };
        out.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"2\"{dash}/>\n",
            lx + 24.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\">{}</text>\n",
            lx + 30.0,
            ly + 4.0,
            esc(&series.label)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Eleven-stop perceptual color ramp, dark to bright.
const RAMP: [(f64, f64, f64); 11] = [
    (0.267, 0.005, 0.329),
    (0.283, 0.141, 0.458),
    (0.254, 0.265, 0.530),
    (0.207, 0.372, 0.553),
    (0.164, 0.471, 0.558),
    (0.128, 0.567, 0.551),
    (0.135, 0.659, 0.518),
    (0.267, 0.749, 0.441),
    (0.478, 0.821, 0.318),
    (0.741, 0.873, 0.150),
    (0.993, 0.906, 0.144),
];

fn ramp_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t.floor() as usize).min(RAMP.len() - 2);
    let f = t - i as f64;
    let mix = |a: f64, b: f64| ((a + (b - a) * f) * 255.0).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(RAMP[i].0, RAMP[i + 1].0),
        mix(RAMP[i].1, RAMP[i + 1].1),
        mix(RAMP[i].2, RAMP[i + 1].2)
    )
}

/// Render a matrix heatmap with integer-indexed axes.
pub fn heatmap(spec: &HeatmapSpec) -> Result<String> {
    let rows = spec.values.len();
    if rows == 0 {
        return Err(Error::Validation("heatmap needs at least one row".into()));
    }
    let cols = spec.values[0].len();
    if cols == 0 || spec.values.iter().any(|r| r.len() != cols) {
        return Err(Error::Validation(
            "heatmap rows must be non-empty and of equal length".into(),
        ));
    }
    let mut max = 0.0f64;
    for row in &spec.values {
        for &v in row {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!(
                    "heatmap values must be finite and >= 0, got {v}"
                )));
            }
            max = max.max(v);
        }
    }
    if max == 0.0 {
        max = 1.0;
    }
    let floor = max * 1e-6;
    let normalize = |v: f64| -> f64 {
        if spec.log_scale {
            let v = v.max(floor);
            (v / floor).log10() / (max / floor).log10()
        } else {
            v / max
        }
    };

    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let cell_w = (x1 - x0) / cols as f64;
    let cell_h = (y0 - y1) / rows as f64;

    let mut out = String::new();
    svg_open(&mut out);
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        (x0 + x1) / 2.0,
        esc(&spec.title)
    ));
    for (r, row) in spec.values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let px = x0 + c as f64 * cell_w;
            // row 0 drawn at the bottom
            let py = y0 - (r + 1) as f64 * cell_h;
            out.push_str(&format!(
                "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{cell_w:.2}\" height=\"{cell_h:.2}\" \
                 fill=\"{}\"><title>({r}, {c}): {}</title></rect>\n",
                ramp_color(normalize(v)),
                fmt(v)
            ));
        }
    }
    for c in 0..cols {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">{c}</text>\n",
            x0 + (c as f64 + 0.5) * cell_w,
            y0 + 18.0
        ));
    }
    for r in 0..rows {
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"12\">{r}</text>\n",
            x0 - 8.0,
            y0 - (r as f64 + 0.5) * cell_h + 4.0
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"black\" stroke-width=\"1\"/>\n",
        x1 - x0,
        y0 - y1
    ));
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        esc(&spec.x_label)
    ));
    out.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\" \
         transform=\"rotate(-90 20 {:.1})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(&spec.y_label)
    ));
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_chart() -> ChartSpec {
        ChartSpec {
            title: "demo".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![
                Series::new("one", (0..20).map(|i| (i as f64, (i as f64 * 0.3).sin())).collect()),
                Series {
                    dash: true,
                    color: Some(0),
                    ..Series::new("two", (0..20).map(|i| (i as f64, (i as f64 * 0.3).cos())).collect())
                },
            ],
        }
    }

    #[test]
    fn line_chart_is_deterministic_and_well_formed() {
        let a = line_chart(&demo_chart()).unwrap();
        let b = line_chart(&demo_chart()).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("one") && a.contains("two"));
        // the paired series reuses color 0 and draws dashed
        assert_eq!(a.matches("stroke-dasharray").count(), 2); // line + legend
        assert_eq!(a.matches(PALETTE[0]).count(), 4);
        assert_eq!(a.matches(PALETTE[1]).count(), 0);
    }

    #[test]
    fn line_chart_rejects_bad_input() {
        assert!(line_chart(&ChartSpec::default()).is_err());
        let mut spec = demo_chart();
        spec.series[0].points[3].1 = f64::NAN;
        assert!(line_chart(&spec).is_err());
    }

    #[test]
    fn flat_series_still_renders() {
        let spec = ChartSpec {
            title: "flat".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series::new("constant", vec![(0.0, 0.5), (1.0, 0.5)])],
        };
        assert!(line_chart(&spec).unwrap().contains("<polyline"));
    }

    #[test]
    fn heatmap_draws_every_cell() {
        let spec = HeatmapSpec {
            title: "cells".into(),
            x_label: "col".into(),
            y_label: "row".into(),
            values: vec![vec![0.0, 0.5], vec![1.0, 2.0], vec![3.0, 4.0]],
            log_scale: false,
        };
        let svg = heatmap(&spec).unwrap();
        assert_eq!(svg.matches("<rect").count(), 6 + 2); // cells + background + frame
        let again = heatmap(&spec).unwrap();
        assert_eq!(svg, again);
    }

    #[test]
    fn heatmap_log_scale_separates_decades() {
        let spec = HeatmapSpec {
            title: "log".into(),
            x_label: "c".into(),
            y_label: "r".into(),
            values: vec![vec![1e-9, 1.0]],
            log_scale: true,
        };
        let svg = heatmap(&spec).unwrap();
        // the tiny element must land at the bottom of the ramp, the unit one
        // at the top
        assert!(svg.contains(&ramp_color(0.0)));
        assert!(svg.contains(&ramp_color(1.0)));
        assert!(heatmap(&HeatmapSpec {
            values: vec![vec![-1.0]],
            ..spec
        })
        .is_err());
    }

    #[test]
    fn ticks_cover_the_range_evenly() {
        let ticks = nice_ticks(0.0, 1.0, 8);
        assert!(ticks.len() >= 5 && ticks.len() <= 12);
        assert!(ticks.windows(2).all(|w| w[1] > w[0]));
        assert!(ticks[0] >= 0.0 && *ticks.last().unwrap() <= 1.0 + 1e-12);
        // degenerate span collapses to a single tick rather than panicking
        assert_eq!(nice_ticks(2.0, 2.0, 5), vec![2.0]);
    }
}
