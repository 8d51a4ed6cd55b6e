//! Minimal dependency-free SVG line charts.

use std::fmt::Write as _;

/// One polyline on a chart.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    /// (x, y) pairs, already sorted by x.
    pub points: Vec<(f64, f64)>,
    /// Number of y-values that were clipped up to the axis floor.
    pub clipped: usize,
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn x_px(x: f64) -> f64 {
    MARGIN_LEFT + x * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
}

fn y_px(y: f64) -> f64 {
    let plot = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    HEIGHT - MARGIN_BOTTOM - y * plot
}

/// Render a fixed-domain ([0,1] x [0,1]) line chart with a legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    svg.push('\n');
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        x_px(0.5),
        escape(title)
    );

    // Axes box and grid lines at quarter steps.
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#dddddd" stroke-width="1"/>"##,
            x_px(0.0),
            y_px(f),
            x_px(1.0),
            y_px(f)
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#dddddd" stroke-width="1"/>"##,
            x_px(f),
            y_px(0.0),
            x_px(f),
            y_px(1.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.2}</text>"#,
            x_px(f),
            y_px(0.0) + 16.0,
            f
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{:.2}</text>"#,
            x_px(0.0) - 6.0,
            y_px(f) + 4.0,
            f
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333333"/>"##,
        x_px(0.0),
        y_px(1.0),
        x_px(1.0) - x_px(0.0),
        y_px(0.0) - y_px(1.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        x_px(0.5),
        HEIGHT - 14.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        y_px(0.5),
        y_px(0.5),
        escape(y_label)
    );

    let mut total_clipped = 0usize;
    for (s, series) in series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        total_clipped += series.clipped;
        if series.points.len() > 1 {
            let path: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", x_px(x), y_px(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
                path.join(" ")
            );
        }
        for &(x, y) in &series.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x_px(x),
                y_px(y)
            );
        }
        // Legend entry.
        let ly = MARGIN_TOP + 14.0 + s as f64 * 18.0;
        let lx = WIDTH - MARGIN_RIGHT + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2.5"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&series.name)
        );
    }
    if total_clipped > 0 {
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="#aa3333">{total_clipped} negative mean(s) drawn at 0</text>"##,
            x_px(0.0),
            HEIGHT - 32.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
