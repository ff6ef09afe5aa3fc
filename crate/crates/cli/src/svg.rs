//! Minimal static SVG rendering: line plots and residual heat maps.
//! No external services; byte-identical output for identical inputs.

use std::fmt::Write as _;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    /// Vertical dashed markers (position, label).
    pub markers: Vec<(f64, String)>,
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

impl LinePlot {
    pub fn render(&self) -> String {
        let (x_lo, x_hi) = nice_range(
            self.points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
            self.points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        );
        let (y_lo, y_hi) = nice_range(
            self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        );
        let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut s = String::new();
        let _ = write!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="12">"#
        );
        let _ = write!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = write!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            xml_escape(&self.title)
        );

        // Axes box and ticks.
        let _ = write!(
            s,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            WIDTH - MARGIN_L - MARGIN_R,
            HEIGHT - MARGIN_T - MARGIN_B
        );
        for i in 0..=5 {
            let fx = x_lo + (x_hi - x_lo) * i as f64 / 5.0;
            let fy = y_lo + (y_hi - y_lo) * i as f64 / 5.0;
            let _ = write!(
                s,
                r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="black"/>"#,
                px(fx),
                HEIGHT - MARGIN_B,
                HEIGHT - MARGIN_B + 5.0
            );
            let _ = write!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                px(fx),
                HEIGHT - MARGIN_B + 20.0,
                format_tick(fx)
            );
            let _ = write!(
                s,
                r#"<line x1="{1:.1}" y1="{0:.1}" x2="{2:.1}" y2="{0:.1}" stroke="black"/>"#,
                py(fy),
                MARGIN_L - 5.0,
                MARGIN_L
            );
            let _ = write!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                MARGIN_L - 8.0,
                py(fy) + 4.0,
                format_tick(fy)
            );
        }
        let _ = write!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 10.0,
            xml_escape(&self.x_label)
        );
        let _ = write!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            xml_escape(&self.y_label)
        );

        // Polyline.
        let mut path = String::new();
        for (i, &(x, y)) in self.points.iter().enumerate() {
            let _ = write!(path, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, px(x), py(y));
        }
        let _ = write!(s, r##"<path d="{path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##);

        // Markers.
        for (x, label) in &self.markers {
            if *x >= x_lo && *x <= x_hi {
                let _ = write!(
                    s,
                    r##"<line x1="{0:.1}" y1="{MARGIN_T}" x2="{0:.1}" y2="{1:.1}" stroke="#d62728" stroke-dasharray="5,4"/>"##,
                    px(*x),
                    HEIGHT - MARGIN_B
                );
                let _ = write!(
                    s,
                    r##"<text x="{:.1}" y="{:.1}" fill="#d62728">{}</text>"##,
                    px(*x) + 4.0,
                    MARGIN_T + 14.0,
                    xml_escape(label)
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Heat map of log10(scaled residual) on the (t, r-fraction) grid.
pub struct HeatMap {
    pub title: String,
    pub t_values: Vec<f64>,
    pub r_fractions: Vec<f64>,
    /// Row-major values, one row per t.
    pub values: Vec<f64>,
}

impl HeatMap {
    pub fn render(&self) -> String {
        let n_t = self.t_values.len();
        let n_r = self.r_fractions.len();
        let mut s = String::new();
        let _ = write!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="12">"#
        );
        let _ = write!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = write!(
            s,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            xml_escape(&self.title)
        );
        let logs: Vec<f64> = self
            .values
            .iter()
            .map(|v| v.abs().max(1e-300).log10())
            .collect();
        let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(lo + 1e-9);
        let cell_w = (WIDTH - MARGIN_L - MARGIN_R) / n_r as f64;
        let cell_h = (HEIGHT - MARGIN_T - MARGIN_B) / n_t as f64;
        for i in 0..n_t {
            for j in 0..n_r {
                let v = (logs[i * n_r + j] - lo) / (hi - lo);
                let (r, g, b) = viridis_like(v);
                let _ = write!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                    MARGIN_L + j as f64 * cell_w,
                    MARGIN_T + i as f64 * cell_h,
                    cell_w + 0.5,
                    cell_h + 0.5
                );
            }
        }
        for (i, t) in self.t_values.iter().enumerate() {
            let _ = write!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">t={}</text>"#,
                MARGIN_L - 6.0,
                MARGIN_T + (i as f64 + 0.6) * cell_h,
                format_tick(*t)
            );
        }
        let _ = write!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">r / r_edge (log10 color scale {:.1} .. {:.1})</text>"#,
            WIDTH / 2.0,
            HEIGHT - 10.0,
            lo,
            hi
        );
        s.push_str("</svg>\n");
        s
    }
}

fn viridis_like(v: f64) -> (u8, u8, u8) {
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 * (0.267 + 0.713 * v)) as u8;
    let g = (255.0 * (0.005 + 0.90 * (1.0 - (v - 0.6) * (v - 0.6) * 2.0).max(0.0))) as u8;
    let b = (255.0 * (0.329 + 0.43 * (1.0 - v))) as u8;
    (r, g, b)
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 0.01 && v.abs() < 10000.0 {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
