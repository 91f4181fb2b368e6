use std::fmt::Write as _;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub traces_per_class: usize,
    pub accuracy: f64,
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

/// Accuracy (%) against traces per class as a standalone SVG document.
pub fn learning_curve_svg(title: &str, points: &[CurvePoint]) -> String {
    let max_x = points
        .iter()
        .map(|p| p.traces_per_class)
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let x = |v: f64| MARGIN + v / max_x * (WIDTH - 2.0 * MARGIN);
    let y = |acc: f64| HEIGHT - MARGIN - acc * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (x(0.0), x(max_x), y(0.0), y(1.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} V{y0} H{x1}" fill="none" stroke="black"/>"#
    );
    for tick in 0..=5 {
        let acc = f64::from(tick) / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y(acc) + 4.0,
            tick * 20
        );
    }
    for p in points {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            x(p.traces_per_class as f64),
            y0 + 16.0,
            p.traces_per_class
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">Traces per class</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">Accuracy (%)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    let coords: Vec<String> = points
        .iter()
        .map(|p| format!("{:.1},{:.1}", x(p.traces_per_class as f64), y(p.accuracy)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        coords.join(" ")
    );
    for c in &coords {
        let (cx, cy) = c.split_once(',').unwrap_or(("0", "0"));
        let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="steelblue"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_marker_per_point() {
        let pts = [
            CurvePoint {
                traces_per_class: 10,
                accuracy: 0.5,
            },
            CurvePoint {
                traces_per_class: 20,
                accuracy: 0.75,
            },
        ];
        let svg = learning_curve_svg("a<b", &pts);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
