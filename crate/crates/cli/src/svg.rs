//! Minimal log-log line plots as standalone SVG.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesClass {
    Empirical,
    Envelope,
}

impl SeriesClass {
    fn css(&self) -> &'static str {
        match self {
            SeriesClass::Empirical => "empirical",
            SeriesClass::Envelope => "envelope",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub class: SeriesClass,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    fn positive(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn decade_label(e: i32) -> String {
    format!("1e{e}")
}

/// Render `series` on shared log-log axes. Points with a non-positive or
/// non-finite coordinate are skipped; fails when nothing is left to draw.
pub fn render_loglog(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<String, String> {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.positive()).collect();
    if all.is_empty() {
        return Err("no positive finite points to plot".into());
    }
    let lx: Vec<f64> = all.iter().map(|p| p.0.log10()).collect();
    let ly: Vec<f64> = all.iter().map(|p| p.1.log10()).collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min).floor();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi > lo {
            (lo, hi)
        } else {
            (lo, lo + 1.0)
        }
    };
    let (x0, x1) = range(&lx);
    let (y0, y1) = range(&ly);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |lx: f64| LEFT + (lx - x0) / (x1 - x0) * pw;
    let sy = |ly: f64| TOP + (y1 - ly) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    s.push_str(
        "<style>text{font-family:sans-serif;font-size:12px}.axis{stroke:#333;fill:none}\
         .grid{stroke:#ddd}.empirical{fill:none;stroke-width:1.5}\
         .envelope{fill:none;stroke-width:1.5;stroke-dasharray:6 4}</style>\n",
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    for e in x0 as i32..=x1 as i32 {
        let x = sx(e as f64);
        let _ = writeln!(
            s,
            r#"<line class="grid" x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 18.0,
            decade_label(e)
        );
    }
    for e in y0 as i32..=y1 as i32 {
        let y = sy(e as f64);
        let _ = writeln!(
            s,
            r#"<line class="grid" x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            decade_label(e)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect class="axis" x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        escape(y_label)
    );

    let legend_x = LEFT + pw + 16.0;
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser
            .positive()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x.log10()), sy(y.log10())))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline class="{}" stroke="{color}" points="{}"><title>{}</title></polyline>"#,
                ser.class.css(),
                pts.join(" "),
                escape(&ser.label)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line class="{}" stroke="{color}" x1="{legend_x:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            ser.class.css(),
            legend_x + 24.0,
            legend_x + 30.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_nonpositive_points() {
        let ser = Series {
            label: "a<b".into(),
            class: SeriesClass::Empirical,
            points: vec![(1.0, 0.0), (2.0, 1.0), (4.0, 0.5), (8.0, -1.0)],
        };
        let svg = render_loglog("t", "n", "y", &[ser]).unwrap();
        let line = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        let pts = line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 2);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn nothing_to_draw_is_an_error() {
        let ser = Series {
            label: "z".into(),
            class: SeriesClass::Envelope,
            points: vec![(0.0, 1.0), (1.0, 0.0)],
        };
        assert!(render_loglog("t", "n", "y", &[ser]).is_err());
    }
}
