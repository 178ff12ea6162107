//! Minimal grouped bar charts. Bar height is |value| × scale, where the
//! scale (pixels per unit) is stored on the root element.

use std::fmt::Write;

const PLOT_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 110.0;
const BAR_WIDTH: f64 = 12.0;
const GROUP_GAP: f64 = 10.0;
const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

pub(super) struct Series {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub(super) fn bar_chart(title: &str, unit: &str, categories: &[String], series: &[Series]) -> String {
    let peak = series
        .iter()
        .flat_map(|s| s.values.iter().flatten())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { PLOT_HEIGHT / peak } else { 1.0 };
    let group = series.len().max(1) as f64 * BAR_WIDTH + GROUP_GAP;
    let width = MARGIN_LEFT + categories.len() as f64 * group + 160.0;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;
    let base_y = MARGIN_TOP + PLOT_HEIGHT;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" data-scale="{scale}" data-unit="{}">"#,
        escape(unit)
    )
    .unwrap();
    writeln!(out, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{MARGIN_LEFT}" y="24" font-family="sans-serif" font-size="16">{}</text>"#,
        escape(title)
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{MARGIN_LEFT}" y1="{base_y}" x2="{:.3}" y2="{base_y}" stroke="black"/>"#,
        width - 160.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{base_y}" stroke="black"/>"#
    )
    .unwrap();
    for tick in 0..=4 {
        let v = peak * tick as f64 / 4.0;
        let y = base_y - v * scale;
        writeln!(
            out,
            r#"<text class="tick" x="{:.3}" y="{y:.3}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.4}</text>"#,
            MARGIN_LEFT - 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="14" y="{:.3}" font-family="sans-serif" font-size="11" transform="rotate(-90 14 {:.3})">|value| ({})</text>"#,
        base_y - PLOT_HEIGHT / 2.0,
        base_y - PLOT_HEIGHT / 2.0,
        escape(unit)
    )
    .unwrap();

    for (c, cat) in categories.iter().enumerate() {
        let x0 = MARGIN_LEFT + GROUP_GAP / 2.0 + c as f64 * group;
        for (s, ser) in series.iter().enumerate() {
            let Some(v) = ser.values.get(c).copied().flatten() else {
                continue;
            };
            let h = v.abs() * scale;
            writeln!(
                out,
                r#"<rect class="bar" data-series="{}" data-category="{}" data-value="{v}" x="{:.3}" y="{:.3}" width="{BAR_WIDTH}" height="{h:.6}" fill="{}"/>"#,
                escape(&ser.name),
                escape(cat),
                x0 + s as f64 * BAR_WIDTH,
                base_y - h,
                PALETTE[s % PALETTE.len()]
            )
            .unwrap();
        }
        let lx = x0 + series.len() as f64 * BAR_WIDTH / 2.0;
        writeln!(
            out,
            r#"<text x="{lx:.3}" y="{:.3}" font-family="sans-serif" font-size="9" text-anchor="end" transform="rotate(-60 {lx:.3} {:.3})">{}</text>"#,
            base_y + 12.0,
            base_y + 12.0,
            escape(cat)
        )
        .unwrap();
    }
    for (s, ser) in series.iter().enumerate() {
        let y = MARGIN_TOP + 16.0 * s as f64;
        let x = width - 150.0;
        writeln!(
            out,
            r#"<rect x="{x:.3}" y="{y:.3}" width="10" height="10" fill="{}"/><text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11">{}</text>"#,
            PALETTE[s % PALETTE.len()],
            x + 14.0,
            y + 9.0,
            escape(&ser.name)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
