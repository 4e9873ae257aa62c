//! Static SVG rendering of the Beta example grid.

use std::fmt::Write;

use uncq_core::synth::{BetaGridRow, BetaOracle, BetaPosterior};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

const SERIES: [(&str, &str); 5] = [
    ("AU(A) = H(theta)", "#1b9e77"),
    ("EU(A2)", "#d95f02"),
    ("EU(A3)", "#e7298a"),
    ("EU(B1)", "#7570b3"),
    ("EU(C1)", "#66a61e"),
];

fn values(r: &BetaGridRow) -> [f64; 5] {
    [r.au_a, r.eu_a2, r.eu_a3, r.eu_b1, r.eu_c1]
}

pub fn beta_svg(post: &BetaPosterior, oracle: &BetaOracle, rows: &[BetaGridRow]) -> String {
    let y_max = rows
        .iter()
        .flat_map(|r| values(r).into_iter())
        .chain([oracle.au_b, oracle.au_c])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .clamp(0.1, 3.0);
    let density_max = rows
        .iter()
        .map(|r| r.density)
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let px = |theta: f64| MARGIN + theta * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v.min(y_max) / y_max) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // posterior density, scaled to the plot height
    let mut area = format!("M{:.2},{:.2}", px(0.0), py(0.0));
    for r in rows {
        let _ = write!(
            area,
            " L{:.2},{:.2}",
            px(r.theta),
            py(r.density / density_max * y_max)
        );
    }
    let _ = write!(area, " L{:.2},{:.2} Z", px(1.0), py(0.0));
    let _ = writeln!(
        svg,
        r##"<path d="{area}" fill="#cccccc" fill-opacity="0.5" stroke="none"/>"##
    );

    // axes
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" stroke="black" fill="none"/>"#,
        x0 = MARGIN,
        x1 = WIDTH - MARGIN,
        y0 = HEIGHT - MARGIN,
        y1 = MARGIN
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            px(t),
            HEIGHT - MARGIN + 16.0
        );
        let v = y_max * t;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            MARGIN - 6.0,
            py(v) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">theta (fixed model)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );

    for (j, (name, color)) in SERIES.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .filter(|r| values(r)[j].is_finite())
            .map(|r| format!("{:.2},{:.2}", px(r.theta), py(values(r)[j])))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 14.0 * j as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">{name}</text>"#,
            WIDTH - MARGIN - 150.0
        );
    }

    for (label, value, dash) in [("AU(B)", oracle.au_b, "6,3"), ("AU(C)", oracle.au_c, "2,3")] {
        let y = py(value);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#555555" stroke-dasharray="{dash}"/>"##,
            px(0.0),
            px(1.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{label}</text>"#,
            px(0.0) + 4.0,
            y - 3.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="20" text-anchor="middle">Beta({}, {}) posterior</text>"#,
        WIDTH / 2.0,
        post.a(),
        post.b()
    );
    svg.push_str("</svg>\n");
    svg
}
