//! SVG heatmaps of transfer matrices.
//!
//! Columns are source models and rows are targets. Blue cells transfer and
//! red cells do not; colour depth grows with |ΔF| away from 0. Absent cells
//! are hatched and unlabeled.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::transfer::{AxisKind, TransferMatrix};

const CELL: usize = 56;
const LEFT: usize = 120;
const TOP: usize = 96;
const BLUE: (f64, f64, f64) = (33.0, 102.0, 172.0);
const RED: (f64, f64, f64) = (178.0, 24.0, 43.0);

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn blend(target: (f64, f64, f64), t: f64) -> String {
    let mix = |c: f64| (255.0 + (c - 255.0) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(target.0), mix(target.1), mix(target.2))
}

fn label(value: f64) -> String {
    // avoid printing "-0.00"
    let text = format!("{value:.2}");
    if text == "-0.00" {
        "0.00".into()
    } else {
        text
    }
}

pub fn render_heatmap(matrix: &TransferMatrix) -> Result<String> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let scale = matrix
        .cells
        .iter()
        .flatten()
        .flatten()
        .map(|c| c.delta_points.abs())
        .fold(15.0_f64, f64::max);
    let (title, source_axis, target_axis) = match &matrix.kind {
        AxisKind::CrossCounty { hazard } => (
            format!("Cross-county ΔF, {hazard} ({})", matrix.baseline.as_str()),
            "trained in",
            "tested in",
        ),
        AxisKind::CrossHazard { county } => (
            format!("Cross-hazard ΔF, {county} ({})", matrix.baseline.as_str()),
            "trained for",
            "tested on",
        ),
    };
    let width = LEFT + n * CELL + 16;
    let height = TOP + n * CELL + 16;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(
        w,
        r##"<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6" patternTransform="rotate(45)"><rect width="6" height="6" fill="#f0f0f0"/><line x1="0" y1="0" x2="0" y2="6" stroke="#9a9a9a" stroke-width="2"/></pattern></defs>"##
    )
    .unwrap();
    writeln!(w, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(
        w,
        r#"<text x="{}" y="18" font-size="13" font-weight="bold">{}</text>"#,
        8,
        escape(&title)
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="{}" y="38" text-anchor="middle">{source_axis} →</text>"#,
        LEFT + n * CELL / 2
    )
    .unwrap();
    writeln!(
        w,
        r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">{target_axis} →</text>"#,
        y = TOP + n * CELL / 2
    )
    .unwrap();

    for (s, name) in matrix.labels.iter().enumerate() {
        let x = LEFT + s * CELL + CELL / 2;
        writeln!(
            w,
            r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            TOP - 8,
            escape(name)
        )
        .unwrap();
    }
    for (t, name) in matrix.labels.iter().enumerate() {
        let y = TOP + t * CELL + CELL / 2 + 4;
        writeln!(
            w,
            r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
            LEFT - 6,
            escape(name)
        )
        .unwrap();
    }

    for s in 0..n {
        for t in 0..n {
            let x = LEFT + s * CELL;
            let y = TOP + t * CELL;
            match matrix.cell(s, t) {
                None => {
                    writeln!(
                        w,
                        r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="url(#hatch)" stroke="#ffffff"/>"##
                    )
                    .unwrap();
                }
                Some(cell) => {
                    let v = cell.delta_points;
                    let depth = if v == 0.0 {
                        0.0
                    } else {
                        0.15 + 0.85 * (v.abs() / scale).min(1.0)
                    };
                    let fill = blend(if cell.transferable { BLUE } else { RED }, depth);
                    let ink = if depth > 0.6 { "#ffffff" } else { "#1a1a1a" };
                    writeln!(
                        w,
                        r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ffffff"/>"##
                    )
                    .unwrap();
                    writeln!(
                        w,
                        r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{}</text>"#,
                        x + CELL / 2,
                        y + CELL / 2 + 4,
                        label(v)
                    )
                    .unwrap();
                }
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
