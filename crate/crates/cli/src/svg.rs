//! Self-contained SVG plots of the analytic regions.
//!
//! Fixed 800×600 canvas. The plot area is inset by 80 px on the left, 40 px
//! on the right, 40 px at the top and 70 px at the bottom. Both axes start
//! at zero and extend 10% past the largest boundary or sweep coordinate.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ehrelay::regions::trace_boundary;
use ehrelay::sim::Verdict;
use ehrelay::{RatePoint, RegionId, SystemParams};

use crate::error::HarnessError;
use crate::sweep::SweepRow;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
pub const MARGIN_LEFT: f64 = 80.0;
pub const MARGIN_RIGHT: f64 = 40.0;
pub const MARGIN_TOP: f64 = 40.0;
pub const MARGIN_BOTTOM: f64 = 70.0;
pub const DEFAULT_RESOLUTION: usize = 200;

const REGIONS: [(RegionId, &str, &str); 3] = [
    (RegionId::Inner, "#1f77b4", "6 4"),
    (RegionId::R1, "#d62728", "none"),
    (RegionId::R2, "#2ca02c", "none"),
];

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, p: RatePoint) -> (f64, f64) {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        (
            MARGIN_LEFT + p.lambda_s / self.x_max * w,
            HEIGHT - MARGIN_BOTTOM - p.lambda_r / self.y_max * h,
        )
    }
}

fn nice_extent(v: f64) -> f64 {
    if v > 0.0 {
        v * 1.1
    } else {
        1.0
    }
}

/// Closes a traced boundary down to the `λ_S` axis.
fn outline(mut points: Vec<RatePoint>) -> Vec<RatePoint> {
    if let Some(&last) = points.last() {
        if last.lambda_r > 0.0 {
            points.push(RatePoint::new(last.lambda_s, 0.0));
        }
    }
    points
}

fn verdict_color(v: Verdict) -> &'static str {
    match v {
        Verdict::Stable => "#2ca02c",
        Verdict::Unstable => "#d62728",
        Verdict::Indeterminate => "#7f7f7f",
    }
}

pub fn render_region_svg(
    params: &SystemParams,
    resolution: usize,
    sweep: Option<&[SweepRow]>,
) -> Result<String, HarnessError> {
    let mut curves = Vec::with_capacity(REGIONS.len());
    for (region, _, _) in REGIONS {
        curves.push(outline(trace_boundary(params, region, resolution)?));
    }

    let rows = sweep.unwrap_or(&[]);
    let all_points = curves
        .iter()
        .flatten()
        .copied()
        .chain(rows.iter().map(SweepRow::point));
    let (x, y) = all_points.fold((0.0f64, 0.0f64), |(x, y), p| {
        (x.max(p.lambda_s), y.max(p.lambda_r))
    });
    let frame = Frame {
        x_max: nice_extent(x),
        y_max: nice_extent(y),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="14">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    let (x0, y0) = frame.px(RatePoint::ORIGIN);
    let (x1, _) = frame.px(RatePoint::new(frame.x_max, 0.0));
    let (_, y1) = frame.px(RatePoint::new(0.0, frame.y_max));
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#
    );
    for k in 0..=5 {
        let fx = frame.x_max * k as f64 / 5.0;
        let fy = frame.y_max * k as f64 / 5.0;
        let (tx, _) = frame.px(RatePoint::new(fx, 0.0));
        let (_, ty) = frame.px(RatePoint::new(0.0, fy));
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{fx:.3}</text>"#,
            y0 + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{fy:.3}</text>"#,
            x0 - 8.0,
            ty + 5.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">λ<tspan baseline-shift="sub" font-size="10">S</tspan> (packets/slot)</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">λ<tspan baseline-shift="sub" font-size="10">R</tspan> (packets/slot)</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    for ((region, color, dash), curve) in REGIONS.iter().zip(&curves) {
        let pts: Vec<String> = curve
            .iter()
            .map(|p| {
                let (px, py) = frame.px(*p);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline id="{region}" class="boundary" points="{}" fill="none" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            pts.join(" ")
        );
    }
    for (i, (region, color, _)) in REGIONS.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN_RIGHT,
            MARGIN_TOP + 16.0 * i as f64,
            match region {
                RegionId::Inner => "inner bound",
                RegionId::R1 => "R1 (source sends dummies)",
                _ => "R2 (relay sends dummies)",
            }
        );
    }

    for row in rows {
        let (cx, cy) = frame.px(row.point());
        let _ = writeln!(
            s,
            r#"<circle class="marker {}" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="{}"/>"#,
            row.verdict.name(),
            verdict_color(row.verdict)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes every traced boundary point as `region,lambda_s,lambda_r`.
pub fn write_boundary_csv<W: std::io::Write>(
    params: &SystemParams,
    resolution: usize,
    out: W,
) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["region", "lambda_s", "lambda_r"])?;
    for region in RegionId::ALL {
        for p in trace_boundary(params, region, resolution)? {
            w.write_record([
                region.name().to_string(),
                format!("{:.9}", p.lambda_s),
                format!("{:.9}", p.lambda_r),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_region_svg(
    params: &SystemParams,
    resolution: usize,
    sweep: Option<&[SweepRow]>,
    path: &Path,
) -> Result<(), HarnessError> {
    let svg = render_region_svg(params, resolution, sweep)?;
    fs::write(path, svg)?;
    Ok(())
}
