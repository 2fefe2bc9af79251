//! Per-rank Gantt rendering of timeline segments.
//!
//! Output depends only on its inputs; coordinates are printed with a fixed
//! precision so identical traces give identical bytes. Segments are the only
//! `<rect>` elements in the document.

use std::fmt::Write;

use tierlens::analysis::TimelineSegment;
use tierlens::trace::{Category, Timestamp};

const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 40.0;
const PLOT_WIDTH: f64 = 900.0;
const LANE_HEIGHT: f64 = 10.0;
const BAND_GAP: f64 = 8.0;
const TICKS: u32 = 5;
/// Narrow segments stay visible.
const MIN_WIDTH: f64 = 0.5;

pub fn fill(category: Category) -> &'static str {
    match category {
        Category::Read => "#4e79a7",
        Category::Write => "#e15759",
        Category::Metadata => "#f28e2b",
        Category::Other => "#bab0ac",
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

/// Fractional digits that keep adjacent tick labels distinct.
fn tick_precision(span_secs: f64) -> usize {
    let step = span_secs / TICKS as f64;
    if step >= 1.0 {
        0
    } else {
        ((-step.log10()).ceil() as usize).min(9)
    }
}

/// Renders one band per entry of `ranks`, in the given order. `span` fixes the
/// x-axis; an empty span is widened to one nanosecond.
pub fn render(segments: &[TimelineSegment], ranks: &[u32], span: (Timestamp, Timestamp)) -> String {
    let t0 = span.0.as_nanos();
    let span_nanos = span.1.as_nanos().saturating_sub(t0).max(1);
    let x = |t: Timestamp| LEFT + (t.as_nanos().saturating_sub(t0)) as f64 / span_nanos as f64 * PLOT_WIDTH;

    let mut band_top = Vec::with_capacity(ranks.len());
    let mut y = TOP;
    for &rank in ranks {
        let lanes = segments
            .iter()
            .filter(|s| s.rank == rank)
            .map(|s| s.lane + 1)
            .max()
            .unwrap_or(1);
        band_top.push((rank, y, lanes));
        y += lanes as f64 * LANE_HEIGHT + BAND_GAP;
    }
    let axis_y = y;
    let width = LEFT + PLOT_WIDTH + RIGHT;
    let height = axis_y + BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="monospace" font-size="10">"#
    );
    let legend = [Category::Read, Category::Write, Category::Metadata, Category::Other];
    for (i, c) in legend.into_iter().enumerate() {
        let lx = LEFT + i as f64 * 110.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="12.0" x2="{:.1}" y2="12.0" stroke="{}" stroke-width="8"/><text x="{:.1}" y="15.0">{}</text>"#,
            lx + 14.0,
            fill(c),
            lx + 18.0,
            c
        );
    }

    s.push_str("<g stroke=\"#333333\" stroke-width=\"1\">\n");
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{axis_y:.1}"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{axis_y:.1}" x2="{:.1}" y2="{axis_y:.1}"/>"#,
        LEFT + PLOT_WIDTH
    );
    for i in 0..=TICKS {
        let tx = LEFT + PLOT_WIDTH * i as f64 / TICKS as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{tx:.1}" y1="{axis_y:.1}" x2="{tx:.1}" y2="{:.1}"/>"#,
            axis_y + 4.0
        );
    }
    s.push_str("</g>\n");

    let span_secs = span_nanos as f64 / 1e9;
    let digits = tick_precision(span_secs);
    for i in 0..=TICKS {
        let tx = LEFT + PLOT_WIDTH * i as f64 / TICKS as f64;
        let label = span_secs * i as f64 / TICKS as f64;
        let _ = writeln!(
            s,
            r#"<text x="{tx:.1}" y="{:.1}" text-anchor="middle">{label:.digits$}</text>"#,
            axis_y + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">time (s)</text>"#,
        LEFT + PLOT_WIDTH / 2.0,
        axis_y + 32.0
    );
    for &(rank, top, lanes) in &band_top {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">rank {rank}</text>"#,
            LEFT - 6.0,
            top + lanes as f64 * LANE_HEIGHT / 2.0 + 3.0
        );
    }

    s.push_str("<g stroke=\"none\">\n");
    for seg in segments {
        let Some(&(_, top, _)) = band_top.iter().find(|b| b.0 == seg.rank) else {
            continue;
        };
        let x0 = x(seg.start);
        let w = (x(seg.end) - x0).max(MIN_WIDTH);
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.3}" y="{:.1}" width="{w:.3}" height="{:.1}" fill="{}"><title>{} {}..{}</title></rect>"#,
            top + seg.lane as f64 * LANE_HEIGHT,
            LANE_HEIGHT - 1.0,
            fill(seg.category),
            escape(&seg.function),
            seg.start,
            seg.end
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}
