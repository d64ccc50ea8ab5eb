//! Arc diagrams as SVG: vertices on a horizontal spine, each edge a half
//! circle above it, colored by queue.

use std::collections::BTreeSet;
use std::fmt::Write;

use queuelay_core::graph::{Edge, Graph, Vertex};
use queuelay_core::layout::QueueLayout;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#000080", "#808000",
];
const DASHES: [&str; 4] = ["", "8 4", "2 3", "10 3 2 3"];
const STEP: u32 = 40;
const MARGIN: u32 = 30;

#[derive(Clone, Debug, Default)]
pub struct Highlight {
    pub edges: BTreeSet<Edge>,
    pub vertices: BTreeSet<Vertex>,
}

fn stroke(q: u32) -> (&'static str, &'static str) {
    let q = q as usize;
    (PALETTE[q % PALETTE.len()], DASHES[(q / PALETTE.len()) % DASHES.len()])
}

/// Renders the layout. Edges without a queue are drawn in light gray.
pub fn arc_diagram(g: &Graph, layout: &QueueLayout, hl: &Highlight) -> String {
    let n = layout.order.len() as u32;
    let x = |v: Vertex| MARGIN + STEP * layout.order.rank(v);
    let widest = g
        .edges()
        .iter()
        .map(|e| layout.order.rank(e.lo()).abs_diff(layout.order.rank(e.hi())))
        .max()
        .unwrap_or(0);
    let spine = MARGIN + widest * STEP / 2;
    let width = 2 * MARGIN + STEP * n.saturating_sub(1);
    let height = spine + MARGIN;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{spine}" x2="{}" y2="{spine}" stroke="black" stroke-width="1"/>"#,
        width - MARGIN
    )
    .unwrap();
    let mut edges = g.edges().to_vec();
    edges.sort_by_key(|&e| (layout.queue_of(e), e));
    for e in edges {
        let (a, b) = {
            let (p, q) = (x(e.lo()), x(e.hi()));
            (p.min(q), p.max(q))
        };
        let r = (b - a) / 2;
        let (color, dash) = layout.queue_of(e).map_or(("#cccccc", ""), stroke);
        let width = if hl.edges.contains(&e) { 4 } else { 2 };
        let dash = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        writeln!(
            out,
            r#"<path d="M {a} {spine} A {r} {r} 0 0 1 {b} {spine}" fill="none" stroke="{color}" stroke-width="{width}"{dash}><title>{e} queue {}</title></path>"#,
            layout.queue_of(e).map_or("none".to_string(), |q| q.to_string())
        )
        .unwrap();
    }
    for &v in layout.order.vertices() {
        let fill = if hl.vertices.contains(&v) { "#d62728" } else { "black" };
        writeln!(out, r#"<circle cx="{}" cy="{spine}" r="4" fill="{fill}"/>"#, x(v)).unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{v}</text>"#,
            x(v),
            spine + 18
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
