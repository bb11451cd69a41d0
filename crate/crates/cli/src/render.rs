//! Deterministic SVG rendering of a truss design.
//!
//! Members are drawn with stroke width proportional to their cross-sectional
//! area; damaged members are omitted entirely, members thinner than the
//! width threshold are dropped, supports are hatched triangles and the dead
//! and reference loads are drawn as arrows.

use std::collections::HashSet;
use std::fmt::Write;

use trussopt_core::GroundStructure;

const SCALE: f64 = 0.14; // px per mm
const MARGIN: f64 = 90.0;
const MAX_WIDTH: f64 = 14.0;
const MIN_WIDTH: f64 = 0.05;
const ARROW_LEN: f64 = 52.0;

pub fn render_svg(gs: &GroundStructure, areas: &[f64], damaged: &[usize]) -> String {
    let damaged: HashSet<usize> = damaged.iter().copied().collect();
    let (min_x, max_x) = bounds(gs.nodes().iter().map(|n| n.x));
    let (min_y, max_y) = bounds(gs.nodes().iter().map(|n| n.y));
    let width = (max_x - min_x) * SCALE + 2.0 * MARGIN;
    let height = (max_y - min_y) * SCALE + 2.0 * MARGIN;
    // SVG y points down; flip the structural y axis.
    let px = |x: f64| MARGIN + (x - min_x) * SCALE;
    let py = |y: f64| height - MARGIN - (y - min_y) * SCALE;

    let max_area = areas.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n",
        width, height, width, height
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    for (member, &area) in gs.members().iter().zip(areas) {
        if damaged.contains(&member.id) {
            continue;
        }
        let w = MAX_WIDTH * area / max_area;
        if w < MIN_WIDTH {
            continue;
        }
        let a = &gs.nodes()[member.node_a];
        let b = &gs.nodes()[member.node_b];
        write!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#37474f\" stroke-width=\"{:.3}\" stroke-linecap=\"round\"/>\n",
            px(a.x),
            py(a.y),
            px(b.x),
            py(b.y),
            w
        )
        .unwrap();
    }

    for node in gs.nodes() {
        if node.fixed_x || node.fixed_y {
            let (x, y) = (px(node.x), py(node.y));
            write!(
                svg,
                "<path d=\"M {:.2} {:.2} l -11 14 l 22 0 z\" fill=\"none\" stroke=\"#78909c\" stroke-width=\"2\"/>\n",
                x, y
            )
            .unwrap();
        }
        write!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.2\" fill=\"#263238\"/>\n",
            px(node.x),
            py(node.y)
        )
        .unwrap();
    }

    let mut draw_loads = |vector: &[f64], color: &str| {
        for node in gs.nodes() {
            let [dx, dy] = gs.dof_of(node.id);
            let fx = dx.map_or(0.0, |d| vector[d]);
            let fy = dy.map_or(0.0, |d| vector[d]);
            let norm = fx.hypot(fy);
            if norm == 0.0 {
                continue;
            }
            // Arrow points in the load direction, head at the node.
            let ux = fx / norm;
            let uy = -fy / norm; // svg y is flipped
            let (x1, y1) = (px(node.x) - ux * ARROW_LEN, py(node.y) - uy * ARROW_LEN);
            let (x2, y2) = (px(node.x), py(node.y));
            write!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"2.4\"/>\n",
                x1, y1, x2, y2, color
            )
            .unwrap();
            let (hx, hy) = (x2 - ux * 10.0, y2 - uy * 10.0);
            let (nx, ny) = (-uy, ux);
            write!(
                svg,
                "<path d=\"M {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2} z\" fill=\"{}\"/>\n",
                x2,
                y2,
                hx + nx * 4.5,
                hy + ny * 4.5,
                hx - nx * 4.5,
                hy - ny * 4.5,
                color
            )
            .unwrap();
        }
    };
    draw_loads(gs.dead_load(), "#546e7a");
    draw_loads(gs.reference_load(), "#c62828");

    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}
