//! Partition dumps and their SVG rendering.
//!
//! Each leaf is filled with one colour channel per action, at an intensity
//! given by the midpoint of the action's probability interval.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::ProbInterval;
use crate::geometry::{GeometryError, Polyhedron, Template};
use crate::imdp::Imdp;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("state space has {dim} dimensions; select two axes to project onto")]
    DimensionError { dim: usize },
    #[error("axis {0} out of range")]
    BadAxis(usize),
    #[error("partition dump is invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionLeaf {
    pub state: usize,
    pub bounds: Vec<f64>,
    pub intervals: Vec<ProbInterval>,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDump {
    pub directions: Vec<Vec<f64>>,
    pub var_names: Vec<String>,
    pub action_names: Vec<String>,
    pub leaves: Vec<PartitionLeaf>,
}

impl PartitionDump {
    /// The refined initial region: one leaf per initial abstract state.
    pub fn initial_partition(m: &Imdp, var_names: &[String], action_names: &[String]) -> Self {
        let directions = m
            .initial
            .first()
            .map(|&i| m.states[i].polyhedron.template().directions().to_vec())
            .unwrap_or_default();
        let leaves = m
            .initial
            .iter()
            .map(|&id| {
                let s = &m.states[id];
                // Initial states carry exactly the piece they were refined into.
                let (intervals, saturated) = s
                    .pieces
                    .first()
                    .map(|l| (l.abstraction.intervals.clone(), l.saturated))
                    .unwrap_or_default();
                PartitionLeaf {
                    state: id,
                    bounds: s.polyhedron.bounds().to_vec(),
                    intervals,
                    saturated,
                }
            })
            .collect();
        Self {
            directions,
            var_names: var_names.to_vec(),
            action_names: action_names.to_vec(),
            leaves,
        }
    }
}

/// Colour channel (0 red, 1 green, 2 blue) for an action.
pub fn channel(name: &str, index: usize) -> usize {
    match name {
        "noop" => 0,
        "right" => 1,
        "left" => 2,
        _ => index % 3,
    }
}

/// Vertices of a convex polygon `{x : <n_i, x> <= b_i}`, by clipping a large square.
fn clip_polygon(halfplanes: &[([f64; 2], f64)], extent: f64) -> Vec<[f64; 2]> {
    let mut poly = vec![
        [-extent, -extent],
        [extent, -extent],
        [extent, extent],
        [-extent, extent],
    ];
    for &(n, b) in halfplanes {
        let inside = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] <= b + 1e-12;
        let mut out = Vec::new();
        for i in 0..poly.len() {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            let (pin, qin) = (inside(&p), inside(&q));
            if pin {
                out.push(p);
            }
            if pin != qin {
                let fp = n[0] * p[0] + n[1] * p[1] - b;
                let fq = n[0] * q[0] + n[1] * q[1] - b;
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        poly = out;
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Outline of a leaf in the plane of `axes`.
fn outline(p: &Polyhedron, axes: (usize, usize)) -> Result<Vec<[f64; 2]>, PlotError> {
    let n = p.dim();
    let halfplanes: Vec<([f64; 2], f64)> = if n == 2 && axes == (0, 1) {
        p.template()
            .directions()
            .iter()
            .zip(p.bounds())
            .map(|(d, b)| ([d[0], d[1]], *b))
            .collect()
    } else {
        // Projection: support values along evenly spaced plane directions.
        (0..16)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 8.0;
                let mut d = vec![0.0; n];
                d[axes.0] = t.cos();
                d[axes.1] = t.sin();
                Ok(([d[axes.0], d[axes.1]], p.support_value(&d)?))
            })
            .collect::<Result<_, GeometryError>>()?
    };
    let extent = halfplanes.iter().map(|(_, b)| b.abs()).fold(1.0, f64::max) * 4.0;
    Ok(clip_polygon(&halfplanes, extent))
}

/// Render the dump as SVG; axis-aligned boxes become `<rect>`, other leaves `<polygon>`.
pub fn render_svg(dump: &PartitionDump, axes: Option<(usize, usize)>) -> Result<String, PlotError> {
    let dim = dump.directions.first().map_or(0, Vec::len);
    let axes = match axes {
        Some(a) => a,
        None if dim == 2 => (0, 1),
        None => return Err(PlotError::DimensionError { dim }),
    };
    for a in [axes.0, axes.1] {
        if a >= dim {
            return Err(PlotError::BadAxis(a));
        }
    }
    let template = Template::custom(dump.directions.clone())?;
    let mut shapes = Vec::new();
    for leaf in &dump.leaves {
        let p = Polyhedron::new(template.clone(), leaf.bounds.clone())?;
        let mut rgb = [0u8; 3];
        for (a, iv) in leaf.intervals.iter().enumerate() {
            let name = dump.action_names.get(a).map_or("", String::as_str);
            let mid = (0.5 * (iv.lower + iv.upper)).clamp(0.0, 1.0);
            let c = &mut rgb[channel(name, a)];
            *c = c.saturating_add((mid * 255.0).round() as u8);
        }
        shapes.push((outline(&p, axes)?, rgb));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (pts, _) in &shapes {
        for q in pts {
            for i in 0..2 {
                lo[i] = lo[i].min(q[i]);
                hi[i] = hi[i].max(q[i]);
            }
        }
    }
    if shapes.is_empty() {
        lo = [0.0, 0.0];
        hi = [1.0, 1.0];
    }
    let size = 600.0;
    let margin = 40.0;
    let span = |i: usize| (hi[i] - lo[i]).max(1e-12);
    let px = |q: &[f64; 2]| {
        (
            margin + (q[0] - lo[0]) / span(0) * size,
            margin + size - (q[1] - lo[1]) / span(1) * size,
        )
    };
    let mut svg = String::new();
    let total = size + 2.0 * margin;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let name = |i: usize| dump.var_names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="14">{} [{:.4}, {:.4}]</text>"#,
        margin,
        total - 10.0,
        name(axes.0),
        lo[0],
        hi[0]
    );
    let _ = writeln!(
        svg,
        r#"<text x="5" y="20" font-size="14">{} [{:.4}, {:.4}]</text>"#,
        name(axes.1),
        lo[1],
        hi[1]
    );
    for ((pts, rgb), leaf) in shapes.iter().zip(&dump.leaves) {
        let fill = format!("rgb({},{},{})", rgb[0], rgb[1], rgb[2]);
        let is_box = pts.len() == 4
            && (0..4).all(|i| {
                let (p, q) = (pts[i], pts[(i + 1) % 4]);
                p[0] == q[0] || p[1] == q[1]
            });
        if is_box {
            let (x0, y0) = px(&pts.iter().fold([f64::INFINITY, f64::NEG_INFINITY], |a, p| {
                [a[0].min(p[0]), a[1].max(p[1])]
            }));
            let (x1, y1) = px(&pts.iter().fold([f64::NEG_INFINITY, f64::INFINITY], |a, p| {
                [a[0].max(p[0]), a[1].min(p[1])]
            }));
            let _ = writeln!(
                svg,
                r#"<rect data-state="{}" x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="{fill}" stroke="black" stroke-width="0.5"/>"#,
                leaf.state,
                x1 - x0,
                y1 - y0
            );
        } else {
            let points = pts
                .iter()
                .map(|q| {
                    let (x, y) = px(q);
                    format!("{x:.3},{y:.3}")
                })
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(
                svg,
                r#"<polygon data-state="{}" points="{points}" fill="{fill}" stroke="black" stroke-width="0.5"/>"#,
                leaf.state
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
