//! Deterministic SVG rendering of 2D orbit frameworks and finite
//! covers (3D drops to an oblique projection).

use std::fmt::Write;

use nalgebra::DVector;

use crate::gain::{GainGraph, Placement};
use crate::graph::MultiGraph;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenderMode {
    /// The quotient gain graph itself.
    Orbit,
    /// The covering framework, vertices coloured by fiber element.
    Cover,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn project(p: &DVector<f64>) -> (f64, f64) {
    match p.len() {
        2 => (p[0], -p[1]),
        // oblique cabinet projection for 3D
        3 => (p[0] + 0.35 * p[2], -(p[1] + 0.35 * p[2])),
        _ => unreachable!("dimension checked by caller"),
    }
}

fn circle_layout(n: usize, d: usize) -> Placement {
    (0..n)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / n.max(1) as f64;
            let mut p = DVector::zeros(d);
            p[0] = 100.0 * angle.cos();
            if d > 1 {
                p[1] = 100.0 * angle.sin();
            }
            p
        })
        .collect()
}

struct Canvas {
    body: String,
    min: (f64, f64),
    max: (f64, f64),
}

impl Canvas {
    fn new() -> Canvas {
        Canvas { body: String::new(), min: (f64::MAX, f64::MAX), max: (f64::MIN, f64::MIN) }
    }

    fn touch(&mut self, (x, y): (f64, f64)) {
        self.min.0 = self.min.0.min(x);
        self.min.1 = self.min.1.min(y);
        self.max.0 = self.max.0.max(x);
        self.max.1 = self.max.1.max(y);
    }

    fn edge(&mut self, a: (f64, f64), b: (f64, f64), bow: f64, title: &str) {
        self.touch(a);
        self.touch(b);
        if bow == 0.0 {
            write!(
                self.body,
                r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#444" stroke-width="1.5"><title>{}</title></line>"##,
                a.0, a.1, b.0, b.1, title
            )
            .unwrap();
        } else {
            // bowed quadratic path for parallel copies
            let mx = (a.0 + b.0) / 2.0;
            let my = (a.1 + b.1) / 2.0;
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len = (dx * dx + dy * dy).sqrt().max(1e-9);
            let (nx, ny) = (-dy / len, dx / len);
            let (cx, cy) = (mx + bow * nx, my + bow * ny);
            self.touch((cx, cy));
            write!(
                self.body,
                r##"<path d="M {:.3} {:.3} Q {:.3} {:.3} {:.3} {:.3}" fill="none" stroke="#444" stroke-width="1.5"><title>{}</title></path>"##,
                a.0, a.1, cx, cy, b.0, b.1, title
            )
            .unwrap();
        }
        self.body.push('\n');
    }

    fn loop_edge(&mut self, a: (f64, f64), copy: usize, title: &str) {
        let r = 8.0 + 5.0 * copy as f64;
        self.touch((a.0 + 2.0 * r, a.1 - 2.0 * r));
        write!(
            self.body,
            r##"<circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#444" stroke-width="1.5"><title>{}</title></circle>"##,
            a.0 + r,
            a.1 - r,
            r,
            title
        )
        .unwrap();
        self.body.push('\n');
    }

    fn vertex(&mut self, a: (f64, f64), color: &str, label: &str) {
        self.touch(a);
        write!(
            self.body,
            r##"<circle cx="{:.3}" cy="{:.3}" r="4" fill="{}"><title>{}</title></circle>"##,
            a.0, a.1, color, label
        )
        .unwrap();
        self.body.push('\n');
    }

    fn finish(self) -> String {
        let (minx, miny, maxx, maxy) = if self.body.is_empty() {
            (0.0, 0.0, 100.0, 100.0)
        } else {
            (self.min.0, self.min.1, self.max.0, self.max.1)
        };
        let pad = 20.0;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.3} {:.3} {:.3} {:.3}\">\n{}</svg>\n",
            minx - pad,
            miny - pad,
            maxx - minx + 2.0 * pad,
            maxy - miny + 2.0 * pad,
            self.body
        )
    }
}

fn draw_multigraph(
    canvas: &mut Canvas,
    graph: &MultiGraph,
    points: &[(f64, f64)],
    colors: &dyn Fn(usize) -> &'static str,
    labels: &dyn Fn(usize) -> String,
    titles: &dyn Fn(usize) -> String,
) {
    // bow parallel copies apart deterministically
    let bundles = graph.bundles();
    let mut copy_index = vec![0usize; graph.edge_count()];
    {
        let mut sorted: Vec<_> = bundles.into_iter().collect();
        sorted.sort_by_key(|(k, _)| *k);
        for (_, ids) in sorted {
            for (i, &e) in ids.iter().enumerate() {
                copy_index[e] = i;
            }
        }
    }
    for (e, edge) in graph.edges().iter().enumerate() {
        let title = titles(e);
        if edge.is_loop() {
            canvas.loop_edge(points[edge.tail], copy_index[e], &title);
        } else {
            let c = copy_index[e];
            let bow = if c == 0 { 0.0 } else { (c.div_ceil(2)) as f64 * 14.0 * if c % 2 == 1 { 1.0 } else { -1.0 } };
            canvas.edge(points[edge.tail], points[edge.head], bow, &title);
        }
    }
    for (v, point) in points.iter().enumerate().take(graph.vertex_count()) {
        canvas.vertex(*point, colors(v), &labels(v));
    }
}

/// Renders a gain graph (or its cover) as deterministic SVG text.
/// Supported dimensions: 2 (direct) and 3 (oblique projection). Without
/// a placement, vertices sit on a circle.
pub fn render_svg(
    gg: &GainGraph,
    placement: Option<&Placement>,
    mode: RenderMode,
) -> Result<String> {
    let d = gg.dim();
    if d != 2 && d != 3 {
        return Err(Error::RenderUnsupported(d));
    }
    let n = gg.graph().vertex_count();
    let base: Placement = match placement {
        Some(p) => {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            // scale placements to drawing units
            p.iter().map(|q| q * 60.0).collect()
        }
        None => circle_layout(n, d),
    };
    let mut canvas = Canvas::new();
    match mode {
        RenderMode::Orbit => {
            let points: Vec<(f64, f64)> = base.iter().map(project).collect();
            let gains = gg.gains().to_vec();
            draw_multigraph(
                &mut canvas,
                gg.graph(),
                &points,
                &|_| PALETTE[0],
                &|v| format!("v{v}"),
                &move |e| format!("{:?}", gains[e].form()),
            );
        }
        RenderMode::Cover => {
            let cover = gg.covering_graph()?;
            let scaled_back: Placement = base.iter().map(|q| q / 60.0).collect();
            let lifted = gg.lift_placement(&scaled_back)?;
            let points: Vec<(f64, f64)> = lifted.iter().map(|q| project(&(q * 60.0))).collect();
            let m = cover.elements.len();
            draw_multigraph(
                &mut canvas,
                &cover.graph,
                &points,
                &move |v| PALETTE[v % m % PALETTE.len()],
                &move |v| format!("({},{})", v / m, v % m),
                &|_| String::new(),
            );
        }
    }
    Ok(canvas.finish())
}
