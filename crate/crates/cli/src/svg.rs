//! Minimal SVG emission. Every number goes through [`svg_num`], so equal
//! inputs give byte-equal files.

use std::fmt::Write;

use escs_core::{Cylinder, FlatSurface, Mesh, Scalar};

use crate::output::svg_num;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 48.0;

/// Maps data coordinates to the canvas with equal or independent axis scales.
struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    height: f64,
}

impl Frame {
    fn new(lo: [f64; 2], hi: [f64; 2], equal: bool) -> Self {
        let wx = (hi[0] - lo[0]).max(1e-12);
        let wy = (hi[1] - lo[1]).max(1e-12);
        let inner = SIZE - 2.0 * MARGIN;
        let (sx, sy) = if equal {
            let s = inner / wx.max(wy);
            (s, s)
        } else {
            (inner / wx, inner / wy)
        };
        Frame { x0: lo[0], y0: lo[1], sx, sy, height: wy * sy + 2.0 * MARGIN }
    }

    fn width(&self, hi_x: f64) -> f64 {
        (hi_x - self.x0) * self.sx + 2.0 * MARGIN
    }

    fn map(&self, p: [f64; 2]) -> (String, String) {
        (svg_num(MARGIN + (p[0] - self.x0) * self.sx), svg_num(self.height - MARGIN - (p[1] - self.y0) * self.sy))
    }

    fn points(&self, pts: &[[f64; 2]]) -> String {
        pts.iter()
            .map(|&p| {
                let (x, y) = self.map(p);
                format!("{x},{y}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn bounds(pts: impl Iterator<Item = [f64; 2]>) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    if !lo[0].is_finite() {
        return ([0.0; 2], [1.0; 2]);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(frame: &Frame, width: f64, title: &str, meta: &[(&str, String)]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = svg_num(width),
        h = svg_num(frame.height)
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    s.push_str("<metadata>\n");
    for (k, v) in meta {
        writeln!(s, "  <entry key=\"{}\">{}</entry>", escape(k), escape(v)).unwrap();
    }
    s.push_str("</metadata>\n");
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    s
}

/// Distinct hue for item `i`.
fn hue(i: usize) -> String {
    format!("hsl({},70%,45%)", (i * 137) % 360)
}

fn chart_triangles<S: Scalar>(s: &FlatSurface<S>) -> Vec<[[f64; 2]; 3]> {
    s.triangles.iter().map(|t| [t[0].to_f64(), t[1].to_f64(), t[2].to_f64()]).collect()
}

/// Unfolded trajectory with the developed triangles it crosses.
pub fn development(points: &[[f64; 2]], triangles: &[[[f64; 2]; 3]], meta: &[(&str, String)]) -> String {
    let (lo, hi) = bounds(points.iter().copied().chain(triangles.iter().flatten().copied()));
    let frame = Frame::new(lo, hi, true);
    let mut s = open(&frame, frame.width(hi[0]), "trajectory development", meta);
    for t in triangles {
        writeln!(s, r##"<polygon points="{}" fill="#f4f4f4" stroke="#999" stroke-width="0.5"/>"##, frame.points(t)).unwrap();
    }
    writeln!(s, r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.5"/>"##, frame.points(points)).unwrap();
    s.push_str("</svg>\n");
    s
}

/// Triangle charts of the surface with each cylinder's strip drawn into the
/// triangles its core crosses.
pub fn cylinders<S: Scalar>(surface: &FlatSurface<S>, cyl: &[Cylinder<S>], meta: &[(&str, String)]) -> String {
    let tris = chart_triangles(surface);
    let (lo, hi) = bounds(tris.iter().flatten().copied());
    let frame = Frame::new(lo, hi, true);
    let mut s = open(&frame, frame.width(hi[0]), "maximal cylinders", meta);
    s.push_str("<defs>\n");
    for (i, t) in tris.iter().enumerate() {
        writeln!(s, r#"<clipPath id="t{i}"><polygon points="{}"/></clipPath>"#, frame.points(t)).unwrap();
    }
    s.push_str("</defs>\n");
    for t in &tris {
        writeln!(s, r##"<polygon points="{}" fill="none" stroke="#bbb" stroke-width="0.5"/>"##, frame.points(t)).unwrap();
    }
    for (i, c) in cyl.iter().enumerate() {
        writeln!(s, r#"<g id="cylinder{i}" fill="{}" fill-opacity="0.3">"#, hue(i)).unwrap();
        for (t, rect) in c.strip.rectangles() {
            writeln!(s, r#"<polygon clip-path="url(#t{t})" points="{}"/>"#, frame.points(&rect)).unwrap();
        }
        s.push_str("</g>\n");
    }
    for (i, cp) in surface.cone_points.iter().enumerate() {
        for &(t, k) in &surface.classes[cp.class].corners {
            let (x, y) = frame.map(tris[t][k]);
            writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="black"><title>cone {i}</title></circle>"#).unwrap();
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Scatter plot of `(x, y)` pairs with labelled axis ranges.
pub fn scatter(pts: &[(f64, f64)], x_label: &str, y_label: &str, title: &str, meta: &[(&str, String)]) -> String {
    let (mut lo, mut hi) = bounds(pts.iter().map(|&(x, y)| [x, y]));
    lo[1] = lo[1].min(0.0);
    if hi[1] <= lo[1] {
        hi[1] = lo[1] + 1.0;
    }
    if hi[0] <= lo[0] {
        hi[0] = lo[0] + 1.0;
    }
    let frame = Frame::new(lo, hi, false);
    let mut s = open(&frame, SIZE, title, meta);
    let (ax, ay) = frame.map(lo);
    let (bx, _) = frame.map([hi[0], lo[1]]);
    let (_, by) = frame.map([lo[0], hi[1]]);
    writeln!(s, r#"<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{ay}" stroke="black"/>"#).unwrap();
    writeln!(s, r#"<line x1="{ax}" y1="{ay}" x2="{ax}" y2="{by}" stroke="black"/>"#).unwrap();
    let text = |s: &mut String, x: &str, y: &str, anchor: &str, t: &str| {
        writeln!(s, r#"<text x="{x}" y="{y}" font-size="11" font-family="sans-serif" text-anchor="{anchor}">{}</text>"#, escape(t)).unwrap();
    };
    let below = svg_num(SIZE - MARGIN + 14.0);
    text(&mut s, &ax, &below, "start", &svg_num(lo[0]));
    text(&mut s, &bx, &below, "end", &svg_num(hi[0]));
    text(&mut s, &svg_num(SIZE / 2.0), &svg_num(SIZE - 10.0), "middle", x_label);
    let left = svg_num(MARGIN - 4.0);
    text(&mut s, &left, &ay, "end", &svg_num(lo[1]));
    text(&mut s, &left, &by, "end", &svg_num(hi[1]));
    text(&mut s, &svg_num(MARGIN), &svg_num(MARGIN - 16.0), "start", y_label);
    for &(x, y) in pts {
        let (cx, cy) = frame.map([x, y]);
        writeln!(s, r##"<circle cx="{cx}" cy="{cy}" r="2.5" fill="#1f77b4"/>"##).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Eigenfunction heatmap: each triangle filled by the mean of its nodal
/// values on a linear blue-white-red scale over `[-m, m]`, `m = max |u|`.
pub fn heatmap(mesh: &Mesh, u: &[f64], meta: &[(&str, String)]) -> String {
    let m = u.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut meta = meta.to_vec();
    meta.push(("color_scale", format!("linear; -{} blue, 0 white, +{} red", svg_num(m), svg_num(m))));
    let (lo, hi) = bounds(mesh.vertices.iter().copied());
    let frame = Frame::new(lo, hi, true);
    let mut s = open(&frame, frame.width(hi[0]), "eigenfunction", &meta);
    for tri in &mesh.triangles {
        let v = tri.iter().map(|&i| u[i]).sum::<f64>() / (3.0 * m);
        let (r, g, b) = if v >= 0.0 {
            (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
        } else {
            (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
        };
        let pts = tri.map(|i| mesh.vertices[i]);
        writeln!(
            s,
            r#"<polygon points="{}" fill="rgb({},{},{})"/>"#,
            frame.points(&pts),
            r.round() as u8,
            g.round() as u8,
            b.round() as u8
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
