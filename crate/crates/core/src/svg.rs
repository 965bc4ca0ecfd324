//! SVG rendering of planar layouts.
//!
//! Parabolic arcs are exact quadratic curves, written as cubic Béziers by
//! degree elevation; the render tolerance only sets how many decimals are
//! printed. The y axis is flipped so the picture matches the model's
//! counterclockwise orientation.

use std::fmt::Write;

use crate::cutlocus::trace::{BoundaryElement, Provenance, RayKind};
use crate::geom::{Piece, Vec2};
use crate::surface::Side;
use crate::unfold::{PlanarLayout, Seam};

#[derive(Debug, Clone, Copy)]
pub struct SvgConfig {
    /// Largest allowed deviation of the drawing from the model, in model units.
    pub render_tol: f64,
    /// Stroke width as a fraction of the drawing's larger extent.
    pub stroke: f64,
}

impl Default for SvgConfig {
    fn default() -> Self {
        SvgConfig { render_tol: 1e-6, stroke: 0.003 }
    }
}

struct Fmt {
    decimals: usize,
}

impl Fmt {
    fn new(tol: f64) -> Self {
        let decimals = (-(tol.max(1e-15)).log10()).ceil().max(0.0) as usize + 1;
        Fmt { decimals: decimals.min(15) }
    }

    fn num(&self, x: f64) -> String {
        let s = format!("{:.*}", self.decimals, x);
        // normalise "-0.000" so output bytes do not depend on the sign of zero
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    }

    fn pt(&self, p: Vec2) -> String {
        format!("{} {}", self.num(p.x), self.num(-p.y))
    }
}

/// Cubic Bézier control points of a piece, or `None` for a straight segment.
pub fn cubic_controls(piece: &Piece) -> Option<[Vec2; 4]> {
    match piece {
        Piece::Segment(_) => None,
        Piece::Arc(a) => {
            let (p0, p3) = (a.start(), a.end());
            let q = p0 + a.derivative(a.t0) * (0.5 * (a.t1 - a.t0));
            Some([p0, p0 + (q - p0) * (2.0 / 3.0), p3 + (q - p3) * (2.0 / 3.0), p3])
        }
    }
}

fn draw(f: &Fmt, piece: &Piece) -> String {
    match cubic_controls(piece) {
        None => format!("L {}", f.pt(piece.end())),
        Some([_, c1, c2, p3]) => format!("C {} {} {}", f.pt(c1), f.pt(c2), f.pt(p3)),
    }
}

fn side_class(side: Side) -> &'static str {
    match side {
        Side::Left => "side-1",
        Side::Right => "side-2",
    }
}

fn element_class(e: &BoundaryElement) -> String {
    let shape = if e.piece.is_arc() { "arc" } else { "seg" };
    let origin = match e.provenance {
        Provenance::Curve { .. } => "curve".to_string(),
        Provenance::CutLocus { .. } => "cut-locus".to_string(),
        Provenance::Ray { ray, .. } => {
            let kind = match ray {
                RayKind::Generator => "generator",
                RayKind::Reflex => "reflex",
                RayKind::Split => "split",
                RayKind::Projection => "projection",
            };
            format!("ray {kind}")
        }
    };
    format!("edge {shape} {origin}")
}

fn bounds(layout: &PlanarLayout) -> Option<(Vec2, Vec2)> {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    let mut any = false;
    for e in layout.elements() {
        let pts: Vec<Vec2> = match cubic_controls(&e.piece) {
            Some(c) => c.to_vec(),
            None => vec![e.piece.start(), e.piece.end()],
        };
        for p in pts {
            // flipped y
            let q = Vec2::new(p.x, -p.y);
            lo = lo.inf(&q);
            hi = hi.sup(&q);
            any = true;
        }
    }
    any.then_some((lo, hi))
}

/// SVG document for a layout: one filled path per piece, then every boundary
/// element as its own path classed by shape and origin, then seams.
pub fn emit_svg(layout: &PlanarLayout, config: &SvgConfig) -> String {
    let f = Fmt::new(config.render_tol);
    let (lo, hi) = bounds(layout).unwrap_or((Vec2::zeros(), Vec2::new(1.0, 1.0)));
    let size = (hi - lo).max().max(1e-12);
    let pad = 0.05 * size;
    let (x0, y0, w, h) = (lo.x - pad, lo.y - pad, hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
    let stroke = f.num(config.stroke * size);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        f.num(x0),
        f.num(y0),
        f.num(w),
        f.num(h)
    );
    let _ = writeln!(
        s,
        "<style>.piece{{stroke:none}}.side-1{{fill:#cfe3f7}}.side-2{{fill:#f7e3cf}}.edge{{fill:none;stroke:#333;stroke-width:{stroke}}}.curve{{stroke:#c00}}.cut-locus{{stroke:#06c}}.seam{{fill:none;stroke:#090;stroke-dasharray:{stroke} {stroke};stroke-width:{stroke}}}</style>"
    );
    for (i, piece) in layout.pieces.iter().enumerate() {
        let Some(first) = piece.boundary.first() else { continue };
        let mut d = format!("M {}", f.pt(first.piece.start()));
        for e in &piece.boundary {
            d.push(' ');
            d += &draw(&f, &e.piece);
        }
        d += " Z";
        let _ = writeln!(s, r#"<path id="piece-{i}" class="piece {}" d="{d}"/>"#, side_class(piece.side));
    }
    for piece in &layout.pieces {
        for e in &piece.boundary {
            let d = format!("M {} {}", f.pt(e.piece.start()), draw(&f, &e.piece));
            let _ = writeln!(s, r#"<path class="{} {}" d="{d}"/>"#, element_class(e), side_class(piece.side));
        }
    }
    for seam in &layout.seams {
        if let Seam::Generator { foot, tip, side } = seam {
            for k in 0..2 {
                let a = Vec2::new(foot[k][0], foot[k][1]);
                let b = Vec2::new(tip[k][0], tip[k][1]);
                let _ = writeln!(s, r#"<path class="seam generator {}" d="M {} L {}"/>"#, side_class(*side), f.pt(a), f.pt(b));
            }
        }
    }
    s += "</svg>\n";
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ClosedCurve;
    use crate::fixtures;
    use crate::geom::{Line2, ParabolicArc};

    #[test]
    fn empty_layout_is_a_valid_canvas() {
        let s = emit_svg(&PlanarLayout::default(), &SvgConfig::default());
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(!s.contains("<path"));
    }

    #[test]
    fn cubic_reproduces_the_parabola() {
        let a = ParabolicArc::new(Vec2::new(0.3, 1.0), Line2::new(Vec2::zeros(), Vec2::new(1.0, 0.0)), -0.7, 1.2);
        let [p0, c1, c2, p3] = cubic_controls(&Piece::Arc(a)).unwrap();
        for i in 0..=10 {
            let u = i as f64 / 10.0;
            let v = 1.0 - u;
            let b = p0 * (v * v * v) + c1 * (3.0 * v * v * u) + c2 * (3.0 * v * u * u) + p3 * (u * u * u);
            assert!((b - a.at(a.t0 + u * (a.t1 - a.t0))).norm() < 1e-12);
        }
    }

    #[test]
    fn pyramid_apex_half_draws_eight_arcs() {
        let p = fixtures::pyramid();
        let c = ClosedCurve::new(&p, fixtures::pyramid_curve()).unwrap();
        let l = crate::unfold::unfold_side(&p, &c, Side::Left).unwrap();
        let s = emit_svg(&l, &SvgConfig::default());
        assert_eq!(s.matches(r#"class="edge arc"#).count(), 8);
    }

    #[test]
    fn output_is_deterministic() {
        let (p, q) = fixtures::sliced_tetrahedron();
        let c = ClosedCurve::new(&p, q).unwrap();
        let a = emit_svg(&crate::unfold::unfold_full(&p, &c).unwrap(), &SvgConfig::default());
        let b = emit_svg(&crate::unfold::unfold_full(&p, &c).unwrap(), &SvgConfig::default());
        assert_eq!(a, b);
        assert_eq!(a.matches(r#"class="piece"#).count(), 5);
    }
}
