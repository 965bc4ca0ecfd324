//! Source unfoldings: a half laid out in the development of its cone, the
//! other half split into one region per curve segment, and the two joined.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{check_cylinder_generators, check_generator_condition, closest_point, fit_cone, ConeDescriptor, ConeError, ConeKind};
use crate::curve::{canonicalize, ClosedCurve, CurveError};
use crate::cutlocus::trace::{BoundaryElement, CurveFrames, Provenance, RayCut, RayKind, Tracer};
use crate::cutlocus::{cut_locus, polar, CutLocusError, CutLocusTree};
use crate::geom::{signed_angle, PlanarMotion, Vec2};
use crate::surface::{ConvexPolyhedron, HalfSurface, Side};

#[derive(Debug, Error)]
pub enum UnfoldError {
    #[error("not eligible at stage {stage}: {reason}")]
    NotEligible { stage: String, reason: String },
    #[error("generator cut leaves a gap of {0} in the layout boundary")]
    GeneratorCutDisconnects(f64),
    #[error("region for boundary segment {0} has no matching segment on the other side")]
    Unattached(usize),
    #[error(transparent)]
    CutLocus(#[from] CutLocusError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

impl UnfoldError {
    fn not_eligible(stage: &str, reason: impl ToString) -> Self {
        UnfoldError::NotEligible { stage: stage.into(), reason: reason.to_string() }
    }

    /// Pipeline stage for eligibility failures.
    pub fn stage(&self) -> Option<&str> {
        match self {
            UnfoldError::NotEligible { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

/// A flat piece of the layout. The boundary is counterclockwise and already
/// placed; `placement` is the motion applied to the piece's development.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanarPiece {
    pub side: Side,
    /// Boundary segment the piece stands on (regions only).
    pub base: Option<usize>,
    pub boundary: Vec<BoundaryElement>,
    pub placement: PlanarMotion,
}

impl PlanarPiece {
    pub fn area(&self) -> f64 {
        crate::cutlocus::trace::chain_area(&self.boundary)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seam {
    /// Generator cut of a half, with its two images.
    Generator { side: Side, foot: [[f64; 2]; 2], tip: [[f64; 2]; 2] },
    /// Opening between the regions on either side of a curve vertex.
    Gap { curve_vertex: usize, point: [f64; 2], angle: f64, curvature: f64 },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PlanarLayout {
    pub pieces: Vec<PlanarPiece>,
    pub seams: Vec<Seam>,
}

impl PlanarLayout {
    pub fn area(&self) -> f64 {
        self.pieces.iter().map(|p| p.area()).sum()
    }

    pub fn elements(&self) -> impl Iterator<Item = &BoundaryElement> {
        self.pieces.iter().flat_map(|p| p.boundary.iter())
    }
}

fn place(elements: &[BoundaryElement], m: &PlanarMotion) -> Vec<BoundaryElement> {
    elements.iter().map(|e| BoundaryElement { piece: e.piece.transformed(m), provenance: e.provenance }).collect()
}

/// The generator cut of a half: where it starts on the curve and its direction.
pub fn generator_cut(half: &HalfSurface, cone: &ConeDescriptor, tree: &CutLocusTree) -> Result<RayCut, UnfoldError> {
    let tol = &tree.field.tol;
    let angles = &tree.field.angles;
    let lengths = &tree.field.lengths;
    let n = lengths.len();
    match cone.kind {
        ConeKind::Apex => {
            let cp = closest_point(cone, tol).map_err(|e| UnfoldError::not_eligible("cone", e))?;
            let k = cone.boundary_pos(cp.segment);
            if cp.t > 0.0 {
                return Ok(RayCut { frame: k, x: cp.t * lengths[k], theta: PI / 2.0, kind: RayKind::Generator });
            }
            let alpha = angles[k];
            if alpha <= PI + tol.eps_ang {
                return Ok(RayCut { frame: k, x: 0.0, theta: alpha / 2.0, kind: RayKind::Generator });
            }
            // reflex corner: follow the generator line into the half
            let frames = CurveFrames::new(half);
            let apex = cone.apex_point().ok_or_else(|| UnfoldError::not_eligible("cone", ConeError::NoApex))?;
            let local = frames.get(k, false).inverse().apply(apex);
            let dir = if cone.apex_side_bounded { local } else { -local };
            let theta = polar(dir).clamp(PI / 2.0, alpha - PI / 2.0);
            Ok(RayCut { frame: k, x: 0.0, theta, kind: RayKind::Generator })
        }
        ConeKind::Cylinder => {
            // the apex sits at infinity along the generators: take the curve
            // point furthest in that direction
            let frames = CurveFrames::new(half);
            let t = frames.closure.translation();
            let g = Vec2::new(-t.y, t.x).normalize();
            let height: Vec<f64> = frames.frames.iter().map(|m| m.translation().dot(&g)).collect();
            let top = height.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let k = (0..n).find(|&k| height[k] >= top - 1e3 * tol.eps_len).unwrap();
            if height[(k + 1) % n] >= top - 1e3 * tol.eps_len {
                return Ok(RayCut { frame: k, x: 0.5 * lengths[k], theta: PI / 2.0, kind: RayKind::Generator });
            }
            let alpha = angles[k];
            if alpha <= PI + tol.eps_ang {
                return Err(UnfoldError::not_eligible("generator_condition", "the highest curve point is a convex corner"));
            }
            let local = frames.get(k, false).inverse().apply_vec(g);
            Ok(RayCut { frame: k, x: 0.0, theta: polar(local).clamp(PI / 2.0, alpha - PI / 2.0), kind: RayKind::Generator })
        }
        ConeKind::Planar => {
            match (0..n).find(|&k| angles[k] < PI - tol.eps_ang) {
                Some(k) => Ok(RayCut { frame: k, x: 0.0, theta: angles[k] / 2.0, kind: RayKind::Generator }),
                None => Ok(RayCut { frame: 0, x: 0.5 * lengths[0], theta: PI / 2.0, kind: RayKind::Generator }),
            }
        }
    }
}

/// Trace pieces to cut: edges with no end on the curve, and any piece whose
/// two sides land apart in the development.
fn cut_flags(tracer: &Tracer, frames: &dyn Fn(usize, bool) -> PlanarMotion, tol: f64) -> Vec<bool> {
    let tree = tracer.tree;
    let mut cut = vec![false; tracer.pieces.len()];
    for pair in tracer.sides.chunks(2) {
        let a = tracer.side_image(&pair[0], frames);
        let b = tracer.side_image(&pair[1], frames).reversed();
        let d = (a.start() - b.start()).norm().max((a.end() - b.end()).norm()).max((a.midpoint() - b.midpoint()).norm());
        let edge = &tree.edges[tracer.pieces[pair[0].index].edge];
        let on_curve = tree.nodes[edge.a].boundary.is_some() || tree.nodes[edge.b].boundary.is_some();
        cut[pair[0].index] = !on_curve || d > tol;
    }
    cut
}

/// Source unfolding of one half: every cut-locus edge whose sides develop
/// apart is cut, plus the generator cut; the result is one piece placed with
/// the generator's foot at the origin and the generator along the positive x
/// axis.
pub fn unfold_half(half: &HalfSurface, tree: &CutLocusTree, cone: &ConeDescriptor) -> Result<PlanarLayout, UnfoldError> {
    let tol = tree.field.tol;
    let gen = generator_cut(half, cone, tree)?;
    let tracer = Tracer::new(half, tree, vec![gen])?;
    let frames = CurveFrames::new(half);
    let get = |k: usize, w: bool| frames.get(k, w);
    let cut = cut_flags(&tracer, &get, 1e3 * tol.eps_len);
    let region = tracer.regions(&get, &|i| cut[i]).pop().unwrap();
    if region.gap > 1e3 * tol.eps_len {
        return Err(UnfoldError::GeneratorCutDisconnects(region.gap));
    }
    let f = frames.get(gen.frame, false);
    let foot = f.apply(gen.origin());
    let m = PlanarMotion::from_frame(foot, f.apply_vec(gen.dir())).inverse();
    let boundary = place(&region.boundary, &m);
    let tip_start = m.apply(f.apply(tracer.hits[0]));
    let fe = frames.get(gen.frame, true);
    let tip_end = m.apply(fe.apply(tracer.hits[0]));
    let foot_end = m.apply(fe.apply(gen.origin()));
    let v = |p: Vec2| [p.x, p.y];
    Ok(PlanarLayout {
        pieces: vec![PlanarPiece { side: half.side, base: None, boundary, placement: m }],
        seams: if tip_start.norm().max(foot_end.norm()) <= 1e3 * tol.eps_len {
            Vec::new()
        } else {
            vec![Seam::Generator { side: half.side, foot: [[0.0, 0.0], v(foot_end)], tip: [v(tip_start), v(tip_end)] }]
        },
    })
}

/// One region of the reflex side per boundary segment, developed in the
/// segment's own frame: the cuts are all cut-locus edges plus the
/// projection from each reflex vertex, split at the angle bisector.
/// `extra` adds straight cuts inside segments.
pub fn decompose_reflex_side(
    half: &HalfSurface,
    tree: &CutLocusTree,
    extra: &[RayCut],
) -> Result<Vec<(usize, Vec<BoundaryElement>)>, UnfoldError> {
    let field = &tree.field;
    let n = field.lengths.len();
    let mut cuts: Vec<RayCut> = (0..n).map(|k| RayCut { frame: k, x: 0.0, theta: field.angles[k] / 2.0, kind: RayKind::Reflex }).collect();
    cuts.extend_from_slice(extra);
    let tracer = Tracer::new(half, tree, cuts)?;
    let frames = CurveFrames::new(half);
    let get = |k: usize, w: bool| frames.get(k, w);
    let mut out = Vec::new();
    for r in tracer.regions(&get, &|_| true) {
        if r.gap > 1e3 * field.tol.eps_len {
            return Err(UnfoldError::CutLocus(CutLocusError::NotATree(format!("region boundary gap {}", r.gap))));
        }
        let base = tracer.cuts[r.start_cut].frame;
        out.push((base, r.boundary));
    }
    Ok(out)
}

/// Which half is laid out whole: the convex one, the smaller when both are.
fn checked_cone(half: &HalfSurface, stage_gen: bool) -> Result<ConeDescriptor, UnfoldError> {
    let cone = fit_cone(half).map_err(|e| UnfoldError::not_eligible("cone", e))?;
    if stage_gen {
        let check = match cone.kind {
            ConeKind::Apex => check_generator_condition(&cone),
            ConeKind::Cylinder => check_cylinder_generators(&cone),
            ConeKind::Planar => return Ok(cone),
        }
        .map_err(|e| UnfoldError::not_eligible("generator_condition", e))?;
        if !check.ok {
            return Err(UnfoldError::not_eligible(
                "generator_condition",
                format!("angular coordinate stalls on segment {:?}", check.witness_segment),
            ));
        }
    }
    Ok(cone)
}

/// Source unfolding of one half after the eligibility checks.
pub fn unfold_side(poly: &ConvexPolyhedron, curve: &ClosedCurve, side: Side) -> Result<PlanarLayout, UnfoldError> {
    let half = curve.split.half(side);
    let cone = checked_cone(half, true)?;
    let tree = cut_locus(half, &poly.tolerance())?;
    unfold_half(half, &tree, &cone)
}

fn curve_frame(e: &BoundaryElement) -> Option<(usize, f64, f64, PlanarMotion)> {
    match e.provenance {
        Provenance::Curve { curve_segment, from, to, .. } => {
            let m = PlanarMotion::between_segments(Vec2::new(from, 0.0), Vec2::new(to, 0.0), e.piece.start(), e.piece.end());
            Some((curve_segment, from, to, m))
        }
        _ => None,
    }
}

/// Interior angle of a closed boundary at the junction ending element `i`.
fn corner(boundary: &[BoundaryElement], i: usize) -> f64 {
    let next = &boundary[(i + 1) % boundary.len()];
    PI - signed_angle(boundary[i].piece.end_tangent(), next.piece.start_tangent())
}

/// Full source unfolding of the polyhedron with respect to the curve.
pub fn unfold_full(poly: &ConvexPolyhedron, curve: &ClosedCurve) -> Result<PlanarLayout, UnfoldError> {
    // a curve convex to neither side is still joined; the verdict is left to the checks
    let (curve, _) = canonicalize(poly, curve.clone())?;
    let tol = poly.tolerance();
    let (h1, h2) = (curve.split.half(Side::Left), curve.split.half(Side::Right));
    let cone1 = checked_cone(h1, true)?;
    checked_cone(h2, false)?;
    let t1 = cut_locus(h1, &tol)?;
    let t2 = cut_locus(h2, &tol)?;
    let gen = generator_cut(h1, &cone1, &t1)?;
    let mut layout = unfold_half(h1, &t1, &cone1)?;
    let p1 = layout.pieces[0].boundary.clone();
    let lengths1 = h1.boundary_lengths();
    let lengths2 = h2.boundary_lengths();
    let n = lengths2.len();
    let seg2 = |cs: usize| {
        (0..n).find(|&j| {
            let ci = &h2.boundary_curve_index;
            let (a, b) = (ci[j], ci[(j + 1) % n]);
            (if b == (a + 1) % n { a } else { b }) == cs
        })
    };
    let mut extra = Vec::new();
    if gen.x > 0.0 {
        let cs = h1.boundary_curve_index[gen.frame];
        let j = seg2(cs).ok_or(UnfoldError::Unattached(gen.frame))?;
        extra.push(RayCut { frame: j, x: lengths1[gen.frame] - gen.x, theta: PI / 2.0, kind: RayKind::Split });
    }
    let regions = decompose_reflex_side(h2, &t2, &extra)?;
    let slack = 1e3 * tol.eps_len;
    for (j, boundary) in regions {
        let Some((cs, x0, x1, h)) = boundary.iter().find_map(curve_frame) else {
            return Err(UnfoldError::Unattached(j));
        };
        let len = lengths2[j];
        let (u0, u1) = (len - x1, len - x0);
        let target = p1
            .iter()
            .filter_map(curve_frame)
            .find(|&(c, a, b, _)| c == cs && a <= u0 + slack && b >= u1 - slack)
            .ok_or(UnfoldError::Unattached(j))?;
        let flip = PlanarMotion::new(PI, Vec2::new(len, 0.0));
        let m = target.3.compose(&flip).compose(&h.inverse());
        layout.pieces.push(PlanarPiece { side: Side::Right, base: Some(j), boundary: place(&boundary, &m), placement: m });
    }
    layout.seams.extend(gap_seams(&layout, &curve, slack));
    Ok(layout)
}

/// Measured opening at each curve vertex between the two regions meeting there.
fn gap_seams(layout: &PlanarLayout, curve: &ClosedCurve, slack: f64) -> Vec<Seam> {
    let n = curve.len();
    let mut out = Vec::new();
    let p1 = &layout.pieces[0].boundary;
    for c in 0..n {
        let at = |e: &BoundaryElement, seg: usize| matches!(e.provenance, Provenance::Curve { curve_segment, .. } if curve_segment == seg);
        // side 1 runs along the curve: segment c-1 ends at vertex c
        let prev = (c + n - 1) % n;
        let Some(i1) = (0..p1.len()).find(|&i| at(&p1[i], prev) && at(&p1[(i + 1) % p1.len()], c)) else {
            continue;
        };
        let point = p1[i1].piece.end();
        let mut sum = corner(p1, i1);
        let mut found = 0;
        for piece in &layout.pieces[1..] {
            let b = &piece.boundary;
            for i in 0..b.len() {
                let near = (b[i].piece.end() - point).norm() <= slack;
                let curve_in = matches!(b[i].provenance, Provenance::Curve { .. });
                let curve_out = matches!(b[(i + 1) % b.len()].provenance, Provenance::Curve { .. });
                if near && (curve_in != curve_out) {
                    sum += corner(b, i);
                    found += 1;
                }
            }
        }
        if found != 2 {
            continue;
        }
        let curvature = 2.0 * PI - curve.left_angles[c] - curve.right_angles[c];
        out.push(Seam::Gap { curve_vertex: c, point: [point.x, point.y], angle: 2.0 * PI - sum, curvature });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geom::cross;
    use crate::surface::SurfacePoint;
    use crate::verify::{check_layout, merged_boundary};

    fn tetra() -> (ConvexPolyhedron, ClosedCurve) {
        let (p, q) = fixtures::sliced_tetrahedron();
        let c = ClosedCurve::new(&p, q).unwrap();
        (p, c)
    }

    fn truncated() -> (ConvexPolyhedron, ClosedCurve) {
        let p = fixtures::truncated_cube();
        let c = ClosedCurve::new(&p, fixtures::truncated_cube_curve()).unwrap();
        (p, c)
    }

    fn pyramid() -> (ConvexPolyhedron, ClosedCurve) {
        let p = fixtures::pyramid();
        let c = ClosedCurve::new(&p, fixtures::pyramid_curve()).unwrap();
        (p, c)
    }

    #[test]
    fn tetra_halves_unfold_to_one_simple_piece() {
        let (p, c) = tetra();
        let s3 = 3f64.sqrt();
        for (side, area) in [(Side::Left, s3 / 3.0), (Side::Right, 2.0 * s3 / 3.0)] {
            let l = unfold_side(&p, &c, side).unwrap();
            assert_eq!(l.pieces.len(), 1);
            let r = check_layout(&l, area, &p.tolerance());
            assert!(r.simple, "{side:?}: {:?}", r.crossing);
            assert!(r.area_residual.abs() < 1e-12);
            assert_eq!(r.unpaired, 0);
        }
    }

    #[test]
    fn tetra_apex_side_is_cut_only_along_the_generator() {
        let (p, c) = tetra();
        let l = unfold_side(&p, &c, Side::Left).unwrap();
        let b = &l.pieces[0].boundary;
        assert!(b.iter().all(|e| !matches!(e.provenance, Provenance::CutLocus { .. })));
        let gens = b.iter().filter(|e| matches!(e.provenance, Provenance::Ray { ray: RayKind::Generator, .. })).count();
        assert_eq!(gens, 2);
    }

    #[test]
    fn tetra_full_unfolding_is_a_trapezoid() {
        let (p, c) = tetra();
        let l = unfold_full(&p, &c).unwrap();
        let tol = p.tolerance();
        let r = check_layout(&l, p.area(), &tol);
        assert!(r.simple);
        assert!(r.area_residual.abs() < 1e-12);
        let loops = merged_boundary(&l, &tol);
        assert_eq!(loops.len(), 1);
        let sides = &loops[0];
        assert_eq!(sides.len(), 4);
        let dir = |i: usize| (sides[i].end() - sides[i].start()).normalize();
        let parallel = |i: usize, j: usize| cross(dir(i), dir(j)).abs() < 1e-9;
        let pairs = [parallel(0, 2), parallel(1, 3)];
        assert_eq!(pairs.iter().filter(|&&x| x).count(), 1);
    }

    #[test]
    fn tetra_base_side_splits_into_one_region_per_segment() {
        let (p, c) = tetra();
        let half = c.split.half(Side::Right);
        let tree = cut_locus(half, &p.tolerance()).unwrap();
        let regions = decompose_reflex_side(half, &tree, &[]).unwrap();
        assert_eq!(regions.len(), 3);
        let mut bases: Vec<usize> = regions.iter().map(|r| r.0).collect();
        bases.sort();
        assert_eq!(bases, vec![0, 1, 2]);
        for (_, b) in &regions {
            let a = crate::cutlocus::trace::chain_area(b);
            assert!((a - 2.0 * 3f64.sqrt() / 9.0).abs() < 1e-12, "{a}");
        }
    }

    #[test]
    fn quasigeodesic_needs_no_reflex_cuts() {
        let (p, c) = truncated();
        for side in [Side::Left, Side::Right] {
            let half = c.split.half(side);
            let tree = cut_locus(half, &p.tolerance()).unwrap();
            assert!(half.boundary_angles().iter().all(|&a| a <= PI + 1e-9));
            let regions = decompose_reflex_side(half, &tree, &[]).unwrap();
            assert_eq!(regions.len(), half.boundary.len());
        }
    }

    #[test]
    fn truncated_cube_full_unfolding_is_simple() {
        let (p, c) = truncated();
        let l = unfold_full(&p, &c).unwrap();
        let r = check_layout(&l, p.area(), &p.tolerance());
        assert!(r.simple);
        assert!(r.area_residual.abs() <= 1e-6 * p.area());
        assert_eq!(r.unpaired, 0);
        assert_eq!(r.gaps.len(), 4);
        assert!(r.max_gap_residual < 1e-9);
    }

    #[test]
    fn pyramid_join_keeps_arcs_paired() {
        let (p, c) = pyramid();
        let l = unfold_full(&p, &c).unwrap();
        let r = check_layout(&l, p.area(), &p.tolerance());
        assert!(r.simple);
        assert_eq!(r.unpaired, 0);
        assert!(r.max_pairing_residual < 1e-9);
        let arcs = l.elements().filter(|e| e.piece.is_arc()).count();
        assert!(arcs >= 8 && arcs % 2 == 0, "{arcs}");
    }

    #[test]
    fn pyramid_apex_half_shows_each_arc_twice() {
        let (p, c) = pyramid();
        let l = unfold_side(&p, &c, Side::Left).unwrap();
        let arcs = l.elements().filter(|e| e.piece.is_arc()).count();
        assert_eq!(arcs, 8);
    }

    #[test]
    fn cube_belt_unfolds_on_its_cylinder() {
        let p = fixtures::cube();
        let q: Vec<SurfacePoint> = (0..4).map(|i| SurfacePoint::Edge { edge: [i, i + 4], t: 0.5 }).collect();
        let c = ClosedCurve::new(&p, q).unwrap();
        let l = unfold_full(&p, &c).unwrap();
        let r = check_layout(&l, p.area(), &p.tolerance());
        assert!(r.simple);
        assert!(r.area_residual.abs() < 1e-9);
    }

    #[test]
    fn face_square_apex_side_needs_no_generator_cut() {
        let p = fixtures::truncated_cube();
        let fv = &p.faces[0];
        let centre = fv.iter().map(|&i| p.to_face_coords(0, p.vertex(i))).sum::<Vec2>() / fv.len() as f64;
        let square: Vec<Vec2> = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].iter().map(|&(x, y)| centre + Vec2::new(x, y) * 0.05).collect();
        let c = crate::curve::generate_face_curve(&p, 0, &square).unwrap();
        let (c, _) = canonicalize(&p, c).unwrap();
        let l = unfold_side(&p, &c, Side::Left).unwrap();
        assert!(l.seams.is_empty());
        assert_eq!(l.pieces[0].boundary.len(), 4);
    }
}
