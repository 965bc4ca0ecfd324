//! Closed polygonal curves on a polyhedron: validation, per-side angles,
//! convexity classification, and generators for the curves the method accepts.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{cross, Tolerance, Vec2, Vec3};
use crate::surface::{split, ConvexPolyhedron, Side, SplitSurface, SurfaceError, SurfacePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("segment {0} has zero length")]
    ZeroLengthSegment(usize),
    #[error("offset {0} is outside (0, 1) or the offset count does not match the vertex degree")]
    OffsetOutOfRange(f64),
    #[error("polygon point {0} is not strictly inside face {1}")]
    PolygonNotInFace(usize, usize),
}

/// An oriented simple closed curve on a polyhedron, already split into halves.
#[derive(Debug, Clone)]
pub struct ClosedCurve {
    pub points: Vec<SurfacePoint>,
    pub positions: Vec<Vec3>,
    pub left_angles: Vec<f64>,
    pub right_angles: Vec<f64>,
    pub split: SplitSurface,
    /// True when this curve is the reversal of the one it was built from.
    pub reversed: bool,
}

impl ClosedCurve {
    pub fn new(poly: &ConvexPolyhedron, points: Vec<SurfacePoint>) -> Result<Self, CurveError> {
        let tol = poly.tolerance();
        let positions = points.iter().map(|p| p.position(poly)).collect::<Result<Vec<_>, _>>()?;
        let n = positions.len();
        for i in 0..n {
            if (positions[(i + 1) % n] - positions[i]).norm() <= tol.eps_len {
                return Err(CurveError::ZeroLengthSegment(i));
            }
        }
        let split = split(poly, &points)?;
        let left_angles = (0..n).map(|k| split.angle_at(k, Side::Left)).collect();
        let right_angles = (0..n).map(|k| split.angle_at(k, Side::Right)).collect();
        Ok(ClosedCurve { points, positions, left_angles, right_angles, split, reversed: false })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same curve traversed the other way; index 0 stays first.
    pub fn reversed(&self, poly: &ConvexPolyhedron) -> Result<Self, CurveError> {
        let n = self.points.len();
        let order: Vec<usize> = std::iter::once(0).chain((1..n).rev()).collect();
        let mut c = ClosedCurve::new(poly, order.iter().map(|&i| self.points[i].clone()).collect())?;
        c.reversed = !self.reversed;
        Ok(c)
    }

    pub fn angles(&self, side: Side) -> &[f64] {
        match side {
            Side::Left => &self.left_angles,
            Side::Right => &self.right_angles,
        }
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        let n = self.positions.len();
        (0..n).map(|i| (self.positions[(i + 1) % n] - self.positions[i]).norm()).collect()
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Polyhedron vertices the curve passes through.
    pub fn polyhedron_vertices(&self, poly: &ConvexPolyhedron) -> Vec<usize> {
        let tol = poly.tolerance();
        self.points
            .iter()
            .filter_map(|p| match p.locate(poly, &tol) {
                Ok(crate::surface::Location::Vertex(v)) => Some(v),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexTag {
    Convex,
    Reflex,
}

/// A curve point whose angle on some side differs from pi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveVertex {
    pub index: usize,
    pub angle: f64,
    pub tag: VertexTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveClassification {
    pub convex_left: bool,
    pub convex_right: bool,
    pub is_quasigeodesic: bool,
    pub is_geodesic: bool,
    pub left_vertices: Vec<CurveVertex>,
    pub right_vertices: Vec<CurveVertex>,
    /// Polyhedron vertices on the curve.
    pub through_vertices: Vec<usize>,
}

impl CurveClassification {
    /// Curves through two or more polyhedron vertices are only accepted when
    /// they are quasigeodesics.
    pub fn vertex_rule_ok(&self) -> bool {
        self.through_vertices.len() <= 1 || self.is_quasigeodesic
    }
}

/// Curve points on one side with angle away from pi, in curve order.
pub fn vertices(curve: &ClosedCurve, side: Side, tol: &Tolerance) -> Vec<CurveVertex> {
    curve
        .angles(side)
        .iter()
        .enumerate()
        .filter_map(|(index, &angle)| {
            let tag = if angle < PI - tol.eps_ang {
                VertexTag::Convex
            } else if angle > PI + tol.eps_ang {
                VertexTag::Reflex
            } else {
                return None;
            };
            Some(CurveVertex { index, angle, tag })
        })
        .collect()
}

pub fn classify(poly: &ConvexPolyhedron, curve: &ClosedCurve) -> CurveClassification {
    let tol = poly.tolerance();
    let left_vertices = vertices(curve, Side::Left, &tol);
    let right_vertices = vertices(curve, Side::Right, &tol);
    let convex_left = left_vertices.iter().all(|v| v.tag == VertexTag::Convex);
    let convex_right = right_vertices.iter().all(|v| v.tag == VertexTag::Convex);
    CurveClassification {
        convex_left,
        convex_right,
        is_quasigeodesic: convex_left && convex_right,
        is_geodesic: left_vertices.is_empty() && right_vertices.is_empty(),
        left_vertices,
        right_vertices,
        through_vertices: curve.polyhedron_vertices(poly),
    }
}

/// Orients the curve so its left side is convex, preferring the smaller half
/// when both sides are. Returns the classification of the oriented curve.
pub fn canonicalize(poly: &ConvexPolyhedron, curve: ClosedCurve) -> Result<(ClosedCurve, CurveClassification), CurveError> {
    let c = classify(poly, &curve);
    let flip = if c.is_quasigeodesic {
        let (l, r) = (curve.split.halves[0].area(), curve.split.halves[1].area());
        r < l - poly.tolerance().eps_len * poly.tolerance().eps_len
    } else {
        !c.convex_left && c.convex_right
    };
    if flip {
        let rc = curve.reversed(poly)?;
        let c = classify(poly, &rc);
        Ok((rc, c))
    } else {
        Ok((curve, c))
    }
}

/// Curve cutting off vertex `v`: one point per incident edge at the given
/// fraction of the edge length from `v`, oriented with `v` on the left.
/// Offsets follow the counterclockwise order of `v`'s neighbors.
pub fn generate_truncation_curve(poly: &ConvexPolyhedron, v: usize, offsets: &[f64]) -> Result<ClosedCurve, CurveError> {
    let nbrs = poly.vertex_neighbors(v);
    if offsets.len() != nbrs.len() {
        return Err(CurveError::OffsetOutOfRange(offsets.len() as f64));
    }
    if let Some(&bad) = offsets.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(CurveError::OffsetOutOfRange(bad));
    }
    let points = nbrs.iter().zip(offsets).map(|(&w, &t)| SurfacePoint::Edge { edge: [v, w], t }).collect();
    ClosedCurve::new(poly, points)
}

/// Convex polygon strictly inside face `face`, given in the face's own planar
/// coordinates (see [`ConvexPolyhedron::to_face_coords`]). The polygon
/// interior ends up on the left.
pub fn generate_face_curve(poly: &ConvexPolyhedron, face: usize, polygon: &[Vec2]) -> Result<ClosedCurve, CurveError> {
    let tol = poly.tolerance();
    let fv = &poly.faces[face];
    let corners: Vec<Vec2> = fv.iter().map(|&i| poly.to_face_coords(face, poly.vertex(i))).collect();
    for (k, p) in polygon.iter().enumerate() {
        let inside = (0..corners.len()).all(|j| {
            let a = corners[j];
            let b = corners[(j + 1) % corners.len()];
            cross((b - a).normalize(), p - a) > tol.eps_len
        });
        if !inside {
            return Err(CurveError::PolygonNotInFace(k, face));
        }
    }
    let signed: f64 = (0..polygon.len()).map(|i| cross(polygon[i], polygon[(i + 1) % polygon.len()])).sum();
    let mut pts = polygon.to_vec();
    if signed < 0.0 {
        pts[1..].reverse();
    }
    let points = pts
        .iter()
        .map(|p| SurfacePoint::Face { face, coords: crate::fixtures::face_weights(poly, face, poly.from_face_coords(face, *p)) })
        .collect();
    ClosedCurve::new(poly, points)
}
