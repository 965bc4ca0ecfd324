//! Convex polyhedra, points on their surface, intrinsic triangle meshes and
//! the split of a polyhedron along a closed curve into two half-surfaces.

use std::collections::{HashMap, HashSet, VecDeque};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};
use thiserror::Error;

use crate::geom::{cross, PlanarMotion, Tolerance, Vec2, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("curve is not simple: {0}")]
    CurveNotSimple(String),
    #[error("curve is not closed: {0}")]
    CurveNotClosed(String),
    #[error("curve segment {0} does not lie in a common face")]
    SegmentLeavesFace(usize),
    #[error("point is not on the curve")]
    PointNotOnCurve,
    #[error("faces {0} and {1} are not adjacent")]
    NonAdjacentFaces(usize, usize),
    #[error("invalid surface point: {0}")]
    InvalidPoint(String),
}

/// Closed convex polyhedral surface. Faces list vertex indices counterclockwise
/// seen from outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolyhedron {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    BadIndex { face: usize },
    DegenerateFace { face: usize },
    NonManifoldEdge { from: usize, to: usize },
    Euler { chi: i64 },
    NonPlanarFace { face: usize, deviation: f64 },
    NonConvex { face: usize, vertex: usize, height: f64 },
    CurvatureSum { total: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub total_curvature: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl ConvexPolyhedron {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<Vec<usize>>) -> Self {
        ConvexPolyhedron { vertices: vertices.iter().map(|v| [v.x, v.y, v.z]).collect(), faces }
    }

    pub fn vertex(&self, i: usize) -> Vec3 {
        let v = self.vertices[i];
        Vec3::new(v[0], v[1], v[2])
    }

    /// Bounding box diagonal.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for i in 0..self.vertices.len() {
            let v = self.vertex(i);
            lo = lo.inf(&v);
            hi = hi.sup(&v);
        }
        (hi - lo).norm()
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance::for_diameter(self.diameter())
    }

    /// Newell normal (unit, outward).
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let face = &self.faces[f];
        let mut n = Vec3::zeros();
        for i in 0..face.len() {
            let a = self.vertex(face[i]);
            let b = self.vertex(face[(i + 1) % face.len()]);
            n += a.cross(&b);
        }
        n.normalize()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let face = &self.faces[f];
        let mut n = Vec3::zeros();
        for i in 0..face.len() {
            n += self.vertex(face[i]).cross(&self.vertex(face[(i + 1) % face.len()]));
        }
        0.5 * n.norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Orthonormal frame of a face: origin at its first vertex, x toward the second.
    pub fn face_frame(&self, f: usize) -> (Vec3, Vec3, Vec3) {
        let face = &self.faces[f];
        let o = self.vertex(face[0]);
        let e1 = (self.vertex(face[1]) - o).normalize();
        let n = self.face_normal(f);
        (o, e1, n.cross(&e1))
    }

    pub fn to_face_coords(&self, f: usize, p: Vec3) -> Vec2 {
        let (o, e1, e2) = self.face_frame(f);
        Vec2::new((p - o).dot(&e1), (p - o).dot(&e2))
    }

    pub fn from_face_coords(&self, f: usize, p: Vec2) -> Vec3 {
        let (o, e1, e2) = self.face_frame(f);
        o + e1 * p.x + e2 * p.y
    }

    /// Face angle at position `k` of face `f`.
    pub fn corner_angle(&self, f: usize, k: usize) -> f64 {
        let face = &self.faces[f];
        let n = face.len();
        let v = self.vertex(face[k]);
        let a = self.vertex(face[(k + n - 1) % n]) - v;
        let b = self.vertex(face[(k + 1) % n]) - v;
        a.angle(&b)
    }

    /// Angle defect at every vertex.
    pub fn curvatures(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.vertices.len()];
        for (f, face) in self.faces.iter().enumerate() {
            for k in 0..face.len() {
                sum[face[k]] += self.corner_angle(f, k);
            }
        }
        sum.into_iter().map(|s| 2.0 * PI - s).collect()
    }

    /// Directed edge `(u, v)` to the face that traverses it.
    pub fn directed_edges(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for (f, face) in self.faces.iter().enumerate() {
            for k in 0..face.len() {
                m.insert((face[k], face[(k + 1) % face.len()]), f);
            }
        }
        m
    }

    /// Faces incident to a vertex in counterclockwise order (seen from outside).
    pub fn vertex_fan(&self, v: usize) -> Vec<usize> {
        let de = self.directed_edges();
        // next vertices around v: face containing (v, w) then its predecessor of v
        let start = self.faces.iter().position(|f| f.contains(&v));
        let Some(start) = start else { return Vec::new() };
        let mut fan = vec![start];
        let mut f = start;
        loop {
            let face = &self.faces[f];
            let k = face.iter().position(|&x| x == v).unwrap();
            let prev = face[(k + face.len() - 1) % face.len()];
            // the face across edge (prev, v) traverses (v, prev)
            match de.get(&(v, prev)) {
                Some(&g) if g != start => {
                    fan.push(g);
                    f = g;
                }
                _ => break,
            }
            if fan.len() > self.faces.len() {
                break;
            }
        }
        fan
    }

    /// Neighbor vertices of `v` in the same counterclockwise order as [`Self::vertex_fan`].
    pub fn vertex_neighbors(&self, v: usize) -> Vec<usize> {
        self.vertex_fan(v)
            .into_iter()
            .map(|f| {
                let face = &self.faces[f];
                let k = face.iter().position(|&x| x == v).unwrap();
                face[(k + 1) % face.len()]
            })
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let nv = self.vertices.len();
        let tol = self.tolerance();
        for (f, face) in self.faces.iter().enumerate() {
            if face.iter().any(|&i| i >= nv) {
                report.violations.push(Violation::BadIndex { face: f });
            } else if face.len() < 3 || self.face_area(f) <= tol.eps_len * tol.eps_len {
                report.violations.push(Violation::DegenerateFace { face: f });
            }
        }
        if !report.violations.is_empty() {
            return report;
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for face in &self.faces {
            for k in 0..face.len() {
                *directed.entry((face[k], face[(k + 1) % face.len()])).or_default() += 1;
            }
        }
        let mut edges = HashSet::new();
        for (&(u, v), &c) in &directed {
            if c != 1 || directed.get(&(v, u)) != Some(&1) {
                report.violations.push(Violation::NonManifoldEdge { from: u, to: v });
            }
            edges.insert((u.min(v), u.max(v)));
        }
        let used: HashSet<usize> = self.faces.iter().flatten().copied().collect();
        let chi = used.len() as i64 - edges.len() as i64 + self.faces.len() as i64;
        if chi != 2 {
            report.violations.push(Violation::Euler { chi });
        }
        let plane_tol = 1e-7 * self.diameter();
        for (f, face) in self.faces.iter().enumerate() {
            let n = self.face_normal(f);
            let o = self.vertex(face[0]);
            for &i in face {
                let dev = (self.vertex(i) - o).dot(&n).abs();
                if dev > plane_tol {
                    report.violations.push(Violation::NonPlanarFace { face: f, deviation: dev });
                    break;
                }
            }
            // centroid of the face as plane anchor is more stable than a single vertex
            let c = face.iter().map(|&i| self.vertex(i)).sum::<Vec3>() / face.len() as f64;
            for v in 0..nv {
                if !used.contains(&v) {
                    continue;
                }
                let h = (self.vertex(v) - c).dot(&n);
                if h > plane_tol {
                    report.violations.push(Violation::NonConvex { face: f, vertex: v, height: h });
                }
            }
        }
        let total: f64 = self.curvatures().iter().enumerate().filter(|(i, _)| used.contains(i)).map(|(_, c)| c).sum();
        report.total_curvature = total;
        if (total - 4.0 * PI).abs() > 1e-6 {
            report.violations.push(Violation::CurvatureSum { total });
        }
        report
    }

    /// Convex hull of a point cloud (triangular faces). Points strictly inside
    /// the hull are dropped.
    pub fn convex_hull(points: &[Vec3]) -> Option<ConvexPolyhedron> {
        hull::convex_hull(points)
    }

    /// Fan triangulation of every face.
    pub fn triangulate(&self) -> TriMesh {
        let positions = (0..self.vertices.len()).map(|i| self.vertex(i)).collect();
        let mut tris = Vec::new();
        let mut tri_face = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            for k in 1..face.len() - 1 {
                tris.push([face[0], face[k], face[k + 1]]);
                tri_face.push(f);
            }
        }
        TriMesh::new(positions, tris, tri_face)
    }
}

mod hull {
    use super::*;

    pub(super) fn convex_hull(points: &[Vec3]) -> Option<ConvexPolyhedron> {
        let n = points.len();
        if n < 4 {
            return None;
        }
        let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
        let eps = 1e-10 * scale;
        // initial tetrahedron
        let a = 0;
        let b = (1..n).max_by(|&i, &j| (points[i] - points[a]).norm().partial_cmp(&(points[j] - points[a]).norm()).unwrap())?;
        let line = points[b] - points[a];
        let c = (0..n).max_by(|&i, &j| {
            line.cross(&(points[i] - points[a])).norm().partial_cmp(&line.cross(&(points[j] - points[a])).norm()).unwrap()
        })?;
        let nrm = line.cross(&(points[c] - points[a]));
        if nrm.norm() <= eps {
            return None;
        }
        let d = (0..n).max_by(|&i, &j| {
            nrm.dot(&(points[i] - points[a])).abs().partial_cmp(&nrm.dot(&(points[j] - points[a])).abs()).unwrap()
        })?;
        if nrm.dot(&(points[d] - points[a])).abs() <= eps * nrm.norm() {
            return None;
        }
        let mut faces: Vec<[usize; 3]> = vec![[a, b, c], [a, c, d], [a, d, b], [b, d, c]];
        let centroid = (points[a] + points[b] + points[c] + points[d]) / 4.0;
        for f in faces.iter_mut() {
            let nn = (points[f[1]] - points[f[0]]).cross(&(points[f[2]] - points[f[0]]));
            if nn.dot(&(points[f[0]] - centroid)) < 0.0 {
                f.swap(1, 2);
            }
        }
        for p in 0..n {
            if [a, b, c, d].contains(&p) {
                continue;
            }
            let visible: Vec<bool> = faces
                .iter()
                .map(|f| {
                    let nn = (points[f[1]] - points[f[0]]).cross(&(points[f[2]] - points[f[0]])).normalize();
                    nn.dot(&(points[p] - points[f[0]])) > eps
                })
                .collect();
            if !visible.iter().any(|&v| v) {
                continue;
            }
            let mut vis_edges = HashSet::new();
            for (f, &v) in faces.iter().zip(&visible) {
                if v {
                    for k in 0..3 {
                        vis_edges.insert((f[k], f[(k + 1) % 3]));
                    }
                }
            }
            let mut new_faces: Vec<[usize; 3]> = faces.iter().zip(&visible).filter(|(_, &v)| !v).map(|(f, _)| *f).collect();
            for &(u, v) in &vis_edges {
                if !vis_edges.contains(&(v, u)) {
                    new_faces.push([u, v, p]);
                }
            }
            faces = new_faces;
        }
        let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
        used.sort_unstable();
        used.dedup();
        let remap: HashMap<usize, usize> = used.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Some(ConvexPolyhedron::new(
            used.iter().map(|&i| points[i]).collect(),
            faces.iter().map(|f| f.iter().map(|v| remap[v]).collect()).collect(),
        ))
    }
}

/// A point on the surface, in the curve-file vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfacePoint {
    Vertex { vertex: usize },
    Edge { edge: [usize; 2], t: f64 },
    Face { face: usize, coords: Vec<f64> },
}

/// Where a surface point sits combinatorially.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Vertex(usize),
    /// Edge with `a < b` and parameter in (0,1) from `a`.
    Edge(usize, usize, f64),
    Face(usize),
}

impl SurfacePoint {
    pub fn position(&self, p: &ConvexPolyhedron) -> Result<Vec3, SurfaceError> {
        match self {
            SurfacePoint::Vertex { vertex } => {
                if *vertex >= p.vertices.len() {
                    return Err(SurfaceError::InvalidPoint(format!("vertex {vertex} out of range")));
                }
                Ok(p.vertex(*vertex))
            }
            SurfacePoint::Edge { edge, t } => {
                if edge.iter().any(|&i| i >= p.vertices.len()) || !(0.0..=1.0).contains(t) {
                    return Err(SurfaceError::InvalidPoint(format!("bad edge point {edge:?} t={t}")));
                }
                Ok(p.vertex(edge[0]) * (1.0 - t) + p.vertex(edge[1]) * *t)
            }
            SurfacePoint::Face { face, coords } => {
                let Some(fv) = p.faces.get(*face) else {
                    return Err(SurfaceError::InvalidPoint(format!("face {face} out of range")));
                };
                if coords.len() != fv.len() {
                    return Err(SurfaceError::InvalidPoint(format!(
                        "face {face} has {} vertices but {} coords were given",
                        fv.len(),
                        coords.len()
                    )));
                }
                let s: f64 = coords.iter().sum();
                if coords.iter().any(|&c| c < -1e-12) || (s - 1.0).abs() > 1e-9 {
                    return Err(SurfaceError::InvalidPoint(format!("coords of face {face} are not convex weights")));
                }
                Ok(fv.iter().zip(coords).map(|(&v, &c)| p.vertex(v) * c).sum())
            }
        }
    }

    /// Combinatorial location, snapping to vertices and edges within the tolerance.
    pub fn locate(&self, p: &ConvexPolyhedron, tol: &Tolerance) -> Result<Location, SurfaceError> {
        let pos = self.position(p)?;
        let de = p.directed_edges();
        let snap_edge = |a: usize, b: usize, t: f64| -> Result<Location, SurfaceError> {
            if !de.contains_key(&(a, b)) {
                return Err(SurfaceError::InvalidPoint(format!("({a},{b}) is not an edge")));
            }
            let len = (p.vertex(a) - p.vertex(b)).norm();
            if t * len <= tol.eps_len {
                Ok(Location::Vertex(a))
            } else if (1.0 - t) * len <= tol.eps_len {
                Ok(Location::Vertex(b))
            } else if a < b {
                Ok(Location::Edge(a, b, t))
            } else {
                Ok(Location::Edge(b, a, 1.0 - t))
            }
        };
        match self {
            SurfacePoint::Vertex { vertex } => Ok(Location::Vertex(*vertex)),
            SurfacePoint::Edge { edge, t } => snap_edge(edge[0], edge[1], *t),
            SurfacePoint::Face { face, .. } => {
                let fv = &p.faces[*face];
                let q = p.to_face_coords(*face, pos);
                for k in 0..fv.len() {
                    let a = fv[k];
                    let b = fv[(k + 1) % fv.len()];
                    let pa = p.to_face_coords(*face, p.vertex(a));
                    let pb = p.to_face_coords(*face, p.vertex(b));
                    let len = (pb - pa).norm();
                    let h = cross((pb - pa) / len, q - pa);
                    if h.abs() <= tol.eps_len {
                        let t = ((q - pa).dot(&(pb - pa)) / (len * len)).clamp(0.0, 1.0);
                        return snap_edge(a, b, t);
                    }
                }
                Ok(Location::Face(*face))
            }
        }
    }
}

/// Intrinsic triangle mesh with per-triangle planar frames.
///
/// Edge `j` of triangle `t` runs from corner `j` to corner `j+1`.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub tris: Vec<[usize; 3]>,
    /// Face of the source polyhedron each triangle lies in.
    pub tri_face: Vec<usize>,
    /// Neighbor across each edge: (triangle, its local edge index).
    pub adj: Vec<[Option<(usize, usize)>; 3]>,
    /// Corner coordinates in the triangle's own frame: corner 0 at the origin,
    /// corner 1 on the positive x-axis.
    pub frames: Vec<[Vec2; 3]>,
}

impl TriMesh {
    pub fn new(positions: Vec<Vec3>, tris: Vec<[usize; 3]>, tri_face: Vec<usize>) -> Self {
        let mut edge_map: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for j in 0..3 {
                edge_map.insert((tri[j], tri[(j + 1) % 3]), (t, j));
            }
        }
        let adj = tris
            .iter()
            .map(|tri| {
                let mut a = [None; 3];
                for (j, slot) in a.iter_mut().enumerate() {
                    *slot = edge_map.get(&(tri[(j + 1) % 3], tri[j])).copied();
                }
                a
            })
            .collect();
        let frames = tris
            .iter()
            .map(|tri| {
                let a = positions[tri[0]];
                let b = positions[tri[1]];
                let c = positions[tri[2]];
                let ab = (b - a).norm();
                let e1 = (b - a) / ab;
                let ac = c - a;
                let x = ac.dot(&e1);
                let y = (ac - e1 * x).norm();
                [Vec2::zeros(), Vec2::new(ab, 0.0), Vec2::new(x, y)]
            })
            .collect();
        TriMesh { positions, tris, tri_face, adj, frames }
    }

    pub fn num_tris(&self) -> usize {
        self.tris.len()
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let f = &self.frames[t];
        0.5 * cross(f[1] - f[0], f[2] - f[0])
    }

    pub fn area(&self) -> f64 {
        (0..self.tris.len()).map(|t| self.tri_area(t)).sum()
    }

    pub fn corner_angle(&self, t: usize, k: usize) -> f64 {
        let f = &self.frames[t];
        let p = f[k];
        let a = f[(k + 1) % 3] - p;
        let b = f[(k + 2) % 3] - p;
        crate::geom::angle_between(a, b)
    }

    /// Sum of triangle angles at every mesh vertex.
    pub fn angle_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.positions.len()];
        for (t, tri) in self.tris.iter().enumerate() {
            for k in 0..3 {
                s[tri[k]] += self.corner_angle(t, k);
            }
        }
        s
    }

    /// Orthonormal 3D basis of a triangle's frame.
    fn basis(&self, t: usize) -> (Vec3, Vec3, Vec3) {
        let tri = self.tris[t];
        let a = self.positions[tri[0]];
        let b = self.positions[tri[1]];
        let c = self.positions[tri[2]];
        let e1 = (b - a).normalize();
        let n = (b - a).cross(&(c - a)).normalize();
        (a, e1, n.cross(&e1))
    }

    pub fn to_3d(&self, t: usize, p: Vec2) -> Vec3 {
        let (o, e1, e2) = self.basis(t);
        o + e1 * p.x + e2 * p.y
    }

    pub fn to_local(&self, t: usize, p: Vec3) -> Vec2 {
        let (o, e1, e2) = self.basis(t);
        Vec2::new((p - o).dot(&e1), (p - o).dot(&e2))
    }

    /// Motion from triangle `t`'s frame to the frame of its neighbor across edge `j`.
    pub fn edge_motion(&self, t: usize, j: usize) -> Option<PlanarMotion> {
        let (s, k) = self.adj[t][j]?;
        let ft = &self.frames[t];
        let fs = &self.frames[s];
        Some(PlanarMotion::between_segments(ft[j], ft[(j + 1) % 3], fs[(k + 1) % 3], fs[k]))
    }

    pub fn edge_length(&self, t: usize, j: usize) -> f64 {
        let f = &self.frames[t];
        (f[(j + 1) % 3] - f[j]).norm()
    }

    /// Barycentric coordinates of a local point.
    pub fn barycentric(&self, t: usize, p: Vec2) -> [f64; 3] {
        let f = &self.frames[t];
        let area = cross(f[1] - f[0], f[2] - f[0]);
        let l0 = cross(f[1] - p, f[2] - p) / area;
        let l1 = cross(f[2] - p, f[0] - p) / area;
        [l0, l1, 1.0 - l0 - l1]
    }

    pub fn contains(&self, t: usize, p: Vec2, slack: f64) -> bool {
        let f = &self.frames[t];
        (0..3).all(|j| {
            let a = f[j];
            let b = f[(j + 1) % 3];
            cross((b - a).normalize(), p - a) >= -slack
        })
    }

    /// Triangle of this mesh containing a 3D point, with local coordinates.
    pub fn locate_3d(&self, p: Vec3, slack: f64) -> Option<(usize, Vec2)> {
        let mut best: Option<(f64, usize, Vec2)> = None;
        for t in 0..self.tris.len() {
            let (o, e1, e2) = self.basis(t);
            let n = e1.cross(&e2);
            let off = (p - o).dot(&n).abs();
            let q = self.to_local(t, p);
            if off <= slack && self.contains(t, q, slack) {
                let score = off;
                if best.as_ref().map_or(true, |b| score < b.0) {
                    best = Some((score, t, q));
                }
            }
        }
        best.map(|(_, t, q)| (t, q))
    }

    /// Triangles around a vertex in counterclockwise order, each with the corner index.
    ///
    /// On a boundary vertex the fan starts at the triangle holding the
    /// outgoing boundary edge.
    pub fn vertex_fan(&self, v: usize) -> Vec<(usize, usize)> {
        let Some(start) = self.tris.iter().position(|t| t.contains(&v)) else { return Vec::new() };
        let corner = |t: usize| self.tris[t].iter().position(|&x| x == v).unwrap();
        // across edge k (v -> next) lies the clockwise neighbor
        let mut first = start;
        loop {
            let k = corner(first);
            match self.adj[first][k] {
                Some((s, _)) if s != start => first = s,
                _ => break,
            }
        }
        let mut fan = vec![(first, corner(first))];
        let mut t = first;
        loop {
            let k = corner(t);
            match self.adj[t][(k + 2) % 3] {
                Some((s, _)) if s != first => {
                    fan.push((s, corner(s)));
                    t = s;
                }
                _ => break,
            }
            if fan.len() > self.tris.len() {
                break;
            }
        }
        fan
    }
}

/// Placement of each triangle along a strip.
#[derive(Debug, Clone)]
pub struct StripDevelopment {
    pub motions: Vec<PlanarMotion>,
    pub corners: Vec<[Vec2; 3]>,
}

/// Lays a chain of edge-adjacent triangles flat, starting from `seed`.
pub fn develop_strip(mesh: &TriMesh, path: &[usize], seed: PlanarMotion) -> Result<StripDevelopment, SurfaceError> {
    let mut motions = Vec::with_capacity(path.len());
    let mut current = seed;
    for (i, &t) in path.iter().enumerate() {
        if i > 0 {
            let prev = path[i - 1];
            let j = (0..3)
                .find(|&j| mesh.adj[prev][j].map(|(s, _)| s) == Some(t))
                .ok_or(SurfaceError::NonAdjacentFaces(prev, t))?;
            let to_next = mesh.edge_motion(prev, j).unwrap();
            current = current.compose(&to_next.inverse());
        }
        motions.push(current);
    }
    let corners = path
        .iter()
        .zip(&motions)
        .map(|(&t, m)| {
            let f = &mesh.frames[t];
            [m.apply(f[0]), m.apply(f[1]), m.apply(f[2])]
        })
        .collect();
    Ok(StripDevelopment { motions, corners })
}

/// Which side of an oriented curve: `Left` is side 1, `Right` side 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Intrinsic flat-triangulated disk bounded by the curve.
#[derive(Debug, Clone)]
pub struct HalfSurface {
    pub side: Side,
    pub mesh: TriMesh,
    /// Mesh vertices of the curve points, ordered with the half on the left.
    pub boundary: Vec<usize>,
    /// Index of each boundary entry in the curve's own point list.
    pub boundary_curve_index: Vec<usize>,
    /// Vertices off the curve (all polyhedron vertices) with their curvature.
    pub interior_vertices: Vec<(usize, f64)>,
    /// Polyhedron vertex each mesh vertex came from, if any.
    pub source_vertex: Vec<Option<usize>>,
}

impl HalfSurface {
    pub fn area(&self) -> f64 {
        self.mesh.area()
    }

    /// Angle on this side at each boundary entry.
    pub fn boundary_angles(&self) -> Vec<f64> {
        let sums = self.mesh.angle_sums();
        self.boundary.iter().map(|&v| sums[v]).collect()
    }

    pub fn boundary_lengths(&self) -> Vec<f64> {
        let n = self.boundary.len();
        (0..n)
            .map(|i| (self.mesh.positions[self.boundary[(i + 1) % n]] - self.mesh.positions[self.boundary[i]]).norm())
            .collect()
    }

    /// Euler characteristic of the triangulation (1 for a disk).
    pub fn euler(&self) -> i64 {
        let mut edges = HashSet::new();
        let mut verts = HashSet::new();
        for t in &self.mesh.tris {
            for j in 0..3 {
                let (a, b) = (t[j], t[(j + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
                verts.insert(a);
            }
        }
        verts.len() as i64 - edges.len() as i64 + self.mesh.tris.len() as i64
    }

    /// `sum interior curvature + sum boundary turning`; 2π for a disk.
    pub fn gauss_bonnet(&self) -> f64 {
        let k: f64 = self.interior_vertices.iter().map(|(_, c)| c).sum();
        let turning: f64 = self.boundary_angles().iter().map(|a| PI - a).sum();
        k + turning
    }

    /// Triangle (and local edge) whose edge runs along boundary segment `i`.
    pub fn boundary_edge(&self, i: usize) -> (usize, usize) {
        let n = self.boundary.len();
        let (a, b) = (self.boundary[i], self.boundary[(i + 1) % n]);
        for (t, tri) in self.mesh.tris.iter().enumerate() {
            for j in 0..3 {
                if tri[j] == a && tri[(j + 1) % 3] == b {
                    return (t, j);
                }
            }
        }
        panic!("boundary segment {i} missing from the half-surface triangulation")
    }

    pub fn check_invariants(&self, tol: &Tolerance) -> Result<(), String> {
        if self.euler() != 1 {
            return Err(format!("half-surface is not a disk (chi = {})", self.euler()));
        }
        for &(v, k) in &self.interior_vertices {
            if k <= tol.eps_ang {
                return Err(format!("interior vertex {v} has curvature {k}"));
            }
        }
        let gb = self.gauss_bonnet();
        if (gb - 2.0 * PI).abs() > 1e-8 {
            return Err(format!("Gauss-Bonnet sum {gb} != 2pi"));
        }
        Ok(())
    }
}

/// Result of cutting a polyhedron along a closed curve.
#[derive(Debug, Clone)]
pub struct SplitSurface {
    /// Triangulation of the whole surface with the curve as mesh edges.
    pub full: TriMesh,
    /// Mesh vertex of each curve point.
    pub curve_vertices: Vec<usize>,
    /// Side each triangle of `full` lies on.
    pub tri_side: Vec<Side>,
    pub halves: [HalfSurface; 2],
    /// Polyhedron vertex of each mesh vertex, if any.
    pub source_vertex: Vec<Option<usize>>,
}

impl SplitSurface {
    pub fn half(&self, side: Side) -> &HalfSurface {
        &self.halves[side.index()]
    }

    /// Angle at curve point `k` on the given side.
    pub fn angle_at(&self, k: usize, side: Side) -> f64 {
        let h = self.half(side);
        let pos = h.boundary_curve_index.iter().position(|&i| i == k).unwrap();
        h.boundary_angles()[pos]
    }
}

/// Total face angle at a curve point on one side.
pub fn angle_at(split: &SplitSurface, point: &SurfacePoint, poly: &ConvexPolyhedron, curve: &[SurfacePoint], side: Side) -> Result<f64, SurfaceError> {
    let tol = poly.tolerance();
    let pos = point.position(poly)?;
    for (k, q) in curve.iter().enumerate() {
        if (q.position(poly)? - pos).norm() <= tol.eps_len {
            return Ok(split.angle_at(k, side));
        }
    }
    // interior of a segment
    let n = curve.len();
    for k in 0..n {
        let a = curve[k].position(poly)?;
        let b = curve[(k + 1) % n].position(poly)?;
        let d = b - a;
        let t = (pos - a).dot(&d) / d.norm_squared();
        if (0.0..=1.0).contains(&t) && (a + d * t - pos).norm() <= tol.eps_len {
            return Ok(PI);
        }
    }
    Err(SurfaceError::PointNotOnCurve)
}

/// Cuts the polyhedron along the closed polygonal curve.
pub fn split(poly: &ConvexPolyhedron, curve: &[SurfacePoint]) -> Result<SplitSurface, SurfaceError> {
    let tol = poly.tolerance();
    let n = curve.len();
    if n < 2 {
        return Err(SurfaceError::CurveNotClosed(format!("{n} points")));
    }
    let nv = poly.vertices.len();
    let mut positions: Vec<Vec3> = (0..nv).map(|i| poly.vertex(i)).collect();
    let mut source_vertex: Vec<Option<usize>> = (0..nv).map(Some).collect();
    // curve points on edges, keyed by sorted edge
    let mut edge_points: HashMap<(usize, usize), Vec<(f64, usize)>> = HashMap::new();
    let mut face_points: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut curve_vertices = Vec::with_capacity(n);
    let mut locs = Vec::with_capacity(n);
    for q in curve {
        let loc = q.locate(poly, &tol)?;
        let gid = match loc {
            Location::Vertex(v) => v,
            Location::Edge(a, b, t) => {
                positions.push(poly.vertex(a) * (1.0 - t) + poly.vertex(b) * t);
                source_vertex.push(None);
                let id = positions.len() - 1;
                edge_points.entry((a, b)).or_default().push((t, id));
                id
            }
            Location::Face(f) => {
                positions.push(q.position(poly)?);
                source_vertex.push(None);
                let id = positions.len() - 1;
                face_points.entry(f).or_default().push(id);
                id
            }
        };
        if curve_vertices.contains(&gid) {
            return Err(SurfaceError::CurveNotSimple(format!("curve visits mesh point {gid} twice")));
        }
        for &other in &curve_vertices {
            if (positions[other] - positions[gid]).norm() <= tol.eps_len {
                return Err(SurfaceError::CurveNotSimple("two curve points coincide".into()));
            }
        }
        curve_vertices.push(gid);
        locs.push(loc);
    }
    for pts in edge_points.values_mut() {
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    let faces_of = |loc: &Location| -> Vec<usize> {
        match *loc {
            Location::Vertex(v) => (0..poly.faces.len()).filter(|&f| poly.faces[f].contains(&v)).collect(),
            Location::Edge(a, b, _) => (0..poly.faces.len())
                .filter(|&f| poly.faces[f].contains(&a) && poly.faces[f].contains(&b))
                .collect(),
            Location::Face(f) => vec![f],
        }
    };
    // segments lying inside a face (chords); segments along polyhedron edges need no chord
    let mut chords: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let fa = faces_of(&locs[i]);
        let fb = faces_of(&locs[j]);
        let common: Vec<usize> = fa.iter().copied().filter(|f| fb.contains(f)).collect();
        if common.is_empty() {
            return Err(SurfaceError::SegmentLeavesFace(i));
        }
        if common.len() == 1 {
            chords.entry(common[0]).or_default().push((curve_vertices[i], curve_vertices[j]));
        } else {
            // along an edge: both endpoints on the same polyhedron edge
            let a = positions[curve_vertices[i]];
            let b = positions[curve_vertices[j]];
            let f = common[0];
            let fv = &poly.faces[f];
            let on_edge = (0..fv.len()).any(|k| {
                let u = poly.vertex(fv[k]);
                let w = poly.vertex(fv[(k + 1) % fv.len()]);
                let d = (w - u).normalize();
                let off = |p: Vec3| ((p - u) - d * (p - u).dot(&d)).norm();
                off(a) <= tol.eps_len && off(b) <= tol.eps_len
            });
            if !on_edge {
                return Err(SurfaceError::SegmentLeavesFace(i));
            }
        }
    }
    // triangulate every face with the curve as constraints
    let mut tris = Vec::new();
    let mut tri_face = Vec::new();
    for (f, fv) in poly.faces.iter().enumerate() {
        let mut boundary: Vec<usize> = Vec::new();
        for k in 0..fv.len() {
            let (a, b) = (fv[k], fv[(k + 1) % fv.len()]);
            boundary.push(a);
            if let Some(pts) = edge_points.get(&(a.min(b), a.max(b))) {
                if a < b {
                    boundary.extend(pts.iter().map(|p| p.1));
                } else {
                    boundary.extend(pts.iter().rev().map(|p| p.1));
                }
            }
        }
        let inner = face_points.get(&f).cloned().unwrap_or_default();
        let face_chords = chords.get(&f).cloned().unwrap_or_default();
        if inner.is_empty() && face_chords.is_empty() && boundary.len() == fv.len() {
            for k in 1..fv.len() - 1 {
                tris.push([fv[0], fv[k], fv[k + 1]]);
                tri_face.push(f);
            }
            continue;
        }
        let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
        let mut handle_to_gid = HashMap::new();
        let mut gid_to_handle = HashMap::new();
        for &g in boundary.iter().chain(inner.iter()) {
            let p = poly.to_face_coords(f, positions[g]);
            let h = cdt
                .insert(Point2::new(p.x, p.y))
                .map_err(|e| SurfaceError::InvalidPoint(format!("triangulation failed: {e:?}")))?;
            if handle_to_gid.insert(h, g).is_some() {
                return Err(SurfaceError::CurveNotSimple(format!("coincident points in face {f}")));
            }
            gid_to_handle.insert(g, h);
        }
        let bl = boundary.len();
        for k in 0..bl {
            let (a, b) = (gid_to_handle[&boundary[k]], gid_to_handle[&boundary[(k + 1) % bl]]);
            if cdt.can_add_constraint(a, b) {
                cdt.add_constraint(a, b);
            }
        }
        for &(a, b) in &face_chords {
            let (ha, hb) = (gid_to_handle[&a], gid_to_handle[&b]);
            if !cdt.can_add_constraint(ha, hb) {
                return Err(SurfaceError::CurveNotSimple(format!("curve crosses itself in face {f}")));
            }
            cdt.add_constraint(ha, hb);
        }
        for face in cdt.inner_faces() {
            let vs = face.vertices();
            let ids = [handle_to_gid[&vs[0].fix()], handle_to_gid[&vs[1].fix()], handle_to_gid[&vs[2].fix()]];
            // slivers spanning a subdivided face edge lie outside the face
            let (a, b, c) = (positions[ids[0]], positions[ids[1]], positions[ids[2]]);
            let longest = (b - a).norm().max((c - b).norm()).max((a - c).norm());
            if (b - a).cross(&(c - a)).norm() <= tol.eps_len * longest {
                continue;
            }
            tris.push(ids);
            tri_face.push(f);
        }
    }
    let full = TriMesh::new(positions.clone(), tris, tri_face);
    // curve edges as directed pairs
    let mut curve_edges = HashSet::new();
    for i in 0..n {
        let (a, b) = (curve_vertices[i], curve_vertices[(i + 1) % n]);
        curve_edges.insert((a, b));
        curve_edges.insert((b, a));
    }
    let mut side: Vec<Option<Side>> = vec![None; full.tris.len()];
    let mut queue = VecDeque::new();
    let mut seeded = 0;
    for i in 0..n {
        let (a, b) = (curve_vertices[i], curve_vertices[(i + 1) % n]);
        let mut found = [false, false];
        for (t, tri) in full.tris.iter().enumerate() {
            for j in 0..3 {
                let (u, w) = (tri[j], tri[(j + 1) % 3]);
                let s = if (u, w) == (a, b) {
                    Side::Left
                } else if (u, w) == (b, a) {
                    Side::Right
                } else {
                    continue;
                };
                found[s.index()] = true;
                match side[t] {
                    Some(prev) if prev != s => {
                        return Err(SurfaceError::CurveNotSimple(format!("triangle {t} on both sides")));
                    }
                    _ => {
                        side[t] = Some(s);
                        queue.push_back(t);
                        seeded += 1;
                    }
                }
            }
        }
        if !found[0] || !found[1] {
            return Err(SurfaceError::CurveNotSimple(format!("segment {i} is not a mesh edge")));
        }
    }
    debug_assert!(seeded > 0);
    while let Some(t) = queue.pop_front() {
        let s = side[t].unwrap();
        for j in 0..3 {
            let tri = full.tris[t];
            if curve_edges.contains(&(tri[j], tri[(j + 1) % 3])) {
                continue;
            }
            if let Some((u, _)) = full.adj[t][j] {
                match side[u] {
                    None => {
                        side[u] = Some(s);
                        queue.push_back(u);
                    }
                    Some(other) if other != s => {
                        return Err(SurfaceError::CurveNotSimple("curve does not separate the surface".into()));
                    }
                    _ => {}
                }
            }
        }
    }
    if side.iter().any(|s| s.is_none()) {
        return Err(SurfaceError::CurveNotClosed("surface pieces unreachable from the curve".into()));
    }
    let tri_side: Vec<Side> = side.into_iter().map(|s| s.unwrap()).collect();
    let build = |s: Side| -> HalfSurface {
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut pos = Vec::new();
        let mut src = Vec::new();
        let mut tris = Vec::new();
        let mut tf = Vec::new();
        for (t, tri) in full.tris.iter().enumerate() {
            if tri_side[t] != s {
                continue;
            }
            let mut ids = [0; 3];
            for k in 0..3 {
                ids[k] = *remap.entry(tri[k]).or_insert_with(|| {
                    pos.push(full.positions[tri[k]]);
                    src.push(source_vertex[tri[k]]);
                    pos.len() - 1
                });
            }
            tris.push(ids);
            tf.push(full.tri_face[t]);
        }
        let order: Vec<usize> = match s {
            Side::Left => (0..n).collect(),
            Side::Right => std::iter::once(0).chain((1..n).rev()).collect(),
        };
        let boundary: Vec<usize> = order.iter().map(|&k| remap[&curve_vertices[k]]).collect();
        let mesh = TriMesh::new(pos, tris, tf);
        let sums = mesh.angle_sums();
        let on_curve: HashSet<usize> = boundary.iter().copied().collect();
        let interior_vertices = (0..mesh.positions.len())
            .filter(|v| !on_curve.contains(v))
            .map(|v| (v, 2.0 * PI - sums[v]))
            .collect();
        HalfSurface { side: s, mesh, boundary, boundary_curve_index: order, interior_vertices, source_vertex: src }
    };
    let halves = [build(Side::Left), build(Side::Right)];
    Ok(SplitSurface { full, curve_vertices, tri_side, halves, source_vertex })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn cube_is_valid_with_total_curvature_4pi() {
        let cube = fixtures::cube();
        let r = cube.validate();
        assert!(r.is_valid(), "{:?}", r.violations);
        assert!((r.total_curvature - 4.0 * PI).abs() < 1e-12);
        for k in cube.curvatures() {
            assert!((k - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tetrahedron_vertices_have_curvature_pi() {
        let t = fixtures::regular_tetrahedron();
        assert!(t.validate().is_valid());
        for k in t.curvatures() {
            assert!((k - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn dented_cube_reports_witness_vertex() {
        let mut cube = fixtures::cube();
        // push vertex 6 = (1,1,1) inward; triangulate so only convexity fails
        cube.vertices[6] = [0.8, 0.8, 0.8];
        let tri = {
            let mut faces = Vec::new();
            for f in &cube.faces {
                for k in 1..f.len() - 1 {
                    faces.push(vec![f[0], f[k], f[k + 1]]);
                }
            }
            ConvexPolyhedron { vertices: cube.vertices.clone(), faces }
        };
        let r = tri.validate();
        assert!(r.violations.iter().any(|v| matches!(v, Violation::NonConvex { .. })), "{:?}", r.violations);
        // every witness involves a triangle through the dented corner
        assert!(r.violations.iter().all(|v| match v {
            Violation::NonConvex { face, .. } => tri.faces[*face].contains(&6),
            _ => true,
        }));
        // and the test is sign sensitive: the original cube passes
        assert!(fixtures::cube().validate().is_valid());
    }

    #[test]
    fn hull_of_cube_corners() {
        let pts: Vec<Vec3> = fixtures::cube().vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect();
        let h = ConvexPolyhedron::convex_hull(&pts).unwrap();
        let r = h.validate();
        assert!(r.is_valid(), "{:?}", r.violations);
        assert!((h.area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn coplanar_strip_development_matches_plane_layout() {
        let cube = fixtures::cube();
        let mesh = cube.triangulate();
        // both triangles of face 0 are coplanar
        let path: Vec<usize> = (0..mesh.num_tris()).filter(|&t| mesh.tri_face[t] == 0).collect();
        let dev = develop_strip(&mesh, &path, PlanarMotion::identity()).unwrap();
        // distances between developed corners equal 3D distances, across both triangles
        let mut pts = Vec::new();
        for (i, &t) in path.iter().enumerate() {
            for k in 0..3 {
                pts.push((mesh.tris[t][k], dev.corners[i][k]));
            }
        }
        for a in &pts {
            for b in &pts {
                let d3 = (mesh.positions[a.0] - mesh.positions[b.0]).norm();
                assert!(((a.1 - b.1).norm() - d3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cube_band_closes_without_rotation() {
        let cube = fixtures::cube();
        let mesh = cube.triangulate();
        // lateral faces x=0,y=0,x=1,y=1 around the z axis
        let band = fixtures::cube_band_triangles(&cube, &mesh);
        let mut path = band.clone();
        path.push(band[0]);
        let dev = develop_strip(&mesh, &path, PlanarMotion::identity()).unwrap();
        let closure = dev.motions.last().unwrap().compose(&dev.motions[0].inverse());
        assert!(crate::geom::wrap_angle(closure.rotation).abs() < 1e-12);
        assert!((closure.translation().norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tetrahedron_lateral_faces_span_pi_about_apex() {
        let t = fixtures::regular_tetrahedron();
        let mesh = t.triangulate();
        let apex = 0;
        let fan = mesh.vertex_fan(apex);
        assert_eq!(fan.len(), 3);
        let total: f64 = fan.iter().map(|&(tr, k)| mesh.corner_angle(tr, k)).sum();
        assert!((total - PI).abs() < 1e-12);
        let path: Vec<usize> = fan.iter().map(|f| f.0).collect();
        let dev = develop_strip(&mesh, &path, PlanarMotion::identity()).unwrap();
        for (i, &(tr, k)) in fan.iter().enumerate() {
            assert!((dev.corners[i][k] - dev.corners[0][fan[0].1]).norm() < 1e-12, "apex developed to one point {tr}");
        }
    }

    #[test]
    fn non_adjacent_faces_rejected() {
        let cube = fixtures::cube();
        let mesh = cube.triangulate();
        let a = 0;
        let b = (0..mesh.num_tris()).find(|&t| !mesh.tris[t].iter().any(|v| mesh.tris[a].contains(v))).unwrap();
        assert!(matches!(develop_strip(&mesh, &[a, b], PlanarMotion::identity()), Err(SurfaceError::NonAdjacentFaces(..))));
    }

    #[test]
    fn sliced_tetrahedron_halves() {
        let (p, q) = fixtures::sliced_tetrahedron();
        let s = split(&p, &q).unwrap();
        let tol = p.tolerance();
        for h in &s.halves {
            h.check_invariants(&tol).unwrap();
        }
        let l = &s.halves[0];
        let r = &s.halves[1];
        assert_eq!(l.interior_vertices.iter().map(|v| l.source_vertex[v.0].unwrap()).collect::<Vec<_>>(), vec![0]);
        let mut rv: Vec<usize> = r.interior_vertices.iter().map(|v| r.source_vertex[v.0].unwrap()).collect();
        rv.sort();
        assert_eq!(rv, vec![1, 2, 3]);
        assert!((l.area() + r.area() - p.area()).abs() < 1e-12);
        for a in l.boundary_angles() {
            assert!((a - 2.0 * PI / 3.0).abs() < 1e-12);
        }
        for a in r.boundary_angles() {
            assert!((a - 4.0 * PI / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_point_has_pi_on_both_sides() {
        let (p, q) = fixtures::sliced_tetrahedron();
        let s = split(&p, &q).unwrap();
        let a = q[0].position(&p).unwrap();
        let b = q[1].position(&p).unwrap();
        let mid = (a + b) * 0.5;
        // express the midpoint as a face point of the lateral face holding the segment
        let f = (0..p.faces.len())
            .find(|&f| {
                let n = p.face_normal(f);
                let o = p.vertex(p.faces[f][0]);
                (mid - o).dot(&n).abs() < 1e-12 && p.faces[f].contains(&0)
            })
            .unwrap();
        let fv = &p.faces[f];
        let m = fixtures::face_weights(&p, f, mid);
        let pt = SurfacePoint::Face { face: f, coords: m };
        assert_eq!(fv.len(), 3);
        for side in [Side::Left, Side::Right] {
            let ang = angle_at(&s, &pt, &p, &q, side).unwrap();
            assert!((ang - PI).abs() < 1e-12);
        }
        let off = SurfacePoint::Vertex { vertex: 1 };
        assert_eq!(angle_at(&s, &off, &p, &q, Side::Left), Err(SurfaceError::PointNotOnCurve));
    }

    #[test]
    fn crossing_curve_is_not_simple() {
        let cube = fixtures::cube();
        // bow-tie inside face 0 (z = 0 face)
        let f = 0;
        let pts = [Vec2::new(0.2, 0.2), Vec2::new(0.8, 0.8), Vec2::new(0.8, 0.2), Vec2::new(0.2, 0.8)];
        let curve: Vec<SurfacePoint> = pts
            .iter()
            .map(|p| SurfacePoint::Face { face: f, coords: fixtures::face_weights(&cube, f, cube.from_face_coords(f, *p)) })
            .collect();
        assert!(matches!(split(&cube, &curve), Err(SurfaceError::CurveNotSimple(_))));
    }
}
