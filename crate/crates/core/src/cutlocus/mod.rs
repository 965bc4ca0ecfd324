//! Distance to the boundary curve inside a half-surface, and the cut locus.
//!
//! Distances are propagated as beams of parallel rays (from a curve segment)
//! or of rays fanning out of a reflex curve vertex. Polyhedron vertices have
//! positive curvature, so they never act as sources: a beam that hits one
//! simply splits.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;

use thiserror::Error;

pub mod trace;

use crate::geom::{
    cross, perp, point_line_bisector, solve_quadratic, Line2, ParabolicArc, Piece, PlanarMotion, Segment2, Tolerance, Vec2, Vec3,
};
use crate::surface::HalfSurface;

#[derive(Debug, Error)]
pub enum CutLocusError {
    #[error("propagation exceeded {0} windows")]
    TooManyWindows(usize),
    #[error("cut locus is not a tree: {0}")]
    NotATree(String),
    #[error("junction check failed at node {node}: residual {residual}")]
    Junction { node: usize, residual: f64 },
}

/// A source of distance on the boundary, indexed in the half's boundary order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    /// Segment from boundary point `i` to `i+1`.
    Segment(usize),
    /// Reflex boundary point `k`.
    Vertex(usize),
}

impl Site {
    /// Boundary index whose outgoing segment defines the site frame.
    pub fn frame_index(self) -> usize {
        match self {
            Site::Segment(i) | Site::Vertex(i) => i,
        }
    }
}

/// Region of a beam in its site frame.
///
/// The site frame has its origin at the start of the site's outgoing segment,
/// the x axis along that segment and the half on the positive y side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spread {
    /// Rays `x = const` for `x` in `[x0, x1]`.
    Strip { x0: f64, x1: f64 },
    /// Rays from the origin with polar angle in `[a0, a1]`.
    Wedge { a0: f64, a1: f64 },
}

impl Spread {
    fn constraints(&self, q: Vec2) -> [f64; 2] {
        match *self {
            Spread::Strip { x0, x1 } => [q.x - x0, x1 - q.x],
            Spread::Wedge { a0, a1 } => {
                let d0 = Vec2::new(a0.cos(), a0.sin());
                let d1 = Vec2::new(a1.cos(), a1.sin());
                [cross(d0, q), cross(q, d1)]
            }
        }
    }

    fn distance(&self, q: Vec2) -> f64 {
        match self {
            Spread::Strip { .. } => q.y,
            Spread::Wedge { .. } => q.norm(),
        }
    }

    fn width(&self) -> f64 {
        match *self {
            Spread::Strip { x0, x1 } => x1 - x0,
            Spread::Wedge { a0, a1 } => a1 - a0,
        }
    }
}

/// Polar angle in `[0, 2π)`; wedges live in `[π/2, 3π/2]` so this is continuous there.
pub(crate) fn polar(q: Vec2) -> f64 {
    let a = q.y.atan2(q.x);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Rays of one site crossing one triangle.
#[derive(Debug, Clone)]
pub struct Beam {
    pub site: usize,
    pub tri: usize,
    /// Site frame to triangle frame.
    pub motion: PlanarMotion,
    inverse: PlanarMotion,
    pub spread: Spread,
    /// Convex region covered in the triangle frame.
    pub region: Vec<Vec2>,
}

impl Beam {
    /// Site-frame coordinates of a triangle point.
    pub fn to_site(&self, p: Vec2) -> Vec2 {
        self.inverse.apply(p)
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        self.spread.distance(self.to_site(p))
    }

    /// Distance gradient in the triangle frame.
    pub fn gradient(&self, p: Vec2) -> Vec2 {
        match self.spread {
            Spread::Strip { .. } => self.motion.apply_vec(Vec2::new(0.0, 1.0)),
            Spread::Wedge { .. } => {
                let v = p - self.motion.apply(Vec2::zeros());
                let n = v.norm();
                if n == 0.0 {
                    v
                } else {
                    v / n
                }
            }
        }
    }

    pub fn covers(&self, p: Vec2, slack: f64) -> bool {
        let q = self.to_site(p);
        let c = self.spread.constraints(q);
        c[0] >= -slack && c[1] >= -slack && polygon_contains(&self.region, p, slack)
    }
}

fn polygon_contains(poly: &[Vec2], p: Vec2, slack: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let d = b - a;
        let l = d.norm();
        l <= 1e-12 * a.amax().max(1.0) || cross(d / l, p - a) >= -slack
    })
}

/// Keeps the part of a convex polygon where the affine function `f` is nonnegative.
fn clip(poly: &[Vec2], f: impl Fn(Vec2) -> f64) -> Vec<Vec2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let fa = f(a);
        let fb = f(b);
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            let t = fa / (fa - fb);
            out.push(a + (b - a) * t);
        }
    }
    // near-duplicate corners give edges with meaningless directions
    let tiny = 1e-12 * out.iter().fold(1.0f64, |m, p| m.max(p.amax()));
    let mut kept: Vec<Vec2> = Vec::with_capacity(out.len());
    for p in out {
        if kept.last().is_none_or(|q| (p - q).norm() > tiny) {
            kept.push(p);
        }
    }
    while kept.len() > 1 && (kept[0] - kept[kept.len() - 1]).norm() <= tiny {
        kept.pop();
    }
    kept
}

/// Distance function along an edge, in the frame of the edge's canonical triangle.
#[derive(Debug, Clone, Copy)]
enum EdgeDist {
    Lin { o: Vec2, n: Vec2 },
    Rad { q: Vec2 },
}

impl EdgeDist {
    fn eval(&self, p: Vec2) -> f64 {
        match *self {
            EdgeDist::Lin { o, n } => (p - o).dot(&n),
            EdgeDist::Rad { q } => (p - q).norm(),
        }
    }

    /// Parameters in `(lo, hi)` where two functions agree along `a + u d`.
    fn crossings(&self, other: &EdgeDist, a: Vec2, d: Vec2, lo: f64, hi: f64) -> Vec<f64> {
        let lin = |o: Vec2, n: Vec2| ((a - o).dot(&n), d.dot(&n));
        let roots = match (*self, *other) {
            (EdgeDist::Lin { o: o1, n: n1 }, EdgeDist::Lin { o: o2, n: n2 }) => {
                let (c0, c1) = lin(o1, n1);
                let (e0, e1) = lin(o2, n2);
                solve_quadratic(0.0, c1 - e1, c0 - e0)
            }
            (EdgeDist::Rad { q: q1 }, EdgeDist::Rad { q: q2 }) => {
                let (w1, w2) = (a - q1, a - q2);
                solve_quadratic(0.0, 2.0 * d.dot(&(w1 - w2)), w1.norm_squared() - w2.norm_squared())
            }
            (EdgeDist::Rad { q }, EdgeDist::Lin { o, n }) | (EdgeDist::Lin { o, n }, EdgeDist::Rad { q }) => {
                let (c0, c1) = lin(o, n);
                let w = a - q;
                solve_quadratic(d.norm_squared() - c1 * c1, 2.0 * (w.dot(&d) - c0 * c1), w.norm_squared() - c0 * c0)
            }
        };
        roots.into_iter().filter(|&u| u > lo && u < hi).collect()
    }

    fn transformed(&self, m: &PlanarMotion) -> EdgeDist {
        match *self {
            EdgeDist::Lin { o, n } => EdgeDist::Lin { o: m.apply(o), n: m.apply_vec(n) },
            EdgeDist::Rad { q } => EdgeDist::Rad { q: m.apply(q) },
        }
    }
}

#[derive(Debug, Clone)]
struct Window {
    tri: usize,
    site: usize,
    motion: PlanarMotion,
    spread: Spread,
    /// Triangle edge the rays entered through, if any.
    entry: Option<usize>,
}

struct Queued(f64, usize);

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        self.0.total_cmp(&o.0) == Ordering::Equal && self.1 == o.1
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on distance
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

const MAX_WINDOWS: usize = 2_000_000;

/// Exact distance to the boundary over a half-surface.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub sites: Vec<Site>,
    pub beams: Vec<Beam>,
    /// Beam indices per triangle.
    pub by_tri: Vec<Vec<usize>>,
    pub tol: Tolerance,
    /// Boundary angles on this side.
    pub angles: Vec<f64>,
    /// Boundary segment lengths.
    pub lengths: Vec<f64>,
}

/// Propagates distance from the boundary curve over the half.
pub fn propagate(half: &HalfSurface, tol: &Tolerance) -> Result<DistanceField, CutLocusError> {
    let mesh = &half.mesh;
    let n = half.boundary.len();
    let angles = half.boundary_angles();
    let lengths = half.boundary_lengths();
    let mut sites = Vec::new();
    let mut windows: Vec<Window> = Vec::new();
    let mut envelope: HashMap<(usize, usize), Vec<(f64, f64, EdgeDist)>> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let slack = tol.eps_len;

    // segment sites
    let mut frame_motion = Vec::with_capacity(n);
    for i in 0..n {
        let (t, j) = half.boundary_edge(i);
        let f = &mesh.frames[t];
        let m = PlanarMotion::from_frame(f[j], f[(j + 1) % 3] - f[j]);
        frame_motion.push((t, j, m));
        sites.push(Site::Segment(i));
        let spread = Spread::Strip { x0: 0.0, x1: lengths[i] };
        let key = canonical(mesh, t, j);
        let dist = EdgeDist::Lin { o: f[j], n: m.apply_vec(Vec2::new(0.0, 1.0)) };
        envelope.entry(key.0).or_default().push((0.0, 1.0, to_canonical(mesh, t, j, key, dist)));
        windows.push(Window { tri: t, site: i, motion: m, spread, entry: Some(j) });
        heap.push(Queued(0.0, windows.len() - 1));
    }
    // reflex vertex sites: one initial wedge per fan triangle
    for k in 0..n {
        let alpha = angles[k];
        if alpha <= PI + tol.eps_ang {
            continue;
        }
        let site = sites.len();
        sites.push(Site::Vertex(k));
        let (t0, _, m0) = frame_motion[k];
        let fan = mesh.vertex_fan(half.boundary[k]);
        debug_assert_eq!(fan.first().map(|f| f.0), Some(t0));
        let mut phi = 0.0f64;
        let mut m = m0;
        for (idx, &(t, c)) in fan.iter().enumerate() {
            if idx > 0 {
                let (pt, pc) = fan[idx - 1];
                let e = mesh.edge_motion(pt, (pc + 2) % 3).expect("fan neighbor");
                m = e.compose(&m);
                debug_assert_eq!(mesh.adj[pt][(pc + 2) % 3].map(|x| x.0), Some(t));
            }
            let gamma = mesh.corner_angle(t, c);
            let a0 = phi.max(PI / 2.0);
            let a1 = (phi + gamma).min(alpha - PI / 2.0);
            phi += gamma;
            if a1 - a0 <= 1e-14 {
                continue;
            }
            windows.push(Window { tri: t, site, motion: m, spread: Spread::Wedge { a0, a1 }, entry: None });
            heap.push(Queued(0.0, windows.len() - 1));
        }
    }

    let mut beams: Vec<Beam> = Vec::new();
    let mut by_tri = vec![Vec::new(); mesh.num_tris()];
    while let Some(Queued(_, wi)) = heap.pop() {
        if windows.len() > MAX_WINDOWS {
            return Err(CutLocusError::TooManyWindows(MAX_WINDOWS));
        }
        let w = windows[wi].clone();
        let inverse = w.motion.inverse();
        let f = mesh.frames[w.tri];
        let spread = w.spread;
        let mut region: Vec<Vec2> = f.to_vec();
        for c in 0..2 {
            region = clip(&region, |p| spread.constraints(inverse.apply(p))[c]);
        }
        if region.len() < 3 {
            continue;
        }
        beams.push(Beam { site: w.site, tri: w.tri, motion: w.motion, inverse, spread, region });
        by_tri[w.tri].push(beams.len() - 1);

        for j in 0..3 {
            if Some(j) == w.entry {
                continue;
            }
            let Some((s, k)) = mesh.adj[w.tri][j] else { continue };
            let a = f[j];
            let b = f[(j + 1) % 3];
            let Some((u0, u1)) = edge_interval(a, b, |p| spread.constraints(inverse.apply(p))) else { continue };
            if (u1 - u0) * (b - a).norm() <= slack {
                continue;
            }
            let p0 = inverse.apply(a + (b - a) * u0);
            let p1 = inverse.apply(a + (b - a) * u1);
            let child_spread = match spread {
                Spread::Strip { .. } => Spread::Strip { x0: p0.x.min(p1.x), x1: p0.x.max(p1.x) },
                Spread::Wedge { .. } => {
                    let (x, y) = (polar(p0), polar(p1));
                    Spread::Wedge { a0: x.min(y), a1: x.max(y) }
                }
            };
            if child_spread.width() <= 1e-15 {
                continue;
            }
            // the rays must actually cross the edge into the neighbor
            let dir = match spread {
                Spread::Strip { .. } => w.motion.apply_vec(Vec2::new(0.0, 1.0)),
                Spread::Wedge { .. } => (a + b) * 0.5 - w.motion.apply(Vec2::zeros()),
            };
            if cross(b - a, dir) >= 0.0 {
                continue;
            }
            let dist = match spread {
                Spread::Strip { .. } => EdgeDist::Lin { o: w.motion.apply(Vec2::zeros()), n: w.motion.apply_vec(Vec2::new(0.0, 1.0)) },
                Spread::Wedge { .. } => EdgeDist::Rad { q: w.motion.apply(Vec2::zeros()) },
            };
            let key = canonical(mesh, w.tri, j);
            let cdist = to_canonical(mesh, w.tri, j, key, dist);
            let (cu0, cu1) = if key.1 { (u0, u1) } else { (1.0 - u1, 1.0 - u0) };
            let (ct, cj) = key.0;
            let cf = mesh.frames[ct];
            let (ca, cd) = (cf[cj], cf[(cj + 1) % 3] - cf[cj]);
            let list = envelope.entry(key.0).or_default();
            let eps = tol.eps_len;
            let kept = improve(list, cdist, cu0, cu1, ca, cd, eps);
            let e = mesh.edge_motion(w.tri, j).unwrap();
            let motion = e.compose(&w.motion);
            let minv = motion.inverse();
            let sf = mesh.frames[s];
            for (v0, v1) in kept {
                list.push((v0, v1, cdist));
                // back to the exiting triangle's parameter
                let (e0, e1) = if key.1 { (v0, v1) } else { (1.0 - v1, 1.0 - v0) };
                // entering side parameter on edge k of s
                let q0 = minv.apply(sf[k] + (sf[(k + 1) % 3] - sf[k]) * (1.0 - e1));
                let q1 = minv.apply(sf[k] + (sf[(k + 1) % 3] - sf[k]) * (1.0 - e0));
                let sp = match spread {
                    Spread::Strip { .. } => Spread::Strip { x0: q0.x.min(q1.x), x1: q0.x.max(q1.x) },
                    Spread::Wedge { .. } => {
                        let (x, y) = (polar(q0), polar(q1));
                        Spread::Wedge { a0: x.min(y), a1: x.max(y) }
                    }
                };
                let key_d = spread.distance(q0).min(spread.distance(q1));
                windows.push(Window { tri: s, site: w.site, motion, spread: sp, entry: Some(k) });
                heap.push(Queued(key_d, windows.len() - 1));
            }
        }
    }
    Ok(DistanceField { sites, beams, by_tri, tol: *tol, angles, lengths })
}

/// Canonical owner of an undirected edge, and whether `(t, j)` is that owner.
fn canonical(mesh: &crate::surface::TriMesh, t: usize, j: usize) -> ((usize, usize), bool) {
    match mesh.adj[t][j] {
        Some((s, k)) if s < t => ((s, k), false),
        _ => ((t, j), true),
    }
}

fn to_canonical(mesh: &crate::surface::TriMesh, t: usize, j: usize, key: ((usize, usize), bool), d: EdgeDist) -> EdgeDist {
    if key.1 {
        d
    } else {
        d.transformed(&mesh.edge_motion(t, j).unwrap())
    }
}

/// Parameter interval of segment `a b` where both affine constraints hold.
fn edge_interval(a: Vec2, b: Vec2, f: impl Fn(Vec2) -> [f64; 2]) -> Option<(f64, f64)> {
    let fa = f(a);
    let fb = f(b);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for c in 0..2 {
        let (x, y) = (fa[c], fb[c]);
        if x >= 0.0 && y >= 0.0 {
            continue;
        }
        if x < 0.0 && y < 0.0 {
            return None;
        }
        let u = x / (x - y);
        if x < 0.0 {
            lo = lo.max(u);
        } else {
            hi = hi.min(u);
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// Sub-intervals of `[u0, u1]` where `d` beats every stored window by more than `eps`.
fn improve(list: &[(f64, f64, EdgeDist)], d: EdgeDist, u0: f64, u1: f64, a: Vec2, dir: Vec2, eps: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![u0, u1];
    for &(v0, v1, e) in list {
        if v1 <= u0 || v0 >= u1 {
            continue;
        }
        for v in [v0, v1] {
            if v > u0 && v < u1 {
                cuts.push(v);
            }
        }
        cuts.extend(d.crossings(&e, a, dir, u0, u1));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        let p = a + dir * m;
        let mine = d.eval(p);
        let beaten = list.iter().any(|&(v0, v1, e)| v0 <= m && m <= v1 && e.eval(p) <= mine + eps);
        if !beaten {
            match out.last_mut() {
                Some(last) if (last.1 - w[0]).abs() <= 1e-15 => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

impl DistanceField {
    /// Beams covering a local point of triangle `t`, with their distances.
    pub fn candidates(&self, t: usize, p: Vec2) -> Vec<(usize, f64)> {
        let slack = 1e3 * self.tol.eps_len;
        let mut out: Vec<(usize, f64)> = self.by_tri[t]
            .iter()
            .filter(|&&b| self.beams[b].covers(p, slack))
            .map(|&b| (b, self.beams[b].distance(p)))
            .collect();
        if out.is_empty() {
            // numerical gap: fall back to the nearest beam region
            let best = self.by_tri[t].iter().min_by(|&&x, &&y| {
                region_gap(&self.beams[x].region, p).total_cmp(&region_gap(&self.beams[y].region, p))
            });
            if let Some(&b) = best {
                out.push((b, self.beams[b].distance(p)));
            }
        }
        out
    }

    /// Distance from a local point of triangle `t` to the boundary.
    pub fn distance(&self, t: usize, p: Vec2) -> f64 {
        self.candidates(t, p).into_iter().map(|c| c.1).fold(f64::INFINITY, f64::min)
    }

    /// Distance at a 3D point of the half (located on its mesh).
    pub fn distance_3d(&self, half: &HalfSurface, p: Vec3) -> Option<f64> {
        let (t, q) = half.mesh.locate_3d(p, 1e3 * self.tol.eps_len)?;
        Some(self.distance(t, q))
    }

    pub fn num_beams(&self) -> usize {
        self.beams.len()
    }
}

fn region_gap(poly: &[Vec2], p: Vec2) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| -cross((poly[(i + 1) % n] - poly[i]).normalize(), p - poly[i]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Shortest-path direction from a cut-locus point back to the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub site: Site,
    /// The cut-locus point in the site frame.
    pub coords: Vec2,
    /// Arclength of the foot along the boundary, from boundary point 0.
    pub arclength: f64,
    /// Direction of the path at its foot, measured in the frame of the foot's
    /// outgoing segment (`π/2` is perpendicular).
    pub theta: f64,
}

impl Projection {
    pub fn same_foot(&self, other: &Projection, total: f64, tol: &Tolerance) -> bool {
        let ds = (self.arclength - other.arclength).rem_euclid(total);
        ds.min(total - ds) <= 1e3 * tol.eps_len && (self.theta - other.theta).abs() <= 1e-7
    }

    /// Sort key along the boundary: arclength, then decreasing direction.
    pub fn order_key(&self) -> (f64, f64) {
        (self.arclength, -self.theta)
    }
}

impl DistanceField {
    pub fn boundary_length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Arclength from boundary point 0 to boundary point `i`.
    pub fn arclength_at(&self, i: usize) -> f64 {
        self.lengths[..i].iter().sum()
    }

    /// Projection of a point given in the frame of `site` (an index into `sites`).
    pub fn projection(&self, site: usize, q: Vec2) -> Projection {
        let n = self.lengths.len();
        let snap = 1e3 * self.tol.eps_len;
        let s = self.sites[site];
        let (arclength, theta) = match s {
            Site::Segment(i) => {
                if q.x <= snap {
                    (self.arclength_at(i), PI / 2.0)
                } else if q.x >= self.lengths[i] - snap {
                    let k = (i + 1) % n;
                    (self.arclength_at(k), self.angles[k] - PI / 2.0)
                } else {
                    (self.arclength_at(i) + q.x, PI / 2.0)
                }
            }
            Site::Vertex(k) => (self.arclength_at(k), polar(q)),
        };
        Projection { site: s, coords: q, arclength, theta }
    }

    fn same_front(&self, a: usize, b: usize) -> bool {
        let (x, y) = (&self.beams[a], &self.beams[b]);
        x.site == y.site
            && crate::geom::wrap_angle(x.motion.rotation - y.motion.rotation).abs() <= 1e-9
            && (x.motion.translation() - y.motion.translation()).norm() <= 1e3 * self.tol.eps_len
    }
}

/// Full bisector of two beams' distance functions.
#[derive(Debug, Clone, Copy)]
enum Bisector {
    Line { p0: Vec2, dir: Vec2 },
    Para(ParabolicArc),
}

impl Bisector {
    fn between(x: &Beam, y: &Beam, tol: &Tolerance) -> Option<Bisector> {
        let ox = x.motion.apply(Vec2::zeros());
        let oy = y.motion.apply(Vec2::zeros());
        match (x.spread, y.spread) {
            (Spread::Strip { .. }, Spread::Strip { .. }) => {
                let nx = x.gradient(ox);
                let ny = y.gradient(oy);
                let m = nx - ny;
                if m.norm() <= 1e-9 {
                    return None;
                }
                let c = ox.dot(&nx) - oy.dot(&ny);
                Some(Bisector::Line { p0: m * (c / m.norm_squared()), dir: perp(m).normalize() })
            }
            (Spread::Wedge { .. }, Spread::Wedge { .. }) => {
                let d = oy - ox;
                if d.norm() <= tol.eps_len {
                    return None;
                }
                Some(Bisector::Line { p0: (ox + oy) * 0.5, dir: perp(d).normalize() })
            }
            (Spread::Wedge { .. }, Spread::Strip { .. }) => {
                let line = Line2::new(oy, y.motion.x_axis());
                point_line_bisector(ox, line, tol).ok().map(Bisector::Para)
            }
            (Spread::Strip { .. }, Spread::Wedge { .. }) => Bisector::between(y, x, tol),
        }
    }

    fn at(&self, t: f64) -> Vec2 {
        match self {
            Bisector::Line { p0, dir } => p0 + dir * t,
            Bisector::Para(a) => a.at(t),
        }
    }

    fn tangent(&self, t: f64) -> Vec2 {
        match self {
            Bisector::Line { dir, .. } => *dir,
            Bisector::Para(a) => a.derivative(t),
        }
    }

    fn piece(&self, t0: f64, t1: f64) -> Piece {
        match self {
            Bisector::Line { .. } => Piece::Segment(Segment2::new(self.at(t0), self.at(t1))),
            Bisector::Para(a) => Piece::Arc(a.with_interval(t0, t1)),
        }
    }

    fn origin(&self) -> Vec2 {
        match self {
            Bisector::Line { p0, .. } => *p0,
            Bisector::Para(a) => a.focus,
        }
    }
}

/// Parameter sets are sorted disjoint intervals.
fn intersect_sets(a: &[(f64, f64)], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(x0, x1) in a {
        for &(y0, y1) in b {
            let (lo, hi) = (x0.max(y0), x1.min(y1));
            if hi > lo {
                out.push((lo, hi));
            }
        }
    }
    out
}

/// Where the (at most quadratic) function `g(t)` is nonnegative on `[lo, hi]`.
fn nonneg_set(g: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let (gm, g0, gp) = (g(-1.0), g(0.0), g(1.0));
    let a = 0.5 * (gp + gm) - g0;
    let b = 0.5 * (gp - gm);
    let mut cuts = vec![lo];
    cuts.extend(solve_quadratic(a, b, g0).into_iter().filter(|&t| t > lo && t < hi));
    cuts.push(hi);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        if g(0.5 * (w[0] + w[1])) >= 0.0 {
            match out.last_mut() {
                Some(l) if l.1 == w[0] => l.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

/// A bisector piece inside one triangle, before stitching.
#[derive(Debug, Clone, Copy)]
struct RawPiece {
    tri: usize,
    piece: Piece,
    left: usize,
    right: usize,
}

const SAMPLES: usize = 64;

impl DistanceField {
    /// Whether another front beats distance `d` at `p` by more than `eps`.
    fn dominated(&self, t: usize, p: Vec2, d: f64, eps: f64, skip: [usize; 2]) -> bool {
        let slack = 10.0 * self.tol.eps_len;
        self.by_tri[t].iter().any(|&b| {
            if skip.iter().any(|&s| self.same_front(s, b)) {
                return false;
            }
            let beam = &self.beams[b];
            beam.covers(p, slack) && beam.distance(p) < d - eps
        })
    }

    fn raw_pieces(&self, t: usize) -> Vec<RawPiece> {
        let beams = &self.by_tri[t];
        let mut out = Vec::new();
        let slack = 1e-3 * self.tol.eps_len;
        for (i, &x) in beams.iter().enumerate() {
            for &y in &beams[i + 1..] {
                if self.same_front(x, y) {
                    continue;
                }
                let (bx, by) = (&self.beams[x], &self.beams[y]);
                let Some(bis) = Bisector::between(bx, by, &self.tol) else { continue };
                let o = bis.origin();
                let reach = bx.region.iter().chain(&by.region).map(|p| (p - o).norm()).fold(0.0, f64::max);
                let big = 10.0 * reach + 1.0;
                let mut set = vec![(-big, big)];
                for poly in [&bx.region, &by.region] {
                    let m = poly.len();
                    for k in 0..m {
                        let a = poly[k];
                        let e = poly[(k + 1) % m] - a;
                        let l = e.norm();
                        if l == 0.0 {
                            continue;
                        }
                        let e = e / l;
                        set = intersect_sets(&set, &nonneg_set(|s| cross(e, bis.at(s) - a) + slack, -big, big));
                        if set.is_empty() {
                            break;
                        }
                    }
                }
                for (lo, hi) in set {
                    for (s0, s1) in self.undominated(t, &bis, [x, y], lo, hi) {
                        let piece = bis.piece(s0, s1);
                        if piece.length() <= slack {
                            continue;
                        }
                        let sm = 0.5 * (s0 + s1);
                        let pm = bis.at(sm);
                        let nu = perp(bis.tangent(sm));
                        let g = bx.gradient(pm) - by.gradient(pm);
                        let (left, right) = if g.dot(&nu) < 0.0 { (x, y) } else { (y, x) };
                        out.push(RawPiece { tri: t, piece, left, right });
                    }
                }
            }
        }
        out
    }

    fn undominated(&self, t: usize, bis: &Bisector, pair: [usize; 2], lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let (bx, by) = (&self.beams[pair[0]], &self.beams[pair[1]]);
        let test = |s: f64, eps: f64| {
            let p = bis.at(s);
            let d = 0.5 * (bx.distance(p) + by.distance(p));
            !self.dominated(t, p, d, eps, pair)
        };
        // runs are found with a margin, their ends located exactly
        let ok = |s: f64| test(s, 10.0 * self.tol.eps_len);
        let exact = |s: f64| test(s, 0.0);
        let params: Vec<f64> = (0..=SAMPLES).map(|i| lo + (hi - lo) * i as f64 / SAMPLES as f64).collect();
        let flags: Vec<bool> = params.iter().map(|&s| ok(s)).collect();
        let refine = |mut a: f64, mut b: f64, fa: bool| {
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if exact(m) == fa {
                    a = m;
                } else {
                    b = m;
                }
            }
            if fa {
                a
            } else {
                b
            }
        };
        let mut out = Vec::new();
        let mut start = flags[0].then_some(lo);
        for i in 1..params.len() {
            match (flags[i - 1], flags[i]) {
                (false, true) => start = Some(refine(params[i - 1], params[i], false)),
                (true, false) => {
                    let end = refine(params[i - 1], params[i], true);
                    if let Some(s) = start.take() {
                        out.push((s, end));
                    }
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, hi));
        }
        out
    }
}

/// Node of the cut locus.
#[derive(Debug, Clone)]
pub struct CutNode {
    pub position: Vec3,
    pub tri: usize,
    pub local: Vec2,
    pub distance: f64,
    pub projections: Vec<Projection>,
    /// Mesh vertex of the half at this node, if any.
    pub vertex: Option<usize>,
    /// Boundary index if the node lies on the curve.
    pub boundary: Option<usize>,
}

/// Part of a cut-locus edge inside one triangle.
///
/// `left_geom` and `right_geom` are the same curve drawn in the frames of the
/// sites on either side.
#[derive(Debug, Clone, Copy)]
pub struct EdgePiece {
    pub tri: usize,
    pub piece: Piece,
    pub left: usize,
    pub right: usize,
    pub left_geom: Piece,
    pub right_geom: Piece,
}

impl EdgePiece {
    pub fn reversed(&self) -> EdgePiece {
        EdgePiece {
            tri: self.tri,
            piece: self.piece.reversed(),
            left: self.right,
            right: self.left,
            left_geom: self.right_geom.reversed(),
            right_geom: self.left_geom.reversed(),
        }
    }
}

/// Maximal cut-locus arc between two nodes, oriented from `a` to `b`.
#[derive(Debug, Clone)]
pub struct CutEdge {
    pub a: usize,
    pub b: usize,
    pub pieces: Vec<EdgePiece>,
    pub parabolic: bool,
}

impl CutEdge {
    pub fn length(&self) -> f64 {
        self.pieces.iter().map(|p| p.piece.length()).sum()
    }

    pub fn other(&self, n: usize) -> usize {
        if self.a == n {
            self.b
        } else {
            self.a
        }
    }
}

/// The cut locus of a half-surface: a tree of straight and parabolic edges.
#[derive(Debug, Clone)]
pub struct CutLocusTree {
    pub nodes: Vec<CutNode>,
    pub edges: Vec<CutEdge>,
    pub field: DistanceField,
}

impl CutLocusTree {
    pub fn degree(&self, n: usize) -> usize {
        self.edges.iter().filter(|e| e.a == n || e.b == n).count()
    }

    pub fn incident(&self, n: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].a == n || self.edges[e].b == n).collect()
    }

    /// Degree-1 nodes together with every polyhedron vertex of the half.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&n| self.degree(n) == 1 || self.nodes[n].vertex.is_some()).collect()
    }

    pub fn num_parabolic(&self) -> usize {
        self.edges.iter().filter(|e| e.parabolic).count()
    }

    /// Projection of node `n` as seen from one side of edge `e`.
    pub fn side_projection(&self, e: usize, n: usize, left: bool) -> Projection {
        let edge = &self.edges[e];
        let p = if edge.a == n { edge.pieces[0] } else { edge.pieces.last().unwrap().reversed() };
        if left {
            self.field.projection(p.left, p.left_geom.start())
        } else {
            self.field.projection(p.right, p.right_geom.start())
        }
    }

    pub fn is_tree(&self) -> bool {
        let v = self.nodes.len();
        if v == 0 || self.edges.len() + 1 != v {
            return false;
        }
        let mut seen = vec![false; v];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for e in self.incident(n) {
                let m = self.edges[e].other(n);
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Largest spread of the front distances at nodes with several projections.
    pub fn junction_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for n in 0..self.nodes.len() {
            let d: Vec<f64> = self
                .incident(n)
                .into_iter()
                .flat_map(|e| {
                    let edge = &self.edges[e];
                    let p = if edge.a == n { edge.pieces[0] } else { edge.pieces.last().unwrap().reversed() };
                    [
                        self.field.beam_distance_in_site(p.left, p.left_geom.start()),
                        self.field.beam_distance_in_site(p.right, p.right_geom.start()),
                    ]
                })
                .collect();
            let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi > lo {
                worst = worst.max(hi - lo);
            }
        }
        worst
    }
}

impl DistanceField {
    fn beam_distance_in_site(&self, site: usize, q: Vec2) -> f64 {
        match self.sites[site] {
            Site::Segment(_) => q.y,
            Site::Vertex(_) => q.norm(),
        }
    }
}

/// Extracts the cut locus from a propagated distance field.
pub fn extract_cut_locus(half: &HalfSurface, field: DistanceField) -> Result<CutLocusTree, CutLocusError> {
    let mesh = &half.mesh;
    let tol = field.tol;
    let r = 100.0 * tol.eps_len;
    let mut raw: Vec<RawPiece> = (0..mesh.num_tris()).flat_map(|t| field.raw_pieces(t)).collect();

    // cluster endpoints into nodes; endpoints at mesh vertices snap to them
    let mut node_pos: Vec<(Vec3, usize, Vec2, usize)> = Vec::new();
    let mut node_of = |p3: Vec3, t: usize, p: Vec2| -> usize {
        let (p3, p) = match mesh.tris[t].iter().position(|&v| (mesh.positions[v] - p3).norm() <= r) {
            Some(k) => (mesh.positions[mesh.tris[t][k]], mesh.frames[t][k]),
            None => (p3, p),
        };
        for (i, n) in node_pos.iter_mut().enumerate() {
            if (n.0 / n.3 as f64 - p3).norm() <= r {
                n.0 += p3;
                n.3 += 1;
                return i;
            }
        }
        node_pos.push((p3, t, p, 1));
        node_pos.len() - 1
    };
    let mut ends = Vec::with_capacity(raw.len());
    for rp in &raw {
        let a = node_of(mesh.to_3d(rp.tri, rp.piece.start()), rp.tri, rp.piece.start());
        let b = node_of(mesh.to_3d(rp.tri, rp.piece.end()), rp.tri, rp.piece.end());
        ends.push((a, b));
    }
    // drop degenerate and duplicate pieces
    let mut keep: Vec<usize> = Vec::new();
    for i in 0..raw.len() {
        let (a, b) = ends[i];
        if a == b {
            continue;
        }
        let mid = mesh.to_3d(raw[i].tri, raw[i].piece.midpoint());
        let dup = keep.iter().any(|&j| {
            let (c, d) = ends[j];
            ((c, d) == (a, b) || (c, d) == (b, a)) && (mesh.to_3d(raw[j].tri, raw[j].piece.midpoint()) - mid).norm() <= r
        });
        if !dup {
            keep.push(i);
        }
    }
    raw = keep.iter().map(|&i| raw[i]).collect();
    let ends: Vec<(usize, usize)> = keep.iter().map(|&i| ends[i]).collect();

    // move piece ends onto their node
    for (rp, &(a, b)) in raw.iter_mut().zip(&ends) {
        let pa = mesh.to_local(rp.tri, node_pos[a].0 / node_pos[a].3 as f64);
        let pb = mesh.to_local(rp.tri, node_pos[b].0 / node_pos[b].3 as f64);
        rp.piece = match rp.piece {
            Piece::Segment(_) => Piece::Segment(Segment2::new(pa, pb)),
            Piece::Arc(c) => Piece::Arc(c.with_interval(c.param_of(pa), c.param_of(pb))),
        };
    }
    let mut at_node: Vec<Vec<usize>> = vec![Vec::new(); node_pos.len()];
    for (i, &(a, b)) in ends.iter().enumerate() {
        at_node[a].push(i);
        at_node[b].push(i);
    }
    // oriented piece i seen leaving node n: (left site, right site, arc)
    let sites_from = |i: usize, n: usize| {
        let rp = &raw[i];
        let (l, r) = (field.beams[rp.left].site, field.beams[rp.right].site);
        if ends[i].0 == n {
            (l, r, rp.piece.is_arc())
        } else {
            (r, l, rp.piece.is_arc())
        }
    };
    // outward unit direction of piece i at node n, in the frame of triangle `frame`
    let out_dir = |i: usize, n: usize, frame: usize| -> Option<Vec2> {
        let rp = &raw[i];
        let pc = if ends[i].0 == n { rp.piece } else { rp.piece.reversed() };
        let d = match pc {
            Piece::Segment(sg) => sg.b - sg.a,
            Piece::Arc(a) => a.derivative(a.t0) * (a.t1 - a.t0).signum(),
        };
        if rp.tri == frame {
            return Some(d.normalize());
        }
        let j = (0..3).find(|&j| mesh.adj[rp.tri][j].map(|x| x.0) == Some(frame))?;
        Some(mesh.edge_motion(rp.tri, j)?.apply_vec(d).normalize())
    };
    let continues = |last: usize, next: usize, node: usize| -> bool {
        let (ll, lr, la) = sites_from(last, node);
        let (nl, nr, na) = sites_from(next, node);
        if la != na {
            return false;
        }
        if la {
            // continuing across a node swaps the outward view of the previous piece
            return nl == lr && nr == ll;
        }
        match (out_dir(last, node, raw[last].tri), out_dir(next, node, raw[last].tri)) {
            (Some(u), Some(v)) => u.dot(&v) < -1.0 + 1e-12,
            _ => false,
        }
    };
    // chain pieces through degree-2 nodes with matching sides
    let mut used = vec![false; raw.len()];
    let mut edges = Vec::new();
    for start in 0..raw.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        // (piece, forward?) list
        let mut chain = vec![(start, true)];
        for dir in [true, false] {
            loop {
                let &(last, fwd) = if dir { chain.last().unwrap() } else { chain.first().unwrap() };
                let node = if fwd == dir { ends[last].1 } else { ends[last].0 };
                if at_node[node].len() != 2 {
                    break;
                }
                let next = at_node[node].iter().copied().find(|&j| j != last).unwrap();
                if used[next] {
                    break;
                }
                if !continues(last, next, node) {
                    break;
                }
                used[next] = true;
                let nfwd = ends[next].0 == node;
                if dir {
                    chain.push((next, nfwd));
                } else {
                    chain.insert(0, (next, !nfwd));
                }
            }
        }
        let a = if chain[0].1 { ends[chain[0].0].0 } else { ends[chain[0].0].1 };
        let &(li, lf) = chain.last().unwrap();
        let b = if lf { ends[li].1 } else { ends[li].0 };
        let mut pieces = Vec::new();
        let mut parabolic = false;
        for &(i, fwd) in &chain {
            let rp = &raw[i];
            let (lb, rb) = (&field.beams[rp.left], &field.beams[rp.right]);
            let ep = EdgePiece {
                tri: rp.tri,
                piece: rp.piece,
                left: lb.site,
                right: rb.site,
                left_geom: rp.piece.transformed(&lb.inverse),
                right_geom: rp.piece.transformed(&rb.inverse),
            };
            parabolic |= rp.piece.is_arc();
            pieces.push(if fwd { ep } else { ep.reversed() });
        }
        edges.push(CutEdge { a, b, pieces, parabolic });
    }

    // renumber nodes to those still used
    let mut remap = vec![usize::MAX; node_pos.len()];
    let mut nodes = Vec::new();
    for e in &edges {
        for n in [e.a, e.b] {
            if remap[n] == usize::MAX {
                remap[n] = nodes.len();
                let (sum, t, p, count) = node_pos[n];
                let position = sum / count as f64;
                let vertex = half.interior_vertices.iter().map(|x| x.0).find(|&v| (mesh.positions[v] - position).norm() <= r);
                let boundary = half.boundary.iter().position(|&v| (mesh.positions[v] - position).norm() <= r);
                nodes.push(CutNode { position, tri: t, local: p, distance: 0.0, projections: Vec::new(), vertex, boundary });
            }
        }
    }
    for e in &mut edges {
        e.a = remap[e.a];
        e.b = remap[e.b];
    }
    let mut tree = CutLocusTree { nodes, edges, field };
    let total = tree.field.boundary_length();
    for n in 0..tree.nodes.len() {
        let mut projs: Vec<Projection> = Vec::new();
        let mut ds = Vec::new();
        for e in tree.incident(n) {
            for left in [true, false] {
                let p = tree.side_projection(e, n, left);
                let site = tree.field.sites.iter().position(|&x| x == p.site).unwrap();
                ds.push(tree.field.beam_distance_in_site(site, p.coords));
                if !projs.iter().any(|q| q.same_foot(&p, total, &tol)) {
                    projs.push(p);
                }
            }
        }
        projs.sort_by(|x, y| x.order_key().partial_cmp(&y.order_key()).unwrap());
        tree.nodes[n].distance = ds.iter().sum::<f64>() / ds.len() as f64;
        tree.nodes[n].projections = projs;
    }

    Ok(tree)
}

impl CutLocusTree {
    /// Structural checks: a tree through every polyhedron vertex with consistent junctions.
    pub fn check(&self, half: &HalfSurface) -> Result<(), CutLocusError> {
        let tree = self;
        let tol = self.field.tol;
    if !tree.is_tree() {
        return Err(CutLocusError::NotATree(format!("{} nodes, {} edges", tree.nodes.len(), tree.edges.len())));
    }
    for &(v, _) in &half.interior_vertices {
        if !tree.nodes.iter().any(|n| n.vertex == Some(v)) {
            return Err(CutLocusError::NotATree(format!("vertex {v} is not on the cut locus")));
        }
    }
    let res = tree.junction_residual();
    if res > 1e3 * tol.eps_len {
        let node = (0..tree.nodes.len()).max_by_key(|&n| tree.degree(n)).unwrap_or(0);
        return Err(CutLocusError::Junction { node, residual: res });
    }
        Ok(())
    }
}

/// Propagates and extracts in one step.
pub fn cut_locus(half: &HalfSurface, tol: &Tolerance) -> Result<CutLocusTree, CutLocusError> {
    let field = propagate(half, tol)?;
    let tree = extract_cut_locus(half, field)?;
    tree.check(half)?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::ClosedCurve;
    use crate::fixtures;
    use crate::surface::Side;

    fn tetra_halves() -> (ClosedCurve, Tolerance) {
        let (p, q) = fixtures::sliced_tetrahedron();
        let c = ClosedCurve::new(&p, q).unwrap();
        (c, p.tolerance())
    }

    #[test]
    fn apex_half_distance_to_apex() {
        let (c, tol) = tetra_halves();
        let half = c.split.half(Side::Left);
        let field = propagate(half, &tol).unwrap();
        let apex = half.interior_vertices[0].0;
        let p = half.mesh.positions[apex];
        // apex to the opposite side of an equilateral triangle of side 2/3
        let d = field.distance_3d(half, p).unwrap();
        assert!((d - (2.0 / 3.0) * 3f64.sqrt() / 2.0).abs() < 1e-12, "{d}");
    }

    #[test]
    fn base_half_distance_to_centroid() {
        let (c, tol) = tetra_halves();
        let half = c.split.half(Side::Right);
        let field = propagate(half, &tol).unwrap();
        let centroid = Vec3::new(0.5, 3f64.sqrt() / 6.0, 0.0);
        let d = field.distance_3d(half, centroid).unwrap();
        // slant height of the lower trapezoid plus inradius of the base
        let expect = (1.0 / 3.0) * 3f64.sqrt() / 2.0 + 3f64.sqrt() / 6.0;
        assert!((d - expect).abs() < 1e-12, "{d} vs {expect}");
    }

    #[test]
    fn apex_half_tree_is_a_tripod_at_the_apex() {
        let (c, tol) = tetra_halves();
        let half = c.split.half(Side::Left);
        let tree = cut_locus(half, &tol).unwrap();
        assert_eq!(tree.edges.len(), 3, "{:#?}", tree.edges.iter().map(|e| (e.a, e.b)).collect::<Vec<_>>());
        let apex = tree.nodes.iter().position(|n| n.vertex.is_some()).unwrap();
        assert_eq!(tree.degree(apex), 3);
        for e in &tree.edges {
            assert!(!e.parabolic);
            let other = tree.nodes[e.other(apex)].boundary;
            assert!(other.is_some());
            // lateral edge of the small tetrahedron
            assert!((e.length() - 2.0 / 3.0).abs() < 1e-9);
        }
        assert_eq!(tree.nodes[apex].projections.len(), 3);
    }

    #[test]
    fn base_half_tree_meets_at_the_centroid() {
        let (c, tol) = tetra_halves();
        let half = c.split.half(Side::Right);
        let tree = cut_locus(half, &tol).unwrap();
        assert_eq!(tree.edges.len(), 3);
        let centroid = Vec3::new(0.5, 3f64.sqrt() / 6.0, 0.0);
        let hub = tree.nodes.iter().position(|n| (n.position - centroid).norm() < 1e-9).unwrap();
        assert_eq!(tree.degree(hub), 3);
        assert!((tree.nodes[hub].distance - (3f64.sqrt() / 6.0 + 3f64.sqrt() / 6.0)).abs() < 1e-9);
        assert_eq!(tree.leaves().len(), 3);
    }

    #[test]
    fn pyramid_apex_side_has_four_parabolic_arcs() {
        let (p, q) = (fixtures::pyramid(), fixtures::pyramid_curve());
        let c = ClosedCurve::new(&p, q).unwrap();
        let half = c.split.half(Side::Left);
        let tree = cut_locus(half, &p.tolerance()).unwrap();
        assert_eq!(tree.num_parabolic(), 4);
        let mut leaves: Vec<String> = tree
            .leaves()
            .into_iter()
            .map(|n| match (tree.nodes[n].vertex, tree.nodes[n].boundary) {
                (Some(_), _) => "apex".to_string(),
                (_, Some(b)) => format!("q{}", half.boundary_curve_index[b]),
                _ => "other".to_string(),
            })
            .collect();
        leaves.sort();
        // b' and d' are curve points 0 and 4
        assert_eq!(leaves, vec!["apex", "q0", "q4"]);
        // arc points are equidistant from both sites
        for e in tree.edges.iter().filter(|e| e.parabolic) {
            for pc in &e.pieces {
                let a = match pc.left_geom {
                    Piece::Arc(a) => a,
                    _ => continue,
                };
                for i in 0..5 {
                    let t = a.t0 + (a.t1 - a.t0) * i as f64 / 4.0;
                    let x = pc.piece.transformed(&PlanarMotion::identity());
                    let _ = x;
                    let pt = a.at(t);
                    let d_focus = (pt - a.focus).norm();
                    let d_line = a.directrix.signed_distance(pt).abs();
                    assert!((d_focus - d_line).abs() < p.tolerance().eps_len);
                }
            }
        }
    }

    #[test]
    fn pyramid_base_side_has_an_x_junction() {
        let (p, q) = (fixtures::pyramid(), fixtures::pyramid_curve());
        let c = ClosedCurve::new(&p, q).unwrap();
        let half = c.split.half(Side::Right);
        let tree = cut_locus(half, &p.tolerance()).unwrap();
        let hub = tree.nodes.iter().position(|n| (n.position - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-9).unwrap();
        assert_eq!(tree.degree(hub), 4);
        let corners: Vec<usize> = tree.nodes.iter().filter_map(|n| n.vertex).collect();
        assert_eq!(corners.len(), 4);
    }

    #[test]
    fn convex_curve_vertex_edges_bisect_the_angle() {
        let (p, q) = (fixtures::pyramid(), fixtures::pyramid_curve());
        let c = ClosedCurve::new(&p, q).unwrap();
        for side in [Side::Left, Side::Right] {
            let half = c.split.half(side);
            let tree = cut_locus(half, &p.tolerance()).unwrap();
            for e in &tree.edges {
                for (end, n) in [(true, e.a), (false, e.b)] {
                    if tree.nodes[n].boundary.is_none() {
                        continue;
                    }
                    let pc = if end { e.pieces[0] } else { e.pieces.last().unwrap().reversed() };
                    // in the frame of the outgoing segment the edge leaves at half the angle
                    let (site, g) = if matches!(tree.field.sites[pc.left], Site::Segment(_)) && pc.left_geom.start().x.abs() < 1e-9 {
                        (pc.left, pc.left_geom)
                    } else {
                        (pc.right, pc.right_geom)
                    };
                    let k = tree.field.sites[site].frame_index();
                    let alpha = tree.field.angles[k];
                    let dir = g.polyline(1e-6)[1] - g.start();
                    assert!((polar(dir) - alpha / 2.0).abs() < 1e-6, "{} vs {}", polar(dir), alpha / 2.0);
                }
            }
        }
    }
}
