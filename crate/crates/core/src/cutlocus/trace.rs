//! Regions of a half bounded by the curve, straight cuts along projection
//! directions and the two sides of cut-locus pieces, developed into the
//! plane. Peels and subpeels are built on top of this.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{polar, CutLocusError, CutLocusTree, EdgePiece, Site};
use crate::geom::{intersect, Piece, PlanarMotion, Segment2, Vec2};
use crate::surface::{HalfSurface, Side};

/// What a ray cut is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayKind {
    Generator,
    Reflex,
    Split,
    Projection,
}

/// Straight cut from the curve into the half along a projection direction,
/// given in the frame of boundary segment `frame`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayCut {
    pub frame: usize,
    /// Foot along the frame's segment; 0 for a cut at the vertex.
    pub x: f64,
    /// Direction of the ray in the frame.
    pub theta: f64,
    pub kind: RayKind,
}

impl RayCut {
    pub fn origin(&self) -> Vec2 {
        Vec2::new(self.x, 0.0)
    }

    pub fn dir(&self) -> Vec2 {
        Vec2::new(self.theta.cos(), self.theta.sin())
    }
}

/// Origin of one boundary element of a developed region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Part `[from, to]` of boundary segment `segment` of the half;
    /// `curve_segment` is the same segment in the curve's own numbering.
    Curve { side: Side, segment: usize, curve_segment: usize, from: f64, to: f64 },
    /// One side of a (split) cut-locus piece.
    CutLocus { side: Side, edge: usize, piece: usize, left: bool },
    /// Straight cut from the curve to the cut locus.
    Ray { side: Side, cut: usize, ray: RayKind },
}

impl Provenance {
    /// Key shared by the two copies of a cut element; `None` for curve parts.
    pub fn cut_key(&self) -> Option<(Side, u8, usize)> {
        match *self {
            Provenance::Curve { .. } => None,
            Provenance::CutLocus { side, piece, .. } => Some((side, 0, piece)),
            Provenance::Ray { side, cut, .. } => Some((side, 1, cut)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryElement {
    pub piece: Piece,
    pub provenance: Provenance,
}

/// Signed area enclosed by a closed chain of elements.
pub fn chain_area(elements: &[BoundaryElement]) -> f64 {
    elements.iter().map(|e| e.piece.area_term()).sum()
}

/// Largest distance between the end of one element and the start of the next.
pub fn chain_gap(elements: &[BoundaryElement]) -> f64 {
    let n = elements.len();
    (0..n).map(|i| (elements[i].piece.end() - elements[(i + 1) % n].piece.start()).norm()).fold(0.0, f64::max)
}

/// Frames of the boundary segments in the development of the curve with the
/// half's angles, starting at boundary point 0.
#[derive(Debug, Clone)]
pub struct CurveFrames {
    pub frames: Vec<PlanarMotion>,
    /// Takes the frame of segment `k` to its copy one turn later.
    pub closure: PlanarMotion,
}

impl CurveFrames {
    pub fn new(half: &HalfSurface) -> Self {
        let lengths = half.boundary_lengths();
        let angles = half.boundary_angles();
        let n = lengths.len();
        let mut frames = Vec::with_capacity(n);
        let mut m = PlanarMotion::identity();
        for k in 0..n {
            frames.push(m);
            let next = PlanarMotion::new(PI - angles[(k + 1) % n], Vec2::new(lengths[k], 0.0));
            m = m.compose(&next);
        }
        CurveFrames { frames, closure: m }
    }

    pub fn get(&self, k: usize, wrapped: bool) -> PlanarMotion {
        if wrapped {
            self.closure.compose(&self.frames[k])
        } else {
            self.frames[k]
        }
    }
}

/// A cut-locus piece after splitting at the ray cuts.
#[derive(Debug, Clone, Copy)]
pub struct TracePiece {
    pub edge: usize,
    pub piece: EdgePiece,
}

/// One side of a trace piece, oriented with its region on the left.
#[derive(Debug, Clone, Copy)]
pub struct SideTrace {
    pub index: usize,
    pub left: bool,
    pub site: usize,
    /// Geometry in the site frame.
    pub geom: Piece,
    /// Foot of the middle point: arclength and negated direction.
    pub key: (f64, f64),
    pub region: usize,
    /// Foot lies before the region's first cut, one turn back.
    pub wrapped: bool,
}

/// Region between two consecutive cuts, developed into the plane.
#[derive(Debug, Clone)]
pub struct DevRegion {
    pub boundary: Vec<BoundaryElement>,
    pub start_cut: usize,
    pub end_cut: usize,
    /// Largest mismatch between consecutive boundary elements.
    pub gap: f64,
}

impl DevRegion {
    pub fn area(&self) -> f64 {
        chain_area(&self.boundary)
    }
}

fn key_le(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 <= b.1)
}

/// Splits the cut locus of a half at a set of ray cuts and traces the
/// regions between consecutive cuts.
pub struct Tracer<'a> {
    pub half: &'a HalfSurface,
    pub tree: &'a CutLocusTree,
    /// Cuts sorted along the curve.
    pub cuts: Vec<RayCut>,
    keys: Vec<(f64, f64)>,
    /// Where each cut first meets the cut locus, in the cut's frame.
    pub hits: Vec<Vec2>,
    pub pieces: Vec<TracePiece>,
    pub sides: Vec<SideTrace>,
}

impl<'a> Tracer<'a> {
    pub fn new(half: &'a HalfSurface, tree: &'a CutLocusTree, mut cuts: Vec<RayCut>) -> Result<Self, CutLocusError> {
        let field = &tree.field;
        if cuts.is_empty() {
            return Err(CutLocusError::NotATree("no cuts to trace between".into()));
        }
        let key = |c: &RayCut| (field.arclength_at(c.frame) + c.x, -c.theta);
        cuts.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        cuts.dedup_by(|a, b| key(a) == key(b));
        let keys: Vec<(f64, f64)> = cuts.iter().map(key).collect();
        let reach = 10.0 * field.boundary_length();
        let proper = 1e2 * field.tol.eps_len;
        let mut pieces: Vec<TracePiece> = Vec::new();
        for (e, edge) in tree.edges.iter().enumerate() {
            for p in &edge.pieces {
                pieces.push(TracePiece { edge: e, piece: *p });
            }
        }
        let mut hits = Vec::with_capacity(cuts.len());
        for c in &cuts {
            let o = c.origin();
            let ray = Piece::Segment(Segment2::new(o, o + c.dir() * reach));
            let split_site = if c.x > 0.0 { Site::Segment(c.frame) } else { Site::Vertex(c.frame) };
            let mut i = 0;
            while i < pieces.len() {
                let tp = pieces[i];
                let mut done = false;
                for left in [true, false] {
                    let (site, g) = if left { (tp.piece.left, tp.piece.left_geom) } else { (tp.piece.right, tp.piece.right_geom) };
                    if field.sites[site] != split_site || done {
                        continue;
                    }
                    for p in intersect(&g, &ray, &field.tol) {
                        if (p - g.start()).norm() > proper && (p - g.end()).norm() > proper {
                            let (a, b) = split_edge_piece(&tp.piece, left, p);
                            pieces[i] = TracePiece { edge: tp.edge, piece: a };
                            pieces.insert(i + 1, TracePiece { edge: tp.edge, piece: b });
                            done = true;
                            break;
                        }
                    }
                }
                if !done {
                    i += 1;
                }
            }
            let mut best: Option<(f64, Vec2)> = None;
            for tp in &pieces {
                for (site, g) in [(tp.piece.left, tp.piece.left_geom), (tp.piece.right, tp.piece.right_geom)] {
                    if field.sites[site].frame_index() != c.frame {
                        continue;
                    }
                    let mut cand = intersect(&g, &ray, &field.tol);
                    for q in [g.start(), g.end()] {
                        let t = (q - o).dot(&c.dir());
                        if t >= -proper && (o + c.dir() * t - q).norm() <= proper {
                            cand.push(q);
                        }
                    }
                    for q in cand {
                        let d = (q - o).norm();
                        if best.map_or(true, |(bd, _)| d < bd) {
                            best = Some((d, q));
                        }
                    }
                }
            }
            let (_, h) = best.ok_or_else(|| CutLocusError::NotATree(format!("ray from frame {} at {} misses the cut locus", c.frame, c.x)))?;
            hits.push(h);
        }
        let mut tracer = Tracer { half, tree, cuts, keys, hits, pieces, sides: Vec::new() };
        tracer.sides = tracer.build_sides();
        Ok(tracer)
    }

    /// Foot key of a point given in the frame of site `site`.
    pub fn foot_key(&self, site: usize, q: Vec2) -> (f64, f64) {
        let field = &self.tree.field;
        match field.sites[site] {
            Site::Segment(i) => (field.arclength_at(i) + q.x.clamp(0.0, field.lengths[i]), -PI / 2.0),
            Site::Vertex(k) => (field.arclength_at(k), -polar(q)),
        }
    }

    /// Region index and wrap flag of a foot key.
    pub fn locate(&self, key: (f64, f64)) -> (usize, bool) {
        match (0..self.keys.len()).rev().find(|&i| key_le(self.keys[i], key)) {
            Some(i) => (i, false),
            None => (self.keys.len() - 1, true),
        }
    }

    fn build_sides(&self) -> Vec<SideTrace> {
        let mut out = Vec::with_capacity(2 * self.pieces.len());
        for (index, tp) in self.pieces.iter().enumerate() {
            for left in [true, false] {
                let (site, geom) = if left {
                    (tp.piece.left, tp.piece.left_geom)
                } else {
                    (tp.piece.right, tp.piece.right_geom.reversed())
                };
                let key = self.foot_key(site, geom.midpoint());
                let (region, wrapped) = self.locate(key);
                out.push(SideTrace { index, left, site, geom, key, region, wrapped });
            }
        }
        out
    }

    pub fn num_regions(&self) -> usize {
        self.cuts.len()
    }

    /// Image of a side under the given frames.
    pub fn side_image(&self, s: &SideTrace, frames: &dyn Fn(usize, bool) -> PlanarMotion) -> Piece {
        let k = self.tree.field.sites[s.site].frame_index();
        s.geom.transformed(&frames(k, s.wrapped))
    }

    fn curve_segment(&self, k: usize) -> usize {
        let ci = &self.half.boundary_curve_index;
        let n = ci.len();
        let (a, b) = (ci[k], ci[(k + 1) % n]);
        if b == (a + 1) % n {
            a
        } else {
            b
        }
    }

    /// Develops every region; only sides whose trace piece passes `keep`
    /// appear on the boundaries.
    pub fn regions(&self, frames: &dyn Fn(usize, bool) -> PlanarMotion, keep: &dyn Fn(usize) -> bool) -> Vec<DevRegion> {
        let m = self.cuts.len();
        let mut by_region: Vec<Vec<&SideTrace>> = vec![Vec::new(); m];
        for s in &self.sides {
            if keep(s.index) {
                by_region[s.region].push(s);
            }
        }
        (0..m).map(|i| self.region(i, &mut by_region[i], frames)).collect()
    }

    fn region(&self, i: usize, sides: &mut [&SideTrace], frames: &dyn Fn(usize, bool) -> PlanarMotion) -> DevRegion {
        let field = &self.tree.field;
        let side = self.half.side;
        let tiny = 10.0 * field.tol.eps_len;
        let n = field.lengths.len();
        let m = self.cuts.len();
        let j = (i + 1) % m;
        let (c0, c1) = (self.cuts[i], self.cuts[j]);
        let end_wrapped = j <= i;
        let mut out: Vec<BoundaryElement> = Vec::new();
        let push = |out: &mut Vec<BoundaryElement>, piece: Piece, provenance: Provenance| {
            if piece.length() > tiny {
                out.push(BoundaryElement { piece, provenance });
            }
        };
        // curve from c0 to c1
        let (mut k, mut x, mut wrapped) = (c0.frame, c0.x, false);
        loop {
            let last = k == c1.frame && wrapped == end_wrapped && c1.x >= x - tiny;
            let x1 = if last { c1.x } else { field.lengths[k] };
            let seg = Piece::Segment(Segment2::new(Vec2::new(x, 0.0), Vec2::new(x1, 0.0)));
            let prov = Provenance::Curve { side, segment: k, curve_segment: self.curve_segment(k), from: x, to: x1 };
            push(&mut out, seg.transformed(&frames(k, wrapped)), prov);
            if last {
                break;
            }
            k += 1;
            x = 0.0;
            if k == n {
                k = 0;
                wrapped = true;
            }
        }
        // up the closing cut
        let f1 = frames(c1.frame, end_wrapped);
        let up = Piece::Segment(Segment2::new(f1.apply(c1.origin()), f1.apply(self.hits[j])));
        push(&mut out, up, Provenance::Ray { side, cut: j, ray: c1.kind });
        // cut locus, feet running backwards
        sides.sort_by(|a, b| {
            let ka = (a.key.0 + if a.wrapped { field.boundary_length() } else { 0.0 }, a.key.1);
            let kb = (b.key.0 + if b.wrapped { field.boundary_length() } else { 0.0 }, b.key.1);
            kb.partial_cmp(&ka).unwrap()
        });
        for s in sides.iter() {
            let tp = &self.pieces[s.index];
            push(
                &mut out,
                self.side_image(s, frames),
                Provenance::CutLocus { side, edge: tp.edge, piece: s.index, left: s.left },
            );
        }
        // down the opening cut
        let f0 = frames(c0.frame, false);
        let down = Piece::Segment(Segment2::new(f0.apply(self.hits[i]), f0.apply(c0.origin())));
        push(&mut out, down, Provenance::Ray { side, cut: i, ray: c0.kind });
        let gap = chain_gap(&out);
        DevRegion { boundary: out, start_cut: i, end_cut: j, gap }
    }
}

/// Splits both side geometries (and the surface piece) of an edge piece at
/// the point `p` of one side.
fn split_edge_piece(ep: &EdgePiece, left: bool, p: Vec2) -> (EdgePiece, EdgePiece) {
    let g = if left { ep.left_geom } else { ep.right_geom };
    let (ga, _) = g.split_at(p);
    let q = ga.end();
    let cut = |other: Piece| {
        let m = PlanarMotion::between_segments(g.start(), g.end(), other.start(), other.end());
        other.split_at(m.apply(q))
    };
    let (la, lb) = cut(ep.left_geom);
    let (ra, rb) = cut(ep.right_geom);
    let (pa, pb) = cut(ep.piece);
    (
        EdgePiece { tri: ep.tri, piece: pa, left: ep.left, right: ep.right, left_geom: la, right_geom: ra },
        EdgePiece { tri: ep.tri, piece: pb, left: ep.left, right: ep.right, left_geom: lb, right_geom: rb },
    )
}

/// Ray cut along the projection of a cut-locus node.
pub fn projection_cut(tree: &CutLocusTree, node: usize, pr: &super::Projection, kind: RayKind) -> RayCut {
    let field = &tree.field;
    let n = field.lengths.len();
    if let Some(k) = tree.nodes[node].boundary {
        return RayCut { frame: k, x: 0.0, theta: field.angles[k] / 2.0, kind };
    }
    let snap = 1e3 * field.tol.eps_len;
    match pr.site {
        Site::Segment(i) => {
            if pr.coords.x <= snap {
                RayCut { frame: i, x: 0.0, theta: PI / 2.0, kind }
            } else if pr.coords.x >= field.lengths[i] - snap {
                let k = (i + 1) % n;
                RayCut { frame: k, x: 0.0, theta: field.angles[k] - PI / 2.0, kind }
            } else {
                RayCut { frame: i, x: pr.coords.x, theta: PI / 2.0, kind }
            }
        }
        Site::Vertex(k) => RayCut { frame: k, x: 0.0, theta: polar(pr.coords), kind },
    }
}

/// Flat region between two consecutive leaf projections.
#[derive(Debug, Clone)]
pub struct Peel {
    /// Leaves at the two ends, in boundary order.
    pub leaves: [usize; 2],
    /// Tree path between the leaves.
    pub path: Vec<usize>,
    /// Boundary developed in the curve's development from boundary point 0.
    pub boundary: Vec<BoundaryElement>,
    /// Subpeels in boundary order, split at the projections of inner path nodes.
    pub subpeels: Vec<Vec<BoundaryElement>>,
}

impl Peel {
    pub fn area(&self) -> f64 {
        chain_area(&self.boundary)
    }
}

fn tree_path(tree: &CutLocusTree, a: usize, b: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; tree.nodes.len()];
    let mut queue = VecDeque::from([a]);
    prev[a] = a;
    while let Some(u) = queue.pop_front() {
        for e in tree.incident(u) {
            let v = tree.edges[e].other(u);
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![b];
    while *path.last().unwrap() != a && prev[*path.last().unwrap()] != usize::MAX {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    path
}

/// Cuts along every distinct projection of the given nodes, each tagged with
/// its node.
fn node_cuts(tree: &CutLocusTree, nodes: &[usize]) -> Vec<(RayCut, usize)> {
    let field = &tree.field;
    let mut out: Vec<(RayCut, usize)> = Vec::new();
    for &u in nodes {
        for pr in &tree.nodes[u].projections {
            let c = projection_cut(tree, u, pr, RayKind::Projection);
            let key = (field.arclength_at(c.frame) + c.x, c.theta);
            let dup = out.iter().any(|(d, _)| {
                let k = (field.arclength_at(d.frame) + d.x, d.theta);
                (k.0 - key.0).abs() <= 1e3 * field.tol.eps_len && (k.1 - key.1).abs() <= 1e-7
            });
            if !dup {
                out.push((c, u));
            }
        }
    }
    out
}

/// Peels of a half in boundary order, starting after boundary point 0.
pub fn peels(half: &HalfSurface, tree: &CutLocusTree) -> Result<Vec<Peel>, CutLocusError> {
    let frames = CurveFrames::new(half);
    let get = |k: usize, w: bool| frames.get(k, w);
    let leaves: Vec<usize> = (0..tree.nodes.len()).filter(|&u| tree.degree(u) == 1).collect();
    let leaf_cuts = node_cuts(tree, &leaves);
    let tracer = Tracer::new(half, tree, leaf_cuts.iter().map(|c| c.0).collect())?;
    let owner = |c: &RayCut| {
        leaf_cuts.iter().find(|(d, _)| d.frame == c.frame && d.x == c.x && d.theta == c.theta).map(|d| d.1).unwrap()
    };
    let all: Vec<usize> = (0..tree.nodes.len()).collect();
    let fine_cuts = node_cuts(tree, &all);
    let fine = Tracer::new(half, tree, fine_cuts.iter().map(|c| c.0).collect())?;
    let fine_regions = fine.regions(&get, &|_| true);
    let regions = tracer.regions(&get, &|_| true);
    let total = tree.field.boundary_length();
    let mut out = Vec::with_capacity(regions.len());
    for r in regions {
        let (ca, cb) = (tracer.cuts[r.start_cut], tracer.cuts[r.end_cut]);
        let (ua, ub) = (owner(&ca), owner(&cb));
        let ka = tracer.keys[r.start_cut];
        let span = |k: (f64, f64)| {
            let mut d = k.0 - ka.0;
            if d < 0.0 || (d == 0.0 && k.1 < ka.1) {
                d += total;
            }
            (d, k.1)
        };
        let end = if r.end_cut == r.start_cut { (total, ka.1) } else { span(tracer.keys[r.end_cut]) };
        let subpeels = fine_regions
            .iter()
            .filter(|f| {
                let k = span(fine.keys[f.start_cut]);
                k.0 < end.0 || (k.0 == end.0 && k.1 < end.1)
            })
            .map(|f| f.boundary.clone())
            .collect();
        out.push(Peel { leaves: [ua, ub], path: tree_path(tree, ua, ub), boundary: r.boundary, subpeels });
    }
    Ok(out)
}
