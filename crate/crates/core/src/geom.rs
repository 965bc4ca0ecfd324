//! Planar and spatial primitives shared by the rest of the crate: tolerances,
//! rigid motions of the plane, segments and parabolic arcs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("focus lies on the directrix (distance {0:e})")]
    DegenerateBisector(f64),
}

/// Length and angle tolerances fixed for one job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub eps_len: f64,
    pub eps_ang: f64,
}

impl Tolerance {
    /// `eps_len = 1e-9 * diameter`, `eps_ang = 1e-9`.
    pub fn for_diameter(diameter: f64) -> Self {
        let d = if diameter > 0.0 { diameter } else { 1.0 };
        Tolerance { eps_len: 1e-9 * d, eps_ang: 1e-9 }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::for_diameter(1.0)
    }
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counterclockwise perpendicular.
#[inline]
pub fn perp(a: Vec2) -> Vec2 {
    Vec2::new(-a.y, a.x)
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Unsigned angle between two vectors.
pub fn angle_between(a: Vec2, b: Vec2) -> f64 {
    cross(a, b).atan2(a.dot(&b)).abs()
}

/// Signed turn from `a` to `b`, in (-pi, pi].
pub fn signed_angle(a: Vec2, b: Vec2) -> f64 {
    cross(a, b).atan2(a.dot(&b))
}

pub fn rotate(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Orientation preserving isometry of the plane: `p -> R(rotation) p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarMotion {
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl Default for PlanarMotion {
    fn default() -> Self {
        Self::identity()
    }
}

impl PlanarMotion {
    pub fn identity() -> Self {
        PlanarMotion { rotation: 0.0, translation: [0.0, 0.0] }
    }

    pub fn new(rotation: f64, translation: Vec2) -> Self {
        PlanarMotion { rotation: wrap_angle(rotation), translation: [translation.x, translation.y] }
    }

    pub fn translation(&self) -> Vec2 {
        Vec2::new(self.translation[0], self.translation[1])
    }

    /// Motion taking the standard frame to the frame with the given origin and x-axis.
    pub fn from_frame(origin: Vec2, x_axis: Vec2) -> Self {
        PlanarMotion::new(x_axis.y.atan2(x_axis.x), origin)
    }

    pub fn x_axis(&self) -> Vec2 {
        let (s, c) = self.rotation.sin_cos();
        Vec2::new(c, s)
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        rotate(p, self.rotation) + self.translation()
    }

    pub fn apply_vec(&self, v: Vec2) -> Vec2 {
        rotate(v, self.rotation)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &PlanarMotion) -> PlanarMotion {
        PlanarMotion::new(self.rotation + other.rotation, self.apply(other.translation()))
    }

    pub fn inverse(&self) -> PlanarMotion {
        let t = rotate(-self.translation(), -self.rotation);
        PlanarMotion::new(-self.rotation, t)
    }

    /// Unique motion mapping segment `(a0, a1)` onto `(b0, b1)` (directions only
    /// are matched; lengths are assumed equal).
    pub fn between_segments(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> PlanarMotion {
        let ra = (a1 - a0).y.atan2((a1 - a0).x);
        let rb = (b1 - b0).y.atan2((b1 - b0).x);
        let rot = rb - ra;
        let t = b0 - rotate(a0, rot);
        PlanarMotion::new(rot, t)
    }

    pub fn is_identity(&self, tol: &Tolerance) -> bool {
        self.rotation.abs() <= tol.eps_ang && self.translation().norm() <= tol.eps_len
    }
}

/// Fixed point of a motion; `None` for translations and the identity.
pub fn fixed_point(motion: &PlanarMotion, tol: &Tolerance) -> Option<Vec2> {
    let theta = wrap_angle(motion.rotation);
    if theta.abs() <= tol.eps_ang {
        return None;
    }
    // (I - R) c = t
    let (s, c) = theta.sin_cos();
    let a = 1.0 - c;
    let b = s;
    let det = a * a + b * b;
    let t = motion.translation();
    // inverse of [[a, b], [-b, a]]
    Some(Vec2::new((a * t.x - b * t.y) / det, (b * t.x + a * t.y) / det))
}

/// Oriented line through `point` along the unit vector `dir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line2 {
    pub point: Vec2,
    pub dir: Vec2,
}

impl Line2 {
    pub fn new(point: Vec2, dir: Vec2) -> Self {
        Line2 { point, dir: dir.normalize() }
    }

    pub fn through(a: Vec2, b: Vec2) -> Self {
        Line2::new(a, b - a)
    }

    /// Signed distance, positive on the left.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        cross(self.dir, p - self.point)
    }

    pub fn project_param(&self, p: Vec2) -> f64 {
        self.dir.dot(&(p - self.point))
    }

    pub fn at(&self, t: f64) -> Vec2 {
        self.point + self.dir * t
    }

    pub fn transformed(&self, m: &PlanarMotion) -> Line2 {
        Line2 { point: m.apply(self.point), dir: m.apply_vec(self.dir) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2 {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment2 {
    pub fn new(a: Vec2, b: Vec2) -> Self {
        Segment2 { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn at(&self, t: f64) -> Vec2 {
        self.a + (self.b - self.a) * t
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        let d = self.b - self.a;
        let l2 = d.norm_squared();
        if l2 == 0.0 {
            return (p - self.a).norm();
        }
        let t = ((p - self.a).dot(&d) / l2).clamp(0.0, 1.0);
        (p - self.at(t)).norm()
    }
}

/// Points equidistant from `focus` and the directrix line.
///
/// Parameterized in the directrix frame: with `o` the foot of the focus,
/// `u` the directrix direction and `n` the unit normal toward the focus,
/// `p(t) = o + t u + (t^2 + h^2) / (2h) n` where `h` is the focal distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicArc {
    pub focus: Vec2,
    pub directrix: Line2,
    pub t0: f64,
    pub t1: f64,
}

impl ParabolicArc {
    pub fn new(focus: Vec2, directrix: Line2, t0: f64, t1: f64) -> Self {
        ParabolicArc { focus, directrix, t0, t1 }
    }

    /// Signed focal distance (positive when the focus is left of the directrix).
    fn signed_h(&self) -> f64 {
        self.directrix.signed_distance(self.focus)
    }

    pub fn focal_distance(&self) -> f64 {
        self.signed_h().abs()
    }

    fn frame(&self) -> (Vec2, Vec2, Vec2, f64) {
        let hs = self.signed_h();
        let n = perp(self.directrix.dir) * hs.signum();
        let h = hs.abs();
        let o = self.focus - n * h;
        (o, self.directrix.dir, n, h)
    }

    pub fn at(&self, t: f64) -> Vec2 {
        let (o, u, n, h) = self.frame();
        o + u * t + n * ((t * t + h * h) / (2.0 * h))
    }

    pub fn derivative(&self, t: f64) -> Vec2 {
        let (_, u, n, h) = self.frame();
        u + n * (t / h)
    }

    /// Parameter of the point of the (full) parabola whose foot on the directrix is nearest `p`.
    pub fn param_of(&self, p: Vec2) -> f64 {
        let (o, u, _, _) = self.frame();
        u.dot(&(p - o))
    }

    pub fn vertex(&self) -> Vec2 {
        self.at(0.0)
    }

    pub fn start(&self) -> Vec2 {
        self.at(self.t0)
    }

    pub fn end(&self) -> Vec2 {
        self.at(self.t1)
    }

    pub fn length(&self) -> f64 {
        let h = self.focal_distance();
        // arc length of y = (t^2+h^2)/2h: integral sqrt(1 + t^2/h^2) dt
        let f = |t: f64| {
            let s = (t * t + h * h).sqrt();
            0.5 * (t * s + h * h * (t + s).ln()) / h
        };
        (f(self.t1) - f(self.t0)).abs()
    }

    pub fn with_interval(&self, t0: f64, t1: f64) -> Self {
        ParabolicArc { t0, t1, ..*self }
    }

    pub fn reversed(&self) -> Self {
        // reversing the directrix flips the parameter sign
        let directrix = Line2 { point: self.directrix.point, dir: -self.directrix.dir };
        ParabolicArc { focus: self.focus, directrix, t0: -self.t1, t1: -self.t0 }
    }

    pub fn transformed(&self, m: &PlanarMotion) -> Self {
        ParabolicArc {
            focus: m.apply(self.focus),
            directrix: self.directrix.transformed(m),
            t0: self.t0,
            t1: self.t1,
        }
    }

    /// Largest deviation between the arc and its chord over `[ta, tb]`.
    fn sagitta(&self, ta: f64, tb: f64) -> f64 {
        let a = self.at(ta);
        let b = self.at(tb);
        // for a parabola the farthest point from the chord is at the parameter midpoint
        let m = self.at(0.5 * (ta + tb));
        Segment2::new(a, b).distance_to(m)
    }

    /// Polyline approximation with sagitta at most `max_sagitta`.
    pub fn polyline(&self, max_sagitta: f64) -> Vec<Vec2> {
        let mut params = vec![self.t0];
        let mut stack = vec![(self.t0, self.t1)];
        let mut out = Vec::new();
        while let Some((a, b)) = stack.pop() {
            if self.sagitta(a, b) > max_sagitta && (b - a).abs() > 1e-12 {
                let m = 0.5 * (a + b);
                stack.push((m, b));
                stack.push((a, m));
            } else {
                out.push(b);
            }
        }
        params.extend(out);
        params.into_iter().map(|t| self.at(t)).collect()
    }
}

/// Bisector of a point and a line.
pub fn point_line_bisector(
    focus: Vec2,
    directrix: Line2,
    tol: &Tolerance,
) -> Result<ParabolicArc, GeomError> {
    let h = directrix.signed_distance(focus);
    if h.abs() <= tol.eps_len {
        return Err(GeomError::DegenerateBisector(h.abs()));
    }
    Ok(ParabolicArc::new(focus, directrix, f64::NEG_INFINITY, f64::INFINITY))
}

/// A boundary or cut-locus element: straight segment or parabolic arc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Piece {
    #[serde(rename = "seg")]
    Segment(Segment2),
    #[serde(rename = "parabola")]
    Arc(ParabolicArc),
}

impl Piece {
    pub fn start(&self) -> Vec2 {
        match self {
            Piece::Segment(s) => s.a,
            Piece::Arc(a) => a.start(),
        }
    }

    pub fn end(&self) -> Vec2 {
        match self {
            Piece::Segment(s) => s.b,
            Piece::Arc(a) => a.end(),
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Piece::Segment(s) => s.length(),
            Piece::Arc(a) => a.length(),
        }
    }

    pub fn midpoint(&self) -> Vec2 {
        match self {
            Piece::Segment(s) => s.at(0.5),
            Piece::Arc(a) => a.at(0.5 * (a.t0 + a.t1)),
        }
    }

    /// Unit direction of travel at the start.
    pub fn start_tangent(&self) -> Vec2 {
        match self {
            Piece::Segment(s) => (s.b - s.a).normalize(),
            Piece::Arc(a) => (a.derivative(a.t0) * (a.t1 - a.t0).signum()).normalize(),
        }
    }

    /// Unit direction of travel at the end.
    pub fn end_tangent(&self) -> Vec2 {
        match self {
            Piece::Segment(s) => (s.b - s.a).normalize(),
            Piece::Arc(a) => (a.derivative(a.t1) * (a.t1 - a.t0).signum()).normalize(),
        }
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, Piece::Arc(_))
    }

    pub fn reversed(&self) -> Piece {
        match self {
            Piece::Segment(s) => Piece::Segment(Segment2::new(s.b, s.a)),
            Piece::Arc(a) => Piece::Arc(a.reversed()),
        }
    }

    pub fn transformed(&self, m: &PlanarMotion) -> Piece {
        match self {
            Piece::Segment(s) => Piece::Segment(Segment2::new(m.apply(s.a), m.apply(s.b))),
            Piece::Arc(a) => Piece::Arc(a.transformed(m)),
        }
    }

    /// Splits at the point of the piece nearest `p`.
    pub fn split_at(&self, p: Vec2) -> (Piece, Piece) {
        match self {
            Piece::Segment(s) => {
                let d = s.b - s.a;
                let t = ((p - s.a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
                let m = s.at(t);
                (Piece::Segment(Segment2::new(s.a, m)), Piece::Segment(Segment2::new(m, s.b)))
            }
            Piece::Arc(a) => {
                let (lo, hi) = if a.t0 <= a.t1 { (a.t0, a.t1) } else { (a.t1, a.t0) };
                let t = a.param_of(p).clamp(lo, hi);
                (Piece::Arc(a.with_interval(a.t0, t)), Piece::Arc(a.with_interval(t, a.t1)))
            }
        }
    }

    pub fn polyline(&self, max_sagitta: f64) -> Vec<Vec2> {
        match self {
            Piece::Segment(s) => vec![s.a, s.b],
            Piece::Arc(a) => a.polyline(max_sagitta),
        }
    }

    /// Contribution `1/2 ∮ (x dy - y dx)` of this piece to a signed area.
    pub fn area_term(&self) -> f64 {
        match self {
            Piece::Segment(s) => 0.5 * cross(s.a, s.b),
            Piece::Arc(a) => {
                // integrand is a cubic in t: two point Gauss-Legendre is exact
                let (t0, t1) = (a.t0, a.t1);
                let half = 0.5 * (t1 - t0);
                let mid = 0.5 * (t1 + t0);
                let g = 1.0 / 3f64.sqrt();
                let f = |t: f64| cross(a.at(t), a.derivative(t));
                0.5 * half * (f(mid - half * g) + f(mid + half * g))
            }
        }
    }

    /// Nearest distance from `p` to this piece (arcs via dense sampling + refinement).
    pub fn distance_to(&self, p: Vec2) -> f64 {
        match self {
            Piece::Segment(s) => s.distance_to(p),
            Piece::Arc(a) => {
                let n = 64;
                let mut best = (f64::INFINITY, a.t0);
                for i in 0..=n {
                    let t = a.t0 + (a.t1 - a.t0) * i as f64 / n as f64;
                    let d = (a.at(t) - p).norm();
                    if d < best.0 {
                        best = (d, t);
                    }
                }
                let step = (a.t1 - a.t0).abs() / n as f64;
                let (mut lo, mut hi) = (best.1 - step, best.1 + step);
                let (tmin, tmax) = (a.t0.min(a.t1), a.t0.max(a.t1));
                lo = lo.max(tmin);
                hi = hi.min(tmax);
                for _ in 0..80 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if (a.at(m1) - p).norm() < (a.at(m2) - p).norm() {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                best.0.min((a.at(0.5 * (lo + hi)) - p).norm())
            }
        }
    }
}

fn segment_segment(a: &Segment2, b: &Segment2, tol: &Tolerance) -> Vec<Vec2> {
    let r = a.b - a.a;
    let s = b.b - b.a;
    let denom = cross(r, s);
    let qp = b.a - a.a;
    let eps = tol.eps_len;
    if denom.abs() <= 1e-15 * r.norm() * s.norm() {
        // parallel: collinear overlap endpoints
        if cross(qp, r).abs() > eps * r.norm().max(1e-300) {
            return Vec::new();
        }
        let rr = r.norm_squared();
        let t0 = qp.dot(&r) / rr;
        let t1 = (b.b - a.a).dot(&r) / rr;
        let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(1.0));
        let slack = eps / r.norm();
        if lo > hi + slack {
            return Vec::new();
        }
        if (hi - lo).abs() <= slack {
            return vec![a.at(lo.clamp(0.0, 1.0))];
        }
        return vec![a.at(lo), a.at(hi)];
    }
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    let st = eps / r.norm();
    let su = eps / s.norm();
    if t >= -st && t <= 1.0 + st && u >= -su && u <= 1.0 + su {
        vec![a.at(t.clamp(0.0, 1.0))]
    } else {
        Vec::new()
    }
}

fn segment_arc(seg: &Segment2, arc: &ParabolicArc, tol: &Tolerance) -> Vec<Vec2> {
    // substitute p(t) into the implicit line equation n·(x - a) = 0
    let d = seg.b - seg.a;
    let len = d.norm();
    if len == 0.0 {
        return Vec::new();
    }
    let nrm = perp(d / len);
    let hs = arc.directrix.signed_distance(arc.focus);
    let h = hs.abs();
    let nn = perp(arc.directrix.dir) * hs.signum();
    let o = arc.focus - nn * h;
    let u = arc.directrix.dir;
    // n·(o - a) + t n·u + (t^2 + h^2)/(2h) n·nn = 0
    let c0 = nrm.dot(&(o - seg.a));
    let cu = nrm.dot(&u);
    let cn = nrm.dot(&nn);
    let qa = cn / (2.0 * h);
    let qb = cu;
    let qc = c0 + cn * h / 2.0;
    let roots = solve_quadratic(qa, qb, qc);
    let (tmin, tmax) = (arc.t0.min(arc.t1), arc.t0.max(arc.t1));
    let mut out = Vec::new();
    for t in roots {
        let p = arc.at(t);
        let speed = arc.derivative(t).norm();
        let slack = tol.eps_len / speed.max(1e-300);
        if t < tmin - slack || t > tmax + slack {
            continue;
        }
        let s = (p - seg.a).dot(&d) / (len * len);
        let ss = tol.eps_len / len;
        if s >= -ss && s <= 1.0 + ss && !out.iter().any(|q: &Vec2| (q - p).norm() <= tol.eps_len) {
            out.push(p);
        }
    }
    out
}

/// Real roots of `a t^2 + b t + c`, a tangency counted once.
pub fn solve_quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        if b.abs() <= 1e-300 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < -1e-14 * b * b.max(1e-300) {
        if disc < 0.0 && disc > -1e-12 * scale * scale {
            return vec![-b / (2.0 * a)];
        }
        return Vec::new();
    }
    let sq = disc.max(0.0).sqrt();
    if sq == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * sq);
    let mut r = vec![q / a, c / q];
    r.sort_by(|x, y| x.partial_cmp(y).unwrap());
    r
}

/// Intersection points of two pieces. Tangency is reported once; arc/arc
/// intersections are located on polyline approximations and refined.
pub fn intersect(a: &Piece, b: &Piece, tol: &Tolerance) -> Vec<Vec2> {
    match (a, b) {
        (Piece::Segment(s), Piece::Segment(t)) => segment_segment(s, t, tol),
        (Piece::Segment(s), Piece::Arc(c)) | (Piece::Arc(c), Piece::Segment(s)) => segment_arc(s, c, tol),
        (Piece::Arc(c1), Piece::Arc(c2)) => {
            let sag = 1e-3 * (c1.length().min(c2.length())).max(tol.eps_len);
            let p1 = c1.polyline(sag);
            let p2 = c2.polyline(sag);
            let mut out: Vec<Vec2> = Vec::new();
            for w1 in p1.windows(2) {
                for w2 in p2.windows(2) {
                    for p in segment_segment(&Segment2::new(w1[0], w1[1]), &Segment2::new(w2[0], w2[1]), tol) {
                        let q = refine_arc_arc(c1, c2, p);
                        if !out.iter().any(|o| (o - q).norm() <= 10.0 * sag) {
                            out.push(q);
                        }
                    }
                }
            }
            out
        }
    }
}

fn refine_arc_arc(c1: &ParabolicArc, c2: &ParabolicArc, p: Vec2) -> Vec2 {
    let mut t1 = c1.param_of(p);
    let mut t2 = c2.param_of(p);
    for _ in 0..30 {
        let f = c1.at(t1) - c2.at(t2);
        let j1 = c1.derivative(t1);
        let j2 = -c2.derivative(t2);
        let det = cross(j1, j2);
        if det.abs() < 1e-14 {
            break;
        }
        let d1 = cross(f, j2) / det;
        let d2 = cross(j1, f) / det;
        t1 -= d1;
        t2 -= d2;
        if d1.abs() + d2.abs() < 1e-15 {
            break;
        }
    }
    c1.at(t1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn fixed_point_of_half_turn_is_origin() {
        let m = PlanarMotion::new(PI, Vec2::zeros());
        let c = fixed_point(&m, &tol()).unwrap();
        assert!(c.norm() < 1e-12);
    }

    #[test]
    fn identity_and_translation_have_no_fixed_point() {
        assert!(fixed_point(&PlanarMotion::identity(), &tol()).is_none());
        assert!(fixed_point(&PlanarMotion::new(0.0, Vec2::new(1.0, 2.0)), &tol()).is_none());
    }

    #[test]
    fn constructed_fixed_point() {
        // rotate by pi/2 about (1,0): p -> R(p - c) + c
        let c = Vec2::new(1.0, 0.0);
        let m = PlanarMotion::new(FRAC_PI_2, c - rotate(c, FRAC_PI_2));
        let f = fixed_point(&m, &tol()).unwrap();
        assert!((f - c).norm() < 1e-12);
        assert!((m.apply(f) - f).norm() < 1e-12);
    }

    #[test]
    fn parabola_standard_form() {
        let arc = point_line_bisector(Vec2::new(0.0, 1.0), Line2::new(Vec2::new(0.0, -1.0), Vec2::new(1.0, 0.0)), &tol())
            .unwrap()
            .with_interval(-3.0, 3.0);
        assert!(arc.vertex().norm() < 1e-12);
        for i in 0..=16 {
            let t = -3.0 + 6.0 * i as f64 / 16.0;
            let p = arc.at(t);
            assert!((p.y - p.x * p.x / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parabola_vertex_is_midpoint_for_any_height() {
        for h in [0.1, 1.0, 7.5] {
            let arc = point_line_bisector(Vec2::new(0.0, h), Line2::new(Vec2::new(3.0, -h), Vec2::new(-1.0, 0.0)), &tol())
                .unwrap();
            assert!(arc.vertex().norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_bisector_is_rejected() {
        let r = point_line_bisector(Vec2::new(1.0, 0.0), Line2::new(Vec2::zeros(), Vec2::new(1.0, 0.0)), &tol());
        assert!(matches!(r, Err(GeomError::DegenerateBisector(_))));
    }

    #[test]
    fn crossing_segments() {
        let a = Piece::Segment(Segment2::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)));
        let b = Piece::Segment(Segment2::new(Vec2::new(1.0, -1.0), Vec2::new(1.0, 1.0)));
        let p = intersect(&a, &b, &tol());
        assert_eq!(p.len(), 1);
        assert!((p[0] - Vec2::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn parallel_disjoint_segments() {
        let a = Piece::Segment(Segment2::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)));
        let b = Piece::Segment(Segment2::new(Vec2::new(0.0, 1.0), Vec2::new(2.0, 1.0)));
        assert!(intersect(&a, &b, &tol()).is_empty());
    }

    #[test]
    fn parabola_meets_horizontal_line_twice() {
        let arc = Piece::Arc(
            point_line_bisector(Vec2::new(0.0, 1.0), Line2::new(Vec2::new(0.0, -1.0), Vec2::new(1.0, 0.0)), &tol())
                .unwrap()
                .with_interval(-5.0, 5.0),
        );
        let line = Piece::Segment(Segment2::new(Vec2::new(-10.0, 1.0), Vec2::new(10.0, 1.0)));
        let mut p = intersect(&arc, &line, &tol());
        p.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        assert_eq!(p.len(), 2);
        assert!((p[0] - Vec2::new(-2.0, 1.0)).norm() < 1e-12);
        assert!((p[1] - Vec2::new(2.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn arc_area_term_matches_polyline() {
        let arc = ParabolicArc::new(Vec2::new(0.3, 1.2), Line2::new(Vec2::new(0.0, -0.4), Vec2::new(0.8, 0.6)), -1.0, 2.0);
        let exact = Piece::Arc(arc).area_term();
        let poly = arc.polyline(1e-9);
        let approx: f64 = poly.windows(2).map(|w| 0.5 * cross(w[0], w[1])).sum();
        assert!((exact - approx).abs() < 1e-7);
    }

    #[test]
    fn arc_length_matches_polyline() {
        let arc = ParabolicArc::new(Vec2::new(0.0, 0.5), Line2::new(Vec2::new(0.0, -0.5), Vec2::new(1.0, 0.0)), -2.0, 1.0);
        let poly = arc.polyline(1e-10);
        let l: f64 = poly.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        assert!((arc.length() - l).abs() < 1e-6);
    }

    #[test]
    fn split_keeps_both_halves() {
        let arc = ParabolicArc::new(Vec2::new(0.0, 1.0), Line2::new(Vec2::new(0.0, -1.0), Vec2::new(1.0, 0.0)), -2.0, 2.0);
        for piece in [Piece::Arc(arc), Piece::Segment(Segment2::new(Vec2::new(0.0, 0.0), Vec2::new(2.0, 2.0)))] {
            let (a, b) = piece.split_at(piece.midpoint());
            assert!((a.length() + b.length() - piece.length()).abs() < 1e-12);
            assert!((a.end() - b.start()).norm() < 1e-12 && (a.start() - piece.start()).norm() < 1e-12);
        }
    }

    #[test]
    fn piece_json_is_tagged() {
        let s = Piece::Segment(Segment2::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)));
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.contains("\"type\":\"seg\""));
        let back: Piece = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn reversed_arc_swaps_ends() {
        let arc = ParabolicArc::new(Vec2::new(0.3, 1.2), Line2::new(Vec2::new(0.0, -0.4), Vec2::new(0.8, 0.6)), -1.0, 2.0);
        let r = arc.reversed();
        assert!((arc.start() - r.end()).norm() < 1e-12);
        assert!((arc.end() - r.start()).norm() < 1e-12);
        assert!((arc.length() - r.length()).abs() < 1e-12);
        assert!((arc.at(0.5) - r.at(-0.5)).norm() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn motion() -> impl Strategy<Value = PlanarMotion> {
            (-PI..PI, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(r, x, y)| PlanarMotion::new(r, Vec2::new(x, y)))
        }

        proptest! {
            #[test]
            fn motions_are_isometries(m in motion(), px in -5.0..5.0f64, py in -5.0..5.0f64, qx in -5.0..5.0f64, qy in -5.0..5.0f64) {
                let p = Vec2::new(px, py);
                let q = Vec2::new(qx, qy);
                prop_assert!(((m.apply(p) - m.apply(q)).norm() - (p - q).norm()).abs() < 1e-9);
            }

            #[test]
            fn composition_is_associative(a in motion(), b in motion(), c in motion(), px in -5.0..5.0f64, py in -5.0..5.0f64) {
                let p = Vec2::new(px, py);
                let l = a.compose(&b).compose(&c).apply(p);
                let r = a.compose(&b.compose(&c)).apply(p);
                prop_assert!((l - r).norm() < 1e-9);
                let back = a.inverse().apply(a.apply(p));
                prop_assert!((back - p).norm() < 1e-9);
            }

            #[test]
            fn fixed_point_is_fixed(m in motion()) {
                if let Some(c) = fixed_point(&m, &Tolerance::default()) {
                    prop_assert!((m.apply(c) - c).norm() < 1e-6 * (1.0 + c.norm()));
                }
            }

            #[test]
            fn bisector_points_are_equidistant(fx in -3.0..3.0f64, fy in 0.05..3.0f64, ang in -PI..PI) {
                let dir = Vec2::new(ang.cos(), ang.sin());
                let line = Line2::new(Vec2::new(0.2, -0.1), dir);
                let focus = line.point + perp(dir) * fy + dir * fx;
                let arc = point_line_bisector(focus, line, &Tolerance::default()).unwrap().with_interval(-4.0, 4.0);
                for i in 0..16 {
                    let p = arc.at(-4.0 + 8.0 * i as f64 / 15.0);
                    let df = (p - focus).norm();
                    let dl = line.signed_distance(p).abs();
                    prop_assert!((df - dl).abs() < 1e-9 * (1.0 + df));
                }
            }
        }
    }
}
