//! The cone a half-surface's boundary curve lives on: development of the
//! curve with that side's angles, closure motion, apex, generator visibility
//! and the curve point closest to the apex.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{cross, fixed_point, intersect, perp, rotate, wrap_angle, Piece, PlanarMotion, Segment2, Tolerance, Vec2, Vec3};
use crate::surface::HalfSurface;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("curve does not live on a cone: collar development self-crosses at ({}, {})", .witness[0], .witness[1])]
    NotOnCone { witness: [f64; 2] },
    #[error("closure motion is inconsistent with the total turning {0}")]
    InconsistentClosure(f64),
    #[error("cone has no apex")]
    NoApex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeKind {
    Apex,
    Planar,
    Cylinder,
}

/// Cone fitted to one side. Indices follow the half-surface boundary order,
/// starting at the seam.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeDescriptor {
    pub kind: ConeKind,
    /// Position in the half's boundary list where the development starts.
    pub seam: usize,
    pub apex_angle: f64,
    pub apex: Option<[f64; 2]>,
    /// `n + 1` points: the seam point appears at both ends.
    pub q_development: Vec<[f64; 2]>,
    pub closure_motion: PlanarMotion,
    pub apex_side_bounded: bool,
    /// Signed total turning, positive toward the half.
    pub total_turning: f64,
    /// Turning at each development point `0..n`.
    pub turning: Vec<f64>,
    pub collar_width: f64,
}

fn v2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

impl ConeDescriptor {
    pub fn dev(&self, i: usize) -> Vec2 {
        v2(self.q_development[i])
    }

    pub fn apex_point(&self) -> Option<Vec2> {
        self.apex.map(v2)
    }

    pub fn num_segments(&self) -> usize {
        self.q_development.len() - 1
    }

    /// Boundary position (in the half's list) of development point `i`.
    pub fn boundary_pos(&self, i: usize) -> usize {
        (self.seam + i) % self.num_segments()
    }
}

fn segment_point_distance_3d(a: Vec3, b: Vec3, p: Vec3) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

/// Develops the half's boundary with the half on the left, starting at
/// boundary position `seam`.
pub fn fit_cone_seamed(half: &HalfSurface, seam: usize) -> Result<ConeDescriptor, ConeError> {
    let scale = half.mesh.positions.iter().map(|p| p.norm()).fold(1e-300, f64::max);
    let tol = Tolerance::for_diameter(2.0 * scale);
    let n = half.boundary.len();
    let lengths = half.boundary_lengths();
    let angles = half.boundary_angles();
    let mut dev = vec![Vec2::zeros()];
    let mut heading = 0.0;
    let mut turning = Vec::with_capacity(n);
    for k in 0..n {
        let i = (seam + k) % n;
        if k > 0 {
            heading += PI - angles[i];
        }
        turning.push(PI - angles[i]);
        let last = *dev.last().unwrap();
        dev.push(last + rotate(Vec2::new(lengths[i], 0.0), heading));
    }
    // turning at the seam point closes the loop
    let total: f64 = turning.iter().sum();
    let closure = PlanarMotion::new(total, dev[n]);
    let wrapped = wrap_angle(total);
    let (kind, apex) = if wrapped.abs() <= 1e-9 {
        if closure.translation().norm() <= 1e3 * tol.eps_len {
            if (total.abs() - 2.0 * PI).abs() > 1e-6 {
                return Err(ConeError::InconsistentClosure(total));
            }
            (ConeKind::Planar, None)
        } else if total.abs() <= 1e-6 {
            (ConeKind::Cylinder, None)
        } else {
            return Err(ConeError::InconsistentClosure(total));
        }
    } else {
        (ConeKind::Apex, fixed_point(&closure, &tol))
    };
    let apex_angle = match kind {
        ConeKind::Planar => 2.0 * PI,
        ConeKind::Cylinder => 0.0,
        ConeKind::Apex => total.abs(),
    };
    // collar width: half the distance from the curve to the nearest vertex of this side
    let pos = &half.mesh.positions;
    let mut dmin = f64::INFINITY;
    for &(v, _) in &half.interior_vertices {
        for k in 0..n {
            let a = pos[half.boundary[k]];
            let b = pos[half.boundary[(k + 1) % n]];
            dmin = dmin.min(segment_point_distance_3d(a, b, pos[v]));
        }
    }
    let mut width = 0.5 * dmin;
    // keep mitred offsets of sharp corners shorter than the adjacent segments
    for k in 0..n {
        let i = (seam + k) % n;
        let half_angle = 0.5 * angles[i].min(PI);
        let lmin = lengths[i].min(lengths[(i + n - 1) % n]);
        width = width.min(0.25 * lmin * half_angle.sin());
    }
    let desc = ConeDescriptor {
        kind,
        seam,
        apex_angle,
        apex: apex.map(|a| [a.x, a.y]),
        q_development: dev.iter().map(|p| [p.x, p.y]).collect(),
        closure_motion: closure,
        apex_side_bounded: total > 0.0,
        total_turning: total,
        turning,
        collar_width: width,
    };
    check_collar(&desc, &tol)?;
    Ok(desc)
}

/// Cone on which the half's boundary lives, developed from boundary position 0.
pub fn fit_cone(half: &HalfSurface) -> Result<ConeDescriptor, ConeError> {
    fit_cone_seamed(half, 0)
}

/// Offsets the developed curve by the collar width toward the half and
/// checks that the resulting strip is a simple polygon.
fn check_collar(cone: &ConeDescriptor, tol: &Tolerance) -> Result<(), ConeError> {
    let n = cone.num_segments();
    let w = cone.collar_width;
    let dev: Vec<Vec2> = (0..=n).map(|i| cone.dev(i)).collect();
    let mut dirs: Vec<Vec2> = (0..n).map(|i| (dev[i + 1] - dev[i]).normalize()).collect();
    dirs.push(rotate(dirs[0], cone.total_turning));
    let before_first = rotate(dirs[n - 1], -cone.total_turning);
    let mitre = |p: Vec2, a: Vec2, b: Vec2| {
        let (na, nb) = (perp(a), perp(b));
        let m = (na + nb).normalize();
        p + m * (w / m.dot(&na).max(1e-3))
    };
    let mut inner: Vec<Vec2> = Vec::new();
    inner.push(if cross(before_first, dirs[0]) >= 0.0 { mitre(dev[0], before_first, dirs[0]) } else { dev[0] + perp(dirs[0]) * w });
    for i in 1..n {
        let (a, b) = (dirs[i - 1], dirs[i]);
        if cross(a, b) >= 0.0 {
            inner.push(mitre(dev[i], a, b));
        } else {
            // round the reflex side
            let sweep = crate::geom::signed_angle(a, b);
            let steps = ((sweep.abs() / 0.2).ceil() as usize).max(1);
            for s in 0..=steps {
                inner.push(dev[i] + perp(rotate(a, sweep * s as f64 / steps as f64)) * w);
            }
        }
    }
    inner.push(if cross(dirs[n - 1], dirs[n]) >= 0.0 { mitre(dev[n], dirs[n - 1], dirs[n]) } else { dev[n] + perp(dirs[n - 1]) * w });
    inner.dedup_by(|a, b| (*a - *b).norm() <= tol.eps_len);
    let seam_closed = (inner[0] - inner[inner.len() - 1]).norm() <= tol.eps_len;
    let mut ring: Vec<Vec2> = dev.clone();
    ring.extend(inner.iter().rev());
    let m = ring.len();
    let closed = (dev[n] - dev[0]).norm() <= tol.eps_len;
    let seg = |i: usize| Piece::Segment(Segment2::new(ring[i], ring[(i + 1) % m]));
    for i in 0..m {
        for j in i + 2..m {
            // the two seam cuts are images of each other
            if (i == 0 && j == m - 1) || (i == n && j == m - 1) {
                continue;
            }
            if (ring[(i + 1) % m] - ring[i]).norm() <= tol.eps_len || (ring[(j + 1) % m] - ring[j]).norm() <= tol.eps_len {
                continue;
            }
            for p in intersect(&seg(i), &seg(j), tol) {
                if closed && (p - dev[0]).norm() <= 10.0 * tol.eps_len {
                    continue;
                }
                if seam_closed && (p - inner[0]).norm() <= 10.0 * tol.eps_len {
                    continue;
                }
                return Err(ConeError::NotOnCone { witness: [p.x, p.y] });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCheck {
    pub ok: bool,
    /// First development segment where the angular coordinate stalls or reverses.
    pub witness_segment: Option<usize>,
    pub sweep: f64,
}

/// Every generator ray from the apex meets the curve once: the angular
/// coordinate about the apex is strictly monotone and sweeps the apex angle.
pub fn check_generator_condition(cone: &ConeDescriptor) -> Result<GeneratorCheck, ConeError> {
    let apex = cone.apex_point().ok_or(ConeError::NoApex)?;
    let sign = cone.total_turning.signum();
    let mut sweep = 0.0;
    let mut witness = None;
    for i in 0..cone.num_segments() {
        let a = cone.dev(i) - apex;
        let b = cone.dev(i + 1) - apex;
        let d = crate::geom::signed_angle(a, b);
        if d * sign <= 1e-12 && witness.is_none() {
            witness = Some(i);
        }
        sweep += d;
    }
    let ok = witness.is_none() && (sweep - cone.total_turning).abs() <= 1e-8;
    Ok(GeneratorCheck { ok, witness_segment: if ok { None } else { witness.or(Some(0)) }, sweep })
}

/// Cylinder version: the coordinate along the closure translation is strictly
/// monotone, so every generator line crosses the curve once.
pub fn check_cylinder_generators(cone: &ConeDescriptor) -> Result<GeneratorCheck, ConeError> {
    if cone.kind != ConeKind::Cylinder {
        return Err(ConeError::NoApex);
    }
    let t = cone.closure_motion.translation();
    let axis = t.normalize();
    let mut witness = None;
    for i in 0..cone.num_segments() {
        if (cone.dev(i + 1) - cone.dev(i)).dot(&axis) <= 1e-12 && witness.is_none() {
            witness = Some(i);
        }
    }
    Ok(GeneratorCheck { ok: witness.is_none(), witness_segment: witness, sweep: t.norm() })
}

/// Point of the developed curve closest to the apex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosestPoint {
    /// Development segment index.
    pub segment: usize,
    pub t: f64,
    pub point: [f64; 2],
    pub distance: f64,
}

pub fn closest_point(cone: &ConeDescriptor, tol: &Tolerance) -> Result<ClosestPoint, ConeError> {
    let apex = cone.apex_point().ok_or(ConeError::NoApex)?;
    let mut best: Option<ClosestPoint> = None;
    for i in 0..cone.num_segments() {
        let (a, b) = (cone.dev(i), cone.dev(i + 1));
        let d = b - a;
        let mut t = ((apex - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        if t * d.norm() <= tol.eps_len {
            t = 0.0;
        } else if (1.0 - t) * d.norm() <= tol.eps_len {
            // the end point is the next segment's start
            continue;
        }
        let p = a + d * t;
        let dist = (p - apex).norm();
        if best.map_or(true, |b| dist < b.distance - tol.eps_len) {
            best = Some(ClosestPoint { segment: i, t, point: [p.x, p.y], distance: dist });
        }
    }
    Ok(best.expect("curve has at least one segment"))
}
