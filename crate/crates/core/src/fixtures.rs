//! Named polyhedra and curves used by tests, examples and the CLI.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{cross, Vec2, Vec3};
use crate::surface::{ConvexPolyhedron, SurfacePoint, TriMesh};

/// Unit cube `[0,1]^3`; vertex `i` has coordinates given by its bits (x, y, z)
/// in the order 000, 100, 110, 010, 001, 101, 111, 011.
pub fn cube() -> ConvexPolyhedron {
    let v = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0],
    ];
    ConvexPolyhedron {
        vertices: v.to_vec(),
        faces: vec![
            vec![0, 3, 2, 1],
            vec![4, 5, 6, 7],
            vec![0, 1, 5, 4],
            vec![1, 2, 6, 5],
            vec![2, 3, 7, 6],
            vec![3, 0, 4, 7],
        ],
    }
}

/// Regular tetrahedron with unit edges: apex `a = 0` above the base `b, c, d`.
pub fn regular_tetrahedron() -> ConvexPolyhedron {
    let h = (2.0f64 / 3.0).sqrt();
    let s3 = 3.0f64.sqrt();
    ConvexPolyhedron {
        vertices: vec![[0.5, s3 / 6.0, h], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, s3 / 2.0, 0.0]],
        faces: vec![vec![1, 3, 2], vec![1, 2, 0], vec![2, 3, 0], vec![3, 1, 0]],
    }
}

/// Regular tetrahedron sliced by the plane at two thirds of the way from the
/// apex: `Q = (b', c', d')` with the apex on its left.
pub fn sliced_tetrahedron() -> (ConvexPolyhedron, Vec<SurfacePoint>) {
    let p = regular_tetrahedron();
    let q = (1..4).map(|v| SurfacePoint::Edge { edge: [0, v], t: 2.0 / 3.0 }).collect();
    (p, q)
}

/// Unit cube with corners 100 and 011 cut off at offset 1/4.
///
/// Vertex numbering keeps the four curve corners at indices 0 (110), 1 (000),
/// 7 (101) and 10 (111).
pub fn truncated_cube() -> ConvexPolyhedron {
    let v = [
        [1.0, 1.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [0.75, 0.0, 0.0],
        [1.0, 0.25, 0.0],
        [1.0, 0.0, 0.25],
        [1.0, 0.0, 1.0],
        [0.25, 1.0, 1.0],
        [0.0, 0.75, 1.0],
        [1.0, 1.0, 1.0],
        [0.0, 1.0, 0.75],
    ];
    ConvexPolyhedron {
        vertices: v.to_vec(),
        faces: vec![
            vec![1, 3, 0, 5, 4],
            vec![2, 7, 10, 8, 9],
            vec![1, 4, 6, 7, 2],
            vec![3, 11, 8, 10, 0],
            vec![5, 0, 10, 7, 6],
            vec![1, 2, 9, 11, 3],
            vec![4, 5, 6],
            vec![8, 11, 9],
        ],
    }
}

/// Quasigeodesic `(v0, v1, v7, v10)` on [`truncated_cube`]. The side holding
/// the truncated corner 100 is on the right.
pub fn truncated_cube_curve() -> Vec<SurfacePoint> {
    [0, 1, 7, 10].iter().map(|&v| SurfacePoint::Vertex { vertex: v }).collect()
}

/// Square pyramid, base side 1 and altitude 2. Vertices `a = 0` (apex) and
/// base `b, c, d, e = 1..=4` counterclockwise seen from above.
pub fn pyramid() -> ConvexPolyhedron {
    ConvexPolyhedron {
        vertices: vec![[0.5, 0.5, 2.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
        faces: vec![vec![1, 4, 3, 2], vec![1, 2, 0], vec![2, 3, 0], vec![3, 4, 0], vec![4, 1, 0]],
    }
}

/// Curve on [`pyramid`] with reflex corners on both sides:
/// `b' -> c'1 -> c' -> c'2 -> d' -> e' -> b'`, apex on the left.
///
/// `b'` and `d'` sit a quarter of the lateral edge above `b` and `d`, `e'` a
/// quarter below the apex. `c'1` continues the unfolded direction of `e'b'`
/// reflected across `ab`; `c'` is its foot on `ac` and `c'2` its mirror image
/// across `ac`.
pub fn pyramid_curve() -> Vec<SurfacePoint> {
    let p = pyramid();
    let v = |i: usize| p.vertex(i);
    let (a, b, c, d) = (v(0), v(1), v(2), v(3));
    let e = v(4);
    let lerp = |x: Vec3, y: Vec3, t: f64| x + (y - x) * t;
    let b1 = lerp(b, a, 0.25);
    let e1 = lerp(a, e, 0.25);
    // angle of b'e' against b'a within face aeb
    let to_a = (a - b1).normalize();
    let to_e = e1 - b1;
    let len = to_e.norm();
    let theta = to_a.angle(&to_e);
    // unit vector in face abc perpendicular to ab, toward c
    let w = {
        let x = c - b;
        (x - (a - b).normalize() * x.dot(&(a - b).normalize())).normalize()
    };
    let c1 = b1 + (to_a * theta.cos() + w * theta.sin()) * (0.75 * len);
    let ac = (c - a).normalize();
    let c_foot = a + ac * (c1 - a).dot(&ac);
    let w2 = {
        let x = d - a;
        (x - ac * x.dot(&ac)).normalize()
    };
    let c2 = c_foot + w2 * (c1 - c_foot).norm();
    let t_c = (c_foot - a).norm() / (c - a).norm();
    vec![
        SurfacePoint::Edge { edge: [1, 0], t: 0.25 },
        SurfacePoint::Face { face: 1, coords: face_weights(&p, 1, c1) },
        SurfacePoint::Edge { edge: [0, 2], t: t_c },
        SurfacePoint::Face { face: 2, coords: face_weights(&p, 2, c2) },
        SurfacePoint::Edge { edge: [3, 0], t: 0.25 },
        SurfacePoint::Edge { edge: [0, 4], t: 0.25 },
    ]
}

/// Convex weights over the vertex list of face `f` reproducing the point `x`
/// (which must lie in the face). Non-triangular faces use their fan triangle
/// containing `x`.
pub fn face_weights(p: &ConvexPolyhedron, f: usize, x: Vec3) -> Vec<f64> {
    let fv = &p.faces[f];
    let q = p.to_face_coords(f, x);
    let pts: Vec<Vec2> = fv.iter().map(|&i| p.to_face_coords(f, p.vertex(i))).collect();
    let mut best = (f64::NEG_INFINITY, 1, [0.0; 3]);
    for k in 1..fv.len() - 1 {
        let (a, b, c) = (pts[0], pts[k], pts[k + 1]);
        let area = cross(b - a, c - a);
        let l0 = cross(b - q, c - q) / area;
        let l1 = cross(c - q, a - q) / area;
        let l2 = 1.0 - l0 - l1;
        let worst = l0.min(l1).min(l2);
        if worst > best.0 {
            best = (worst, k, [l0, l1, l2]);
        }
    }
    let mut w = vec![0.0; fv.len()];
    let (_, k, l) = best;
    w[0] = l[0].max(0.0);
    w[k] = l[1].max(0.0);
    w[k + 1] = l[2].max(0.0);
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Triangles of the four faces around the z axis of [`cube`], in strip order.
pub fn cube_band_triangles(cube: &ConvexPolyhedron, mesh: &TriMesh) -> Vec<usize> {
    let lateral: Vec<usize> = (0..cube.faces.len())
        .filter(|&f| cube.face_normal(f).z.abs() < 0.5)
        .collect();
    let on_band = |t: usize| lateral.contains(&mesh.tri_face[t]);
    let start = (0..mesh.num_tris()).find(|&t| on_band(t)).unwrap();
    let mut path = vec![start];
    loop {
        let cur = *path.last().unwrap();
        let next = mesh.adj[cur]
            .iter()
            .flatten()
            .map(|&(s, _)| s)
            .find(|&s| on_band(s) && !path.contains(&s));
        match next {
            Some(s) => path.push(s),
            None => break,
        }
    }
    path
}

/// Random convex polyhedron: hull of `n` points on an ellipsoid.
pub fn random_polyhedron(seed: u64, n: usize) -> ConvexPolyhedron {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axes = Vec3::new(rng.gen_range(0.7..1.3), rng.gen_range(0.7..1.3), rng.gen_range(0.7..1.3));
    loop {
        let pts: Vec<Vec3> = (0..n)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..2.0 * PI);
                let r = (1.0 - z * z).sqrt();
                Vec3::new(r * phi.cos() * axes.x, r * phi.sin() * axes.y, z * axes.z)
            })
            .collect();
        if let Some(h) = ConvexPolyhedron::convex_hull(&pts) {
            if h.validate().is_valid() {
                return h;
            }
        }
    }
}
