//! End-to-end acceptance checks A1-A8. Each prints one PASS/FAIL line with the
//! measured quantities; the test fails if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curve_unfold::cone::{check_generator_condition, fit_cone, fit_cone_seamed, ConeDescriptor, ConeKind};
use curve_unfold::curve::{canonicalize, classify, generate_face_curve, generate_truncation_curve, ClosedCurve};
use curve_unfold::cutlocus::trace::{Provenance, RayKind};
use curve_unfold::cutlocus::{cut_locus, propagate, CutLocusTree};
use curve_unfold::fixtures;
use curve_unfold::geom::{cross, Piece, Vec2, Vec3};
use curve_unfold::surface::{ConvexPolyhedron, HalfSurface, Side};
use curve_unfold::unfold::{unfold_full, unfold_side, PlanarLayout};
use curve_unfold::verify::{check_comparison, check_layout, check_nesting, merged_boundary, random_point, SteinerGraph};

// pinned tolerances
const A1_AREA_REL: f64 = 1e-6;
const A1_RUNTIME_S: f64 = 1.0;
const A2_NODE: f64 = 1e-6;
const A3_ANGLE: f64 = 1e-9;
const A5_CONE: f64 = 1e-8;
const A5_CURVES: usize = 50;
const A6_K: usize = 16;
const A6_REL: f64 = 0.02;
const A6_POINTS: usize = 100;
const A7_PAIR_REL: f64 = 1e-6;
const A7_GAP: f64 = 1e-8;
const A7_HINGES: usize = 100;
const A8_SIDES: [f64; 3] = [0.2, 0.1, 0.05];

type Check = (bool, String);

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

fn fixtures_all() -> Vec<(&'static str, ConvexPolyhedron, ClosedCurve)> {
    let (a, b) = tetra();
    let (c, d) = truncated();
    let (e, f) = pyramid();
    vec![("tetra", a, b), ("tcube", c, d), ("pyramid", e, f)]
}

/// Leaf labels: the polyhedron vertex or the curve point a leaf sits on.
fn leaf_labels(half: &HalfSurface, tree: &CutLocusTree) -> Vec<String> {
    let mut out: Vec<String> = tree
        .leaves()
        .into_iter()
        .map(|n| match (tree.nodes[n].vertex, tree.nodes[n].boundary) {
            (Some(v), _) => format!("v{}", half.source_vertex[v].unwrap()),
            (_, Some(b)) => format!("q{}", half.boundary_curve_index[b]),
            _ => "interior".into(),
        })
        .collect();
    out.sort();
    out
}

fn a1() -> Check {
    let (p, c) = tetra();
    let start = Instant::now();
    let layout = unfold_full(&p, &c).unwrap();
    let report = check_layout(&layout, p.area(), &p.tolerance());
    let elapsed = start.elapsed().as_secs_f64();
    let loops = merged_boundary(&layout, &p.tolerance());
    let sides = loops.first().map_or(0, |l| l.len());
    let parallel = if loops.len() == 1 && sides == 4 {
        let s = &loops[0];
        let dir = |i: usize| (s[i].end() - s[i].start()).normalize();
        [(0, 2), (1, 3)].iter().filter(|&&(i, j)| cross(dir(i), dir(j)).abs() < 1e-9).count()
    } else {
        0
    };
    let area_rel = report.area_residual.abs() / p.area();
    let ok = report.simple && loops.len() == 1 && sides == 4 && parallel == 1 && area_rel <= A1_AREA_REL && elapsed < A1_RUNTIME_S;
    (ok, format!("simple={} loops={} sides={sides} parallel_pairs={parallel} area_rel={area_rel:.2e} runtime={elapsed:.3}s", report.simple, loops.len()))
}

fn a2() -> Check {
    let (p, c) = tetra();
    let tol = p.tolerance();
    let base = c.split.half(Side::Right);
    let t2 = cut_locus(base, &tol).unwrap();
    let centroid = Vec3::new(0.5, 3f64.sqrt() / 6.0, 0.0);
    let hub = (0..t2.nodes.len()).min_by(|&a, &b| (t2.nodes[a].position - centroid).norm().total_cmp(&(t2.nodes[b].position - centroid).norm())).unwrap();
    let hub_err = (t2.nodes[hub].position - centroid).norm();
    let straight = t2.edges.iter().all(|e| !e.parabolic);
    let mut spokes: Vec<String> = t2.incident(hub).into_iter().map(|e| t2.edges[e].other(hub)).map(|n| t2.nodes[n].vertex.map_or("?".into(), |v| format!("v{}", base.source_vertex[v].unwrap()))).collect();
    spokes.sort();
    let ok2 = t2.edges.len() == 3 && straight && hub_err <= A2_NODE && spokes == ["v1", "v2", "v3"];
    let apex = c.split.half(Side::Left);
    let t1 = cut_locus(apex, &tol).unwrap();
    let leaves = leaf_labels(apex, &t1);
    let ok1 = t1.is_tree() && leaves == ["q0", "q1", "q2", "v0"];
    (ok1 && ok2, format!("P2 edges={} straight={straight} hub_err={hub_err:.1e} spokes={spokes:?}; P1 tree={} leaves={leaves:?}", t2.edges.len(), t1.is_tree()))
}

fn a3() -> Check {
    let (p, c) = truncated();
    let k = classify(&p, &c);
    let pis = |v: &[f64]| v.iter().map(|a| a / PI).collect::<Vec<_>>();
    let close = |got: &[f64], want: [f64; 4]| got.len() == 4 && got.iter().zip(want).all(|(g, w)| (g - w * PI).abs() <= A3_ANGLE);
    let (l, r) = (&c.left_angles, &c.right_angles);
    let (a, b) = ([0.75, 0.5, 0.75, 0.5], [0.75, 1.0, 0.75, 1.0]);
    let angles_ok = (close(l, a) && close(r, b)) || (close(l, b) && close(r, a));
    // the side whose angles are pi at v1 and v10 is the one holding the apex
    let pv = c.polyhedron_vertices(&p);
    let flat_side = if close(l, b) { &k.left_vertices } else { &k.right_vertices };
    let mut listed: Vec<usize> = flat_side.iter().map(|v| pv[v.index]).collect();
    listed.sort();
    let layout = unfold_full(&p, &c).unwrap();
    let report = check_layout(&layout, p.area(), &p.tolerance());
    let (cc, _) = canonicalize(&p, c.clone()).unwrap();
    let h2 = cc.split.half(Side::Right);
    let angles2 = h2.boundary_angles();
    let slack = 1e3 * p.tolerance().eps_len;
    let reflex_cuts = layout
        .elements()
        .filter(|e| matches!(e.provenance, Provenance::Ray { side: Side::Right, ray: RayKind::Reflex, cut, .. } if angles2.get(cut).is_some_and(|&a| a > PI + p.tolerance().eps_ang)))
        .filter(|e| e.piece.length() > slack)
        .count();
    let ok = k.is_quasigeodesic && angles_ok && listed == [0, 7] && report.simple && reflex_cuts == 0;
    (ok, format!("quasigeodesic={} angles1={:.3?} angles2={:.3?} vertices={listed:?} simple={} reflex_cuts={reflex_cuts}", k.is_quasigeodesic, pis(l), pis(r), report.simple))
}

fn a4() -> Check {
    let (p, c) = pyramid();
    let tol = p.tolerance();
    let k = classify(&p, &c);
    let neither = !k.convex_left && !k.convex_right && !k.is_quasigeodesic;
    let (h1, h2) = (c.split.half(Side::Left), c.split.half(Side::Right));
    let gen_ok = [h1, h2].iter().all(|h| fit_cone(h).ok().and_then(|cone| check_generator_condition(&cone).ok()).is_some_and(|g| g.ok));
    let t1 = cut_locus(h1, &tol).unwrap();
    let t2 = cut_locus(h2, &tol).unwrap();
    let arcs = t1.num_parabolic();
    let leaves = leaf_labels(h1, &t1);
    // b' and d' are curve points 0 and 4; the apex is vertex 0
    let leaves_ok = leaves == ["q0", "q4", "v0"];
    let mut corners: Vec<usize> = t2.nodes.iter().filter_map(|n| n.vertex).map(|v| h2.source_vertex[v].unwrap()).collect();
    corners.sort();
    let x = t2.nodes.iter().enumerate().any(|(i, n)| (n.position - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-9 && t2.degree(i) == 4);
    let simple: Vec<bool> = [Side::Left, Side::Right]
        .iter()
        .map(|&s| {
            let l = unfold_side(&p, &c, s).unwrap();
            check_layout(&l, c.split.half(s).area(), &tol).simple
        })
        .collect();
    let ok = neither && gen_ok && arcs == 4 && leaves_ok && corners == [1, 2, 3, 4] && x && simple.iter().all(|&s| s);
    (ok, format!("neither={neither} generators_ok={gen_ok} arcs={arcs} leaves={leaves:?} P2_vertices={corners:?} x_junction={x} simple={simple:?}"))
}

/// Largest disagreement between a cone and its re-seamed copies.
fn reseam_residual(half: &HalfSurface, base: &ConeDescriptor) -> f64 {
    let n = base.num_segments();
    let mut worst: f64 = 0.0;
    for seam in 1..n {
        let c = fit_cone_seamed(half, seam).unwrap();
        worst = worst.max((c.apex_angle - base.apex_angle).abs());
        match (base.kind, base.apex_point(), c.apex_point()) {
            (ConeKind::Apex, Some(a0), Some(a1)) => {
                for i in 0..n {
                    worst = worst.max(((c.dev(i) - a1).norm() - (base.dev((seam + i) % n) - a0).norm()).abs());
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        let d0 = (base.dev((seam + i) % n) - base.dev((seam + j) % n)).norm();
                        worst = worst.max(((c.dev(i) - c.dev(j)).norm() - d0).abs());
                    }
                }
            }
        }
    }
    worst
}

fn a5() -> Check {
    let seed: u64 = std::env::var("UNFOLD_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(7);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_law, mut worst_seam, mut failures) = (0.0f64, 0.0f64, Vec::new());
    for i in 0..A5_CURVES {
        let poly = fixtures::random_polyhedron(rng.gen(), rng.gen_range(8..20));
        let curve = if i % 2 == 0 {
            let v = poly.faces[rng.gen_range(0..poly.faces.len())][0];
            let offsets: Vec<f64> = poly.vertex_neighbors(v).iter().map(|_| rng.gen_range(0.2..0.8)).collect();
            generate_truncation_curve(&poly, v, &offsets)
        } else {
            let f = rng.gen_range(0..poly.faces.len());
            let corners: Vec<Vec2> = poly.faces[f].iter().map(|&v| poly.to_face_coords(f, poly.vertex(v))).collect();
            let center = corners.iter().sum::<Vec2>() / corners.len() as f64;
            let scale = rng.gen_range(0.3..0.8);
            let polygon: Vec<Vec2> = corners.iter().map(|&q| center + (q - center) * scale).collect();
            generate_face_curve(&poly, f, &polygon)
        };
        let curve = match curve {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("#{i}: {e}"));
                continue;
            }
        };
        let half = curve.split.half(Side::Left);
        match fit_cone(half) {
            Ok(cone) => {
                let turning: f64 = curve.left_angles.iter().map(|a| PI - a).sum();
                worst_law = worst_law.max((cone.apex_angle - turning).abs());
                worst_seam = worst_seam.max(reseam_residual(half, &cone));
            }
            Err(e) => failures.push(format!("#{i}: {e}")),
        }
    }
    let ok = failures.is_empty() && worst_law <= A5_CONE && worst_seam <= A5_CONE;
    (ok, format!("curves={A5_CURVES} seed={seed} fit_failures={failures:?} apex_vs_turning={worst_law:.1e} reseam={worst_seam:.1e}"))
}

fn a6() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, p, c) in fixtures_all() {
        let tol = p.tolerance();
        for side in [Side::Left, Side::Right] {
            let half = c.split.half(side);
            let field = propagate(half, &tol).unwrap();
            let g16 = SteinerGraph::build(half, A6_K);
            let g32 = SteinerGraph::build(half, 2 * A6_K);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let pts: Vec<(usize, Vec2)> = (0..A6_POINTS).map(|_| random_point(&half.mesh, &mut rng)).collect();
            let d: Vec<f64> = pts.iter().map(|&(t, x)| field.distance(t, x)).collect();
            let floor = 0.05 * d.iter().copied().fold(0.0, f64::max);
            let (mut worst, mut monotone) = (0.0f64, true);
            for (i, &(t, x)) in pts.iter().enumerate() {
                let (o16, o32) = (g16.distance(t, x), g32.distance(t, x));
                worst = worst.max((o16 - d[i]).abs() / d[i].max(floor));
                // the finer graph contains the coarser one
                monotone &= o32 <= o16 + 1e-12 && (o32 - d[i]).abs() <= (o16 - d[i]).abs() + 1e-12;
            }
            ok &= worst <= A6_REL && monotone;
            parts.push(format!("{name}/{side:?} rel={worst:.1e} monotone={monotone}"));
        }
    }
    let (p, c) = tetra();
    let half = c.split.half(Side::Right);
    let field = propagate(half, &p.tolerance()).unwrap();
    let (t, x) = half.mesh.locate_3d(Vec3::new(0.5, 3f64.sqrt() / 6.0, 0.0), 1e-9).unwrap();
    let expect = 3f64.sqrt() / 3.0;
    let (d, o) = (field.distance(t, x), SteinerGraph::build(half, A6_K).distance(t, x));
    let centroid_ok = (d - expect).abs() < 1e-9 && (o - expect).abs() / expect <= A6_REL;
    ok &= centroid_ok;
    parts.push(format!("centroid field={d:.9} oracle={o:.9}"));
    (ok, parts.join("; "))
}

fn a7() -> Check {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, p, c) in fixtures_all() {
        let tol = p.tolerance();
        let diam = p.diameter();
        let mut layouts: Vec<(String, PlanarLayout, f64)> = vec![("full".into(), unfold_full(&p, &c).unwrap(), p.area())];
        for s in [Side::Left, Side::Right] {
            if let Ok(l) = unfold_side(&p, &c, s) {
                layouts.push((format!("{s:?}"), l, c.split.half(s).area()));
            }
        }
        let (mut pair, mut gap, mut bad_pairs) = (0.0f64, 0.0f64, 0);
        for (_, l, area) in &layouts {
            let r = check_layout(l, *area, &tol);
            bad_pairs += r.unpaired + r.pairings.iter().filter(|x| x.copies != 2).count();
            pair = pair.max(r.max_pairing_residual);
            gap = gap.max(r.max_gap_residual);
        }
        let nested = [Side::Left, Side::Right].iter().all(|&s| {
            let h = c.split.half(s);
            let tree = cut_locus(h, &tol).unwrap();
            check_nesting(h, &tree, &fit_cone(h).unwrap()).nested
        });
        let cmp = check_comparison(&p, A7_HINGES, 3, A6_K);
        let fixture_ok = bad_pairs == 0 && pair <= A7_PAIR_REL * diam && gap <= A7_GAP && nested && cmp.passed() && cmp.samples == A7_HINGES;
        ok &= fixture_ok;
        parts.push(format!(
            "{name} layouts={} bad_pairs={bad_pairs} pair={pair:.1e} gap={gap:.1e} nested={nested} hinges={} skipped={} failures={}",
            layouts.len(),
            cmp.samples,
            cmp.skipped,
            cmp.failures.len()
        ));
    }
    (ok, parts.join("; "))
}

/// Boundary of a layout as points, with the curve's own square centered at
/// the origin and its first side along the x axis.
fn aligned_boundary(layout: &PlanarLayout, tol: &curve_unfold::geom::Tolerance) -> Vec<Vec2> {
    let inner = layout.pieces.iter().find(|pc| pc.side == Side::Left).expect("apex side piece");
    let corners: Vec<Vec2> = inner.boundary.iter().map(|e| e.piece.start()).collect();
    let center = corners.iter().sum::<Vec2>() / corners.len() as f64;
    let first = inner.boundary.iter().find(|e| matches!(e.provenance, Provenance::Curve { curve_segment: 0, .. })).expect("first side");
    let d = (first.piece.end() - first.piece.start()).normalize();
    let (cs, sn) = (d.x, -d.y);
    let mut pts = Vec::new();
    for lp in merged_boundary(layout, tol) {
        for piece in lp {
            let line = match piece {
                Piece::Segment(_) => {
                    let (a, b) = (piece.start(), piece.end());
                    (0..=50).map(|i| a + (b - a) * (i as f64 / 50.0)).collect()
                }
                _ => piece.polyline(1e-5),
            };
            pts.extend(line.into_iter().map(|q| {
                let v = q - center;
                Vec2::new(cs * v.x - sn * v.y, sn * v.x + cs * v.y)
            }));
        }
    }
    pts
}

fn hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    let one = |x: &[Vec2], y: &[Vec2]| x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

fn a8() -> Check {
    let p = fixtures::truncated_cube();
    let tol = p.tolerance();
    let face = 0;
    let corners: Vec<Vec2> = p.faces[face].iter().map(|&v| p.to_face_coords(face, p.vertex(v))).collect();
    let center = corners.iter().sum::<Vec2>() / corners.len() as f64;
    let mut simple = Vec::new();
    let mut bounds = Vec::new();
    for s in A8_SIDES {
        let h = s / 2.0;
        let square = [Vec2::new(-h, -h), Vec2::new(h, -h), Vec2::new(h, h), Vec2::new(-h, h)].map(|q| center + q);
        let c = generate_face_curve(&p, face, &square).unwrap();
        let layout = unfold_full(&p, &c).unwrap();
        simple.push(check_layout(&layout, p.area(), &tol).simple);
        bounds.push(aligned_boundary(&layout, &tol));
    }
    let reference = bounds.last().unwrap();
    let dists: Vec<f64> = bounds.iter().map(|b| hausdorff(b, reference)).collect();
    let decreasing = dists.windows(2).all(|w| w[0] > w[1]);
    let ok = simple.iter().all(|&x| x) && decreasing;
    (ok, format!("sides={A8_SIDES:?} simple={simple:?} hausdorff_to_smallest={dists:.4?}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 8] = [("A1", a1), ("A2", a2), ("A3", a3), ("A4", a4), ("A5", a5), ("A6", a6), ("A7", a7), ("A8", a8)];
    let mut failed = Vec::new();
    for (id, f) in criteria {
        let (ok, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        println!("{id} {} {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
