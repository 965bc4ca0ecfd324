use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use curve_unfold::cone::{check_cylinder_generators, check_generator_condition, closest_point, fit_cone, ConeKind};
use curve_unfold::curve::{classify, generate_face_curve, generate_truncation_curve, ClosedCurve, CurveError};
use curve_unfold::cutlocus::{cut_locus, propagate, CutLocusError};
use curve_unfold::geom::Vec2;
use curve_unfold::io::{self, IoError};
use curve_unfold::surface::{ConvexPolyhedron, Side};
use curve_unfold::svg::{emit_svg, SvgConfig};
use curve_unfold::unfold::{unfold_full, unfold_side, PlanarLayout, UnfoldError};
use curve_unfold::verify::{check_comparison, check_layout, check_nesting, oracle_agreement, LayoutReport};

#[derive(Parser)]
#[command(name = "curve-unfold", version, about = "Source unfoldings of convex polyhedra with respect to a closed curve")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Full,
}

impl SideArg {
    fn side(self) -> Option<Side> {
        match self {
            SideArg::One => Some(Side::Left),
            SideArg::Two => Some(Side::Right),
            SideArg::Full => None,
        }
    }
}

#[derive(clap::Args)]
struct Input {
    /// Mesh file, OFF or JSON.
    #[arg(long)]
    mesh: PathBuf,
    /// Curve file (JSON).
    #[arg(long)]
    curve: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a mesh is a closed convex polyhedron.
    Validate {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Convexity, quasigeodesic and geodesic status of a curve.
    Classify {
        #[command(flatten)]
        input: Input,
    },
    /// Cone fitted to one half, with its generator check.
    Cone {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "1")]
        side: SideArg,
    },
    /// Cut locus of one half.
    Cutlocus {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "1")]
        side: SideArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lay out one half or the whole surface.
    Unfold {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "full")]
        side: SideArg,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        render_tol: f64,
    },
    /// Independent checks of a layout and of the distance field.
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "full")]
        side: SideArg,
        /// Re-check a stored layout instead of computing one.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Steiner points per edge for the distance oracle.
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a curve around a vertex or inside a face.
    GenCurve {
        #[arg(long)]
        mesh: PathBuf,
        /// Cut off this vertex.
        #[arg(long, conflicts_with = "face")]
        vertex: Option<usize>,
        /// Edge fractions from the vertex, in counterclockwise neighbor order.
        #[arg(long, value_delimiter = ',')]
        offsets: Vec<f64>,
        /// Regular polygon around the centroid of this face.
        #[arg(long)]
        face: Option<usize>,
        /// Circumradius of the face polygon.
        #[arg(long, default_value_t = 0.1)]
        size: f64,
        #[arg(long, default_value_t = 4)]
        sides: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    kind: &'static str,
    stage: Option<String>,
    message: String,
}

impl Failure {
    fn rejected(stage: &str, message: impl ToString) -> Self {
        Failure { code: 1, kind: "not_eligible", stage: Some(stage.into()), message: message.to_string() }
    }

    fn internal(message: impl ToString) -> Self {
        Failure { code: 2, kind: "internal", stage: None, message: message.to_string() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let kind = match e {
            IoError::Io { .. } => "io",
            _ => "format",
        };
        Failure { code: 2, kind, stage: None, message: e.to_string() }
    }
}

impl From<CurveError> for Failure {
    fn from(e: CurveError) -> Self {
        Failure::rejected("curve", e)
    }
}

impl From<CutLocusError> for Failure {
    fn from(e: CutLocusError) -> Self {
        Failure::internal(e)
    }
}

impl From<UnfoldError> for Failure {
    fn from(e: UnfoldError) -> Self {
        match e {
            UnfoldError::NotEligible { stage, reason } => Failure::rejected(&stage, reason),
            UnfoldError::Curve(e) => e.into(),
            e => Failure::internal(e),
        }
    }
}

type Res<T> = Result<T, Failure>;

fn load_mesh(path: &Path) -> Res<ConvexPolyhedron> {
    let poly = io::read_mesh(path)?;
    let report = poly.validate();
    if !report.is_valid() {
        return Err(Failure::rejected("validation", format!("{:?}", report.violations)));
    }
    Ok(poly)
}

fn load(input: &Input) -> Res<(ConvexPolyhedron, ClosedCurve)> {
    let poly = load_mesh(&input.mesh)?;
    let curve = ClosedCurve::new(&poly, io::read_curve(&input.curve)?)?;
    Ok((poly, curve))
}

fn emit(value: &Value, out: Option<&Path>) -> Res<()> {
    let text = serde_json::to_string_pretty(value).map_err(IoError::from)? + "\n";
    match out {
        Some(path) => io::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn seed() -> u64 {
    std::env::var("UNFOLD_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

fn layout_for(poly: &ConvexPolyhedron, curve: &ClosedCurve, side: SideArg) -> Res<(PlanarLayout, f64)> {
    Ok(match side.side() {
        Some(s) => (unfold_side(poly, curve, s)?, curve.split.half(s).area()),
        None => (unfold_full(poly, curve)?, poly.area()),
    })
}

fn report_passed(r: &LayoutReport, poly: &ConvexPolyhedron) -> bool {
    r.passed(1e-9 * poly.area().max(1.0), 1e-6 * poly.diameter(), 1e-8)
}

fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Validate { mesh } => {
            let poly = io::read_mesh(&mesh)?;
            let report = poly.validate();
            emit(&json!({ "valid": report.is_valid(), "report": report }), None)?;
            if !report.is_valid() {
                return Err(Failure::rejected("validation", format!("{} violation(s)", report.violations.len())));
            }
        }
        Command::Classify { input } => {
            let (poly, curve) = load(&input)?;
            let c = classify(&poly, &curve);
            emit(
                &json!({
                    "quasigeodesic": c.is_quasigeodesic,
                    "geodesic": c.is_geodesic,
                    "convex_side_1": c.convex_left,
                    "convex_side_2": c.convex_right,
                    "vertex_rule_ok": c.vertex_rule_ok(),
                    "classification": c,
                }),
                None,
            )?;
        }
        Command::Cone { input, side } => {
            let (poly, curve) = load(&input)?;
            let half = curve.split.half(side.side().unwrap_or(Side::Left));
            let cone = fit_cone(half).map_err(|e| Failure::rejected("cone", e))?;
            let generators = match cone.kind {
                ConeKind::Apex => Some(check_generator_condition(&cone)),
                ConeKind::Cylinder => Some(check_cylinder_generators(&cone)),
                ConeKind::Planar => None,
            }
            .map(|r| r.map(|c| to_value(&c)).unwrap_or_else(|e| json!({ "error": e.to_string() })));
            let closest = closest_point(&cone, &poly.tolerance()).ok();
            emit(&json!({ "cone": cone, "generator_condition": generators, "closest_point": closest }), None)?;
        }
        Command::Cutlocus { input, side, out } => {
            let (poly, curve) = load(&input)?;
            let half = curve.split.half(side.side().unwrap_or(Side::Left));
            let tree = cut_locus(half, &poly.tolerance())?;
            emit(&to_value(&io::cut_locus_summary(half, &tree)), out.as_deref())?;
        }
        Command::Unfold { input, side, svg, json, render_tol } => {
            if !(render_tol > 0.0) {
                return Err(Failure { code: 2, kind: "format", stage: None, message: "render tolerance must be positive".into() });
            }
            let (poly, curve) = load(&input)?;
            let (layout, area) = layout_for(&poly, &curve, side)?;
            let report = check_layout(&layout, area, &poly.tolerance());
            if let Some(path) = &json {
                io::write_atomic(path, io::layout_json(&layout, Some(report.clone())).as_bytes())?;
            }
            if let Some(path) = &svg {
                let config = SvgConfig { render_tol, ..SvgConfig::default() };
                io::write_atomic(path, emit_svg(&layout, &config).as_bytes())?;
            }
            emit(&json!({ "pieces": layout.pieces.len(), "passed": report_passed(&report, &poly), "report": report }), None)?;
        }
        Command::Verify { input, side, layout, k, samples, out } => {
            let (poly, curve) = load(&input)?;
            let tol = poly.tolerance();
            let (layout, area) = match &layout {
                Some(path) => {
                    let file = io::read_layout(path)?;
                    let area = side.side().map_or(poly.area(), |s| curve.split.half(s).area());
                    (file.layout(), area)
                }
                None => layout_for(&poly, &curve, side)?,
            };
            let report = check_layout(&layout, area, &tol);
            let mut passed = report_passed(&report, &poly);
            let mut halves = Vec::new();
            for s in [Side::Left, Side::Right] {
                let half = curve.split.half(s);
                let field = propagate(half, &tol)?;
                let oracle = oracle_agreement(half, &field, k as usize, samples, seed());
                let nesting = match (fit_cone(half), cut_locus(half, &tol)) {
                    (Ok(cone), Ok(tree)) => Some(check_nesting(half, &tree, &cone)),
                    _ => None,
                };
                passed &= oracle.max_rel <= 0.02 && nesting.as_ref().map_or(true, |n| n.nested);
                halves.push(json!({ "side": s, "oracle": oracle, "nesting": nesting }));
            }
            let comparison = check_comparison(&poly, samples, seed(), k as usize);
            passed &= comparison.passed();
            emit(&json!({ "passed": passed, "layout": report, "halves": halves, "comparison": comparison }), out.as_deref())?;
            if !passed {
                return Err(Failure::rejected("verification", "one or more checks failed"));
            }
        }
        Command::GenCurve { mesh, vertex, offsets, face, size, sides, out } => {
            let poly = load_mesh(&mesh)?;
            let out_of_range = |what: &str, i: usize| Failure { code: 2, kind: "format", stage: None, message: format!("{what} {i} out of range") };
            match (vertex, face) {
                (Some(v), _) if v >= poly.vertices.len() => return Err(out_of_range("vertex", v)),
                (None, Some(f)) if f >= poly.faces.len() => return Err(out_of_range("face", f)),
                _ => {}
            }
            let curve = match (vertex, face) {
                (Some(v), _) => {
                    let degree = poly.vertex_neighbors(v).len();
                    let offsets = if offsets.is_empty() { vec![0.5; degree] } else { offsets };
                    generate_truncation_curve(&poly, v, &offsets)?
                }
                (None, Some(f)) => {
                    let corners: Vec<Vec2> = poly.faces[f].iter().map(|&i| poly.to_face_coords(f, poly.vertex(i))).collect();
                    let c = corners.iter().sum::<Vec2>() / corners.len() as f64;
                    let n = sides.max(3);
                    let polygon: Vec<Vec2> = (0..n)
                        .map(|i| {
                            let a = std::f64::consts::TAU * i as f64 / n as f64;
                            c + Vec2::new(a.cos(), a.sin()) * size
                        })
                        .collect();
                    generate_face_curve(&poly, f, &polygon)?
                }
                (None, None) => return Err(Failure { code: 2, kind: "format", stage: None, message: "give --vertex or --face".into() }),
            };
            let text = io::curve_json(&curve.points) + "\n";
            match out {
                Some(path) => io::write_atomic(&path, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "stage": f.stage, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}
