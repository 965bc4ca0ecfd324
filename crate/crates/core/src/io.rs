//! File formats: meshes (OFF or JSON), curves and layouts (JSON).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cutlocus::CutLocusTree;
use crate::surface::{ConvexPolyhedron, HalfSurface, SurfacePoint};
use crate::unfold::{PlanarLayout, PlanarPiece, Seam};
use crate::verify::LayoutReport;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("OFF line {line}: {reason}")]
    Off { line: usize, reason: String },
    #[error("curve file: {0}")]
    Curve(String),
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::Io { path: path.display().to_string(), source };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes).map_err(err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        err(e)
    })
}

/// OFF text: header, counts line, vertex lines, then face lines `n i0 .. in-1`.
/// Comments start with `#`.
pub fn parse_off(text: &str) -> Result<ConvexPolyhedron, IoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let bad = |line: usize, reason: &str| IoError::Off { line, reason: reason.into() };
    let (ln, head) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    // the counts may share the header line
    let counts_text = match head.strip_prefix("OFF") {
        Some(rest) if !rest.trim().is_empty() => rest.trim().to_string(),
        Some(_) => lines.next().ok_or_else(|| bad(ln, "missing counts"))?.1.to_string(),
        None => return Err(bad(ln, "missing OFF header")),
    };
    let counts: Vec<usize> = counts_text.split_whitespace().map(|t| t.parse()).collect::<Result<_, _>>().map_err(|_| bad(ln, "bad counts"))?;
    if counts.len() < 2 {
        return Err(bad(ln, "bad counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| bad(ln, "missing vertex"))?;
        let c: Vec<f64> = l.split_whitespace().take(3).map(|t| t.parse()).collect::<Result<_, _>>().map_err(|_| bad(ln, "bad vertex"))?;
        if c.len() != 3 {
            return Err(bad(ln, "vertex needs three coordinates"));
        }
        vertices.push([c[0], c[1], c[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| bad(ln, "missing face"))?;
        let c: Vec<usize> = l.split_whitespace().map(|t| t.parse()).collect::<Result<_, _>>().map_err(|_| bad(ln, "bad face"))?;
        let n = *c.first().ok_or_else(|| bad(ln, "empty face"))?;
        if n < 3 || c.len() < n + 1 || c[1..=n].iter().any(|&i| i >= nv) {
            return Err(bad(ln, "bad face"));
        }
        faces.push(c[1..=n].to_vec());
    }
    Ok(ConvexPolyhedron { vertices, faces })
}

pub fn write_off(poly: &ConvexPolyhedron) -> String {
    let mut s = format!("OFF\n{} {} 0\n", poly.vertices.len(), poly.faces.len());
    for v in &poly.vertices {
        s += &format!("{} {} {}\n", v[0], v[1], v[2]);
    }
    for f in &poly.faces {
        s += &f.len().to_string();
        for i in f {
            s += &format!(" {i}");
        }
        s.push('\n');
    }
    s
}

/// Reads a mesh, OFF when the file starts with the OFF header and JSON otherwise.
pub fn read_mesh(path: &Path) -> Result<ConvexPolyhedron, IoError> {
    let text = read(path)?;
    if text.trim_start().starts_with("OFF") {
        parse_off(&text)
    } else {
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub points: Vec<SurfacePoint>,
    pub closed: bool,
}

pub fn parse_curve(text: &str) -> Result<Vec<SurfacePoint>, IoError> {
    let file: CurveFile = serde_json::from_str(text)?;
    if !file.closed {
        return Err(IoError::Curve("only closed curves are supported".into()));
    }
    if file.points.len() < 3 {
        return Err(IoError::Curve("a closed curve needs at least three points".into()));
    }
    Ok(file.points)
}

pub fn read_curve(path: &Path) -> Result<Vec<SurfacePoint>, IoError> {
    parse_curve(&read(path)?)
}

pub fn curve_json(points: &[SurfacePoint]) -> String {
    let file = CurveFile { points: points.to_vec(), closed: true };
    serde_json::to_string_pretty(&file).expect("curve serializes")
}

/// A layout as stored on disk, with the report it was checked against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutFile {
    pub version: String,
    pub pieces: Vec<PlanarPiece>,
    pub seams: Vec<Seam>,
    pub report: Option<LayoutReport>,
}

impl LayoutFile {
    pub fn new(layout: &PlanarLayout, report: Option<LayoutReport>) -> Self {
        LayoutFile { version: env!("CARGO_PKG_VERSION").into(), pieces: layout.pieces.clone(), seams: layout.seams.clone(), report }
    }

    pub fn layout(&self) -> PlanarLayout {
        PlanarLayout { pieces: self.pieces.clone(), seams: self.seams.clone() }
    }
}

pub fn layout_json(layout: &PlanarLayout, report: Option<LayoutReport>) -> String {
    serde_json::to_string_pretty(&LayoutFile::new(layout, report)).expect("layout serializes")
}

pub fn read_layout(path: &Path) -> Result<LayoutFile, IoError> {
    Ok(serde_json::from_str(&read(path)?)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeSummary {
    pub position: [f64; 3],
    pub distance: f64,
    pub degree: usize,
    /// Polyhedron vertex at this node, in the input numbering.
    pub vertex: Option<usize>,
    pub on_curve: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeSummary {
    pub a: usize,
    pub b: usize,
    pub parabolic: bool,
    pub length: f64,
    /// Sample points along the edge on the surface.
    pub points: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutLocusSummary {
    pub nodes: Vec<NodeSummary>,
    pub edges: Vec<EdgeSummary>,
    pub parabolic_arcs: usize,
    pub leaves: Vec<usize>,
}

pub fn cut_locus_summary(half: &HalfSurface, tree: &CutLocusTree) -> CutLocusSummary {
    let v3 = |p: crate::geom::Vec3| [p.x, p.y, p.z];
    let nodes = (0..tree.nodes.len())
        .map(|i| {
            let n = &tree.nodes[i];
            NodeSummary {
                position: v3(n.position),
                distance: n.distance,
                degree: tree.degree(i),
                vertex: n.vertex.and_then(|v| half.source_vertex[v]),
                on_curve: n.boundary.is_some(),
            }
        })
        .collect();
    let edges = tree
        .edges
        .iter()
        .map(|e| {
            let mut points = Vec::new();
            for p in &e.pieces {
                let line = p.piece.polyline(1e-4 * p.piece.length().max(1e-12));
                let skip = usize::from(!points.is_empty());
                points.extend(line.into_iter().skip(skip).map(|q| v3(half.mesh.to_3d(p.tri, q))));
            }
            EdgeSummary { a: e.a, b: e.b, parabolic: e.parabolic, length: e.length(), points }
        })
        .collect();
    CutLocusSummary { nodes, edges, parabolic_arcs: tree.num_parabolic(), leaves: (0..tree.nodes.len()).filter(|&n| tree.degree(n) == 1).collect() }
}
