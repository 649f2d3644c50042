//! Quality triangulation of planar beam domains.
//!
//! Boundary loops are split into segments no longer than the target size, the
//! interior is seeded with an equilateral lattice, and the result is handed to a
//! constrained Delaunay refinement (Ruppert/Chew) with a 20° angle bound and a
//! maximum element area of an equilateral triangle of side `target_size`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use spade::handles::{FixedFaceHandle, FixedVertexHandle, InnerTag};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, InsertionError, Point2, RefinementParameters, Triangulation};
use thiserror::Error;

use crate::beamgen::PlanarDomain;
use crate::geometry::{loop_segments, orient2d, point_segment_distance, triangle_area, Point};

pub const MIN_ANGLE_DEG: f64 = 20.0;
/// Upper bound on any element edge relative to the target size.
pub const MAX_EDGE_FACTOR: f64 = 1.5;
/// Boundary segments shorter than this are treated as sliver geometry.
pub const MIN_SEGMENT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("target size must be positive and finite, got {0}")]
    BadSize(f64),
    #[error("degenerate boundary segment ({:?}, {:?}) -> ({:?}, {:?}): {reason}", .from.x, .from.y, .to.x, .to.y)]
    Degenerate { from: Point, to: Point, reason: String },
    #[error("refinement did not converge (vertex budget exhausted)")]
    RefinementIncomplete,
    #[error("boundary edge {0}-{1} lies on no domain loop")]
    UntaggedEdge(usize, usize),
    #[error("triangulation failed: {0:?}")]
    Insertion(InsertionError),
    #[error("mesh file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Domain(#[from] crate::beamgen::DesignError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Contour,
    Fixture,
}

impl EdgeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Contour => "contour",
            EdgeTag::Fixture => "fixture",
        }
    }

    /// Boundary state channel value used by the graph embedding.
    pub fn state(self) -> u8 {
        match self {
            EdgeTag::Contour => 1,
            EdgeTag::Fixture => 2,
        }
    }
}

/// Canonical undirected edge key.
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub nodes: Vec<Point>,
    /// Counter-clockwise node triples.
    pub elements: Vec<[usize; 3]>,
    pub edge_tags: BTreeMap<(usize, usize), EdgeTag>,
    pub load_node: Option<usize>,
}

impl TriMesh {
    pub fn element_coords(&self, e: usize) -> [Point; 3] {
        self.elements[e].map(|n| self.nodes[n])
    }

    pub fn element_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_coords(e);
        triangle_area(a, b, c)
    }

    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.element_coords(e);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_area(e)).sum()
    }

    /// Elements incident to each undirected edge.
    pub fn edge_elements(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (e, tri) in self.elements.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(e);
            }
        }
        map
    }

    /// Edges that belong to exactly one element.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        self.edge_elements()
            .into_iter()
            .filter_map(|(k, v)| (v.len() == 1).then_some(k))
            .collect()
    }

    pub fn tag(&self, a: usize, b: usize) -> Option<EdgeTag> {
        self.edge_tags.get(&edge_key(a, b)).copied()
    }

    /// Nodes touched by a fixture-tagged edge, ascending.
    pub fn fixture_nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .edge_tags
            .iter()
            .filter(|(_, &t)| t == EdgeTag::Fixture)
            .flat_map(|(&(a, b), _)| [a, b])
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Plain-text serialization; see [`TriMesh::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}", self.nodes.len()).unwrap();
        writeln!(s, "{}", self.elements.len()).unwrap();
        for p in &self.nodes {
            writeln!(s, "{} {}", p.x, p.y).unwrap();
        }
        for [i, j, k] in &self.elements {
            writeln!(s, "{i} {j} {k}").unwrap();
        }
        for (&(i, j), tag) in &self.edge_tags {
            writeln!(s, "{i} {j} {}", tag.as_str()).unwrap();
        }
        match self.load_node {
            Some(n) => writeln!(s, "load {n}").unwrap(),
            None => writeln!(s, "load none").unwrap(),
        }
        s
    }

    /// Parses the format written by [`TriMesh::to_text`]: node count, element
    /// count, `x y` node lines, `i j k` element lines, `i j {contour|fixture}` tag
    /// lines, and a closing `load <node|none>` line.
    pub fn from_text(text: &str) -> Result<Self, MeshError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let err = |line: usize, reason: &str| MeshError::Parse { line, reason: reason.to_string() };
        let mut next = |what: &str| lines.next().ok_or_else(|| err(0, &format!("unexpected end of file, expected {what}")));
        let count = |(line, l): (usize, &str)| l.parse::<usize>().map_err(|_| err(line, "expected a count"));
        let num_nodes = count(next("node count")?)?;
        let num_elements = count(next("element count")?)?;
        let mut mesh = TriMesh::default();
        for _ in 0..num_nodes {
            let (line, l) = next("node line")?;
            let v: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| err(line, "bad coordinate"))?;
            let [x, y] = v[..] else { return Err(err(line, "expected `x y`")) };
            mesh.nodes.push(Point::new(x, y));
        }
        for _ in 0..num_elements {
            let (line, l) = next("element line")?;
            let v: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| err(line, "bad node index"))?;
            let [i, j, k] = v[..] else { return Err(err(line, "expected `i j k`")) };
            if [i, j, k].iter().any(|&n| n >= num_nodes) {
                return Err(err(line, "node index out of range"));
            }
            mesh.elements.push([i, j, k]);
        }
        loop {
            let (line, l) = next("tag or load line")?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            match parts[..] {
                ["load", "none"] => break,
                ["load", n] => {
                    let n: usize = n.parse().map_err(|_| err(line, "bad load node"))?;
                    if n >= num_nodes {
                        return Err(err(line, "load node out of range"));
                    }
                    mesh.load_node = Some(n);
                    break;
                }
                [i, j, t] => {
                    let i: usize = i.parse().map_err(|_| err(line, "bad node index"))?;
                    let j: usize = j.parse().map_err(|_| err(line, "bad node index"))?;
                    let tag = match t {
                        "contour" => EdgeTag::Contour,
                        "fixture" => EdgeTag::Fixture,
                        _ => return Err(err(line, "unknown edge tag")),
                    };
                    mesh.edge_tags.insert(edge_key(i, j), tag);
                }
                _ => return Err(err(line, "expected tag line or `load` line")),
            }
        }
        Ok(mesh)
    }

    pub fn read(path: &Path) -> Result<Self, MeshError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), MeshError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityReport {
    pub element_count: usize,
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub min_edge: f64,
}

fn triangle_angles_deg(p: [Point; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let u = p[(i + 1) % 3].sub(p[i]);
        let v = p[(i + 2) % 3].sub(p[i]);
        out[i] = u.cross(v).abs().atan2(u.dot(v)).to_degrees();
    }
    out
}

pub fn mesh_quality(mesh: &TriMesh) -> QualityReport {
    let mut report = QualityReport {
        element_count: mesh.elements.len(),
        min_angle_deg: f64::INFINITY,
        max_edge: 0.0,
        min_edge: f64::INFINITY,
    };
    for e in 0..mesh.elements.len() {
        let p = mesh.element_coords(e);
        for (k, angle) in triangle_angles_deg(p).into_iter().enumerate() {
            report.min_angle_deg = report.min_angle_deg.min(angle);
            let len = p[k].dist(p[(k + 1) % 3]);
            report.max_edge = report.max_edge.max(len);
            report.min_edge = report.min_edge.min(len);
        }
    }
    report
}

fn split_loop(loop_: &[Point], h: f64) -> Result<Vec<Point>, MeshError> {
    let mut out = Vec::new();
    for (a, b) in loop_segments(loop_) {
        let len = a.dist(b);
        if len < MIN_SEGMENT {
            return Err(MeshError::Degenerate { from: a, to: b, reason: format!("length {len:e}") });
        }
        let pieces = (len / h - 1e-9).ceil().max(1.0) as usize;
        out.extend((0..pieces).map(|k| a.lerp(b, k as f64 / pieces as f64)));
    }
    Ok(out)
}

fn lattice_seeds(domain: &PlanarDomain, h: f64) -> Vec<Point> {
    let (mut lo, mut hi) = (Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN));
    for p in &domain.outer_loop {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let segments: Vec<(Point, Point)> = domain.loops().flat_map(|l| loop_segments(l)).collect();
    let dy = h * 3f64.sqrt() / 2.0;
    let mut seeds = Vec::new();
    let mut row = 0usize;
    let mut y = lo.y + 0.5 * dy;
    while y < hi.y {
        let mut x = lo.x + if row % 2 == 0 { 0.5 * h } else { h };
        while x < hi.x {
            let p = Point::new(x, y);
            if domain.contains(p) && segments.iter().all(|&(a, b)| point_segment_distance(p, a, b) > 0.45 * h) {
                seeds.push(p);
            }
            x += h;
        }
        y += dy;
        row += 1;
    }
    seeds
}

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

/// Triangulate `domain` with elements of roughly `target_size` edge length.
/// The returned mesh carries boundary tags and its load node.
pub fn triangulate(domain: &PlanarDomain, target_size: f64) -> Result<TriMesh, MeshError> {
    if !(target_size.is_finite() && target_size > 0.0) {
        return Err(MeshError::BadSize(target_size));
    }
    domain.validate()?;
    let h = target_size;

    let mut vertices = Vec::new();
    let mut constraints = Vec::new();
    for loop_ in domain.loops() {
        let pts = split_loop(loop_, h)?;
        let base = vertices.len();
        let n = pts.len();
        vertices.extend(pts.into_iter().map(|p| Point2::new(p.x, p.y)));
        constraints.extend((0..n).map(|i| [base + i, base + (i + 1) % n]));
    }
    vertices.extend(lattice_seeds(domain, h).into_iter().map(|p| Point2::new(p.x, p.y)));

    let initial = vertices.len();
    let mut cdt = Cdt::bulk_load_cdt(vertices, constraints).map_err(MeshError::Insertion)?;
    let max_area = 3f64.sqrt() / 4.0 * h * h * (1.0 + 1e-9);
    let params = || {
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEG))
            .with_max_allowed_area(max_area)
            .exclude_outer_faces(true)
            .with_max_additional_vertices(50 * initial + 10_000)
    };

    let mut excluded: HashSet<FixedFaceHandle<InnerTag>>;
    let mut passes = 0;
    loop {
        let result = cdt.refine(params());
        if !result.refinement_complete {
            return Err(MeshError::RefinementIncomplete);
        }
        excluded = result.excluded_faces.into_iter().collect();
        let mut long_edges: Vec<Point2<f64>> = Vec::new();
        for edge in cdt.undirected_edges() {
            if cdt.is_constraint_edge(edge.fix()) {
                continue;
            }
            let touches_domain = edge
                .as_directed()
                .face()
                .as_inner()
                .into_iter()
                .chain(edge.as_directed().rev().face().as_inner())
                .any(|f| !excluded.contains(&f.fix()));
            let [a, b] = edge.positions();
            let len = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            if touches_domain && len > MAX_EDGE_FACTOR * h {
                long_edges.push(Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y)));
            }
        }
        if long_edges.is_empty() {
            break;
        }
        passes += 1;
        if passes > 20 {
            return Err(MeshError::RefinementIncomplete);
        }
        for m in long_edges {
            cdt.insert(m).map_err(MeshError::Insertion)?;
        }
    }

    let mut index = vec![usize::MAX; cdt.num_vertices()];
    let mut mesh = TriMesh::default();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let vs = face.vertices().map(|v| v.fix().index());
        faces.push(vs);
    }
    // number nodes in ascending handle order for deterministic output
    let mut used: Vec<usize> = faces.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    for v in used {
        index[v] = mesh.nodes.len();
        let p = cdt.vertex(FixedVertexHandle::from_index(v)).position();
        mesh.nodes.push(Point::new(p.x, p.y));
    }
    for f in faces {
        let mut tri = f.map(|v| index[v]);
        let [a, b, c] = tri.map(|n| mesh.nodes[n]);
        if orient2d(a, b, c) < 0.0 {
            tri.swap(1, 2);
        }
        mesh.elements.push(tri);
    }
    classify_boundary(mesh, domain)
}

/// Tag every boundary edge as `fixture` (on the fixture segment) or `contour`
/// (on any other loop segment), and snap the load to the nearest node.
pub fn classify_boundary(mut mesh: TriMesh, domain: &PlanarDomain) -> Result<TriMesh, MeshError> {
    let scale = domain
        .outer_loop
        .iter()
        .fold(1.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
    let tol = 1e-9 * scale;
    let [f0, f1] = domain.fixture_segment;
    let segments: Vec<(Point, Point)> = domain.loops().flat_map(|l| loop_segments(l)).collect();
    mesh.edge_tags.clear();
    for (a, b) in mesh.boundary_edges() {
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let on = |s: (Point, Point)| point_segment_distance(pa, s.0, s.1) <= tol && point_segment_distance(pb, s.0, s.1) <= tol;
        let tag = if on((f0, f1)) {
            EdgeTag::Fixture
        } else if segments.iter().any(|&s| on(s)) {
            EdgeTag::Contour
        } else {
            return Err(MeshError::UntaggedEdge(a, b));
        };
        mesh.edge_tags.insert((a, b), tag);
    }
    let anchor = domain.load_anchor;
    mesh.load_node = mesh
        .nodes
        .iter()
        .enumerate()
        .min_by(|(_, p), (_, q)| p.dist(anchor).total_cmp(&q.dist(anchor)))
        .map(|(i, _)| i);
    Ok(mesh)
}
