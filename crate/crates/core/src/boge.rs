//! Boundary oriented graph embedding: one graph vertex per triangle, multi-hop
//! local links, and shortcut links from boundary-information elements to every
//! internal element.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::mesher::TriMesh;

pub const FEATURE_LEN: usize = 18;
pub const FEATURE_LEN_WITH_MATERIAL: usize = 20;

#[derive(Debug, Error)]
pub enum BogeError {
    #[error("element {element} is degenerate")]
    Degenerate { element: usize },
    #[error("element {0} does not exist")]
    NoElement(usize),
    #[error("target has {got} values for {expected} elements")]
    TargetLength { expected: usize, got: usize },
    #[error("max_hops must be at least 1")]
    Hops,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFeature {
    /// Perpendicular distance from the element center to the edge line, mm.
    pub distance: f64,
    /// Outward unit normal.
    pub normal: Point,
    /// 0 interior, 1 contour, 2 fixture.
    pub state: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexFeatures {
    pub center: Point,
    /// `(E, ν)` when the dataset carries material properties.
    pub material: Option<[f64; 2]>,
    /// Sorted by ascending edge-midpoint angle about the center.
    pub edges: [EdgeFeature; 3],
    /// Load position relative to the center, mm; zero unless the element carries the load.
    pub force_position: Point,
    /// N; zero unless the element carries the load.
    pub force: [f64; 2],
}

impl VertexFeatures {
    pub fn carries_load(&self) -> bool {
        self.force != [0.0, 0.0] || self.force_position != Point::new(0.0, 0.0)
    }

    /// Boundary-information element: any tagged edge or a load.
    pub fn is_boundary_info(&self) -> bool {
        self.edges.iter().any(|e| e.state >= 1) || self.carries_load()
    }

    /// Flattened channels with lengths divided by `norm.length_scale`, forces by
    /// `norm.force_scale` and E by `norm.modulus_scale`.
    pub fn to_vec(&self, norm: &Normalization) -> Vec<f64> {
        let l = norm.length_scale;
        let mut v = Vec::with_capacity(FEATURE_LEN_WITH_MATERIAL);
        v.extend([self.center.x / l, self.center.y / l]);
        if let Some([e, nu]) = self.material {
            v.extend([e / norm.modulus_scale, nu]);
        }
        for edge in &self.edges {
            v.extend([edge.distance / l, edge.normal.x, edge.normal.y, edge.state as f64]);
        }
        v.extend([
            self.force_position.x / l,
            self.force_position.y / l,
            self.force[0] / norm.force_scale,
            self.force[1] / norm.force_scale,
        ]);
        v
    }
}

/// Per-element features. The force block is filled iff the element contains `load_node`.
pub fn vertex_features(
    mesh: &TriMesh,
    element: usize,
    load_node: Option<usize>,
    load: [f64; 2],
) -> Result<VertexFeatures, BogeError> {
    let tri = *mesh.elements.get(element).ok_or(BogeError::NoElement(element))?;
    let center = mesh.centroid(element);
    let mut edges = Vec::with_capacity(3);
    for k in 0..3 {
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let dir = pb.sub(pa);
        let len = dir.norm();
        if !(len > 0.0) {
            return Err(BogeError::Degenerate { element });
        }
        let mut normal = Point::new(dir.y / len, -dir.x / len);
        let mid = pa.lerp(pb, 0.5);
        if normal.dot(mid.sub(center)) < 0.0 {
            normal = normal.scale(-1.0);
        }
        let distance = normal.dot(pa.sub(center));
        if !(distance > 0.0) {
            return Err(BogeError::Degenerate { element });
        }
        let state = mesh.tag(a, b).map_or(0, |t| t.state());
        let angle = (mid.y - center.y).atan2(mid.x - center.x);
        edges.push((angle, EdgeFeature { distance, normal, state }));
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (force_position, force) = match load_node {
        Some(n) if tri.contains(&n) => (mesh.nodes[n].sub(center), load),
        _ => (Point::new(0.0, 0.0), [0.0, 0.0]),
    };
    Ok(VertexFeatures {
        center,
        material: None,
        edges: [edges[0].1, edges[1].1, edges[2].1],
        force_position,
        force,
    })
}

/// Element dual graph: neighbours share a full edge. Lists are sorted.
pub fn element_neighbours(mesh: &TriMesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.elements.len()];
    for elems in mesh.edge_elements().values() {
        for (i, &a) in elems.iter().enumerate() {
            for &b in &elems[i + 1..] {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    for row in &mut adj {
        row.sort_unstable();
        row.dedup();
    }
    adj
}

/// All element pairs `(i, j)`, `i < j`, within `max_hops` steps in the dual graph.
pub fn local_adjacency(mesh: &TriMesh, max_hops: usize) -> Result<Vec<(usize, usize)>, BogeError> {
    if max_hops == 0 {
        return Err(BogeError::Hops);
    }
    let adj = element_neighbours(mesh);
    let m = adj.len();
    let mut depth = vec![usize::MAX; m];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    let mut seen = Vec::new();
    for src in 0..m {
        depth[src] = 0;
        seen.push(src);
        queue.push_back(src);
        while let Some(v) = queue.pop_front() {
            if depth[v] == max_hops {
                continue;
            }
            for &w in &adj[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    seen.push(w);
                    queue.push_back(w);
                }
            }
        }
        let mut reached: Vec<usize> = seen.iter().copied().filter(|&w| w > src).collect();
        reached.sort_unstable();
        out.extend(reached.into_iter().map(|w| (src, w)));
        for w in seen.drain(..) {
            depth[w] = usize::MAX;
        }
    }
    Ok(out)
}

/// Links from every boundary-information element to every internal element;
/// boundary-to-boundary pairs only when `link_boundary_pairs` is set.
pub fn boundary_shortcuts(features: &[VertexFeatures], link_boundary_pairs: bool) -> Vec<(usize, usize)> {
    let boundary: Vec<bool> = features.iter().map(VertexFeatures::is_boundary_info).collect();
    let mut out = Vec::new();
    for i in 0..features.len() {
        for j in (i + 1)..features.len() {
            if (boundary[i] != boundary[j]) || (link_boundary_pairs && boundary[i] && boundary[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    Conventional,
    #[default]
    Boge,
}

impl std::str::FromStr for EmbeddingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conventional" => Ok(Self::Conventional),
            "boge" => Ok(Self::Boge),
            _ => Err(format!("unknown embedding mode `{s}` (expected conventional|boge)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// mm; divides coordinates, distances and load offsets.
    pub length_scale: f64,
    /// N; divides force components.
    pub force_scale: f64,
    /// MPa; divides E when the material block is present.
    pub modulus_scale: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self { length_scale: 64.0, force_scale: 1000.0, modulus_scale: 200_000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub mode: EmbeddingMode,
    /// Only used in BOGE mode; conventional mode is always one hop.
    pub max_hops: usize,
    pub link_boundary_pairs: bool,
    pub material: Option<[f64; 2]>,
    pub norm: Normalization,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            mode: EmbeddingMode::Boge,
            max_hops: 3,
            link_boundary_pairs: false,
            material: None,
            norm: Normalization::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub id: String,
    pub family: u8,
    pub num_vertices: usize,
    pub features: Vec<Vec<f64>>,
    pub edges: Vec<[usize; 2]>,
    pub target: Vec<f64>,
    pub norm: Normalization,
}

pub fn all_vertex_features(mesh: &TriMesh, load: [f64; 2], material: Option<[f64; 2]>) -> Result<Vec<VertexFeatures>, BogeError> {
    (0..mesh.elements.len())
        .map(|e| {
            let mut f = vertex_features(mesh, e, mesh.load_node, load)?;
            f.material = material;
            Ok(f)
        })
        .collect()
}

/// Graph sample for `mesh` with `load` at its load node and per-element `target`.
/// `id` and `family` are left for the caller.
pub fn build_graph(mesh: &TriMesh, load: [f64; 2], target: &[f64], options: &GraphOptions) -> Result<GraphSample, BogeError> {
    let m = mesh.elements.len();
    if target.len() != m {
        return Err(BogeError::TargetLength { expected: m, got: target.len() });
    }
    let features = all_vertex_features(mesh, load, options.material)?;
    let edges: Vec<[usize; 2]> = match options.mode {
        EmbeddingMode::Conventional => local_adjacency(mesh, 1)?.into_iter().map(|(a, b)| [a, b]).collect(),
        EmbeddingMode::Boge => {
            let mut set: BTreeSet<(usize, usize)> = local_adjacency(mesh, options.max_hops)?.into_iter().collect();
            set.extend(boundary_shortcuts(&features, options.link_boundary_pairs));
            set.into_iter().map(|(a, b)| [a, b]).collect()
        }
    };
    Ok(GraphSample {
        id: String::new(),
        family: 0,
        num_vertices: m,
        features: features.iter().map(|f| f.to_vec(&options.norm)).collect(),
        edges,
        target: target.to_vec(),
        norm: options.norm,
    })
}

/// Number of edges shared by two elements.
pub fn interior_edge_count(mesh: &TriMesh) -> usize {
    mesh.edge_elements().values().filter(|v| v.len() == 2).count()
}

/// Tagged boundary edges grouped by state, for diagnostics.
pub fn tag_histogram(mesh: &TriMesh) -> BTreeMap<u8, usize> {
    let mut h = BTreeMap::new();
    for &(a, b) in &mesh.boundary_edges() {
        *h.entry(mesh.tag(a, b).map_or(0, |t| t.state())).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesher::{edge_key, EdgeTag};

    #[test]
    fn hand_triangle_features() {
        let mesh = TriMesh {
            nodes: vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 2.0)],
            elements: vec![[0, 1, 2]],
            ..Default::default()
        };
        let f = vertex_features(&mesh, 0, None, [5.0, 5.0]).unwrap();
        assert!((f.center.x - 2.0 / 3.0).abs() < 1e-15 && (f.center.y - 2.0 / 3.0).abs() < 1e-15);
        // midpoint angles: bottom edge (1,0) < hypotenuse (1,1) < left edge (0,1)
        let bottom = f.edges[0];
        assert_eq!(bottom.normal, Point::new(0.0, -1.0));
        assert!((bottom.distance - 2.0 / 3.0).abs() < 1e-15);
        let hyp = f.edges[1];
        assert!((hyp.normal.x - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((hyp.distance - (2.0 - 4.0 / 3.0) / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.edges[2].normal, Point::new(-1.0, 0.0));
        assert_eq!(f.force, [0.0, 0.0]);
        assert_eq!(f.to_vec(&Normalization::default()).len(), FEATURE_LEN);
        assert!(f.edges.iter().all(|e| e.state == 0));
    }

    #[test]
    fn force_and_tags() {
        let mut mesh = TriMesh {
            nodes: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
            elements: vec![[0, 1, 2], [0, 2, 3]],
            load_node: Some(1),
            ..Default::default()
        };
        mesh.edge_tags.insert(edge_key(0, 3), EdgeTag::Fixture);
        mesh.edge_tags.insert(edge_key(1, 2), EdgeTag::Contour);
        let fs = all_vertex_features(&mesh, [0.0, -500.0], Some([200_000.0, 0.32])).unwrap();
        assert_eq!(fs[0].force, [0.0, -500.0]);
        let c = mesh.centroid(0);
        assert_eq!(fs[0].force_position, Point::new(1.0 - c.x, -c.y));
        assert_eq!(fs[1].force, [0.0, 0.0]);
        assert_eq!(fs[1].force_position, Point::new(0.0, 0.0));
        assert!(fs[1].edges.iter().any(|e| e.state == 2));
        assert!(fs[0].edges.iter().any(|e| e.state == 1));
        let v = fs[0].to_vec(&Normalization::default());
        assert_eq!(v.len(), FEATURE_LEN_WITH_MATERIAL);
        assert_eq!(v[2], 1.0);
        assert_eq!(v[19], -0.5);
    }

    /// Strip of `n` triangles where triangle i shares an edge with i+1.
    fn strip(n: usize) -> TriMesh {
        let mut nodes = Vec::new();
        for i in 0..(n / 2 + 2) {
            nodes.push(Point::new(i as f64, 0.0));
            nodes.push(Point::new(i as f64, 1.0));
        }
        let mut elements = Vec::new();
        for t in 0..n {
            let i = t / 2;
            let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * i + 2, 2 * i + 3);
            elements.push(if t % 2 == 0 { [b0, b1, t0] } else { [b1, t1, t0] });
        }
        TriMesh { nodes, elements, ..Default::default() }
    }

    #[test]
    fn strip_hop_closure() {
        let mesh = strip(4);
        assert_eq!(local_adjacency(&mesh, 1).unwrap(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(local_adjacency(&mesh, 2).unwrap(), vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(local_adjacency(&mesh, 3).unwrap().len(), 6);
        assert!(local_adjacency(&mesh, 0).is_err());
    }

    #[test]
    fn shortcuts_are_bipartite() {
        let mut fs = Vec::new();
        let base = vertex_features(&strip(1), 0, None, [0.0; 2]).unwrap();
        for i in 0..50 {
            let mut f = base;
            if i < 10 {
                f.edges[0].state = 1;
            }
            fs.push(f);
        }
        let s = boundary_shortcuts(&fs, false);
        assert_eq!(s.len(), 400);
        for i in 10..50 {
            assert_eq!(s.iter().filter(|&&(a, b)| a == i || b == i).count(), 10);
        }
        assert_eq!(boundary_shortcuts(&fs, true).len(), 400 + 45);
        assert!(boundary_shortcuts(&fs[..10], false).is_empty());
    }

    #[test]
    fn build_graph_modes() {
        let mut mesh = strip(6);
        mesh.edge_tags.insert(edge_key(0, 1), EdgeTag::Fixture);
        let target = vec![1.0; 6];
        let conv = build_graph(&mesh, [0.0; 2], &target, &GraphOptions { mode: EmbeddingMode::Conventional, ..Default::default() })
            .unwrap();
        assert_eq!(conv.edges.len(), interior_edge_count(&mesh));
        let boge = build_graph(&mesh, [0.0; 2], &target, &GraphOptions::default()).unwrap();
        let b: BTreeSet<_> = boge.edges.iter().copied().collect();
        assert!(conv.edges.iter().all(|e| b.contains(e)));
        assert_eq!(conv.features, boge.features);
        assert!(build_graph(&mesh, [0.0; 2], &[1.0], &GraphOptions::default()).is_err());
    }

    #[test]
    fn sample_json_field_order() {
        let mesh = strip(2);
        let g = build_graph(&mesh, [0.0; 2], &[0.5, 1.5], &GraphOptions::default()).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let keys = ["\"id\"", "\"family\"", "\"num_vertices\"", "\"features\"", "\"edges\"", "\"target\"", "\"norm\""];
        let pos: Vec<usize> = keys.iter().map(|k| s.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(s.contains("\"edges\":[[0,1]]"));
    }
}
