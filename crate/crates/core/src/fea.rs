//! Linear plane elasticity with constant-strain triangles.
//!
//! Units are mm / N / MPa throughout. Displacement dofs are interleaved: node `n`
//! owns dofs `2n` (x) and `2n + 1` (y).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::linalg::{pcg_jacobi, CsrMatrix, LinAlgError, SkylineCholesky};
use crate::mesher::TriMesh;

pub type Mat3 = [[f64; 3]; 3];
pub type Mat6 = [[f64; 6]; 6];
/// Strain-displacement matrix, 3 strain rows by 6 element dofs.
pub type BMatrix = [[f64; 6]; 3];

#[derive(Debug, Error)]
pub enum FeaError {
    #[error("invalid material: {0}")]
    Material(String),
    #[error("element {element} is degenerate (signed area {area:e})")]
    DegenerateElement { element: usize, area: f64 },
    #[error("constraints leave rigid-body motion free: {0}")]
    Singular(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error("solution file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlaneMode {
    #[default]
    Stress,
    Strain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// MPa.
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// mm.
    pub thickness: f64,
    pub plane: PlaneMode,
}

impl Material {
    /// A36 structural steel, 1 mm plate, plane stress.
    pub const STEEL: Material = Material {
        youngs_modulus: 200_000.0,
        poisson_ratio: 0.32,
        thickness: 1.0,
        plane: PlaneMode::Stress,
    };

    pub fn validate(&self) -> Result<(), FeaError> {
        if !(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite()) {
            return Err(FeaError::Material(format!("E = {} must be positive", self.youngs_modulus)));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            return Err(FeaError::Material(format!("ν = {} outside [0, 0.5)", self.poisson_ratio)));
        }
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(FeaError::Material(format!("thickness = {} must be positive", self.thickness)));
        }
        Ok(())
    }
}

impl Default for Material {
    fn default() -> Self {
        Self::STEEL
    }
}

/// Constitutive matrix mapping (εx, εy, γxy) to (σx, σy, τxy).
pub fn elasticity_matrix(material: &Material) -> Mat3 {
    let (e, nu) = (material.youngs_modulus, material.poisson_ratio);
    match material.plane {
        PlaneMode::Stress => {
            let f = e / (1.0 - nu * nu);
            [[f, f * nu, 0.0], [f * nu, f, 0.0], [0.0, 0.0, f * (1.0 - nu) / 2.0]]
        }
        PlaneMode::Strain => {
            let f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
            [
                [f * (1.0 - nu), f * nu, 0.0],
                [f * nu, f * (1.0 - nu), 0.0],
                [0.0, 0.0, f * (1.0 - 2.0 * nu) / 2.0],
            ]
        }
    }
}

/// Constant B matrix and signed area of a linear triangle.
pub fn strain_displacement(coords: &[Point; 3]) -> Result<(BMatrix, f64), FeaError> {
    let [p1, p2, p3] = *coords;
    let area = 0.5 * ((p2.x - p1.x) * (p3.y - p1.y) - (p3.x - p1.x) * (p2.y - p1.y));
    if !(area > 0.0) {
        return Err(FeaError::DegenerateElement { element: usize::MAX, area });
    }
    let b = [p2.y - p3.y, p3.y - p1.y, p1.y - p2.y];
    let c = [p3.x - p2.x, p1.x - p3.x, p2.x - p1.x];
    let inv = 1.0 / (2.0 * area);
    let mut bm = [[0.0; 6]; 3];
    for i in 0..3 {
        bm[0][2 * i] = b[i] * inv;
        bm[1][2 * i + 1] = c[i] * inv;
        bm[2][2 * i] = c[i] * inv;
        bm[2][2 * i + 1] = b[i] * inv;
    }
    Ok((bm, area))
}

/// `t · A · Bᵀ C B`; the upper triangle is computed and mirrored so the result is
/// exactly symmetric.
pub fn element_stiffness(coords: &[Point; 3], c: &Mat3, thickness: f64) -> Result<Mat6, FeaError> {
    let (b, area) = strain_displacement(coords)?;
    let mut cb = [[0.0; 6]; 3];
    for i in 0..3 {
        for j in 0..6 {
            cb[i][j] = (0..3).map(|k| c[i][k] * b[k][j]).sum();
        }
    }
    let mut k = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in i..6 {
            let v = thickness * area * (0..3).map(|m| b[m][i] * cb[m][j]).sum::<f64>();
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    Ok(k)
}

pub fn von_mises(stress: [f64; 3]) -> f64 {
    let [sx, sy, txy] = stress;
    (sx * sx + sy * sy - sx * sy + 3.0 * txy * txy).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

pub fn dof(node: usize, axis: Axis) -> usize {
    2 * node + axis as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Reduced systems with more dofs than this use preconditioned CG instead of Cholesky.
    pub cg_threshold_dofs: usize,
    pub cg_rel_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { cg_threshold_dofs: 200_000, cg_rel_tol: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct FeaProblem<'m> {
    pub mesh: &'m TriMesh,
    pub material: Material,
    pub fixed_dofs: BTreeSet<(usize, Axis)>,
    pub nodal_loads: BTreeMap<usize, [f64; 2]>,
    pub solver: SolverOptions,
}

impl<'m> FeaProblem<'m> {
    /// Cantilever set-up: every node on a fixture edge clamped in both axes and
    /// `force` applied at the mesh's load node.
    pub fn cantilever(mesh: &'m TriMesh, material: Material, force: [f64; 2]) -> Result<Self, FeaError> {
        let load = mesh
            .load_node
            .ok_or_else(|| FeaError::Problem("mesh has no load node".into()))?;
        let fixed_dofs = mesh
            .fixture_nodes()
            .into_iter()
            .flat_map(|n| [(n, Axis::X), (n, Axis::Y)])
            .collect();
        let problem = Self {
            mesh,
            material,
            fixed_dofs,
            nodal_loads: BTreeMap::from([(load, force)]),
            solver: SolverOptions::default(),
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.mesh.nodes.len()
    }

    pub fn validate(&self) -> Result<(), FeaError> {
        self.material.validate()?;
        if self.fixed_dofs.is_empty() {
            return Err(FeaError::Singular("no fixed dofs".into()));
        }
        let n = self.mesh.nodes.len();
        if let Some(&(node, _)) = self.fixed_dofs.iter().find(|(node, _)| *node >= n) {
            return Err(FeaError::Problem(format!("fixed node {node} not in mesh")));
        }
        if let Some(&node) = self.nodal_loads.keys().find(|&&node| node >= n) {
            return Err(FeaError::Problem(format!("load node {node} not in mesh")));
        }
        Ok(())
    }

    pub fn load_vector(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.num_dofs()];
        for (&node, &[fx, fy]) in &self.nodal_loads {
            f[dof(node, Axis::X)] += fx;
            f[dof(node, Axis::Y)] += fy;
        }
        f
    }

    pub fn free_dofs(&self) -> Vec<usize> {
        let fixed: BTreeSet<usize> = self.fixed_dofs.iter().map(|&(n, a)| dof(n, a)).collect();
        (0..self.num_dofs()).filter(|d| !fixed.contains(d)).collect()
    }

    /// Element stiffness matrices of the unit-density structure.
    pub fn element_matrices(&self) -> Result<Vec<Mat6>, FeaError> {
        let c = elasticity_matrix(&self.material);
        (0..self.mesh.elements.len())
            .map(|e| {
                element_stiffness(&self.mesh.element_coords(e), &c, self.material.thickness).map_err(|err| match err {
                    FeaError::DegenerateElement { area, .. } => FeaError::DegenerateElement { element: e, area },
                    other => other,
                })
            })
            .collect()
    }

    /// Rigid-body modes left free by the constraints, checked per connected
    /// component of the element graph.
    fn check_rigid_modes(&self) -> Result<(), FeaError> {
        let n = self.mesh.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut used = vec![false; n];
        for tri in &self.mesh.elements {
            for &v in tri {
                used[v] = true;
            }
            let r0 = find(&mut parent, tri[0]);
            for &v in &tri[1..] {
                let r = find(&mut parent, v);
                parent[r] = r0;
            }
        }
        let fixed_nodes: BTreeSet<usize> = self.fixed_dofs.iter().map(|&(n, _)| n).collect();
        if let Some(v) = (0..n).find(|&v| !used[v] && !fixed_nodes.contains(&v)) {
            return Err(FeaError::Singular(format!("node {v} belongs to no element")));
        }
        let mut groups: BTreeMap<usize, Vec<(usize, Axis)>> = BTreeMap::new();
        for v in (0..n).filter(|&v| used[v]) {
            groups.entry(find(&mut parent, v)).or_default();
        }
        for &(node, axis) in &self.fixed_dofs {
            if used[node] {
                groups.entry(find(&mut parent, node)).or_default().push((node, axis));
            }
        }
        for (root, dofs) in groups {
            // rows of the constraint map on (tx, ty, θ) about the component's first fixed node
            let origin = dofs.first().map_or(Point::new(0.0, 0.0), |&(n, _)| self.mesh.nodes[n]);
            let mut gram = [[0.0f64; 3]; 3];
            for &(node, axis) in &dofs {
                let p = self.mesh.nodes[node].sub(origin);
                let row = match axis {
                    Axis::X => [1.0, 0.0, -p.y],
                    Axis::Y => [0.0, 1.0, p.x],
                };
                for i in 0..3 {
                    for j in 0..3 {
                        gram[i][j] += row[i] * row[j];
                    }
                }
            }
            if rank3(gram) < 3 {
                return Err(FeaError::Singular(format!(
                    "component containing node {root} has {} fixed dofs that do not remove all rigid modes",
                    dofs.len()
                )));
            }
        }
        Ok(())
    }
}

fn rank3(mut m: [[f64; 3]; 3]) -> usize {
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = 1e-10 * scale;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..3 {
        let Some(p) = (row..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())) else {
            break;
        };
        if m[p][col].abs() <= tol {
            continue;
        }
        m.swap(row, p);
        for r in (row + 1)..3 {
            let f = m[r][col] / m[row][col];
            for c in col..3 {
                m[r][c] -= f * m[row][c];
            }
        }
        row += 1;
        rank += 1;
    }
    rank
}

/// Scatter element matrices, each scaled by `scales[e]` when given.
pub fn assemble_matrices(num_dofs: usize, mesh: &TriMesh, ke: &[Mat6], scales: Option<&[f64]>) -> CsrMatrix {
    let mut triplets = Vec::with_capacity(36 * mesh.elements.len());
    for (e, tri) in mesh.elements.iter().enumerate() {
        let s = scales.map_or(1.0, |s| s[e]);
        let dofs = [2 * tri[0], 2 * tri[0] + 1, 2 * tri[1], 2 * tri[1] + 1, 2 * tri[2], 2 * tri[2] + 1];
        for i in 0..6 {
            for j in 0..6 {
                triplets.push((dofs[i], dofs[j], s * ke[e][i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(num_dofs, triplets)
}

/// Global stiffness matrix (before constraints).
pub fn assemble(problem: &FeaProblem) -> Result<CsrMatrix, FeaError> {
    problem.validate()?;
    let ke = problem.element_matrices()?;
    Ok(assemble_matrices(problem.num_dofs(), problem.mesh, &ke, None))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaSolution {
    /// Per node `(ux, uy)`, mm.
    pub displacements: Vec<[f64; 2]>,
    /// Per element `(σx, σy, τxy)`, MPa.
    pub element_stress: Vec<[f64; 3]>,
    pub von_mises: Vec<f64>,
    /// Per node reaction force at fixed dofs (zero on free dofs), N.
    pub reactions: Vec<[f64; 2]>,
    /// ‖K_ff U_f − F_f‖.
    pub residual_norm: f64,
}

impl FeaSolution {
    pub fn flat_displacements(&self) -> Vec<f64> {
        self.displacements.iter().flat_map(|d| d.iter().copied()).collect()
    }

    /// Uᵀ F, the external work of the applied loads.
    pub fn compliance(&self, problem: &FeaProblem) -> f64 {
        self.flat_displacements().iter().zip(problem.load_vector()).map(|(u, f)| u * f).sum()
    }

    /// Plain text: `residual r`, `nodes N` + `ux uy` lines, `elements M` + `sx sy txy svm` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "residual {}", self.residual_norm).unwrap();
        writeln!(s, "nodes {}", self.displacements.len()).unwrap();
        for [ux, uy] in &self.displacements {
            writeln!(s, "{ux} {uy}").unwrap();
        }
        writeln!(s, "elements {}", self.element_stress.len()).unwrap();
        for ([sx, sy, txy], vm) in self.element_stress.iter().zip(&self.von_mises) {
            writeln!(s, "{sx} {sy} {txy} {vm}").unwrap();
        }
        s
    }

    /// Inverse of [`FeaSolution::to_text`]; reactions are not stored and come back as zero.
    pub fn from_text(text: &str) -> Result<Self, FeaError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let residual_norm: f64 = parse_header(&mut lines, "residual")?;
        let n: usize = parse_header(&mut lines, "nodes")?;
        let disp = (0..n).map(|_| parse_row::<2>(&mut lines)).collect::<Result<Vec<_>, _>>()?;
        let m: usize = parse_header(&mut lines, "elements")?;
        let rows = (0..m).map(|_| parse_row::<4>(&mut lines)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            displacements: disp,
            element_stress: rows.iter().map(|r| [r[0], r[1], r[2]]).collect(),
            von_mises: rows.iter().map(|r| r[3]).collect(),
            reactions: vec![[0.0; 2]; n],
            residual_norm,
        })
    }

    pub fn read(path: &Path) -> Result<Self, FeaError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn parse_header<'a, T: std::str::FromStr>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<T, FeaError> {
    let (line, l) = lines.next().ok_or(FeaError::Parse { line: 0, reason: "unexpected end of file".into() })?;
    l.strip_prefix(key)
        .and_then(|rest| rest.trim().parse().ok())
        .ok_or_else(|| FeaError::Parse { line, reason: format!("expected `{key} <value>`") })
}

fn parse_row<'a, const N: usize>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<[f64; N], FeaError> {
    let (line, l) = lines.next().ok_or(FeaError::Parse { line: 0, reason: "unexpected end of file".into() })?;
    let v: Vec<f64> = l
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| FeaError::Parse { line, reason: "bad number".into() })?;
    v.try_into().map_err(|_| FeaError::Parse { line, reason: format!("expected {N} values") })
}

/// Displacements of the structure whose element stiffnesses are scaled by
/// `scales` (unit scaling when `None`). Returns the full dof vector and the
/// reduced-system residual norm.
pub fn solve_displacements(
    problem: &FeaProblem,
    ke: &[Mat6],
    scales: Option<&[f64]>,
) -> Result<(Vec<f64>, CsrMatrix, f64), FeaError> {
    problem.validate()?;
    problem.check_rigid_modes()?;
    let k = assemble_matrices(problem.num_dofs(), problem.mesh, ke, scales);
    let free = problem.free_dofs();
    let f = problem.load_vector();
    let k_ff = k.principal_submatrix(&free);
    let f_f: Vec<f64> = free.iter().map(|&d| f[d]).collect();
    let u_f = if free.len() > problem.solver.cg_threshold_dofs {
        pcg_jacobi(&k_ff, &f_f, problem.solver.cg_rel_tol, 20 * free.len() + 100)?
    } else {
        SkylineCholesky::factor(&k_ff)?.solve(&f_f)
    };
    let residual = k_ff
        .mul_vec(&u_f)
        .iter()
        .zip(&f_f)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut u = vec![0.0; problem.num_dofs()];
    for (&d, &v) in free.iter().zip(&u_f) {
        u[d] = v;
    }
    Ok((u, k, residual))
}

/// Solve K U = F and recover per-element stresses.
pub fn solve(problem: &FeaProblem) -> Result<FeaSolution, FeaError> {
    let ke = problem.element_matrices()?;
    let (u, k, residual_norm) = solve_displacements(problem, &ke, None)?;
    let c = elasticity_matrix(&problem.material);
    let mut element_stress = Vec::with_capacity(problem.mesh.elements.len());
    for (e, tri) in problem.mesh.elements.iter().enumerate() {
        let (b, _) = strain_displacement(&problem.mesh.element_coords(e))?;
        let ue = [u[2 * tri[0]], u[2 * tri[0] + 1], u[2 * tri[1]], u[2 * tri[1] + 1], u[2 * tri[2]], u[2 * tri[2] + 1]];
        let strain: [f64; 3] = std::array::from_fn(|i| (0..6).map(|j| b[i][j] * ue[j]).sum());
        element_stress.push(std::array::from_fn(|i| (0..3).map(|j| c[i][j] * strain[j]).sum()));
    }
    let f = problem.load_vector();
    let ku = k.mul_vec(&u);
    let mut reactions = vec![[0.0; 2]; problem.mesh.nodes.len()];
    for &(node, axis) in &problem.fixed_dofs {
        let d = dof(node, axis);
        reactions[node][axis as usize] = ku[d] - f[d];
    }
    Ok(FeaSolution {
        displacements: u.chunks(2).map(|c| [c[0], c[1]]).collect(),
        von_mises: element_stress.iter().map(|&s| von_mises(s)).collect(),
        element_stress,
        reactions,
        residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_material() -> Material {
        Material { youngs_modulus: 1.0, poisson_ratio: 0.0, thickness: 1.0, plane: PlaneMode::Stress }
    }

    fn two_triangle_mesh() -> TriMesh {
        TriMesh {
            nodes: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
            elements: vec![[0, 1, 2], [0, 2, 3]],
            ..Default::default()
        }
    }

    #[test]
    fn elasticity_matrix_closed_forms() {
        let c = elasticity_matrix(&unit_material());
        assert_eq!(c, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]]);
        let c = elasticity_matrix(&Material::STEEL);
        // 200000 / (1 - 0.32²)
        assert!((c[0][0] - 222_816.399_286_987_5).abs() < 1e-6);
        assert!((c[0][1] - 0.32 * c[0][0]).abs() < 1e-9);
        assert!((c[2][2] - 0.34 * c[0][0]).abs() < 1e-9);
    }

    #[test]
    fn plane_strain_matrix() {
        let m = Material { plane: PlaneMode::Strain, ..Material::STEEL };
        let c = elasticity_matrix(&m);
        let f = 200_000.0 / (1.32 * 0.36);
        assert!((c[0][0] - f * 0.68).abs() < 1e-6);
        assert!((c[2][2] - f * 0.18).abs() < 1e-6);
    }

    #[test]
    fn rigid_modes_of_element_stiffness() {
        let coords = [Point::new(0.3, -0.2), Point::new(2.1, 0.4), Point::new(0.9, 1.7)];
        let k = element_stiffness(&coords, &elasticity_matrix(&Material::STEEL), 1.0).unwrap();
        let norm = k.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let translate = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let rotate: Vec<f64> = coords.iter().flat_map(|p| [-p.y, p.x]).collect();
        for mode in [translate.to_vec(), rotate] {
            for row in &k {
                let r: f64 = row.iter().zip(&mode).map(|(a, b)| a * b).sum();
                assert!(r.abs() <= 1e-9 * norm);
            }
        }
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let coords = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(matches!(
            element_stiffness(&coords, &elasticity_matrix(&Material::STEEL), 1.0),
            Err(FeaError::DegenerateElement { .. })
        ));
    }

    #[test]
    fn single_element_assembly_equals_element_matrix() {
        let mesh = TriMesh {
            nodes: vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            elements: vec![[0, 1, 2]],
            ..Default::default()
        };
        let problem = FeaProblem {
            mesh: &mesh,
            material: Material::STEEL,
            fixed_dofs: BTreeSet::from([(0, Axis::X)]),
            nodal_loads: BTreeMap::new(),
            solver: SolverOptions::default(),
        };
        let k = assemble(&problem).unwrap();
        let ke = element_stiffness(&mesh.element_coords(0), &elasticity_matrix(&Material::STEEL), 1.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(k.get(i, j), ke[i][j]);
            }
        }
    }

    #[test]
    fn shared_edge_entries_are_summed() {
        let mesh = two_triangle_mesh();
        let problem = FeaProblem {
            mesh: &mesh,
            material: Material::STEEL,
            fixed_dofs: BTreeSet::from([(0, Axis::X)]),
            nodal_loads: BTreeMap::new(),
            solver: SolverOptions::default(),
        };
        let k = assemble(&problem).unwrap();
        // dense oracle
        let c = elasticity_matrix(&Material::STEEL);
        let mut dense = [[0.0; 8]; 8];
        for (e, tri) in mesh.elements.iter().enumerate() {
            let ke = element_stiffness(&mesh.element_coords(e), &c, 1.0).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        dense[2 * tri[a] + i][2 * tri[b] + j] += ke[2 * a + i][2 * b + j];
                    }
                }
            }
        }
        for i in 0..8 {
            for j in 0..8 {
                assert!((k.get(i, j) - dense[i][j]).abs() <= 1e-9 * dense[i][i].abs());
            }
        }
        assert_eq!(k.asymmetry(), 0.0);
        // nodes 1 and 3 share no element
        assert_eq!(k.get(2, 6), 0.0);
        let ones: Vec<f64> = (0..8).map(|i| (i % 2 == 0) as u8 as f64).collect();
        let r = k.mul_vec(&ones);
        assert!(r.iter().all(|v| v.abs() < 1e-9 * dense[0][0]));
    }

    #[test]
    fn insufficient_constraints_are_singular() {
        let mesh = two_triangle_mesh();
        let problem = FeaProblem {
            mesh: &mesh,
            material: Material::STEEL,
            fixed_dofs: BTreeSet::from([(0, Axis::X), (0, Axis::Y)]),
            nodal_loads: BTreeMap::from([(2, [1.0, 0.0])]),
            solver: SolverOptions::default(),
        };
        assert!(matches!(solve(&problem), Err(FeaError::Singular(_))));
        let empty = FeaProblem { fixed_dofs: BTreeSet::new(), ..problem.clone() };
        assert!(matches!(solve(&empty), Err(FeaError::Singular(_))));
        // pin + roller along x: rotation about the pin stays free only when the roller is at the pin height
        let roller = FeaProblem { fixed_dofs: BTreeSet::from([(0, Axis::X), (0, Axis::Y), (1, Axis::X)]), ..problem.clone() };
        assert!(matches!(solve(&roller), Err(FeaError::Singular(_))));
        let ok = FeaProblem { fixed_dofs: BTreeSet::from([(0, Axis::X), (0, Axis::Y), (1, Axis::Y)]), ..problem };
        assert!(solve(&ok).is_ok());
    }

    #[test]
    fn von_mises_closed_forms() {
        let s = 123.456;
        assert!((von_mises([s, 0.0, 0.0]) - s).abs() <= 1e-12 * s);
        assert!((von_mises([0.0, 0.0, s]) - s * 3f64.sqrt()).abs() <= 1e-12 * s);
        assert!((von_mises([s, s, 0.0]) - s).abs() <= 1e-12 * s);
        assert_eq!(von_mises([0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn cg_path_matches_cholesky() {
        let mesh = two_triangle_mesh();
        let mut problem = FeaProblem {
            mesh: &mesh,
            material: Material::STEEL,
            fixed_dofs: BTreeSet::from([(0, Axis::X), (0, Axis::Y), (3, Axis::X)]),
            nodal_loads: BTreeMap::from([(2, [10.0, -5.0])]),
            solver: SolverOptions::default(),
        };
        let a = solve(&problem).unwrap();
        problem.solver.cg_threshold_dofs = 0;
        let b = solve(&problem).unwrap();
        for (p, q) in a.flat_displacements().iter().zip(b.flat_displacements()) {
            assert!((p - q).abs() < 1e-10 * p.abs().max(1e-12));
        }
    }

    #[test]
    fn solution_text_round_trip() {
        let mesh = two_triangle_mesh();
        let problem = FeaProblem {
            mesh: &mesh,
            material: Material::STEEL,
            fixed_dofs: BTreeSet::from([(0, Axis::X), (0, Axis::Y), (3, Axis::X)]),
            nodal_loads: BTreeMap::from([(2, [10.0, -5.0])]),
            solver: SolverOptions::default(),
        };
        let sol = solve(&problem).unwrap();
        let text = sol.to_text();
        let back = FeaSolution::from_text(&text).unwrap();
        assert_eq!(back.displacements, sol.displacements);
        assert_eq!(back.von_mises, sol.von_mises);
        assert_eq!(back.to_text(), text);
    }
}
