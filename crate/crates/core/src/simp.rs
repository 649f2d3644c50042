//! SIMP compliance minimization with an optimality-criteria update.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fea::{solve_displacements, FeaError, FeaProblem, Mat6};
use crate::mesher::TriMesh;

/// Bisection budget for the volume multiplier.
pub const OC_MAX_BISECTIONS: usize = 200;
/// Accepted volume-fraction window below the target.
pub const VOLUME_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SimpError {
    #[error("invalid SIMP config: {0}")]
    Config(String),
    #[error("density field has {got} entries for {expected} elements")]
    Length { expected: usize, got: usize },
    #[error("volume multiplier bisection did not converge in {iterations} steps (volume fraction {volume_fraction})")]
    Bisection { iterations: usize, volume_fraction: f64 },
    #[error(transparent)]
    Fea(#[from] FeaError),
    #[error("density file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpConfig {
    pub volume_fraction: f64,
    pub penalty: f64,
    pub max_cycles: usize,
    pub z_min: f64,
    /// mm; zero disables filtering.
    pub filter_radius: f64,
    pub move_limit: f64,
    /// OC damping exponent.
    pub damping: f64,
    /// Stop once the largest density change in a cycle falls below this.
    pub change_tolerance: f64,
}

impl Default for SimpConfig {
    fn default() -> Self {
        Self {
            volume_fraction: 0.3,
            penalty: 3.0,
            max_cycles: 25,
            z_min: 0.001,
            filter_radius: 1.5,
            move_limit: 0.2,
            damping: 0.5,
            change_tolerance: 0.01,
        }
    }
}

impl SimpConfig {
    pub fn validate(&self) -> Result<(), SimpError> {
        let bad = |s: String| Err(SimpError::Config(s));
        if !(self.volume_fraction > 0.0 && self.volume_fraction < 1.0) {
            return bad(format!("volume_fraction {} outside (0, 1)", self.volume_fraction));
        }
        if !(self.penalty >= 1.0) {
            return bad(format!("penalty {} below 1", self.penalty));
        }
        if !(self.z_min > 0.0 && self.z_min < 1.0) {
            return bad(format!("z_min {} outside (0, 1)", self.z_min));
        }
        if self.z_min > self.volume_fraction {
            return bad("z_min exceeds volume_fraction".into());
        }
        if !(self.filter_radius >= 0.0) {
            return bad(format!("filter_radius {} negative", self.filter_radius));
        }
        if !(self.move_limit > 0.0) {
            return bad(format!("move_limit {} not positive", self.move_limit));
        }
        if !(self.damping > 0.0) {
            return bad(format!("damping {} not positive", self.damping));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DensityField {
    pub densities: Vec<f64>,
    /// Compliance of the design at the start of each cycle, followed by that of the returned design.
    pub compliance_history: Vec<f64>,
}

impl DensityField {
    pub fn uniform(num_elements: usize, value: f64) -> Self {
        Self { densities: vec![value; num_elements], compliance_history: Vec::new() }
    }

    /// Plain text: `elements M`, one `z` per line, `history K`, one compliance per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "elements {}", self.densities.len()).unwrap();
        for z in &self.densities {
            writeln!(s, "{z}").unwrap();
        }
        writeln!(s, "history {}", self.compliance_history.len()).unwrap();
        for c in &self.compliance_history {
            writeln!(s, "{c}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, SimpError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut section = |key: &str| -> Result<Vec<f64>, SimpError> {
            let (line, l) = lines.next().ok_or(SimpError::Parse { line: 0, reason: "unexpected end of file".into() })?;
            let n: usize = l
                .strip_prefix(key)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| SimpError::Parse { line, reason: format!("expected `{key} <count>`") })?;
            (0..n)
                .map(|_| {
                    let (line, l) =
                        lines.next().ok_or(SimpError::Parse { line: 0, reason: "unexpected end of file".into() })?;
                    l.parse().map_err(|_| SimpError::Parse { line, reason: "bad number".into() })
                })
                .collect()
        };
        let densities = section("elements")?;
        let compliance_history = section("history")?;
        Ok(Self { densities, compliance_history })
    }

    pub fn read(path: &Path) -> Result<Self, SimpError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

pub fn volume_fraction(mesh: &TriMesh, z: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (e, &ze) in z.iter().enumerate() {
        let a = mesh.element_area(e);
        num += ze * a;
        den += a;
    }
    num / den
}

/// Compliance `Σ z_eᵖ u_eᵀ k_e u_e` and its per-element derivatives.
pub fn compliance(problem: &FeaProblem, z: &[f64], penalty: f64) -> Result<(f64, Vec<f64>), SimpError> {
    let ke = problem.element_matrices()?;
    compliance_with(problem, &ke, z, penalty)
}

/// [`compliance`] with precomputed unit-density element matrices.
pub fn compliance_with(problem: &FeaProblem, ke: &[Mat6], z: &[f64], penalty: f64) -> Result<(f64, Vec<f64>), SimpError> {
    let m = problem.mesh.elements.len();
    if z.len() != m {
        return Err(SimpError::Length { expected: m, got: z.len() });
    }
    let scales: Vec<f64> = z.iter().map(|&ze| ze.powf(penalty)).collect();
    let (u, _, _) = solve_displacements(problem, ke, Some(&scales))?;
    let mut total = 0.0;
    let mut sens = Vec::with_capacity(m);
    for (e, tri) in problem.mesh.elements.iter().enumerate() {
        let ue: [f64; 6] = std::array::from_fn(|i| u[2 * tri[i / 2] + i % 2]);
        let energy: f64 = (0..6).map(|i| ue[i] * (0..6).map(|j| ke[e][i][j] * ue[j]).sum::<f64>()).sum();
        total += scales[e] * energy;
        sens.push(-penalty * z[e].powf(penalty - 1.0) * energy);
    }
    Ok((total, sens))
}

/// Precomputed cone-filter weights `max(0, r − d_ef) · A_f` over element centroids.
#[derive(Debug, Clone)]
pub struct SensitivityFilter {
    neighbours: Vec<Vec<(usize, f64)>>,
}

impl SensitivityFilter {
    pub fn new(mesh: &TriMesh, radius: f64) -> Self {
        let m = mesh.elements.len();
        if !(radius > 0.0) {
            return Self { neighbours: (0..m).map(|e| vec![(e, 1.0)]).collect() };
        }
        let centroids: Vec<_> = (0..m).map(|e| mesh.centroid(e)).collect();
        let areas: Vec<f64> = (0..m).map(|e| mesh.element_area(e)).collect();
        let (min_x, min_y) = centroids.iter().fold((f64::INFINITY, f64::INFINITY), |(a, b), p| (a.min(p.x), b.min(p.y)));
        let cell = |x: f64, y: f64| (((x - min_x) / radius).floor() as i64, ((y - min_y) / radius).floor() as i64);
        let mut grid: std::collections::BTreeMap<(i64, i64), Vec<usize>> = Default::default();
        for (e, p) in centroids.iter().enumerate() {
            grid.entry(cell(p.x, p.y)).or_default().push(e);
        }
        let neighbours = centroids
            .iter()
            .map(|p| {
                let (cx, cy) = cell(p.x, p.y);
                let mut row = Vec::new();
                for gx in cx - 1..=cx + 1 {
                    for gy in cy - 1..=cy + 1 {
                        for &f in grid.get(&(gx, gy)).into_iter().flatten() {
                            let w = (radius - p.dist(centroids[f])).max(0.0) * areas[f];
                            if w > 0.0 {
                                row.push((f, w));
                            }
                        }
                    }
                }
                row.sort_by_key(|&(f, _)| f);
                row
            })
            .collect();
        Self { neighbours }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.neighbours
            .iter()
            .map(|row| {
                if let [(f, _)] = row[..] {
                    return values[f];
                }
                let (num, den) = row.iter().fold((0.0, 0.0), |(n, d), &(f, w)| (n + w * values[f], d + w));
                num / den
            })
            .collect()
    }
}

/// Distance-weighted average of `sensitivities` over centroids within `radius`.
pub fn sensitivity_filter(mesh: &TriMesh, sensitivities: &[f64], radius: f64) -> Vec<f64> {
    SensitivityFilter::new(mesh, radius).apply(sensitivities)
}

/// Optimality-criteria step. The volume multiplier is bisected (in log space)
/// until the new volume fraction lies in `[V_f − 1e-4, V_f]`.
pub fn oc_update(
    mesh: &TriMesh,
    z: &[f64],
    sensitivities: &[f64],
    config: &SimpConfig,
) -> Result<Vec<f64>, SimpError> {
    let m = mesh.elements.len();
    if z.len() != m || sensitivities.len() != m {
        return Err(SimpError::Length { expected: m, got: z.len().min(sensitivities.len()) });
    }
    let areas: Vec<f64> = (0..m).map(|e| mesh.element_area(e)).collect();
    let total: f64 = areas.iter().sum();
    let update = |lambda: f64| -> Vec<f64> {
        (0..m)
            .map(|e| {
                let lo = (z[e] - config.move_limit).max(config.z_min);
                let hi = (z[e] + config.move_limit).min(1.0);
                let ratio = (-sensitivities[e]).max(0.0) / (lambda * areas[e] / total);
                (z[e] * ratio.powf(config.damping)).clamp(lo, hi)
            })
            .collect()
    };
    let vf = |zz: &[f64]| zz.iter().zip(&areas).map(|(a, b)| a * b).sum::<f64>() / total;
    let target = config.volume_fraction;
    let (mut lo, mut hi) = (-100.0f64, 100.0f64);
    let mut last = f64::NAN;
    for _ in 0..OC_MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let candidate = update(mid.exp());
        last = vf(&candidate);
        if last > target {
            lo = mid;
        } else if last < target - VOLUME_TOLERANCE {
            hi = mid;
        } else {
            return Ok(candidate);
        }
    }
    Err(SimpError::Bisection { iterations: OC_MAX_BISECTIONS, volume_fraction: last })
}

/// Solve → sensitivities → filter → OC until `max_cycles` or the largest
/// density change drops below `change_tolerance`.
pub fn optimize(problem: &FeaProblem, config: &SimpConfig) -> Result<DensityField, SimpError> {
    config.validate()?;
    let mesh = problem.mesh;
    let ke = problem.element_matrices()?;
    let filter = SensitivityFilter::new(mesh, config.filter_radius);
    let mut z = vec![config.volume_fraction; mesh.elements.len()];
    let mut history = Vec::new();
    for _ in 0..config.max_cycles {
        let (c, sens) = compliance_with(problem, &ke, &z, config.penalty)?;
        history.push(c);
        let filtered = filter.apply(&sens);
        let next = oc_update(mesh, &z, &filtered, config)?;
        let change = z.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        z = next;
        if change < config.change_tolerance {
            break;
        }
    }
    let (c, _) = compliance_with(problem, &ke, &z, config.penalty)?;
    history.push(c);
    Ok(DensityField { densities: z, compliance_history: history })
}
