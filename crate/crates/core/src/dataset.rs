//! End-to-end dataset generation: design → mesh → solve or optimize → graph.
//!
//! Every sample is a pure function of `(seed, family, index, attempt)`, workers
//! only compute, and all files are written afterwards in sample order, so the
//! output bytes do not depend on the number of jobs.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamgen::{design_to_polygon, sample_design, BeamDesign, ParamRanges, NUM_FAMILIES};
use crate::boge::{build_graph, EmbeddingMode, GraphOptions, GraphSample, Normalization};
use crate::fea::{solve, FeaProblem, Material, PlaneMode};
use crate::mesher::{triangulate, TriMesh};
use crate::render::render_field;
use crate::simp::{optimize, SimpConfig};

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid dataset config: {0}")]
    Config(String),
    #[error("sample {id} failed after {attempts} attempts: {last}")]
    Exhausted { id: String, attempts: usize, last: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Per-element von Mises stress, MPa.
    #[default]
    Stress,
    /// Per-element SIMP density.
    Topo,
}

impl std::str::FromStr for TargetKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stress" => Ok(Self::Stress),
            "topo" => Ok(Self::Topo),
            _ => Err(format!("unknown target `{s}` (expected stress|topo)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub seed: u64,
    pub families: Vec<u8>,
    pub per_family: usize,
    pub target: TargetKind,
    pub graph: GraphOptions,
    /// Target element edge length, mm.
    pub mesh_size: f64,
    /// train / val / test.
    pub split: [f64; 3],
    /// Extra attempts per sample after a pipeline failure.
    pub retries: usize,
    pub material: Material,
    pub simp: SimpConfig,
    pub ranges: ParamRanges,
    /// Write `fields/{id}.svg`.
    pub render: bool,
    /// Write `meshes/{id}.mesh` plus the solution or density file next to it.
    pub save_meshes: bool,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            families: (1..=NUM_FAMILIES).collect(),
            per_family: 60,
            target: TargetKind::Stress,
            graph: GraphOptions::default(),
            mesh_size: 1.0,
            split: [0.7, 0.15, 0.15],
            retries: 20,
            material: Material::STEEL,
            simp: SimpConfig::default(),
            ranges: ParamRanges::default(),
            render: false,
            save_meshes: false,
            jobs: 0,
        }
    }
}

fn parse_families(value: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    for part in value.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()) {
        let ids = match part.split_once("..") {
            Some((a, b)) => {
                let a: u8 = a.parse().map_err(|_| format!("bad family range `{part}`"))?;
                let b: u8 = b.trim_start_matches('=').parse().map_err(|_| format!("bad family range `{part}`"))?;
                (a..=b).collect::<Vec<_>>()
            }
            None => vec![part.parse().map_err(|_| format!("bad family id `{part}`"))?],
        };
        out.extend(ids);
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() || out.iter().any(|&f| f == 0 || f > NUM_FAMILIES) {
        return Err(format!("families must lie in 1..={NUM_FAMILIES}"));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.trim().parse().map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("`{key}`: expected true|false, got `{value}`")),
    }
}

impl DatasetConfig {
    /// Apply one `key = value` setting. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "families" => self.families = parse_families(v)?,
            "per_family" => self.per_family = parse_num(key, v)?,
            "target" => self.target = v.parse()?,
            "embedding" => self.graph.mode = v.parse()?,
            "max_hops" => self.graph.max_hops = parse_num(key, v)?,
            "link_boundary_pairs" => self.graph.link_boundary_pairs = parse_bool(key, v)?,
            "include_material" => {
                self.graph.material = parse_bool(key, v)?
                    .then_some([self.material.youngs_modulus, self.material.poisson_ratio])
            }
            "length_scale" => self.graph.norm.length_scale = parse_num(key, v)?,
            "force_scale" => self.graph.norm.force_scale = parse_num(key, v)?,
            "modulus_scale" => self.graph.norm.modulus_scale = parse_num(key, v)?,
            "mesh_size" => self.mesh_size = parse_num(key, v)?,
            "split" => {
                let parts: Vec<f64> = v.split_whitespace().map(|t| parse_num(key, t)).collect::<Result<_, _>>()?;
                self.split = parts.try_into().map_err(|_| "`split` expects `train val test`".to_string())?;
            }
            "retries" => self.retries = parse_num(key, v)?,
            "youngs_modulus" => self.material.youngs_modulus = parse_num(key, v)?,
            "poisson_ratio" => self.material.poisson_ratio = parse_num(key, v)?,
            "thickness" => self.material.thickness = parse_num(key, v)?,
            "plane" => {
                self.material.plane = match v {
                    "stress" => PlaneMode::Stress,
                    "strain" => PlaneMode::Strain,
                    _ => return Err(format!("`plane`: expected stress|strain, got `{v}`")),
                }
            }
            "volume_fraction" => self.simp.volume_fraction = parse_num(key, v)?,
            "penalty" => self.simp.penalty = parse_num(key, v)?,
            "max_cycles" => self.simp.max_cycles = parse_num(key, v)?,
            "z_min" => self.simp.z_min = parse_num(key, v)?,
            "filter_radius" => self.simp.filter_radius = parse_num(key, v)?,
            "move_limit" => self.simp.move_limit = parse_num(key, v)?,
            "render" => self.render = parse_bool(key, v)?,
            "save_meshes" => self.save_meshes = parse_bool(key, v)?,
            "jobs" => self.jobs = parse_num(key, v)?,
            _ => return self.ranges.set(key, v),
        }
        if key == "youngs_modulus" || key == "poisson_ratio" {
            if let Some(m) = &mut self.graph.material {
                *m = [self.material.youngs_modulus, self.material.poisson_ratio];
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |s: &str| Err(DatasetError::Config(s.to_string()));
        if self.per_family == 0 {
            return bad("per_family must be positive");
        }
        if self.families.is_empty() {
            return bad("no families selected");
        }
        if !(self.mesh_size > 0.0) {
            return bad("mesh_size must be positive");
        }
        if self.split.iter().any(|&r| !(r >= 0.0)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("split ratios must be non-negative and sum to 1");
        }
        if self.graph.max_hops == 0 {
            return bad("max_hops must be at least 1");
        }
        let n = &self.graph.norm;
        if !(n.length_scale > 0.0 && n.force_scale > 0.0 && n.modulus_scale > 0.0) {
            return bad("normalization scales must be positive");
        }
        self.material.validate().map_err(|e| DatasetError::Config(e.to_string()))?;
        if self.target == TargetKind::Topo {
            self.simp.validate().map_err(|e| DatasetError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Fully resolved settings as sorted `key = value` lines.
    pub fn to_config_lines(&self) -> Vec<String> {
        let fam: Vec<String> = self.families.iter().map(u8::to_string).collect();
        let mode = match self.graph.mode {
            EmbeddingMode::Conventional => "conventional",
            EmbeddingMode::Boge => "boge",
        };
        let mut out = vec![
            format!("seed = {}", self.seed),
            format!("families = {}", fam.join(",")),
            format!("per_family = {}", self.per_family),
            format!("target = {}", if self.target == TargetKind::Stress { "stress" } else { "topo" }),
            format!("embedding = {mode}"),
            format!("max_hops = {}", self.graph.max_hops),
            format!("link_boundary_pairs = {}", self.graph.link_boundary_pairs),
            format!("include_material = {}", self.graph.material.is_some()),
            format!("length_scale = {}", self.graph.norm.length_scale),
            format!("force_scale = {}", self.graph.norm.force_scale),
            format!("modulus_scale = {}", self.graph.norm.modulus_scale),
            format!("mesh_size = {}", self.mesh_size),
            format!("split = {} {} {}", self.split[0], self.split[1], self.split[2]),
            format!("retries = {}", self.retries),
            format!("youngs_modulus = {}", self.material.youngs_modulus),
            format!("poisson_ratio = {}", self.material.poisson_ratio),
            format!("thickness = {}", self.material.thickness),
            format!("plane = {}", if self.material.plane == PlaneMode::Stress { "stress" } else { "strain" }),
            format!("volume_fraction = {}", self.simp.volume_fraction),
            format!("penalty = {}", self.simp.penalty),
            format!("max_cycles = {}", self.simp.max_cycles),
            format!("z_min = {}", self.simp.z_min),
            format!("filter_radius = {}", self.simp.filter_radius),
            format!("move_limit = {}", self.simp.move_limit),
            format!("render = {}", self.render),
            format!("save_meshes = {}", self.save_meshes),
        ];
        out.extend(self.ranges.to_config_lines());
        out
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `sample_seed = hash(seed, family, index, attempt)`: splitmix64 folded over the four words.
pub fn sample_seed(seed: u64, family: u8, index: usize, attempt: usize) -> u64 {
    [family as u64, index as u64, attempt as u64].into_iter().fold(splitmix64(seed), |h, w| splitmix64(h ^ w))
}

pub fn sample_id(family: u8, index: usize) -> String {
    format!("f{family}-{index:05}")
}

/// Split assignment of each of `n` samples of one family: the first
/// `round(train·n)` go to train, the remainder is divided between val and test
/// in proportion, with exact ties alternating by family parity.
pub fn split_counts(n: usize, ratios: [f64; 3], family: u8) -> [usize; 3] {
    let train = ((ratios[0] * n as f64).round() as usize).min(n);
    let rest = n - train;
    let tail = ratios[1] + ratios[2];
    let exact = if tail > 0.0 { rest as f64 * ratios[1] / tail } else { 0.0 };
    let val = if (exact - exact.floor() - 0.5).abs() < 1e-9 {
        if family % 2 == 1 { exact.ceil() } else { exact.floor() }
    } else {
        exact.round()
    } as usize;
    [train, val.min(rest), rest - val.min(rest)]
}

/// Everything produced for one sample.
#[derive(Debug, Clone)]
pub struct SampleOutput {
    pub family: u8,
    pub index: usize,
    pub seed: u64,
    pub attempts: usize,
    pub failures: Vec<String>,
    pub design: BeamDesign,
    pub mesh: TriMesh,
    pub graph: GraphSample,
    /// Solution or density file text.
    pub field_text: String,
}

/// Run the pipeline for one design seed.
pub fn run_pipeline(
    config: &DatasetConfig,
    family: u8,
    seed: u64,
) -> Result<(BeamDesign, TriMesh, GraphSample, String), String> {
    let design = sample_design(family, seed, &config.ranges).map_err(|e| format!("design: {e}"))?;
    let domain = design_to_polygon(&design).map_err(|e| format!("domain: {e}"))?;
    let mesh = triangulate(&domain, config.mesh_size).map_err(|e| format!("mesh: {e}"))?;
    let force = design.load.force();
    let problem = FeaProblem::cantilever(&mesh, config.material, force).map_err(|e| format!("fea: {e}"))?;
    let (target, text) = match config.target {
        TargetKind::Stress => {
            let sol = solve(&problem).map_err(|e| format!("fea: {e}"))?;
            let norm_f = force[0].hypot(force[1]);
            if !(sol.residual_norm <= 1e-8 * norm_f) {
                return Err(format!("fea: residual {} exceeds tolerance", sol.residual_norm));
            }
            let text = sol.to_text();
            (sol.von_mises, text)
        }
        TargetKind::Topo => {
            let field = optimize(&problem, &config.simp).map_err(|e| format!("simp: {e}"))?;
            let text = field.to_text();
            (field.densities, text)
        }
    };
    let mut graph = build_graph(&mesh, force, &target, &config.graph).map_err(|e| format!("embed: {e}"))?;
    graph.family = family;
    Ok((design, mesh, graph, text))
}

/// One sample with seed-derived retries.
pub fn generate_sample(config: &DatasetConfig, family: u8, index: usize) -> Result<SampleOutput, DatasetError> {
    let id = sample_id(family, index);
    let mut failures = Vec::new();
    for attempt in 0..=config.retries {
        let seed = sample_seed(config.seed, family, index, attempt);
        match run_pipeline(config, family, seed) {
            Ok((design, mesh, mut graph, field_text)) => {
                graph.id = id;
                return Ok(SampleOutput { family, index, seed, attempts: attempt + 1, failures, design, mesh, graph, field_text });
            }
            Err(e) => {
                eprintln!("{{\"event\":\"sample_retry\",\"id\":\"{id}\",\"attempt\":{attempt},\"error\":{}}}", serde_json::Value::String(e.clone()));
                failures.push(e);
            }
        }
    }
    Err(DatasetError::Exhausted { id, attempts: config.retries + 1, last: failures.pop().unwrap_or_default() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub family: u8,
    pub index: usize,
    pub seed: u64,
    pub attempts: usize,
    pub split: String,
    /// Byte offset of the sample's line in `samples_{split}.jsonl`.
    pub offset: u64,
    pub length: u64,
    pub num_vertices: usize,
    pub num_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub id: String,
    pub attempt: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetStatistics {
    /// Number of per-element target values.
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub mean_element_count: f64,
}

impl TargetStatistics {
    /// Population statistics over every element of every graph.
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a GraphSample>) -> Self {
        let mut acc = StatisticsAccumulator::default();
        for g in graphs {
            acc.add(g);
        }
        acc.finish()
    }
}

/// Running sums behind [`TargetStatistics`].
#[derive(Debug, Clone, Default)]
pub struct StatisticsAccumulator {
    count: usize,
    sum: f64,
    sumsq: f64,
    min: Option<f64>,
    max: Option<f64>,
    graphs: usize,
    elements: usize,
}

impl StatisticsAccumulator {
    pub fn add(&mut self, g: &GraphSample) {
        self.graphs += 1;
        self.elements += g.num_vertices;
        for &t in &g.target {
            self.count += 1;
            self.sum += t;
            self.sumsq += t * t;
            self.min = Some(self.min.map_or(t, |m| m.min(t)));
            self.max = Some(self.max.map_or(t, |m| m.max(t)));
        }
    }

    pub fn finish(&self) -> TargetStatistics {
        let n = self.count;
        let mean = if n > 0 { self.sum / n as f64 } else { 0.0 };
        let var = if n > 0 { (self.sumsq / n as f64 - mean * mean).max(0.0) } else { 0.0 };
        TargetStatistics {
            count: n,
            mean,
            std: var.sqrt(),
            min: self.min.unwrap_or(0.0),
            max: self.max.unwrap_or(0.0),
            mean_element_count: if self.graphs > 0 { self.elements as f64 / self.graphs as f64 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub target: TargetKind,
    pub embedding: EmbeddingMode,
    pub max_hops: usize,
    pub family_counts: std::collections::BTreeMap<String, usize>,
    pub split_ratios: [f64; 3],
    pub split_counts: std::collections::BTreeMap<String, usize>,
    pub norm: Normalization,
    pub statistics: TargetStatistics,
    pub config: Vec<String>,
    pub records: Vec<SampleRecord>,
    pub failures: Vec<FailureRecord>,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Generate every sample, then write `samples_{split}.jsonl`, `manifest.json`
/// and the optional per-sample files under `out_dir`.
pub fn generate_dataset(config: &DatasetConfig, out_dir: &Path) -> Result<DatasetManifest, DatasetError> {
    config.validate()?;
    let tasks: Vec<(u8, usize)> = config
        .families
        .iter()
        .flat_map(|&f| (0..config.per_family).map(move |i| (f, i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| DatasetError::Config(format!("thread pool: {e}")))?;
    let mut writer = DatasetWriter::create(config, out_dir)?;
    // Bounded batches keep memory flat; output order is task order regardless of `jobs`.
    for chunk in tasks.chunks(4 * pool.current_num_threads()) {
        let results: Vec<Result<SampleOutput, DatasetError>> =
            pool.install(|| chunk.par_iter().map(|&(f, i)| generate_sample(config, f, i)).collect());
        for r in results {
            writer.push(&r?)?;
        }
    }
    writer.finish()
}

/// Serialize already generated samples (in task order).
pub fn write_dataset(config: &DatasetConfig, samples: &[SampleOutput], out_dir: &Path) -> Result<DatasetManifest, DatasetError> {
    let mut writer = DatasetWriter::create(config, out_dir)?;
    for s in samples {
        writer.push(s)?;
    }
    writer.finish()
}

/// Incremental dataset output: split files, optional per-sample files, and
/// the manifest written by [`DatasetWriter::finish`].
pub struct DatasetWriter<'c> {
    config: &'c DatasetConfig,
    out_dir: PathBuf,
    splits: Vec<(PathBuf, io::BufWriter<fs::File>, u64)>,
    records: Vec<SampleRecord>,
    failures: Vec<FailureRecord>,
    family_counts: std::collections::BTreeMap<String, usize>,
    stats: StatisticsAccumulator,
}

impl<'c> DatasetWriter<'c> {
    pub fn create(config: &'c DatasetConfig, out_dir: &Path) -> Result<Self, DatasetError> {
        fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        for (enabled, name) in [(config.render, "fields"), (config.save_meshes, "meshes")] {
            if enabled {
                let dir = out_dir.join(name);
                fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            }
        }
        let splits = SPLITS
            .iter()
            .map(|name| {
                let path = out_dir.join(format!("samples_{name}.jsonl"));
                let f = fs::File::create(&path).map_err(io_err(&path))?;
                Ok((path, io::BufWriter::new(f), 0))
            })
            .collect::<Result<_, DatasetError>>()?;
        Ok(Self {
            config,
            out_dir: out_dir.to_path_buf(),
            splits,
            records: Vec::new(),
            failures: Vec::new(),
            family_counts: Default::default(),
            stats: StatisticsAccumulator::default(),
        })
    }

    pub fn push(&mut self, s: &SampleOutput) -> Result<(), DatasetError> {
        let config = self.config;
        let counts = split_counts(config.per_family, config.split, s.family);
        let split = if s.index < counts[0] {
            0
        } else if s.index < counts[0] + counts[1] {
            1
        } else {
            2
        };
        let mut line = serde_json::to_vec(&s.graph)?;
        line.push(b'\n');
        let (path, file, offset) = &mut self.splits[split];
        file.write_all(&line).map_err(io_err(path))?;
        self.records.push(SampleRecord {
            id: s.graph.id.clone(),
            family: s.family,
            index: s.index,
            seed: s.seed,
            attempts: s.attempts,
            split: SPLITS[split].to_string(),
            offset: *offset,
            length: line.len() as u64,
            num_vertices: s.graph.num_vertices,
            num_edges: s.graph.edges.len(),
        });
        *offset += line.len() as u64;
        self.failures.extend(s.failures.iter().enumerate().map(|(attempt, e)| FailureRecord {
            id: s.graph.id.clone(),
            attempt,
            error: e.clone(),
        }));
        *self.family_counts.entry(s.family.to_string()).or_insert(0) += 1;
        self.stats.add(&s.graph);

        if config.render {
            let svg = render_field(&s.mesh, &s.graph.target, None).map_err(|e| DatasetError::Config(e.to_string()))?;
            let path = self.out_dir.join("fields").join(format!("{}.svg", s.graph.id));
            fs::write(&path, svg).map_err(io_err(&path))?;
        }
        if config.save_meshes {
            let dir = self.out_dir.join("meshes");
            let ext = if config.target == TargetKind::Stress { "sol" } else { "density" };
            let path = dir.join(format!("{}.mesh", s.graph.id));
            fs::write(&path, s.mesh.to_text()).map_err(io_err(&path))?;
            let path = dir.join(format!("{}.{ext}", s.graph.id));
            fs::write(&path, &s.field_text).map_err(io_err(&path))?;
            let path = dir.join(format!("{}.design.json", s.graph.id));
            fs::write(&path, serde_json::to_string_pretty(&s.design)?).map_err(io_err(&path))?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<DatasetManifest, DatasetError> {
        let config = self.config;
        for (path, mut file, _) in self.splits {
            file.flush().map_err(io_err(&path))?;
        }
        let split_counts = SPLITS
            .iter()
            .map(|name| (name.to_string(), self.records.iter().filter(|r| r.split == *name).count()))
            .collect();
        let manifest = DatasetManifest {
            seed: config.seed,
            target: config.target,
            embedding: config.graph.mode,
            max_hops: if config.graph.mode == EmbeddingMode::Boge { config.graph.max_hops } else { 1 },
            family_counts: self.family_counts,
            split_ratios: config.split,
            split_counts,
            norm: config.graph.norm,
            statistics: self.stats.finish(),
            config: config.to_config_lines(),
            records: self.records,
            failures: self.failures,
        };
        let path = self.out_dir.join("manifest.json");
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        serde_json::to_writer_pretty(&mut f, &manifest)?;
        f.write_all(b"\n").map_err(io_err(&path))?;
        Ok(manifest)
    }
}

/// Read every sample of one split file.
pub fn read_split(path: &Path) -> Result<Vec<GraphSample>, DatasetError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines().map(|l| serde_json::from_str(l).map_err(DatasetError::from)).collect()
}

/// Default output directory: `$BOGE_OUT_DIR` or `./out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("BOGE_OUT_DIR").map_or_else(|| PathBuf::from("out"), PathBuf::from)
}
