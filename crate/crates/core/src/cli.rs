//! Command-line front end. Every subcommand shares one `key = value` settings
//! namespace (see [`DatasetConfig::set`]) filled from defaults, then `--config`,
//! then `--set`, then dedicated flags.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::beamgen::{design_to_polygon, sample_design, BeamDesign};
use crate::boge::build_graph;
use crate::dataset::{default_out_dir, generate_dataset, sample_seed, DatasetConfig};
use crate::fea::{solve, FeaProblem};
use crate::mesher::{mesh_quality, triangulate, TriMesh};
use crate::metrics::{outlier_report, read_values, EPSILON};
use crate::render::render_field;
use crate::simp::optimize;

#[derive(Debug, Parser)]
#[command(name = "boge", version, about = "Cantilever FEA dataset pipeline with boundary oriented graph embedding")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Plain-text `key = value` settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed for every stochastic stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory (default: $BOGE_OUT_DIR or ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LoadArgs {
    /// Load magnitude, N.
    #[arg(long)]
    load: f64,
    /// Load direction, radians counter-clockwise from +x.
    #[arg(long)]
    angle: f64,
}

impl LoadArgs {
    fn force(&self) -> [f64; 2] {
        [self.load * self.angle.cos(), self.load * self.angle.sin()]
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one beam design as JSON.
    GenDesign {
        #[arg(long)]
        family: u8,
        /// Sample index within the family.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Triangulate a design.
    Mesh {
        #[arg(long)]
        design: PathBuf,
        /// Target element size, mm.
        #[arg(long)]
        size: Option<f64>,
    },
    /// Plane-elasticity solve with the load at the mesh's load node.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// SIMP topology optimization.
    Optimize {
        #[arg(long)]
        mesh: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Encode a mesh and per-element target as one JSON graph line.
    Embed {
        #[arg(long)]
        mesh: PathBuf,
        /// Solution, density, or plain list of per-element values.
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        load: LoadArgs,
        /// conventional | boge
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        max_hops: Option<usize>,
    },
    /// Generate a full dataset directory.
    Dataset {
        /// Family ids, e.g. `1..9` or `1,3,5`.
        #[arg(long)]
        families: Option<String>,
        #[arg(long)]
        per_family: Option<usize>,
        /// stress | topo
        #[arg(long)]
        target: Option<String>,
        /// Worker threads (0 = all cores); never changes output bytes.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare predictions with ground truth.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = EPSILON)]
        eps: f64,
    },
    /// Render a per-element field as SVG.
    Render {
        #[arg(long)]
        mesh: PathBuf,
        /// Solution, density, or plain list of per-element values.
        #[arg(long)]
        field: PathBuf,
        #[arg(long, requires = "max")]
        min: Option<f64>,
        #[arg(long, requires = "min")]
        max: Option<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenDesign { .. } => "gen-design",
            Command::Mesh { .. } => "mesh",
            Command::Solve { .. } => "solve",
            Command::Optimize { .. } => "optimize",
            Command::Embed { .. } => "embed",
            Command::Dataset { .. } => "dataset",
            Command::Metrics { .. } => "metrics",
            Command::Render { .. } => "render",
        }
    }

    fn default_output(&self) -> &'static str {
        match self {
            Command::GenDesign { .. } => "design.json",
            Command::Mesh { .. } => "mesh.txt",
            Command::Solve { .. } => "solution.txt",
            Command::Optimize { .. } => "density.txt",
            Command::Embed { .. } => "sample.jsonl",
            Command::Dataset { .. } => "",
            Command::Metrics { .. } => "metrics.json",
            Command::Render { .. } => "field.svg",
        }
    }
}

enum Failure {
    Usage(String),
    Pipeline { kind: &'static str, message: String },
}

fn pipeline<E: std::fmt::Display>(kind: &'static str) -> impl Fn(E) -> Failure {
    move |e| Failure::Pipeline { kind, message: e.to_string() }
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

/// Parse `argv` (including the program name) and execute. Returns the exit status:
/// 0 success, 1 pipeline failure, 2 usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            if code == 2 {
                eprintln!("{}", error_line("usage", &e.kind().to_string()));
            }
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", error_line("usage", &msg));
            2
        }
        Err(Failure::Pipeline { kind, message }) => {
            eprintln!("{}", error_line(kind, &message));
            1
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<DatasetConfig, Failure> {
    let mut config = DatasetConfig::default();
    if let Some(path) = &cli.common.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("{}:{}: expected `key = value`", path.display(), idx + 1)))?;
            config
                .set(k.trim(), v.trim())
                .map_err(|e| Failure::Usage(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        }
    }
    let mut flags: Vec<(String, String)> = Vec::new();
    for kv in &cli.common.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Usage(format!("--set expects key=value, got `{kv}`")))?;
        flags.push((k.trim().into(), v.trim().into()));
    }
    if let Some(seed) = cli.common.seed {
        flags.push(("seed".into(), seed.to_string()));
    }
    match &cli.command {
        Command::Mesh { size: Some(s), .. } => flags.push(("mesh_size".into(), s.to_string())),
        Command::Embed { mode, max_hops, .. } => {
            if let Some(m) = mode {
                flags.push(("embedding".into(), m.clone()));
            }
            if let Some(h) = max_hops {
                flags.push(("max_hops".into(), h.to_string()));
            }
        }
        Command::Dataset { families, per_family, target, jobs } => {
            if let Some(f) = families {
                flags.push(("families".into(), f.clone()));
            }
            if let Some(n) = per_family {
                flags.push(("per_family".into(), n.to_string()));
            }
            if let Some(t) = target {
                flags.push(("target".into(), t.clone()));
            }
            if let Some(j) = jobs {
                flags.push(("jobs".into(), j.to_string()));
            }
        }
        _ => {}
    }
    for (k, v) in flags {
        config.set(&k, &v).map_err(Failure::Usage)?;
    }
    Ok(config)
}

fn output_path(cli: &Cli) -> PathBuf {
    match &cli.common.out {
        Some(p) => p.clone(),
        None => {
            let dir = default_out_dir();
            match cli.command.default_output() {
                "" => dir,
                name => dir.join(name),
            }
        }
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(pipeline("io"))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::Pipeline { kind: "io", message: format!("{}: {e}", path.display()) })?;
    eprintln!("{}", serde_json::json!({ "event": "wrote", "path": path.display().to_string() }));
    Ok(())
}

fn read_mesh(path: &Path) -> Result<TriMesh, Failure> {
    TriMesh::read(path).map_err(|e| Failure::Pipeline { kind: "mesh", message: format!("{}: {e}", path.display()) })
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let config = resolve_config(&cli)?;
    let out = output_path(&cli);
    eprintln!(
        "{}",
        serde_json::json!({
            "event": "config",
            "subcommand": cli.command.name(),
            "out": out.display().to_string(),
            "settings": config.to_config_lines(),
        })
    );
    match &cli.command {
        Command::GenDesign { family, index } => {
            let seed = sample_seed(config.seed, *family, *index, 0);
            let design = sample_design(*family, seed, &config.ranges).map_err(pipeline("design"))?;
            let json = serde_json::to_string_pretty(&design).map_err(pipeline("io"))?;
            write_output(&out, format!("{json}\n").as_bytes())
        }
        Command::Mesh { design, .. } => {
            let text = fs::read_to_string(design).map_err(pipeline("io"))?;
            let design: BeamDesign = serde_json::from_str(&text).map_err(pipeline("design"))?;
            let domain = design_to_polygon(&design).map_err(pipeline("design"))?;
            let mesh = triangulate(&domain, config.mesh_size).map_err(pipeline("mesh"))?;
            println!("{}", serde_json::to_string(&mesh_quality(&mesh)).map_err(pipeline("io"))?);
            write_output(&out, mesh.to_text().as_bytes())
        }
        Command::Solve { mesh, load } => {
            let mesh = read_mesh(mesh)?;
            let problem = FeaProblem::cantilever(&mesh, config.material, load.force()).map_err(pipeline("fea"))?;
            let sol = solve(&problem).map_err(pipeline("fea"))?;
            write_output(&out, sol.to_text().as_bytes())
        }
        Command::Optimize { mesh, load } => {
            let mesh = read_mesh(mesh)?;
            let problem = FeaProblem::cantilever(&mesh, config.material, load.force()).map_err(pipeline("fea"))?;
            let field = optimize(&problem, &config.simp).map_err(pipeline("simp"))?;
            write_output(&out, field.to_text().as_bytes())
        }
        Command::Embed { mesh, target, load, .. } => {
            let mesh = read_mesh(mesh)?;
            let values = read_values(target).map_err(pipeline("io"))?;
            let mut graph = build_graph(&mesh, load.force(), &values, &config.graph).map_err(pipeline("embed"))?;
            graph.id = target.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            let mut line = serde_json::to_vec(&graph).map_err(pipeline("io"))?;
            line.push(b'\n');
            write_output(&out, &line)
        }
        Command::Dataset { .. } => {
            let manifest = generate_dataset(&config, &out).map_err(pipeline("dataset"))?;
            println!(
                "{}",
                serde_json::json!({
                    "samples": manifest.records.len(),
                    "splits": manifest.split_counts,
                    "statistics": manifest.statistics,
                    "out": out.display().to_string(),
                })
            );
            Ok(())
        }
        Command::Metrics { pred, truth, eps } => {
            let p = read_values(pred).map_err(pipeline("io"))?;
            let t = read_values(truth).map_err(pipeline("io"))?;
            let report = outlier_report(&p, &t, *eps).map_err(pipeline("metrics"))?;
            let json = serde_json::to_string(&report).map_err(pipeline("io"))?;
            println!("{json}");
            if cli.common.out.is_some() {
                write_output(&out, format!("{json}\n").as_bytes())?;
            }
            Ok(())
        }
        Command::Render { mesh, field, min, max } => {
            let mesh = read_mesh(mesh)?;
            let values = read_values(field).map_err(pipeline("io"))?;
            let range = min.zip(*max);
            let svg = render_field(&mesh, &values, range).map_err(pipeline("render"))?;
            write_output(&out, svg.as_bytes())
        }
    }
}
