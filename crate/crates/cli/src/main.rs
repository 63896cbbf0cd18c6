//! `unitdist` command-line front end.
//!
//! Exit codes: 0 on success, 1 on a negative verdict (failed verification,
//! no embedding found, inconsistent check), 2 on usage or input errors.
//! Errors are printed to stderr as `{"error": {"kind": ..., "message": ...}}`.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use unitdist::gadgets::{make_rod, moser_spindle};
use unitdist::graph::{classify_embedding, ToleranceConfig, WeightedGraph};
use unitdist::io::{
    coloring_from_json, coloring_to_json, parse_dimacs, read_embedding, read_instance, read_rod, to_json,
    EmbeddingJson, ExpandedJson, GraphJson, InstanceJson, RodJson, SolveReportJson,
};
use unitdist::oracle::{brute_force_3color, end_to_end_check, EndToEndConfig};
use unitdist::reduction::{build_reduction, expand_to_unit};
use unitdist::solver::{solve, InitStrategy, SolveConfig, Verdict};
use unitdist::witness::{extract_coloring, witness_embedding, witness_embedding_expanded};

use manifest::{manifest_path, RunManifest};

#[derive(Parser)]
#[command(name = "unitdist", version, about = "Unit-distance embeddings and the 3-coloring reduction")]
struct Cli {
    /// Worker threads for the solver and verifier (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the Moser spindle rod.
    Spindle {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build a unit-distance rod with length in (min, max).
    Rod {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build the reduction instance of a DIMACS graph.
    Reduce {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(short, long)]
        input: PathBuf,
        /// Replace every non-unit edge by its rod.
        #[arg(long)]
        unit_distance: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Search for an embedding numerically.
    Embed {
        /// Graph, rod or instance JSON.
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3000)]
        max_iters: usize,
        #[arg(long, value_enum, default_value_t = Init::Uniform)]
        init: Init,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check an embedding against a graph.
    Verify {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        embedding: PathBuf,
        /// Also require non-criticality.
        #[arg(long)]
        non_critical: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Coordinates for the reduction instance from a 3-coloring.
    Witness {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Embed the unit-distance expansion instead.
        #[arg(long)]
        unit_distance: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Read a 3-coloring off an embedding of a reduction instance.
    Extract {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        embedding: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive 3-coloring of a DIMACS graph.
    Oracle {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare the oracle with the reduction pipeline.
    Check {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Uniform,
    Buildup,
}

enum Failure {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Core(unitdist::Error),
}

impl From<unitdist::Error> for Failure {
    fn from(e: unitdist::Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn json(&self) -> serde_json::Value {
        let (kind, message) = match self {
            Failure::Usage(m) => ("Usage".to_string(), m.clone()),
            Failure::Io(p, e) => ("Io".to_string(), format!("{}: {e}", p.display())),
            Failure::Core(e) => {
                let debug = format!("{e:?}");
                let kind = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
                (kind, e.to_string())
            }
        };
        serde_json::json!({ "error": { "kind": kind, "message": message } })
    }
}

type Outcome = Result<bool, Failure>;

/// Output sink plus the manifest that goes with it.
struct Run {
    manifest: RunManifest,
    tolerance: ToleranceConfig,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<String, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::Io(path.to_path_buf(), e))?;
        self.manifest.add_input(path, &bytes);
        String::from_utf8(bytes).map_err(|_| Failure::Usage(format!("{} is not UTF-8", path.display())))
    }

    fn seed(&mut self, seed: Option<u64>) -> u64 {
        let s = seed.unwrap_or_else(rand::random);
        if seed.is_none() {
            eprintln!("seed: {s}");
        }
        self.manifest.seed = Some(s);
        s
    }

    fn emit(&self, out: Option<&Path>, text: &str) -> Result<(), Failure> {
        match out {
            Some(p) => {
                fs::write(p, text).map_err(|e| Failure::Io(p.to_path_buf(), e))?;
                let m = manifest_path(p);
                fs::write(&m, to_json(&self.manifest)).map_err(|e| Failure::Io(m, e))
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn tolerance_from_env() -> Result<ToleranceConfig, Failure> {
    let mut t = ToleranceConfig::default();
    for (var, slot) in [
        ("UNITDIST_EPS_LEN", &mut t.eps_len),
        ("UNITDIST_EPS_SEP", &mut t.eps_sep),
        ("UNITDIST_EPS_COLLINEAR", &mut t.eps_collinear),
    ] {
        if let Ok(v) = std::env::var(var) {
            *slot = v.parse().map_err(|_| Failure::Usage(format!("{var}={v:?} is not a number")))?;
        }
    }
    t.validate()?;
    Ok(t)
}

/// Graph, rod or reduction instance JSON, with its dimension if recorded.
fn load_weighted(text: &str) -> Result<(WeightedGraph, Option<usize>), Failure> {
    let value: serde_json::Value = unitdist::io::from_json(text)?;
    if value.get("roles").is_some() {
        let inst = read_instance(text)?;
        let d = inst.d();
        return Ok((inst.h, Some(d)));
    }
    if value.get("rod").is_some() {
        let rod = read_rod(text)?;
        let d = unitdist::io::from_json::<GraphJson>(text)?.dim;
        return Ok((rod.graph, d));
    }
    Ok(unitdist::io::read_graph(text)?)
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let tolerance = tolerance_from_env()?;
    let mut run = Run { manifest: RunManifest::new(&tolerance), tolerance };
    match cli.command {
        Command::Spindle { dim, out } => {
            run.manifest.dimension = Some(dim);
            let rod = moser_spindle(dim)?;
            run.emit(out.as_deref(), &to_json(&RodJson::new(&rod, Some(dim))))?;
            Ok(true)
        }
        Command::Rod { dim, min, max, out } => {
            run.manifest.dimension = Some(dim);
            let rod = make_rod(min, max, dim)?;
            log::info!("rod of length {} with {} vertices", rod.length_value, rod.graph.vertex_count());
            run.emit(out.as_deref(), &to_json(&RodJson::new(&rod, Some(dim))))?;
            Ok(true)
        }
        Command::Reduce { dim, input, unit_distance, out } => {
            run.manifest.dimension = Some(dim);
            let g = read_dimacs(&mut run, &input)?;
            let inst = build_reduction(&g, dim)?;
            let text = if unit_distance {
                to_json(&ExpandedJson::new(&expand_to_unit(&inst)?, dim))
            } else {
                to_json(&InstanceJson::new(&inst))
            };
            run.emit(out.as_deref(), &text)?;
            Ok(true)
        }
        Command::Embed { input, dim, restarts, seed, max_iters, init, out } => {
            let text = run.read(&input)?;
            let (g, recorded) = load_weighted(&text)?;
            let d = dim.or(recorded).ok_or_else(|| Failure::Usage("no dimension recorded; pass --dim".into()))?;
            run.manifest.dimension = Some(d);
            let cfg = SolveConfig {
                restarts,
                max_iters,
                seed: run.seed(seed),
                init: match init {
                    Init::Uniform => InitStrategy::UniformCube,
                    Init::Buildup => InitStrategy::Buildup,
                },
                success_residual: run.tolerance.eps_len,
                ..SolveConfig::default()
            };
            cfg.validate()?;
            let report = solve(&g, d, &cfg);
            run.emit(out.as_deref(), &to_json(&SolveReportJson::new(&report)))?;
            Ok(report.verdict == Verdict::EmbeddingFound)
        }
        Command::Verify { input, embedding, non_critical, out } => {
            let text = run.read(&input)?;
            let (g, _) = load_weighted(&text)?;
            let e = read_embedding(&run.read(&embedding)?)?;
            run.manifest.dimension = Some(e.dim());
            let report = classify_embedding(&g, &e, &run.tolerance)?;
            run.emit(out.as_deref(), &to_json(&report))?;
            Ok(report.is_embedding && (!non_critical || report.is_non_critical))
        }
        Command::Witness { input, coloring, dim, seed, unit_distance, out } => {
            run.manifest.dimension = Some(dim);
            let g = read_dimacs(&mut run, &input)?;
            let c = coloring_from_json(&run.read(&coloring)?)?;
            let seed = run.seed(seed);
            let inst = build_reduction(&g, dim)?;
            let e = if unit_distance {
                witness_embedding_expanded(&inst, &expand_to_unit(&inst)?, &c, seed, &run.tolerance)?
            } else {
                witness_embedding(&inst, &c, seed, &run.tolerance)?
            };
            run.emit(out.as_deref(), &to_json(&EmbeddingJson::new(&e)))?;
            Ok(true)
        }
        Command::Extract { input, embedding, out } => {
            let inst = read_instance(&run.read(&input)?)?;
            run.manifest.dimension = Some(inst.d());
            let e = read_embedding(&run.read(&embedding)?)?;
            let c = extract_coloring(&inst, &e, &run.tolerance)?;
            run.emit(out.as_deref(), &coloring_to_json(&c))?;
            Ok(true)
        }
        Command::Oracle { input, out } => {
            let g = read_dimacs(&mut run, &input)?;
            let r = brute_force_3color(&g)?;
            run.emit(out.as_deref(), &to_json(&r))?;
            Ok(true)
        }
        Command::Check { input, dim, restarts, seed, out } => {
            run.manifest.dimension = Some(dim);
            let g = read_dimacs(&mut run, &input)?;
            let seed = run.seed(seed);
            let base = EndToEndConfig::default();
            let cfg = EndToEndConfig {
                seed,
                tolerance: run.tolerance.clone(),
                solve: SolveConfig { restarts, ..base.solve },
            };
            let report = end_to_end_check(&g, dim, &cfg)?;
            run.emit(out.as_deref(), &to_json(&CheckOutput::new(&report)))?;
            Ok(report.consistent())
        }
    }
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    summary: String,
    #[serde(flatten)]
    report: &'a unitdist::oracle::EndToEndReport,
}

impl<'a> CheckOutput<'a> {
    fn new(report: &'a unitdist::oracle::EndToEndReport) -> Self {
        let colorable = if report.oracle.colorable { "3-colorable" } else { "not 3-colorable" };
        let status = if report.consistent() { "consistent" } else { "INCONSISTENT" };
        Self { summary: format!("{colorable}; pipeline {status}"), report }
    }
}

fn read_dimacs(run: &mut Run, path: &Path) -> Result<unitdist::graph::SimpleGraph, Failure> {
    let parsed = parse_dimacs(&run.read(path)?)?;
    for w in &parsed.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(parsed.graph)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprintln!("{}", Failure::Usage(e.to_string()).json());
            return ExitCode::from(2);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("{}", f.json());
            ExitCode::from(2)
        }
    }
}
