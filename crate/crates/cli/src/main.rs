//! Command-line front end: simulation, intersection repair, injective normal flow and path certification.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use twoway_core::geometry::obj::{read_obj, write_obj, ObjData};
use twoway_core::geometry::MeshBuilder;
use twoway_core::normal_flow::{NormalFlow, NormalFlowConfig};
use twoway_core::scene::SceneConfig;
use twoway_core::testkit::{certify_path, CertifyReport};
use twoway_core::{repair, MeshState, ResolveConfig, ResolveStats, Vec3};

/// Environment variable holding the coloring seed.
const SEED_VAR: &str = "TWOWAY_SEED";
/// Areal density given to meshes loaded from bare OBJ files.
const OBJ_DENSITY: f64 = 0.2;

#[derive(Parser)]
#[command(name = "twoway", version, about = "Certified intersection-free resolve for meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a JSON scene and writes one OBJ per frame plus stats.csv.
    Simulate {
        config: PathBuf,
        /// Certify every resolve path with the CCD oracle.
        #[arg(long)]
        certify: bool,
    },
    /// Moves the intersection-free state X toward the target Y and writes the result.
    Repair {
        x: PathBuf,
        y: PathBuf,
        out: PathBuf,
        /// Remainder tolerance.
        #[arg(long)]
        eps: Option<f64>,
        /// Forward step limit.
        #[arg(long)]
        limit: Option<usize>,
        /// Backward solver: pgs, jacobi, al20 or al100.
        #[arg(long)]
        solver: Option<String>,
        /// Certify the resolve path with the CCD oracle.
        #[arg(long)]
        certify: bool,
    },
    /// Flows a closed mesh along its normals while keeping it injective.
    Normalflow {
        input: PathBuf,
        /// Flow speed in metres per iteration.
        #[arg(long, default_value_t = 5e-4)]
        beta: f64,
        /// Smoothing intensity in [0, 1].
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        /// Flow inward.
        #[arg(long)]
        negative: bool,
        /// Output prefix; iterate k is written to `<prefix>_<k>.obj`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Certify every resolve path with the CCD oracle.
        #[arg(long)]
        certify: bool,
    },
    /// Certifies the straight-line motion between consecutive OBJ frames in a directory.
    Certify { frames: PathBuf },
}

/// Failure kinds mapped to exit codes.
enum Failure {
    /// Input, IO or validation error.
    Input(anyhow::Error),
    /// The CCD oracle found certain crossings.
    Certification(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<twoway_core::Error> for Failure {
    fn from(e: twoway_core::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, certify } => simulate(&config, certify),
        Command::Repair { x, y, out, eps, limit, solver, certify } => {
            run_repair(&x, &y, &out, eps, limit, solver, certify)
        }
        Command::Normalflow { input, beta, alpha, iters, negative, out, certify } => {
            let beta = if negative { -beta.abs() } else { beta };
            normalflow(&input, NormalFlowConfig { beta, alpha, iterations: iters }, out, certify)
        }
        Command::Certify { frames } => certify_frames(&frames),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Certification(msg)) => {
            eprintln!("certification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn seed_override(cfg: &mut ResolveConfig) -> Result<()> {
    if let Ok(s) = std::env::var(SEED_VAR) {
        cfg.seed = s.trim().parse().with_context(|| format!("{SEED_VAR} must be an unsigned integer, got '{s}'"))?;
    }
    Ok(())
}

fn load_obj(path: &Path) -> Result<ObjData> {
    read_obj(path).with_context(|| format!("reading {}", path.display()))
}

fn mesh_from_obj(obj: &ObjData) -> Result<MeshState> {
    let mut b = MeshBuilder::new();
    b.add(&obj.positions, &obj.triangles, &obj.segments, OBJ_DENSITY, false)?;
    Ok(b.build()?)
}

fn check_report(report: &CertifyReport) -> Result<(), Failure> {
    println!(
        "certified {} segments: {} intersections, {} uncertain",
        report.segments, report.certain, report.uncertain
    );
    if report.is_clean() {
        Ok(())
    } else {
        let (seg, v) = &report.examples[0];
        Err(Failure::Certification(format!(
            "{} certain crossings; first in segment {seg} between {:?} and {:?} at t = {:.6}",
            report.certain, v.a, v.b, v.time
        )))
    }
}

fn simulate(config: &Path, certify: bool) -> Result<(), Failure> {
    let mut cfg = SceneConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    seed_override(&mut cfg.resolve)?;
    cfg.resolve.record_path |= certify;
    let mut sim = cfg.simulator()?;
    let out = cfg.output_path();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let csv_path = out.join("stats.csv");
    let mut csv = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    writeln!(csv, "frame,steps,searches,residual,ms").context("writing stats")?;
    let topo = sim.mesh.topology.clone();
    let mut report = CertifyReport::default();
    for _ in 0..cfg.frames {
        let step = sim.step()?;
        let frame = sim.frame;
        writeln!(csv, "{frame},{},{},{:.6e},{:.3}", step.steps(), step.searches(), step.residual(), step.ms())
            .context("writing stats")?;
        let obj = out.join(format!("frame_{frame:04}.obj"));
        write_obj(&obj, &sim.mesh.positions, &topo.triangles, &topo.strands)?;
        if certify {
            for r in &step.resolves {
                report.merge(certify_path(&topo, &r.path));
            }
        }
        log::info!("frame {frame}: {} steps, {} searches", step.steps(), step.searches());
    }
    println!("wrote {} frames to {}", cfg.frames, out.display());
    if certify {
        check_report(&report)?;
    }
    Ok(())
}

fn print_stats(stats: &ResolveStats) {
    println!("{}", ResolveStats::CSV_HEADER);
    println!("{}", stats.csv_row());
}

fn run_repair(
    x: &Path,
    y: &Path,
    out: &Path,
    eps: Option<f64>,
    limit: Option<usize>,
    solver: Option<String>,
    certify: bool,
) -> Result<(), Failure> {
    let xo = load_obj(x)?;
    let yo = load_obj(y)?;
    if xo.positions.len() != yo.positions.len() || xo.triangles != yo.triangles || xo.segments != yo.segments {
        return Err(anyhow!("topology mismatch between {} and {}", x.display(), y.display()).into());
    }
    let mesh = mesh_from_obj(&xo)?;
    let mut cfg = ResolveConfig { record_path: certify, ..Default::default() };
    if let Some(e) = eps {
        cfg.epsilon = e;
    }
    if let Some(l) = limit {
        cfg.step_limit = l;
    }
    if let Some(s) = solver {
        cfg.solver = s;
    }
    seed_override(&mut cfg)?;
    let (result, stats) = repair(&mesh, &xo.positions, &yo.positions, &cfg)?;
    write_obj(out, &result, &xo.triangles, &xo.segments).with_context(|| format!("writing {}", out.display()))?;
    print_stats(&stats);
    if certify {
        check_report(&certify_path(&mesh.topology, &stats.path))?;
    }
    Ok(())
}

fn normalflow(input: &Path, config: NormalFlowConfig, out: Option<PathBuf>, certify: bool) -> Result<(), Failure> {
    let obj = load_obj(input)?;
    if !obj.segments.is_empty() {
        return Err(anyhow!("normal flow needs a closed triangle mesh without strands").into());
    }
    let mesh = mesh_from_obj(&obj)?;
    let mut resolve = ResolveConfig { record_path: certify, ..Default::default() };
    seed_override(&mut resolve)?;
    let iterations = config.iterations;
    let mut flow = NormalFlow::new(mesh, config, resolve)?;
    let prefix = out.unwrap_or_else(|| input.with_extension(""));
    let stem = prefix.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "flow".into());
    let mut report = CertifyReport::default();
    println!("iteration,{}", ResolveStats::CSV_HEADER);
    for k in 1..=iterations {
        let stats = flow.iterate()?;
        println!("{k},{}", stats.csv_row());
        let path = prefix.with_file_name(format!("{stem}_{k:04}.obj"));
        write_obj(&path, &flow.mesh.positions, &obj.triangles, &[]).with_context(|| format!("writing {}", path.display()))?;
        if certify {
            report.merge(certify_path(&flow.mesh.topology, &stats.path));
        }
    }
    if certify {
        check_report(&report)?;
    }
    Ok(())
}

fn certify_frames(dir: &Path) -> Result<(), Failure> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")))
        .collect();
    files.sort();
    if files.len() < 2 {
        return Err(anyhow!("{} holds fewer than two OBJ frames", dir.display()).into());
    }
    let first = load_obj(&files[0])?;
    let mut path: Vec<Vec<Vec3>> = vec![first.positions.clone()];
    for f in &files[1..] {
        let o = load_obj(f)?;
        if o.positions.len() != first.positions.len() || o.triangles != first.triangles || o.segments != first.segments {
            return Err(anyhow!("{} does not match the topology of {}", f.display(), files[0].display()).into());
        }
        path.push(o.positions);
    }
    let mesh = mesh_from_obj(&first)?;
    check_report(&certify_path(&mesh.topology, &path))
}
