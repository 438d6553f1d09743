//! Command-line driver: mesh generation and validation, single-element
//! projector inspection, solves, and convergence studies.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polyvem::femsolve::{
    convergence, convergence_csv, error_norms, interpolate, manufactured, run_quad_degree,
    solve as solve_system, assemble, build_elements, GlobalDofMap, InterpolationMode,
    ManufacturedCase, SolveOptions,
};
use polyvem::meshgeom::check::check_mesh;
use polyvem::meshgeom::io::{read_mesh, write_mesh};
use polyvem::meshgeom::MeshKind;
use polyvem::{DofVector, ElementCache, ElementConfig, LocalElement, PolytopalMesh};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "polyvem",
    about = "H^m-conforming virtual element solver on polytopal meshes",
    version
)]
struct Cli {
    /// Worker threads (overrides the POLYVEM_THREADS environment variable;
    /// 0 or unset picks the machine default)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a mesh and write it as JSON
    MakeMesh(MakeMeshArgs),
    /// Report star-shapedness / chunkiness / face-ratio diagnostics as JSON
    CheckMesh(CheckMeshArgs),
    /// Inspect the projector matrices of one element (optionally applying
    /// them to a given dof vector)
    Project(ProjectArgs),
    /// Solve the model problem for a manufactured case and report errors
    Solve(RunArgs),
    /// Run a manufactured case on a refinement family and print rate CSV
    Convergence(RunArgs),
}

#[derive(Args)]
struct MeshSource {
    /// Mesh file (JSON) to read
    #[arg(long, conflicts_with_all = ["kind", "size"])]
    mesh: Option<PathBuf>,
    /// Generator kind: interval | square_grid | distorted_quads |
    /// hex_dominant | cube_grid
    #[arg(long)]
    kind: Option<String>,
    /// Generator resolution (cells per side)
    #[arg(long)]
    size: Option<usize>,
    /// Seed for randomized generators
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MakeMeshArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckMeshArgs {
    #[command(flatten)]
    source: MeshSource,
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    source: MeshSource,
    /// Cell to inspect
    #[arg(long, default_value_t = 0)]
    cell: usize,
    #[arg(short)]
    m: usize,
    #[arg(short)]
    k: usize,
    /// JSON file holding a dof-value array; its energy and L2 projections
    /// are printed alongside the element matrices
    #[arg(long)]
    dofs: Option<PathBuf>,
}

/// Flags shared by `solve` and `convergence`; every field can also come from
/// a TOML config file, with explicit flags taking precedence.
#[derive(Args)]
struct RunArgs {
    /// TOML config file with the same keys as the flags below
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    source: MeshSource,
    #[arg(short)]
    m: Option<usize>,
    #[arg(short)]
    k: Option<usize>,
    /// Manufactured case: bump | trig | poly:<degree>
    #[arg(long)]
    case: Option<String>,
    /// Refinement sizes for `convergence` (e.g. --sizes 8,16,32,64)
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Quadrature degree override for loads and error norms
    #[arg(long)]
    quad_degree: Option<u32>,
    /// Write the report (JSON for solve, CSV for convergence) here instead
    /// of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    kind: Option<String>,
    mesh: Option<PathBuf>,
    size: Option<usize>,
    sizes: Option<Vec<usize>>,
    seed: Option<u64>,
    m: Option<usize>,
    k: Option<usize>,
    case: Option<String>,
    quad_degree: Option<u32>,
    out: Option<PathBuf>,
}

/// Fully resolved run parameters after merging flags over the config file.
struct RunConfig {
    mesh_file: Option<PathBuf>,
    kind: Option<String>,
    size: Option<usize>,
    sizes: Vec<usize>,
    seed: u64,
    m: usize,
    k: usize,
    case: ManufacturedCase,
    quad_degree: Option<u32>,
    out: Option<PathBuf>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

impl RunConfig {
    fn resolve(args: &RunArgs, file: FileConfig) -> Result<RunConfig> {
        let case_str = args
            .case
            .clone()
            .or(file.case)
            .ok_or_else(|| anyhow!("missing manufactured case (--case or config `case`)"))?;
        let case: ManufacturedCase = case_str.parse().map_err(|e| anyhow!("{e}"))?;
        Ok(RunConfig {
            mesh_file: args.source.mesh.clone().or(file.mesh),
            kind: args.source.kind.clone().or(file.kind),
            size: args.source.size.or(file.size),
            sizes: if args.sizes.is_empty() {
                file.sizes.unwrap_or_default()
            } else {
                args.sizes.clone()
            },
            seed: if args.source.seed != 0 { args.source.seed } else { file.seed.unwrap_or(0) },
            m: args.m.or(file.m).ok_or_else(|| anyhow!("missing -m (or config `m`)"))?,
            k: args.k.or(file.k).ok_or_else(|| anyhow!("missing -k (or config `k`)"))?,
            case,
            quad_degree: args.quad_degree.or(file.quad_degree),
            out: args.out.clone().or(file.out),
        })
    }
}

fn parse_kind(kind: &str, size: usize, seed: u64) -> Result<MeshKind> {
    Ok(match kind {
        "interval" => MeshKind::Interval { n: size },
        "square_grid" => MeshKind::SquareGrid { n: size },
        "distorted_quads" => MeshKind::DistortedQuads { n: size, seed },
        "hex_dominant" => MeshKind::HexDominant { n: size },
        "cube_grid" => MeshKind::CubeGrid { n: size },
        other => bail!(
            "unknown mesh kind {other:?} (expected interval, square_grid, \
             distorted_quads, hex_dominant, or cube_grid)"
        ),
    })
}

fn load_mesh(source: &MeshSource) -> Result<PolytopalMesh> {
    if let Some(path) = &source.mesh {
        return Ok(read_mesh(path)?);
    }
    let kind = source
        .kind
        .as_deref()
        .ok_or_else(|| anyhow!("no mesh given: pass --mesh <file> or --kind and --size"))?;
    let size = source.size.ok_or_else(|| anyhow!("--kind requires --size"))?;
    Ok(parse_kind(kind, size, source.seed)?.generate()?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_make_mesh(args: &MakeMeshArgs) -> Result<()> {
    let mesh = load_mesh(&args.source)?;
    write_mesh(&mesh, &args.out)?;
    eprintln!(
        "wrote {} ({}d, {} cells, h = {:.6})",
        args.out.display(),
        mesh.dim,
        mesh.cells().len(),
        mesh.mesh_size()
    );
    Ok(())
}

fn cmd_check_mesh(args: &CheckMeshArgs) -> Result<()> {
    let mesh = load_mesh(&args.source)?;
    let report = check_mesh(&mesh);
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.all_star_shaped {
        Ok(())
    } else {
        bail!("mesh has non-star-shaped cells")
    }
}

fn cmd_project(args: &ProjectArgs) -> Result<()> {
    let mesh = load_mesh(&args.source)?;
    if args.cell >= mesh.cells().len() {
        bail!("cell {} out of range ({} cells)", args.cell, mesh.cells().len());
    }
    let config = ElementConfig::new(mesh.dim, args.m, args.k)?;
    let cache = ElementCache::new();
    let elem = LocalElement::build(&mesh, args.cell, &config, &cache)?;
    let mut doc = elem.debug_json();
    if let Some(path) = &args.dofs {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading dofs {}", path.display()))?;
        let values: Vec<f64> = serde_json::from_str(&text)
            .with_context(|| format!("parsing dofs {}", path.display()))?;
        if values.len() != elem.layout.len() {
            bail!("dof vector has {} entries, element has {}", values.len(), elem.layout.len());
        }
        let dofs = DofVector::new(elem.layout.clone(), nalgebra::DVector::from_vec(values));
        let pi = elem.pi_projector(&dofs);
        let q = elem.l2_projector(&dofs);
        doc["pi_of_dofs"] = serde_json::json!(pi.coeffs());
        doc["q_of_dofs"] = serde_json::json!(q.coeffs());
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn cmd_solve(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::resolve(args, load_file_config(args.config.as_deref())?)?;
    let source = MeshSource {
        mesh: cfg.mesh_file.clone(),
        kind: cfg.kind.clone(),
        size: cfg.size,
        seed: cfg.seed,
    };
    let mesh = load_mesh(&source)?;
    let config = ElementConfig::new(mesh.dim, cfg.m, cfg.k)?;
    let problem = manufactured(cfg.case, mesh.dim, cfg.m)?;
    let opts = SolveOptions::default();
    let quad = cfg.quad_degree.unwrap_or_else(|| run_quad_degree(&config, &problem));
    let elems = build_elements(&mesh, &config)?;
    let dofmap = GlobalDofMap::new(&mesh, &config);
    let (u_h, with_source) = if problem.interpolation_only {
        let ih = interpolate(
            &mesh, &elems, &dofmap, problem.u.as_ref(), InterpolationMode::Averaged, quad,
        )?;
        (ih, false)
    } else {
        let sys = assemble(
            &mesh, &elems, &dofmap, problem.f.as_ref(), problem.f_poly.as_ref(), quad,
        )?;
        (solve_system(&sys, &opts)?, true)
    };
    let report = error_norms(
        &mesh,
        &elems,
        &dofmap,
        &u_h,
        problem.u.as_ref(),
        if with_source { Some(problem.f.as_ref()) } else { None },
        quad,
    )?;
    let doc = serde_json::json!({
        "h": report.h,
        "n_dofs": report.n_dofs,
        "e_L2": report.l2(),
        "e_Hm": report.hm(),
        "broken_norms": report.broken,
        "osc": report.osc,
        "interpolation_only": problem.interpolation_only,
        "solution": u_h.as_slice(),
    });
    emit(cfg.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn cmd_convergence(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::resolve(args, load_file_config(args.config.as_deref())?)?;
    if cfg.sizes.is_empty() {
        bail!("convergence needs --sizes (or config `sizes`)");
    }
    let kind = cfg
        .kind
        .as_deref()
        .ok_or_else(|| anyhow!("convergence needs --kind (mesh files give a single level)"))?;
    let meshes: Vec<PolytopalMesh> = cfg
        .sizes
        .iter()
        .map(|&s| Ok(parse_kind(kind, s, cfg.seed)?.generate()?))
        .collect::<Result<_>>()?;
    let n = meshes[0].dim;
    let config = ElementConfig::new(n, cfg.m, cfg.k)?;
    let problem = manufactured(cfg.case, n, cfg.m)?;
    let rows = convergence(&meshes, &config, &problem, &SolveOptions::default(), cfg.quad_degree)?;
    emit(cfg.out.as_deref(), &convergence_csv(&rows))
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("POLYVEM_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        if t > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                eprintln!("error: failed to configure {t} threads: {e}");
                std::process::exit(1);
            }
        }
    }
    let result = match &cli.command {
        Command::MakeMesh(a) => cmd_make_mesh(a),
        Command::CheckMesh(a) => cmd_check_mesh(a),
        Command::Project(a) => cmd_project(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Convergence(a) => cmd_convergence(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
