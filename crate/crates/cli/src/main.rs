//! `pattern make`: garment mesh in, sewing pattern (SVG + JSON) out.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pattern_core::mesh::{load_obj, load_pose_dir, SymmetryPlane, Vec3};
use pattern_core::pattern::{load_sketches, run_pipeline, Config, PipelineInput};
use pattern_core::PatternError;

#[derive(Parser)]
#[command(name = "pattern", version, about = "Sewing patterns from 3D garment meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment, flatten and pack a garment mesh.
    Make(MakeArgs),
}

#[derive(clap::Args)]
struct MakeArgs {
    /// Rest-pose OBJ (v/f records).
    mesh: PathBuf,
    /// Directory of extra pose OBJs with the same faces.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Sketch strokes JSON: [[{"face", "bary"}, ...], ...].
    #[arg(long)]
    sketch: Option<PathBuf>,
    /// Config JSON; the flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Max corners per piece.
    #[arg(long)]
    corners: Option<usize>,
    /// Max thread stretch.
    #[arg(long)]
    max_stretch: Option<f64>,
    /// px,py,pz,nx,ny,nz; turns symmetry on.
    #[arg(long, value_parser = floats::<6>)]
    symmetry_plane: Option<[f64; 6]>,
    /// Desired warp axis ax,ay,az.
    #[arg(long, value_parser = floats::<3>)]
    grain: Option<[f64; 3]>,
    #[arg(long)]
    /// Seed for candidate sampling
    seed: Option<u64>,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    output: PathBuf,
}

fn floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

enum Failure {
    Validation(String),
    Unsatisfiable(String),
    Other(String),
}

impl From<PatternError> for Failure {
    fn from(e: PatternError) -> Self {
        let msg = e.to_string();
        if e.is_unsatisfiable() {
            return Failure::Unsatisfiable(msg);
        }
        match e {
            PatternError::Config(_) | PatternError::Json(_) => Failure::Validation(msg),
            PatternError::Stage { stage: "input" | "symmetrize" | "field" | "trace", .. } => Failure::Validation(msg),
            PatternError::Stage { stage: "layout", ref source } if source.to_string().starts_with("invalid goals") => {
                Failure::Validation(msg)
            }
            _ => Failure::Other(msg),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn config(args: &MakeArgs) -> Result<Config, Failure> {
    let mut c = match &args.config {
        Some(p) => Config::from_json(&read(p)?)?,
        None => Config::default(),
    };
    if let Some(k) = args.corners {
        c.max_corners = k;
    }
    if let Some(s) = args.max_stretch {
        c.max_stretch = s;
    }
    if let Some(p) = args.symmetry_plane {
        let plane = SymmetryPlane::new(Vec3::new(p[0], p[1], p[2]), Vec3::new(p[3], p[4], p[5]))
            .map_err(|e| Failure::Validation(format!("--symmetry-plane: {e}")))?;
        c.symmetry = true;
        c.symmetry_plane = Some(plane);
    }
    if let Some(g) = args.grain {
        c.grain = Some(Vec3::new(g[0], g[1], g[2]));
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    c.validate()?;
    Ok(c)
}

fn make(args: &MakeArgs) -> Result<(), Failure> {
    let config = config(args)?;
    let mesh = load_obj(&args.mesh).map_err(|e| Failure::Validation(format!("{}: {e}", args.mesh.display())))?;
    let mut input = PipelineInput::new(mesh);
    if let Some(dir) = &args.poses {
        input.poses =
            load_pose_dir(dir, &input.mesh).map_err(|e| Failure::Validation(format!("{}: {e}", dir.display())))?;
    }
    if let Some(p) = &args.sketch {
        input.strokes = load_sketches(&read(p)?).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?;
    }
    eprintln!(
        "mesh: {} vertices, {} faces, {} poses, {} strokes",
        input.mesh.num_vertices(),
        input.mesh.num_faces(),
        input.poses.len() + 1,
        input.strokes.len()
    );
    let out = run_pipeline(&config, &input)?;
    let io = |e: std::io::Error| Failure::Other(format!("{}: {e}", args.output.display()));
    std::fs::create_dir_all(&args.output).map_err(io)?;
    let write = |name: &str, text: &str| std::fs::write(args.output.join(name), text).map_err(io);
    write("pattern.svg", &out.svg)?;
    write("pattern.json", &out.pattern.to_json())?;
    write("layout.json", &out.document.to_json())?;
    write("report.json", &serde_json::to_string_pretty(&out.report).expect("report serializes"))?;
    write("config.json", &config.to_json())?;
    let r = &out.report;
    let worst = r.patches.iter().map(|p| p.max_stretch).fold(0.0, f64::max);
    println!(
        "{} pieces, {} seams, {} darts, max stretch {:.4}, sheet {:.0} x {:.0} mm -> {}",
        r.pieces,
        r.seams.len(),
        r.darts,
        worst,
        out.pattern.sheet_width,
        out.pattern.sheet_height,
        args.output.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Make(args) => make(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Unsatisfiable(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
