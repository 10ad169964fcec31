use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use ncfvm::norms::format_sci;
use ncfvm::study::{MeshSpec, StudyOutcome, REFERENCE_FAMILIES, REFERENCE_LEVELS};
use ncfvm::svg::{rect_mesh_svg, tri_mesh_svg};
use ncfvm::{
    build_cr_dual, build_rect_mesh, build_structured_tri_mesh, build_wilson_dual, manufactured_poisson_problem,
    run_study, run_verification, Rect, Scheme, StudyConfig, StudyError, VerifyOptions,
};

#[derive(Parser)]
#[command(
    name = "ncfvm",
    version,
    about = "Nonconforming finite volume studies on the unit square"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study on the manufactured Poisson problem.
    Study(StudyArgs),
    /// Wilson spectral checks and C-R sanity checks.
    Verify {
        /// Test hook: add this to A₁[0][0] before checking.
        #[arg(long, hide = true)]
        perturb_a1: Option<f64>,
    },
    /// Write a mesh and its dual as SVG (or plain text).
    MeshDump(MeshDumpArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum SchemeArg {
    Cr,
    Wilson,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Cr => Scheme::Cr,
            SchemeArg::Wilson => Scheme::Wilson,
        }
    }
}

#[derive(clap::Args)]
struct StudyArgs {
    #[arg(long, value_enum, default_value = "cr")]
    scheme: SchemeArg,
    /// Base mesh `M,N`; repeat for several families. Defaults to the three
    /// reference families for `cr` and `8,8` for `wilson`.
    #[arg(long = "family", value_parser = parse_pair)]
    families: Vec<(usize, usize)>,
    /// Meshes per family, each doubling both sizes. Defaults to 7 for `cr`, 4 for `wilson`.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    quad_area: Option<usize>,
    #[arg(long)]
    quad_line: Option<usize>,
    /// Quadrature degree used to measure errors.
    #[arg(long)]
    norm_degree: Option<usize>,
    /// Skip the L² error column.
    #[arg(long)]
    no_l2: bool,
    /// CSV report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG of the finest mesh of the last family, with its dual.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Copy, Clone, ValueEnum)]
enum MeshKind {
    Tri,
    Rect,
}

#[derive(Copy, Clone, ValueEnum)]
enum DumpFormat {
    Svg,
    Text,
}

#[derive(clap::Args)]
struct MeshDumpArgs {
    #[arg(long, value_enum)]
    kind: MeshKind,
    m: usize,
    n: usize,
    /// Omit the dual partition.
    #[arg(long)]
    no_dual: bool,
    #[arg(long, value_enum, default_value = "svg")]
    format: DumpFormat,
    /// Destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected M,N, got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok((parse(a)?, parse(b)?))
}

enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Verification(_) => 4,
        }
    }
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Self {
        match e {
            StudyError::Solver { .. } => Failure::Solver(e.into()),
            other => Failure::Config(other.into()),
        }
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Config)
}

fn study_config(args: &StudyArgs) -> Result<StudyConfig, Failure> {
    let scheme = Scheme::from(args.scheme);
    let (default_bases, default_levels): (&[(usize, usize)], usize) = match scheme {
        Scheme::Cr => (&REFERENCE_FAMILIES, REFERENCE_LEVELS),
        Scheme::Wilson => (&[(8, 8)], 4),
    };
    let bases = if args.families.is_empty() {
        default_bases
    } else {
        &args.families
    };
    let mut config = StudyConfig::families(scheme, bases, args.levels.unwrap_or(default_levels))?;
    if args.threads == 0 {
        return Err(Failure::Config(anyhow!("--threads must be at least 1")));
    }
    let opts = &mut config.options;
    opts.threads = args.threads;
    opts.area_degree = args.quad_area.unwrap_or(opts.area_degree);
    opts.line_degree = args.quad_line.unwrap_or(opts.line_degree);
    config.norm_degree = args.norm_degree.unwrap_or(config.norm_degree);
    if opts.area_degree == 0 || opts.line_degree == 0 || config.norm_degree == 0 {
        return Err(Failure::Config(anyhow!("quadrature degrees must be at least 1")));
    }
    config.with_l2 = !args.no_l2;
    Ok(config)
}

fn summary(outcome: &StudyOutcome) -> String {
    let mut out = String::new();
    for (r, d) in outcome.report.rows.iter().zip(&outcome.diagnostics) {
        let order = |o: Option<f64>| o.map(format_sci).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{} ({},{}) n={} h={} err_h1={} order_h1={}",
            r.family,
            r.m,
            r.n,
            r.dofs,
            format_sci(r.h),
            format_sci(r.err_h1),
            order(r.order_h1)
        ));
        if let Some(e) = r.err_l2 {
            out.push_str(&format!(" err_l2={} order_l2={}", format_sci(e), order(r.order_l2)));
        }
        out.push_str(&format!(" conservation={}", format_sci(d.conservation)));
        if let Some(c) = d.certificate {
            out.push_str(&format!(" certificate={}", format_sci(c)));
        }
        out.push('\n');
    }
    out
}

fn mesh_svg(scheme: Scheme, spec: &MeshSpec) -> Result<String, Failure> {
    let unit = Rect::unit_square();
    let config = |e: ncfvm::MeshError| Failure::Config(e.into());
    Ok(match scheme {
        Scheme::Cr => {
            let mesh = build_structured_tri_mesh::<f64>(spec.m, spec.n, unit).map_err(config)?;
            tri_mesh_svg(&mesh, Some(&build_cr_dual(&mesh)))
        }
        Scheme::Wilson => {
            let mesh = build_rect_mesh::<f64>(spec.m, spec.n, unit).map_err(config)?;
            rect_mesh_svg(&mesh, Some(&build_wilson_dual(&mesh)))
        }
    })
}

fn cmd_study(args: &StudyArgs) -> Result<(), Failure> {
    let config = study_config(args)?;
    let outcome = run_study(&manufactured_poisson_problem::<f64>(), &config)?;
    print!("{}", summary(&outcome));
    if let Some(path) = &args.out {
        write_output(path, &outcome.report.to_csv())?;
    }
    if let Some(path) = &args.svg {
        let finest = config.meshes.last().expect("at least one mesh");
        write_output(path, &mesh_svg(config.scheme, finest)?)?;
    }
    Ok(())
}

fn cmd_verify(perturb_a1: Option<f64>) -> Result<(), Failure> {
    let report = run_verification(&VerifyOptions { perturb_a1 });
    print!("{}", report.to_text());
    if report.all_passed() {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        Err(Failure::Verification(format!(
            "{failed} of {} checks failed",
            report.checks.len()
        )))
    }
}

fn cmd_mesh_dump(args: &MeshDumpArgs) -> Result<(), Failure> {
    let unit = Rect::unit_square();
    let config = |e: ncfvm::MeshError| Failure::Config(e.into());
    let text = match args.kind {
        MeshKind::Tri => {
            let mesh = build_structured_tri_mesh::<f64>(args.m, args.n, unit).map_err(config)?;
            match args.format {
                DumpFormat::Text => mesh.to_text(),
                DumpFormat::Svg => {
                    let dual = (!args.no_dual).then(|| build_cr_dual(&mesh));
                    tri_mesh_svg(&mesh, dual.as_ref())
                }
            }
        }
        MeshKind::Rect => {
            let mesh = build_rect_mesh::<f64>(args.m, args.n, unit).map_err(config)?;
            match args.format {
                DumpFormat::Text => mesh.to_text(),
                DumpFormat::Svg => {
                    let dual = (!args.no_dual).then(|| build_wilson_dual(&mesh));
                    rect_mesh_svg(&mesh, dual.as_ref())
                }
            }
        }
    };
    match &args.out {
        Some(path) => write_output(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Study(args) => cmd_study(args),
        Command::Verify { perturb_a1 } => cmd_verify(*perturb_a1),
        Command::MeshDump(args) => cmd_mesh_dump(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) | Failure::Solver(e) => eprintln!("error: {e:#}"),
                Failure::Verification(msg) => eprintln!("verification failed: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
