use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use fecvx::adaptivity::{adapt_with, AdaptiveRun, IterationRecord};
use fecvx::femspace::{build_test_basis, FeSpace, TestDegree};
use fecvx::hessian::{assemble, check_fe_convexity};
use fecvx::io::{read_dofs, read_mesh, write_dofs, write_mesh, write_vtk};
use fecvx::pipeline::{build_model, ModelStats};
use fecvx_sdp::{sdpa, SolverConfig, SolverStatus};
use serde::Serialize;

use crate::config::{Mode, RunArgs, RunConfig};
use crate::output::{sig6, write_table, DirLock};
use crate::CliError;

#[derive(Serialize)]
struct RunReport<'a> {
    config: &'a RunConfig,
    converged: bool,
    error: Option<String>,
    records: &'a [IterationRecord],
}

fn json_to(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), value)?;
    Ok(())
}

pub fn run(args: &RunArgs, mode: Option<Mode>) -> Result<ExitCode, CliError> {
    let cfg = RunConfig::resolve(args, mode)?;
    let problem = cfg.problem()?;
    let _lock = DirLock::acquire(&cfg.out)?;
    let out = cfg.out.clone();

    let result = adapt_with(&problem, &cfg.adapt_config(), |snap| {
        let name = format!("iter_{:02}.vtk", snap.record.iteration + 1);
        let f = BufWriter::new(File::create(out.join(name))?);
        write_vtk(f, snap.space, Some(snap.coeffs), &[("eta", &snap.indicators.eta)])
    });
    let (run, error): (AdaptiveRun, Option<String>) = match result {
        Ok(run) => (run, None),
        Err(e) => {
            let msg = e.to_string();
            (*e.run, Some(msg))
        }
    };

    for r in &run.records {
        json_to(&out.join(format!("solver_{:02}.json", r.iteration + 1)), r)?;
    }
    write_table(&out.join("iterations.csv"), &run.records)?;
    json_to(
        &out.join("report.json"),
        &RunReport {
            config: &cfg,
            converged: run.converged,
            error: error.clone(),
            records: &run.records,
        },
    )?;
    if let Some(mesh) = &run.mesh {
        write_mesh(BufWriter::new(File::create(out.join("mesh.txt"))?), mesh)?;
        let space = FeSpace::new(mesh, cfg.discretization.degree)?;
        write_dofs(
            BufWriter::new(File::create(out.join("solution.csv"))?),
            &space,
            &run.coeffs,
        )?;
    }

    println!("iteration  elements  dofs  status  objective  l2_error  linf_error");
    for r in &run.records {
        let (l2, linf) = r
            .errors
            .map_or((String::from("-"), String::from("-")), |e| (sig6(e.l2), sig6(e.linf)));
        println!(
            "{:>9}  {:>8}  {:>4}  {:?}  {}  {l2}  {linf}",
            r.iteration + 1,
            r.elements,
            r.dofs,
            r.status,
            sig6(r.objective)
        );
    }
    match error {
        None => {
            if run.converged {
                println!("converged: largest indicator below {}", cfg.eta_tolerance);
            }
            println!("artifacts written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Some(msg) => Err(CliError::Failed(format!(
            "{msg} (partial artifacts kept in {})",
            out.display()
        ))),
    }
}

pub fn export_sdp(args: &RunArgs, output: Option<PathBuf>) -> Result<ExitCode, CliError> {
    let cfg = RunConfig::resolve(args, None)?;
    let problem = cfg.problem()?;
    let mesh = problem.domain.build()?;
    let space = FeSpace::new(&mesh, cfg.discretization.degree)?;
    let model = build_model(&problem, &space, &cfg.discretization)?;
    let path = output.unwrap_or_else(|| cfg.out.join("model.dat-s"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    sdpa::write(&model.problem, BufWriter::new(File::create(&path)?))?;
    let stats = ModelStats::of(&model);
    println!(
        "{}: {} variables, {} PSD blocks ({} convexity), {} linear constraints",
        path.display(),
        stats.variables,
        stats.blocks,
        stats.convexity_blocks,
        stats.linear_constraints
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// SDPA sparse input.
    pub file: PathBuf,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_primal: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_dual: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub tol_gap: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Print one line per interior-point iteration.
    #[arg(short, long)]
    pub verbose: bool,
    /// Write the full solver result as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn solve(args: &SolveArgs) -> Result<ExitCode, CliError> {
    let problem = sdpa::read(BufReader::new(File::open(&args.file)?))?;
    let cfg = SolverConfig {
        tol_primal: args.tol_primal,
        tol_dual: args.tol_dual,
        tol_gap: args.tol_gap,
        max_iterations: args.max_iterations,
        verbosity: u8::from(args.verbose),
        ..SolverConfig::default()
    };
    let r = fecvx_sdp::solve(&problem, &cfg)?;
    println!("status: {:?}", r.status);
    println!("primal objective: {}", sig6(r.primal_objective));
    println!("dual objective: {}", sig6(r.dual_objective));
    println!(
        "residuals: primal {} dual {} gap {}",
        sig6(r.residuals.primal),
        sig6(r.residuals.dual),
        sig6(r.residuals.gap)
    );
    println!("iterations: {}", r.iterations);
    if let Some(p) = &args.report {
        json_to(p, &r)?;
    }
    if r.status == SolverStatus::Optimal {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(CliError::Failed(format!("solver stopped with status {:?}", r.status)))
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Mesh dump written by `run` (`mesh.txt`).
    #[arg(long)]
    pub mesh: PathBuf,
    /// DOF table written by `run` (`solution.csv`).
    #[arg(long)]
    pub dofs: PathBuf,
    /// Trial degree; inferred from the number of DOFs when omitted.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub test_degree: Option<usize>,
    #[arg(long)]
    pub boundary_tests: Option<bool>,
    #[arg(long)]
    pub boundary_term: Option<bool>,
    /// Smallest eigenvalue accepted as nonnegative is `-tol`.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Print the full report as JSON.
    #[arg(long)]
    pub json: bool,
}

/// Exit code when the function is not FE-convex.
const NOT_CONVEX: u8 = 3;

pub fn check_convexity(args: &CheckArgs) -> Result<ExitCode, CliError> {
    let mesh = read_mesh(BufReader::new(File::open(&args.mesh)?))?;
    let coeffs = read_dofs(BufReader::new(File::open(&args.dofs)?))?;
    let degree = match args.degree {
        Some(d) => d,
        None if coeffs.len() == mesh.num_vertices() => 1,
        None => 2,
    };
    let space = FeSpace::new(&mesh, degree)?;
    if coeffs.len() != space.num_dofs() {
        return Err(CliError::Failed(format!(
            "{} values for a P{degree} space with {} DOFs",
            coeffs.len(),
            space.num_dofs()
        )));
    }
    let mut disc = fecvx::problems::Discretization::for_degree(degree)?;
    if let Some(t) = args.test_degree {
        disc.test_degree = TestDegree::from_degree(t)?;
    }
    disc.boundary_tests = args.boundary_tests.unwrap_or(disc.boundary_tests);
    disc.boundary_term = args.boundary_term.unwrap_or(disc.boundary_term);
    let tests = build_test_basis(&mesh, disc.test_degree, disc.boundary_tests);
    let forms = assemble(&space, &tests, disc.boundary_term)?;
    let report = check_fe_convexity(&forms, &coeffs, args.tol)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        let worst = report.worst.map_or("no test functions".to_string(), |(s, e)| {
            format!("test {s}, eigenvalue {}", sig6(e))
        });
        println!(
            "{} test functions; FE-convex: {}; worst: {worst}",
            forms.len(),
            if report.is_fe_convex { "yes" } else { "no" }
        );
    }
    Ok(if report.is_fe_convex {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(NOT_CONVEX)
    })
}
