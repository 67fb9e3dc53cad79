//! Run settings: a `key = value` file overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use fecvx::adaptivity::{AdaptConfig, RefinementMode};
use fecvx::femspace::TestDegree;
use fecvx::mesh::Pattern;
use fecvx::problems::{by_name, BenchmarkProblem, Discretization, DomainSpec};
use fecvx_sdp::SolverConfig;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Uniform,
    Adaptive,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(Mode::Uniform),
            "adaptive" => Ok(Mode::Adaptive),
            _ => Err(format!("unknown mode `{s}` (expected uniform or adaptive)")),
        }
    }
}

impl From<Mode> for RefinementMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Uniform => RefinementMode::Uniform,
            Mode::Adaptive => RefinementMode::Adaptive,
        }
    }
}

/// Flags shared by `run`, `adapt` and `export-sdp`. Every flag can also be
/// given as a config-file key of the same name; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Key-value config file (`key = value`, `#` comments).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// monopolist, projection-l2, projection-h1 or dirichlet.
    #[arg(long)]
    pub problem: Option<String>,
    /// Monopolist production cost.
    #[arg(long)]
    pub c: Option<f64>,
    /// Initial mesh pattern for square domains.
    #[arg(long)]
    pub pattern: Option<String>,
    /// Cells per side of the initial square mesh.
    #[arg(long)]
    pub n: Option<usize>,
    /// Refinement level of the initial disk mesh.
    #[arg(long)]
    pub disk_level: Option<i32>,
    /// Trial degree (1 or 2).
    #[arg(long)]
    pub degree: Option<usize>,
    /// Test degree: 1 for hats, 2 for hats and edge bubbles.
    #[arg(long)]
    pub test_degree: Option<usize>,
    /// Also test with functions attached to the boundary.
    #[arg(long)]
    pub boundary_tests: Option<bool>,
    /// Include the boundary flux term in the FE-Hessian.
    #[arg(long)]
    pub boundary_term: Option<bool>,
    #[arg(long)]
    pub tol_primal: Option<f64>,
    #[arg(long)]
    pub tol_dual: Option<f64>,
    #[arg(long)]
    pub tol_gap: Option<f64>,
    /// Interior-point iteration limit per solve.
    #[arg(long)]
    pub max_solver_iterations: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Number of solves.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Bulk marking fraction.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Bisections per marked element.
    #[arg(long)]
    pub bisections: Option<usize>,
    /// Stop once the largest indicator is below this.
    #[arg(long)]
    pub eta_tolerance: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
struct Settings {
    problem: Option<String>,
    c: Option<f64>,
    pattern: Option<String>,
    n: Option<usize>,
    disk_level: Option<i32>,
    degree: Option<usize>,
    test_degree: Option<usize>,
    boundary_tests: Option<bool>,
    boundary_term: Option<bool>,
    tol_primal: Option<f64>,
    tol_dual: Option<f64>,
    tol_gap: Option<f64>,
    max_solver_iterations: Option<usize>,
    mode: Option<Mode>,
    iters: Option<usize>,
    theta: Option<f64>,
    bisections: Option<usize>,
    eta_tolerance: Option<f64>,
    out: Option<PathBuf>,
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{s}`")),
    }
}

fn parse<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse().map_err(|e: T::Err| format!("cannot parse `{s}`: {e}"))
}

impl Settings {
    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key.replace('_', "-").as_str() {
            "problem" => self.problem = Some(v.to_string()),
            "c" => self.c = Some(parse(v)?),
            "pattern" => self.pattern = Some(v.to_string()),
            "n" => self.n = Some(parse(v)?),
            "disk-level" => self.disk_level = Some(parse(v)?),
            "degree" => self.degree = Some(parse(v)?),
            "test-degree" => self.test_degree = Some(parse(v)?),
            "boundary-tests" => self.boundary_tests = Some(parse_bool(v)?),
            "boundary-term" => self.boundary_term = Some(parse_bool(v)?),
            "tol-primal" => self.tol_primal = Some(parse(v)?),
            "tol-dual" => self.tol_dual = Some(parse(v)?),
            "tol-gap" => self.tol_gap = Some(parse(v)?),
            "max-solver-iterations" => self.max_solver_iterations = Some(parse(v)?),
            "mode" => self.mode = Some(parse(v)?),
            "iters" => self.iters = Some(parse(v)?),
            "theta" => self.theta = Some(parse(v)?),
            "bisections" => self.bisections = Some(parse(v)?),
            "eta-tolerance" => self.eta_tolerance = Some(parse(v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut s = Settings::default();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| CliError::Config(format!("{}:{}: {msg}", path.display(), i + 1));
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `key = value`".into()))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.replace('_', "-")) {
                return Err(bad(format!("duplicate key `{k}`")));
            }
            s.set(k, v).map_err(bad)?;
        }
        if seen.is_empty() {
            return Err(CliError::Config(format!("{}: config file is empty", path.display())));
        }
        Ok(s)
    }

    fn overlay(&mut self, a: &RunArgs) {
        macro_rules! take {
            ($($f:ident),*) => { $( if a.$f.is_some() { self.$f = a.$f.clone(); } )* };
        }
        take!(
            problem,
            c,
            pattern,
            n,
            disk_level,
            degree,
            test_degree,
            boundary_tests,
            boundary_term,
            tol_primal,
            tol_dual,
            tol_gap,
            max_solver_iterations,
            mode,
            iters,
            theta,
            bisections,
            eta_tolerance,
            out
        );
    }
}

/// Fully resolved and validated settings of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub problem: String,
    pub c: f64,
    pub domain: DomainSpec,
    pub discretization: Discretization,
    pub solver: SolverConfig,
    pub mode: Mode,
    pub iterations: usize,
    pub theta: f64,
    pub bisections: usize,
    pub eta_tolerance: f64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs, mode: Option<Mode>) -> Result<Self, CliError> {
        let mut s = match &args.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        s.overlay(args);
        if mode.is_some() {
            s.mode = mode;
        }
        let bad = |m: String| CliError::Config(m);

        let problem = s.problem.unwrap_or_else(|| "monopolist".into());
        let c = s.c.unwrap_or(0.0);
        let base = by_name(&problem, c).map_err(|e| bad(e.to_string()))?;
        let domain = match base.domain {
            DomainSpec::Structured { pattern, n, rect } => {
                if s.disk_level.is_some() {
                    return Err(bad(format!("`disk-level` does not apply to `{problem}`")));
                }
                let pattern = match &s.pattern {
                    Some(p) => p.parse::<Pattern>().map_err(|e| bad(e.to_string()))?,
                    None => pattern,
                };
                let n = s.n.unwrap_or(n);
                if n == 0 {
                    return Err(bad("n must be at least 1".into()));
                }
                DomainSpec::Structured { pattern, n, rect }
            }
            DomainSpec::Disk { radius, level } => {
                if s.pattern.is_some() || s.n.is_some() {
                    return Err(bad(format!(
                        "`{problem}` lives on a disk; use `disk-level` instead of pattern/n"
                    )));
                }
                let level = s.disk_level.unwrap_or(level);
                if level < 0 {
                    return Err(bad("disk-level must be nonnegative".into()));
                }
                DomainSpec::Disk { radius, level }
            }
        };

        let degree = s.degree.unwrap_or(2);
        let mut discretization = Discretization::for_degree(degree).map_err(|e| bad(e.to_string()))?;
        if let Some(t) = s.test_degree {
            discretization.test_degree = TestDegree::from_degree(t).map_err(|e| bad(format!("test-degree: {e}")))?;
        }
        if let Some(b) = s.boundary_tests {
            discretization.boundary_tests = b;
        }
        if let Some(b) = s.boundary_term {
            discretization.boundary_term = b;
        }

        let d = SolverConfig::default();
        let solver = SolverConfig {
            tol_primal: s.tol_primal.unwrap_or(d.tol_primal),
            tol_dual: s.tol_dual.unwrap_or(d.tol_dual),
            tol_gap: s.tol_gap.unwrap_or(d.tol_gap),
            max_iterations: s.max_solver_iterations.unwrap_or(d.max_iterations),
            ..d
        };
        let cfg = RunConfig {
            problem,
            c,
            domain,
            discretization,
            solver,
            mode: s.mode.unwrap_or(Mode::Uniform),
            iterations: s.iters.unwrap_or(1),
            theta: s.theta.unwrap_or(0.7),
            bisections: s.bisections.unwrap_or(2),
            eta_tolerance: s.eta_tolerance.unwrap_or(1e-7),
            out: s.out.unwrap_or_else(|| PathBuf::from("fecvx-out")),
        };
        cfg.adapt_config().validate().map_err(|e| bad(e.to_string()))?;
        if cfg.solver.max_iterations == 0 {
            return Err(bad("max-solver-iterations must be at least 1".into()));
        }
        if cfg.out.exists() && !cfg.out.is_dir() {
            return Err(bad(format!("output path {} is not a directory", cfg.out.display())));
        }
        if cfg.out.is_dir()
            && std::fs::metadata(&cfg.out)
                .map(|m| m.permissions().readonly())
                .unwrap_or(true)
        {
            return Err(bad(format!("output directory {} is not writable", cfg.out.display())));
        }
        Ok(cfg)
    }

    pub fn problem(&self) -> Result<BenchmarkProblem, CliError> {
        Ok(by_name(&self.problem, self.c)?.with_domain(self.domain))
    }

    pub fn adapt_config(&self) -> AdaptConfig {
        let mut a = AdaptConfig::new(self.mode.into(), self.iterations, self.discretization);
        a.theta = self.theta;
        a.bisections = self.bisections;
        a.eta_tolerance = self.eta_tolerance;
        a.solver = self.solver;
        a
    }
}
