//! SOLVE → ESTIMATE → MARK → REFINE.

use std::time::Instant;

use fecvx_sdp::{SolverConfig, SolverStatus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::femspace::{barycentric_gradients, local_basis, FeSpace};
use crate::mesh::{Mesh, Point};
use crate::pipeline::{solve_on_mesh, ModelStats};
use crate::problems::{error_norms, BenchmarkProblem, Discretization, ErrorReport};
use crate::quadrature::gauss_edge;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorIndicators {
    pub eta: Vec<f64>,
    pub eta_max: f64,
}

impl ErrorIndicators {
    pub fn total(&self) -> f64 {
        self.eta.iter().map(|e| e * e).sum::<f64>().sqrt()
    }
}

fn gradient_at(space: &FeSpace<'_>, coeffs: &[f64], e: usize, l: [f64; 3]) -> Point {
    let b = local_basis(space.degree(), l, &barycentric_gradients(space.mesh(), e));
    let mut g = [0.0; 2];
    for (k, &r) in space.element_dofs(e).iter().enumerate() {
        g[0] += coeffs[r] * b.grads[k][0];
        g[1] += coeffs[r] * b.grads[k][1];
    }
    g
}

fn edge_point(mesh: &Mesh, e: usize, a: usize, b: usize, t: f64) -> [f64; 3] {
    let vs = mesh.elements()[e].vertices;
    let mut l = [0.0; 3];
    for k in 0..3 {
        if vs[k] == a {
            l[k] = 1.0 - t;
        } else if vs[k] == b {
            l[k] = t;
        }
    }
    l
}

/// `η_T² = h_T Σ_{interior S ⊂ ∂T} ∫_S |[∇u_h]|²`; the whole jump is charged
/// to both neighbours.
pub fn estimate(mesh: &Mesh, space: &FeSpace<'_>, coeffs: &[f64]) -> Result<ErrorIndicators> {
    if !std::ptr::eq(mesh, space.mesh()) && mesh != space.mesh() {
        return Err(Error::MeshMismatch);
    }
    if coeffs.len() != space.num_dofs() {
        return Err(Error::Dimension {
            expected: space.num_dofs(),
            got: coeffs.len(),
        });
    }
    let mut eta2 = vec![0.0; mesh.num_elements()];
    for (id, edge) in mesh.edges().iter().enumerate() {
        if edge.is_boundary() {
            continue;
        }
        let [a, b] = edge.vertices;
        let (t1, t2) = (edge.elements[0], edge.elements[1]);
        let mut jump = 0.0;
        for (t, w) in gauss_edge() {
            let g1 = gradient_at(space, coeffs, t1, edge_point(mesh, t1, a, b, t));
            let g2 = gradient_at(space, coeffs, t2, edge_point(mesh, t2, a, b, t));
            jump += w * ((g1[0] - g2[0]).powi(2) + (g1[1] - g2[1]).powi(2));
        }
        jump *= mesh.edge_length(id);
        for t in [t1, t2] {
            eta2[t] += mesh.diameter(t) * jump;
        }
    }
    let eta: Vec<f64> = eta2.into_iter().map(f64::sqrt).collect();
    let eta_max = eta.iter().copied().fold(0.0, f64::max);
    Ok(ErrorIndicators { eta, eta_max })
}

/// `{T : η_T ≥ θ η_max}`, or nothing when every indicator vanishes.
pub fn mark(indicators: &ErrorIndicators, theta: f64) -> Vec<usize> {
    if indicators.eta_max <= 0.0 {
        return Vec::new();
    }
    let cut = theta * indicators.eta_max;
    indicators
        .eta
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= cut)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementMode {
    /// Every element is split into four (two bisection rounds).
    Uniform,
    Adaptive,
}

#[derive(Debug, Clone)]
pub struct AdaptConfig {
    pub mode: RefinementMode,
    /// Number of solves, i.e. rows in the run table.
    pub iterations: usize,
    pub theta: f64,
    /// Bisections applied to each marked element per step.
    pub bisections: usize,
    /// The loop stops once `η_max` drops to this level.
    pub eta_tolerance: f64,
    pub discretization: Discretization,
    pub solver: SolverConfig,
}

impl AdaptConfig {
    pub fn new(mode: RefinementMode, iterations: usize, discretization: Discretization) -> Self {
        AdaptConfig {
            mode,
            iterations,
            theta: 0.7,
            bisections: 2,
            eta_tolerance: 1e-7,
            discretization,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidParameter(format!("theta = {} not in (0, 1]", self.theta)));
        }
        if self.bisections == 0 {
            return Err(Error::InvalidParameter("bisections per mark must be at least 1".into()));
        }
        if !(self.eta_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("eta tolerance must be nonnegative".into()));
        }
        self.solver.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub elements: usize,
    pub dofs: usize,
    pub status: SolverStatus,
    /// `J_h(u_h)`.
    pub objective: f64,
    pub solver_iterations: usize,
    pub wall_seconds: f64,
    pub eta_max: f64,
    pub errors: Option<ErrorReport>,
    pub model: ModelStats,
}

#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    /// Mesh, coefficients and indicators of the last successful solve.
    pub mesh: Option<Mesh>,
    pub coeffs: Vec<f64>,
    pub indicators: Option<ErrorIndicators>,
}

/// Passed to the per-iteration callback.
pub struct Snapshot<'a> {
    pub record: &'a IterationRecord,
    pub space: &'a FeSpace<'a>,
    pub coeffs: &'a [f64],
    pub indicators: &'a ErrorIndicators,
}

#[derive(Debug, Error)]
#[error("adaptive loop failed at iteration {}: {source}", .run.records.len().saturating_sub(1))]
pub struct AdaptError {
    /// Everything computed before (and including) the failing step.
    pub run: Box<AdaptiveRun>,
    #[source]
    pub source: Error,
}

pub fn adapt(problem: &BenchmarkProblem, config: &AdaptConfig) -> std::result::Result<AdaptiveRun, AdaptError> {
    adapt_with(problem, config, |_| Ok(()))
}

pub fn adapt_with(
    problem: &BenchmarkProblem,
    config: &AdaptConfig,
    mut on_iteration: impl FnMut(&Snapshot<'_>) -> Result<()>,
) -> std::result::Result<AdaptiveRun, AdaptError> {
    let mut run = AdaptiveRun {
        records: Vec::new(),
        converged: false,
        mesh: None,
        coeffs: Vec::new(),
        indicators: None,
    };
    let fail = |run: AdaptiveRun, source: Error| AdaptError {
        run: Box::new(run),
        source,
    };
    if let Err(e) = config.validate() {
        return Err(fail(run, e));
    }
    let mut mesh = match problem.domain.build() {
        Ok(m) => m,
        Err(e) => return Err(fail(run, e)),
    };
    for it in 0..config.iterations {
        let start = Instant::now();
        let step = (|| -> Result<(IterationRecord, Vec<f64>, ErrorIndicators)> {
            let sol = solve_on_mesh(problem, &mesh, &config.discretization, &config.solver)?;
            let space = FeSpace::new(&mesh, config.discretization.degree)?;
            let indicators = estimate(&mesh, &space, &sol.coeffs)?;
            let errors = problem
                .exact
                .as_ref()
                .map(|u| error_norms(&space, &sol.coeffs, |x| u(x)));
            let record = IterationRecord {
                iteration: it,
                elements: mesh.num_elements(),
                dofs: space.num_dofs(),
                status: sol.status(),
                objective: sol.functional,
                solver_iterations: sol.solver.iterations,
                wall_seconds: start.elapsed().as_secs_f64(),
                eta_max: indicators.eta_max,
                errors,
                model: sol.stats,
            };
            if record.status == SolverStatus::Optimal {
                on_iteration(&Snapshot {
                    record: &record,
                    space: &space,
                    coeffs: &sol.coeffs,
                    indicators: &indicators,
                })?;
            }
            Ok((record, sol.coeffs, indicators))
        })();
        let (record, coeffs, indicators) = match step {
            Ok(s) => s,
            Err(e) => return Err(fail(run, e)),
        };
        let status = record.status;
        let eta_max = record.eta_max;
        run.records.push(record);
        if status != SolverStatus::Optimal {
            return Err(fail(run, Error::SolverFailed(status)));
        }
        run.mesh = Some(mesh.clone());
        run.coeffs = coeffs;
        run.indicators = Some(indicators);
        if eta_max <= config.eta_tolerance {
            run.converged = true;
            break;
        }
        if it + 1 == config.iterations {
            break;
        }
        let refined = match config.mode {
            RefinementMode::Uniform => mesh.refine_uniform().and_then(|m| m.refine_uniform()),
            RefinementMode::Adaptive => {
                let marked = mark(run.indicators.as_ref().expect("set above"), config.theta);
                mesh.refine_marked(&marked, config.bisections)
            }
        };
        mesh = match refined {
            Ok(m) => m,
            Err(e) => return Err(fail(run, e)),
        };
    }
    Ok(run)
}
