//! Mesh → trial space → FE-Hessians → SDP → coefficients.

use fecvx_sdp::{solve, SolverConfig, SolverResult, SolverStatus};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::femspace::{build_test_basis, FeSpace};
use crate::hessian::assemble;
use crate::mesh::Mesh;
use crate::problems::{BenchmarkProblem, Discretization};
use crate::quadrature::QuadratureRule;
use crate::sdpmodel::{add_convexity_constraints, add_problem_constraints, build_objective, SdpModel};

/// Size of an assembled SDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub variables: usize,
    pub blocks: usize,
    pub convexity_blocks: usize,
    pub linear_constraints: usize,
}

impl ModelStats {
    pub fn of(model: &SdpModel) -> Self {
        ModelStats {
            variables: model.problem.num_vars(),
            blocks: model.problem.blocks.len(),
            convexity_blocks: model.num_convexity_blocks,
            linear_constraints: model.problem.constraints.len(),
        }
    }
}

/// Assembles the full SDP for `problem` on the mesh of `space`.
pub fn build_model(problem: &BenchmarkProblem, space: &FeSpace<'_>, disc: &Discretization) -> Result<SdpModel> {
    let rule = QuadratureRule::degree4();
    let mut model = build_objective(space, &rule, &problem.objective)?;
    let tests = build_test_basis(space.mesh(), disc.test_degree, disc.boundary_tests);
    let forms = assemble(space, &tests, disc.boundary_term)?;
    add_convexity_constraints(&mut model, &forms)?;
    for c in &problem.constraints {
        add_problem_constraints(&mut model, space, &rule, c)?;
    }
    Ok(model)
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub coeffs: Vec<f64>,
    /// `J_h` at `coeffs`, recomputed by quadrature.
    pub functional: f64,
    pub stats: ModelStats,
    pub solver: SolverResult,
}

impl DiscreteSolution {
    pub fn status(&self) -> SolverStatus {
        self.solver.status
    }
}

/// Builds and solves the SDP on `mesh`. Non-optimal solver exits are
/// returned as-is; callers decide whether to treat them as failures.
pub fn solve_on_mesh(
    problem: &BenchmarkProblem,
    mesh: &Mesh,
    disc: &Discretization,
    config: &SolverConfig,
) -> Result<DiscreteSolution> {
    let space = FeSpace::new(mesh, disc.degree)?;
    let model = build_model(problem, &space, disc)?;
    let solver = solve(&model.problem, config)?;
    let coeffs = model.coefficients(&solver.x).to_vec();
    let functional = problem
        .objective
        .functional(&space, &QuadratureRule::degree4(), &coeffs);
    Ok(DiscreteSolution {
        coeffs,
        functional,
        stats: ModelStats::of(&model),
        solver,
    })
}
