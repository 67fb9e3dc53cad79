//! Independent optimality check of a solver result against the source problem.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::problem::{min_eigenvalue, ConstraintKind, SdpProblem};
use crate::solver::SolverResult;

/// Absolute KKT violations at the reported primal/dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Largest linear-row violation or negative block eigenvalue.
    pub primal_infeasibility: f64,
    /// `‖c + Σ y_k a_k − Σ_j ⟨Z_j, F_j,·⟩‖_∞` plus any sign violation of the duals.
    pub dual_infeasibility: f64,
    /// Largest `|y_k (b_k − a_k·x)|` or `|⟨Z_j, S_j⟩|`.
    pub complementarity: f64,
    /// `|c·x − dual objective|`.
    pub gap: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.primal_infeasibility
            .max(self.dual_infeasibility)
            .max(self.complementarity)
            .max(self.gap)
    }
}

pub fn validate_kkt(problem: &SdpProblem, result: &SolverResult) -> KktReport {
    let x = &result.x;
    let primal_infeasibility = problem.max_violation(x);

    let mut grad = problem.cost.clone();
    let mut sign_violation: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut dual_obj = 0.0;
    for (c, &y) in problem.constraints.iter().zip(&result.constraint_duals) {
        for &(v, a) in &c.coeffs {
            grad[v] += y * a;
        }
        dual_obj -= y * c.rhs;
        if c.kind == ConstraintKind::LessEqual {
            sign_violation = sign_violation.max(-y);
            complementarity = complementarity.max((y * (c.rhs - c.lhs(x))).abs());
        }
    }
    for (b, zflat) in problem.blocks.iter().zip(&result.block_duals) {
        if zflat.len() != b.size * b.size {
            sign_violation = f64::INFINITY;
            continue;
        }
        let z = DMatrix::from_row_slice(b.size, b.size, zflat);
        sign_violation = sign_violation.max(-min_eigenvalue(&z));
        for e in &b.entries {
            let w = if e.row == e.col { 1.0 } else { 2.0 };
            grad[e.var] -= w * e.value * z[(e.row, e.col)];
        }
        dual_obj -= b.constant_matrix().dot(&z);
        complementarity = complementarity.max(b.evaluate(x).dot(&z).abs());
    }
    let stationarity = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    KktReport {
        primal_infeasibility,
        dual_infeasibility: stationarity.max(sign_violation),
        complementarity,
        gap: (problem.objective(x) - dual_obj).abs(),
    }
}
