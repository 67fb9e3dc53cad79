//! Standard-form semidefinite programs.
//!
//! A problem is
//!
//! ```text
//! minimize    c·x
//! subject to  a_k·x = b_k             (equality rows)
//!             a_k·x ≤ b_k             (inequality rows)
//!             C_j + Σ_v x_v F_{j,v} ⪰ 0  (one small PSD block per j)
//! ```
//!
//! Block matrices are stored as their upper triangle; an off-diagonal entry
//! `(i, j)` with `i < j` stands for both `(i, j)` and `(j, i)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    Equality,
    LessEqual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub kind: ConstraintKind,
    /// Sparse coefficients `(variable, value)`.
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn equality(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self {
            kind: ConstraintKind::Equality,
            coeffs,
            rhs,
        }
    }

    pub fn less_equal(coeffs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self {
            kind: ConstraintKind::LessEqual,
            coeffs,
            rhs,
        }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * x[v]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let r = self.lhs(x) - self.rhs;
        match self.kind {
            ConstraintKind::Equality => r.abs(),
            ConstraintKind::LessEqual => r.max(0.0),
        }
    }
}

/// One entry of an affine block: `value` at `(row, col)` of the matrix
/// multiplying variable `var`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub var: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A PSD constraint `constant + Σ x_v F_v ⪰ 0` of small dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub size: usize,
    /// Upper-triangle entries `(row, col, value)` of the constant term.
    pub constant: Vec<(usize, usize, f64)>,
    pub entries: Vec<BlockEntry>,
}

impl PsdBlock {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            constant: Vec::new(),
            entries: Vec::new(),
        }
    }

    pub fn with_constant(mut self, row: usize, col: usize, value: f64) -> Self {
        self.push_constant(row, col, value);
        self
    }

    pub fn with_entry(mut self, var: usize, row: usize, col: usize, value: f64) -> Self {
        self.push_entry(var, row, col, value);
        self
    }

    pub fn push_constant(&mut self, row: usize, col: usize, value: f64) {
        let (row, col) = (row.min(col), row.max(col));
        self.constant.push((row, col, value));
    }

    pub fn push_entry(&mut self, var: usize, row: usize, col: usize, value: f64) {
        let (row, col) = (row.min(col), row.max(col));
        self.entries.push(BlockEntry { var, row, col, value });
    }

    /// Dense symmetric value of the block at `x`.
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for &(i, j, v) in &self.constant {
            add_sym(&mut m, i, j, v);
        }
        for e in &self.entries {
            add_sym(&mut m, e.row, e.col, e.value * x[e.var]);
        }
        m
    }

    /// Dense symmetric matrix multiplying `var` (zero if absent).
    pub fn coefficient(&self, var: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for e in self.entries.iter().filter(|e| e.var == var) {
            add_sym(&mut m, e.row, e.col, e.value);
        }
        m
    }

    pub fn constant_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for &(i, j, v) in &self.constant {
            add_sym(&mut m, i, j, v);
        }
        m
    }

    /// Sorted, deduplicated list of variables the block depends on.
    pub fn variables(&self) -> Vec<usize> {
        let mut vars: Vec<usize> = self.entries.iter().map(|e| e.var).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }
}

fn add_sym(m: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
    m[(i, j)] += v;
    if i != j {
        m[(j, i)] += v;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub cost: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
    pub blocks: Vec<PsdBlock>,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_variables(num_vars: usize) -> Self {
        Self {
            cost: vec![0.0; num_vars],
            ..Self::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    /// Appends a variable with the given objective coefficient and returns its index.
    pub fn add_variable(&mut self, cost: f64) -> usize {
        self.cost.push(cost);
        self.cost.len() - 1
    }

    pub fn add_constraint(&mut self, c: LinearConstraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn add_block(&mut self, b: PsdBlock) -> usize {
        self.blocks.push(b);
        self.blocks.len() - 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn num_equalities(&self) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Equality)
            .count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.cost.iter().any(|c| !c.is_finite()) {
            return Err(SdpError::NonFinite("cost vector"));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if !c.coeffs.iter().any(|&(_, a)| a != 0.0) {
                return Err(SdpError::EmptyConstraint(k));
            }
            for &(v, a) in &c.coeffs {
                if v >= n {
                    return Err(SdpError::VariableOutOfRange { index: v, num_vars: n });
                }
                if !a.is_finite() {
                    return Err(SdpError::NonFinite("constraint coefficient"));
                }
            }
            if !c.rhs.is_finite() {
                return Err(SdpError::NonFinite("constraint right-hand side"));
            }
        }
        for (k, b) in self.blocks.iter().enumerate() {
            if b.size == 0 {
                return Err(SdpError::EmptyBlock(k));
            }
            let check = |row: usize, col: usize| -> Result<()> {
                if row >= b.size || col >= b.size {
                    Err(SdpError::EntryOutOfRange {
                        block: k,
                        row,
                        col,
                        size: b.size,
                    })
                } else {
                    Ok(())
                }
            };
            for &(i, j, v) in &b.constant {
                check(i, j)?;
                if !v.is_finite() {
                    return Err(SdpError::NonFinite("block constant"));
                }
            }
            for e in &b.entries {
                check(e.row, e.col)?;
                if e.var >= n {
                    return Err(SdpError::VariableOutOfRange {
                        index: e.var,
                        num_vars: n,
                    });
                }
                if !e.value.is_finite() {
                    return Err(SdpError::NonFinite("block entry"));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any linear row or PSD block (negative
    /// eigenvalue magnitude) at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let lin = self.constraints.iter().map(|c| c.violation(x)).fold(0.0, f64::max);
        let psd = self
            .blocks
            .iter()
            .map(|b| (-min_eigenvalue(&b.evaluate(x))).max(0.0))
            .fold(0.0, f64::max);
        lin.max(psd)
    }
}

/// Smallest eigenvalue of a small dense symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)],
        2 => {
            let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            mean - rad
        }
        _ => m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
    }
}
