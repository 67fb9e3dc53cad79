//! Normalized conic form used by the interior-point solver.
//!
//! ```text
//! minimize c·x   s.t.  A x = b,   h − G x ∈ K
//! ```
//!
//! with `K` the product of a nonnegative orthant (one coordinate per
//! inequality row) and small PSD cones. For a PSD block
//! `C + Σ x_v F_v ⪰ 0` the slack is `h − G x` with `h = C`, `G x = −Σ x_v F_v`.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::problem::{ConstraintKind, SdpProblem};

/// Sparse row with strictly increasing variable indices.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct PsdCone {
    pub size: usize,
    /// Index of the originating block in the source problem.
    pub origin: usize,
    pub constant: DMatrix<f64>,
    /// Sorted distinct variables of the block.
    pub vars: Vec<usize>,
    /// `coeffs[k]` multiplies `vars[k]`.
    pub coeffs: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct ConeProgram {
    pub num_vars: usize,
    pub cost: Vec<f64>,
    pub eq_rows: Vec<SparseRow>,
    pub eq_rhs: Vec<f64>,
    /// Source constraint index of each kept equality row.
    pub eq_origin: Vec<usize>,
    pub lp_rows: Vec<SparseRow>,
    pub lp_rhs: Vec<f64>,
    pub lp_origin: Vec<usize>,
    pub psd: Vec<PsdCone>,
    /// Equality rows removed by presolve as linearly dependent.
    pub redundant_eq: Vec<usize>,
    /// Set when presolve found an inconsistent dependent equality row.
    pub inconsistent_eq: Option<usize>,
}

/// Relative tolerance below which a reduced equality row counts as dependent.
const RANK_TOL: f64 = 1e-10;

impl ConeProgram {
    pub fn from_problem(problem: &SdpProblem) -> Result<Self> {
        problem.validate()?;
        let n = problem.num_vars();
        let mut prog = ConeProgram {
            num_vars: n,
            cost: problem.cost.clone(),
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            eq_origin: Vec::new(),
            lp_rows: Vec::new(),
            lp_rhs: Vec::new(),
            lp_origin: Vec::new(),
            psd: Vec::new(),
            redundant_eq: Vec::new(),
            inconsistent_eq: None,
        };
        let mut eq_candidates = Vec::new();
        for (k, c) in problem.constraints.iter().enumerate() {
            let row = normalize_row(&c.coeffs);
            match c.kind {
                ConstraintKind::Equality => eq_candidates.push((k, row, c.rhs)),
                ConstraintKind::LessEqual => {
                    prog.lp_rows.push(row);
                    prog.lp_rhs.push(c.rhs);
                    prog.lp_origin.push(k);
                }
            }
        }
        prog.presolve_equalities(eq_candidates);

        for (k, b) in problem.blocks.iter().enumerate() {
            let vars = b.variables();
            let coeffs = vars.iter().map(|&v| b.coefficient(v)).collect();
            prog.psd.push(PsdCone {
                size: b.size,
                origin: k,
                constant: b.constant_matrix(),
                vars,
                coeffs,
            });
        }
        Ok(prog)
    }

    /// Drops linearly dependent equality rows (Gram–Schmidt on dense copies).
    fn presolve_equalities(&mut self, rows: Vec<(usize, SparseRow, f64)>) {
        let n = self.num_vars;
        let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
        for (origin, row, rhs) in rows {
            let mut dense = vec![0.0; n];
            for &(v, a) in &row {
                dense[v] = a;
            }
            let norm0 = norm(&dense);
            let mut r = rhs;
            for (q, qr) in &basis {
                let proj: f64 = dot(q, &dense);
                if proj != 0.0 {
                    for (d, qi) in dense.iter_mut().zip(q) {
                        *d -= proj * qi;
                    }
                    r -= proj * qr;
                }
            }
            let nrm = norm(&dense);
            if nrm <= RANK_TOL * norm0.max(1.0) {
                self.redundant_eq.push(origin);
                if r.abs() > 1e-8 * (1.0 + rhs.abs()) && self.inconsistent_eq.is_none() {
                    self.inconsistent_eq = Some(origin);
                }
                continue;
            }
            for d in dense.iter_mut() {
                *d /= nrm;
            }
            basis.push((dense, r / nrm));
            self.eq_rows.push(row);
            self.eq_rhs.push(rhs);
            self.eq_origin.push(origin);
        }
    }

    pub fn num_eq(&self) -> usize {
        self.eq_rows.len()
    }

    pub fn num_lp(&self) -> usize {
        self.lp_rows.len()
    }

    /// Barrier degree of the cone.
    pub fn degree(&self) -> usize {
        self.num_lp() + self.psd.iter().map(|c| c.size).sum::<usize>()
    }
}

fn normalize_row(coeffs: &[(usize, f64)]) -> SparseRow {
    let mut row: SparseRow = coeffs.to_vec();
    row.sort_by_key(|&(v, _)| v);
    let mut out: SparseRow = Vec::with_capacity(row.len());
    for (v, a) in row {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += a,
            _ => out.push((v, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
