//! Reduced KKT system of the interior-point iteration.
//!
//! Each iteration solves
//!
//! ```text
//! [ 0  Aᵀ  Gᵀ   ] [x]   [bx]
//! [ A  0   0    ] [y] = [by]
//! [ G  0  −WᵀW  ] [z]   [bz]
//! ```
//!
//! by eliminating `z`, which leaves the quasi-definite matrix
//! `[H + δI, Aᵀ; A, −δI]` with `H = Gᵀ(WᵀW)⁻¹G`. Its sparsity pattern is fixed
//! by the program, so the symbolic analysis (AMD ordering, elimination tree)
//! runs once and every iteration only refactorizes numerically.

use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LdltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};
use nalgebra::DMatrix;

use crate::program::ConeProgram;

/// Scaling data the KKT matrix depends on.
pub(crate) struct BlockWeights<'a> {
    /// `z_i / s_i` for each orthant coordinate.
    pub lp: &'a [f64],
    /// `(R Rᵀ)⁻¹` for each PSD cone.
    pub psd: &'a [DMatrix<f64>],
}

#[derive(Debug)]
pub(crate) struct KktError;

pub(crate) struct Kkt {
    n: usize,
    p: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
    lp_pos: Vec<Vec<usize>>,
    psd_pos: Vec<Vec<usize>>,
    eq_pos: Vec<Vec<usize>>,
    symbolic: SymbolicCholesky<usize>,
    l_values: Vec<f64>,
    signs: Vec<i8>,
    buf: MemBuffer,
    static_reg: f64,
    factored: bool,
}

impl Kkt {
    pub fn new(prog: &ConeProgram, static_reg: f64) -> Self {
        let n = prog.num_vars;
        let p = prog.num_eq();
        let dim = n + p;
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for (j, col) in cols.iter_mut().enumerate() {
            col.push(j);
        }
        let add_clique = |vars: &[usize], cols: &mut Vec<Vec<usize>>| {
            for (a, &va) in vars.iter().enumerate() {
                for &vb in &vars[a..] {
                    let (i, j) = (va.min(vb), va.max(vb));
                    cols[j].push(i);
                }
            }
        };
        for row in &prog.lp_rows {
            let vars: Vec<usize> = row.iter().map(|e| e.0).collect();
            add_clique(&vars, &mut cols);
        }
        for cone in &prog.psd {
            add_clique(&cone.vars, &mut cols);
        }
        for (r, row) in prog.eq_rows.iter().enumerate() {
            for &(v, _) in row {
                cols[n + r].push(v);
            }
        }
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for col in cols.iter_mut() {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        let find = |i: usize, j: usize| -> usize {
            let (i, j) = (i.min(j), i.max(j));
            let s = &row_idx[col_ptr[j]..col_ptr[j + 1]];
            col_ptr[j] + s.binary_search(&i).expect("entry in pattern")
        };
        let pair_positions = |vars: &[usize]| -> Vec<usize> {
            let mut pos = Vec::with_capacity(vars.len() * (vars.len() + 1) / 2);
            for (a, &va) in vars.iter().enumerate() {
                for &vb in &vars[a..] {
                    pos.push(find(va, vb));
                }
            }
            pos
        };
        let diag = (0..dim).map(|j| find(j, j)).collect();
        let lp_pos = prog
            .lp_rows
            .iter()
            .map(|row| pair_positions(&row.iter().map(|e| e.0).collect::<Vec<_>>()))
            .collect();
        let psd_pos = prog.psd.iter().map(|c| pair_positions(&c.vars)).collect();
        let eq_pos = prog
            .eq_rows
            .iter()
            .enumerate()
            .map(|(r, row)| row.iter().map(|&(v, _)| find(v, n + r)).collect())
            .collect();

        let sym = SymbolicSparseColMatRef::new_checked(dim, dim, &col_ptr, None, &row_idx);
        let symbolic = factorize_symbolic_cholesky(
            sym,
            Side::Upper,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams::default(),
        )
        .expect("symbolic factorization");
        let req = StackReq::any_of(&[
            symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()),
            symbolic.solve_in_place_scratch::<f64>(1, Par::Seq),
        ]);
        let l_values = vec![0.0; symbolic.len_val()];
        let mut signs = vec![1i8; dim];
        for s in &mut signs[n..] {
            *s = -1;
        }
        let nnz = row_idx.len();
        Kkt {
            n,
            p,
            col_ptr,
            row_idx,
            values: vec![0.0; nnz],
            diag,
            lp_pos,
            psd_pos,
            eq_pos,
            symbolic,
            l_values,
            signs,
            buf: MemBuffer::new(req),
            static_reg,
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n + self.p
    }

    /// Assembles and factorizes the matrix for the given scaling.
    pub fn factor(&mut self, prog: &ConeProgram, w: &BlockWeights<'_>) -> Result<(), KktError> {
        self.factored = false;
        self.values.fill(0.0);
        for (r, row) in prog.lp_rows.iter().enumerate() {
            let d = w.lp[r];
            let pos = &self.lp_pos[r];
            let mut k = 0;
            for (a, &(_, ca)) in row.iter().enumerate() {
                for &(_, cb) in &row[a..] {
                    self.values[pos[k]] += d * ca * cb;
                    k += 1;
                }
            }
        }
        for (c, cone) in prog.psd.iter().enumerate() {
            let m = &w.psd[c];
            // tr(F_a M F_b M) for every pair a ≤ b
            let scaled: Vec<DMatrix<f64>> = cone.coeffs.iter().map(|f| m * f * m).collect();
            let pos = &self.psd_pos[c];
            let mut k = 0;
            for (a, fa) in cone.coeffs.iter().enumerate() {
                for pb in &scaled[a..] {
                    self.values[pos[k]] += fa.dot(pb);
                    k += 1;
                }
            }
        }
        for (r, row) in prog.eq_rows.iter().enumerate() {
            for (&(_, a), &pos) in row.iter().zip(&self.eq_pos[r]) {
                self.values[pos] += a;
            }
        }
        for j in 0..self.n {
            self.values[self.diag[j]] += self.static_reg;
        }
        for j in self.n..self.dim() {
            self.values[self.diag[j]] -= self.static_reg;
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(KktError);
        }
        let dim = self.dim();
        let sym = SymbolicSparseColMatRef::new_checked(dim, dim, &self.col_ptr, None, &self.row_idx);
        let mat = SparseColMatRef::new(sym, &self.values);
        let stack = MemStack::new(&mut self.buf);
        self.symbolic
            .factorize_numeric_ldlt::<f64>(
                &mut self.l_values,
                mat,
                Side::Upper,
                LdltRegularization {
                    dynamic_regularization_signs: Some(&self.signs),
                    dynamic_regularization_delta: self.static_reg.max(1e-12),
                    dynamic_regularization_epsilon: 1e-13,
                },
                Par::Seq,
                stack,
                Default::default(),
            )
            .map_err(|_| KktError)?;
        if self.l_values.iter().any(|v| !v.is_finite()) {
            return Err(KktError);
        }
        self.factored = true;
        Ok(())
    }

    fn solve_factored(&mut self, rhs: &mut [f64]) {
        debug_assert!(self.factored);
        let ldlt = LdltRef::new(&self.symbolic, &self.l_values);
        let dim = rhs.len();
        let mat = MatMut::from_column_major_slice_mut(rhs, dim, 1);
        let stack = MemStack::new(&mut self.buf);
        ldlt.solve_in_place_with_conj(Conj::No, mat, Par::Seq, stack);
    }

    /// `out = K v` for the unregularized matrix.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for j in 0..self.dim() {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let a = self.values[k];
                out[i] += a * v[j];
                if i != j {
                    out[j] += a * v[i];
                }
            }
        }
        for j in 0..self.n {
            out[j] -= self.static_reg * v[j];
        }
        for j in self.n..self.dim() {
            out[j] += self.static_reg * v[j];
        }
    }

    /// Solves the reduced system in place with iterative refinement against
    /// the unregularized matrix.
    pub fn solve(&mut self, rhs: &mut [f64]) {
        let b = rhs.to_vec();
        self.solve_factored(rhs);
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut res = vec![0.0; b.len()];
        let mut prev = f64::INFINITY;
        for _ in 0..8 {
            self.apply(rhs, &mut res);
            for (r, bi) in res.iter_mut().zip(&b) {
                *r = bi - *r;
            }
            let rn = res.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn <= 1e-14 * (1.0 + bnorm) || rn >= 0.5 * prev {
                break;
            }
            prev = rn;
            self.solve_factored(&mut res);
            for (x, d) in rhs.iter_mut().zip(&res) {
                *x += d;
            }
        }
    }
}
