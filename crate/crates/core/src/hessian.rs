//! Weak FE-Hessians `H_s u = [−∫ ∂_i u ∂_j φ_s]` (optionally with the
//! boundary flux `+∫_∂Ω ∂_i u φ_s ν_j`) and FE-convexity checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::femspace::{FeSpace, TestBasis};
use crate::mesh::Point;
use crate::quadrature::{gauss_edge, QuadratureRule};

pub type Sym2 = [[f64; 2]; 2];

/// Linear map `u ↦ H_s u` for one test function, stored as the matrices
/// `H_rs` of the trial basis functions whose support meets that of `φ_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianForm {
    pub test_index: usize,
    /// `(r, H_rs)` sorted by trial DOF.
    pub entries: Vec<(usize, Sym2)>,
    pub with_boundary_term: bool,
    /// Dimension of the trial space the form was assembled against.
    pub trial_dofs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianEvaluation {
    pub matrix: Sym2,
    pub min_eigenvalue: f64,
}

/// Smallest eigenvalue of a symmetric 2×2 matrix.
pub fn min_eig2(m: &Sym2) -> f64 {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
}

impl HessianForm {
    pub fn evaluate(&self, coeffs: &[f64]) -> Result<HessianEvaluation> {
        if coeffs.len() != self.trial_dofs {
            return Err(Error::Dimension {
                expected: self.trial_dofs,
                got: coeffs.len(),
            });
        }
        let mut m = [[0.0; 2]; 2];
        for (r, h) in &self.entries {
            let c = coeffs[*r];
            m[0][0] += c * h[0][0];
            m[0][1] += c * h[0][1];
            m[1][1] += c * h[1][1];
        }
        m[1][0] = m[0][1];
        Ok(HessianEvaluation {
            matrix: m,
            min_eigenvalue: min_eig2(&m),
        })
    }
}

/// Assembles one form per test function.
pub fn assemble(trial: &FeSpace<'_>, test: &TestBasis<'_>, with_boundary: bool) -> Result<Vec<HessianForm>> {
    let mesh = trial.mesh();
    if !std::ptr::eq(mesh, test.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let rule = QuadratureRule::degree4();
    let gauss = gauss_edge();
    let mut forms = Vec::with_capacity(test.len());
    for (s, tf) in test.functions.iter().enumerate() {
        let mut acc: BTreeMap<usize, [[f64; 2]; 2]> = BTreeMap::new();
        for &e in &tf.support {
            let dofs = trial.element_dofs(e);
            let jac = 2.0 * mesh.area(e);
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let (_, gs) = test.eval_local(s, e, *l);
                let b = trial.basis(e, *l);
                for (k, &r) in dofs.iter().enumerate() {
                    let gr = b.grads[k];
                    let a = acc.entry(r).or_insert([[0.0; 2]; 2]);
                    for i in 0..2 {
                        for j in 0..2 {
                            a[i][j] -= w * jac * gr[i] * gs[j];
                        }
                    }
                }
            }
            if with_boundary {
                let edges = mesh.element_edges(e);
                for (k, &edge) in edges.iter().enumerate() {
                    let Some(nu) = mesh.edges()[edge].normal else {
                        continue;
                    };
                    let len = mesh.edge_length(edge);
                    let (va, vb) = ((k + 1) % 3, (k + 2) % 3);
                    for (t, w) in gauss {
                        let mut l = [0.0; 3];
                        l[va] = 1.0 - t;
                        l[vb] = t;
                        let (phi, _) = test.eval_local(s, e, l);
                        if phi == 0.0 {
                            continue;
                        }
                        let b = trial.basis(e, l);
                        for (kk, &r) in dofs.iter().enumerate() {
                            let gr = b.grads[kk];
                            let a = acc.entry(r).or_insert([[0.0; 2]; 2]);
                            for i in 0..2 {
                                for j in 0..2 {
                                    a[i][j] += w * len * gr[i] * phi * nu[j];
                                }
                            }
                        }
                    }
                }
            }
        }
        let entries = acc
            .into_iter()
            .map(|(r, a)| {
                let off = 0.5 * (a[0][1] + a[1][0]);
                (r, [[a[0][0], off], [off, a[1][1]]])
            })
            .collect();
        forms.push(HessianForm {
            test_index: s,
            entries,
            with_boundary_term: with_boundary,
            trial_dofs: trial.num_dofs(),
        });
    }
    Ok(forms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub is_fe_convex: bool,
    /// Test index and eigenvalue of the most negative Hessian.
    pub worst: Option<(usize, f64)>,
    pub min_eigenvalues: Vec<f64>,
}

/// FE-convex ⟺ `λ_min(H_s u) ≥ −tol` for every test function.
pub fn check_fe_convexity(forms: &[HessianForm], coeffs: &[f64], tol: f64) -> Result<ConvexityReport> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol} must be nonnegative")));
    }
    let mut mins = Vec::with_capacity(forms.len());
    let mut worst: Option<(usize, f64)> = None;
    for f in forms {
        let ev = f.evaluate(coeffs)?;
        mins.push(ev.min_eigenvalue);
        if worst.is_none_or(|(_, w)| ev.min_eigenvalue < w) {
            worst = Some((f.test_index, ev.min_eigenvalue));
        }
    }
    Ok(ConvexityReport {
        is_fe_convex: worst.is_none_or(|(_, w)| w >= -tol),
        worst,
        min_eigenvalues: mins,
    })
}

/// Nodal values `u(a + i·h, b + j·h)` for `i, j ∈ {−1, 0, 1}`, indexed
/// `values[i + 1][j + 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilValues {
    pub values: [[f64; 3]; 3],
}

impl StencilValues {
    pub fn sample(f: impl Fn(Point) -> f64, center: Point, h: f64) -> Self {
        let mut values = [[0.0; 3]; 3];
        for (i, row) in values.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f([center[0] + (i as f64 - 1.0) * h, center[1] + (j as f64 - 1.0) * h]);
            }
        }
        Self { values }
    }

    /// `u(a + i·h, b + j·h)`
    pub fn at(&self, i: i32, j: i32) -> f64 {
        self.values[(i + 1) as usize][(j + 1) as usize]
    }
}

fn second_differences(u: &StencilValues) -> (f64, f64) {
    let alpha = u.at(-1, 0) + u.at(1, 0) - 2.0 * u.at(0, 0);
    let gamma = u.at(0, -1) + u.at(0, 1) - 2.0 * u.at(0, 0);
    (alpha, gamma)
}

/// FE-Hessian of a P1 function at an interior node of the `/`-diagonal mesh.
pub fn stencil_diagonal(u: &StencilValues) -> Sym2 {
    let (alpha, gamma) = second_differences(u);
    let beta =
        0.5 * (2.0 * u.at(0, 0) + u.at(-1, -1) + u.at(1, 1) - (u.at(0, -1) + u.at(0, 1) + u.at(-1, 0) + u.at(1, 0)));
    [[alpha, beta], [beta, gamma]]
}

/// FE-Hessian of a P1 function at an eight-neighbor node of the Union Jack mesh.
pub fn stencil_union_jack(u: &StencilValues) -> Sym2 {
    let (alpha, gamma) = second_differences(u);
    let beta = 0.5 * (u.at(1, 1) + u.at(-1, -1) - u.at(1, -1) - u.at(-1, 1));
    [[alpha, beta], [beta, gamma]]
}
