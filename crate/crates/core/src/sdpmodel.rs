//! Discrete functionals over FE-convex functions as semidefinite programs.
//!
//! For `J(u) = ∫ α|∇(u − v₁)|² + β|u − v₂|² + γ·∇u + f u` quadrature turns
//! every squared term into an auxiliary variable bounded below through a
//! 2×2 epigraph block `[[1, e], [e, t]] ⪰ 0 ⟺ t ≥ e²`. Variables are laid
//! out as `[u DOFs | t | s]` in creation order.

use std::fmt;
use std::sync::Arc;

use fecvx_sdp::{LinearConstraint, PsdBlock, SdpProblem};

use crate::error::{Error, Result};
use crate::femspace::FeSpace;
use crate::hessian::HessianForm;
use crate::mesh::Point;
use crate::quadrature::QuadratureRule;

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;

#[derive(Clone, Default)]
pub enum ScalarField {
    #[default]
    Zero,
    Constant(f64),
    Function(ScalarFn),
}

impl ScalarField {
    pub fn function(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Function(Arc::new(f))
    }

    pub fn eval(&self, p: Point) -> f64 {
        match self {
            ScalarField::Zero => 0.0,
            ScalarField::Constant(c) => *c,
            ScalarField::Function(f) => f(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Zero) || matches!(self, ScalarField::Constant(c) if *c == 0.0)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Zero => f.write_str("Zero"),
            ScalarField::Constant(c) => write!(f, "Constant({c})"),
            ScalarField::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Clone, Default)]
pub enum VectorField {
    #[default]
    Zero,
    Constant(Point),
    Function(VectorFn),
}

impl VectorField {
    pub fn function(f: impl Fn(Point) -> Point + Send + Sync + 'static) -> Self {
        VectorField::Function(Arc::new(f))
    }

    pub fn eval(&self, p: Point) -> Point {
        match self {
            VectorField::Zero => [0.0, 0.0],
            VectorField::Constant(c) => *c,
            VectorField::Function(f) => f(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorField::Zero) || matches!(self, VectorField::Constant(c) if *c == [0.0, 0.0])
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorField::Zero => f.write_str("Zero"),
            VectorField::Constant(c) => write!(f, "Constant({c:?})"),
            VectorField::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Coefficients of `∫ α|∇(u − v₁)|² + β|u − v₂|² + γ·∇u + f u`.
#[derive(Debug, Clone, Default)]
pub struct ObjectiveSpec {
    pub alpha: ScalarField,
    pub v1: ScalarField,
    /// `∇v₁`, needed whenever `α ≠ 0` and `v₁ ≠ 0`.
    pub grad_v1: VectorField,
    pub beta: ScalarField,
    pub v2: ScalarField,
    pub gamma: VectorField,
    pub f: ScalarField,
}

impl ObjectiveSpec {
    /// `J_h(u)` evaluated directly by quadrature.
    pub fn functional(&self, space: &FeSpace<'_>, rule: &QuadratureRule, coeffs: &[f64]) -> f64 {
        space.integrate(coeffs, rule, |x, u, g| {
            let dv = self.grad_v1.eval(x);
            let gam = self.gamma.eval(x);
            let (e0, e1) = (g[0] - dv[0], g[1] - dv[1]);
            self.alpha.eval(x) * (e0 * e0 + e1 * e1)
                + self.beta.eval(x) * (u - self.v2.eval(x)).powi(2)
                + gam[0] * g[0]
                + gam[1] * g[1]
                + self.f.eval(x) * u
        })
    }
}

#[derive(Debug, Clone)]
pub enum ProblemConstraint {
    /// `∫_Ω u = 0`
    MeanZero,
    /// `u(point) = value`
    PointValue { point: Point, value: f64 },
    /// `lo ≤ ∂_j u ≤ hi` componentwise on every element. The gradient is
    /// affine per element, so checking the element vertices is exact.
    GradientBox { lo: f64, hi: f64 },
    /// `u = g` at every boundary DOF.
    BoundaryValues(ScalarField),
}

/// SDP whose first `num_dofs` variables are the trial coefficients.
#[derive(Debug, Clone)]
pub struct SdpModel {
    pub problem: SdpProblem,
    pub num_dofs: usize,
    /// Epigraph variables of the gradient terms.
    pub num_t: usize,
    /// Epigraph variables of the value terms.
    pub num_s: usize,
    pub num_convexity_blocks: usize,
}

impl SdpModel {
    pub fn coefficients<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[..self.num_dofs]
    }
}

fn push_nonzero(block: &mut PsdBlock, var: usize, i: usize, j: usize, v: f64) {
    if v != 0.0 {
        block.push_entry(var, i, j, v);
    }
}

/// Linear objective plus epigraph blocks for the quadratic terms.
pub fn build_objective(space: &FeSpace<'_>, rule: &QuadratureRule, spec: &ObjectiveSpec) -> Result<SdpModel> {
    let mesh = space.mesh();
    let n = space.num_dofs();
    let mut p = SdpProblem::with_variables(n);
    let (mut num_t, mut num_s) = (0, 0);
    for e in 0..mesh.num_elements() {
        let jac = 2.0 * mesh.area(e);
        let dofs = space.element_dofs(e);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.point_at(e, *l);
            let wt = w * jac;
            let b = space.basis(e, *l);
            let alpha = spec.alpha.eval(x);
            let beta = spec.beta.eval(x);
            for (name, value) in [("alpha", alpha), ("beta", beta)] {
                if value < 0.0 || !value.is_finite() {
                    return Err(Error::NegativeCoefficient { name, value, at: x });
                }
            }
            let gam = spec.gamma.eval(x);
            let f = spec.f.eval(x);
            for (k, &r) in dofs.iter().enumerate() {
                p.cost[r] += wt * (gam[0] * b.grads[k][0] + gam[1] * b.grads[k][1] + f * b.values[k]);
            }
            if alpha > 0.0 {
                let dv = spec.grad_v1.eval(x);
                for j in 0..2 {
                    let t = p.add_variable(wt * alpha);
                    num_t += 1;
                    let mut block = PsdBlock::new(2).with_constant(0, 0, 1.0);
                    if dv[j] != 0.0 {
                        block.push_constant(0, 1, -dv[j]);
                    }
                    for (k, &r) in dofs.iter().enumerate() {
                        push_nonzero(&mut block, r, 0, 1, b.grads[k][j]);
                    }
                    block.push_entry(t, 1, 1, 1.0);
                    p.add_block(block);
                }
            }
            if beta > 0.0 {
                let s = p.add_variable(wt * beta);
                num_s += 1;
                let mut block = PsdBlock::new(2).with_constant(0, 0, 1.0);
                let v2 = spec.v2.eval(x);
                if v2 != 0.0 {
                    block.push_constant(0, 1, -v2);
                }
                for (k, &r) in dofs.iter().enumerate() {
                    push_nonzero(&mut block, r, 0, 1, b.values[k]);
                }
                block.push_entry(s, 1, 1, 1.0);
                p.add_block(block);
            }
        }
    }
    Ok(SdpModel {
        problem: p,
        num_dofs: n,
        num_t,
        num_s,
        num_convexity_blocks: 0,
    })
}

/// One 2×2 block `H_s u ⪰ 0` per form.
pub fn add_convexity_constraints(model: &mut SdpModel, forms: &[HessianForm]) -> Result<()> {
    for form in forms {
        if form.trial_dofs != model.num_dofs {
            return Err(Error::Dimension {
                expected: model.num_dofs,
                got: form.trial_dofs,
            });
        }
        let scale = form
            .entries
            .iter()
            .flat_map(|(_, h)| [h[0][0], h[0][1], h[1][1]])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        // entries at round-off level of the form's own scale are dropped
        let cut = 1e-13 * scale;
        let mut block = PsdBlock::new(2);
        for (r, h) in &form.entries {
            for (i, j) in [(0, 0), (0, 1), (1, 1)] {
                if h[i][j].abs() > cut {
                    block.push_entry(*r, i, j, h[i][j]);
                }
            }
        }
        if block.entries.is_empty() {
            continue;
        }
        model.problem.add_block(block);
        model.num_convexity_blocks += 1;
    }
    Ok(())
}

/// Appends the rows of `constraint`; returns how many were added.
pub fn add_problem_constraints(
    model: &mut SdpModel,
    space: &FeSpace<'_>,
    rule: &QuadratureRule,
    constraint: &ProblemConstraint,
) -> Result<usize> {
    if space.num_dofs() != model.num_dofs {
        return Err(Error::Dimension {
            expected: model.num_dofs,
            got: space.num_dofs(),
        });
    }
    let mesh = space.mesh();
    let p = &mut model.problem;
    let before = p.constraints.len();
    match constraint {
        ProblemConstraint::MeanZero => {
            let row = space
                .basis_integrals(rule)
                .into_iter()
                .enumerate()
                .filter(|(_, v)| *v != 0.0)
                .collect();
            p.add_constraint(LinearConstraint::equality(row, 0.0));
        }
        ProblemConstraint::PointValue { point, value } => {
            let (e, l) = mesh.locate(*point).ok_or(Error::OutsideDomain(*point))?;
            let b = space.basis(e, l);
            let row: Vec<(usize, f64)> = space
                .element_dofs(e)
                .iter()
                .enumerate()
                .map(|(k, &r)| (r, b.values[k]))
                .filter(|(_, v)| v.abs() > 1e-14)
                .collect();
            p.add_constraint(LinearConstraint::equality(row, *value));
        }
        ProblemConstraint::GradientBox { lo, hi } => {
            if !(lo <= hi) {
                return Err(Error::InvalidParameter(format!("gradient box [{lo}, {hi}] is empty")));
            }
            let centroid = [[1.0 / 3.0; 3]];
            let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            let points: &[[f64; 3]] = if space.degree() == 1 { &centroid } else { &corners };
            for e in 0..mesh.num_elements() {
                let dofs = space.element_dofs(e);
                for l in points {
                    let b = space.basis(e, *l);
                    for j in 0..2 {
                        let row: Vec<(usize, f64)> = dofs
                            .iter()
                            .enumerate()
                            .map(|(k, &r)| (r, b.grads[k][j]))
                            .filter(|(_, v)| *v != 0.0)
                            .collect();
                        let neg = row.iter().map(|&(r, v)| (r, -v)).collect();
                        p.add_constraint(LinearConstraint::less_equal(row, *hi));
                        p.add_constraint(LinearConstraint::less_equal(neg, -lo));
                    }
                }
            }
        }
        ProblemConstraint::BoundaryValues(g) => {
            for r in space.boundary_dofs() {
                let v = g.eval(space.dofs()[r].location);
                p.add_constraint(LinearConstraint::equality(vec![(r, 1.0)], v));
            }
        }
    }
    Ok(p.constraints.len() - before)
}
