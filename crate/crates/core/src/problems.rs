//! Benchmark problems, exact solutions and error norms.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::femspace::{FeSpace, TestDegree};
use crate::mesh::{disk_mesh, structured_mesh, Mesh, Pattern, Point, Rect};
use crate::quadrature::QuadratureRule;
use crate::sdpmodel::{ObjectiveSpec, ProblemConstraint, ScalarField, ScalarFn, VectorField};

/// How the initial mesh is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Structured { pattern: Pattern, n: usize, rect: Rect },
    Disk { radius: f64, level: i32 },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Mesh> {
        match *self {
            DomainSpec::Structured { pattern, n, rect } => structured_mesh(pattern, n, rect),
            DomainSpec::Disk { radius, level } => disk_mesh(radius, level),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            DomainSpec::Structured { rect, .. } => rect.area(),
            DomainSpec::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }
}

/// Trial degree and test-space choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discretization {
    pub degree: usize,
    pub test_degree: TestDegree,
    /// Also test with the functions attached to boundary nodes.
    pub boundary_tests: bool,
    /// Add `∫_∂Ω ∂_i u φ ν_j` to the FE-Hessian.
    pub boundary_term: bool,
}

impl Discretization {
    /// P1 uses interior hats only; P2 uses hats + bubbles including the
    /// boundary ones, together with the boundary flux term.
    pub fn for_degree(degree: usize) -> Result<Self> {
        match degree {
            1 => Ok(Discretization {
                degree,
                test_degree: TestDegree::Linear,
                boundary_tests: false,
                boundary_term: false,
            }),
            2 => Ok(Discretization {
                degree,
                test_degree: TestDegree::Quadratic,
                boundary_tests: true,
                boundary_term: true,
            }),
            d => Err(Error::UnsupportedDegree(d)),
        }
    }
}

#[derive(Clone)]
pub struct BenchmarkProblem {
    pub name: String,
    pub domain: DomainSpec,
    pub objective: ObjectiveSpec,
    pub constraints: Vec<ProblemConstraint>,
    pub exact: Option<ScalarFn>,
}

impl fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("objective", &self.objective)
            .field("constraints", &self.constraints)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl BenchmarkProblem {
    pub fn with_domain(mut self, domain: DomainSpec) -> Self {
        self.domain = domain;
        self
    }
}

pub const MONOPOLIST_A: f64 = 2.0 / 3.0;

pub fn monopolist_b() -> f64 {
    (4.0 - std::f64::consts::SQRT_2) / 3.0
}

/// `max{0, x₁ − a, x₂ − a, x₁ + x₂ − b}`.
pub fn monopolist_exact(x: Point) -> f64 {
    let a = MONOPOLIST_A;
    0f64.max(x[0] - a).max(x[1] - a).max(x[0] + x[1] - monopolist_b())
}

/// Revenue maximization over convex `u` on the unit square, posed as
/// minimizing `∫ (c|∇u|² + u − ∇u·x) f` subject to `u(0) = 0` and
/// `0 ≤ ∇u ≤ 1`. `density = None` means `f ≡ 1`.
pub fn monopolist(c: f64, density: Option<ScalarField>) -> Result<BenchmarkProblem> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("monopolist cost c = {c} must be ≥ 0")));
    }
    let uniform = match &density {
        None => true,
        Some(ScalarField::Constant(v)) => *v == 1.0,
        Some(_) => false,
    };
    let f = density.unwrap_or(ScalarField::Constant(1.0));
    let (gamma, alpha) = match &f {
        ScalarField::Zero => (VectorField::Zero, ScalarField::Zero),
        ScalarField::Constant(v) => {
            let v = *v;
            (
                VectorField::function(move |x| [-x[0] * v, -x[1] * v]),
                ScalarField::Constant(c * v),
            )
        }
        ScalarField::Function(g) => {
            let (g1, g2) = (g.clone(), g.clone());
            (
                VectorField::function(move |x| {
                    let v = g1(x);
                    [-x[0] * v, -x[1] * v]
                }),
                ScalarField::function(move |x| c * g2(x)),
            )
        }
    };
    let objective = ObjectiveSpec {
        alpha: if c == 0.0 { ScalarField::Zero } else { alpha },
        gamma,
        f,
        ..ObjectiveSpec::default()
    };
    Ok(BenchmarkProblem {
        name: "monopolist".into(),
        domain: DomainSpec::Structured {
            pattern: Pattern::Crisscross,
            n: 2,
            rect: Rect::UNIT,
        },
        objective,
        constraints: vec![
            ProblemConstraint::PointValue {
                point: [0.0, 0.0],
                value: 0.0,
            },
            ProblemConstraint::GradientBox { lo: 0.0, hi: 1.0 },
        ],
        exact: (c == 0.0 && uniform).then(|| Arc::new(monopolist_exact) as ScalarFn),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L2,
    H1,
}

/// Closest convex function to `target` in the given norm. `target_grad` is
/// only used for `H1`. The target is attached as reference solution.
pub fn projection(
    norm: Norm,
    target: ScalarField,
    target_grad: VectorField,
    constraints: Vec<ProblemConstraint>,
) -> BenchmarkProblem {
    let objective = match norm {
        Norm::L2 => ObjectiveSpec {
            beta: ScalarField::Constant(1.0),
            v2: target.clone(),
            ..ObjectiveSpec::default()
        },
        Norm::H1 => ObjectiveSpec {
            alpha: ScalarField::Constant(1.0),
            v1: target.clone(),
            grad_v1: target_grad,
            beta: ScalarField::Constant(1.0),
            v2: target.clone(),
            ..ObjectiveSpec::default()
        },
    };
    let exact: ScalarFn = match target {
        ScalarField::Zero => Arc::new(|_| 0.0),
        ScalarField::Constant(v) => Arc::new(move |_| v),
        ScalarField::Function(f) => f,
    };
    BenchmarkProblem {
        name: match norm {
            Norm::L2 => "projection-l2".into(),
            Norm::H1 => "projection-h1".into(),
        },
        domain: DomainSpec::Structured {
            pattern: Pattern::Crisscross,
            n: 8,
            rect: Rect::UNIT,
        },
        objective,
        constraints,
        exact: Some(exact),
    }
}

/// `(x₂ − 0.5x₁ − 0.25)²`: convex, but its level lines are not reproduced by
/// FE-convex P1 functions on crisscross meshes.
pub fn skew_parabola(x: Point) -> f64 {
    (x[1] - 0.5 * x[0] - 0.25).powi(2)
}

pub fn skew_parabola_grad(x: Point) -> Point {
    let r = x[1] - 0.5 * x[0] - 0.25;
    [-r, 2.0 * r]
}

pub fn skew_parabola_projection(norm: Norm) -> BenchmarkProblem {
    projection(
        norm,
        ScalarField::function(skew_parabola),
        VectorField::function(skew_parabola_grad),
        Vec::new(),
    )
}

/// `½∫|∇u|² + ∫f u` over convex `u` with zero mean on the unit disk.
pub fn dirichlet_functional(source: ScalarField) -> BenchmarkProblem {
    BenchmarkProblem {
        name: "dirichlet".into(),
        domain: DomainSpec::Disk { radius: 1.0, level: 2 },
        objective: ObjectiveSpec {
            alpha: ScalarField::Constant(0.5),
            f: source,
            ..ObjectiveSpec::default()
        },
        constraints: vec![ProblemConstraint::MeanZero],
        exact: None,
    }
}

/// `+1` on the disk of radius ½ around `(0,−1)`, `−1` on the one around
/// `(0,1)`, zero elsewhere.
pub fn two_disk_source(x: Point) -> f64 {
    if x[0] * x[0] + (x[1] + 1.0).powi(2) <= 0.25 {
        1.0
    } else if x[0] * x[0] + (x[1] - 1.0).powi(2) <= 0.25 {
        -1.0
    } else {
        0.0
    }
}

/// Looks up a built-in problem by its CLI name.
pub fn by_name(name: &str, c: f64) -> Result<BenchmarkProblem> {
    match name {
        "monopolist" => monopolist(c, None),
        "projection-l2" => Ok(skew_parabola_projection(Norm::L2)),
        "projection-h1" => Ok(skew_parabola_projection(Norm::H1)),
        "dirichlet" => Ok(dirichlet_functional(ScalarField::function(two_disk_source))),
        other => Err(Error::InvalidParameter(format!(
            "unknown problem `{other}` (expected monopolist, projection-l2, projection-h1 or dirichlet)"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub l2: f64,
    pub linf: f64,
}

/// Subdivisions of the barycentric sampling lattice: 36 points per element.
pub const LATTICE_ORDER: usize = 7;

pub fn sample_lattice(order: usize) -> Vec<[f64; 3]> {
    let k = order as f64;
    let mut out = Vec::new();
    for i in 0..=order {
        for j in 0..=order - i {
            let (a, b) = (i as f64 / k, j as f64 / k);
            out.push([a, b, 1.0 - a - b]);
        }
    }
    out
}

/// `L²` by quadrature of `(u_h − u)²`, `L∞` by sampling a barycentric lattice.
pub fn error_norms(space: &FeSpace<'_>, coeffs: &[f64], exact: impl Fn(Point) -> f64) -> ErrorReport {
    let rule = QuadratureRule::degree4();
    let l2 = space.integrate(coeffs, &rule, |x, u, _| (u - exact(x)).powi(2)).sqrt();
    let mesh = space.mesh();
    let lattice = sample_lattice(LATTICE_ORDER);
    let mut linf = 0f64;
    for e in 0..mesh.num_elements() {
        for l in &lattice {
            let (u, _) = space.eval_local(coeffs, e, *l);
            linf = linf.max((u - exact(mesh.point_at(e, *l))).abs());
        }
    }
    ErrorReport { l2, linf }
}
