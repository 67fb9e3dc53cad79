//! Lagrange trial spaces and nonnegative test bases on a [`Mesh`].
//!
//! Local P2 numbering: vertex functions `0..3`, then edge functions `3..6`
//! with `3 + k` belonging to the edge opposite local vertex `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DofKind {
    Vertex(usize),
    EdgeMidpoint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dof {
    pub location: Point,
    pub kind: DofKind,
}

/// Gradients of the barycentric coordinates of element `e`.
pub fn barycentric_gradients(mesh: &Mesh, e: usize) -> [Point; 3] {
    let p = mesh.element_coords(e);
    let two_a = 2.0 * mesh.area(e);
    let mut g = [[0.0; 2]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let (b, c) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        *gi = [(b[1] - c[1]) / two_a, (c[0] - b[0]) / two_a];
    }
    g
}

/// Values and gradients of the local Lagrange basis at barycentric point `l`.
#[derive(Debug, Clone, Copy)]
pub struct LocalBasis {
    pub len: usize,
    pub values: [f64; 6],
    pub grads: [Point; 6],
}

pub fn local_basis(degree: usize, l: [f64; 3], g: &[Point; 3]) -> LocalBasis {
    let mut values = [0.0; 6];
    let mut grads = [[0.0; 2]; 6];
    if degree == 1 {
        for i in 0..3 {
            values[i] = l[i];
            grads[i] = g[i];
        }
        return LocalBasis { len: 3, values, grads };
    }
    for i in 0..3 {
        values[i] = l[i] * (2.0 * l[i] - 1.0);
        let s = 4.0 * l[i] - 1.0;
        grads[i] = [s * g[i][0], s * g[i][1]];
    }
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        values[3 + k] = 4.0 * l[a] * l[b];
        grads[3 + k] = [
            4.0 * (l[a] * g[b][0] + l[b] * g[a][0]),
            4.0 * (l[a] * g[b][1] + l[b] * g[a][1]),
        ];
    }
    LocalBasis { len: 6, values, grads }
}

/// Lagrange space of degree 1 or 2; DOFs are the vertices followed (P2) by
/// the edge midpoints in mesh edge order.
#[derive(Debug, Clone)]
pub struct FeSpace<'m> {
    mesh: &'m Mesh,
    degree: usize,
    dofs: Vec<Dof>,
    element_dofs: Vec<usize>,
}

impl<'m> FeSpace<'m> {
    pub fn new(mesh: &'m Mesh, degree: usize) -> Result<Self> {
        if degree != 1 && degree != 2 {
            return Err(Error::UnsupportedDegree(degree));
        }
        let nv = mesh.num_vertices();
        let mut dofs: Vec<Dof> = mesh
            .vertices()
            .iter()
            .map(|v| Dof {
                location: v.coords,
                kind: DofKind::Vertex(v.id),
            })
            .collect();
        if degree == 2 {
            for (i, e) in mesh.edges().iter().enumerate() {
                let (a, b) = (mesh.coords(e.vertices[0]), mesh.coords(e.vertices[1]));
                dofs.push(Dof {
                    location: [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])],
                    kind: DofKind::EdgeMidpoint(i),
                });
            }
        }
        let nloc = if degree == 1 { 3 } else { 6 };
        let mut element_dofs = Vec::with_capacity(nloc * mesh.num_elements());
        for el in mesh.elements() {
            element_dofs.extend_from_slice(&el.vertices);
            if degree == 2 {
                element_dofs.extend(mesh.element_edges(el.id).iter().map(|&e| nv + e));
            }
        }
        Ok(Self {
            mesh,
            degree,
            dofs,
            element_dofs,
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn dofs(&self) -> &[Dof] {
        &self.dofs
    }

    pub fn local_len(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        let n = self.local_len();
        &self.element_dofs[e * n..(e + 1) * n]
    }

    pub fn basis(&self, e: usize, l: [f64; 3]) -> LocalBasis {
        local_basis(self.degree, l, &barycentric_gradients(self.mesh, e))
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.num_dofs() {
            return Err(Error::Dimension {
                expected: self.num_dofs(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Value and gradient inside element `e` at barycentric point `l`.
    pub fn eval_local(&self, coeffs: &[f64], e: usize, l: [f64; 3]) -> (f64, Point) {
        let b = self.basis(e, l);
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for (k, &d) in self.element_dofs(e).iter().enumerate() {
            let c = coeffs[d];
            v += c * b.values[k];
            g[0] += c * b.grads[k][0];
            g[1] += c * b.grads[k][1];
        }
        (v, g)
    }

    pub fn evaluate(&self, coeffs: &[f64], p: Point) -> Result<f64> {
        self.check_len(coeffs)?;
        let (e, l) = self.mesh.locate(p).ok_or(Error::OutsideDomain(p))?;
        Ok(self.eval_local(coeffs, e, l).0)
    }

    /// Gradient in the element found by [`Mesh::locate`].
    pub fn gradient(&self, coeffs: &[f64], p: Point) -> Result<Point> {
        self.check_len(coeffs)?;
        let (e, l) = self.mesh.locate(p).ok_or(Error::OutsideDomain(p))?;
        Ok(self.eval_local(coeffs, e, l).1)
    }

    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.dofs.iter().map(|d| f(d.location)).collect()
    }

    /// `∫_Ω φ_r` for every basis function.
    pub fn basis_integrals(&self, rule: &QuadratureRule) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dofs()];
        for e in 0..self.mesh.num_elements() {
            let jac = 2.0 * self.mesh.area(e);
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let b = self.basis(e, *l);
                for (k, &d) in self.element_dofs(e).iter().enumerate() {
                    out[d] += w * jac * b.values[k];
                }
            }
        }
        out
    }

    /// DOFs located on the boundary.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        let vflags = self.mesh.boundary_vertex_flags();
        let nv = self.mesh.num_vertices();
        let mut out: Vec<usize> = (0..nv).filter(|&v| vflags[v]).collect();
        if self.degree == 2 {
            out.extend(self.mesh.boundary_edges().into_iter().map(|e| nv + e));
        }
        out
    }

    /// `∫_Ω g(x, u_h(x), ∇u_h(x)) dx` by element quadrature.
    pub fn integrate(&self, coeffs: &[f64], rule: &QuadratureRule, g: impl Fn(Point, f64, Point) -> f64) -> f64 {
        let mut total = 0.0;
        for e in 0..self.mesh.num_elements() {
            let jac = 2.0 * self.mesh.area(e);
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let (v, gr) = self.eval_local(coeffs, e, *l);
                total += w * jac * g(self.mesh.point_at(e, *l), v, gr);
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    VertexHat(usize),
    EdgeBubble(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub index: usize,
    pub kind: TestKind,
    /// Elements where the function is not identically zero.
    pub support: Vec<usize>,
}

/// Which nonnegative functions make up the test space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestDegree {
    /// Vertex hats only.
    Linear,
    /// Vertex hats plus edge bubbles `λ_a λ_b`.
    Quadratic,
}

impl TestDegree {
    pub fn from_degree(d: usize) -> Result<Self> {
        match d {
            1 => Ok(TestDegree::Linear),
            2 => Ok(TestDegree::Quadratic),
            _ => Err(Error::UnsupportedDegree(d)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestBasis<'m> {
    mesh: &'m Mesh,
    pub functions: Vec<TestFunction>,
    pub include_boundary: bool,
    pub degree: TestDegree,
}

/// Hats at (interior or all) vertices, plus bubbles on (interior or all)
/// edges for [`TestDegree::Quadratic`]. Hats peak at 1, bubbles at 1/4.
pub fn build_test_basis(mesh: &Mesh, degree: TestDegree, include_boundary: bool) -> TestBasis<'_> {
    let vflags = mesh.boundary_vertex_flags();
    let patches = mesh.vertex_patches();
    let mut functions = Vec::new();
    for v in 0..mesh.num_vertices() {
        if include_boundary || !vflags[v] {
            functions.push(TestFunction {
                index: functions.len(),
                kind: TestKind::VertexHat(v),
                support: patches[v].clone(),
            });
        }
    }
    if degree == TestDegree::Quadratic {
        for (i, e) in mesh.edges().iter().enumerate() {
            if include_boundary || !e.is_boundary() {
                let mut support = e.elements.clone();
                support.sort_unstable();
                functions.push(TestFunction {
                    index: functions.len(),
                    kind: TestKind::EdgeBubble(i),
                    support,
                });
            }
        }
    }
    TestBasis {
        mesh,
        functions,
        include_boundary,
        degree,
    }
}

impl<'m> TestBasis<'m> {
    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    /// Value and gradient of test function `s` in element `e` (zero outside
    /// its support).
    pub fn eval_local(&self, s: usize, e: usize, l: [f64; 3]) -> (f64, Point) {
        let g = barycentric_gradients(self.mesh, e);
        match self.functions[s].kind {
            TestKind::VertexHat(v) => match self.mesh.elements()[e].vertices.iter().position(|&x| x == v) {
                Some(i) => (l[i], g[i]),
                None => (0.0, [0.0, 0.0]),
            },
            TestKind::EdgeBubble(edge) => match self.mesh.element_edges(e).iter().position(|&x| x == edge) {
                Some(k) => {
                    let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                    (
                        l[a] * l[b],
                        [l[a] * g[b][0] + l[b] * g[a][0], l[a] * g[b][1] + l[b] * g[a][1]],
                    )
                }
                None => (0.0, [0.0, 0.0]),
            },
        }
    }

    /// Value of test function `s` at a point of the domain.
    pub fn evaluate(&self, s: usize, p: Point) -> Result<f64> {
        let f = &self.functions[s];
        for &e in &f.support {
            let l = self.mesh.barycentric(e, p);
            if l.iter().all(|&x| x >= -1e-12) {
                return Ok(self.eval_local(s, e, l).0);
            }
        }
        if self.mesh.locate(p).is_some() {
            Ok(0.0)
        } else {
            Err(Error::OutsideDomain(p))
        }
    }
}
