//! Property checks shared by the proptest suite and the acceptance runner.
#![allow(dead_code)]

use fecvx::adaptivity::estimate;
use fecvx::femspace::{build_test_basis, FeSpace, TestDegree};
use fecvx::hessian::{assemble, min_eig2};
use fecvx::mesh::{disk_mesh, structured_mesh, Mesh, Pattern, Point, Rect};
use fecvx::quadrature::QuadratureRule;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PATTERNS: [Pattern; 4] = [
    Pattern::Diagonal,
    Pattern::Chevron,
    Pattern::Crisscross,
    Pattern::UnionJack,
];

pub fn pattern() -> impl Strategy<Value = Pattern> {
    prop::sample::select(PATTERNS.to_vec())
}

/// A structured mesh, optionally followed by a few random local refinements.
pub fn mesh_from(pattern: Pattern, n: usize, seed: u64, refinements: usize) -> Mesh {
    let mut mesh = structured_mesh(pattern, n, Rect::new([-0.5, 0.0], [1.0, 0.75])).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..refinements {
        let e = rng.random_range(0..mesh.num_elements());
        mesh = mesh.bisect(&[e]).unwrap();
    }
    mesh
}

fn scale(m: &[[f64; 2]; 2]) -> f64 {
    m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// `H_s(a·u + b·v) = a·H_s u + b·H_s v` and every evaluated matrix is symmetric.
pub fn hessian_linearity(mesh: &Mesh, degree: usize, seed: u64, a: f64, b: f64) -> Result<(), String> {
    let space = FeSpace::new(mesh, degree).map_err(|e| e.to_string())?;
    let tests = build_test_basis(mesh, TestDegree::from_degree(degree).unwrap(), true);
    let forms = assemble(&space, &tests, true).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.num_dofs();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
    for (s, f) in forms.iter().enumerate() {
        let hu = f.evaluate(&u).unwrap().matrix;
        let hv = f.evaluate(&v).unwrap().matrix;
        let hw = f.evaluate(&w).unwrap().matrix;
        for h in [&hu, &hv, &hw] {
            if h[0][1] != h[1][0] {
                return Err(format!("test {s}: asymmetric {h:?}"));
            }
        }
        let tol = 1e-12 * (1.0 + a.abs() * scale(&hu) + b.abs() * scale(&hv));
        for i in 0..2 {
            for j in 0..2 {
                let d = hw[i][j] - (a * hu[i][j] + b * hv[i][j]);
                if d.abs() > tol {
                    return Err(format!("test {s}: entry ({i},{j}) off by {d:e}"));
                }
            }
        }
    }
    Ok(())
}

/// Interpolant of `xᵀAx + g·x + c` with `A = LLᵀ` has PSD FE-Hessians.
pub fn convex_quadratic_is_fe_convex(mesh: &Mesh, l: [f64; 3], g: Point, c: f64) -> Result<(), String> {
    let a = [[l[0] * l[0], l[0] * l[1]], [l[0] * l[1], l[1] * l[1] + l[2] * l[2]]];
    let q = |x: Point| {
        a[0][0] * x[0] * x[0] + 2.0 * a[0][1] * x[0] * x[1] + a[1][1] * x[1] * x[1] + g[0] * x[0] + g[1] * x[1] + c
    };
    let space = FeSpace::new(mesh, 2).unwrap();
    let coeffs = space.interpolate(q);
    for include_boundary in [false, true] {
        let tests = build_test_basis(mesh, TestDegree::Quadratic, include_boundary);
        let forms = assemble(&space, &tests, include_boundary).unwrap();
        for (s, f) in forms.iter().enumerate() {
            let m = f.evaluate(&coeffs).unwrap().matrix;
            let tol = 1e-12 * (1.0 + scale(&m));
            if min_eig2(&m) < -tol {
                return Err(format!(
                    "test {s} (boundary {include_boundary}): min eig {:e}",
                    min_eig2(&m)
                ));
            }
        }
    }
    Ok(())
}

/// Adding an affine function leaves every indicator unchanged; an affine
/// function alone has zero indicators.
pub fn estimator_affine_invariance(mesh: &Mesh, degree: usize, seed: u64, affine: [f64; 3]) -> Result<(), String> {
    let space = FeSpace::new(mesh, degree).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..space.num_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ell = space.interpolate(|x| affine[0] + affine[1] * x[0] + affine[2] * x[1]);
    let shifted: Vec<f64> = u.iter().zip(&ell).map(|(a, b)| a + b).collect();
    let e0 = estimate(mesh, &space, &u).unwrap();
    let e1 = estimate(mesh, &space, &shifted).unwrap();
    let big = affine.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (t, (a, b)) in e0.eta.iter().zip(&e1.eta).enumerate() {
        if (a - b).abs() > 1e-9 * big * (1.0 + a) {
            return Err(format!("element {t}: {a} vs {b}"));
        }
    }
    let pure = estimate(mesh, &space, &ell).unwrap();
    if pure.eta_max > 1e-10 * big {
        return Err(format!("affine function has eta_max {:e}", pure.eta_max));
    }
    Ok(())
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `∫_T x^a y^b` via the divergence theorem, `∮ x^{a+1} y^b / (a+1) dy`, with
/// 5-point Gauss–Legendre on each edge (exact for the degree ≤ 5 integrands).
pub fn monomial_integral(t: [Point; 3], a: i32, b: i32) -> f64 {
    let orient = ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1])).signum();
    let mut total = 0.0;
    for k in 0..3 {
        let (p, q) = (t[k], t[(k + 1) % 3]);
        let dy = q[1] - p[1];
        for (s, w) in GL5 {
            let u = 0.5 * (s + 1.0);
            let x = p[0] + u * (q[0] - p[0]);
            let y = p[1] + u * dy;
            total += 0.5 * w * x.powi(a + 1) * y.powi(b) / (a + 1) as f64 * dy;
        }
    }
    orient * total
}

/// The element rule integrates every monomial of degree ≤ 4 on `t`.
pub fn quadrature_exactness(t: [Point; 3]) -> Result<(), String> {
    let rule = QuadratureRule::degree4();
    let area = 0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1])).abs();
    if area < 1e-6 {
        return Ok(());
    }
    for a in 0..=4 {
        for b in 0..=(4 - a) {
            let mut q = 0.0;
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let x = [
                    l[0] * t[0][0] + l[1] * t[1][0] + l[2] * t[2][0],
                    l[0] * t[0][1] + l[1] * t[1][1] + l[2] * t[2][1],
                ];
                q += w * 2.0 * area * x[0].powi(a) * x[1].powi(b);
            }
            let exact = monomial_integral(t, a, b);
            let mag: f64 = t.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs())).powi(a + b) * area;
            if (q - exact).abs() > 1e-12 * mag.max(exact.abs()) {
                return Err(format!("x^{a} y^{b}: rule {q} vs exact {exact}"));
            }
        }
    }
    Ok(())
}

/// `steps` rounds of marking a random handful of elements, checking
/// conformity and area conservation after each.
pub fn random_refinement_stays_conforming(start: Mesh, seed: u64, steps: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mesh = start;
    let area0 = mesh.total_area();
    let disk = matches!(mesh.domain(), fecvx::mesh::DomainTag::Disk { .. });
    for step in 0..steps {
        let k = rng.random_range(1..=3);
        let marked: Vec<usize> = (0..k).map(|_| rng.random_range(0..mesh.num_elements())).collect();
        mesh = mesh.bisect(&marked).map_err(|e| format!("step {step}: {e}"))?;
        mesh.check_conforming().map_err(|e| format!("step {step}: {e}"))?;
        if !disk && (mesh.total_area() - area0).abs() > 1e-12 * area0 {
            return Err(format!("step {step}: area changed"));
        }
    }
    Ok(())
}

pub fn start_mesh(kind: usize) -> Mesh {
    match kind {
        0..=3 => structured_mesh(PATTERNS[kind], 2, Rect::UNIT).unwrap(),
        _ => disk_mesh(1.0, 0).unwrap(),
    }
}
