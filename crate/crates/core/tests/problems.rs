use fecvx::adaptivity::{adapt, AdaptConfig, RefinementMode};
use fecvx::femspace::FeSpace;
use fecvx::hessian::min_eig2;
use fecvx::mesh::{structured_mesh, Pattern, Point, Rect};
use fecvx::pipeline::{build_model, solve_on_mesh};
use fecvx::problems::*;
use fecvx::quadrature::QuadratureRule;
use fecvx::sdpmodel::{ProblemConstraint, ScalarField, VectorField};
use fecvx::Error;
use fecvx_sdp::{solve, validate_kkt, SolverConfig, SolverStatus};

fn tight() -> SolverConfig {
    SolverConfig {
        tol_primal: 1e-10,
        tol_dual: 1e-10,
        tol_gap: 1e-11,
        ..SolverConfig::default()
    }
}

fn unit(pattern: Pattern, n: usize) -> DomainSpec {
    DomainSpec::Structured {
        pattern,
        n,
        rect: Rect::UNIT,
    }
}

#[test]
fn projection_of_zero_is_zero() {
    for norm in [Norm::L2, Norm::H1] {
        let p = projection(norm, ScalarField::Zero, VectorField::Zero, Vec::new())
            .with_domain(unit(Pattern::Crisscross, 2));
        let mesh = p.domain.build().unwrap();
        let disc = Discretization::for_degree(2).unwrap();
        let sol = solve_on_mesh(&p, &mesh, &disc, &tight()).unwrap();
        assert_eq!(sol.status(), SolverStatus::Optimal);
        let m = sol.coeffs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(m < 1e-5, "{norm:?}: max |u| = {m}");
    }
}

#[test]
fn convex_quadratic_is_reproduced() {
    let f = |x: Point| 0.7 * x[0] * x[0] - 0.4 * x[0] * x[1] + 0.5 * x[1] * x[1] - x[1];
    let p = projection(Norm::L2, ScalarField::function(f), VectorField::Zero, Vec::new())
        .with_domain(unit(Pattern::Crisscross, 2));
    let mesh = p.domain.build().unwrap();
    let sol = solve_on_mesh(&p, &mesh, &Discretization::for_degree(2).unwrap(), &tight()).unwrap();
    let space = FeSpace::new(&mesh, 2).unwrap();
    let e = error_norms(&space, &sol.coeffs, f);
    assert!(e.l2 <= 1e-6, "{e:?}");
}

#[test]
fn skew_parabola_is_exact_in_p2() {
    let mesh = structured_mesh(Pattern::Crisscross, 3, Rect::UNIT).unwrap();
    let space = FeSpace::new(&mesh, 2).unwrap();
    let c = space.interpolate(skew_parabola);
    assert!(error_norms(&space, &c, skew_parabola).l2 <= 1e-12);
}

/// Brute-force oracle for the L² projection of a concave bump on the
/// two-triangle square. The problem is invariant under the reflection across
/// the mesh diagonal and under the point reflection through the centre, so
/// its unique minimizer lives in a 4-parameter family: values at the
/// diagonal's endpoints, the other two corners, the centre, and the four
/// side midpoints.
#[test]
fn concave_bump_projection_matches_brute_force() {
    let bump = |x: Point| -((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2));
    let p = projection(Norm::L2, ScalarField::function(bump), VectorField::Zero, Vec::new())
        .with_domain(unit(Pattern::Diagonal, 1));
    let mesh = p.domain.build().unwrap();
    let disc = Discretization::for_degree(2).unwrap();
    let space = FeSpace::new(&mesh, 2).unwrap();
    let model = build_model(&p, &space, &disc).unwrap();
    let r = solve(&model.problem, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, SolverStatus::Optimal);
    let rule = QuadratureRule::degree4();
    let sdp_value = p.objective.functional(&space, &rule, model.coefficients(&r.x));

    let diag = mesh.edges().iter().find(|e| !e.is_boundary()).unwrap().vertices;
    let nv = mesh.num_vertices();
    let class: Vec<usize> = (0..space.num_dofs())
        .map(|i| match i {
            v if v < nv && diag.contains(&v) => 0,
            v if v < nv => 1,
            _ => {
                let x = space.dofs()[i].location;
                if (x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12 {
                    2
                } else {
                    3
                }
            }
        })
        .collect();
    let lift = |q: [f64; 4]| class.iter().map(|&k| q[k]).collect::<Vec<f64>>();
    // the solver's minimizer should itself be symmetric
    let u = model.coefficients(&r.x);
    for (i, &k) in class.iter().enumerate() {
        let same = class.iter().position(|&j| j == k).unwrap();
        assert!((u[i] - u[same]).abs() < 1e-5, "dof {i}");
    }

    // J(q) = k + gᵀq + qᵀQq and H_s(q) = Σ q_i H_s(e_i), recovered from evaluations
    let j = |q: [f64; 4]| p.objective.functional(&space, &rule, &lift(q));
    let unit_q = |i: usize, s: f64| {
        let mut q = [0.0; 4];
        q[i] = s;
        q
    };
    let k0 = j([0.0; 4]);
    let mut g = [0.0; 4];
    let mut qm = [[0.0; 4]; 4];
    for i in 0..4 {
        let (jp, jm) = (j(unit_q(i, 1.0)), j(unit_q(i, -1.0)));
        g[i] = 0.5 * (jp - jm);
        qm[i][i] = 0.5 * (jp + jm) - k0;
    }
    for i in 0..4 {
        for l in (i + 1)..4 {
            let mut q = unit_q(i, 1.0);
            q[l] = 1.0;
            qm[i][l] = 0.5 * (j(q) - k0 - g[i] - g[l] - qm[i][i] - qm[l][l]);
            qm[l][i] = qm[i][l];
        }
    }
    let tests = fecvx::femspace::build_test_basis(&mesh, disc.test_degree, disc.boundary_tests);
    let forms = fecvx::hessian::assemble(&space, &tests, disc.boundary_term).unwrap();
    let basis_h: Vec<[[[f64; 2]; 2]; 4]> = forms
        .iter()
        .map(|f| {
            let mut out = [[[0.0; 2]; 2]; 4];
            for (i, o) in out.iter_mut().enumerate() {
                *o = f.evaluate(&lift(unit_q(i, 1.0))).unwrap().matrix;
            }
            out
        })
        .collect();
    let feasible = |q: &[f64; 4]| {
        basis_h.iter().all(|hs| {
            let mut m = [[0.0; 2]; 2];
            for (i, h) in hs.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        m[a][b] += q[i] * h[a][b];
                    }
                }
            }
            min_eig2(&m) >= 0.0
        })
    };
    let value = |q: &[f64; 4]| {
        let mut v = k0;
        for i in 0..4 {
            v += g[i] * q[i];
            for l in 0..4 {
                v += q[i] * qm[i][l] * q[l];
            }
        }
        v
    };

    // zooming grid search
    let steps = 30;
    let (mut center, mut half) = ([0.0; 4], 1.0);
    let mut best = (f64::INFINITY, center);
    for _ in 0..7 {
        let h = 2.0 * half / steps as f64;
        let mut q = [0.0; 4];
        let mut idx = [0usize; 4];
        loop {
            for i in 0..4 {
                q[i] = center[i] - half + h * idx[i] as f64;
            }
            if feasible(&q) {
                let v = value(&q);
                if v < best.0 {
                    best = (v, q);
                }
            }
            let mut d = 0;
            while d < 4 {
                idx[d] += 1;
                if idx[d] <= steps {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == 4 {
                break;
            }
        }
        center = best.1;
        half = 3.0 * h;
    }
    assert!((value(&best.1) - j(best.1)).abs() < 1e-12);
    assert!(
        (best.0 - sdp_value).abs() <= 1e-4,
        "oracle {} vs sdp {}",
        best.0,
        sdp_value
    );
    // the grid only holds feasible points, so it cannot beat the solver by more than its tolerance
    assert!(best.0 >= sdp_value - 1e-7);
}

#[test]
fn dirichlet_with_zero_source_is_zero() {
    let p = dirichlet_functional(ScalarField::Zero).with_domain(DomainSpec::Disk { radius: 1.0, level: 1 });
    let mesh = p.domain.build().unwrap();
    let sol = solve_on_mesh(&p, &mesh, &Discretization::for_degree(2).unwrap(), &tight()).unwrap();
    assert_eq!(sol.status(), SolverStatus::Optimal);
    assert!(sol.functional.abs() < 1e-8, "{}", sol.functional);
    assert!(sol.coeffs.iter().all(|v| v.abs() < 1e-4));
}

#[test]
fn monopolist_first_row_and_residuals() {
    let p = monopolist(0.0, None).unwrap();
    let mesh = p.domain.build().unwrap();
    assert_eq!(mesh.num_elements(), 16);
    let space = FeSpace::new(&mesh, 2).unwrap();
    assert_eq!(space.num_dofs(), 41);
    let disc = Discretization::for_degree(2).unwrap();
    let model = build_model(&p, &space, &disc).unwrap();
    let r = solve(&model.problem, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, SolverStatus::Optimal);
    let kkt = validate_kkt(&model.problem, &r);
    for (mine, reported) in [
        (kkt.primal_infeasibility, r.residuals.primal),
        (kkt.dual_infeasibility, r.residuals.dual),
    ] {
        assert!(mine <= 10.0 * reported.max(1e-12), "{kkt:?} vs {:?}", r.residuals);
    }
    // minus the revenue
    assert!(r.primal_objective < 0.0);
}

/// Extends trial coefficients by setting every epigraph variable to its
/// tight value `t = e²`.
fn lift_epigraph(problem: &fecvx_sdp::SdpProblem, u: &[f64]) -> Vec<f64> {
    let mut x = u.to_vec();
    x.resize(problem.num_vars(), 0.0);
    for b in &problem.blocks {
        if let Some(t) = b
            .entries
            .iter()
            .find(|en| en.row == 1 && en.col == 1 && en.var >= u.len())
        {
            let e = b.evaluate(&x)[(0, 1)];
            x[t.var] = e * e;
        }
    }
    x
}

/// Convex candidates vanishing at the origin with gradients in the unit box
/// are exactly representable in P2, so they are feasible discrete points.
#[test]
fn discrete_minimizer_beats_feasible_candidates() {
    let p = monopolist(0.0, None).unwrap();
    let disc = Discretization::for_degree(2).unwrap();
    let rule = QuadratureRule::degree4();
    let candidates: [fn(Point) -> f64; 4] = [
        |_| 0.0,
        |x| 0.25 * (x[0] + x[1]).powi(2),
        |x| 0.5 * (x[0] * x[0] + x[1] * x[1]),
        |x| 0.5 * x[0] + 0.25 * x[1] * x[1],
    ];
    for n in [2, 3] {
        let mesh = structured_mesh(Pattern::Crisscross, n, Rect::UNIT).unwrap();
        let space = FeSpace::new(&mesh, 2).unwrap();
        let model = build_model(&p, &space, &disc).unwrap();
        let sol = solve_on_mesh(&p, &mesh, &disc, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status(), SolverStatus::Optimal);
        for (k, f) in candidates.iter().enumerate() {
            let c = space.interpolate(f);
            assert!(
                model.problem.max_violation(&lift_epigraph(&model.problem, &c)) <= 1e-9,
                "candidate {k} infeasible"
            );
            let j = p.objective.functional(&space, &rule, &c);
            assert!(
                sol.functional <= j + 1e-6,
                "n={n}, candidate {k}: {} vs {j}",
                sol.functional
            );
        }
    }
}

#[test]
fn adapt_stops_on_affine_solution() {
    let f = |x: Point| 1.0 + 0.5 * x[0] - 0.25 * x[1];
    let p = projection(Norm::L2, ScalarField::function(f), VectorField::Zero, Vec::new())
        .with_domain(unit(Pattern::Crisscross, 2));
    let mut cfg = AdaptConfig::new(RefinementMode::Adaptive, 5, Discretization::for_degree(2).unwrap());
    cfg.solver = tight();
    // the discrete minimizer is only accurate to the solver tolerance
    cfg.eta_tolerance = 1e-4;
    let run = adapt(&p, &cfg).unwrap();
    assert!(run.converged);
    assert_eq!(run.records.len(), 1);
    assert_eq!(run.records[0].elements, 16);
}

#[test]
fn adaptive_element_counts_increase() {
    let p = monopolist(0.0, None).unwrap();
    let cfg = AdaptConfig::new(RefinementMode::Adaptive, 3, Discretization::for_degree(2).unwrap());
    let run = adapt(&p, &cfg).unwrap();
    assert_eq!((run.records[0].elements, run.records[0].dofs), (16, 41));
    for w in run.records.windows(2) {
        assert!(w[1].elements > w[0].elements);
    }
    assert!(run.records.iter().all(|r| r.errors.is_some()));
}

#[test]
fn solver_failure_keeps_partial_run() {
    let p = monopolist(0.0, None).unwrap();
    let mut cfg = AdaptConfig::new(RefinementMode::Uniform, 3, Discretization::for_degree(2).unwrap());
    cfg.solver.max_iterations = 12;
    let err = adapt(&p, &cfg).unwrap_err();
    assert!(
        matches!(err.source, Error::SolverFailed(SolverStatus::MaxIter)),
        "{err}"
    );
    assert_eq!(err.run.records.len(), 2);
    assert_eq!(err.run.records[0].status, SolverStatus::Optimal);
    assert_eq!(err.run.records[1].status, SolverStatus::MaxIter);
    assert_eq!(err.run.mesh.as_ref().unwrap().num_elements(), 16);

    let mut bad = monopolist(0.0, None).unwrap();
    bad.constraints.push(ProblemConstraint::PointValue {
        point: [0.0, 0.0],
        value: 1.0,
    });
    let cfg = AdaptConfig::new(RefinementMode::Adaptive, 2, Discretization::for_degree(2).unwrap());
    let err = adapt(&bad, &cfg).unwrap_err();
    assert_eq!(err.run.records.len(), 1);
    assert_ne!(err.run.records[0].status, SolverStatus::Optimal);
}

#[test]
fn by_name_lookup() {
    for n in ["monopolist", "projection-l2", "projection-h1", "dirichlet"] {
        assert_eq!(by_name(n, 0.0).unwrap().name, n);
    }
    assert!(by_name("newton", 0.0).is_err());
    assert!(by_name("monopolist", 0.5).unwrap().exact.is_none());
}
