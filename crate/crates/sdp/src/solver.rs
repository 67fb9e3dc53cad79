//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! The iterate `(x, y, z, s, τ, κ)` satisfies, at convergence,
//!
//! ```text
//! Aᵀy + Gᵀz + cτ = 0,   Ax = bτ,   Gx + s = hτ,   κ = −(cᵀx + bᵀy + hᵀz),
//! s, z ∈ K,   τ, κ ≥ 0,   sᵀz + τκ = 0.
//! ```
//!
//! Search directions use Nesterov–Todd scaling and a Mehrotra
//! predictor-corrector; `τ → 0` with `κ > 0` yields infeasibility
//! certificates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdpError};
use crate::kkt::{BlockWeights, Kkt};
use crate::problem::SdpProblem;
use crate::program::ConeProgram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub tol_gap: f64,
    pub max_iterations: usize,
    /// 0 silent, 1 one line per iteration on stderr.
    pub verbosity: u8,
    pub static_regularization: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            tol_gap: 1e-7,
            max_iterations: 200,
            verbosity: 0,
            static_regularization: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.tol_primal, self.tol_dual, self.tol_gap]
            .iter()
            .all(|t| t.is_finite() && *t > 0.0);
        if ok && self.static_regularization >= 0.0 {
            Ok(())
        } else {
            Err(SdpError::Dimension("solver tolerances must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverResult {
    pub status: SolverStatus,
    pub x: Vec<f64>,
    /// Multiplier of each linear constraint of the source problem
    /// (nonnegative for inequalities).
    pub constraint_duals: Vec<f64>,
    /// Dual matrix of each PSD block, row-major.
    pub block_duals: Vec<Vec<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl SolverResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }
}

/// Element of the cone `K`.
#[derive(Debug, Clone)]
struct ConeVec {
    lp: Vec<f64>,
    psd: Vec<DMatrix<f64>>,
}

impl ConeVec {
    fn zeros(prog: &ConeProgram) -> Self {
        Self {
            lp: vec![0.0; prog.num_lp()],
            psd: prog.psd.iter().map(|c| DMatrix::zeros(c.size, c.size)).collect(),
        }
    }

    fn identity(prog: &ConeProgram) -> Self {
        Self {
            lp: vec![1.0; prog.num_lp()],
            psd: prog.psd.iter().map(|c| DMatrix::identity(c.size, c.size)).collect(),
        }
    }

    fn dot(&self, o: &Self) -> f64 {
        let lp: f64 = self.lp.iter().zip(&o.lp).map(|(a, b)| a * b).sum();
        lp + self.psd.iter().zip(&o.psd).map(|(a, b)| a.dot(b)).sum::<f64>()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, o: &Self) {
        for (x, y) in self.lp.iter_mut().zip(&o.lp) {
            *x += a * y;
        }
        for (x, y) in self.psd.iter_mut().zip(&o.psd) {
            *x += y * a;
        }
    }

    fn scale(&mut self, a: f64) {
        self.lp.iter_mut().for_each(|x| *x *= a);
        self.psd.iter_mut().for_each(|m| *m *= a);
    }

    /// Smallest eigenvalue over all cone components.
    fn min_eig(&self) -> f64 {
        let lp = self.lp.iter().copied().fold(f64::INFINITY, f64::min);
        self.psd
            .iter()
            .map(|m| crate::problem::min_eigenvalue(m))
            .fold(lp, f64::min)
    }

    fn shift_identity(&mut self, a: f64) {
        self.lp.iter_mut().for_each(|x| *x += a);
        for m in &mut self.psd {
            for i in 0..m.nrows() {
                m[(i, i)] += a;
            }
        }
    }
}

/// Nesterov–Todd scaling point. For the orthant `W = diag(w)` with
/// `w = sqrt(s/z)`; for a PSD cone `W z = Rᵀ z R`, `W⁻ᵀ s = R⁻¹ s R⁻ᵀ` and both
/// equal `diag(λ)`.
struct Scaling {
    w: Vec<f64>,
    lp_lambda: Vec<f64>,
    r: Vec<DMatrix<f64>>,
    rinv: Vec<DMatrix<f64>>,
    lambda: Vec<DVector<f64>>,
    /// `(R Rᵀ)⁻¹`
    m: Vec<DMatrix<f64>>,
    lp_weight: Vec<f64>,
}

impl Scaling {
    fn identity(prog: &ConeProgram) -> Self {
        let eye = |k: usize| DMatrix::<f64>::identity(k, k);
        Self {
            w: vec![1.0; prog.num_lp()],
            lp_lambda: vec![1.0; prog.num_lp()],
            r: prog.psd.iter().map(|c| eye(c.size)).collect(),
            rinv: prog.psd.iter().map(|c| eye(c.size)).collect(),
            lambda: prog.psd.iter().map(|c| DVector::from_element(c.size, 1.0)).collect(),
            m: prog.psd.iter().map(|c| eye(c.size)).collect(),
            lp_weight: vec![1.0; prog.num_lp()],
        }
    }

    fn compute(s: &ConeVec, z: &ConeVec) -> Option<Self> {
        let w: Vec<f64> = s.lp.iter().zip(&z.lp).map(|(s, z)| (s / z).sqrt()).collect();
        let lp_lambda = s.lp.iter().zip(&z.lp).map(|(s, z)| (s * z).sqrt()).collect();
        let lp_weight = s.lp.iter().zip(&z.lp).map(|(s, z)| z / s).collect();
        let k = s.psd.len();
        let (mut r, mut rinv, mut lambda, mut m) = (
            Vec::with_capacity(k),
            Vec::with_capacity(k),
            Vec::with_capacity(k),
            Vec::with_capacity(k),
        );
        for (sm, zm) in s.psd.iter().zip(&z.psd) {
            let ls = sm.clone().cholesky()?.l();
            let lz = zm.clone().cholesky()?.l();
            let svd = (lz.transpose() * &ls).svd(true, true);
            let vt = svd.v_t?;
            let sig = svd.singular_values;
            if sig.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return None;
            }
            let isq = DMatrix::from_diagonal(&sig.map(|x| 1.0 / x.sqrt()));
            // R = L_s V Λ^{-1/2},  R⁻¹ = Λ^{-1/2} Uᵀ L_zᵀ
            let ri = &ls * vt.transpose() * &isq;
            let u = svd.u?;
            let rii = &isq * u.transpose() * lz.transpose();
            m.push(rii.transpose() * &rii);
            r.push(ri);
            rinv.push(rii);
            lambda.push(sig);
        }
        Some(Self {
            w,
            lp_lambda,
            r,
            rinv,
            lambda,
            m,
            lp_weight,
        })
    }

    /// `W z`
    fn apply_w(&self, z: &ConeVec) -> ConeVec {
        ConeVec {
            lp: z.lp.iter().zip(&self.w).map(|(z, w)| z * w).collect(),
            psd: z.psd.iter().zip(&self.r).map(|(z, r)| r.transpose() * z * r).collect(),
        }
    }

    /// `Wᵀ v`
    fn apply_wt(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.iter().zip(&self.w).map(|(v, w)| v * w).collect(),
            psd: v.psd.iter().zip(&self.r).map(|(v, r)| r * v * r.transpose()).collect(),
        }
    }

    /// `W⁻ᵀ s`
    fn apply_winv_t(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.iter().zip(&self.w).map(|(v, w)| v / w).collect(),
            psd: v
                .psd
                .iter()
                .zip(&self.rinv)
                .map(|(v, ri)| ri * v * ri.transpose())
                .collect(),
        }
    }

    /// `(WᵀW)⁻¹ v`
    fn apply_wtw_inv(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.iter().zip(&self.w).map(|(v, w)| v / (w * w)).collect(),
            psd: v.psd.iter().zip(&self.m).map(|(v, m)| m * v * m).collect(),
        }
    }

    fn lambda_vec(&self) -> ConeVec {
        ConeVec {
            lp: self.lp_lambda.clone(),
            psd: self.lambda.iter().map(DMatrix::from_diagonal).collect(),
        }
    }

    /// `λ ⊘ d`, the inverse of `u ↦ λ ∘ u`.
    fn lambda_div(&self, d: &ConeVec) -> ConeVec {
        ConeVec {
            lp: d.lp.iter().zip(&self.lp_lambda).map(|(d, l)| d / l).collect(),
            psd: d
                .psd
                .iter()
                .zip(&self.lambda)
                .map(|(d, l)| DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| 2.0 * d[(i, j)] / (l[i] + l[j])))
                .collect(),
        }
    }
}

/// Largest `α ≤ limit` keeping `v + α d` in the cone (`v` interior).
fn max_step(v: &ConeVec, d: &ConeVec, limit: f64) -> f64 {
    let mut alpha = limit;
    for (&vi, &di) in v.lp.iter().zip(&d.lp) {
        if di < 0.0 {
            alpha = alpha.min(-vi / di);
        }
    }
    for (vm, dm) in v.psd.iter().zip(&d.psd) {
        let Some(chol) = vm.clone().cholesky() else {
            return 0.0;
        };
        // L⁻¹ d L⁻ᵀ
        let mut t = dm.clone();
        chol.l_dirty().solve_lower_triangular_mut(&mut t);
        let mut t = t.transpose();
        chol.l_dirty().solve_lower_triangular_mut(&mut t);
        let e = crate::problem::min_eigenvalue(&t);
        if e < 0.0 {
            alpha = alpha.min(-1.0 / e);
        }
    }
    alpha
}

/// Jordan product `a ∘ b`.
fn jordan(a: &ConeVec, b: &ConeVec) -> ConeVec {
    ConeVec {
        lp: a.lp.iter().zip(&b.lp).map(|(x, y)| x * y).collect(),
        psd: a.psd.iter().zip(&b.psd).map(|(x, y)| (x * y + y * x) * 0.5).collect(),
    }
}

struct Ops<'a> {
    prog: &'a ConeProgram,
}

impl Ops<'_> {
    fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        self.prog
            .eq_rows
            .iter()
            .map(|row| row.iter().map(|&(v, a)| a * x[v]).sum())
            .collect()
    }

    fn at_mul(&self, y: &[f64], out: &mut [f64]) {
        for (row, &yi) in self.prog.eq_rows.iter().zip(y) {
            for &(v, a) in row {
                out[v] += a * yi;
            }
        }
    }

    /// `G x`
    fn g_mul(&self, x: &[f64]) -> ConeVec {
        let lp = self
            .prog
            .lp_rows
            .iter()
            .map(|row| row.iter().map(|&(v, a)| a * x[v]).sum())
            .collect();
        let psd = self
            .prog
            .psd
            .iter()
            .map(|c| {
                let mut m = DMatrix::zeros(c.size, c.size);
                for (&v, f) in c.vars.iter().zip(&c.coeffs) {
                    if x[v] != 0.0 {
                        m -= f * x[v];
                    }
                }
                m
            })
            .collect();
        ConeVec { lp, psd }
    }

    /// `out += Gᵀ z`
    fn gt_mul(&self, z: &ConeVec, out: &mut [f64]) {
        for (row, &zi) in self.prog.lp_rows.iter().zip(&z.lp) {
            for &(v, a) in row {
                out[v] += a * zi;
            }
        }
        for (c, zm) in self.prog.psd.iter().zip(&z.psd) {
            for (&v, f) in c.vars.iter().zip(&c.coeffs) {
                out[v] -= f.dot(zm);
            }
        }
    }

    fn h(&self) -> ConeVec {
        ConeVec {
            lp: self.prog.lp_rhs.clone(),
            psd: self.prog.psd.iter().map(|c| c.constant.clone()).collect(),
        }
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normv(a: &[f64]) -> f64 {
    dotv(a, a).sqrt()
}

/// Solves the KKT system for the right-hand side `(bx, by, bz)`.
fn kkt_solve(
    kkt: &mut Kkt,
    ops: &Ops<'_>,
    scaling: &Scaling,
    bx: &[f64],
    by: &[f64],
    bz: &ConeVec,
) -> (Vec<f64>, Vec<f64>, ConeVec) {
    let n = ops.prog.num_vars;
    // x-row: bx + Gᵀ(WᵀW)⁻¹ bz
    let mut rhs = vec![0.0; kkt.dim()];
    rhs[..n].copy_from_slice(bx);
    let wbz = scaling.apply_wtw_inv(bz);
    ops.gt_mul(&wbz, &mut rhs[..n]);
    rhs[n..].copy_from_slice(by);
    kkt.solve(&mut rhs);
    let x = rhs[..n].to_vec();
    let y = rhs[n..].to_vec();
    let mut gx = ops.g_mul(&x);
    gx.axpy(-1.0, bz);
    let z = scaling.apply_wtw_inv(&gx);
    (x, y, z)
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: ConeVec,
    s: ConeVec,
    tau: f64,
    kappa: f64,
}

/// Solves `problem` and reports duals in terms of its own constraints.
pub fn solve(problem: &SdpProblem, config: &SolverConfig) -> Result<SolverResult> {
    let prog = ConeProgram::from_problem(problem)?;
    solve_program(&prog, problem, config)
}

pub fn solve_program(prog: &ConeProgram, problem: &SdpProblem, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    let n = prog.num_vars;
    let ops = Ops { prog };
    if prog.inconsistent_eq.is_some() {
        return Ok(finish(
            prog,
            problem,
            SolverStatus::Infeasible,
            &Iterate {
                x: vec![0.0; n],
                y: vec![0.0; prog.num_eq()],
                z: ConeVec::zeros(prog),
                s: ConeVec::zeros(prog),
                tau: 1.0,
                kappa: 0.0,
            },
            Residuals::default(),
            0,
        ));
    }

    let h = ops.h();
    let c = &prog.cost;
    let b = &prog.eq_rhs;
    let bh_norm = (dotv(b, b) + h.dot(&h)).sqrt();
    let c_norm = normv(c);
    let degree = prog.degree() as f64;

    let mut kkt = Kkt::new(prog, config.static_regularization);
    let ident = Scaling::identity(prog);
    let lp_ones = vec![1.0; prog.num_lp()];
    let eyes: Vec<DMatrix<f64>> = ident.m.clone();
    if kkt
        .factor(
            prog,
            &BlockWeights {
                lp: &lp_ones,
                psd: &eyes,
            },
        )
        .is_err()
    {
        return Err(SdpError::Dimension("initial KKT factorization failed".into()));
    }

    // Primal start: least-squares point with s = h − Gx shifted into K.
    let zero_n = vec![0.0; n];
    let (x0, _, zp) = kkt_solve(&mut kkt, &ops, &ident, &zero_n, b, &h);
    let mut s0 = zp;
    s0.scale(-1.0);
    // Dual start: minimum-norm z with Aᵀy + Gᵀz = −c.
    let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
    let (_, y0, mut z0) = kkt_solve(
        &mut kkt,
        &ops,
        &ident,
        &neg_c,
        &vec![0.0; prog.num_eq()],
        &ConeVec::zeros(prog),
    );
    for v in [&mut s0, &mut z0] {
        let t = -v.min_eig();
        if t >= -1e-8 * v.norm().max(1.0) {
            v.shift_identity(1.0 + t);
        }
    }
    let mut it = Iterate {
        x: x0,
        y: y0,
        z: z0,
        s: s0,
        tau: 1.0,
        kappa: 1.0,
    };

    let mut status = SolverStatus::MaxIter;
    let mut res = Residuals::default();
    let mut iterations = 0;
    for iter in 0..=config.max_iterations {
        iterations = iter;
        // residuals
        let mut rx = vec![0.0; n];
        ops.at_mul(&it.y, &mut rx);
        ops.gt_mul(&it.z, &mut rx);
        for (r, ci) in rx.iter_mut().zip(c) {
            *r += ci * it.tau;
        }
        let ax = ops.a_mul(&it.x);
        let ry: Vec<f64> = ax.iter().zip(b).map(|(a, bi)| a - bi * it.tau).collect();
        let mut rz = ops.g_mul(&it.x);
        rz.axpy(1.0, &it.s);
        rz.axpy(-it.tau, &h);
        let cx = dotv(c, &it.x);
        let by = dotv(b, &it.y);
        let hz = h.dot(&it.z);
        let rtau = it.kappa + cx + by + hz;
        let sz = it.s.dot(&it.z);
        let mu = (sz + it.tau * it.kappa) / (degree + 1.0);

        let pcost = cx / it.tau;
        let dcost = -(by + hz) / it.tau;
        res = Residuals {
            primal: (dotv(&ry, &ry) + rz.dot(&rz)).sqrt() / it.tau / (1.0 + bh_norm),
            dual: normv(&rx) / it.tau / (1.0 + c_norm),
            gap: (sz / (it.tau * it.tau)).max((pcost - dcost).abs()) / (1.0 + pcost.abs()),
        };
        if config.verbosity > 0 {
            eprintln!(
                "{iter:3} pcost {pcost:+.6e} dcost {dcost:+.6e} pres {:.2e} dres {:.2e} gap {:.2e} tau {:.2e} kappa {:.2e}",
                res.primal, res.dual, res.gap, it.tau, it.kappa
            );
        }
        if !(res.primal.is_finite() && res.dual.is_finite() && res.gap.is_finite()) {
            status = SolverStatus::NumericalFailure;
            break;
        }
        if res.primal <= config.tol_primal && res.dual <= config.tol_dual && res.gap <= config.tol_gap {
            status = SolverStatus::Optimal;
            break;
        }
        // infeasibility certificates
        let mut gty = vec![0.0; n];
        ops.at_mul(&it.y, &mut gty);
        ops.gt_mul(&it.z, &mut gty);
        if by + hz < 0.0 && normv(&gty) / -(by + hz) <= config.tol_primal {
            status = SolverStatus::Infeasible;
            break;
        }
        if cx < 0.0 {
            let mut gx = ops.g_mul(&it.x);
            gx.axpy(1.0, &it.s);
            let r = (dotv(&ax, &ax) + gx.dot(&gx)).sqrt();
            if r / -cx <= config.tol_dual {
                status = SolverStatus::Unbounded;
                break;
            }
        }
        if iter == config.max_iterations {
            break;
        }

        let Some(scaling) = Scaling::compute(&it.s, &it.z) else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        if kkt
            .factor(
                prog,
                &BlockWeights {
                    lp: &scaling.lp_weight,
                    psd: &scaling.m,
                },
            )
            .is_err()
        {
            status = SolverStatus::NumericalFailure;
            break;
        }
        let lambda = scaling.lambda_vec();
        let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
        let (x2, y2, z2) = kkt_solve(&mut kkt, &ops, &scaling, &neg_c, b, &h);
        let denom_base = dotv(c, &x2) + dotv(b, &y2) + h.dot(&z2);

        let direction = |kkt: &mut Kkt, eta: f64, ds: &ConeVec, dkappa: f64| {
            let bx: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let by: Vec<f64> = ry.iter().map(|v| -eta * v).collect();
            let mut bz = rz.clone();
            bz.scale(-eta);
            let lds = scaling.lambda_div(ds);
            bz.axpy(-1.0, &scaling.apply_wt(&lds));
            let (x1, y1, z1) = kkt_solve(kkt, &ops, &scaling, &bx, &by, &bz);
            let num = -eta * rtau - dkappa / it.tau - (dotv(c, &x1) + dotv(b, &y1) + h.dot(&z1));
            let den = -it.kappa / it.tau + denom_base;
            let dtau = num / den;
            let dx: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + dtau * b).collect();
            let dy: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + dtau * b).collect();
            let mut dz = z1;
            dz.axpy(dtau, &z2);
            // Δs from the linearized primal equation GΔx + Δs − hΔτ = −η r_z,
            // which keeps the primal residual exact under scaling round-off.
            let mut ds_u = rz.clone();
            ds_u.scale(-eta);
            ds_u.axpy(dtau, &h);
            ds_u.axpy(-1.0, &ops.g_mul(&dx));
            let dkap = (dkappa - it.kappa * dtau) / it.tau;
            (dx, dy, dz, ds_u, dtau, dkap)
        };

        let step_len = |ds: &ConeVec, dz: &ConeVec, dtau: f64, dkap: f64, limit: f64| {
            let mut a = max_step(&it.s, ds, limit).min(max_step(&it.z, dz, limit));
            if dtau < 0.0 {
                a = a.min(-it.tau / dtau);
            }
            if dkap < 0.0 {
                a = a.min(-it.kappa / dkap);
            }
            a
        };

        // predictor
        let mut ds_aff = jordan(&lambda, &lambda);
        ds_aff.scale(-1.0);
        let dk_aff = -it.tau * it.kappa;
        let (_, _, dz_a, ds_a, dtau_a, dkap_a) = direction(&mut kkt, 1.0, &ds_aff, dk_aff);
        let alpha_aff = step_len(&ds_a, &dz_a, dtau_a, dkap_a, 1.0);
        let (ds_a, dz_a) = (scaling.apply_winv_t(&ds_a), scaling.apply_w(&dz_a));
        let sigma = (1.0 - alpha_aff).clamp(0.0, 1.0).powi(3);

        // corrector
        let mut ds_cmb = jordan(&lambda, &lambda);
        ds_cmb.axpy(1.0, &jordan(&ds_a, &dz_a));
        ds_cmb.scale(-1.0);
        let mut e = ConeVec::identity(prog);
        e.scale(sigma * mu);
        ds_cmb.axpy(1.0, &e);
        let dk_cmb = -it.tau * it.kappa - dtau_a * dkap_a + sigma * mu;
        let (dx, dy, dz, ds, dtau, dkap) = direction(&mut kkt, 1.0 - sigma, &ds_cmb, dk_cmb);
        let alpha = (0.99 * step_len(&ds, &dz, dtau, dkap, 1.0 / 0.99)).min(1.0);
        if !alpha.is_finite() || alpha < 1e-12 {
            status = SolverStatus::NumericalFailure;
            break;
        }

        for (x, d) in it.x.iter_mut().zip(&dx) {
            *x += alpha * d;
        }
        for (y, d) in it.y.iter_mut().zip(&dy) {
            *y += alpha * d;
        }
        it.z.axpy(alpha, &dz);
        it.s.axpy(alpha, &ds);
        it.tau += alpha * dtau;
        it.kappa += alpha * dkap;
        // keep the symmetric parts exact
        for m in it.s.psd.iter_mut().chain(it.z.psd.iter_mut()) {
            let t = m.transpose();
            *m += t;
            *m *= 0.5;
        }
    }
    Ok(finish(prog, problem, status, &it, res, iterations))
}

fn finish(
    prog: &ConeProgram,
    problem: &SdpProblem,
    status: SolverStatus,
    it: &Iterate,
    residuals: Residuals,
    iterations: usize,
) -> SolverResult {
    // Certificates are reported unnormalized by τ.
    let scale = match status {
        SolverStatus::Infeasible | SolverStatus::Unbounded => 1.0,
        _ => 1.0 / it.tau,
    };
    let x: Vec<f64> = it.x.iter().map(|v| v * scale).collect();
    let mut constraint_duals = vec![0.0; problem.constraints.len()];
    for (k, &origin) in prog.eq_origin.iter().enumerate() {
        constraint_duals[origin] = it.y[k] * scale;
    }
    for (k, &origin) in prog.lp_origin.iter().enumerate() {
        constraint_duals[origin] = it.z.lp[k] * scale;
    }
    let mut block_duals = vec![Vec::new(); problem.blocks.len()];
    for (cone, zm) in prog.psd.iter().zip(&it.z.psd) {
        block_duals[cone.origin] = (zm * scale).transpose().as_slice().to_vec();
    }
    let h_dot_z: f64 = prog.lp_rhs.iter().zip(&it.z.lp).map(|(a, b)| a * b).sum::<f64>()
        + prog
            .psd
            .iter()
            .zip(&it.z.psd)
            .map(|(c, z)| c.constant.dot(z))
            .sum::<f64>();
    let b_dot_y = dotv(&prog.eq_rhs, &it.y);
    SolverResult {
        status,
        primal_objective: problem.objective(&x),
        dual_objective: -(b_dot_y + h_dot_z) * scale,
        x,
        constraint_duals,
        block_duals,
        residuals,
        iterations,
    }
}
