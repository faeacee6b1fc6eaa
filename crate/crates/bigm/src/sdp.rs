//! SDP relaxation of the unconstrained binary quadratic minimization and an
//! operator-splitting solver producing a certified lower bound on the
//! unconstrained minimum of the objective.
//!
//! The lifted matrix Y stands in for (1, x)(1, x)^t; dropping the rank-one
//! requirement leaves minimization of Tr(Y^t Qtilde) over the PSD cone
//! intersected with the affine/box set {Y_1i = Y_ii, Y_ij in [0, 1]}.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Lcbo;

#[derive(Debug, Clone, Copy)]
pub struct SdpConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub over_relaxation: f64,
    /// Keep the Y_11 = 1 constraint from the exact lifted formulation. It is
    /// dropped by the strict relaxation but keeping it stays valid and tighter.
    pub enforce_y11: bool,
    /// Entrywise [0, 1] box constraints.
    pub box_constraints: bool,
}

impl Default for SdpConfig {
    fn default() -> Self {
        SdpConfig { tol: 1e-6, max_iter: 50_000, over_relaxation: 1.6, enforce_y11: true, box_constraints: true }
    }
}

impl SdpConfig {
    /// The strict relaxation: no Y_11 pin.
    pub fn strict() -> Self {
        SdpConfig { enforce_y11: false, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    /// n + 1.
    pub dim: usize,
    pub qtilde: DMatrix<f64>,
    pub enforce_y11: bool,
    pub box_constraints: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SdpStatus {
    Converged,
    MaxIter,
    Failed,
}

#[derive(Debug, Clone)]
pub struct SdpResult {
    pub y: DMatrix<f64>,
    /// Tr(Y^t Qtilde) at the returned iterate, in instance integer units.
    pub primal_value: f64,
    /// Primal value minus a conservative residual margin; still real-valued.
    pub certified_lower_bound: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

/// Build Qtilde from an LCBO objective: the diagonal of Q is the linear part
/// (placed as L/2 on the first row/column), off-diagonal entries form the
/// symmetrized quadratic block.
pub fn build_relaxation(lcbo: &Lcbo) -> SdpProblem {
    build_relaxation_with(lcbo, &SdpConfig::default())
}

pub fn build_relaxation_with(lcbo: &Lcbo, cfg: &SdpConfig) -> SdpProblem {
    let n = lcbo.n();
    let dim = n + 1;
    let mut qt = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        let li = lcbo.q(i, i) as f64;
        qt[(0, i + 1)] = li / 2.0;
        qt[(i + 1, 0)] = li / 2.0;
        for j in 0..n {
            if i != j {
                qt[(i + 1, j + 1)] = (lcbo.q(i, j) as f64 + lcbo.q(j, i) as f64) / 2.0;
            }
        }
    }
    SdpProblem { dim, qtilde: qt, enforce_y11: cfg.enforce_y11, box_constraints: cfg.box_constraints }
}

fn project_psd(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = mat.nrows();
    let sym = (mat + mat.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut out = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let lam = eig.eigenvalues[k];
        if lam > 0.0 {
            let v = eig.eigenvectors.column(k);
            // out += lam * v v^t
            for i in 0..dim {
                let vi = lam * v[i];
                for j in 0..dim {
                    out[(i, j)] += vi * v[j];
                }
            }
        }
    }
    out
}

/// Euclidean projection onto the affine/box set: symmetrize, pin Y_11, make
/// each orbit {Y_1i, Y_i1, Y_ii} a common clipped mean, clip the rest to [0,1].
fn project_affine_box(mat: &DMatrix<f64>, enforce_y11: bool, boxed: bool) -> DMatrix<f64> {
    let dim = mat.nrows();
    let mut y = (mat + mat.transpose()) * 0.5;
    let clip = |v: f64| if boxed { v.clamp(0.0, 1.0) } else { v };
    y[(0, 0)] = if enforce_y11 { 1.0 } else { clip(y[(0, 0)]) };
    for i in 1..dim {
        let v = clip((y[(0, i)] + y[(i, 0)] + y[(i, i)]) / 3.0 * 1.0);
        let v = if boxed { v.clamp(0.0, 1.0) } else { v };
        y[(0, i)] = v;
        y[(i, 0)] = v;
        y[(i, i)] = v;
        for j in (i + 1)..dim {
            let w = clip(y[(i, j)]);
            y[(i, j)] = w;
            y[(j, i)] = w;
        }
    }
    y
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// ADMM over the two projections with over-relaxation and scaled dual term.
pub fn solve(problem: &SdpProblem, cfg: &SdpConfig) -> Result<SdpResult> {
    if cfg.tol <= 0.0 {
        return Err(Error::Precondition("tolerance must be > 0".into()));
    }
    let dim = problem.dim;
    let c = &problem.qtilde;
    let c_norm = c.norm();
    let mut rho = if c_norm > 0.0 { (c_norm / dim as f64).max(1e-8) } else { 1.0 };
    // Deterministic start: I/dim plus weight on the lifted-one entry.
    let mut init = DMatrix::<f64>::identity(dim, dim) * (1.0 / dim as f64);
    init[(0, 0)] += 1.0;
    let mut z = project_affine_box(&init, problem.enforce_y11, problem.box_constraints);
    let mut u = DMatrix::<f64>::zeros(dim, dim);
    // Read after the loop even when max_iter is 0; otherwise overwritten.
    #[allow(unused_assignments)]
    let mut x = z.clone();
    let mut primal_res = f64::INFINITY;
    let mut dual_res = f64::INFINITY;
    let mut status = SdpStatus::MaxIter;
    let mut iterations = cfg.max_iter;
    let alpha = cfg.over_relaxation;
    for it in 1..=cfg.max_iter {
        let w = &z - &u - c * (1.0 / rho);
        x = project_psd(&w);
        let xh = &x * alpha + &z * (1.0 - alpha);
        let z_prev = z.clone();
        z = project_affine_box(&(&xh + &u), problem.enforce_y11, problem.box_constraints);
        u = u + xh - &z;
        primal_res = (&x - &z).norm() / x.norm().max(z.norm()).max(1.0);
        dual_res = rho * (&z - &z_prev).norm() / (rho * u.norm()).max(1.0);
        if !primal_res.is_finite() || !dual_res.is_finite() {
            status = SdpStatus::Failed;
            iterations = it;
            break;
        }
        if primal_res < cfg.tol && dual_res < cfg.tol {
            status = SdpStatus::Converged;
            iterations = it;
            break;
        }
        // Residual balancing: keep the two residuals within a factor of ten of
        // each other by rescaling rho (and the scaled dual with it).
        if it % 10 == 0 {
            if primal_res > 10.0 * dual_res {
                rho *= 2.0;
                u /= 2.0;
            } else if dual_res > 10.0 * primal_res {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    let primal_value = inner(c, &z);
    let margin = primal_res.max(dual_res) * c_norm * dim as f64 + 1e-9 * (1.0 + c_norm);
    let certified = if primal_value.is_finite() { primal_value - margin } else { f64::NEG_INFINITY };
    Ok(SdpResult {
        y: z,
        primal_value,
        certified_lower_bound: certified,
        primal_residual: primal_res,
        dual_residual: dual_res,
        iterations,
        status,
    })
}

/// Integer-grid lower bound on min_x x^t Q x: the larger of the always-valid
/// trivial bound sum_ij min(Q_ij, 0) and the residual-discounted SDP value,
/// ceiled to the integer grid (the true minimum is an integer in scale units).
pub fn certified_lower_bound(lcbo: &Lcbo, result: &SdpResult) -> i64 {
    let mut trivial: i64 = 0;
    for &v in lcbo.q_matrix() {
        if v < 0 {
            trivial += v;
        }
    }
    if result.status == SdpStatus::Failed || !result.certified_lower_bound.is_finite() {
        return trivial;
    }
    let sdp = result.certified_lower_bound.ceil();
    if sdp >= i64::MIN as f64 && sdp <= i64::MAX as f64 {
        trivial.max(sdp as i64)
    } else {
        trivial
    }
}

/// Convenience: build, solve, certify in one call.
pub fn lower_bound_for(lcbo: &Lcbo, cfg: &SdpConfig) -> Result<(i64, SdpResult)> {
    let problem = build_relaxation_with(lcbo, cfg);
    let result = solve(&problem, cfg)?;
    let bound = certified_lower_bound(lcbo, &result);
    Ok((bound, result))
}
