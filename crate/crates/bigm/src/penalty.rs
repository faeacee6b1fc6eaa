//! Penalty-weight recipes: the l1 bound, the bound-difference rule built from
//! a feasible point and a certified unconstrained lower bound, the exact
//! (delta-)optimal weight, the exact-reformulation decision oracle, and the
//! threshold-decision reduction that drives its hardness.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gadgets::expansion_coefficients;
use crate::instances::{feasibility_budget, find_feasible};
use crate::model::{
    cadd, cmul, enumerate_energies, objective_value, penalty_value, Assignment, Lcbo, BRUTE_FORCE_LIMIT,
};
use crate::sdp::{lower_bound_for, SdpConfig, SdpStatus};

/// Where the feasible point used by the bound-difference recipe came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibleSource {
    Dfs,
    Supplied,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PenaltyReport {
    pub m_ell1: i64,
    pub m_sdp: i64,
    pub m_optimal: Option<i64>,
    pub delta: i64,
    pub f_feas: i64,
    pub f_unc_lower: i64,
    pub feasible_point_used: Assignment,
    pub feasible_source: FeasibleSource,
    pub sdp_status: SdpStatus,
    /// True when the SDP value was unusable and only the trivial coefficient
    /// bound backs `f_unc_lower`.
    pub sdp_fallback: bool,
    pub sdp_iterations: usize,
}

/// Sum of absolute objective coefficients plus delta. Always sufficient.
pub fn m_ell1(lcbo: &Lcbo, delta: i64) -> Result<i64> {
    if delta <= 0 {
        return Err(Error::Precondition(format!("delta must be > 0, got {delta}")));
    }
    cadd(lcbo.q_l1_norm()?, delta, "m_ell1")
}

/// f_feas - f_unc_lower + delta: exact reformulation for any feasible value
/// and any valid unconstrained lower bound.
pub fn m_from_bounds(f_feas: i64, f_unc_lower: i64, delta: i64) -> Result<i64> {
    if delta <= 0 {
        return Err(Error::Precondition(format!("delta must be > 0, got {delta}")));
    }
    if f_unc_lower > f_feas {
        return Err(Error::Precondition(format!(
            "lower bound {f_unc_lower} exceeds feasible value {f_feas}"
        )));
    }
    cadd(cadd(f_feas, -f_unc_lower, "bound difference")?, delta, "m_from_bounds")
}

/// The SDP recipe: feasible point (searched or supplied) plus the certified
/// SDP lower bound on the unconstrained minimum.
pub fn m_sdp(
    lcbo: &Lcbo,
    delta: i64,
    node_budget: u64,
    cfg: &SdpConfig,
    supplied: Option<Assignment>,
) -> Result<PenaltyReport> {
    if delta <= 0 {
        return Err(Error::Precondition(format!("delta must be > 0, got {delta}")));
    }
    let (x_feas, source) = match supplied {
        Some(x) => {
            if penalty_value(lcbo, &x)? != 0 {
                return Err(Error::Precondition("supplied point is not feasible".into()));
            }
            (x, FeasibleSource::Supplied)
        }
        None => {
            let x = find_feasible(lcbo, node_budget).ok_or(Error::Infeasible)?;
            (x, FeasibleSource::Dfs)
        }
    };
    let f_feas = objective_value(lcbo, &x_feas)?;
    let (bound, sdp_result) = lower_bound_for(lcbo, cfg)?;
    let fallback = sdp_result.status == SdpStatus::Failed;
    // Any valid lower bound also lower-bounds f_feas; clamp defensively in
    // case the conservative margin was not conservative enough to matter.
    let f_unc_lower = bound.min(f_feas);
    let m = m_from_bounds(f_feas, f_unc_lower, delta)?;
    Ok(PenaltyReport {
        m_ell1: m_ell1(lcbo, delta)?,
        m_sdp: m,
        m_optimal: None,
        delta,
        f_feas,
        f_unc_lower,
        feasible_point_used: x_feas,
        feasible_source: source,
        sdp_status: sdp_result.status,
        sdp_fallback: fallback,
        sdp_iterations: sdp_result.iterations,
    })
}

/// Convenience wrapper with default search budget and solver settings.
pub fn m_sdp_default(lcbo: &Lcbo, delta: i64) -> Result<PenaltyReport> {
    m_sdp(lcbo, delta, feasibility_budget(lcbo.n()), &SdpConfig::default(), None)
}

/// Decide whether (P_M) with the given M is an exact reformulation with gap
/// at least delta: f(x*) + delta <= f(x) + M penalty(x) for every unfeasible x.
pub fn is_exact_reformulation(lcbo: &Lcbo, m: i64, delta: i64) -> Result<bool> {
    if delta <= 0 {
        return Err(Error::Precondition(format!("delta must be > 0, got {delta}")));
    }
    if m < 0 {
        return Err(Error::Precondition(format!("M must be >= 0, got {m}")));
    }
    let mut f_star: Option<i64> = None;
    let mut min_penalized: Option<i64> = None;
    let mut overflow = false;
    enumerate_energies(lcbo, BRUTE_FORCE_LIMIT, |_, f, pen| {
        if pen == 0 {
            f_star = Some(f_star.map_or(f, |v: i64| v.min(f)));
        } else {
            match cmul(m, pen, "M pen").and_then(|mp| cadd(f, mp, "penalized")) {
                Ok(v) => min_penalized = Some(min_penalized.map_or(v, |w: i64| w.min(v))),
                Err(_) => overflow = true,
            }
        }
    })?;
    if overflow {
        return Err(Error::Overflow("evaluating penalized objective".into()));
    }
    let f_star = f_star.ok_or(Error::Infeasible)?;
    Ok(match min_penalized {
        // No unfeasible points at all: trivially exact.
        None => true,
        Some(v) => cadd(f_star, delta, "gap check")? <= v,
    })
}

fn ceil_div(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    num.div_euclid(den) + i64::from(num.rem_euclid(den) != 0)
}

/// Minimal integer M making the reformulation exact with gap delta:
/// max over unfeasible x of ceil((f(x*) + delta - f(x)) / penalty(x)),
/// clamped at zero.
pub fn optimal_m(lcbo: &Lcbo, delta: i64) -> Result<i64> {
    if delta <= 0 {
        return Err(Error::Precondition(format!("delta must be > 0, got {delta}")));
    }
    let mut f_star: Option<i64> = None;
    enumerate_energies(lcbo, BRUTE_FORCE_LIMIT, |_, f, pen| {
        if pen == 0 {
            f_star = Some(f_star.map_or(f, |v: i64| v.min(f)));
        }
    })?;
    let f_star = f_star.ok_or(Error::Infeasible)?;
    let mut best: i64 = 0;
    let mut err: Option<Error> = None;
    enumerate_energies(lcbo, BRUTE_FORCE_LIMIT, |_, f, pen| {
        if pen != 0 && err.is_none() {
            match cadd(f_star, delta, "gap").and_then(|g| cadd(g, -f, "numerator")) {
                Ok(num) => best = best.max(ceil_div(num, pen)),
                Err(e) => err = Some(e),
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Hardness reduction: threshold decision via exactness decisions
// ---------------------------------------------------------------------------

/// Answer of the threshold decision problem for min f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    /// min f <= a.
    Smaller,
    /// min f >= a + delta.
    Greater,
}

/// Constrained BQP whose exactness decision at `M = f(0) - a` answers whether
/// min of `f(x) = x^t Q x + offset` over Hamming weight k is above the
/// threshold.
///
/// Auxiliary count variables p, m in {0..n} are binary-expanded; the dominant
/// square term pins p - m = |x| - k at optimal p, m. Because the required M is
/// (f(0) - a) / k, the whole objective is pre-multiplied by k (recorded in
/// `scale`) so both M and the gap stay integral. Constant terms are dropped:
/// exactness decisions only see objective differences.
pub fn build_hardness_instance(q: &[i64], offset: i64, a: i64, delta: i64, k: usize) -> Result<Lcbo> {
    let n = isqrt(q.len());
    if n * n != q.len() || n == 0 {
        return Err(Error::DimensionMismatch("Q must be square".into()));
    }
    if k < 1 || k > n {
        return Err(Error::Precondition(format!("k = {k} out of range 1..={n}")));
    }
    if offset <= a {
        return Err(Error::Precondition("construction requires f(0) > a".into()));
    }
    if delta <= 0 {
        return Err(Error::Precondition("delta must be > 0".into()));
    }
    let l1: i64 = q.iter().map(|v| v.abs()).sum();
    let alpha = l1 + delta + (offset - a);
    let beta = alpha * ((n as i64).pow(3) + 1);
    let count_coeffs = expansion_coefficients(n as i64, false);
    let kp = count_coeffs.len();
    let nv = n + 2 * kp;
    let mut g = vec![0i64; nv * nv];
    // Objective block: f restricted to the x variables.
    for i in 0..n {
        for j in 0..n {
            g[i * nv + j] = q[i * n + j];
        }
    }
    // alpha |x| (p + m).
    for i in 0..n {
        for (b, &c) in count_coeffs.iter().enumerate() {
            let pb = n + b;
            let mb = n + kp + b;
            g[i * nv + pb] = cadd(g[i * nv + pb], cmul(alpha, c, "alpha c")?, "|x| p")?;
            g[i * nv + mb] = cadd(g[i * nv + mb], cmul(alpha, c, "alpha c")?, "|x| m")?;
        }
    }
    // beta (p - m - |x| + k)^2, constant beta k^2 dropped.
    let mut coeff = vec![0i64; nv];
    for c in coeff.iter_mut().take(n) {
        *c = -1;
    }
    for (b, &c) in count_coeffs.iter().enumerate() {
        coeff[n + b] = c;
        coeff[n + kp + b] = -c;
    }
    for u in 0..nv {
        if coeff[u] == 0 {
            continue;
        }
        // Diagonal: beta c_u^2 (from v^2 = v) + 2 beta k c_u.
        let diag = cadd(
            cmul(beta, cmul(coeff[u], coeff[u], "c^2")?, "beta c^2")?,
            cmul(2 * beta, cmul(k as i64, coeff[u], "k c")?, "2 beta k c")?,
            "square diag",
        )?;
        g[u * nv + u] = cadd(g[u * nv + u], diag, "square diag")?;
        for v in (u + 1)..nv {
            if coeff[v] != 0 {
                let cross = cmul(2 * beta, cmul(coeff[u], coeff[v], "c c")?, "2 beta c c")?;
                g[u * nv + v] = cadd(g[u * nv + v], cross, "square cross")?;
            }
        }
    }
    // Pre-multiply by k so M = f(0) - a is integral.
    for entry in g.iter_mut() {
        *entry = cmul(*entry, k as i64, "k scaling")?;
    }
    // Trivializing constraint x = 0.
    let mut a_mat = vec![0i64; n * nv];
    for i in 0..n {
        a_mat[i * nv + i] = 1;
    }
    Lcbo::new(nv, n, k as i64, g, a_mat, vec![0; n])
}

fn isqrt(v: usize) -> usize {
    (v as f64).sqrt().round() as usize
}

/// Threshold decision answered only through exactness decisions on the
/// constructed instances (plus the direct evaluation at x = 0).
pub fn decide_f_via_pm(q: &[i64], offset: i64, a: i64, delta: i64) -> Result<Decision> {
    let n = isqrt(q.len());
    if n * n != q.len() || n == 0 {
        return Err(Error::DimensionMismatch("Q must be square".into()));
    }
    if delta <= 0 {
        return Err(Error::Precondition("delta must be > 0".into()));
    }
    // Hamming weight 0: evaluate directly.
    if offset <= a {
        return Ok(Decision::Smaller);
    }
    for k in 1..=n {
        let instance = build_hardness_instance(q, offset, a, delta, k)?;
        let m = offset - a;
        let scaled_delta = delta * k as i64;
        if !is_exact_reformulation(&instance, m, scaled_delta)? {
            return Ok(Decision::Smaller);
        }
    }
    Ok(Decision::Greater)
}

/// Independent oracle: enumerate {0,1}^n directly.
pub fn decide_f_brute(q: &[i64], offset: i64, a: i64) -> Result<Decision> {
    let n = isqrt(q.len());
    if n * n != q.len() || n == 0 {
        return Err(Error::DimensionMismatch("Q must be square".into()));
    }
    let lcbo = Lcbo::unconstrained(n, 1, q.to_vec())?;
    let mut min_f = i64::MAX;
    enumerate_energies(&lcbo, BRUTE_FORCE_LIMIT, |_, f, _| {
        min_f = min_f.min(f);
    })?;
    Ok(if min_f + offset <= a { Decision::Smaller } else { Decision::Greater })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Lcbo {
        Lcbo::new(2, 1, 1, vec![-2, 0, 0, -1], vec![1, 1], vec![1]).unwrap()
    }

    #[test]
    fn m_ell1_examples() {
        let l = Lcbo::unconstrained(2, 1, vec![2, -1, 0, 3]).unwrap();
        assert_eq!(m_ell1(&l, 1).unwrap(), 7);
        let z = Lcbo::unconstrained(2, 1, vec![0; 4]).unwrap();
        assert_eq!(m_ell1(&z, 1).unwrap(), 1);
        assert_eq!(m_ell1(&toy(), 1).unwrap(), 4);
        assert!(m_ell1(&toy(), 0).is_err());
    }

    #[test]
    fn m_from_bounds_examples() {
        assert_eq!(m_from_bounds(4, -2, 1).unwrap(), 7);
        assert_eq!(m_from_bounds(0, 0, 1).unwrap(), 1);
        assert_eq!(m_from_bounds(-2, -3, 1).unwrap(), 2);
        assert!(m_from_bounds(0, 1, 1).is_err());
    }

    #[test]
    fn m_sdp_toy_instance() {
        let report = m_sdp_default(&toy(), 1).unwrap();
        assert_eq!(report.f_feas, -2);
        assert_eq!(report.f_unc_lower, -3);
        assert_eq!(report.m_sdp, 2);
        assert_eq!(report.m_ell1, 4);
        assert_eq!(report.feasible_point_used, Assignment(vec![1, 0]));
    }

    #[test]
    fn m_sdp_zero_objective() {
        let l = Lcbo::new(2, 1, 1, vec![0; 4], vec![1, 1], vec![1]).unwrap();
        let report = m_sdp_default(&l, 1).unwrap();
        assert_eq!(report.m_sdp, 1);
    }

    #[test]
    fn exactness_examples() {
        let l = toy();
        assert!(is_exact_reformulation(&l, 2, 1).unwrap());
        assert!(!is_exact_reformulation(&l, 1, 1).unwrap());
        let m = m_ell1(&l, 1).unwrap();
        assert!(is_exact_reformulation(&l, m, 1).unwrap());
    }

    #[test]
    fn exactness_monotone_in_m() {
        let l = toy();
        let mut prev = false;
        for m in 0..10 {
            let now = is_exact_reformulation(&l, m, 1).unwrap();
            assert!(!prev || now, "exactness lost when raising M to {m}");
            prev = now;
        }
    }

    #[test]
    fn optimal_m_examples() {
        assert_eq!(optimal_m(&toy(), 1).unwrap(), 2);
        let l = Lcbo::new(1, 1, 1, vec![0], vec![1], vec![1]).unwrap();
        assert_eq!(optimal_m(&l, 1).unwrap(), 1);
    }

    #[test]
    fn optimal_m_is_exact_minimum() {
        let l = toy();
        let m = optimal_m(&l, 1).unwrap();
        assert!(is_exact_reformulation(&l, m, 1).unwrap());
        assert!(m == 0 || !is_exact_reformulation(&l, m - 1, 1).unwrap());
        assert!(m <= m_ell1(&l, 1).unwrap());
        assert!(m <= m_sdp_default(&l, 1).unwrap().m_sdp);
    }

    #[test]
    fn hardness_short_circuit_and_preconditions() {
        let q = vec![1, 0, 0, 1];
        // f(0) = 0 <= a: caller short-circuits.
        assert_eq!(decide_f_via_pm(&q, 0, 0, 1).unwrap(), Decision::Smaller);
        assert!(build_hardness_instance(&q, 0, 0, 1, 1).is_err());
        assert!(build_hardness_instance(&q, 1, 0, 1, 3).is_err());
    }

    #[test]
    fn hardness_small_example_matches_brute_force() {
        // f(x) = 2 x1 + 3 x2 + 1, threshold a = 0: min over |x| = 1 is 3 > 0.
        let q = vec![2, 0, 0, 3];
        assert_eq!(decide_f_via_pm(&q, 1, 0, 1).unwrap(), decide_f_brute(&q, 1, 0).unwrap());
        assert_eq!(decide_f_brute(&q, 1, 0).unwrap(), Decision::Greater);
        // Negative entries force Smaller.
        let q = vec![-2, 0, 0, 3];
        assert_eq!(decide_f_via_pm(&q, 1, 0, 1).unwrap(), decide_f_brute(&q, 1, 0).unwrap());
        assert_eq!(decide_f_brute(&q, 1, 0).unwrap(), Decision::Smaller);
    }

    #[test]
    fn hardness_randomized_agreement() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let q: Vec<i64> = (0..9).map(|_| rng.gen_range(-2..=2)).collect();
            let a = rng.gen_range(-6..=-1);
            assert_eq!(
                decide_f_via_pm(&q, 0, a, 1).unwrap(),
                decide_f_brute(&q, 0, a).unwrap(),
                "Q = {q:?}, a = {a}"
            );
        }
    }
}
