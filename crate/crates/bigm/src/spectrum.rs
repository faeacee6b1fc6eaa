//! Ising encoding of QUBOs and exhaustive spectral diagnostics for the
//! penalized Hamiltonian H_M = H_f + M H_c: the normalized gap Delta_M, the
//! constrained-problem gap Delta_0, and the gap-collapse bound checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    brute_force_solve, cadd, cmul, enumerate_energies, Lcbo, Qubo, BRUTE_FORCE_LIMIT,
};
use crate::penalty::{is_exact_reformulation, optimal_m};

/// Which piece of the penalized Hamiltonian an encoding represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Provenance {
    Objective,
    Constraint,
    Combined { m: i64 },
}

/// Diagonal Ising Hamiltonian sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + c with
/// s_i in {+1, -1} and x_i = (1 - s_i)/2.
///
/// Coefficients are quarters of integers on the instance's fixed-point grid,
/// so the f64 fields are exact.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IsingHamiltonian {
    pub n: usize,
    pub h: Vec<f64>,
    /// Row-major n x n; only entries with i < j are populated.
    pub j: Vec<f64>,
    pub constant: f64,
    /// Fixed-point denominator inherited from the instance: physical energies
    /// are the grid values divided by `scale`.
    pub scale: i64,
    pub provenance: Provenance,
}

impl IsingHamiltonian {
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.j[i * self.n + j]
    }

    /// Diagonal entry at the computational-basis state for bit mask `x`
    /// (bit i of the mask is x_i, so s_i = 1 - 2 x_i).
    pub fn energy_at(&self, x: u64) -> f64 {
        let spin = |i: usize| if x >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.constant;
        for i in 0..self.n {
            e += self.h[i] * spin(i);
            for j in (i + 1)..self.n {
                e += self.coupling(i, j) * spin(i) * spin(j);
            }
        }
        e
    }
}

/// Substitute x_i = (1 - s_i)/2 into the QUBO objective.
pub fn ising_encode(qubo: &Qubo) -> IsingHamiltonian {
    ising_encode_as(qubo, Provenance::Objective)
}

pub fn ising_encode_as(qubo: &Qubo, provenance: Provenance) -> IsingHamiltonian {
    let n = qubo.n();
    let mut h = vec![0.0; n];
    let mut j = vec![0.0; n * n];
    let mut constant = qubo.offset as f64;
    for i in 0..n {
        let d = qubo.coeff(i, i) as f64;
        // c x_i = c/2 - (c/2) s_i.
        h[i] -= d / 2.0;
        constant += d / 2.0;
        for jj in (i + 1)..n {
            let c = qubo.coeff(i, jj) as f64;
            if c == 0.0 {
                continue;
            }
            // c x_i x_j = c/4 (1 - s_i - s_j + s_i s_j).
            j[i * n + jj] += c / 4.0;
            h[i] -= c / 4.0;
            h[jj] -= c / 4.0;
            constant += c / 4.0;
        }
    }
    IsingHamiltonian { n, h, j, constant, scale: qubo.scale, provenance }
}

/// Exhaustive diagnostics of H_M. Energies are integers on the scale grid;
/// the reported reals are exact ratios of those integers.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectrumReport {
    pub e0: i64,
    /// Smallest energy strictly above e0; equals e0 when the spectrum is flat.
    pub e1: i64,
    pub emax: i64,
    pub ground_degeneracy: u64,
    pub delta_m: f64,
    pub delta0: Option<f64>,
    /// Largest objective energy over all assignments.
    pub emax_f: i64,
    /// Largest penalty energy (H_c at unit weight) over all assignments.
    pub emax_c: i64,
    /// Operator norm of H_c: equals emax_c since H_c is diagonal nonnegative.
    pub norm_hc: i64,
    pub bound_ii_holds: bool,
    pub bound_iii_holds: bool,
}

struct RawSpectrum {
    e0: i64,
    e1: Option<i64>,
    emax: i64,
    degeneracy: u64,
    emax_f: i64,
    emax_c: i64,
}

fn scan_spectrum(lcbo: &Lcbo, m: i64) -> Result<RawSpectrum> {
    if m < 0 {
        return Err(Error::Precondition(format!("M must be >= 0, got {m}")));
    }
    let mut acc: Option<RawSpectrum> = None;
    let mut err: Option<Error> = None;
    enumerate_energies(lcbo, BRUTE_FORCE_LIMIT, |_, f, pen| {
        if err.is_some() {
            return;
        }
        let e = match cmul(m, pen, "M pen").and_then(|mp| cadd(f, mp, "energy")) {
            Ok(v) => v,
            Err(error) => {
                err = Some(error);
                return;
            }
        };
        match &mut acc {
            None => {
                acc = Some(RawSpectrum { e0: e, e1: None, emax: e, degeneracy: 1, emax_f: f, emax_c: pen })
            }
            Some(s) => {
                if e < s.e0 {
                    if s.e0 < s.e1.unwrap_or(i64::MAX) {
                        s.e1 = Some(s.e0);
                    }
                    s.e0 = e;
                    s.degeneracy = 1;
                } else if e == s.e0 {
                    s.degeneracy += 1;
                } else if e < s.e1.unwrap_or(i64::MAX) {
                    s.e1 = Some(e);
                }
                s.emax = s.emax.max(e);
                s.emax_f = s.emax_f.max(f);
                s.emax_c = s.emax_c.max(pen);
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(acc.expect("enumerate_energies visits at least one assignment"))
}

/// Constrained spectral gap (f(x*_1) - f(x*)) / (f_max_feasible - f(x*)).
/// None when no second feasible value exists or the denominator vanishes.
pub fn delta0(lcbo: &Lcbo) -> Result<Option<f64>> {
    let report = brute_force_solve(lcbo, BRUTE_FORCE_LIMIT)?;
    Ok(delta0_from(&report))
}

fn delta0_from(report: &crate::model::BruteForceReport) -> Option<f64> {
    let f_star1 = report.f_star1?;
    let denom = report.f_max_feasible - report.f_star;
    if denom == 0 {
        return None;
    }
    Some((f_star1 - report.f_star) as f64 / denom as f64)
}

/// Enumerate all energies of H_M and evaluate the gap-collapse bound flags.
pub fn full_spectrum(lcbo: &Lcbo, m: i64) -> Result<SpectrumReport> {
    let raw = scan_spectrum(lcbo, m)?;
    let feasible = brute_force_solve(lcbo, BRUTE_FORCE_LIMIT).ok();
    let d0 = feasible.as_ref().and_then(delta0_from);
    let m_star = optimal_m(lcbo, 1).ok();
    build_report(&raw, m, d0, feasible.as_ref(), m_star)
}

fn build_report(
    raw: &RawSpectrum,
    m: i64,
    d0: Option<f64>,
    feasible: Option<&crate::model::BruteForceReport>,
    m_star: Option<i64>,
) -> Result<SpectrumReport> {
    let e1 = raw.e1.unwrap_or(raw.e0);
    let gap = e1 - raw.e0;
    let width = raw.emax - raw.e0;
    let delta_m = if width > 0 { gap as f64 / width as f64 } else { 0.0 };

    // (ii) Delta_M <= Delta_0, compared via integer cross-multiplication.
    let bound_ii_holds = match (d0, feasible) {
        (Some(_), Some(rep)) => {
            let d0_num = rep.f_star1.unwrap() - rep.f_star;
            let d0_den = rep.f_max_feasible - rep.f_star;
            width == 0 || gap as i128 * d0_den as i128 <= d0_num as i128 * width as i128
        }
        _ => true,
    };

    // (iii) Delta_0 / Delta_M >= (M - M*) |H_c| / (EmaxF - E0) when the right
    // side is positive. The exactness condition at M* gives
    // f(x) - f(x*) >= delta - M* penalty(x) on unfeasible points, so
    // Emax - E0 >= (M - M*) |H_c|; combined with gap <= delta* and
    // fbar <= EmaxF - E0 this yields the collapse rate Delta_M in O(Delta_0/M).
    let bound_iii_holds = match (d0, feasible, m_star) {
        (Some(_), Some(rep), Some(ms)) => {
            let rhs_num = cmul(m - ms, raw.emax_c, "(M - M*) |Hc|")?;
            let rhs_den = raw.emax_f - raw.e0;
            if rhs_num <= 0 || rhs_den <= 0 || gap == 0 {
                true
            } else {
                let d0_num = rep.f_star1.unwrap() - rep.f_star;
                let d0_den = rep.f_max_feasible - rep.f_star;
                // d0_num/d0_den * width/gap >= rhs_num/rhs_den.
                d0_num as i128 * width as i128 * rhs_den as i128
                    >= rhs_num as i128 * d0_den as i128 * gap as i128
            }
        }
        _ => true,
    };

    Ok(SpectrumReport {
        e0: raw.e0,
        e1,
        emax: raw.emax,
        ground_degeneracy: raw.degeneracy,
        delta_m,
        delta0: d0,
        emax_f: raw.emax_f,
        emax_c: raw.emax_c,
        norm_hc: raw.emax_c,
        bound_ii_holds,
        bound_iii_holds,
    })
}

/// Verify the gap statements for an exact reformulation: (i) the ground energy
/// is the constrained optimum, (ii) the gap never beats Delta_0, and (iii) the
/// quantitative collapse rate. Precondition violations are reported as errors.
pub fn check_gap_bounds(lcbo: &Lcbo, m: i64, delta: i64) -> Result<SpectrumReport> {
    if !is_exact_reformulation(lcbo, m, delta)? {
        return Err(Error::Precondition(format!(
            "(M = {m}, delta = {delta}) is not an exact reformulation"
        )));
    }
    let feasible = brute_force_solve(lcbo, BRUTE_FORCE_LIMIT)?;
    if let Some(f1) = feasible.f_star1 {
        let delta_star = f1 - feasible.f_star;
        if delta > delta_star {
            return Err(Error::Precondition(format!(
                "delta = {delta} exceeds the feasible gap {delta_star}"
            )));
        }
    }
    let report = full_spectrum(lcbo, m)?;
    if report.e0 != feasible.f_star {
        return Err(Error::Precondition(format!(
            "ground energy {} differs from constrained optimum {}",
            report.e0, feasible.f_star
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{qubo_from_lcbo, Assignment};

    fn toy() -> Lcbo {
        Lcbo::new(2, 1, 1, vec![-2, 0, 0, -1], vec![1, 1], vec![1]).unwrap()
    }

    fn check_encoding(lcbo: &Lcbo, m: i64) {
        let qubo = qubo_from_lcbo(lcbo, m).unwrap();
        let ising = ising_encode(&qubo);
        for mask in 0..1u64 << lcbo.n() {
            let x = Assignment::from_mask(lcbo.n(), mask);
            let expected = qubo.value(&x).unwrap() as f64;
            assert_eq!(ising.energy_at(mask), expected, "mask {mask}");
        }
    }

    #[test]
    fn encode_single_linear_term() {
        let l = Lcbo::unconstrained(1, 1, vec![1]).unwrap();
        let ising = ising_encode(&qubo_from_lcbo(&l, 0).unwrap());
        assert_eq!(ising.h, vec![-0.5]);
        assert_eq!(ising.constant, 0.5);
        assert_eq!(ising.energy_at(0), 0.0);
        assert_eq!(ising.energy_at(1), 1.0);
    }

    #[test]
    fn encode_zero_objective() {
        let l = Lcbo::unconstrained(3, 1, vec![0; 9]).unwrap();
        let ising = ising_encode(&qubo_from_lcbo(&l, 0).unwrap());
        assert!(ising.h.iter().all(|&v| v == 0.0));
        assert!(ising.j.iter().all(|&v| v == 0.0));
        assert_eq!(ising.constant, 0.0);
    }

    #[test]
    fn encode_product_term() {
        let l = Lcbo::unconstrained(2, 1, vec![0, 1, 0, 0]).unwrap();
        let ising = ising_encode(&qubo_from_lcbo(&l, 0).unwrap());
        assert_eq!(ising.coupling(0, 1), 0.25);
        assert_eq!(ising.h, vec![-0.25, -0.25]);
        assert_eq!(ising.constant, 0.25);
    }

    #[test]
    fn encoding_matches_qubo_exhaustively() {
        check_encoding(&toy(), 0);
        check_encoding(&toy(), 2);
        check_encoding(&toy(), 4);
        let l = Lcbo::new(3, 1, 1, vec![1, -2, 0, 0, 3, 1, 0, 0, -1], vec![1, 1, 1], vec![2]).unwrap();
        check_encoding(&l, 7);
    }

    #[test]
    fn toy_spectrum_m2() {
        let r = full_spectrum(&toy(), 2).unwrap();
        assert_eq!((r.e0, r.e1, r.emax), (-2, -1, 2));
        assert_eq!(r.delta_m, 0.25);
        assert_eq!(r.ground_degeneracy, 1);
        assert_eq!(r.norm_hc, 1);
        assert_eq!(r.emax_f, 0);
    }

    #[test]
    fn toy_spectrum_m4() {
        let r = full_spectrum(&toy(), 4).unwrap();
        assert_eq!(r.emax, 4);
        assert!((r.delta_m - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_exposes_unconstrained_minimum() {
        let r = full_spectrum(&toy(), 0).unwrap();
        let feasible = brute_force_solve(&toy(), BRUTE_FORCE_LIMIT).unwrap();
        assert!(r.e0 < feasible.f_star);
        assert_eq!(r.e0, feasible.f_min_unconstrained);
    }

    #[test]
    fn delta0_examples() {
        assert_eq!(delta0(&toy()).unwrap(), Some(1.0));
        // All feasible values identical: absent.
        let flat = Lcbo::new(2, 1, 1, vec![0; 4], vec![1, -1], vec![0]).unwrap();
        assert_eq!(delta0(&flat).unwrap(), None);
    }

    #[test]
    fn delta0_partition_instance() {
        // Two partitions: {subset 0} cost 5 and {subset 1, subset 2} cost 1+2.
        let l = Lcbo::new(
            3,
            2,
            1,
            vec![5, 0, 0, 0, 1, 0, 0, 0, 2],
            vec![1, 1, 0, 1, 0, 1],
            vec![1, 1],
        )
        .unwrap();
        let rep = brute_force_solve(&l, BRUTE_FORCE_LIMIT).unwrap();
        assert_eq!(rep.f_star, 3);
        assert_eq!(rep.feasible_count, 2);
        // (5 - 3) / (5 - 3): both partitions bracket the feasible range.
        assert_eq!(delta0(&l).unwrap(), Some(1.0));
    }

    #[test]
    fn gap_bounds_toy() {
        let r = check_gap_bounds(&toy(), 2, 1).unwrap();
        assert_eq!(r.e0, -2);
        assert_eq!(r.delta_m, 0.25);
        assert_eq!(r.delta0, Some(1.0));
        assert!(r.bound_ii_holds && r.bound_iii_holds);
    }

    #[test]
    fn gap_bounds_large_m() {
        let r = check_gap_bounds(&toy(), 20, 1).unwrap();
        assert!((r.delta_m - 1.0 / 22.0).abs() < 1e-15);
        assert!(r.bound_ii_holds && r.bound_iii_holds);
    }

    #[test]
    fn optimal_m_saturates_gap() {
        let ms = optimal_m(&toy(), 1).unwrap();
        let r = check_gap_bounds(&toy(), ms, 1).unwrap();
        assert_eq!(r.e1 - r.e0, 1);
    }

    #[test]
    fn gap_bounds_reject_inexact_m() {
        assert!(check_gap_bounds(&toy(), 1, 1).is_err());
    }
}
