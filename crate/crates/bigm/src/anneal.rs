//! Noiseless Trotterized adiabatic evolution of diagonal problem
//! Hamiltonians, measurement emulation, and solution-quality metrics.
//!
//! Energies enter the phases in physical units (grid value / scale) and are
//! deliberately NOT rescaled by the spectral width: the penalty weight M is
//! supposed to set the energy scale, and normalizing it away would erase the
//! very effect under study.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    brute_force_solve, penalty_value, qubo_from_lcbo, Assignment, Lcbo, BRUTE_FORCE_LIMIT,
};
use crate::spectrum::{ising_encode_as, IsingHamiltonian, Provenance};

/// Largest qubit count the dense statevector simulator accepts.
pub const SIM_LIMIT: usize = 20;

#[derive(Debug, Clone)]
pub struct Statevector {
    pub n: usize,
    pub amplitudes: Vec<Complex64>,
}

impl Statevector {
    /// Equal superposition: the ground state of H0 = -sum sigma_x.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 || n > SIM_LIMIT {
            return Err(Error::SizeLimit { n, limit: SIM_LIMIT });
        }
        let dim = 1usize << n;
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Ok(Statevector { n, amplitudes: vec![amp; dim] })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Outcome probability of the basis state with bit i of `mask` = x_i.
    pub fn probability(&self, mask: u64) -> f64 {
        self.amplitudes[mask as usize].norm_sqr()
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnnealConfig {
    pub total_time: f64,
    pub steps: usize,
    pub shots: u64,
    pub seed: u64,
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Precondition("steps must be >= 1".into()));
        }
        if !self.total_time.is_finite() || self.total_time < 0.0 {
            return Err(Error::Precondition(format!(
                "total time must be finite and >= 0, got {}",
                self.total_time
            )));
        }
        Ok(())
    }
}

/// Diagonal of the problem Hamiltonian over all basis states, in physical
/// units. Gray-code walk: flipping spin i changes the energy by
/// -2 s_i (h_i + sum_j J_ij s_j).
fn diagonal_energies(ising: &IsingHamiltonian) -> Vec<f64> {
    let n = ising.n;
    let dim = 1usize << n;
    let inv_scale = 1.0 / ising.scale as f64;
    let mut energies = vec![0.0; dim];
    let mut spins = vec![1.0f64; n];
    // Energy at mask 0 (all spins +1).
    let mut e = ising.constant + ising.h.iter().sum::<f64>();
    for i in 0..n {
        for j in (i + 1)..n {
            e += ising.coupling(i, j);
        }
    }
    energies[0] = e * inv_scale;
    let mut mask: u64 = 0;
    for t in 1..dim {
        let i = t.trailing_zeros() as usize;
        let mut field = ising.h[i];
        for j in 0..n {
            if j != i {
                let c = if i < j { ising.coupling(i, j) } else { ising.coupling(j, i) };
                field += c * spins[j];
            }
        }
        e -= 2.0 * spins[i] * field;
        spins[i] = -spins[i];
        mask ^= 1 << i;
        energies[mask as usize] = e * inv_scale;
    }
    energies
}

/// First-order Trotter evolution of H(s) = (1-s) H0 + s H_P from the uniform
/// superposition, with the midpoint schedule s_k = (k - 1/2)/steps. Each step
/// applies the diagonal phases exp(-i dt s_k E(x)) followed by the
/// single-qubit x-rotations exp(i dt (1-s_k) sigma_x).
pub fn trotter_evolve(ising: &IsingHamiltonian, config: &AnnealConfig) -> Result<Statevector> {
    config.validate()?;
    let mut psi = Statevector::uniform(ising.n)?;
    let energies = diagonal_energies(ising);
    let dt = config.total_time / config.steps as f64;
    if dt == 0.0 {
        return Ok(psi);
    }
    let n = ising.n;
    let dim = psi.amplitudes.len();
    for k in 1..=config.steps {
        let s = (k as f64 - 0.5) / config.steps as f64;
        let phase_scale = -dt * s;
        for (amp, &e) in psi.amplitudes.iter_mut().zip(&energies) {
            *amp *= Complex64::from_polar(1.0, phase_scale * e);
        }
        // exp(i theta sigma_x) = cos(theta) I + i sin(theta) sigma_x.
        let theta = dt * (1.0 - s);
        let (sin, cos) = theta.sin_cos();
        let isin = Complex64::new(0.0, sin);
        for q in 0..n {
            let bit = 1usize << q;
            for base in 0..dim {
                if base & bit != 0 {
                    continue;
                }
                let a0 = psi.amplitudes[base];
                let a1 = psi.amplitudes[base | bit];
                psi.amplitudes[base] = cos * a0 + isin * a1;
                psi.amplitudes[base | bit] = isin * a0 + cos * a1;
            }
        }
    }
    Ok(psi)
}

/// Multinomial draw from |amplitudes|^2, counts indexed by basis-state mask.
pub fn sample_masks(psi: &Statevector, shots: u64, seed: u64) -> Result<Vec<u64>> {
    if shots < 1 {
        return Err(Error::Precondition("shots must be >= 1".into()));
    }
    let mut cumulative: Vec<f64> = Vec::with_capacity(psi.amplitudes.len());
    let mut total = 0.0;
    for a in &psi.amplitudes {
        total += a.norm_sqr();
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; psi.amplitudes.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen_range(0.0..total);
        let idx = cumulative.partition_point(|&c| c <= u).min(counts.len() - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Multinomial draw keyed by bitstring (x_0 leftmost), zero counts omitted.
pub fn sample(psi: &Statevector, shots: u64, seed: u64) -> Result<BTreeMap<String, u64>> {
    let masks = sample_masks(psi, shots, seed)?;
    Ok(masks
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(mask, &c)| (Assignment::from_mask(psi.n, mask as u64).bitstring(), c))
        .collect())
}

/// Fraction of shots landing on the optimal bitstring.
pub fn success_probability(counts: &BTreeMap<String, u64>, x_star: &Assignment) -> f64 {
    let shots: u64 = counts.values().sum();
    if shots == 0 {
        return 0.0;
    }
    *counts.get(&x_star.bitstring()).unwrap_or(&0) as f64 / shots as f64
}

/// Approximation ratio (f(x) - f(x_max)) / (f(x*) - f(x_max)) with x_max the
/// worst feasible point; absent for unfeasible x or a flat feasible spectrum.
pub fn approximation_ratio(lcbo: &Lcbo, x: &Assignment) -> Result<Option<f64>> {
    if penalty_value(lcbo, x)? != 0 {
        return Ok(None);
    }
    let report = brute_force_solve(lcbo, BRUTE_FORCE_LIMIT)?;
    let denom = report.f_star - report.f_max_feasible;
    if denom == 0 {
        return Ok(None);
    }
    let f = crate::model::objective_value(lcbo, x)?;
    Ok(Some((f - report.f_max_feasible) as f64 / denom as f64))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunResult {
    pub counts: BTreeMap<String, u64>,
    pub success_probability: f64,
    /// Count-weighted mean approximation ratio over feasible outcomes;
    /// 0 when no feasible outcome was measured.
    pub avg_approx_ratio: f64,
    pub feasible_fraction: f64,
    /// Exact |<x*|psi>|^2, independent of shot noise.
    pub exact_success_probability: f64,
}

/// Full experiment on one instance: penalize with weight `m`, evolve, sample,
/// and score against the brute-force solution.
pub fn run_anneal(lcbo: &Lcbo, m: i64, config: &AnnealConfig) -> Result<(RunResult, Statevector)> {
    let qubo = qubo_from_lcbo(lcbo, m)?;
    let ising = ising_encode_as(&qubo, Provenance::Combined { m });
    let psi = trotter_evolve(&ising, config)?;
    let masks = sample_masks(&psi, config.shots, config.seed)?;
    let report = brute_force_solve(lcbo, BRUTE_FORCE_LIMIT)?;
    let star_mask = mask_of(&report.x_star);
    let ratio_denom = report.f_star - report.f_max_feasible;

    let mut feasible_shots = 0u64;
    let mut star_shots = 0u64;
    let mut ratio_sum = 0.0;
    let mut counts = BTreeMap::new();
    for (mask, &c) in masks.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x = Assignment::from_mask(lcbo.n(), mask as u64);
        counts.insert(x.bitstring(), c);
        if penalty_value(lcbo, &x)? == 0 {
            feasible_shots += c;
            if ratio_denom != 0 {
                let f = crate::model::objective_value(lcbo, &x)?;
                ratio_sum += c as f64 * (f - report.f_max_feasible) as f64 / ratio_denom as f64;
            }
        }
        if mask as u64 == star_mask {
            star_shots = c;
        }
    }
    let shots = config.shots as f64;
    let avg_approx_ratio =
        if feasible_shots > 0 && ratio_denom != 0 { ratio_sum / feasible_shots as f64 } else { 0.0 };
    let result = RunResult {
        counts,
        success_probability: star_shots as f64 / shots,
        avg_approx_ratio,
        feasible_fraction: feasible_shots as f64 / shots,
        exact_success_probability: psi.probability(star_mask),
    };
    Ok((result, psi))
}

fn mask_of(x: &Assignment) -> u64 {
    x.0.iter().enumerate().fold(0u64, |m, (i, &b)| m | (u64::from(b) << i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::qubo_from_lcbo;
    use crate::spectrum::ising_encode;

    fn single_qubit_minus_x() -> IsingHamiltonian {
        let l = Lcbo::unconstrained(1, 1, vec![-1]).unwrap();
        ising_encode(&qubo_from_lcbo(&l, 0).unwrap())
    }

    #[test]
    fn zero_time_is_identity() {
        let ising = single_qubit_minus_x();
        let cfg = AnnealConfig { total_time: 0.0, steps: 5, shots: 1, seed: 0 };
        let psi = trotter_evolve(&ising, &cfg).unwrap();
        assert!((psi.probability(0) - 0.5).abs() < 1e-12);
        assert!((psi.probability(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn adiabatic_limit_single_qubit() {
        let ising = single_qubit_minus_x();
        let cfg = AnnealConfig { total_time: 100.0, steps: 200, shots: 1, seed: 0 };
        let psi = trotter_evolve(&ising, &cfg).unwrap();
        assert!(psi.probability(1) >= 0.99, "got {}", psi.probability(1));
    }

    #[test]
    fn norm_preserved_over_many_steps() {
        let l = Lcbo::unconstrained(3, 1, vec![2, -1, 0, 0, 1, 3, 0, 0, -2]).unwrap();
        let ising = ising_encode(&qubo_from_lcbo(&l, 0).unwrap());
        let cfg = AnnealConfig { total_time: 50.0, steps: 1000, shots: 1, seed: 0 };
        let psi = trotter_evolve(&ising, &cfg).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sampling_basis_state() {
        let mut psi = Statevector::uniform(2).unwrap();
        psi.amplitudes = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0), // mask 2 = x = (0, 1) = "01"
            Complex64::new(0.0, 0.0),
        ];
        let counts = sample(&psi, 50, 7).unwrap();
        assert_eq!(counts, BTreeMap::from([("01".to_string(), 50)]));
    }

    #[test]
    fn sampling_uniform_statistics() {
        let psi = Statevector::uniform(2).unwrap();
        let shots = 1_000_000u64;
        let counts = sample_masks(&psi, shots, 3).unwrap();
        let expected = shots as f64 / 4.0;
        let five_sigma = 5.0 * (shots as f64 * 0.25 * 0.75).sqrt();
        for (mask, &c) in counts.iter().enumerate() {
            assert!((c as f64 - expected).abs() < five_sigma, "mask {mask}: {c}");
        }
    }

    #[test]
    fn sampling_deterministic() {
        let l = Lcbo::unconstrained(2, 1, vec![-2, 1, 0, -1]).unwrap();
        let ising = ising_encode(&qubo_from_lcbo(&l, 0).unwrap());
        let cfg = AnnealConfig { total_time: 10.0, steps: 20, shots: 500, seed: 42 };
        let psi = trotter_evolve(&ising, &cfg).unwrap();
        assert_eq!(sample(&psi, 500, 42).unwrap(), sample(&psi, 500, 42).unwrap());
    }

    #[test]
    fn success_probability_examples() {
        let counts = BTreeMap::from([("01".to_string(), 300u64), ("10".to_string(), 700)]);
        assert_eq!(success_probability(&counts, &Assignment(vec![1, 0])), 0.7);
        assert_eq!(success_probability(&counts, &Assignment(vec![1, 1])), 0.0);
    }

    #[test]
    fn approximation_ratio_examples() {
        let l = Lcbo::new(2, 1, 1, vec![-2, 0, 0, -1], vec![1, 1], vec![1]).unwrap();
        assert_eq!(approximation_ratio(&l, &Assignment(vec![1, 0])).unwrap(), Some(1.0));
        assert_eq!(approximation_ratio(&l, &Assignment(vec![0, 1])).unwrap(), Some(0.0));
        assert_eq!(approximation_ratio(&l, &Assignment(vec![1, 1])).unwrap(), None);
    }

    #[test]
    fn run_anneal_converges_on_toy_instance() {
        let l = Lcbo::new(2, 1, 1, vec![-2, 0, 0, -1], vec![1, 1], vec![1]).unwrap();
        let cfg = AnnealConfig { total_time: 200.0, steps: 400, shots: 1000, seed: 1 };
        let (result, _) = run_anneal(&l, 2, &cfg).unwrap();
        assert!(result.exact_success_probability > 0.9, "{}", result.exact_success_probability);
        assert!(result.success_probability > 0.8);
        assert!(result.feasible_fraction >= result.success_probability);
        assert!(result.avg_approx_ratio > 0.8);
    }
}
