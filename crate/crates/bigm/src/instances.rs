//! Benchmark instance generation (sparse LCBO, set partitioning, Markowitz
//! portfolio), price-data ingestion, the greedy portfolio heuristic, and a
//! budgeted depth-first feasible-point search.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::{gadgetize, PolyIntProgram, QuadConstraint, VariableMap};
use crate::model::{cadd, cmul, objective_value, penalty_value, Assignment, Lcbo};

/// Retries before a generator gives up on drawing a feasible instance.
pub const RETRY_BUDGET: usize = 100;

/// Fixed-point grid for financial data.
pub const PRICE_SCALE: i64 = 10_000;

// ---------------------------------------------------------------------------
// Price data and the Markowitz model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriceHistory {
    pub assets: Vec<String>,
    /// (T + 1) x N, strictly positive.
    pub prices: Vec<Vec<f64>>,
    pub interval: String,
}

impl PriceHistory {
    pub fn validate(&self) -> Result<()> {
        let n = self.assets.len();
        if self.prices.len() < 3 {
            return Err(Error::InvalidInput("price history needs at least 3 rows (T >= 2)".into()));
        }
        for row in &self.prices {
            if row.len() != n {
                return Err(Error::InvalidInput("price row length does not match asset count".into()));
            }
            if row.iter().any(|&p| !p.is_finite() || p <= 0.0) {
                return Err(Error::InvalidInput("prices must be positive and finite".into()));
            }
        }
        Ok(())
    }
}

fn round_grid(v: f64) -> f64 {
    (v * PRICE_SCALE as f64).round() / PRICE_SCALE as f64
}

/// Per-step relative returns, their sample mean, and the Bessel-corrected
/// sample covariance, all rounded to the 1e-4 grid.
pub fn compute_returns_mu_sigma(history: &PriceHistory) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    history.validate()?;
    let n = history.assets.len();
    let t = history.prices.len() - 1;
    let mut returns = vec![vec![0.0; n]; t];
    for step in 0..t {
        for a in 0..n {
            let prev = history.prices[step][a];
            returns[step][a] = (history.prices[step + 1][a] - prev) / prev;
        }
    }
    let mut mu = vec![0.0; n];
    for a in 0..n {
        mu[a] = returns.iter().map(|r| r[a]).sum::<f64>() / t as f64;
    }
    let mut sigma = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let s: f64 = returns.iter().map(|r| (r[a] - mu[a]) * (r[b] - mu[b])).sum();
            sigma[a][b] = s / (t - 1) as f64;
        }
    }
    let mu = mu.into_iter().map(round_grid).collect();
    let sigma = sigma.into_iter().map(|row| row.into_iter().map(round_grid).collect()).collect();
    Ok((mu, sigma))
}

/// Markowitz instance data with the discretization factors already absorbed:
/// mu = mu_raw / (2^w - 1), sigma = sigma_raw / (2^w - 1)^2, both on the
/// `1/scale` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PortfolioSpec {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub gamma: f64,
    pub w: u32,
    pub scale: i64,
}

impl PortfolioSpec {
    /// Absorb the chunk count into the coefficients per the discretized model.
    pub fn from_raw(mu_raw: &[f64], sigma_raw: &[Vec<f64>], gamma: f64, w: u32) -> Result<Self> {
        if w < 1 {
            return Err(Error::InvalidInput("partition number w must be >= 1".into()));
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidInput("risk aversion gamma must be > 0".into()));
        }
        let chunks = ((1u64 << w) - 1) as f64;
        let mu = mu_raw.iter().map(|&v| round_grid(v / chunks)).collect();
        let sigma = sigma_raw
            .iter()
            .map(|row| row.iter().map(|&v| round_grid(v / (chunks * chunks))).collect())
            .collect();
        Ok(PortfolioSpec { mu, sigma, gamma: round_grid(gamma), w, scale: PRICE_SCALE })
    }

    pub fn from_history(history: &PriceHistory, gamma: f64, w: u32) -> Result<Self> {
        let (mu, sigma) = compute_returns_mu_sigma(history)?;
        Self::from_raw(&mu, &sigma, gamma, w)
    }

    pub fn n_assets(&self) -> usize {
        self.mu.len()
    }

    pub fn budget(&self) -> i64 {
        (1i64 << self.w) - 1
    }

    fn grid_int(&self, v: f64) -> i64 {
        (v * self.scale as f64).round() as i64
    }

    /// Integer objective coefficients at scale^2: the exact integer value of
    /// `scale^2 * (-mu^t y + gamma y^t Sigma y)`.
    fn integer_objective(&self) -> Result<(Vec<i64>, Vec<i64>)> {
        let n = self.n_assets();
        let g = self.grid_int(self.gamma);
        let mut q = vec![0i64; n * n];
        let mut linear = vec![0i64; n];
        for i in 0..n {
            linear[i] = cmul(-self.grid_int(self.mu[i]), self.scale, "mu scaling")?;
            for j in 0..n {
                q[i * n + j] = cmul(g, self.grid_int(self.sigma[i][j]), "gamma sigma")?;
            }
        }
        Ok((q, linear))
    }

    /// Scaled-integer objective of an integer portfolio.
    pub fn objective_int(&self, units: &[i64]) -> Result<i64> {
        let n = self.n_assets();
        let (q, linear) = self.integer_objective()?;
        let mut v: i64 = 0;
        for i in 0..n {
            for j in 0..n {
                if q[i * n + j] != 0 {
                    v = cadd(v, cmul(q[i * n + j], cmul(units[i], units[j], "y y")?, "q y y")?, "objective")?;
                }
            }
            v = cadd(v, cmul(linear[i], units[i], "l y")?, "objective")?;
        }
        Ok(v)
    }
}

/// Integer program for the Markowitz model: minimize -mu^t y + gamma y^t S y
/// over 0 <= y_i <= 2^w - 1 with the full-budget constraint sum y = 2^w - 1.
pub fn portfolio_pip(spec: &PortfolioSpec) -> Result<PolyIntProgram> {
    let n = spec.n_assets();
    let (q, linear) = spec.integer_objective()?;
    let budget = spec.budget();
    let pip = PolyIntProgram {
        n_vars: n,
        q,
        linear,
        equalities: vec![QuadConstraint::linear(vec![1; n], budget)],
        inequalities: Vec::new(),
        upper_bounds: vec![budget; n],
        scale: cmul(spec.scale, spec.scale, "scale^2")?,
    };
    Ok(pip)
}

/// Binary LCBO for a Markowitz instance via binary expansion; `w` bits per
/// asset, one budget constraint.
pub fn build_portfolio_lcbo(spec: &PortfolioSpec) -> Result<(Lcbo, VariableMap)> {
    let pip = portfolio_pip(spec)?;
    gadgetize(&pip, 1, false)
}

/// Allocate the 2^w - 1 budget units one at a time, each to the asset that
/// minimizes the objective of the partial portfolio (lowest index on ties).
pub fn greedy_portfolio(spec: &PortfolioSpec) -> Result<Vec<i64>> {
    let n = spec.n_assets();
    if n == 0 {
        return Err(Error::InvalidInput("portfolio needs at least one asset".into()));
    }
    let mut units = vec![0i64; n];
    for _ in 0..spec.budget() {
        let mut best_k = 0usize;
        let mut best_val = i64::MAX;
        for k in 0..n {
            units[k] += 1;
            let v = spec.objective_int(&units)?;
            units[k] -= 1;
            if k == 0 || v < best_val {
                best_k = k;
                best_val = v;
            }
        }
        units[best_k] += 1;
    }
    Ok(units)
}

/// Encode integer unit counts into the binary assignment of the expanded LCBO.
pub fn encode_units(map: &VariableMap, n_bits: usize, units: &[i64]) -> Result<Assignment> {
    if units.len() != map.integer_vars.len() {
        return Err(Error::DimensionMismatch("unit vector does not match variable map".into()));
    }
    let mut bits = vec![0u8; n_bits];
    for (var, &value) in units.iter().enumerate() {
        let mut rest = value;
        // Coefficients ascend; descending greedy is exact for these encodings.
        for &(idx, coeff) in map.integer_vars[var].iter().rev() {
            if rest >= coeff {
                bits[idx] = 1;
                rest -= coeff;
            }
        }
        if rest != 0 {
            return Err(Error::InvalidInput(format!("value {value} not representable by variable {var}")));
        }
    }
    Assignment::new(bits)
}

// ---------------------------------------------------------------------------
// Random generators (deterministic in the seed)
// ---------------------------------------------------------------------------

fn nonzero_entry(rng: &mut ChaCha8Rng, magnitude: i64) -> i64 {
    let v = rng.gen_range(1..=magnitude);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

fn sparse_row(rng: &mut ChaCha8Rng, n: usize, s: usize, magnitude: i64) -> Vec<i64> {
    let mut cols: Vec<usize> = (0..n).collect();
    // Partial Fisher-Yates: the first s entries are a uniform s-subset.
    for i in 0..s {
        let j = rng.gen_range(i..n);
        cols.swap(i, j);
    }
    let mut row = vec![0i64; n];
    for &c in &cols[..s] {
        row[c] = nonzero_entry(rng, magnitude);
    }
    row
}

/// Number of constraints for a sparse LCBO of size n.
pub fn sparse_constraint_count(n: usize) -> usize {
    (n / 5).max(1)
}

/// Random sparse LCBO: row-sparsity `s` in both Q and A, entries in
/// {-10..10}\{0}, b in {-5..5}; resampled until a feasible point exists.
pub fn gen_sparse_lcbo(n: usize, s: usize, seed: u64) -> Result<Lcbo> {
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("row sparsity {s} out of range 1..={n}")));
    }
    let m = sparse_constraint_count(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = feasibility_budget(n);
    for _ in 0..RETRY_BUDGET {
        let mut q = Vec::with_capacity(n * n);
        for _ in 0..n {
            q.extend(sparse_row(&mut rng, n, s, 10));
        }
        let mut a = Vec::with_capacity(m * n);
        for _ in 0..m {
            a.extend(sparse_row(&mut rng, n, s, 10));
        }
        let b: Vec<i64> = (0..m).map(|_| rng.gen_range(-5..=5)).collect();
        let lcbo = Lcbo::new(n, m, 1, q, a, b)?;
        if find_feasible(&lcbo, budget).is_some() {
            return Ok(lcbo);
        }
    }
    Err(Error::RetryBudget(RETRY_BUDGET))
}

/// Random set partitioning instance: membership matrix with i.i.d. ones at
/// the given density, unit right-hand side, subset costs in {1..10} on the
/// diagonal; resampled until a partition exists.
pub fn gen_spp(n_subsets: usize, m_elements: usize, density: f64, seed: u64) -> Result<Lcbo> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidInput(format!("density {density} out of (0, 1]")));
    }
    if n_subsets == 0 || m_elements == 0 {
        return Err(Error::InvalidInput("SPP needs at least one subset and one element".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = feasibility_budget(n_subsets);
    for _ in 0..RETRY_BUDGET {
        let n = n_subsets;
        let mut q = vec![0i64; n * n];
        for i in 0..n {
            q[i * n + i] = rng.gen_range(1..=10);
        }
        let a: Vec<i64> = (0..m_elements * n).map(|_| i64::from(rng.gen::<f64>() < density)).collect();
        let b = vec![1i64; m_elements];
        let lcbo = Lcbo::new(n, m_elements, 1, q, a, b)?;
        if find_feasible(&lcbo, budget).is_some() {
            return Ok(lcbo);
        }
    }
    Err(Error::RetryBudget(RETRY_BUDGET))
}

/// Synthetic price history: geometric walk with a per-asset drift plus
/// uniform noise, so assets have genuinely distinct expected returns.
pub fn gen_price_history(n_assets: usize, t_steps: usize, seed: u64) -> Result<PriceHistory> {
    if n_assets == 0 || t_steps < 2 {
        return Err(Error::InvalidInput("need at least one asset and T >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assets: Vec<String> = (0..n_assets).map(|i| format!("A{i}")).collect();
    // One growth asset among declining ones, with drifts spread out so that
    // expected returns are well separated.  Histories with near-identical
    // assets produce near-degenerate objectives that defeat any downstream
    // solver regardless of reformulation quality, while several strongly
    // growing assets blow up the energy scale of the penalty term.
    let mut drifts: Vec<f64> = Vec::with_capacity(n_assets);
    drifts.push(rng.gen_range(1.46..1.56));
    if n_assets > 1 {
        let step = 0.10 / (n_assets - 1) as f64;
        for i in 0..n_assets - 1 {
            drifts.push(-0.32 - step * (i as f64 + rng.gen_range(0.25..0.75)));
        }
    }
    drifts.shuffle(&mut rng);
    let mut prices = Vec::with_capacity(t_steps + 1);
    let mut row: Vec<f64> = (0..n_assets).map(|_| rng.gen_range(50.0..150.0)).collect();
    prices.push(row.clone());
    for _ in 0..t_steps {
        for (p, &d) in row.iter_mut().zip(&drifts) {
            *p *= 1.0 + d + rng.gen_range(-0.04..0.04);
        }
        prices.push(row.clone());
    }
    Ok(PriceHistory { assets, prices, interval: "synthetic".into() })
}

/// Random Markowitz instance from a synthetic price history.
pub fn gen_portfolio(n_assets: usize, w: u32, gamma: f64, t_steps: usize, seed: u64) -> Result<PortfolioSpec> {
    let history = gen_price_history(n_assets, t_steps, seed)?;
    PortfolioSpec::from_history(&history, gamma, w)
}

/// CSV ingestion: header row of tickers, first column a date label (ignored),
/// one row per time step. Any missing or non-numeric cell rejects the file.
pub fn parse_price_csv<R: std::io::Read>(reader: R, interval: &str) -> Result<PriceHistory> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::InvalidInput(format!("csv header: {e}")))?.clone();
    if headers.len() < 2 {
        return Err(Error::InvalidInput("price CSV needs a date column and at least one asset".into()));
    }
    let assets: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut prices = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::InvalidInput(format!("csv row {line}: {e}")))?;
        if record.len() != assets.len() + 1 {
            return Err(Error::InvalidInput(format!("csv row {line}: missing values")));
        }
        let row: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("csv row {line}: invalid price {cell:?}")))
            })
            .collect::<Result<_>>()?;
        prices.push(row);
    }
    let history = PriceHistory { assets, prices, interval: interval.to_string() };
    history.validate()?;
    Ok(history)
}

// ---------------------------------------------------------------------------
// Feasible-point search
// ---------------------------------------------------------------------------

/// Node budget that guarantees exhaustiveness at small n without blowing up:
/// a complete search visits at most 2^(n+1) - 1 nodes including internal ones.
pub fn feasibility_budget(n: usize) -> u64 {
    1u64 << (n + 1).min(23)
}

/// Budgeted depth-first search for a feasible point, fixing variables in
/// index order (value 1 first) and pruning on per-constraint interval bounds
/// of the remaining suffix. A found point is polished by single-bit flips
/// that preserve feasibility and decrease the objective.
pub fn find_feasible(lcbo: &Lcbo, node_budget: u64) -> Option<Assignment> {
    let n = lcbo.n();
    let m = lcbo.m();
    // suffix_lo[row][d] / suffix_hi[row][d]: attainable range of
    // sum_{j >= d} A_row,j x_j.
    let mut suffix_lo = vec![vec![0i64; n + 1]; m];
    let mut suffix_hi = vec![vec![0i64; n + 1]; m];
    for row in 0..m {
        for d in (0..n).rev() {
            let a = lcbo.a(row, d);
            suffix_lo[row][d] = suffix_lo[row][d + 1] + a.min(0);
            suffix_hi[row][d] = suffix_hi[row][d + 1] + a.max(0);
        }
    }
    let mut remaining = vec![0i64; m];
    for row in 0..m {
        remaining[row] = lcbo.b(row);
    }
    let mut bits = vec![0u8; n];
    let mut nodes = 0u64;
    fn dfs(
        lcbo: &Lcbo,
        depth: usize,
        bits: &mut [u8],
        remaining: &mut [i64],
        suffix_lo: &[Vec<i64>],
        suffix_hi: &[Vec<i64>],
        nodes: &mut u64,
        budget: u64,
    ) -> bool {
        *nodes += 1;
        if *nodes > budget {
            return false;
        }
        let m = remaining.len();
        for row in 0..m {
            if remaining[row] < suffix_lo[row][depth] || remaining[row] > suffix_hi[row][depth] {
                return false;
            }
        }
        if depth == lcbo.n() {
            return remaining.iter().all(|&r| r == 0);
        }
        for &value in &[1u8, 0u8] {
            bits[depth] = value;
            if value == 1 {
                for row in 0..m {
                    remaining[row] -= lcbo.a(row, depth);
                }
            }
            let found = dfs(lcbo, depth + 1, bits, remaining, suffix_lo, suffix_hi, nodes, budget);
            if value == 1 {
                for row in 0..m {
                    remaining[row] += lcbo.a(row, depth);
                }
            }
            if found {
                return true;
            }
            if *nodes > budget {
                return false;
            }
        }
        bits[depth] = 0;
        false
    }
    if !dfs(lcbo, 0, &mut bits, &mut remaining, &suffix_lo, &suffix_hi, &mut nodes, node_budget) {
        return None;
    }
    let mut x = Assignment(bits);
    // Greedy polish: accept feasibility-preserving single-bit flips that
    // strictly decrease the objective.
    let mut f = objective_value(lcbo, &x).ok()?;
    loop {
        let mut improved = false;
        for j in 0..n {
            x.0[j] ^= 1;
            let still_feasible = penalty_value(lcbo, &x).map(|p| p == 0).unwrap_or(false);
            if still_feasible {
                if let Ok(f2) = objective_value(lcbo, &x) {
                    if f2 < f {
                        f = f2;
                        improved = true;
                        continue;
                    }
                }
            }
            x.0[j] ^= 1;
        }
        if !improved {
            break;
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::brute_force_pip;
    use crate::model::{brute_force_solve, BRUTE_FORCE_LIMIT};

    #[test]
    fn returns_and_moments() {
        let h = PriceHistory {
            assets: vec!["X".into()],
            prices: vec![vec![100.0], vec![110.0], vec![143.0]],
            interval: "monthly".into(),
        };
        let (mu, sigma) = compute_returns_mu_sigma(&h).unwrap();
        // Returns 0.1 and 0.3: mean 0.2, covariance 0.02.
        assert!((mu[0] - 0.2).abs() < 1e-12);
        assert!((sigma[0][0] - 0.02).abs() < 1e-12);
        // Constant prices: zero returns.
        let h = PriceHistory {
            assets: vec!["X".into()],
            prices: vec![vec![5.0], vec![5.0], vec![5.0]],
            interval: "monthly".into(),
        };
        let (mu, sigma) = compute_returns_mu_sigma(&h).unwrap();
        assert_eq!(mu[0], 0.0);
        assert_eq!(sigma[0][0], 0.0);
    }

    #[test]
    fn zero_price_rejected() {
        let h = PriceHistory {
            assets: vec!["X".into()],
            prices: vec![vec![1.0], vec![0.0], vec![1.0]],
            interval: "monthly".into(),
        };
        assert!(compute_returns_mu_sigma(&h).is_err());
    }

    fn two_asset_spec() -> PortfolioSpec {
        // Already-rescaled data: mu = (0.1, 0.2), Sigma = 0.01 I, gamma = 1, w = 1.
        PortfolioSpec {
            mu: vec![0.1, 0.2],
            sigma: vec![vec![0.01, 0.0], vec![0.0, 0.01]],
            gamma: 1.0,
            w: 1,
            scale: PRICE_SCALE,
        }
    }

    #[test]
    fn portfolio_lcbo_two_assets() {
        let spec = two_asset_spec();
        let (lcbo, map) = build_portfolio_lcbo(&spec).unwrap();
        assert_eq!(lcbo.n(), 2);
        assert_eq!(lcbo.m(), 1);
        assert_eq!(lcbo.b(0), 1);
        let report = brute_force_solve(&lcbo, BRUTE_FORCE_LIMIT).unwrap();
        assert_eq!(map.decode(&report.x_star).unwrap(), vec![0, 1]);
        // Optimum -0.19 on the scale^2 grid.
        assert_eq!(report.f_star, -(0.19 * 1e8) as i64);
    }

    #[test]
    fn portfolio_w3_uses_three_bits_per_asset() {
        let spec = PortfolioSpec { w: 3, ..two_asset_spec() };
        let (lcbo, map) = build_portfolio_lcbo(&spec).unwrap();
        assert_eq!(lcbo.n(), 6);
        assert_eq!(map.integer_vars[0].len(), 3);
        assert_eq!(lcbo.b(0), 7);
    }

    #[test]
    fn greedy_examples() {
        let spec = two_asset_spec();
        assert_eq!(greedy_portfolio(&spec).unwrap(), vec![0, 1]);
        // Tiny risk term: all budget on the max-return asset.
        let spec = PortfolioSpec {
            mu: vec![0.1, 0.2, 0.05],
            sigma: vec![vec![0.0; 3]; 3],
            gamma: 1.0,
            w: 2,
            scale: PRICE_SCALE,
        };
        assert_eq!(greedy_portfolio(&spec).unwrap(), vec![0, 3, 0]);
    }

    #[test]
    fn greedy_always_spends_the_budget() {
        for seed in 0..10 {
            let spec = gen_portfolio(4, 3, 1.0, 12, seed).unwrap();
            let units = greedy_portfolio(&spec).unwrap();
            assert_eq!(units.iter().sum::<i64>(), spec.budget());
            assert!(units.iter().all(|&u| (0..=spec.budget()).contains(&u)));
        }
    }

    #[test]
    fn portfolio_lcbo_matches_integer_enumeration() {
        for seed in 0..5 {
            let spec = gen_portfolio(3, 2, 1.0, 12, seed).unwrap();
            let pip = portfolio_pip(&spec).unwrap();
            let direct = brute_force_pip(&pip).unwrap().unwrap();
            let (lcbo, _) = build_portfolio_lcbo(&spec).unwrap();
            let gadget = brute_force_solve(&lcbo, BRUTE_FORCE_LIMIT).unwrap();
            assert_eq!(gadget.f_star, direct.1, "seed {seed}");
        }
    }

    #[test]
    fn sparse_generator_contract() {
        let l = gen_sparse_lcbo(10, 5, 3).unwrap();
        assert_eq!(l.m(), 2);
        for i in 0..10 {
            let nz = (0..10).filter(|&j| l.q(i, j) != 0).count();
            assert!(nz <= 5);
        }
        for row in 0..2 {
            let nz = (0..10).filter(|&j| l.a(row, j) != 0).count();
            assert!(nz <= 5);
        }
        assert_eq!(sparse_constraint_count(4), 1);
        // Determinism.
        let l2 = gen_sparse_lcbo(10, 5, 3).unwrap();
        assert_eq!(l, l2);
        // Feasible by construction.
        assert!(find_feasible(&l, feasibility_budget(10)).is_some());
    }

    #[test]
    fn spp_generator_contract() {
        let l = gen_spp(6, 3, 0.25, 5).unwrap();
        assert_eq!(l.m(), 3);
        for row in 0..3 {
            assert_eq!(l.b(row), 1);
            for j in 0..6 {
                assert!(l.a(row, j) == 0 || l.a(row, j) == 1);
            }
        }
        for i in 0..6 {
            assert!((1..=10).contains(&l.q(i, i)));
        }
        let report = brute_force_solve(&l, BRUTE_FORCE_LIMIT).unwrap();
        assert!(report.feasible_count >= 1);
    }

    #[test]
    fn spp_full_density_optimum_is_min_cost() {
        let l = gen_spp(4, 3, 1.0, 9).unwrap();
        let report = brute_force_solve(&l, BRUTE_FORCE_LIMIT).unwrap();
        let min_cost = (0..4).map(|i| l.q(i, i)).min().unwrap();
        assert_eq!(report.f_star, min_cost);
    }

    #[test]
    fn find_feasible_examples() {
        // Documented order: x = (1, 0) for x1 + x2 = 1.
        let l = Lcbo::new(2, 1, 1, vec![0; 4], vec![1, 1], vec![1]).unwrap();
        assert_eq!(find_feasible(&l, 100).unwrap(), Assignment(vec![1, 0]));
        // Unreachable b prunes at the root.
        let l = Lcbo::new(2, 1, 1, vec![0; 4], vec![1, 1], vec![5]).unwrap();
        assert!(find_feasible(&l, 100).is_none());
        // Exhaustive budget never misses a feasible instance.
        let l = gen_sparse_lcbo(8, 3, 1).unwrap();
        assert!(find_feasible(&l, 1 << 8).is_some());
    }

    #[test]
    fn find_feasible_polish_reduces_objective() {
        // Unconstrained: polish should reach the all-improving flips.
        let l = Lcbo::unconstrained(3, 1, vec![-1, 0, 0, 0, -2, 0, 0, 0, 3]).unwrap();
        let x = find_feasible(&l, 100).unwrap();
        assert_eq!(objective_value(&l, &x).unwrap(), -3);
    }

    #[test]
    fn price_csv_parsing() {
        let data = "date,AAA,BBB\n2020-01,100,50\n2020-02,110,55\n2020-03,121,60\n";
        let h = parse_price_csv(data.as_bytes(), "monthly").unwrap();
        assert_eq!(h.assets, vec!["AAA", "BBB"]);
        assert_eq!(h.prices.len(), 3);
        let bad = "date,AAA,BBB\n2020-01,100\n";
        assert!(parse_price_csv(bad.as_bytes(), "monthly").is_err());
        let nonnum = "date,AAA\n2020-01,100\n2020-02,n/a\n2020-03,101\n";
        assert!(parse_price_csv(nonnum.as_bytes(), "monthly").is_err());
    }
}
