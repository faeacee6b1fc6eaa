//! Core problem representations: linearly-constrained binary quadratic
//! optimization (LCBO) instances, their QUBO penalty reformulations, and
//! exhaustive brute-force oracles for desk-scale verification.
//!
//! All arithmetic is exact 64-bit integer with checked overflow. Rational
//! coefficients are represented on a fixed-point grid: the true value of an
//! integer coefficient `c` is `c / scale`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of binary variables for exhaustive enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 24;

pub(crate) fn cadd(a: i64, b: i64, what: &str) -> Result<i64> {
    a.checked_add(b).ok_or_else(|| Error::Overflow(what.to_string()))
}

pub(crate) fn cmul(a: i64, b: i64, what: &str) -> Result<i64> {
    a.checked_mul(b).ok_or_else(|| Error::Overflow(what.to_string()))
}

/// Minimize x^t Q x over {0,1}^n subject to A x = b.
///
/// Linear objective terms live on the diagonal of `Q` (using x_i^2 = x_i).
/// `scale` is the fixed-point denominator: displayed values are `int / scale`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lcbo {
    n: usize,
    m: usize,
    scale: i64,
    /// Row-major n x n.
    q: Vec<i64>,
    /// Row-major m x n.
    a: Vec<i64>,
    b: Vec<i64>,
}

impl Lcbo {
    pub fn new(n: usize, m: usize, scale: i64, q: Vec<i64>, a: Vec<i64>, b: Vec<i64>) -> Result<Self> {
        if q.len() != n * n {
            return Err(Error::DimensionMismatch(format!("Q has {} entries, expected {}", q.len(), n * n)));
        }
        if a.len() != m * n {
            return Err(Error::DimensionMismatch(format!("A has {} entries, expected {}", a.len(), m * n)));
        }
        if b.len() != m {
            return Err(Error::DimensionMismatch(format!("b has {} entries, expected {}", b.len(), m)));
        }
        if scale < 1 {
            return Err(Error::InvalidInput(format!("scale must be >= 1, got {scale}")));
        }
        Ok(Lcbo { n, m, scale, q, a, b })
    }

    /// Constructor taking a separate linear objective vector, folded onto the
    /// diagonal of `Q` via x_i^2 = x_i.
    pub fn with_linear(
        n: usize,
        m: usize,
        scale: i64,
        mut q: Vec<i64>,
        linear: &[i64],
        a: Vec<i64>,
        b: Vec<i64>,
    ) -> Result<Self> {
        if linear.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "linear vector has {} entries, expected {n}",
                linear.len()
            )));
        }
        if q.len() != n * n {
            return Err(Error::DimensionMismatch(format!("Q has {} entries, expected {}", q.len(), n * n)));
        }
        for i in 0..n {
            q[i * n + i] = cadd(q[i * n + i], linear[i], "folding linear terms")?;
        }
        Self::new(n, m, scale, q, a, b)
    }

    /// Unconstrained instance (m = 0).
    pub fn unconstrained(n: usize, scale: i64, q: Vec<i64>) -> Result<Self> {
        Self::new(n, 0, scale, q, Vec::new(), Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn q(&self, i: usize, j: usize) -> i64 {
        self.q[i * self.n + j]
    }

    pub fn a(&self, row: usize, col: usize) -> i64 {
        self.a[row * self.n + col]
    }

    pub fn b(&self, row: usize) -> i64 {
        self.b[row]
    }

    pub fn q_matrix(&self) -> &[i64] {
        &self.q
    }

    pub fn a_matrix(&self) -> &[i64] {
        &self.a
    }

    pub fn b_vector(&self) -> &[i64] {
        &self.b
    }

    /// Sum of absolute values of all objective coefficients.
    pub fn q_l1_norm(&self) -> Result<i64> {
        let mut s: i64 = 0;
        for &v in &self.q {
            s = cadd(s, v.abs(), "l1 norm of Q")?;
        }
        Ok(s)
    }
}

/// A point of {0,1}^n.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<u8>);

impl Assignment {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput("assignment bits must be 0 or 1".into()));
        }
        Ok(Assignment(bits))
    }

    /// Bit j of `mask` becomes x_j.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        Assignment((0..n).map(|j| ((mask >> j) & 1) as u8).collect())
    }

    pub fn to_mask(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bitstring with x_0 leftmost, e.g. "0110".
    pub fn bitstring(&self) -> String {
        self.0.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::InvalidInput(format!("invalid bitstring character {c:?}"))),
            })
            .collect::<Result<_>>()?;
        Ok(Assignment(bits))
    }
}

fn check_len(lcbo: &Lcbo, x: &Assignment) -> Result<()> {
    if x.len() != lcbo.n {
        return Err(Error::DimensionMismatch(format!(
            "assignment length {} vs instance n = {}",
            x.len(),
            lcbo.n
        )));
    }
    Ok(())
}

/// x^t Q x in exact integer arithmetic.
pub fn objective_value(lcbo: &Lcbo, x: &Assignment) -> Result<i64> {
    check_len(lcbo, x)?;
    let n = lcbo.n;
    let mut f: i64 = 0;
    for i in 0..n {
        if x.0[i] == 0 {
            continue;
        }
        for j in 0..n {
            if x.0[j] == 1 {
                f = cadd(f, lcbo.q(i, j), "objective evaluation")?;
            }
        }
    }
    let _ = n;
    Ok(f)
}

/// ||A x - b||^2 as an exact integer; zero iff x is feasible.
pub fn penalty_value(lcbo: &Lcbo, x: &Assignment) -> Result<i64> {
    check_len(lcbo, x)?;
    let mut p: i64 = 0;
    for row in 0..lcbo.m {
        let mut r = -lcbo.b(row);
        for j in 0..lcbo.n {
            if x.0[j] == 1 {
                r = cadd(r, lcbo.a(row, j), "constraint residual")?;
            }
        }
        p = cadd(p, cmul(r, r, "squared residual")?, "penalty sum")?;
    }
    Ok(p)
}

/// Unconstrained reformulation x^t Qp x + offset with upper-triangular Qp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qubo {
    n: usize,
    /// Row-major n x n, entries below the diagonal are zero.
    qp: Vec<i64>,
    pub offset: i64,
    pub scale: i64,
}

impl Qubo {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, i: usize, j: usize) -> i64 {
        self.qp[i * self.n + j]
    }

    pub fn matrix(&self) -> &[i64] {
        &self.qp
    }

    pub fn value(&self, x: &Assignment) -> Result<i64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "assignment length {} vs qubo n = {}",
                x.len(),
                self.n
            )));
        }
        let mut f = self.offset;
        for i in 0..self.n {
            if x.0[i] == 0 {
                continue;
            }
            for j in i..self.n {
                if x.0[j] == 1 {
                    f = cadd(f, self.coeff(i, j), "qubo evaluation")?;
                }
            }
        }
        Ok(f)
    }
}

/// Penalty reformulation: for every x the QUBO objective equals
/// `objective_value(x) + m_weight * penalty_value(x)`.
///
/// The expansion uses x_i^2 = x_i to fold linear penalty terms onto the
/// diagonal; the constant `m_weight * b^t b` lands in the offset.
pub fn qubo_from_lcbo(lcbo: &Lcbo, m_weight: i64) -> Result<Qubo> {
    if m_weight < 0 {
        return Err(Error::Precondition(format!("penalty weight must be >= 0, got {m_weight}")));
    }
    let n = lcbo.n;
    let mut qp = vec![0i64; n * n];
    // Fold the (possibly non-triangular) objective into upper-triangular form.
    for i in 0..n {
        for j in 0..n {
            let v = lcbo.q(i, j);
            if v == 0 {
                continue;
            }
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            qp[r * n + c] = cadd(qp[r * n + c], v, "objective fold")?;
        }
    }
    let mut offset: i64 = 0;
    for row in 0..lcbo.m {
        let b = lcbo.b(row);
        offset = cadd(offset, cmul(m_weight, cmul(b, b, "b^2")?, "M b^2")?, "offset")?;
        for i in 0..n {
            let ai = lcbo.a(row, i);
            if ai == 0 {
                continue;
            }
            // Diagonal: M (a_i^2 - 2 b a_i) x_i.
            let d = cadd(cmul(ai, ai, "a_i^2")?, cmul(-2, cmul(b, ai, "b a_i")?, "2 b a_i")?, "diag term")?;
            qp[i * n + i] = cadd(qp[i * n + i], cmul(m_weight, d, "M diag")?, "qubo diag")?;
            for j in (i + 1)..n {
                let aj = lcbo.a(row, j);
                if aj == 0 {
                    continue;
                }
                let cross = cmul(2, cmul(ai, aj, "a_i a_j")?, "2 a_i a_j")?;
                qp[i * n + j] = cadd(qp[i * n + j], cmul(m_weight, cross, "M cross")?, "qubo cross")?;
            }
        }
    }
    Ok(Qubo { n, qp, offset, scale: lcbo.scale })
}

/// Exhaustive enumeration result over all 2^n assignments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BruteForceReport {
    pub x_star: Assignment,
    pub f_star: i64,
    /// Feasible point whose objective is the smallest value strictly above `f_star`.
    pub x_star1: Option<Assignment>,
    pub f_star1: Option<i64>,
    pub feasible_count: u64,
    pub f_max_feasible: i64,
    pub f_min_unconstrained: i64,
    pub f_max_unconstrained: i64,
}

/// Visit every assignment in Gray-code order with incrementally maintained
/// objective and penalty values. The visitor receives (mask, f, penalty).
pub(crate) fn enumerate_energies(
    lcbo: &Lcbo,
    limit: usize,
    mut visit: impl FnMut(u64, i64, i64),
) -> Result<()> {
    let n = lcbo.n;
    if n > limit {
        return Err(Error::SizeLimit { n, limit });
    }
    if n == 0 {
        return Err(Error::InvalidInput("instance has no variables".into()));
    }
    let m = lcbo.m;
    // State at x = 0.
    let mut f: i64 = 0;
    let mut res: Vec<i64> = (0..m).map(|row| -lcbo.b(row)).collect();
    let mut pen: i64 = 0;
    for &r in &res {
        pen = cadd(pen, cmul(r, r, "residual square")?, "penalty")?;
    }
    visit(0, f, pen);
    let total: u64 = 1u64 << n;
    let mut mask: u64 = 0;
    for k in 1..total {
        let j = k.trailing_zeros() as usize;
        let newmask = k ^ (k >> 1);
        let setting = (newmask >> j) & 1 == 1;
        // Objective delta for flipping bit j: Q_jj + sum_{i != j} (Q_ij + Q_ji) x_i
        // with x taken over the other (unchanged) bits.
        let mut s = lcbo.q(j, j);
        for i in 0..n {
            if i != j && (mask >> i) & 1 == 1 {
                s = cadd(s, cadd(lcbo.q(i, j), lcbo.q(j, i), "sym pair")?, "flip delta")?;
            }
        }
        f = if setting { cadd(f, s, "objective")? } else { cadd(f, -s, "objective")? };
        for (row, r) in res.iter_mut().enumerate() {
            let a = lcbo.a(row, j);
            if a != 0 {
                let old = *r;
                *r = if setting { cadd(old, a, "residual")? } else { cadd(old, -a, "residual")? };
                pen = cadd(
                    pen,
                    cadd(cmul(*r, *r, "r^2")?, -cmul(old, old, "r^2")?, "pen delta")?,
                    "penalty",
                )?;
            }
        }
        mask = newmask;
        visit(mask, f, pen);
    }
    Ok(())
}

/// Enumerate all 2^n assignments and report the constrained optimum, the
/// next-to-optimal feasible value, and unconstrained extremes.
pub fn brute_force_solve(lcbo: &Lcbo, limit: usize) -> Result<BruteForceReport> {
    let mut best: Option<(i64, u64)> = None;
    let mut second: Option<(i64, u64)> = None;
    let mut feasible_count = 0u64;
    let mut f_max_feasible = i64::MIN;
    let mut f_min_unc = i64::MAX;
    let mut f_max_unc = i64::MIN;
    enumerate_energies(lcbo, limit, |mask, f, pen| {
        f_min_unc = f_min_unc.min(f);
        f_max_unc = f_max_unc.max(f);
        if pen == 0 {
            feasible_count += 1;
            f_max_feasible = f_max_feasible.max(f);
            match best {
                None => best = Some((f, mask)),
                Some((bf, bm)) => {
                    if f < bf {
                        second = Some((bf, bm));
                        best = Some((f, mask));
                    } else if f == bf {
                        best = Some((bf, bm.min(mask)));
                    } else {
                        match second {
                            None => second = Some((f, mask)),
                            Some((sf, sm)) => {
                                if f < sf {
                                    second = Some((f, mask));
                                } else if f == sf {
                                    second = Some((sf, sm.min(mask)));
                                }
                            }
                        }
                    }
                }
            }
        }
    })?;
    let (f_star, mask_star) = best.ok_or(Error::Infeasible)?;
    let (x_star1, f_star1) = match second {
        Some((f1, m1)) => (Some(Assignment::from_mask(lcbo.n, m1)), Some(f1)),
        None => (None, None),
    };
    Ok(BruteForceReport {
        x_star: Assignment::from_mask(lcbo.n, mask_star),
        f_star,
        x_star1,
        f_star1,
        feasible_count,
        f_max_feasible,
        f_min_unconstrained: f_min_unc,
        f_max_unconstrained: f_max_unc,
    })
}

// ---------------------------------------------------------------------------
// Canonical JSON form: Q as sorted row-major [i, j, value] triplets with
// i <= j (symmetric pairs folded), A as triplets, b as a plain array.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LcboJson {
    n: usize,
    m: usize,
    scale: i64,
    #[serde(rename = "Q")]
    q: Vec<(usize, usize, i64)>,
    #[serde(rename = "A")]
    a: Vec<(usize, usize, i64)>,
    b: Vec<i64>,
}

impl Serialize for Lcbo {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n;
        let mut q = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = if i == j { self.q(i, i) } else { self.q(i, j) + self.q(j, i) };
                if v != 0 {
                    q.push((i, j, v));
                }
            }
        }
        let mut a = Vec::new();
        for row in 0..self.m {
            for col in 0..n {
                let v = self.a(row, col);
                if v != 0 {
                    a.push((row, col, v));
                }
            }
        }
        LcboJson { n, m: self.m, scale: self.scale, q, a, b: self.b.clone() }.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Lcbo {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let raw = LcboJson::deserialize(de)?;
        let n = raw.n;
        let mut q = vec![0i64; n * n];
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &raw.q {
            if i > j || j >= n {
                return Err(D::Error::custom(format!("Q triplet ({i},{j}) out of range or not upper-triangular")));
            }
            if last.is_some() && last >= Some((i, j)) {
                return Err(D::Error::custom("Q triplets must be sorted row-major without duplicates"));
            }
            last = Some((i, j));
            q[i * n + j] = v;
        }
        let mut a = vec![0i64; raw.m * n];
        let mut last_a: Option<(usize, usize)> = None;
        for &(row, col, v) in &raw.a {
            if row >= raw.m || col >= n {
                return Err(D::Error::custom(format!("A triplet ({row},{col}) out of range")));
            }
            if last_a.is_some() && last_a >= Some((row, col)) {
                return Err(D::Error::custom("A triplets must be sorted row-major without duplicates"));
            }
            last_a = Some((row, col));
            a[row * n + col] = v;
        }
        Lcbo::new(n, raw.m, raw.scale, q, a, raw.b).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy() -> Lcbo {
        // Q = diag(-2, -1), constraint x1 + x2 = 1.
        Lcbo::new(2, 1, 1, vec![-2, 0, 0, -1], vec![1, 1], vec![1]).unwrap()
    }

    #[test]
    fn objective_examples() {
        let l = toy();
        assert_eq!(objective_value(&l, &Assignment(vec![0, 0])).unwrap(), 0);
        assert_eq!(objective_value(&l, &Assignment(vec![1, 1])).unwrap(), -3);
        let l2 = Lcbo::unconstrained(2, 1, vec![2, -1, 0, 3]).unwrap();
        assert_eq!(objective_value(&l2, &Assignment(vec![1, 1])).unwrap(), 4);
    }

    #[test]
    fn penalty_examples() {
        let l = toy();
        assert_eq!(penalty_value(&l, &Assignment(vec![1, 0])).unwrap(), 0);
        assert_eq!(penalty_value(&l, &Assignment(vec![1, 1])).unwrap(), 1);
        assert_eq!(penalty_value(&l, &Assignment(vec![0, 0])).unwrap(), 1);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let l = toy();
        assert!(objective_value(&l, &Assignment(vec![1])).is_err());
        assert!(penalty_value(&l, &Assignment(vec![1, 0, 1])).is_err());
    }

    #[test]
    fn qubo_matches_penalized_objective() {
        let l = toy();
        let q0 = qubo_from_lcbo(&l, 0).unwrap();
        assert_eq!(q0.offset, 0);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i <= j { l.q(i, j) + if i < j { l.q(j, i) } else { 0 } } else { 0 };
                assert_eq!(q0.coeff(i, j), expect);
            }
        }
        let q2 = qubo_from_lcbo(&l, 2).unwrap();
        assert_eq!(q2.value(&Assignment(vec![1, 1])).unwrap(), -1);
        assert_eq!(q2.value(&Assignment(vec![0, 0])).unwrap(), 2);
        // All four assignments, both routes.
        for mask in 0..4u64 {
            let x = Assignment::from_mask(2, mask);
            let direct = objective_value(&l, &x).unwrap() + 2 * penalty_value(&l, &x).unwrap();
            assert_eq!(q2.value(&x).unwrap(), direct);
        }
    }

    #[test]
    fn brute_force_examples() {
        let l = toy();
        let r = brute_force_solve(&l, BRUTE_FORCE_LIMIT).unwrap();
        assert_eq!(r.x_star, Assignment(vec![1, 0]));
        assert_eq!(r.f_star, -2);
        assert_eq!(r.x_star1, Some(Assignment(vec![0, 1])));
        assert_eq!(r.f_star1, Some(-1));
        assert_eq!(r.feasible_count, 2);
        assert_eq!(r.f_max_feasible, -1);
        assert_eq!(r.f_min_unconstrained, -3);
        assert_eq!(r.f_max_unconstrained, 0);
    }

    #[test]
    fn brute_force_degenerate_and_errors() {
        // Single feasible point: x = 1 with f = 0.
        let l = Lcbo::new(1, 1, 1, vec![0], vec![1], vec![1]).unwrap();
        let r = brute_force_solve(&l, BRUTE_FORCE_LIMIT).unwrap();
        assert_eq!(r.x_star, Assignment(vec![1]));
        assert_eq!(r.f_star, 0);
        assert!(r.x_star1.is_none());
        // Unreachable b: infeasible.
        let l = Lcbo::new(1, 1, 1, vec![0], vec![1], vec![5]).unwrap();
        assert!(matches!(brute_force_solve(&l, BRUTE_FORCE_LIMIT), Err(Error::Infeasible)));
        // n above limit.
        let l = toy();
        assert!(matches!(brute_force_solve(&l, 1), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn brute_force_agrees_with_reevaluation() {
        let l = toy();
        let r = brute_force_solve(&l, BRUTE_FORCE_LIMIT).unwrap();
        assert_eq!(objective_value(&l, &r.x_star).unwrap(), r.f_star);
        assert_eq!(penalty_value(&l, &r.x_star).unwrap(), 0);
        let x1 = r.x_star1.unwrap();
        assert_eq!(objective_value(&l, &x1).unwrap(), r.f_star1.unwrap());
    }

    #[test]
    fn json_round_trip_canonical() {
        let l = Lcbo::new(3, 1, 1, vec![1, 2, 0, 3, -4, 0, 0, 0, 5], vec![1, 0, -2], vec![2]).unwrap();
        let s = serde_json::to_string(&l).unwrap();
        let back: Lcbo = serde_json::from_str(&s).unwrap();
        // The objective and constraints are preserved exactly.
        for mask in 0..8u64 {
            let x = Assignment::from_mask(3, mask);
            assert_eq!(objective_value(&l, &x).unwrap(), objective_value(&back, &x).unwrap());
            assert_eq!(penalty_value(&l, &x).unwrap(), penalty_value(&back, &x).unwrap());
        }
        // Canonical: re-serialization is byte-identical.
        assert_eq!(s, serde_json::to_string(&back).unwrap());
    }

    #[test]
    fn json_rejects_unsorted_or_lower_triplets() {
        let bad = r#"{"n":2,"m":0,"scale":1,"Q":[[1,0,3]],"A":[],"b":[]}"#;
        assert!(serde_json::from_str::<Lcbo>(bad).is_err());
        let dup = r#"{"n":2,"m":0,"scale":1,"Q":[[0,1,3],[0,1,2]],"A":[],"b":[]}"#;
        assert!(serde_json::from_str::<Lcbo>(dup).is_err());
    }

    #[test]
    fn with_linear_folds_diagonal() {
        let l = Lcbo::with_linear(2, 0, 1, vec![0, 1, 0, 0], &[-3, 2], Vec::new(), Vec::new()).unwrap();
        assert_eq!(l.q(0, 0), -3);
        assert_eq!(l.q(1, 1), 2);
        assert_eq!(l.q(0, 1), 1);
    }
}
