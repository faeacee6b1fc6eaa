//! Reduction of a quadratically constrained quadratic integer program to an
//! LCBO in four steps: slack variables for inequalities, binary expansion of
//! the integer variables, linearization of quadratic constraint terms, and
//! absorption of the linear objective into the diagonal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cadd, cmul, Assignment, Lcbo};

/// One quadratic constraint `y^t q y + l^t y (= or >=) rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadConstraint {
    /// Row-major n x n quadratic coefficients.
    pub q: Vec<i64>,
    pub l: Vec<i64>,
    pub rhs: i64,
}

impl QuadConstraint {
    pub fn linear(l: Vec<i64>, rhs: i64) -> Self {
        let n = l.len();
        QuadConstraint { q: vec![0; n * n], l, rhs }
    }

    pub fn is_linear(&self) -> bool {
        self.q.iter().all(|&v| v == 0)
    }

    fn eval(&self, y: &[i64]) -> Result<i64> {
        let n = y.len();
        let mut v: i64 = 0;
        for i in 0..n {
            for j in 0..n {
                if self.q[i * n + j] != 0 {
                    let t = cmul(self.q[i * n + j], cmul(y[i], y[j], "y_i y_j")?, "q y y")?;
                    v = cadd(v, t, "constraint eval")?;
                }
            }
            v = cadd(v, cmul(self.l[i], y[i], "l y")?, "constraint eval")?;
        }
        Ok(v)
    }
}

/// Quadratically constrained quadratic program over bounded non-negative
/// integers: minimize y^t Q y + L^t y subject to equality and `lhs >= rhs`
/// inequality constraints, 0 <= y_i <= U_i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyIntProgram {
    pub n_vars: usize,
    /// Row-major n x n objective quadratic part.
    pub q: Vec<i64>,
    pub linear: Vec<i64>,
    pub equalities: Vec<QuadConstraint>,
    pub inequalities: Vec<QuadConstraint>,
    pub upper_bounds: Vec<i64>,
    pub scale: i64,
}

impl PolyIntProgram {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        if self.q.len() != n * n || self.linear.len() != n || self.upper_bounds.len() != n {
            return Err(Error::DimensionMismatch("objective/bounds dimensions inconsistent".into()));
        }
        if self.upper_bounds.iter().any(|&u| u < 0) {
            return Err(Error::InvalidInput("upper bounds must be non-negative".into()));
        }
        for c in self.equalities.iter().chain(&self.inequalities) {
            if c.q.len() != n * n || c.l.len() != n {
                return Err(Error::DimensionMismatch("constraint dimensions inconsistent".into()));
            }
        }
        if self.scale < 1 {
            return Err(Error::InvalidInput("scale must be >= 1".into()));
        }
        Ok(())
    }

    pub fn objective(&self, y: &[i64]) -> Result<i64> {
        let n = self.n_vars;
        let mut v: i64 = 0;
        for i in 0..n {
            for j in 0..n {
                if self.q[i * n + j] != 0 {
                    v = cadd(v, cmul(self.q[i * n + j], cmul(y[i], y[j], "y y")?, "Q y y")?, "objective")?;
                }
            }
            v = cadd(v, cmul(self.linear[i], y[i], "L y")?, "objective")?;
        }
        Ok(v)
    }

    fn is_feasible(&self, y: &[i64]) -> Result<bool> {
        for c in &self.equalities {
            if c.eval(y)? != c.rhs {
                return Ok(false);
            }
        }
        for c in &self.inequalities {
            if c.eval(y)? < c.rhs {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Sum of absolute objective coefficients.
    fn objective_l1(&self) -> Result<i64> {
        let mut s: i64 = 0;
        for &v in self.q.iter().chain(&self.linear) {
            s = cadd(s, v.abs(), "objective l1")?;
        }
        Ok(s)
    }
}

/// Tracks how gadget variables relate to the original program.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VariableMap {
    /// Per original integer variable: (binary index, coefficient) pairs.
    pub integer_vars: Vec<Vec<(usize, i64)>>,
    /// Per linearization variable: (binary index of w, i, j) with w = x_i x_j.
    pub linearizations: Vec<(usize, usize, usize)>,
    /// Per slack: (inequality index it absorbed, upper bound).
    pub slacks: Vec<(usize, i64)>,
}

impl VariableMap {
    /// Decode the original integer values from a binary assignment.
    pub fn decode(&self, x: &Assignment) -> Result<Vec<i64>> {
        let mut out = Vec::with_capacity(self.integer_vars.len());
        for bits in &self.integer_vars {
            let mut v: i64 = 0;
            for &(idx, coeff) in bits {
                if idx >= x.len() {
                    return Err(Error::DimensionMismatch("assignment shorter than variable map".into()));
                }
                if x.0[idx] == 1 {
                    v += coeff;
                }
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Valid upper bound on `y^t q y + l^t y - rhs` over the box `0 <= y_i <= U_i`
/// by interval arithmetic: each monomial contributes its box maximum when its
/// coefficient is positive and zero otherwise. May exceed the exact maximum.
pub fn slack_upper_bound(q: &[i64], l: &[i64], rhs: i64, bounds: &[i64]) -> Result<i64> {
    let n = bounds.len();
    let mut u: i64 = -rhs;
    for i in 0..n {
        for j in 0..n {
            let c = q[i * n + j];
            if c > 0 {
                u = cadd(u, cmul(c, cmul(bounds[i], bounds[j], "U U")?, "q U U")?, "slack bound")?;
            }
        }
        if l[i] > 0 {
            u = cadd(u, cmul(l[i], bounds[i], "l U")?, "slack bound")?;
        }
    }
    Ok(u)
}

/// Step 1: replace each inequality `lhs >= rhs` by `lhs - z = rhs` with a
/// fresh integer slack `0 <= z <= u` bounded via [`slack_upper_bound`].
pub fn inequalities_to_equalities(pip: &PolyIntProgram) -> Result<(PolyIntProgram, Vec<(usize, i64)>)> {
    pip.validate()?;
    let n = pip.n_vars;
    let extra = pip.inequalities.len();
    let nn = n + extra;
    let grow_matrix = |q: &[i64]| {
        let mut out = vec![0i64; nn * nn];
        for i in 0..n {
            out[i * nn..i * nn + n].copy_from_slice(&q[i * n..(i + 1) * n]);
        }
        out
    };
    let grow_vec = |l: &[i64]| {
        let mut out = vec![0i64; nn];
        out[..n].copy_from_slice(l);
        out
    };
    let mut upper_bounds = grow_vec(&pip.upper_bounds);
    let mut equalities: Vec<QuadConstraint> = pip
        .equalities
        .iter()
        .map(|c| QuadConstraint { q: grow_matrix(&c.q), l: grow_vec(&c.l), rhs: c.rhs })
        .collect();
    let mut slacks = Vec::with_capacity(extra);
    for (idx, c) in pip.inequalities.iter().enumerate() {
        let u = slack_upper_bound(&c.q, &c.l, c.rhs, &pip.upper_bounds)?;
        if u < 0 {
            return Err(Error::Infeasible);
        }
        let slack_var = n + idx;
        upper_bounds[slack_var] = u;
        let mut l = grow_vec(&c.l);
        l[slack_var] = -1;
        equalities.push(QuadConstraint { q: grow_matrix(&c.q), l, rhs: c.rhs });
        slacks.push((idx, u));
    }
    let out = PolyIntProgram {
        n_vars: nn,
        q: grow_matrix(&pip.q),
        linear: grow_vec(&pip.linear),
        equalities,
        inequalities: Vec::new(),
        upper_bounds,
        scale: pip.scale,
    };
    Ok((out, slacks))
}

/// Expansion coefficients representing exactly {0, ..., u}.
///
/// Bounded encoding: `[1, 2, ..., 2^{K-2}, u - (2^{K-1} - 1)]` with
/// `K = ceil(log2(u + 1))`. The pure-powers variant keeps the
/// power-of-two coefficients, whose range can overshoot `u`.
pub fn expansion_coefficients(u: i64, pure_powers: bool) -> Vec<i64> {
    if u <= 0 {
        return Vec::new();
    }
    let k = 64 - (u as u64).leading_zeros() as usize; // ceil(log2(u + 1))
    let mut coeffs: Vec<i64> = (0..k - 1).map(|b| 1i64 << b).collect();
    if pure_powers {
        coeffs.push(1i64 << (k - 1));
    } else {
        coeffs.push(u - ((1i64 << (k - 1)) - 1));
    }
    coeffs
}

/// Step 2: replace each bounded integer variable by binary variables.
/// Variables with `U = 0` are eliminated (fixed to zero).
pub fn binary_expand(pip: &PolyIntProgram, pure_powers: bool) -> Result<(PolyIntProgram, VariableMap)> {
    pip.validate()?;
    if !pip.inequalities.is_empty() {
        return Err(Error::Precondition("inequalities must be removed before binary expansion".into()));
    }
    let n = pip.n_vars;
    let mut map = VariableMap::default();
    let mut next = 0usize;
    for i in 0..n {
        let coeffs = expansion_coefficients(pip.upper_bounds[i], pure_powers);
        let bits: Vec<(usize, i64)> = coeffs
            .iter()
            .map(|&c| {
                let idx = next;
                next += 1;
                (idx, c)
            })
            .collect();
        map.integer_vars.push(bits);
    }
    let nb = next;
    let expand_quadratic = |q: &[i64], l: &[i64]| -> Result<(Vec<i64>, Vec<i64>)> {
        let mut qq = vec![0i64; nb * nb];
        let mut ll = vec![0i64; nb];
        for i in 0..n {
            for &(a, ca) in &map.integer_vars[i] {
                ll[a] = cadd(ll[a], cmul(l[i], ca, "l alpha")?, "expanded linear")?;
                for j in 0..n {
                    let c = q[i * n + j];
                    if c == 0 {
                        continue;
                    }
                    for &(b, cb) in &map.integer_vars[j] {
                        let coeff = cmul(c, cmul(ca, cb, "alpha alpha")?, "q alpha alpha")?;
                        if a == b {
                            // x_a^2 = x_a.
                            ll[a] = cadd(ll[a], coeff, "expanded linear")?;
                        } else {
                            qq[a * nb + b] = cadd(qq[a * nb + b], coeff, "expanded quad")?;
                        }
                    }
                }
            }
        }
        Ok((qq, ll))
    };
    let (q, linear) = expand_quadratic(&pip.q, &pip.linear)?;
    let mut equalities = Vec::with_capacity(pip.equalities.len());
    for c in &pip.equalities {
        let (qq, ll) = expand_quadratic(&c.q, &c.l)?;
        equalities.push(QuadConstraint { q: qq, l: ll, rhs: c.rhs });
    }
    let out = PolyIntProgram {
        n_vars: nb,
        q,
        linear,
        equalities,
        inequalities: Vec::new(),
        upper_bounds: vec![1; nb],
        scale: pip.scale,
    };
    Ok((out, map))
}

/// Step 3: replace each product x_i x_j appearing in a constraint by a fresh
/// binary w_ij and add `p (3 w + x_i x_j - 2 x_i w - 2 x_j w)` to the
/// objective. The term vanishes exactly when w = x_i x_j and adds at least `p`
/// otherwise.
pub fn linearize_quadratic_constraints(
    pip: &PolyIntProgram,
    p: i64,
) -> Result<(PolyIntProgram, Vec<(usize, usize, usize)>)> {
    pip.validate()?;
    if p <= 0 {
        return Err(Error::Precondition(format!("linearization penalty must be > 0, got {p}")));
    }
    if pip.upper_bounds.iter().any(|&u| u != 1) {
        return Err(Error::Precondition("linearization requires binary variables".into()));
    }
    let n = pip.n_vars;
    // Collect the distinct products used across all constraints.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for c in &pip.equalities {
        for i in 0..n {
            for j in 0..n {
                if i != j && c.q[i * n + j] != 0 {
                    let pair = (i.min(j), i.max(j));
                    if !pairs.contains(&pair) {
                        pairs.push(pair);
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    let nn = n + pairs.len();
    let w_index = |k: usize| n + k;
    let mut q = vec![0i64; nn * nn];
    for i in 0..n {
        q[i * nn..i * nn + n].copy_from_slice(&pip.q[i * n..(i + 1) * n]);
    }
    let mut linear = vec![0i64; nn];
    linear[..n].copy_from_slice(&pip.linear);
    let mut links = Vec::with_capacity(pairs.len());
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let w = w_index(k);
        links.push((w, i, j));
        // p (3 w + x_i x_j - 2 x_i w - 2 x_j w)
        linear[w] = cadd(linear[w], cmul(3, p, "3p")?, "penalty linear")?;
        q[i * nn + j] = cadd(q[i * nn + j], p, "penalty quad")?;
        q[i * nn + w] = cadd(q[i * nn + w], cmul(-2, p, "2p")?, "penalty quad")?;
        q[j * nn + w] = cadd(q[j * nn + w], cmul(-2, p, "2p")?, "penalty quad")?;
    }
    let mut equalities = Vec::with_capacity(pip.equalities.len());
    for c in &pip.equalities {
        let mut l = vec![0i64; nn];
        l[..n].copy_from_slice(&c.l);
        for i in 0..n {
            // Diagonal products are linear on binaries.
            l[i] = cadd(l[i], c.q[i * n + i], "diag to linear")?;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            let coeff = cadd(c.q[i * n + j], c.q[j * n + i], "pair coeff")?;
            if coeff != 0 {
                l[w_index(k)] = cadd(l[w_index(k)], coeff, "w coeff")?;
            }
        }
        equalities.push(QuadConstraint::linear(l, c.rhs));
    }
    let out = PolyIntProgram {
        n_vars: nn,
        q,
        linear,
        equalities,
        inequalities: Vec::new(),
        upper_bounds: vec![1; nn],
        scale: pip.scale,
    };
    Ok((out, links))
}

/// Full four-step reduction to an LCBO. The linearization penalty `p` is the
/// sum of absolute objective coefficients after binary expansion plus `delta`.
pub fn gadgetize(pip: &PolyIntProgram, delta: i64, pure_powers: bool) -> Result<(Lcbo, VariableMap)> {
    if delta <= 0 {
        return Err(Error::Precondition(format!("delta must be > 0, got {delta}")));
    }
    let (no_ineq, slacks) = inequalities_to_equalities(pip)?;
    let (binary, mut map) = binary_expand(&no_ineq, pure_powers)?;
    map.slacks = slacks;
    let needs_linearization = binary.equalities.iter().any(|c| !c.is_linear());
    let linearized = if needs_linearization {
        let p = cadd(binary.objective_l1()?, delta, "linearization penalty")?;
        let (lin, links) = linearize_quadratic_constraints(&binary, p)?;
        map.linearizations = links;
        lin
    } else {
        binary
    };
    // Step 4: fold the linear objective onto the diagonal.
    let n = linearized.n_vars;
    let m = linearized.equalities.len();
    let mut a = vec![0i64; m * n];
    let mut b = vec![0i64; m];
    for (row, c) in linearized.equalities.iter().enumerate() {
        a[row * n..(row + 1) * n].copy_from_slice(&c.l);
        b[row] = c.rhs;
    }
    let lcbo = Lcbo::with_linear(n, m, linearized.scale, linearized.q, &linearized.linear, a, b)?;
    Ok((lcbo, map))
}

/// Independent oracle: enumerate the integer box directly and return the
/// optimal value together with one optimal point, or `None` if infeasible.
pub fn brute_force_pip(pip: &PolyIntProgram) -> Result<Option<(Vec<i64>, i64)>> {
    pip.validate()?;
    let n = pip.n_vars;
    let mut y = vec![0i64; n];
    let mut best: Option<(Vec<i64>, i64)> = None;
    loop {
        if pip.is_feasible(&y)? {
            let v = pip.objective(&y)?;
            if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
                best = Some((y.clone(), v));
            }
        }
        // Odometer increment over the box.
        let mut i = 0;
        loop {
            if i == n {
                return Ok(best);
            }
            if y[i] < pip.upper_bounds[i] {
                y[i] += 1;
                break;
            }
            y[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// JSON mirror of the LCBO format with `inequalities` and `upperBounds`.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ConstraintJson {
    #[serde(rename = "Q")]
    q: Vec<(usize, usize, i64)>,
    #[serde(rename = "L")]
    l: Vec<i64>,
    b: i64,
}

#[derive(Serialize, Deserialize)]
struct PipJson {
    n: usize,
    scale: i64,
    #[serde(rename = "Q")]
    q: Vec<(usize, usize, i64)>,
    #[serde(rename = "L")]
    l: Vec<i64>,
    equalities: Vec<ConstraintJson>,
    inequalities: Vec<ConstraintJson>,
    #[serde(rename = "upperBounds")]
    upper_bounds: Vec<i64>,
}

fn matrix_to_triplets(n: usize, q: &[i64]) -> Vec<(usize, usize, i64)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v = if i == j { q[i * n + i] } else { q[i * n + j] + q[j * n + i] };
            if v != 0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

fn triplets_to_matrix(n: usize, t: &[(usize, usize, i64)]) -> Result<Vec<i64>> {
    let mut q = vec![0i64; n * n];
    let mut last: Option<(usize, usize)> = None;
    for &(i, j, v) in t {
        if i > j || j >= n {
            return Err(Error::InvalidInput(format!("triplet ({i},{j}) out of range or not upper-triangular")));
        }
        if last.is_some() && last >= Some((i, j)) {
            return Err(Error::InvalidInput("triplets must be sorted row-major without duplicates".into()));
        }
        last = Some((i, j));
        q[i * n + j] = v;
    }
    Ok(q)
}

impl Serialize for PolyIntProgram {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n_vars;
        let conv = |c: &QuadConstraint| ConstraintJson { q: matrix_to_triplets(n, &c.q), l: c.l.clone(), b: c.rhs };
        PipJson {
            n,
            scale: self.scale,
            q: matrix_to_triplets(n, &self.q),
            l: self.linear.clone(),
            equalities: self.equalities.iter().map(conv).collect(),
            inequalities: self.inequalities.iter().map(conv).collect(),
            upper_bounds: self.upper_bounds.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for PolyIntProgram {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let raw = PipJson::deserialize(de)?;
        let n = raw.n;
        let conv = |c: &ConstraintJson| -> Result<QuadConstraint> {
            Ok(QuadConstraint { q: triplets_to_matrix(n, &c.q)?, l: c.l.clone(), rhs: c.b })
        };
        let pip = PolyIntProgram {
            n_vars: n,
            q: triplets_to_matrix(n, &raw.q).map_err(D::Error::custom)?,
            linear: raw.l,
            equalities: raw.equalities.iter().map(conv).collect::<Result<_>>().map_err(D::Error::custom)?,
            inequalities: raw.inequalities.iter().map(conv).collect::<Result<_>>().map_err(D::Error::custom)?,
            upper_bounds: raw.upper_bounds,
            scale: raw.scale,
        };
        pip.validate().map_err(D::Error::custom)?;
        Ok(pip)
    }
}
