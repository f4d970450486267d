//! q-arithmetic primitives and the support geometry.
//!
//! Everything here is a pure function of its arguments. Integer indices are
//! `u32` (degrees stay small), the q-binomial accepts signed arguments so that
//! out-of-range requests simply return zero.

use crate::error::{Error, Result};

/// The deformation parameter of the q-Normal family.
///
/// Distributional operations need `|q| < 1`; the limit formulas also accept
/// `q = 1`, which is what [`QParam::limit`] allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParam(f64);

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(QParam(q))
    }

    /// Accepts `-1 < q <= 1`.
    pub fn limit(q: f64) -> Result<Self> {
        if !(q > -1.0 && q <= 1.0) {
            return Err(Error::invalid("q", q, "must lie in (-1, 1]"));
        }
        Ok(QParam(q))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_limit(self) -> bool {
        self.0 == 1.0
    }

    pub fn support(self) -> Support {
        support(self.0).expect("validated q")
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("q", q, "must satisfy |q| < 1"))
    }
}

pub(crate) fn check_corr(name: &'static str, rho: f64) -> Result<()> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, rho, "must satisfy |rho| < 1"))
    }
}

/// Truncation controls for infinite products and series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationConfig {
    /// Hard cap on the number of factors or terms.
    pub max_terms: usize,
    /// Absolute bound on the neglected tail of a series.
    pub tail_tol: f64,
    /// A product stops at the first factor whose deviation from 1 is
    /// provably below this value.
    pub product_tol: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            max_terms: 200_000,
            tail_tol: 1e-15,
            product_tol: 1e-17,
        }
    }
}

impl TruncationConfig {
    pub fn new(max_terms: usize, tail_tol: f64, product_tol: f64) -> Result<Self> {
        if max_terms == 0 {
            return Err(Error::invalid("max_terms", 0.0, "must be at least 1"));
        }
        if !(tail_tol > 0.0) {
            return Err(Error::invalid("tail_tol", tail_tol, "must be positive"));
        }
        if !(product_tol > 0.0) {
            return Err(Error::invalid("product_tol", product_tol, "must be positive"));
        }
        Ok(TruncationConfig {
            max_terms,
            tail_tol,
            product_tol,
        })
    }
}

/// `[n]_q = 1 + q + ... + q^{n-1}`, with `[0]_q = 0`.
pub fn q_number(n: u32, q: f64) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for _ in 0..n {
        sum += power;
        power *= q;
    }
    sum
}

/// `[n]_q! = [1]_q [2]_q ... [n]_q`, with `[0]_q! = 1`.
pub fn q_factorial(n: u32, q: f64) -> f64 {
    (1..=n).map(|i| q_number(i, q)).product()
}

/// Gaussian binomial coefficient; zero when `k < 0` or `k > n`.
pub fn q_binomial(n: i64, k: i64, q: f64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    // Evaluate the smaller side so that (n, k) and (n, n-k) run the
    // identical sequence of operations.
    let k = k.min(n - k);
    let mut value = 1.0;
    for i in 1..=k {
        value *= q_number((n - k + i) as u32, q) / q_number(i as u32, q);
    }
    value
}

/// Finite q-Pochhammer symbol `(a; q)_j`, with `(a; q)_0 = 1`.
pub fn q_pochhammer(a: f64, q: f64, j: u32) -> f64 {
    let mut value = 1.0;
    let mut power = 1.0;
    for _ in 0..j {
        value *= 1.0 - a * power;
        power *= q;
    }
    value
}

/// A truncated infinite product together with its truncation metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductValue {
    pub value: f64,
    /// Number of factors multiplied in.
    pub terms: usize,
    /// Bound on the relative error of the omitted tail.
    pub tail_bound: f64,
}

/// Multiplies `factor(k)` for k = 0, 1, ... until the deviation bound of the
/// next factor drops under `product_tol`. Deviation bounds must shrink at
/// least geometrically with ratio `ratio`.
pub(crate) fn truncated_product<F>(
    what: &'static str,
    ratio: f64,
    cfg: &TruncationConfig,
    mut factor: F,
) -> Result<ProductValue>
where
    F: FnMut(usize) -> (f64, f64),
{
    let mut value = 1.0;
    for k in 0..cfg.max_terms {
        let (f, deviation) = factor(k);
        if deviation < cfg.product_tol {
            let tail = deviation / (1.0 - ratio.abs());
            return Ok(ProductValue {
                value,
                terms: k,
                tail_bound: tail.exp_m1(),
            });
        }
        value *= f;
    }
    Err(Error::NonConvergence {
        what,
        terms: cfg.max_terms,
    })
}

/// Like [`truncated_product`], but `ln_factor(k)` returns the logarithm of the
/// k-th factor and the logarithms are summed. Products that under- or
/// overflow a double (q close to 1) stay representable this way.
pub(crate) fn truncated_log_product<F>(
    what: &'static str,
    ratio: f64,
    cfg: &TruncationConfig,
    mut ln_factor: F,
) -> Result<ProductValue>
where
    F: FnMut(usize) -> (f64, f64),
{
    let mut ln_value = 0.0;
    for k in 0..cfg.max_terms {
        let (f, deviation) = ln_factor(k);
        if deviation < cfg.product_tol {
            return Ok(ProductValue {
                value: ln_value,
                terms: k,
                tail_bound: deviation / (1.0 - ratio.abs()),
            });
        }
        ln_value += f;
    }
    Err(Error::NonConvergence {
        what,
        terms: cfg.max_terms,
    })
}

/// `ln (a; q)_inf` for `|a| < 1`, where every factor is positive.
pub(crate) fn ln_q_pochhammer_inf(a: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    let mut power = a;
    truncated_log_product("q-Pochhammer product", q, cfg, |_| {
        let term = power;
        power *= q;
        ((-term).ln_1p(), term.abs())
    })
    .map(|p| p.value)
}

/// `(a; q)_inf`, truncated once the next factor is within `product_tol` of 1.
pub fn q_pochhammer_inf(a: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    q_pochhammer_inf_detailed(a, q, cfg).map(|p| p.value)
}

pub fn q_pochhammer_inf_detailed(a: f64, q: f64, cfg: &TruncationConfig) -> Result<ProductValue> {
    check_q(q)?;
    let mut power = a;
    truncated_product("q-Pochhammer product", q, cfg, |_| {
        let term = power;
        power *= q;
        (1.0 - term, term.abs())
    })
}

/// `sum_k ln(1 - |q|^k)` over k >= 1, i.e. `ln (|q|; |q|)_inf`.
pub(crate) fn ln_euler_abs(q: f64) -> f64 {
    let p = q.abs();
    let mut sum = 0.0;
    let mut power = p;
    while power > 1e-18 {
        sum += (-power).ln_1p();
        power *= p;
    }
    sum
}

/// Natural log of a bound on `sum_{j > J} c |rho|^j (j+1)^degree`, given `ln c`.
/// Returns `+inf` while the terms are still growing.
pub(crate) fn ln_poly_geometric_tail(ln_c: f64, rho: f64, degree: i32, j: usize) -> f64 {
    let rho = rho.abs();
    if rho == 0.0 {
        return f64::NEG_INFINITY;
    }
    let j = j as f64;
    let kappa = rho * ((j + 3.0) / (j + 2.0)).powi(degree);
    if kappa >= 1.0 {
        return f64::INFINITY;
    }
    ln_c + (j + 1.0) * rho.ln() + f64::from(degree) * (j + 2.0).ln() - (-kappa).ln_1p()
}

/// The support S(q) of every density in the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    /// `[-bound, bound]` with `bound = 2 / sqrt(1 - q)`.
    Interval { bound: f64 },
    /// The whole real line, reached at q = 1.
    RealLine,
}

impl Support {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Support::Interval { bound } => x.abs() <= bound,
            Support::RealLine => x.is_finite(),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Support::Interval { bound } => (-bound, bound),
            Support::RealLine => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// S(q) for `-1 < q <= 1`.
pub fn support(q: f64) -> Result<Support> {
    QParam::limit(q)?;
    if q == 1.0 {
        Ok(Support::RealLine)
    } else {
        Ok(Support::Interval { bound: half_width(q) })
    }
}

/// `2 / sqrt(1 - q)`, the right end point of S(q).
pub fn half_width(q: f64) -> f64 {
    2.0 / (1.0 - q).sqrt()
}

/// `sqrt(4 - (1 - q) x^2)`, clamped at zero on and beyond the end points.
pub(crate) fn edge_root(x: f64, q: f64) -> f64 {
    (4.0 - (1.0 - q) * x * x).max(0.0).sqrt()
}
