//! Orthogonal polynomial families evaluated by forward three-term recurrence,
//! and the coefficient formulas built from them.
//!
//! | family | recurrence | orthogonality weight |
//! |---|---|---|
//! | q-Hermite `H_n(x\|q)` | `H_{n+1} = x H_n - [n]_q H_{n-1}` | `f_N(x\|q)` |
//! | Al-Salam–Chihara `P_n(x\|y,ρ,q)` | `P_{n+1} = (x - ρ y q^n) P_n - (1 - ρ² q^{n-1}) [n]_q P_{n-1}` | `f_CN(x\|y,ρ,q)` |
//! | Rogers `C_n(x\|β,q)` | `(1 - q^{n+1}) C_{n+1} = 2x(1 - β q^n) C_n - (1 - β² q^{n-1}) C_{n-1}` | |
//! | monic Rogers `R_n(x\|β,q)` | `R_{n+1} = x R_n - [n]_q (1-β²q^{n-1})/((1-βq^{n-1})(1-βq^n)) R_{n-1}` | `f_R(x\|β,q)` |
//! | Chebyshev `U_n` | `U_{n+1} = 2x U_n - U_{n-1}` | semicircle |
//! | Hermite `H_n(x)` | `H_{n+1} = x H_n - n H_{n-1}` | standard normal |
//!
//! Every sequence starts from `p_{-1} = 0`, `p_0 = 1`.

use crate::error::{Error, Result};
use crate::qcore::{q_binomial, q_factorial, q_number, q_pochhammer};

/// A polynomial family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    QHermite { q: f64 },
    AlSalamChihara { y: f64, rho: f64, q: f64 },
    RogersC { beta: f64, q: f64 },
    RogersMonic { beta: f64, q: f64 },
    ChebyshevU,
    HermiteProb,
}

impl Family {
    /// Values `p_0(x), ..., p_n(x)`.
    pub fn evaluate(&self, n: u32, x: f64) -> Result<PolySequence> {
        match *self {
            Family::QHermite { q } => Ok(q_hermite(n, x, q)),
            Family::AlSalamChihara { y, rho, q } => Ok(asc_poly(n, x, y, rho, q)),
            Family::RogersC { beta, q } => rogers_c(n, x, beta, q),
            Family::RogersMonic { beta, q } => Ok(rogers_monic(n, x, beta, q)),
            Family::ChebyshevU => Ok(chebyshev_u(n, x)),
            Family::HermiteProb => Ok(hermite_prob(n, x)),
        }
    }

    /// `∫ p_n² w` for the family's orthogonality weight, where one exists.
    pub fn squared_norm(&self, n: u32) -> Option<f64> {
        match *self {
            Family::QHermite { q } => Some(q_hermite_norm(n, q)),
            Family::AlSalamChihara { rho, q, .. } => Some(asc_norm(n, rho, q)),
            Family::RogersMonic { beta, q } => Some(rogers_monic_norm(n, beta, q)),
            Family::ChebyshevU => Some(1.0),
            Family::HermiteProb => Some((1..=n).map(f64::from).product()),
            Family::RogersC { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::QHermite { .. } => "q-Hermite",
            Family::AlSalamChihara { .. } => "Al-Salam-Chihara",
            Family::RogersC { .. } => "Rogers",
            Family::RogersMonic { .. } => "monic Rogers",
            Family::ChebyshevU => "Chebyshev U",
            Family::HermiteProb => "Hermite",
        }
    }
}

/// Values of one family at a single point, indexed by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySequence {
    pub family: Family,
    pub x: f64,
    values: Vec<f64>,
}

impl PolySequence {
    fn from_recurrence<F>(family: Family, x: f64, n: u32, mut step: F) -> Self
    where
        F: FnMut(u32, f64, f64) -> f64,
    {
        let mut values = Vec::with_capacity(n as usize + 1);
        values.push(1.0);
        let (mut prev, mut cur) = (0.0, 1.0);
        for k in 0..n {
            let next = step(k, cur, prev);
            values.push(next);
            prev = cur;
            cur = next;
        }
        PolySequence { family, x, values }
    }

    /// The highest degree held.
    pub fn degree(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn get(&self, k: u32) -> Option<f64> {
        self.values.get(k as usize).copied()
    }

    /// Value of the highest-degree polynomial.
    pub fn last(&self) -> f64 {
        *self.values.last().expect("sequence holds at least p_0")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Index<usize> for PolySequence {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

/// Continuous q-Hermite polynomials `H_0(x|q) .. H_n(x|q)`. Any real q is
/// accepted; q = 1 gives the probabilists' Hermite polynomials.
pub fn q_hermite(n: u32, x: f64, q: f64) -> PolySequence {
    PolySequence::from_recurrence(Family::QHermite { q }, x, n, |k, cur, prev| {
        x * cur - q_number(k, q) * prev
    })
}

/// Al-Salam–Chihara polynomials `P_k(x|y,ρ,q)`.
pub fn asc_poly(n: u32, x: f64, y: f64, rho: f64, q: f64) -> PolySequence {
    let family = Family::AlSalamChihara { y, rho, q };
    PolySequence::from_recurrence(family, x, n, |k, cur, prev| {
        let drift = (x - rho * y * q.powi(k as i32)) * cur;
        if k == 0 {
            drift
        } else {
            drift - (1.0 - rho * rho * q.powi(k as i32 - 1)) * q_number(k, q) * prev
        }
    })
}

/// Rogers (continuous q-ultraspherical) polynomials `C_k(x|β,q)`.
pub fn rogers_c(n: u32, x: f64, beta: f64, q: f64) -> Result<PolySequence> {
    if !(beta.abs() < 1.0) {
        return Err(Error::invalid("beta", beta, "must satisfy |beta| < 1"));
    }
    let mut degenerate = None;
    let seq = PolySequence::from_recurrence(Family::RogersC { beta, q }, x, n, |k, cur, prev| {
        let lead = 1.0 - q.powi(k as i32 + 1);
        if lead == 0.0 {
            degenerate.get_or_insert(k as usize);
            return f64::NAN;
        }
        let mut rhs = 2.0 * x * (1.0 - beta * q.powi(k as i32)) * cur;
        if k > 0 {
            rhs -= (1.0 - beta * beta * q.powi(k as i32 - 1)) * prev;
        }
        rhs / lead
    });
    match degenerate {
        Some(index) => Err(Error::DegenerateRecurrence { index }),
        None => Ok(seq),
    }
}

/// Monic Rogers polynomials `R_k(y|β,q)`; with β = r these are the
/// polynomials orthogonal under the one-dimensional marginal. q = 1 is
/// accepted and gives the Hermite-type limit family.
pub fn rogers_monic(n: u32, y: f64, beta: f64, q: f64) -> PolySequence {
    PolySequence::from_recurrence(Family::RogersMonic { beta, q }, y, n, |k, cur, prev| {
        if k == 0 {
            return y * cur;
        }
        let lower = q.powi(k as i32 - 1);
        let coeff =
            q_number(k, q) * (1.0 - beta * beta * lower) / ((1.0 - beta * lower) * (1.0 - beta * q.powi(k as i32)));
        y * cur - coeff * prev
    })
}

/// Chebyshev polynomials of the second kind.
pub fn chebyshev_u(n: u32, x: f64) -> PolySequence {
    PolySequence::from_recurrence(Family::ChebyshevU, x, n, |_, cur, prev| 2.0 * x * cur - prev)
}

/// Probabilists' Hermite polynomials.
pub fn hermite_prob(n: u32, x: f64) -> PolySequence {
    PolySequence::from_recurrence(Family::HermiteProb, x, n, |k, cur, prev| x * cur - f64::from(k) * prev)
}

/// `∫ H_n² f_N = [n]_q!`
pub fn q_hermite_norm(n: u32, q: f64) -> f64 {
    q_factorial(n, q)
}

/// `∫ P_n² f_CN = (ρ²)_n [n]_q!`
pub fn asc_norm(n: u32, rho: f64, q: f64) -> f64 {
    q_pochhammer(rho * rho, q, n) * q_factorial(n, q)
}

/// `∫ R_n² f_R = [n]_q! (1-r)(r²)_n / ((r)_n (r)_{n+1})`
pub fn rogers_monic_norm(n: u32, r: f64, q: f64) -> f64 {
    q_factorial(n, q) * (1.0 - r) * q_pochhammer(r * r, q, n) / (q_pochhammer(r, q, n) * q_pochhammer(r, q, n + 1))
}

/// `∫ H_k H_m H_n f_N` in closed form.
pub fn triple_product_integral(k: u32, m: u32, n: u32, q: f64) -> f64 {
    // Sorting makes the result exactly symmetric in its arguments.
    let mut idx = [i64::from(k), i64::from(m), i64::from(n)];
    idx.sort_unstable();
    let [k, m, n] = idx;
    if (k + m + n) % 2 != 0 || k + m < n || k + n < m || m + n < k {
        return 0.0;
    }
    let a = ((m + n - k) / 2) as u32;
    let b = ((m + k - n) / 2) as u32;
    let c = ((n + k - m) / 2) as u32;
    q_factorial(m as u32, q) * q_factorial(n as u32, q) * q_factorial(k as u32, q)
        / (q_factorial(a, q) * q_factorial(b, q) * q_factorial(c, q))
}

/// Coefficients `c_0..c_j` with `H_j² = Σ_k c_k H_{2k}`.
pub fn h_squared_linearization(j: u32, q: f64) -> Vec<f64> {
    let jf = q_factorial(j, q);
    (0..=j)
        .map(|k| {
            let kf = q_factorial(k, q);
            jf * jf / (kf * kf * q_factorial(j - k, q))
        })
        .collect()
}

/// The polynomial `W_{k,m}(x|r,q)` with
/// `Σ_i r^i/[i]_q! H_{i+k} H_{i+m} = W_{k,m} Σ_i r^i/[i]_q! H_i²`:
///
/// `W_{k,m} = Σ_{s=0}^{k} [k s]_q q^{s(s-1)/2} (-r)^s (r)_{m+s}/(r²)_{m+s} H_{k-s}(x|q) R_{m+s}(x|r,q)`.
///
/// The result is symmetric in `(k, m)`.
pub fn w_poly(k: u32, m: u32, x: f64, r: f64, q: f64) -> f64 {
    let hermite = q_hermite(k, x, q);
    let rogers = rogers_monic(m + k, x, r, q);
    (0..=k)
        .map(|s| {
            let coeff = q_binomial(i64::from(k), i64::from(s), q)
                * q.powi((s * s.saturating_sub(1) / 2) as i32)
                * (-r).powi(s as i32)
                * q_pochhammer(r, q, m + s)
                / q_pochhammer(r * r, q, m + s);
            coeff * hermite[(k - s) as usize] * rogers[(m + s) as usize]
        })
        .sum()
}

/// Orthonormal q-Hermite values `H_n(x|q)/sqrt([n]_q!)`, generated lazily.
/// Stays O(1) on S(q), which keeps long series free of overflow.
#[derive(Debug, Clone)]
pub(crate) struct OrthonormalHermite {
    x: f64,
    q: f64,
    n: u32,
    prev: f64,
    cur: f64,
    sqrt_qn: f64,
}

impl OrthonormalHermite {
    pub(crate) fn new(x: f64, q: f64) -> Self {
        OrthonormalHermite {
            x,
            q,
            n: 0,
            prev: 0.0,
            cur: 1.0,
            sqrt_qn: 0.0,
        }
    }
}

impl Iterator for OrthonormalHermite {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur;
        let sqrt_next = q_number(self.n + 1, self.q).sqrt();
        let next = (self.x * self.cur - self.sqrt_qn * self.prev) / sqrt_next;
        self.prev = self.cur;
        self.cur = next;
        self.sqrt_qn = sqrt_next;
        self.n += 1;
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: [f64; 6] = [-1.7, -0.6, 0.0, 0.3, 1.1, 2.4];

    #[test]
    fn q_hermite_examples() {
        for &q in &[-0.5, 0.0, 0.5, 0.9] {
            for &x in &GRID {
                assert!((q_hermite(2, x, q)[2] - (x * x - 1.0)).abs() < 1e-14);
            }
        }
        // H_3 = x^3 - (2 + q) x
        let direct = 1.0 - (2.0 + 0.5);
        assert!((q_hermite(3, 1.0, 0.5)[3] - direct).abs() < 1e-15);
        assert_eq!(q_hermite(3, 1.0, 0.5)[3], -1.5);
        for &x in &GRID {
            let a = q_hermite(8, x, 1.0);
            let b = hermite_prob(8, x);
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn sequence_shape() {
        let s = q_hermite(5, 0.4, 0.3);
        assert_eq!(s.degree(), 5);
        assert_eq!(s.values().len(), 6);
        assert_eq!(s[0], 1.0);
        assert_eq!(s.get(6), None);
        let s0 = asc_poly(0, 0.4, 0.1, 0.2, 0.3);
        assert_eq!(s0.values(), &[1.0]);
    }

    #[test]
    fn asc_examples() {
        for &x in &GRID {
            assert!((asc_poly(1, x, 0.7, 0.4, 0.3)[1] - (x - 0.4 * 0.7)).abs() < 1e-15);
            let a = asc_poly(9, x, 0.7, 0.0, 0.3);
            let h = q_hermite(9, x, 0.3);
            assert_eq!(a.values(), h.values());
        }
        // P_1 = x - ρy, P_2 = (x - ρyq) P_1 - (1 - ρ²)[1]_q P_0
        let (x, y, rho, q) = (1.0, 1.0, 0.5, 0.5);
        let p1 = x - rho * y;
        let p2 = (x - rho * y * q) * p1 - (1.0 - rho * rho) * 1.0;
        assert!((asc_poly(2, x, y, rho, q)[2] - p2).abs() < 1e-15);
        assert!((p2 + 0.375).abs() < 1e-15);
    }

    #[test]
    fn rogers_c_examples() {
        for &x in &GRID {
            let c = rogers_c(1, x, 0.4, 0.5).unwrap();
            assert!((c[1] - 2.0 * x * (1.0 - 0.4) / (1.0 - 0.5)).abs() < 1e-14);
            let c = rogers_c(10, x, 0.0, 0.0).unwrap();
            let u = chebyshev_u(10, x);
            for k in 0..=10 {
                assert!((c[k] - u[k]).abs() < 1e-9 * u[k].abs().max(1.0));
            }
        }
        assert!(rogers_c(3, 0.2, 1.0, 0.5).is_err());
        assert!(matches!(
            rogers_c(3, 0.2, 0.3, 1.0),
            Err(Error::DegenerateRecurrence { index: 0 })
        ));
    }

    #[test]
    fn rogers_monic_examples() {
        for &y in &GRID {
            assert_eq!(rogers_monic(1, y, 0.3, 0.6)[1], y);
        }
        // β = q reduces to rescaled Chebyshev polynomials.
        for &q in &[0.0, 0.3, 0.7] {
            for &y in &GRID {
                let r = rogers_monic(8, y, q, q);
                let u = chebyshev_u(8, y * (1.0 - q).sqrt() / 2.0);
                for n in 0..=8 {
                    let target = u[n] / (1.0 - q).powf(n as f64 / 2.0);
                    assert!((r[n] - target).abs() < 1e-11 * target.abs().max(1.0));
                }
            }
        }
        // q = 0: R_2 = y R_1 - [1]_0 (1-β²)/((1-β)(1-0)) R_0 = y² - (1+β).
        let beta: f64 = 0.5;
        let r2 = rogers_monic(2, 1.0, beta, 0.0)[2];
        assert!((r2 - (1.0 - (1.0 - beta * beta) / (1.0 - beta))).abs() < 1e-15);
        assert!((r2 + 0.5).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_and_hermite_examples() {
        assert_eq!(chebyshev_u(1, 0.5)[1], 1.0);
        assert_eq!(chebyshev_u(2, 1.0)[2], 3.0);
        assert_eq!(chebyshev_u(3, 0.0)[3], 0.0);
        for &x in &GRID {
            assert!((hermite_prob(2, x)[2] - (x * x - 1.0)).abs() < 1e-15);
        }
        assert_eq!(hermite_prob(3, 2.0)[3], 2.0);
    }

    #[test]
    fn rogers_relations() {
        for &q in &[-0.5, 0.0, 0.3, 0.7] {
            for &rho in &[-0.6, -0.2, 0.3, 0.8] {
                for &x in &GRID {
                    let r = rogers_monic(10, x, rho, q);
                    let p = asc_poly(10, x, x, rho, q);
                    for n in 0..=10u32 {
                        let via = p[n as usize] / q_pochhammer(rho, q, n);
                        let tol = 1e-10 * via.abs().max(1.0);
                        assert!((r[n as usize] - via).abs() < tol, "q={q} rho={rho} x={x} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn rogers_c_matches_monic_rescaling() {
        for &q in &[-0.5, 0.0, 0.5, 0.8] {
            for &beta in &[-0.7, 0.0, 0.4] {
                for &x in &[-0.9, -0.2, 0.3, 0.95] {
                    let c = rogers_c(10, x, beta, q).unwrap();
                    let y = 2.0 * x / (1.0 - q).sqrt();
                    let r = rogers_monic(10, y, beta, q);
                    for n in 0..=10u32 {
                        let scale =
                            (1.0 - q).powf(f64::from(n) / 2.0) * q_pochhammer(beta, q, n) / q_pochhammer(q, q, n);
                        let rhs = scale * r[n as usize];
                        let lhs = c[n as usize];
                        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
                    }
                }
            }
        }
        // The (2, 0.3, 0.4, 0.5) example.
        let c = rogers_c(2, 0.3, 0.4, 0.5).unwrap()[2];
        let y = 0.6 / 0.5f64.sqrt();
        let r = rogers_monic(2, y, 0.4, 0.5)[2];
        let rhs = 0.5 * q_pochhammer(0.4, 0.5, 2) / q_pochhammer(0.5, 0.5, 2) * r;
        assert!((c - rhs).abs() < 1e-14);
    }

    #[test]
    fn monic_rogers_at_q_zero_follows_chebyshev_recurrence() {
        for &r in &[-0.5, 0.2, 0.6] {
            for &x in &GRID {
                let w = rogers_monic(12, x, r, 0.0);
                assert!((w[2] - (x * x - 1.0 - r)).abs() < 1e-14);
                for n in 2..12 {
                    assert!((w[n + 1] - (x * w[n] - w[n - 1])).abs() < 1e-10);
                }
                let u = chebyshev_u(12, x / 2.0);
                for n in 2..=12 {
                    assert!((w[n] - (u[n] - r * u[n - 2])).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn monic_rogers_at_q_one_is_scaled_hermite() {
        for &r in &[-0.4, 0.3, 0.7] {
            let ratio: f64 = (1.0 + r) / (1.0 - r);
            for &x in &GRID {
                let w = rogers_monic(10, x, r, 1.0);
                let h = hermite_prob(10, x / ratio.sqrt());
                for n in 0..=10 {
                    let target = ratio.powf(n as f64 / 2.0) * h[n];
                    assert!((w[n] - target).abs() < 1e-10 * target.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn triple_product_examples() {
        assert_eq!(triple_product_integral(1, 1, 1, 0.4), 0.0);
        assert_eq!(triple_product_integral(1, 1, 4, 0.4), 0.0);
        assert!((triple_product_integral(2, 2, 2, 0.5) - 3.375).abs() < 1e-14);
        for n in 0..8 {
            let v = triple_product_integral(0, n, n, 0.3);
            assert!((v - q_factorial(n, 0.3)).abs() < 1e-14 * v);
        }
        for (k, m, n) in [(1, 2, 3), (2, 4, 4), (3, 3, 2), (5, 1, 4)] {
            let v = triple_product_integral(k, m, n, 0.6);
            for perm in [(k, n, m), (m, k, n), (m, n, k), (n, k, m), (n, m, k)] {
                assert_eq!(v, triple_product_integral(perm.0, perm.1, perm.2, 0.6));
            }
        }
    }

    #[test]
    fn linearization_examples() {
        assert_eq!(h_squared_linearization(0, 0.3), vec![1.0]);
        assert_eq!(h_squared_linearization(1, 0.8), vec![1.0, 1.0]);
        for &q in &[-0.3, 0.5, 0.9] {
            for j in 0..6 {
                let c = h_squared_linearization(j, q);
                for i in 0..20 {
                    let x = -2.0 + 0.2 * i as f64;
                    let h = q_hermite(2 * j, x, q);
                    let lhs = h[j as usize].powi(2);
                    let rhs: f64 = (0..=j as usize).map(|k| c[k] * h[2 * k]).sum();
                    assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "q={q} j={j}");
                }
            }
        }
    }

    #[test]
    fn w_poly_closed_forms() {
        for &q in &[-0.4, 0.0, 0.5] {
            for &r in &[-0.3, 0.2, 0.5] {
                for &x in &GRID {
                    let d = 1.0 - q * r * r;
                    assert!((w_poly(1, 0, x, r, q) - x / (1.0 + r)).abs() < 1e-14);
                    let w20 = x * x * (1.0 - q * r) / ((1.0 + r) * d) - 1.0 / d;
                    assert!((w_poly(2, 0, x, r, q) - w20).abs() < 1e-13);
                    let w11 = x * x * (1.0 - r) / ((1.0 + r) * d) + r / d;
                    assert!((w_poly(1, 1, x, r, q) - w11).abs() < 1e-13);
                }
            }
        }
        let v = w_poly(1, 1, 0.0, 0.5, 0.5);
        assert!((v - 0.5 / 0.875).abs() < 1e-15);
    }

    #[test]
    fn w_poly_is_symmetric() {
        for &q in &[-0.5, 0.0, 0.3, 0.8] {
            for &r in &[-0.6, 0.25] {
                for &x in &GRID {
                    for k in 0..=4 {
                        for m in 0..=4 {
                            let a = w_poly(k, m, x, r, q);
                            let b = w_poly(m, k, x, r, q);
                            assert!((a - b).abs() < 1e-11 * a.abs().max(1.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn orthonormal_hermite_matches_scaled_recurrence() {
        for &q in &[-0.5, 0.0, 0.6] {
            let h = q_hermite(15, 1.3, q);
            for (n, v) in OrthonormalHermite::new(1.3, q).take(16).enumerate() {
                let target = h[n] / q_factorial(n as u32, q).sqrt();
                assert!((v - target).abs() < 1e-12 * target.abs().max(1.0));
            }
        }
    }
}
