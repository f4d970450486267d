//! Closed-form moments and conditional moments, each paired with a
//! quadrature oracle.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::densities::{MarginalForm, Model, ModelParams};
use crate::error::{Error, Result};
use crate::polynomials::{asc_poly, q_hermite, w_poly};
use crate::qcore::{check_corr, check_q, half_width, q_binomial, q_factorial, q_pochhammer, TruncationConfig};
use crate::quadrature::{integrate1d, integrate2d, QuadratureConfig};

/// `E H_{2n}(Z|q) = r^n [2n]_q! / ([n]_q! (rq)_n)` under the marginal `f_R(·|r,q)`.
pub fn e_h2n_z(n: u32, r: f64, q: f64) -> Result<f64> {
    check_corr("r", r)?;
    check_q(q)?;
    Ok(r.powi(n as i32) * q_factorial(2 * n, q) / (q_factorial(n, q) * q_pochhammer(r * q, q, n)))
}

/// `var Z = (1+r)/(1-rq)`.
pub fn var_z(r: f64, q: f64) -> Result<f64> {
    check_corr("r", r)?;
    check_q(q)?;
    Ok((1.0 + r) / (1.0 - r * q))
}

/// `cov(Y,Z) = (ρ23 + ρ12 ρ13)/(1 - rq)`.
pub fn cov_yz(p: &ModelParams) -> Result<f64> {
    p.validate()?;
    Ok((p.rho23 + p.rho12 * p.rho13) / (1.0 - p.r() * p.q))
}

/// Covariance matrix of `(X, Y, Z)`. Off-diagonal entries follow from
/// `cov(Y,Z)` by relabelling the coordinates.
pub fn covariance_matrix(p: &ModelParams) -> Result<Matrix3<f64>> {
    p.validate()?;
    let d = 1.0 - p.r() * p.q;
    Ok(cov_from(p, (1.0 + p.r()) / d, d))
}

/// The `q -> 1` limit: `(1+r)/(1-r)` on the diagonal, `(ρ12 + ρ13 ρ23)/(1-r)`
/// and its relabellings off it.
pub fn covariance_matrix_limit(p: &ModelParams) -> Result<Matrix3<f64>> {
    check_corr("rho12", p.rho12)?;
    check_corr("rho13", p.rho13)?;
    check_corr("rho23", p.rho23)?;
    let d = 1.0 - p.r();
    Ok(cov_from(p, (1.0 + p.r()) / d, d))
}

fn cov_from(p: &ModelParams, var: f64, d: f64) -> Matrix3<f64> {
    let c12 = (p.rho12 + p.rho13 * p.rho23) / d;
    let c13 = (p.rho13 + p.rho12 * p.rho23) / d;
    let c23 = (p.rho23 + p.rho12 * p.rho13) / d;
    Matrix3::new(var, c12, c13, c12, var, c23, c13, c23, var)
}

/// `E H_m(Y|q) H_n(Z|q)` as the series over s, cut at `s_max`
/// (default `m + n + 60`). The last retained term must be below
/// `cfg.tail_tol` relative to the sum.
pub fn mixed_moment_h(m: u32, n: u32, p: &ModelParams, s_max: Option<u32>, cfg: &TruncationConfig) -> Result<f64> {
    p.validate()?;
    if (m + n) % 2 == 1 {
        return Ok(0.0);
    }
    let s_max = s_max.unwrap_or(m + n + 60);
    let (q, b) = (p.q, p.rho12 * p.rho13);
    let (mi, ni) = (i64::from(m), i64::from(n));
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut s = mi.max(ni);
    while s <= i64::from(s_max) {
        let (a, c) = ((s - mi) / 2, (s - ni) / 2);
        let mut term = 0.0;
        for k in (a.max(c))..=((a + mi).min(c + ni)) {
            term += p.rho23.powi(k as i32)
                * b.powi((s - k) as i32)
                * q_binomial(mi, k - a, q)
                * q_binomial(ni, k - c, q)
                * q_factorial(k as u32, q)
                * q_factorial((s - k) as u32, q);
        }
        term /= q_factorial(a as u32, q) * q_factorial(c as u32, q);
        sum += term;
        last = term;
        s += 2;
    }
    if last.abs() > cfg.tail_tol * sum.abs().max(1.0) {
        return Err(Error::NonConvergence {
            what: "mixed moment series",
            terms: s_max as usize,
        });
    }
    Ok((1.0 - p.r()) * sum)
}

/// Representation of `E(H_n(X)|Y=y, Z=z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CondXForm {
    /// Expansion in Al-Salam–Chihara polynomials of z.
    #[default]
    AscExpansion,
    /// Double sum in q-Hermite polynomials of y and z.
    DoubleSum,
    /// Image of `P_n(X|y,ρ12,q)`, converted to the q-Hermite basis numerically.
    AscImage,
}

impl CondXForm {
    pub const ALL: [CondXForm; 3] = [CondXForm::AscExpansion, CondXForm::DoubleSum, CondXForm::AscImage];

    pub fn name(self) -> &'static str {
        match self {
            CondXForm::AscExpansion => "asc-expansion",
            CondXForm::DoubleSum => "double-sum",
            CondXForm::AscImage => "asc-image",
        }
    }
}

fn check_conditioning(name: &'static str, v: f64, q: f64) -> Result<()> {
    let bound = half_width(q);
    if v.abs() <= bound {
        Ok(())
    } else {
        Err(Error::Domain { name, value: v, bound })
    }
}

/// `E(H_n(X|q) | Y=y, Z=z)`; does not involve ρ23.
pub fn cond_exp_hn_x_given_yz(n: u32, y: f64, z: f64, rho12: f64, rho13: f64, q: f64, form: CondXForm) -> Result<f64> {
    check_corr("rho12", rho12)?;
    check_corr("rho13", rho13)?;
    check_q(q)?;
    check_conditioning("y", y, q)?;
    check_conditioning("z", z, q)?;
    let (a2, c2) = (rho12 * rho12, rho13 * rho13);
    let ni = i64::from(n);
    match form {
        CondXForm::AscExpansion => {
            let h = q_hermite(n, y, q);
            let pz = asc_poly(n, z, y, rho12 * rho13, q);
            Ok((0..=n)
                .map(|s| {
                    q_binomial(ni, i64::from(s), q)
                        * rho12.powi((n - s) as i32)
                        * rho13.powi(s as i32)
                        * q_pochhammer(a2, q, s)
                        * h[(n - s) as usize]
                        * pz[s as usize]
                        / q_pochhammer(a2 * c2, q, s)
                })
                .sum())
        }
        CondXForm::DoubleSum => {
            let hy = q_hermite(n, y, q);
            let hz = q_hermite(n, z, q);
            let mut total = 0.0;
            for k in 0..=n / 2 {
                let ki = k as i32;
                let outer = (-1f64).powi(ki)
                    * q.powi(ki * (ki - 1) / 2)
                    * q_binomial(ni, 2 * i64::from(k), q)
                    * q_binomial(2 * i64::from(k), i64::from(k), q)
                    * q_factorial(k, q)
                    * (a2 * c2).powi(ki)
                    * q_pochhammer(a2, q, k)
                    * q_pochhammer(c2, q, k);
                let rest = n - 2 * k;
                let qk = q.powi(ki);
                let inner: f64 = (0..=rest)
                    .map(|j| {
                        q_binomial(i64::from(rest), i64::from(j), q)
                            * q_pochhammer(a2 * qk, q, j)
                            * q_pochhammer(c2 * qk, q, rest - j)
                            * rho12.powi((rest - j) as i32)
                            * rho13.powi(j as i32)
                            * hz[j as usize]
                            * hy[(rest - j) as usize]
                    })
                    .sum();
                total += outer * inner;
            }
            Ok(total / q_pochhammer(a2 * c2, q, n))
        }
        CondXForm::AscImage => {
            let images: Vec<f64> = {
                let pz = asc_poly(n, z, y, rho12 * rho13, q);
                (0..=n)
                    .map(|k| {
                        rho13.powi(k as i32) * q_pochhammer(a2, q, k) / q_pochhammer(a2 * c2, q, k) * pz[k as usize]
                    })
                    .collect()
            };
            let coeffs = hermite_in_asc_basis(n, y, rho12, q)?;
            Ok(coeffs.iter().zip(&images).map(|(c, e)| c * e).sum())
        }
    }
}

/// Coefficients `c_k` with `H_n(x|q) = Σ_k c_k P_k(x|y,ρ,q)`, found by solving
/// the interpolation system at n+1 Chebyshev points of S(q).
fn hermite_in_asc_basis(n: u32, y: f64, rho: f64, q: f64) -> Result<Vec<f64>> {
    let size = n as usize + 1;
    let l = half_width(q);
    let mut basis = DMatrix::<f64>::zeros(size, size);
    let mut target = DVector::<f64>::zeros(size);
    for i in 0..size {
        let x = l * (std::f64::consts::PI * (i as f64 + 0.5) / size as f64).cos();
        let p = asc_poly(n, x, y, rho, q);
        for k in 0..size {
            basis[(i, k)] = p[k];
        }
        target[i] = q_hermite(n, x, q).last();
    }
    basis
        .lu()
        .solve(&target)
        .map(|c| c.iter().copied().collect())
        .ok_or(Error::DegenerateRecurrence { index: n as usize })
}

/// Representation of `E(H_n(Y)|Z=z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CondYForm {
    /// `Σ_s [n s]_q ρ23^s (ρ12ρ13)^{n-s} W_{s,n-s}(z|r,q)`.
    #[default]
    Derived,
    /// The odd/even split with coefficients `ρ23^{n-s} + (ρ12ρ13)^{n-s}`.
    /// Agrees with `Derived` for n <= 2 only.
    AsPrinted,
}

impl CondYForm {
    pub fn name(self) -> &'static str {
        match self {
            CondYForm::Derived => "derived",
            CondYForm::AsPrinted => "as-printed",
        }
    }
}

/// `E(H_n(Y|q) | Z=z)`, a polynomial of degree at most n in z.
pub fn cond_exp_hn_y_given_z(n: u32, z: f64, p: &ModelParams, form: CondYForm) -> Result<f64> {
    p.validate()?;
    let q = p.q;
    check_conditioning("z", z, q)?;
    let (r, b) = (p.r(), p.rho12 * p.rho13);
    let ni = i64::from(n);
    let binom = |s: u32| q_binomial(ni, i64::from(s), q);
    match form {
        CondYForm::Derived => Ok((0..=n)
            .map(|s| binom(s) * p.rho23.powi(s as i32) * b.powi((n - s) as i32) * w_poly(s, n - s, z, r, q))
            .sum()),
        CondYForm::AsPrinted => {
            if n == 0 {
                return Ok(1.0);
            }
            let m = n / 2;
            let coupled = |s: u32| {
                let e = (n - s) as i32;
                binom(s) * (p.rho23.powi(e) + b.powi(e)) * w_poly(s, n - s, z, r, q)
            };
            if n % 2 == 1 {
                Ok((0..=m).map(coupled).sum())
            } else {
                let middle = binom(m) * r.powi(m as i32) * w_poly(m, m, z, r, q);
                Ok(middle + (0..m).map(coupled).sum::<f64>())
            }
        }
    }
}

/// `E(X | Y=y, Z=z)`.
pub fn cond_exp_x_given_yz(y: f64, z: f64, rho12: f64, rho13: f64, q: f64) -> Result<f64> {
    check_corr("rho12", rho12)?;
    check_corr("rho13", rho13)?;
    check_q(q)?;
    check_conditioning("y", y, q)?;
    check_conditioning("z", z, q)?;
    let (a2, c2) = (rho12 * rho12, rho13 * rho13);
    Ok((y * rho12 * (1.0 - c2) + z * rho13 * (1.0 - a2)) / (1.0 - a2 * c2))
}

/// `E(Y | Z=z) = (ρ23 + ρ12ρ13) z/(1+r)`.
pub fn cond_exp_y_given_z(z: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    check_conditioning("z", z, p.q)?;
    Ok((p.rho23 + p.rho12 * p.rho13) * z / (1.0 + p.r()))
}

/// `E(Y² | Z=z)`.
pub fn cond_exp_y2_given_z(z: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    check_conditioning("z", z, p.q)?;
    let (q, r) = (p.q, p.r());
    let s = p.rho23 * p.rho23 + (p.rho12 * p.rho13).powi(2);
    let d = 1.0 - q * r * r;
    Ok(((s * (1.0 - q * r) + r * (1.0 - r) * (1.0 + q)) / ((1.0 + r) * d)) * z * z + (1.0 + r * r - s) / d)
}

/// `E(XY | Z=z)`.
pub fn cond_exp_xy_given_z(z: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    check_conditioning("z", z, p.q)?;
    let (q, r) = (p.q, p.r());
    let (a, b, c) = (p.rho12, p.rho13, p.rho23);
    let d = 1.0 - q * r * r;
    let quad = (a * (b * b + c * c) * (1.0 - q * r) + (1.0 - r) * (b * c + q * r * a)) / ((1.0 + r) * d);
    Ok(quad * z * z + a * (1.0 - b * b) * (1.0 - c * c) / d)
}

/// Which moment a [`MomentSpec`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// `E H_m(Y) H_n(Z)`; degrees `(m, n)`.
    Unconditional,
    /// `E(H_n(X)|Y=y,Z=z)`; degrees `(n, 0)`, conditioning `[y, z]`.
    CondXgivenYZ,
    /// `E(H_n(Y)|Z=z)`; degrees `(n, 0)`, conditioning `[z]`.
    CondYgivenZ,
    /// `E(H_n(X) H_m(Y)|Z=z)`; degrees `(n, m)`, conditioning `[z]`.
    CondXYgivenZ,
}

/// A moment together with everything needed to evaluate it two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSpec {
    pub kind: MomentKind,
    pub degrees: (u32, u32),
    pub params: ModelParams,
    pub conditioning: Vec<f64>,
}

impl MomentSpec {
    pub fn new(kind: MomentKind, degrees: (u32, u32), params: ModelParams, conditioning: Vec<f64>) -> Result<Self> {
        params.validate()?;
        let needed = match kind {
            MomentKind::Unconditional => 0,
            MomentKind::CondXgivenYZ => 2,
            MomentKind::CondYgivenZ | MomentKind::CondXYgivenZ => 1,
        };
        if conditioning.len() != needed {
            return Err(Error::invalid(
                "conditioning",
                conditioning.len() as f64,
                "wrong number of conditioning values",
            ));
        }
        for &v in &conditioning {
            check_conditioning("conditioning", v, params.q)?;
        }
        Ok(MomentSpec {
            kind,
            degrees,
            params,
            conditioning,
        })
    }

    /// The closed-form value. `CondXYgivenZ` has one only for degrees (1, 1).
    pub fn closed_form(&self, cfg: &TruncationConfig) -> Result<f64> {
        let p = &self.params;
        let (n, m) = self.degrees;
        match self.kind {
            MomentKind::Unconditional => mixed_moment_h(n, m, p, None, cfg),
            MomentKind::CondXgivenYZ => {
                let (y, z) = (self.conditioning[0], self.conditioning[1]);
                cond_exp_hn_x_given_yz(n, y, z, p.rho12, p.rho13, p.q, CondXForm::AscExpansion)
            }
            MomentKind::CondYgivenZ => cond_exp_hn_y_given_z(n, self.conditioning[0], p, CondYForm::Derived),
            MomentKind::CondXYgivenZ => {
                if self.degrees != (1, 1) {
                    return Err(Error::invalid(
                        "degrees",
                        f64::from(n * 100 + m),
                        "closed form exists for degrees (1, 1) only",
                    ));
                }
                cond_exp_xy_given_z(self.conditioning[0], p)
            }
        }
    }

    /// The same moment by direct quadrature against the relevant density.
    pub fn quadrature_oracle(&self, tcfg: &TruncationConfig) -> Result<f64> {
        let p = &self.params;
        let q = p.q;
        let model = Model::new(*p, tcfg)?;
        let (n, m) = self.degrees;
        let c1 = QuadratureConfig::for_dimension(1).with_tol(1e-12);
        let c2 = QuadratureConfig::for_dimension(2).with_tol(1e-10);
        match self.kind {
            MomentKind::Unconditional => integrate2d(
                |y, z| Ok(q_hermite(n, y, q).last() * q_hermite(m, z, q).last() * model.f_yz(y, z)?),
                q,
                &c2,
            )
            .map(|r| r.value),
            MomentKind::CondXgivenYZ => {
                let (y, z) = (self.conditioning[0], self.conditioning[1]);
                integrate1d(|x| Ok(q_hermite(n, x, q).last() * model.f_x_given_yz(x, y, z)?), q, &c1).map(|r| r.value)
            }
            MomentKind::CondYgivenZ => {
                let z = self.conditioning[0];
                let fz = model.f_z(z, MarginalForm::Rogers)?;
                integrate1d(|y| Ok(q_hermite(n, y, q).last() * model.f_yz(y, z)?), q, &c1).map(|r| r.value / fz)
            }
            MomentKind::CondXYgivenZ => {
                let z = self.conditioning[0];
                let fz = model.f_z(z, MarginalForm::Rogers)?;
                integrate2d(
                    |x, y| {
                        let f = model.f_3d(x, y, z, crate::densities::DensityForm::Product)?;
                        Ok(q_hermite(n, x, q).last() * q_hermite(m, y, q).last() * f)
                    },
                    q,
                    &c2,
                )
                .map(|r| r.value / fz)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams {
        ModelParams::new(0.3, 0.4, 0.5, 0.5).unwrap()
    }

    #[test]
    fn unconditional_examples() {
        assert_eq!(e_h2n_z(0, 0.4, 0.3).unwrap(), 1.0);
        assert!((e_h2n_z(1, 0.5, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let (r, q) = (0.3, 0.7);
        assert!((e_h2n_z(1, r, q).unwrap() - r * (1.0 + q) / (1.0 - r * q)).abs() < 1e-15);
        assert_eq!(var_z(0.0, 0.4).unwrap(), 1.0);
        assert!((var_z(0.5, 0.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((var_z(0.3, 0.5).unwrap() - 1.3 / 0.85).abs() < 1e-15);
        assert!(var_z(1.0, 0.5).is_err());
    }

    #[test]
    fn covariance_examples() {
        let zero = ModelParams::new(0.0, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(covariance_matrix_limit(&zero).unwrap(), Matrix3::identity());
        let c = covariance_matrix_limit(&p()).unwrap();
        assert!((c[(0, 1)] - 0.5 / 0.94).abs() < 1e-15);
        assert_eq!(c, c.transpose());
        assert!((c[(2, 2)] - 1.06 / 0.94).abs() < 1e-15);
        let finite = covariance_matrix(&p()).unwrap();
        assert!((finite[(1, 2)] - cov_yz(&p()).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn mixed_moment_examples() {
        let cfg = TruncationConfig::default();
        assert!((mixed_moment_h(0, 0, &p(), None, &cfg).unwrap() - 1.0).abs() < 1e-14);
        let cov = mixed_moment_h(1, 1, &p(), None, &cfg).unwrap();
        assert!((cov - cov_yz(&p()).unwrap()).abs() < 1e-14);
        assert_eq!(mixed_moment_h(1, 2, &p(), None, &cfg).unwrap(), 0.0);
        // E H_2(Z) from the marginal.
        let e = mixed_moment_h(0, 2, &p(), None, &cfg).unwrap();
        assert!((e - e_h2n_z(1, p().r(), p().q).unwrap()).abs() < 1e-14);
        assert!(matches!(
            mixed_moment_h(2, 2, &p(), Some(4), &cfg),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn conditional_x_examples() {
        let (y, z, a, b, q) = (0.5, -1.0, 0.3, 0.4, 0.5);
        for form in CondXForm::ALL {
            assert!((cond_exp_hn_x_given_yz(0, y, z, a, b, q, form).unwrap() - 1.0).abs() < 1e-14);
            let ex = cond_exp_x_given_yz(y, z, a, b, q).unwrap();
            assert!((cond_exp_hn_x_given_yz(1, y, z, a, b, q, form).unwrap() - ex).abs() < 1e-14);
        }
        for n in 0..=6 {
            let base = cond_exp_hn_x_given_yz(n, y, z, a, b, q, CondXForm::AscExpansion).unwrap();
            for form in [CondXForm::DoubleSum, CondXForm::AscImage] {
                let v = cond_exp_hn_x_given_yz(n, y, z, a, b, q, form).unwrap();
                assert!((v - base).abs() < 1e-10 * base.abs().max(1.0), "n={n} {form:?}");
            }
        }
        assert!(cond_exp_hn_x_given_yz(2, 5.0, z, a, b, q, CondXForm::DoubleSum).is_err());
    }

    #[test]
    fn conditional_y_examples() {
        let p = p();
        for z in [-1.5, 0.0, 1.0, 2.2] {
            assert_eq!(cond_exp_hn_y_given_z(0, z, &p, CondYForm::Derived).unwrap(), 1.0);
            let cyz = cond_exp_y_given_z(z, &p).unwrap();
            let cy2z = cond_exp_y2_given_z(z, &p).unwrap();
            for form in [CondYForm::Derived, CondYForm::AsPrinted] {
                assert!((cond_exp_hn_y_given_z(1, z, &p, form).unwrap() - cyz).abs() < 1e-14);
                assert!((cond_exp_hn_y_given_z(2, z, &p, form).unwrap() - (cy2z - 1.0)).abs() < 1e-13);
            }
        }
        // The two forms part ways from n = 3 on.
        let a = cond_exp_hn_y_given_z(3, 1.0, &p, CondYForm::Derived).unwrap();
        let b = cond_exp_hn_y_given_z(3, 1.0, &p, CondYForm::AsPrinted).unwrap();
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn cconv_examples() {
        let zero = ModelParams::new(0.0, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(cond_exp_xy_given_z(0.7, &zero).unwrap(), 0.0);
        let v = cond_exp_xy_given_z(0.0, &p()).unwrap();
        assert!((v - 0.3 * 0.84 * 0.75 / (1.0 - 0.5 * 0.0036)).abs() < 1e-15);
        assert!((v - 0.1893408).abs() < 1e-7);
    }

    #[test]
    fn moment_spec_validation() {
        assert!(MomentSpec::new(MomentKind::CondYgivenZ, (2, 0), p(), vec![]).is_err());
        assert!(MomentSpec::new(MomentKind::CondYgivenZ, (2, 0), p(), vec![9.0]).is_err());
        let spec = MomentSpec::new(MomentKind::CondXYgivenZ, (2, 1), p(), vec![0.5]).unwrap();
        assert!(spec.closed_form(&TruncationConfig::default()).is_err());
    }
}
