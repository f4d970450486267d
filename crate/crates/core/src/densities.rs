//! Densities of the q-Normal family in one, two and three dimensions.
//!
//! Infinite products are accumulated in log space so that evaluation stays
//! finite as q approaches 1. Joint and marginal densities extend by zero
//! outside S(q); conditional densities and the Askey–Wilson parameter map
//! reject conditioning values outside S(q) with [`Error::Domain`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polynomials::OrthonormalHermite;
use crate::qcore::{
    check_corr, check_q, edge_root, half_width, ln_euler_abs, ln_poly_geometric_tail, ln_q_pochhammer_inf,
    truncated_log_product, Support, TruncationConfig,
};

/// Conditional densities whose normaliser falls below this value raise
/// [`Error::DegenerateConditioning`].
pub const CONDITIONING_FLOOR: f64 = 1e-300;

/// Default relative tolerance for agreement between equivalent forms.
pub const FORM_TOL: f64 = 1e-8;
/// Absolute fallback used near zeros of a density.
pub const FORM_ABS_TOL: f64 = 1e-12;

/// `|a - b| <= FORM_TOL * max(|a|, |b|)` or `|a - b| <= FORM_ABS_TOL`.
pub fn forms_agree(a: f64, b: f64) -> bool {
    let diff = (a - b).abs();
    diff <= FORM_TOL * a.abs().max(b.abs()) || diff <= FORM_ABS_TOL
}

/// Correlation parameters and q of the three-dimensional law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub rho12: f64,
    pub rho13: f64,
    pub rho23: f64,
    pub q: f64,
}

impl ModelParams {
    pub fn new(rho12: f64, rho13: f64, rho23: f64, q: f64) -> Result<Self> {
        let p = ModelParams { rho12, rho13, rho23, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_corr("rho12", self.rho12)?;
        check_corr("rho13", self.rho13)?;
        check_corr("rho23", self.rho23)?;
        check_q(self.q)
    }

    /// `r = ρ12 ρ13 ρ23`, the only parameter the one-dimensional marginals see.
    pub fn r(&self) -> f64 {
        self.rho12 * self.rho13 * self.rho23
    }

    pub fn support(&self) -> Support {
        Support::Interval {
            bound: half_width(self.q),
        }
    }
}

/// Representation used for the three-dimensional density and the
/// Poisson–Mehler kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityForm {
    /// Product of three conditional densities.
    #[default]
    Product,
    /// Triple Poisson–Mehler series.
    Series,
    /// One infinite product over all three ω-kernels.
    Closed,
}

impl DensityForm {
    pub const ALL: [DensityForm; 3] = [DensityForm::Product, DensityForm::Series, DensityForm::Closed];

    pub fn name(self) -> &'static str {
        match self {
            DensityForm::Product => "product",
            DensityForm::Series => "series",
            DensityForm::Closed => "closed",
        }
    }
}

/// The four equivalent representations of the one-dimensional marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarginalForm {
    /// `(1-r) f_N(z) Σ r^j/[j]_q! H_j(z)²`.
    Squares,
    /// The Rogers density `f_R(z|r,q)`.
    #[default]
    Rogers,
    /// `(1-r) f_N(z) Σ r^k/([k]_q! (r)_{k+1}) H_{2k}(z)`.
    EvenSeries,
    /// Single product of ratios `l_q(z|q^j)/l_q(z|rq^j)`.
    Ratio,
}

impl MarginalForm {
    pub const ALL: [MarginalForm; 4] = [
        MarginalForm::Squares,
        MarginalForm::Rogers,
        MarginalForm::EvenSeries,
        MarginalForm::Ratio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MarginalForm::Squares => "squares",
            MarginalForm::Rogers => "rogers",
            MarginalForm::EvenSeries => "even-series",
            MarginalForm::Ratio => "ratio",
        }
    }
}

/// `ω_q(x,y|ρ) = (1-ρ²)² - (1-q) x y ρ (1+ρ²) + (1-q) ρ² (x² + y²)`
pub fn omega(x: f64, y: f64, rho: f64, q: f64) -> f64 {
    let r2 = rho * rho;
    (1.0 - r2) * (1.0 - r2) - (1.0 - q) * x * y * rho * (1.0 + r2) + (1.0 - q) * r2 * (x * x + y * y)
}

/// `l_q(x|a) = (1+a)² - (1-q) a x²`
pub fn l_q(x: f64, a: f64, q: f64) -> f64 {
    (1.0 + a) * (1.0 + a) - (1.0 - q) * a * x * x
}

fn l_deviation(x: f64, a: f64, q: f64) -> f64 {
    let a = a.abs();
    a * (2.0 + a + (1.0 - q) * x * x)
}

fn omega_deviation(x: f64, y: f64, b: f64, q: f64) -> f64 {
    let b = b.abs();
    let b2 = b * b;
    b * (2.0 * b + b2 * b + (1.0 - q) * (x * y).abs() * (1.0 + b2) + (1.0 - q) * b * (x * x + y * y))
}

/// `Σ_{i>=0} ln l_q(x|a q^i)`
fn ln_l_product(x: f64, a: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    let mut power = a;
    truncated_log_product("l_q product", q, cfg, |_| {
        let b = power;
        power *= q;
        (l_q(x, b, q).ln(), l_deviation(x, b, q))
    })
    .map(|p| p.value)
}

/// `Σ_{i>=0} ln ω_q(x,y|ρ q^i)`
fn ln_omega_product(x: f64, y: f64, rho: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    let mut power = rho;
    truncated_log_product("omega product", q, cfg, |_| {
        let b = power;
        power *= q;
        (omega(x, y, b, q).ln(), omega_deviation(x, y, b, q))
    })
    .map(|p| p.value)
}

fn check_support(name: &'static str, value: f64, q: f64) -> Result<()> {
    let bound = half_width(q);
    if value.abs() <= bound {
        Ok(())
    } else {
        Err(Error::Domain { name, value, bound })
    }
}

/// The q-Normal density `f_N(·|q)` with its constant factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct QNormal {
    q: f64,
    cfg: TruncationConfig,
    ln_const: f64,
}

impl QNormal {
    pub fn new(q: f64, cfg: &TruncationConfig) -> Result<Self> {
        check_q(q)?;
        let ln_const = ln_q_pochhammer_inf(q, q, cfg)? + 0.5 * (1.0 - q).ln() - (2.0 * std::f64::consts::PI).ln();
        Ok(QNormal { q, cfg: *cfg, ln_const })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn half_width(&self) -> f64 {
        half_width(self.q)
    }

    /// `ln f_N(x|q)`; `-inf` on the boundary and outside S(q).
    pub fn ln_density(&self, x: f64) -> Result<f64> {
        if !(x.abs() < self.half_width()) {
            return Ok(f64::NEG_INFINITY);
        }
        let q = self.q;
        let ln_prod = ln_l_product(x, q, q, &self.cfg)?;
        Ok(self.ln_const + edge_root(x, q).ln() + ln_prod)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.ln_density(x).map(f64::exp)
    }
}

/// The Poisson–Mehler kernel `Σ_j ρ^j/[j]_q! H_j(x|q) H_j(y|q)`, i.e.
/// `(ρ²)_∞ / Π_{i>=0} ω_q(x,y|ρ q^i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PmKernel {
    rho: f64,
    q: f64,
    cfg: TruncationConfig,
    ln_const: f64,
}

impl PmKernel {
    pub fn new(rho: f64, q: f64, cfg: &TruncationConfig) -> Result<Self> {
        check_corr("rho", rho)?;
        check_q(q)?;
        Ok(PmKernel {
            rho,
            q,
            cfg: *cfg,
            ln_const: ln_q_pochhammer_inf(rho * rho, q, cfg)?,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Logarithm of the product form; arguments are assumed to lie in S(q).
    pub fn ln_value(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.ln_const - ln_omega_product(x, y, self.rho, self.q, &self.cfg)?)
    }

    pub fn product(&self, x: f64, y: f64) -> Result<f64> {
        self.ln_value(x, y).map(f64::exp)
    }

    pub fn series(&self, x: f64, y: f64) -> Result<f64> {
        pm_series(x, y, self.rho, self.q, &self.cfg)
    }

    pub fn evaluate(&self, x: f64, y: f64, form: DensityForm) -> Result<f64> {
        match form {
            DensityForm::Series => self.series(x, y),
            DensityForm::Product | DensityForm::Closed => self.product(x, y),
        }
    }
}

/// `Σ_j ρ^j p_j(x) p_j(y)` with orthonormal `p_j`, stopped once the tail bound
/// `|p_j| <= (j+1)/(|q|;|q|)_∞^{3/2}` guarantees `tail_tol`.
fn pm_series(x: f64, y: f64, rho: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    if rho == 0.0 {
        return Ok(1.0);
    }
    let ln_c = -3.0 * ln_euler_abs(q);
    let ln_tol = cfg.tail_tol.ln();
    let mut px = OrthonormalHermite::new(x, q);
    let mut py = OrthonormalHermite::new(y, q);
    let (mut sum, mut power) = (0.0, 1.0);
    for j in 0..cfg.max_terms {
        sum += power * px.next().unwrap_or(0.0) * py.next().unwrap_or(0.0);
        if ln_poly_geometric_tail(ln_c, rho, 2, j) < ln_tol {
            return Ok(sum);
        }
        power *= rho;
    }
    Err(Error::NonConvergence {
        what: "Poisson-Mehler series",
        terms: cfg.max_terms,
    })
}

/// The Rogers density `f_R(·|β,q)` with its constant factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct RogersDensity {
    beta: f64,
    normal: QNormal,
    ln_const: f64,
}

impl RogersDensity {
    pub fn new(beta: f64, q: f64, cfg: &TruncationConfig) -> Result<Self> {
        check_corr("beta", beta)?;
        let normal = QNormal::new(q, cfg)?;
        let ln_const = ln_q_pochhammer_inf(beta * beta, q, cfg)?
            - ln_q_pochhammer_inf(beta, q, cfg)?
            - ln_q_pochhammer_inf(beta * q, q, cfg)?;
        Ok(RogersDensity { beta, normal, ln_const })
    }

    pub fn ln_density(&self, x: f64) -> Result<f64> {
        let ln_n = self.normal.ln_density(x)?;
        if ln_n == f64::NEG_INFINITY {
            return Ok(ln_n);
        }
        let q = self.normal.q;
        Ok(ln_n + self.ln_const - ln_l_product(x, self.beta, q, &self.normal.cfg)?)
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        self.ln_density(x).map(f64::exp)
    }
}

/// `f_N(x|q)`; zero outside S(q).
pub fn f_n(x: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    QNormal::new(q, cfg)?.density(x)
}

/// The conditional q-Normal density `f_CN(x|y,ρ,q)`.
pub fn f_cn(x: f64, y: f64, rho: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    check_corr("rho", rho)?;
    check_q(q)?;
    check_support("y", y, q)?;
    let normal = QNormal::new(q, cfg)?;
    let ln_n = normal.ln_density(x)?;
    if ln_n == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let kernel = PmKernel::new(rho, q, cfg)?;
    Ok((ln_n + kernel.ln_value(x, y)?).exp())
}

/// The Rogers density `f_R(x|β,q)`; zero outside S(q).
pub fn f_r(x: f64, beta: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    RogersDensity::new(beta, q, cfg)?.density(x)
}

/// The Poisson–Mehler kernel in the requested form.
pub fn pm_kernel(x: f64, y: f64, rho: f64, q: f64, cfg: &TruncationConfig, form: DensityForm) -> Result<f64> {
    check_q(q)?;
    check_support("x", x, q)?;
    check_support("y", y, q)?;
    PmKernel::new(rho, q, cfg)?.evaluate(x, y, form)
}

/// The three-dimensional density.
pub fn f_3d(x: f64, y: f64, z: f64, p: &ModelParams, cfg: &TruncationConfig, form: DensityForm) -> Result<f64> {
    Model::new(*p, cfg)?.f_3d(x, y, z, form)
}

/// The two-dimensional marginal of `(Y, Z)`.
pub fn f_yz(y: f64, z: f64, p: &ModelParams, cfg: &TruncationConfig) -> Result<f64> {
    Model::new(*p, cfg)?.f_yz(y, z)
}

/// The one-dimensional marginal, a function of `r` and `q` only.
pub fn f_z(z: f64, r: f64, q: f64, cfg: &TruncationConfig, form: MarginalForm) -> Result<f64> {
    Marginal::new(r, q, cfg)?.density(z, form)
}

/// Density of X given `Y = y, Z = z`.
pub fn f_x_given_yz(x: f64, y: f64, z: f64, p: &ModelParams, cfg: &TruncationConfig) -> Result<f64> {
    Model::new(*p, cfg)?.f_x_given_yz(x, y, z)
}

/// Density of `(Y, Z)` given `X = x`.
pub fn f_yz_given_x(y: f64, z: f64, x: f64, p: &ModelParams, cfg: &TruncationConfig) -> Result<f64> {
    Model::new(*p, cfg)?.f_yz_given_x(y, z, x)
}

/// Conjugate Askey–Wilson parameters `(a, b, c, d)` of the conditional law
/// of X given `(y, z)`.
pub fn aw_parameters(y: f64, z: f64, rho1: f64, rho2: f64, q: f64) -> Result<[Complex64; 4]> {
    check_q(q)?;
    check_support("y", y, q)?;
    check_support("z", z, q)?;
    // (sqrt(1-q)/2) sqrt(4/(1-q) - y²) = sqrt(4 - (1-q) y²) / 2
    let s = 0.5 * (1.0 - q).sqrt();
    let a = Complex64::new(s * rho1 * y, -0.5 * rho1 * edge_root(y, q));
    let c = Complex64::new(s * rho2 * z, -0.5 * rho2 * edge_root(z, q));
    Ok([a, a.conj(), c, c.conj()])
}

/// One-dimensional marginal `f_Z(·|r,q)` in all four forms.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    r: f64,
    rogers: RogersDensity,
    /// `ln(1+r) + ln (q)_∞ + ln (r²q)_∞ - 2 ln (rq)_∞ + ln sqrt(1-q) - ln 2π`
    ln_ratio_const: f64,
}

impl Marginal {
    pub fn new(r: f64, q: f64, cfg: &TruncationConfig) -> Result<Self> {
        check_corr("r", r)?;
        check_q(q)?;
        let ln_ratio_const = (1.0 + r).ln() + ln_q_pochhammer_inf(q, q, cfg)? + ln_q_pochhammer_inf(r * r * q, q, cfg)?
            - 2.0 * ln_q_pochhammer_inf(r * q, q, cfg)?
            + 0.5 * (1.0 - q).ln()
            - (2.0 * std::f64::consts::PI).ln();
        Ok(Marginal {
            r,
            rogers: RogersDensity::new(r, q, cfg)?,
            ln_ratio_const,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    fn normal(&self) -> &QNormal {
        &self.rogers.normal
    }

    pub fn density(&self, z: f64, form: MarginalForm) -> Result<f64> {
        let normal = self.normal();
        if !(z.abs() < normal.half_width()) {
            return Ok(0.0);
        }
        let (q, r, cfg) = (normal.q, self.r, &normal.cfg);
        match form {
            MarginalForm::Rogers => self.rogers.density(z),
            MarginalForm::Squares => {
                let fz = normal.density(z)?;
                Ok((1.0 - r) * fz * pm_series(z, z, r, q, cfg)?)
            }
            MarginalForm::EvenSeries => {
                let fz = normal.density(z)?;
                Ok((1.0 - r) * fz * even_series(z, r, q, cfg)?)
            }
            MarginalForm::Ratio => {
                let mut power = q;
                let tail = truncated_log_product("marginal ratio product", q, cfg, |_| {
                    let a = power;
                    power *= q;
                    let ln = l_q(z, a, q).ln() - l_q(z, r * a, q).ln();
                    (ln, l_deviation(z, a, q).max(l_deviation(z, r * a, q)))
                })?;
                let ln = self.ln_ratio_const + edge_root(z, q).ln() - l_q(z, r, q).ln() + tail.value;
                Ok(ln.exp())
            }
        }
    }
}

/// `Σ_k r^k/([k]_q! (r)_{k+1}) H_{2k}(z|q)`, summed as
/// `Σ_k r^k sqrt([2k choose k]_q) p_{2k}(z) / (r)_{k+1}`.
fn even_series(z: f64, r: f64, q: f64, cfg: &TruncationConfig) -> Result<f64> {
    if r == 0.0 {
        return Ok(1.0);
    }
    // |p_{2k}| <= (2k+1)(|q|;|q|)^{-3/2}, [2k k]_q <= (|q|;|q|)^{-2}, |(r)_{k+1}| >= (|r|;|q|)_∞
    let ln_c = 2f64.ln() - 2.5 * ln_euler_abs(q) - ln_abs_pochhammer_lower(r, q);
    let ln_tol = cfg.tail_tol.ln();
    let mut p = OrthonormalHermite::new(z, q);
    let (mut sum, mut power, mut sqrt_binom, mut poch) = (0.0, 1.0, 1.0, 1.0 - r);
    for k in 0..cfg.max_terms {
        let p2k = p.next().unwrap_or(0.0);
        p.next();
        sum += power * sqrt_binom * p2k / poch;
        if ln_poly_geometric_tail(ln_c, r, 1, k) < ln_tol {
            return Ok(sum);
        }
        let kf = k as i32;
        let ratio =
            (1.0 - q.powi(2 * kf + 2)) * (1.0 - q.powi(2 * kf + 1)) / ((1.0 - q.powi(kf + 1)) * (1.0 - q.powi(kf + 1)));
        sqrt_binom *= ratio.sqrt();
        power *= r;
        poch *= 1.0 - r * q.powi(kf + 1);
    }
    Err(Error::NonConvergence {
        what: "even marginal series",
        terms: cfg.max_terms,
    })
}

/// `ln (|r|; |q|)_∞`
fn ln_abs_pochhammer_lower(r: f64, q: f64) -> f64 {
    let (r, q) = (r.abs(), q.abs());
    let mut sum = 0.0;
    let mut power = r;
    while power > 1e-18 {
        sum += (-power).ln_1p();
        power *= q;
    }
    sum
}

/// The three-dimensional model with all kernels it needs cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    params: ModelParams,
    cfg: TruncationConfig,
    normal: QNormal,
    k12: PmKernel,
    k13: PmKernel,
    k23: PmKernel,
    /// Kernel with ρ12 ρ13, the dependence left in `f_YZ` and `f_X|YZ`.
    k_yz: PmKernel,
    /// Kernel with r, the normaliser of `f_YZ|X`.
    k_r: PmKernel,
    marginal: Marginal,
}

impl Model {
    pub fn new(params: ModelParams, cfg: &TruncationConfig) -> Result<Self> {
        params.validate()?;
        let q = params.q;
        Ok(Model {
            params,
            cfg: *cfg,
            normal: QNormal::new(q, cfg)?,
            k12: PmKernel::new(params.rho12, q, cfg)?,
            k13: PmKernel::new(params.rho13, q, cfg)?,
            k23: PmKernel::new(params.rho23, q, cfg)?,
            k_yz: PmKernel::new(params.rho12 * params.rho13, q, cfg)?,
            k_r: PmKernel::new(params.r(), q, cfg)?,
            marginal: Marginal::new(params.r(), q, cfg)?,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn cfg(&self) -> &TruncationConfig {
        &self.cfg
    }

    pub fn normal(&self) -> &QNormal {
        &self.normal
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    /// Kernels for `(ρ12, ρ13, ρ23)`.
    pub fn kernels(&self) -> [&PmKernel; 3] {
        [&self.k12, &self.k13, &self.k23]
    }

    pub fn half_width(&self) -> f64 {
        self.normal.half_width()
    }

    fn inside(&self, v: f64) -> bool {
        v.abs() < self.half_width()
    }

    pub fn f_3d(&self, x: f64, y: f64, z: f64, form: DensityForm) -> Result<f64> {
        if !(self.inside(x) && self.inside(y) && self.inside(z)) {
            return Ok(0.0);
        }
        let (nx, ny, nz) = (
            self.normal.ln_density(x)?,
            self.normal.ln_density(y)?,
            self.normal.ln_density(z)?,
        );
        let ln_n = nx + ny + nz;
        let c = 1.0 - self.params.r();
        match form {
            DensityForm::Product => {
                // f_CN(x|y,ρ12) f_CN(y|z,ρ23) f_CN(z|x,ρ13)
                let a = (nx + self.k12.ln_value(x, y)?).exp();
                let b = (ny + self.k23.ln_value(y, z)?).exp();
                let d = (nz + self.k13.ln_value(z, x)?).exp();
                Ok(c * a * b * d)
            }
            DensityForm::Series => {
                let s = self.k12.series(x, y)? * self.k13.series(x, z)? * self.k23.series(y, z)?;
                Ok(c * ln_n.exp() * s)
            }
            DensityForm::Closed => {
                let (p, q) = (&self.params, self.params.q);
                let (mut b12, mut b13, mut b23) = (p.rho12, p.rho13, p.rho23);
                let ln_omegas = truncated_log_product("omega product", q, &self.cfg, |_| {
                    let ln = omega(x, y, b12, q).ln() + omega(x, z, b13, q).ln() + omega(y, z, b23, q).ln();
                    let dev = omega_deviation(x, y, b12, q)
                        .max(omega_deviation(x, z, b13, q))
                        .max(omega_deviation(y, z, b23, q));
                    b12 *= q;
                    b13 *= q;
                    b23 *= q;
                    (ln, dev)
                })?;
                let ln_consts = self.k12.ln_const + self.k13.ln_const + self.k23.ln_const;
                Ok(c * (ln_n + ln_consts - ln_omegas.value).exp())
            }
        }
    }

    /// `(1-r) f_CN(y|z,ρ23) f_CN(z|y,ρ12 ρ13)`
    pub fn f_yz(&self, y: f64, z: f64) -> Result<f64> {
        if !(self.inside(y) && self.inside(z)) {
            return Ok(0.0);
        }
        let ln = self.normal.ln_density(y)?
            + self.normal.ln_density(z)?
            + self.k23.ln_value(y, z)?
            + self.k_yz.ln_value(z, y)?;
        Ok((1.0 - self.params.r()) * ln.exp())
    }

    pub fn f_z(&self, z: f64, form: MarginalForm) -> Result<f64> {
        self.marginal.density(z, form)
    }

    /// `f_CN(x|y,ρ12) f_CN(z|x,ρ13) / f_CN(z|y,ρ12ρ13)`. The common factor
    /// `f_N(z)` is cancelled before evaluation, so boundary values of z are
    /// handled by continuity.
    pub fn f_x_given_yz(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        let q = self.params.q;
        check_support("y", y, q)?;
        check_support("z", z, q)?;
        if !self.inside(x) {
            return Ok(0.0);
        }
        let ln_den = self.k_yz.ln_value(z, y)?;
        check_floor(ln_den)?;
        let ln = self.normal.ln_density(x)? + self.k12.ln_value(x, y)? + self.k13.ln_value(z, x)? - ln_den;
        Ok(ln.exp())
    }

    /// `f_CN(x|y,ρ12) f_CN(y|z,ρ23) f_CN(z|x,ρ13) / f_CN(x|x,r)`, with `f_N(x)`
    /// cancelled.
    pub fn f_yz_given_x(&self, y: f64, z: f64, x: f64) -> Result<f64> {
        check_support("x", x, self.params.q)?;
        if !(self.inside(y) && self.inside(z)) {
            return Ok(0.0);
        }
        let ln_den = self.k_r.ln_value(x, x)?;
        check_floor(ln_den)?;
        let ln = self.normal.ln_density(y)?
            + self.normal.ln_density(z)?
            + self.k12.ln_value(x, y)?
            + self.k23.ln_value(y, z)?
            + self.k13.ln_value(z, x)?
            - ln_den;
        Ok(ln.exp())
    }
}

fn check_floor(ln_value: f64) -> Result<()> {
    if ln_value < CONDITIONING_FLOOR.ln() {
        Err(Error::DegenerateConditioning {
            value: ln_value.exp(),
            floor: CONDITIONING_FLOOR,
        })
    } else {
        Ok(())
    }
}
