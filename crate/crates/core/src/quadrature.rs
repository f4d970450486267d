//! Composite Gauss–Legendre quadrature over `S(q)^d`, d = 1, 2, 3.
//!
//! Each axis is mapped by `x = L sin θ`, `L = 2/sqrt(1-q)`, which absorbs the
//! square-root edge of the q-Normal family, and `[-π/2, π/2]` is split into
//! equal panels carrying a fixed order-32 rule. Panels are doubled until two
//! successive levels agree. Outer-axis work runs on a rayon pool whose size
//! is read once from `QNORMAL3D_THREADS`; partial sums are always combined
//! in index order, so results do not depend on the thread count.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use crate::densities::{PmKernel, QNormal, RogersDensity};
use crate::error::{Error, Result};
use crate::polynomials::Family;
use crate::qcore::{check_q, half_width, TruncationConfig};

/// Nodes per panel.
pub const PANEL_ORDER: usize = 32;

/// Environment variable holding the worker-thread count (0 or unset: one
/// per core).
pub const THREADS_ENV: &str = "QNORMAL3D_THREADS";

/// Highest polynomial degree accepted by [`gram_matrix`] by default.
pub const DEGREE_CAP: u32 = 12;

fn reference_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let order = NonZeroUsize::new(PANEL_ORDER).expect("nonzero order");
        GaussLegendre::new(order).as_node_weight_pairs().to_vec()
    })
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
    })
}

/// Runs `f` on the crate's worker pool.
pub fn install<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    pool().install(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Substitution {
    /// Panels laid directly on `[-L, L]`.
    None,
    /// `x = L sin θ` with panels on `θ ∈ [-π/2, π/2]`.
    #[default]
    TrigEdge,
}

/// Tolerance and refinement limits for panel doubling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Stop once `|I(2P) - I(P)| <= tol * max(1, |I(2P)|)`.
    pub tol: f64,
    pub min_panels: usize,
    pub max_panels: usize,
    pub substitution: Substitution,
    pub degree_cap: u32,
}

impl QuadratureConfig {
    /// Defaults for a `dimension`-dimensional integral: tolerance 1e-10,
    /// 1e-8 and 1e-6 for one, two and three dimensions.
    pub fn for_dimension(dimension: usize) -> Self {
        let (tol, max_panels) = match dimension {
            1 => (1e-10, 1024),
            2 => (1e-8, 64),
            _ => (1e-6, 8),
        };
        QuadratureConfig {
            tol,
            min_panels: 1,
            max_panels,
            substitution: Substitution::TrigEdge,
            degree_cap: DEGREE_CAP,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", self.tol, "must be positive"));
        }
        if self.min_panels == 0 || self.max_panels < self.min_panels {
            return Err(Error::invalid(
                "max_panels",
                self.max_panels as f64,
                "need 1 <= min_panels <= max_panels",
            ));
        }
        Ok(())
    }
}

/// A tensor-product rule on `S(q)^dimension`. Weights include the Jacobian
/// of the substitution, so they sum to the volume `(2L)^dimension`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub dimension: usize,
    pub substitution: Substitution,
    pub panels: usize,
    pub half_width: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(dimension: usize, q: f64, panels: usize, substitution: Substitution) -> Result<Self> {
        check_q(q)?;
        if !(1..=3).contains(&dimension) {
            return Err(Error::invalid("dimension", dimension as f64, "must be 1, 2 or 3"));
        }
        if panels == 0 {
            return Err(Error::invalid("panels", 0.0, "must be at least 1"));
        }
        let l = half_width(q);
        let (lo, hi) = match substitution {
            Substitution::TrigEdge => (-FRAC_PI_2, FRAC_PI_2),
            Substitution::None => (-l, l),
        };
        let h = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            for &(t, w) in reference_rule() {
                let u = mid + 0.5 * h * t;
                let wu = 0.5 * h * w;
                match substitution {
                    Substitution::TrigEdge => {
                        nodes.push(l * u.sin());
                        weights.push(wu * l * u.cos());
                    }
                    Substitution::None => {
                        nodes.push(u);
                        weights.push(wu);
                    }
                }
            }
        }
        Ok(QuadratureGrid {
            dimension,
            substitution,
            panels,
            half_width: l,
            nodes,
            weights,
        })
    }

    /// Nodes along one axis, in increasing order.
    pub fn axis_nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn axis_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of tensor points.
    pub fn len(&self) -> usize {
        self.nodes.len().pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Tensor points `(point, weight)`; unused coordinates are zero.
    pub fn points(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        let n = self.nodes.len();
        (0..self.len()).map(move |mut i| {
            let mut point = [0.0; 3];
            let mut weight = 1.0;
            for slot in point.iter_mut().take(self.dimension) {
                *slot = self.nodes[i % n];
                weight *= self.weights[i % n];
                i /= n;
            }
            (point, weight)
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>().powi(self.dimension as i32)
    }
}

/// Value of an integral and the difference between the last two levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels_used: usize,
}

/// Several integrals refined together on shared grids.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIntegral {
    pub values: Vec<f64>,
    pub error_estimates: Vec<f64>,
    pub panels_used: usize,
}

/// Panel doubling around a caller-supplied grid evaluation. `eval` receives
/// successively finer grids and returns one value per integral.
pub fn integrate_vec_with<F>(dimension: usize, q: f64, cfg: &QuadratureConfig, mut eval: F) -> Result<VectorIntegral>
where
    F: FnMut(&QuadratureGrid) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let mut panels = cfg.min_panels;
    let mut prev = eval(&QuadratureGrid::new(dimension, q, panels, cfg.substitution)?)?;
    loop {
        let next = panels * 2;
        if next > cfg.max_panels {
            return Err(Error::NonConvergence {
                what: "quadrature panel doubling",
                terms: panels,
            });
        }
        let cur = eval(&QuadratureGrid::new(dimension, q, next, cfg.substitution)?)?;
        let errors: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).collect();
        let done = cur.iter().zip(&errors).all(|(v, e)| *e <= cfg.tol * v.abs().max(1.0));
        if done {
            return Ok(VectorIntegral {
                values: cur,
                error_estimates: errors,
                panels_used: next,
            });
        }
        prev = cur;
        panels = next;
    }
}

/// Scalar form of [`integrate_vec_with`].
pub fn integrate_with<F>(dimension: usize, q: f64, cfg: &QuadratureConfig, mut eval: F) -> Result<IntegralResult>
where
    F: FnMut(&QuadratureGrid) -> Result<f64>,
{
    let v = integrate_vec_with(dimension, q, cfg, |g| Ok(vec![eval(g)?]))?;
    Ok(IntegralResult {
        value: v.values[0],
        error_estimate: v.error_estimates[0],
        panels_used: v.panels_used,
    })
}

/// `∫_{S(q)} f`.
pub fn integrate1d<F>(f: F, q: f64, cfg: &QuadratureConfig) -> Result<IntegralResult>
where
    F: Fn(f64) -> Result<f64>,
{
    integrate_with(1, q, cfg, |g| {
        let mut sum = 0.0;
        for (&x, &w) in g.axis_nodes().iter().zip(g.axis_weights()) {
            sum += w * f(x)?;
        }
        Ok(sum)
    })
}

/// `∫∫_{S(q)²} f`.
pub fn integrate2d<F>(f: F, q: f64, cfg: &QuadratureConfig) -> Result<IntegralResult>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    integrate_with(2, q, cfg, |g| {
        let (nodes, weights) = (g.axis_nodes(), g.axis_weights());
        let rows: Result<Vec<f64>> = install(|| {
            (0..nodes.len())
                .into_par_iter()
                .map(|i| {
                    let mut sum = 0.0;
                    for (&y, &wy) in nodes.iter().zip(weights) {
                        sum += wy * f(nodes[i], y)?;
                    }
                    Ok(weights[i] * sum)
                })
                .collect()
        });
        Ok(rows?.iter().sum())
    })
}

/// `∫∫∫_{S(q)³} f`.
pub fn integrate3d<F>(f: F, q: f64, cfg: &QuadratureConfig) -> Result<IntegralResult>
where
    F: Fn(f64, f64, f64) -> Result<f64> + Sync,
{
    integrate_with(3, q, cfg, |g| {
        let (nodes, weights) = (g.axis_nodes(), g.axis_weights());
        let slabs: Result<Vec<f64>> = install(|| {
            (0..nodes.len())
                .into_par_iter()
                .map(|i| {
                    let mut outer = 0.0;
                    for (&y, &wy) in nodes.iter().zip(weights) {
                        let mut inner = 0.0;
                        for (&z, &wz) in nodes.iter().zip(weights) {
                            inner += wz * f(nodes[i], y, z)?;
                        }
                        outer += wy * inner;
                    }
                    Ok(weights[i] * outer)
                })
                .collect()
        });
        Ok(slabs?.iter().sum())
    })
}

/// Orthogonality weight for [`gram_matrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// `f_N(x|q)`
    QNormal,
    /// `f_CN(x|y,ρ,q)`
    ConditionalNormal { y: f64, rho: f64 },
    /// `f_R(x|β,q)`
    Rogers { beta: f64 },
}

enum WeightEval {
    Normal(QNormal),
    Conditional(QNormal, PmKernel, f64),
    Rogers(RogersDensity),
}

impl WeightEval {
    fn new(weight: Weight, q: f64, cfg: &TruncationConfig) -> Result<Self> {
        Ok(match weight {
            Weight::QNormal => WeightEval::Normal(QNormal::new(q, cfg)?),
            Weight::ConditionalNormal { y, rho } => {
                let normal = QNormal::new(q, cfg)?;
                if !(y.abs() <= normal.half_width()) {
                    return Err(Error::Domain {
                        name: "y",
                        value: y,
                        bound: normal.half_width(),
                    });
                }
                WeightEval::Conditional(normal, PmKernel::new(rho, q, cfg)?, y)
            }
            Weight::Rogers { beta } => WeightEval::Rogers(RogersDensity::new(beta, q, cfg)?),
        })
    }

    fn eval(&self, x: f64) -> Result<f64> {
        match self {
            WeightEval::Normal(n) => n.density(x),
            WeightEval::Conditional(n, k, y) => Ok((n.ln_density(x)? + k.ln_value(x, *y)?).exp()),
            WeightEval::Rogers(r) => r.density(x),
        }
    }
}

/// The matrix `G_ij = ∫ p_i p_j w`, `0 <= i, j <= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub n_max: u32,
    entries: Vec<f64>,
    pub panels_used: usize,
    /// Largest two-level difference over all entries.
    pub error_estimate: f64,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.n_max as usize + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.get(i, i)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.size())
    }

    pub fn max_abs_off_diagonal(&self) -> f64 {
        self.off_diagonal().map(|(_, _, v)| v.abs()).fold(0.0, f64::max)
    }

    /// `max |G_ij| / sqrt(G_ii G_jj)` over `i != j`.
    pub fn max_normalized_off_diagonal(&self) -> f64 {
        self.off_diagonal()
            .map(|(i, j, v)| v.abs() / (self.get(i, i) * self.get(j, j)).abs().sqrt())
            .fold(0.0, f64::max)
    }

    fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.size();
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, self.get(i, j))))
    }
}

/// Gram matrix of `family` under `weight`, computed on shared quadrature
/// grids and symmetrised by construction.
pub fn gram_matrix(
    family: Family,
    weight: Weight,
    n_max: u32,
    q: f64,
    qcfg: &QuadratureConfig,
    tcfg: &TruncationConfig,
) -> Result<GramMatrix> {
    if n_max > qcfg.degree_cap {
        return Err(Error::invalid("n_max", f64::from(n_max), "exceeds the degree cap"));
    }
    let w = WeightEval::new(weight, q, tcfg)?;
    let n = n_max as usize + 1;
    let result = integrate_vec_with(1, q, qcfg, |g| {
        let mut upper = vec![0.0; n * (n + 1) / 2];
        for (&x, &wx) in g.axis_nodes().iter().zip(g.axis_weights()) {
            let dens = wx * w.eval(x)?;
            let p = family.evaluate(n_max, x)?;
            let mut k = 0;
            for i in 0..n {
                let pi = dens * p[i];
                for j in i..n {
                    upper[k] += pi * p[j];
                    k += 1;
                }
            }
        }
        Ok(upper)
    })?;
    let mut entries = vec![0.0; n * n];
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            entries[i * n + j] = result.values[k];
            entries[j * n + i] = result.values[k];
            k += 1;
        }
    }
    Ok(GramMatrix {
        n_max,
        entries,
        panels_used: result.panels_used,
        error_estimate: result.error_estimates.iter().copied().fold(0.0, f64::max),
    })
}

/// Cumulative distribution of a density on S(q), tabulated at equally spaced
/// θ breakpoints and interpolated by cubic Hermite polynomials in θ using the
/// density itself as the derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureCdf {
    half_width: f64,
    step: f64,
    cumulative: Vec<f64>,
    slopes: Vec<f64>,
}

impl QuadratureCdf {
    pub fn new<F>(density: F, q: f64, panels: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        check_q(q)?;
        if panels == 0 {
            return Err(Error::invalid("panels", 0.0, "must be at least 1"));
        }
        let l = half_width(q);
        let step = 2.0 * FRAC_PI_2 / panels as f64;
        let g = |t: f64| -> Result<f64> { Ok(density(l * t.sin())? * l * t.cos()) };
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut slopes = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        slopes.push(0.0);
        for p in 0..panels {
            let mid = -FRAC_PI_2 + (p as f64 + 0.5) * step;
            for &(t, w) in reference_rule() {
                acc += 0.5 * step * w * g(mid + 0.5 * step * t)?;
            }
            cumulative.push(acc);
            slopes.push(if p + 1 == panels {
                0.0
            } else {
                g(-FRAC_PI_2 + (p + 1) as f64 * step)?
            });
        }
        Ok(QuadratureCdf {
            half_width: l,
            step,
            cumulative,
            slopes,
        })
    }

    /// The integral of the density over S(q).
    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("at least one panel")
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= -self.half_width {
            return 0.0;
        }
        if x >= self.half_width {
            return self.total();
        }
        let theta = (x / self.half_width).asin() + FRAC_PI_2;
        let k = ((theta / self.step) as usize).min(self.cumulative.len() - 2);
        let t = theta / self.step - k as f64;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.cumulative[k]
            + h10 * self.step * self.slopes[k]
            + h01 * self.cumulative[k + 1]
            + h11 * self.step * self.slopes[k + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::f_n;
    use crate::polynomials::q_hermite;
    use crate::qcore::q_factorial;
    use std::f64::consts::PI;

    fn tcfg() -> TruncationConfig {
        TruncationConfig::default()
    }

    #[test]
    fn grid_invariants() {
        for &q in &[-0.5, 0.0, 0.75] {
            for dim in 1..=3 {
                for sub in [Substitution::None, Substitution::TrigEdge] {
                    let g = QuadratureGrid::new(dim, q, 2, sub).unwrap();
                    assert!(g.axis_weights().iter().all(|&w| w > 0.0));
                    let volume = (2.0 * half_width(q)).powi(dim as i32);
                    assert!((g.total_weight() - volume).abs() < 1e-12 * volume);
                    assert_eq!(g.points().count(), g.len());
                    let sum: f64 = g.points().map(|(_, w)| w).sum();
                    assert!((sum - volume).abs() < 1e-11 * volume);
                }
            }
        }
        assert!(QuadratureGrid::new(4, 0.0, 1, Substitution::None).is_err());
    }

    #[test]
    fn constant_integrands() {
        let c1 = QuadratureConfig::for_dimension(1);
        let v = integrate1d(|_| Ok(1.0), 0.0, &c1).unwrap();
        assert!((v.value - 4.0).abs() < 1e-12);
        let c2 = QuadratureConfig::for_dimension(2);
        let v = integrate2d(|_, _| Ok(1.0), 0.0, &c2).unwrap();
        assert!((v.value - 16.0).abs() < 1e-11);
        let c3 = QuadratureConfig::for_dimension(3);
        let v = integrate3d(|_, _, _| Ok(1.0), 0.0, &c3).unwrap();
        assert!((v.value - 64.0).abs() < 1e-10);
        assert!(v.error_estimate >= 0.0);
    }

    #[test]
    fn trig_edge_resolves_square_root() {
        let g = QuadratureGrid::new(1, 0.0, 2, Substitution::TrigEdge).unwrap();
        assert!(g.axis_nodes().len() <= 64);
        let sum: f64 = g
            .axis_nodes()
            .iter()
            .zip(g.axis_weights())
            .map(|(&x, &w)| w * (4.0 - x * x).max(0.0).sqrt())
            .sum();
        assert!((sum - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn density_integrals() {
        let c1 = QuadratureConfig::for_dimension(1);
        let v = integrate1d(|x| f_n(x, 0.0, &tcfg()), 0.0, &c1).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10);
        let v = integrate1d(
            |x| Ok(q_hermite(2, x, 0.5)[2].powi(2) * f_n(x, 0.5, &tcfg())?),
            0.5,
            &c1,
        )
        .unwrap();
        assert!((v.value - 1.5).abs() < 1e-10);
    }

    #[test]
    fn gram_examples() {
        let c1 = QuadratureConfig::for_dimension(1);
        let g = gram_matrix(Family::QHermite { q: 0.5 }, Weight::QNormal, 4, 0.5, &c1, &tcfg()).unwrap();
        let expected = [1.0, 1.0, 1.5, 2.625, 4.921875];
        for (d, e) in g.diagonal().iter().zip(expected) {
            assert!((d - e).abs() < 1e-10 * e);
        }
        for i in 0..=4 {
            assert!((g.get(i, i) - q_factorial(i as u32, 0.5)).abs() < 1e-10);
            for j in 0..=4 {
                assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
        assert!(g.max_abs_off_diagonal() < 1e-10);

        let family = Family::AlSalamChihara {
            y: 1.0,
            rho: 0.5,
            q: 0.3,
        };
        let weight = Weight::ConditionalNormal { y: 1.0, rho: 0.5 };
        let g = gram_matrix(family, weight, 2, 0.3, &c1, &tcfg()).unwrap();
        let target = (1.0 - 0.25) * (1.0 - 0.25 * 0.3) * 1.3;
        assert!((g.get(2, 2) - target).abs() < 1e-10);

        let family = Family::RogersMonic { beta: 0.5, q: 0.5 };
        let g = gram_matrix(family, Weight::Rogers { beta: 0.5 }, 1, 0.5, &c1, &tcfg()).unwrap();
        assert!((g.get(1, 1) - 2.0).abs() < 1e-10);

        assert!(gram_matrix(Family::QHermite { q: 0.5 }, Weight::QNormal, 13, 0.5, &c1, &tcfg()).is_err());
    }

    #[test]
    fn cdf_of_semicircle() {
        let cdf = QuadratureCdf::new(|x| f_n(x, 0.0, &tcfg()), 0.0, 1024).unwrap();
        assert!((cdf.total() - 1.0).abs() < 1e-12);
        for &x in &[-1.9f64, -1.0, -0.3, 0.0, 0.5, 1.7] {
            // Closed form of the semicircle CDF.
            let exact = 0.5 + (x * (4.0 - x * x).sqrt() / 4.0 + (x / 2.0f64).asin()) / PI;
            assert!((cdf.cdf(x) - exact).abs() < 1e-10, "{x} {} {exact}", cdf.cdf(x));
        }
        assert_eq!(cdf.cdf(-3.0), 0.0);
        assert_eq!(cdf.cdf(3.0), cdf.total());
    }

    #[test]
    fn non_convergence_is_reported() {
        let cfg = QuadratureConfig {
            tol: 1e-300,
            min_panels: 1,
            max_panels: 4,
            ..QuadratureConfig::for_dimension(1)
        };
        let r = integrate1d(|x| Ok((50.0 * x).sin().abs()), 0.0, &cfg);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }
}
