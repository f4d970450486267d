//! Seeded random variates from `f_N`, `f_CN` and the three-dimensional law,
//! and Monte Carlo estimation with batch-jackknife standard errors.
//!
//! One-dimensional laws are sampled by a tabulated inverse CDF on a grid
//! uniform in `θ`, where `x = L sin θ` and `L` is the half-width of S(q).
//! Cell masses use a fourth-order four-point rule, and the quantile
//! function is the monotone (Fritsch–Butland) cubic through the cumulative
//! table. The 3D sampler is a Gibbs chain whose full conditionals are
//! tabulated from precomputed kernel matrices.
//!
//! The generator is ChaCha20 seeded with `seed_from_u64`, so a seed yields
//! the same stream on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::densities::{Model, ModelParams, PmKernel, QNormal, CONDITIONING_FLOOR};
use crate::error::{Error, Result};
use crate::qcore::{check_corr, half_width, TruncationConfig};

pub const DEFAULT_GRID_POINTS: usize = 256;
pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_THIN: usize = 5;
/// Number of batches used for jackknife standard errors.
pub const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub grid_points: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_samples: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            burn_in: DEFAULT_BURN_IN,
            thin: DEFAULT_THIN,
            n_samples: 10_000,
        }
    }
}

impl SamplerConfig {
    pub fn new(seed: u64, n_samples: usize) -> Result<Self> {
        let cfg = SamplerConfig {
            seed,
            n_samples,
            ..SamplerConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 64 {
            return Err(Error::invalid(
                "grid_points",
                self.grid_points as f64,
                "must be at least 64",
            ));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", 0.0, "must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin", 0.0, "must be at least 1"));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Nodes `x_i = L sin θ_i` on a grid uniform in θ over `[-π/2, π/2]`, with the
/// Jacobian `L cos θ_i`.
#[derive(Debug, Clone)]
struct ThetaGrid {
    half_width: f64,
    h: f64,
    x: Vec<f64>,
    jac: Vec<f64>,
}

impl ThetaGrid {
    fn new(q: f64, points: usize) -> Self {
        let l = half_width(q);
        let h = std::f64::consts::PI / (points - 1) as f64;
        let (x, jac) = (0..points)
            .map(|i| {
                let t = -std::f64::consts::FRAC_PI_2 + i as f64 * h;
                ((l * t.sin()).clamp(-l, l), l * t.cos().max(0.0))
            })
            .unzip();
        ThetaGrid {
            half_width: l,
            h,
            x,
            jac,
        }
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    fn theta_of(&self, x: f64) -> f64 {
        (x / self.half_width).clamp(-1.0, 1.0).asin()
    }

    fn x_of(&self, theta: f64) -> f64 {
        (self.half_width * theta.sin()).clamp(-self.half_width, self.half_width)
    }

    /// First of four stencil nodes around `x` and the Lagrange weights.
    fn stencil(&self, x: f64) -> (usize, [f64; 4]) {
        let t = (self.theta_of(x) + std::f64::consts::FRAC_PI_2) / self.h;
        let n = self.len();
        let start = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let s = t - start as f64;
        let (a, b, c, d) = (s, s - 1.0, s - 2.0, s - 3.0);
        (
            start,
            [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0],
        )
    }
}

/// Cumulative table of a density sampled at grid nodes.
#[derive(Debug, Clone, Default)]
struct CdfTable {
    mass: Vec<f64>,
    cum: Vec<f64>,
}

impl CdfTable {
    /// `g` holds density times Jacobian at the nodes, spaced `h` apart in θ.
    fn fill(&mut self, g: &[f64], h: f64) -> Result<()> {
        let n = g.len();
        self.mass.clear();
        self.mass.reserve(n - 1);
        for k in 0..n - 1 {
            let m = if k == 0 {
                9.0 * g[0] + 19.0 * g[1] - 5.0 * g[2] + g[3]
            } else if k == n - 2 {
                9.0 * g[n - 1] + 19.0 * g[n - 2] - 5.0 * g[n - 3] + g[n - 4]
            } else {
                13.0 * (g[k] + g[k + 1]) - g[k - 1] - g[k + 2]
            };
            self.mass.push(m * h / 24.0);
        }
        let top = self.mass.iter().cloned().fold(0.0, f64::max);
        if !(top > CONDITIONING_FLOOR) {
            return Err(Error::DegenerateConditioning {
                value: top,
                floor: CONDITIONING_FLOOR,
            });
        }
        let tiny = top * 1e-14;
        self.cum.clear();
        self.cum.push(0.0);
        let mut acc = 0.0;
        for m in &mut self.mass {
            *m = m.max(tiny);
            acc += *m;
            self.cum.push(acc);
        }
        Ok(())
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    /// Node-wise slope of θ against cumulative mass, Fritsch–Butland form.
    fn slope(&self, k: usize, h: f64) -> f64 {
        let m = &self.mass;
        if k == 0 {
            return h / m[0];
        }
        if k == m.len() {
            return h / m[k - 1];
        }
        let (a, b) = (m[k - 1], m[k]);
        let (w1, w2) = (2.0 * b + a, b + 2.0 * a);
        h * (w1 + w2) / (w1 * a + w2 * b)
    }

    /// θ at cumulative fraction `u ∈ [0, 1)`, measured from `theta0`.
    fn quantile(&self, u: f64, theta0: f64, h: f64) -> f64 {
        let target = u * self.total();
        let k = self.cum.partition_point(|&c| c <= target).clamp(1, self.mass.len()) - 1;
        let m = self.mass[k];
        let t = ((target - self.cum[k]) / m).clamp(0.0, 1.0);
        let (d0, d1) = (self.slope(k, h) * m, self.slope(k + 1, h) * m);
        let (t2, t3) = (t * t, t * t * t);
        let th0 = theta0 + k as f64 * h;
        th0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + d0 * (t3 - 2.0 * t2 + t)
            + (th0 + h) * (3.0 * t2 - 2.0 * t3)
            + d1 * (t3 - t2)
    }
}

/// A fixed one-dimensional law tabulated for inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct TabulatedLaw {
    grid: ThetaGrid,
    table: CdfTable,
}

impl TabulatedLaw {
    /// Tabulates `density` on S(q) with `points` grid nodes.
    pub fn new<F>(density: F, q: f64, points: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if points < 64 {
            return Err(Error::invalid("grid_points", points as f64, "must be at least 64"));
        }
        let grid = ThetaGrid::new(q, points);
        let g = grid
            .x
            .iter()
            .zip(&grid.jac)
            .map(|(&x, &j)| Ok(density(x)? * j))
            .collect::<Result<Vec<f64>>>()?;
        let mut table = CdfTable::default();
        table.fill(&g, grid.h)?;
        Ok(TabulatedLaw { grid, table })
    }

    /// Quantile at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let th = self.table.quantile(u, -std::f64::consts::FRAC_PI_2, self.grid.h);
        self.grid.x_of(th)
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// I.i.d. draws from `f_N(·|q)`.
pub fn sample_fn(q: f64, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let normal = QNormal::new(q, &TruncationConfig::default())?;
    let law = TabulatedLaw::new(|x| normal.density(x), q, cfg.grid_points)?;
    let mut rng = cfg.rng();
    Ok((0..cfg.n_samples).map(|_| law.draw(&mut rng)).collect())
}

/// I.i.d. draws from `f_CN(·|y,ρ,q)`.
pub fn sample_fcn(y: f64, rho: f64, q: f64, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_corr("rho", rho)?;
    let l = half_width(q);
    if y.abs() > l {
        return Err(Error::Domain {
            name: "y",
            value: y,
            bound: l,
        });
    }
    let tcfg = TruncationConfig::default();
    let normal = QNormal::new(q, &tcfg)?;
    let kernel = PmKernel::new(rho, q, &tcfg)?;
    let law = TabulatedLaw::new(|x| Ok(normal.density(x)? * kernel.product(x, y)?), q, cfg.grid_points)?;
    let mut rng = cfg.rng();
    Ok((0..cfg.n_samples).map(|_| law.draw(&mut rng)).collect())
}

/// Kernel values on all node pairs, row `j` holding `K(x_i, x_j)` over i.
struct KernelTable {
    n: usize,
    values: Vec<f64>,
}

impl KernelTable {
    fn new(kernel: &PmKernel, grid: &ThetaGrid) -> Result<Self> {
        let n = grid.len();
        let mut values = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..=j {
                let v = kernel.product(grid.x[i], grid.x[j])?;
                values[j * n + i] = v;
                values[i * n + j] = v;
            }
        }
        Ok(KernelTable { n, values })
    }

    /// Multiplies `out[i]` by `K(x_i, v)`, interpolated in the θ of `v`.
    fn apply(&self, grid: &ThetaGrid, v: f64, out: &mut [f64]) {
        let (s, w) = grid.stencil(v);
        let n = self.n;
        let rows = [
            &self.values[s * n..(s + 1) * n],
            &self.values[(s + 1) * n..(s + 2) * n],
            &self.values[(s + 2) * n..(s + 3) * n],
            &self.values[(s + 3) * n..(s + 4) * n],
        ];
        for (i, o) in out.iter_mut().enumerate() {
            let k = w[0] * rows[0][i] + w[1] * rows[1][i] + w[2] * rows[2][i] + w[3] * rows[3][i];
            *o *= k.max(0.0);
        }
    }
}

/// Gibbs chain on `(X, Y, Z)` cycling through the three full conditionals,
/// each proportional to `f_N` times two Poisson–Mehler kernels.
pub fn sample_3d(p: &ModelParams, cfg: &SamplerConfig) -> Result<Vec<[f64; 3]>> {
    cfg.validate()?;
    let model = Model::new(*p, &TruncationConfig::default())?;
    let grid = ThetaGrid::new(p.q, cfg.grid_points);
    let base = grid
        .x
        .iter()
        .zip(&grid.jac)
        .map(|(&x, &j)| Ok(model.normal().density(x)? * j))
        .collect::<Result<Vec<f64>>>()?;
    let [k12, k13, k23] = model.kernels();
    let (t12, t13, t23) = (
        KernelTable::new(k12, &grid)?,
        KernelTable::new(k13, &grid)?,
        KernelTable::new(k23, &grid)?,
    );
    let mut rng = cfg.rng();
    let mut g = vec![0.0; grid.len()];
    let mut table = CdfTable::default();
    let theta0 = -std::f64::consts::FRAC_PI_2;
    let mut update = |a: (&KernelTable, f64), b: (&KernelTable, f64), rng: &mut ChaCha20Rng| -> Result<f64> {
        g.copy_from_slice(&base);
        a.0.apply(&grid, a.1, &mut g);
        b.0.apply(&grid, b.1, &mut g);
        table.fill(&g, grid.h)?;
        Ok(grid.x_of(table.quantile(rng.random::<f64>(), theta0, grid.h)))
    };
    let (mut y, mut z) = (0.0, 0.0);
    let mut out = Vec::with_capacity(cfg.n_samples);
    let sweeps = cfg.burn_in + cfg.n_samples * cfg.thin;
    for s in 1..=sweeps {
        let x = update((&t12, y), (&t13, z), &mut rng)?;
        y = update((&t12, x), (&t23, z), &mut rng)?;
        z = update((&t13, x), (&t23, y), &mut rng)?;
        if s > cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0 {
            out.push([x, y, z]);
        }
    }
    Ok(out)
}

/// Sample mean of `g` with a 20-batch jackknife standard error. Requires at
/// least `20 · DEFAULT_THIN` draws.
pub fn mc_moment<T: Copy, G: Fn(T) -> f64>(samples: &[T], g: G) -> Result<McEstimate> {
    mc_statistic(samples, |s| [g(s)], |m| m[0])
}

/// A smooth function of sample means, `combine(mean of features)`, with a
/// 20-batch jackknife standard error.
pub fn mc_statistic<T, F, C, const K: usize>(samples: &[T], features: F, combine: C) -> Result<McEstimate>
where
    T: Copy,
    F: Fn(T) -> [f64; K],
    C: Fn(&[f64; K]) -> f64,
{
    let needed = BATCHES * DEFAULT_THIN;
    if samples.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: samples.len(),
        });
    }
    let n = samples.len();
    let size = n / BATCHES;
    let mut batch = [[0.0; K]; BATCHES];
    let mut total = [0.0; K];
    for (i, &s) in samples.iter().enumerate() {
        let f = features(s);
        let b = (i / size).min(BATCHES - 1);
        for k in 0..K {
            batch[b][k] += f[k];
            total[k] += f[k];
        }
    }
    let full = total.map(|t| t / n as f64);
    let counts: Vec<usize> = (0..BATCHES)
        .map(|b| {
            if b == BATCHES - 1 {
                n - size * (BATCHES - 1)
            } else {
                size
            }
        })
        .collect();
    let loo: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let m = n - counts[b];
            let mut mean = [0.0; K];
            for k in 0..K {
                mean[k] = (total[k] - batch[b][k]) / m as f64;
            }
            combine(&mean)
        })
        .collect();
    let avg = loo.iter().sum::<f64>() / BATCHES as f64;
    let var = loo.iter().map(|v| (v - avg).powi(2)).sum::<f64>() * (BATCHES - 1) as f64 / BATCHES as f64;
    Ok(McEstimate {
        value: combine(&full),
        std_error: var.sqrt(),
        n,
    })
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Asymptotic 1% critical value of the one-sample KS distance.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}
