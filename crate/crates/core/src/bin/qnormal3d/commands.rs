//! One function per subcommand, each building a [`Table`].

use qnormal3d::densities::{forms_agree, Marginal, PmKernel, QNormal, RogersDensity, FORM_TOL};
use qnormal3d::moments::{
    cond_exp_hn_x_given_yz, cond_exp_hn_y_given_z, cov_yz, e_h2n_z, var_z, CondXForm, CondYForm, MomentKind, MomentSpec,
};
use qnormal3d::polynomials::{q_hermite, Family};
use qnormal3d::quadrature::{
    gram_matrix, install, integrate1d, integrate2d, QuadratureCdf, QuadratureConfig, Weight, PANEL_ORDER, THREADS_ENV,
};
use qnormal3d::sampler::{
    ks_critical_1pct, ks_statistic, mc_moment, mc_statistic, sample_3d, sample_fcn, sample_fn, McEstimate,
    SamplerConfig,
};
use qnormal3d::verify::{self, all_pass, limit_series, run_suite, Suite, VerifyConfig};
use qnormal3d::{DensityForm, Error, MarginalForm, Model, ModelParams, TruncationConfig};

use crate::table::{Cell, Table};
use crate::{Command, DensityName, Failure, GramFamily, Law, MomentName, RunConfig};

const DEFAULT_GRID_COUNT: usize = 101;
/// Panels of the tabulated CDFs used for KS statistics.
const CDF_PANELS: usize = 256;

pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    let table = install(|| build(cfg))?;
    table.write_to(cfg.common.format, cfg.common.output.as_deref())?;
    match &cfg.command {
        Command::Check { .. } if !table_passes(&table) => Err(Failure::Identities),
        _ => Ok(()),
    }
}

fn build(cfg: &RunConfig) -> Result<Table, Failure> {
    let tcfg = cfg.common.truncation()?;
    match &cfg.command {
        Command::Eval {
            density,
            grid,
            form,
            x,
            y,
            z,
            corr,
            beta,
        } => {
            let p = cfg.common.params()?;
            let fixed = Fixed {
                x: *x,
                y: *y,
                z: *z,
                corr: corr.unwrap_or(p.rho12),
                beta: beta.unwrap_or(p.r()),
            };
            eval(*density, grid.as_deref(), form.as_deref(), &fixed, &p, &tcfg).map(|t| finish(t, cfg, &p, "eval"))
        }
        Command::Check { suite, seed } => check(cfg, suite, *seed, tcfg),
        Command::Moments { kind, n, m, r, y, z } => {
            let p = cfg.common.params()?;
            let t = moments(*kind, *n, *m, r.unwrap_or(p.r()), *y, *z, &p, &tcfg)?;
            Ok(finish(t, cfg, &p, "moments"))
        }
        Command::Gram {
            family,
            nmax,
            y,
            corr,
            beta,
        } => {
            let p = cfg.common.params()?;
            let t = gram(
                *family,
                *nmax,
                *y,
                corr.unwrap_or(p.rho12),
                beta.unwrap_or(p.r()),
                p.q,
                &tcfg,
            )?;
            Ok(finish(t, cfg, &p, "gram"))
        }
        Command::Sample {
            n,
            seed,
            law,
            burn_in,
            thin,
            grid_points,
            y,
            corr,
            summary,
        } => {
            let p = cfg.common.params()?;
            let scfg = SamplerConfig {
                seed: *seed,
                grid_points: *grid_points,
                burn_in: *burn_in,
                thin: *thin,
                n_samples: *n,
            };
            scfg.validate()?;
            let t = sample(*law, &scfg, *y, corr.unwrap_or(p.rho12), *summary, &p, &tcfg)?;
            let mut t = finish(t, cfg, &p, "sample");
            t.meta("seed", scfg.seed);
            t.meta("burn_in", scfg.burn_in);
            t.meta("thin", scfg.thin);
            t.meta("grid_points", scfg.grid_points);
            t.meta("rng", "ChaCha20");
            Ok(t)
        }
        Command::Limits { qs } => {
            let p = cfg.common.params()?;
            let mut t = Table::new(["quantity", "q", "error", "strictly_decreasing"]);
            for s in limit_series(&p, qs, &tcfg)? {
                let dec = s.strictly_decreasing();
                for (&q, &e) in qs.iter().zip(&s.errors) {
                    t.push(vec![s.name.into(), q.into(), e.into(), dec.into()]);
                }
            }
            let mut t = finish(t, cfg, &p, "limits");
            t.meta("qs", join(qs));
            Ok(t)
        }
    }
}

/// Adds the metadata every table carries.
fn finish(mut t: Table, cfg: &RunConfig, p: &ModelParams, command: &str) -> Table {
    let mut head = Table::default();
    head.meta("command", command);
    head.meta("version", env!("CARGO_PKG_VERSION"));
    head.meta("rho12", p.rho12);
    head.meta("rho13", p.rho13);
    head.meta("rho23", p.rho23);
    head.meta("q", p.q);
    head.meta("r", p.r());
    common_meta(&mut head, cfg);
    head.metadata.append(&mut t.metadata);
    t.metadata = head.metadata;
    t
}

fn common_meta(t: &mut Table, cfg: &RunConfig) {
    t.meta("max_terms", cfg.common.max_terms);
    t.meta("tail_tol", format!("{:e}", cfg.common.tail_tol));
    t.meta("product_tol", format!("{:e}", cfg.common.product_tol));
    let [c1, c2, c3] = [1, 2, 3].map(QuadratureConfig::for_dimension);
    t.meta(
        "quadrature",
        format!(
            "order-{PANEL_ORDER} Gauss-Legendre panels in theta, x = L sin(theta); tol {:e}/{:e}/{:e}, max panels {}/{}/{} for 1D/2D/3D",
            c1.tol, c2.tol, c3.tol, c1.max_panels, c2.max_panels, c3.max_panels
        ),
    );
    t.meta("form_tol", format!("{FORM_TOL:e}"));
    if let Ok(v) = std::env::var(THREADS_ENV) {
        t.meta("threads", v);
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// `start:stop:count`, endpoints included.
fn parse_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || usage(format!("grid {s:?} is not start:stop:count"));
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    Ok(linspace(a, b, n))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Density at a grid value for a named representation.
type Evaluator = Box<dyn Fn(f64, &str) -> Result<f64, Error>>;

struct Fixed {
    x: f64,
    y: f64,
    z: f64,
    corr: f64,
    beta: f64,
}

/// Representations available for a density; empty when it has only one.
fn form_names(density: DensityName) -> Vec<&'static str> {
    match density {
        DensityName::F3D | DensityName::PmKernel => {
            let all: &[DensityForm] = if density == DensityName::F3D {
                &DensityForm::ALL
            } else {
                &[DensityForm::Product, DensityForm::Series]
            };
            all.iter().map(|f| f.name()).collect()
        }
        DensityName::FZ => MarginalForm::ALL.iter().map(|f| f.name()).collect(),
        _ => Vec::new(),
    }
}

fn density_form(name: &str) -> DensityForm {
    DensityForm::ALL
        .into_iter()
        .find(|f| f.name() == name)
        .unwrap_or_default()
}

fn marginal_form(name: &str) -> MarginalForm {
    MarginalForm::ALL
        .into_iter()
        .find(|f| f.name() == name)
        .unwrap_or_default()
}

fn eval(
    density: DensityName,
    grid: Option<&str>,
    form: Option<&str>,
    fx: &Fixed,
    p: &ModelParams,
    tcfg: &TruncationConfig,
) -> Result<Table, Failure> {
    let available = form_names(density);
    let forms: Vec<&str> = match form {
        None => available.first().copied().into_iter().collect(),
        Some("all") => available.clone(),
        Some(f) if available.contains(&f) => vec![available[available.iter().position(|a| *a == f).unwrap_or(0)]],
        Some(f) => {
            return Err(usage(if available.is_empty() {
                format!("{f:?}: this density has a single representation")
            } else {
                format!("{f:?}: expected one of {} or all", available.join(", "))
            }))
        }
    };
    let l = p.support().bounds().1;
    let points = match grid {
        Some(g) => parse_grid(g)?,
        None => linspace(-l, l, DEFAULT_GRID_COUNT),
    };
    let q = p.q;

    // Leading variable name, the fixed coordinates shown, and an evaluator
    // from (grid value, form name) to the density.
    let (lead, fixed_cols, f): (&str, Vec<(&str, f64)>, Evaluator) = match density {
        DensityName::FN => {
            let n = QNormal::new(q, tcfg)?;
            ("x", vec![], Box::new(move |x, _| n.density(x)))
        }
        DensityName::FCN => {
            let n = QNormal::new(q, tcfg)?;
            let k = PmKernel::new(fx.corr, q, tcfg)?;
            check_inside("y", fx.y, l)?;
            let y = fx.y;
            (
                "x",
                vec![("y", y)],
                Box::new(move |x, _| {
                    if x.abs() > l {
                        return Ok(0.0);
                    }
                    Ok((n.ln_density(x)? + k.ln_value(x, y)?).exp())
                }),
            )
        }
        DensityName::FR => {
            let r = RogersDensity::new(fx.beta, q, tcfg)?;
            ("x", vec![], Box::new(move |x, _| r.density(x)))
        }
        DensityName::PmKernel => {
            let k = PmKernel::new(fx.corr, q, tcfg)?;
            let y = fx.y;
            (
                "x",
                vec![("y", y)],
                Box::new(move |x, f| k.evaluate(x, y, density_form(f))),
            )
        }
        DensityName::F3D => {
            let m = Model::new(*p, tcfg)?;
            let (y, z) = (fx.y, fx.z);
            (
                "x",
                vec![("y", y), ("z", z)],
                Box::new(move |x, f| m.f_3d(x, y, z, density_form(f))),
            )
        }
        DensityName::FYZ => {
            let m = Model::new(*p, tcfg)?;
            let z = fx.z;
            ("y", vec![("z", z)], Box::new(move |y, _| m.f_yz(y, z)))
        }
        DensityName::FZ => {
            let m = Marginal::new(p.r(), q, tcfg)?;
            ("z", vec![], Box::new(move |z, f| m.density(z, marginal_form(f))))
        }
        DensityName::FXgYZ => {
            let m = Model::new(*p, tcfg)?;
            let (y, z) = (fx.y, fx.z);
            (
                "x",
                vec![("y", y), ("z", z)],
                Box::new(move |x, _| m.f_x_given_yz(x, y, z)),
            )
        }
        DensityName::FYZgX => {
            let m = Model::new(*p, tcfg)?;
            let (z, x) = (fx.z, fx.x);
            (
                "y",
                vec![("z", z), ("x", x)],
                Box::new(move |y, _| m.f_yz_given_x(y, z, x)),
            )
        }
    };

    let mut columns: Vec<String> = vec![lead.to_string()];
    columns.extend(fixed_cols.iter().map(|(n, _)| n.to_string()));
    let many = forms.len() > 1;
    if many {
        columns.extend(forms.iter().map(|f| f.to_string()));
        columns.push("forms_agree".into());
    } else {
        columns.push("value".into());
    }
    let mut t = Table::new(columns);
    for &v in &points {
        let mut row: Vec<Cell> = vec![v.into()];
        row.extend(fixed_cols.iter().map(|(_, c)| Cell::from(*c)));
        let vals = if forms.is_empty() {
            vec![f(v, "")?]
        } else {
            forms.iter().map(|name| f(v, name)).collect::<Result<Vec<_>, _>>()?
        };
        let agree = vals.iter().all(|&a| forms_agree(a, vals[0]));
        row.extend(vals.into_iter().map(Cell::from));
        if many {
            row.push(agree.into());
        }
        t.push(row);
    }
    t.meta("density", density_label(density));
    if let Some(fm) = forms.first().filter(|_| !many) {
        t.meta("form", fm);
    }
    match density {
        DensityName::FCN | DensityName::PmKernel => t.meta("corr", fx.corr),
        DensityName::FR => t.meta("beta", fx.beta),
        _ => {}
    }
    Ok(t)
}

fn check_inside(name: &'static str, v: f64, bound: f64) -> Result<(), Error> {
    if v.abs() <= bound {
        Ok(())
    } else {
        Err(Error::Domain { name, value: v, bound })
    }
}

fn density_label(d: DensityName) -> &'static str {
    match d {
        DensityName::FN => "fN",
        DensityName::FCN => "fCN",
        DensityName::FR => "fR",
        DensityName::F3D => "f3D",
        DensityName::FYZ => "fYZ",
        DensityName::FZ => "fZ",
        DensityName::FXgYZ => "fXgYZ",
        DensityName::FYZgX => "fYZgX",
        DensityName::PmKernel => "pmKernel",
    }
}

const CHECK_COLUMNS: [&str; 12] = [
    "suite", "group", "name", "case", "lhs", "rhs", "abs_err", "rel_err", "tol", "relation", "pass", "counted",
];

fn table_passes(t: &Table) -> bool {
    let (pass, counted) = (10, 11);
    t.rows
        .iter()
        .all(|r| matches!(r[pass], Cell::Bool(true)) || matches!(r[counted], Cell::Bool(false)))
}

fn check(cfg: &RunConfig, suite: &str, seed: u64, tcfg: TruncationConfig) -> Result<Table, Failure> {
    let suite = Suite::from_name(suite).ok_or_else(|| {
        let names: Vec<&str> = Suite::EACH.iter().map(|s| s.name()).chain(["all"]).collect();
        usage(format!("unknown suite {suite:?}; expected one of {}", names.join(", ")))
    })?;
    let single = cfg.common.rho.is_some() || cfg.common.q.is_some();
    let mut vcfg = if single {
        VerifyConfig::single(cfg.common.params()?)
    } else {
        VerifyConfig::default()
    };
    vcfg.seed = seed;
    vcfg.truncation = tcfg;
    let rows = run_suite(suite, &vcfg)?;

    let mut t = Table::new(CHECK_COLUMNS);
    for r in &rows {
        t.push(vec![
            r.suite.name().into(),
            r.group.into(),
            r.name.clone().into(),
            r.case.clone().into(),
            r.lhs.into(),
            r.rhs.into(),
            r.abs_err.into(),
            r.rel_err.into(),
            r.tol.into(),
            r.relation.name().into(),
            r.pass.into(),
            r.counted.into(),
        ]);
    }
    let failed = rows.iter().filter(|r| !r.ok()).count();
    let uncounted = rows.iter().filter(|r| !r.counted).count();
    eprintln!(
        "{}: {} identities, {} failed, {} documented misprints not counted",
        suite.name(),
        rows.len(),
        failed,
        uncounted
    );
    debug_assert_eq!(failed == 0, all_pass(&rows));

    t.meta("command", "check");
    t.meta("version", env!("CARGO_PKG_VERSION"));
    t.meta("suite", suite.name());
    if single {
        let p = vcfg.params[0];
        t.meta("params", format!("rho=({},{},{}) q={}", p.rho12, p.rho13, p.rho23, p.q));
    } else {
        t.meta(
            "params",
            format!(
                "grid rho12 in {{{}}}, rho13 in {{{}}}, rho23 in {{{}}}, q in {{{}}} ({} points)",
                join(&verify::GRID_RHO12),
                join(&verify::GRID_RHO13),
                join(&verify::GRID_RHO23),
                join(&verify::GRID_Q),
                vcfg.params.len()
            ),
        );
    }
    t.meta("seed", seed);
    t.meta("limit_qs", join(&vcfg.limit_qs));
    common_meta(&mut t, cfg);
    t.meta("failed", failed);
    Ok(t)
}

#[allow(clippy::too_many_arguments)]
fn moments(
    kind: MomentName,
    n: u32,
    m: u32,
    r: f64,
    y: f64,
    z: f64,
    p: &ModelParams,
    tcfg: &TruncationConfig,
) -> Result<Table, Failure> {
    let q = p.q;
    let c1 = QuadratureConfig::for_dimension(1).with_tol(1e-12);
    let c2 = QuadratureConfig::for_dimension(2).with_tol(1e-10);
    let mut t = Table::new([
        "kind",
        "form",
        "degrees",
        "conditioning",
        "closed",
        "quadrature",
        "abs_err",
    ]);
    let mut push = |form: &str, degrees: String, cond: String, closed: f64, quad: f64| {
        t.push(vec![
            kind_label(kind).into(),
            form.into(),
            degrees.into(),
            cond.into(),
            closed.into(),
            quad.into(),
            (closed - quad).abs().into(),
        ]);
    };
    match kind {
        MomentName::EH2nZ | MomentName::VarZ => {
            let marginal = Marginal::new(r, q, tcfg)?;
            let (closed, deg, g): (f64, u32, Box<dyn Fn(f64) -> f64>) = if kind == MomentName::VarZ {
                (var_z(r, q)?, 2, Box::new(|z| z * z))
            } else {
                (
                    e_h2n_z(n, r, q)?,
                    2 * n,
                    Box::new(move |z| q_hermite(2 * n, z, q).last()),
                )
            };
            let quad = integrate1d(|z| Ok(g(z) * marginal.density(z, MarginalForm::Rogers)?), q, &c1)?.value;
            push("closed", deg.to_string(), format!("r={r}"), closed, quad);
        }
        MomentName::Cov => {
            let model = Model::new(*p, tcfg)?;
            let quad = integrate2d(|y, z| Ok(y * z * model.f_yz(y, z)?), q, &c2)?.value;
            push("closed", "1,1".into(), String::new(), cov_yz(p)?, quad);
        }
        MomentName::Mixed => {
            let spec = MomentSpec::new(MomentKind::Unconditional, (m, n), *p, vec![])?;
            push(
                "closed",
                format!("{m},{n}"),
                String::new(),
                spec.closed_form(tcfg)?,
                spec.quadrature_oracle(tcfg)?,
            );
        }
        MomentName::CondX => {
            let spec = MomentSpec::new(MomentKind::CondXgivenYZ, (n, 0), *p, vec![y, z])?;
            let quad = spec.quadrature_oracle(tcfg)?;
            for form in CondXForm::ALL {
                let closed = cond_exp_hn_x_given_yz(n, y, z, p.rho12, p.rho13, q, form)?;
                push(form.name(), n.to_string(), format!("y={y} z={z}"), closed, quad);
            }
        }
        MomentName::CondY => {
            let spec = MomentSpec::new(MomentKind::CondYgivenZ, (n, 0), *p, vec![z])?;
            let quad = spec.quadrature_oracle(tcfg)?;
            for form in [CondYForm::Derived, CondYForm::AsPrinted] {
                let closed = cond_exp_hn_y_given_z(n, z, p, form)?;
                push(form.name(), n.to_string(), format!("z={z}"), closed, quad);
            }
        }
        MomentName::CondXY => {
            let spec = MomentSpec::new(MomentKind::CondXYgivenZ, (n, m), *p, vec![z])?;
            push(
                "closed",
                format!("{n},{m}"),
                format!("z={z}"),
                spec.closed_form(tcfg)?,
                spec.quadrature_oracle(tcfg)?,
            );
        }
    }
    Ok(t)
}

fn kind_label(k: MomentName) -> &'static str {
    match k {
        MomentName::EH2nZ => "e_h2n_z",
        MomentName::VarZ => "var_z",
        MomentName::Cov => "cov",
        MomentName::Mixed => "mixed",
        MomentName::CondX => "cond_x",
        MomentName::CondY => "cond_y",
        MomentName::CondXY => "cond_xy",
    }
}

fn gram(
    family: GramFamily,
    nmax: u32,
    y: f64,
    corr: f64,
    beta: f64,
    q: f64,
    tcfg: &TruncationConfig,
) -> Result<Table, Failure> {
    let (fam, weight, label) = match family {
        GramFamily::Qhermite => (Family::QHermite { q }, Weight::QNormal, "qhermite"),
        GramFamily::Asc => (
            Family::AlSalamChihara { y, rho: corr, q },
            Weight::ConditionalNormal { y, rho: corr },
            "asc",
        ),
        GramFamily::Rogers => (Family::RogersMonic { beta, q }, Weight::Rogers { beta }, "rogers"),
    };
    let qcfg = QuadratureConfig::for_dimension(1);
    let g = gram_matrix(fam, weight, nmax, q, &qcfg, tcfg)?;
    let mut columns = vec!["i".to_string()];
    columns.extend((0..=nmax).map(|j| j.to_string()));
    columns.push("expected_norm".into());
    let mut t = Table::new(columns);
    for (i, row) in g.rows().enumerate() {
        let mut cells: Vec<Cell> = vec![i.into()];
        cells.extend(row.iter().map(|&v| Cell::from(v)));
        cells.push(fam.squared_norm(i as u32).unwrap_or(f64::NAN).into());
        t.push(cells);
    }
    t.meta("family", label);
    match family {
        GramFamily::Asc => {
            t.meta("y", y);
            t.meta("corr", corr);
        }
        GramFamily::Rogers => t.meta("beta", beta),
        GramFamily::Qhermite => {}
    }
    t.meta("quad_tol", qcfg.tol);
    t.meta("panels_used", g.panels_used);
    t.meta("error_estimate", g.error_estimate);
    t.meta("max_abs_off_diagonal", g.max_abs_off_diagonal());
    t.meta("max_normalized_off_diagonal", g.max_normalized_off_diagonal());
    Ok(t)
}

fn sample(
    law: Law,
    scfg: &SamplerConfig,
    y: f64,
    corr: f64,
    summary: bool,
    p: &ModelParams,
    tcfg: &TruncationConfig,
) -> Result<Table, Failure> {
    let q = p.q;
    let var = |xs: &[f64]| mc_statistic(xs, |x| [x, x * x], |m| m[1] - m[0] * m[0]);
    if !summary {
        return Ok(match law {
            Law::FN | Law::FCN => {
                let xs = if law == Law::FN {
                    sample_fn(q, scfg)?
                } else {
                    sample_fcn(y, corr, q, scfg)?
                };
                let mut t = Table::new(["x"]);
                xs.into_iter().for_each(|x| t.push(vec![x.into()]));
                t
            }
            Law::ThreeD => {
                let mut t = Table::new(["x", "y", "z"]);
                for v in sample_3d(p, scfg)? {
                    t.push(v.map(Cell::from).to_vec());
                }
                t
            }
        });
    }

    let mut t = Table::new(["statistic", "estimate", "std_error", "target", "within"]);
    let mut est = |name: &str, e: McEstimate, target: f64| {
        let within = (e.value - target).abs() <= 3.0 * e.std_error;
        t.push(vec![
            name.into(),
            e.value.into(),
            e.std_error.into(),
            target.into(),
            within.into(),
        ]);
    };
    let ks = match law {
        Law::FN => {
            let xs = sample_fn(q, scfg)?;
            est("mean", mc_moment(&xs, |x| x)?, 0.0);
            est("variance", var(&xs)?, 1.0);
            let normal = QNormal::new(q, tcfg)?;
            let cdf = QuadratureCdf::new(|x| normal.density(x), q, CDF_PANELS)?;
            ("ks_x", ks_statistic(&xs, |x| cdf.cdf(x)), xs.len())
        }
        Law::FCN => {
            let xs = sample_fcn(y, corr, q, scfg)?;
            est("mean", mc_moment(&xs, |x| x)?, corr * y);
            est("variance", var(&xs)?, 1.0 - corr * corr);
            let normal = QNormal::new(q, tcfg)?;
            let k = PmKernel::new(corr, q, tcfg)?;
            let cdf = QuadratureCdf::new(|x| Ok((normal.ln_density(x)? + k.ln_value(x, y)?).exp()), q, CDF_PANELS)?;
            ("ks_x", ks_statistic(&xs, |x| cdf.cdf(x)), xs.len())
        }
        Law::ThreeD => {
            let s = sample_3d(p, scfg)?;
            let z: Vec<f64> = s.iter().map(|v| v[2]).collect();
            let target = var_z(p.r(), q)?;
            est("var_z", var(&z)?, target);
            est("e_z2", mc_moment(&s, |v| v[2] * v[2])?, target);
            est(
                "cov_yz",
                mc_statistic(&s, |v| [v[1], v[2], v[1] * v[2]], |m| m[2] - m[0] * m[1])?,
                cov_yz(p)?,
            );
            let marginal = Marginal::new(p.r(), q, tcfg)?;
            let cdf = QuadratureCdf::new(|v| marginal.density(v, MarginalForm::Rogers), q, CDF_PANELS)?;
            ("ks_z", ks_statistic(&z, |v| cdf.cdf(v)), z.len())
        }
    };
    let (name, d, n) = ks;
    let crit = ks_critical_1pct(n);
    t.push(vec![
        name.into(),
        d.into(),
        f64::NAN.into(),
        crit.into(),
        (d < crit).into(),
    ]);
    t.meta("ks_target", "critical value at the 1% level");
    Ok(t)
}
