//! One PASS/FAIL line per acceptance criterion over the default parameter
//! grid. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qnormal3d::densities::MarginalForm;
use qnormal3d::moments::{cov_yz, var_z};
use qnormal3d::quadrature::QuadratureCdf;
use qnormal3d::sampler::{ks_critical_1pct, ks_statistic, mc_moment, mc_statistic, sample_3d, SamplerConfig};
use qnormal3d::verify::{run_suite, Relation, Suite, VerificationReport, VerifyConfig};
use qnormal3d::{Model, ModelParams, TruncationConfig};

/// Criterion number, title, row group, and the loosest tolerance a row in
/// that group may use.
const CRITERIA: [(u32, &str, &str, f64); 9] = [
    (1, "normalization", "normalization", 1e-6),
    (2, "orthogonality", "orthogonality", 1e-7),
    (3, "poisson-mehler", "poisson-mehler", 1e-9),
    (4, "chapman-kolmogorov", "chapman-kolmogorov", 1e-7),
    (5, "marginalization", "marginalization", 1e-6),
    (6, "equivalent forms", "forms", 1e-8),
    (7, "moments", "moments", 1e-6),
    (8, "conditional moments", "conditional-moments", 1e-7),
    (9, "limits", "limits", 1e-10),
];

const SAMPLES: usize = 200_000;
const SAMPLER_BUDGET: Duration = Duration::from_secs(60);

fn line(n: u32, title: &str, pass: bool, detail: String) -> bool {
    println!(
        "criterion {n:>2} {:<22} {}  {detail}",
        title,
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn group_line(n: u32, title: &str, group: &str, cap: f64, rows: &[&VerificationReport]) -> bool {
    let counted: Vec<_> = rows.iter().filter(|r| r.counted).collect();
    let failed: Vec<_> = counted.iter().filter(|r| !r.pass).collect();
    let loose: Vec<_> = counted
        .iter()
        .filter(|r| matches!(r.relation, Relation::Close | Relation::Relative | Relation::Forms) && r.tol > cap)
        .collect();
    let pass = !counted.is_empty() && failed.is_empty() && loose.is_empty();
    let mut detail = format!(
        "{} checks, {} failed, {} misprint rows not counted, tol <= {cap:e}",
        counted.len(),
        failed.len(),
        rows.len() - counted.len()
    );
    for r in failed.iter().take(5) {
        detail.push_str(&format!(
            "\n    failed {group}: {} [{}] lhs={:e} rhs={:e}",
            r.name, r.case, r.lhs, r.rhs
        ));
    }
    for r in loose.iter().take(5) {
        detail.push_str(&format!("\n    tolerance {:e} above {cap:e}: {}", r.tol, r.name));
    }
    line(n, title, pass, detail)
}

fn sampler_line() -> bool {
    let result = (|| -> qnormal3d::Result<(bool, String)> {
        let p = ModelParams::new(0.3, 0.4, 0.5, 0.5)?;
        let cfg = SamplerConfig::new(2024, SAMPLES)?;
        let start = Instant::now();
        let s = sample_3d(&p, &cfg)?;
        let elapsed = start.elapsed();
        let again = sample_3d(&p, &cfg)?;
        let reproducible = s.len() == again.len()
            && s.iter()
                .zip(&again)
                .all(|(a, b)| a.iter().zip(b).all(|(u, v)| u.to_bits() == v.to_bits()));

        let z: Vec<f64> = s.iter().map(|v| v[2]).collect();
        let var = mc_statistic(&z, |x| [x, x * x], |m| m[1] - m[0] * m[0])?;
        let var_target = var_z(p.r(), p.q)?;
        let var_ok = (var.value - var_target).abs() < 3.0 * var.std_error;
        let ez2 = mc_moment(&s, |v| v[2] * v[2])?;
        let cov = mc_statistic(&s, |v| [v[1], v[2], v[1] * v[2]], |m| m[2] - m[0] * m[1])?;
        let cov_target = cov_yz(&p)?;
        let cov_ok = (cov.value - cov_target).abs() < 3.0 * cov.std_error;

        let model = Model::new(p, &TruncationConfig::default())?;
        let cdf = QuadratureCdf::new(|v| model.f_z(v, MarginalForm::Rogers), p.q, 256)?;
        let d = ks_statistic(&z, |v| cdf.cdf(v));
        let crit = ks_critical_1pct(z.len());

        let pass = var_ok && cov_ok && d < crit && reproducible && elapsed < SAMPLER_BUDGET;
        let detail = format!(
            "n={SAMPLES}, var(Z)={:.5}±{:.5} vs {var_target:.5}, E Z²={:.5}, cov(Y,Z)={:.5}±{:.5} vs {cov_target:.5}, \
             KS D={d:.5} < {crit:.5}: {}, reproducible: {reproducible}, {:.1} s",
            var.value,
            var.std_error,
            ez2.value,
            cov.value,
            cov.std_error,
            d < crit,
            elapsed.as_secs_f64()
        );
        Ok((pass, detail))
    })();
    match result {
        Ok((pass, detail)) => line(10, "sampler", pass, detail),
        Err(e) => line(10, "sampler", false, format!("error: {e}")),
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let cfg = VerifyConfig::default();
    println!("parameter grid: {} points", cfg.params.len());
    let mut ok = true;
    match run_suite(Suite::All, &cfg) {
        Ok(rows) => {
            for (n, title, group, cap) in CRITERIA {
                let mine: Vec<&VerificationReport> = rows.iter().filter(|r| r.group == group).collect();
                ok &= group_line(n, title, group, cap, &mine);
            }
            let props: Vec<_> = rows.iter().filter(|r| r.group == "density-properties").collect();
            let props_ok = props.iter().all(|r| r.ok());
            println!(
                "  density symmetry and nonnegativity: {} checks, all pass: {props_ok}",
                props.len()
            );
            ok &= props_ok;
        }
        Err(e) => {
            for (n, title, ..) in CRITERIA {
                line(n, title, false, format!("error: {e}"));
            }
            ok = false;
        }
    }
    ok &= sampler_line();
    println!("total {:.1} s", start.elapsed().as_secs_f64());
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
