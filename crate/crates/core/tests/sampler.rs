use qnormal3d::densities::{MarginalForm, Model, QNormal};
use qnormal3d::moments::{cov_yz, var_z};
use qnormal3d::quadrature::QuadratureCdf;
use qnormal3d::sampler::{
    ks_critical_1pct, ks_statistic, mc_moment, mc_statistic, sample_3d, sample_fcn, sample_fn, SamplerConfig,
};
use qnormal3d::{ModelParams, TruncationConfig};

fn sample_variance(xs: &[f64]) -> qnormal3d::sampler::McEstimate {
    mc_statistic(xs, |x| [x, x * x], |m| m[1] - m[0] * m[0]).unwrap()
}

#[test]
fn semicircle_draws_have_unit_variance() {
    let cfg = SamplerConfig::new(11, 100_000).unwrap();
    let xs = sample_fn(0.0, &cfg).unwrap();
    let mean = mc_moment(&xs, |x| x).unwrap();
    assert!(mean.value.abs() < 3.0 * mean.std_error, "{mean:?}");
    let var = sample_variance(&xs);
    assert!((var.value - 1.0).abs() < 3.0 * var.std_error, "{var:?}");
}

#[test]
fn fixed_seed_reproduces_draws() {
    let cfg = SamplerConfig::new(42, 1000).unwrap();
    assert_eq!(sample_fn(0.4, &cfg).unwrap(), sample_fn(0.4, &cfg).unwrap());
    let other = SamplerConfig { seed: 43, ..cfg };
    assert_ne!(sample_fn(0.4, &cfg).unwrap(), sample_fn(0.4, &other).unwrap());
    let p = ModelParams::new(0.3, 0.4, 0.5, 0.5).unwrap();
    let small = SamplerConfig {
        burn_in: 10,
        ..SamplerConfig::new(5, 200).unwrap()
    };
    assert_eq!(sample_3d(&p, &small).unwrap(), sample_3d(&p, &small).unwrap());
}

#[test]
fn q_normal_draws_pass_ks() {
    let cfg = TruncationConfig::default();
    for q in [0.0, 0.5] {
        let xs = sample_fn(q, &SamplerConfig::new(3, 10_000).unwrap()).unwrap();
        let normal = QNormal::new(q, &cfg).unwrap();
        let cdf = QuadratureCdf::new(|x| normal.density(x), q, 256).unwrap();
        let d = ks_statistic(&xs, |x| cdf.cdf(x));
        assert!(d < ks_critical_1pct(xs.len()), "q={q}: D={d}");
    }
}

#[test]
fn conditional_normal_draws_match_mean() {
    // E(X | Y=y) = ρ y under f_CN.
    let (y, rho, q) = (1.2, 0.5, 0.3);
    let xs = sample_fcn(y, rho, q, &SamplerConfig::new(9, 50_000).unwrap()).unwrap();
    let mean = mc_moment(&xs, |x| x).unwrap();
    assert!((mean.value - rho * y).abs() < 3.0 * mean.std_error, "{mean:?}");
}

#[test]
fn independent_coordinates_are_uncorrelated() {
    let p = ModelParams::new(0.0, 0.0, 0.0, 0.3).unwrap();
    let s = sample_3d(&p, &SamplerConfig::new(1, 20_000).unwrap()).unwrap();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let c = mc_statistic(&s, |v| [v[a], v[b], v[a] * v[b]], |m| m[2] - m[0] * m[1]).unwrap();
        assert!(c.value.abs() < 3.0 * c.std_error, "({a},{b}) {c:?}");
    }
}

#[test]
fn gibbs_chain_matches_second_moments_and_marginal() {
    let p = ModelParams::new(0.3, 0.4, 0.5, 0.5).unwrap();
    let start = std::time::Instant::now();
    let s = sample_3d(&p, &SamplerConfig::new(2024, 200_000).unwrap()).unwrap();
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "{elapsed:?}");

    let z: Vec<f64> = s.iter().map(|v| v[2]).collect();
    let var = sample_variance(&z);
    let target = var_z(p.r(), p.q).unwrap();
    assert!((var.value - target).abs() < 3.0 * var.std_error, "{var:?} vs {target}");
    let ez2 = mc_moment(&s, |v| v[2] * v[2]).unwrap();
    assert!((ez2.value - target).abs() < 3.0 * ez2.std_error);

    let cov = mc_statistic(&s, |v| [v[1], v[2], v[1] * v[2]], |m| m[2] - m[0] * m[1]).unwrap();
    let target = cov_yz(&p).unwrap();
    assert!((cov.value - target).abs() < 3.0 * cov.std_error, "{cov:?} vs {target}");

    let model = Model::new(p, &TruncationConfig::default()).unwrap();
    let cdf = QuadratureCdf::new(|v| model.f_z(v, MarginalForm::Rogers), p.q, 256).unwrap();
    let d = ks_statistic(&z, |v| cdf.cdf(v));
    assert!(d < ks_critical_1pct(z.len()), "D={d}");
}
