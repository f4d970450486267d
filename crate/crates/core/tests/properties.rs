use proptest::prelude::*;

use qnormal3d::densities::{forms_agree, Marginal, PmKernel, QNormal};
use qnormal3d::moments::{cond_exp_hn_x_given_yz, CondXForm};
use qnormal3d::polynomials::{q_hermite, w_poly};
use qnormal3d::qcore::{half_width, q_binomial, q_factorial, q_pochhammer};
use qnormal3d::{DensityForm, MarginalForm, Model, ModelParams, TruncationConfig};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn q_any() -> impl Strategy<Value = f64> {
    -0.95..0.95f64
}

fn corr() -> impl Strategy<Value = f64> {
    -0.8..0.8f64
}

/// A point of S(q) scaled by `u ∈ [-1, 1]`, kept off the edges.
fn inside(u: f64, q: f64) -> f64 {
    0.95 * u * half_width(q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn q_binomial_is_symmetric(n in 0i64..30, k in 0i64..30, q in q_any()) {
        prop_assume!(k <= n);
        prop_assert_eq!(q_binomial(n, k, q), q_binomial(n, n - k, q));
    }

    #[test]
    fn q_pascal_rule(n in 1i64..25, k in 1i64..25, q in q_any()) {
        prop_assume!(k <= n);
        let lhs = q_binomial(n, k, q);
        let rhs = q_binomial(n - 1, k - 1, q) + q.powi(k as i32) * q_binomial(n - 1, k, q);
        prop_assert!(close(lhs, rhs, 1e-12), "{lhs} vs {rhs}");
    }

    #[test]
    fn pochhammer_matches_factorial(n in 0u32..30, q in q_any()) {
        let lhs = q_pochhammer(q, q, n);
        let rhs = (1.0 - q).powi(n as i32) * q_factorial(n, q);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1e-300), "{lhs} vs {rhs}");
    }

    #[test]
    fn q_hermite_parity(n in 0u32..15, u in -1.0..1.0f64, q in q_any()) {
        let x = inside(u, q);
        let a = q_hermite(n, x, q).last();
        let b = q_hermite(n, -x, q).last();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!(close(a, sign * b, 1e-12));
    }

    #[test]
    fn w_is_symmetric(k in 0u32..6, m in 0u32..6, u in -1.0..1.0f64, r in -0.5..0.5f64, q in -0.9..0.9f64) {
        let x = inside(u, q);
        let a = w_poly(k, m, x, r, q);
        let b = w_poly(m, k, x, r, q);
        prop_assert!(close(a, b, 1e-9), "{a} vs {b}");
    }

    #[test]
    fn conditional_mean_forms_agree(
        n in 0u32..6,
        u in -1.0..1.0f64,
        v in -1.0..1.0f64,
        a in corr(),
        c in corr(),
        q in -0.5..0.8f64,
    ) {
        let (y, z) = (inside(u, q), inside(v, q));
        let base = cond_exp_hn_x_given_yz(n, y, z, a, c, q, CondXForm::AscExpansion).unwrap();
        let alt = cond_exp_hn_x_given_yz(n, y, z, a, c, q, CondXForm::DoubleSum).unwrap();
        prop_assert!(close(base, alt, 1e-9), "{base} vs {alt}");
    }

    #[test]
    fn densities_are_symmetric_and_nonnegative(u in -1.0..1.0f64, v in -1.0..1.0f64, rho in corr(), q in q_any()) {
        let cfg = TruncationConfig::default();
        let (x, y) = (inside(u, q), inside(v, q));
        let n = QNormal::new(q, &cfg).unwrap();
        let fx = n.density(x).unwrap();
        prop_assert!(fx >= 0.0);
        prop_assert!(close(fx, n.density(-x).unwrap(), 1e-13));
        let k = PmKernel::new(rho, q, &cfg).unwrap();
        let kxy = k.product(x, y).unwrap();
        prop_assert!(kxy >= 0.0);
        prop_assert!(close(kxy, k.product(y, x).unwrap(), 1e-12));
        prop_assert!(close(kxy, k.product(-x, -y).unwrap(), 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn joint_density_forms_agree(
        u in -1.0..1.0f64,
        v in -1.0..1.0f64,
        w in -1.0..1.0f64,
        a in -0.6..0.6f64,
        b in -0.6..0.6f64,
        c in -0.6..0.6f64,
        q in -0.5..0.7f64,
    ) {
        let model = Model::new(ModelParams::new(a, b, c, q).unwrap(), &TruncationConfig::default()).unwrap();
        let (x, y, z) = (inside(u, q) * 0.9, inside(v, q) * 0.9, inside(w, q) * 0.9);
        let vals: Vec<f64> = DensityForm::ALL.iter().map(|&f| model.f_3d(x, y, z, f).unwrap()).collect();
        for &val in &vals[1..] {
            prop_assert!(forms_agree(vals[0], val), "{vals:?}");
        }
    }

    #[test]
    fn marginal_forms_agree(u in -1.0..1.0f64, r in -0.5..0.5f64, q in -0.5..0.9f64) {
        let m = Marginal::new(r, q, &TruncationConfig::default()).unwrap();
        let z = inside(u, q);
        let vals: Vec<f64> = MarginalForm::ALL.iter().map(|&f| m.density(z, f).unwrap()).collect();
        for &val in &vals[1..] {
            prop_assert!(forms_agree(vals[0], val), "{vals:?}");
        }
    }
}
