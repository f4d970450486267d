use qnormal3d::moments::{
    cond_exp_hn_x_given_yz, cond_exp_hn_y_given_z, cond_exp_xy_given_z, cond_exp_y2_given_z, mixed_moment_h, CondXForm,
    CondYForm, MomentKind, MomentSpec,
};
use qnormal3d::{ModelParams, TruncationConfig};

fn params(q: f64) -> ModelParams {
    ModelParams::new(0.3, 0.4, 0.5, q).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn conditional_y_reference_values() {
    let expected = [0.584905660377358, 0.0628754399428, -0.189798258958, -0.125260590479];
    for (n, e) in (1..=4).zip(expected) {
        let v = cond_exp_hn_y_given_z(n, 1.0, &params(0.5), CondYForm::Derived).unwrap();
        assert!(close(v, e, 1e-11), "n={n}: {v} vs {e}");
    }
}

#[test]
fn conditional_x_reference_values() {
    let expected = [
        -0.241477272727,
        -0.140491081239,
        0.101843501855,
        0.0123788643499,
        -0.0332869829966,
    ];
    for (n, e) in (1..=5).zip(expected) {
        for form in CondXForm::ALL {
            let v = cond_exp_hn_x_given_yz(n, 0.5, -1.0, 0.3, 0.4, 0.5, form).unwrap();
            assert!(close(v, e, 1e-11), "n={n} {form:?}: {v} vs {e}");
        }
    }
}

#[test]
fn mixed_moment_reference_values() {
    let cfg = TruncationConfig::default();
    let p = params(0.5);
    for ((m, n), e) in [
        ((2, 2), 0.560625883092),
        ((1, 3), 0.102203150348),
        ((2, 0), 0.0927835051546),
    ] {
        let v = mixed_moment_h(m, n, &p, None, &cfg).unwrap();
        assert!(close(v, e, 1e-11), "({m},{n}): {v} vs {e}");
    }
}

#[test]
fn cconv_reference_values() {
    for (q, e) in [(0.2, 0.484545098886), (0.5, 0.487774220011)] {
        let v = cond_exp_xy_given_z(1.0, &params(q)).unwrap();
        assert!(close(v, e, 1e-11), "q={q}: {v} vs {e}");
    }
}

#[test]
fn closed_forms_match_quadrature() {
    let cfg = TruncationConfig::default();
    let cases = [
        (MomentKind::Unconditional, (2, 2), vec![]),
        (MomentKind::Unconditional, (1, 3), vec![]),
        (MomentKind::CondXgivenYZ, (3, 0), vec![0.5, -1.0]),
        (MomentKind::CondYgivenZ, (3, 0), vec![1.0]),
        (MomentKind::CondYgivenZ, (4, 0), vec![-0.8]),
        (MomentKind::CondXYgivenZ, (1, 1), vec![1.0]),
    ];
    for q in [-0.5, 0.0, 0.2, 0.5, 0.8] {
        for (kind, degrees, cond) in &cases {
            let spec = MomentSpec::new(*kind, *degrees, params(q), cond.clone()).unwrap();
            let closed = spec.closed_form(&cfg).unwrap();
            let quad = spec.quadrature_oracle(&cfg).unwrap();
            assert!(
                close(closed, quad, 1e-7),
                "q={q} {kind:?} {degrees:?}: {closed} vs {quad}"
            );
        }
    }
}

#[test]
fn second_conditional_moment_agrees_three_ways() {
    let p = params(0.5);
    let derived = cond_exp_hn_y_given_z(2, 1.0, &p, CondYForm::Derived).unwrap();
    let closed = cond_exp_y2_given_z(1.0, &p).unwrap() - 1.0;
    let spec = MomentSpec::new(MomentKind::CondYgivenZ, (2, 0), p, vec![1.0]).unwrap();
    let quad = spec.quadrature_oracle(&TruncationConfig::default()).unwrap();
    assert!(close(derived, closed, 1e-12));
    assert!(close(derived, quad, 1e-7));
}
