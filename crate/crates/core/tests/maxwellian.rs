use awbgk::maxwellian::{
    evaluate_juttner, global_maxwellian, juttner_param_derivs, lorentz_boost, minkowski, JuttnerParams,
};
use awbgk::momentum_grid::MomentumGrid;
use awbgk::special_fn::{e_tilde, invert_e_tilde, ClosureFns};
use nalgebra::Matrix4;
use proptest::prelude::*;

#[test]
fn boost_of_unit_velocity() {
    let b = lorentz_boost([1.0, 0.0, 0.0]);
    let r = b.apply([2f64.sqrt(), 1.0, 0.0, 0.0]);
    assert!((r[0] - 1.0).abs() < 1e-12);
    assert!(r[1..].iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn rest_frame_boost_is_identity() {
    assert_eq!(lorentz_boost([0.0; 3]).lambda, Matrix4::identity());
}

#[test]
fn global_maxwellian_normalization() {
    let g = MomentumGrid::for_beta(1.0, 32).unwrap();
    let j0 = global_maxwellian(1.0, &g).unwrap();
    let e0 = ClosureFns::at(1.0).unwrap().e_tilde;
    assert!((g.moment(&j0, |_, _| 1.0, false) - 1.0).abs() < 1e-6);
    for i in 0..3 {
        assert_eq!(g.moment(&j0, |q, _| q[i], false), 0.0);
    }
    assert!((g.moment(&j0, |_, q0| q0, false) - e0).abs() < 1e-6);
}

#[test]
fn juttner_four_flow_is_n_u() {
    // N^μ = ∫ q^μ J dq/q⁰ = n U^μ for the Jüttner distribution.
    let g = MomentumGrid::for_beta(1.0, 32).unwrap();
    let p = JuttnerParams::new(1.7, [0.15, -0.1, 0.1], 1.0);
    let j = evaluate_juttner(&p, &g).unwrap();
    let u = p.four_velocity();
    assert!((g.moment(&j, |_, _| 1.0, false) - p.n * u[0]).abs() < 1e-6);
    for i in 0..3 {
        assert!((g.moment(&j, |q, _| q[i], true) - p.n * u[i + 1]).abs() < 1e-6);
    }
}

#[test]
fn derivatives_at_rest() {
    let g = MomentumGrid::for_beta(1.0, 16).unwrap();
    let j0 = global_maxwellian(1.0, &g).unwrap();
    let d = juttner_param_derivs(&JuttnerParams::at_rest(1.0, 1.0), &g).unwrap();
    for k in 0..g.len() {
        assert_eq!(d.dn[k], j0[k]);
        for i in 0..3 {
            let expected = g.nodes()[k][i] * j0[k];
            assert!((d.du[i][k] - expected).abs() <= 1e-15 * expected.abs());
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let g = MomentumGrid::for_beta(1.0, 12).unwrap();
    let p = JuttnerParams::new(1.2, [0.2, -0.1, 0.3], 1.3);
    let d = juttner_param_derivs(&p, &g).unwrap();
    let h = 1e-5;
    let eval = |q: JuttnerParams| evaluate_juttner(&q, &g).unwrap();
    let central = |plus: JuttnerParams, minus: JuttnerParams, step: f64| -> Vec<f64> {
        eval(plus).iter().zip(eval(minus)).map(|(a, b)| (a - b) / (2.0 * step)).collect()
    };
    let close = |a: &[f64], b: &[f64]| {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-6 * scale)
    };

    let dn = central(JuttnerParams { n: p.n + h, ..p }, JuttnerParams { n: p.n - h, ..p }, h);
    assert!(close(&d.dn, &dn));

    // Along the mass shell U⁰ = √(1+|U|²): dJ/dUⁱ = ∂J/∂Uⁱ + ∂J/∂U⁰·Uⁱ/U⁰.
    for i in 0..3 {
        let mut up = p;
        let mut dn_ = p;
        up.velocity[i] += h;
        dn_.velocity[i] -= h;
        let fd = central(up, dn_, h);
        let chain: Vec<f64> = (0..g.len())
            .map(|k| d.du[i][k] + d.du0[k] * p.velocity[i] / p.u0())
            .collect();
        assert!(close(&chain, &fd), "velocity component {i}");
    }

    let e = e_tilde(p.beta).unwrap();
    let at_e = |e: f64| JuttnerParams {
        beta: invert_e_tilde(e).unwrap(),
        ..p
    };
    let he = 1e-5 * e;
    let de = central(at_e(e + he), at_e(e - he), he);
    assert!(close(&d.de, &de));
}

proptest! {
    #[test]
    fn boost_properties(ux in -2.9f64..2.9, uy in -2.9f64..2.9, uz in -2.9f64..2.9) {
        let p = JuttnerParams::new(1.0, [ux, uy, uz], 1.0);
        let b = lorentz_boost(p.velocity);
        let r = b.apply(p.four_velocity());
        prop_assert!((r[0] - 1.0).abs() < 1e-12);
        for v in &r[1..] {
            prop_assert!(v.abs() < 1e-12);
        }
        let eta = minkowski();
        prop_assert!((b.lambda.transpose() * eta * b.lambda - eta).abs().max() < 1e-12);
    }

    #[test]
    fn juttner_positive(n in 0.1f64..5.0, ux in -1.0f64..1.0, beta in 0.2f64..5.0) {
        let g = MomentumGrid::for_beta(1.0, 8).unwrap();
        let j = evaluate_juttner(&JuttnerParams::new(n, [ux, 0.0, 0.0], beta), &g).unwrap();
        prop_assert!(j.iter().all(|&v| v > 0.0));
    }
}
