use proptest::prelude::*;
use wavemap::conservation::{conservation_report, energy_momentum, hardwire_check, pohlmeyer_check};
use wavemap::geometry::TargetManifold;
use wavemap::nullsolver::{solve, CauchyData, GridField, SolveOptions};
use wavemap::oracles::{riccati_blowup, s1_exact, ScalarProfile};

fn sphere_solution(h: f64, amp: f64, vel: f64) -> GridField {
    let data = CauchyData::from_fn(
        -4.0,
        4.0,
        0.5 * h,
        3,
        |x, o| {
            let th = amp * (-x * x).exp();
            o.copy_from_slice(&[th.sin(), 0.0, th.cos()]);
        },
        |x, o| o.copy_from_slice(&[0.0, vel * (-(x - 0.3) * (x - 0.3)).exp(), 0.0]),
    )
    .unwrap();
    solve(&data, &TargetManifold::sphere_extrinsic(3).unwrap(), 1.0, h, &SolveOptions::default()).unwrap()
}

fn pohlmeyer(phi: &GridField) -> f64 {
    let p = pohlmeyer_check(phi).unwrap();
    p.residual_u().max(p.residual_v())
}

#[test]
fn pohlmeyer_residual_is_second_order_on_wave_maps() {
    let r: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&h| pohlmeyer(&sphere_solution(h, 1.0, 0.5))).collect();
    for w in r.windows(2) {
        assert!((3.5..=4.5).contains(&(w[0] / w[1])), "{r:?}");
    }
}

#[test]
fn pohlmeyer_residual_is_second_order_on_the_circle_oracle() {
    let g = ScalarProfile::gaussian();
    let r: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            let phi = sphere_solution(h, 0.0, 0.0);
            pohlmeyer(&s1_exact(&g, &phi.grid).unwrap())
        })
        .collect();
    for w in r.windows(2) {
        assert!((3.5..=4.5).contains(&(w[0] / w[1])), "{r:?}");
    }
}

#[test]
fn riccati_field_fails_pohlmeyer() {
    let psi0 = ScalarProfile::Gaussian { amplitude: 0.5, width: 1.0, center: 0.0 };
    let r: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| pohlmeyer(&riccati_blowup(&psi0, -3.0, 3.0, h, 1.0).unwrap().field))
        .collect();
    assert!(r.iter().all(|x| *x > 0.05), "{r:?}");
    assert!(r[2] > 0.5 * r[0], "{r:?}");
}

#[test]
fn energy_drift_constant_is_stable() {
    let c: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| conservation_report(&sphere_solution(h, 1.0, 0.5), Some(1.0)).unwrap().energy_drift / (h * h))
        .collect();
    assert!(c[1] / c[2] < 1.5 && c[2] / c[1] < 1.5, "{c:?}");
}

#[test]
fn rotation_identity_residual_is_second_order() {
    let r: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&h| hardwire_check(&sphere_solution(h, 1.0, 0.5)).unwrap().identity).collect();
    for w in r.windows(2) {
        assert!((3.5..=4.5).contains(&(w[0] / w[1])), "{r:?}");
    }
}

#[test]
fn mixed_stress_component_vanishes() {
    let phi = sphere_solution(0.02, 1.0, 0.5);
    assert!(energy_momentum(&phi).unwrap().max_abs_t_uv() < 1e-10);
}

#[test]
fn constant_map_carries_no_energy() {
    let phi = sphere_solution(0.05, 0.0, 0.0);
    let em = energy_momentum(&phi).unwrap();
    assert!(em.energy_series().iter().all(|(_, e)| *e == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rotation_generator_is_exactly_antisymmetric(amp in 0.1f64..2.0, vel in -1.0f64..1.0, k in 0usize..3) {
        let h = [0.1, 0.05, 0.025][k];
        let hw = hardwire_check(&sphere_solution(h, amp, vel)).unwrap();
        prop_assert_eq!(hw.antisymmetry, 0.0);
        prop_assert!(hw.identity.is_finite());
    }
}
