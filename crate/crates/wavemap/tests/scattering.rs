use proptest::prelude::*;
use wavemap::geometry::{TargetDescriptor, TargetManifold};
use wavemap::norms::{l11_norm, standard_bump};
use wavemap::nullsolver::{solve, CauchyData, FieldMeta, GridField, NullGrid, SolveOptions};
use wavemap::scattering::{
    compactify, compactify_fn, concentration_profile, decompactify, free_resolution_check, interaction_integral,
    scattering_defect, scattering_states, scattering_states_compactified,
};

fn s2() -> TargetManifold {
    TargetManifold::sphere_extrinsic(3).unwrap()
}

fn bump_data(h: f64, amp: f64, vel: f64) -> CauchyData {
    CauchyData::from_fn(
        -3.0,
        3.0,
        0.5 * h,
        3,
        |x, o| {
            let th = amp * standard_bump(x);
            o.copy_from_slice(&[th.sin(), 0.0, th.cos()]);
        },
        |x, o| o.copy_from_slice(&[0.0, vel * standard_bump(x - 0.2), 0.0]),
    )
    .unwrap()
}

fn closed_form(u: f64, v: f64, o: &mut [f64]) {
    o[0] = (-u * u).exp() * (0.5 * v).cos() + 0.3 * (u - v).sin();
}

#[test]
fn decompactification_inverts_compactification() {
    let grid = NullGrid::square(0.05, -2.0, 81).unwrap();
    let exact = GridField::from_fn(grid.clone(), TargetManifold::flat(1).unwrap(), FieldMeta::default(), closed_form);
    let err = |n: usize| {
        let big = compactify_fn(n, 1.2, &TargetManifold::flat(1).unwrap(), closed_form).unwrap();
        decompactify(&big, &grid).unwrap().difference(&exact).unwrap().sup_norm()
    };
    let (e1, e2) = (err(201), err(401));
    assert!(e2 < 1e-4 && e1 / e2 > 6.0, "{e1} {e2}");
    let big = compactify(&exact, 101, 1.0).unwrap();
    for (bu, bv) in [(0.0, 0.0), (0.7, -0.3), (-1.0, 1.0)] {
        let mut want = [0.0];
        closed_form(f64::tan(bu), f64::tan(bv), &mut want);
        assert!((big.value_at(bu, bv).unwrap()[0] - want[0]).abs() < 1e-4);
    }
    assert!(big.value_at(1.1, 0.0).is_err());
}

#[test]
fn compactly_supported_data_resolves_exactly_into_free_waves() {
    let h = 0.02;
    let data = bump_data(h, 1.2, 0.6);
    let phi = solve(&data, &s2(), 2.5, h, &SolveOptions::default()).unwrap();
    let energy = data.energy();
    let tol = 5.0 * h * h * energy;
    let rep = free_resolution_check(&phi, &data, 1.2).unwrap();
    assert!(rep.max_residual() <= tol, "{rep:?} vs {tol}");
    let states = scattering_states(&phi, 1.2).unwrap();
    let defects = scattering_defect(&phi, &states, &[0.0, 0.5, 1.2, 1.6, 2.0]).unwrap();
    assert!(defects.max_beyond(1.2) <= tol, "{defects:?}");
    assert!(defects.plus[0].l11 > 100.0 * tol);
    for s in [&states.plus, &states.minus] {
        assert!((s.energy() - energy).abs() < 0.01 * energy, "{} vs {energy}", s.energy());
    }
}

#[test]
fn support_outside_the_radius_is_rejected() {
    let data = bump_data(0.05, 1.0, 0.5);
    let phi = solve(&data, &s2(), 1.5, 0.05, &SolveOptions::default()).unwrap();
    assert!(free_resolution_check(&phi, &data, 0.5).is_err());
}

#[test]
fn compactified_states_agree_with_the_direct_ones() {
    let h = 0.02;
    let data = bump_data(h, 0.8, 0.4);
    let phi = solve(&data, &s2(), 2.0, h, &SolveOptions::default()).unwrap();
    let direct = scattering_states(&phi, 1.2).unwrap();
    let far = scattering_states_compactified(&data, &s2(), 0.005, &phi.grid).unwrap();
    let worst = (0..phi.grid.n)
        .flat_map(|k| {
            let x = phi.grid.coord(k);
            [
                direct.plus.value(x, -x).iter().zip(far.plus.value(x, -x)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
                direct.minus.value(x, -x).iter().zip(far.minus.value(x, -x)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            ]
        })
        .fold(0.0, f64::max);
    assert!(worst < 5e-3, "{worst}");
}

#[test]
fn interaction_is_quadratic_in_the_data_size() {
    let chart = TargetDescriptor::Stereographic.build().unwrap();
    let ratio = |a: f64| {
        let data = CauchyData::from_fn(
            -3.0,
            3.0,
            0.01,
            2,
            |x, o| o.copy_from_slice(&[a * (-x * x).exp(), a * (-(x - 0.5) * (x - 0.5)).exp()]),
            |x, o| o.copy_from_slice(&[a * (-(x + 0.3) * (x + 0.3)).exp(), 0.0]),
        )
        .unwrap();
        let phi = solve(&data, &chart, 1.0, 0.02, &SolveOptions::default()).unwrap();
        interaction_integral(&phi).unwrap() / l11_norm(&data, &chart).unwrap().powi(2)
    };
    let r: Vec<f64> = [0.004, 0.008, 0.016].iter().map(|&a| ratio(a)).collect();
    assert!(r.iter().all(|x| *x > 0.0 && *x < 1.0), "{r:?}");
    assert!(r[0] / r[2] < 1.2 && r[2] / r[0] < 1.2, "{r:?}");
}

#[test]
fn concentration_windows_shrink_with_the_radius() {
    let data = bump_data(0.02, 1.0, 0.5);
    let deltas = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
    let rep = concentration_profile(&data, &s2(), &deltas, 0.3).unwrap();
    assert!(rep.rows.windows(2).all(|w| w[0].worst_mass <= w[1].worst_mass), "{rep:?}");
    let r = rep.localization_radius.expect("small windows carry little mass");
    assert!(rep.rows.iter().filter(|w| w.delta <= r).all(|w| w.worst_mass < 0.3));
    assert!(rep.rows.last().unwrap().worst_mass >= 0.3);
    assert!(concentration_profile(&data, &s2(), &[0.0], 0.3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn window_mass_is_monotone_and_bounded_by_the_total(amp in 0.1f64..2.0, vel in -1.0f64..1.0) {
        let data = bump_data(0.05, amp, vel);
        let deltas = [0.05, 0.1, 0.3, 1.0, 10.0];
        let rep = concentration_profile(&data, &s2(), &deltas, 1e-6).unwrap();
        prop_assert!(rep.rows.windows(2).all(|w| w[0].worst_mass <= w[1].worst_mass + 1e-15));
        let total = rep.rows.last().unwrap().worst_mass;
        prop_assert!((total - l11_norm(&data, &s2()).unwrap() + 1.0).abs() < 0.05 * total);
    }
}
