use proptest::prelude::*;
use wavemap::conservation::pohlmeyer_check;
use wavemap::geometry::TargetManifold;
use wavemap::nullsolver::{FieldMeta, GridField, NullGrid};
use wavemap::oracles::{
    counterexample_norms, critical_counterexample, geodesic_wave_map, log_sweep, nirenberg_inverse,
    nirenberg_residual, nirenberg_transform, nonscattering_witness, power_sweep, proof_integral, riccati_blowup,
    ScalarProfile, WitnessOptions,
};

fn meta() -> FieldMeta {
    FieldMeta { scheme_order: 0, projection: false, label: "test".into() }
}

fn free_scalar(h: f64, amp: f64) -> GridField {
    let n = (4.0 / h).round() as usize + 1;
    let grid = NullGrid::square(h, -2.0, n).unwrap();
    GridField::from_fn(grid, TargetManifold::flat(1).unwrap(), meta(), |u, v, o| {
        o[0] = amp * ((-u * u).exp() + 0.5 * (v - 0.2).sin())
    })
}

#[test]
fn counterexample_norms_match_direct_sums() {
    // (p, N, ‖Q‖², ‖G‖²) by O(N²) summation in 30-digit arithmetic
    let oracle = [
        (0.51, 32, 0.159_032_006_937_522_27, 3.631_834_818_171_239_7),
        (1.01, 32, 0.084_536_003_505_555_38, 2.828_875_929_279_010_4),
        (0.51, 64, 0.232_788_443_026_003_44, 3.981_663_817_920_437),
    ];
    for (p, n, q, g) in oracle {
        let (q_got, g_got) = counterexample_norms(p, n, 1.0).unwrap();
        assert!((q_got - q).abs() < 1e-12 * q, "p = {p}, N = {n}: {q_got} vs {q}");
        assert!((g_got - g).abs() < 1e-12 * g, "p = {p}, N = {n}: {g_got} vs {g}");
    }
}

#[test]
fn proof_integral_matches_closed_form() {
    // (log^{1-e} N - log^{1-e} 2) / (1 - e)
    let n = (1u64 << 20) as f64;
    assert!((proof_integral(0.04, n) - 12.266_310_250_242_304).abs() < 1e-10);
    assert!((proof_integral(2.02, n) - 1.357_715_321_229_649_8).abs() < 1e-10);
}

#[test]
fn control_series_grows_more_slowly() {
    let cut = power_sweep(8, 14);
    let main = critical_counterexample(0.01, &cut, false).unwrap();
    let control = critical_counterexample(0.01, &cut, true).unwrap();
    assert!(main.is_monotone());
    assert!(main.relative_growth() > 2.0 * control.relative_growth());
    assert!(control.rows.iter().all(|r| r.g_norm_sq <= r.g_norm_sq_limit));
}

#[test]
fn riccati_guard_trips_at_unit_time() {
    let rep = riccati_blowup(&ScalarProfile::Constant { value: 1.0 }, -1.0, 1.0, 1.0 / 400.0, 1.5).unwrap();
    assert_eq!(rep.blowup_time, Some(1.0));
    let trip = rep.trip.expect("guard trips");
    assert!((0.98..=1.02).contains(&trip.t), "{trip:?}");
}

#[test]
fn geodesic_wave_map_passes_pohlmeyer_at_order_two() {
    let r: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            let phi = geodesic_wave_map(&free_scalar(h, 1.0), 1e-9).unwrap();
            let p = pohlmeyer_check(&phi).unwrap();
            p.residual_u().max(p.residual_v())
        })
        .collect();
    for w in r.windows(2) {
        assert!((3.5..=4.5).contains(&(w[0] / w[1])), "{r:?}");
    }
}

#[test]
fn nirenberg_substitution_of_a_free_field_is_second_order() {
    let r: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| nirenberg_residual(&nirenberg_inverse(&free_scalar(h, 0.3)).unwrap()).unwrap())
        .collect();
    for w in r.windows(2) {
        assert!((3.5..=4.5).contains(&(w[0] / w[1])), "{r:?}");
    }
}

#[test]
fn log_oscillation_has_a_floor_and_the_gaussian_primitive_scatters() {
    // ∫ G'²/4 for G = sin(log⟨x⟩), to 30 digits
    let mass = 0.206_642_530_673_905_9;
    let opts = WitnessOptions { points: 100_001, phase_grid: 240, ..WitnessOptions::default() };
    let ts = log_sweep(10.0, 1000.0, 7);
    let w = nonscattering_witness(&ScalarProfile::log_oscillation(), &ts, &opts).unwrap();
    assert!((w.weight_mass - mass).abs() < 1e-6, "{}", w.weight_mass);
    assert!(w.floor >= 0.01, "{}", w.floor);
    let control = nonscattering_witness(&ScalarProfile::primitive_of(ScalarProfile::gaussian()), &ts, &opts).unwrap();
    assert!(control.floor < 1e-3, "{}", control.floor);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nirenberg_round_trip_is_identity(amp in -0.4f64..0.4) {
        let phi = free_scalar(0.1, amp);
        let back = nirenberg_transform(&nirenberg_inverse(&phi).unwrap()).unwrap();
        prop_assert!(back.difference(&phi).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn counterexample_grows_monotonically(eps in 0.005f64..0.1) {
        let t = critical_counterexample(eps, &power_sweep(8, 12), false).unwrap();
        prop_assert!(t.is_monotone());
    }

    #[test]
    fn riccati_blowup_time_is_reciprocal_peak(a in 0.5f64..2.0) {
        let psi0 = ScalarProfile::Gaussian { amplitude: a, width: 1.0, center: 0.0 };
        let rep = riccati_blowup(&psi0, -1.0, 1.0, 0.01, 0.25).unwrap();
        prop_assert!((rep.blowup_time.unwrap() - 1.0 / a).abs() < 1e-15);
    }
}
