use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavemap::geometry::TargetDescriptor;
use wavemap::norms::{
    bracket, dilate, fit_slope, hsd_norm, hsd_norm_null, l11_norm, localized_square_sum_norm, product_sobolev_norm,
    signed_index, sobolev_norm, tilde_d, verify_estimate, verify_rellich, EnsembleSpec, EstimateId, EstimateParams,
    RescaleGrid, SpectralField,
};
use wavemap::nullsolver::CauchyData;

fn gaussian_field() -> SpectralField {
    SpectralField::from_fn_1d(1024, 40.0, -20.0, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap()
}

#[test]
fn gaussian_sobolev_norms_match_quadrature() {
    // (1/2π) ∫ π e^{-ξ²/2} ⟨ξ⟩^{2s} dξ, evaluated to 30 digits
    let oracle = [
        (-0.5, 0.994_820_046_188_899_6),
        (0.0, 1.119_515_134_920_247_6),
        (0.8, 1.456_100_088_113_040_8),
        (1.0, 1.583_233_487_086_159_5),
    ];
    let f = gaussian_field();
    for (s, want) in oracle {
        let got = sobolev_norm(&f, s, false);
        assert!((got - want).abs() < 1e-12, "s = {s}: {got} vs {want}");
    }
    assert!((sobolev_norm(&f, 1.0, true) - 1.119_515_134_920_247_6).abs() < 1e-12);
    // |ξ| is not smooth at 0, so Ḣ^{1/2} carries an O(Δξ²) periodisation error
    let wide = SpectralField::from_fn_1d(4096, 160.0, -80.0, |x| Complex64::new((-x * x).exp(), 0.0)).unwrap();
    let (e40, e160) = ((sobolev_norm(&f, 0.5, true) - 1.0).abs(), (sobolev_norm(&wide, 0.5, true) - 1.0).abs());
    assert!(e160 < 1e-4 && (12.0..20.0).contains(&(e40 / e160)), "{e40} {e160}");
}

#[test]
fn single_modes_have_closed_form_norms() {
    let l = 2.0 * PI;
    for k in [0i64, 1, 3, 7] {
        let f = SpectralField::from_fn_1d(64, l, 0.0, |x| Complex64::new(0.0, k as f64 * x).exp()).unwrap();
        for s in [-1.0, -0.3, 0.0, 0.8] {
            let want = l.sqrt() * bracket(k as f64).powf(s);
            assert!((sobolev_norm(&f, s, false) - want).abs() < 1e-12 * want);
        }
    }
    let (mu, nu) = (3.0, -2.0);
    let f = SpectralField::from_fn_2d((32, 32), (l, l), (0.0, 0.0), |u, v| Complex64::new(0.0, mu * u + nu * v).exp())
        .unwrap();
    let p = product_sobolev_norm(&f, 0.8, -0.2);
    assert!((p - l * bracket(mu).powf(0.8) * bracket(nu).powf(-0.2)).abs() < 1e-11);
    let h = hsd_norm(&f, 0.8, 0.6);
    let want = l * bracket(mu.abs() + nu.abs()).powf(0.8) * bracket(mu.abs() - nu.abs()).powf(0.6);
    assert!((h - want).abs() < 1e-11 * want, "{h} vs {want}");
}

#[test]
fn dtilde_kernel_is_confined_to_the_bump_support() {
    let (n, period) = (512, 8.0);
    let dx = period / n as f64;
    let j0 = 200;
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    samples[j0] = Complex64::new(1.0, 0.0);
    let delta = SpectralField::from_samples_1d(samples, period, -4.0).unwrap();
    for s in [-0.5, 0.8, 1.0] {
        let out = tilde_d(&delta, s).unwrap();
        let peak = out.samples().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (j, c) in out.samples().iter().enumerate() {
            let d = ((j as f64 - j0 as f64) * dx).abs();
            let d = d.min(period - d);
            if d > 1.0 + 1e-9 {
                assert!(c.norm() < 1e-10 * peak, "s = {s}, distance {d}: {}", c.norm());
            }
        }
    }
}

fn random_null_field(n: usize, rng: &mut ChaCha8Rng, alpha: f64) -> SpectralField {
    let l = 2.0 * PI;
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for m in 0..n {
            let w = (bracket(signed_index(k, n) as f64) * bracket(signed_index(m, n) as f64)).powf(-alpha);
            c[k * n + m] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * w;
        }
    }
    SpectralField::from_coefficients_2d(c, (n, n), (l, l), (0.0, 0.0)).unwrap()
}

fn hsd_ratio_range(n: usize, s: f64, delta: f64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut range = (f64::INFINITY, 0.0f64);
    for k in 0..1000 {
        let f = random_null_field(n, &mut rng, [0.0, 0.5, 1.0, 1.5][k % 4]);
        let prod = product_sobolev_norm(&f, s, delta).max(product_sobolev_norm(&f, delta, s));
        let r = hsd_norm_null(&f, s, delta) / prod;
        range = (range.0.min(r), range.1.max(r));
    }
    range
}

#[test]
fn hsd_norm_is_equivalent_to_the_product_norms() {
    let (s, delta) = (0.8, 0.6);
    // measured ranges: [1.908, 2.662] at 16², [2.026, 2.725] at 32², [2.094, 2.780] at 64²
    let upper = 2f64.powf(s + delta) * 2f64.sqrt();
    let mut prev: Option<(f64, f64)> = None;
    for n in [16, 32, 64] {
        let (lo, hi) = hsd_ratio_range(n, s, delta);
        assert!(lo >= 1.0 && hi <= upper, "{n}: [{lo}, {hi}]");
        if let Some((plo, phi)) = prev {
            assert!((lo / plo - 1.0).abs() < 0.1 && (hi / phi - 1.0).abs() < 0.1, "{n}: [{lo}, {hi}]");
        }
        prev = Some((lo, hi));
    }
}

#[test]
fn localized_square_sum_reproduces_the_sobolev_norm() {
    // measured range [0.9015, 1.2497], identical at 512 and 1024 samples
    for n in [512, 1024] {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let amps: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() - 0.5).collect();
            let f = SpectralField::from_fn_1d(n, 8.0, -4.0, |x| {
                let v: f64 = amps
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k as f64 + 1.0) * x).sin() * (-(x - a) * (x - a)).exp())
                    .sum();
                Complex64::new(v, 0.0)
            })
            .unwrap();
            let r = localized_square_sum_norm(&f, 0.8).unwrap() / sobolev_norm(&f, 0.8, false);
            assert!((0.90..=1.25).contains(&r), "{r}");
        }
    }
}

#[test]
fn stereographic_l11_matches_quadrature() {
    // ∫|f'|_h + sup|f| + ∫|g|_h with |v|_h = 2|v|/(1+|p|²), by adaptive quadrature
    let oracle = 0.043_959_945_970_476_61;
    let a = 0.004;
    let data = CauchyData::from_fn(
        -4.0,
        4.0,
        0.005,
        2,
        |x, o| o.copy_from_slice(&[a * (-x * x).exp(), a * (-(x - 0.5) * (x - 0.5)).exp()]),
        |x, o| o.copy_from_slice(&[a * (-(x + 0.3) * (x + 0.3)).exp(), 0.0]),
    )
    .unwrap();
    let chart = TargetDescriptor::Stereographic.build().unwrap();
    let got = l11_norm(&data, &chart).unwrap();
    assert!((got - oracle).abs() < 1e-5 * oracle, "{got}");
}

#[test]
fn rellich_norms_decay_for_smooth_data() {
    let rep = verify_rellich(
        |x: f64| (-x * x).exp(),
        |x: f64| (-(x - 0.5) * (x - 0.5)).exp(),
        0.6,
        0.8,
        &[2.0, 4.0, 8.0, 16.0, 32.0],
        &RescaleGrid::default(),
    )
    .unwrap();
    assert!(rep.decay_exponent <= -0.05, "{rep:?}");
    assert!(rep.norms.windows(2).all(|w| w[1] < w[0]), "{rep:?}");
}

/// The five estimates outside the acceptance manifest, on ensembles of 10³
/// fields over N = 2⁶…2¹².
#[test]
fn remaining_estimates_have_flat_cutoff_scaling() {
    let spec = EnsembleSpec::default();
    for id in [EstimateId::LConv, EstimateId::CompactEst, EstimateId::HWh, EstimateId::HhWwhh, EstimateId::HhHwhw] {
        let params = EstimateParams::default_for(id);
        assert!(params.in_region(id));
        let rep = verify_estimate(id, &params, &spec).unwrap();
        assert!(rep.cutoff_scaling_slope <= 0.05, "{}: {}", id.name(), rep.cutoff_scaling_slope);
    }
}

proptest! {
    #[test]
    fn parseval_holds(samples in prop::collection::vec(-1.0f64..1.0, 64), period in 1.0f64..20.0) {
        let f = SpectralField::from_real_1d(&samples, period, 0.0).unwrap();
        let (a, b) = (sobolev_norm(&f, 0.0, false), f.sample_l2());
        prop_assert!((a - b).abs() <= 1e-10 * b.max(1e-300));
    }

    #[test]
    fn homogeneous_norms_scale_under_dilation(lambda in 0.25f64..4.0, s in -0.4f64..1.5) {
        let f = gaussian_field();
        let g = dilate(&f, lambda).unwrap();
        let want = lambda.powf(0.5 - s) * sobolev_norm(&f, s, true);
        prop_assert!((sobolev_norm(&g, s, true) - want).abs() <= 1e-10 * want);
    }

    #[test]
    fn slope_fit_recovers_power_laws(p in -2.0f64..2.0, c in 0.1f64..10.0) {
        let x: Vec<f64> = (6..=12).map(|k| k as f64 * 2f64.ln()).collect();
        let y: Vec<f64> = x.iter().map(|a| c.ln() + p * a).collect();
        let (slope, res) = fit_slope(&x, &y);
        prop_assert!((slope - p).abs() < 1e-12);
        prop_assert!(res < 1e-12);
    }
}
