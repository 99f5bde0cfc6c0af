use proptest::prelude::*;
use wavemap::geometry::{TargetDescriptor, TargetManifold};

fn unit(p: &[f64]) -> Vec<f64> {
    let n = p.iter().map(|a| a * a).sum::<f64>().sqrt();
    p.iter().map(|a| a / n).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sphere_contraction_is_normal(p in vec3(), x in vec3(), y in vec3()) {
        prop_assume!(dot(&p, &p) > 1e-2);
        let s2 = TargetManifold::sphere_extrinsic(3).unwrap();
        let p = unit(&p);
        let c = s2.contract(&p, &x, &y).unwrap();
        let xy = dot(&x, &y);
        for m in 0..3 {
            prop_assert!((c[m] - p[m] * xy).abs() <= 1e-14 * (1.0 + xy.abs()));
        }
    }

    #[test]
    fn sphere_retraction_is_idempotent(p in vec3()) {
        prop_assume!(dot(&p, &p) > 1e-2);
        let s2 = TargetManifold::sphere_extrinsic(3).unwrap();
        let q = s2.retract(&p);
        prop_assert!((dot(&q, &q) - 1.0).abs() < 1e-15);
        prop_assert_eq!(s2.retract(&q), q);
    }

    #[test]
    fn stereographic_metric_is_conformal(a in -0.5f64..0.5, b in -0.5f64..0.5, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let chart = TargetDescriptor::Stereographic.build().unwrap();
        let len = chart.metric_length(&[a, b], &[x, y]).unwrap();
        let expected = 2.0 * (x * x + y * y).sqrt() / (1.0 + a * a + b * b);
        prop_assert!((len - expected).abs() < 1e-10 * (1.0 + expected));
    }

    #[test]
    fn geodesic_acceleration_is_radial(p in vec3(), x in vec3()) {
        prop_assume!(dot(&p, &p) > 1e-2);
        let s2 = TargetManifold::sphere_extrinsic(3).unwrap();
        let p = unit(&p);
        let px = dot(&p, &x);
        let tangent: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - px * b).collect();
        let c = s2.contract(&p, &tangent, &tangent).unwrap();
        let coef = dot(&c, &p);
        prop_assert!((coef - dot(&tangent, &tangent)).abs() < 1e-13 * (1.0 + coef.abs()));
        for m in 0..3 {
            prop_assert!((c[m] - coef * p[m]).abs() < 1e-14 * (1.0 + coef.abs()));
        }
    }

    #[test]
    fn christoffel_symbols_are_symmetric(a in -0.6f64..0.6, b in -0.6f64..0.6, p in vec3()) {
        prop_assume!(dot(&p, &p) > 1e-2);
        let targets = [
            (TargetManifold::sphere_extrinsic(3).unwrap(), unit(&p)),
            (TargetDescriptor::Stereographic.build().unwrap(), vec![a, b]),
            (TargetManifold::circle_intrinsic(), vec![a]),
        ];
        for (t, q) in &targets {
            let d = t.chart_dim();
            let gam = t.christoffel(q).unwrap();
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        let (x, y) = (gam[(k * d + i) * d + j], gam[(k * d + j) * d + i]);
                        prop_assert!((x - y).abs() <= 1e-15 * (1.0 + x.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn metric_length_is_homogeneous(a in -0.6f64..0.6, b in -0.6f64..0.6, v in prop::collection::vec(-2.0f64..2.0, 2), c in -5.0f64..5.0) {
        let chart = TargetDescriptor::Stereographic.build().unwrap();
        let p = [a, b];
        let cv: Vec<f64> = v.iter().map(|x| c * x).collect();
        let l1 = chart.metric_length(&p, &cv).unwrap();
        let l0 = chart.metric_length(&p, &v).unwrap();
        prop_assert!((l1 - c.abs() * l0).abs() <= 4.0 * f64::EPSILON * (1.0 + l1));
    }

    #[test]
    fn flat_target_has_no_nonlinearity(p in vec3(), x in vec3(), y in vec3()) {
        let flat = TargetManifold::flat(3).unwrap();
        prop_assert!(flat.contract(&p, &x, &y).unwrap().iter().all(|c| *c == 0.0));
    }
}

#[test]
fn descriptors_round_trip_through_json() {
    for target in [
        TargetManifold::sphere_extrinsic(3).unwrap(),
        TargetManifold::sphere_extrinsic(2).unwrap(),
        TargetManifold::circle_intrinsic(),
        TargetManifold::flat(2).unwrap(),
    ] {
        let json = serde_json::to_string(&target.descriptor()).unwrap();
        let back: TargetDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build().unwrap().descriptor(), target.descriptor());
    }
}

#[test]
fn embedded_circle_measures_euclidean_lengths() {
    let s1 = TargetManifold::sphere_extrinsic(2).unwrap();
    assert_eq!(s1.chart_dim(), 2);
    assert!(s1.is_sphere());
    let len = s1.metric_length(&[1.0, 0.0], &[0.0, 3.0]).unwrap();
    assert_eq!(len, 3.0);
}
