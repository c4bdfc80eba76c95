use pqsq::potential::{build_potential, check_subquadratic, CoordinatePotential, IntervalConfig, Majorant, PotentialSpec};
use pqsq::DistanceMode;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_majorant(rng: &mut ChaCha8Rng) -> Majorant {
    match rng.random_range(0..5) {
        0 => Majorant::Absolute,
        1 => Majorant::Power { q: rng.random_range(0.1..=2.0) },
        2 => Majorant::Log1p,
        3 => Majorant::Square,
        _ => Majorant::PenaltyMixture { alpha: rng.random_range(0.05..=1.0) },
    }
}

fn random_thresholds(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let p = rng.random_range(1..=8);
    let mut r = vec![0.0];
    for _ in 0..p {
        let last = *r.last().unwrap();
        r.push(last + rng.random_range(0.01..2.0));
    }
    r
}

#[test]
fn absolute_value_closed_form() {
    let spec = build_potential(Majorant::Absolute, &[vec![0.0, 1.0, 2.0]]).unwrap();
    let c = spec.coordinate(0);
    let a = [1.0, 1.0 / 3.0, 0.0];
    let b = [0.0, 2.0 / 3.0, 2.0];
    for k in 0..3 {
        assert!((c.a()[k] - a[k]).abs() <= 1e-15, "a[{k}] = {}", c.a()[k]);
        assert!((c.b()[k] - b[k]).abs() <= 1e-15, "b[{k}] = {}", c.b()[k]);
    }
    assert_eq!(c.evaluate(0.5), 0.25);
    assert!((c.evaluate(1.5) - (2.0 / 3.0 + 0.75)).abs() < 1e-15);
    assert_eq!(c.evaluate(7.0), 2.0);
}

#[test]
fn knots_interpolate_the_majorant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let f = random_majorant(&mut rng);
        let r = random_thresholds(&mut rng);
        let spec = build_potential(f, &[r.clone()]).unwrap();
        let c = spec.coordinate(0);
        for &rk in &r {
            let (u, fx) = (c.evaluate(rk), f.eval(rk));
            assert!((u - fx).abs() <= 1e-10, "{f:?} at {rk}: u = {u}, f = {fx}");
            assert!((c.evaluate(-rk) - fx).abs() <= 1e-10);
        }
    }
}

#[test]
fn arbitrary_function_interpolation() {
    let f = |x: f64| (1.0 + x * x).sqrt() - 1.0;
    let r = [0.0, 0.3, 1.1, 2.0, 5.0];
    let c = CoordinatePotential::from_fn(f, &r).unwrap();
    for &rk in &r {
        assert!((c.evaluate(rk) - f(rk)).abs() < 1e-12);
    }
    assert!(c.is_subquadratic());
}

#[test]
fn growth_condition_is_checked() {
    // x⁴ grows faster than x²
    let fast = CoordinatePotential::from_fn(|x| x.powi(4), &[0.0, 1.0, 2.0]).unwrap();
    assert!(!fast.is_subquadratic());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let spec = build_potential(random_majorant(&mut rng), &[random_thresholds(&mut rng)]).unwrap();
        assert!(check_subquadratic(&spec));
    }
}

#[test]
fn json_round_trip_is_bit_faithful() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let f = random_majorant(&mut rng);
        let thresholds: Vec<Vec<f64>> = (0..3).map(|_| random_thresholds(&mut rng)).collect();
        let spec = build_potential(f, &thresholds).unwrap().with_trimmed(rng.random_bool(0.5));
        let text = serde_json::to_string(&spec).unwrap();
        let back: PotentialSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back.trimmed(), spec.trimmed());
        assert_eq!(back.majorant(), spec.majorant());
        for (x, y) in spec.coordinates().iter().zip(back.coordinates()) {
            for (p, q) in [(x.thresholds(), y.thresholds()), (x.a(), y.a()), (x.b(), y.b())] {
                assert!(p.iter().zip(q).all(|(s, t)| s.to_bits() == t.to_bits()));
            }
        }
    }
}

#[test]
fn json_layout_and_rejection() {
    let spec = build_potential(Majorant::Power { q: 0.5 }, &[vec![0.0, 1.0]]).unwrap();
    let v: serde_json::Value = serde_json::to_value(&spec).unwrap();
    assert_eq!(v["majorant"]["name"], "power");
    assert_eq!(v["thresholds"][0][1], 1.0);
    assert_eq!(v["trimmed"], false);
    // break continuity at the knot
    let bad = r#"{"majorant":{"name":"absolute"},"thresholds":[[0.0,1.0]],"a":[[1.0,0.0]],"b":[[0.0,5.0]],"trimmed":false}"#;
    assert!(serde_json::from_str::<PotentialSpec>(bad).is_err());
}

#[test]
fn data_driven_intervals() {
    let columns = vec![vec![0.0, 1.0, 4.0, 10.0], vec![-1.0, 1.0, 1.0, 1.0]];
    let spec = PotentialSpec::from_columns(Majorant::Absolute, &columns, &IntervalConfig::amplitude(2, 1.0)).unwrap();
    assert_eq!(spec.coordinate(0).thresholds(), &[0.0, 2.5, 10.0]);
    assert_eq!(spec.coordinate(1).thresholds(), &[0.0, 0.5, 2.0]);
    assert!(!spec.trimmed());
    let trimmed = PotentialSpec::from_columns(Majorant::Absolute, &columns, &IntervalConfig::amplitude(2, 0.5)).unwrap();
    assert!(trimmed.trimmed());
    let mad = IntervalConfig { mode: DistanceMode::Mad, ..IntervalConfig::amplitude(2, 1.0) };
    assert!(PotentialSpec::from_columns(Majorant::Absolute, &columns, &mad).is_err());
}

fn majorant_strategy() -> impl Strategy<Value = Majorant> {
    prop_oneof![
        Just(Majorant::Absolute),
        (0.1f64..=2.0).prop_map(|q| Majorant::Power { q }),
        Just(Majorant::Log1p),
        Just(Majorant::Square),
        (0.05f64..=1.0).prop_map(|alpha| Majorant::PenaltyMixture { alpha }),
    ]
}

fn thresholds_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..3.0, 1..8).prop_map(|steps| {
        let mut r = vec![0.0];
        for s in steps {
            r.push(r.last().unwrap() + s);
        }
        r
    })
}

proptest! {
    #[test]
    fn continuous_at_every_knot(f in majorant_strategy(), r in thresholds_strategy()) {
        let c = build_potential(f, &[r.clone()]).unwrap().coordinate(0).clone();
        for &rk in &r[1..] {
            let left = c.evaluate(rk * (1.0 - 1e-12));
            prop_assert!((left - c.evaluate(rk)).abs() <= 1e-9 * (1.0 + f.eval(rk)));
        }
    }

    #[test]
    fn below_the_majorant_and_even(f in majorant_strategy(), r in thresholds_strategy(), x in -20.0f64..20.0) {
        let c = build_potential(f, &[r]).unwrap().coordinate(0).clone();
        let u = c.evaluate(x);
        prop_assert!(u <= f.eval(x) + 1e-9 * (1.0 + f.eval(x)));
        prop_assert_eq!(u, c.evaluate(-x));
        prop_assert!(u >= 0.0);
    }

    #[test]
    fn monotone_and_capped(f in majorant_strategy(), r in thresholds_strategy(), x in 0.0f64..20.0, dx in 0.0f64..5.0) {
        let c = build_potential(f, &[r.clone()]).unwrap().coordinate(0).clone();
        prop_assert!(c.evaluate(x + dx) >= c.evaluate(x) - 1e-12);
        let cap = f.eval(*r.last().unwrap());
        prop_assert!((c.evaluate(x + 1e3) - cap).abs() <= 1e-12 * (1.0 + cap));
    }

    #[test]
    fn quadratic_fragments_are_subquadratic(f in majorant_strategy(), r in thresholds_strategy(), x in 0.01f64..20.0, t in 1.0f64..4.0) {
        // u(x)/x² is nonincreasing in |x|
        let c = build_potential(f, &[r]).unwrap().coordinate(0).clone();
        let y = x * t;
        prop_assert!(c.evaluate(y) / (y * y) <= c.evaluate(x) / (x * x) * (1.0 + 1e-12) + 1e-15);
        prop_assert!(c.is_subquadratic());
    }
}
