use pqsq::minorant::{evaluate_minorant, multiindex, splitting_minimize, MinorantFunction, QuadraticForm};
use pqsq::trace::{is_nonincreasing, DESCENT_SLACK};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MAX_ITER: usize = 1000;

/// `c + (x − m)ᵀ A Aᵀ (x − m) + δ‖x − m‖²` with random `A`, `m`, `c`.
fn random_form(rng: &mut ChaCha8Rng, n: usize) -> QuadraticForm {
    let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let delta = rng.random_range(0.05..1.0);
    let mut q2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            q2[i * n + j] = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum::<f64>();
        }
        q2[i * n + i] += delta;
    }
    for i in 0..n {
        for j in 0..i {
            q2[i * n + j] = q2[j * n + i];
        }
    }
    let m: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let c = rng.random_range(0.0..2.0);
    // expand c + (x − m)ᵀ Q (x − m)
    let qm: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q2[i * n + j] * m[j]).sum()).collect();
    let q0 = c + m.iter().zip(&qm).map(|(x, y)| x * y).sum::<f64>();
    let q1 = qm.iter().map(|v| -2.0 * v).collect();
    QuadraticForm::new(q0, q1, q2).unwrap()
}

fn random_minorant(rng: &mut ChaCha8Rng, n: usize) -> MinorantFunction {
    let count = rng.random_range(1..=6);
    MinorantFunction::new((0..count).map(|_| random_form(rng, n)).collect()).unwrap()
}

#[test]
fn splitting_descends_and_terminates() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for case in 0..100 {
        let n = rng.random_range(1..=3);
        let u = random_minorant(&mut rng, n);
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let r = splitting_minimize(&u, &x0, MAX_ITER).unwrap();
        assert!(r.iterations < MAX_ITER, "case {case}");
        assert!(is_nonincreasing(&r.trace, DESCENT_SLACK), "case {case}: {:?}", r.trace);
        assert_eq!(r.trace[0], evaluate_minorant(&u, &x0));
        assert_eq!(r.value, evaluate_minorant(&u, &r.x));
        assert!(r.value <= evaluate_minorant(&u, &x0));
    }
}

#[test]
fn fixed_points_are_local_minima() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checked = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let u = random_minorant(&mut rng, n);
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let r = splitting_minimize(&u, &x0, MAX_ITER).unwrap();
        if r.multiindex.len() != 1 {
            continue;
        }
        checked += 1;
        let i = r.multiindex[0];
        assert!(r.x.iter().zip(u.forms()[i].minimizer()).all(|(a, b)| (a - b).abs() < 1e-12));
        for _ in 0..50 {
            let y: Vec<f64> = r.x.iter().map(|v| v + rng.random_range(-1e-4..1e-4)).collect();
            assert!(evaluate_minorant(&u, &y) >= r.value - 1e-12);
        }
    }
    assert!(checked > 80);
}

fn grid_local_minima(u: &MinorantFunction, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step) as usize;
    let xs: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    let vs: Vec<f64> = xs.iter().map(|x| evaluate_minorant(u, &[*x])).collect();
    (1..n).filter(|&i| vs[i] <= vs[i - 1] && vs[i] <= vs[i + 1]).map(|i| xs[i]).collect()
}

#[test]
fn one_dimensional_results_match_grid_minima() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for case in 0..50 {
        let u = random_minorant(&mut rng, 1);
        let minima = grid_local_minima(&u, -10.0, 10.0, 1e-4);
        for _ in 0..5 {
            let x0 = rng.random_range(-6.0..6.0);
            let r = splitting_minimize(&u, &[x0], MAX_ITER).unwrap();
            let nearest = minima.iter().map(|m| (m - r.x[0]).abs()).fold(f64::INFINITY, f64::min);
            assert!(nearest <= 1e-3, "case {case}: {} is {nearest} from a grid minimum", r.x[0]);
        }
    }
}

#[test]
fn cone_combination_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let (u, v) = (random_minorant(&mut rng, n), random_minorant(&mut rng, n));
        let (alpha, beta) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let w = u.conic_combination(alpha, &v, beta).unwrap();
        assert_eq!(w.forms().len(), u.forms().len() * v.forms().len());
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let expect = alpha * evaluate_minorant(&u, &x) + beta * evaluate_minorant(&v, &x);
            let got = evaluate_minorant(&w, &x);
            assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{got} vs {expect}");
        }
        let r = splitting_minimize(&w, &vec![0.0; n], MAX_ITER).unwrap();
        assert!(is_nonincreasing(&r.trace, DESCENT_SLACK));
    }
}

#[test]
fn ties_report_every_active_form() {
    let u = MinorantFunction::new(vec![
        QuadraticForm::centered(0.0, &[-1.0], 1.0).unwrap(),
        QuadraticForm::centered(0.0, &[1.0], 1.0).unwrap(),
    ])
    .unwrap();
    assert_eq!(multiindex(&u, &[0.0], 1e-12), vec![0, 1]);
    let r = splitting_minimize(&u, &[0.0], MAX_ITER).unwrap();
    assert_eq!(r.x, vec![-1.0]);
    assert_eq!(r.value, 0.0);
}
