//! With `f = x²` and thresholds beyond the data spread every residual stays
//! on the first parabola, so the PQSQ fitters must reproduce the classical
//! least-squares answers.

use nalgebra::DMatrix;
use pqsq::approximators::{fit_pca, IntervalPolicy, PcaOptions};
use pqsq::{pqsq_kmeans, pqsq_mean, DataMatrix, IntervalConfig, KMeansOptions, Majorant, MeanOptions, PotentialSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn untrimmed_square(data: &DataMatrix) -> PotentialSpec {
    PotentialSpec::from_columns(Majorant::Square, &data.columns(), &IntervalConfig::amplitude(5, 10.0)).unwrap()
}

/// Gaussian data with a spread of column scales so that the spectrum is
/// well separated.
fn anisotropic(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DataMatrix {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let scales: Vec<f64> = (0..m).map(|k| 3.0 * 0.75f64.powi(k as i32)).collect();
    let shift: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
    // random rotation of the first two axes to avoid axis-aligned answers
    let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let mut values = Vec::with_capacity(n * m);
    for _ in 0..n {
        let mut row: Vec<f64> = scales.iter().map(|s| s * normal.sample(rng)).collect();
        if m >= 2 {
            let (a, b) = (row[0], row[1]);
            row[0] = t.cos() * a - t.sin() * b;
            row[1] = t.sin() * a + t.cos() * b;
        }
        values.extend(row.iter().zip(&shift).map(|(v, s)| v + s));
    }
    DataMatrix::new(n, m, values).unwrap()
}

#[test]
fn mean_is_the_arithmetic_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (n, m) = (rng.random_range(5..500), rng.random_range(1..20));
        let data = anisotropic(&mut rng, n, m);
        let opts = MeanOptions { init: Some(data.row(n - 1).to_vec()), ..MeanOptions::default() };
        let fit = pqsq_mean(&data, &untrimmed_square(&data), &opts).unwrap();
        let mean = data.arithmetic_mean();
        for (a, b) in fit.center.iter().zip(&mean) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

/// Lloyd's algorithm: nearest centroid by squared distance, lowest index on
/// ties, then centroid = member mean, until the labels stop changing.
fn lloyd(data: &DataMatrix, mut centroids: Vec<Vec<f64>>) -> Vec<usize> {
    let mut labels: Vec<usize> = vec![usize::MAX; data.rows()];
    loop {
        let next: Vec<usize> = (0..data.rows())
            .map(|i| {
                let d = |c: &Vec<f64>| c.iter().zip(data.row(i)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                (0..centroids.len()).fold(0, |best, j| if d(&centroids[j]) < d(&centroids[best]) { j } else { best })
            })
            .collect();
        if next == labels {
            return labels;
        }
        labels = next;
        for (j, c) in centroids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..data.rows()).filter(|&i| labels[i] == j).collect();
            assert!(!members.is_empty(), "oracle run produced an empty cluster");
            for (k, v) in c.iter_mut().enumerate() {
                *v = members.iter().map(|&i| data.get(i, k)).sum::<f64>() / members.len() as f64;
            }
        }
    }
}

fn blobs(rng: &mut ChaCha8Rng, k: usize, per: usize, m: usize) -> DataMatrix {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let centers: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| rng.random_range(-10.0..10.0)).collect()).collect();
    let mut values = Vec::new();
    for c in &centers {
        for _ in 0..per {
            values.extend(c.iter().map(|v| v + 1.5 * normal.sample(rng)));
        }
    }
    DataMatrix::new(k * per, m, values).unwrap()
}

#[test]
fn kmeans_matches_lloyd() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..20 {
        let (k, m) = (rng.random_range(2..6), rng.random_range(2..8));
        let per = rng.random_range(20..80);
        let data = blobs(&mut rng, k, per, m);
        let init: Vec<Vec<f64>> = rand::seq::index::sample(&mut rng, data.rows(), k)
            .into_iter()
            .map(|i| data.row(i).to_vec())
            .collect();
        let expect = lloyd(&data, init.clone());
        let opts = KMeansOptions { init: Some(init), ..KMeansOptions::new(k) };
        let model = pqsq_kmeans(&data, &untrimmed_square(&data), &opts).unwrap();
        assert_eq!(model.labels, expect, "case {case}");
    }
}

#[test]
fn pca_spans_the_svd_subspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..20 {
        let m = rng.random_range(2..=20);
        let n = rng.random_range(50..=500);
        let data = anisotropic(&mut rng, n, m);
        let k = rng.random_range(1..=m.min(4));
        let policy =
            IntervalPolicy::Adaptive { majorant: Majorant::Square, config: IntervalConfig::amplitude(5, 10.0), recompute_on_residuals: true };
        let mut opts = PcaOptions::new(k, policy);
        opts.restarts = 1;
        let model = fit_pca(&data, &opts).unwrap();

        let mean = data.arithmetic_mean();
        let centered = DMatrix::from_fn(n, m, |i, j| data.get(i, j) - mean[j]);
        let svd = centered.svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|a, b| svd.singular_values[*b].partial_cmp(&svd.singular_values[*a]).unwrap());
        let reference = DMatrix::from_fn(m, k, |r, c| vt[(order[c], r)]);
        let ours = DMatrix::from_fn(m, k, |r, c| model.components[c][r]);
        // cosines of the principal angles are the singular values of UᵀV
        let cosines = (ours.transpose() * reference).singular_values();
        let worst = cosines.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(worst > 1.0 - 1e-6, "case {case}: smallest cosine {worst}");
    }
}
