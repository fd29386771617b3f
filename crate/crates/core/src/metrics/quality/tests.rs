use super::*;
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Dense = Vec<Vec<f64>>;

fn mat_mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

fn transpose(a: &Dense) -> Dense {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

fn mean_cov(rows: &Dense) -> (Vec<f64>, Dense) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let cov = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect();
    (mean, cov)
}

fn cholesky(a: &Dense) -> Dense {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = if i == j { (a[i][i] - s).sqrt() } else { (a[i][j] - s) / l[j][j] };
        }
    }
    l
}

/// Cyclic Jacobi rotations until off-diagonal mass vanishes.
fn jacobi_eigenvalues(mut a: Dense) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// ΣaΣb is similar to LᵀΣbL for Σa = LLᵀ, which is symmetric.
fn oracle_frechet(a: &Dense, b: &Dense) -> f64 {
    let (ma, ca) = mean_cov(a);
    let (mb, cb) = mean_cov(b);
    let l = cholesky(&ca);
    let inner = mat_mul(&mat_mul(&transpose(&l), &cb), &l);
    let tr_sqrt: f64 = jacobi_eigenvalues(inner).iter().map(|v| v.max(0.0).sqrt()).sum();
    let dist: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y).powi(2)).sum();
    let tr: f64 = (0..ca.len()).map(|i| ca[i][i] + cb[i][i]).sum();
    dist + tr - 2.0 * tr_sqrt
}

fn to_set(rows: &Dense) -> EmbeddingSet {
    let d = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    EmbeddingSet::new(Array2::from_shape_vec((rows.len(), d), flat).unwrap(), "test").unwrap()
}

/// Correlated Gaussian rows: x = A·z + shift.
fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: f64) -> Dense {
    let mix: Dense = (0..d).map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect()).collect();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            (0..d).map(|i| (0..d).map(|j| mix[i][j] * z[j]).sum::<f64>() + shift).collect()
        })
        .collect()
}

#[test]
fn identical_sets_are_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = to_set(&random_rows(&mut rng, 50, 5, 0.0));
    assert!(frechet_distance(&a, &a).unwrap().abs() < 1e-6);
}

#[test]
fn moment_matched_1d() {
    // mean 0 / 3, unbiased variance 1
    let a = EmbeddingSet::new(array![[-1.0], [0.0], [1.0]], "a").unwrap();
    let b = EmbeddingSet::new(array![[2.0], [3.0], [4.0]], "b").unwrap();
    assert!((frechet_distance(&a, &b).unwrap() - 9.0).abs() < 1e-6);
}

#[test]
fn matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10 {
        let a = random_rows(&mut rng, 40, 5, 0.0);
        let b = random_rows(&mut rng, 60, 5, 0.5 * trial as f64);
        let got = frechet_distance(&to_set(&a), &to_set(&b)).unwrap();
        let want = oracle_frechet(&a, &b);
        assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn frechet_errors() {
    let a = EmbeddingSet::new(array![[1.0, 2.0], [3.0, 4.0]], "a").unwrap();
    let b = EmbeddingSet::new(array![[1.0], [2.0]], "b").unwrap();
    assert!(matches!(frechet_distance(&a, &b), Err(Error::ShapeMismatch { .. })));
    let single = EmbeddingSet::new(array![[1.0, 2.0]], "s").unwrap();
    assert!(frechet_distance(&a, &single).is_err());
    assert!(EmbeddingSet::new(array![[f64::NAN]], "x").is_err());
}

fn probs(ids: &[&str], rows: Vec<[f64; 2]>) -> ProbabilitySet {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    ProbabilitySet::new(
        ids.iter().map(|s| s.to_string()).collect(),
        Array2::from_shape_vec((rows.len(), 2), flat).unwrap(),
    )
    .unwrap()
}

#[test]
fn kl_examples() {
    let reference = probs(&["a"], vec![[1.0, 0.0]]);
    let generated = probs(&["a"], vec![[0.5, 0.5]]);
    assert!((kl_divergence(&generated, &reference).unwrap() - 2f64.ln()).abs() < 1e-12);
    let p = probs(&["x", "y"], vec![[0.3, 0.7], [0.9, 0.1]]);
    assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    // pairing is by id, not position
    let swapped = probs(&["y", "x"], vec![[0.9, 0.1], [0.3, 0.7]]);
    assert_eq!(kl_divergence(&swapped, &p).unwrap(), 0.0);
}

#[test]
fn kl_errors() {
    let p = probs(&["x"], vec![[0.3, 0.7]]);
    let q = probs(&["z"], vec![[0.3, 0.7]]);
    assert!(kl_divergence(&q, &p).is_err());
    assert!(ProbabilitySet::new(vec!["a".into()], array![[0.3, 0.3]]).is_err());
    assert!(ProbabilitySet::new(vec!["a".into()], array![[1.5, -0.5]]).is_err());
    assert!(ProbabilitySet::new(vec!["a".into(), "a".into()], array![[1.0, 0.0], [1.0, 0.0]]).is_err());
}

fn rotation(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    m.qr().q()
}

fn apply(set: &Dense, r: &DMatrix<f64>, scale: f64) -> Dense {
    set.iter()
        .map(|row| {
            let v = r * DVector::from_column_slice(row) * scale;
            v.iter().copied().collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frechet_symmetry_rotation_scaling(seed in any::<u64>(), c in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_rows(&mut rng, 30, 4, 0.0);
        let b = random_rows(&mut rng, 30, 4, 1.0);
        let base = frechet_distance(&to_set(&a), &to_set(&b)).unwrap();
        let rev = frechet_distance(&to_set(&b), &to_set(&a)).unwrap();
        prop_assert!((base - rev).abs() < 1e-6 * base.max(1.0));
        let r = rotation(&mut rng, 4);
        let rot = frechet_distance(&to_set(&apply(&a, &r, 1.0)), &to_set(&apply(&b, &r, 1.0))).unwrap();
        prop_assert!((base - rot).abs() <= 1e-5 * base.max(1e-9));
        let id = DMatrix::identity(4, 4);
        let scaled = frechet_distance(&to_set(&apply(&a, &id, c)), &to_set(&apply(&b, &id, c))).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-6 * (c * c * base).max(1.0));
    }

    #[test]
    fn kl_is_non_negative(rows in prop::collection::vec((0.001f64..1.0, 0.001f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..20)) {
        let ids: Vec<String> = (0..rows.len()).map(|i| i.to_string()).collect();
        let norm = |a: f64, b: f64| [a / (a + b), b / (a + b)];
        let g: Vec<[f64; 2]> = rows.iter().map(|r| norm(r.0, r.1)).collect();
        let p: Vec<[f64; 2]> = rows.iter().map(|r| if r.2 + r.3 == 0.0 { [1.0, 0.0] } else { norm(r.2, r.3) }).collect();
        let to = |v: &Vec<[f64; 2]>| ProbabilitySet::new(ids.clone(), Array2::from_shape_vec((v.len(), 2), v.iter().flatten().copied().collect()).unwrap()).unwrap();
        prop_assert!(kl_divergence(&to(&g), &to(&p)).unwrap() >= -1e-12);
    }
}
