use nuts::audio::{FeatureVector, FEATURE_LEN};
use nuts::dimreduce::{
    calibrate, generate_projection, project, subsample, subsample_indices, to_unit_interval, ReducedVector,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_features(rng: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector::new((0..FEATURE_LEN).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn entry_statistics_at_d4() {
    let m = generate_projection(7, 4).unwrap();
    let e = m.entries();
    assert_eq!(e.len(), 32_000);
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    let std = (e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / e.len() as f64).sqrt();
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((std - 0.5).abs() < 0.02, "std {std}");
}

#[test]
fn distance_ratio_near_one_at_d64() {
    let m = generate_projection(3, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut total = 0.0;
    for _ in 0..100 {
        let (a, b) = (random_features(&mut rng), random_features(&mut rng));
        let pa = project(&a, &m).unwrap();
        let pb = project(&b, &m).unwrap();
        total += euclid(pa.values(), pb.values()) / euclid(a.values(), b.values());
    }
    let mean = total / 100.0;
    assert!((0.8..=1.2).contains(&mean), "mean ratio {mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_linear(seed in any::<u64>(), d in 1usize..16, s1 in any::<u64>(), s2 in any::<u64>()) {
        let m = generate_projection(seed % 1000, d).unwrap();
        let a = random_features(&mut ChaCha8Rng::seed_from_u64(s1));
        let b = random_features(&mut ChaCha8Rng::seed_from_u64(s2));
        // a+b leaves [0,1], so apply the matrix to the raw sum
        let sum: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect();
        let psum = m.apply(&sum).unwrap();
        let (pa, pb) = (project(&a, &m).unwrap(), project(&b, &m).unwrap());
        for k in 0..d {
            let want = pa.values()[k] + pb.values()[k];
            let got = psum.values()[k];
            prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn basis_vector_selects_row(seed in 0u64..1000, d in 1usize..8, i in 0usize..FEATURE_LEN) {
        let m = generate_projection(seed, d).unwrap();
        let mut e = vec![0.0; FEATURE_LEN];
        e[i] = 1.0;
        let p = project(&FeatureVector::new(e).unwrap(), &m).unwrap();
        prop_assert_eq!(p.values(), m.row(i));
    }

    #[test]
    fn same_seed_same_matrix(seed in any::<u64>(), d in 1usize..6) {
        prop_assert_eq!(generate_projection(seed, d).unwrap(), generate_projection(seed, d).unwrap());
        let ia = subsample_indices(FEATURE_LEN, d, seed).unwrap();
        prop_assert_eq!(&ia, &subsample_indices(FEATURE_LEN, d, seed).unwrap());
        let mut sorted = ia.clone();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), d);
    }

    #[test]
    fn unit_interval_never_escapes(train in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 3), 1..10),
                                   query in proptest::collection::vec(-500.0f64..500.0, 3)) {
        let train: Vec<ReducedVector> = train.into_iter().map(ReducedVector).collect();
        let cal = calibrate(&train).unwrap();
        let mut shuffled = train.clone();
        shuffled.reverse();
        prop_assert_eq!(&cal, &calibrate(&shuffled).unwrap());
        let s = to_unit_interval(&ReducedVector(query), &cal).unwrap();
        prop_assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        for t in &train {
            let s = to_unit_interval(t, &cal).unwrap();
            prop_assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn subsample_copies_chosen_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_features(&mut rng);
    let idx = subsample_indices(FEATURE_LEN, 4, 17).unwrap();
    let r = subsample(&f, 4, 17).unwrap();
    let want: Vec<f64> = idx.iter().map(|&i| f.values()[i]).collect();
    assert_eq!(r.values(), want.as_slice());
}
