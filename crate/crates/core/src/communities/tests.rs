use rand::Rng;

use super::*;
use crate::numeric::rng::seeded_rng;

fn column(values: &[f64]) -> Matrix {
    Matrix::new(values.len(), 1, values.to_vec()).unwrap()
}

fn random_set(k: usize, r: usize, seed: u64) -> CommunitySet {
    let mut rng = seeded_rng(seed);
    let w = Matrix::from_fn(r, k, |_, _| rng.random_range(0.0..1.0)).unwrap();
    extract_communities(&w, Source::Lstm).unwrap()
}

#[test]
fn separated_column_members() {
    let set = extract_communities(&column(&[0.0, 0.0, 0.0, 5.0, 5.0]), Source::Lstm).unwrap();
    assert_eq!(set.communities[0].members, vec![3, 4]);
    assert!(!set.communities[0].degenerate);
}

#[test]
fn constant_column_flagged_degenerate() {
    let set = extract_communities(&column(&[1.0, 1.0, 1.0, 1.0]), Source::Lstm).unwrap();
    assert!(set.communities[0].degenerate);
    assert!(set.communities[0].members.is_empty());
}

#[test]
fn negative_weights_rejected() {
    assert!(extract_communities(&column(&[1.0, -0.5]), Source::Cd).is_err());
}

#[test]
fn dsc_arithmetic() {
    assert_eq!(dsc(&[1, 2, 3], &[1, 2, 3]), 1.0);
    assert!((dsc(&[1, 2, 3], &[2, 3, 4]) - 4.0 / 6.0).abs() < 1e-15);
    assert_eq!(dsc(&[1, 2], &[3, 4]), 0.0);
    assert_eq!(dsc(&[], &[]), 0.0);
    assert_eq!(dsc(&[], &[1]), 0.0);
}

#[test]
fn self_and_permuted_match_are_perfect() {
    let set = random_set(5, 12, 3);
    let r = robustness(&set, &set).unwrap();
    assert_eq!(r.mean_correlation, Some(1.0));
    assert_eq!(r.mean_dsc, 1.0);

    let mut permuted = set.clone();
    permuted.communities.reverse();
    permuted.communities.swap(0, 2);
    let r = robustness(&set, &permuted).unwrap();
    assert_eq!(r.mean_correlation, Some(1.0));
    assert_eq!(r.mean_dsc, 1.0);
}

#[test]
fn robustness_matches_brute_force() {
    for seed in 0..20 {
        let a = random_set(5, 12, seed);
        let b = random_set(5, 12, seed + 1000);
        let rep = robustness(&a, &b).unwrap();
        let mut corr_sum = 0.0;
        let mut dsc_sum = 0.0;
        for (k, ca) in a.communities.iter().enumerate() {
            let mut best_c = f64::NEG_INFINITY;
            let mut best_d = f64::NEG_INFINITY;
            for cb in &b.communities {
                // definitional correlation and set overlap
                let n = ca.weights.len() as f64;
                let ma = ca.weights.iter().sum::<f64>() / n;
                let mb = cb.weights.iter().sum::<f64>() / n;
                let cov: f64 = ca.weights.iter().zip(&cb.weights).map(|(x, y)| (x - ma) * (y - mb)).sum();
                let va: f64 = ca.weights.iter().map(|x| (x - ma).powi(2)).sum();
                let vb: f64 = cb.weights.iter().map(|y| (y - mb).powi(2)).sum();
                best_c = best_c.max(cov / (va * vb).sqrt());
                let inter = ca.members.iter().filter(|m| cb.members.contains(m)).count();
                best_d = best_d.max(2.0 * inter as f64 / (ca.members.len() + cb.members.len()) as f64);
            }
            let got = &rep.per_community[k];
            assert!((got.best_correlation.unwrap() - best_c).abs() < 1e-12);
            assert_eq!(got.best_dsc, best_d);
            corr_sum += best_c;
            dsc_sum += best_d;
        }
        assert!((rep.mean_correlation.unwrap() - corr_sum / 5.0).abs() < 1e-12);
        assert!((rep.mean_dsc - dsc_sum / 5.0).abs() < 1e-12);
    }
}

#[test]
fn mismatched_rois_rejected() {
    let a = random_set(3, 10, 0);
    let b = random_set(3, 11, 1);
    assert!(matches!(robustness(&a, &b), Err(Error::Data(_))));
}

#[test]
fn adding_true_match_never_hurts() {
    let a = random_set(4, 10, 7);
    let mut b = random_set(3, 10, 8);
    let before = robustness(&a, &b).unwrap();
    b.communities.push(a.communities[2].clone());
    let after = robustness(&a, &b).unwrap();
    for (x, y) in before.per_community.iter().zip(&after.per_community) {
        assert!(y.best_dsc >= x.best_dsc);
        assert!(y.best_correlation.unwrap() >= x.best_correlation.unwrap());
    }
    assert_eq!(after.per_community[2].best_dsc, 1.0);
}

#[test]
fn csv_has_both_sets() {
    let a = random_set(2, 6, 1);
    let b = random_set(3, 6, 2);
    let csv = robustness(&a, &b).unwrap().to_csv();
    assert_eq!(csv.lines().count(), 1 + 2 + 3);
    assert!(csv.starts_with("set,community,size,best_correlation,best_dsc"));
}

#[test]
fn json_round_trip() {
    let a = random_set(3, 8, 4);
    let text = serde_json::to_string(&a).unwrap();
    let back: CommunitySet = serde_json::from_str(&text).unwrap();
    assert_eq!(a, back);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn hard_sets_invariant_to_positive_scaling(
            vals in proptest::collection::vec(0.0f64..10.0, 2..30),
            scale in 1e-3f64..1e3,
        ) {
            let w = column(&vals);
            let mut scaled = w.clone();
            scaled.scale(scale);
            let a = extract_communities(&w, Source::Lstm).unwrap();
            let b = extract_communities(&scaled, Source::Lstm).unwrap();
            prop_assert_eq!(&a.communities[0].members, &b.communities[0].members);
        }

        #[test]
        fn dsc_symmetric_and_bounded(
            a in proptest::collection::btree_set(0usize..20, 0..10),
            b in proptest::collection::btree_set(0usize..20, 0..10),
        ) {
            let a: Vec<usize> = a.into_iter().collect();
            let b: Vec<usize> = b.into_iter().collect();
            let d = dsc(&a, &b);
            prop_assert_eq!(d, dsc(&b, &a));
            prop_assert!((0.0..=1.0).contains(&d));
        }
    }
}
