//! Two-cluster k-means on one-dimensional data.

use rand::Rng;

use crate::numeric::rng::SeededRng;

/// A two-way split of 1-D values.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    /// Indices of the cluster with the larger centroid, ascending.
    pub upper: Vec<usize>,
    /// Within-cluster sum of squares.
    pub sse: f64,
    pub centroids: (f64, f64),
}

/// Optimal 2-means by enumerating every threshold between consecutive
/// distinct sorted values. `None` when all values are equal (or fewer than
/// two values are given).
pub fn two_means_exact(values: &[f64]) -> Option<Split> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    if sorted[0] == sorted[n - 1] {
        return None;
    }
    // center first to limit cancellation in the running sums
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = sorted.iter().map(|v| v - mean).collect();
    let total_sum: f64 = centered.iter().sum();
    let total_sq: f64 = centered.iter().map(|v| v * v).sum();

    let mut best: Option<(usize, f64)> = None;
    let (mut left_sum, mut left_sq) = (0.0, 0.0);
    for cut in 1..n {
        let v = centered[cut - 1];
        left_sum += v;
        left_sq += v * v;
        if sorted[cut - 1] == sorted[cut] {
            continue;
        }
        let nl = cut as f64;
        let nr = (n - cut) as f64;
        let right_sum = total_sum - left_sum;
        let right_sq = total_sq - left_sq;
        let sse = (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
        if best.is_none_or(|(_, b)| sse < b) {
            best = Some((cut, sse));
        }
    }
    let (cut, _) = best?;
    Some(split_at(values, &order, cut))
}

fn split_at(values: &[f64], order: &[usize], cut: usize) -> Split {
    let lower: Vec<f64> = order[..cut].iter().map(|&i| values[i]).collect();
    let upper_vals: Vec<f64> = order[cut..].iter().map(|&i| values[i]).collect();
    let lo = lower.iter().sum::<f64>() / lower.len() as f64;
    let hi = upper_vals.iter().sum::<f64>() / upper_vals.len() as f64;
    let sse = lower.iter().map(|v| (v - lo).powi(2)).sum::<f64>() + upper_vals.iter().map(|v| (v - hi).powi(2)).sum::<f64>();
    let mut upper: Vec<usize> = order[cut..].to_vec();
    upper.sort_unstable();
    Split { upper, sse, centroids: (lo, hi) }
}

/// Lloyd iterations from k-means++ seeds, best of `restarts` by SSE.
pub fn two_means_lloyd(values: &[f64], restarts: usize, rng: &mut SeededRng) -> Option<Split> {
    let n = values.len();
    if n < 2 || values.iter().all(|&v| v == values[0]) {
        return None;
    }
    let mut best: Option<Split> = None;
    for _ in 0..restarts.max(1) {
        let first = values[rng.random_range(0..n)];
        let d2: Vec<f64> = values.iter().map(|v| (v - first).powi(2)).collect();
        let total: f64 = d2.iter().sum();
        let second = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if u < *d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            values[pick]
        } else {
            continue;
        };
        let (mut lo, mut hi) = if first < second { (first, second) } else { (second, first) };
        let mut assign = vec![false; n];
        for _ in 0..100 {
            let mut changed = false;
            for (i, &v) in values.iter().enumerate() {
                let up = (v - hi).abs() < (v - lo).abs();
                changed |= up != assign[i];
                assign[i] = up;
            }
            let (mut sl, mut nl, mut sh, mut nh) = (0.0, 0usize, 0.0, 0usize);
            for (i, &v) in values.iter().enumerate() {
                if assign[i] {
                    sh += v;
                    nh += 1;
                } else {
                    sl += v;
                    nl += 1;
                }
            }
            if nl == 0 || nh == 0 {
                break;
            }
            lo = sl / nl as f64;
            hi = sh / nh as f64;
            if !changed {
                break;
            }
        }
        if assign.iter().all(|&a| a) || assign.iter().all(|&a| !a) {
            continue;
        }
        let upper: Vec<usize> = (0..n).filter(|&i| assign[i]).collect();
        let sse = values
            .iter()
            .enumerate()
            .map(|(i, v)| if assign[i] { (v - hi).powi(2) } else { (v - lo).powi(2) })
            .sum();
        if best.as_ref().is_none_or(|b| sse < b.sse) {
            best = Some(Split { upper, sse, centroids: (lo, hi) });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng::seeded_rng;

    /// Every cut of the sorted data, SSE recomputed from scratch.
    fn exhaustive(values: &[f64]) -> (Vec<usize>, f64) {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut best = (Vec::new(), f64::INFINITY);
        for cut in 1..values.len() {
            let (l, r) = idx.split_at(cut);
            let sse = |s: &[usize]| {
                let m = s.iter().map(|&i| values[i]).sum::<f64>() / s.len() as f64;
                s.iter().map(|&i| (values[i] - m).powi(2)).sum::<f64>()
            };
            let total = sse(l) + sse(r);
            if total < best.1 {
                let mut up = r.to_vec();
                up.sort_unstable();
                best = (up, total);
            }
        }
        best
    }

    #[test]
    fn separated_column() {
        let s = two_means_exact(&[0.0, 0.0, 0.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.upper, vec![3, 4]);
        assert_eq!(s.sse, 0.0);
    }

    #[test]
    fn constant_column_is_degenerate() {
        assert!(two_means_exact(&[1.0, 1.0, 1.0, 1.0]).is_none());
        assert!(two_means_exact(&[2.0]).is_none());
        assert!(two_means_lloyd(&[1.0, 1.0], 3, &mut seeded_rng(0)).is_none());
    }

    #[test]
    fn matches_exhaustive_threshold_search() {
        for seed in 0..200 {
            let mut rng = seeded_rng(seed);
            let v: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..1.0)).collect();
            let s = two_means_exact(&v).unwrap();
            let (upper, sse) = exhaustive(&v);
            assert_eq!(s.upper, upper, "seed {seed}");
            assert!((s.sse - sse).abs() < 1e-12);
        }
    }

    #[test]
    fn lloyd_never_beats_exact() {
        for seed in 0..100 {
            let mut rng = seeded_rng(seed);
            let v: Vec<f64> = (0..15).map(|_| rng.random_range(0.0..3.0)).collect();
            let exact = two_means_exact(&v).unwrap();
            let lloyd = two_means_lloyd(&v, 10, &mut rng).unwrap();
            assert!(lloyd.sse >= exact.sse - 1e-12);
        }
        let v = [0.1, 0.2, 0.15, 3.0, 3.1, 2.9];
        let lloyd = two_means_lloyd(&v, 10, &mut seeded_rng(1)).unwrap();
        assert_eq!(lloyd.upper, two_means_exact(&v).unwrap().upper);
    }

    #[test]
    fn ties_stay_together() {
        let s = two_means_exact(&[1.0, 1.0, 2.0, 2.0, 2.0, 9.0]).unwrap();
        assert_eq!(s.upper, vec![5]);
    }
}
