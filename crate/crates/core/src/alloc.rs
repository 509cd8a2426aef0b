//! Integer apportionment by the largest-remainder method.

/// Splits `total` into integers proportional to `weights`.
///
/// Each entry first gets `floor(total * w / sum(w))`; the leftover units go to
/// the largest fractional parts, ties to the lower index. The result always
/// sums to `total`. Non-positive weights receive nothing unless every weight
/// is non-positive, in which case the split is uniform.
pub fn largest_remainder(weights: &[f64], total: u64) -> Vec<u64> {
    if weights.is_empty() {
        return Vec::new();
    }
    let positive: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    let shares: Vec<f64> = if positive > 0.0 {
        weights.iter().map(|&w| if w > 0.0 { w / positive } else { 0.0 }).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    };

    let quotas: Vec<f64> = shares.iter().map(|s| s * total as f64).collect();
    let mut out: Vec<u64> = quotas.iter().map(|q| (q.floor() as u64).min(total)).collect();
    let assigned: u64 = out.iter().sum();

    if assigned > total {
        // Only reachable through rounding noise; trim from the smallest fractions.
        let mut order: Vec<usize> = (0..out.len()).collect();
        order.sort_by(|&a, &b| (quotas[a] - quotas[a].floor()).total_cmp(&(quotas[b] - quotas[b].floor())));
        let mut excess = assigned - total;
        for i in order.into_iter().cycle() {
            if excess == 0 {
                break;
            }
            if out[i] > 0 {
                out[i] -= 1;
                excess -= 1;
            }
        }
        return out;
    }

    let mut order: Vec<usize> = (0..out.len()).filter(|&i| shares[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = total - assigned;
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_six_way() {
        assert_eq!(largest_remainder(&[1.0; 6], 10_000), vec![1667, 1667, 1667, 1667, 1666, 1666]);
    }

    #[test]
    fn one_hot_and_zero_total() {
        assert_eq!(largest_remainder(&[0.0, 1.0, 0.0], 42), vec![0, 42, 0]);
        assert_eq!(largest_remainder(&[0.3, 0.7], 0), vec![0, 0]);
        assert!(largest_remainder(&[], 5).is_empty());
    }

    proptest! {
        #[test]
        fn always_sums_to_total(weights in prop::collection::vec(0.0f64..10.0, 1..12), total in 0u64..1_000_000) {
            let out = largest_remainder(&weights, total);
            prop_assert_eq!(out.iter().sum::<u64>(), total);
            prop_assert_eq!(out.len(), weights.len());
        }

        #[test]
        fn within_one_of_quota(weights in prop::collection::vec(0.01f64..10.0, 1..12), total in 0u64..100_000) {
            let sum: f64 = weights.iter().sum();
            for (w, n) in weights.iter().zip(largest_remainder(&weights, total)) {
                let quota = w / sum * total as f64;
                prop_assert!((n as f64 - quota).abs() < 1.0 + 1e-6);
            }
        }
    }
}
