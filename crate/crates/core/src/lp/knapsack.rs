/// Greedy optimum of the continuous knapsack `max v'z, w'z <= cap, 0 <= z <= 1`.
///
/// Items with `excluded[i]` set or a nonpositive value are left out. Zero-weight
/// items with positive value are always taken. Returns the optimal value and
/// the fractional selection.
pub fn fractional_knapsack(values: &[f64], weights: &[f64], cap: f64, excluded: &[bool]) -> (f64, Vec<f64>) {
    assert_eq!(values.len(), weights.len());
    let mut z = vec![0.0; values.len()];
    let mut order: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > 0.0 && !excluded.get(i).copied().unwrap_or(false))
        .collect();
    order.sort_by(|&a, &b| {
        // v_a / w_a > v_b / w_b  <=>  v_a w_b > v_b w_a for nonnegative weights
        (values[b] * weights[a]).total_cmp(&(values[a] * weights[b])).then(a.cmp(&b))
    });
    let mut room = cap.max(0.0);
    let mut total = 0.0;
    for i in order {
        let w = weights[i];
        if w <= room {
            z[i] = 1.0;
            room -= w;
            total += values[i];
        } else {
            let f = room / w;
            z[i] = f;
            total += f * values[i];
            break;
        }
    }
    (total, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn takes_best_ratio_then_a_fraction() {
        // ratios 3 and 1; take item 0 fully, then 4/5 of item 1
        let (v, z) = fractional_knapsack(&[6.0, 5.0], &[2.0, 5.0], 6.0, &[false, false]);
        assert!((v - 10.0).abs() < 1e-12);
        assert_eq!(z[0], 1.0);
        assert!((z[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn skips_excluded_and_nonpositive() {
        let (v, z) = fractional_knapsack(&[6.0, -1.0, 4.0], &[1.0, 1.0, 1.0], 10.0, &[true, false, false]);
        assert_eq!(v, 4.0);
        assert_eq!(z, vec![0.0, 0.0, 1.0]);
    }

    fn best_integer(values: &[f64], weights: &[f64], cap: f64) -> f64 {
        let n = values.len();
        let mut best = 0.0_f64;
        for mask in 0u32..(1 << n) {
            let (mut v, mut w) = (0.0, 0.0);
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    v += values[i];
                    w += weights[i];
                }
            }
            if w <= cap {
                best = best.max(v);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn relaxation_bounds_integer_optimum(
            items in prop::collection::vec((-5.0f64..20.0, 1u32..15), 1..13),
            cap in 0u32..60,
        ) {
            let values: Vec<f64> = items.iter().map(|p| p.0).collect();
            let weights: Vec<f64> = items.iter().map(|p| p.1 as f64).collect();
            let excluded = vec![false; values.len()];
            let (v, z) = fractional_knapsack(&values, &weights, cap as f64, &excluded);
            prop_assert!(v + 1e-9 >= best_integer(&values, &weights, cap as f64));
            let used: f64 = z.iter().zip(&weights).map(|(a, b)| a * b).sum();
            prop_assert!(used <= cap as f64 + 1e-9);
            prop_assert!(z.iter().filter(|&&f| f > 0.0 && f < 1.0).count() <= 1);
        }
    }
}
