//! Evaluation metrics.

use crate::framework::EmpiricalMeasure;

pub fn abs_error(estimate: f64, truth: f64) -> f64 {
    (estimate - truth).abs()
}

/// Kolmogorov-Smirnov distance: the largest gap between the two
/// right-continuous CDFs, attained at some atom of either measure.
pub fn ks_distance(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let (xa, wa) = (a.atoms(), a.weights());
    let (xb, wb) = (b.atoms(), b.weights());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut sup = 0.0f64;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => unreachable!(),
        };
        while i < xa.len() && xa[i] <= x {
            fa += wa[i];
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            fb += wb[j];
            j += 1;
        }
        sup = sup.max((fa - fb).abs());
    }
    sup.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(xs: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(xs).unwrap()
    }

    #[test]
    fn abs_error_examples() {
        assert_eq!(abs_error(3.0, 3.0), 0.0);
        assert_eq!(abs_error(2.0, 5.0), 3.0);
        assert_eq!(abs_error(5.0, 2.0), abs_error(2.0, 5.0));
    }

    #[test]
    fn ks_examples() {
        let a = uniform(&[0.3, 1.0, 2.0]);
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&uniform(&[0.0]), &uniform(&[5.0])), 1.0);
        assert_eq!(ks_distance(&uniform(&[0.0, 1.0]), &uniform(&[0.0, 0.0, 1.0, 1.0])), 0.0);
        assert!((ks_distance(&uniform(&[0.0, 1.0]), &uniform(&[1.0, 2.0])) - 0.5).abs() < 1e-15);
    }

    // Pointwise evaluation at every atom, independent of the merge walk.
    fn ks_brute(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
        a.atoms()
            .iter()
            .chain(b.atoms())
            .map(|&x| (a.cdf(x) - b.cdf(x)).abs())
            .fold(0.0, f64::max)
    }

    fn arb_measure() -> impl Strategy<Value = EmpiricalMeasure> {
        proptest::collection::vec(-5i32..5, 1..12)
            .prop_map(|v| uniform(&v.into_iter().map(|x| f64::from(x) * 0.5).collect::<Vec<_>>()))
    }

    proptest! {
        #[test]
        fn ks_matches_pointwise_and_is_a_metric(a in arb_measure(), b in arb_measure(), c in arb_measure()) {
            let ab = ks_distance(&a, &b);
            prop_assert!((ab - ks_brute(&a, &b)).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, ks_distance(&b, &a));
            prop_assert!(ab <= ks_distance(&a, &c) + ks_distance(&c, &b) + 1e-12);
        }
    }
}
