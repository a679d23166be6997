//! Scalar abstraction for distances and costs.
//!
//! Everything that sums or compares transition weights is generic over
//! [`Weight`], so the same search code runs on `f64` distances loaded from a
//! scenario file, on `f32`, or on exact integers and rationals in tests.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_traits::{Num, ToPrimitive};

/// A nonnegative, totally ordered (in practice) additive weight.
pub trait Weight: Num + Copy + PartialOrd + ToPrimitive + Debug + Send + Sync + 'static {
    /// Total order used by priority queues. Incomparable values (NaN) compare
    /// equal; scenario validation rejects them before they reach a search.
    fn cmp_weight(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Weight for T where T: Num + Copy + PartialOrd + ToPrimitive + Debug + Send + Sync + 'static {}

/// Sum of an iterator of weights.
pub fn total<W: Weight>(items: impl IntoIterator<Item = W>) -> W {
    items.into_iter().fold(W::zero(), |acc, w| acc + w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn total_works_for_floats_integers_and_rationals() {
        assert_eq!(total([1.5f64, 2.5]), 4.0);
        assert_eq!(total([1u64, 2, 3]), 6);
        let r = total([Ratio::new(1i64, 3), Ratio::new(2, 3)]);
        assert_eq!(r, Ratio::from_integer(1));
        assert_eq!(total(Vec::<f32>::new()), 0.0);
    }

    #[test]
    fn nan_compares_equal_instead_of_panicking() {
        assert_eq!(f64::NAN.cmp_weight(&1.0), Ordering::Equal);
        assert_eq!(1.0f64.cmp_weight(&2.0), Ordering::Less);
    }
}
