//! Arbitrary-precision derivation lengths with an inline `u64` fast path.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// A nonnegative integer. Values that fit in `u64` are stored inline; larger
/// values spill to a boxed [`BigUint`]. The representation is canonical, so
/// derived equality and hashing are value-based.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cost(Repr);

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(u64),
    Big(Box<BigUint>),
}

impl Cost {
    pub const ZERO: Cost = Cost(Repr::Small(0));
    pub const ONE: Cost = Cost(Repr::Small(1));

    pub fn from_biguint(v: BigUint) -> Self {
        match v.to_u64() {
            Some(small) => Cost(Repr::Small(small)),
            None => Cost(Repr::Big(Box::new(v))),
        }
    }

    /// `2^k`
    pub fn pow2(k: u32) -> Self {
        if k < 64 {
            Cost(Repr::Small(1 << k))
        } else {
            Cost::from_biguint(BigUint::from(1u8) << k)
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(v) => Some(*v),
            Repr::Big(_) => None,
        }
    }

    pub fn to_biguint(&self) -> BigUint {
        match &self.0 {
            Repr::Small(v) => BigUint::from(*v),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn is_small(&self) -> bool {
        matches!(self.0, Repr::Small(_))
    }
}

impl From<u64> for Cost {
    fn from(v: u64) -> Self {
        Cost(Repr::Small(v))
    }
}

impl Add for &Cost {
    type Output = Cost;

    fn add(self, rhs: &Cost) -> Cost {
        if let (Repr::Small(a), Repr::Small(b)) = (&self.0, &rhs.0) {
            if let Some(sum) = a.checked_add(*b) {
                return Cost(Repr::Small(sum));
            }
        }
        Cost::from_biguint(self.to_biguint() + rhs.to_biguint())
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        &self + &rhs
    }
}

impl std::iter::Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, |acc, c| &acc + &c)
    }
}

impl<'a> std::iter::Sum<&'a Cost> for Cost {
    fn sum<I: Iterator<Item = &'a Cost>>(iter: I) -> Cost {
        iter.fold(Cost::ZERO, |acc, c| &acc + c)
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => a.cmp(b),
            (Repr::Small(_), Repr::Big(_)) => Ordering::Less,
            (Repr::Big(_), Repr::Small(_)) => Ordering::Greater,
            (Repr::Big(a), Repr::Big(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq<u64> for Cost {
    fn eq(&self, other: &u64) -> bool {
        self.to_u64() == Some(*other)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(v) => write!(f, "{v}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn overflow_spills_to_big() {
        let max = Cost::from(u64::MAX);
        let sum = &max + &Cost::ONE;
        assert!(!sum.is_small());
        assert_eq!(sum.to_string(), "18446744073709551616");
        assert_eq!(sum, Cost::pow2(64));
        assert!(sum > max);
        assert_eq!(Cost::from_biguint(BigUint::from(7u8)), 7);
    }

    proptest! {
        #[test]
        fn agrees_with_biguint(a in any::<u64>(), b in any::<u64>(), shift in 0u32..100) {
            let x = Cost::from_biguint(BigUint::from(a) << shift);
            let y = Cost::from(b);
            let expected = (BigUint::from(a) << shift) + BigUint::from(b);
            prop_assert_eq!((&x + &y).to_biguint(), expected.clone());
            prop_assert_eq!(&x + &y, Cost::from_biguint(expected));
            prop_assert_eq!(x.cmp(&y), x.to_biguint().cmp(&y.to_biguint()));
        }
    }
}
