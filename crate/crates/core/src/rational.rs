//! Exact rational helpers for star efficiencies.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Efficiencies are `|Φ| / cost` with integer numerator and denominator.
pub type Rational = Ratio<u64>;

/// Rounds a positive rational down to the closest power of two,
/// `2^floor(log2 r)`, with negative exponents allowed.
///
/// # Panics
///
/// Panics if `r` is zero.
pub fn floor_power_of_two(r: Rational) -> Rational {
    let num = u128::from(*r.numer());
    let den = u128::from(*r.denom());
    assert!(num > 0, "floor_power_of_two of zero");
    if num >= den {
        // largest e with den * 2^e <= num
        let mut e = 0u32;
        while den << (e + 1) <= num {
            e += 1;
        }
        Rational::from_integer(1u64 << e)
    } else {
        // smallest f with num * 2^f >= den
        let mut f = 0u32;
        while num << f < den {
            f += 1;
        }
        Rational::new(1, 1u64 << f)
    }
}

/// `numerator / denominator` pair used in serialized traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRecord {
    pub num: u64,
    pub den: u64,
}

impl From<Rational> for RationalRecord {
    fn from(r: Rational) -> Self {
        Self {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

impl From<RationalRecord> for Rational {
    fn from(r: RationalRecord) -> Self {
        Rational::new(r.num, r.den)
    }
}
