use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Non-negative fraction compared by cross-multiplication. Never reduced, so
/// `2/4` prints as `2/4` but compares equal to `1/2`.
#[derive(Clone, Copy, Serialize, Deserialize)]
pub struct Rational {
    num: u64,
    den: u64,
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    /// A zero denominator maps to `0/1`.
    pub fn new(num: u64, den: u64) -> Self {
        if den == 0 {
            Self::ZERO
        } else {
            Self { num, den }
        }
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    /// Decimal expansion rounded half-up to `places` digits, computed exactly.
    pub fn to_decimal_string(self, places: u32) -> String {
        assert!(places <= 18, "at most 18 decimal places");
        let scale = 10u128.pow(places);
        let (num, den) = (self.num as u128, self.den as u128);
        let whole = num / den;
        let rem = num % den;
        // rem < 2^64 and scale <= 10^18, so 2 * rem * scale fits in u128.
        let mut frac = (rem * scale * 2 + den) / (2 * den);
        let mut whole = whole;
        if frac == scale {
            whole += 1;
            frac = 0;
        }
        if places == 0 {
            whole.to_string()
        } else {
            format!("{whole}.{frac:0width$}", width = places as usize)
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::ZERO
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}
