use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const MAX_DECIMALS: u32 = 18;

/// A fraction threshold in `[0, 1]`, held as an exact decimal ratio.
///
/// The value is taken from the shortest decimal form of the `f64` (so `0.7`
/// becomes exactly 7/10), and every comparison against a ratio of counts is
/// done in integer arithmetic.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Threshold {
    num: u64,
    den: u64,
}

impl Threshold {
    pub const ZERO: Threshold = Threshold { num: 0, den: 1 };
    pub const ONE: Threshold = Threshold { num: 1, den: 1 };

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::param(format!("threshold {value} outside [0, 1]")));
        }
        let repr = format!("{value}");
        let (int, frac) = repr.split_once('.').unwrap_or((&repr, ""));
        // anything past 18 decimals is truncated
        let frac = &frac[..frac.len().min(MAX_DECIMALS as usize)];
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = int
            .parse()
            .map_err(|_| Error::param(format!("bad threshold {repr}")))?;
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().unwrap_or(0)
        };
        Ok(Self::reduced(int * den + frac, den))
    }

    /// Exact `num / den`.
    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::param(format!(
                "threshold {num}/{den} outside [0, 1]"
            )));
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn cross(self, hits: usize, total: usize) -> (u128, u128) {
        (
            hits as u128 * u128::from(self.den),
            u128::from(self.num) * total as u128,
        )
    }

    /// `hits / total >= self`. Requires `total > 0`.
    pub fn le_ratio(self, hits: usize, total: usize) -> bool {
        debug_assert!(total > 0);
        let (l, r) = self.cross(hits, total);
        l >= r
    }

    /// `hits / total > self`. Requires `total > 0`.
    pub fn lt_ratio(self, hits: usize, total: usize) -> bool {
        debug_assert!(total > 0);
        let (l, r) = self.cross(hits, total);
        l > r
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Debug for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl PartialOrd for Threshold {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Threshold {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (u128::from(self.num) * u128::from(other.den))
            .cmp(&(u128::from(other.num) * u128::from(self.den)))
    }
}

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Threshold::new(v).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<f64> for Threshold {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Threshold::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_values_are_exact() {
        assert_eq!(format!("{:?}", Threshold::new(0.7).unwrap()), "7/10");
        assert_eq!(format!("{:?}", Threshold::new(0.25).unwrap()), "1/4");
        assert_eq!(Threshold::new(1.0).unwrap(), Threshold::ONE);
        assert_eq!(Threshold::new(0.0).unwrap(), Threshold::ZERO);
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(Threshold::new(-0.1).is_err());
        assert!(Threshold::new(1.5).is_err());
        assert!(Threshold::new(f64::NAN).is_err());
    }

    #[test]
    fn boundary_comparisons() {
        let t = Threshold::new(0.7).unwrap();
        assert!(t.le_ratio(7, 10));
        assert!(!t.lt_ratio(7, 10));
        assert!(!t.le_ratio(6999, 10000));
        assert!(t.le_ratio(14, 20));
        assert!(!t.le_ratio(2, 3));
    }

    #[test]
    fn tiny_values_keep_ordering() {
        let a = Threshold::new(1e-7).unwrap();
        let b = Threshold::new(2e-7).unwrap();
        assert!(a < b);
        assert!(Threshold::ZERO < a);
    }
}
