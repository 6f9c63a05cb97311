//! Fixed-point money and rounding helpers.
//!
//! Report tables carry USD values with two fractional digits and percentages
//! with three. All derived quantities (averages, percentages) round half to
//! even so identical inputs always render identical bytes.

use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoneyError {
    #[error("unparseable decimal `{0}`")]
    Unparseable(String),
    #[error("`{0}` has more than 2 decimal places")]
    TooPrecise(String),
}

/// A USD amount, always held at a scale of exactly two fractional digits.
///
/// Signed: transaction values are non-negative (enforced at ingestion), but
/// profits and aggregates may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Usd(Decimal);

impl Usd {
    pub fn zero() -> Usd {
        Usd(two_dp(Decimal::ZERO))
    }

    /// Parses a decimal literal with at most two fractional digits.
    pub fn parse(s: &str) -> Result<Usd, MoneyError> {
        let d = Decimal::from_str(s.trim()).map_err(|_| MoneyError::Unparseable(s.to_owned()))?;
        if d.scale() > 2 && d != d.round_dp(2) {
            return Err(MoneyError::TooPrecise(s.to_owned()));
        }
        Ok(Usd(two_dp(d)))
    }

    /// Builds from an arbitrary decimal, rounding half to even to two places.
    pub fn from_decimal(d: Decimal) -> Usd {
        Usd(two_dp(d.round_dp_with_strategy(
            2,
            RoundingStrategy::MidpointNearestEven,
        )))
    }

    pub fn from_cents(cents: i64) -> Usd {
        Usd(two_dp(Decimal::new(cents, 2)))
    }

    pub fn as_decimal(&self) -> Decimal {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        use rust_decimal::prelude::ToPrimitive;
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_positive(&self) -> bool {
        self.0 > Decimal::ZERO
    }

    pub fn is_negative(&self) -> bool {
        self.0 < Decimal::ZERO
    }

    /// Multiplies by an integer count (used by aggregate consistency checks).
    pub fn times(&self, n: u64) -> Usd {
        Usd(two_dp(self.0 * Decimal::from(n)))
    }

    pub fn abs(&self) -> Usd {
        Usd(two_dp(self.0.abs()))
    }

    /// `total / n`, rounded half to even to the cent.
    pub fn mean_of_total(total: Usd, n: u64) -> Usd {
        debug_assert!(n > 0);
        Usd::from_decimal(total.0 / Decimal::from(n))
    }
}

fn two_dp(mut d: Decimal) -> Decimal {
    d.rescale(2);
    d
}

impl fmt::Display for Usd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Usd {
    type Output = Usd;
    fn add(self, rhs: Usd) -> Usd {
        Usd(two_dp(self.0 + rhs.0))
    }
}

impl AddAssign for Usd {
    fn add_assign(&mut self, rhs: Usd) {
        *self = *self + rhs;
    }
}

impl Sub for Usd {
    type Output = Usd;
    fn sub(self, rhs: Usd) -> Usd {
        Usd(two_dp(self.0 - rhs.0))
    }
}

impl SubAssign for Usd {
    fn sub_assign(&mut self, rhs: Usd) {
        *self = *self - rhs;
    }
}

impl Neg for Usd {
    type Output = Usd;
    fn neg(self) -> Usd {
        Usd(two_dp(-self.0))
    }
}

impl Sum for Usd {
    fn sum<I: Iterator<Item = Usd>>(iter: I) -> Usd {
        iter.fold(Usd::zero(), |acc, v| acc + v)
    }
}

/// `100 * numer / denom` rounded half to even to three decimals.
/// A zero denominator yields `0.000`.
pub fn pct3(numer: u64, denom: u64) -> Decimal {
    if denom == 0 {
        return three_dp(Decimal::ZERO);
    }
    let raw = Decimal::from(numer) * Decimal::from(100u32) / Decimal::from(denom);
    three_dp(raw.round_dp_with_strategy(3, RoundingStrategy::MidpointNearestEven))
}

/// Arithmetic mean of integer counts, three decimals, half to even.
pub fn mean3_counts(counts: &[u64]) -> Decimal {
    if counts.is_empty() {
        return three_dp(Decimal::ZERO);
    }
    let sum: Decimal = counts.iter().map(|&c| Decimal::from(c)).sum();
    three_dp(
        (sum / Decimal::from(counts.len() as u64))
            .round_dp_with_strategy(3, RoundingStrategy::MidpointNearestEven),
    )
}

/// Arithmetic mean of already-scaled decimals, three decimals, half to even.
pub fn mean3_decimals(values: &[Decimal]) -> Decimal {
    if values.is_empty() {
        return three_dp(Decimal::ZERO);
    }
    let sum: Decimal = values.iter().copied().sum();
    three_dp(
        (sum / Decimal::from(values.len() as u64))
            .round_dp_with_strategy(3, RoundingStrategy::MidpointNearestEven),
    )
}

fn three_dp(mut d: Decimal) -> Decimal {
    d.rescale(3);
    d
}
