//! Exact integer partitions of token amounts.
//!
//! Every fractional division in the protocol goes through
//! [`largest_remainder`]: shares are floored, and the leftover units go one
//! each to the largest fractional parts, earliest index first on ties.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ledger::TokenAmount;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("cannot split {0} tokens over zero total weight")]
    ZeroWeight(TokenAmount),
    #[error("invalid share `{0}`: expected num/den with 0 <= num <= den, den > 0")]
    BadShare(String),
}

/// A rational fraction in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Share {
    num: u64,
    den: u64,
}

impl Share {
    pub fn new(num: u64, den: u64) -> Result<Self, SplitError> {
        if den == 0 || num > den {
            return Err(SplitError::BadShare(format!("{num}/{den}")));
        }
        Ok(Share { num, den })
    }

    pub fn half() -> Self {
        Share { num: 1, den: 2 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    /// `floor(amount * self)`.
    pub fn of_floor(&self, amount: TokenAmount) -> TokenAmount {
        (amount as u128 * self.num as u128 / self.den as u128) as TokenAmount
    }
}

impl fmt::Display for Share {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Share {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SplitError::BadShare(s.to_string());
        let (n, d) = s.split_once('/').ok_or_else(bad)?;
        Share::new(
            n.trim().parse().map_err(|_| bad())?,
            d.trim().parse().map_err(|_| bad())?,
        )
    }
}

/// Splits `amount` proportionally to `weights`. The result always sums to
/// `amount` exactly.
pub fn largest_remainder(
    amount: TokenAmount,
    weights: &[u128],
) -> Result<Vec<TokenAmount>, SplitError> {
    let total: u128 = weights.iter().sum();
    if total == 0 {
        if amount == 0 {
            return Ok(vec![0; weights.len()]);
        }
        return Err(SplitError::ZeroWeight(amount));
    }
    let mut shares = Vec::with_capacity(weights.len());
    let mut remainders = Vec::with_capacity(weights.len());
    let mut assigned: u128 = 0;
    for (idx, &w) in weights.iter().enumerate() {
        let scaled = amount as u128 * w;
        let floor = scaled / total;
        assigned += floor;
        shares.push(floor as TokenAmount);
        remainders.push((scaled % total, idx));
    }
    let leftover = (amount as u128 - assigned) as usize;
    // Largest remainder first; on ties the earlier index wins.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, idx) in remainders.iter().take(leftover) {
        shares[idx] += 1;
    }
    Ok(shares)
}

/// Equal split among `n` parties, remainder units to the earliest.
pub fn equal_split(amount: TokenAmount, n: usize) -> Result<Vec<TokenAmount>, SplitError> {
    largest_remainder(amount, &vec![1; n])
}
