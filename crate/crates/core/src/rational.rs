//! Exact rationals for expansion levels and fractional weights.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, Zero};

/// Exact fraction, always kept in lowest terms with a positive denominator.
///
/// Expansion levels are ratios of vertex counts and fractional weights are
/// integral flows divided by a level's denominator, so 64-bit components are
/// ample; arithmetic overflow panics in checked builds.
pub type Rational = num_rational::Ratio<i64>;

/// Renders `r` as `num/den`, including integers (`1/1`).
pub fn fmt_ratio(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` or a bare integer.
pub fn parse_ratio(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = i64::from_str(n.trim()).ok()?;
            let d = i64::from_str(d.trim()).ok()?;
            (d != 0).then(|| Rational::new(n, d))
        }
        None => i64::from_str(s).ok().map(Rational::from_integer),
    }
}

/// Decimal rendering with `places` digits, rounding half away from zero.
pub fn to_decimal(r: &Rational, places: u32) -> String {
    let scale = 10i128.pow(places);
    let num = *r.numer() as i128;
    let den = *r.denom() as i128;
    let neg = num < 0;
    let scaled = (2 * num.abs() * scale + den) / (2 * den);
    let int = scaled / scale;
    let frac = scaled % scale;
    let sign = if neg && scaled != 0 { "-" } else { "" };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0width$}", width = places as usize)
    }
}

/// The rational with the smallest denominator in the closed interval
/// `[lo, hi]` (ties broken by smallest numerator), found by descending the
/// Stern–Brocot tree one continued-fraction term at a time.
///
/// Requires `0 <= lo <= hi`.
pub fn simplest_between(lo: Rational, hi: Rational) -> Rational {
    assert!(lo >= Rational::zero() && lo <= hi, "bad interval [{lo}, {hi}]");
    let ceil = lo.ceil();
    if ceil <= hi {
        return ceil;
    }
    // lo and hi share the integer part and neither is an integer.
    let whole = lo.floor();
    let inner = simplest_between((hi - whole).recip(), (lo - whole).recip());
    whole + inner.recip()
}

/// Expansion level of a vertex: a block's α, or the unbounded sentinel for
/// Q-vertices that never join a block. `Finite(_) < Unbounded` always.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Finite(Rational),
    Unbounded,
}

impl Level {
    pub fn finite(&self) -> Option<Rational> {
        match self {
            Level::Finite(r) => Some(*r),
            Level::Unbounded => None,
        }
    }

    pub fn is_below_one(&self) -> bool {
        matches!(self, Level::Finite(r) if *r < Rational::one())
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(r) => f.write_str(&fmt_ratio(r)),
            Level::Unbounded => f.write_str("inf"),
        }
    }
}

/// Greatest common divisor helper re-exported for scaling capacities.
pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}
