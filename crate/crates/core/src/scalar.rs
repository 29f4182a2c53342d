//! Coefficient scalars: the [`Scalar`] bound used by the generic BQM code
//! and [`Dec`], the exact fixed-point decimal the pipeline runs on.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Rem, Sub, SubAssign};
use std::str::FromStr;

use num_traits::{FromPrimitive, Num, One, ToPrimitive, Zero};
use thiserror::Error;

/// Numeric types a [`Bqm`](crate::qubo::Bqm) can carry coefficients in.
///
/// Satisfied by the signed primitives (`i64`, `f64`, ...) and by [`Dec`].
/// The solvers need ring arithmetic, ordering, and an `f64` view for the
/// Metropolis acceptance test; nothing here assumes floating point.
pub trait Scalar:
    Num
    + Neg<Output = Self>
    + PartialOrd
    + Copy
    + ToPrimitive
    + FromPrimitive
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Num
        + Neg<Output = Self>
        + PartialOrd
        + Copy
        + ToPrimitive
        + FromPrimitive
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Number of fractional decimal digits carried by [`Dec`].
pub const DEC_DIGITS: u32 = 4;
const SCALE: i64 = 10_000;

/// Exact decimal with four fractional digits, stored as scaled `i64`.
///
/// Player ratings (two decimals) and penalty weights (`90.5`) live on this
/// grid, and every coefficient the compiler produces is a rating plus a
/// weight times an integer, so energies of the assembled model are exact and
/// the published optima can be asserted with `==`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dec(i64);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecParseError {
    #[error("empty decimal literal")]
    Empty,
    #[error("invalid decimal literal `{0}`")]
    Invalid(String),
    #[error("`{0}` has more than {DEC_DIGITS} fractional digits")]
    TooPrecise(String),
    #[error("`{0}` is out of range")]
    OutOfRange(String),
}

impl Dec {
    pub const ZERO: Dec = Dec(0);

    /// Builds a value from whole units, e.g. `Dec::from_int(121)`.
    pub const fn from_int(value: i64) -> Dec {
        Dec(value * SCALE)
    }

    /// Builds a value from hundredths, e.g. `Dec::from_hundredths(681)` is 6.81.
    pub const fn from_hundredths(value: i64) -> Dec {
        Dec(value * (SCALE / 100))
    }

    /// The raw scaled representation (`value * 10^4`).
    pub const fn units(self) -> i64 {
        self.0
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn abs(self) -> Dec {
        Dec(self.0.abs())
    }

    /// True when the value lies on the hundredths grid (at most two decimals).
    pub fn is_hundredths(self) -> bool {
        self.0 % (SCALE / 100) == 0
    }
}

impl FromStr for Dec {
    type Err = DecParseError;

    fn from_str(s: &str) -> Result<Dec, DecParseError> {
        let raw = s.trim();
        if raw.is_empty() {
            return Err(DecParseError::Empty);
        }
        let (sign, body) = match raw.strip_prefix('-') {
            Some(rest) => (-1i64, rest),
            None => (1i64, raw.strip_prefix('+').unwrap_or(raw)),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(DecParseError::Invalid(s.to_string()));
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(DecParseError::Invalid(s.to_string()));
        }
        if frac_part.len() > DEC_DIGITS as usize {
            return Err(DecParseError::TooPrecise(s.to_string()));
        }
        let whole: i64 = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| DecParseError::OutOfRange(s.to_string()))?
        };
        let mut frac: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part
                .parse()
                .map_err(|_| DecParseError::OutOfRange(s.to_string()))?
        };
        frac *= 10i64.pow(DEC_DIGITS - frac_part.len() as u32);
        whole
            .checked_mul(SCALE)
            .and_then(|u| u.checked_add(frac))
            .and_then(|u| u.checked_mul(sign))
            .map(Dec)
            .ok_or_else(|| DecParseError::OutOfRange(s.to_string()))
    }
}

impl fmt::Display for Dec {
    /// Renders the exact value. With no precision the shortest form is used
    /// (`90.5`, `-82.67`, `121`); `{:.2}` style precision pads or rounds.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let whole = abs / SCALE as u64;
        let frac = abs % SCALE as u64;
        match f.precision() {
            None => {
                if frac == 0 {
                    write!(f, "{sign}{whole}")
                } else {
                    let digits = format!("{frac:04}");
                    write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
                }
            }
            Some(p) => {
                let p = p.min(DEC_DIGITS as usize);
                let drop = 10u64.pow(DEC_DIGITS - p as u32);
                // round half away from zero on the dropped digits
                let scaled = (abs + drop / 2) / drop;
                let unit = 10u64.pow(p as u32);
                if p == 0 {
                    write!(f, "{sign}{scaled}")
                } else {
                    write!(f, "{sign}{}.{:0p$}", scaled / unit, scaled % unit)
                }
            }
        }
    }
}

impl Add for Dec {
    type Output = Dec;
    fn add(self, rhs: Dec) -> Dec {
        Dec(self.0 + rhs.0)
    }
}

impl AddAssign for Dec {
    fn add_assign(&mut self, rhs: Dec) {
        self.0 += rhs.0;
    }
}

impl Sub for Dec {
    type Output = Dec;
    fn sub(self, rhs: Dec) -> Dec {
        Dec(self.0 - rhs.0)
    }
}

impl SubAssign for Dec {
    fn sub_assign(&mut self, rhs: Dec) {
        self.0 -= rhs.0;
    }
}

impl Neg for Dec {
    type Output = Dec;
    fn neg(self) -> Dec {
        Dec(-self.0)
    }
}

impl Mul for Dec {
    type Output = Dec;
    /// Fixed-point product, truncating below the grid. Exact whenever one
    /// factor is integral, which covers every product the compiler forms
    /// (penalty weight times integer expansion coefficients).
    fn mul(self, rhs: Dec) -> Dec {
        Dec((self.0 as i128 * rhs.0 as i128 / SCALE as i128) as i64)
    }
}

impl Mul<i64> for Dec {
    type Output = Dec;
    fn mul(self, rhs: i64) -> Dec {
        Dec(self.0 * rhs)
    }
}

impl Div for Dec {
    type Output = Dec;
    fn div(self, rhs: Dec) -> Dec {
        Dec((self.0 as i128 * SCALE as i128 / rhs.0 as i128) as i64)
    }
}

impl Rem for Dec {
    type Output = Dec;
    fn rem(self, rhs: Dec) -> Dec {
        Dec(self.0 % rhs.0)
    }
}

impl Zero for Dec {
    fn zero() -> Dec {
        Dec(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl One for Dec {
    fn one() -> Dec {
        Dec(SCALE)
    }
}

impl Num for Dec {
    type FromStrRadixErr = DecParseError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Dec, DecParseError> {
        if radix != 10 {
            return Err(DecParseError::Invalid(s.to_string()));
        }
        s.parse()
    }
}

impl ToPrimitive for Dec {
    fn to_i64(&self) -> Option<i64> {
        Some(self.0 / SCALE)
    }
    fn to_u64(&self) -> Option<u64> {
        u64::try_from(self.0 / SCALE).ok()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.0 as f64 / SCALE as f64)
    }
}

impl FromPrimitive for Dec {
    fn from_i64(n: i64) -> Option<Dec> {
        n.checked_mul(SCALE).map(Dec)
    }
    fn from_u64(n: u64) -> Option<Dec> {
        i64::try_from(n).ok().and_then(Dec::from_i64)
    }
}

impl From<i64> for Dec {
    fn from(n: i64) -> Dec {
        Dec::from_int(n)
    }
}

impl Sum for Dec {
    fn sum<I: Iterator<Item = Dec>>(iter: I) -> Dec {
        iter.fold(Dec::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Dec> for Dec {
    fn sum<I: Iterator<Item = &'a Dec>>(iter: I) -> Dec {
        iter.copied().sum()
    }
}
