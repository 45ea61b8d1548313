//! Exact Gaussian rationals used for every user-supplied parameter.
//!
//! Parameters are parsed from their decimal text, so `0.35` is exactly
//! `7/20`. Exponent combinations such as `(n-1)g + g_a + g_b + N` can then be
//! tested for exact vanishing.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

pub type Rational = BigRational;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CRat {
    pub re: Rational,
    pub im: Rational,
}

impl CRat {
    pub fn new(re: Rational, im: Rational) -> Self {
        CRat { re, im }
    }

    pub fn real(re: Rational) -> Self {
        CRat { re, im: Rational::zero() }
    }

    pub fn zero() -> Self {
        CRat::real(Rational::zero())
    }

    pub fn int(k: i64) -> Self {
        CRat::real(Rational::from_integer(BigInt::from(k)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        CRat::real(Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_small(q: Ratio<i64>) -> Self {
        CRat::ratio(*q.numer(), *q.denom())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// `Some(k)` when the value is exactly the integer `k`.
    pub fn as_integer(&self) -> Option<i64> {
        if self.im.is_zero() && self.re.is_integer() {
            self.re.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn scale(&self, k: &Rational) -> CRat {
        CRat::new(&self.re * k, &self.im * k)
    }

    pub fn scale_small(&self, k: Ratio<i64>) -> CRat {
        let k = Rational::new(BigInt::from(*k.numer()), BigInt::from(*k.denom()));
        self.scale(&k)
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (rat_to_f64(&self.re), rat_to_f64(&self.im))
    }

    pub fn parse(s: &str) -> Result<CRat, Error> {
        parse_complex(s.trim())
    }
}

impl fmt::Display for CRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", rat_str(&self.re))
        } else if self.re.is_zero() {
            write!(f, "{}i", rat_str(&self.im))
        } else if self.im.is_negative() {
            write!(f, "{}-{}i", rat_str(&self.re), rat_str(&-self.im.clone()))
        } else {
            write!(f, "{}+{}i", rat_str(&self.re), rat_str(&self.im))
        }
    }
}

fn rat_str(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    // Scale so numerator and denominator fit f64 before dividing.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = nb - db;
    let scaled = if shift > 60 {
        r / Rational::from_integer(BigInt::one() << (shift - 60) as usize)
    } else if shift < -60 {
        r * Rational::from_integer(BigInt::one() << (-shift - 60) as usize)
    } else {
        r.clone()
    };
    let n = scaled.numer();
    let d = scaled.denom();
    let (nb, db) = (n.bits() as i64, d.bits() as i64);
    let drop = (nb.min(db) - 60).max(0) as usize;
    let nf = (n >> drop).to_f64().unwrap_or(0.0);
    let df = (d >> drop).to_f64().unwrap_or(1.0);
    let v = nf / df;
    let adj = if shift > 60 {
        (shift - 60) as i32
    } else if shift < -60 {
        (shift + 60) as i32
    } else {
        0
    };
    libm::ldexp(v, adj)
}

impl Add<&CRat> for &CRat {
    type Output = CRat;
    fn add(self, o: &CRat) -> CRat {
        CRat::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub<&CRat> for &CRat {
    type Output = CRat;
    fn sub(self, o: &CRat) -> CRat {
        CRat::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul<&CRat> for &CRat {
    type Output = CRat;
    fn mul(self, o: &CRat) -> CRat {
        CRat::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for &CRat {
    type Output = CRat;
    fn neg(self) -> CRat {
        CRat::new(-self.re.clone(), -self.im.clone())
    }
}

impl Add for CRat {
    type Output = CRat;
    fn add(self, o: CRat) -> CRat {
        &self + &o
    }
}

impl Sub for CRat {
    type Output = CRat;
    fn sub(self, o: CRat) -> CRat {
        &self - &o
    }
}

impl Neg for CRat {
    type Output = CRat;
    fn neg(self) -> CRat {
        -&self
    }
}

/// Parses `7`, `-0.35`, `1.5e-3`, `3/7`, `0.1+0.2i`, `-2i`.
fn parse_complex(s: &str) -> Result<CRat, Error> {
    let bad = || Error::InvalidParameters(format!("cannot parse number {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some(body) = s.strip_suffix('i') {
        // Find the split between real and imaginary parts: a sign that is not
        // at the start and does not follow an exponent marker.
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx];
            if (c == b'+' || c == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                split = Some(idx);
                break;
            }
        }
        let (re, im) = match split {
            Some(idx) => (parse_real(&body[..idx])?, &body[idx..]),
            None => (Rational::zero(), body),
        };
        let im = match im {
            "" | "+" => Rational::one(),
            "-" => -Rational::one(),
            t => parse_real(t)?,
        };
        return Ok(CRat::new(re, im));
    }
    Ok(CRat::real(parse_real(s).map_err(|_| bad())?))
}

pub fn parse_real(s: &str) -> Result<Rational, Error> {
    let bad = || Error::InvalidParameters(format!("cannot parse number {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_real(n)?;
        let d = parse_real(d)?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(n / d);
    }
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(idx) => (&body[..idx], body[idx + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let mut digits = String::from(int_part);
    digits.push_str(frac_part);
    let mantissa: BigInt = digits.parse().map_err(|_| bad())?;
    let e10 = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(mantissa);
    if e10 >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, e10 as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-e10) as usize));
    }
    Ok(if neg { -r } else { r })
}

/// `q^k` for a rational `q` and integer `k`.
pub fn rat_pow(q: &Rational, k: i64) -> Rational {
    let r = num_traits::pow(q.clone(), k.unsigned_abs() as usize);
    if k < 0 {
        r.recip()
    } else {
        r
    }
}

/// Reduces a small ratio; `gcd` is re-exported for callers assembling forms.
pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}
