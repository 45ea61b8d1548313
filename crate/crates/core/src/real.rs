//! Multiprecision real and complex values.
//!
//! Thin wrappers over `astro_float::BigFloat`. Arithmetic operators pick the
//! larger of the two operand precisions, so values created from one
//! [`Kernel`](crate::kernel::Kernel) stay at its working precision.

use core::cmp::Ordering;
use core::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, RoundingMode, Sign};

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone, Debug)]
pub struct Real(pub(crate) BigFloat);

impl Real {
    pub fn zero(p: usize) -> Self {
        Real(BigFloat::from_i64(0, p))
    }

    pub fn from_i64(v: i64, p: usize) -> Self {
        Real(BigFloat::from_i64(v, p))
    }

    pub fn from_f64(v: f64, p: usize) -> Self {
        Real(BigFloat::from_f64(v, p))
    }

    /// Rounds a big integer to `p` bits.
    pub fn from_bigint(v: &num_bigint::BigInt, p: usize) -> Self {
        let (sign, limbs) = v.to_u64_digits();
        let wide = p.max(64 * limbs.len()).max(64);
        let mut acc = BigFloat::from_u64(0, wide);
        for (i, limb) in limbs.iter().enumerate() {
            let mut part = BigFloat::from_u64(*limb, wide);
            if *limb != 0 {
                let e = part.exponent().unwrap_or(0);
                part.set_exponent(e + 64 * i as i32);
            }
            acc = acc.add(&part, wide, RM);
        }
        let mut out = Real(acc).with_prec(p);
        if sign == num_bigint::Sign::Minus {
            out = -out;
        }
        out
    }

    pub fn from_rational(v: &num_rational::BigRational, p: usize) -> Self {
        let n = Real::from_bigint(v.numer(), p + 8);
        let d = Real::from_bigint(v.denom(), p + 8);
        (&n / &d).with_prec(p)
    }

    pub fn prec(&self) -> usize {
        self.0.mantissa_max_bit_len().unwrap_or(64)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative() && !self.0.is_zero()
    }

    pub fn is_neg_infinity(&self) -> bool {
        self.0.is_inf_neg()
    }

    pub fn is_int(&self) -> bool {
        self.0.is_int()
    }

    pub fn abs(&self) -> Real {
        Real(self.0.abs())
    }

    pub fn floor(&self) -> Real {
        Real(self.0.floor())
    }

    pub fn sqrt(&self) -> Real {
        Real(self.0.sqrt(self.prec(), RM))
    }

    pub fn recip(&self) -> Real {
        Real(self.0.reciprocal(self.prec(), RM))
    }

    pub fn mul_i64(&self, k: i64) -> Real {
        self * &Real::from_i64(k, self.prec())
    }

    pub fn div_i64(&self, k: i64) -> Real {
        self / &Real::from_i64(k, self.prec())
    }

    /// Multiplication by `2^k`, exact.
    pub fn ldexp(&self, k: i32) -> Real {
        if self.is_zero() || !self.is_finite() {
            return self.clone();
        }
        let mut out = self.0.clone();
        let e = out.exponent().unwrap_or(0);
        out.set_exponent(e + k);
        Real(out)
    }

    pub fn with_prec(&self, p: usize) -> Real {
        let mut out = self.0.clone();
        let _ = out.set_precision(p, RM);
        Real(out)
    }

    pub fn cmp_abs(&self, other: &Real) -> Ordering {
        match self.0.abs_cmp(&other.0) {
            Some(c) if c < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }

    /// Mantissa fraction in [1/2, 1) and binary exponent, for nonzero finite values.
    fn frac_exp(&self) -> Option<(f64, i32, bool)> {
        if self.is_zero() || !self.is_finite() {
            return None;
        }
        let (words, _, sign, e, _) = self.0.as_raw_parts()?;
        let top = *words.last()? as f64;
        let next = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
        let frac = (top + next / 18446744073709551616.0) / 18446744073709551616.0;
        Some((frac, e, sign == Sign::Neg))
    }

    /// Nearest `f64`; saturates to infinity or flushes to zero outside its range.
    pub fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        match self.frac_exp() {
            None => 0.0,
            Some((frac, e, neg)) => {
                let v = libm::ldexp(frac, e);
                if neg {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// `log2 |x|`, `-inf` for zero. Never underflows.
    pub fn log2_abs(&self) -> f64 {
        if self.0.is_inf() {
            return f64::INFINITY;
        }
        match self.frac_exp() {
            None => f64::NEG_INFINITY,
            Some((frac, e, _)) => e as f64 + libm::log2(frac),
        }
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

fn p2(a: &Real, b: &Real) -> usize {
    a.prec().max(b.prec())
}

macro_rules! real_binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<&Real> for &Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                Real(self.0.$f(&rhs.0, p2(self, rhs), RM))
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            fn $m(self, rhs: Real) -> Real {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Real> for Real {
            type Output = Real;
            fn $m(self, rhs: &Real) -> Real {
                (&self).$m(rhs)
            }
        }
    };
}

real_binop!(Add, add, add);
real_binop!(Sub, sub, sub);
real_binop!(Mul, mul, mul);
real_binop!(Div, div, div);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(BigFloat::neg(&self.0))
    }
}

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real(BigFloat::neg(&self.0))
    }
}

/// Complex number with multiprecision components.
#[derive(Clone, Debug, PartialEq)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

pub type ComplexValue = Complex;

impl Complex {
    pub fn new(re: Real, im: Real) -> Self {
        Complex { re, im }
    }

    pub fn zero(p: usize) -> Self {
        Complex::new(Real::zero(p), Real::zero(p))
    }

    pub fn one(p: usize) -> Self {
        Complex::new(Real::from_i64(1, p), Real::zero(p))
    }

    pub fn from_real(re: Real) -> Self {
        let p = re.prec();
        Complex::new(re, Real::zero(p))
    }

    pub fn from_i64(v: i64, p: usize) -> Self {
        Complex::from_real(Real::from_i64(v, p))
    }

    pub fn from_f64(re: f64, im: f64, p: usize) -> Self {
        Complex::new(Real::from_f64(re, p), Real::from_f64(im, p))
    }

    pub fn prec(&self) -> usize {
        self.re.prec().max(self.im.prec())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn conj(&self) -> Complex {
        Complex::new(self.re.clone(), -&self.im)
    }

    pub fn norm_sqr(&self) -> Real {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn abs(&self) -> Real {
        if self.im.is_zero() {
            return self.re.abs();
        }
        if self.re.is_zero() {
            return self.im.abs();
        }
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: &Real) -> Complex {
        Complex::new(&self.re * s, &self.im * s)
    }

    pub fn recip(&self) -> Complex {
        if self.im.is_zero() {
            return Complex::new(self.re.recip(), Real::zero(self.prec()));
        }
        let d = self.norm_sqr();
        Complex::new(&self.re / &d, -(&self.im / &d))
    }

    pub fn mul_i64(&self, k: i64) -> Complex {
        Complex::new(self.re.mul_i64(k), self.im.mul_i64(k))
    }

    /// `log2 |z|`, `-inf` for zero.
    pub fn log2_abs(&self) -> f64 {
        if self.im.is_zero() {
            return self.re.log2_abs();
        }
        if self.re.is_zero() {
            return self.im.log2_abs();
        }
        // Rescale first so the squares stay comfortably inside any exponent range.
        let shift = -(self.re.log2_abs().max(self.im.log2_abs()) as i32);
        let r = Complex::new(self.re.ldexp(shift), self.im.ldexp(shift));
        0.5 * r.norm_sqr().log2_abs() - shift as f64
    }

    pub fn abs_f64(&self) -> f64 {
        libm::exp2(self.log2_abs())
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl Add<&Complex> for &Complex {
    type Output = Complex;
    fn add(self, rhs: &Complex) -> Complex {
        Complex::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub<&Complex> for &Complex {
    type Output = Complex;
    fn sub(self, rhs: &Complex) -> Complex {
        Complex::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul<&Complex> for &Complex {
    type Output = Complex;
    fn mul(self, rhs: &Complex) -> Complex {
        if rhs.im.is_zero() {
            return Complex::new(&self.re * &rhs.re, &self.im * &rhs.re);
        }
        if self.im.is_zero() {
            return Complex::new(&self.re * &rhs.re, &self.re * &rhs.im);
        }
        Complex::new(
            &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        )
    }
}

impl Div<&Complex> for &Complex {
    type Output = Complex;
    fn div(self, rhs: &Complex) -> Complex {
        if rhs.im.is_zero() {
            return Complex::new(&self.re / &rhs.re, &self.im / &rhs.re);
        }
        let d = rhs.norm_sqr();
        let re = &(&self.re * &rhs.re) + &(&self.im * &rhs.im);
        let im = &(&self.im * &rhs.re) - &(&self.re * &rhs.im);
        Complex::new(&re / &d, &im / &d)
    }
}

impl Neg for &Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex::new(-&self.re, -&self.im)
    }
}

macro_rules! complex_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Complex> for Complex {
            type Output = Complex;
            fn $m(self, rhs: Complex) -> Complex {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Complex> for Complex {
            type Output = Complex;
            fn $m(self, rhs: &Complex) -> Complex {
                (&self).$m(rhs)
            }
        }
    };
}

complex_owned!(Add, add);
complex_owned!(Sub, sub);
complex_owned!(Mul, mul);
complex_owned!(Div, div);

/// A complex value as `exp(log_magnitude + i phase)`.
///
/// `log_magnitude` is `-inf` exactly when the value is zero. The phase lies
/// in `(-pi, pi]`.
#[derive(Clone, Debug)]
pub struct LogComplex {
    pub log_magnitude: Real,
    pub phase: Real,
}

impl LogComplex {
    pub fn zero(p: usize) -> Self {
        LogComplex {
            log_magnitude: Real(astro_float::INF_NEG),
            phase: Real::zero(p),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_magnitude.is_neg_infinity()
    }
}

/// Neumaier-compensated running sum of complex values.
#[derive(Clone, Debug)]
pub struct CompensatedSum {
    sum: Complex,
    comp: Complex,
}

impl CompensatedSum {
    pub fn new(p: usize) -> Self {
        CompensatedSum {
            sum: Complex::zero(p),
            comp: Complex::zero(p),
        }
    }

    pub fn add(&mut self, x: &Complex) {
        let (sr, cr) = two_sum(&self.sum.re, &x.re);
        let (si, ci) = two_sum(&self.sum.im, &x.im);
        self.sum = Complex::new(sr, si);
        self.comp = Complex::new(&self.comp.re + &cr, &self.comp.im + &ci);
    }

    pub fn value(&self) -> Complex {
        &self.sum + &self.comp
    }
}

fn two_sum(s: &Real, x: &Real) -> (Real, Real) {
    let t = s + x;
    let c = if s.cmp_abs(x) != Ordering::Less {
        &(s - &t) + x
    } else {
        &(x - &t) + s
    };
    (t, c)
}
