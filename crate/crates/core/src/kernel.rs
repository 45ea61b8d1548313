//! Scalar special functions at a fixed working precision.
//!
//! Every routine that truncates an infinite process returns a [`Certified`]
//! value whose `err` is a conservative absolute bound on truncation plus
//! rounding.

use alloc::format;
use alloc::vec::Vec;
use core::cell::{OnceCell, RefCell};

use astro_float::Consts;

use crate::error::{Error, Result};
use crate::exact::CRat;
use crate::real::{Complex, LogComplex, Real, RM};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrecisionContext {
    pub precision_bits: usize,
    pub target_tolerance: f64,
}

impl PrecisionContext {
    pub fn new(precision_bits: usize) -> Result<Self> {
        if precision_bits < 64 {
            return Err(Error::InvalidParameters(format!(
                "precision_bits must be >= 64, got {precision_bits}"
            )));
        }
        let tol = libm::exp2(-(precision_bits as f64 - 8.0)).max(1e-300);
        Ok(PrecisionContext {
            precision_bits,
            target_tolerance: tol,
        })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameters(format!("tolerance must be > 0, got {tol}")));
        }
        self.target_tolerance = tol;
        Ok(self)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::new(256).expect("256 bits is valid")
    }
}

/// A value with an absolute error bound.
#[derive(Clone, Debug)]
pub struct Certified<T> {
    pub value: T,
    pub err: f64,
}

struct Spouge {
    a: i64,
    prec: usize,
    coeffs: Vec<Real>,
    rel_err: f64,
}

/// Working-precision evaluator for the scalar functions.
///
/// Holds lazily built constants, so it is cheap to share by reference but not
/// `Sync`; build one per thread.
pub struct Kernel {
    ctx: PrecisionContext,
    work: usize,
    cc: RefCell<Consts>,
    pi: OnceCell<Real>,
    spouge: OnceCell<Spouge>,
}

const GUARD_BITS: usize = 64;

impl Kernel {
    pub fn new(ctx: PrecisionContext) -> Self {
        Kernel {
            ctx,
            work: ctx.precision_bits + GUARD_BITS,
            cc: RefCell::new(Consts::new().expect("constant cache allocation")),
            pi: OnceCell::new(),
            spouge: OnceCell::new(),
        }
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn prec(&self) -> usize {
        self.work
    }

    /// Relative size of one rounding at working precision.
    pub fn ulp(&self) -> f64 {
        libm::exp2(-(self.work as f64))
    }

    pub fn tol(&self) -> f64 {
        self.ctx.target_tolerance
    }

    fn with_cc<R>(&self, f: impl FnOnce(&mut Consts) -> R) -> R {
        f(&mut self.cc.borrow_mut())
    }

    pub fn int(&self, v: i64) -> Real {
        Real::from_i64(v, self.work)
    }

    pub fn real(&self, v: f64) -> Real {
        Real::from_f64(v, self.work)
    }

    pub fn complex(&self, re: f64, im: f64) -> Complex {
        Complex::from_f64(re, im, self.work)
    }

    pub fn one(&self) -> Complex {
        Complex::one(self.work)
    }

    pub fn zero(&self) -> Complex {
        Complex::zero(self.work)
    }

    pub fn crat(&self, v: &CRat) -> Complex {
        Complex::new(
            Real::from_rational(&v.re, self.work),
            Real::from_rational(&v.im, self.work),
        )
    }

    pub fn pi(&self) -> Real {
        self.pi
            .get_or_init(|| Real(self.with_cc(|cc| cc.pi(self.work, RM))))
            .clone()
    }

    pub fn exp(&self, x: &Real) -> Real {
        let p = x.prec().max(self.work);
        Real(self.with_cc(|cc| x.0.exp(p, RM, cc)))
    }

    pub fn ln(&self, x: &Real) -> Real {
        let p = x.prec().max(self.work);
        Real(self.with_cc(|cc| x.0.ln(p, RM, cc)))
    }

    fn sin_cos(&self, x: &Real) -> (Real, Real) {
        let p = x.prec().max(self.work);
        self.with_cc(|cc| (Real(x.0.sin(p, RM, cc)), Real(x.0.cos(p, RM, cc))))
    }

    fn sinh_cosh(&self, x: &Real) -> (Real, Real) {
        let p = x.prec().max(self.work);
        self.with_cc(|cc| (Real(x.0.sinh(p, RM, cc)), Real(x.0.cosh(p, RM, cc))))
    }

    /// Argument of `re + i im` in `(-pi, pi]`.
    pub fn atan2(&self, im: &Real, re: &Real) -> Real {
        let p = re.prec().max(im.prec()).max(self.work);
        let pi = self.pi().with_prec(p);
        if re.is_zero() {
            if im.is_zero() {
                return Real::zero(p);
            }
            let half = pi.ldexp(-1);
            return if im.is_negative() { -half } else { half };
        }
        let t = im / re;
        let base = Real(self.with_cc(|cc| t.0.atan(p, RM, cc)));
        if re.is_negative() {
            if im.is_negative() {
                base - pi
            } else {
                base + pi
            }
        } else {
            base
        }
    }

    pub fn cexp(&self, z: &Complex) -> Complex {
        let m = self.exp(&z.re);
        if z.im.is_zero() {
            return Complex::from_real(m);
        }
        let (s, c) = self.sin_cos(&z.im);
        Complex::new(&m * &c, &m * &s)
    }

    /// Principal logarithm; `ZeroArgument` at zero.
    pub fn cln(&self, z: &Complex) -> Result<Complex> {
        if z.is_zero() {
            return Err(Error::ZeroArgument);
        }
        let re = if z.im.is_zero() {
            self.ln(&z.re.abs())
        } else {
            // ln|z| with the larger component factored out.
            let (big, small) = if z.re.cmp_abs(&z.im) == core::cmp::Ordering::Less {
                (z.im.abs(), z.re.abs())
            } else {
                (z.re.abs(), z.im.abs())
            };
            let r = &small / &big;
            let one = Real::from_i64(1, r.prec());
            let inner = self.ln(&(&one + &(&r * &r))).ldexp(-1);
            self.ln(&big) + inner
        };
        Ok(Complex::new(re, self.atan2(&z.im, &z.re)))
    }

    /// `q^e = exp(e ln q)` given `ln q`.
    pub fn qpow(&self, ln_q: &Real, e: &Complex) -> Complex {
        self.cexp(&e.scale(ln_q))
    }

    /// Reduces a phase into `(-pi, pi]`.
    pub fn reduce_phase(&self, phi: &Real) -> Real {
        let two_pi = self.pi().ldexp(1);
        let k = (&(phi / &two_pi) + &Real::from_f64(0.5, phi.prec())).floor();
        let mut out = phi - &(&k * &two_pi);
        let pi = self.pi();
        if out <= -pi.clone() {
            out = out + two_pi;
        } else if out > pi {
            out = out - two_pi;
        }
        out
    }

    pub fn log_complex(&self, z: &Complex) -> LogComplex {
        if z.is_zero() {
            return LogComplex::zero(self.work);
        }
        let l = self.cln(z).expect("nonzero");
        LogComplex {
            log_magnitude: l.re,
            phase: l.im,
        }
    }

    pub fn from_log(&self, l: &LogComplex) -> Complex {
        if l.is_zero() {
            return self.zero();
        }
        self.cexp(&Complex::new(l.log_magnitude.clone(), l.phase.clone()))
    }

    /// `(a;q)_m` for any integer `m`.
    pub fn qpoch_finite(&self, a: &Complex, q: &Complex, m: i64) -> Result<Complex> {
        let one = self.one();
        let mut acc = self.one();
        if m >= 0 {
            let mut t = a.clone();
            for _ in 0..m {
                acc = &acc * &(&one - &t);
                t = &t * q;
            }
            return Ok(acc);
        }
        if q.is_zero() {
            return Err(Error::DivisionByVanishingFactor("q = 0 in a negative-length product".into()));
        }
        let qi = q.recip();
        let mut t = a * &qi;
        for k in 1..=(-m) {
            let f = &one - &t;
            if f.is_zero() {
                return Err(Error::DivisionByVanishingFactor(format!("1 - a q^-{k} = 0")));
            }
            acc = &acc * &f;
            t = &t * &qi;
        }
        Ok(acc.recip())
    }

    /// `(a;q)_inf` with the tail bound `2|a||q|^K/(1-|q|)` on the omitted logarithms.
    pub fn qpoch_infinite(&self, a: &Complex, q: &Complex) -> Result<Certified<Complex>> {
        let lq = q.log2_abs();
        if lq >= 0.0 {
            return Err(Error::NomeOutOfRange);
        }
        let one = self.one();
        if a.is_zero() {
            return Ok(Certified { value: one, err: 0.0 });
        }
        let log2_tol = libm::log2(self.tol());
        let log2_gap = libm::log2(1.0 - libm::exp2(lq));
        let mut acc = self.one();
        let mut t = a.clone();
        let mut k = 0u64;
        loop {
            let lt = t.log2_abs();
            if lt <= -1.0 && 1.0 + lt - log2_gap <= log2_tol {
                let tail = libm::exp2(1.0 + lt - log2_gap);
                let rel = 2.0 * tail + (k as f64 + 1.0) * 2.0 * self.ulp();
                let err = acc.abs_f64() * rel;
                return Ok(Certified { value: acc, err });
            }
            let f = &one - &t;
            if f.is_zero() {
                return Ok(Certified { value: self.zero(), err: 0.0 });
            }
            acc = &acc * &f;
            t = &t * q;
            k += 1;
        }
    }

    /// `(a)_m` for any integer `m`.
    pub fn pochhammer(&self, a: &Complex, m: i64) -> Result<Complex> {
        let mut acc = self.one();
        if m >= 0 {
            let mut t = a.clone();
            for _ in 0..m {
                acc = &acc * &t;
                t.re = &t.re + &self.int(1);
            }
            return Ok(acc);
        }
        let mut t = a.clone();
        for k in 1..=(-m) {
            t.re = &t.re - &self.int(1);
            if t.is_zero() {
                return Err(Error::DivisionByVanishingFactor(format!("a - {k} = 0")));
            }
            acc = &acc * &t;
        }
        Ok(acc.recip())
    }

    /// `sin(pi z)`, exactly zero at integers.
    pub fn sin_reflection(&self, z: &Complex) -> Complex {
        let p = z.prec().max(self.work);
        let x = &z.re;
        // x mod 2 keeps the sine argument small and exact integers exact.
        let two = Real::from_i64(2, x.prec().max(64));
        let xr = x - &(&(x / &two).floor() * &two);
        if z.im.is_zero() && xr.is_int() {
            return Complex::zero(p);
        }
        let pi = self.pi();
        let (s, c) = self.sin_cos(&(&xr * &pi));
        if z.im.is_zero() {
            return Complex::new(s, Real::zero(p));
        }
        let (sh, ch) = self.sinh_cosh(&(&z.im * &pi));
        Complex::new(&s * &ch, &c * &sh)
    }

    fn spouge(&self) -> &Spouge {
        self.spouge.get_or_init(|| {
            let target = self.work as f64 + 8.0;
            let ln2pi = libm::log2(2.0 * core::f64::consts::PI);
            let a = libm::ceil(target / ln2pi) as i64 + 2;
            let prec = 2 * self.work + 32;
            let rel_err = libm::pow(a as f64, -0.5) * libm::exp2(-(a as f64 + 0.5) * ln2pi);
            let mut coeffs = Vec::with_capacity(a as usize);
            let two_pi = self.pi().with_prec(prec).ldexp(1);
            coeffs.push(two_pi.sqrt());
            let mut fact = Real::from_i64(1, prec);
            for k in 1..a {
                if k > 1 {
                    fact = fact.mul_i64(k - 1);
                }
                let base = Real::from_i64(a - k, prec);
                let expo = Real::from_f64(k as f64 - 0.5, prec);
                let lnb = self.ln(&base);
                let pw = self.exp(&(&(&expo * &lnb) + &base));
                let mut c = &pw / &fact;
                if k % 2 == 0 {
                    c = -c;
                }
                coeffs.push(c);
            }
            Spouge { a, prec, coeffs, rel_err }
        })
    }

    /// `log Gamma(w + 1)` for `Re w >= 1/2` by Spouge's approximation.
    fn log_gamma_shifted(&self, w: &Complex) -> Result<(Complex, f64)> {
        let sp = self.spouge();
        let p = sp.prec;
        let w = Complex::new(w.re.with_prec(p), w.im.with_prec(p));
        let mut sum = Complex::from_real(sp.coeffs[0].clone());
        for k in 1..sp.a {
            let mut d = w.clone();
            d.re = &d.re + &Real::from_i64(k, p);
            sum = &sum + &(&Complex::from_real(sp.coeffs[k as usize].clone()) / &d);
        }
        let mut wa = w.clone();
        wa.re = &wa.re + &Real::from_i64(sp.a, p);
        let mut wh = w.clone();
        wh.re = &wh.re + &Real::from_f64(0.5, p);
        let lwa = self.cln(&wa)?;
        let ls = self.cln(&sum)?;
        let out = &(&(&wh * &lwa) - &wa) + &ls;
        let out = Complex::new(out.re.with_prec(self.work), out.im.with_prec(self.work));
        Ok((out, sp.rel_err + 16.0 * self.ulp()))
    }

    /// Principal-branch `log Gamma(z)` with the phase reduced into `(-pi, pi]`.
    pub fn log_gamma(&self, z: &Complex) -> Result<Certified<LogComplex>> {
        if z.im.is_zero() && z.re.is_int() && !(z.re > Real::zero(64)) {
            return Err(Error::PoleAtNonpositiveInteger(z.re.to_f64() as i64));
        }
        let half = Real::from_f64(0.5, self.work);
        let (l, err) = if z.re < half {
            // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
            let one = self.one();
            let zr = &one - z;
            let (lg, e1) = self.log_gamma_shifted(&(&zr - &one))?;
            let s = self.sin_reflection(z);
            let ls = self.cln(&s)?;
            let lpi = self.ln(&self.pi());
            let out = &(&Complex::from_real(lpi) - &ls) - &lg;
            (out, e1 + 8.0 * self.ulp())
        } else {
            // Gamma(z) = Gamma(z + 1) / z keeps the Spouge argument at Re >= 1/2.
            let (lg, e1) = self.log_gamma_shifted(z)?;
            let lz = self.cln(z)?;
            (&lg - &lz, e1 + 4.0 * self.ulp())
        };
        Ok(Certified {
            value: LogComplex {
                log_magnitude: l.re,
                phase: self.reduce_phase(&l.im),
            },
            err,
        })
    }

    /// `1 / Gamma(z)`, exactly zero at the poles.
    pub fn recip_gamma(&self, z: &Complex) -> Result<Certified<Complex>> {
        match self.log_gamma(z) {
            Err(Error::PoleAtNonpositiveInteger(_)) => Ok(Certified { value: self.zero(), err: 0.0 }),
            Err(e) => Err(e),
            Ok(lg) => {
                let v = self.cexp(&Complex::new(-&lg.value.log_magnitude, -&lg.value.phase));
                let err = v.abs_f64() * 2.0 * lg.err;
                Ok(Certified { value: v, err })
            }
        }
    }

    pub fn gamma(&self, z: &Complex) -> Result<Certified<Complex>> {
        let lg = self.log_gamma(z)?;
        let v = self.from_log(&lg.value);
        let err = v.abs_f64() * 2.0 * lg.err;
        Ok(Certified { value: v, err })
    }

    fn check_nome(q: &Complex) -> Result<()> {
        let lq = q.log2_abs();
        if !(lq < 0.0) || q.is_zero() {
            return Err(Error::NomeOutOfRange);
        }
        Ok(())
    }

    /// `sum_m (-1)^m q^{m(m-1)/2} zeta^m`, both directions run until the
    /// term ratio is below 1/2 and the geometric remainder is negligible.
    pub fn theta_series(&self, zeta: &Complex, q: &Complex) -> Result<Certified<Complex>> {
        Self::check_nome(q)?;
        if zeta.is_zero() {
            return Err(Error::ZeroArgument);
        }
        let log2_tol = libm::log2(self.tol());
        let mut sum = crate::real::CompensatedSum::new(self.work);
        let one = self.one();
        sum.add(&one);
        let mut max_l2 = 0.0f64;
        let mut count = 1u64;
        let mut tail_l2 = f64::NEG_INFINITY;
        let zi = zeta.recip();
        for side in 0..2 {
            // side 0: m = 1, 2, ... with ratio -q^m zeta; side 1: m = -1, -2, ... with ratio -q^{k+1}/zeta
            let mut t = one.clone();
            let mut qk = if side == 0 { self.one() } else { q.clone() };
            let mult = if side == 0 { zeta } else { &zi };
            loop {
                let ratio = -&(&qk * mult);
                let rl = ratio.log2_abs();
                let tl = t.log2_abs();
                if rl <= -1.0 && tl + rl + 1.0 <= log2_tol + max_l2 {
                    tail_l2 = tail_l2.max(tl + rl + 1.0);
                    break;
                }
                t = &t * &ratio;
                sum.add(&t);
                max_l2 = max_l2.max(t.log2_abs());
                count += 1;
                qk = &qk * q;
            }
        }
        let err = 2.0 * libm::exp2(tail_l2) + libm::exp2(max_l2) * (count as f64) * 4.0 * self.ulp();
        Ok(Certified { value: sum.value(), err })
    }

    /// `(q, zeta, q/zeta; q)_inf`.
    pub fn theta_product(&self, zeta: &Complex, q: &Complex) -> Result<Certified<Complex>> {
        Self::check_nome(q)?;
        if zeta.is_zero() {
            return Err(Error::ZeroArgument);
        }
        let a = self.qpoch_infinite(q, q)?;
        let b = self.qpoch_infinite(zeta, q)?;
        let c = self.qpoch_infinite(&(q / zeta), q)?;
        let v = &(&a.value * &b.value) * &c.value;
        let rel = |x: &Certified<Complex>| {
            let m = x.value.abs_f64();
            if m == 0.0 {
                0.0
            } else {
                x.err / m
            }
        };
        let err = v.abs_f64() * (rel(&a) + rel(&b) + rel(&c) + 4.0 * self.ulp());
        Ok(Certified { value: v, err })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> Kernel {
        Kernel::new(PrecisionContext::default())
    }

    fn close(a: &Complex, b: &Complex, tol: f64) -> bool {
        let d = (a - b).abs_f64();
        d <= tol * b.abs_f64().max(1e-300)
    }

    #[test]
    fn finite_qpoch_branches() {
        let k = k();
        let q = k.complex(0.5, 0.0);
        let a = k.complex(0.5, 0.0);
        assert_eq!(k.qpoch_finite(&a, &q, 0).unwrap(), k.one());
        let v = k.qpoch_finite(&a, &q, 2).unwrap();
        assert!(close(&v, &k.complex(0.375, 0.0), 1e-70));
        let a = k.complex(0.3, 0.2);
        let v = k.qpoch_finite(&a, &q, -1).unwrap();
        let want = (&k.one() - &(&a / &q)).recip();
        assert!(close(&v, &want, 1e-70));
        let hit = k.qpoch_finite(&k.complex(0.25, 0.0), &q, -3);
        assert!(matches!(hit, Err(Error::DivisionByVanishingFactor(_))));
    }

    #[test]
    fn infinite_qpoch_trivial_values() {
        let k = k();
        let q = k.complex(0.7, 0.0);
        assert!(k.qpoch_infinite(&k.one(), &q).unwrap().value.is_zero());
        assert_eq!(k.qpoch_infinite(&k.zero(), &q).unwrap().value, k.one());
        assert!(matches!(k.qpoch_infinite(&k.one(), &k.one()), Err(Error::NomeOutOfRange)));
    }

    #[test]
    fn pochhammer_branches() {
        let k = k();
        assert!(close(&k.pochhammer(&k.one(), 5).unwrap(), &k.complex(120.0, 0.0), 1e-70));
        let v = k.pochhammer(&k.complex(0.3, 0.0), -2).unwrap();
        let want = k.complex(1.0, 0.0) / k.complex(1.19, 0.0);
        assert!(close(&v, &want, 1e-15));
        assert!(k.pochhammer(&k.complex(2.0, 0.0), -3).is_err());
    }

    #[test]
    fn log_gamma_small_values() {
        let k = k();
        let lg = k.log_gamma(&k.one()).unwrap();
        assert!(lg.value.log_magnitude.to_f64().abs() < 1e-70);
        let lg5 = k.log_gamma(&k.complex(5.0, 0.0)).unwrap();
        let ln24 = k.ln(&k.int(24));
        assert!((&lg5.value.log_magnitude - &ln24).abs().to_f64() < 1e-70);
        let lgh = k.log_gamma(&k.complex(0.5, 0.0)).unwrap();
        let want = k.ln(&k.pi()).ldexp(-1);
        assert!((&lgh.value.log_magnitude - &want).abs().to_f64() < 1e-70);
        assert!(lgh.value.phase.to_f64().abs() < 1e-70);
        // Gamma(-0.5) = -2 sqrt(pi): phase pi.
        let lgm = k.log_gamma(&k.complex(-0.5, 0.0)).unwrap();
        assert!((lgm.value.phase.to_f64() - core::f64::consts::PI).abs() < 1e-14);
        assert!(matches!(
            k.log_gamma(&k.complex(-3.0, 0.0)),
            Err(Error::PoleAtNonpositiveInteger(-3))
        ));
    }

    #[test]
    fn sine_values() {
        let k = k();
        assert!(k.sin_reflection(&k.complex(7.0, 0.0)).is_zero());
        assert!(k.sin_reflection(&k.complex(-4.0, 0.0)).is_zero());
        let h = k.sin_reflection(&k.complex(0.5, 0.0));
        assert!(close(&h, &k.one(), 1e-70));
    }

    #[test]
    fn theta_vanishes_at_one() {
        let k = k();
        let q = k.complex(0.5, 0.0);
        let s = k.theta_series(&k.one(), &q).unwrap();
        assert!(s.value.abs_f64() <= s.err + 1e-70);
        assert!(k.theta_product(&k.one(), &q).unwrap().value.is_zero());
    }
}
