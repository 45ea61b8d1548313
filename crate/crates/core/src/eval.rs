//! Evaluators map the symbolic factors of a term to values.
//!
//! `NumEval` works in multiprecision complex arithmetic, for `0 < q < 1` as
//! well as for the degenerate `q = 1` branch; `RatEval` works over exact
//! rational generators and only knows the finite factors.

use alloc::format;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{rat_pow, CRat, Rational};
use crate::exponent::{Binding, LinExp, Sym};
use crate::kernel::Kernel;
use crate::params::Nome;
use crate::real::{Complex, Real};

/// A value with its exact zero/pole bookkeeping.
///
/// `order` counts zeros minus poles that were factored out of `value`;
/// `hits` counts every factored-out zero or pole. A product with
/// `order == 0` but `hits > 0` is an indeterminate 0/0.
#[derive(Clone, Debug)]
pub struct Tracked<V> {
    pub value: V,
    pub order: i32,
    pub hits: u32,
    /// Accumulated relative rounding bound.
    pub rel_err: f64,
}

impl<V> Tracked<V> {
    pub fn plain(value: V, rel_err: f64) -> Self {
        Tracked { value, order: 0, hits: 0, rel_err }
    }

    pub fn is_zero(&self) -> bool {
        self.order > 0
    }
}

/// Value algebra plus the primitive factors.
pub trait Evaluator {
    type V: Clone;

    fn one(&self) -> Self::V;
    fn zero(&self) -> Self::V;
    fn mul(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn div(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn degenerate(&self) -> bool;
    /// Relative rounding of one operation.
    fn ulp(&self) -> f64;

    /// `1 - q^{e + start + i*step}` (or `e + start + i*step` at `q = 1`), `i < count`.
    fn brackets(&self, e: &LinExp, start: i64, step: i64, count: usize) -> Result<Vec<Tracked<Self::V>>>;
    /// `(q^{e+shift};q)_inf` (or `1/Gamma(e+shift)` at `q = 1`).
    fn inf(&self, e: &LinExp, shift: i64) -> Result<Tracked<Self::V>>;
    /// `q^e` (1 at `q = 1`).
    fn qpow(&self, e: &LinExp) -> Result<Self::V>;
    /// `q^{a b}` for two exponents whose product is not linear.
    fn qpow_prod(&self, a: &LinExp, b: &LinExp) -> Result<Self::V>;

    fn tmul(&self, a: &Tracked<Self::V>, b: &Tracked<Self::V>) -> Tracked<Self::V> {
        Tracked {
            value: self.mul(&a.value, &b.value),
            order: a.order + b.order,
            hits: a.hits + b.hits,
            rel_err: a.rel_err + b.rel_err + self.ulp(),
        }
    }

    fn tdiv(&self, a: &Tracked<Self::V>, b: &Tracked<Self::V>) -> Tracked<Self::V> {
        Tracked {
            value: self.div(&a.value, &b.value),
            order: a.order - b.order,
            hits: a.hits + b.hits,
            rel_err: a.rel_err + b.rel_err + self.ulp(),
        }
    }

    fn tpow(&self, a: &Tracked<Self::V>, p: i32) -> Tracked<Self::V> {
        let mut acc = Tracked::plain(self.one(), 0.0);
        for _ in 0..p.unsigned_abs() {
            acc = if p > 0 { self.tmul(&acc, a) } else { self.tdiv(&acc, a) };
        }
        acc
    }

    fn tone(&self) -> Tracked<Self::V> {
        Tracked::plain(self.one(), 0.0)
    }

    fn zero_marker(&self) -> Tracked<Self::V> {
        Tracked { value: self.one(), order: 1, hits: 1, rel_err: 0.0 }
    }

    /// Resolves the bookkeeping: exact zero, value, or an error.
    fn finish(&self, t: &Tracked<Self::V>, what: &str) -> Result<Self::V> {
        if t.order > 0 {
            Ok(self.zero())
        } else if t.order < 0 {
            Err(Error::PoleHit(format!("{what}: pole of order {}", -t.order)))
        } else if t.hits > 0 {
            Err(Error::PoleHit(format!("{what}: zero and pole coincide")))
        } else {
            Ok(t.value.clone())
        }
    }

    /// `(q^{e};q)_m` for any integer `m`, from brackets.
    fn poch(&self, e: &LinExp, m: i64) -> Result<Tracked<Self::V>> {
        let mut acc = self.tone();
        if m >= 0 {
            for b in self.brackets(e, 0, 1, m as usize)? {
                acc = self.tmul(&acc, &b);
            }
        } else {
            for b in self.brackets(e, -1, -1, (-m) as usize)? {
                acc = self.tdiv(&acc, &b);
            }
        }
        Ok(acc)
    }
}

/// Multiprecision evaluator bound to a nome and a symbol binding.
pub struct NumEval<'k> {
    pub kernel: &'k Kernel,
    pub nome: Nome,
    q: Complex,
    q_inv: Complex,
    ln_q: Real,
    binding: Binding,
}

impl<'k> NumEval<'k> {
    pub fn new(kernel: &'k Kernel, nome: Nome, binding: Binding) -> Self {
        let p = kernel.prec();
        let (q, ln_q) = match &nome {
            Nome::One => (Complex::one(p), Real::zero(p)),
            Nome::Real(r) => {
                let qr = Real::from_rational(r, p);
                let l = kernel.ln(&qr);
                (Complex::from_real(qr), l)
            }
        };
        let q_inv = q.recip();
        NumEval { kernel, nome, q, q_inv, ln_q, binding }
    }

    pub fn binding(&self) -> &Binding {
        &self.binding
    }

    pub fn with_binding(&self, binding: Binding) -> NumEval<'k> {
        NumEval {
            kernel: self.kernel,
            nome: self.nome.clone(),
            q: self.q.clone(),
            q_inv: self.q_inv.clone(),
            ln_q: self.ln_q.clone(),
            binding,
        }
    }

    pub fn q(&self) -> &Complex {
        &self.q
    }

    pub fn exact(&self, e: &LinExp) -> CRat {
        e.eval(&self.binding)
    }

    /// `q^x` for an exact exponent.
    pub fn qpow_exact(&self, x: &CRat) -> Complex {
        if x.is_zero() || self.nome.is_one() {
            return self.kernel.one();
        }
        self.kernel.qpow(&self.ln_q, &self.kernel.crat(x))
    }

    fn inf_exact(&self, x: &CRat) -> Result<Tracked<Complex>> {
        let k = self.kernel;
        let at_pole = matches!(x.as_integer(), Some(m) if m <= 0);
        match self.nome {
            Nome::One => {
                if let Some(m) = x.as_integer().filter(|_| at_pole) {
                    // 1/Gamma vanishes simply at -m; keep (-1)^m m! as the nonzero part.
                    let mut f = k.one();
                    for i in 1..=(-m) {
                        f = f.mul_i64(i);
                    }
                    if m % 2 != 0 {
                        f = -&f;
                    }
                    return Ok(Tracked { value: f, order: 1, hits: 1, rel_err: 0.0 });
                }
                let c = k.recip_gamma(&k.crat(x))?;
                Ok(Tracked::plain(c.value.clone(), rel(&c.value, c.err)))
            }
            Nome::Real(_) => {
                if at_pole {
                    let m = -x.as_integer().unwrap_or(0);
                    let head = k.qpoch_finite(&self.qpow_exact(x), &self.q, m)?;
                    let tail = k.qpoch_infinite(&self.q, &self.q)?;
                    let v = &head * &tail.value;
                    return Ok(Tracked { value: v, order: 1, hits: 1, rel_err: rel(&tail.value, tail.err) });
                }
                let c = k.qpoch_infinite(&self.qpow_exact(x), &self.q)?;
                Ok(Tracked::plain(c.value.clone(), rel(&c.value, c.err)))
            }
        }
    }
}

fn rel(v: &Complex, err: f64) -> f64 {
    let m = v.abs_f64();
    if m == 0.0 {
        0.0
    } else {
        err / m
    }
}

impl Evaluator for NumEval<'_> {
    type V = Complex;

    fn one(&self) -> Complex {
        self.kernel.one()
    }

    fn zero(&self) -> Complex {
        self.kernel.zero()
    }

    fn mul(&self, a: &Complex, b: &Complex) -> Complex {
        a * b
    }

    fn div(&self, a: &Complex, b: &Complex) -> Complex {
        a / b
    }

    fn degenerate(&self) -> bool {
        self.nome.is_one()
    }

    fn ulp(&self) -> f64 {
        4.0 * self.kernel.ulp()
    }

    fn brackets(&self, e: &LinExp, start: i64, step: i64, count: usize) -> Result<Vec<Tracked<Complex>>> {
        let x0 = &self.exact(e) + &CRat::int(start);
        let hit = x0.as_integer();
        let is_hit = |i: usize| matches!(hit, Some(h) if h + (i as i64) * step == 0);
        let mut out = Vec::with_capacity(count);
        match self.nome {
            Nome::One => {
                let mut x = self.kernel.crat(&x0);
                let st = self.kernel.int(step);
                for i in 0..count {
                    out.push(if is_hit(i) { self.zero_marker() } else { Tracked::plain(x.clone(), 0.0) });
                    x.re = &x.re + &st;
                }
            }
            Nome::Real(_) => {
                let one = self.kernel.one();
                let mult = match step {
                    1 => self.q.clone(),
                    -1 => self.q_inv.clone(),
                    s => self.qpow_exact(&CRat::int(s)),
                };
                let mut t = self.qpow_exact(&x0);
                for i in 0..count {
                    if is_hit(i) {
                        out.push(self.zero_marker());
                    } else {
                        // Cancellation in 1 - t costs log2|1/(1-t)| bits.
                        let b = &one - &t;
                        let cond = t.abs_f64() / b.abs_f64().max(f64::MIN_POSITIVE);
                        out.push(Tracked::plain(b, (i as f64 + 2.0) * self.ulp() * cond.max(1.0)));
                    }
                    t = &t * &mult;
                }
            }
        }
        Ok(out)
    }

    fn inf(&self, e: &LinExp, shift: i64) -> Result<Tracked<Complex>> {
        self.inf_exact(&(&self.exact(e) + &CRat::int(shift)))
    }

    fn qpow(&self, e: &LinExp) -> Result<Complex> {
        Ok(self.qpow_exact(&self.exact(e)))
    }

    fn qpow_prod(&self, a: &LinExp, b: &LinExp) -> Result<Complex> {
        Ok(self.qpow_exact(&(&self.exact(a) * &self.exact(b))))
    }
}

/// Exact evaluator over rational generators.
///
/// For `0 < q < 1` the symbols stand for `t = q^g` and `x_r = q^{g_r}`, and
/// every exponent must be an integer combination of them. For `q = 1` the
/// symbols carry the exponents themselves.
#[derive(Clone, Debug)]
pub struct RatEval {
    pub nome: Nome,
    /// Value of `q^g` (or `g`).
    pub t: Rational,
    /// Values of `q^{g_r}` (or `g_r`).
    pub x: Vec<Rational>,
}

impl RatEval {
    pub fn new(nome: Nome, t: Rational, x: Vec<Rational>) -> Self {
        RatEval { nome, t, x }
    }

    fn integral(c: &crate::exponent::Coef, e: &LinExp) -> Result<i64> {
        if c.is_integer() {
            Ok(c.to_integer())
        } else {
            Err(Error::NonIntegralExponent(format!("{e:?}")))
        }
    }

    /// `q^e` as a monomial in the generators (or the exponent value at `q = 1`).
    fn monomial(&self, e: &LinExp) -> Result<Rational> {
        match &self.nome {
            Nome::One => {
                let mut acc = Rational::new(
                    (*e.constant.numer()).into(),
                    (*e.constant.denom()).into(),
                );
                for (s, c) in &e.terms {
                    let v = self.sym(*s, e)?;
                    acc += v * Rational::new((*c.numer()).into(), (*c.denom()).into());
                }
                Ok(acc)
            }
            Nome::Real(q) => {
                let mut acc = rat_pow(q, Self::integral(&e.constant, e)?);
                for (s, c) in &e.terms {
                    let k = Self::integral(c, e)?;
                    acc *= rat_pow(&self.sym(*s, e)?, k);
                }
                Ok(acc)
            }
        }
    }

    fn sym(&self, s: Sym, e: &LinExp) -> Result<Rational> {
        match s {
            Sym::G => Ok(self.t.clone()),
            Sym::Coupling(r) => self
                .x
                .get(r as usize)
                .cloned()
                .ok_or_else(|| Error::InvalidParameters(format!("coupling {r} unbound"))),
            Sym::Z(_) => Err(Error::Unsupported(format!("exact evaluation with a free z in {e:?}"))),
        }
    }
}

impl Evaluator for RatEval {
    type V = Rational;

    fn one(&self) -> Rational {
        Rational::one()
    }

    fn zero(&self) -> Rational {
        Rational::zero()
    }

    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }

    fn div(&self, a: &Rational, b: &Rational) -> Rational {
        a / b
    }

    fn degenerate(&self) -> bool {
        self.nome.is_one()
    }

    fn ulp(&self) -> f64 {
        0.0
    }

    fn brackets(&self, e: &LinExp, start: i64, step: i64, count: usize) -> Result<Vec<Tracked<Rational>>> {
        let mut out = Vec::with_capacity(count);
        match &self.nome {
            Nome::One => {
                let mut x = self.monomial(&e.plus_int(start))?;
                let st = Rational::from_integer(step.into());
                for _ in 0..count {
                    out.push(if x.is_zero() { self.zero_marker() } else { Tracked::plain(x.clone(), 0.0) });
                    x += &st;
                }
            }
            Nome::Real(q) => {
                let mult = rat_pow(q, step);
                let mut t = self.monomial(&e.plus_int(start))?;
                for _ in 0..count {
                    let b = Rational::one() - &t;
                    out.push(if b.is_zero() { self.zero_marker() } else { Tracked::plain(b, 0.0) });
                    t *= &mult;
                }
            }
        }
        Ok(out)
    }

    fn inf(&self, e: &LinExp, _shift: i64) -> Result<Tracked<Rational>> {
        Err(Error::Unsupported(format!("infinite product {e:?} has no exact value")))
    }

    fn qpow(&self, e: &LinExp) -> Result<Rational> {
        if self.nome.is_one() {
            return Ok(Rational::one());
        }
        self.monomial(e)
    }

    fn qpow_prod(&self, a: &LinExp, _b: &LinExp) -> Result<Rational> {
        if self.nome.is_one() {
            return Ok(Rational::one());
        }
        Err(Error::Unsupported(format!("product exponent {a:?} in exact mode")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::coef;
    use crate::kernel::PrecisionContext;

    fn binding() -> Binding {
        Binding {
            g: CRat::ratio(7, 20),
            couplings: alloc::vec![CRat::ratio(1, 10), CRat::ratio(1, 5), CRat::ratio(3, 10), CRat::ratio(2, 5)],
            z: alloc::vec![CRat::ratio(37, 100)],
        }
    }

    #[test]
    fn brackets_match_direct_powers() {
        let k = Kernel::new(PrecisionContext::default());
        let ev = NumEval::new(&k, Nome::parse("0.5").unwrap(), binding());
        let e = &LinExp::z(0) + &LinExp::coupling(1);
        let bs = ev.brackets(&e, -3, 1, 7).unwrap();
        for (i, b) in bs.iter().enumerate() {
            let x = &ev.exact(&e) + &CRat::int(i as i64 - 3);
            let direct = &k.one() - &ev.qpow_exact(&x);
            assert!((&b.value - &direct).abs_f64() < 1e-60);
        }
    }

    #[test]
    fn structural_zero_in_poch() {
        let k = Kernel::new(PrecisionContext::default());
        let ev = NumEval::new(&k, Nome::parse("0.5").unwrap(), binding());
        // (q^{-2};q)_3 contains 1 - q^0.
        let p = ev.poch(&LinExp::int(-2), 3).unwrap();
        assert_eq!(p.order, 1);
        assert!(ev.finish(&p, "t").unwrap().is_zero());
        // 1/(q^{1};q)_{-2} = (1 - q^0)(1 - q^{-1}): pole of the reciprocal.
        let p = ev.poch(&LinExp::int(1), -2).unwrap();
        assert_eq!(p.order, -1);
        assert!(ev.finish(&p, "t").is_err());
    }

    #[test]
    fn degenerate_branch_is_linear() {
        let k = Kernel::new(PrecisionContext::default());
        let ev = NumEval::new(&k, Nome::One, binding());
        let p = ev.poch(&LinExp::z(0), 3).unwrap();
        let want = k.pochhammer(&k.crat(&CRat::ratio(37, 100)), 3).unwrap();
        assert!((&p.value - &want).abs_f64() < 1e-60);
        let inf = ev.inf(&LinExp::int(-3), 0).unwrap();
        assert_eq!(inf.order, 1);
        assert!((inf.value.to_f64().0 + 6.0).abs() < 1e-12);
    }

    #[test]
    fn exact_monomials() {
        let q = Nome::parse("1/3").unwrap();
        let ev = RatEval::new(q, Rational::new(2.into(), 5.into()), alloc::vec![Rational::new(3.into(), 7.into()); 4]);
        let e = LinExp::g().times(2).plus_int(1);
        assert_eq!(ev.qpow(&e).unwrap(), Rational::new(4.into(), 75.into()));
        assert!(matches!(ev.qpow(&LinExp::g().scale(coef(1, 2))), Err(Error::NonIntegralExponent(_))));
        let b = ev.brackets(&LinExp::int(-1), 0, 1, 3).unwrap();
        assert_eq!(b[1].order, 1);
        assert_eq!(b[0].value, Rational::from_integer((-2).into()));
    }
}
