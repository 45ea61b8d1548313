//! Symbolic exponents: rational linear combinations of `g`, the couplings and
//! the components of `z`.
//!
//! Every base `q^e` that appears in a term is built as a [`LinExp`], so the
//! same formula can be evaluated numerically, at `q = 1`, or over exact
//! rational generators.

use alloc::vec::Vec;
use core::ops::{Add, Neg, Sub};

use num_rational::Ratio;
use num_traits::Zero;

use crate::exact::CRat;

pub type Coef = Ratio<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    G,
    /// Coupling `g_{r+1}` (zero-based).
    Coupling(u8),
    /// Component `z_{j+1}` (zero-based).
    Z(u8),
}

/// `constant + sum coef * sym`, kept sorted by symbol with no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinExp {
    pub constant: Coef,
    pub terms: Vec<(Sym, Coef)>,
}

pub fn coef(n: i64, d: i64) -> Coef {
    Ratio::new(n, d)
}

impl LinExp {
    pub fn zero() -> Self {
        LinExp { constant: Coef::zero(), terms: Vec::new() }
    }

    pub fn int(c: i64) -> Self {
        LinExp { constant: Coef::from_integer(c), terms: Vec::new() }
    }

    pub fn sym(s: Sym) -> Self {
        LinExp { constant: Coef::zero(), terms: alloc::vec![(s, Coef::from_integer(1))] }
    }

    pub fn g() -> Self {
        LinExp::sym(Sym::G)
    }

    pub fn coupling(r: usize) -> Self {
        LinExp::sym(Sym::Coupling(r as u8))
    }

    pub fn z(j: usize) -> Self {
        LinExp::sym(Sym::Z(j as u8))
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coef_of(&self, s: Sym) -> Coef {
        self.terms
            .iter()
            .find(|(t, _)| *t == s)
            .map(|(_, c)| *c)
            .unwrap_or_else(Coef::zero)
    }

    pub fn scale(&self, k: Coef) -> LinExp {
        if k.is_zero() {
            return LinExp::zero();
        }
        LinExp {
            constant: self.constant * k,
            terms: self.terms.iter().map(|(s, c)| (*s, *c * k)).collect(),
        }
    }

    pub fn times(&self, k: i64) -> LinExp {
        self.scale(Coef::from_integer(k))
    }

    pub fn plus_int(&self, k: i64) -> LinExp {
        let mut out = self.clone();
        out.constant += Coef::from_integer(k);
        out
    }

    fn combine(&self, other: &LinExp, sign: i64) -> LinExp {
        let s = Coef::from_integer(sign);
        let mut terms: Vec<(Sym, Coef)> = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let next = match (self.terms.get(i), other.terms.get(j)) {
                (Some(a), Some(b)) if a.0 == b.0 => {
                    i += 1;
                    j += 1;
                    (a.0, a.1 + b.1 * s)
                }
                (Some(a), Some(b)) if a.0 < b.0 => {
                    i += 1;
                    *a
                }
                (Some(a), None) => {
                    i += 1;
                    *a
                }
                (_, Some(b)) => {
                    j += 1;
                    (b.0, b.1 * s)
                }
                (None, None) => unreachable!(),
            };
            if !next.1.is_zero() {
                terms.push(next);
            }
        }
        LinExp { constant: self.constant + other.constant * s, terms }
    }

    /// Exact value under a binding.
    pub fn eval(&self, b: &Binding) -> CRat {
        let mut acc = CRat::from_small(self.constant);
        for (s, c) in &self.terms {
            let v = b.value(*s);
            acc = &acc + &v.scale_small(*c);
        }
        acc
    }
}

impl Add for &LinExp {
    type Output = LinExp;
    fn add(self, o: &LinExp) -> LinExp {
        self.combine(o, 1)
    }
}

impl Sub for &LinExp {
    type Output = LinExp;
    fn sub(self, o: &LinExp) -> LinExp {
        self.combine(o, -1)
    }
}

impl Neg for &LinExp {
    type Output = LinExp;
    fn neg(self) -> LinExp {
        self.times(-1)
    }
}

impl Add for LinExp {
    type Output = LinExp;
    fn add(self, o: LinExp) -> LinExp {
        self.combine(&o, 1)
    }
}

impl Sub for LinExp {
    type Output = LinExp;
    fn sub(self, o: LinExp) -> LinExp {
        self.combine(&o, -1)
    }
}

impl Neg for LinExp {
    type Output = LinExp;
    fn neg(self) -> LinExp {
        self.times(-1)
    }
}

/// Exact values for the symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub g: CRat,
    pub couplings: Vec<CRat>,
    pub z: Vec<CRat>,
}

impl Binding {
    pub fn value(&self, s: Sym) -> CRat {
        match s {
            Sym::G => self.g.clone(),
            Sym::Coupling(r) => self.couplings[r as usize].clone(),
            Sym::Z(j) => self.z[j as usize].clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_merges_and_cancels() {
        let a = &LinExp::g() + &LinExp::coupling(2).plus_int(1);
        let b = &LinExp::coupling(2) - &LinExp::g();
        let s = &a + &b;
        assert_eq!(s.coef_of(Sym::G), Coef::zero());
        assert_eq!(s.coef_of(Sym::Coupling(2)), coef(2, 1));
        assert_eq!(s.constant, coef(1, 1));
        assert_eq!(s.terms.len(), 1);
        let d = &a - &a;
        assert_eq!(d, LinExp::zero());
    }

    #[test]
    fn evaluates_exactly() {
        let b = Binding {
            g: CRat::ratio(7, 20),
            couplings: alloc::vec![CRat::ratio(1, 10), CRat::ratio(1, 5), CRat::ratio(3, 10), CRat::ratio(2, 5)],
            z: alloc::vec![],
        };
        // 1 + g + (g1 + g2 + g3 + g4) / 2
        let mut e = LinExp::g().plus_int(1);
        for r in 0..4 {
            e = &e + &LinExp::coupling(r).scale(coef(1, 2));
        }
        assert_eq!(e.eval(&b), CRat::ratio(37, 20));
    }
}
