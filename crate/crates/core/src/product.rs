//! Terms as products of symbolic factors, with direct evaluation and a
//! table-driven evaluator for lattice sums.
//!
//! A factor's exponent is `base + form . lambda`. Factors sharing a `form`
//! (up to sign) are folded into one table indexed by `form . lambda`, so a
//! term costs one lookup per distinct form.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::eval::{Evaluator, Tracked};
use crate::exponent::LinExp;

#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    /// `(q^{base+L};q)_inf`; `1/Gamma(base+L)` at `q = 1`.
    Inf,
    /// `1 - q^{base+L}`; `base+L` at `q = 1`.
    Bracket,
    /// `(q^{base};q)_L`; `(base)_L` at `q = 1`.
    Poch,
    /// `q^{c L}` (`base` unused); 1 at `q = 1`.
    QLin(LinExp),
    /// `q^{a b}`, constant; 1 at `q = 1`.
    QProd(LinExp, LinExp),
    /// `(q^{base};q)_m` for a fixed `m`, constant.
    PochFixed(i64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub kind: Kind,
    pub base: LinExp,
    /// Integer coefficients of `lambda`; empty means constant.
    pub form: Vec<i64>,
    pub pow: i32,
}

impl Factor {
    pub fn new(kind: Kind, base: LinExp, form: Vec<i64>, pow: i32) -> Self {
        Factor { kind, base, form, pow }
    }

    pub fn constant(kind: Kind, base: LinExp, pow: i32) -> Self {
        Factor { kind, base, form: Vec::new(), pow }
    }

    fn shift(&self, lambda: &[i64]) -> i64 {
        self.form.iter().zip(lambda).map(|(a, b)| a * b).sum()
    }

    fn is_constant(&self) -> bool {
        self.form.iter().all(|c| *c == 0)
    }

    /// Value at `lambda`, uncompiled.
    pub fn eval<E: Evaluator>(&self, ev: &E, lambda: &[i64]) -> Result<Tracked<E::V>> {
        let l = self.shift(lambda);
        let v = match &self.kind {
            Kind::Inf => ev.inf(&self.base, l)?,
            Kind::Bracket => ev.brackets(&self.base, l, 1, 1)?.pop().expect("one bracket"),
            Kind::Poch => ev.poch(&self.base, l)?,
            Kind::QLin(c) => Tracked::plain(ev.qpow(&c.times(l))?, ev.ulp()),
            Kind::QProd(a, b) => Tracked::plain(ev.qpow_prod(a, b)?, ev.ulp()),
            Kind::PochFixed(m) => ev.poch(&self.base, *m)?,
        };
        Ok(ev.tpow(&v, self.pow))
    }
}

/// An ordered product of factors over `Z^n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Term {
    pub n: usize,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(n: usize) -> Self {
        Term { n, factors: Vec::new() }
    }

    pub fn push(&mut self, f: Factor) {
        self.factors.push(f);
    }

    /// Constant factor.
    pub fn c(&mut self, kind: Kind, base: LinExp, pow: i32) {
        self.push(Factor::constant(kind, base, pow));
    }

    /// Lattice-dependent factor.
    pub fn l(&mut self, kind: Kind, base: LinExp, form: Vec<i64>, pow: i32) {
        self.push(Factor::new(kind, base, form, pow));
    }

    pub fn extend(&mut self, other: Term) {
        self.factors.extend(other.factors);
    }

    pub fn inverse(mut self) -> Term {
        for f in &mut self.factors {
            f.pow = -f.pow;
        }
        self
    }

    pub fn eval_tracked<E: Evaluator>(&self, ev: &E, lambda: &[i64]) -> Result<Tracked<E::V>> {
        let mut acc = ev.tone();
        for f in &self.factors {
            acc = ev.tmul(&acc, &f.eval(ev, lambda)?);
        }
        Ok(acc)
    }

    /// Direct evaluation, factor by factor.
    pub fn eval<E: Evaluator>(&self, ev: &E, lambda: &[i64]) -> Result<E::V> {
        let t = self.eval_tracked(ev, lambda)?;
        ev.finish(&t, "term")
    }

    /// Value of the constant part only (every form ignored).
    pub fn eval_at_origin<E: Evaluator>(&self, ev: &E) -> Result<E::V> {
        self.eval(ev, &vec![0; self.n])
    }
}

#[derive(Clone, Debug)]
enum Ratio {
    /// `(q^a;q)_L`
    Poch(LinExp),
    /// `[a+L]/[a]`
    Bracket(LinExp),
    /// `q^{cL}`
    QLin(LinExp),
}

#[derive(Clone, Debug)]
struct Member {
    ratio: Ratio,
    sign: i64,
    pow: i32,
}

#[derive(Clone, Debug)]
struct Group<V> {
    form: Vec<i64>,
    members: Vec<Member>,
    radius: i64,
    /// `table[L + radius]` for `|L| <= radius`.
    table: Vec<Tracked<V>>,
}

/// Canonical sign: first nonzero coefficient positive.
fn canonical(form: &[i64]) -> (Vec<i64>, i64) {
    match form.iter().find(|c| **c != 0) {
        Some(c) if *c < 0 => (form.iter().map(|x| -x).collect(), -1),
        _ => (form.to_vec(), 1),
    }
}

/// Table-driven evaluator of one term over `Z^n`.
#[derive(Clone, Debug)]
pub struct CompiledTerm<V> {
    pub n: usize,
    origin: Tracked<V>,
    groups: Vec<Group<V>>,
}

impl<V: Clone> CompiledTerm<V> {
    /// Splits every lattice factor into its value at the origin times a ratio
    /// that is 1 at the origin: `Inf(a+L) = Inf(a) / Poch(a, L)` and
    /// `[a+L] = [a] * ([a+L]/[a])`.
    pub fn compile<E: Evaluator<V = V>>(term: &Term, ev: &E, initial_radius: i64) -> Result<Self> {
        let mut origin_term = Term::new(term.n);
        let mut groups: Vec<Group<V>> = Vec::new();
        for f in &term.factors {
            if f.is_constant() {
                origin_term.push(Factor::constant(f.kind.clone(), f.base.clone(), f.pow));
                continue;
            }
            let (ratio, pow) = match &f.kind {
                Kind::Inf => {
                    origin_term.push(Factor::constant(Kind::Inf, f.base.clone(), f.pow));
                    (Ratio::Poch(f.base.clone()), -f.pow)
                }
                Kind::Bracket => {
                    origin_term.push(Factor::constant(Kind::Bracket, f.base.clone(), f.pow));
                    (Ratio::Bracket(f.base.clone()), f.pow)
                }
                Kind::Poch => (Ratio::Poch(f.base.clone()), f.pow),
                Kind::QLin(c) => (Ratio::QLin(c.clone()), f.pow),
                Kind::QProd(..) | Kind::PochFixed(_) => unreachable!("constant kinds carry no form"),
            };
            let mut form = f.form.clone();
            form.resize(term.n, 0);
            let (form, sign) = canonical(&form);
            let member = Member { ratio, sign, pow };
            match groups.iter_mut().find(|g| g.form == form) {
                Some(g) => g.members.push(member),
                None => groups.push(Group { form, members: vec![member], radius: -1, table: Vec::new() }),
            }
        }
        let origin = origin_term.eval_tracked(ev, &vec![0; term.n])?;
        let mut out = CompiledTerm { n: term.n, origin, groups };
        for i in 0..out.groups.len() {
            let r = initial_radius * out.groups[i].form.iter().map(|c| c.abs()).sum::<i64>();
            out.build(i, r.max(1), ev)?;
        }
        Ok(out)
    }

    fn build<E: Evaluator<V = V>>(&mut self, gi: usize, radius: i64, ev: &E) -> Result<()> {
        let g = &mut self.groups[gi];
        let width = (2 * radius + 1) as usize;
        let mut table: Vec<Tracked<V>> = (0..width).map(|_| ev.tone()).collect();
        for m in &g.members {
            let vals = ratio_table(&m.ratio, radius, ev)?;
            for (idx, slot) in table.iter_mut().enumerate() {
                let l = idx as i64 - radius;
                let v = &vals[(m.sign * l + radius) as usize];
                *slot = ev.tmul(slot, &ev.tpow(v, m.pow));
            }
        }
        g.table = table;
        g.radius = radius;
        Ok(())
    }

    /// Value at the origin, as tracked.
    pub fn origin(&self) -> &Tracked<V> {
        &self.origin
    }

    pub fn eval_tracked<E: Evaluator<V = V>>(&mut self, ev: &E, lambda: &[i64]) -> Result<Tracked<V>> {
        let mut acc = self.origin.clone();
        for gi in 0..self.groups.len() {
            let l: i64 = self.groups[gi].form.iter().zip(lambda).map(|(a, b)| a * b).sum();
            if l.abs() > self.groups[gi].radius {
                let r = (2 * self.groups[gi].radius).max(l.abs());
                self.build(gi, r, ev)?;
            }
            let g = &self.groups[gi];
            acc = ev.tmul(&acc, &g.table[(l + g.radius) as usize]);
        }
        Ok(acc)
    }

    pub fn eval<E: Evaluator<V = V>>(&mut self, ev: &E, lambda: &[i64]) -> Result<V> {
        let t = self.eval_tracked(ev, lambda)?;
        ev.finish(&t, "term")
    }

    /// `term(lambda + e_j) / term(lambda)`, tracked so that zeros propagate.
    pub fn ratio<E: Evaluator<V = V>>(&mut self, ev: &E, lambda: &[i64], j: usize) -> Result<Tracked<V>> {
        let a = self.eval_tracked(ev, lambda)?;
        let mut next = lambda.to_vec();
        next[j] += 1;
        let b = self.eval_tracked(ev, &next)?;
        Ok(ev.tdiv(&b, &a))
    }

    /// Number of distinct lattice forms (lookups per term).
    pub fn lookups(&self) -> usize {
        self.groups.len()
    }
}

/// Values of a ratio factor for `L` in `[-radius, radius]`, index `L + radius`.
fn ratio_table<E: Evaluator>(ratio: &Ratio, radius: i64, ev: &E) -> Result<Vec<Tracked<E::V>>> {
    let r = radius as usize;
    let mut out: Vec<Tracked<E::V>> = (0..2 * r + 1).map(|_| ev.tone()).collect();
    match ratio {
        Ratio::Poch(a) => {
            // P[m+1] = P[m] [a+m],  P[-m-1] = P[-m] / [a-m-1]
            let up = ev.brackets(a, 0, 1, r)?;
            let down = ev.brackets(a, -1, -1, r)?;
            for m in 0..r {
                out[r + m + 1] = ev.tmul(&out[r + m], &up[m]);
                out[r - m - 1] = ev.tdiv(&out[r - m], &down[m]);
            }
        }
        Ratio::Bracket(a) => {
            let bs = ev.brackets(a, -radius, 1, 2 * r + 1)?;
            let at0 = bs[r].clone();
            for (slot, b) in out.iter_mut().zip(&bs) {
                *slot = ev.tdiv(b, &at0);
            }
        }
        Ratio::QLin(c) => {
            let step = Tracked::plain(ev.qpow(c)?, ev.ulp());
            for m in 0..r {
                out[r + m + 1] = ev.tmul(&out[r + m], &step);
                out[r - m - 1] = ev.tdiv(&out[r - m], &step);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::CRat;
    use crate::exponent::Binding;
    use crate::kernel::{Kernel, PrecisionContext};
    use crate::params::Nome;
    use crate::NumEval;

    #[test]
    fn compiled_matches_direct() {
        let k = Kernel::new(PrecisionContext::new(128).unwrap());
        let b = Binding {
            g: CRat::ratio(7, 20),
            couplings: vec![CRat::ratio(1, 10), CRat::ratio(1, 5), CRat::ratio(3, 10), CRat::ratio(2, 5)],
            z: vec![CRat::ratio(37, 100), CRat::ratio(11, 100)],
        };
        for nome in [Nome::parse("0.5").unwrap(), Nome::One] {
            let ev = NumEval::new(&k, nome, b.clone());
            let mut t = Term::new(2);
            let s = &LinExp::z(0) + &LinExp::z(1);
            t.l(Kind::Inf, s.plus_int(1), vec![1, 1], 1);
            t.l(Kind::Inf, (-&s).plus_int(1), vec![-1, -1], -1);
            t.l(Kind::Bracket, LinExp::z(0).times(2), vec![2, 0], 1);
            t.l(Kind::Poch, &LinExp::z(1) - &LinExp::coupling(2), vec![0, 1], 1);
            t.l(Kind::QLin(LinExp::g().plus_int(1)), LinExp::zero(), vec![1, -1], 1);
            let mut c = CompiledTerm::compile(&t, &ev, 1).unwrap();
            assert_eq!(c.lookups(), 4);
            for lam in [[0, 0], [1, 0], [-2, 3], [4, -4], [-5, -1]] {
                let d = t.eval(&ev, &lam).unwrap();
                let v = c.eval(&ev, &lam).unwrap();
                assert!((&d - &v).abs_f64() <= 1e-25 * d.abs_f64(), "{lam:?}");
            }
        }
    }
}
