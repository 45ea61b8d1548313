//! Symbolic builders for every term, weight and closed form.
//!
//! Builders return a [`Term`]; evaluate it with [`NumEval`] (both branches of
//! `q`) or with [`crate::RatEval`] when only finite factors occur.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exact::CRat;
use crate::exponent::{Binding, LinExp};
use crate::eval::{Evaluator, NumEval};
use crate::params::{hat_sym, rho_sym, Nome};
use crate::product::{Kind, Term};
use crate::real::Complex;

/// Affine exponent `e + form . lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct Aff {
    pub e: LinExp,
    pub form: Vec<i64>,
}

impl Aff {
    pub fn constant(e: LinExp, n: usize) -> Aff {
        Aff { e, form: vec![0; n] }
    }

    /// `z_j + lambda_j`.
    pub fn shifted_z(j: usize, n: usize) -> Aff {
        let mut form = vec![0; n];
        form[j] = 1;
        Aff { e: LinExp::z(j), form }
    }

    pub fn add(&self, o: &Aff) -> Aff {
        Aff { e: &self.e + &o.e, form: self.form.iter().zip(&o.form).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Aff) -> Aff {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Aff {
        Aff { e: -&self.e, form: self.form.iter().map(|a| -a).collect() }
    }

    pub fn plus(&self, c: &LinExp) -> Aff {
        Aff { e: &self.e + c, form: self.form.clone() }
    }

    pub fn times(&self, k: i64) -> Aff {
        Aff { e: self.e.times(k), form: self.form.iter().map(|a| a * k).collect() }
    }
}

/// `x = z + lambda`.
pub fn shifted(n: usize) -> Vec<Aff> {
    (0..n).map(|j| Aff::shifted_z(j, n)).collect()
}

/// Constant point.
pub fn fixed(xs: &[LinExp]) -> Vec<Aff> {
    xs.iter().map(|e| Aff::constant(e.clone(), xs.len())).collect()
}

fn neg_all(x: &[Aff]) -> Vec<Aff> {
    x.iter().map(Aff::neg).collect()
}

fn one() -> LinExp {
    LinExp::int(1)
}

fn inf(t: &mut Term, a: Aff, pow: i32) {
    t.l(Kind::Inf, a.e, a.form, pow);
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |j| ((j + 1)..n).map(move |k| (j, k)))
}

fn g() -> LinExp {
    LinExp::g()
}

fn gr(r: usize) -> LinExp {
    LinExp::coupling(r)
}

fn coupling_sum(count: usize) -> LinExp {
    (0..count).fold(LinExp::zero(), |acc, r| &acc + &gr(r))
}

/// Which couplings enter the `-g_r` list of the summand at `q = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AomotoReading {
    /// `g_1, g_2, g_3, g_4`.
    #[default]
    Symmetric,
    /// `g_1, g_3, g_3, g_4` exactly as typeset in the degenerate display.
    Literal,
}

impl AomotoReading {
    fn list(self) -> [usize; 4] {
        match self {
            AomotoReading::Symmetric => [0, 1, 2, 3],
            AomotoReading::Literal => [0, 2, 2, 3],
        }
    }
}

/// `C_{+}(x)` with couplings `g_r` (or `ĝ_r` when `hat`).
pub fn c_plus_gen(x: &[Aff], perm: &[usize; 4], hat: bool) -> Term {
    let n = x.len();
    let cs: [LinExp; 4] = if hat { hat_sym(perm) } else { core::array::from_fn(gr) };
    let mut t = Term::new(n);
    for (j, k) in pairs(n) {
        let s = x[j].add(&x[k]);
        let d = x[j].sub(&x[k]);
        inf(&mut t, s.plus(&one()), 1);
        inf(&mut t, d.plus(&one()), 1);
        inf(&mut t, s.plus(&g().plus_int(1)), -1);
        inf(&mut t, d.plus(&g().plus_int(1)), -1);
    }
    for xj in x {
        inf(&mut t, xj.times(2).plus(&one()), 1);
        for c in &cs {
            inf(&mut t, xj.plus(&c.plus_int(1)), -1);
        }
    }
    t
}

pub fn c_plus(x: &[Aff]) -> Term {
    c_plus_gen(x, &crate::params::IDENTITY_PERM, false)
}

pub fn c_plus_hat(x: &[Aff], perm: &[usize; 4]) -> Term {
    c_plus_gen(x, perm, true)
}

/// `q^{-sum (1+2ρ̂_j) x_j}` split into its constant and lattice parts.
fn rho_hat_prefactor(t: &mut Term, x: &[Aff], perm: &[usize; 4], sign: i64) {
    let (_, rho_hat) = rho_sym(x.len(), perm);
    for (xj, rh) in x.iter().zip(&rho_hat) {
        let c = rh.times(2).plus_int(1).times(sign);
        if xj.e != LinExp::zero() {
            t.c(Kind::QProd(c.clone(), xj.e.clone()), LinExp::zero(), 1);
        }
        if xj.form.iter().any(|v| *v != 0) {
            t.l(Kind::QLin(c), LinExp::zero(), xj.form.clone(), 1);
        }
    }
}

/// `C_{-}(x)`, including the prefactor `q^{-sum (1+2ρ̂_j) x_j}`.
pub fn c_minus(x: &[Aff], perm: &[usize; 4]) -> Term {
    let n = x.len();
    let mut t = Term::new(n);
    rho_hat_prefactor(&mut t, x, perm, -1);
    for (j, k) in pairs(n) {
        let s = x[j].add(&x[k]);
        let d = x[j].sub(&x[k]);
        inf(&mut t, s.plus(&-&g()), 1);
        inf(&mut t, d.plus(&-&g()), 1);
        inf(&mut t, s, -1);
        inf(&mut t, d, -1);
    }
    for xj in x {
        for r in 0..4 {
            inf(&mut t, xj.plus(&-&gr(r)), 1);
        }
        inf(&mut t, xj.times(2), -1);
    }
    t
}

/// `Ĉ_{-}(x)`.
pub fn c_minus_hat(x: &[Aff], perm: &[usize; 4]) -> Term {
    let n = x.len();
    let hat = hat_sym(perm);
    let mut t = Term::new(n);
    for (j, k) in pairs(n) {
        let s = x[j].add(&x[k]);
        let d = x[j].sub(&x[k]);
        inf(&mut t, s.plus(&(-&g()).plus_int(1)), 1);
        inf(&mut t, d.plus(&(-&g()).plus_int(1)), 1);
        inf(&mut t, s.plus(&one()), -1);
        inf(&mut t, d.plus(&one()), -1);
    }
    for xj in x {
        for h in &hat {
            inf(&mut t, xj.plus(&(-h).plus_int(1)), 1);
        }
        inf(&mut t, xj.times(2).plus(&one()), -1);
    }
    t
}

/// `1/(C_+(z+λ) C_+(-z-λ))`.
pub fn macdonald(n: usize) -> Term {
    let x = shifted(n);
    let mut t = c_plus(&x);
    t.extend(c_plus(&neg_all(&x)));
    t.inverse()
}

/// `1/(C_+(z+λ) C_-(z+λ))` in the expanded bracket form.
pub fn aomoto(n: usize, perm: &[usize; 4], reading: AomotoReading) -> Term {
    let x = shifted(n);
    let mut t = Term::new(n);
    rho_hat_prefactor(&mut t, &x, perm, 1);
    for (j, k) in pairs(n) {
        for v in [x[j].add(&x[k]), x[j].sub(&x[k])] {
            t.l(Kind::Bracket, v.e.clone(), v.form.clone(), 1);
            inf(&mut t, v.plus(&g().plus_int(1)), 1);
            inf(&mut t, v.plus(&-&g()), -1);
        }
    }
    for xj in &x {
        let two = xj.times(2);
        t.l(Kind::Bracket, two.e, two.form, 1);
        for r in 0..4 {
            inf(&mut t, xj.plus(&gr(r).plus_int(1)), 1);
        }
        for r in reading.list() {
            inf(&mut t, xj.plus(&-&gr(r)), -1);
        }
    }
    t
}

/// The same summand assembled as `1/(C_+(x) C_-(x))` from the two builders.
pub fn aomoto_from_c(n: usize, perm: &[usize; 4]) -> Term {
    let x = shifted(n);
    let mut t = c_plus(&x);
    t.extend(c_minus(&x, perm));
    t.inverse()
}

/// `C_+(-z)/C_-(z)` at `λ = 0`, as infinite products.
pub fn aomoto_factor_products(n: usize, perm: &[usize; 4]) -> Term {
    let x = fixed(&(0..n).map(LinExp::z).collect::<Vec<_>>());
    let mut t = c_plus(&neg_all(&x));
    t.extend(c_minus(&x, perm).inverse());
    t
}

/// Middle-term normalized bilateral summand.
pub fn bailey(n: usize, perm: &[usize; 4]) -> Term {
    let (_, rho_hat) = rho_sym(n, perm);
    let mut t = Term::new(n);
    let unit = |j: usize| {
        let mut f = vec![0; n];
        f[j] = 1;
        f
    };
    for (j, rh) in rho_hat.iter().enumerate() {
        t.l(Kind::QLin(rh.times(2).plus_int(1)), LinExp::zero(), unit(j), 1);
    }
    for (j, k) in pairs(n) {
        let s = &LinExp::z(j) + &LinExp::z(k);
        let d = &LinExp::z(j) - &LinExp::z(k);
        let fs: Vec<i64> = (0..n).map(|i| (i == j) as i64 + (i == k) as i64).collect();
        let fd: Vec<i64> = (0..n).map(|i| (i == j) as i64 - (i == k) as i64).collect();
        for (v, f) in [(s, fs), (d, fd)] {
            t.l(Kind::Bracket, v.clone(), f.clone(), 1);
            t.c(Kind::Bracket, v.clone(), -1);
            t.l(Kind::Poch, &v - &g(), f.clone(), 1);
            t.l(Kind::Poch, (&v + &g()).plus_int(1), f, -1);
        }
    }
    for j in 0..n {
        let z = LinExp::z(j);
        t.l(Kind::Bracket, z.times(2), unit(j).iter().map(|v| 2 * v).collect(), 1);
        t.c(Kind::Bracket, z.times(2), -1);
        for r in 0..4 {
            t.l(Kind::Poch, &z - &gr(r), unit(j), 1);
            t.l(Kind::Poch, (&z + &gr(r)).plus_int(1), unit(j), -1);
        }
    }
    t
}

/// `Δ_q(λ)` (and `Δ_1`) on the cone.
pub fn rogers(n: usize, perm: &[usize; 4]) -> Term {
    let (rho, rho_hat) = rho_sym(n, perm);
    let mut t = Term::new(n);
    let unit = |j: usize| {
        let mut f = vec![0; n];
        f[j] = 1;
        f
    };
    for (j, rh) in rho_hat.iter().enumerate() {
        t.l(Kind::QLin((-&rh.times(2)).plus_int(1)), LinExp::zero(), unit(j), 1);
    }
    for (j, k) in pairs(n) {
        let fs: Vec<i64> = (0..n).map(|i| (i == j) as i64 + (i == k) as i64).collect();
        let fd: Vec<i64> = (0..n).map(|i| (i == j) as i64 - (i == k) as i64).collect();
        for (v, f) in [(&rho[j] + &rho[k], fs), (&rho[j] - &rho[k], fd)] {
            t.l(Kind::Bracket, v.clone(), f.clone(), 1);
            t.c(Kind::Bracket, v.clone(), -1);
            t.l(Kind::Poch, &v + &g(), f.clone(), 1);
            t.l(Kind::Poch, (&v - &g()).plus_int(1), f, -1);
        }
    }
    for (j, r) in rho.iter().enumerate() {
        t.l(Kind::Bracket, r.times(2), unit(j).iter().map(|v| 2 * v).collect(), 1);
        t.c(Kind::Bracket, r.times(2), -1);
        for c in 0..4 {
            t.l(Kind::Poch, r + &gr(c), unit(j), 1);
            t.l(Kind::Poch, (r - &gr(c)).plus_int(1), unit(j), -1);
        }
    }
    t
}

/// `Δ^G(z+λ)` with `2n+2` couplings.
pub fn gustafson(n: usize) -> Term {
    let x = shifted(n);
    let mut t = Term::new(n);
    for (j, k) in pairs(n) {
        let s = x[j].add(&x[k]);
        let d = x[j].sub(&x[k]);
        for v in [s.clone(), d.clone(), d.neg(), s.neg()] {
            inf(&mut t, v.plus(&one()), -1);
        }
    }
    for xj in &x {
        for r in 0..(2 * n + 2) {
            inf(&mut t, xj.plus(&gr(r).plus_int(1)), 1);
            inf(&mut t, xj.neg().plus(&gr(r).plus_int(1)), 1);
        }
        inf(&mut t, xj.times(2).plus(&one()), -1);
        inf(&mut t, xj.times(-2).plus(&one()), -1);
    }
    t
}

fn cinf(t: &mut Term, e: LinExp, pow: i32) {
    t.c(Kind::Inf, e, pow);
}

fn cpoch(t: &mut Term, e: LinExp, m: i64, pow: i32) {
    t.c(Kind::PochFixed(m), e, pow);
}

/// Product form of the Macdonald constant, `j = 1..n`.
pub fn macdonald_rhs(n: usize) -> Term {
    let mut t = Term::new(n);
    let sum = coupling_sum(4);
    for j in 1..=n {
        let (ji, nj) = (j as i64, (n - j) as i64);
        cinf(&mut t, one(), 1);
        cinf(&mut t, g().times(ji).plus_int(1), 1);
        for (r, s) in pairs(4) {
            cinf(&mut t, &(&g().times(nj) + &gr(r)) + &gr(s).plus_int(1), 1);
        }
        cinf(&mut t, g().plus_int(1), -1);
        cinf(&mut t, &g().times(2 * n as i64 - ji - 1) + &sum.plus_int(1), -1);
    }
    t
}

/// `Ĉ_-(ρ̂)/Ĉ_+(ρ̂)` from the two builders.
pub fn macdonald_rhs_hat(n: usize, perm: &[usize; 4]) -> Term {
    let (_, rho_hat) = rho_sym(n, perm);
    let x = fixed(&rho_hat);
    let mut t = c_minus_hat(&x, perm);
    t.extend(c_plus_hat(&x, perm).inverse());
    t
}

/// `S_n(g, g_r) / S_{n-1}(g, g_r + g/2)`.
pub fn recurrence_factor(n: usize) -> Term {
    let mut t = Term::new(n);
    let ni = n as i64;
    cinf(&mut t, one(), 1);
    cinf(&mut t, g().times(ni).plus_int(1), 1);
    for (r, s) in pairs(4) {
        cinf(&mut t, (&gr(r) + &gr(s)).plus_int(1), 1);
    }
    cinf(&mut t, g().plus_int(1), -1);
    cinf(&mut t, &g().times(ni - 1) + &coupling_sum(4).plus_int(1), -1);
    t
}

/// Nonterminating cone constant in the ρ/ρ̂ form.
pub fn rogers_rhs(n: usize, perm: &[usize; 4]) -> Term {
    let (rho, rh) = rho_sym(n, perm);
    let hat = hat_sym(perm);
    let mut t = Term::new(n);
    for (j, k) in pairs(n) {
        let (ps, pd) = (&rho[j] + &rho[k], &rho[j] - &rho[k]);
        let (hs, hd) = (&rh[j] + &rh[k], &rh[j] - &rh[k]);
        cinf(&mut t, ps.plus_int(1), 1);
        cinf(&mut t, pd.plus_int(1), 1);
        cinf(&mut t, (&g() - &hs).plus_int(1), 1);
        cinf(&mut t, (&g() - &hd).plus_int(1), 1);
        cinf(&mut t, (&ps - &g()).plus_int(1), -1);
        cinf(&mut t, (&pd - &g()).plus_int(1), -1);
        cinf(&mut t, (-&hs).plus_int(1), -1);
        cinf(&mut t, (-&hd).plus_int(1), -1);
    }
    for j in 0..n {
        cinf(&mut t, rho[j].times(2).plus_int(1), 1);
        for h in &hat {
            cinf(&mut t, (h - &rh[j]).plus_int(1), 1);
        }
        cinf(&mut t, (-&rh[j].times(2)).plus_int(1), -1);
        for r in 0..4 {
            cinf(&mut t, (&rho[j] - &gr(r)).plus_int(1), -1);
        }
    }
    t
}

/// Nonterminating cone constant after cancellation (couplings only).
pub fn rogers_rhs_simplified(n: usize, perm: &[usize; 4]) -> Term {
    let a = perm[0];
    let mut t = Term::new(n);
    let sum = coupling_sum(4);
    for j in 1..=n {
        let (nj, m) = ((n - j) as i64, (2 * n - j - 1) as i64);
        cinf(&mut t, &g().times(m) + &gr(a).times(2).plus_int(1), 1);
        cinf(&mut t, (-&(&g().times(m) + &sum)).plus_int(1), -1);
        for (r, s) in pairs(4) {
            if r != a && s != a {
                cinf(&mut t, (-&(&(&g().times(nj) + &gr(r)) + &gr(s))).plus_int(1), 1);
            }
        }
        for r in (0..4).filter(|r| *r != a) {
            cinf(&mut t, (&(&g().times(nj) + &gr(a)) - &gr(r)).plus_int(1), -1);
        }
    }
    t
}

/// The four printed forms of the terminating constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminatingForm {
    /// Products of `(·;q)_N`.
    LineOne,
    /// Products of `(·;q)_{-N}`.
    LineTwo,
    /// The squared constant.
    Squared,
    /// Couplings-only form with `(·;q)_N`.
    Simplified,
    /// Couplings-only form with `(·;q)_{-N}`.
    SimplifiedTwo,
}

pub fn terminating_rhs(n: usize, perm: &[usize; 4], big_n: u32, form: TerminatingForm) -> Term {
    let (rho, rh) = rho_sym(n, perm);
    let hat = hat_sym(perm);
    let (b, c, d) = (perm[1], perm[2], perm[3]);
    let nn = big_n as i64;
    let mut t = Term::new(n);
    let line1 = |t: &mut Term| {
        for (j, k) in pairs(n) {
            let ps = &rho[j] + &rho[k];
            cpoch(t, ps.plus_int(1), nn, 1);
            cpoch(t, (&ps - &g()).plus_int(1), nn, -1);
        }
        for j in 0..n {
            cpoch(t, rho[j].times(2).plus_int(1), nn, 1);
            cpoch(t, (&hat[b] - &rh[j]).plus_int(1), nn, 1);
            cpoch(t, (&rho[j] - &gr(c)).plus_int(1), nn, -1);
            cpoch(t, (&rho[j] - &gr(d)).plus_int(1), nn, -1);
        }
    };
    let line2 = |t: &mut Term| {
        for (j, k) in pairs(n) {
            let hs = &rh[j] + &rh[k];
            cpoch(t, (&g() - &hs).plus_int(1), -nn, 1);
            cpoch(t, (-&hs).plus_int(1), -nn, -1);
        }
        for j in 0..n {
            cpoch(t, (&hat[c] - &rh[j]).plus_int(1), -nn, 1);
            cpoch(t, (&hat[d] - &rh[j]).plus_int(1), -nn, 1);
            cpoch(t, (-&rh[j].times(2)).plus_int(1), -nn, -1);
            cpoch(t, (&rho[j] - &gr(b)).plus_int(1), -nn, -1);
        }
    };
    match form {
        TerminatingForm::LineOne => line1(&mut t),
        TerminatingForm::LineTwo => line2(&mut t),
        TerminatingForm::Squared => {
            // Arranged as typeset: pair block, then the single block.
            for (j, k) in pairs(n) {
                let ps = &rho[j] + &rho[k];
                let hs = &rh[j] + &rh[k];
                cpoch(&mut t, ps.plus_int(1), nn, 1);
                cpoch(&mut t, (&ps - &g()).plus_int(1), nn, -1);
                cpoch(&mut t, (&g() - &hs).plus_int(1), -nn, 1);
                cpoch(&mut t, (-&hs).plus_int(1), -nn, -1);
            }
            for j in 0..n {
                cpoch(&mut t, rho[j].times(2).plus_int(1), nn, 1);
                cpoch(&mut t, (&hat[b] - &rh[j]).plus_int(1), nn, 1);
                cpoch(&mut t, (-&rh[j].times(2)).plus_int(1), -nn, -1);
                cpoch(&mut t, (&rho[j] - &gr(b)).plus_int(1), -nn, -1);
                cpoch(&mut t, (&hat[c] - &rh[j]).plus_int(1), -nn, 1);
                cpoch(&mut t, (&hat[d] - &rh[j]).plus_int(1), -nn, 1);
                cpoch(&mut t, (&rho[j] - &gr(c)).plus_int(1), nn, -1);
                cpoch(&mut t, (&rho[j] - &gr(d)).plus_int(1), nn, -1);
            }
        }
        TerminatingForm::Simplified => {
            let a = perm[0];
            for j in 1..=n {
                let (nj, m) = ((n - j) as i64, (2 * n - j - 1) as i64);
                let base = &g().times(nj) + &gr(a);
                cpoch(&mut t, &g().times(m) + &gr(a).times(2).plus_int(1), nn, 1);
                cpoch(&mut t, (-&(&(&g().times(nj) + &gr(c)) + &gr(d))).plus_int(1), nn, 1);
                cpoch(&mut t, (&base - &gr(c)).plus_int(1), nn, -1);
                cpoch(&mut t, (&base - &gr(d)).plus_int(1), nn, -1);
            }
        }
        TerminatingForm::SimplifiedTwo => {
            let a = perm[0];
            for j in 1..=n {
                let (nj, m) = ((n - j) as i64, (2 * n - j - 1) as i64);
                let base = &(-&g().times(nj)) - &hat[a];
                cpoch(&mut t, (&base + &hat[c]).plus_int(1), -nn, 1);
                cpoch(&mut t, (&base + &hat[d]).plus_int(1), -nn, 1);
                cpoch(&mut t, (-&(&g().times(m) + &hat[a].times(2))).plus_int(1), -nn, -1);
                cpoch(&mut t, (&(&g().times(nj) + &hat[c]) + &hat[d]).plus_int(1), -nn, -1);
            }
        }
    }
    t
}

/// Closed form of the `2n+2`-coupling sum.
pub fn gustafson_rhs(n: usize) -> Term {
    let m = 2 * n + 2;
    let mut t = Term::new(n);
    for _ in 0..n {
        cinf(&mut t, one(), 1);
    }
    for (r, s) in pairs(m) {
        cinf(&mut t, (&gr(r) + &gr(s)).plus_int(1), 1);
    }
    cinf(&mut t, coupling_sum(m).plus_int(1), -1);
    t
}

/// `C_+(-z)/C_-(z)` through theta functions (`0<q<1`) or sines (`q=1`).
///
/// A vanishing denominator is reported as `ThetaZeroHit`; a vanishing
/// numerator gives an exact zero.
pub fn aomoto_factor_theta(ev: &NumEval, perm: &[usize; 4]) -> Result<Complex> {
    let k = ev.kernel;
    let b = ev.binding();
    let n = b.z.len();
    let z: Vec<CRat> = b.z.clone();
    let gv = b.g.clone();
    let degenerate = ev.degenerate();
    // θ(q^e) or sin(π e): zero exactly on integers e.
    let th = |e: &CRat| -> Result<Complex> {
        if e.as_integer().is_some() {
            return Ok(k.zero());
        }
        if degenerate {
            Ok(k.sin_reflection(&k.crat(e)))
        } else {
            Ok(k.theta_series(&ev.qpow_exact(e), ev.q())?.value)
        }
    };
    let mut num = k.one();
    let mut den = k.one();
    let mut den_label = alloc::string::String::new();
    let mut push_den = |v: Complex, label: alloc::string::String, den: &mut Complex| {
        if v.is_zero() && den_label.is_empty() {
            den_label = label;
        }
        *den = &*den * &v;
    };
    if !degenerate {
        let (_, rho_hat) = rho_sym(n, perm);
        let mut expo = CRat::zero();
        for j in 0..n {
            let c = ev.exact(&rho_hat[j].times(2).plus_int(1));
            expo = &expo + &(&c * &z[j]);
        }
        num = &num * &ev.qpow_exact(&expo);
    }
    for (j, kk) in pairs(n) {
        let s = &z[j] + &z[kk];
        let d = &z[j] - &z[kk];
        num = &(&num * &th(&s)?) * &th(&d)?;
        push_den(th(&(&s - &gv))?, format!("-g+z{}+z{}", j + 1, kk + 1), &mut den);
        push_den(th(&(&d - &gv))?, format!("-g+z{}-z{}", j + 1, kk + 1), &mut den);
    }
    let cube = if degenerate {
        let p = k.pi();
        Complex::from_real(&(&p * &p) * &p)
    } else {
        let qq = k.qpoch_infinite(ev.q(), ev.q())?.value;
        &(&qq * &qq) * &qq
    };
    for (j, zj) in z.iter().enumerate() {
        num = &(&num * &cube) * &th(&zj.scale_small(crate::exponent::coef(2, 1)))?;
        for r in 0..4 {
            push_den(th(&(zj - &b.couplings[r]))?, format!("-g{}+z{}", r + 1, j + 1), &mut den);
        }
    }
    if den.is_zero() {
        return Err(Error::ThetaZeroHit(den_label));
    }
    Ok(&num / &den)
}

/// Numeric evaluation helper: `term` at `λ` for parameters bound in `ev`.
pub fn eval_at(term: &Term, ev: &NumEval, lambda: &[i64]) -> Result<Complex> {
    term.eval(ev, lambda)
}

/// Binding for the standard four-coupling identities.
pub fn binding(g: &CRat, couplings: &[CRat], z: &[CRat]) -> Binding {
    Binding { g: g.clone(), couplings: couplings.to_vec(), z: z.to_vec() }
}

/// `Nome` helper for tests and callers that hold an `f64`-free rational.
pub fn nome_is_degenerate(q: &Nome) -> bool {
    q.is_one()
}
