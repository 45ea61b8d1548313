//! Parameter sets, the hat transform, the shift vectors and the validity
//! predicates (convergence, genericity, truncation).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{rat_to_f64, CRat, Rational};
use crate::exponent::{coef, Binding, LinExp};

/// The nome: `0 < q < 1` exactly rational, or the degenerate `q = 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum Nome {
    One,
    Real(Rational),
}

impl Nome {
    pub fn parse(s: &str) -> Result<Nome> {
        let v = crate::exact::parse_real(s)?;
        Nome::from_rational(v)
    }

    pub fn from_rational(v: Rational) -> Result<Nome> {
        if v.is_one() {
            return Ok(Nome::One);
        }
        if !(v.is_positive() && v < Rational::one()) {
            return Err(Error::InvalidParameters(format!("q must lie in (0, 1], got {v}")));
        }
        Ok(Nome::Real(v))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Nome::One)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Nome::One => 1.0,
            Nome::Real(q) => rat_to_f64(q),
        }
    }

    /// `|ln q|`, zero for `q = 1`.
    pub fn abs_ln(&self) -> f64 {
        -libm::log(self.to_f64())
    }
}

impl core::fmt::Display for Nome {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Nome::One => write!(f, "1"),
            Nome::Real(q) => write!(f, "{}", CRat::real(q.clone())),
        }
    }
}

pub const IDENTITY_PERM: [usize; 4] = [0, 1, 2, 3];

/// Rank, nome, couplings and the labelling `(a, b, c, d)` of the four couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    pub n: usize,
    pub q: Nome,
    pub g: CRat,
    pub couplings: [CRat; 4],
    /// `perm[0..4] = (a, b, c, d)`, zero-based.
    pub perm: [usize; 4],
}

impl ParameterSet {
    pub fn new(n: usize, q: Nome, g: CRat, couplings: [CRat; 4], perm: [usize; 4]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameters("n must be >= 1".into()));
        }
        let mut seen = [false; 4];
        for &p in &perm {
            if p >= 4 || seen[p] {
                return Err(Error::InvalidParameters(format!("perm {perm:?} is not a permutation of 0..4")));
            }
            seen[p] = true;
        }
        Ok(ParameterSet { n, q, g, couplings, perm })
    }

    pub fn binding(&self, z: &[CRat]) -> Binding {
        Binding { g: self.g.clone(), couplings: self.couplings.to_vec(), z: z.to_vec() }
    }

    pub fn coupling_sum(&self) -> CRat {
        self.couplings.iter().fold(CRat::zero(), |acc, x| &acc + x)
    }

    pub fn a(&self) -> usize {
        self.perm[0]
    }

    pub fn b(&self) -> usize {
        self.perm[1]
    }

    pub fn c(&self) -> usize {
        self.perm[2]
    }

    pub fn d(&self) -> usize {
        self.perm[3]
    }

    /// Same point with the couplings replaced, keeping `n`, `q`, `g`, `perm`.
    pub fn with_couplings(&self, couplings: [CRat; 4]) -> ParameterSet {
        ParameterSet { couplings, ..self.clone() }
    }
}

/// Parameters of the `2n+2`-coupling sum.
#[derive(Clone, Debug, PartialEq)]
pub struct GustafsonParams {
    pub n: usize,
    pub q: Nome,
    pub couplings: Vec<CRat>,
}

impl GustafsonParams {
    pub fn new(n: usize, q: Nome, couplings: Vec<CRat>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameters("n must be >= 1".into()));
        }
        if couplings.len() != 2 * n + 2 {
            return Err(Error::InvalidParameters(format!(
                "expected {} couplings, got {}",
                2 * n + 2,
                couplings.len()
            )));
        }
        Ok(GustafsonParams { n, q, couplings })
    }

    pub fn binding(&self, z: &[CRat]) -> Binding {
        Binding { g: CRat::zero(), couplings: self.couplings.clone(), z: z.to_vec() }
    }

    /// `Re(1 + g_1 + ... + g_{2n+2})`.
    pub fn margin(&self) -> f64 {
        let s = self.couplings.iter().fold(CRat::int(1), |acc, x| &acc + x);
        rat_to_f64(&s.re)
    }
}

/// `hat[r]` for the original index `r`; rows follow the labelling.
pub fn hat_sym(perm: &[usize; 4]) -> [LinExp; 4] {
    const SIGNS: [[i64; 4]; 4] = [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]];
    let mut out: [LinExp; 4] = core::array::from_fn(|_| LinExp::zero());
    for (row, signs) in SIGNS.iter().enumerate() {
        let mut e = LinExp::zero();
        for (col, s) in signs.iter().enumerate() {
            e = &e + &LinExp::coupling(perm[col]).scale(coef(*s, 2));
        }
        out[perm[row]] = e;
    }
    out
}

/// The transformed couplings `(ĝ_1, ..., ĝ_4)` by original index.
#[derive(Clone, Debug, PartialEq)]
pub struct HatParameters {
    pub by_index: [CRat; 4],
    pub perm: [usize; 4],
}

impl HatParameters {
    /// `(ĝ_a, ĝ_b, ĝ_c, ĝ_d)`.
    pub fn by_letter(&self) -> [CRat; 4] {
        core::array::from_fn(|i| self.by_index[self.perm[i]].clone())
    }
}

pub fn hat_transform(p: &ParameterSet) -> HatParameters {
    let b = p.binding(&[]);
    let sym = hat_sym(&p.perm);
    HatParameters { by_index: core::array::from_fn(|r| sym[r].eval(&b)), perm: p.perm }
}

/// `ρ_j = (n-j) g + g_a` and `ρ̂_j = (n-j) g + ĝ_a`, `j = 1..n`.
pub fn rho_sym(n: usize, perm: &[usize; 4]) -> (Vec<LinExp>, Vec<LinExp>) {
    let hat_a = hat_sym(perm)[perm[0]].clone();
    let ga = LinExp::coupling(perm[0]);
    let mut rho = Vec::with_capacity(n);
    let mut rho_hat = Vec::with_capacity(n);
    for j in 1..=n {
        let k = (n - j) as i64;
        rho.push(&LinExp::g().times(k) + &ga);
        rho_hat.push(&LinExp::g().times(k) + &hat_a);
    }
    (rho, rho_hat)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoVectors {
    pub rho: Vec<CRat>,
    pub rho_hat: Vec<CRat>,
}

pub fn rho_vectors(p: &ParameterSet) -> RhoVectors {
    let b = p.binding(&[]);
    let (r, rh) = rho_sym(p.n, &p.perm);
    RhoVectors {
        rho: r.iter().map(|e| e.eval(&b)).collect(),
        rho_hat: rh.iter().map(|e| e.eval(&b)).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergence {
    pub ok: bool,
    /// Smallest `Re(...)` over `j`; positive iff `ok`.
    pub margin: f64,
}

fn convergence(p: &ParameterSet, sign: i64) -> Convergence {
    let sum = p.coupling_sum();
    let mut margin = f64::INFINITY;
    for j in 1..=p.n {
        let k = Rational::from_integer(BigInt::from(2 * (p.n - j) as i64));
        let inner = &p.g.scale(&k) + &sum;
        let v = Rational::one() + Rational::from_integer(BigInt::from(sign)) * inner.re.clone();
        margin = margin.min(rat_to_f64(&v));
    }
    Convergence { ok: margin > 0.0, margin }
}

/// `Re(1 + 2(n-j)g + g_1 + g_2 + g_3 + g_4) > 0` for all `j`.
pub fn check_convergence_bilateral(p: &ParameterSet) -> Convergence {
    convergence(p, 1)
}

/// `Re(1 - 2(n-j)g - g_1 - g_2 - g_3 - g_4) > 0` for all `j`.
pub fn check_convergence_unilateral(p: &ParameterSet) -> Convergence {
    convergence(p, -1)
}

pub const DEFAULT_GENERICITY_THRESHOLD: f64 = 1e-8;

/// `Ω_q = Z + i (2π/|ln q|) Z`, or `Z` when `q = 1`.
#[derive(Clone, Debug)]
pub struct PeriodLattice {
    pub q: Nome,
}

fn frac_dist(x: f64) -> f64 {
    (x - libm::round(x)).abs()
}

impl PeriodLattice {
    fn period(&self) -> Option<f64> {
        match self.q {
            Nome::One => None,
            Nome::Real(_) => Some(2.0 * core::f64::consts::PI / self.q.abs_ln()),
        }
    }

    fn im_dist(&self, im: f64) -> f64 {
        match self.period() {
            None => im.abs(),
            Some(p) => p * frac_dist(im / p),
        }
    }

    /// Distance from `x` to the lattice.
    pub fn distance(&self, x: &CRat) -> f64 {
        let (re, im) = x.to_f64();
        libm::hypot(frac_dist(re), self.im_dist(im))
    }

    /// Exact membership for rational points; the imaginary period is irrational,
    /// so only the real integer part can be hit.
    pub fn contains(&self, x: &CRat) -> bool {
        x.as_integer().is_some()
    }

    /// Distance to `{-1, -2, ...} + (imaginary periods)`.
    pub fn distance_to_negative_integers(&self, x: &CRat) -> f64 {
        let (re, im) = x.to_f64();
        let dre = if re <= -1.0 { frac_dist(re) } else { re + 1.0 };
        libm::hypot(dre, self.im_dist(im))
    }

    /// Distance scaled to the conditioning of `1 - q^x`.
    pub fn scaled(&self, d: f64) -> f64 {
        match self.q {
            Nome::One => d,
            Nome::Real(_) => d * self.q.abs_ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IdentityKind {
    Macdonald,
    AomotoIto,
    BaileyDougall,
    RogersNonterminating,
    Terminating,
    Gustafson,
    Recurrence,
}

impl IdentityKind {
    pub const ALL: [IdentityKind; 7] = [
        IdentityKind::Macdonald,
        IdentityKind::AomotoIto,
        IdentityKind::BaileyDougall,
        IdentityKind::RogersNonterminating,
        IdentityKind::Terminating,
        IdentityKind::Gustafson,
        IdentityKind::Recurrence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IdentityKind::Macdonald => "macdonald",
            IdentityKind::AomotoIto => "aomoto-ito",
            IdentityKind::BaileyDougall => "bailey-dougall",
            IdentityKind::RogersNonterminating => "rogers",
            IdentityKind::Terminating => "terminating",
            IdentityKind::Gustafson => "gustafson",
            IdentityKind::Recurrence => "recurrence",
        }
    }

    pub fn parse(s: &str) -> Option<IdentityKind> {
        let s = s.to_ascii_lowercase().replace('_', "-");
        IdentityKind::ALL.into_iter().find(|k| k.name() == s).or(match s.as_str() {
            "aomoto" | "aomotoito" => Some(IdentityKind::AomotoIto),
            "bailey" | "dougall" | "baileydougall" => Some(IdentityKind::BaileyDougall),
            "rogers-nonterminating" | "rogersnonterminating" => Some(IdentityKind::RogersNonterminating),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub what: String,
    /// Distance to the excluded set in the units of the threshold.
    pub distance: f64,
}

struct Checker<'a> {
    lattice: PeriodLattice,
    threshold: f64,
    out: &'a mut Vec<Violation>,
}

impl Checker<'_> {
    fn off_lattice(&mut self, what: String, x: CRat) {
        let d = self.lattice.scaled(self.lattice.distance(&x));
        if self.lattice.contains(&x) || d < self.threshold {
            self.out.push(Violation { what, distance: d });
        }
    }

    fn not_negative_integer(&mut self, what: String, x: CRat) {
        let hit = matches!(x.as_integer(), Some(k) if k < 0);
        let d = self.lattice.scaled(self.lattice.distance_to_negative_integers(&x));
        if hit || d < self.threshold {
            self.out.push(Violation { what, distance: d });
        }
    }
}

/// Pole and degeneracy exclusions for `z` under the given identity.
pub fn check_genericity(z: &[CRat], p: &ParameterSet, kind: IdentityKind, threshold: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut c = Checker { lattice: PeriodLattice { q: p.q.clone() }, threshold, out: &mut out };
    let n = z.len();
    let pairs = |c: &mut Checker, shift: &CRat, label: &str| {
        for j in 0..n {
            for k in (j + 1)..n {
                let s = &(&z[j] + &z[k]) + shift;
                let d = &(&z[j] - &z[k]) + shift;
                c.off_lattice(format!("{label}z{}+z{}", j + 1, k + 1), s);
                c.off_lattice(format!("{label}z{}-z{}", j + 1, k + 1), d);
            }
        }
    };
    match kind {
        IdentityKind::Macdonald | IdentityKind::Gustafson | IdentityKind::Recurrence => {
            pairs(&mut c, &CRat::zero(), "");
            for (j, zj) in z.iter().enumerate() {
                c.off_lattice(format!("2z{}", j + 1), zj.scale_small(coef(2, 1)));
            }
        }
        IdentityKind::AomotoIto => {
            pairs(&mut c, &CRat::zero(), "");
            pairs(&mut c, &-&p.g, "-g+");
            for (j, zj) in z.iter().enumerate() {
                c.off_lattice(format!("2z{}", j + 1), zj.scale_small(coef(2, 1)));
                for r in 0..4 {
                    c.off_lattice(format!("-g{}+z{}", r + 1, j + 1), zj - &p.couplings[r]);
                }
            }
        }
        IdentityKind::BaileyDougall => {
            pairs(&mut c, &CRat::zero(), "");
            for (j, zj) in z.iter().enumerate() {
                c.off_lattice(format!("2z{}", j + 1), zj.scale_small(coef(2, 1)));
                for r in 0..4 {
                    c.not_negative_integer(format!("g{}+z{}", r + 1, j + 1), &p.couplings[r] + zj);
                    c.not_negative_integer(format!("g{}-z{}", r + 1, j + 1), &p.couplings[r] - zj);
                }
            }
            for j in 0..n {
                for k in 0..n {
                    if j == k {
                        continue;
                    }
                    for (sj, sk) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        let v = &(&p.g + &z[j].scale_small(coef(sj, 1))) + &z[k].scale_small(coef(sk, 1));
                        let l = |s: i64| if s > 0 { "+" } else { "-" };
                        c.not_negative_integer(format!("g{}z{}{}z{}", l(sj), j + 1, l(sk), k + 1), v);
                    }
                }
            }
        }
        IdentityKind::RogersNonterminating | IdentityKind::Terminating => {
            let rv = rho_vectors(p);
            for j in 0..p.n {
                c.off_lattice(format!("2rho{}", j + 1), rv.rho[j].scale_small(coef(2, 1)));
                for k in (j + 1)..p.n {
                    c.off_lattice(format!("rho{}+rho{}", j + 1, k + 1), &rv.rho[j] + &rv.rho[k]);
                    c.off_lattice(format!("rho{}-rho{}", j + 1, k + 1), &rv.rho[j] - &rv.rho[k]);
                }
            }
        }
    }
    out
}

/// `(n-1) g + g_a + g_b + N`.
pub fn truncation_residual(p: &ParameterSet, big_n: u32) -> CRat {
    let k = CRat::int(p.n as i64 - 1);
    let lhs = &(&(&k * &p.g) + &p.couplings[p.a()]) + &p.couplings[p.b()];
    &lhs + &CRat::int(big_n as i64)
}

/// Exact truncation test.
pub fn check_truncation(p: &ParameterSet, big_n: u32) -> bool {
    truncation_residual(p, big_n).is_zero()
}

/// Truncation up to `2^{-precision/2}`, for parameters that only approximate it.
pub fn check_truncation_approx(p: &ParameterSet, big_n: u32, precision_bits: usize) -> bool {
    let (re, im) = truncation_residual(p, big_n).to_f64();
    libm::hypot(re, im) <= libm::exp2(-(precision_bits as f64) / 2.0)
}

/// Exact generators of a terminating instance: `q`, `t = q^g`, `x_r = q^{g_r}`,
/// with `x_b` eliminated through `x_a x_b t^{n-1} q^N = 1`. At `q = 1` the
/// exponents themselves are the generators and `g_b = -N - (n-1)g - g_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalPoint {
    pub n: usize,
    pub q: Nome,
    /// `t` for `q < 1`, `g` for `q = 1`.
    pub t: Rational,
    /// `x_r` for `q < 1`, `g_r` for `q = 1`; the entry at `perm[1]` is derived.
    pub x: [Rational; 4],
    pub perm: [usize; 4],
    pub big_n: u32,
}

impl RationalPoint {
    pub fn new(n: usize, q: Nome, t: Rational, mut x: [Rational; 4], perm: [usize; 4], big_n: u32) -> Result<Self> {
        let (a, b) = (perm[0], perm[1]);
        match &q {
            Nome::Real(qv) => {
                if t.is_zero() || x[a].is_zero() {
                    return Err(Error::InvalidParameters("generators must be nonzero".into()));
                }
                let mono = &x[a] * crate::exact::rat_pow(&t, n as i64 - 1) * crate::exact::rat_pow(qv, big_n as i64);
                x[b] = mono.recip();
            }
            Nome::One => {
                let nm1 = Rational::from_integer(BigInt::from(n as i64 - 1));
                x[b] = -Rational::from_integer(BigInt::from(big_n)) - nm1 * &t - &x[a];
            }
        }
        if x.iter().any(|v| v.is_zero()) && !q.is_one() {
            return Err(Error::InvalidParameters("generators must be nonzero".into()));
        }
        Ok(RationalPoint { n, q, t, x, perm, big_n })
    }

    /// The constraint `x_a x_b t^{n-1} q^N = 1` (or its additive form at `q = 1`).
    pub fn constraint_holds(&self) -> bool {
        let (a, b) = (self.perm[0], self.perm[1]);
        match &self.q {
            Nome::Real(qv) => {
                &self.x[a]
                    * &self.x[b]
                    * crate::exact::rat_pow(&self.t, self.n as i64 - 1)
                    * crate::exact::rat_pow(qv, self.big_n as i64)
                    == Rational::one()
            }
            Nome::One => {
                Rational::from_integer(BigInt::from(self.n as i64 - 1)) * &self.t
                    + &self.x[a]
                    + &self.x[b]
                    + Rational::from_integer(BigInt::from(self.big_n))
                    == Rational::zero()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(n: usize, g: CRat, gr: [CRat; 4]) -> ParameterSet {
        ParameterSet::new(n, Nome::parse("0.5").unwrap(), g, gr, IDENTITY_PERM).unwrap()
    }

    fn r(s: &str) -> CRat {
        CRat::parse(s).unwrap()
    }

    #[test]
    fn hat_of_ones() {
        let p = ps(1, CRat::zero(), [r("1"), r("1"), r("1"), r("1")]);
        let h = hat_transform(&p);
        assert_eq!(h.by_letter(), [r("2"), r("0"), r("0"), r("0")]);
    }

    #[test]
    fn hat_of_test_point() {
        let p = ps(2, r("0.35"), [r("0.1"), r("0.2"), r("0.3"), r("0.4")]);
        let h = hat_transform(&p);
        assert_eq!(h.by_letter(), [r("0.5"), r("-0.2"), r("-0.1"), r("0")]);
        let rv = rho_vectors(&p);
        assert_eq!(rv.rho_hat, alloc::vec![r("0.85"), r("0.5")]);
        assert_eq!(rv.rho, alloc::vec![r("0.45"), r("0.1")]);
    }

    #[test]
    fn rho_progression() {
        let p = ps(3, r("1"), [r("0"), r("0.2"), r("0.3"), r("0.4")]);
        assert_eq!(rho_vectors(&p).rho, alloc::vec![r("2"), r("1"), r("0")]);
        let p1 = ps(1, r("0.7"), [r("0.1"), r("0.2"), r("0.3"), r("0.4")]);
        let rv = rho_vectors(&p1);
        assert_eq!(rv.rho, alloc::vec![r("0.1")]);
        assert_eq!(rv.rho_hat, alloc::vec![r("0.5")]);
    }

    #[test]
    fn convergence_margins() {
        let zero = [CRat::zero(), CRat::zero(), CRat::zero(), CRat::zero()];
        let c = check_convergence_bilateral(&ps(1, CRat::zero(), zero.clone()));
        assert!(c.ok && (c.margin - 1.0).abs() < 1e-15);
        let c = check_convergence_bilateral(&ps(2, r("-0.6"), zero.clone()));
        assert!(!c.ok && (c.margin + 0.2).abs() < 1e-15);
        let c = check_convergence_bilateral(&ps(2, r("0.35"), [r("0.1"), r("0.2"), r("0.3"), r("0.4")]));
        assert!(c.ok && (c.margin - 2.0).abs() < 1e-15);
        let u = check_convergence_unilateral(&ps(1, CRat::zero(), zero.clone()));
        assert!(u.ok && (u.margin - 1.0).abs() < 1e-15);
        let u = check_convergence_unilateral(&ps(2, r("0.6"), zero));
        assert!(!u.ok && (u.margin + 0.2).abs() < 1e-15);
        let u = check_convergence_unilateral(&ps(2, r("-0.35"), [r("-0.1"), r("-0.2"), r("-0.3"), r("-0.4")]));
        assert!(u.ok && (u.margin - 2.0).abs() < 1e-15);
    }

    #[test]
    fn genericity_cases() {
        let p = ps(1, r("0.35"), [r("0.1"), r("0.2"), r("0.3"), r("0.4")]);
        assert!(check_genericity(&[r("0.37")], &p, IdentityKind::Macdonald, 1e-8).is_empty());
        let p2 = ps(2, r("0.35"), [r("0.1"), r("0.2"), r("0.3"), r("0.4")]);
        let v = check_genericity(&[r("0.5"), r("0.5")], &p2, IdentityKind::Macdonald, 1e-8);
        assert!(v.iter().any(|x| x.what == "z1-z2"));
        let v = check_genericity(&[r("0.1")], &p, IdentityKind::AomotoIto, 1e-8);
        assert!(v.iter().any(|x| x.what == "-g1+z1"));
        assert!(check_genericity(&[r("0.1")], &p, IdentityKind::Macdonald, 1e-8).is_empty());
    }

    #[test]
    fn truncation_cases() {
        let p = ps(1, r("0"), [r("0.4"), r("-2.4"), r("0.3"), r("0.1")]);
        assert!(check_truncation(&p, 2));
        let p = ps(1, r("0"), [r("0.4"), r("-2.39"), r("0.3"), r("0.1")]);
        assert!(!check_truncation(&p, 2));
        let p = ps(3, r("1/2"), [r("1/4"), r("-9/4"), r("0.3"), r("0.1")]);
        assert!(check_truncation(&p, 1));
    }

    #[test]
    fn rational_point_eliminates_b() {
        let q = Nome::parse("1/3").unwrap();
        let pt = RationalPoint::new(
            2,
            q,
            Rational::new(2.into(), 5.into()),
            [Rational::new(3.into(), 7.into()), Rational::one(), Rational::new(5.into(), 4.into()), Rational::new(1.into(), 9.into())],
            IDENTITY_PERM,
            2,
        )
        .unwrap();
        assert!(pt.constraint_holds());
    }
}
