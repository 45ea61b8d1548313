//! Right-hand sides, verification drivers, the n = 1 classical sums and the
//! rank recurrence.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::eval::{NumEval, RatEval};
use crate::exact::{CRat, Rational};
use crate::kernel::{Kernel, PrecisionContext};
use crate::params::{
    check_convergence_bilateral, check_convergence_unilateral, check_genericity, check_truncation_approx,
    GustafsonParams, IdentityKind, ParameterSet, RationalPoint, DEFAULT_GENERICITY_THRESHOLD,
};
use crate::product::{CompiledTerm, Term};
use crate::real::{Complex, Real};
use crate::summation::{sum_alcove, sum_alcove_exact, sum_bilateral, sum_cone, SumOptions, SumResult, TailModel};
use crate::terms::{self, AomotoReading, TerminatingForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Float,
    Rational,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Float => "float",
            Mode::Rational => "rational",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub precision_bits: usize,
    /// Defaults to `10^{-precision_bits/8}`.
    pub tol: Option<f64>,
    pub max_radius: u32,
    pub genericity_threshold: f64,
    pub reading: AomotoReading,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            precision_bits: 256,
            tol: None,
            max_radius: 200,
            genericity_threshold: DEFAULT_GENERICITY_THRESHOLD,
            reading: AomotoReading::Symmetric,
        }
    }
}

impl VerifyOptions {
    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or_else(|| libm::pow(10.0, -(self.precision_bits as f64) / 8.0))
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Ok(Kernel::new(PrecisionContext::new(self.precision_bits)?))
    }

    fn sum_options(&self) -> SumOptions {
        SumOptions { tol: self.tol(), max_radius: self.max_radius }
    }
}

/// A second route to a quantity that must agree with the first.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossCheck {
    pub name: String,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportError {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ReportError {
    fn from(e: &Error) -> Self {
        ReportError { kind: e.kind().to_string(), message: e.to_string() }
    }
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub identity: IdentityKind,
    pub mode: Mode,
    pub n: usize,
    pub lhs: Option<Complex>,
    pub rhs: Option<Complex>,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tail_bound: f64,
    /// Tail bound divided by `|rhs|`.
    pub rel_tail: f64,
    pub terms_evaluated: u64,
    pub radius_used: u32,
    pub tol: f64,
    pub cross_checks: Vec<CrossCheck>,
    /// Exact sides in rational mode.
    pub exact: Option<(String, String)>,
    pub error: Option<ReportError>,
    pub verdict: Verdict,
}

impl VerificationReport {
    fn failed(identity: IdentityKind, mode: Mode, n: usize, tol: f64, e: &Error) -> Self {
        let mut r = VerificationReport::empty(identity, mode, n, tol);
        if let Error::RadiusExhausted(p) = e {
            r.lhs = Some(p.value.clone());
            r.tail_bound = p.tail_bound;
            r.terms_evaluated = p.terms_evaluated;
            r.radius_used = p.radius_used;
        }
        r.error = Some(e.into());
        r
    }

    fn empty(identity: IdentityKind, mode: Mode, n: usize, tol: f64) -> Self {
        VerificationReport {
            identity,
            mode,
            n,
            lhs: None,
            rhs: None,
            abs_err: f64::NAN,
            rel_err: f64::NAN,
            tail_bound: 0.0,
            rel_tail: 0.0,
            terms_evaluated: 0,
            radius_used: 0,
            tol,
            cross_checks: Vec::new(),
            exact: None,
            error: None,
            verdict: Verdict::Fail,
        }
    }

    /// Whether the failure was a rejected precondition rather than a numeric miss.
    pub fn is_precondition_failure(&self) -> bool {
        self.error.as_ref().is_some_and(|e| is_precondition_kind(&e.kind))
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

pub fn is_precondition_kind(kind: &str) -> bool {
    matches!(
        kind,
        "ConvergenceViolated"
            | "GenericityViolated"
            | "TruncationViolated"
            | "InvalidParameters"
            | "NomeOutOfRange"
            | "Unsupported"
            | "NonIntegralExponent"
    )
}

/// `(|a-b|, |a-b|/max(|a|,|b|))`, zero when the values coincide.
pub fn compare(a: &Complex, b: &Complex) -> (f64, f64) {
    let d = a - b;
    if d.is_zero() {
        return (0.0, 0.0);
    }
    let dl = d.log2_abs();
    let scale = a.log2_abs().max(b.log2_abs());
    (libm::exp2(dl), libm::exp2(dl - scale))
}

/// Pass iff `rel_err <= tol + rel_tail`, `rel_tail <= tol` and every
/// cross-check is within `tol`.
pub fn judge(rel_err: f64, rel_tail: f64, cross: &[CrossCheck], tol: f64) -> Verdict {
    let ok = rel_err <= tol + rel_tail && rel_tail <= tol && cross.iter().all(|c| c.rel_diff <= tol);
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn finish(mut r: VerificationReport, lhs: Complex, rhs: Complex, sum: Option<&SumResult>) -> VerificationReport {
    let (abs, rel) = compare(&lhs, &rhs);
    r.abs_err = abs;
    r.rel_err = rel;
    if let Some(s) = sum {
        r.tail_bound = s.tail_bound();
        r.rel_tail = libm::exp2(s.tail_log2 - rhs.log2_abs());
        r.terms_evaluated += s.terms_evaluated;
        r.radius_used = r.radius_used.max(s.radius_used);
    }
    r.verdict = judge(r.rel_err, r.rel_tail, &r.cross_checks, r.tol);
    r.lhs = Some(lhs);
    r.rhs = Some(rhs);
    r
}

fn cross(name: &str, a: &Complex, b: &Complex) -> CrossCheck {
    CrossCheck { name: name.to_string(), rel_diff: compare(a, b).1 }
}

/// A generic default for the shift vector.
pub fn default_z(n: usize) -> Vec<CRat> {
    const BASE: [(i64, i64); 6] = [(37, 100), (11, 100), (-23, 100), (7, 50), (-31, 100), (3, 20)];
    (0..n)
        .map(|j| match BASE.get(j) {
            Some(&(a, b)) => CRat::ratio(a, b),
            None => CRat::ratio(((17 * j as i64) % 89) - 44, 97),
        })
        .collect()
}

fn require_generic(z: &[CRat], p: &ParameterSet, kind: IdentityKind, threshold: f64) -> Result<()> {
    match check_genericity(z, p, kind, threshold).first() {
        Some(v) => Err(Error::GenericityViolated(format!("{} (distance {:e})", v.what, v.distance))),
        None => Ok(()),
    }
}

fn require_bilateral(p: &ParameterSet) -> Result<()> {
    let c = check_convergence_bilateral(p);
    if c.ok {
        Ok(())
    } else {
        Err(Error::ConvergenceViolated { margin: c.margin })
    }
}

/// Sum a term over `Z^n` with the table evaluator.
pub fn bilateral(kernel: &Kernel, term: &Term, ev: &NumEval, model: &TailModel, opts: SumOptions) -> Result<SumResult> {
    let mut ct = CompiledTerm::compile(term, ev, 8)?;
    sum_bilateral(kernel, term.n, model, opts, |lam| ct.eval(ev, lam))
}

/// Sum a term over the dominant cone with the table evaluator.
pub fn cone(kernel: &Kernel, term: &Term, ev: &NumEval, model: &TailModel, opts: SumOptions) -> Result<SumResult> {
    let mut ct = CompiledTerm::compile(term, ev, 8)?;
    sum_cone(kernel, term.n, model, opts, |lam| ct.eval(ev, lam))
}

/// Macdonald constant (product over `j`).
pub fn macdonald_rhs(kernel: &Kernel, p: &ParameterSet) -> Result<Complex> {
    let ev = NumEval::new(kernel, p.q.clone(), p.binding(&[]));
    terms::macdonald_rhs(p.n).eval_at_origin(&ev)
}

/// Macdonald constant as `Ĉ_-(ρ̂)/Ĉ_+(ρ̂)`.
pub fn macdonald_rhs_hat(kernel: &Kernel, p: &ParameterSet) -> Result<Complex> {
    let ev = NumEval::new(kernel, p.q.clone(), p.binding(&[]));
    terms::macdonald_rhs_hat(p.n, &p.perm).eval_at_origin(&ev)
}

/// Aomoto factor (theta or sine route) times the Macdonald constant.
pub fn aomoto_rhs(kernel: &Kernel, p: &ParameterSet, z: &[CRat]) -> Result<Complex> {
    let ev = NumEval::new(kernel, p.q.clone(), p.binding(z));
    let f = terms::aomoto_factor_theta(&ev, &p.perm)?;
    Ok(&f * &macdonald_rhs(kernel, p)?)
}

/// `C_+(z) C_+(-z)` times the Macdonald constant.
pub fn bailey_rhs(kernel: &Kernel, p: &ParameterSet, z: &[CRat]) -> Result<Complex> {
    let ev = NumEval::new(kernel, p.q.clone(), p.binding(z));
    let m0 = terms::macdonald(p.n).eval_at_origin(&ev)?;
    Ok(&macdonald_rhs(kernel, p)? / &m0)
}

pub fn rogers_rhs(kernel: &Kernel, p: &ParameterSet) -> Result<Complex> {
    let ev = NumEval::new(kernel, p.q.clone(), p.binding(&[]));
    terms::rogers_rhs(p.n, &p.perm).eval_at_origin(&ev)
}

pub fn rogers_rhs_simplified(kernel: &Kernel, p: &ParameterSet) -> Result<Complex> {
    let ev = NumEval::new(kernel, p.q.clone(), p.binding(&[]));
    terms::rogers_rhs_simplified(p.n, &p.perm).eval_at_origin(&ev)
}

pub fn terminating_rhs(kernel: &Kernel, p: &ParameterSet, big_n: u32, form: TerminatingForm) -> Result<Complex> {
    let ev = NumEval::new(kernel, p.q.clone(), p.binding(&[]));
    terms::terminating_rhs(p.n, &p.perm, big_n, form).eval_at_origin(&ev)
}

pub fn gustafson_rhs(kernel: &Kernel, p: &GustafsonParams) -> Result<Complex> {
    let ev = NumEval::new(kernel, p.q.clone(), p.binding(&[]));
    terms::gustafson_rhs(p.n).eval_at_origin(&ev)
}

/// What to verify.
#[derive(Clone, Debug, PartialEq)]
pub enum Job {
    /// One of the four-coupling identities; `z` is ignored by the cone kinds.
    Standard { kind: IdentityKind, params: ParameterSet, z: Option<Vec<CRat>>, big_n: Option<u32> },
    Gustafson { params: GustafsonParams, z: Option<Vec<CRat>> },
    /// Terminating identity over exact generators.
    Rational(RationalPoint),
}

impl Job {
    pub fn kind(&self) -> IdentityKind {
        match self {
            Job::Standard { kind, .. } => *kind,
            Job::Gustafson { .. } => IdentityKind::Gustafson,
            Job::Rational(_) => IdentityKind::Terminating,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Job::Standard { params, .. } => params.n,
            Job::Gustafson { params, .. } => params.n,
            Job::Rational(p) => p.n,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Job::Rational(_) => Mode::Rational,
            _ => Mode::Float,
        }
    }
}

/// Run a job. Every error ends up in the report with a failing verdict.
pub fn verify(job: &Job, opts: &VerifyOptions) -> VerificationReport {
    let tol = if job.mode() == Mode::Rational { 0.0 } else { opts.tol() };
    match run(job, opts, tol) {
        Ok(r) => r,
        Err(e) => VerificationReport::failed(job.kind(), job.mode(), job.n(), tol, &e),
    }
}

fn run(job: &Job, opts: &VerifyOptions, tol: f64) -> Result<VerificationReport> {
    let kernel = opts.kernel()?;
    let k = &kernel;
    let so = opts.sum_options();
    let base = VerificationReport::empty(job.kind(), job.mode(), job.n(), tol);
    match job {
        Job::Rational(pt) => verify_rational(k, pt),
        Job::Gustafson { params, z } => {
            if params.margin() <= 0.0 {
                return Err(Error::ConvergenceViolated { margin: params.margin() });
            }
            let z = z.clone().unwrap_or_else(|| default_z(params.n));
            check_len(&z, params.n)?;
            let ev = NumEval::new(k, params.q.clone(), params.binding(&z));
            let s = bilateral(k, &terms::gustafson(params.n), &ev, &TailModel::gustafson(params), so)?;
            let rhs = gustafson_rhs(k, params)?;
            Ok(finish(base, s.value.clone(), rhs, Some(&s)))
        }
        Job::Standard { kind, params: p, z, big_n } => {
            let z = z.clone().unwrap_or_else(|| default_z(p.n));
            match kind {
                IdentityKind::Macdonald => {
                    check_len(&z, p.n)?;
                    require_bilateral(p)?;
                    require_generic(&z, p, *kind, opts.genericity_threshold)?;
                    let ev = NumEval::new(k, p.q.clone(), p.binding(&z));
                    let s = bilateral(k, &terms::macdonald(p.n), &ev, &TailModel::bilateral(p), so)?;
                    let rhs = macdonald_rhs(k, p)?;
                    let mut r = base;
                    r.cross_checks.push(cross("hat-ratio-form", &macdonald_rhs_hat(k, p)?, &rhs));
                    Ok(finish(r, s.value.clone(), rhs, Some(&s)))
                }
                IdentityKind::AomotoIto => {
                    check_len(&z, p.n)?;
                    require_bilateral(p)?;
                    require_generic(&z, p, *kind, opts.genericity_threshold)?;
                    let ev = NumEval::new(k, p.q.clone(), p.binding(&z));
                    let term = terms::aomoto(p.n, &p.perm, opts.reading);
                    let s = bilateral(k, &term, &ev, &TailModel::bilateral(p), so)?;
                    let rhs = aomoto_rhs(k, p, &z)?;
                    let prod = terms::aomoto_factor_products(p.n, &p.perm).eval_at_origin(&ev)?;
                    let via_products = &prod * &macdonald_rhs(k, p)?;
                    let mut r = base;
                    r.cross_checks.push(cross("factor-product-form", &via_products, &rhs));
                    Ok(finish(r, s.value.clone(), rhs, Some(&s)))
                }
                IdentityKind::BaileyDougall => {
                    check_len(&z, p.n)?;
                    require_bilateral(p)?;
                    require_generic(&z, p, *kind, opts.genericity_threshold)?;
                    let ev = NumEval::new(k, p.q.clone(), p.binding(&z));
                    let s = bilateral(k, &terms::bailey(p.n, &p.perm), &ev, &TailModel::bilateral(p), so)?;
                    let rhs = bailey_rhs(k, p, &z)?;
                    Ok(finish(base, s.value.clone(), rhs, Some(&s)))
                }
                IdentityKind::RogersNonterminating => {
                    let c = check_convergence_unilateral(p);
                    if !c.ok {
                        return Err(Error::ConvergenceViolated { margin: c.margin });
                    }
                    require_generic(&[], p, *kind, opts.genericity_threshold)?;
                    let ev = NumEval::new(k, p.q.clone(), p.binding(&[]));
                    let s = cone(k, &terms::rogers(p.n, &p.perm), &ev, &TailModel::cone(p), so)?;
                    let rhs = rogers_rhs(k, p)?;
                    let mut r = base;
                    r.cross_checks.push(cross("simplified-form", &rogers_rhs_simplified(k, p)?, &rhs));
                    Ok(finish(r, s.value.clone(), rhs, Some(&s)))
                }
                IdentityKind::Terminating => {
                    let big_n = big_n.ok_or_else(|| Error::InvalidParameters("terminating sums need N".into()))?;
                    verify_terminating_float(k, p, big_n, opts, base)
                }
                IdentityKind::Recurrence => {
                    check_len(&z, p.n)?;
                    recurrence_check(k, p, &z, opts, base)
                }
                IdentityKind::Gustafson => Err(Error::InvalidParameters("use a Gustafson job".into())),
            }
        }
    }
}

fn check_len(z: &[CRat], n: usize) -> Result<()> {
    if z.len() != n {
        return Err(Error::InvalidParameters(format!("z has {} components, expected {n}", z.len())));
    }
    Ok(())
}

fn verify_terminating_float(
    k: &Kernel,
    p: &ParameterSet,
    big_n: u32,
    opts: &VerifyOptions,
    base: VerificationReport,
) -> Result<VerificationReport> {
    if !check_truncation_approx(p, big_n, opts.precision_bits) {
        return Err(Error::TruncationViolated(format!(
            "(n-1)g + g_a + g_b + N = {}",
            crate::params::truncation_residual(p, big_n)
        )));
    }
    let ev = NumEval::new(k, p.q.clone(), p.binding(&[]));
    let term = terms::rogers(p.n, &p.perm);
    let mut ct = CompiledTerm::compile(&term, &ev, big_n as i64 + 2)?;
    let s = sum_alcove(k, p.n, big_n, |lam| ct.eval(&ev, lam))?;
    let rhs = terminating_rhs(k, p, big_n, TerminatingForm::LineOne)?;
    let mut r = base;
    for (name, form) in [
        ("second-line-form", TerminatingForm::LineTwo),
        ("simplified-form", TerminatingForm::Simplified),
        ("simplified-second-line-form", TerminatingForm::SimplifiedTwo),
    ] {
        r.cross_checks.push(cross(name, &terminating_rhs(k, p, big_n, form)?, &rhs));
    }
    let sq = terminating_rhs(k, p, big_n, TerminatingForm::Squared)?;
    r.cross_checks.push(cross("squared-form", &sq, &(&rhs * &rhs)));
    // the cone beyond the alcove must contribute nothing
    let mut beyond = k.zero();
    for lam in crate::summation::cone_slice(p.n, big_n + 1)
        .into_iter()
        .chain(crate::summation::cone_slice(p.n, big_n + 2))
    {
        beyond = &beyond + &ct.eval(&ev, &lam)?;
        r.terms_evaluated += 1;
    }
    r.cross_checks.push(CrossCheck {
        name: "vanishing-beyond-alcove".into(),
        rel_diff: if beyond.is_zero() { 0.0 } else { libm::exp2(beyond.log2_abs() - rhs.log2_abs()) },
    });
    Ok(finish(r, s.value.clone(), rhs, Some(&s)))
}

fn rat_str(x: &Rational) -> String {
    format!("{x}")
}

fn rat_complex(k: &Kernel, x: &Rational) -> Complex {
    Complex::from_real(Real::from_rational(x, k.prec()))
}

/// Exact terminating identity: alcove sum against all printed constants.
pub fn verify_rational(k: &Kernel, pt: &RationalPoint) -> Result<VerificationReport> {
    let base = VerificationReport::empty(IdentityKind::Terminating, Mode::Rational, pt.n, 0.0);
    if !pt.constraint_holds() {
        return Err(Error::TruncationViolated("generator constraint".into()));
    }
    let ev = RatEval::new(pt.q.clone(), pt.t.clone(), pt.x.to_vec());
    let term = terms::rogers(pt.n, &pt.perm);
    let (lhs, count) = sum_alcove_exact(pt.n, pt.big_n, Rational::zero(), |lam| term.eval(&ev, lam))?;
    let form = |f| terms::terminating_rhs(pt.n, &pt.perm, pt.big_n, f).eval_at_origin(&ev);
    let rhs = form(TerminatingForm::LineOne)?;
    let mut r = base;
    let mut exact_check = |name: &str, a: &Rational, b: &Rational| {
        r.cross_checks.push(CrossCheck { name: name.into(), rel_diff: if a == b { 0.0 } else { 1.0 } });
    };
    exact_check("second-line-form", &form(TerminatingForm::LineTwo)?, &rhs);
    exact_check("simplified-form", &form(TerminatingForm::Simplified)?, &rhs);
    exact_check("simplified-second-line-form", &form(TerminatingForm::SimplifiedTwo)?, &rhs);
    exact_check("squared-form", &form(TerminatingForm::Squared)?, &(&rhs * &rhs));
    let equal = lhs == rhs;
    r.terms_evaluated = count;
    r.radius_used = pt.big_n;
    r.exact = Some((rat_str(&lhs), rat_str(&rhs)));
    let (lc, rc) = (rat_complex(k, &lhs), rat_complex(k, &rhs));
    let (abs, rel) = if equal { (0.0, 0.0) } else { compare(&lc, &rc) };
    r.abs_err = abs;
    r.rel_err = rel;
    r.verdict = if equal && r.cross_checks.iter().all(|c| c.rel_diff == 0.0) { Verdict::Pass } else { Verdict::Fail };
    r.lhs = Some(lc);
    r.rhs = Some(rc);
    Ok(r)
}

/// Couplings shifted by `g/2`, one rank lower.
pub fn lowered(p: &ParameterSet) -> Result<ParameterSet> {
    let half = p.g.scale_small(crate::exponent::coef(1, 2));
    let cs = core::array::from_fn(|r| &p.couplings[r] + &half);
    ParameterSet::new(p.n - 1, p.q.clone(), p.g.clone(), cs, p.perm)
}

/// `S_n(g, g_r) / S_{n-1}(g, g_r + g/2)` from two independent bilateral sums,
/// against the printed factor (`S_0 = 1`).
pub fn recurrence_check(
    k: &Kernel,
    p: &ParameterSet,
    z: &[CRat],
    opts: &VerifyOptions,
    base: VerificationReport,
) -> Result<VerificationReport> {
    let so = opts.sum_options();
    require_bilateral(p)?;
    require_generic(z, p, IdentityKind::Macdonald, opts.genericity_threshold)?;
    let ev = NumEval::new(k, p.q.clone(), p.binding(z));
    let s_n = bilateral(k, &terms::macdonald(p.n), &ev, &TailModel::bilateral(p), so)?;
    let mut r = base;
    let (lower_value, lower_tail) = if p.n == 1 {
        (k.one(), f64::NEG_INFINITY)
    } else {
        let lp = lowered(p)?;
        require_bilateral(&lp)?;
        let zl = &z[..p.n - 1];
        require_generic(zl, &lp, IdentityKind::Macdonald, opts.genericity_threshold)?;
        let evl = NumEval::new(k, lp.q.clone(), lp.binding(zl));
        let s = bilateral(k, &terms::macdonald(lp.n), &evl, &TailModel::bilateral(&lp), so)?;
        r.terms_evaluated += s.terms_evaluated;
        r.radius_used = s.radius_used;
        (s.value.clone(), s.tail_log2 - s.value.log2_abs())
    };
    let lhs = &s_n.value / &lower_value;
    let factor = terms::recurrence_factor(p.n).eval_at_origin(&NumEval::new(k, p.q.clone(), p.binding(&[])))?;
    let mut out = finish(r, lhs, factor, Some(&s_n));
    // relative tails of a quotient add
    out.rel_tail = libm::exp2(s_n.tail_log2 - s_n.value.log2_abs()) + libm::exp2(lower_tail);
    out.verdict = judge(out.rel_err, out.rel_tail, &out.cross_checks, out.tol);
    Ok(out)
}

/// The Macdonald sum at two shift vectors; the value must not depend on `z`.
pub fn z_independence_check(p: &ParameterSet, z1: &[CRat], z2: &[CRat], opts: &VerifyOptions) -> VerificationReport {
    let tol = opts.tol();
    let base = VerificationReport::empty(IdentityKind::Macdonald, Mode::Float, p.n, tol);
    let go = || -> Result<VerificationReport> {
        let k = opts.kernel()?;
        require_bilateral(p)?;
        let mut sums = Vec::new();
        for z in [z1, z2] {
            check_len(z, p.n)?;
            require_generic(z, p, IdentityKind::Macdonald, opts.genericity_threshold)?;
            let ev = NumEval::new(&k, p.q.clone(), p.binding(z));
            sums.push(bilateral(&k, &terms::macdonald(p.n), &ev, &TailModel::bilateral(p), opts.sum_options())?);
        }
        let (a, b) = (&sums[0], &sums[1]);
        let mut r = finish(base.clone(), a.value.clone(), b.value.clone(), Some(a));
        r.terms_evaluated += b.terms_evaluated;
        r.rel_tail = a.relative_tail() + b.relative_tail();
        r.tail_bound = a.tail_bound() + b.tail_bound();
        r.verdict = judge(r.rel_err, r.rel_tail, &r.cross_checks, r.tol);
        Ok(r)
    };
    go().unwrap_or_else(|e| VerificationReport::failed(IdentityKind::Macdonald, Mode::Float, p.n, tol, &e))
}

/// The one-variable classical sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classical {
    /// Bilateral `6ψ6` (`q < 1`) or `5H5` (`q = 1`).
    Bilateral,
    /// Nonterminating `6φ5` or `5F4`.
    Unilateral,
    /// Terminating `6φ5` or `5F4` with `g_a + g_b + N = 0`.
    Terminating(u32),
}

/// `(a;q)_m` or `(a)_m`.
fn shifted_factorial(k: &Kernel, q: Option<&Complex>, a: &Complex, m: i64) -> Result<Complex> {
    match q {
        Some(q) => k.qpoch_finite(a, q, m),
        None => k.pochhammer(a, m),
    }
}

fn infinite_or_gamma(k: &Kernel, ev: &NumEval, e: &CRat) -> Result<Complex> {
    if ev.nome.is_one() {
        Ok(k.recip_gamma(&k.crat(e))?.value)
    } else {
        Ok(k.qpoch_infinite(&ev.qpow_exact(e), ev.q())?.value)
    }
}

/// Series with term `prod (a_i)_λ / prod (b_i)_λ ζ^λ`, summed by the
/// one-step quotient of the definition in either direction.
struct Series<'a> {
    k: &'a Kernel,
    q: Option<Complex>,
    a: Vec<Complex>,
    b: Vec<Complex>,
    zeta: Complex,
    /// cached terms at `λ = 0, 1, 2, ...` and `λ = -1, -2, ...`
    up: Vec<Complex>,
    down: Vec<Complex>,
}

impl<'a> Series<'a> {
    fn new(k: &'a Kernel, q: Option<Complex>, a: Vec<Complex>, b: Vec<Complex>, zeta: Complex) -> Self {
        Series { k, q, a, b, zeta, up: vec![k.one()], down: Vec::new() }
    }

    /// `a q^m` (or `a + m`).
    fn shift(&self, a: &Complex, m: i64) -> Result<Complex> {
        match &self.q {
            Some(q) => {
                let qm = shifted_power(self.k, q, m);
                Ok(a * &qm)
            }
            None => Ok(a + &Complex::from_i64(m, self.k.prec())),
        }
    }

    fn factor(&self, a: &Complex, m: i64) -> Result<Complex> {
        // (a;q)_{m+1}/(a;q)_m = 1 - a q^m, (a)_{m+1}/(a)_m = a + m
        let s = self.shift(a, m)?;
        Ok(if self.q.is_some() { &self.k.one() - &s } else { s })
    }

    fn term(&mut self, lam: i64) -> Result<Complex> {
        if lam >= 0 {
            while self.up.len() <= lam as usize {
                let m = self.up.len() as i64 - 1;
                let mut t = &self.up[m as usize] * &self.zeta;
                for a in &self.a.clone() {
                    t = &t * &self.factor(a, m)?;
                }
                for b in &self.b.clone() {
                    t = &t / &self.factor(b, m)?;
                }
                self.up.push(t);
            }
            Ok(self.up[lam as usize].clone())
        } else {
            while self.down.len() < (-lam) as usize {
                let m = -(self.down.len() as i64) - 1;
                let prev = if m == -1 { self.up[0].clone() } else { self.down[(-m - 2) as usize].clone() };
                // (a)_m = (a)_{m+1} / factor(a, m)
                let mut t = &prev / &self.zeta;
                for b in &self.b.clone() {
                    t = &t * &self.factor(b, m)?;
                }
                for a in &self.a.clone() {
                    t = &t / &self.factor(a, m)?;
                }
                self.down.push(t);
            }
            Ok(self.down[(-lam - 1) as usize].clone())
        }
    }
}

fn shifted_power(k: &Kernel, q: &Complex, m: i64) -> Complex {
    let mut out = k.one();
    let base = if m >= 0 { q.clone() } else { q.recip() };
    for _ in 0..m.unsigned_abs() {
        out = &out * &base;
    }
    out
}

/// Direct series from the hypergeometric definitions, its classical closed
/// form, and the rank-one multiple sum as a cross-check.
pub fn classical_n1(which: Classical, p: &ParameterSet, z: Option<CRat>, opts: &VerifyOptions) -> VerificationReport {
    let tol = opts.tol();
    let kind = match which {
        Classical::Bilateral => IdentityKind::BaileyDougall,
        Classical::Unilateral => IdentityKind::RogersNonterminating,
        Classical::Terminating(_) => IdentityKind::Terminating,
    };
    let go = || -> Result<VerificationReport> {
        if p.n != 1 {
            return Err(Error::InvalidParameters("classical sums are rank one".into()));
        }
        let k = opts.kernel()?;
        let k = &k;
        let z = z.clone().unwrap_or_else(|| default_z(1).remove(0));
        let ev = NumEval::new(k, p.q.clone(), p.binding(core::slice::from_ref(&z)));
        let deg = p.q.is_one();
        let qv = if deg { None } else { Some(ev.q().clone()) };
        // parameter `q^e` (or `e` at q = 1)
        let par = |e: &CRat| if deg { k.crat(e) } else { ev.qpow_exact(e) };
        let neg = |c: Complex| -&c;
        let g = &p.couplings;
        let (ga, gb, gc, gd) = (&g[p.a()], &g[p.b()], &g[p.c()], &g[p.d()]);
        let sum_g = p.coupling_sum();
        let one = CRat::int(1);
        let base = VerificationReport::empty(kind, Mode::Float, 1, tol);
        let so = opts.sum_options();
        match which {
            Classical::Bilateral => {
                require_bilateral(p)?;
                require_generic(core::slice::from_ref(&z), p, IdentityKind::BaileyDougall, opts.genericity_threshold)?;
                let (mut a, mut b) = (Vec::new(), Vec::new());
                if deg {
                    a.push(k.crat(&(&one + &z)));
                    b.push(k.crat(&z));
                } else {
                    let (u, v) = (par(&(&one + &z)), par(&z));
                    a.extend([u.clone(), neg(u)]);
                    b.extend([v.clone(), neg(v)]);
                }
                for gr in g {
                    a.push(par(&(&z - gr)));
                    b.push(par(&(&(&one + gr) + &z)));
                }
                let zeta = if deg { k.one() } else { par(&(&one + &sum_g)) };
                let mut ser = Series::new(k, qv.clone(), a, b, zeta);
                let model = TailModel::bilateral(p);
                let s = sum_bilateral(k, 1, &model, so, |lam| ser.term(lam[0]))?;
                // closed form
                let mut rhs = infinite_or_gamma(k, &ev, &(&one + &z.scale_small(crate::exponent::coef(2, 1))))?;
                rhs = &rhs * &infinite_or_gamma(k, &ev, &(&one - &z.scale_small(crate::exponent::coef(2, 1))))?;
                for gr in g {
                    rhs = &rhs / &infinite_or_gamma(k, &ev, &(&(&one + gr) + &z))?;
                    rhs = &rhs / &infinite_or_gamma(k, &ev, &(&(&one + gr) - &z))?;
                }
                rhs = &rhs * &infinite_or_gamma(k, &ev, &one)?;
                for r in 0..4 {
                    for s2 in (r + 1)..4 {
                        rhs = &rhs * &infinite_or_gamma(k, &ev, &(&(&one + &g[r]) + &g[s2]))?;
                    }
                }
                rhs = &rhs / &infinite_or_gamma(k, &ev, &(&one + &sum_g))?;
                let machine = bilateral(k, &terms::bailey(1, &p.perm), &ev, &model, so)?;
                let mut r = base;
                r.cross_checks.push(cross("multiple-sum-rank-one", &machine.value, &s.value));
                r.terms_evaluated += machine.terms_evaluated;
                Ok(finish(r, s.value.clone(), rhs, Some(&s)))
            }
            Classical::Unilateral | Classical::Terminating(_) => {
                let big_n = match which {
                    Classical::Terminating(nn) => Some(nn),
                    _ => None,
                };
                let (mut a, mut b) = (Vec::new(), Vec::new());
                if deg {
                    a.push(k.crat(&(&one + ga)));
                    b.push(k.crat(ga));
                } else {
                    let (u, v) = (par(&(&one + ga)), par(ga));
                    a.extend([u.clone(), neg(u)]);
                    b.extend([v.clone(), neg(v)]);
                }
                a.push(par(&ga.scale_small(crate::exponent::coef(2, 1))));
                for gr in [gb, gc, gd] {
                    a.push(par(&(ga + gr)));
                    b.push(par(&(&(&one + ga) - gr)));
                }
                // the unilateral definitions carry (q;q)_λ or (1)_λ below
                b.push(if deg { k.one() } else { ev.q().clone() });
                let zeta = if deg { k.one() } else { par(&(&one - &sum_g)) };
                let mut ser = Series::new(k, qv.clone(), a, b, zeta);
                let model = TailModel::cone(p);
                let rho_term = terms::rogers(1, &p.perm);
                let (s, machine) = match big_n {
                    Some(nn) => {
                        if !crate::params::check_truncation(p, nn) {
                            return Err(Error::TruncationViolated("g_a + g_b + N must vanish".into()));
                        }
                        let s = sum_alcove(k, 1, nn, |lam| ser.term(lam[0]))?;
                        let m = sum_alcove(k, 1, nn, |lam| rho_term.eval(&ev, lam))?;
                        (s, m)
                    }
                    None => {
                        let c = check_convergence_unilateral(p);
                        if !c.ok {
                            return Err(Error::ConvergenceViolated { margin: c.margin });
                        }
                        let s = sum_cone(k, 1, &model, so, |lam| ser.term(lam[0]))?;
                        let m = cone(k, &rho_term, &ev, &model, so)?;
                        (s, m)
                    }
                };
                let rhs = match big_n {
                    Some(nn) => {
                        let m = nn as i64;
                        let f = |e: CRat| shifted_factorial(k, qv.as_ref(), &par(&e), m);
                        let num = &f(&one + &ga.scale_small(crate::exponent::coef(2, 1)))? * &f(&(&one - gc) - gd)?;
                        let den = &f(&(&one + ga) - gc)? * &f(&(&one + ga) - gd)?;
                        &num / &den
                    }
                    None => {
                        let f = |e: CRat| infinite_or_gamma(k, &ev, &e);
                        let mut num = f(&one + &ga.scale_small(crate::exponent::coef(2, 1)))?;
                        for (x, y) in [(gb, gc), (gb, gd), (gc, gd)] {
                            num = &num * &f(&(&one - x) - y)?;
                        }
                        let mut den = f(&one - &sum_g)?;
                        for x in [gb, gc, gd] {
                            den = &den * &f(&(&one + ga) - x)?;
                        }
                        &num / &den
                    }
                };
                let mut r = base;
                r.cross_checks.push(cross("multiple-sum-rank-one", &machine.value, &s.value));
                r.terms_evaluated += machine.terms_evaluated;
                Ok(finish(r, s.value.clone(), rhs, Some(&s)))
            }
        }
    };
    go().unwrap_or_else(|e| VerificationReport::failed(kind, Mode::Float, p.n, tol, &e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Nome, IDENTITY_PERM};

    fn params(n: usize, q: &str, g: &str, cs: [&str; 4]) -> ParameterSet {
        ParameterSet::new(
            n,
            Nome::parse(q).unwrap(),
            CRat::parse(g).unwrap(),
            cs.map(|c| CRat::parse(c).unwrap()),
            IDENTITY_PERM,
        )
        .unwrap()
    }

    #[test]
    fn macdonald_rank_one() {
        let p = params(1, "0.5", "0.35", ["0.1", "0.2", "0.3", "0.4"]);
        let job = Job::Standard { kind: IdentityKind::Macdonald, params: p, z: None, big_n: None };
        let r = verify(&job, &VerifyOptions { tol: Some(1e-25), ..Default::default() });
        assert!(r.passed(), "{r:?}");
        assert!(r.rel_err < 1e-25);
    }

    #[test]
    fn violated_convergence_is_reported() {
        let p = params(2, "0.5", "-0.6", ["0", "0", "0", "0"]);
        let job = Job::Standard { kind: IdentityKind::Macdonald, params: p, z: None, big_n: None };
        let r = verify(&job, &VerifyOptions::default());
        assert_eq!(r.error.as_ref().unwrap().kind, "ConvergenceViolated");
        assert!(r.is_precondition_failure());
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn classical_bailey_and_dougall() {
        let p = params(1, "0.5", "0", ["0.1", "0.2", "0.3", "0.4"]);
        let r = classical_n1(Classical::Bilateral, &p, None, &VerifyOptions { tol: Some(1e-25), ..Default::default() });
        assert!(r.passed(), "{r:?}");
        let p = params(1, "1", "0", ["2.0", "1.5", "1.8", "1.7"]);
        let r = classical_n1(
            Classical::Bilateral,
            &p,
            None,
            &VerifyOptions { tol: Some(1e-8), max_radius: 500, ..Default::default() },
        );
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn classical_rogers_and_terminating() {
        let p = params(1, "0.5", "0", ["0.1", "0.2", "0.15", "-0.45"]);
        let r = classical_n1(Classical::Unilateral, &p, None, &VerifyOptions { tol: Some(1e-25), ..Default::default() });
        assert!(r.passed(), "{r:?}");
        for nn in 1..=3u32 {
            let gb = format!("{}", -(nn as f64) - 0.1);
            for q in ["0.5", "1"] {
                let p = params(1, q, "0", ["0.1", &gb, "0.15", "-0.3"]);
                let r = classical_n1(
                    Classical::Terminating(nn),
                    &p,
                    None,
                    &VerifyOptions { tol: Some(1e-40), ..Default::default() },
                );
                assert!(r.passed(), "N={nn} q={q} {r:?}");
            }
        }
    }
}
