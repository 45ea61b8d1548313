//! Lattice enumeration and adaptive summation with tail bounds.
//!
//! Sums run over ℓ∞ shells `max_j |λ_j| = r` (bilateral) or over the cone
//! slices `λ_1 = r`. After each shell the omitted mass is bounded by an
//! envelope from the convergence argument: geometric for `0 < q < 1`,
//! power law for `q = 1`. The envelope constant is read off the outermost
//! shells and inflated by [`SAFETY_FACTOR`].

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Partial, Result};
use crate::exact::rat_to_f64;
use crate::kernel::Kernel;
use crate::params::{GustafsonParams, ParameterSet};
use crate::real::{CompensatedSum, Complex};

/// Multiplier on the envelope constant estimated from the last shells.
pub const SAFETY_FACTOR: f64 = 4.0;

/// Every point with `max_j |λ_j| = r`, in lexicographic order.
pub fn enumerate_shell(n: usize, r: u32) -> Vec<Vec<i64>> {
    let r = r as i64;
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec(i: usize, hit: bool, r: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i == cur.len() {
            if hit {
                out.push(cur.clone());
            }
            return;
        }
        let last = i + 1 == cur.len();
        for v in -r..=r {
            let h = hit || v.abs() == r;
            // the last slot must reach the shell if nothing earlier did
            if last && !h {
                continue;
            }
            cur[i] = v;
            rec(i + 1, h, r, cur, out);
        }
    }
    rec(0, false, r, &mut cur, &mut out);
    out
}

/// Weakly decreasing nonnegative tuples with `λ_1 = r`, lexicographic.
pub fn cone_slice(n: usize, r: u32) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec(i: usize, max: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=max {
            cur[i] = v;
            rec(i + 1, v, cur, out);
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    cur[0] = r as i64;
    rec(1, r as i64, &mut cur, &mut out);
    out
}

/// The cone `λ_1 ≥ ... ≥ λ_n ≥ 0` cut at `λ_1 ≤ up_to`, lexicographic.
pub fn enumerate_cone(n: usize, up_to: u32) -> Vec<Vec<i64>> {
    (0..=up_to).flat_map(|r| cone_slice(n, r)).collect()
}

/// The alcove `N ≥ λ_1 ≥ ... ≥ λ_n ≥ 0`; `binomial(N+n, n)` points.
pub fn enumerate_alcove(n: usize, big_n: u32) -> Vec<Vec<i64>> {
    enumerate_cone(n, big_n)
}

pub fn in_cone(lambda: &[i64]) -> bool {
    lambda.windows(2).all(|w| w[0] >= w[1]) && lambda.last().map_or(true, |v| *v >= 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Bilateral,
    Cone,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decay {
    /// `log2 w_j`: the envelope is `prod_j w_j^{μ_j}`.
    Geometric(Vec<f64>),
    /// `α_j`: the envelope is `prod_j (1+μ_j)^{-α_j}`.
    Power(Vec<f64>),
}

/// Envelope for the terms on the dominant cone plus the orbit multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct TailModel {
    pub decay: Decay,
    /// Number of lattice points folding onto one cone point (`2^n n!` or 1).
    pub orbit: f64,
    pub safety: f64,
}

fn orbit_count(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * 2.0 * k as f64)
}

fn log2_q(p: &crate::params::Nome) -> f64 {
    -p.abs_ln() / core::f64::consts::LN_2
}

impl TailModel {
    /// Bilateral four-coupling sums.
    pub fn bilateral(p: &ParameterSet) -> TailModel {
        let n = p.n;
        let g = rat_to_f64(&p.g.re);
        let s = rat_to_f64(&p.coupling_sum().re);
        let decay = if p.q.is_one() {
            let eps = if g >= 0.0 { 1.0 } else { -1.0 };
            Decay::Power((1..=n).map(|j| 3.0 + (3.0 - eps) * (n - j) as f64 * g + 2.0 * s).collect())
        } else {
            let lq = log2_q(&p.q);
            Decay::Geometric((1..=n).map(|j| lq * (1.0 + 2.0 * (n - j) as f64 * g + s)).collect())
        };
        TailModel { decay, orbit: orbit_count(n), safety: SAFETY_FACTOR }
    }

    /// Cone sums: the bilateral envelope at reflected couplings.
    pub fn cone(p: &ParameterSet) -> TailModel {
        let n = p.n;
        let g = -rat_to_f64(&p.g.re);
        let s = -rat_to_f64(&p.coupling_sum().re);
        let decay = if p.q.is_one() {
            let eps = if g >= 0.0 { 1.0 } else { -1.0 };
            Decay::Power((1..=n).map(|j| 3.0 + (3.0 - eps) * (n - j) as f64 * g + 2.0 * s).collect())
        } else {
            let lq = log2_q(&p.q);
            Decay::Geometric((1..=n).map(|j| lq * (1.0 + 2.0 * (n - j) as f64 * g + s)).collect())
        };
        TailModel { decay, orbit: 1.0, safety: SAFETY_FACTOR }
    }

    /// `2n+2`-coupling sum: `w_j = q^{j + Σg}`, or `α_j = 2j + 1 + 2Σg` at `q = 1`.
    pub fn gustafson(p: &GustafsonParams) -> TailModel {
        let s = p.margin() - 1.0;
        let decay = if p.q.is_one() {
            Decay::Power((1..=p.n).map(|j| 2.0 * j as f64 + 1.0 + 2.0 * s).collect())
        } else {
            let lq = log2_q(&p.q);
            Decay::Geometric((1..=p.n).map(|j| lq * (j as f64 + s)).collect())
        };
        TailModel { decay, orbit: orbit_count(p.n), safety: SAFETY_FACTOR }
    }

    /// `log2` of the envelope at a cone point.
    pub fn envelope_log2(&self, mu: &[i64]) -> f64 {
        match &self.decay {
            Decay::Geometric(w) => w.iter().zip(mu).map(|(w, m)| w * *m as f64).sum(),
            Decay::Power(a) => a.iter().zip(mu).map(|(a, m)| -a * libm::log2(1.0 + *m as f64)).sum(),
        }
    }

    /// `log2` of `sum_{μ ∈ Λ, μ_1 > r}` of the envelope (`+inf` when divergent).
    pub fn mass_beyond_log2(&self, r: u32) -> f64 {
        match &self.decay {
            Decay::Geometric(w) => geometric_mass_log2(w, r),
            Decay::Power(a) => power_mass_log2(a, r),
        }
    }

    /// Certified-heuristic bound on the omitted mass given the constant `C`.
    pub fn tail_log2(&self, c_log2: f64, r: u32) -> f64 {
        if c_log2 == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        libm::log2(self.safety) + libm::log2(self.orbit) + c_log2 + self.mass_beyond_log2(r)
    }

    /// The divergence check the sum relies on.
    pub fn convergent(&self) -> bool {
        self.mass_beyond_log2(0).is_finite()
    }
}

fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + libm::log2(1.0 + libm::exp2(lo - hi))
}

/// `prod_j w_j^{μ_j} = prod_k W_k^{d_k}` with `W_k = w_1...w_k`, `d_k = μ_k - μ_{k+1}`,
/// so the mass over `μ_1 = s` is at most `binom(s+n-1, n-1) max_k W_k^s`.
fn geometric_mass_log2(w: &[f64], r: u32) -> f64 {
    let n = w.len();
    let mut partial = 0.0;
    let mut lx = f64::NEG_INFINITY;
    for v in w {
        partial += v;
        lx = lx.max(partial);
    }
    if !(lx < 0.0) {
        return f64::INFINITY;
    }
    let log2_binom = |s: f64| -> f64 { (1..n).map(|i| libm::log2((s + i as f64) / i as f64)).sum() };
    let mut acc = f64::NEG_INFINITY;
    let mut s = r as f64 + 1.0;
    for _ in 0..1_000_000 {
        let t = log2_binom(s) + s * lx;
        acc = log2_add(acc, t);
        // later ratios are no larger than this one
        let ratio = lx + libm::log2((s + n as f64) / (s + 1.0));
        if ratio < 0.0 {
            let rho = libm::exp2(ratio);
            let rest = t + libm::log2(rho / (1.0 - rho));
            if rest < acc - 64.0 {
                return log2_add(acc, rest);
            }
        }
        s += 1.0;
    }
    f64::INFINITY
}

/// Bound over `μ_1 = s > r` with the other coordinates free in `[0, s]`:
/// `sum_{m<=s} (1+m)^{-α}` is `1 + 1/(α-1)` for `α > 1` and at most
/// `(1+s)^{1-α} (1 + ln(1+s))` otherwise; the logarithm is absorbed as
/// `1 + ln x <= (1 + 1/(δ e)) x^δ`.
fn power_mass_log2(a: &[f64], r: u32) -> f64 {
    let mut beta = a[0];
    let mut log2_const = 0.0;
    let mut logs = 0usize;
    for &al in &a[1..] {
        if al > 1.0 {
            log2_const += libm::log2(1.0 + 1.0 / (al - 1.0));
        } else {
            beta -= 1.0 - al;
            logs += 1;
        }
    }
    if !(beta > 1.0) {
        return f64::INFINITY;
    }
    if logs > 0 {
        let delta = (beta - 1.0) / (2.0 * logs as f64);
        beta -= delta * logs as f64;
        log2_const += logs as f64 * libm::log2(1.0 + 1.0 / (delta * core::f64::consts::E));
    }
    // sum_{s >= r+1} (1+s)^{-β} <= (r+2)^{-β} + (r+2)^{1-β}/(β-1)
    let x = r as f64 + 2.0;
    let head = -beta * libm::log2(x);
    let tail = (1.0 - beta) * libm::log2(x) - libm::log2(beta - 1.0);
    log2_const + log2_add(head, tail)
}

/// Stopping and budget controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SumOptions {
    /// Stop once the tail bound is below `tol/10` of the partial sum.
    pub tol: f64,
    pub max_radius: u32,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions { tol: 1e-30, max_radius: 200 }
    }
}

#[derive(Clone, Debug)]
pub struct SumResult {
    pub value: Complex,
    /// `log2` of the bound on the omitted mass.
    pub tail_log2: f64,
    /// `log2` of the envelope constant before the safety factor.
    pub c_log2: f64,
    pub terms_evaluated: u64,
    pub radius_used: u32,
}

impl SumResult {
    pub fn tail_bound(&self) -> f64 {
        libm::exp2(self.tail_log2)
    }

    /// Tail relative to the value, computed in logs.
    pub fn relative_tail(&self) -> f64 {
        libm::exp2(self.tail_log2 - self.value.log2_abs())
    }

    fn partial(self) -> Partial {
        Partial {
            value: self.value,
            tail_bound: libm::exp2(self.tail_log2),
            terms_evaluated: self.terms_evaluated,
            radius_used: self.radius_used,
        }
    }
}

/// Dominant representative: sorted absolute values, largest first.
pub fn fold(lambda: &[i64]) -> Vec<i64> {
    let mut m: Vec<i64> = lambda.iter().map(|v| v.abs()).collect();
    m.sort_unstable_by(|a, b| b.cmp(a));
    m
}

/// Shell-by-shell summation of `term` over `Z^n` or the cone.
pub fn sum_adaptive<F>(
    kernel: &Kernel,
    n: usize,
    region: Region,
    model: &TailModel,
    opts: SumOptions,
    mut term: F,
) -> Result<SumResult>
where
    F: FnMut(&[i64]) -> Result<Complex>,
{
    if !model.convergent() {
        return Err(Error::ConvergenceViolated { margin: 0.0 });
    }
    let mut acc = CompensatedSum::new(kernel.prec());
    let mut count = 0u64;
    let mut prev_c = f64::NEG_INFINITY;
    let stop = libm::log2(opts.tol / 10.0);
    let mut r = 0u32;
    loop {
        let pts = match region {
            Region::Bilateral => enumerate_shell(n, r),
            Region::Cone => cone_slice(n, r),
        };
        let mut c_shell = f64::NEG_INFINITY;
        for lam in &pts {
            let t = term(lam)?;
            count += 1;
            if t.is_zero() {
                continue;
            }
            let mu = match region {
                Region::Bilateral => fold(lam),
                Region::Cone => lam.clone(),
            };
            c_shell = c_shell.max(t.log2_abs() - model.envelope_log2(&mu));
            acc.add(&t);
        }
        let c = c_shell.max(prev_c);
        prev_c = c_shell;
        let value = acc.value();
        let tail_log2 = model.tail_log2(c, r);
        let res = SumResult { value, tail_log2, c_log2: c, terms_evaluated: count, radius_used: r };
        let scale = res.value.log2_abs();
        // leading shells can vanish structurally; an exact zero says nothing
        // about the scale, so keep going until something nonzero turns up
        let settled = r >= 1 && !res.value.is_zero();
        if settled && (tail_log2 == f64::NEG_INFINITY || tail_log2 <= stop + scale) {
            return Ok(res);
        }
        if r >= opts.max_radius {
            return Err(Error::RadiusExhausted(Box::new(res.partial())));
        }
        r += 1;
    }
}

/// Bilateral sum over `Z^n`.
pub fn sum_bilateral<F>(kernel: &Kernel, n: usize, model: &TailModel, opts: SumOptions, term: F) -> Result<SumResult>
where
    F: FnMut(&[i64]) -> Result<Complex>,
{
    sum_adaptive(kernel, n, Region::Bilateral, model, opts, term)
}

/// Sum over the dominant cone.
pub fn sum_cone<F>(kernel: &Kernel, n: usize, model: &TailModel, opts: SumOptions, term: F) -> Result<SumResult>
where
    F: FnMut(&[i64]) -> Result<Complex>,
{
    sum_adaptive(kernel, n, Region::Cone, model, opts, term)
}

/// Finite sum over the alcove; the tail is zero.
pub fn sum_alcove<F>(kernel: &Kernel, n: usize, big_n: u32, mut term: F) -> Result<SumResult>
where
    F: FnMut(&[i64]) -> Result<Complex>,
{
    let mut acc = CompensatedSum::new(kernel.prec());
    let mut count = 0;
    for lam in enumerate_alcove(n, big_n) {
        acc.add(&term(&lam)?);
        count += 1;
    }
    Ok(SumResult {
        value: acc.value(),
        tail_log2: f64::NEG_INFINITY,
        c_log2: f64::NEG_INFINITY,
        terms_evaluated: count,
        radius_used: big_n,
    })
}

/// Exact alcove sum in any additive value type.
pub fn sum_alcove_exact<V, F>(n: usize, big_n: u32, zero: V, mut term: F) -> Result<(V, u64)>
where
    V: for<'a> core::ops::AddAssign<&'a V>,
    F: FnMut(&[i64]) -> Result<V>,
{
    let mut acc = zero;
    let mut count = 0;
    for lam in enumerate_alcove(n, big_n) {
        acc += &term(&lam)?;
        count += 1;
    }
    Ok((acc, count))
}

/// Plain sum over the box `[-r, r]^n` in lexicographic order, no tail.
pub fn sum_box<F>(kernel: &Kernel, n: usize, r: u32, mut term: F) -> Result<Complex>
where
    F: FnMut(&[i64]) -> Result<Complex>,
{
    let mut acc = CompensatedSum::new(kernel.prec());
    let side = 2 * r as i64 + 1;
    let total = (0..n).fold(1i64, |a, _| a * side);
    let mut lam = vec![0i64; n];
    for idx in 0..total {
        let mut k = idx;
        for j in (0..n).rev() {
            lam[j] = k % side - r as i64;
            k /= side;
        }
        acc.add(&term(&lam)?);
    }
    Ok(acc.value())
}
