//! JSON form of a verification report.

use serde::Serialize;

use vwp_core::identities::{Job, VerificationReport, VerifyOptions};
use vwp_core::Complex;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<&Complex> for ComplexJson {
    fn from(c: &Complex) -> Self {
        let (re, im) = c.to_f64();
        ComplexJson { re, im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossCheckJson {
    pub name: String,
    pub rel_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorJson {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactJson {
    pub lhs: String,
    pub rhs: String,
}

/// Field order here is the schema order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportJson {
    pub identity: String,
    pub mode: String,
    pub n: usize,
    pub q: String,
    pub g: Option<String>,
    pub g_r: Option<Vec<String>>,
    /// Gustafson couplings `g_1..g_{2n+2}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<String>>,
    pub perm: Option<[usize; 4]>,
    pub z: Option<Vec<String>>,
    #[serde(rename = "N")]
    pub big_n: Option<u32>,
    pub precision_bits: usize,
    pub tol: f64,
    pub radius_used: u32,
    pub terms_evaluated: u64,
    pub lhs: Option<ComplexJson>,
    pub rhs: Option<ComplexJson>,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tail_bound: f64,
    pub rel_tail: f64,
    pub cross_checks: Vec<CrossCheckJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactJson>,
    pub error: Option<ErrorJson>,
    pub wall_time_ms: u64,
    pub verdict: String,
}

fn strs<T: ToString>(xs: &[T]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

impl ReportJson {
    pub fn new(job: &Job, opts: &VerifyOptions, r: &VerificationReport, wall_time_ms: u64) -> Self {
        let one_based = |p: [usize; 4]| p.map(|i| i + 1);
        let (q, g, g_r, couplings, perm, z, big_n) = match job {
            Job::Standard { params, z, big_n, .. } => (
                params.q.to_string(),
                Some(params.g.to_string()),
                Some(strs(&params.couplings)),
                None,
                Some(one_based(params.perm)),
                z.as_ref().map(|z| strs(z)),
                *big_n,
            ),
            Job::Gustafson { params, z } => {
                (params.q.to_string(), None, None, Some(strs(&params.couplings)), None, z.as_ref().map(|z| strs(z)), None)
            }
            Job::Rational(p) => (
                p.q.to_string(),
                Some(p.t.to_string()),
                Some(strs(&p.x)),
                None,
                Some(one_based(p.perm)),
                None,
                Some(p.big_n),
            ),
        };
        ReportJson {
            identity: r.identity.name().to_string(),
            mode: r.mode.name().to_string(),
            n: r.n,
            q,
            g,
            g_r,
            couplings,
            perm,
            z,
            big_n,
            precision_bits: opts.precision_bits,
            tol: r.tol,
            radius_used: r.radius_used,
            terms_evaluated: r.terms_evaluated,
            lhs: r.lhs.as_ref().map(ComplexJson::from),
            rhs: r.rhs.as_ref().map(ComplexJson::from),
            abs_err: r.abs_err,
            rel_err: r.rel_err,
            tail_bound: r.tail_bound,
            rel_tail: r.rel_tail,
            cross_checks: r.cross_checks.iter().map(|c| CrossCheckJson { name: c.name.clone(), rel_diff: c.rel_diff }).collect(),
            exact: r.exact.as_ref().map(|(l, r)| ExactJson { lhs: l.clone(), rhs: r.clone() }),
            error: r.error.as_ref().map(|e| ErrorJson { kind: e.kind.clone(), message: e.message.clone() }),
            wall_time_ms,
            verdict: r.verdict.name().to_string(),
        }
    }

    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Exit status for a single report: 0 pass, 1 fail, 2 rejected input.
pub fn exit_code(r: &VerificationReport) -> i32 {
    if r.passed() {
        0
    } else if r.is_precondition_failure() {
        2
    } else {
        1
    }
}
