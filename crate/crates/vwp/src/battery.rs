//! Fixed verification suites.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use vwp_core::exact::CRat;
use vwp_core::identities::{
    classical_n1, compare, verify, verify_rational, z_independence_check, Classical, Job, VerificationReport,
    VerifyOptions,
};
use vwp_core::params::{
    check_genericity, hat_transform, rho_vectors, GustafsonParams, IdentityKind, Nome, ParameterSet, RationalPoint,
    IDENTITY_PERM,
};
use vwp_core::summation::{cone_slice, enumerate_shell, in_cone};
use vwp_core::terms;
use vwp_core::{Complex, Kernel, NumEval, PrecisionContext};

use crate::report::ReportJson;

pub const SUITES: [&str; 5] = ["classical-n1", "theorems", "properties", "rational-terminating", "recurrence"];

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub wall_time_ms: u64,
    pub report: Value,
}

type CaseFn = Box<dyn Fn(u64) -> (bool, Value) + Send + Sync>;

pub struct Case {
    pub name: String,
    run: CaseFn,
}

impl Case {
    fn new(name: impl Into<String>, run: impl Fn(u64) -> (bool, Value) + Send + Sync + 'static) -> Case {
        Case { name: name.into(), run: Box::new(run) }
    }

    pub fn run(&self, seed: u64) -> CaseResult {
        let t = Instant::now();
        let (passed, mut report) = (self.run)(seed);
        let ms = t.elapsed().as_millis() as u64;
        if let Some(obj) = report.as_object_mut() {
            obj.insert("wall_time_ms".into(), json!(ms));
        }
        CaseResult { name: self.name.clone(), passed, wall_time_ms: ms, report }
    }
}

pub fn cases(suite: &str) -> Option<Vec<Case>> {
    Some(match suite {
        "classical-n1" => classical_cases(),
        "theorems" => theorem_cases(),
        "properties" => property_cases(),
        "rational-terminating" => rational_cases(),
        "recurrence" => recurrence_cases(),
        _ => return None,
    })
}

/// Run cases on `threads` workers; results come back in case order.
pub fn run_cases(cases: &[Case], seed: u64, threads: usize) -> Vec<CaseResult> {
    let threads = threads.max(1).min(cases.len().max(1));
    let mut slots: Vec<Option<CaseResult>> = (0..cases.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                s.spawn(move || {
                    (w..cases.len()).step_by(threads).map(|i| (i, cases[i].run(seed))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("battery worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every case ran")).collect()
}

fn c(s: &str) -> CRat {
    CRat::parse(s).expect("literal parameter")
}

fn ps(n: usize, q: &str, g: &str, cs: [&str; 4]) -> ParameterSet {
    ParameterSet::new(n, Nome::parse(q).unwrap(), c(g), cs.map(c), IDENTITY_PERM).unwrap()
}

fn opts(tol: f64, max_radius: u32) -> VerifyOptions {
    VerifyOptions { tol: Some(tol), max_radius, ..Default::default() }
}

fn reported(job: &Job, o: &VerifyOptions, r: &VerificationReport) -> (bool, Value) {
    let json = serde_json::to_value(ReportJson::new(job, o, r, 0)).expect("report serializes");
    (r.passed(), json)
}

fn verify_case(name: &str, job: Job, o: VerifyOptions) -> Case {
    Case::new(name, move |_| reported(&job, &o, &verify(&job, &o)))
}

fn standard(kind: IdentityKind, params: ParameterSet, z: Option<&[&str]>, big_n: Option<u32>) -> Job {
    Job::Standard { kind, params, z: z.map(|z| z.iter().map(|s| c(s)).collect()), big_n }
}

const TEST_G: [&str; 4] = ["0.1", "0.2", "0.3", "0.4"];
const WIDE_G: [&str; 4] = ["2.0", "1.5", "1.8", "1.7"];

fn classical_case(name: &str, which: Classical, p: ParameterSet, z: Option<&str>, o: VerifyOptions) -> Case {
    let z = z.map(c);
    Case::new(name, move |_| {
        let r = classical_n1(which, &p, z.clone(), &o);
        let job = standard(r.identity, p.clone(), None, None);
        reported(&job, &o, &r)
    })
}

fn terminating_point(q: &str, big_n: u32) -> ParameterSet {
    let gb = format!("{}", -(big_n as f64) - 0.1);
    ps(1, q, "0", ["0.1", &gb, "0.15", "-0.3"])
}

fn classical_cases() -> Vec<Case> {
    let mut v = vec![
        classical_case("bailey-6psi6", Classical::Bilateral, ps(1, "0.5", "0", TEST_G), Some("0.37"), opts(1e-25, 120)),
        classical_case("dougall-5H5", Classical::Bilateral, ps(1, "1", "0", WIDE_G), Some("0.37"), opts(1e-8, 500)),
        classical_case(
            "rogers-6phi5",
            Classical::Unilateral,
            ps(1, "0.5", "0", ["0.1", "0.2", "0.15", "-0.45"]),
            None,
            opts(1e-25, 200),
        ),
        classical_case(
            "dougall-5F4",
            Classical::Unilateral,
            ps(1, "1", "0", ["-0.2", "-1.5", "-1.75", "-1.7"]),
            None,
            opts(1e-8, 500),
        ),
    ];
    for big_n in 1..=3 {
        v.push(classical_case(
            &format!("terminating-6phi5-N{big_n}"),
            Classical::Terminating(big_n),
            terminating_point("0.5", big_n),
            None,
            opts(1e-40, 0),
        ));
        v.push(classical_case(
            &format!("terminating-5F4-N{big_n}"),
            Classical::Terminating(big_n),
            terminating_point("1", big_n),
            None,
            opts(1e-40, 0),
        ));
    }
    v
}

fn theorem_cases() -> Vec<Case> {
    let z2: &[&str] = &["0.37", "0.11"];
    let z3: &[&str] = &["0.37", "0.11", "-0.23"];
    // (n-1)g + g_a + g_b + N = 0 at g = 0.35
    let term2 = ps(2, "0.5", "0.35", ["0.1", "-2.45", "0.3", "0.4"]);
    let term3 = ps(3, "0.5", "0.35", ["0.1", "-2.8", "0.3", "0.4"]);
    let gust: Vec<CRat> = ["0.1", "0.2", "0.3", "0.4", "0.15", "0.25"].map(c).to_vec();
    let gust = GustafsonParams::new(2, Nome::parse("0.5").unwrap(), gust).unwrap();
    let mut v = vec![
        verify_case("macdonald-n2", standard(IdentityKind::Macdonald, ps(2, "0.5", "0.35", TEST_G), Some(z2), None), opts(1e-15, 30)),
        verify_case("macdonald-n3", standard(IdentityKind::Macdonald, ps(3, "0.5", "0.35", TEST_G), Some(z3), None), opts(1e-8, 15)),
        verify_case("aomoto-ito-n2", standard(IdentityKind::AomotoIto, ps(2, "0.5", "0.35", TEST_G), Some(z2), None), opts(1e-15, 30)),
        verify_case("bailey-n2", standard(IdentityKind::BaileyDougall, ps(2, "0.5", "0.35", TEST_G), Some(z2), None), opts(1e-15, 30)),
        verify_case("dougall-n2", standard(IdentityKind::BaileyDougall, ps(2, "1", "0.3", WIDE_G), Some(z2), None), opts(1e-8, 500)),
        verify_case(
            "rogers-n2",
            standard(IdentityKind::RogersNonterminating, ps(2, "0.5", "0.05", ["0.1", "0.2", "0.15", "-0.45"]), None, None),
            opts(1e-15, 200),
        ),
        verify_case("terminating-n2-N2", standard(IdentityKind::Terminating, term2, None, Some(2)), opts(1e-40, 0)),
        verify_case("terminating-n3-N2", standard(IdentityKind::Terminating, term3, None, Some(2)), opts(1e-40, 0)),
        verify_case("gustafson-n2", Job::Gustafson { params: gust, z: Some(z2.iter().map(|s| c(s)).collect()) }, opts(1e-12, 30)),
    ];
    v.push(Case::new("z-independence-n2", |_| {
        let p = ps(2, "0.5", "0.35", TEST_G);
        let o = opts(1e-12, 60);
        let r = z_independence_check(&p, &[c("0.37"), c("0.11")], &[c("-0.21"), c("0.43")], &o);
        reported(&standard(IdentityKind::Macdonald, p, None, None), &o, &r)
    }));
    v
}

fn recurrence_cases() -> Vec<Case> {
    vec![
        verify_case("recurrence-n1", standard(IdentityKind::Recurrence, ps(1, "0.5", "0.35", TEST_G), Some(&["0.37"]), None), opts(1e-25, 120)),
        verify_case(
            "recurrence-n2",
            standard(IdentityKind::Recurrence, ps(2, "0.5", "0.35", TEST_G), Some(&["0.37", "0.11"]), None),
            opts(1e-12, 60),
        ),
        verify_case(
            "recurrence-n2-q1",
            standard(IdentityKind::Recurrence, ps(2, "1", "0.3", WIDE_G), Some(&["0.37", "0.11"]), None),
            opts(1e-6, 500),
        ),
    ]
}

/// Small random rational, nonzero.
fn small_rational(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> BigRational {
    loop {
        let num = rng.gen_range(lo..=hi);
        if num != 0 {
            return BigRational::new(BigInt::from(num), BigInt::from(rng.gen_range(1..=9i64)));
        }
    }
}

/// A random exact point; retries when a denominator vanishes identically.
pub fn random_rational_point(rng: &mut ChaCha8Rng, n: usize, big_n: u32) -> RationalPoint {
    loop {
        let qn: i64 = rng.gen_range(1..=4);
        let qd = qn + rng.gen_range(1..=5i64);
        let q = Nome::from_rational(BigRational::new(BigInt::from(qn), BigInt::from(qd))).unwrap();
        let t = small_rational(rng, 1, 19);
        let x = [small_rational(rng, -9, 9), BigRational::from_integer(BigInt::from(1)), small_rational(rng, -9, 9), small_rational(rng, -9, 9)];
        if let Ok(p) = RationalPoint::new(n, q, t, x, IDENTITY_PERM, big_n) {
            return p;
        }
    }
}

fn rational_cases() -> Vec<Case> {
    let mut v = Vec::new();
    for n in 1..=3usize {
        for big_n in 0..=3u32 {
            v.push(Case::new(format!("rational-n{n}-N{big_n}"), move |seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ big_n as u64);
                let kernel = Kernel::new(PrecisionContext::new(64).unwrap());
                let (mut done, mut degenerate, mut mismatches) = (0, 0, Vec::new());
                while done < 25 {
                    let pt = random_rational_point(&mut rng, n, big_n);
                    match verify_rational(&kernel, &pt) {
                        Ok(r) if r.passed() => done += 1,
                        Ok(r) => {
                            mismatches.push(json!({"t": pt.t.to_string(), "x": pt.x.iter().map(|x| x.to_string()).collect::<Vec<_>>(), "exact": r.exact}));
                            done += 1;
                        }
                        // an accidental zero denominator at this sample
                        Err(_) => degenerate += 1,
                    }
                }
                let ok = mismatches.is_empty();
                (ok, json!({"case": "rational-terminating", "n": n, "N": big_n, "points": 25, "resampled": degenerate, "mismatches": mismatches, "verdict": if ok { "pass" } else { "fail" }}))
            }));
        }
    }
    v
}

fn property(name: &str, checked: usize, worst: f64, tol: f64) -> (bool, Value) {
    let ok = worst <= tol;
    (ok, json!({"case": name, "checked": checked, "worst_rel_diff": worst, "tol": tol, "verdict": if ok { "pass" } else { "fail" }}))
}

fn kern() -> Kernel {
    Kernel::new(PrecisionContext::new(256).unwrap())
}

fn rel(a: &Complex, b: &Complex) -> f64 {
    compare(a, b).1
}

fn property_cases() -> Vec<Case> {
    vec![
        Case::new("triple-product", |seed| {
            let k = kern();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let (zr, za) = (rng.gen_range(0.2..2.0f64), rng.gen_range(0.0..std::f64::consts::TAU));
                let (qr, qa) = (rng.gen_range(0.05..0.9f64), rng.gen_range(0.0..std::f64::consts::TAU));
                let zeta = k.complex(zr * za.cos(), zr * za.sin());
                let q = k.complex(qr * qa.cos(), qr * qa.sin());
                let (s, p) = (k.theta_series(&zeta, &q).unwrap(), k.theta_product(&zeta, &q).unwrap());
                // excess over the combined certified error
                let d = (&s.value - &p.value).abs_f64();
                worst = worst.max((d - s.err - p.err).max(0.0) / s.value.abs_f64());
            }
            property("triple-product", 100, worst, 0.0)
        }),
        Case::new("reflection", |seed| {
            let k = kern();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let a = k.complex(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0));
                let q = k.complex(rng.gen_range(0.1..0.9), 0.0);
                let lam: i64 = rng.gen_range(-6..=6);
                let lhs = &k.qpoch_finite(&a, &q, lam).unwrap() * &k.qpoch_finite(&(&q / &a), &q, -lam).unwrap();
                let mut rhs = k.one();
                for _ in 0..lam.abs() {
                    rhs = if lam > 0 { &rhs * &(-&a) } else { &rhs / &(-&a) };
                }
                for _ in 0..lam * (lam - 1) / 2 {
                    rhs = &rhs * &q;
                }
                worst = worst.max(rel(&lhs, &rhs));
                let lhs = &k.pochhammer(&a, lam).unwrap() * &k.pochhammer(&(&k.one() - &a), -lam).unwrap();
                let sign = if lam % 2 == 0 { 1.0 } else { -1.0 };
                worst = worst.max(rel(&lhs, &k.complex(sign, 0.0)));
            }
            property("reflection", 100, worst, 1e-60)
        }),
        Case::new("quasi-periodicity", |seed| {
            let k = kern();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..50 {
                let zeta = k.complex(rng.gen_range(-1.5..1.5), rng.gen_range(0.1..1.5));
                let q = k.complex(rng.gen_range(0.05..0.9), 0.0);
                let lhs = k.theta_series(&(&q * &zeta), &q).unwrap().value;
                let rhs = -&(&k.theta_series(&zeta, &q).unwrap().value / &zeta);
                worst = worst.max(rel(&lhs, &rhs));
            }
            property("quasi-periodicity", 50, worst, 1e-60)
        }),
        Case::new("aomoto-periodicity", |seed| {
            let k = kern();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            let p = ps(2, "0.5", "0.35", TEST_G);
            let z = [c("0.37"), c("0.11")];
            for q in ["0.5", "1"] {
                let nome = Nome::parse(q).unwrap();
                let base = NumEval::new(&k, nome.clone(), terms::binding(&p.g, &p.couplings, &z));
                let f = terms::aomoto_factor_theta(&base, &p.perm).unwrap();
                for _ in 0..10 {
                    let shift: Vec<CRat> =
                        z.iter().map(|zj| zj + &CRat::int(rng.gen_range(-4..=4))).collect();
                    let ev = NumEval::new(&k, nome.clone(), terms::binding(&p.g, &p.couplings, &shift));
                    worst = worst.max(rel(&terms::aomoto_factor_theta(&ev, &p.perm).unwrap(), &f));
                }
            }
            property("aomoto-periodicity", 20, worst, 1e-60)
        }),
        Case::new("bailey-macdonald-termwise", |_| {
            let k = kern();
            let mut worst = 0.0f64;
            let mut checked = 0;
            for q in ["0.5", "1"] {
                let p = ps(2, q, "0.35", TEST_G);
                let ev = NumEval::new(&k, p.q.clone(), p.binding(&[c("0.37"), c("0.11")]));
                let m0 = terms::macdonald(2).eval_at_origin(&ev).unwrap();
                for r in 0..=3 {
                    for lam in enumerate_shell(2, r) {
                        let b = terms::bailey(2, &p.perm).eval(&ev, &lam).unwrap();
                        let m = terms::macdonald(2).eval(&ev, &lam).unwrap();
                        worst = worst.max(rel(&(&b * &m0), &m));
                        checked += 1;
                    }
                }
            }
            property("bailey-macdonald-termwise", checked, worst, 1e-60)
        }),
        Case::new("cone-vanishing", |_| {
            // the reflected Bailey term at z = -ρ lives on the dominant cone
            let k = kern();
            let (mut worst, mut checked) = (0.0f64, 0);
            for q in ["0.5", "1"] {
                let p = ps(2, q, "-0.05", ["-0.1", "-0.2", "-0.15", "0.45"]);
                let rho = rho_vectors(&p).rho;
                let z: Vec<CRat> = rho.iter().map(|r| -r).collect();
                let ev = NumEval::new(&k, p.q.clone(), p.binding(&z));
                let orig = ps(2, q, "0.05", ["0.1", "0.2", "0.15", "-0.45"]);
                let ev_orig = NumEval::new(&k, orig.q.clone(), orig.binding(&[]));
                for r in 0..=3 {
                    for lam in enumerate_shell(2, r) {
                        let t = terms::bailey(2, &p.perm).eval(&ev, &lam).unwrap();
                        checked += 1;
                        if in_cone(&lam) {
                            let d = terms::rogers(2, &orig.perm).eval(&ev_orig, &lam).unwrap();
                            worst = worst.max(rel(&t, &d));
                        } else if !t.is_zero() {
                            worst = f64::INFINITY;
                        }
                    }
                }
            }
            property("cone-vanishing", checked, worst, 1e-60)
        }),
        Case::new("alcove-vanishing", |_| {
            let k = kern();
            let (mut worst, mut checked) = (0.0f64, 0);
            for q in ["0.5", "1"] {
                let p = ps(2, q, "0.35", ["0.1", "-2.45", "0.3", "0.4"]);
                let ev = NumEval::new(&k, p.q.clone(), p.binding(&[]));
                for r in 3..=5 {
                    for lam in cone_slice(2, r) {
                        checked += 1;
                        if !terms::rogers(2, &p.perm).eval(&ev, &lam).unwrap().is_zero() {
                            worst = f64::INFINITY;
                        }
                    }
                }
            }
            property("alcove-vanishing", checked, worst, 0.0)
        }),
        Case::new("hat-involution", |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut bad = 0.0;
            for _ in 0..100 {
                let cs: [CRat; 4] = std::array::from_fn(|_| CRat::ratio(rng.gen_range(-300..300), 100));
                let p = ParameterSet::new(1, Nome::One, c("0.3"), cs, IDENTITY_PERM).unwrap();
                let once = hat_transform(&p);
                let back = hat_transform(&p.with_couplings(once.by_index.clone()));
                if back.by_index != p.couplings {
                    bad = f64::INFINITY;
                }
            }
            property("hat-involution", 100, bad, 0.0)
        }),
        Case::new("permutation-invariance", |_| {
            // relabelling which coupling plays a, b, c, d leaves bilateral verdicts unchanged
            let o = opts(1e-20, 100);
            let mut verdicts = Vec::new();
            let mut worst = 0.0f64;
            let base = ps(2, "0.5", "0.35", TEST_G);
            let z = vec![c("0.37"), c("0.11")];
            let mut reference: Option<Complex> = None;
            for perm in permutations() {
                let p = ParameterSet::new(2, base.q.clone(), base.g.clone(), base.couplings.clone(), perm).unwrap();
                if !check_genericity(&z, &p, IdentityKind::BaileyDougall, 1e-8).is_empty() {
                    continue;
                }
                let r = verify(&Job::Standard { kind: IdentityKind::Macdonald, params: p, z: Some(z.clone()), big_n: None }, &o);
                verdicts.push(r.passed());
                let v = r.lhs.clone().unwrap();
                if let Some(r0) = &reference {
                    worst = worst.max(rel(&v, r0));
                } else {
                    reference = Some(v);
                }
            }
            let all = verdicts.iter().all(|&v| v) && verdicts.len() == 24;
            property("permutation-invariance", verdicts.len(), if all { worst } else { f64::INFINITY }, 1e-60)
        }),
    ]
}

pub fn permutations() -> Vec<[usize; 4]> {
    (0..256usize)
        .map(|k| [k & 3, (k >> 2) & 3, (k >> 4) & 3, (k >> 6) & 3])
        .filter(|p| (0..4).all(|i| p.contains(&i)))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub suite: String,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub cases: Vec<SummaryRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub name: String,
    pub verdict: &'static str,
    pub wall_time_ms: u64,
}

pub fn summarize(suite: &str, seed: u64, results: &[CaseResult]) -> Summary {
    let passed = results.iter().filter(|r| r.passed).count();
    Summary {
        suite: suite.to_string(),
        seed,
        passed,
        failed: results.len() - passed,
        cases: results
            .iter()
            .map(|r| SummaryRow { name: r.name.clone(), verdict: if r.passed { "pass" } else { "fail" }, wall_time_ms: r.wall_time_ms })
            .collect(),
    }
}
