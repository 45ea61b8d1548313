//! Closed forms rebuilt here from kernel primitives, checked against the
//! library's right-hand sides and sums.

use vwp_core::exact::CRat;
use vwp_core::identities::{
    bailey_rhs, compare, gustafson_rhs, macdonald_rhs, rogers_rhs, terminating_rhs, verify, z_independence_check,
    Classical, Job, VerifyOptions,
};
use vwp_core::params::{GustafsonParams, IdentityKind, Nome, ParameterSet};
use vwp_core::product::CompiledTerm;
use vwp_core::summation::{sum_alcove, sum_bilateral, sum_box, SumOptions, TailModel};
use vwp_core::terms::{self, TerminatingForm};
use vwp_core::{Complex, Kernel, NumEval, PrecisionContext};

fn kernel() -> Kernel {
    Kernel::new(PrecisionContext::new(256).unwrap())
}

fn rat(num: i64, den: i64) -> CRat {
    CRat::ratio(num, den)
}

fn params(n: usize, q: &str, g: CRat, cs: [CRat; 4]) -> ParameterSet {
    ParameterSet::new(n, Nome::parse(q).unwrap(), g, cs, [0, 1, 2, 3]).unwrap()
}

fn test_couplings() -> [CRat; 4] {
    [rat(1, 10), rat(1, 5), rat(3, 10), rat(2, 5)]
}

fn rel(a: &Complex, b: &Complex) -> f64 {
    compare(a, b).1
}

/// `(q^e;q)_inf` at q < 1, `1/Γ(e)` at q = 1.
fn inf(k: &Kernel, ev: &NumEval, e: &CRat) -> Complex {
    if ev.nome.is_one() {
        k.recip_gamma(&k.crat(e)).unwrap().value
    } else {
        k.qpoch_infinite(&ev.qpow_exact(e), ev.q()).unwrap().value
    }
}

/// Rank-one Bailey/Dougall constant, assembled factor by factor.
fn bailey_constant(k: &Kernel, p: &ParameterSet) -> Complex {
    let ev = NumEval::new(k, p.q.clone(), p.binding(&[]));
    let one = CRat::int(1);
    let mut v = inf(k, &ev, &one);
    for r in 0..4 {
        for s in r + 1..4 {
            v = &v * &inf(k, &ev, &(&(&one + &p.couplings[r]) + &p.couplings[s]));
        }
    }
    &v / &inf(k, &ev, &(&one + &p.coupling_sum()))
}

#[test]
fn macdonald_rank_one_is_bailey_constant() {
    let k = kernel();
    for q in ["0.5", "1"] {
        let p = params(1, q, rat(7, 20), test_couplings());
        assert!(rel(&macdonald_rhs(&k, &p).unwrap(), &bailey_constant(&k, &p)) < 1e-60);
    }
}

#[test]
fn macdonald_at_zero_coupling_g_squares() {
    let k = kernel();
    for q in ["0.5", "1"] {
        let one = macdonald_rhs(&k, &params(1, q, CRat::zero(), test_couplings())).unwrap();
        let two = macdonald_rhs(&k, &params(2, q, CRat::zero(), test_couplings())).unwrap();
        assert!(rel(&two, &(&one * &one)) < 1e-60);
    }
}

#[test]
fn rogers_rank_one_closed_form() {
    let k = kernel();
    let cs = [rat(1, 10), rat(1, 5), rat(3, 20), rat(-9, 20)];
    for q in ["0.5", "1"] {
        let p = params(1, q, CRat::zero(), cs.clone());
        let ev = NumEval::new(&k, p.q.clone(), p.binding(&[]));
        let one = CRat::int(1);
        let [a, b, c, d] = cs.clone();
        let two_a = &a + &a;
        let mut num = inf(&k, &ev, &(&one + &two_a));
        for (x, y) in [(&b, &c), (&b, &d), (&c, &d)] {
            num = &num * &inf(&k, &ev, &(&(&one - x) - y));
        }
        let mut den = inf(&k, &ev, &(&one - &p.coupling_sum()));
        for x in [&b, &c, &d] {
            den = &den * &inf(&k, &ev, &(&(&one + &a) - x));
        }
        assert!(rel(&rogers_rhs(&k, &p).unwrap(), &(&num / &den)) < 1e-60);
        // g = 0 factorizes into copies of the rank-one value
        let r1 = rogers_rhs(&k, &p).unwrap();
        let r3 = rogers_rhs(&k, &params(3, q, CRat::zero(), cs.clone())).unwrap();
        assert!(rel(&r3, &(&(&r1 * &r1) * &r1)) < 1e-60);
    }
}

#[test]
fn terminating_small_cases() {
    let k = kernel();
    // N = 0 gives empty products
    let p0 = params(1, "0.5", CRat::zero(), [rat(1, 10), rat(-1, 10), rat(3, 10), rat(2, 5)]);
    let v = terminating_rhs(&k, &p0, 0, TerminatingForm::LineOne).unwrap();
    assert!(rel(&v, &k.one()) < 1e-70);

    // N = 1: the two-term sum written out by hand in f64
    let (a, c, d) = (0.1f64, 0.3, 0.4);
    let q = 0.5f64;
    let p1 = params(1, "0.5", CRat::zero(), [rat(1, 10), rat(-11, 10), rat(3, 10), rat(2, 5)]);
    let qp = |e: f64| q.powf(e);
    let hand = 1.0
        + (1.0 - qp(-1.0)) * (1.0 - qp(a + c)) * (1.0 - qp(a + d)) * qp(2.0 - c - d)
            / ((1.0 - q) * (1.0 - qp(1.0 + a - c)) * (1.0 - qp(1.0 + a - d)));
    let ev = NumEval::new(&k, p1.q.clone(), p1.binding(&[]));
    let term = terms::rogers(1, &p1.perm);
    let mut ct = CompiledTerm::compile(&term, &ev, 3).unwrap();
    let s = sum_alcove(&k, 1, 1, |lam| ct.eval(&ev, lam)).unwrap();
    assert_eq!(s.terms_evaluated, 2);
    assert_eq!(s.tail_bound(), 0.0);
    assert!((s.value.to_f64().0 - hand).abs() < 1e-13 * hand.abs());
    let rhs = terminating_rhs(&k, &p1, 1, TerminatingForm::LineOne).unwrap();
    assert!((rhs.to_f64().0 - hand).abs() < 1e-13 * hand.abs());

    // q = 1, N = 1: 1 + (a+1+... ) by hand
    let p1d = params(1, "1", CRat::zero(), [rat(1, 10), rat(-11, 10), rat(3, 10), rat(2, 5)]);
    let hand_d = 1.0 + (2.0 * a + 2.0) / (2.0 * a) * (2.0 * a) * (-1.0) * (a + c) * (a + d)
        / (1.0 * (2.0 + 2.0 * a) * (1.0 + a - c) * (1.0 + a - d));
    let rhs_d = terminating_rhs(&k, &p1d, 1, TerminatingForm::LineOne).unwrap();
    assert!((rhs_d.to_f64().0 - hand_d).abs() < 1e-13 * hand_d.abs());
}

#[test]
fn gustafson_reductions() {
    let k = kernel();
    // rank one with four couplings is the Bailey constant
    let gp = GustafsonParams::new(1, Nome::parse("0.5").unwrap(), test_couplings().to_vec()).unwrap();
    let p = params(1, "0.5", CRat::zero(), test_couplings());
    assert!(rel(&gustafson_rhs(&k, &gp).unwrap(), &bailey_constant(&k, &p)) < 1e-60);

    // zero couplings: (q;q)_inf^{n - 1 + C(2n+2, 2)}
    let gp0 = GustafsonParams::new(2, Nome::parse("0.5").unwrap(), vec![CRat::zero(); 6]).unwrap();
    let q = k.complex(0.5, 0.0);
    let qq = k.qpoch_infinite(&q, &q).unwrap().value;
    let mut expect = k.one();
    for _ in 0..(2 - 1 + 15) {
        expect = &expect * &qq;
    }
    assert!(rel(&gustafson_rhs(&k, &gp0).unwrap(), &expect) < 1e-60);

    // factor by factor at a generic point
    let cs: Vec<CRat> = [1, 2, 3, 4, 5, 6].iter().map(|&i| rat(i, 20)).collect();
    let gp = GustafsonParams::new(2, Nome::parse("0.5").unwrap(), cs.clone()).unwrap();
    let ev = NumEval::new(&k, gp.q.clone(), gp.binding(&[]));
    let one = CRat::int(1);
    let mut v = &qq * &qq;
    for r in 0..6 {
        for s in r + 1..6 {
            v = &v * &inf(&k, &ev, &(&(&one + &cs[r]) + &cs[s]));
        }
    }
    let total = cs.iter().fold(one.clone(), |acc, c| &acc + c);
    v = &v / &inf(&k, &ev, &total);
    assert!(rel(&gustafson_rhs(&k, &gp).unwrap(), &v) < 1e-60);
}

#[test]
fn recurrence_base_case_is_bailey_constant() {
    let k = kernel();
    for q in ["0.5", "1"] {
        let p = params(1, q, rat(7, 20), test_couplings());
        let ev = NumEval::new(&k, p.q.clone(), p.binding(&[]));
        let f = terms::recurrence_factor(1).eval_at_origin(&ev).unwrap();
        assert!(rel(&f, &bailey_constant(&k, &p)) < 1e-60);
    }
}

#[test]
fn bailey_test_point_within_radius() {
    let k = kernel();
    let p = params(1, "0.5", CRat::zero(), test_couplings());
    let z = [rat(37, 100)];
    let ev = NumEval::new(&k, p.q.clone(), p.binding(&z));
    let term = terms::bailey(1, &p.perm);
    let mut ct = CompiledTerm::compile(&term, &ev, 8).unwrap();
    let opts = SumOptions { tol: 1e-26, max_radius: 120 };
    let s = sum_bilateral(&k, 1, &TailModel::bilateral(&p), opts, |lam| ct.eval(&ev, lam)).unwrap();
    // r.h.s. from infinite products only
    let one = CRat::int(1);
    let z0 = &z[0];
    let mut rhs = &inf(&k, &ev, &(&one + &(z0 + z0))) * &inf(&k, &ev, &(&one - &(z0 + z0)));
    for gr in &p.couplings {
        rhs = &rhs / &inf(&k, &ev, &(&(&one + gr) + z0));
        rhs = &rhs / &inf(&k, &ev, &(&(&one + gr) - z0));
    }
    rhs = &rhs * &bailey_constant(&k, &p);
    assert!(rel(&s.value, &rhs) < 1e-25);
    assert!(s.radius_used <= 120);
    assert!(rel(&bailey_rhs(&k, &p, &z).unwrap(), &rhs) < 1e-60);
}

#[test]
fn shell_order_matches_box_order() {
    let k = kernel();
    let p = params(2, "0.5", rat(7, 20), test_couplings());
    let z = [rat(37, 100), rat(11, 100)];
    let ev = NumEval::new(&k, p.q.clone(), p.binding(&z));
    let term = terms::macdonald(2);
    let mut ct = CompiledTerm::compile(&term, &ev, 8).unwrap();
    let opts = SumOptions { tol: 1e-30, max_radius: 200 };
    let s = sum_bilateral(&k, 2, &TailModel::bilateral(&p), opts, |lam| ct.eval(&ev, lam)).unwrap();
    let b = sum_box(&k, 2, s.radius_used, |lam| ct.eval(&ev, lam)).unwrap();
    assert!(compare(&s.value, &b).0 <= 1e-60 * s.value.abs_f64());
}

#[test]
fn z_independence_examples() {
    let p = params(2, "0.5", rat(7, 20), test_couplings());
    let opts = VerifyOptions { tol: Some(1e-20), ..Default::default() };
    let z = [rat(37, 100), rat(11, 100)];
    let shifted = [rat(47, 100), rat(21, 100)];
    let flipped = [rat(-11, 100), rat(37, 100)];
    for other in [&shifted[..], &flipped[..]] {
        let r = z_independence_check(&p, &z, other, &opts);
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn classical_examples() {
    let opts = VerifyOptions { tol: Some(1e-40), ..Default::default() };
    // terminating 6φ5 at N = 2 and 5F4 at N = 1
    let r = vwp_core::identities::classical_n1(
        Classical::Terminating(2),
        &params(1, "0.5", CRat::zero(), [rat(1, 10), rat(-21, 10), rat(3, 10), rat(2, 5)]),
        None,
        &opts,
    );
    assert!(r.passed(), "{r:?}");
    assert_eq!(r.terms_evaluated, 6);
    let r = vwp_core::identities::classical_n1(
        Classical::Terminating(1),
        &params(1, "1", CRat::zero(), [rat(1, 10), rat(-11, 10), rat(3, 10), rat(2, 5)]),
        None,
        &opts,
    );
    assert!(r.passed(), "{r:?}");
}

#[test]
fn recurrence_rank_two() {
    let p = params(2, "0.5", rat(7, 20), test_couplings());
    let job = Job::Standard { kind: IdentityKind::Recurrence, params: p, z: None, big_n: None };
    let r = verify(&job, &VerifyOptions { tol: Some(1e-12), ..Default::default() });
    assert!(r.passed() && r.rel_err < 1e-12, "{r:?}");
}

#[test]
fn terminating_forms_equal_at_q_one() {
    let k = kernel();
    let g = rat(3, 10);
    // (n-1)g + g_a + g_b + N = 0 with n = 2, N = 3
    let p = params(2, "1", g, [rat(1, 10), rat(-34, 10), rat(3, 10), rat(2, 5)]);
    let base = terminating_rhs(&k, &p, 3, TerminatingForm::LineOne).unwrap();
    for f in [TerminatingForm::LineTwo, TerminatingForm::Simplified, TerminatingForm::SimplifiedTwo] {
        assert!(rel(&terminating_rhs(&k, &p, 3, f).unwrap(), &base) < 1e-60);
    }
}
