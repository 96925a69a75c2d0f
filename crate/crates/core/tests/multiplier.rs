use ordconv::algebra::AlgebraParams;
use ordconv::dsl::parse_function;
use ordconv::multiplier::*;
use ordconv::scalar::{parse_rational, Extended};
use ordconv::{Error, ExactFn, Rational};

fn q(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn f(s: &str) -> ExactFn {
    parse_function(s).unwrap()
}

fn params(r: &str, p: &str) -> AlgebraParams {
    AlgebraParams::new(r.parse().unwrap(), p.parse().unwrap()).unwrap()
}

const EX5II: &str = "0..1: 1; 1..inf: x^(-2/3)";
const EX8: &str = "0..1: 1; 1..inf: x^(1/2)";

fn status(conds: &[ConditionResult], name: &str) -> ConditionStatus {
    conds
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no condition {name}"))
        .status
}

#[test]
fn absolute_continuity_examples() {
    assert!(check_absolutely_continuous(&f(EX5II)).holds());
    let unbounded = check_absolutely_continuous(&f("0..1: x^(-1/2); 1..inf: 1"));
    assert!(unbounded.fails());
    let jump = check_absolutely_continuous(&f("0..1: 1; 1..inf: 2"));
    assert!(jump.fails());
    match jump.evidence.certificate {
        Some(Certificate::Jump { at, left, right }) => {
            assert_eq!(at, q("1"));
            assert_eq!((left, right), (1.0, 2.0));
        }
        other => panic!("expected a jump certificate, got {other:?}"),
    }
    assert!(check_continuous(&f("0..1: 1; 1..inf: 2")).fails());
}

#[test]
fn variation_growth_examples() {
    // V(x) = 1 - x^(-2/3) on [1, inf): bounded.
    let v = tv_growth_exponent(&f(EX5II)).unwrap();
    assert_eq!(v.exponent, q("0"));
    assert!(v.is_big_o(&q("1/3")));
    // V(x) = x^(1/2) - 1.
    let v = tv_growth_exponent(&f(EX8)).unwrap();
    assert_eq!((v.exponent.clone(), v.log_power.clone()), (q("1/2"), q("0")));
    assert_eq!(v.coeff, 1.0);
    assert!(tv_growth_exponent(&ExactFn::constant(q("5"))).is_none());
}

#[test]
fn growth_predicates_at_the_critical_exponent() {
    let plain = Asymptotic {
        exponent: q("1/3"),
        log_power: q("0"),
        coeff: 1.0,
    };
    let logged = Asymptotic {
        exponent: q("1/3"),
        log_power: q("1"),
        coeff: 1.0,
    };
    assert!(plain.is_big_o(&q("1/3")));
    assert!(!logged.is_big_o(&q("1/3")));
    assert!(logged.is_little_o_for_all_eps(&q("1/3")));
    assert!(!logged.is_little_o_for_all_eps(&q("1/4")));
}

#[test]
fn surrogate_examples() {
    let pr = params("3", "3/2");
    let c = check_mphi_prime_surrogate(&f(EX5II), &pr, &q("1"), &Extended::Finite(q("3/2"))).unwrap();
    assert!(c.holds());
    // ||(2/3) x^(-5/3)||_{3/2} on (1, inf) = (2/3) (2/3)^(2/3).
    let want = (2.0f64 / 3.0).powf(5.0 / 3.0);
    let got = c.evidence.values["bound"].as_f64().unwrap();
    assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");

    let c = check_mphi_prime_surrogate(&ExactFn::constant(q("1")), &pr, &q("1"), &Extended::Finite(q("1"))).unwrap();
    assert!(c.holds());
    assert_eq!(c.evidence.values["bound"].as_f64().unwrap(), 0.0);

    let linear = f("0..1: 1; 1..inf: x");
    let c = check_mphi_prime_surrogate(&linear, &pr, &q("1"), &Extended::Finite(q("3/2"))).unwrap();
    assert!(c.fails());
    assert!(search_mphi_prime_surrogate(&linear, &pr).status == ConditionStatus::Unknown);

    let err = check_mphi_prime_surrogate(&linear, &pr, &q("1"), &Extended::Finite(q("2")));
    assert!(matches!(err, Err(Error::ExponentOutOfRange { .. })));
}

#[test]
fn necessary_r_gt_p() {
    let pr = params("3", "3/2");
    let one = check_necessary_r_gt_p(&ExactFn::constant(q("1")), &pr).unwrap();
    assert!(one.iter().all(ConditionResult::holds));
    let ex = check_necessary_r_gt_p(&f(EX5II), &pr).unwrap();
    assert!(ex.iter().all(ConditionResult::holds));
    let linear = f("0..1: 1; 1..inf: x");
    let nec = check_necessary_r_gt_p(&linear, &pr).unwrap();
    assert_eq!(status(&nec, "bounded"), ConditionStatus::Fails);
    assert_eq!(classify(&linear, &pr).unwrap().verdict, Verdict::NotMultiplier);
}

#[test]
fn sufficient_r_gt_p() {
    let pr = params("3", "3/2");
    let (conds, bound) = check_sufficient_r_gt_p(&f(EX5II), &pr).unwrap();
    assert!(conds.iter().all(ConditionResult::holds));
    // ||phi||_3 = 2^(1/3), ||phi||_inf = 1, surrogate (2/3)^(5/3).
    let want = 2f64.powf(1.0 / 3.0) + 1.0 + (2.0f64 / 3.0).powf(5.0 / 3.0);
    assert!((bound.unwrap() - want).abs() < 1e-12);

    let (conds, bound) = check_sufficient_r_gt_p(&ExactFn::constant(q("1")), &pr).unwrap();
    assert_eq!(status(&conds, "phi-in-Lv"), ConditionStatus::Fails);
    assert!(bound.is_none());

    let zero = classify(&ExactFn::zero(), &pr).unwrap();
    assert_eq!(zero.verdict, Verdict::Multiplier);
    assert_eq!(zero.norm_upper_bound, Some(0.0));
    assert_eq!(zero.norm_lower_bound, Some(0.0));
}

#[test]
fn sufficient_r_lt_p() {
    let pr = params("3/2", "3");
    let one = classify(&ExactFn::constant(q("1")), &pr).unwrap();
    assert_eq!(one.verdict, Verdict::Multiplier);
    assert_eq!(one.norm_upper_bound, Some(2.0));

    let (conds, _) = check_sufficient_r_lt_p(&f(EX8), &pr).unwrap();
    let c = conds.iter().find(|c| c.name == "bounded-or-in-Lp").unwrap();
    assert!(c.fails());

    assert_eq!(classify(&f(EX5II), &pr).unwrap().verdict, Verdict::Multiplier);
}

#[test]
fn necessary_r_lt_p() {
    let pr = params("3/2", "3");
    let nec = check_necessary_r_lt_p(&f(EX8), &pr).unwrap();
    assert_eq!(status(&nec, "continuous"), ConditionStatus::Holds);
    assert_eq!(status(&nec, "abs-continuous"), ConditionStatus::Holds);
    assert_eq!(status(&nec, "locally-Lp"), ConditionStatus::Holds);
    assert_eq!(status(&nec, "tv-growth"), ConditionStatus::Holds);
    // ||phi|[0,x]||_3^3 = 1 + (x^(5/2) - 1)/(5/2), so the growth is x^(5/6),
    // above the admissible 1/r = 2/3.
    let g = lp_growth(&f(EX8), &Extended::Finite(q("3"))).unwrap();
    assert_eq!(g.exponent, q("5/6"));
    assert!((g.coeff - 0.4f64.powf(1.0 / 3.0)).abs() < 1e-12);
    assert_eq!(status(&nec, "Lp-growth"), ConditionStatus::Fails);

    let jump = check_necessary_r_lt_p(&f("0..1: 1; 1..inf: 2"), &pr).unwrap();
    assert_eq!(status(&jump, "continuous"), ConditionStatus::Fails);

    let c = check_locally_lp(&f("0..1: x^(-1/2); 1..inf: 1"), &Extended::Finite(q("3")));
    assert!(c.fails());
    match c.evidence.certificate {
        Some(Certificate::Divergent { divergence, .. }) => assert_eq!(divergence.exponent, q("-3/2")),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn witness_examples() {
    let w = witness_search(&ExactFn::constant(q("1")), &params("3", "3/2")).unwrap();
    assert_eq!(w.alpha, q("1/2"));
    assert_eq!(w.failure.exponent, q("-3/4"));
    assert!(verify_witness(&ExactFn::constant(q("1")), &params("3", "3/2"), &w).unwrap());

    let w = witness_search(&f(EX8), &params("3/2", "3")).unwrap();
    assert_eq!(w.alpha, q("5/6"));
    let tail = w.product_tail.unwrap();
    assert_eq!((tail.exponent, tail.coeff), (q("-1/3"), 1.0));

    assert!(witness_search(&f(EX5II), &params("3", "3/2")).is_none());
}

#[test]
fn classify_examples() {
    let r = classify(&ExactFn::constant(q("1")), &params("3", "3/2")).unwrap();
    assert_eq!(r.verdict, Verdict::NotMultiplier);
    assert!(r.witness.is_some());
    assert!(r.norm_upper_bound.is_none());

    let r = classify(&f(EX5II), &params("3", "3/2")).unwrap();
    assert_eq!(r.verdict, Verdict::Multiplier);
    assert!(r.norm_lower_bound.unwrap() <= r.norm_upper_bound.unwrap());

    let r = classify(&f(EX8), &params("3/2", "3")).unwrap();
    assert_eq!(r.verdict, Verdict::NotMultiplier);

    let r = classify(&f("0..1: 1; 1..inf: x^(-1/3)"), &params("3", "3/2")).unwrap();
    assert_eq!(r.verdict, Verdict::Undetermined);
}

#[test]
fn equal_exponents() {
    let pr = params("2", "2");
    let r = classify(&f(EX5II), &pr).unwrap();
    assert_eq!(r.verdict, Verdict::Multiplier);
    assert!(r.necessary.iter().all(|c| c.kind == ConditionKind::Characterizing));
    assert_eq!(
        classify(&f("0..1: 1; 1..inf: 2"), &pr).unwrap().verdict,
        Verdict::NotMultiplier
    );
    assert_eq!(
        classify(&f("0..1: 1; 1..inf: x"), &pr).unwrap().verdict,
        Verdict::NotMultiplier
    );
}

#[test]
fn operator_lower_bound_examples() {
    let pr = params("2", "2");
    let pool = default_witness_pool::<Rational>(&pr);
    assert_eq!(pool.len(), 20);
    assert_eq!(operator_norm_lower_bound(&ExactFn::zero(), &pr, &pool).unwrap(), 0.0);
    let id = operator_norm_lower_bound(&ExactFn::constant(q("1")), &pr, &pool).unwrap();
    assert!((id - 1.0).abs() < 1e-12, "{id}");
    let c = operator_norm_lower_bound(&ExactFn::constant(q("3")), &pr, &pool).unwrap();
    assert!((c - 3.0).abs() < 1e-12, "{c}");
}

#[test]
fn point_evaluation_constant() {
    for p in ["1", "3/2", "2", "4", "inf"] {
        let pe: Extended = p.parse().unwrap();
        let mut prev = 0.0;
        for k in -20..=20 {
            let x = 2f64.powi(k);
            let v = point_eval_constant(x, &pe);
            assert!(v <= 1.0 && v > 0.0);
            assert!(v >= prev, "p = {p}, x = {x}: {v} < {prev}");
            prev = v;
        }
    }
    let pool = point_eval_pool(1.0, &Extended::Finite(q("1")));
    let best_pair = pool
        .iter()
        .filter(|v| v.family == "box-pair")
        .map(|v| v.value)
        .fold(0.0, f64::max);
    assert!(point_eval_constant(1.0, &Extended::Finite(q("1"))) >= best_pair);
    // f = 1 on (1-d, 1), -1 on (1, 1+d): ||f||_1 = 2d, ||f^||_1 = d^2.
    let d = 0.5f64;
    assert!(best_pair >= d / (2.0 * d + d * d));
}

#[test]
fn report_serializes_certificates() {
    let r = classify(&ExactFn::constant(q("1")), &params("3", "3/2")).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["verdict"], "NotMultiplier");
    assert_eq!(v["witness"]["failure"]["exponent"], "-3/4");
    let conds = v["conditions"].as_array().unwrap();
    assert_eq!(conds.len(), r.necessary.len() + r.sufficient.len());
    let lv = conds.iter().find(|c| c["name"] == "phi-in-Lv").unwrap();
    assert_eq!(lv["evidence"]["certificate"]["kind"], "divergent");
}
