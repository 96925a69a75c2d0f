//! Acceptance criteria, one `[PASS]`/`[FAIL]` line each. Exits nonzero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ordconv::multiplier::{classify, ConditionKind, ConditionStatus, Verdict};
use ordconv::oracle::QuadConfig;
use ordconv::random::DEFAULT_SEED;
use ordconv::scalar::parse_rational;
use ordconv::scenario::{one_then_power, run_scenario, ScenarioReport};
use ordconv::symfunc::Endpoint;
use ordconv::{ExactFn, Rational};

struct Outcome {
    passed: bool,
    detail: String,
}

fn q(s: &str) -> Rational {
    parse_rational(s).expect("literal")
}

fn scenario(id: &str, limit: Option<Duration>) -> Outcome {
    let start = Instant::now();
    let rep: ScenarioReport = match run_scenario(id, &BTreeMap::new(), DEFAULT_SEED, &QuadConfig::default()) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("error: {e}"),
            }
        }
    };
    let elapsed = start.elapsed();
    let failed: Vec<String> = rep
        .assertions
        .iter()
        .filter(|a| !a.passed)
        .map(|a| format!("{} ({})", a.name, a.detail))
        .collect();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let mut detail = if failed.is_empty() {
        format!("{} assertions hold", rep.assertions.len())
    } else {
        format!("failed: {}", failed.join("; "))
    };
    detail.push_str(&format!(", {:.2?}", elapsed));
    if let Some(l) = limit {
        detail.push_str(&format!(" (limit {l:?})"));
    }
    Outcome {
        passed: rep.passed && in_time,
        detail,
    }
}

fn all_necessary_hold(rep: &ordconv::multiplier::MultiplierReport<Rational>) -> (bool, String) {
    let bad: Vec<String> = rep
        .necessary
        .iter()
        .filter(|c| c.status != ConditionStatus::Holds)
        .map(|c| format!("{} {:?}: {}", c.name, c.status, c.evidence.text))
        .collect();
    (bad.is_empty(), bad.join("; "))
}

fn example_5i() -> Outcome {
    let params = ordconv::algebra::AlgebraParams::finite(q("3"), q("3/2")).expect("valid");
    let rep = match classify(&ExactFn::constant(q("1")), &params) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("error: {e}"),
            }
        }
    };
    let (nec_ok, nec_bad) = all_necessary_hold(&rep);
    let w = rep.witness.as_ref();
    let cert_ok = w.is_some_and(|w| {
        w.alpha == q("1/2") && w.failure.endpoint == Endpoint::Infinity && w.failure.exponent == q("-3/4")
    });
    Outcome {
        passed: rep.verdict == Verdict::NotMultiplier && cert_ok && nec_ok,
        detail: format!(
            "verdict {:?}, witness alpha {}, certificate exponent {}{}",
            rep.verdict,
            w.map_or("-".into(), |w| w.alpha.to_string()),
            w.map_or("-".into(), |w| w.failure.exponent.to_string()),
            if nec_ok {
                String::new()
            } else {
                format!(", necessary not all Holds: {nec_bad}")
            }
        ),
    }
}

fn example_5ii() -> Outcome {
    let params = ordconv::algebra::AlgebraParams::finite(q("3"), q("3/2")).expect("valid");
    let phi = one_then_power(q("-2/3"));
    let rep = match classify(&phi, &params) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("error: {e}"),
            }
        }
    };
    let sur = rep.condition("mphi-prime-surrogate", ConditionKind::Sufficient);
    let sur_ok = sur.is_some_and(|c| c.holds() && c.evidence.values.get("q").and_then(|v| v.as_str()) == Some("3/2"));
    let upper = rep.norm_upper_bound;
    Outcome {
        passed: rep.verdict == Verdict::Multiplier && upper.is_some_and(f64::is_finite) && sur_ok,
        detail: format!(
            "verdict {:?}, upper bound {:?}, surrogate: {}",
            rep.verdict,
            upper,
            sur.map_or("missing".into(), |c| c.evidence.text.clone())
        ),
    }
}

fn example_8() -> Outcome {
    let params = ordconv::algebra::AlgebraParams::finite(q("3/2"), q("3")).expect("valid");
    let phi = one_then_power(q("1/2"));
    let rep = match classify(&phi, &params) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("error: {e}"),
            }
        }
    };
    let tail = rep.witness.as_ref().and_then(|w| w.product_tail.clone());
    let tail_ok = tail
        .as_ref()
        .is_some_and(|t| t.exponent == q("-1/3") && t.log_power == q("0") && t.coeff == 1.0);
    let (nec_ok, nec_bad) = all_necessary_hold(&rep);
    let tv = ordconv::multiplier::tv_growth_exponent(&phi);
    let tv_ok = tv
        .as_ref()
        .is_some_and(|g| g.exponent == q("1/2") && g.log_power == q("0"));
    Outcome {
        passed: rep.verdict == Verdict::NotMultiplier && tail_ok && nec_ok && tv_ok,
        detail: format!(
            "verdict {:?}, witness tail {}, tv exponent {}, {}",
            rep.verdict,
            tail.map_or("-".into(), |t| t.to_string()),
            tv.map_or("-".into(), |g| g.exponent.to_string()),
            if nec_ok {
                "all necessary Hold".to_string()
            } else {
                format!("necessary not all Holds: {nec_bad}")
            }
        ),
    }
}

type Criterion = Box<dyn Fn() -> Outcome>;

fn homomorphism() -> Outcome {
    scenario("homomorphism", Some(Duration::from_secs(10)))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 homomorphism", Box::new(homomorphism)),
        ("2 unit-ball nesting", Box::new(|| scenario("prop2", None))),
        ("3 constant phi, r=3, p=3/2", Box::new(example_5i)),
        ("4 decaying phi, r=3, p=3/2", Box::new(example_5ii)),
        ("5 growing phi, r=3/2, p=3", Box::new(example_8)),
        (
            "6 tent norm formula",
            Box::new(|| scenario("thm7-tent", Some(Duration::from_secs(5)))),
        ),
        ("7 bound consistency", Box::new(|| scenario("thm3-bound", None))),
        ("8 oracle agreement", Box::new(|| scenario("oracle-agreement", None))),
        ("9 approximate identity", Box::new(|| scenario("approx-identity", None))),
        ("10 regime embedding", Box::new(|| scenario("regime-embedding", None))),
    ];
    let mut failures = 0;
    for (name, run) in &criteria {
        let out = run();
        if !out.passed {
            failures += 1;
        }
        println!("[{}] {name}: {}", if out.passed { "PASS" } else { "FAIL" }, out.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
