//! Named end-to-end checks with pass/fail assertions.
//!
//! Each scenario takes `key=value` overrides and a seed, and produces a
//! [`ScenarioReport`] whose JSON form is deterministic for fixed inputs.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{ap_norm_with, gelfand_transform, lp_norm_with, order_convolve, tent, AlgebraParams};
use crate::error::{Error, Result};
use crate::multiplier::{
    classify_with, default_witness_pool, operator_norm_lower_bound, tv_growth_exponent, verify_witness,
    ClassifyOptions, ConditionKind, ConditionStatus, Verdict,
};
use crate::oracle::{quad_lp_norm, sample_compare, QuadConfig};
use crate::random::{random_ap, random_bounded_phi, random_l1_pair, random_pure_power, random_tent_params, rng};
use crate::scalar::{parse_rational, rational_to_f64, Extended, Rational};
use crate::symfunc::{antiderivative_from_zero, Endpoint, Piece, PiecewiseFn, Term};
use crate::ExactFn;

/// Scenario ids accepted by [`run_scenario`].
pub const SCENARIO_IDS: &[&str] = &[
    "prop2",
    "ex5i",
    "ex5ii",
    "ex8",
    "thm7-tent",
    "thm3-bound",
    "homomorphism",
    "approx-identity",
    "oracle-agreement",
    "regime-embedding",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub id: String,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub values: BTreeMap<String, Value>,
}

impl ScenarioReport {
    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }
}

struct Builder {
    params: BTreeMap<String, String>,
    overrides: BTreeMap<String, String>,
    assertions: Vec<Assertion>,
    values: BTreeMap<String, Value>,
}

impl Builder {
    fn new(overrides: &BTreeMap<String, String>) -> Self {
        Builder {
            params: BTreeMap::new(),
            overrides: overrides.clone(),
            assertions: Vec::new(),
            values: BTreeMap::new(),
        }
    }

    fn raw(&mut self, key: &str, default: &str) -> String {
        let v = self.overrides.remove(key).unwrap_or_else(|| default.to_string());
        self.params.insert(key.to_string(), v.clone());
        v
    }

    fn rational(&mut self, key: &str, default: &str) -> Result<Rational> {
        parse_rational(&self.raw(key, default))
    }

    fn exponent(&mut self, key: &str, default: &str) -> Result<Extended> {
        self.raw(key, default).parse()
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize> {
        let v = self.raw(key, &default.to_string());
        v.parse()
            .map_err(|_| Error::InvalidParameter(format!("{key} must be a nonnegative integer, got {v:?}")))
    }

    fn has(&self, key: &str) -> bool {
        self.overrides.contains_key(key)
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    fn value(&mut self, key: &str, v: impl Serialize) {
        self.values
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    fn finish(self, id: &str, seed: u64) -> Result<ScenarioReport> {
        if let Some(k) = self.overrides.keys().next() {
            return Err(Error::InvalidParameter(format!(
                "unknown parameter {k:?} for scenario {id}"
            )));
        }
        let passed = self.assertions.iter().all(|a| a.passed);
        Ok(ScenarioReport {
            id: id.to_string(),
            seed,
            params: self.params,
            passed,
            assertions: self.assertions,
            values: self.values,
        })
    }
}

/// Parses `k=v` pairs separated by commas or whitespace.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for item in text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
    {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got {item:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn two_piece(head: Vec<Term<Rational>>, tail: Vec<Term<Rational>>) -> ExactFn {
    PiecewiseFn::from_pieces(vec![
        Piece::new(Rational::zero(), Rational::one(), head),
        Piece::new(Rational::one(), Extended::Infinity, tail),
    ])
    .expect("valid partition")
}

/// `1` on `(0,1)`, `x^e` on `[1, inf)`.
pub fn one_then_power(e: Rational) -> ExactFn {
    two_piece(
        vec![Term::constant(Rational::one())],
        vec![Term::power(Rational::one(), e)],
    )
}

fn no_bounds() -> ClassifyOptions<Rational> {
    ClassifyOptions {
        pool: None,
        lower_bound: false,
    }
}

/// Runs scenario `id` with `key=value` overrides.
pub fn run_scenario(
    id: &str,
    overrides: &BTreeMap<String, String>,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<ScenarioReport> {
    let mut b = Builder::new(overrides);
    match id {
        "prop2" => prop2(&mut b, seed, cfg)?,
        "ex5i" => ex5i(&mut b)?,
        "ex5ii" => ex5ii(&mut b)?,
        "ex8" => ex8(&mut b)?,
        "thm7-tent" => tent_norm(&mut b, seed, cfg)?,
        "thm3-bound" => sup_bound(&mut b)?,
        "homomorphism" => homomorphism(&mut b, seed)?,
        "approx-identity" => approx_identity(&mut b, cfg)?,
        "oracle-agreement" => oracle_agreement(&mut b, seed, cfg)?,
        "regime-embedding" => regime_embedding(&mut b, seed)?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "unknown scenario {id:?}; expected one of {}",
                SCENARIO_IDS.join(", ")
            )))
        }
    }
    b.finish(id, seed)
}

fn prop2(b: &mut Builder, seed: u64, cfg: &QuadConfig) -> Result<()> {
    let count = b.count("count", 50)?;
    let pairs: Vec<(Rational, Rational)> = if b.has("p") || b.has("r") {
        vec![(b.rational("p", "1")?, b.rational("r", "3/2")?)]
    } else {
        ["1:3/2", "3/2:3", "2:4"]
            .iter()
            .map(|s| {
                let (p, r) = s.split_once(':').expect("pair");
                (parse_rational(p).expect("lit"), parse_rational(r).expect("lit"))
            })
            .collect()
    };
    for (p, r) in pairs {
        if r <= p || p < Rational::one() {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= p < r, got p = {p}, r = {r}"
            )));
        }
        let (pe, re) = (Extended::Finite(p.clone()), Extended::Finite(r.clone()));
        let mut g = rng(seed);
        let (mut worst_ap, mut worst_hat, mut worst_unit) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..count {
            let (f, _) = random_ap(&mut g);
            let n = ap_norm_with(&f, &pe, cfg)?;
            let inv = Rational::from_float(1.0 / n.value)
                .ok_or_else(|| Error::Internal(format!("non-finite norm {}", n.value)))?;
            let scaled = f.scale(&inv);
            worst_unit = worst_unit.max((ap_norm_with(&scaled, &pe, cfg)?.value - 1.0).abs());
            worst_ap = worst_ap.max(ap_norm_with(&scaled, &re, cfg)?.value);
            let fhat = antiderivative_from_zero(&scaled)?;
            worst_hat = worst_hat.max(lp_norm_with(&fhat, &re, cfg).value);
        }
        let tag = format!("p={p},r={r}");
        b.check(
            &format!("{tag}: |||f|||_r < 2"),
            worst_ap < 2.0,
            format!("max over {count} functions: {worst_ap}"),
        );
        b.check(
            &format!("{tag}: ||f^||_r < 1"),
            worst_hat < 1.0,
            format!("max over {count} functions: {worst_hat}"),
        );
        b.value(&format!("{tag}: max |||f|||_r"), worst_ap);
        b.value(&format!("{tag}: max ||f^||_r"), worst_hat);
        b.value(&format!("{tag}: max | |||f|||_p - 1 |"), worst_unit);
    }
    Ok(())
}

fn ex5i(b: &mut Builder) -> Result<()> {
    let r = b.exponent("r", "3")?;
    let p = b.exponent("p", "3/2")?;
    let params = AlgebraParams::new(r, p.clone())?;
    let phi = ExactFn::constant(Rational::one());
    let report = classify_with(&phi, &params, &no_bounds())?;
    b.check(
        "verdict is NotMultiplier",
        report.verdict == Verdict::NotMultiplier,
        format!("{:?}", report.verdict),
    );
    let nec_ok = report.necessary.iter().all(|c| c.status == ConditionStatus::Holds);
    b.check(
        "all necessary conditions hold",
        nec_ok,
        report
            .necessary
            .iter()
            .map(|c| format!("{}: {:?}", c.name, c.status))
            .collect::<Vec<_>>()
            .join(", "),
    );
    match &report.witness {
        Some(w) => {
            let expected = p.finite().map(|pq| -(&w.alpha * pq));
            b.check(
                "witness certificate exponent is -alpha*p at inf",
                w.failure.endpoint == Endpoint::Infinity && Some(&w.failure.exponent) == expected.as_ref(),
                format!("alpha = {}, certificate {}", w.alpha, w.failure),
            );
            b.check(
                "witness re-verifies",
                verify_witness(&phi, &params, w)?,
                "f in A_r, phi f^ not in L_p",
            );
            b.value("alpha", w.alpha.to_string());
            b.value("certificate_exponent", w.failure.exponent.to_string());
        }
        None => b.check("witness found", false, "no witness"),
    }
    Ok(())
}

fn ex5ii(b: &mut Builder) -> Result<()> {
    let r = b.exponent("r", "3")?;
    let p = b.exponent("p", "3/2")?;
    let eps = b.rational("eps", "1/3")?;
    let params = AlgebraParams::new(r, p)?;
    let v = params
        .v()
        .ok_or_else(|| Error::InvalidParameter("requires r > p".into()))?;
    let inv_v = v.reciprocal();
    let phi = one_then_power(-(&inv_v + &eps));
    let report = classify_with(&phi, &params, &ClassifyOptions::default())?;
    b.check(
        "verdict is Multiplier",
        report.verdict == Verdict::Multiplier,
        format!("{:?}", report.verdict),
    );
    let upper = report.norm_upper_bound;
    b.check(
        "upper bound is finite",
        upper.is_some_and(f64::is_finite),
        format!("{upper:?}"),
    );
    let sur = report.condition("mphi-prime-surrogate", ConditionKind::Sufficient);
    let rc = params.r_conjugate().to_string();
    b.check(
        "phi' in L_r'(1, inf)",
        sur.is_some_and(|c| {
            c.holds()
                && c.evidence.values.get("q") == Some(&json!(rc))
                && c.evidence.values.get("a") == Some(&json!("1"))
        }),
        sur.map(|c| c.evidence.text.clone()).unwrap_or_default(),
    );
    if let (Some(u), Some(l)) = (report.norm_upper_bound, report.norm_lower_bound) {
        b.check("lower bound <= upper bound", l <= u, format!("{l} <= {u}"));
    }
    b.value("v", v.to_string());
    b.value("upper", upper);
    b.value("lower", report.norm_lower_bound);
    Ok(())
}

fn ex8(b: &mut Builder) -> Result<()> {
    let r = b.rational("r", "3/2")?;
    let p = b.rational("p", "3")?;
    let eps = b.rational("eps", "1/6")?;
    let params = AlgebraParams::finite(r.clone(), p.clone())?;
    let growth = r.recip() - p.recip() + &eps;
    let phi = one_then_power(growth.clone());
    let report = classify_with(&phi, &params, &no_bounds())?;
    b.check(
        "verdict is NotMultiplier",
        report.verdict == Verdict::NotMultiplier,
        format!("{:?}", report.verdict),
    );
    let failing: Vec<String> = report
        .necessary
        .iter()
        .filter(|c| c.status != ConditionStatus::Holds)
        .map(|c| format!("{} {:?}: {}", c.name, c.status, c.evidence.text))
        .collect();
    b.check(
        "all necessary conditions hold",
        failing.is_empty(),
        if failing.is_empty() {
            "all hold".to_string()
        } else {
            failing.join("; ")
        },
    );
    match &report.witness {
        Some(w) => {
            let tail = w.product_tail.as_ref();
            b.check(
                "witness tail phi f^ = x^(-1/p)",
                tail.is_some_and(|t| t.exponent == -p.recip() && t.log_power.is_zero() && t.coeff == 1.0),
                format!("alpha = {}, tail {:?}", w.alpha, tail.map(ToString::to_string)),
            );
            b.check(
                "witness re-verifies",
                verify_witness(&phi, &params, w)?,
                "f in A_r, phi f^ not in L_p",
            );
            b.value("alpha", w.alpha.to_string());
        }
        None => b.check("witness found", false, "no witness"),
    }
    let tv = tv_growth_exponent(&phi);
    b.check(
        "growth exponent of ||phi'|[0,x]||_1 is 1/r - 1/p + eps",
        tv.as_ref()
            .is_some_and(|g| g.exponent == growth && g.log_power.is_zero()),
        format!("{:?} vs {growth}", tv.as_ref().map(ToString::to_string)),
    );
    b.value("tv_growth_exponent", tv.map(|g| g.exponent.to_string()));
    Ok(())
}

/// `2 + ((gamma + r (beta - alpha)) / (r + 1))^(1/r)`.
pub fn tent_norm_formula(a: &Rational, bb: &Rational, c: &Rational, r: &Rational) -> f64 {
    let rf = rational_to_f64(r);
    let inner = (c + r * (bb - a)) / (r + Rational::one());
    2.0 + rational_to_f64(&inner).powf(1.0 / rf)
}

fn tent_norm(b: &mut Builder, seed: u64, cfg: &QuadConfig) -> Result<()> {
    let a = b.rational("alpha", "1")?;
    let bb = b.rational("beta", "2")?;
    let c = b.rational("gamma", "3")?;
    let r = b.rational("r", "2")?;
    let count = b.count("count", 50)?;
    let tol = 1e-12;
    let mut cases = vec![(a, bb, c, r)];
    let mut g = rng(seed);
    cases.extend((0..count).map(|_| random_tent_params(&mut g)));
    let mut worst = 0.0f64;
    let mut first = None;
    for (a, bb, c, r) in &cases {
        let f = tent::<Rational>(a, bb, c)?;
        let got = ap_norm_with(&f, &Extended::Finite(r.clone()), cfg)?.value;
        let want = tent_norm_formula(a, bb, c, r);
        let rel = (got - want).abs() / want;
        worst = worst.max(rel);
        first.get_or_insert((got, want));
    }
    let (got, want) = first.expect("at least one case");
    b.check(
        "given parameters match the closed form",
        (got - want).abs() <= tol * want,
        format!("{got} vs {want}"),
    );
    b.check(
        "random parameters match the closed form",
        worst <= tol,
        format!("max relative error over {} cases: {worst:e}", cases.len()),
    );
    b.value("norm", got);
    b.value("formula", want);
    b.value("max_rel_error", worst);
    Ok(())
}

fn sup_bound(b: &mut Builder) -> Result<()> {
    let r = b.exponent("r", "3")?;
    let p = b.exponent("p", "3/2")?;
    let eps = b.rational("eps", "1/3")?;
    let params = AlgebraParams::new(r, p)?;
    let v = params
        .v()
        .ok_or_else(|| Error::InvalidParameter("requires r > p".into()))?;
    let phi = one_then_power(-(v.reciprocal() + &eps));
    let report = classify_with(&phi, &params, &no_bounds())?;
    let Some(upper) = report.norm_upper_bound else {
        b.check("upper bound available", false, format!("{:?}", report.verdict));
        return Ok(());
    };
    let pool = default_witness_pool::<Rational>(&params);
    let lower = operator_norm_lower_bound(&phi, &params, &pool)?;
    let sup = crate::algebra::lp_norm(&phi, &Extended::Infinity).value;
    b.check(
        "lower bound <= upper bound",
        lower <= upper,
        format!("{lower} <= {upper} over {} functions", pool.len()),
    );
    b.check(
        "||phi||_inf <= 2 * upper bound",
        sup <= 2.0 * upper,
        format!("{sup} <= {}", 2.0 * upper),
    );
    b.value("lower", lower);
    b.value("upper", upper);
    b.value("sup_norm", sup);
    Ok(())
}

fn homomorphism(b: &mut Builder, seed: u64) -> Result<()> {
    let count = b.count("count", 200)?;
    let mut g = rng(seed);
    let (mut mismatches, mut worst) = (0usize, 0.0f64);
    let mut first_mismatch = None;
    for i in 0..count {
        let (f, h) = random_l1_pair(&mut g);
        let lhs = gelfand_transform(&order_convolve(&f, &h)?)?;
        let rhs = antiderivative_from_zero(&f)?.mul(&antiderivative_from_zero(&h)?);
        if lhs != rhs {
            mismatches += 1;
            first_mismatch.get_or_insert(i);
        }
        worst = worst.max(sample_compare(&lhs, &rhs, 100, 1e-10).max_rel_deviation);
    }
    b.check(
        "transform of f*g equals f^ g^ symbolically",
        mismatches == 0,
        format!("{mismatches} of {count} pairs differ (first: {first_mismatch:?})"),
    );
    b.check(
        "sampled deviation < 1e-10",
        worst < 1e-10,
        format!("max relative deviation {worst:e}"),
    );
    b.value("max_deviation", worst);
    Ok(())
}

fn approx_identity(b: &mut Builder, cfg: &QuadConfig) -> Result<()> {
    let p = b.exponent("p", "2")?;
    let kmax = b.count("kmax", 15)?;
    let f = ExactFn::indicator(Rational::zero(), Rational::one())?;
    let mut norms = Vec::new();
    for k in 1..=kmax {
        let n = Rational::from_integer((1u64 << k).into());
        let e_n = ExactFn::supported_on(Rational::zero(), n.recip(), vec![Term::constant(n.clone())])?;
        let diff = order_convolve(&f, &e_n)?.sub(&f);
        norms.push(ap_norm_with(&diff, &p, cfg)?.value);
    }
    let monotone = norms.windows(2).all(|w| w[1] <= w[0]);
    let last = norms.last().copied().unwrap_or(f64::INFINITY);
    b.check("|||f*e_n - f|||_p is nonincreasing", monotone, format!("{norms:?}"));
    b.check(
        "drops below 0.01",
        norms.iter().any(|&v| v < 0.01),
        format!("smallest {last}"),
    );
    b.value("norms", norms);
    Ok(())
}

fn oracle_agreement(b: &mut Builder, seed: u64, cfg: &QuadConfig) -> Result<()> {
    let count = b.count("count", 100)?;
    let mut g = rng(seed);
    let (mut worst, mut divergent, mut leaked, mut inexact) = (0.0f64, 0usize, 0usize, 0usize);
    for _ in 0..count {
        let (f, p) = random_pure_power(&mut g);
        let pe = Extended::Finite(p);
        let exact = lp_norm_with(&f, &pe, cfg);
        match (&exact.divergence, quad_lp_norm(&f, &pe, cfg)) {
            (Some(_), Err(Error::ConvergenceNotCertified(_))) => divergent += 1,
            (Some(_), _) => leaked += 1,
            (None, Ok(q)) => {
                if exact.method != crate::algebra::NormMethod::Exact {
                    inexact += 1;
                }
                let rel = if exact.value == 0.0 {
                    q.value.abs()
                } else {
                    (q.value - exact.value).abs() / exact.value
                };
                worst = worst.max(rel);
            }
            (None, Err(e)) => return Err(e),
        }
    }
    b.check(
        "exact and quadrature norms agree to 1e-8",
        worst <= 1e-8 && inexact == 0,
        format!(
            "max relative difference {worst:e} over {} convergent cases",
            count - divergent - leaked
        ),
    );
    b.check(
        "divergent cases never reach quadrature",
        leaked == 0,
        format!("{divergent} divergent cases refused by the oracle, {leaked} leaked"),
    );
    b.value("max_rel_difference", worst);
    b.value("divergent", divergent);
    Ok(())
}

fn regime_embedding(b: &mut Builder, seed: u64) -> Result<()> {
    let count = b.count("count", 20)?;
    let mut g = rng(seed);
    let rs = ["1", "3/2", "2", "3"];
    let gaps = ["1/2", "1", "2"];
    let (mut certified, mut violations) = (0usize, Vec::new());
    for i in 0..count {
        let phi = random_bounded_phi(&mut g);
        let r = parse_rational(rs[i % rs.len()])?;
        let p = &r + parse_rational(gaps[(i / rs.len()) % gaps.len()])?;
        let same = classify_with(&phi, &AlgebraParams::finite(r.clone(), r.clone())?, &no_bounds())?;
        if same.verdict != Verdict::Multiplier {
            violations.push(format!("#{i}: not certified at r = p = {r}: {:?}", same.verdict));
            continue;
        }
        certified += 1;
        let up = classify_with(&phi, &AlgebraParams::finite(r.clone(), p.clone())?, &no_bounds())?;
        if up.verdict == Verdict::NotMultiplier {
            violations.push(format!("#{i}: NotMultiplier at r = {r}, p = {p}"));
        }
    }
    b.check(
        "every phi is certified at (r, r)",
        certified == count,
        format!("{certified} of {count}"),
    );
    b.check(
        "no NotMultiplier at (r, p) with p > r",
        violations.iter().all(|v| !v.contains("NotMultiplier")),
        if violations.is_empty() {
            "none".into()
        } else {
            violations.join("; ")
        },
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse_and_reject_unknown_keys() {
        let m = parse_params("alpha=1, beta=2 gamma=3").unwrap();
        assert_eq!(m.len(), 3);
        assert!(parse_params("alpha").is_err());
        let err = run_scenario(
            "thm7-tent",
            &parse_params("delta=1").unwrap(),
            1,
            &QuadConfig::default(),
        );
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
        assert!(run_scenario("nope", &BTreeMap::new(), 1, &QuadConfig::default()).is_err());
    }

    #[test]
    fn tent_formula_default() {
        let v = tent_norm_formula(
            &Rational::one(),
            &Rational::from_integer(2.into()),
            &Rational::from_integer(3.into()),
            &Rational::from_integer(2.into()),
        );
        assert!((v - (2.0 + (5.0f64 / 3.0).sqrt())).abs() < 1e-15);
    }
}
