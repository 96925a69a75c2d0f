//! Condition checkers for `(A_r, A_p)` multipliers, witness search, and
//! empirical operator-norm estimates.
//!
//! Every `Fails` carries an exact certificate. Boundedness of `M_{phi'}` is
//! only ever tested through the `L_q` tail surrogate, so its failure is
//! reported as `Unknown`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::algebra::{ap_norm, lp_divergence, lp_norm, power_tail, tent, AlgebraParams, Divergence, NormValue, Regime};
use crate::error::{Error, Result};
use crate::scalar::{rational_string, rational_to_f64, Coeff, Extended, Rational};
use crate::symfunc::{antiderivative_from_zero, differentiate, Endpoint, PiecewiseFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionStatus {
    Holds,
    Fails,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Necessary,
    Sufficient,
    /// Necessary and sufficient together (equal exponents).
    Characterizing,
}

/// Exact reason a condition fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// `||f||_norm = inf`; `norm` is `"1"`, `"3/2"`, `"inf"`, ...
    Divergent { norm: String, divergence: Divergence },
    Jump {
        #[serde(with = "rational_string")]
        at: Rational,
        left: f64,
        right: f64,
    },
    /// Growth `x^exponent |ln x|^log_power` exceeding `x^limit`.
    Growth {
        #[serde(with = "rational_string")]
        exponent: Rational,
        #[serde(with = "rational_string")]
        log_power: Rational,
        #[serde(with = "rational_string")]
        limit: Rational,
    },
}

impl Certificate {
    fn divergent(p: &Extended, d: Divergence) -> Self {
        Certificate::Divergent {
            norm: p.to_string(),
            divergence: d,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Evidence {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, Value>,
}

impl Evidence {
    fn new(text: impl Into<String>) -> Self {
        Evidence {
            text: text.into(),
            ..Default::default()
        }
    }

    fn with_certificate(mut self, c: Certificate) -> Self {
        self.certificate = Some(c);
        self
    }

    fn with_value(mut self, key: &str, v: impl Serialize) -> Self {
        self.values
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
        self
    }

    fn with_number(self, key: &str, v: f64) -> Self {
        if v.is_finite() {
            self.with_value(key, v)
        } else {
            self.with_value(key, "inf")
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResult {
    pub name: String,
    pub kind: ConditionKind,
    pub status: ConditionStatus,
    pub evidence: Evidence,
}

impl ConditionResult {
    fn new(name: &str, kind: ConditionKind, status: ConditionStatus, evidence: Evidence) -> Self {
        ConditionResult {
            name: name.to_string(),
            kind,
            status,
            evidence,
        }
    }

    pub fn holds(&self) -> bool {
        self.status == ConditionStatus::Holds
    }

    pub fn fails(&self) -> bool {
        self.status == ConditionStatus::Fails
    }
}

/// Asymptotic size `coeff * x^exponent * |ln x|^log_power` as `x -> inf`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Asymptotic {
    #[serde(with = "rational_string")]
    pub exponent: Rational,
    #[serde(with = "rational_string")]
    pub log_power: Rational,
    pub coeff: f64,
}

impl Asymptotic {
    fn bounded(limit: f64) -> Self {
        Asymptotic {
            exponent: Rational::zero(),
            log_power: Rational::zero(),
            coeff: limit,
        }
    }

    /// `O(x^e)`.
    pub fn is_big_o(&self, e: &Rational) -> bool {
        self.exponent < *e || (self.exponent == *e && self.log_power.is_zero())
    }

    /// `o(x^(e + eps))` for every `eps > 0`.
    pub fn is_little_o_for_all_eps(&self, e: &Rational) -> bool {
        self.exponent <= *e
    }
}

impl fmt::Display for Asymptotic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} x^({})", self.coeff, self.exponent)?;
        if !self.log_power.is_zero() {
            write!(f, " |ln x|^({})", self.log_power)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Multiplier,
    NotMultiplier,
    Undetermined,
}

/// Concrete `f` in `A_r` with `phi * f^` outside `L_p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Witness<C: Coeff> {
    #[serde(with = "rational_string")]
    pub alpha: Rational,
    pub f: PiecewiseFn<C>,
    pub fhat: PiecewiseFn<C>,
    /// Leading term of `phi * f^` at infinity.
    pub product_tail: Option<Asymptotic>,
    pub failure: Divergence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierReport<C: Coeff> {
    pub params: AlgebraParams,
    pub regime: Regime,
    pub necessary: Vec<ConditionResult>,
    pub sufficient: Vec<ConditionResult>,
    pub verdict: Verdict,
    pub witness: Option<Witness<C>>,
    pub norm_upper_bound: Option<f64>,
    pub norm_lower_bound: Option<f64>,
}

impl<C: Coeff> MultiplierReport<C> {
    pub fn conditions(&self) -> impl Iterator<Item = &ConditionResult> {
        self.necessary.iter().chain(self.sufficient.iter())
    }

    pub fn condition(&self, name: &str, kind: ConditionKind) -> Option<&ConditionResult> {
        self.conditions().find(|c| c.name == name && c.kind == kind)
    }
}

#[derive(Serialize)]
struct Bounds {
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
}

impl<C: Coeff> Serialize for MultiplierReport<C> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("params", &self.params)?;
        m.serialize_entry("regime", &self.regime)?;
        m.serialize_entry("verdict", &self.verdict)?;
        let conds: Vec<&ConditionResult> = self.conditions().collect();
        m.serialize_entry("conditions", &conds)?;
        if let Some(w) = &self.witness {
            m.serialize_entry("witness", w)?;
        }
        if self.norm_upper_bound.is_some() || self.norm_lower_bound.is_some() {
            m.serialize_entry(
                "bounds",
                &Bounds {
                    upper: self.norm_upper_bound,
                    lower: self.norm_lower_bound,
                },
            )?;
        }
        m.end()
    }
}

fn one() -> Rational {
    Rational::one()
}

fn inf_norm() -> Extended {
    Extended::Infinity
}

/// `|a - b| <= 1e-12 * max(|a|, |b|, 1)`, for coefficient fields without
/// exact transcendental values.
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// First interior breakpoint where the left limit differs from the value.
fn first_jump<C: Coeff>(phi: &PiecewiseFn<C>) -> Option<(Rational, f64, f64, bool)> {
    for b in phi.breakpoints() {
        let exact = phi.left_limit_exact(&b).and_then(|l| Ok((l, phi.evaluate_exact(&b)?)));
        match exact {
            Ok((l, r)) => {
                if l != r {
                    return Some((b, l.to_f64(), r.to_f64(), true));
                }
            }
            Err(_) => {
                let bf = rational_to_f64(&b);
                let i = phi.piece_index(bf);
                let l = phi.pieces()[i - 1].eval(bf);
                let r = phi.pieces()[i].eval(bf);
                if !close(l, r) {
                    return Some((b, l, r, false));
                }
            }
        }
    }
    None
}

/// Continuity of `phi` on `(0, inf)`, decided at each breakpoint.
pub fn check_continuous<C: Coeff>(phi: &PiecewiseFn<C>) -> ConditionResult {
    let kind = ConditionKind::Necessary;
    match first_jump(phi) {
        Some((at, left, right, exact)) => ConditionResult::new(
            "continuous",
            kind,
            ConditionStatus::Fails,
            Evidence::new(format!(
                "jump at x = {at}: left limit {left}, value {right}{}",
                if exact { "" } else { " (compared in floating point)" }
            ))
            .with_certificate(Certificate::Jump { at, left, right }),
        ),
        None => ConditionResult::new(
            "continuous",
            kind,
            ConditionStatus::Holds,
            Evidence::new("left and right values agree at every breakpoint"),
        ),
    }
}

/// Absolute continuity of `phi` on every `[0, K]`.
pub fn check_absolutely_continuous<C: Coeff>(phi: &PiecewiseFn<C>) -> ConditionResult {
    let name = "abs-continuous";
    let kind = ConditionKind::Necessary;
    if let Some(lb) = phi.leading_behavior(Endpoint::ZeroPlus) {
        if !lb.is_bounded() {
            let d = Divergence {
                endpoint: Endpoint::ZeroPlus,
                exponent: lb.exponent.clone(),
                log_power: Rational::from_integer(lb.log_power.into()),
            };
            return ConditionResult::new(
                name,
                kind,
                ConditionStatus::Fails,
                Evidence::new(format!("phi has no finite limit at 0+: {d}"))
                    .with_certificate(Certificate::divergent(&inf_norm(), d)),
            );
        }
    }
    if let Some((at, left, right, _)) = first_jump(phi) {
        return ConditionResult::new(
            name,
            kind,
            ConditionStatus::Fails,
            Evidence::new(format!("jump at x = {at}: left limit {left}, value {right}"))
                .with_certificate(Certificate::Jump { at, left, right }),
        );
    }
    let dphi = differentiate(phi);
    if let Some(lb) = dphi.leading_behavior(Endpoint::ZeroPlus) {
        if lb.exponent <= -one() {
            let d = Divergence {
                endpoint: Endpoint::ZeroPlus,
                exponent: lb.exponent.clone(),
                log_power: Rational::from_integer(lb.log_power.into()),
            };
            return ConditionResult::new(
                name,
                kind,
                ConditionStatus::Fails,
                Evidence::new(format!("phi' is not integrable at 0+: {d}"))
                    .with_certificate(Certificate::divergent(&Extended::Finite(one()), d)),
            );
        }
    }
    ConditionResult::new(
        name,
        kind,
        ConditionStatus::Holds,
        Evidence::new("continuous, finite at 0+, and phi' locally integrable"),
    )
}

/// Leading behaviour of `V(x) = int_0^x |phi'|` at infinity; `None` when
/// `phi' = 0`.
pub fn tv_growth_exponent<C: Coeff>(phi: &PiecewiseFn<C>) -> Option<Asymptotic> {
    let dphi = differentiate(phi);
    if dphi.is_zero() {
        return None;
    }
    match dphi.leading_behavior(Endpoint::Infinity) {
        Some(lb) if lb.exponent >= -one() => {
            let c = lb.coeff.to_f64().abs();
            let k = lb.log_power as i64;
            if lb.exponent == -one() {
                Some(Asymptotic {
                    exponent: Rational::zero(),
                    log_power: Rational::from_integer((k + 1).into()),
                    coeff: c / (k + 1) as f64,
                })
            } else {
                let e1 = &lb.exponent + one();
                Some(Asymptotic {
                    coeff: c / rational_to_f64(&e1),
                    exponent: e1,
                    log_power: Rational::from_integer(k.into()),
                })
            }
        }
        _ => Some(Asymptotic::bounded(lp_norm(&dphi, &Extended::Finite(one())).value)),
    }
}

/// Leading behaviour of `x -> ||phi restricted to [0, x]||_p` at infinity;
/// `None` when `phi = 0` or `phi` is not locally in `L_p`.
pub fn lp_growth<C: Coeff>(phi: &PiecewiseFn<C>, p: &Extended) -> Option<Asymptotic> {
    if phi.is_zero() || local_lp_failure(phi, p).is_some() {
        return None;
    }
    let lb = phi.leading_behavior(Endpoint::Infinity);
    let Some(lb) = lb else {
        return Some(Asymptotic::bounded(lp_norm(phi, p).value));
    };
    let c = lb.coeff.to_f64().abs();
    let k = Rational::from_integer(lb.log_power.into());
    match p {
        Extended::Infinity => {
            if lb.is_bounded() {
                Some(Asymptotic::bounded(lp_norm(phi, p).value))
            } else {
                Some(Asymptotic {
                    exponent: lb.exponent,
                    log_power: k,
                    coeff: c,
                })
            }
        }
        Extended::Finite(q) => {
            let qf = rational_to_f64(q);
            let s = &lb.exponent * q + one();
            if s.is_positive() {
                let sf = rational_to_f64(&s);
                Some(Asymptotic {
                    exponent: &lb.exponent + q.recip(),
                    log_power: k,
                    coeff: (c.powf(qf) / sf).powf(1.0 / qf),
                })
            } else if s.is_zero() {
                let kq1 = &k * q + one();
                Some(Asymptotic {
                    coeff: (c.powf(qf) / rational_to_f64(&kq1)).powf(1.0 / qf),
                    log_power: kq1 / q,
                    exponent: Rational::zero(),
                })
            } else {
                Some(Asymptotic::bounded(lp_norm(phi, p).value))
            }
        }
    }
}

fn local_lp_failure<C: Coeff>(phi: &PiecewiseFn<C>, p: &Extended) -> Option<Divergence> {
    let d = lp_divergence(phi, p)?;
    (d.endpoint == Endpoint::ZeroPlus).then_some(d)
}

/// `phi` in `L_p` on every `[0, K]`.
pub fn check_locally_lp<C: Coeff>(phi: &PiecewiseFn<C>, p: &Extended) -> ConditionResult {
    let kind = ConditionKind::Necessary;
    match local_lp_failure(phi, p) {
        Some(d) => ConditionResult::new(
            "locally-Lp",
            kind,
            ConditionStatus::Fails,
            Evidence::new(format!("|phi|^p is not integrable at 0+: {d}"))
                .with_certificate(Certificate::divergent(p, d)),
        ),
        None => ConditionResult::new(
            "locally-Lp",
            kind,
            ConditionStatus::Holds,
            Evidence::new(format!("phi is in L_{p} near 0+")),
        ),
    }
}

fn check_bounded<C: Coeff>(phi: &PiecewiseFn<C>, kind: ConditionKind) -> (ConditionResult, NormValue) {
    let n = lp_norm(phi, &inf_norm());
    let r = match &n.divergence {
        Some(d) => ConditionResult::new(
            "bounded",
            kind,
            ConditionStatus::Fails,
            Evidence::new(format!("phi is unbounded: {d}"))
                .with_certificate(Certificate::divergent(&inf_norm(), d.clone())),
        ),
        None => ConditionResult::new(
            "bounded",
            kind,
            ConditionStatus::Holds,
            Evidence::new(format!("||phi||_inf = {}", n.value)).with_value("sup_norm", &n),
        ),
    };
    (r, n)
}

fn growth_condition(
    name: &str,
    what: &str,
    growth: Option<Asymptotic>,
    limit: &Rational,
    little_o: bool,
) -> ConditionResult {
    let kind = ConditionKind::Necessary;
    let Some(g) = growth else {
        return ConditionResult::new(
            name,
            kind,
            ConditionStatus::Holds,
            Evidence::new(format!("{what} is identically zero")),
        );
    };
    let ok = if little_o {
        g.is_little_o_for_all_eps(limit)
    } else {
        g.is_big_o(limit)
    };
    let bound = if little_o {
        format!("o(x^({limit} + eps)) for all eps > 0")
    } else {
        format!("O(x^({limit}))")
    };
    let mut text = format!("{what} ~ {g}; required {bound}");
    if little_o && ok && g.exponent == *limit && !g.log_power.is_zero() {
        text.push_str("; admitted with a log factor at the critical exponent");
    }
    let ev = Evidence::new(text)
        .with_value("exponent", g.exponent.to_string())
        .with_value("log_power", g.log_power.to_string())
        .with_number("coeff", g.coeff);
    if ok {
        ConditionResult::new(name, kind, ConditionStatus::Holds, ev)
    } else {
        ConditionResult::new(
            name,
            kind,
            ConditionStatus::Fails,
            ev.with_certificate(Certificate::Growth {
                exponent: g.exponent,
                log_power: g.log_power,
                limit: limit.clone(),
            }),
        )
    }
}

/// `||phi'|[0,a]||_1 + ||phi'|(a,inf)||_q`, the tail surrogate for
/// boundedness of `M_{phi'}: A_r^ -> L_1`. Requires `1 <= q <= r'`.
pub fn check_mphi_prime_surrogate<C: Coeff>(
    phi: &PiecewiseFn<C>,
    params: &AlgebraParams,
    a: &Rational,
    q: &Extended,
) -> Result<ConditionResult> {
    let rc = params.r_conjugate();
    if *q < Extended::Finite(one()) || *q > rc {
        return Err(Error::ExponentOutOfRange {
            name: "q",
            value: q.to_string(),
            lo: "1".into(),
            hi: rc.to_string(),
        });
    }
    if !a.is_positive() {
        return Err(Error::InvalidParameter(format!("split point a must be > 0, got {a}")));
    }
    let kind = ConditionKind::Sufficient;
    let dphi = differentiate(phi);
    let head = lp_norm(
        &dphi.restrict(&Rational::zero(), &Extended::Finite(a.clone()))?,
        &Extended::Finite(one()),
    );
    let tail = lp_norm(&dphi.restrict(a, &Extended::Infinity)?, q);
    let ev = Evidence::new(String::new())
        .with_value("a", a.to_string())
        .with_value("q", q.to_string());
    if let Some(d) = &head.divergence {
        return Ok(ConditionResult::new(
            "mphi-prime-surrogate",
            kind,
            ConditionStatus::Fails,
            Evidence {
                text: format!("phi' is not integrable on [0, {a}]: {d}"),
                ..ev
            }
            .with_certificate(Certificate::divergent(&Extended::Finite(one()), d.clone())),
        ));
    }
    if let Some(d) = &tail.divergence {
        return Ok(ConditionResult::new(
            "mphi-prime-surrogate",
            kind,
            ConditionStatus::Fails,
            Evidence {
                text: format!("phi' is not in L_{q}({a}, inf): {d}"),
                ..ev
            }
            .with_certificate(Certificate::divergent(q, d.clone())),
        ));
    }
    let total = head.plus(&tail);
    Ok(ConditionResult::new(
        "mphi-prime-surrogate",
        kind,
        ConditionStatus::Holds,
        Evidence {
            text: format!(
                "phi' in L_1(0, {a}) and in L_{q}({a}, inf); contribution {}",
                total.value
            ),
            ..ev
        }
        .with_value("head_L1", &head)
        .with_value("tail_Lq", &tail)
        .with_number("bound", total.value),
    ))
}

fn surrogate_exponents(params: &AlgebraParams) -> Vec<Extended> {
    let rc = params.r_conjugate();
    let mid = match &rc {
        Extended::Finite(x) => Extended::Finite((x + one()) / Rational::from_integer(2.into())),
        Extended::Infinity => Extended::Finite(Rational::from_integer(2.into())),
    };
    let mut out = vec![rc, mid, Extended::Finite(one())];
    out.dedup();
    out
}

/// Scans `a` over the breakpoints of `phi` (or `a = 1`) and `q` over
/// `r'`, the midpoint of `[1, r']`, and `1`; returns the first success, or
/// the last failure with status `Unknown`.
pub fn search_mphi_prime_surrogate<C: Coeff>(phi: &PiecewiseFn<C>, params: &AlgebraParams) -> ConditionResult {
    let mut splits = phi.breakpoints();
    if splits.is_empty() {
        splits.push(one());
    }
    let mut last = None;
    for a in &splits {
        for q in surrogate_exponents(params) {
            match check_mphi_prime_surrogate(phi, params, a, &q) {
                Ok(c) if c.holds() => return c,
                Ok(c) => last = Some(c),
                Err(e) => {
                    last = Some(ConditionResult::new(
                        "mphi-prime-surrogate",
                        ConditionKind::Sufficient,
                        ConditionStatus::Unknown,
                        Evidence::new(e.to_string()),
                    ))
                }
            }
        }
    }
    let mut c = last.expect("at least one candidate");
    c.status = ConditionStatus::Unknown;
    c.evidence.text = format!(
        "surrogate not satisfied ({}); boundedness of M_phi' undecided",
        c.evidence.text
    );
    c
}

fn surrogate_value(c: &ConditionResult) -> Option<f64> {
    if !c.holds() {
        return None;
    }
    match c.evidence.values.get("bound")? {
        Value::Number(n) => n.as_f64(),
        _ => None,
    }
}

fn wrong_regime(expected: &'static str, params: &AlgebraParams) -> Error {
    Error::WrongRegime {
        expected,
        r: params.r.to_string(),
        p: params.p.to_string(),
    }
}

fn with_kind(mut c: ConditionResult, kind: ConditionKind) -> ConditionResult {
    c.kind = kind;
    c
}

/// Necessary conditions for `r > p`: boundedness, absolute continuity with
/// `O(x^(1/r))` total variation, and the `M_{phi'}` surrogate.
pub fn check_necessary_r_gt_p<C: Coeff>(phi: &PiecewiseFn<C>, params: &AlgebraParams) -> Result<Vec<ConditionResult>> {
    if params.regime() != Regime::RgtP {
        return Err(wrong_regime("r > p", params));
    }
    let kind = ConditionKind::Necessary;
    let (bounded, _) = check_bounded(phi, kind);
    let ac = check_absolutely_continuous(phi);
    let tv = if ac.holds() {
        growth_condition(
            "tv-growth",
            "int_0^x |phi'|",
            tv_growth_exponent(phi),
            &params.r.reciprocal(),
            false,
        )
    } else {
        ConditionResult::new(
            "tv-growth",
            kind,
            ConditionStatus::Unknown,
            Evidence::new("requires absolute continuity"),
        )
    };
    let sur = with_kind(search_mphi_prime_surrogate(phi, params), kind);
    Ok(vec![bounded, ac, tv, sur])
}

/// Sufficient conditions for `r > p`: `phi` in `L_v`, absolute continuity,
/// and the surrogate. Returns the conditions and, when all hold, the bound
/// `S + ||phi||_inf + ||phi||_v`.
pub fn check_sufficient_r_gt_p<C: Coeff>(
    phi: &PiecewiseFn<C>,
    params: &AlgebraParams,
) -> Result<(Vec<ConditionResult>, Option<f64>)> {
    let v = params.v().ok_or_else(|| wrong_regime("r > p", params))?;
    let kind = ConditionKind::Sufficient;
    let nv = lp_norm(phi, &v);
    let in_lv = match &nv.divergence {
        Some(d) => ConditionResult::new(
            "phi-in-Lv",
            kind,
            ConditionStatus::Fails,
            Evidence::new(format!("phi is not in L_{v}: {d}")).with_certificate(Certificate::divergent(&v, d.clone())),
        ),
        None => ConditionResult::new(
            "phi-in-Lv",
            kind,
            ConditionStatus::Holds,
            Evidence::new(format!("||phi||_{v} = {}", nv.value))
                .with_value("v", v.to_string())
                .with_value("norm", &nv),
        ),
    };
    let ac = with_kind(check_absolutely_continuous(phi), kind);
    let sur = search_mphi_prime_surrogate(phi, params);
    let bound = if in_lv.holds() && ac.holds() && sur.holds() {
        let sup = lp_norm(phi, &inf_norm());
        surrogate_value(&sur)
            .filter(|_| sup.is_finite())
            .map(|s| s + sup.value + nv.value)
    } else {
        None
    };
    Ok((vec![in_lv, ac, sur], bound))
}

/// Sufficient conditions for `r < p`: `phi` bounded or in `L_p`, absolute
/// continuity, and the surrogate; bound `2 ||phi||_inf + S`.
pub fn check_sufficient_r_lt_p<C: Coeff>(
    phi: &PiecewiseFn<C>,
    params: &AlgebraParams,
) -> Result<(Vec<ConditionResult>, Option<f64>)> {
    if params.regime() != Regime::RltP {
        return Err(wrong_regime("r < p", params));
    }
    let kind = ConditionKind::Sufficient;
    let sup = lp_norm(phi, &inf_norm());
    let np = lp_norm(phi, &params.p);
    let first = if sup.is_finite() || np.is_finite() {
        ConditionResult::new(
            "bounded-or-in-Lp",
            kind,
            ConditionStatus::Holds,
            Evidence::new(if sup.is_finite() {
                format!("||phi||_inf = {}", sup.value)
            } else {
                format!("||phi||_{} = {}", params.p, np.value)
            })
            .with_value("sup_norm", &sup)
            .with_value("lp_norm", &np),
        )
    } else {
        let d = sup.divergence.clone().expect("divergent");
        ConditionResult::new(
            "bounded-or-in-Lp",
            kind,
            ConditionStatus::Fails,
            Evidence::new(format!(
                "phi is unbounded ({d}) and not in L_{} ({})",
                params.p,
                np.divergence.as_ref().expect("divergent")
            ))
            .with_certificate(Certificate::divergent(&inf_norm(), d)),
        )
    };
    let ac = with_kind(check_absolutely_continuous(phi), kind);
    let sur = search_mphi_prime_surrogate(phi, params);
    let bound = if first.holds() && ac.holds() && sur.holds() && sup.is_finite() {
        surrogate_value(&sur).map(|s| 2.0 * sup.value + s)
    } else {
        None
    };
    Ok((vec![first, ac, sur], bound))
}

/// Necessary conditions for `r < p`: continuity, absolute continuity, local
/// `L_p`, and `o(x^(1/r + eps))` growth of `||phi|[0,x]||_p` and of
/// `||phi'|[0,x]||_1`.
pub fn check_necessary_r_lt_p<C: Coeff>(phi: &PiecewiseFn<C>, params: &AlgebraParams) -> Result<Vec<ConditionResult>> {
    if params.regime() != Regime::RltP {
        return Err(wrong_regime("r < p", params));
    }
    let inv_r = params.r.reciprocal();
    let cont = check_continuous(phi);
    let ac = check_absolutely_continuous(phi);
    let local = check_locally_lp(phi, &params.p);
    let lp = if local.holds() {
        growth_condition("Lp-growth", "||phi|[0,x]||_p", lp_growth(phi, &params.p), &inv_r, true)
    } else {
        ConditionResult::new(
            "Lp-growth",
            ConditionKind::Necessary,
            ConditionStatus::Unknown,
            Evidence::new("requires phi locally in L_p"),
        )
    };
    let tv = if ac.holds() {
        growth_condition("tv-growth", "||phi'|[0,x]||_1", tv_growth_exponent(phi), &inv_r, true)
    } else {
        ConditionResult::new(
            "tv-growth",
            ConditionKind::Necessary,
            ConditionStatus::Unknown,
            Evidence::new("requires absolute continuity"),
        )
    };
    Ok(vec![cont, ac, local, lp, tv])
}

/// Equal exponents: boundedness, absolute continuity and the surrogate
/// characterize multipliers; bound `S + ||phi||_inf`.
pub fn check_equal_exponent<C: Coeff>(
    phi: &PiecewiseFn<C>,
    params: &AlgebraParams,
) -> Result<(Vec<ConditionResult>, Option<f64>)> {
    if params.regime() != Regime::Requal {
        return Err(wrong_regime("r = p", params));
    }
    let kind = ConditionKind::Characterizing;
    let (bounded, sup) = check_bounded(phi, kind);
    let ac = with_kind(check_absolutely_continuous(phi), kind);
    let sur = with_kind(search_mphi_prime_surrogate(phi, params), kind);
    let bound = if bounded.holds() && ac.holds() && sur.holds() {
        surrogate_value(&sur).map(|s| s + sup.value)
    } else {
        None
    };
    Ok((vec![bounded, ac, sur], bound))
}

/// Smallest-first candidate parameters for the family `f_alpha`.
fn witness_candidates<C: Coeff>(phi: &PiecewiseFn<C>, params: &AlgebraParams) -> Vec<Rational> {
    let inv_r = params.r.reciprocal();
    let inv_p = params.p.reciprocal();
    let two = Rational::from_integer(2.into());
    let mut out = Vec::new();
    if let Some(lb) = phi.leading_behavior(Endpoint::Infinity) {
        // phi * f^_alpha ~ x^(e - alpha): outside L_p iff alpha <= e + 1/p
        // (strict for p = inf without a log factor)
        let threshold = &lb.exponent + &inv_p;
        let inclusive = !params.p.is_infinite() || lb.log_power > 0;
        let admissible = |a: &Rational| *a > inv_r && (*a < threshold || (inclusive && *a == threshold));
        if params.regime() == Regime::RgtP {
            let mid = (&inv_r + &inv_p) / &two;
            if admissible(&mid) {
                out.push(mid);
            }
        }
        let edge = if inclusive {
            threshold.clone()
        } else {
            (&inv_r + &threshold) / &two
        };
        if admissible(&edge) {
            out.push(edge);
        }
    }
    for k in 2..=64i64 {
        out.push(&inv_r + Rational::new(1.into(), k.into()));
    }
    let mut seen = Vec::new();
    out.retain(|a| {
        if seen.contains(a) {
            false
        } else {
            seen.push(a.clone());
            true
        }
    });
    out
}

/// Searches `f_alpha` (`f^ = x` on `(0,1)`, `x^(-alpha)` on `[1, inf)`,
/// `alpha > 1/r`) for one with `phi * f^_alpha` outside `L_p`. Divergence is
/// decided exactly, so a returned witness is a certificate.
pub fn witness_search<C: Coeff>(phi: &PiecewiseFn<C>, params: &AlgebraParams) -> Option<Witness<C>> {
    for alpha in witness_candidates(phi, params) {
        let Ok(f) = power_tail::<C>(&alpha) else { continue };
        let Ok(fhat) = antiderivative_from_zero(&f) else {
            continue;
        };
        if lp_divergence(&fhat, &params.r).is_some() {
            continue;
        }
        let product = phi.mul(&fhat);
        if let Some(failure) = lp_divergence(&product, &params.p) {
            let product_tail = product.leading_behavior(Endpoint::Infinity).map(|lb| Asymptotic {
                exponent: lb.exponent,
                log_power: Rational::from_integer(lb.log_power.into()),
                coeff: lb.coeff.to_f64(),
            });
            return Some(Witness {
                alpha,
                f,
                fhat,
                product_tail,
                failure,
            });
        }
    }
    None
}

/// Re-checks a witness through the norm layer.
pub fn verify_witness<C: Coeff>(phi: &PiecewiseFn<C>, params: &AlgebraParams, w: &Witness<C>) -> Result<bool> {
    let in_ar = ap_norm(&w.f, &params.r)?.is_finite();
    let out = !lp_norm(&phi.mul(&w.fhat), &params.p).is_finite();
    Ok(in_ar && out && antiderivative_from_zero(&w.f)? == w.fhat)
}

/// Ten tents and ten members of `f_alpha` with `alpha > 1/r`.
pub fn default_witness_pool<C: Coeff>(params: &AlgebraParams) -> Vec<PiecewiseFn<C>> {
    let mut pool = Vec::with_capacity(20);
    for k in 1..=10i64 {
        let a = Rational::new(k.into(), 4.into());
        let b = Rational::new(k.into(), 2.into());
        let c = Rational::from_integer(k.into());
        pool.push(tent::<C>(&a, &b, &c).expect("ordered"));
    }
    let inv_r = params.r.reciprocal();
    for j in 1..=10i64 {
        let alpha = &inv_r + Rational::new(j.into(), 4.into());
        pool.push(power_tail::<C>(&alpha).expect("positive"));
    }
    pool
}

/// `max_f |||phi f^|||_p / |||f|||_r` over the given functions, where the
/// numerator is `||phi' f^ + phi f||_1 + ||phi f^||_p`.
pub fn operator_norm_lower_bound<C: Coeff>(
    phi: &PiecewiseFn<C>,
    params: &AlgebraParams,
    witnesses: &[PiecewiseFn<C>],
) -> Result<f64> {
    let dphi = differentiate(phi);
    let ratios: Vec<Result<f64>> = witnesses
        .par_iter()
        .map(|f| {
            let den = ap_norm(f, &params.r)?;
            if let Some(d) = &den.divergence {
                return Err(Error::WitnessNotInAr(d.to_string()));
            }
            if den.value == 0.0 {
                return Ok(0.0);
            }
            let fhat = antiderivative_from_zero(f)?;
            let g_hat = phi.mul(&fhat);
            let g = dphi.mul(&fhat).add(&phi.mul(f));
            let num = lp_norm(&g, &Extended::Finite(one())).plus(&lp_norm(&g_hat, &params.p));
            Ok(num.value / den.value)
        })
        .collect();
    ratios.into_iter().try_fold(0.0f64, |acc, r| Ok(acc.max(r?)))
}

/// One candidate in the pool behind [`point_eval_constant`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoolValue {
    pub family: &'static str,
    pub params: Vec<f64>,
    /// `|f^(x)| / |||f|||_p`.
    pub value: f64,
}

const POOL_GRID: i32 = 60;

/// Candidate values for [`point_eval_constant`]. Members are placed so
/// their transform peaks at `x`; a member is admitted once it fits inside
/// `(0, inf)`, so the admitted set only grows with `x`.
///
/// * `box-pair`: `f = h` on `(x-d, x)`, `-h d/w` on `(x, x+w)`.
/// * `tent`: rise over `d`, plateau of length `l` from `x`, fall over `w`.
/// * `power-tail`: `f^(t) = t/x` on `(0, x)`, `(t/x)^(-alpha)` beyond.
/// * `box`: `f = 1/d` on `(x-d, x)`; in `A_p` only for `p = inf`.
pub fn point_eval_pool(x: f64, p: &Extended) -> Vec<PoolValue> {
    let pf = p.to_f64();
    let root = |m: f64| if p.is_infinite() { 1.0 } else { m.powf(1.0 / pf) };
    let grid: Vec<f64> = (0..=POOL_GRID).map(|j| 2f64.powi(-j)).collect();
    let fits: Vec<f64> = grid.iter().copied().filter(|&d| d <= x).collect();
    let mut out = Vec::new();
    for &d in &fits {
        for &w in grid.iter().step_by(4) {
            let n = root((d + w) / (pf + 1.0));
            out.push(PoolValue {
                family: "box-pair",
                params: vec![d, w],
                value: 1.0 / (2.0 + n),
            });
            for l in [0.25, 1.0] {
                let n = root((d + w) / (pf + 1.0) + l);
                out.push(PoolValue {
                    family: "tent",
                    params: vec![d, l, w],
                    value: 1.0 / (2.0 + n),
                });
            }
        }
        if p.is_infinite() {
            out.push(PoolValue {
                family: "box",
                params: vec![d],
                value: 0.5,
            });
        }
    }
    let inv_p = p.reciprocal();
    for j in 1..=16 {
        let alpha = rational_to_f64(&inv_p) + j as f64 / 4.0;
        let n = if p.is_infinite() {
            1.0
        } else {
            (x / (pf + 1.0) + x / (alpha * pf - 1.0)).powf(1.0 / pf)
        };
        out.push(PoolValue {
            family: "power-tail",
            params: vec![alpha],
            value: 1.0 / (2.0 + n),
        });
    }
    out
}

/// Lower estimate of `K_x = sup |f^(x)|` over the unit ball of `A_p`.
///
/// Every `f` in `A_p` with finite `p` has `int f = 0`, so
/// `||f||_1 >= 2 |f^(x)|` and `K_x <= 1/2`; the translated members of the
/// pool approach that value.
pub fn point_eval_constant(x: f64, p: &Extended) -> f64 {
    point_eval_pool(x, p).into_iter().map(|v| v.value).fold(0.0, f64::max)
}

/// Options for [`classify_with`].
#[derive(Clone, Debug)]
pub struct ClassifyOptions<C: Coeff> {
    /// Pool for the operator-norm lower bound; `None` uses
    /// [`default_witness_pool`].
    pub pool: Option<Vec<PiecewiseFn<C>>>,
    pub lower_bound: bool,
}

impl<C: Coeff> Default for ClassifyOptions<C> {
    fn default() -> Self {
        ClassifyOptions {
            pool: None,
            lower_bound: true,
        }
    }
}

pub fn classify<C: Coeff>(phi: &PiecewiseFn<C>, params: &AlgebraParams) -> Result<MultiplierReport<C>> {
    classify_with(phi, params, &ClassifyOptions::default())
}

/// Runs the regime's condition sets and the witness search and combines
/// them into a three-valued verdict.
pub fn classify_with<C: Coeff>(
    phi: &PiecewiseFn<C>,
    params: &AlgebraParams,
    opts: &ClassifyOptions<C>,
) -> Result<MultiplierReport<C>> {
    let regime = params.regime();
    let (necessary, sufficient, upper) = match regime {
        Regime::Requal => {
            let (conds, bound) = check_equal_exponent(phi, params)?;
            (conds, Vec::new(), bound)
        }
        Regime::RgtP => {
            let nec = check_necessary_r_gt_p(phi, params)?;
            let (suf, bound) = check_sufficient_r_gt_p(phi, params)?;
            (nec, suf, bound)
        }
        Regime::RltP => {
            let nec = check_necessary_r_lt_p(phi, params)?;
            let (suf, bound) = check_sufficient_r_lt_p(phi, params)?;
            (nec, suf, bound)
        }
    };
    let witness = witness_search(phi, params);
    let all_sufficient = match regime {
        Regime::Requal => necessary.iter().all(ConditionResult::holds),
        _ => sufficient.iter().all(ConditionResult::holds),
    };
    let any_failure = necessary.iter().any(ConditionResult::fails);
    let verdict = if all_sufficient {
        if let Some(w) = &witness {
            return Err(Error::Internal(format!(
                "sufficient conditions hold but f_alpha with alpha = {} is a witness",
                w.alpha
            )));
        }
        Verdict::Multiplier
    } else if any_failure || witness.is_some() {
        Verdict::NotMultiplier
    } else {
        Verdict::Undetermined
    };
    let (norm_upper_bound, norm_lower_bound) = if verdict == Verdict::Multiplier {
        let lower = if opts.lower_bound {
            let pool = opts.pool.clone().unwrap_or_else(|| default_witness_pool(params));
            Some(operator_norm_lower_bound(phi, params, &pool)?)
        } else {
            None
        };
        (upper, lower)
    } else {
        (None, None)
    };
    Ok(MultiplierReport {
        params: params.clone(),
        regime,
        necessary,
        sufficient,
        verdict,
        witness,
        norm_upper_bound,
        norm_lower_bound,
    })
}
