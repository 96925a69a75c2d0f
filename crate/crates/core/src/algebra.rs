//! The order-convolution algebra `L1((0, inf), max)` and its ideals `A_p`.
//!
//! Divergence of every norm is decided from exact leading exponents before
//! any numeric work. Finite norms come from closed forms where the piece
//! allows (single pure power, or affine `c0 + c1 x` on a bounded interval)
//! and from the [`oracle`](crate::oracle) otherwise.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::oracle::{self, QuadConfig};
use crate::scalar::{rational_string, rational_to_f64, Coeff, Extended, Rational};
use crate::symfunc::{antiderivative_from_zero, pointwise, Endpoint, Piece, PiecewiseFn, PointwiseOp};

/// Pair of Lebesgue exponents `(r, p)` for `(A_r, A_p)` multipliers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlgebraParams {
    pub r: Extended,
    pub p: Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "r>p")]
    RgtP,
    #[serde(rename = "r<p")]
    RltP,
    #[serde(rename = "r=p")]
    Requal,
}

impl AlgebraParams {
    pub fn new(r: Extended, p: Extended) -> Result<Self> {
        for (name, e) in [("r", &r), ("p", &p)] {
            if let Extended::Finite(q) = e {
                if *q < Rational::one() {
                    return Err(Error::ExponentOutOfRange {
                        name,
                        value: q.to_string(),
                        lo: "1".into(),
                        hi: "inf".into(),
                    });
                }
            }
        }
        Ok(AlgebraParams { r, p })
    }

    pub fn finite(r: Rational, p: Rational) -> Result<Self> {
        Self::new(Extended::Finite(r), Extended::Finite(p))
    }

    pub fn regime(&self) -> Regime {
        match self.r.cmp(&self.p) {
            std::cmp::Ordering::Greater => Regime::RgtP,
            std::cmp::Ordering::Less => Regime::RltP,
            std::cmp::Ordering::Equal => Regime::Requal,
        }
    }

    /// `v` with `1/v = 1/p - 1/r`, defined only when `r > p`.
    pub fn v(&self) -> Option<Extended> {
        let inv = self.p.reciprocal() - self.r.reciprocal();
        inv.is_positive().then(|| Extended::from_reciprocal(&inv))
    }

    /// Conjugate exponent `r'` with `1/r + 1/r' = 1`.
    pub fn r_conjugate(&self) -> Extended {
        conjugate(&self.r)
    }
}

pub fn conjugate(e: &Extended) -> Extended {
    Extended::from_reciprocal(&(Rational::one() - e.reciprocal()))
}

/// Witness that a norm is infinite: the leading behaviour of the integrand
/// `|f|^p` (for finite `p`) or of `f` itself (for `p = inf`) at the
/// offending end.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub endpoint: Endpoint,
    #[serde(with = "rational_string")]
    pub exponent: Rational,
    #[serde(with = "rational_string")]
    pub log_power: Rational,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x^({}) * |ln x|^({}) at {}",
            self.exponent, self.log_power, self.endpoint
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMethod {
    Exact,
    Quadrature,
}

/// Nonnegative extended-real norm value with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct NormValue {
    pub value: f64,
    pub method: NormMethod,
    pub divergence: Option<Divergence>,
    pub error_bound: f64,
}

impl NormValue {
    pub fn exact(value: f64) -> Self {
        NormValue {
            value,
            method: NormMethod::Exact,
            divergence: None,
            error_bound: 0.0,
        }
    }

    pub fn infinite(d: Divergence) -> Self {
        NormValue {
            value: f64::INFINITY,
            method: NormMethod::Exact,
            divergence: Some(d),
            error_bound: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.divergence.is_none()
    }

    /// Sum of two norms; infinite if either is.
    pub fn plus(&self, other: &NormValue) -> NormValue {
        if let Some(d) = self.divergence.as_ref().or(other.divergence.as_ref()) {
            return NormValue::infinite(d.clone());
        }
        let method = if self.method == NormMethod::Exact && other.method == NormMethod::Exact {
            NormMethod::Exact
        } else {
            NormMethod::Quadrature
        };
        NormValue {
            value: self.value + other.value,
            method,
            divergence: None,
            error_bound: self.error_bound + other.error_bound,
        }
    }
}

impl Serialize for NormValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        if self.is_finite() {
            m.serialize_entry("value", &self.value)?;
        } else {
            m.serialize_entry("value", "inf")?;
        }
        m.serialize_entry("method", &self.method)?;
        if let Some(d) = &self.divergence {
            m.serialize_entry("divergence", d)?;
        }
        m.serialize_entry("error_bound", &self.error_bound)?;
        m.end()
    }
}

/// `f * g = f * g^ + g * f^` (order convolution).
pub fn order_convolve<C: Coeff>(f: &PiecewiseFn<C>, g: &PiecewiseFn<C>) -> Result<PiecewiseFn<C>> {
    let fhat = antiderivative_from_zero(f)?;
    let ghat = antiderivative_from_zero(g)?;
    Ok(pointwise(
        PointwiseOp::Add,
        &pointwise(PointwiseOp::Mul, f, &ghat),
        &pointwise(PointwiseOp::Mul, g, &fhat),
    ))
}

/// Gelfand transform `f^(x) = int_0^x f`, defined for `f` in `L1`.
pub fn gelfand_transform<C: Coeff>(f: &PiecewiseFn<C>) -> Result<PiecewiseFn<C>> {
    if let Some(d) = lp_divergence(f, &Extended::Finite(Rational::one())) {
        return Err(Error::NotInL1(Box::new(d)));
    }
    antiderivative_from_zero(f)
}

/// Exact divergence test for `||f||_p`.
pub fn lp_divergence<C: Coeff>(f: &PiecewiseFn<C>, p: &Extended) -> Option<Divergence> {
    let one = Rational::one();
    for end in [Endpoint::ZeroPlus, Endpoint::Infinity] {
        let Some(lb) = f.leading_behavior(end) else { continue };
        let k = Rational::from_integer(lb.log_power.into());
        let cert = match p {
            Extended::Infinity => (!lb.is_bounded()).then(|| Divergence {
                endpoint: end,
                exponent: lb.exponent.clone(),
                log_power: k,
            }),
            Extended::Finite(pq) => {
                let s = &lb.exponent * pq;
                let diverges = match end {
                    Endpoint::ZeroPlus => s <= -one.clone(),
                    Endpoint::Infinity => s >= -one.clone(),
                };
                diverges.then(|| Divergence {
                    endpoint: end,
                    exponent: s,
                    log_power: k * pq,
                })
            }
        };
        if cert.is_some() {
            return cert;
        }
    }
    None
}

/// Closed-form `int_lo^hi |piece|^p` when available.
fn closed_form_piece<C: Coeff>(piece: &Piece<C>, p: &Rational) -> Option<f64> {
    let pf = rational_to_f64(p);
    if piece.is_zero() {
        return Some(0.0);
    }
    if piece.is_pure_power() {
        let t = &piece.terms[0];
        let s = &t.exp * p + Rational::one();
        let c = t.coeff.to_f64().abs().powf(pf);
        let lo = piece.lo_f64();
        if s.is_zero() {
            let hi = piece.hi.finite()?;
            return Some(c * (rational_to_f64(hi).ln() - lo.ln()));
        }
        let sf = rational_to_f64(&s);
        let at = |x: f64| if x == 0.0 || x.is_infinite() { 0.0 } else { x.powf(sf) };
        return Some(c * (at(piece.hi_f64()) - at(lo)) / sf);
    }
    if piece.is_affine() {
        let hi = piece.hi.finite()?;
        let (mut c0, mut c1) = (C::zero(), C::zero());
        for t in &piece.terms {
            if t.exp.is_zero() {
                c0 = t.coeff.clone();
            } else {
                c1 = t.coeff.clone();
            }
        }
        let value = |x: &Rational| c0.clone() + c1.clone() * C::from_rational(x);
        let mut cuts = vec![piece.lo.clone()];
        // root of c0 + c1 x, exact when the field is
        if let Some(root) = (-(c0.clone()) / c1.clone()).to_rational() {
            if root > piece.lo && root < *hi {
                cuts.push(root);
            }
        }
        cuts.push(hi.clone());
        let slope = c1.to_f64().abs();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let a = value(&w[0]).to_f64().abs();
            let b = value(&w[1]).to_f64().abs();
            total += (b.powf(pf + 1.0) - a.powf(pf + 1.0)).abs() / ((pf + 1.0) * slope);
        }
        return Some(total);
    }
    None
}

fn sup_piece<C: Coeff>(piece: &Piece<C>, first: bool, last: bool) -> (f64, bool) {
    if piece.is_zero() {
        return (0.0, true);
    }
    let limit = |end: Endpoint| -> f64 {
        let lead = piece.leading(end).expect("nonzero piece");
        if lead.exp.is_zero() && lead.log_power == 0 {
            lead.coeff.to_f64().abs()
        } else {
            0.0
        }
    };
    let lo = piece.lo_f64();
    let hi = piece.hi_f64();
    let at_lo = if first && lo == 0.0 {
        limit(Endpoint::ZeroPlus)
    } else {
        piece.eval(lo).abs()
    };
    let at_hi = if last && hi.is_infinite() {
        limit(Endpoint::Infinity)
    } else {
        piece.eval(hi).abs()
    };
    if piece.is_pure_power() || piece.is_affine() {
        // monotone on the piece
        return (at_lo.max(at_hi), true);
    }
    let dp = Piece::new(
        piece.lo.clone(),
        piece.hi.clone(),
        crate::symfunc::differentiate_terms(&piece.terms),
    );
    let crit = oracle::sign_changes_of(&|x| dp.eval(x), lo, hi);
    let best = crit
        .iter()
        .map(|&x| piece.eval(x).abs())
        .fold(at_lo.max(at_hi), f64::max);
    (best, false)
}

/// `||f||_p` on `(0, inf)` with the default oracle tolerance.
pub fn lp_norm<C: Coeff>(f: &PiecewiseFn<C>, p: &Extended) -> NormValue {
    lp_norm_with(f, p, &QuadConfig::default())
}

pub fn lp_norm_with<C: Coeff>(f: &PiecewiseFn<C>, p: &Extended, cfg: &QuadConfig) -> NormValue {
    if let Some(d) = lp_divergence(f, p) {
        return NormValue::infinite(d);
    }
    let pieces = f.pieces();
    let n = pieces.len();
    let pq = match p {
        Extended::Infinity => {
            let mut best = 0.0f64;
            let mut exact = true;
            for (i, piece) in pieces.iter().enumerate() {
                let (v, e) = sup_piece(piece, i == 0, i + 1 == n);
                best = best.max(v);
                exact &= e;
            }
            return NormValue {
                value: best,
                method: if exact {
                    NormMethod::Exact
                } else {
                    NormMethod::Quadrature
                },
                divergence: None,
                error_bound: if exact { 0.0 } else { best * 1e-12 },
            };
        }
        Extended::Finite(q) => q,
    };
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut exact = true;
    for piece in pieces {
        match closed_form_piece(piece, pq) {
            Some(v) => sum += v,
            None => {
                match oracle::quad_abs_pow_integral(f, pq, &piece.lo, &piece.hi, cfg) {
                    Ok(r) => {
                        sum += r.value;
                        err += r.total_error();
                        exact = false;
                    }
                    // convergence was certified above, so this is a bug
                    Err(e) => panic!("quadrature refused a certified integral: {e}"),
                }
            }
        }
    }
    let pf = rational_to_f64(pq);
    let value = if pf == 1.0 { sum } else { sum.powf(1.0 / pf) };
    let error_bound = if exact || sum == 0.0 {
        0.0
    } else {
        value / (pf * sum) * err
    };
    NormValue {
        value,
        method: if exact {
            NormMethod::Exact
        } else {
            NormMethod::Quadrature
        },
        divergence: None,
        error_bound,
    }
}

/// `|||f|||_p = ||f||_1 + ||f^||_p`.
pub fn ap_norm<C: Coeff>(f: &PiecewiseFn<C>, p: &Extended) -> Result<NormValue> {
    ap_norm_with(f, p, &QuadConfig::default())
}

pub fn ap_norm_with<C: Coeff>(f: &PiecewiseFn<C>, p: &Extended, cfg: &QuadConfig) -> Result<NormValue> {
    let n1 = lp_norm_with(f, &Extended::Finite(Rational::one()), cfg);
    if !n1.is_finite() {
        return Ok(n1);
    }
    let fhat = antiderivative_from_zero(f)?;
    Ok(n1.plus(&lp_norm_with(&fhat, p, cfg)))
}

/// `f` is in `A_p` iff its `A_p` norm is finite.
pub fn in_ap<C: Coeff>(f: &PiecewiseFn<C>, p: &Extended) -> Result<bool> {
    Ok(ap_norm(f, p)?.is_finite())
}

/// Tent function `1/a` on `(0,a)`, `0` on `[a,b)`, `1/(b-c)` on `[b,c)`,
/// `0` beyond; its transform rises to 1, plateaus and returns to 0.
pub fn tent<C: Coeff>(a: &Rational, b: &Rational, c: &Rational) -> Result<PiecewiseFn<C>> {
    if !(a.is_positive() && a < b && b < c) {
        return Err(Error::InvalidParameter(format!(
            "tent needs 0 < alpha < beta < gamma, got {a}, {b}, {c}"
        )));
    }
    use crate::symfunc::Term;
    PiecewiseFn::from_pieces(vec![
        Piece::new(
            Rational::zero(),
            a.clone(),
            vec![Term::constant(C::from_rational(&a.recip()))],
        ),
        Piece::zero(a.clone(), b.clone()),
        Piece::new(
            b.clone(),
            c.clone(),
            vec![Term::constant(C::from_rational(&(b - c).recip()))],
        ),
        Piece::zero(c.clone(), Extended::Infinity),
    ])
}

/// The family `f_alpha = 1` on `(0,1)`, `-alpha x^(-alpha-1)` on `[1, inf)`,
/// whose transform is `x` then `x^(-alpha)`.
pub fn power_tail<C: Coeff>(alpha: &Rational) -> Result<PiecewiseFn<C>> {
    use crate::symfunc::Term;
    if !alpha.is_positive() {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    PiecewiseFn::from_pieces(vec![
        Piece::new(Rational::zero(), Rational::one(), vec![Term::constant(C::one())]),
        Piece::new(
            Rational::one(),
            Extended::Infinity,
            vec![Term::power(
                C::from_rational(&-alpha.clone()),
                -alpha.clone() - Rational::one(),
            )],
        ),
    ])
}
