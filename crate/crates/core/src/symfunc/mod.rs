//! Piecewise power-log functions on `(0, inf)`.
//!
//! A [`PiecewiseFn`] is a finite partition of `(0, inf)` into half-open
//! intervals, each carrying a finite sum of terms `c * x^a * ln(x)^k` with
//! rational `a`. Values of this type are always in canonical form: like
//! terms combined, zero terms dropped, adjacent equal pieces merged, and the
//! partition covering `(0, inf)` exactly. Two functions are symbolically
//! equal iff their canonical forms are equal, so `==` is symbolic equality.

mod calculus;

use std::cmp::Ordering;

use num_traits::{Float, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_string, Coeff, Extended, Rational};

pub(crate) use calculus::differentiate_terms;
pub use calculus::{antiderivative_from_zero, differentiate, pointwise, PointwiseOp};

/// `coeff * x^exp * ln(x)^log_power`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term<C> {
    pub coeff: C,
    pub exp: Rational,
    pub log_power: u32,
}

impl<C: Coeff> Term<C> {
    pub fn new(coeff: C, exp: Rational, log_power: u32) -> Self {
        Term { coeff, exp, log_power }
    }

    pub fn power(coeff: C, exp: Rational) -> Self {
        Term::new(coeff, exp, 0)
    }

    pub fn constant(coeff: C) -> Self {
        Term::new(coeff, Rational::zero(), 0)
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.exp.cmp(&other.exp).then(self.log_power.cmp(&other.log_power))
    }

    pub fn eval<F: Float>(&self, x: F) -> F {
        let c = F::from(self.coeff.to_f64()).unwrap_or_else(F::nan);
        let e = crate::scalar::rational_to_f64(&self.exp);
        let mut v = if self.exp.is_zero() {
            c
        } else if self.exp.is_integer() && e.abs() <= 64.0 {
            c * x.powi(e as i32)
        } else {
            c * x.powf(F::from(e).unwrap_or_else(F::nan))
        };
        if self.log_power > 0 {
            v = v * x.ln().powi(self.log_power as i32);
        }
        v
    }

    /// Exact value at a positive rational point.
    pub fn eval_exact(&self, x: &Rational) -> Result<C> {
        let inexact = || Error::InexactConstant {
            at: x.to_string(),
            exponent: self.exp.clone(),
            log_power: self.log_power,
        };
        let log_factor = if self.log_power == 0 {
            C::one()
        } else {
            let l = C::ln_rational(x).ok_or_else(inexact)?;
            if l.is_zero() {
                return Ok(C::zero());
            }
            num_traits::pow(l, self.log_power as usize)
        };
        let p = C::rational_pow(x, &self.exp).ok_or_else(inexact)?;
        Ok(self.coeff.clone() * p * log_factor)
    }

    pub fn mul(&self, other: &Term<C>) -> Term<C> {
        Term::new(
            self.coeff.clone() * other.coeff.clone(),
            &self.exp + &other.exp,
            self.log_power + other.log_power,
        )
    }
}

/// Sort by `(exp, log_power)`, combine like terms, drop zero coefficients.
pub(crate) fn canonical_terms<C: Coeff>(mut terms: Vec<Term<C>>) -> Vec<Term<C>> {
    terms.sort_by(|a, b| a.key_cmp(b));
    let mut out: Vec<Term<C>> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.key_cmp(&t) == Ordering::Equal => {
                last.coeff = last.coeff.clone() + t.coeff;
            }
            _ => out.push(t),
        }
        if out.last().is_some_and(|l| l.coeff.is_zero()) {
            out.pop();
        }
    }
    out.retain(|t| !t.coeff.is_zero());
    out
}

/// One interval `[lo, hi)` of a partition together with its terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece<C> {
    pub lo: Rational,
    pub hi: Extended,
    pub terms: Vec<Term<C>>,
}

impl<C: Coeff> Piece<C> {
    pub fn new(lo: Rational, hi: impl Into<Extended>, terms: Vec<Term<C>>) -> Self {
        Piece {
            lo,
            hi: hi.into(),
            terms,
        }
    }

    pub fn zero(lo: Rational, hi: impl Into<Extended>) -> Self {
        Piece::new(lo, hi, Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval<F: Float>(&self, x: F) -> F {
        self.terms.iter().fold(F::zero(), |acc, t| acc + t.eval(x))
    }

    pub fn eval_exact(&self, x: &Rational) -> Result<C> {
        self.terms
            .iter()
            .try_fold(C::zero(), |acc, t| Ok(acc + t.eval_exact(x)?))
    }

    /// True when the term list is a single pure power `c * x^a`.
    pub fn is_pure_power(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].log_power == 0
    }

    /// True when the piece is `c0 + c1 * x` with `c1 != 0`.
    pub fn is_affine(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.log_power == 0 && (t.exp.is_zero() || t.exp.is_one()))
            && self.terms.iter().any(|t| t.exp.is_one())
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64()
    }

    pub fn lo_f64(&self) -> f64 {
        crate::scalar::rational_to_f64(&self.lo)
    }

    /// Dominating term at the lower or upper end of this piece.
    pub fn leading(&self, endpoint: Endpoint) -> Option<&Term<C>> {
        match endpoint {
            Endpoint::ZeroPlus => self
                .terms
                .iter()
                .min_by(|a, b| a.exp.cmp(&b.exp).then(b.log_power.cmp(&a.log_power))),
            Endpoint::Infinity => self.terms.iter().max_by(|a, b| a.key_cmp(b)),
        }
    }
}

/// End of `(0, inf)` at which asymptotic behaviour is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Endpoint {
    #[serde(rename = "0+")]
    ZeroPlus,
    #[serde(rename = "inf")]
    Infinity,
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::ZeroPlus => f.write_str("0+"),
            Endpoint::Infinity => f.write_str("inf"),
        }
    }
}

/// The dominating power-log term of a function at `0+` or at `inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadingBehavior<C> {
    pub endpoint: Endpoint,
    pub exponent: Rational,
    pub log_power: u32,
    pub coeff: C,
}

impl<C: Coeff> LeadingBehavior<C> {
    pub fn eval(&self, x: f64) -> f64 {
        Term::new(self.coeff.clone(), self.exponent.clone(), self.log_power).eval(x)
    }

    /// True when the function stays bounded near the endpoint.
    pub fn is_bounded(&self) -> bool {
        match self.endpoint {
            Endpoint::ZeroPlus => self.exponent.is_positive() || (self.exponent.is_zero() && self.log_power == 0),
            Endpoint::Infinity => self.exponent.is_negative() || (self.exponent.is_zero() && self.log_power == 0),
        }
    }
}

/// Canonical piecewise power-log function on `(0, inf)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseFn<C> {
    pieces: Vec<Piece<C>>,
}

impl<C: Coeff> PiecewiseFn<C> {
    /// Validates the partition and returns the canonical form.
    ///
    /// A partition whose last piece ends at a finite point is completed with
    /// an explicit zero tail.
    pub fn from_pieces(pieces: Vec<Piece<C>>) -> Result<Self> {
        normalize(pieces)
    }

    pub fn zero() -> Self {
        PiecewiseFn {
            pieces: vec![Piece::zero(Rational::zero(), Extended::Infinity)],
        }
    }

    pub fn constant(c: C) -> Self {
        Self::from_pieces(vec![Piece::new(
            Rational::zero(),
            Extended::Infinity,
            vec![Term::constant(c)],
        )])
        .expect("single piece covers (0, inf)")
    }

    /// `terms` on `[lo, hi)` and zero elsewhere.
    pub fn supported_on(lo: Rational, hi: impl Into<Extended>, terms: Vec<Term<C>>) -> Result<Self> {
        let hi = hi.into();
        if Extended::Finite(lo.clone()) >= hi || lo.is_negative() {
            return Err(Error::MalformedPartition(format!("empty support [{lo}, {hi})")));
        }
        let mut pieces = Vec::new();
        if lo.is_positive() {
            pieces.push(Piece::zero(Rational::zero(), lo.clone()));
        }
        pieces.push(Piece::new(lo, hi, terms));
        Self::from_pieces(pieces)
    }

    /// Indicator of `[lo, hi)`.
    pub fn indicator(lo: Rational, hi: impl Into<Extended>) -> Result<Self> {
        Self::supported_on(lo, hi, vec![Term::constant(C::one())])
    }

    pub fn pieces(&self) -> &[Piece<C>] {
        &self.pieces
    }

    pub fn into_pieces(self) -> Vec<Piece<C>> {
        self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(Piece::is_zero)
    }

    /// Interior breakpoints, in increasing order.
    pub fn breakpoints(&self) -> Vec<Rational> {
        self.pieces.iter().skip(1).map(|p| p.lo.clone()).collect()
    }

    /// Re-runs canonicalization; idempotent on values of this type.
    pub fn normalized(&self) -> Self {
        normalize(self.pieces.clone()).expect("canonical values re-normalize")
    }

    /// Index of the piece used at `x` (right-continuous convention).
    pub fn piece_index(&self, x: f64) -> usize {
        self.pieces.iter().rposition(|p| p.lo_f64() <= x).unwrap_or(0)
    }

    fn piece_index_exact(&self, x: &Rational) -> usize {
        self.pieces.iter().rposition(|p| p.lo <= *x).unwrap_or(0)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        self.evaluate_as(x)
    }

    /// Evaluation in any floating type; at a breakpoint the right piece is used.
    pub fn evaluate_as<F: Float>(&self, x: F) -> F {
        let xf = x.to_f64().unwrap_or(f64::NAN);
        self.pieces[self.piece_index(xf)].eval(x)
    }

    /// Exact value at a positive rational point, when the coefficient field allows.
    pub fn evaluate_exact(&self, x: &Rational) -> Result<C> {
        self.pieces[self.piece_index_exact(x)].eval_exact(x)
    }

    /// Exact left limit at a positive rational point.
    pub fn left_limit_exact(&self, x: &Rational) -> Result<C> {
        let i = self.piece_index_exact(x);
        let i = if self.pieces[i].lo == *x && i > 0 { i - 1 } else { i };
        self.pieces[i].eval_exact(x)
    }

    pub fn leading_behavior(&self, endpoint: Endpoint) -> Option<LeadingBehavior<C>> {
        let piece = match endpoint {
            Endpoint::ZeroPlus => self.pieces.first(),
            Endpoint::Infinity => self.pieces.last(),
        }?;
        piece.leading(endpoint).map(|t| LeadingBehavior {
            endpoint,
            exponent: t.exp.clone(),
            log_power: t.log_power,
            coeff: t.coeff.clone(),
        })
    }

    pub fn scale(&self, c: &C) -> Self {
        self.map_terms(|t| Term::new(t.coeff.clone() * c.clone(), t.exp.clone(), t.log_power))
    }

    pub fn neg(&self) -> Self {
        self.scale(&-C::one())
    }

    fn map_terms(&self, f: impl Fn(&Term<C>) -> Term<C>) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.lo.clone(), p.hi.clone(), p.terms.iter().map(&f).collect()))
            .collect();
        normalize(pieces).expect("partition unchanged")
    }

    /// Converts coefficients to another field (e.g. exact to `f64`).
    pub fn convert<D: Coeff>(&self) -> PiecewiseFn<D> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let terms = p
                    .terms
                    .iter()
                    .map(|t| {
                        let c = match t.coeff.to_rational() {
                            Some(q) => D::from_rational(&q),
                            None => D::from_rational(&Rational::from_float(t.coeff.to_f64()).unwrap_or_default()),
                        };
                        Term::new(c, t.exp.clone(), t.log_power)
                    })
                    .collect();
                Piece::new(p.lo.clone(), p.hi.clone(), terms)
            })
            .collect();
        normalize(pieces).expect("partition unchanged")
    }

    /// `f` on `[lo, hi)`, zero elsewhere.
    pub fn restrict(&self, lo: &Rational, hi: &Extended) -> Result<Self> {
        let ind = Self::indicator(lo.clone(), hi.clone())?;
        Ok(pointwise(PointwiseOp::Mul, self, &ind))
    }

    pub fn add(&self, other: &Self) -> Self {
        pointwise(PointwiseOp::Add, self, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        pointwise(PointwiseOp::Add, self, &other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        pointwise(PointwiseOp::Mul, self, other)
    }
}

/// Validates a raw partition and returns its canonical form.
pub fn normalize<C: Coeff>(pieces: Vec<Piece<C>>) -> Result<PiecewiseFn<C>> {
    let Some(first) = pieces.first() else {
        return Err(Error::MalformedPartition("no pieces".into()));
    };
    if !first.lo.is_zero() {
        return Err(Error::MalformedPartition(format!(
            "first piece starts at {}, not 0",
            first.lo
        )));
    }
    let mut out: Vec<Piece<C>> = Vec::with_capacity(pieces.len() + 1);
    let mut expected = Extended::Finite(Rational::zero());
    for piece in pieces {
        match &expected {
            Extended::Infinity => {
                return Err(Error::MalformedPartition(format!(
                    "piece [{}, {}) lies beyond inf",
                    piece.lo, piece.hi
                )))
            }
            Extended::Finite(e) => match piece.lo.cmp(e) {
                Ordering::Greater => return Err(Error::MalformedPartition(format!("gap at ({e}, {})", piece.lo))),
                Ordering::Less => {
                    return Err(Error::MalformedPartition(format!(
                        "overlap: piece starts at {} before {e}",
                        piece.lo
                    )))
                }
                Ordering::Equal => {}
            },
        }
        if Extended::Finite(piece.lo.clone()) >= piece.hi {
            return Err(Error::MalformedPartition(format!(
                "empty piece [{}, {})",
                piece.lo, piece.hi
            )));
        }
        expected = piece.hi.clone();
        let terms = canonical_terms(piece.terms);
        match out.last_mut() {
            Some(last) if last.terms == terms => last.hi = piece.hi,
            _ => out.push(Piece::new(piece.lo, piece.hi, terms)),
        }
    }
    if let Extended::Finite(end) = expected {
        match out.last_mut() {
            Some(last) if last.terms.is_empty() => last.hi = Extended::Infinity,
            _ => out.push(Piece::zero(end, Extended::Infinity)),
        }
    }
    Ok(PiecewiseFn { pieces: out })
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: String,
    exp: Rational2,
    logpow: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct Rational2(#[serde(with = "rational_string")] Rational);

#[derive(Serialize, Deserialize)]
struct PieceRepr {
    lo: Rational2,
    hi: Extended,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct FnRepr {
    pieces: Vec<PieceRepr>,
}

impl<C: Coeff> Serialize for PiecewiseFn<C> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = FnRepr {
            pieces: self
                .pieces
                .iter()
                .map(|p| PieceRepr {
                    lo: Rational2(p.lo.clone()),
                    hi: p.hi.clone(),
                    terms: p
                        .terms
                        .iter()
                        .map(|t| TermRepr {
                            coeff: t.coeff.to_string(),
                            exp: Rational2(t.exp.clone()),
                            logpow: t.log_power,
                        })
                        .collect(),
                })
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de, C: Coeff> Deserialize<'de> for PiecewiseFn<C> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = FnRepr::deserialize(d)?;
        let mut pieces = Vec::with_capacity(repr.pieces.len());
        for p in repr.pieces {
            let mut terms = Vec::with_capacity(p.terms.len());
            for t in p.terms {
                let c = parse_rational(&t.coeff).map_err(serde::de::Error::custom)?;
                terms.push(Term::new(C::from_rational(&c), t.exp.0, t.logpow));
            }
            pieces.push(Piece::new(p.lo.0, p.hi, terms));
        }
        normalize(pieces).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    type Q = Rational;

    fn pw(exp: Rational) -> Term<Q> {
        Term::power(int(1), exp)
    }

    #[test]
    fn normalize_drops_zero_terms_and_merges() {
        let f = normalize(vec![
            Piece::new(int(0), int(1), vec![pw(int(0)), Term::power(int(0), int(1))]),
            Piece::new(int(1), Extended::Infinity, vec![pw(int(0))]),
        ])
        .unwrap();
        assert_eq!(f, PiecewiseFn::constant(int(1)));
        assert_eq!(f.pieces().len(), 1);
    }

    #[test]
    fn normalize_combines_like_terms_and_adds_zero_tail() {
        let f = normalize(vec![Piece::new(int(0), int(1), vec![pw(int(1)), pw(int(1))])]).unwrap();
        assert_eq!(f.pieces().len(), 2);
        assert_eq!(f.pieces()[0].terms, vec![Term::power(int(2), int(1))]);
        assert!(f.pieces()[1].is_zero());
        assert_eq!(f.pieces()[1].hi, Extended::Infinity);
    }

    #[test]
    fn normalize_rejects_gaps_and_overlaps() {
        let gap = normalize(vec![
            Piece::new(int(0), int(1), vec![pw(int(0))]),
            Piece::new(int(2), Extended::Infinity, vec![pw(int(0))]),
        ]);
        assert!(matches!(gap, Err(Error::MalformedPartition(_))));
        let overlap = normalize(vec![
            Piece::new(int(0), int(2), vec![pw(int(0))]),
            Piece::new(int(1), Extended::Infinity, vec![pw(int(0))]),
        ]);
        assert!(matches!(overlap, Err(Error::MalformedPartition(_))));
        let late = normalize(vec![Piece::<Q>::zero(int(1), Extended::Infinity)]);
        assert!(late.is_err());
    }

    #[test]
    fn evaluate_uses_right_piece_at_breakpoint() {
        let f = PiecewiseFn::<Q>::indicator(int(0), int(1)).unwrap();
        assert_eq!(f.evaluate(1.0), 0.0);
        assert_eq!(f.evaluate(0.999), 1.0);
    }

    #[test]
    fn evaluate_example_transform_and_log() {
        let fhat = PiecewiseFn::from_pieces(vec![
            Piece::new(int(0), int(1), vec![pw(int(1))]),
            Piece::new(int(1), Extended::Infinity, vec![pw(ratio(-1, 2))]),
        ])
        .unwrap();
        assert!((fhat.evaluate(4.0) - 0.5).abs() < 1e-15);
        let xlnx = PiecewiseFn::from_pieces(vec![Piece::new(
            int(0),
            Extended::Infinity,
            vec![Term::new(int(1), int(1), 1)],
        )])
        .unwrap();
        let e = std::f64::consts::E;
        assert!((xlnx.evaluate(e) - e).abs() < 1e-14);
        assert!((xlnx.evaluate_as(e as f32) - e as f32).abs() < 1e-5);
    }

    #[test]
    fn leading_behavior_selection() {
        let f = PiecewiseFn::from_pieces(vec![Piece::new(
            int(0),
            Extended::Infinity,
            vec![pw(int(2)), pw(int(1))],
        )])
        .unwrap();
        let z = f.leading_behavior(Endpoint::ZeroPlus).unwrap();
        assert_eq!((z.exponent, z.log_power, z.coeff), (int(1), 0, int(1)));
        let i = f.leading_behavior(Endpoint::Infinity).unwrap();
        assert_eq!((i.exponent, i.log_power), (int(2), 0));

        let c = PiecewiseFn::constant(int(1));
        let z = c.leading_behavior(Endpoint::ZeroPlus).unwrap();
        assert_eq!((z.exponent, z.log_power), (int(0), 0));
        assert!(PiecewiseFn::<Q>::zero().leading_behavior(Endpoint::Infinity).is_none());

        // equal exponents: the log term dominates at both ends
        let g = PiecewiseFn::from_pieces(vec![Piece::new(
            int(0),
            Extended::Infinity,
            vec![pw(int(0)), Term::new(int(1), int(0), 2)],
        )])
        .unwrap();
        assert_eq!(g.leading_behavior(Endpoint::ZeroPlus).unwrap().log_power, 2);
        assert_eq!(g.leading_behavior(Endpoint::Infinity).unwrap().log_power, 2);
    }

    #[test]
    fn leading_behavior_of_decaying_multiplier() {
        let phi = PiecewiseFn::from_pieces(vec![
            Piece::new(int(0), int(1), vec![pw(int(0))]),
            Piece::new(int(1), Extended::Infinity, vec![pw(ratio(-2, 3))]),
        ])
        .unwrap();
        let lb = phi.leading_behavior(Endpoint::Infinity).unwrap();
        assert_eq!(lb.exponent, ratio(-2, 3));
        assert_eq!(lb.log_power, 0);
        assert!(lb.is_bounded());
    }

    #[test]
    fn json_round_trip() {
        let f = PiecewiseFn::from_pieces(vec![
            Piece::new(int(0), int(1), vec![pw(int(0))]),
            Piece::new(
                int(1),
                Extended::Infinity,
                vec![Term::new(ratio(-2, 3), ratio(-5, 3), 1)],
            ),
        ])
        .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"exp\":\"-5/3\""), "{s}");
        assert!(s.contains("\"hi\":\"inf\""), "{s}");
        let g: PiecewiseFn<Q> = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn convert_between_fields() {
        let f = PiecewiseFn::from_pieces(vec![Piece::new(
            int(0),
            int(2),
            vec![Term::power(ratio(1, 4), ratio(1, 2))],
        )])
        .unwrap();
        let g: PiecewiseFn<f64> = f.convert();
        assert_eq!(g.pieces()[0].terms[0].coeff, 0.25);
        let back: PiecewiseFn<Q> = g.convert();
        assert_eq!(back, f);
    }
}
