use num_traits::{One, Zero};

use super::{canonical_terms, normalize, Piece, PiecewiseFn, Term};
use crate::error::{Error, Result};
use crate::scalar::{Coeff, Extended, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointwiseOp {
    Add,
    Mul,
}

/// Pointwise sum or product on the common refinement of both partitions.
pub fn pointwise<C: Coeff>(op: PointwiseOp, f: &PiecewiseFn<C>, g: &PiecewiseFn<C>) -> PiecewiseFn<C> {
    let fp = f.pieces();
    let gp = g.pieces();
    let (mut i, mut j) = (0usize, 0usize);
    let mut lo = Rational::zero();
    let mut out = Vec::with_capacity(fp.len() + gp.len());
    loop {
        let a = &fp[i];
        let b = &gp[j];
        let hi = std::cmp::min(&a.hi, &b.hi).clone();
        let terms = match op {
            PointwiseOp::Add => a.terms.iter().chain(b.terms.iter()).cloned().collect(),
            PointwiseOp::Mul => a
                .terms
                .iter()
                .flat_map(|s| b.terms.iter().map(move |t| s.mul(t)))
                .collect(),
        };
        out.push(Piece::new(lo.clone(), hi.clone(), terms));
        match hi {
            Extended::Infinity => break,
            Extended::Finite(h) => {
                if a.hi == Extended::Finite(h.clone()) {
                    i += 1;
                }
                if b.hi == Extended::Finite(h.clone()) {
                    j += 1;
                }
                lo = h;
            }
        }
    }
    normalize(out).expect("refinement of two partitions is a partition")
}

pub(crate) fn differentiate_terms<C: Coeff>(terms: &[Term<C>]) -> Vec<Term<C>> {
    let mut out = Vec::with_capacity(2 * terms.len());
    for t in terms {
        let e1 = &t.exp - Rational::one();
        if !t.exp.is_zero() {
            out.push(Term::new(
                t.coeff.clone() * C::from_rational(&t.exp),
                e1.clone(),
                t.log_power,
            ));
        }
        if t.log_power > 0 {
            out.push(Term::new(
                t.coeff.clone() * C::from_i64(t.log_power as i64),
                e1,
                t.log_power - 1,
            ));
        }
    }
    canonical_terms(out)
}

/// Piecewise derivative; breakpoints are a null set and jumps are ignored.
pub fn differentiate<C: Coeff>(f: &PiecewiseFn<C>) -> PiecewiseFn<C> {
    let pieces = f
        .pieces()
        .iter()
        .map(|p| Piece::new(p.lo.clone(), p.hi.clone(), differentiate_terms(&p.terms)))
        .collect();
    normalize(pieces).expect("partition unchanged")
}

/// Antiderivative of one term without constant of integration.
fn integrate_term<C: Coeff>(t: &Term<C>, out: &mut Vec<Term<C>>) {
    let a1 = &t.exp + Rational::one();
    if a1.is_zero() {
        // c x^-1 ln^k  ->  c ln^(k+1) / (k+1)
        out.push(Term::new(
            t.coeff.clone() / C::from_i64(t.log_power as i64 + 1),
            Rational::zero(),
            t.log_power + 1,
        ));
        return;
    }
    // c x^a ln^k -> sum_j c (-1)^(k-j) k!/j! x^(a+1) ln^j / (a+1)^(k-j+1)
    let inv = C::one() / C::from_rational(&a1);
    let mut coeff = t.coeff.clone() * inv.clone();
    let mut j = t.log_power;
    loop {
        out.push(Term::new(coeff.clone(), a1.clone(), j));
        if j == 0 {
            break;
        }
        coeff = -(coeff * C::from_i64(j as i64) * inv.clone());
        j -= 1;
    }
}

/// `F(x) = integral of f over (0, x)`, exact within the family.
///
/// Fails when the first piece is not integrable at `0+` (some term with
/// exponent `<= -1`), and, for exact coefficients, when a constant of
/// integration at a breakpoint is irrational.
pub fn antiderivative_from_zero<C: Coeff>(f: &PiecewiseFn<C>) -> Result<PiecewiseFn<C>> {
    let pieces = f.pieces();
    if let Some(t) = pieces[0].terms.iter().find(|t| t.exp <= -Rational::one()) {
        let lead = pieces[0].leading(super::Endpoint::ZeroPlus).unwrap_or(t);
        return Err(Error::NonIntegrableAtZero {
            exponent: lead.exp.clone(),
            log_power: lead.log_power,
        });
    }
    let mut out: Vec<Piece<C>> = Vec::with_capacity(pieces.len());
    // value of F at the left end of the current piece
    let mut carry = C::zero();
    for (idx, p) in pieces.iter().enumerate() {
        let mut terms = Vec::with_capacity(p.terms.len() + 1);
        for t in &p.terms {
            integrate_term(t, &mut terms);
        }
        let terms = canonical_terms(terms);
        let piece = Piece::new(p.lo.clone(), p.hi.clone(), terms);
        // on the first piece every exponent of the antiderivative is > 0, so G(0+) = 0
        let offset = if idx == 0 {
            C::zero()
        } else {
            carry.clone() - piece.eval_exact(&p.lo)?
        };
        let mut terms = piece.terms;
        if !offset.is_zero() {
            terms.push(Term::constant(offset));
        }
        let piece = Piece::new(p.lo.clone(), p.hi.clone(), canonical_terms(terms));
        if let Extended::Finite(h) = &p.hi {
            carry = piece.eval_exact(h)?;
        }
        out.push(piece);
    }
    normalize(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use crate::symfunc::Endpoint;

    type Q = Rational;

    fn fn2(a: Vec<Term<Q>>, b: Vec<Term<Q>>) -> PiecewiseFn<Q> {
        PiecewiseFn::from_pieces(vec![
            Piece::new(int(0), int(1), a),
            Piece::new(int(1), Extended::Infinity, b),
        ])
        .unwrap()
    }

    #[test]
    fn mul_adds_exponents() {
        let f = fn2(vec![], vec![Term::power(int(1), ratio(-1, 2))]);
        let g = f.mul(&f);
        assert_eq!(g, fn2(vec![], vec![Term::power(int(1), int(-1))]));
    }

    #[test]
    fn add_inverse_is_zero() {
        let f = fn2(
            vec![Term::power(int(3), ratio(1, 3)), Term::new(int(1), int(2), 1)],
            vec![Term::power(int(-2), ratio(-3, 2))],
        );
        assert!(f.add(&f.neg()).is_zero());
    }

    #[test]
    fn product_of_multiplier_and_witness_transform() {
        let phi = fn2(vec![Term::constant(int(1))], vec![Term::power(int(1), ratio(1, 2))]);
        let fhat = fn2(
            vec![Term::power(int(1), int(1))],
            vec![Term::power(int(1), ratio(-5, 6))],
        );
        let prod = phi.mul(&fhat);
        assert_eq!(
            prod,
            fn2(
                vec![Term::power(int(1), int(1))],
                vec![Term::power(int(1), ratio(-1, 3))]
            )
        );
    }

    #[test]
    fn refinement_of_different_partitions() {
        let f = PiecewiseFn::<Q>::indicator(int(0), int(2)).unwrap();
        let g = PiecewiseFn::<Q>::indicator(int(1), int(3)).unwrap();
        let s = f.add(&g);
        assert_eq!(s.breakpoints(), vec![int(1), int(2), int(3)]);
        assert_eq!(s.evaluate(1.5), 2.0);
        let m = f.mul(&g);
        assert_eq!(m, PiecewiseFn::indicator(int(1), int(2)).unwrap());
    }

    #[test]
    fn derivative_examples() {
        let f = fn2(vec![], vec![Term::power(int(1), ratio(-2, 3))]);
        assert_eq!(
            differentiate(&f),
            fn2(vec![], vec![Term::power(ratio(-2, 3), ratio(-5, 3))])
        );
        assert!(differentiate(&PiecewiseFn::constant(int(1))).is_zero());
        let xlnx = PiecewiseFn::from_pieces(vec![Piece::new(
            int(0),
            Extended::Infinity,
            vec![Term::new(int(1), int(1), 1)],
        )])
        .unwrap();
        let expected = PiecewiseFn::from_pieces(vec![Piece::new(
            int(0),
            Extended::Infinity,
            vec![Term::new(int(1), int(0), 1), Term::constant(int(1))],
        )])
        .unwrap();
        assert_eq!(differentiate(&xlnx), expected);
    }

    #[test]
    fn antiderivative_of_power_tail_example() {
        let f = fn2(
            vec![Term::constant(int(1))],
            vec![Term::power(ratio(-1, 2), ratio(-3, 2))],
        );
        let fhat = antiderivative_from_zero(&f).unwrap();
        assert_eq!(
            fhat,
            fn2(
                vec![Term::power(int(1), int(1))],
                vec![Term::power(int(1), ratio(-1, 2))]
            )
        );
    }

    #[test]
    fn antiderivative_edge_cases() {
        assert!(antiderivative_from_zero(&PiecewiseFn::<Q>::zero()).unwrap().is_zero());
        let f = PiecewiseFn::supported_on(int(0), int(1), vec![Term::power(int(1), int(-1))]).unwrap();
        match antiderivative_from_zero(&f) {
            Err(Error::NonIntegrableAtZero { exponent, .. }) => assert_eq!(exponent, int(-1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn antiderivative_of_log_terms_and_reciprocal_later_piece() {
        // x ln x on (0,1) then 1/x on [1, inf)
        let f = fn2(vec![Term::new(int(1), int(1), 1)], vec![Term::power(int(1), int(-1))]);
        let big_f = antiderivative_from_zero(&f).unwrap();
        // int_0^1 x ln x = -1/4; then -1/4 + ln x
        assert!((big_f.evaluate(1.0) + 0.25).abs() < 1e-15);
        assert!((big_f.evaluate(10.0) - (10f64.ln() - 0.25)).abs() < 1e-14);
        assert_eq!(differentiate(&big_f), f);
        assert_eq!(big_f.leading_behavior(Endpoint::Infinity).unwrap().log_power, 1);
    }

    #[test]
    fn exact_constants_may_be_irrational() {
        let f = PiecewiseFn::supported_on(int(2), Extended::Infinity, vec![Term::power(int(1), ratio(-3, 2))]).unwrap();
        assert!(matches!(
            antiderivative_from_zero(&f),
            Err(Error::InexactConstant { .. })
        ));
        let ff: PiecewiseFn<f64> = f.convert();
        let big_f = antiderivative_from_zero(&ff).unwrap();
        // int_2^x t^-3/2 = 2/sqrt(2) - 2/sqrt(x)
        let x = 9.0;
        assert!((big_f.evaluate(x) - (2.0 / 2f64.sqrt() - 2.0 / 3.0)).abs() < 1e-14);
    }
}
