//! Seeded generators of test functions.
//!
//! Every family keeps antiderivatives exact over rational coefficients:
//!
//! * [`Family::Cubic`]: exponents `k + 1/3`, breakpoints among
//!   `{1/8, 1, 8, 27}`, no logs. Products of two members and their
//!   transforms never produce the exponent `-1`, and every power is rational
//!   at every breakpoint.
//! * [`Family::UnitBreak`]: the single breakpoint `1`, arbitrary rational
//!   exponents and log factors. `x^a` and `ln x` are exact at `1`.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{Extended, Rational};
use crate::symfunc::{differentiate, Piece, PiecewiseFn, Term};
use crate::ExactFn;

/// Default seed for reproducible runs.
pub const DEFAULT_SEED: u64 = 20_240_607;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Cubic,
    UnitBreak,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn coeff<R: Rng>(rng: &mut R) -> Rational {
    let mut n = rng.gen_range(-6i64..=6);
    if n == 0 {
        n = 1;
    }
    q(n, rng.gen_range(1i64..=4))
}

fn pick<R: Rng>(rng: &mut R, from: &[Rational], n: usize) -> Vec<Rational> {
    let mut v: Vec<Rational> = from.choose_multiple(rng, n.min(from.len())).cloned().collect();
    v.sort();
    v
}

fn terms_with<R: Rng>(rng: &mut R, exps: &[Rational], max_log: u32) -> Vec<Term<Rational>> {
    let n = rng.gen_range(1..=2usize);
    pick(rng, exps, n)
        .into_iter()
        .map(|e| Term::new(coeff(rng), e, rng.gen_range(0..=max_log)))
        .collect()
}

/// A random `L_1` function integrable at `0+`.
pub fn random_l1<R: Rng>(rng: &mut R, family: Family) -> ExactFn {
    match family {
        Family::Cubic => {
            let inner = [q(-2, 3), q(1, 3), q(4, 3)];
            let tail = [q(-5, 3), q(-8, 3)];
            let all = [q(-5, 3), q(-2, 3), q(1, 3), q(4, 3)];
            let n_breaks = rng.gen_range(1..=3usize);
            let breaks = pick(rng, &[q(1, 8), q(1, 1), q(8, 1), q(27, 1)], n_breaks);
            let mut pieces = Vec::new();
            let mut lo = Rational::zero();
            for (i, b) in breaks.iter().enumerate() {
                let terms = if rng.gen_bool(0.15) {
                    Vec::new()
                } else if i == 0 {
                    terms_with(rng, &inner, 0)
                } else {
                    terms_with(rng, &all, 0)
                };
                pieces.push(Piece::new(lo.clone(), b.clone(), terms));
                lo = b.clone();
            }
            let terms = if rng.gen_bool(0.3) {
                Vec::new()
            } else {
                terms_with(rng, &tail, 0)
            };
            pieces.push(Piece::new(lo, Extended::Infinity, terms));
            PiecewiseFn::from_pieces(pieces).expect("valid partition")
        }
        Family::UnitBreak => {
            let head: Vec<Rational> = [(-1, 2), (-1, 3), (0, 1), (1, 2), (1, 1), (5, 3), (2, 1)]
                .iter()
                .map(|&(n, d)| q(n, d))
                .collect();
            let tail: Vec<Rational> = [(-3, 2), (-2, 1), (-7, 3), (-5, 2), (-3, 1)]
                .iter()
                .map(|&(n, d)| q(n, d))
                .collect();
            let a = terms_with(rng, &head, 2);
            let b = if rng.gen_bool(0.2) {
                Vec::new()
            } else {
                terms_with(rng, &tail, 1)
            };
            PiecewiseFn::from_pieces(vec![
                Piece::new(Rational::zero(), Rational::one(), a),
                Piece::new(Rational::one(), Extended::Infinity, b),
            ])
            .expect("valid partition")
        }
    }
}

/// Two members of the same randomly chosen family.
pub fn random_l1_pair<R: Rng>(rng: &mut R) -> (ExactFn, ExactFn) {
    let fam = if rng.gen_bool(0.5) {
        Family::Cubic
    } else {
        Family::UnitBreak
    };
    (random_l1(rng, fam), random_l1(rng, fam))
}

pub fn random_l1_triple<R: Rng>(rng: &mut R) -> (ExactFn, ExactFn, ExactFn) {
    let fam = if rng.gen_bool(0.5) {
        Family::Cubic
    } else {
        Family::UnitBreak
    };
    (random_l1(rng, fam), random_l1(rng, fam), random_l1(rng, fam))
}

/// A nonzero member of every `A_p`, built from its transform `F`: positive
/// exponents on `(0,1)`, a tail decaying faster than `1/x`, continuous at
/// `1`. Returns `(f, F)`.
pub fn random_ap<R: Rng>(rng: &mut R) -> (ExactFn, ExactFn) {
    let head: Vec<Rational> = [(1, 2), (1, 1), (3, 2), (2, 1), (7, 3)]
        .iter()
        .map(|&(n, d)| q(n, d))
        .collect();
    let tail: Vec<Rational> = [(-3, 2), (-2, 1), (-5, 2), (-3, 1), (-4, 1)]
        .iter()
        .map(|&(n, d)| q(n, d))
        .collect();
    loop {
        let a = terms_with(rng, &head, 0);
        let n = rng.gen_range(1..=2usize);
        let mut b: Vec<Term<Rational>> = pick(rng, &tail, n)
            .into_iter()
            .map(|e| Term::power(coeff(rng), e))
            .collect();
        let at_one: Rational = a.iter().map(|t| t.coeff.clone()).sum();
        let rest: Rational = b.iter().skip(1).map(|t| t.coeff.clone()).sum();
        b[0].coeff = at_one - rest;
        let big_f = PiecewiseFn::from_pieces(vec![
            Piece::new(Rational::zero(), Rational::one(), a),
            Piece::new(Rational::one(), Extended::Infinity, b),
        ])
        .expect("valid partition");
        if !big_f.is_zero() {
            return (differentiate(&big_f), big_f);
        }
    }
}

/// Single pure power `c x^a` on `[lo, hi)`, zero elsewhere, with its
/// support possibly touching `0` or `inf`, and an exponent `p` from a
/// small grid. Some draws have divergent `L_p` norms.
pub fn random_pure_power<R: Rng>(rng: &mut R) -> (ExactFn, Rational) {
    let lo = if rng.gen_bool(0.4) {
        Rational::zero()
    } else {
        q(rng.gen_range(1..=8), rng.gen_range(1..=4))
    };
    let hi = if rng.gen_bool(0.4) {
        Extended::Infinity
    } else {
        Extended::Finite(&lo + q(rng.gen_range(1..=12), rng.gen_range(1..=3)))
    };
    let a = q(rng.gen_range(-16..=10), rng.gen_range(1..=6));
    let p = [q(1, 1), q(3, 2), q(2, 1), q(5, 2), q(3, 1), q(4, 1)]
        .choose(rng)
        .cloned()
        .expect("nonempty");
    let f = PiecewiseFn::supported_on(lo, hi, vec![Term::power(coeff(rng), a)]).expect("nonempty support");
    (f, p)
}

/// Bounded, continuous `phi` with an integrable, decaying derivative:
/// `c0 + c1 x^b` on `(0,1)` and `d0 + d1 x^(-a)` on `[1, inf)`.
pub fn random_bounded_phi<R: Rng>(rng: &mut R) -> ExactFn {
    let b = q(rng.gen_range(1..=6), rng.gen_range(1..=3));
    let a = q(rng.gen_range(1..=8), rng.gen_range(1..=4));
    let c0 = coeff(rng);
    let c1 = coeff(rng);
    let d1 = coeff(rng);
    let d0 = &c0 + &c1 - &d1;
    PiecewiseFn::from_pieces(vec![
        Piece::new(
            Rational::zero(),
            Rational::one(),
            vec![Term::constant(c0), Term::power(c1, b)],
        ),
        Piece::new(
            Rational::one(),
            Extended::Infinity,
            vec![Term::constant(d0), Term::power(d1, -a)],
        ),
    ])
    .expect("valid partition")
}

/// Tent parameters `0 < alpha < beta < gamma` and `r` in `[1, 4]`.
pub fn random_tent_params<R: Rng>(rng: &mut R) -> (Rational, Rational, Rational, Rational) {
    let a = q(rng.gen_range(1..=12), rng.gen_range(1..=4));
    let b = &a + q(rng.gen_range(1..=12), rng.gen_range(1..=4));
    let c = &b + q(rng.gen_range(1..=12), rng.gen_range(1..=4));
    let den = rng.gen_range(1..=4i64);
    let r = q(rng.gen_range(den..=4 * den), den);
    (a, b, c, r)
}

/// Random exact function for format round trips: up to four pieces,
/// arbitrary signs, exponents and log powers.
pub fn random_any<R: Rng>(rng: &mut R) -> ExactFn {
    let n = rng.gen_range(0..=3usize);
    let mut cuts: Vec<Rational> = (0..n).map(|_| q(rng.gen_range(1..=40), rng.gen_range(1..=5))).collect();
    cuts.sort();
    cuts.dedup();
    let mut pieces = Vec::new();
    let mut lo = Rational::zero();
    for c in cuts
        .into_iter()
        .map(Extended::Finite)
        .chain(std::iter::once(Extended::Infinity))
    {
        let k = rng.gen_range(0..=3usize);
        let terms = (0..k)
            .map(|_| {
                Term::new(
                    coeff(rng),
                    q(rng.gen_range(-9..=9), rng.gen_range(1..=4)),
                    rng.gen_range(0..=2),
                )
            })
            .collect();
        pieces.push(Piece::new(lo.clone(), c.clone(), terms));
        if let Extended::Finite(h) = c {
            lo = h;
        }
    }
    PiecewiseFn::from_pieces(pieces).expect("valid partition")
}
