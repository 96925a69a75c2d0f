//! Text format for piecewise functions.
//!
//! ```text
//! pieces := piece { ";" piece } ;
//! piece  := bound ".." bound ":" expr ;
//! bound  := rational | "inf" ;
//! expr   := term { ("+"|"-") term } | "0" ;
//! term   := [coeff "*"] factor { "*" factor } ;
//! factor := "x" ["^" "(" rational ")" | "^" rational] | "ln(x)" ["^" integer] | rational ;
//! ```
//!
//! Rationals are `n`, `n/d` or finite decimals, all read exactly. A leading
//! `-` on the first term is accepted. Pieces must partition `(0, inf)`.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Coeff, Extended, Rational};
use crate::symfunc::{normalize, Piece, PiecewiseFn, Term};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn location(&self, pos: usize) -> (usize, usize) {
        let before = &self.src[..pos.min(self.src.len())];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let col_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        (line, pos - col_start + 1)
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> Error {
        let (line, column) = self.location(pos);
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let skipped = self.src[self.pos..]
            .iter()
            .take_while(|b| b.is_ascii_whitespace())
            .count();
        self.error_at(self.pos + skipped, message)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected {tok:?}, found {}", self.describe())))
        }
    }

    fn describe(&self) -> String {
        let next = self.src[self.pos..].iter().find(|b| !b.is_ascii_whitespace());
        match next.copied() {
            None => "end of input".into(),
            Some(c) => format!("{:?}", c as char),
        }
    }

    /// Unsigned `digits [ "/" digits | "." digits ]`.
    fn number(&mut self) -> Result<Rational> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos > s
        };
        if !digits(self) {
            return Err(self.error(format!("expected a number, found {}", self.describe())));
        }
        let rest = &self.src[self.pos..];
        if rest.first() == Some(&b'/') {
            self.pos += 1;
            if !digits(self) {
                return Err(self.error("expected denominator after '/'"));
            }
        } else if rest.first() == Some(&b'.') && rest.get(1).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
            digits(self);
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        parse_rational(text).map_err(|_| self.error_at(start, format!("invalid number {text:?}")))
    }

    fn signed_number(&mut self) -> Result<Rational> {
        if self.eat("-") {
            Ok(-self.number()?)
        } else {
            self.eat("+");
            self.number()
        }
    }

    fn bound(&mut self) -> Result<Extended> {
        if self.eat("inf") {
            Ok(Extended::Infinity)
        } else {
            Ok(Extended::Finite(self.number()?))
        }
    }

    /// Returns `(coeff, exp, log_power)` for one factor.
    fn factor(&mut self) -> Result<(Rational, Rational, u32)> {
        if self.eat("ln(x)") {
            let k = if self.eat("^") {
                let at = self.pos;
                let n = self.number()?;
                if !n.is_integer() || n.is_negative() {
                    return Err(self.error_at(at, "log power must be a nonnegative integer"));
                }
                u32::try_from(n.to_integer()).map_err(|_| self.error_at(at, "log power too large"))?
            } else {
                1
            };
            return Ok((Rational::one(), Rational::zero(), k));
        }
        if self.eat("x") {
            let e = if self.eat("^") {
                if self.eat("(") {
                    let e = self.signed_number()?;
                    self.expect(")")?;
                    e
                } else {
                    self.signed_number()?
                }
            } else {
                Rational::one()
            };
            return Ok((Rational::one(), e, 0));
        }
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok((self.number()?, Rational::zero(), 0)),
            _ => Err(self.error(format!("expected 'x', 'ln(x)' or a number, found {}", self.describe()))),
        }
    }

    fn term(&mut self) -> Result<Term<Rational>> {
        let (mut c, mut e, mut k) = self.factor()?;
        while self.eat("*") {
            let (c2, e2, k2) = self.factor()?;
            c *= c2;
            e += e2;
            k += k2;
        }
        Ok(Term::new(c, e, k))
    }

    fn expr(&mut self) -> Result<Vec<Term<Rational>>> {
        let mut terms = Vec::new();
        let mut negate = self.eat("-");
        loop {
            let t = self.term()?;
            terms.push(if negate {
                Term::new(-t.coeff, t.exp, t.log_power)
            } else {
                t
            });
            if self.eat("+") {
                negate = false;
            } else if self.eat("-") {
                negate = true;
            } else {
                break;
            }
        }
        Ok(terms)
    }

    fn piece(&mut self) -> Result<(usize, Piece<Rational>)> {
        self.skip_ws();
        let start = self.pos;
        let lo = match self.bound()? {
            Extended::Finite(q) => q,
            Extended::Infinity => return Err(self.error_at(start, "piece cannot start at inf")),
        };
        self.expect("..")?;
        let hi = self.bound()?;
        self.expect(":")?;
        let terms = self.expr()?;
        Ok((start, Piece::new(lo, hi, terms)))
    }

    fn pieces(&mut self) -> Result<Vec<(usize, Piece<Rational>)>> {
        let mut pieces = vec![self.piece()?];
        while self.eat(";") {
            if self.peek().is_none() {
                break;
            }
            pieces.push(self.piece()?);
        }
        if self.peek().is_some() {
            return Err(self.error(format!("unexpected {}", self.describe())));
        }
        Ok(pieces)
    }
}

/// Parses the text format into an exact function.
pub fn parse_function(text: &str) -> Result<PiecewiseFn<Rational>> {
    let mut p = Parser::new(text);
    let pieces = p.pieces()?;
    let mut expected = Rational::zero();
    for (i, (at, piece)) in pieces.iter().enumerate() {
        let (line, column) = p.location(*at);
        let fail = |m: String| Error::MalformedPartition(format!("{m} (line {line}, column {column})"));
        if piece.lo != expected {
            return Err(fail(if i == 0 {
                format!("first piece must start at 0, starts at {}", piece.lo)
            } else if piece.lo > expected {
                format!("gap between {expected} and {}", piece.lo)
            } else {
                format!("overlap: piece starts at {} before {expected}", piece.lo)
            }));
        }
        match &piece.hi {
            Extended::Finite(h) if *h <= piece.lo => {
                return Err(fail(format!("empty piece {}..{h}", piece.lo)));
            }
            Extended::Finite(h) => expected = h.clone(),
            Extended::Infinity if i + 1 < pieces.len() => {
                return Err(fail("piece ending at inf must be last".into()));
            }
            Extended::Infinity => {}
        }
    }
    if pieces.last().is_some_and(|(_, pc)| !pc.hi.is_infinite()) {
        return Err(Error::MalformedPartition(format!(
            "partition must end at inf, ends at {expected}"
        )));
    }
    normalize(pieces.into_iter().map(|(_, pc)| pc).collect())
}

fn fmt_exp(f: &mut fmt::Formatter<'_>, e: &Rational) -> fmt::Result {
    if e.is_one() {
        f.write_str("x")
    } else if e.is_integer() && e.is_positive() {
        write!(f, "x^{e}")
    } else {
        write!(f, "x^({e})")
    }
}

fn fmt_term<C: Coeff>(f: &mut fmt::Formatter<'_>, t: &Term<C>, first: bool) -> fmt::Result {
    let negative = t.coeff < C::zero();
    let mag = t.coeff.abs_value();
    if first {
        if negative {
            f.write_str("-")?;
        }
    } else {
        f.write_str(if negative { " - " } else { " + " })?;
    }
    let bare = t.exp.is_zero() && t.log_power == 0;
    let mut sep = false;
    if bare || !mag.is_one() {
        write!(f, "{mag}")?;
        sep = true;
    }
    if !t.exp.is_zero() {
        if sep {
            f.write_str("*")?;
        }
        fmt_exp(f, &t.exp)?;
        sep = true;
    }
    if t.log_power > 0 {
        if sep {
            f.write_str("*")?;
        }
        f.write_str("ln(x)")?;
        if t.log_power > 1 {
            write!(f, "^{}", t.log_power)?;
        }
    }
    Ok(())
}

impl<C: Coeff> fmt::Display for Piece<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}: ", self.lo, self.hi)?;
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            fmt_term(f, t, i == 0)?;
        }
        Ok(())
    }
}

/// Writes the text format; exact functions round-trip through
/// [`parse_function`].
impl<C: Coeff> fmt::Display for PiecewiseFn<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces().iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}
