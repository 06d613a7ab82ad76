//! Text grammar for families and parameter polynomials.
//!
//! Expressions are sums of terms built from rational literals, the
//! dynamical variable `x` and the parameter `l`, with `+ - * / ^` and
//! parentheses, e.g. `x^3 + (2*l^2+1) + l*x` or `3/2*l^2`. Division is only
//! allowed by a nonzero constant. Whitespace is ignored.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::{LamPoly, RatPoly, Rational};

/// Polynomial in `x` whose coefficients are polynomials in `l`;
/// `0[i]` is the coefficient of `x^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPoly(pub Vec<LamPoly>);

impl BiPoly {
    fn normalized(mut v: Vec<LamPoly>) -> Self {
        while v.last().is_some_and(|c| c.is_zero()) {
            v.pop();
        }
        BiPoly(v)
    }

    fn constant(c: LamPoly) -> Self {
        Self::normalized(vec![c])
    }

    fn x() -> Self {
        Self::normalized(vec![LamPoly::zero(), LamPoly::one()])
    }

    fn coeff(&self, i: usize) -> LamPoly {
        self.0.get(i).cloned().unwrap_or_else(LamPoly::zero)
    }

    fn add(&self, o: &BiPoly) -> BiPoly {
        let n = self.0.len().max(o.0.len());
        Self::normalized((0..n).map(|i| &self.coeff(i) + &o.coeff(i)).collect())
    }

    fn neg(&self) -> BiPoly {
        Self::normalized(self.0.iter().map(|c| -c).collect())
    }

    fn mul(&self, o: &BiPoly) -> BiPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return BiPoly(Vec::new());
        }
        let mut out = vec![LamPoly::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Self::normalized(out)
    }

    fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 if self.0[0].is_constant() => Some(self.0[0].coeff(0)),
            _ => None,
        }
    }

    /// Degree in `x`, or `None` for the zero polynomial.
    pub fn x_degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn depends_on_x(&self) -> bool {
        self.0.len() > 1
    }
}

/// Parses a polynomial in `x` and `l`.
pub fn parse_bipoly(src: &str) -> Result<BiPoly> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

/// Parses a polynomial in `l` only.
pub fn parse_lampoly(src: &str) -> Result<LamPoly> {
    let b = parse_bipoly(src)?;
    if b.depends_on_x() {
        return Err(Error::Parse { pos: 0, msg: "expected a polynomial in l only".into() });
    }
    Ok(b.coeff(0))
}

/// Parses a polynomial in `x` with constant (rational) coefficients.
pub fn parse_ratpoly(src: &str) -> Result<RatPoly> {
    let b = parse_bipoly(src)?;
    let mut coeffs = Vec::with_capacity(b.0.len());
    for c in &b.0 {
        if !c.is_constant() {
            return Err(Error::Parse { pos: 0, msg: "expected constant coefficients (no l)".into() });
        }
        coeffs.push(c.coeff(0));
    }
    Ok(RatPoly::new(coeffs))
}

/// Parses an exact rational such as `-3/2`, `7` or `0.25`.
pub fn parse_rational(src: &str) -> Result<Rational> {
    let b = parse_bipoly(src)?;
    b.as_constant()
        .ok_or_else(|| Error::Parse { pos: 0, msg: "expected a rational constant".into() })
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { pos: self.pos, msg: msg.to_string() }
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

    fn expr(&mut self) -> Result<BiPoly> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                self.term()?.neg()
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?.neg());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<BiPoly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.power()?;
                    let c = d.as_constant().ok_or(Error::Parse {
                        pos: at,
                        msg: "division only by a rational constant".into(),
                    })?;
                    if c.is_zero() {
                        return Err(Error::Parse { pos: at, msg: "division by zero".into() });
                    }
                    acc = acc.mul(&BiPoly::constant(LamPoly::constant(c.recip())));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<BiPoly> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a nonnegative integer exponent"));
            }
            let e: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| Error::Parse { pos: start, msg: "exponent too large".into() })?;
            let mut acc = BiPoly::constant(LamPoly::one());
            for _ in 0..e {
                acc = acc.mul(&base);
            }
            return Ok(acc);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<BiPoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'x') => {
                self.pos += 1;
                Ok(BiPoly::x())
            }
            Some(b'l') => {
                self.pos += 1;
                Ok(BiPoly::constant(LamPoly::x()))
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(self.power()?.neg())
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<BiPoly> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = &self.src[start..self.pos];
        let mut frac_part: &[u8] = &[];
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac_part = &self.src[fs..self.pos];
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(Error::Parse { pos: start, msg: "malformed number".into() });
        }
        let digits: String = int_part
            .iter()
            .chain(frac_part.iter())
            .map(|&b| b as char)
            .collect();
        let numer: BigInt = digits.parse().unwrap_or_default();
        let denom = BigInt::from(10).pow(frac_part.len() as u32);
        let value = Rational::new(numer, denom);
        Ok(BiPoly::constant(LamPoly::constant(value)))
    }
}
