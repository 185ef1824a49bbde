//! Text grammar for polynomials and rationals: signed terms
//! `c x1^a1 x2^a2 ...` with coefficients `p` or `p/q`. Parsed and emitted
//! bit-exactly; emission orders terms by descending lexicographic exponent.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use singres_core::arith::Rat;
use singres_core::poly::{Coeff, SparsePoly, CF64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(pub String);

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "parse error: {}", self.0)
    }
}

impl std::error::Error for ParseError {}

pub fn parse_rat(s: &str) -> Result<Rat, ParseError> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| ParseError(format!("bad integer `{num}`")))?;
    let d: BigInt = den.parse().map_err(|_| ParseError(format!("bad integer `{den}`")))?;
    if d.is_zero() {
        return Err(ParseError("zero denominator".into()));
    }
    Ok(Rat::new(n, d))
}

pub fn rat_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

struct Lexer<'a> {
    rest: &'a str,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }
}

/// One parsed term: rational coefficient and (1-based variable, exponent)
/// factors.
fn parse_term(body: &str) -> Result<(Rat, Vec<(usize, i64)>), ParseError> {
    let mut lex = Lexer { rest: body.trim() };
    if lex.rest.is_empty() {
        return Err(ParseError("empty term".into()));
    }
    let mut coef = <Rat as One>::one();
    let mut have_coef = false;
    lex.skip_ws();
    if lex.rest.starts_with(|c: char| c.is_ascii_digit()) {
        let end = lex
            .rest
            .find(|c: char| !(c.is_ascii_digit() || c == '/'))
            .unwrap_or(lex.rest.len());
        coef = parse_rat(&lex.rest[..end])?;
        lex.rest = &lex.rest[end..];
        have_coef = true;
    }
    let mut factors = Vec::new();
    loop {
        lex.skip_ws();
        if lex.rest.starts_with('*') {
            lex.rest = &lex.rest[1..];
            continue;
        }
        if lex.rest.is_empty() {
            break;
        }
        if !lex.rest.starts_with('x') {
            return Err(ParseError(format!("expected variable, found `{}`", lex.rest)));
        }
        lex.rest = &lex.rest[1..];
        let end = lex
            .rest
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(lex.rest.len());
        if end == 0 {
            return Err(ParseError("variable needs an index, e.g. x1".into()));
        }
        let idx: usize = lex.rest[..end]
            .parse()
            .map_err(|_| ParseError("bad variable index".into()))?;
        if idx == 0 {
            return Err(ParseError("variable indices start at 1".into()));
        }
        lex.rest = &lex.rest[end..];
        let mut exp = 1i64;
        if lex.rest.starts_with('^') {
            lex.rest = &lex.rest[1..];
            let neg = lex.rest.starts_with('-');
            if neg {
                lex.rest = &lex.rest[1..];
            }
            let end = lex
                .rest
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(lex.rest.len());
            if end == 0 {
                return Err(ParseError("missing exponent after ^".into()));
            }
            exp = lex.rest[..end]
                .parse()
                .map_err(|_| ParseError("bad exponent".into()))?;
            if neg {
                exp = -exp;
            }
            lex.rest = &lex.rest[end..];
        }
        factors.push((idx, exp));
    }
    if factors.is_empty() && !have_coef {
        return Err(ParseError(format!("cannot parse term `{body}`")));
    }
    Ok((coef, factors))
}

/// Parses the full grammar; `nvars` widens the ambient space when given.
pub fn parse_poly(input: &str, nvars: Option<usize>) -> Result<SparsePoly<Rat>, ParseError> {
    let s = input.trim();
    if s.is_empty() {
        return Err(ParseError("empty polynomial".into()));
    }
    // split into signed term bodies
    let mut terms: Vec<(i8, String)> = Vec::new();
    let mut sign: i8 = 1;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '+' | '-' => {
                if !cur.trim().is_empty() {
                    terms.push((sign, cur.clone()));
                }
                cur.clear();
                sign = if ch == '-' { -1 } else { 1 };
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        terms.push((sign, cur));
    }
    if terms.is_empty() {
        return Err(ParseError("no terms".into()));
    }
    let mut parsed = Vec::new();
    let mut max_var = 0usize;
    for (sgn, body) in terms {
        let (coef, factors) = parse_term(&body)?;
        for (idx, _) in &factors {
            max_var = max_var.max(*idx);
        }
        parsed.push((sgn, coef, factors));
    }
    let n = nvars.unwrap_or(max_var).max(max_var).max(1);
    let mut poly = SparsePoly::zero(n);
    for (sgn, coef, factors) in parsed {
        let mut e = vec![0i64; n];
        for (idx, exp) in factors {
            e[idx - 1] += exp;
        }
        let c = if sgn < 0 { -coef } else { coef };
        poly.add_term(e, c);
    }
    Ok(poly)
}

/// Canonical emission: descending lexicographic exponent order.
pub fn poly_string(p: &SparsePoly<Rat>) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut terms: Vec<(Vec<i64>, Rat)> =
        p.terms().map(|(e, c)| (e.clone(), c.clone())).collect();
    terms.sort_by(|a, b| b.0.cmp(&a.0));
    let mut out = String::new();
    for (i, (e, c)) in terms.iter().enumerate() {
        let negative = c.is_negative();
        let mag = if negative { -c.clone() } else { c.clone() };
        if i == 0 {
            if negative {
                out.push('-');
            }
        } else {
            out.push_str(if negative { " - " } else { " + " });
        }
        let monomial: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(j, &x)| {
                if x == 1 {
                    format!("x{}", j + 1)
                } else {
                    format!("x{}^{}", j + 1, x)
                }
            })
            .collect();
        if monomial.is_empty() {
            out.push_str(&rat_string(&mag));
        } else {
            if !mag.is_one() {
                out.push_str(&rat_string(&mag));
                out.push(' ');
            }
            out.push_str(&monomial.join(" "));
        }
    }
    out
}

pub fn to_complex(p: &SparsePoly<Rat>) -> SparsePoly<CF64> {
    p.map_coeffs(|c| CF64::from_rat(c))
}

pub fn complex_string(z: &CF64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}
