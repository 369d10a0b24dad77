//! Text form of invariant expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := ['-'] [rational '*'] factor ('*' factor)*
//! factor := 'CD' '[' idx ']' ('@' factor | '[' factor ']' | '(' factor ')')
//!         | 'R' '[' idx ',' idx ',' idx ',' idx [';' idx (',' idx)*] ']'
//!         | 'R' | 'RicciScalar' | 'Ricci' '[' idx ',' idx ']'
//!         | 'eps' '[' idx ',' idx ',' idx ',' idx ']'
//! idx    := ['-'] letter (letter | digit)*
//! ```
//!
//! Covariant derivatives nest outermost first; in `R[a,b,c,d;e,f]` the
//! derivative indices are innermost first (`∇_f ∇_e R_{abcd}`). A leading `-`
//! marks a lowered index; variance does not affect contraction.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::canon::MonomialComb;
use crate::error::{Error, Result};
use crate::monomial::{LabeledTerm, Monomial};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_alphanumeric() {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|x| x.1).collect();
            out.push((pos, Tok::Ident(s)));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|x| x.1).collect();
            out.push((pos, Tok::Int(s.parse().expect("digits"))));
        } else if "[](),;*/+-@".contains(c) {
            out.push((pos, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Parse {
                offset: pos,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

/// One parsed factor before labels are resolved.
struct RawFactor {
    /// Index names with source positions: 4 Riemann slots then derivatives
    /// innermost first, or 4 ε slots.
    indices: Vec<(String, usize)>,
    eps: bool,
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    fresh: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn fresh_label(&mut self) -> (String, usize) {
        self.fresh += 1;
        // digits first cannot clash with user names, which start with a letter
        (format!("{}_", self.fresh), self.offset())
    }

    fn index(&mut self) -> Result<(String, usize)> {
        self.eat('-');
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok((name, at))
            }
            _ => self.err("expected an index"),
        }
    }

    fn index_list(&mut self, n: usize) -> Result<Vec<(String, usize)>> {
        let mut v = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                self.expect(',')?;
            }
            v.push(self.index()?);
        }
        Ok(v)
    }

    fn factor(&mut self) -> Result<RawFactor> {
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return self.err("expected a factor");
        };
        self.pos += 1;
        match name.as_str() {
            "CD" => {
                self.expect('[')?;
                let d = self.index()?;
                self.expect(']')?;
                let mut inner = if self.eat('@') {
                    self.factor()?
                } else if self.eat('[') {
                    let f = self.factor()?;
                    self.expect(']')?;
                    f
                } else if self.eat('(') {
                    let f = self.factor()?;
                    self.expect(')')?;
                    f
                } else {
                    return self.err("expected '@', '[' or '(' after CD[..]");
                };
                if inner.eps {
                    return Err(Error::Unsupported("derivative of ε vanishes; not accepted".into()));
                }
                inner.indices.push(d);
                Ok(inner)
            }
            "R" => {
                if !self.eat('[') {
                    let (x, y) = (self.fresh_label(), self.fresh_label());
                    return Ok(RawFactor {
                        indices: vec![x.clone(), y.clone(), x, y],
                        eps: false,
                    });
                }
                let mut idx = self.index_list(4)?;
                if self.eat(';') {
                    idx.push(self.index()?);
                    while self.eat(',') {
                        idx.push(self.index()?);
                    }
                }
                self.expect(']')?;
                Ok(RawFactor { indices: idx, eps: false })
            }
            "RicciScalar" => {
                let (x, y) = (self.fresh_label(), self.fresh_label());
                Ok(RawFactor {
                    indices: vec![x.clone(), y.clone(), x, y],
                    eps: false,
                })
            }
            "Ricci" => {
                self.expect('[')?;
                let ab = self.index_list(2)?;
                self.expect(']')?;
                let x = self.fresh_label();
                Ok(RawFactor {
                    indices: vec![x.clone(), ab[0].clone(), x, ab[1].clone()],
                    eps: false,
                })
            }
            "eps" => {
                self.expect('[')?;
                let idx = self.index_list(4)?;
                self.expect(']')?;
                Ok(RawFactor { indices: idx, eps: true })
            }
            other => {
                self.pos -= 1;
                self.err(format!("unknown tensor '{other}'"))
            }
        }
    }

    fn coefficient(&mut self) -> Result<Option<BigRational>> {
        let Some(Tok::Int(n)) = self.peek().cloned() else {
            return Ok(None);
        };
        self.pos += 1;
        let mut c = BigRational::from_integer(n);
        if self.eat('/') {
            match self.peek().cloned() {
                Some(Tok::Int(d)) if !d.is_zero() => {
                    self.pos += 1;
                    c /= BigRational::from_integer(d);
                }
                _ => return self.err("expected a nonzero denominator"),
            }
        }
        Ok(Some(c))
    }

    fn term(&mut self, sign: BigRational) -> Result<Option<(BigRational, Monomial)>> {
        let mut coeff = sign;
        let mut factors = Vec::new();
        if let Some(c) = self.coefficient()? {
            coeff *= c;
            if !self.eat('*') {
                // a bare number term is accepted only as zero
                if coeff.is_zero() {
                    return Ok(None);
                }
                return self.err("a constant term is not an invariant");
            }
        }
        loop {
            factors.push(self.factor()?);
            if !self.eat('*') {
                break;
            }
        }
        Ok(Some((coeff, to_monomial(factors)?)))
    }

    fn expr(&mut self) -> Result<MonomialComb> {
        let mut out = Vec::new();
        let mut sign = if self.eat('-') {
            -BigRational::one()
        } else {
            self.eat('+');
            BigRational::one()
        };
        loop {
            if let Some(t) = self.term(sign)? {
                out.push(t);
            }
            if self.eat('+') {
                sign = BigRational::one();
            } else if self.eat('-') {
                sign = -BigRational::one();
            } else {
                break;
            }
        }
        if self.pos != self.toks.len() {
            return self.err("unexpected trailing input");
        }
        Ok(out)
    }
}

fn to_monomial(factors: Vec<RawFactor>) -> Result<Monomial> {
    let mut ids: HashMap<String, (u16, usize, usize)> = HashMap::new();
    let mut term = LabeledTerm::default();
    for f in factors {
        let labels: Vec<u16> = f
            .indices
            .iter()
            .map(|(name, at)| {
                let n = ids.len() as u16;
                let e = ids.entry(name.clone()).or_insert((n, 0, *at));
                e.1 += 1;
                e.0
            })
            .collect();
        if f.eps {
            if term.eps.is_some() {
                return Err(Error::Unsupported("more than one ε factor in a monomial".into()));
            }
            term.eps = Some([labels[0], labels[1], labels[2], labels[3]]);
        } else {
            term.factors.push(labels);
        }
    }
    for (name, (_, count, at)) in &ids {
        if *count != 2 {
            return Err(Error::Parse {
                offset: *at,
                message: format!("index '{name}' appears {count} times (must be exactly twice)"),
            });
        }
    }
    if term.factors.is_empty() {
        return Err(Error::Unsupported("an ε factor alone is not an invariant".into()));
    }
    term.to_monomial()
}

/// Parses an expression into raw (not canonicalized) monomial terms.
pub fn parse(text: &str) -> Result<MonomialComb> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(Error::Parse {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        fresh: 0,
    };
    p.expr()
}

fn letter(k: usize) -> String {
    let base = (b'a' + (k % 26) as u8) as char;
    if k < 26 {
        base.to_string()
    } else {
        format!("{base}{}", k / 26)
    }
}

/// Prints a monomial; dummy letters follow first use, the first occurrence
/// of each is upper, the second lowered (`-a`).
pub fn print_monomial(m: &Monomial) -> String {
    let case = m.case();
    let pairing = m.pairing();
    let mut names: HashMap<usize, usize> = HashMap::new();
    let mut name = |slot: usize| {
        let key = slot.min(pairing[slot] as usize);
        let n = names.len();
        match names.get(&key) {
            Some(&k) => format!("-{}", letter(k)),
            None => {
                names.insert(key, n);
                letter(n)
            }
        }
    };
    let mut parts = Vec::new();
    for f in 0..case.degree() {
        let o = case.factor_offset(f);
        let len = case.factor_len(f);
        let scalar = len == 4 && pairing[o] as usize == o + 2 && pairing[o + 1] as usize == o + 3;
        if scalar {
            parts.push("R".to_string());
            continue;
        }
        let riemann: Vec<String> = (o..o + 4).map(&mut name).collect();
        let mut s = format!("R[{}", riemann.join(","));
        if len > 4 {
            let derivs: Vec<String> = (o + 4..o + len).map(&mut name).collect();
            s.push(';');
            s.push_str(&derivs.join(","));
        }
        s.push(']');
        parts.push(s);
    }
    if case.is_dual() {
        let e = case.eps_offset();
        let idx: Vec<String> = (e..e + 4).map(&mut name).collect();
        parts.push(format!("eps[{}]", idx.join(",")));
    }
    parts.join("*")
}

/// Prints `c1*m1 + c2*m2 - ...`, or `0` for the empty combination.
pub fn print_comb(terms: &[(BigRational, Monomial)]) -> String {
    print_terms(terms.iter().map(|(c, m)| (c.clone(), print_monomial(m))))
}

/// Joins `(coefficient, text)` pairs into a signed sum.
pub fn print_terms(terms: impl IntoIterator<Item = (BigRational, String)>) -> String {
    let mut out = String::new();
    for (k, (c, body)) in terms.into_iter().enumerate() {
        let neg = c.is_negative();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let a = c.abs();
        if !a.is_one() {
            out.push_str(&format!("{a}*"));
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}
