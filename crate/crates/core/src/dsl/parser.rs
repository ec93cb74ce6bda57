//! Line-oriented parser for mapping and lattice definitions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::Rational;

use super::coeffs::{CoeffSpec, LinearForm};
use super::{Definition, Expr, LatticeDef, MappingDef, Shift};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Decimal(String),
    Str(String),
    Sym(char),
    DotDot,
    Sep,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let at = |i: usize| (li + 1, i + 1);
        while i < chars.len() {
            let c = chars[i];
            let (line_no, col) = at(i);
            let push = |out: &mut Vec<Token>, tok| {
                out.push(Token {
                    tok,
                    line: line_no,
                    col,
                })
            };
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                ';' => {
                    push(&mut out, Tok::Sep);
                    i += 1;
                }
                c if c.is_ascii_digit() => {
                    let s = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                        i += 1;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                        push(&mut out, Tok::Decimal(chars[s..i].iter().collect()));
                    } else {
                        let digits: String = chars[s..i].iter().collect();
                        push(&mut out, Tok::Int(digits.parse().expect("digits")));
                    }
                }
                c if c.is_alphabetic() || c == '_' => {
                    let s = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    push(&mut out, Tok::Ident(chars[s..i].iter().collect()));
                }
                '"' => {
                    let s = i + 1;
                    i += 1;
                    while i < chars.len() && chars[i] != '"' {
                        i += 1;
                    }
                    if i >= chars.len() {
                        return Err(syntax(line_no, col, "unterminated string"));
                    }
                    push(&mut out, Tok::Str(chars[s..i].iter().collect()));
                    i += 1;
                }
                '.' if chars.get(i + 1) == Some(&'.') => {
                    push(&mut out, Tok::DotDot);
                    i += 2;
                }
                '+' | '-' | '*' | '/' | '^' | '(' | ')' | '[' | ']' | ',' | '=' | ':' => {
                    push(&mut out, Tok::Sym(c));
                    i += 1;
                }
                _ => return Err(syntax(line_no, col, &format!("unexpected character `{c}`"))),
            }
        }
        let end = chars.len() + 1;
        out.push(Token {
            tok: Tok::Sep,
            line: li + 1,
            col: end,
        });
    }
    let (line, col) = out.last().map_or((1, 1), |t| (t.line, t.col));
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

fn syntax(line: usize, column: usize, message: &str) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.to_string(),
    }
}

/// Index tuple as written; bare coefficient names have none.
type Raw = Option<Vec<i64>>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Index arity fixed by the first bracket seen.
    dims: Option<usize>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        let (l, c) = self.here();
        Err(syntax(l, c, msg))
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(&format!("expected `{c}`"))
        }
    }

    fn skip_seps(&mut self) {
        while *self.peek() == Tok::Sep {
            self.bump();
        }
    }

    fn at_statement_end(&self) -> bool {
        matches!(self.peek(), Tok::Sep | Tok::Eof)
    }

    fn expr(&mut self) -> Result<Expr<Raw>> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr<Raw>> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                let rhs = self.unary()?;
                lhs = match (lhs, rhs) {
                    (Expr::Num(a), Expr::Num(b)) if !b.is_zero() => Expr::Num(a / b),
                    (a, b) => Expr::Div(Box::new(a), Box::new(b)),
                };
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr<Raw>> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Expr::Num(q) => Expr::Num(-q),
                e => Expr::Neg(Box::new(e)),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr<Raw>> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let e = self.exponent()?;
        Ok(Expr::Pow(Box::new(base), e))
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = self.eat('(');
        let neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let v = match self.bump() {
            Tok::Int(v) => v,
            Tok::Decimal(d) => return Err(Error::NonIntegerExponent(d)),
            Tok::Ident(s) => return Err(Error::NonIntegerExponent(s)),
            _ => {
                self.pos -= 1;
                return self.err("expected an integer exponent");
            }
        };
        if paren && *self.peek() == Tok::Sym('/') {
            self.bump();
            let den = match self.bump() {
                Tok::Int(d) => d.to_string(),
                _ => "?".into(),
            };
            return Err(Error::NonIntegerExponent(format!("{v}/{den}")));
        }
        if paren {
            self.expect(')')?;
        }
        let v = v
            .to_i32()
            .ok_or_else(|| Error::InvalidInput("exponent too large".into()))?;
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr<Raw>> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Num(Rational::from_integer(v)))
            }
            Tok::Decimal(d) => self.err(&format!("decimal literal `{d}`; write rationals as p/q")),
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                let idx = if *self.peek() == Tok::Sym('[') {
                    Some(self.index()?)
                } else {
                    None
                };
                if name == "x" {
                    match idx {
                        Some(i) => Ok(Expr::Var(Some(i))),
                        None => self.err("the unknown `x` needs an index such as x[n]"),
                    }
                } else {
                    Ok(Expr::Coeff(name, idx))
                }
            }
            _ => self.err("expected a number, variable, or `(`"),
        }
    }

    fn index(&mut self) -> Result<Vec<i64>> {
        self.expect('[')?;
        let mut comps = Vec::new();
        loop {
            let (l, c) = self.here();
            let var = match self.bump() {
                Tok::Ident(v) => v,
                _ => return Err(syntax(l, c, "expected an index variable `m` or `n`")),
            };
            let mut off = 0i64;
            loop {
                let sign = if self.eat('+') {
                    1
                } else if self.eat('-') {
                    -1
                } else {
                    break;
                };
                match self.bump() {
                    Tok::Int(v) => off += sign * v.to_i64().unwrap_or(i64::MAX),
                    _ => {
                        self.pos -= 1;
                        return self.err("expected an integer offset");
                    }
                }
            }
            comps.push((var, off, l, c));
            if self.eat(']') {
                break;
            }
            if !self.eat(',') {
                return self.err("expected `,` or `]`");
            }
        }
        let expected: &[&str] = match comps.len() {
            1 => &["n"],
            2 => &["m", "n"],
            _ => {
                let (_, _, l, c) = comps[2];
                return Err(syntax(l, c, "at most two index components are allowed"));
            }
        };
        for ((v, _, l, c), want) in comps.iter().zip(expected) {
            if v != want {
                return Err(syntax(
                    *l,
                    *c,
                    &format!("expected index `{want}`, found `{v}`"),
                ));
            }
        }
        match self.dims {
            None => self.dims = Some(comps.len()),
            Some(d) if d != comps.len() => {
                let (_, _, l, c) = comps[0];
                return Err(syntax(l, c, "mixed one- and two-dimensional indices"));
            }
            _ => {}
        }
        Ok(comps.into_iter().map(|(_, o, _, _)| o).collect())
    }

    fn rational(&mut self) -> Result<Rational> {
        let neg = self.eat('-');
        let n = match self.bump() {
            Tok::Int(v) => v,
            Tok::Decimal(d) => {
                self.pos -= 1;
                return self.err(&format!("decimal literal `{d}`; write rationals as p/q"));
            }
            _ => {
                self.pos -= 1;
                return self.err("expected a rational number");
            }
        };
        let mut q = Rational::from_integer(n);
        if self.eat('/') {
            match self.bump() {
                Tok::Int(d) if !d.is_zero() => q /= Rational::from_integer(d),
                _ => {
                    self.pos -= 1;
                    return self.err("expected a nonzero denominator");
                }
            }
        }
        Ok(if neg { -q } else { q })
    }

    fn rational_list(&mut self, open: char, close: char) -> Result<Vec<Rational>> {
        self.expect(open)?;
        let mut out = vec![self.rational()?];
        while self.eat(',') {
            out.push(self.rational()?);
        }
        self.expect(close)?;
        Ok(out)
    }

    fn linear_form(&mut self) -> Result<LinearForm> {
        self.expect('[')?;
        let mut form = LinearForm { m: 0, n: 0 };
        let mut first = true;
        while !self.eat(']') {
            let sign = if self.eat('-') {
                -1
            } else if self.eat('+') || first {
                1
            } else {
                return self.err("expected `+`, `-`, or `]`");
            };
            first = false;
            let mut mult = 1;
            if let Tok::Int(v) = self.peek().clone() {
                self.bump();
                mult = v.to_i64().unwrap_or(1);
                self.eat('*');
            }
            match self.bump() {
                Tok::Ident(v) if v == "m" => form.m += sign * mult,
                Tok::Ident(v) if v == "n" => form.n += sign * mult,
                _ => {
                    self.pos -= 1;
                    return self.err("expected `m` or `n` in the phase form");
                }
            }
        }
        Ok(form)
    }

    fn coeff_spec(&mut self, base: Option<&Path>, dims: usize) -> Result<CoeffSpec> {
        let (l, c) = self.here();
        let kind = match self.bump() {
            Tok::Ident(k) => k,
            _ => return Err(syntax(l, c, "expected a coefficient kind")),
        };
        match kind.as_str() {
            "const" => Ok(CoeffSpec::Constant(self.rational()?)),
            "periodic" => {
                let form = if *self.peek() == Tok::Sym('[') {
                    self.linear_form()?
                } else {
                    LinearForm::N
                };
                let values = self.rational_list('(', ')')?;
                CoeffSpec::periodic_in(form, values)
            }
            "signpattern" => {
                self.expect('(')?;
                let b = self.rational()?;
                self.expect(',')?;
                let (l2, c2) = self.here();
                let half = match self.bump() {
                    Tok::Int(h) => h.to_usize().unwrap_or(0),
                    _ => return Err(syntax(l2, c2, "expected the half-period")),
                };
                self.expect(')')?;
                CoeffSpec::sign_pattern(b, half)
            }
            "linrec" => {
                let coeffs = self.rational_list('[', ']')?;
                let initial = self.rational_list('(', ')')?;
                CoeffSpec::recurrence(coeffs, initial)
            }
            "symbolic" => {
                self.expect('(')?;
                let lo = self.rational()?;
                if *self.peek() != Tok::DotDot {
                    return self.err("expected `..`");
                }
                self.bump();
                let hi = self.rational()?;
                self.expect(')')?;
                let (lo, hi) = match (lo.is_integer(), hi.is_integer()) {
                    (true, true) => (lo.to_integer(), hi.to_integer()),
                    _ => return Err(syntax(l, c, "symbolic window bounds must be integers")),
                };
                CoeffSpec::symbolic(lo.to_i64().unwrap_or(0), hi.to_i64().unwrap_or(0))
            }
            "table" => {
                let (l2, c2) = self.here();
                let path = match self.bump() {
                    Tok::Str(p) => p,
                    _ => return Err(syntax(l2, c2, "expected a quoted file name")),
                };
                let full: PathBuf = match base {
                    Some(b) if Path::new(&path).is_relative() => b.join(&path),
                    _ => PathBuf::from(&path),
                };
                CoeffSpec::load_table(&full, &path, dims)
            }
            other => Err(syntax(l, c, &format!("unknown coefficient kind `{other}`"))),
        }
    }
}

/// Parse a definition, resolving relative table paths against the current
/// directory.
pub fn parse_definition(text: &str) -> Result<Definition> {
    parse_definition_in(text, None)
}

/// Parse a definition, resolving relative table paths against `base`.
pub fn parse_definition_in(text: &str, base: Option<&Path>) -> Result<Definition> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        dims: None,
    };
    p.skip_seps();
    if *p.peek() == Tok::Eof {
        return p.err("empty definition");
    }
    let lhs = p.expr()?;
    p.expect('=')?;
    let rhs = p.expr()?;
    if !p.at_statement_end() {
        return p.err("unexpected token after the equation");
    }
    let dims = match p.dims {
        Some(d) => d,
        None => return p.err("the equation does not mention x"),
    };
    let mut coeffs = BTreeMap::new();
    loop {
        p.skip_seps();
        if *p.peek() == Tok::Eof {
            break;
        }
        let (l, c) = p.here();
        let name = match p.bump() {
            Tok::Ident(n) if n != "x" => n,
            _ => return Err(syntax(l, c, "expected a coefficient name")),
        };
        p.expect(':')?;
        let spec = p.coeff_spec(base, dims)?;
        if !p.at_statement_end() {
            return p.err("unexpected token after the coefficient specification");
        }
        if dims == 2
            && matches!(
                spec,
                CoeffSpec::Symbolic { .. } | CoeffSpec::Recurrence { .. }
            )
        {
            return Err(syntax(
                l,
                c,
                "lattice coefficients must be const, periodic, or table",
            ));
        }
        coeffs.insert(name, spec);
    }
    if dims == 1 {
        build_mapping(lower(&lhs)?, lower(&rhs)?, coeffs).map(Definition::Mapping)
    } else {
        build_lattice(lower(&lhs)?, lower(&rhs)?, coeffs).map(Definition::Lattice)
    }
}

pub fn parse_mapping(text: &str) -> Result<MappingDef> {
    match parse_definition(text)? {
        Definition::Mapping(m) => Ok(m),
        Definition::Lattice(_) => Err(Error::InvalidInput(
            "expected a one-dimensional mapping".into(),
        )),
    }
}

pub fn parse_lattice(text: &str) -> Result<LatticeDef> {
    match parse_definition(text)? {
        Definition::Lattice(l) => Ok(l),
        Definition::Mapping(_) => Err(Error::InvalidInput("expected a lattice rule".into())),
    }
}

fn lower<I: Shift>(e: &Expr<Raw>) -> Result<Expr<I>> {
    let idx = |r: &Raw| -> Result<I> {
        match r {
            None => Ok(I::origin()),
            Some(c) => {
                I::from_components(c).ok_or_else(|| Error::InvalidInput("index arity".into()))
            }
        }
    };
    Ok(match e {
        Expr::Num(q) => Expr::Num(q.clone()),
        Expr::Var(r) => Expr::Var(idx(r)?),
        Expr::Coeff(n, r) => Expr::Coeff(n.clone(), idx(r)?),
        Expr::Neg(a) => Expr::Neg(Box::new(lower(a)?)),
        Expr::Pow(a, k) => Expr::Pow(Box::new(lower(a)?), *k),
        Expr::Add(a, b) => Expr::Add(Box::new(lower(a)?), Box::new(lower(b)?)),
        Expr::Sub(a, b) => Expr::Sub(Box::new(lower(a)?), Box::new(lower(b)?)),
        Expr::Mul(a, b) => Expr::Mul(Box::new(lower(a)?), Box::new(lower(b)?)),
        Expr::Div(a, b) => Expr::Div(Box::new(lower(a)?), Box::new(lower(b)?)),
    })
}

/// `e = α·t + β` with neither part containing `t`; `None` when `e` is not
/// affine in `t`.
fn affine_split<I: Shift>(e: &Expr<I>, t: &I) -> Option<(Expr<I>, Expr<I>)> {
    if !e.contains_var(t) {
        return Some((Expr::int(0), e.clone()));
    }
    let zero = |x: &Expr<I>| matches!(x, Expr::Num(q) if q.is_zero());
    let one = |x: &Expr<I>| matches!(x, Expr::Num(q) if q.is_one());
    let add = |a: Expr<I>, b: Expr<I>| match (zero(&a), zero(&b)) {
        (true, _) => b,
        (_, true) => a,
        _ => Expr::add(a, b),
    };
    let sub = |a: Expr<I>, b: Expr<I>| match (zero(&a), zero(&b)) {
        (_, true) => a,
        (true, _) => Expr::neg(b),
        _ => Expr::sub(a, b),
    };
    let mul = |a: Expr<I>, b: Expr<I>| {
        if zero(&a) || zero(&b) {
            Expr::int(0)
        } else if one(&a) {
            b
        } else if one(&b) {
            a
        } else {
            Expr::mul(a, b)
        }
    };
    let div = |a: Expr<I>, b: &Expr<I>| {
        if zero(&a) {
            Expr::int(0)
        } else if one(b) {
            a
        } else {
            Expr::div(a, b.clone())
        }
    };
    match e {
        Expr::Var(i) if i == t => Some((Expr::int(1), Expr::int(0))),
        Expr::Neg(a) => {
            let (al, be) = affine_split(a, t)?;
            Some((sub(Expr::int(0), al), sub(Expr::int(0), be)))
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (a1, b1) = affine_split(a, t)?;
            let (a2, b2) = affine_split(b, t)?;
            if matches!(e, Expr::Add(..)) {
                Some((add(a1, a2), add(b1, b2)))
            } else {
                Some((sub(a1, a2), sub(b1, b2)))
            }
        }
        Expr::Mul(a, b) => {
            let (ta, tb) = (a.contains_var(t), b.contains_var(t));
            if ta && tb {
                return None;
            }
            let (lin, other) = if ta { (a, b) } else { (b, a) };
            let (al, be) = affine_split(lin, t)?;
            Some((mul(al, (**other).clone()), mul(be, (**other).clone())))
        }
        Expr::Div(a, b) => {
            if b.contains_var(t) {
                return None;
            }
            let (al, be) = affine_split(a, t)?;
            Some((div(al, b), div(be, b)))
        }
        Expr::Pow(a, 1) => affine_split(a, t),
        _ => None,
    }
}

/// Solve `lhs = rhs` for the unknown at `top`, which must not occur in `rhs`.
fn solve_for<I: Shift>(lhs: &Expr<I>, rhs: &Expr<I>, top: &I) -> Result<Expr<I>> {
    let name = format!("x[{}]", top.render());
    if rhs.contains_var(top) {
        return Err(Error::DefiningVariableOnRhs(name));
    }
    if matches!(lhs, Expr::Var(i) if i == top) {
        return Ok(rhs.clone());
    }
    let (alpha, beta) = affine_split(lhs, top).ok_or_else(|| Error::NotSolvable(name.clone()))?;
    if matches!(&alpha, Expr::Num(q) if q.is_zero()) {
        return Err(Error::NotSolvable(name));
    }
    let numer = match &beta {
        Expr::Num(q) if q.is_zero() => rhs.clone(),
        _ => Expr::sub(rhs.clone(), beta),
    };
    Ok(match &alpha {
        Expr::Num(q) if q.is_one() => numer,
        Expr::Num(q) if (-q).is_one() => Expr::neg(numer),
        _ => Expr::div(numer, alpha),
    })
}

fn check_bound<I: Shift>(rhs: &Expr<I>, coeffs: &BTreeMap<String, CoeffSpec>) -> Result<()> {
    for name in rhs.coeff_uses().keys() {
        if !coeffs.contains_key(name) {
            return Err(Error::UnboundSymbol(name.clone()));
        }
    }
    Ok(())
}

fn build_mapping(
    lhs: Expr<i64>,
    rhs: Expr<i64>,
    coeffs: BTreeMap<String, CoeffSpec>,
) -> Result<MappingDef> {
    let mut shifts = lhs.var_shifts();
    shifts.extend(rhs.var_shifts());
    let top = *shifts.iter().max().expect("x occurs");
    let bottom = *shifts.iter().min().expect("x occurs");
    if top == bottom {
        return Err(Error::InvalidInput(
            "the equation involves a single shift of x".into(),
        ));
    }
    let solved = solve_for(&lhs, &rhs, &top)?;
    check_bound(&solved, &coeffs)?;
    Ok(MappingDef {
        top,
        bottom,
        rhs: solved,
        coeffs,
    })
}

fn build_lattice(
    lhs: Expr<(i64, i64)>,
    rhs: Expr<(i64, i64)>,
    coeffs: BTreeMap<String, CoeffSpec>,
) -> Result<LatticeDef> {
    let top = (0, 0);
    let solved = solve_for(&lhs, &rhs, &top)?;
    let allowed = [(-1, -1), (0, -1), (-1, 0)];
    for s in solved.var_shifts() {
        if !allowed.contains(&s) {
            return Err(Error::InvalidInput(format!(
                "lattice rules may only use x[m-1,n-1], x[m,n-1], x[m-1,n]; found x[{}]",
                s.render()
            )));
        }
    }
    if lhs
        .var_shifts()
        .iter()
        .any(|s| *s != top && !allowed.contains(s))
    {
        return Err(Error::InvalidInput(
            "left-hand side uses sites outside the quad".into(),
        ));
    }
    check_bound(&solved, &coeffs)?;
    let k = solved.max_var_exponent().max(1);
    Ok(LatticeDef {
        rhs: solved,
        k,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::field::rational;

    fn x(k: i64) -> Expr<i64> {
        Expr::Var(k)
    }

    #[test]
    fn product_form_is_solved() {
        let m = parse_mapping("x[n+1]*x[n-1] = 1 - a[n]/x[n]; a: const 1").unwrap();
        assert_eq!((m.top, m.bottom, m.order()), (1, -1, 2));
        let expected = Expr::div(
            Expr::sub(Expr::int(1), Expr::div(Expr::Coeff("a".into(), 0), x(0))),
            x(-1),
        );
        assert_eq!(m.rhs, expected);
        assert_eq!(m.coeffs["a"], CoeffSpec::Constant(rational(1, 1)));
    }

    #[test]
    fn additive_form_is_solved() {
        let m = parse_mapping("x[n+1] + x[n-1] = x[n] + 1/x[n]^2").unwrap();
        assert_eq!(m.order(), 2);
        let expected = Expr::sub(
            Expr::add(x(0), Expr::div(Expr::int(1), Expr::pow(x(0), 2))),
            x(-1),
        );
        assert_eq!(m.rhs, expected);
    }

    #[test]
    fn unclosed_bracket_is_a_syntax_error() {
        match parse_definition("x[n+1] = x[n") {
            Err(Error::Syntax { line, column, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(column, 13);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_are_classified() {
        assert_eq!(
            parse_definition("x[n+1] = a[n]*x[n]"),
            Err(Error::UnboundSymbol("a".into()))
        );
        assert!(matches!(
            parse_definition("x[n+1] = x[n]^(1/2)"),
            Err(Error::NonIntegerExponent(_))
        ));
        assert!(matches!(
            parse_definition("x[n+1] = x[n]^1.5"),
            Err(Error::NonIntegerExponent(_))
        ));
        assert!(matches!(
            parse_definition("x[n+1]*x[n-1] = x[n+1] + 1"),
            Err(Error::DefiningVariableOnRhs(_))
        ));
        assert!(matches!(
            parse_definition("x[n+1]^2 = x[n]"),
            Err(Error::NotSolvable(_))
        ));
        assert!(matches!(
            parse_definition("x[n+1] = x[m,n]"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn lattice_rule_infers_exponent() {
        let l = parse_lattice(
            "x[m,n] = -x[m-1,n-1] + a[m,n-1]/x[m,n-1]^3 + b[m-1,n]/x[m-1,n]^3\na: periodic[n](1,-1)\nb: periodic[m+n](1, -1)",
        )
        .unwrap();
        assert_eq!(l.k, 3);
        assert_eq!(
            l.coeffs["b"],
            CoeffSpec::Periodic {
                form: LinearForm { m: 1, n: 1 },
                values: vec![rational(1, 1), rational(-1, 1)]
            }
        );
        assert!(parse_lattice("x[m,n] = x[m-2,n]").is_err());
    }

    #[test]
    fn comments_and_literals() {
        let m = parse_mapping("# header\nx[n+2] = -1/2*x[n+1] + x[n] # tail\n").unwrap();
        let expected = Expr::add(Expr::mul(Expr::Num(rational(-1, 2)), x(1)), x(0));
        assert_eq!(m.rhs, expected);
        assert!(parse_mapping("x[n+1] = 0.5*x[n]").is_err());
    }

    #[test]
    fn print_then_parse_is_identity() {
        let texts = [
            "x[n+1]*x[n-1] = 1 - a[n]/x[n]; a: const 2",
            "x[n+3] = -x[n-1] + a[n+2]/x[n+2]^3 + a[n]/x[n]^3; a: signpattern(1, 4)",
            "x[n+2] = (x[n+1] - 2/3)/(x[n]*(1 + x[n+1]))^(-2) - -1",
            "x[n+1] = x[n] - x[n-1] + a[n]/x[n] + 1/x[n]^2; a: linrec[2,2,-1](1,2,3)",
            "x[n+1] = x[n] - x[n-1]*c[n]; c: symbolic(-4..6)",
            "x[m,n] = x[m-1,n-1] + a[m,n-1]/x[m,n-1] - b[m-1,n]/x[m-1,n]; a: periodic[m-n](1,2); b: const -3/4",
        ];
        for t in texts {
            let d = parse_definition(t).unwrap();
            let printed = d.to_string();
            let again = parse_definition(&printed).unwrap();
            assert_eq!(d, again, "{printed}");
        }
    }
}
