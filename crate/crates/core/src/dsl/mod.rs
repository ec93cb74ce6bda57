//! Text format for recurrences and quad-lattice rules.
//!
//! A definition is one equation line followed by coefficient lines:
//!
//! ```text
//! x[n+1]*x[n-1] = 1 - a[n]/x[n]
//! a: const 2
//! ```
//!
//! The equation is solved for its highest shift, so `rhs` always gives the
//! new value explicitly.

mod coeffs;
mod eval;
pub(crate) mod families;
mod parser;

use std::collections::BTreeMap;
use std::fmt::{self, Debug, Display};

use num_traits::{One, Signed, Zero};

use crate::Rational;

pub use coeffs::{instantiate_coefficients, symbol_name, CoeffSpec, CoeffValue, LinearForm};
pub use eval::{eval, iterate_mapping, Domain, FieldDomain, LaurentDomain, RatFuncDomain};
pub use families::{
    builtin_family, family_names, lift, EntryValue, Family, FamilyInfo, Params, Recurrence,
    RecurrenceKind,
};
pub use parser::{parse_definition, parse_definition_in, parse_lattice, parse_mapping};

/// Position of a shifted variable or coefficient relative to the current site.
pub trait Shift: Clone + PartialEq + Eq + Ord + Debug {
    /// Text inside the brackets, e.g. `n-1` or `m,n+1`.
    fn render(&self) -> String;
    fn origin() -> Self;
    fn from_components(c: &[i64]) -> Option<Self>;
}

fn render_offset(var: &str, k: i64) -> String {
    match k {
        0 => var.to_string(),
        k if k > 0 => format!("{var}+{k}"),
        k => format!("{var}{k}"),
    }
}

impl Shift for i64 {
    fn render(&self) -> String {
        render_offset("n", *self)
    }
    fn origin() -> Self {
        0
    }
    fn from_components(c: &[i64]) -> Option<Self> {
        match c {
            [k] => Some(*k),
            _ => None,
        }
    }
}

impl Shift for (i64, i64) {
    fn render(&self) -> String {
        format!(
            "{},{}",
            render_offset("m", self.0),
            render_offset("n", self.1)
        )
    }
    fn origin() -> Self {
        (0, 0)
    }
    fn from_components(c: &[i64]) -> Option<Self> {
        match c {
            [a, b] => Some((*a, *b)),
            _ => None,
        }
    }
}

/// Rational expression in shifted unknowns and coefficient symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr<I> {
    Num(Rational),
    Var(I),
    Coeff(String, I),
    Neg(Box<Expr<I>>),
    Add(Box<Expr<I>>, Box<Expr<I>>),
    Sub(Box<Expr<I>>, Box<Expr<I>>),
    Mul(Box<Expr<I>>, Box<Expr<I>>),
    Div(Box<Expr<I>>, Box<Expr<I>>),
    Pow(Box<Expr<I>>, i32),
}

impl<I: Shift> Expr<I> {
    pub fn int(v: i64) -> Self {
        Expr::Num(Rational::from_integer(v.into()))
    }

    pub fn add(a: Self, b: Self) -> Self {
        Expr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: Self, b: Self) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Self, b: Self) -> Self {
        Expr::Mul(Box::new(a), Box::new(b))
    }
    pub fn div(a: Self, b: Self) -> Self {
        Expr::Div(Box::new(a), Box::new(b))
    }
    pub fn neg(a: Self) -> Self {
        Expr::Neg(Box::new(a))
    }
    pub fn pow(a: Self, e: i32) -> Self {
        Expr::Pow(Box::new(a), e)
    }

    pub fn visit(&self, f: &mut impl FnMut(&Expr<I>)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Coeff(..) => {}
            Expr::Neg(a) | Expr::Pow(a, _) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Shifts of the unknown that occur in the expression.
    pub fn var_shifts(&self) -> Vec<I> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Var(i) = e {
                if !out.contains(i) {
                    out.push(i.clone());
                }
            }
        });
        out.sort();
        out
    }

    /// Coefficient names with the shifts at which they occur.
    pub fn coeff_uses(&self) -> BTreeMap<String, Vec<I>> {
        let mut out: BTreeMap<String, Vec<I>> = BTreeMap::new();
        self.visit(&mut |e| {
            if let Expr::Coeff(name, i) = e {
                let v = out.entry(name.clone()).or_default();
                if !v.contains(i) {
                    v.push(i.clone());
                }
            }
        });
        for v in out.values_mut() {
            v.sort();
        }
        out
    }

    pub fn contains_var(&self, shift: &I) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if matches!(e, Expr::Var(i) if i == shift) {
                found = true;
            }
        });
        found
    }

    /// Largest absolute exponent applied directly to an unknown.
    pub fn max_var_exponent(&self) -> u32 {
        let mut k = 0;
        self.visit(&mut |e| {
            if let Expr::Pow(base, p) = e {
                if matches!(**base, Expr::Var(_)) {
                    k = k.max(p.unsigned_abs());
                }
            }
        });
        k
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Num(q) if !q.is_integer() => 2,
            Expr::Num(q) if q.is_negative() => 3,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write(&self, out: &mut String) {
        let child = |e: &Expr<I>, min: u8, out: &mut String| {
            if e.precedence() < min {
                out.push('(');
                e.write(out);
                out.push(')');
            } else {
                e.write(out);
            }
        };
        match self {
            Expr::Num(q) => out.push_str(&q.to_string()),
            Expr::Var(i) => {
                out.push_str("x[");
                out.push_str(&i.render());
                out.push(']');
            }
            Expr::Coeff(name, i) => {
                out.push_str(name);
                out.push('[');
                out.push_str(&i.render());
                out.push(']');
            }
            Expr::Neg(a) => {
                out.push('-');
                child(a, 3, out);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                child(a, 1, out);
                out.push_str(if matches!(self, Expr::Add(..)) {
                    " + "
                } else {
                    " - "
                });
                child(b, 2, out);
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                child(a, 2, out);
                out.push(if matches!(self, Expr::Mul(..)) {
                    '*'
                } else {
                    '/'
                });
                child(b, 3, out);
            }
            Expr::Pow(a, e) => {
                child(a, 5, out);
                if *e < 0 {
                    out.push_str(&format!("^({e})"));
                } else {
                    out.push_str(&format!("^{e}"));
                }
            }
        }
    }
}

impl<I: Shift> Display for Expr<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s);
        f.write_str(&s)
    }
}

/// A recurrence `x[n+top] = rhs` in the values `x[n+bottom..n+top-1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappingDef {
    pub top: i64,
    pub bottom: i64,
    pub rhs: Expr<i64>,
    pub coeffs: BTreeMap<String, CoeffSpec>,
}

impl MappingDef {
    /// Number of initial values needed to start the iteration.
    pub fn order(&self) -> usize {
        (self.top - self.bottom) as usize
    }

    pub fn has_symbolic_coefficients(&self) -> bool {
        self.coeffs
            .values()
            .any(|c| matches!(c, CoeffSpec::Symbolic { .. }))
    }

    pub fn with_coeff(mut self, name: &str, spec: CoeffSpec) -> Self {
        self.coeffs.insert(name.to_string(), spec);
        self
    }
}

impl Display for MappingDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x[{}] = {}", self.top.render(), self.rhs)?;
        for (name, spec) in &self.coeffs {
            writeln!(f, "{name}: {spec}")?;
        }
        Ok(())
    }
}

/// A quad-lattice rule `x[m,n] = rhs` in the three southwestern neighbours.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeDef {
    pub rhs: Expr<(i64, i64)>,
    /// Exponent on the neighbour terms, inferred from the rule.
    pub k: u32,
    pub coeffs: BTreeMap<String, CoeffSpec>,
}

impl LatticeDef {
    pub fn with_coeff(mut self, name: &str, spec: CoeffSpec) -> Self {
        self.coeffs.insert(name.to_string(), spec);
        self
    }
}

impl Display for LatticeDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "x[m,n] = {}", self.rhs)?;
        for (name, spec) in &self.coeffs {
            writeln!(f, "{name}: {spec}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Definition {
    Mapping(MappingDef),
    Lattice(LatticeDef),
}

impl Definition {
    pub fn as_mapping(&self) -> Option<&MappingDef> {
        match self {
            Definition::Mapping(m) => Some(m),
            Definition::Lattice(_) => None,
        }
    }

    pub fn as_lattice(&self) -> Option<&LatticeDef> {
        match self {
            Definition::Lattice(l) => Some(l),
            Definition::Mapping(_) => None,
        }
    }
}

impl Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Definition::Mapping(m) => Display::fmt(m, f),
            Definition::Lattice(l) => Display::fmt(l, f),
        }
    }
}

pub(crate) fn render_rational(q: &Rational) -> String {
    if q.denom().is_one() || q.is_zero() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}
