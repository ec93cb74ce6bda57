//! Singularity patterns of one-dimensional mappings.
//!
//! One initial value is set to `v + κε` and the orbit is followed as Laurent
//! series in ε. The ε-order of each iterate gives a token (`0^j`, `∞^j`, `f`);
//! the singularity is confined once `order` consecutive iterates are regular
//! and their ε→0 limits still depend on the pre-singularity data, which is
//! tested by running two independent generic initialisations.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::degree::{forbidden_values, generic_constants, DEFAULT_SEED};
use crate::dsl::{
    eval, symbol_name, CoeffSpec, EntryValue, LaurentDomain, MappingDef, Recurrence, RecurrenceKind,
};
use crate::error::{Error, Result};
use crate::numeric::laurent::LaurentOrder;
use crate::numeric::{
    Field, LaurentSeries, MPoly, PrimeField, SymFrac, SymbolField, DEFAULT_PRECISION,
};
use crate::spectral::IntPoly;
use crate::Rational;

/// Largest series precision tried before giving up.
pub const MAX_PRECISION: usize = 128;

/// Starting precision for traces over symbol fields.
pub const SYMBOLIC_PRECISION: usize = 3;

/// Depth used to find the reference pattern of a derivation.
pub const REFERENCE_DEPTH: usize = 40;

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec {
    /// Index `n` of the perturbed value.
    pub entry_index: i64,
    pub value: EntryValue,
    /// Multiplier of ε at the entry.
    pub scale: Rational,
}

impl PerturbationSpec {
    pub fn new(value: EntryValue) -> Self {
        PerturbationSpec {
            entry_index: 0,
            value,
            scale: Rational::one(),
        }
    }

    pub fn number(v: Rational) -> Self {
        Self::new(EntryValue::Number(v))
    }

    pub fn coefficient(name: &str) -> Self {
        Self::new(EntryValue::Coefficient(name.to_string()))
    }

    pub fn at(mut self, index: i64) -> Self {
        self.entry_index = index;
        self
    }

    pub fn scaled(mut self, scale: Rational) -> Self {
        self.scale = scale;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Token {
    Zero(u32),
    Pole(u32),
    /// Regular value inside a pattern.
    Finite,
    /// Regular value outside the pattern.
    Regular,
}

impl Token {
    pub fn from_order(order: i64) -> Self {
        match order {
            0 => Token::Finite,
            o if o > 0 => Token::Zero(o as u32),
            o => Token::Pole(o.unsigned_abs() as u32),
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Zero(1) => f.write_str("0"),
            Token::Zero(j) => write!(f, "0^{j}"),
            Token::Pole(1) => f.write_str("∞"),
            Token::Pole(j) => write!(f, "∞^{j}"),
            Token::Finite => f.write_str("f"),
            Token::Regular => f.write_str("r"),
        }
    }
}

impl Serialize for Token {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Tokens written as `{0, ∞^2, ∞^2, 0}`.
pub fn render_tokens(tokens: &[Token]) -> String {
    let parts: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Parse the `{0, ∞^2, f, 0}` notation; `inf` is accepted for `∞`.
pub fn parse_tokens(text: &str) -> Result<Vec<Token>> {
    let body = text.trim().trim_start_matches('{').trim_end_matches('}');
    body.split(',')
        .map(|t| {
            let t = t.trim();
            let (base, exp) = match t.split_once('^') {
                Some((b, e)) => (
                    b,
                    e.parse::<u32>()
                        .map_err(|_| Error::InvalidInput(format!("bad token `{t}`")))?,
                ),
                None => (t, 1),
            };
            match base {
                "0" => Ok(Token::Zero(exp)),
                "∞" | "inf" => Ok(Token::Pole(exp)),
                "f" => Ok(Token::Finite),
                _ => Err(Error::InvalidInput(format!("bad token `{t}`"))),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Verdict {
    Confined { exit_step: usize },
    Nonconfined { depth: usize },
    Collapsed,
}

impl Verdict {
    pub fn is_confined(&self) -> bool {
        matches!(self, Verdict::Confined { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SingularityPattern {
    /// Tokens from the first singular value (the entry itself when it is a
    /// zero) to the last singular one.
    pub tokens: Vec<Token>,
    /// ε-order of every traced step, starting with the step after the entry.
    pub orders: Vec<i64>,
    pub verdict: Verdict,
    /// Steps of the exit window whose limits differ between initialisations.
    pub memory_steps: Vec<usize>,
    /// `(step, offset)` pairs where the limit equals the initial value at
    /// `entry + offset`.
    pub recovered: Vec<(usize, i64)>,
    pub precision: usize,
}

impl SingularityPattern {
    pub fn rendered(&self) -> String {
        render_tokens(&self.tokens)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("serialisable");
        v["pattern"] = serde_json::json!(self.rendered());
        v
    }
}

/// One traced orbit.
struct Orbit<E> {
    series: Vec<LaurentSeries<E>>,
}

/// Follows the orbit for `depth` steps after the entry. `initial` holds the
/// unperturbed values `x[e-order+1..e-1]`.
#[allow(clippy::too_many_arguments)]
fn trace_series<F: Field>(
    f: &F,
    map: &MappingDef,
    entry_index: i64,
    entry: F::Elem,
    scale: F::Elem,
    initial: &[F::Elem],
    depth: usize,
    precision: usize,
    coeff: &mut dyn FnMut(&str, i64) -> Result<F::Elem>,
) -> Result<Orbit<F::Elem>> {
    let order = map.order();
    let dom = LaurentDomain {
        field: f.clone(),
        precision,
    };
    let first = entry_index - order as i64 + 1;
    let mut vals: Vec<LaurentSeries<F::Elem>> = initial
        .iter()
        .map(|c| LaurentSeries::constant(f, c.clone()))
        .collect();
    vals.push(LaurentSeries::perturbed(f, entry, scale));
    for j in 1..=depth {
        let n = entry_index + j as i64 - map.top;
        let next = eval(
            &map.rhs,
            &dom,
            &mut |s: &i64| Ok(vals[(n + s - first) as usize].clone()),
            &mut |name: &str, s: &i64| Ok(LaurentSeries::constant(f, coeff(name, n + s)?)),
        )
        .map_err(|e| match e {
            Error::SingularSeries(_) | Error::PrecisionExhausted => Error::PrecisionExhausted,
            Error::DivisionByZero => Error::DegenerateOrbit { step: j },
            e => e,
        })?;
        if next.order() == LaurentOrder::ZeroToTruncation {
            return Err(Error::PrecisionExhausted);
        }
        vals.push(next);
    }
    Ok(Orbit {
        series: vals.split_off(order),
    })
}

pub(crate) fn with_deepening<T>(
    start: usize,
    mut run: impl FnMut(usize) -> Result<T>,
) -> Result<(T, usize)> {
    let mut precision = start;
    loop {
        match run(precision) {
            Err(Error::PrecisionExhausted) if precision < MAX_PRECISION => precision *= 2,
            other => return other.map(|v| (v, precision)),
        }
    }
}

fn orders<E: Clone + PartialEq>(o: &Orbit<E>) -> Vec<i64> {
    o.series
        .iter()
        .map(|s| s.lead_order().expect("checked nonzero"))
        .collect()
}

fn limits<E: Clone + PartialEq>(o: &Orbit<E>) -> Vec<Option<E>> {
    o.series
        .iter()
        .map(|s| match s.order() {
            LaurentOrder::Finite(0) => s.leading_coeff().cloned(),
            _ => None,
        })
        .collect()
}

struct Analysis {
    verdict: Verdict,
    pattern_end: usize,
    memory_steps: Vec<usize>,
}

fn analyse<E: PartialEq>(
    orders: &[i64],
    a: &[Option<E>],
    b: &[Option<E>],
    order: usize,
) -> Analysis {
    if orders.iter().take(order).all(|&o| o == 0) {
        return Analysis {
            verdict: Verdict::Collapsed,
            pattern_end: 0,
            memory_steps: Vec::new(),
        };
    }
    let mut run = 0;
    let mut last_singular = 0;
    for (i, &o) in orders.iter().enumerate() {
        let step = i + 1;
        if o != 0 {
            run = 0;
            last_singular = step;
            continue;
        }
        run += 1;
        if run >= order {
            let window = step + 1 - order..=step;
            let memory: Vec<usize> = window.filter(|&s| a[s - 1] != b[s - 1]).collect();
            if !memory.is_empty() {
                return Analysis {
                    verdict: Verdict::Confined { exit_step: step },
                    pattern_end: last_singular,
                    memory_steps: memory,
                };
            }
        }
    }
    Analysis {
        verdict: Verdict::Nonconfined {
            depth: orders.len(),
        },
        pattern_end: last_singular,
        memory_steps: Vec::new(),
    }
}

/// Field for numeric traces; orders and limit comparisons are generic
/// properties, so a large prime stands in for the rationals.
pub const TRACE_PRIME: u64 = 1_000_000_007;

fn numeric_entry(map: &MappingDef, entry: &PerturbationSpec) -> Result<Rational> {
    match &entry.value {
        EntryValue::Number(q) => Ok(q.clone()),
        EntryValue::Coefficient(name) => {
            let spec = map
                .coeffs
                .get(name)
                .ok_or_else(|| Error::UnboundSymbol(name.clone()))?;
            match spec.value(name, &[entry.entry_index])? {
                crate::dsl::CoeffValue::Number(q) => Ok(q),
                crate::dsl::CoeffValue::Symbol(_) => Err(Error::InvalidInput(
                    "tracing needs numeric coefficients".into(),
                )),
            }
        }
    }
}

fn embed<F: Field>(f: &F, q: &Rational) -> Result<F::Elem> {
    f.from_rational(q)
        .ok_or_else(|| Error::InvalidInput(format!("{q} is not representable in the trace field")))
}

pub fn trace_pattern(
    map: &MappingDef,
    entry: &PerturbationSpec,
    depth: usize,
) -> Result<SingularityPattern> {
    trace_pattern_seeded(map, entry, depth, DEFAULT_SEED)
}

pub fn trace_pattern_seeded(
    map: &MappingDef,
    entry: &PerturbationSpec,
    depth: usize,
    seed: u64,
) -> Result<SingularityPattern> {
    let order = map.order();
    if depth < order {
        return Err(Error::InvalidInput(format!(
            "depth {depth} is below the map order {order}"
        )));
    }
    if entry.scale.is_zero() {
        return Err(Error::InvalidInput(
            "perturbation scale must be nonzero".into(),
        ));
    }
    if map.has_symbolic_coefficients() {
        return Err(Error::InvalidInput(
            "tracing needs numeric coefficients".into(),
        ));
    }
    let f = PrimeField::new(TRACE_PRIME)?;
    let value = numeric_entry(map, entry)?;
    let entry_elem = embed(&f, &value)?;
    let scale = embed(&f, &entry.scale)?;
    let mut avoid = forbidden_values(map);
    avoid.push(value.clone());
    let run = |seed: u64| -> Result<(Orbit<u64>, Vec<u64>, usize)> {
        let mut last = None;
        for attempt in 0..4u64 {
            let initial: Vec<u64> =
                generic_constants(seed.wrapping_add(attempt * 7919), order - 1, &avoid)
                    .iter()
                    .map(|q| embed(&f, q))
                    .collect::<Result<_>>()?;
            let out = with_deepening(DEFAULT_PRECISION, |p| {
                trace_series(
                    &f,
                    map,
                    entry.entry_index,
                    entry_elem,
                    scale,
                    &initial,
                    depth,
                    p,
                    &mut |name: &str, idx: i64| {
                        let spec = map
                            .coeffs
                            .get(name)
                            .ok_or_else(|| Error::UnboundSymbol(name.to_string()))?;
                        spec.value_in(&f, name, &[idx])
                    },
                )
            });
            match out {
                Ok((orbit, p)) => return Ok((orbit, initial, p)),
                Err(e @ Error::DegenerateOrbit { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("attempted"))
    };
    let (mut a, mut init_a, mut prec) = run(seed)?;
    let (mut b, _, pb) = run(seed.wrapping_add(1_000_003))?;
    if orders(&a) != orders(&b) {
        let (c, init_c, pc) = run(seed.wrapping_add(2_000_006))?;
        if orders(&c) == orders(&b) {
            a = c;
            init_a = init_c;
            prec = pc;
        } else {
            b = c;
        }
    }
    let ords = orders(&a);
    let la = limits(&a);
    let lb = limits(&b);
    let an = analyse(&ords, &la, &lb, order);
    let entry_order = if value.is_zero() { 1 } else { 0 };
    let mut tokens: Vec<Token> = Vec::new();
    if entry_order != 0 && an.verdict != Verdict::Collapsed {
        tokens.push(Token::from_order(entry_order));
    }
    tokens.extend(ords[..an.pattern_end].iter().map(|&o| Token::from_order(o)));
    let mut recovered = Vec::new();
    if let Verdict::Confined { exit_step } = an.verdict {
        for step in exit_step + 1 - order..=exit_step {
            if let Some(l) = &la[step - 1] {
                for (i, c) in init_a.iter().enumerate() {
                    if c == l {
                        recovered.push((step, i as i64 - (order as i64 - 1)));
                    }
                }
            }
        }
    }
    Ok(SingularityPattern {
        tokens,
        orders: ords,
        verdict: an.verdict,
        memory_steps: an.memory_steps,
        recovered,
        precision: prec.max(pb),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerdictSummary {
    pub verdict: Verdict,
    pub pattern_length: usize,
    pub pattern: String,
}

/// Verdict for the basic entry `x[0] = value + ε`.
pub fn confinement_verdict(
    map: &MappingDef,
    value: EntryValue,
    depth: usize,
) -> Result<VerdictSummary> {
    let p = trace_pattern(map, &PerturbationSpec::new(value), depth)?;
    Ok(VerdictSummary {
        verdict: p.verdict.clone(),
        pattern_length: p.tokens.len(),
        pattern: p.rendered(),
    })
}

/// A polynomial relation among shifted values of one coefficient, in
/// shift-normal form (lowest index `n`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Relation {
    pub coefficient: String,
    /// Variable `i` stands for the coefficient at `n + span - i`.
    pub poly: MPoly,
    pub span: usize,
}

impl Relation {
    fn names(&self) -> Vec<String> {
        (0..=self.span)
            .map(|i| {
                let off = (self.span - i) as i64;
                format!("{}[{}]", self.coefficient, crate::dsl::Shift::render(&off))
            })
            .collect()
    }

    /// Offset of variable `i`.
    pub fn offset(&self, i: usize) -> i64 {
        (self.span - i) as i64
    }

    /// Linear relations become additive recurrences; binomials `m1 - m2`
    /// become multiplicative ones.
    pub fn to_recurrence(&self) -> Option<Recurrence> {
        let terms: Vec<(&Vec<u32>, &Rational)> = self.poly.terms().collect();
        if terms
            .iter()
            .all(|(m, c)| m.iter().sum::<u32>() == 1 && c.is_integer())
        {
            let t = terms
                .iter()
                .map(|(m, c)| {
                    let v = m.iter().position(|&e| e == 1).expect("degree one");
                    (self.offset(v), c.to_integer().try_into().ok())
                })
                .map(|(s, c): (i64, Option<i64>)| c.map(|c| (s, c)))
                .collect::<Option<Vec<_>>>()?;
            let mut r = Recurrence::additive(&self.coefficient, t);
            r.terms.sort_by(|a, b| b.0.cmp(&a.0));
            return Some(r);
        }
        if let [(m1, c1), (m2, c2)] = terms[..] {
            if *c1 == -c2.clone() {
                let mut t: Vec<(i64, i64)> = (0..=self.span)
                    .map(|v| (self.offset(v), m1[v] as i64 - m2[v] as i64))
                    .filter(|t| t.1 != 0)
                    .collect();
                t.sort_by(|a, b| b.0.cmp(&a.0));
                return Some(Recurrence::multiplicative(&self.coefficient, t));
            }
        }
        None
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = 0", self.poly.render(&self.names()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedConstraints {
    pub relations: Vec<Relation>,
    /// Exit step of the reference pattern.
    pub exit_step: usize,
    /// Whether the exit limit depends on the free initial value once the
    /// relations hold.
    pub memory_recovered: bool,
}

fn eval_in(f: &SymbolField, p: &MPoly, vals: &[SymFrac]) -> SymFrac {
    let mut acc = f.zero();
    for (m, c) in p.terms() {
        let mut t = f.from_rational(c).expect("rationals embed");
        for (v, &e) in m.iter().enumerate() {
            if e > 0 {
                t = f.mul(&t, &f.pow(&vals[v], e as u64));
            }
        }
        acc = f.add(&acc, &t);
    }
    acc
}

fn eval_frac(f: &SymbolField, q: &SymFrac, vals: &[SymFrac]) -> SymFrac {
    let num = eval_in(f, &q.num, vals);
    let den = eval_in(f, &q.den, vals);
    f.div(&num, &den)
        .expect("substitution keeps denominators nonzero")
}

/// Confinement constraints on a symbolic coefficient of a second-order map.
///
/// The orbit is traced over the field of rational functions in the
/// coefficient symbols and a free initial value. Wherever the ε-order drops
/// below the order seen for the constant coefficient `reference`, the leading
/// coefficient must vanish; that condition is solved for its highest-index
/// symbol, substituted, and the trace repeated.
pub fn derive_coefficient_constraints(
    map: &MappingDef,
    entry: &PerturbationSpec,
    reference: &Rational,
) -> Result<DerivedConstraints> {
    if map.order() != 2 {
        return Err(Error::InvalidInput(
            "constraint derivation supports second-order maps only".into(),
        ));
    }
    let symbolic: Vec<(&String, i64, i64)> = map
        .coeffs
        .iter()
        .filter_map(|(n, s)| match s {
            CoeffSpec::Symbolic { lo, hi } => Some((n, *lo, *hi)),
            _ => None,
        })
        .collect();
    let autonomous = map.clone();
    let (name, lo, hi) = match symbolic[..] {
        [] => {
            let p = trace_pattern(&autonomous, entry, REFERENCE_DEPTH)?;
            return Ok(DerivedConstraints {
                relations: Vec::new(),
                exit_step: match p.verdict {
                    Verdict::Confined { exit_step } => exit_step,
                    _ => 0,
                },
                memory_recovered: p.verdict.is_confined(),
            });
        }
        [(n, lo, hi)] => (n.clone(), lo, hi),
        _ => {
            return Err(Error::InvalidInput(
                "exactly one coefficient may be symbolic".into(),
            ))
        }
    };
    let reference_map = map
        .clone()
        .with_coeff(&name, CoeffSpec::Constant(reference.clone()));
    let reference_entry = match &entry.value {
        EntryValue::Coefficient(c) if *c == name => {
            PerturbationSpec::number(reference.clone()).scaled(entry.scale.clone())
        }
        _ => entry.clone(),
    };
    let reference_pattern = trace_pattern(&reference_map, &reference_entry, REFERENCE_DEPTH)?;
    let Verdict::Confined { exit_step } = reference_pattern.verdict else {
        return Err(Error::InvalidInput(format!(
            "the map does not confine with {name} = {reference}; pick another reference value"
        )));
    };
    let expected = &reference_pattern.orders[..exit_step];

    let shifts: Vec<i64> = map.rhs.coeff_uses().get(&name).cloned().unwrap_or_default();
    let min_s = shifts.iter().copied().min().unwrap_or(0);
    let max_s = shifts.iter().copied().max().unwrap_or(0);
    let e = lo + (map.top - 1 - min_s).max(0);
    let needed_hi = (e + exit_step as i64 - map.top + max_s).max(e);
    let required = 2 * exit_step;
    if needed_hi > hi || (hi - lo + 1) < required as i64 {
        return Err(Error::WindowTooSmall {
            index: needed_hi.max(lo + required as i64 - 1),
            lo,
            hi,
            required,
        });
    }

    let win_lo = e.min(e + 1 - map.top + min_s);
    let names: Vec<String> = (win_lo..=needed_hi)
        .map(|j| symbol_name(&name, j))
        .collect();
    let f = SymbolField::new(names);
    let nv = f.nvars();
    let sym_of = |j: i64| (j - win_lo) as usize;
    // Current value of every symbol after substitutions.
    let mut subst: Vec<SymFrac> = (0..nv).map(|i| f.symbol(i)).collect();
    // Two generic values of the free initial value; a condition must hold
    // for both, and the exit limit must tell them apart.
    let free = generic_constants(DEFAULT_SEED, 2, &[Rational::zero(), reference.clone()]);
    let mut raw: Vec<MPoly> = Vec::new();
    let mut memory_recovered = false;

    for round in 0..=nv {
        if round > 0 {
            if let Some(recovered) = numeric_confirmation(
                map, &name, entry, e, &f, &subst, win_lo, &free, exit_step, expected,
            )? {
                memory_recovered = recovered;
                break;
            }
        }
        let entry_val = match &entry.value {
            EntryValue::Coefficient(c) if *c == name => subst[sym_of(e)].clone(),
            EntryValue::Coefficient(c) => {
                let spec = map
                    .coeffs
                    .get(c)
                    .ok_or_else(|| Error::UnboundSymbol(c.clone()))?;
                spec.value_in(&f, c, &[e])?
            }
            EntryValue::Number(q) => embed(&f, q)?,
        };
        let scale = embed(&f, &entry.scale)?;
        let mut orbits = Vec::new();
        for x0 in &free {
            let initial = vec![embed(&f, x0)?];
            let mut coeff = |c: &str, idx: i64| -> Result<SymFrac> {
                if c == name {
                    if idx < win_lo || idx > needed_hi {
                        return Err(Error::WindowTooSmall {
                            index: idx,
                            lo,
                            hi,
                            required,
                        });
                    }
                    Ok(subst[sym_of(idx)].clone())
                } else {
                    let spec = map
                        .coeffs
                        .get(c)
                        .ok_or_else(|| Error::UnboundSymbol(c.to_string()))?;
                    spec.value_in(&f, c, &[idx])
                }
            };
            let (orbit, _) = with_deepening(SYMBOLIC_PRECISION, |p| {
                trace_series(
                    &f,
                    map,
                    e,
                    entry_val.clone(),
                    scale.clone(),
                    &initial,
                    exit_step,
                    p,
                    &mut coeff,
                )
            })?;
            orbits.push(orbit);
        }
        let got: Vec<Vec<i64>> = orbits.iter().map(orders).collect();
        let mismatch = (0..exit_step).find(|&i| got.iter().any(|g| g[i] < expected[i]));
        let Some(i) = mismatch else {
            let l: Vec<Option<SymFrac>> = orbits
                .iter()
                .map(|o| limits(o)[exit_step - 1].clone())
                .collect();
            memory_recovered = l[0].is_some() && l[1].is_some() && l[0] != l[1];
            break;
        };
        let cond = orbits
            .iter()
            .zip(&got)
            .filter(|(_, g)| g[i] < expected[i])
            .map(|(o, _)| {
                o.series[i]
                    .leading_coeff()
                    .expect("finite order")
                    .num
                    .clone()
            })
            .fold(MPoly::zero(nv), |acc, p| acc.gcd(&p));
        if got.iter().any(|g| g[i] >= expected[i]) || cond.is_constant() {
            return Err(Error::NotSolvable(format!(
                "step {} needs a condition that cannot hold for generic initial data",
                i + 1
            )));
        }
        let cond = cond.primitive_relation();
        let var = (0..nv)
            .rev()
            .find(|&v| cond.degree_in(v) == 1)
            .ok_or_else(|| {
                Error::NotSolvable(format!(
                    "condition {} is not linear in any coefficient",
                    cond.render(f.names())
                ))
            })?;
        let parts = cond.coeffs_in(var);
        let value = f.reduce(parts[0].neg(), parts[1].clone());
        let mut point: Vec<SymFrac> = (0..nv).map(|i| f.symbol(i)).collect();
        point[var] = value;
        for s in subst.iter_mut() {
            *s = eval_frac(&f, s, &point);
        }
        raw.push(cond);
    }

    let mut relations: Vec<Relation> = Vec::new();
    for p in raw {
        let r = shift_normal(&name, &p);
        if !relations.contains(&r) {
            relations.push(r);
        }
    }
    Ok(DerivedConstraints {
        relations,
        exit_step,
        memory_recovered,
    })
}

/// Specialises the remaining free symbols to a random point modulo a prime
/// and retraces. `Some(recovered)` when every order matches the reference,
/// `None` when a further condition is needed or the point is degenerate.
#[allow(clippy::too_many_arguments)]
fn numeric_confirmation(
    map: &MappingDef,
    name: &str,
    entry: &PerturbationSpec,
    e: i64,
    sf: &SymbolField,
    subst: &[SymFrac],
    win_lo: i64,
    free: &[Rational],
    exit_step: usize,
    expected: &[i64],
) -> Result<Option<bool>> {
    let f = PrimeField::new(TRACE_PRIME)?;
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let point: Vec<u64> = (0..sf.nvars())
        .map(|_| rng.gen_range(2..TRACE_PRIME))
        .collect();
    let mut values = Vec::with_capacity(subst.len());
    for s in subst {
        let (Some(n), Some(d)) = (s.num.eval_mod(&f, &point), s.den.eval_mod(&f, &point)) else {
            return Ok(None);
        };
        match f.inv(&d) {
            Some(inv) => values.push(f.mul(&n, &inv)),
            None => return Ok(None),
        }
    }
    let value_at = |idx: i64| values[(idx - win_lo) as usize];
    let entry_val = match &entry.value {
        EntryValue::Coefficient(c) if c == name => value_at(e),
        EntryValue::Coefficient(c) => {
            let spec = map
                .coeffs
                .get(c)
                .ok_or_else(|| Error::UnboundSymbol(c.clone()))?;
            spec.value_in(&f, c, &[e])?
        }
        EntryValue::Number(q) => embed(&f, q)?,
    };
    let scale = embed(&f, &entry.scale)?;
    let mut lims = Vec::new();
    for x0 in free {
        let initial = vec![embed(&f, x0)?];
        let mut coeff = |c: &str, idx: i64| -> Result<u64> {
            if c == name {
                if idx < win_lo || idx >= win_lo + values.len() as i64 {
                    return Err(Error::InvalidInput(format!(
                        "{c} index {idx} outside the window"
                    )));
                }
                Ok(value_at(idx))
            } else {
                let spec = map
                    .coeffs
                    .get(c)
                    .ok_or_else(|| Error::UnboundSymbol(c.to_string()))?;
                spec.value_in(&f, c, &[idx])
            }
        };
        let orbit = match with_deepening(SYMBOLIC_PRECISION, |p| {
            trace_series(
                &f, map, e, entry_val, scale, &initial, exit_step, p, &mut coeff,
            )
        }) {
            Ok((o, _)) => o,
            Err(Error::DivisionByZero) => return Ok(None),
            Err(err) => return Err(err),
        };
        if orders(&orbit)[..exit_step] != *expected {
            return Ok(None);
        }
        lims.push(limits(&orbit)[exit_step - 1]);
    }
    Ok(Some(
        lims.len() == 2 && lims[0].is_some() && lims[1].is_some() && lims[0] != lims[1],
    ))
}

fn shift_normal(name: &str, p: &MPoly) -> Relation {
    let used: Vec<usize> = p.vars();
    let min = *used.iter().min().expect("relation has a coefficient");
    let max = *used.iter().max().expect("relation has a coefficient");
    let span = max - min;
    let terms = p.terms().map(|(m, c)| {
        let mut out = vec![0u32; span + 1];
        for v in &used {
            out[span - (v - min)] = m[*v];
        }
        (out, c.clone())
    });
    Relation {
        coefficient: name.to_string(),
        poly: MPoly::from_terms(span + 1, terms).primitive_relation(),
        span,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintReport {
    pub constraint: String,
    pub holds: bool,
    pub solution: SingularityPattern,
    pub violation: SingularityPattern,
}

/// Values on `lo..=hi` of a generic solution of `r`.
pub fn generic_solution(
    r: &Recurrence,
    lo: i64,
    hi: i64,
    seed: u64,
) -> Result<BTreeMap<Vec<i64>, Rational>> {
    let nonzero: Vec<(i64, i64)> = r.terms.iter().copied().filter(|t| t.1 != 0).collect();
    if nonzero.len() < 2 {
        return Err(Error::InvalidConstraint(
            "a constraint needs at least two nonzero terms".into(),
        ));
    }
    let smin = nonzero.iter().map(|t| t.0).min().expect("nonempty");
    let smax = nonzero.iter().map(|t| t.0).max().expect("nonempty");
    let top = nonzero.iter().find(|t| t.0 == smax).expect("present").1;
    if r.kind == RecurrenceKind::Multiplicative && top.abs() != 1 {
        return Err(Error::InvalidConstraint(
            "the highest shift must carry exponent ±1".into(),
        ));
    }
    let span = (smax - smin) as usize;
    let seedvals = generic_constants(seed, span, &[]);
    let mut vals: BTreeMap<i64, Rational> = BTreeMap::new();
    for (i, v) in seedvals.into_iter().enumerate() {
        vals.insert(lo + i as i64, v);
    }
    for n in lo + span as i64..=hi {
        let base = n - smax;
        let next = match r.kind {
            RecurrenceKind::Additive => {
                let rest = nonzero
                    .iter()
                    .filter(|t| t.0 != smax)
                    .fold(Rational::zero(), |acc, (s, c)| {
                        acc + Rational::from_integer((*c).into()) * &vals[&(base + s)]
                    });
                -rest / Rational::from_integer(top.into())
            }
            RecurrenceKind::Multiplicative => {
                let mut prod = Rational::one();
                for (s, e) in nonzero.iter().filter(|t| t.0 != smax) {
                    let p = num_traits::pow(vals[&(base + s)].clone(), e.unsigned_abs() as usize);
                    if *e > 0 {
                        prod /= p;
                    } else {
                        prod *= p;
                    }
                }
                if top > 0 {
                    prod
                } else {
                    prod.recip()
                }
            }
        };
        vals.insert(n, next);
    }
    if vals.values().all(|v| v.is_zero()) {
        return Err(Error::InvalidConstraint(
            "the constraint has no nonzero solution".into(),
        ));
    }
    Ok(vals.into_iter().map(|(k, v)| (vec![k], v)).collect())
}

/// Confinement under a generic solution of `constraint` and non-confinement
/// under generic coefficients that violate it.
pub fn verify_constraint(
    map: &MappingDef,
    constraint: &Recurrence,
    entry: &PerturbationSpec,
    depth: usize,
) -> Result<ConstraintReport> {
    let name = &constraint.coefficient;
    if !map.coeffs.contains_key(name) {
        return Err(Error::UnboundSymbol(name.clone()));
    }
    let margin = map.order() as i64
        + constraint
            .terms
            .iter()
            .map(|t| t.0.abs())
            .max()
            .unwrap_or(0)
        + 2;
    let lo = entry.entry_index - margin;
    let hi = entry.entry_index + depth as i64 + margin;
    let sol = generic_solution(constraint, lo, hi, DEFAULT_SEED ^ 0x5eed)?;
    let solution_map = map
        .clone()
        .with_coeff(name, CoeffSpec::table("<generic solution>", sol));
    let viol: BTreeMap<Vec<i64>, Rational> =
        generic_constants(DEFAULT_SEED ^ 0xbad, (hi - lo + 1) as usize, &[])
            .into_iter()
            .enumerate()
            .map(|(i, v)| (vec![lo + i as i64], v))
            .collect();
    let violation_map = map
        .clone()
        .with_coeff(name, CoeffSpec::table("<generic violation>", viol));
    let solution = trace_pattern(&solution_map, entry, depth)?;
    let violation = trace_pattern(&violation_map, entry, depth)?;
    Ok(ConstraintReport {
        constraint: constraint.to_string(),
        holds: solution.verdict.is_confined() && !violation.verdict.is_confined(),
        solution,
        violation,
    })
}

/// Which member of the late-confinement family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LateIndex {
    Finite(usize),
    Limit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatePolynomial {
    pub poly: IntPoly,
    /// True outside `(k, l) = (3, 3)`, where the family is only extrapolated.
    pub extrapolated: bool,
}

/// `1 + Σ_{j=1..m} x^((l+1)j - l)·(x^l - k x^(l-1) - k)`, or its limit
/// `x^l - k x^(l-1) - k`.
pub fn late_confinement_polynomial(k: i64, l: usize, m: LateIndex) -> Result<LatePolynomial> {
    let growth = crate::spectral::limit_polynomial(k, l)?;
    let extrapolated = (k, l) != (3, 3);
    let poly = match m {
        LateIndex::Limit => growth,
        LateIndex::Finite(0) => return Err(Error::InvalidInput("m must be at least 1".into())),
        LateIndex::Finite(m) => {
            let mut acc = IntPoly::monomial(1, 0);
            for j in 1..=m {
                acc = acc.add(&IntPoly::monomial(1, (l + 1) * j - l).mul(&growth))?;
            }
            acc
        }
    };
    Ok(LatePolynomial { poly, extrapolated })
}
