//! Named equation families with confinement-compatible default coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numeric::field::rational;
use crate::Rational;

use super::coeffs::{CoeffSpec, LinearForm};
use super::{parse_definition, render_rational, Definition};

/// Family parameters such as `k`, `l`, or a coefficient value.
pub type Params = BTreeMap<String, Rational>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecurrenceKind {
    /// `Σ c_i a_{n+s_i} = 0`.
    Additive,
    /// `Π a_{n+s_i}^{e_i} = 1`.
    Multiplicative,
}

/// A linear or multiplicative recurrence on one coefficient sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recurrence {
    pub kind: RecurrenceKind,
    pub coefficient: String,
    /// `(shift, coefficient-or-exponent)`, shifts distinct.
    pub terms: Vec<(i64, i64)>,
}

impl Recurrence {
    pub fn additive(coefficient: &str, terms: Vec<(i64, i64)>) -> Self {
        Recurrence {
            kind: RecurrenceKind::Additive,
            coefficient: coefficient.into(),
            terms,
        }
    }

    pub fn multiplicative(coefficient: &str, terms: Vec<(i64, i64)>) -> Self {
        Recurrence {
            kind: RecurrenceKind::Multiplicative,
            coefficient: coefficient.into(),
            terms,
        }
    }

    /// Same recurrence with its lowest shift moved to zero.
    pub fn shift_normal(&self) -> Self {
        let lo = self.terms.iter().map(|t| t.0).min().unwrap_or(0);
        let mut terms: Vec<(i64, i64)> = self.terms.iter().map(|&(s, c)| (s - lo, c)).collect();
        terms.sort();
        let mut out = self.clone();
        out.terms = terms;
        out
    }
}

fn shifted(name: &str, s: i64) -> String {
    match s {
        0 => format!("{name}[n]"),
        s if s > 0 => format!("{name}[n+{s}]"),
        s => format!("{name}[n{s}]"),
    }
}

impl fmt::Display for Recurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        match self.kind {
            RecurrenceKind::Additive => {
                let mut s = String::new();
                for (i, (sh, c)) in terms.iter().enumerate() {
                    let mag = c.abs();
                    if i == 0 {
                        if *c < 0 {
                            s.push('-');
                        }
                    } else {
                        s.push_str(if *c < 0 { " - " } else { " + " });
                    }
                    if mag != 1 {
                        s.push_str(&format!("{mag}*"));
                    }
                    s.push_str(&shifted(&self.coefficient, *sh));
                }
                write!(f, "{s} = 0")
            }
            RecurrenceKind::Multiplicative => {
                let side = |pos: bool| {
                    let parts: Vec<String> = terms
                        .iter()
                        .filter(|(_, e)| (*e > 0) == pos)
                        .map(|(sh, e)| {
                            let b = shifted(&self.coefficient, *sh);
                            if e.abs() == 1 {
                                b
                            } else {
                                format!("{b}^{}", e.abs())
                            }
                        })
                        .collect();
                    if parts.is_empty() {
                        "1".to_string()
                    } else {
                        parts.join("*")
                    }
                };
                write!(f, "{} = {}", side(true), side(false))
            }
        }
    }
}

/// Value taken by the iterate that enters the basic singularity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntryValue {
    Number(Rational),
    /// The named coefficient evaluated at the entry index.
    Coefficient(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyInfo {
    pub name: String,
    pub k: Option<u32>,
    pub ell: Option<u32>,
    pub entry: EntryValue,
    /// Coefficient constraints for confinement.
    pub constraints: Vec<Recurrence>,
    /// Lattice conditions, by description.
    pub lattice_conditions: Vec<String>,
    /// Whether the default coefficients satisfy the constraints.
    pub compliant: bool,
}

#[derive(Clone, Debug)]
pub struct Family {
    pub def: Definition,
    pub info: FamilyInfo,
}

pub fn family_names() -> &'static [&'static str] {
    &[
        "qrt_example",
        "mult_example",
        "hv",
        "hv_full",
        "kdv_lattice",
        "kmt_lattice",
        "kmt_full",
        "kmt_reduction",
        "kmt_reduction_full",
    ]
}

fn int_param(params: &Params, keys: &[&str], default: i64) -> Result<i64> {
    for k in keys {
        if let Some(v) = params.get(*k) {
            if !v.is_integer() {
                return Err(Error::InvalidInput(format!(
                    "parameter {k} must be an integer"
                )));
            }
            return v
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::InvalidInput(format!("parameter {k} out of range")));
        }
    }
    Ok(default)
}

fn flag(params: &Params, key: &str) -> bool {
    params.get(key).is_some_and(|v| !v.is_zero())
}

fn check_k(k: i64) -> Result<u32> {
    if k < 2 {
        return Err(Error::FamilyRejected(format!(
            "k = {k}: only exponents k >= 2 are analysed (k = 1 is the lattice KdV equation)"
        )));
    }
    u32::try_from(k).map_err(|_| Error::InvalidInput("k too large".into()))
}

fn check_ell(l: i64) -> Result<u32> {
    if l == 1 {
        return Err(Error::FamilyRejected(
            "l = 1 is excluded: the last two terms of the reduced mapping coincide".into(),
        ));
    }
    if l < 1 {
        return Err(Error::InvalidInput(format!("l = {l} must be at least 2")));
    }
    u32::try_from(l).map_err(|_| Error::InvalidInput("l too large".into()))
}

fn list(v: &[Rational]) -> String {
    v.iter().map(render_rational).collect::<Vec<_>>().join(",")
}

/// Default `a_n` for the reduced mapping: satisfies `a_{n+l+1} = (-1)^k a_n`
/// unless `violate` is set.
pub(crate) fn reduction_a(k: u32, l: u32, violate: bool) -> CoeffSpec {
    let one = rational(1, 1);
    if k.is_multiple_of(2) {
        if violate {
            let mut v = vec![one; l as usize + 1];
            v.push(rational(2, 1));
            CoeffSpec::periodic(v).expect("nonempty")
        } else {
            CoeffSpec::Constant(one)
        }
    } else if violate {
        CoeffSpec::Constant(one)
    } else if l.is_multiple_of(2) {
        CoeffSpec::periodic(vec![one, rational(-1, 1)]).expect("nonempty")
    } else {
        CoeffSpec::sign_pattern(one, l as usize + 1).expect("nonzero half-period")
    }
}

/// Generic values for a sequence with `c_{j+l+1} = -c_j`.
fn antiperiodic(l: u32) -> Vec<Rational> {
    const BASE: [i64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let half: Vec<Rational> = (0..=l as usize)
        .map(|j| rational(BASE[j % BASE.len()] + 40 * (j / BASE.len()) as i64, 1))
        .collect();
    let mut v = half.clone();
    v.extend(half.into_iter().map(|x| -x));
    v
}

/// `d_j = (c_{j+l} + c_{j-1})/k - c_{j+l-1}` for periodic `c`.
fn reduced_d(c: &[Rational], k: u32, l: u32) -> Vec<Rational> {
    let p = c.len() as i64;
    let at = |j: i64| c[j.rem_euclid(p) as usize].clone();
    let k = rational(k as i64, 1);
    (0..p)
        .map(|j| (at(j + l as i64) + at(j - 1)) / &k - at(j + l as i64 - 1))
        .collect()
}

pub(crate) fn reduction_constraints(k: u32, l: u32, full: bool) -> Vec<Recurrence> {
    let l = l as i64;
    let sign = if k.is_multiple_of(2) { 1 } else { -1 };
    let mut out = vec![Recurrence::additive("a", vec![(l + 1, 1), (0, -sign)])];
    if full {
        let k = k as i64;
        out.push(Recurrence::additive(
            "c",
            vec![
                (l + 1, 1),
                (0, 2),
                (-l - 1, 1),
                (1, -k),
                (-l, -k),
                (l, -k),
                (-1, -k),
            ],
        ));
    }
    out
}

/// Build a named family. Parameters: `k`, `l` (or `ell`), `a` for the
/// second-order examples, and `violate_constraint` (nonzero to pick
/// coefficients that break confinement).
pub fn builtin_family(name: &str, params: &Params) -> Result<Family> {
    let violate = flag(params, "violate_constraint");
    let get_k = || int_param(params, &["k"], 2).and_then(check_k);
    let get_l = || int_param(params, &["l", "ell"], 2).and_then(check_ell);
    let info =
        |k: Option<u32>, l: Option<u32>, entry: EntryValue, constraints, lattice: &[&str]| {
            FamilyInfo {
                name: name.to_string(),
                k,
                ell: l,
                entry,
                constraints,
                lattice_conditions: lattice.iter().map(|s| s.to_string()).collect(),
                compliant: !violate,
            }
        };
    let zero_entry = EntryValue::Number(Rational::zero());
    let (text, info) = match name {
        "qrt_example" => {
            let a = params.get("a").cloned().unwrap_or_else(|| rational(2, 1));
            if a.is_zero() {
                return Err(Error::InvalidInput("a must be nonzero".into()));
            }
            let spec = if violate {
                // period three with distinct values breaks the product relation
                CoeffSpec::periodic(vec![
                    a.clone(),
                    a.clone() * rational(2, 1),
                    a.clone() * rational(5, 1),
                ])?
            } else {
                CoeffSpec::Constant(a)
            };
            (
                format!("x[n+1]*x[n-1] = 1 - a[n]/x[n]\na: {spec}"),
                info(
                    None,
                    None,
                    EntryValue::Coefficient("a".into()),
                    vec![Recurrence::multiplicative(
                        "a",
                        vec![(3, 1), (-2, 1), (2, -1), (-1, -1)],
                    )],
                    &[],
                ),
            )
        }
        "mult_example" => {
            let default = if violate {
                rational(2, 1)
            } else {
                rational(1, 1)
            };
            let a = params.get("a").cloned().unwrap_or(default);
            if a.is_zero() {
                return Err(Error::InvalidInput("a must be nonzero".into()));
            }
            (
                format!(
                    "x[n+1]*x[n-1] = x[n] - a[n]^2/x[n]\na: const {}",
                    render_rational(&a)
                ),
                info(
                    None,
                    None,
                    EntryValue::Coefficient("a".into()),
                    vec![Recurrence::multiplicative(
                        "a",
                        vec![(3, 2), (-3, 2), (2, -4), (-2, -4)],
                    )],
                    &[],
                ),
            )
        }
        "hv" => (
            "x[n+1] + x[n-1] = x[n] + 1/x[n]^2".to_string(),
            info(None, None, zero_entry, vec![], &[]),
        ),
        "hv_full" => {
            let spec = if violate {
                CoeffSpec::Constant(rational(1, 1))
            } else {
                CoeffSpec::recurrence(
                    vec![rational(2, 1), rational(2, 1), rational(-1, 1)],
                    vec![rational(1, 1), rational(2, 1), rational(3, 1)],
                )?
            };
            (
                format!("x[n+1] + x[n-1] = x[n] + a[n]/x[n] + 1/x[n]^2\na: {spec}"),
                info(
                    None,
                    None,
                    zero_entry,
                    vec![Recurrence::additive(
                        "a",
                        vec![(3, 1), (2, -2), (1, -2), (0, 1)],
                    )],
                    &[],
                ),
            )
        }
        "kdv_lattice" => (
            "x[m,n] = x[m-1,n-1] + a[m,n-1]/x[m,n-1] - b[m-1,n]/x[m-1,n]\na: const 1\nb: const 1"
                .to_string(),
            info(
                Some(1),
                None,
                zero_entry,
                vec![],
                &[
                    "a/b depends on m-n only",
                    "a(m+1,n+1) - a(m+1,n) - a(m,n+1) + a(m,n) = 0",
                ],
            ),
        ),
        "kmt_lattice" => {
            let k = get_k()?;
            let l = if params.contains_key("l") || params.contains_key("ell") {
                Some(get_l()?)
            } else {
                None
            };
            let spec = match l {
                Some(l) => lift(&reduction_a(k, l, violate), l),
                None => lattice_a(k, violate),
            };
            (
                format!(
                    "x[m,n] = -x[m-1,n-1] + a[m,n-1]/x[m,n-1]^{k} + b[m-1,n]/x[m-1,n]^{k}\na: {spec}\nb: {spec}"
                ),
                info(
                    Some(k),
                    l,
                    zero_entry,
                    vec![],
                    &["a(m+1,n+1) = (-1)^k a(m,n)", "b(m+1,n+1) = (-1)^k b(m,n)"],
                ),
            )
        }
        "kmt_full" => {
            let k = get_k()?;
            let l = get_l()?;
            let a = lift(&reduction_a(k, l, violate), l);
            let c = antiperiodic(l);
            let d = reduced_d(&c, k, l);
            let form = LinearForm { m: l as i64, n: 1 };
            (
                format!(
                    "x[m,n] = -x[m-1,n-1] + a[m,n-1]/x[m,n-1]^{k} + a[m-1,n]/x[m-1,n]^{k} + c[m,n-1]/x[m,n-1] + d[m-1,n]/x[m-1,n]\na: {a}\nc: periodic[{form}]({})\nd: periodic[{form}]({})",
                    list(&c),
                    list(&d)
                ),
                info(
                    Some(k),
                    Some(l),
                    zero_entry,
                    vec![],
                    &[
                        "a(m+1,n+1) = (-1)^k a(m,n)",
                        "d(m,n) = (c(m+1,n) + c(m,n-1))/k - c(m+1,n-1)",
                        "c(m+1,n+1) + 2c(m,n) + c(m-1,n-1) - k(c(m+1,n) + c(m,n-1) + c(m-1,n) + c(m,n+1)) = 0",
                    ],
                ),
            )
        }
        "kmt_reduction" | "kmt_reduction_full" => {
            let k = get_k()?;
            let l = get_l()?;
            let full = name == "kmt_reduction_full";
            let a = reduction_a(k, l, violate);
            let mut text = format!(
                "x[n+{l}] = -x[n-1] + a[n+{}]/x[n+{}]^{k} + a[n]/x[n]^{k}",
                l - 1,
                l - 1
            );
            if full {
                text.push_str(&format!(" + c[n+{}]/x[n+{}] + d[n]/x[n]", l - 1, l - 1));
            }
            text.push_str(&format!("\na: {a}"));
            if full {
                let c = antiperiodic(l);
                let d = reduced_d(&c, k, l);
                text.push_str(&format!(
                    "\nc: periodic({})\nd: periodic({})",
                    list(&c),
                    list(&d)
                ));
            }
            (
                text,
                info(
                    Some(k),
                    Some(l),
                    zero_entry,
                    reduction_constraints(k, l, full),
                    &[],
                ),
            )
        }
        other => return Err(Error::UnknownFamily(other.to_string())),
    };
    let def = parse_definition(&text)?;
    Ok(Family { def, info })
}

/// Lattice coefficient `a(m,n) = A(l*m + n)` for a one-dimensional `A`.
pub fn lift(spec: &CoeffSpec, l: u32) -> CoeffSpec {
    match spec {
        CoeffSpec::Periodic { form, values } if form.m == 0 => CoeffSpec::Periodic {
            form: LinearForm {
                m: form.n * l as i64,
                n: form.n,
            },
            values: values.clone(),
        },
        other => other.clone(),
    }
}

fn lattice_a(k: u32, violate: bool) -> CoeffSpec {
    let one = rational(1, 1);
    match (k.is_multiple_of(2), violate) {
        (true, false) => CoeffSpec::Constant(one),
        (false, true) => CoeffSpec::Constant(one),
        (true, true) => {
            CoeffSpec::periodic_in(LinearForm { m: 1, n: 0 }, vec![one, rational(2, 1)])
                .expect("nonempty")
        }
        (false, false) => CoeffSpec::periodic(vec![one, rational(-1, 1)]).expect("nonempty"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{Expr, MappingDef};

    fn p(pairs: &[(&str, i64)]) -> Params {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), rational(*v, 1)))
            .collect()
    }

    fn mapping(f: &Family) -> &MappingDef {
        f.def.as_mapping().unwrap()
    }

    #[test]
    fn third_order_reduction_matches_hand_form() {
        let f = builtin_family("kmt_reduction", &p(&[("k", 2), ("l", 2)])).unwrap();
        let m = mapping(&f);
        assert_eq!((m.top, m.bottom), (2, -1));
        let x = Expr::Var;
        let a = |s| Expr::Coeff("a".into(), s);
        let expected = Expr::add(
            Expr::add(Expr::neg(x(-1)), Expr::div(a(1), Expr::pow(x(1), 2))),
            Expr::div(a(0), Expr::pow(x(0), 2)),
        );
        assert_eq!(m.rhs, expected);
        assert_eq!(m.coeffs["a"], CoeffSpec::Constant(rational(1, 1)));
    }

    #[test]
    fn odd_k_uses_sign_pattern() {
        let f = builtin_family("kmt_reduction", &p(&[("k", 3), ("l", 3)])).unwrap();
        let vals: Vec<i64> = [1, 1, 1, 1, -1, -1, -1, -1].to_vec();
        assert_eq!(
            mapping(&f).coeffs["a"],
            CoeffSpec::periodic(vals.iter().map(|&v| rational(v, 1)).collect()).unwrap()
        );
        let v = builtin_family(
            "kmt_reduction",
            &p(&[("k", 3), ("l", 3), ("violate_constraint", 1)]),
        )
        .unwrap();
        assert_eq!(mapping(&v).coeffs["a"], CoeffSpec::Constant(rational(1, 1)));
        assert!(!v.info.compliant);
    }

    #[test]
    fn rejected_parameters() {
        assert!(matches!(
            builtin_family("kmt_reduction", &p(&[("k", 2), ("l", 1)])),
            Err(Error::FamilyRejected(_))
        ));
        assert!(matches!(
            builtin_family("kmt_lattice", &p(&[("k", 1)])),
            Err(Error::FamilyRejected(_))
        ));
        assert!(matches!(
            builtin_family("nope", &Params::new()),
            Err(Error::UnknownFamily(_))
        ));
    }

    #[test]
    fn every_family_round_trips() {
        for name in family_names() {
            for violate in [0, 1] {
                let f = builtin_family(
                    name,
                    &p(&[("k", 3), ("l", 3), ("violate_constraint", violate)]),
                )
                .unwrap();
                let again = parse_definition(&f.def.to_string()).unwrap();
                assert_eq!(f.def, again, "{name}");
            }
        }
    }

    #[test]
    fn antiperiodic_c_satisfies_its_recurrence() {
        for l in 2..6u32 {
            let c = antiperiodic(l);
            let p = c.len() as i64;
            let at = |j: i64| c[j.rem_euclid(p) as usize].clone();
            let rec = &reduction_constraints(3, l, true)[1];
            for n in 0..p {
                let s = rec.terms.iter().fold(Rational::zero(), |acc, (sh, co)| {
                    acc + at(n + sh) * rational(*co, 1)
                });
                assert!(s.is_zero());
            }
        }
    }

    #[test]
    fn recurrences_render() {
        let r = Recurrence::additive("a", vec![(3, 1), (2, -2), (1, -2), (0, 1)]);
        assert_eq!(r.to_string(), "a[n+3] - 2*a[n+2] - 2*a[n+1] + a[n] = 0");
        let m = Recurrence::multiplicative("a", vec![(3, 1), (-2, 1), (2, -1), (-1, -1)]);
        assert_eq!(m.to_string(), "a[n+3]*a[n-2] = a[n+2]*a[n-1]");
        assert_eq!(
            m.shift_normal().terms,
            vec![(0, 1), (1, -1), (4, -1), (5, 1)]
        );
    }
}
