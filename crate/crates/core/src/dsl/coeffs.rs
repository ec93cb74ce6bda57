//! Coefficient sequences and fields.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numeric::field::Field;
use crate::Rational;

use super::render_rational;

/// Integer linear form `m_coef*m + n_coef*n` selecting the phase of a
/// periodic coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub m: i64,
    pub n: i64,
}

impl LinearForm {
    pub const N: LinearForm = LinearForm { m: 0, n: 1 };

    pub fn apply(&self, idx: &[i64]) -> i64 {
        match idx {
            [n] => self.n * n,
            [m, n] => self.m * m + self.n * n,
            _ => 0,
        }
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (c, v) in [(self.m, "m"), (self.n, "n")] {
            if c == 0 {
                continue;
            }
            if c < 0 {
                s.push('-');
            } else if !s.is_empty() {
                s.push('+');
            }
            if c.abs() != 1 {
                s.push_str(&c.abs().to_string());
            }
            s.push_str(v);
        }
        if s.is_empty() {
            s.push('0');
        }
        f.write_str(&s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoeffSpec {
    Constant(Rational),
    /// `values[form(idx) mod len]`.
    Periodic {
        form: LinearForm,
        values: Vec<Rational>,
    },
    /// `v_j = Σ_i coeffs[i-1] v_{j-i}` with `v_0..v_{s-1} = initial`, extended
    /// in both directions.
    Recurrence {
        coeffs: Vec<Rational>,
        initial: Vec<Rational>,
    },
    /// Values read from a CSV file, keyed by index tuple.
    Table {
        path: String,
        values: BTreeMap<Vec<i64>, Rational>,
    },
    /// One free symbol per index in `lo..=hi`.
    Symbolic {
        lo: i64,
        hi: i64,
    },
}

/// A coefficient value before it is mapped into a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoeffValue {
    Number(Rational),
    Symbol(i64),
}

impl CoeffSpec {
    pub fn constant(v: Rational) -> Self {
        CoeffSpec::Constant(v)
    }

    pub fn periodic(values: Vec<Rational>) -> Result<Self> {
        Self::periodic_in(LinearForm::N, values)
    }

    pub fn periodic_in(form: LinearForm, values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(
                "periodic coefficient needs at least one value".into(),
            ));
        }
        Ok(CoeffSpec::Periodic { form, values })
    }

    /// `base` for `half` indices, then `-base` for `half` indices, repeated.
    pub fn sign_pattern(base: Rational, half: usize) -> Result<Self> {
        if half == 0 {
            return Err(Error::InvalidInput(
                "sign pattern half-period must be positive".into(),
            ));
        }
        let mut values = vec![base.clone(); half];
        values.extend(std::iter::repeat_n(-base, half));
        Self::periodic(values)
    }

    pub fn recurrence(coeffs: Vec<Rational>, initial: Vec<Rational>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() != initial.len() {
            return Err(Error::InvalidInput(
                "recurrence needs as many initial values as coefficients".into(),
            ));
        }
        if coeffs.last().is_none_or(|c| c.is_zero()) {
            return Err(Error::InvalidInput(
                "last recurrence coefficient must be nonzero".into(),
            ));
        }
        Ok(CoeffSpec::Recurrence { coeffs, initial })
    }

    pub fn symbolic(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidInput(format!(
                "empty symbolic window {lo}..{hi}"
            )));
        }
        Ok(CoeffSpec::Symbolic { lo, hi })
    }

    pub fn table(path: impl Into<String>, values: BTreeMap<Vec<i64>, Rational>) -> Self {
        CoeffSpec::Table {
            path: path.into(),
            values,
        }
    }

    /// Read a CSV table with index columns followed by a value column.
    pub fn load_table(path: &std::path::Path, display: &str, dims: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Io(e.to_string()))?;
            if record.len() != dims + 1 {
                return Err(Error::InvalidInput(format!(
                    "{display}: row {} has {} columns, expected {}",
                    row + 1,
                    record.len(),
                    dims + 1
                )));
            }
            let idx: Option<Vec<i64>> = (0..dims).map(|i| record[i].parse().ok()).collect();
            let Some(idx) = idx else {
                if row == 0 {
                    continue; // header
                }
                return Err(Error::InvalidInput(format!(
                    "{display}: bad index on row {}",
                    row + 1
                )));
            };
            let v = crate::numeric::parse_rational(&record[dims]).ok_or_else(|| {
                Error::InvalidInput(format!("{display}: bad value on row {}", row + 1))
            })?;
            values.insert(idx, v);
        }
        Ok(CoeffSpec::table(display, values))
    }

    pub fn value(&self, name: &str, idx: &[i64]) -> Result<CoeffValue> {
        match self {
            CoeffSpec::Constant(v) => Ok(CoeffValue::Number(v.clone())),
            CoeffSpec::Periodic { form, values } => {
                let j = form.apply(idx).rem_euclid(values.len() as i64) as usize;
                Ok(CoeffValue::Number(values[j].clone()))
            }
            CoeffSpec::Recurrence { coeffs, initial } => {
                let [j] = idx else {
                    return Err(Error::InvalidInput(format!(
                        "recurrence coefficient `{name}` is one-dimensional"
                    )));
                };
                Ok(CoeffValue::Number(recurrence_value(coeffs, initial, *j)))
            }
            CoeffSpec::Table { values, .. } => values
                .get(idx)
                .cloned()
                .map(CoeffValue::Number)
                .ok_or_else(|| match idx {
                    [m, n] => Error::CoefficientUndefined {
                        name: name.to_string(),
                        m: *m,
                        n: *n,
                    },
                    _ => Error::UnboundSymbol(format!("{name}[{idx:?}]")),
                }),
            CoeffSpec::Symbolic { lo, hi } => {
                let [j] = idx else {
                    return Err(Error::InvalidInput(format!(
                        "symbolic coefficient `{name}` is one-dimensional"
                    )));
                };
                if j < lo || j > hi {
                    return Err(Error::UnboundSymbol(format!(
                        "{name}[{j}] outside {lo}..{hi}"
                    )));
                }
                Ok(CoeffValue::Symbol(*j))
            }
        }
    }

    /// Field image of the value at `idx`. Symbolic values map to the field's
    /// symbol named by [`symbol_name`].
    pub fn value_in<F: Field>(&self, f: &F, name: &str, idx: &[i64]) -> Result<F::Elem> {
        match self.value(name, idx)? {
            CoeffValue::Number(q) => f.from_rational(&q).ok_or_else(|| {
                Error::InvalidInput(format!("{name} = {q} is not representable in the field"))
            }),
            CoeffValue::Symbol(j) => {
                let s = symbol_name(name, j);
                f.symbol(&s).ok_or(Error::UnboundSymbol(s))
            }
        }
    }
}

/// Name of the symbol standing for coefficient `name` at index `j`.
pub fn symbol_name(name: &str, j: i64) -> String {
    format!("{name}_{j}")
}

fn recurrence_value(coeffs: &[Rational], initial: &[Rational], j: i64) -> Rational {
    let s = coeffs.len() as i64;
    if (0..s).contains(&j) {
        return initial[j as usize].clone();
    }
    let mut window: Vec<Rational> = initial.to_vec();
    if j >= s {
        for _ in s..=j {
            let next = coeffs
                .iter()
                .enumerate()
                .fold(Rational::zero(), |acc, (i, c)| {
                    acc + c * &window[window.len() - 1 - i]
                });
            window.remove(0);
            window.push(next);
        }
        window.last().cloned().expect("nonempty")
    } else {
        // v_{t-s} = (v_t - Σ_{i<s} c_i v_{t-i}) / c_s
        let last = coeffs.last().expect("nonempty");
        for _ in j..0 {
            let mut acc = window[window.len() - 1].clone();
            for (i, c) in coeffs.iter().enumerate().take(coeffs.len() - 1) {
                acc -= c * &window[window.len() - 2 - i];
            }
            let prev = acc / last;
            window.pop();
            window.insert(0, prev);
        }
        window[0].clone()
    }
}

/// Values of `spec` on the inclusive range `lo..=hi`.
pub fn instantiate_coefficients<F: Field>(
    f: &F,
    name: &str,
    spec: &CoeffSpec,
    lo: i64,
    hi: i64,
) -> Result<Vec<F::Elem>> {
    (lo..=hi).map(|j| spec.value_in(f, name, &[j])).collect()
}

impl fmt::Display for CoeffSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[Rational]| v.iter().map(render_rational).collect::<Vec<_>>().join(", ");
        match self {
            CoeffSpec::Constant(v) => write!(f, "const {}", render_rational(v)),
            CoeffSpec::Periodic { form, values } => {
                if *form == LinearForm::N {
                    write!(f, "periodic({})", list(values))
                } else {
                    write!(f, "periodic[{form}]({})", list(values))
                }
            }
            CoeffSpec::Recurrence { coeffs, initial } => {
                write!(f, "linrec[{}]({})", list(coeffs), list(initial))
            }
            CoeffSpec::Table { path, .. } => write!(f, "table \"{path}\""),
            CoeffSpec::Symbolic { lo, hi } => write!(f, "symbolic({lo}..{hi})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::field::{rational, Rationals};

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rational(x, 1)).collect()
    }

    #[test]
    fn periodic_wraps() {
        let p = CoeffSpec::periodic(ints(&[1, -1])).unwrap();
        assert_eq!(
            instantiate_coefficients(&Rationals, "a", &p, 0, 3).unwrap(),
            ints(&[1, -1, 1, -1])
        );
        assert_eq!(
            instantiate_coefficients(&Rationals, "a", &p, -1, -1).unwrap(),
            ints(&[-1])
        );
        let c = CoeffSpec::constant(rational(1, 1));
        assert_eq!(
            instantiate_coefficients(&Rationals, "a", &c, 0, 2).unwrap(),
            ints(&[1, 1, 1])
        );
    }

    #[test]
    fn sign_pattern_period_eight() {
        let s = CoeffSpec::sign_pattern(rational(1, 1), 4).unwrap();
        assert_eq!(
            instantiate_coefficients(&Rationals, "a", &s, 0, 8).unwrap(),
            ints(&[1, 1, 1, 1, -1, -1, -1, -1, 1])
        );
    }

    #[test]
    fn recurrence_extends_both_ways() {
        // v_j = 2 v_{j-1} + 2 v_{j-2} - v_{j-3}
        let r = CoeffSpec::recurrence(ints(&[2, 2, -1]), ints(&[1, 2, 3])).unwrap();
        let v = instantiate_coefficients(&Rationals, "a", &r, -3, 6).unwrap();
        for w in v.windows(4) {
            assert_eq!(
                &w[3] - rational(2, 1) * &w[2] - rational(2, 1) * &w[1] + &w[0],
                rational(0, 1)
            );
        }
        assert_eq!(v[3..6], ints(&[1, 2, 3])[..]);
    }

    #[test]
    fn symbolic_window_is_bounded() {
        let s = CoeffSpec::symbolic(0, 3).unwrap();
        assert_eq!(s.value("a", &[2]).unwrap(), CoeffValue::Symbol(2));
        assert!(matches!(s.value("a", &[4]), Err(Error::UnboundSymbol(_))));
        // a numeric field has no symbols
        assert!(matches!(
            s.value_in(&Rationals, "a", &[1]),
            Err(Error::UnboundSymbol(_))
        ));
    }

    #[test]
    fn tables_report_missing_sites() {
        let mut values = BTreeMap::new();
        values.insert(vec![0, 0], rational(3, 1));
        let t = CoeffSpec::table("g.csv", values);
        assert_eq!(
            t.value("a", &[0, 0]).unwrap(),
            CoeffValue::Number(rational(3, 1))
        );
        assert_eq!(
            t.value("a", &[1, 0]),
            Err(Error::CoefficientUndefined {
                name: "a".into(),
                m: 1,
                n: 0
            })
        );
    }
}
