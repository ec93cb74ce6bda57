//! Evaluation of expressions over different value domains.

use crate::error::{Error, Result};
use crate::numeric::field::Field;
use crate::numeric::laurent::LaurentSeries;
use crate::numeric::poly::UniPoly;
use crate::numeric::ratfunc::RationalFunction;
use crate::Rational;

use super::{Expr, MappingDef};

/// Arithmetic needed to evaluate an [`Expr`].
pub trait Domain {
    type Val: Clone;

    fn num(&self, q: &Rational) -> Result<Self::Val>;
    fn add(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val>;
    fn sub(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val>;
    fn mul(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val>;
    fn div(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val>;
    fn neg(&self, a: &Self::Val) -> Result<Self::Val>;
    fn powi(&self, a: &Self::Val, e: i32) -> Result<Self::Val>;
}

/// Evaluate `e`, looking up unknowns and coefficients through the callbacks.
pub fn eval<I, D: Domain>(
    e: &Expr<I>,
    d: &D,
    var: &mut impl FnMut(&I) -> Result<D::Val>,
    coeff: &mut impl FnMut(&str, &I) -> Result<D::Val>,
) -> Result<D::Val> {
    Ok(match e {
        Expr::Num(q) => d.num(q)?,
        Expr::Var(i) => var(i)?,
        Expr::Coeff(name, i) => coeff(name, i)?,
        Expr::Neg(a) => {
            let a = eval(a, d, var, coeff)?;
            d.neg(&a)?
        }
        Expr::Pow(a, k) => {
            let a = eval(a, d, var, coeff)?;
            d.powi(&a, *k)?
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            let x = eval(a, d, var, coeff)?;
            let y = eval(b, d, var, coeff)?;
            match e {
                Expr::Add(..) => d.add(&x, &y)?,
                Expr::Sub(..) => d.sub(&x, &y)?,
                Expr::Mul(..) => d.mul(&x, &y)?,
                _ => d.div(&x, &y)?,
            }
        }
    })
}

/// Plain field elements.
#[derive(Clone, Debug)]
pub struct FieldDomain<F>(pub F);

impl<F: Field> Domain for FieldDomain<F> {
    type Val = F::Elem;

    fn num(&self, q: &Rational) -> Result<F::Elem> {
        self.0
            .from_rational(q)
            .ok_or_else(|| Error::InvalidInput(format!("constant {q} is not representable")))
    }
    fn add(&self, a: &F::Elem, b: &F::Elem) -> Result<F::Elem> {
        Ok(self.0.add(a, b))
    }
    fn sub(&self, a: &F::Elem, b: &F::Elem) -> Result<F::Elem> {
        Ok(self.0.sub(a, b))
    }
    fn mul(&self, a: &F::Elem, b: &F::Elem) -> Result<F::Elem> {
        Ok(self.0.mul(a, b))
    }
    fn div(&self, a: &F::Elem, b: &F::Elem) -> Result<F::Elem> {
        self.0.div(a, b)
    }
    fn neg(&self, a: &F::Elem) -> Result<F::Elem> {
        Ok(self.0.neg(a))
    }
    fn powi(&self, a: &F::Elem, e: i32) -> Result<F::Elem> {
        let p = self.0.pow(a, e.unsigned_abs() as u64);
        if e < 0 {
            self.0.inv(&p).ok_or(Error::DivisionByZero)
        } else {
            Ok(p)
        }
    }
}

/// Reduced rational functions of one indeterminate.
#[derive(Clone, Debug)]
pub struct RatFuncDomain<F>(pub F);

impl<F: Field> Domain for RatFuncDomain<F> {
    type Val = RationalFunction<F::Elem>;

    fn num(&self, q: &Rational) -> Result<Self::Val> {
        let c = FieldDomain(self.0.clone()).num(q)?;
        Ok(RationalFunction::constant(&self.0, c))
    }
    fn add(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val> {
        Ok(a.add(&self.0, b))
    }
    fn sub(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val> {
        Ok(a.sub(&self.0, b))
    }
    fn mul(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val> {
        Ok(a.mul(&self.0, b))
    }
    fn div(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val> {
        a.div(&self.0, b)
    }
    fn neg(&self, a: &Self::Val) -> Result<Self::Val> {
        Ok(a.neg(&self.0))
    }
    fn powi(&self, a: &Self::Val, e: i32) -> Result<Self::Val> {
        a.powi(&self.0, e)
    }
}

impl<F: Field> RatFuncDomain<F> {
    /// The indeterminate itself.
    pub fn indeterminate(&self) -> RationalFunction<F::Elem> {
        RationalFunction::from_poly(&self.0, UniPoly::x(&self.0))
    }
}

/// Laurent series in ε with a fixed inversion precision.
#[derive(Clone, Debug)]
pub struct LaurentDomain<F> {
    pub field: F,
    pub precision: usize,
}

impl<F: Field> Domain for LaurentDomain<F> {
    type Val = LaurentSeries<F::Elem>;

    fn num(&self, q: &Rational) -> Result<Self::Val> {
        let c = FieldDomain(self.field.clone()).num(q)?;
        Ok(LaurentSeries::constant(&self.field, c))
    }
    fn add(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val> {
        a.add(&self.field, b)
    }
    fn sub(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val> {
        a.sub(&self.field, b)
    }
    fn mul(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val> {
        a.mul(&self.field, b)
    }
    fn div(&self, a: &Self::Val, b: &Self::Val) -> Result<Self::Val> {
        a.div(&self.field, b, self.precision)
    }
    fn neg(&self, a: &Self::Val) -> Result<Self::Val> {
        Ok(a.neg(&self.field))
    }
    fn powi(&self, a: &Self::Val, e: i32) -> Result<Self::Val> {
        a.powi(&self.field, e, self.precision)
    }
}

/// Exact orbit of a mapping. `initial` holds `x[first..first+order-1]`; the
/// result continues it with `steps` new values.
pub fn iterate_mapping(
    map: &MappingDef,
    initial: &[Rational],
    first: i64,
    steps: usize,
) -> Result<Vec<Rational>> {
    let order = map.order();
    if initial.len() != order {
        return Err(Error::InvalidInput(format!(
            "the mapping needs {order} initial values, got {}",
            initial.len()
        )));
    }
    let d = FieldDomain(crate::numeric::Rationals);
    let mut vals = initial.to_vec();
    for j in 0..steps {
        let target = first + (order + j) as i64;
        let n = target - map.top;
        let next = eval(
            &map.rhs,
            &d,
            &mut |s: &i64| Ok(vals[(n + s - first) as usize].clone()),
            &mut |name: &str, s: &i64| {
                let spec = map
                    .coeffs
                    .get(name)
                    .ok_or_else(|| Error::UnboundSymbol(name.to_string()))?;
                spec.value_in(&crate::numeric::Rationals, name, &[n + s])
            },
        )?;
        vals.push(next);
    }
    Ok(vals.split_off(order))
}
