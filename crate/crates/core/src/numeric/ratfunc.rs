//! Reduced quotients of univariate polynomials.

use crate::error::{Error, Result};
use crate::numeric::field::Field;
use crate::numeric::poly::UniPoly;

/// `numerator / denominator` with coprime parts and a monic denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction<E> {
    num: UniPoly<E>,
    den: UniPoly<E>,
}

impl<E: Clone + PartialEq> RationalFunction<E> {
    /// Reduce `num / den` to lowest terms.
    pub fn reduce<F: Field<Elem = E>>(f: &F, num: UniPoly<E>, den: UniPoly<E>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        let g = num.gcd(f, &den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.exact_div(f, &g)?, den.exact_div(f, &g)?)
        };
        Ok(Self::normalize(f, num, den))
    }

    /// Build from parts already known to be coprime.
    fn normalize<F: Field<Elem = E>>(f: &F, num: UniPoly<E>, den: UniPoly<E>) -> Self {
        if num.is_zero() {
            return RationalFunction {
                num,
                den: UniPoly::one(f),
            };
        }
        let lead = den.leading().expect("denominator is nonzero").clone();
        if f.is_one(&lead) {
            return RationalFunction { num, den };
        }
        let inv = f.inv(&lead).expect("nonzero leading coefficient");
        RationalFunction {
            num: num.scale(f, &inv),
            den: den.scale(f, &inv),
        }
    }

    pub fn from_poly<F: Field<Elem = E>>(f: &F, p: UniPoly<E>) -> Self {
        RationalFunction {
            num: p,
            den: UniPoly::one(f),
        }
    }

    pub fn constant<F: Field<Elem = E>>(f: &F, c: E) -> Self {
        Self::from_poly(f, UniPoly::constant(f, c))
    }

    pub fn numerator(&self) -> &UniPoly<E> {
        &self.num
    }

    pub fn denominator(&self) -> &UniPoly<E> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Maximum of numerator and denominator degrees.
    pub fn degree(&self) -> usize {
        self.num.degree_or_zero().max(self.den.degree_or_zero())
    }

    pub fn neg<F: Field<Elem = E>>(&self, f: &F) -> Self {
        RationalFunction {
            num: self.num.neg(f),
            den: self.den.clone(),
        }
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let g = self.den.gcd(f, &other.den);
        if g.is_constant() {
            let num = self
                .num
                .mul(f, &other.den)
                .add(f, &other.num.mul(f, &self.den));
            let den = self.den.mul(f, &other.den);
            return Self::normalize(f, num, den);
        }
        let d1 = self.den.exact_div(f, &g).expect("g divides den");
        let d2 = other.den.exact_div(f, &g).expect("g divides den");
        let num = self.num.mul(f, &d2).add(f, &other.num.mul(f, &d1));
        // Only factors of g can cancel against the new numerator.
        let h = num.gcd(f, &g);
        let (num, g) = if h.is_constant() {
            (num, g)
        } else {
            (
                num.exact_div(f, &h).expect("h divides num"),
                g.exact_div(f, &h).expect("h divides g"),
            )
        };
        let den = d1.mul(f, &d2).mul(f, &g);
        Self::normalize(f, num, den)
    }

    pub fn sub<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        self.add(f, &other.neg(f))
    }

    pub fn mul<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::from_poly(f, UniPoly::zero());
        }
        let g1 = self.num.gcd(f, &other.den);
        let g2 = other.num.gcd(f, &self.den);
        let cancel = |p: &UniPoly<E>, g: &UniPoly<E>| {
            if g.is_constant() {
                p.clone()
            } else {
                p.exact_div(f, g).expect("gcd divides")
            }
        };
        let num = cancel(&self.num, &g1).mul(f, &cancel(&other.num, &g2));
        let den = cancel(&self.den, &g2).mul(f, &cancel(&other.den, &g1));
        Self::normalize(f, num, den)
    }

    pub fn inv<F: Field<Elem = E>>(&self, f: &F) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalize(f, self.den.clone(), self.num.clone()))
    }

    pub fn div<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Result<Self> {
        Ok(self.mul(f, &other.inv(f)?))
    }

    pub fn powi<F: Field<Elem = E>>(&self, f: &F, e: i32) -> Result<Self> {
        let base = if e < 0 { self.inv(f)? } else { self.clone() };
        let k = e.unsigned_abs();
        Ok(RationalFunction {
            num: base.num.pow(f, k),
            den: base.den.pow(f, k),
        })
    }
}
