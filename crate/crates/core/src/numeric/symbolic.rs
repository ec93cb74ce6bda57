//! Rational functions in a fixed set of named symbols, as a [`Field`].

use num_traits::One;

use crate::numeric::field::Field;
use crate::numeric::mpoly::MPoly;
use crate::Rational;

/// Quotient of multivariate polynomials, coprime with a monic denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymFrac {
    pub num: MPoly,
    pub den: MPoly,
}

impl SymFrac {
    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        let n = self.num.constant_value()?;
        let d = self.den.constant_value()?;
        Some(n / d)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolField {
    names: Vec<String>,
}

impl SymbolField {
    pub fn new(names: Vec<String>) -> Self {
        SymbolField { names }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn nvars(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn symbol(&self, i: usize) -> SymFrac {
        SymFrac {
            num: MPoly::var(self.nvars(), i),
            den: MPoly::one(self.nvars()),
        }
    }

    pub fn poly(&self, p: MPoly) -> SymFrac {
        SymFrac {
            num: p,
            den: MPoly::one(self.nvars()),
        }
    }

    pub fn reduce(&self, num: MPoly, den: MPoly) -> SymFrac {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return SymFrac {
                num,
                den: MPoly::one(self.nvars()),
            };
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides"),
                den.div_exact(&g).expect("gcd divides"),
            )
        };
        let lead = den.leading().expect("nonzero").1.clone();
        if lead.is_one() {
            SymFrac { num, den }
        } else {
            let inv = lead.recip();
            SymFrac {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }
}

impl Field for SymbolField {
    type Elem = SymFrac;

    fn zero(&self) -> SymFrac {
        self.poly(MPoly::zero(self.nvars()))
    }
    fn one(&self) -> SymFrac {
        self.poly(MPoly::one(self.nvars()))
    }
    fn is_zero(&self, a: &SymFrac) -> bool {
        a.num.is_zero()
    }
    fn add(&self, a: &SymFrac, b: &SymFrac) -> SymFrac {
        if a.num.is_zero() {
            return b.clone();
        }
        if b.num.is_zero() {
            return a.clone();
        }
        if a.den == b.den {
            return self.reduce(a.num.add(&b.num), a.den.clone());
        }
        self.reduce(a.num.mul(&b.den).add(&b.num.mul(&a.den)), a.den.mul(&b.den))
    }
    fn sub(&self, a: &SymFrac, b: &SymFrac) -> SymFrac {
        self.add(a, &self.neg(b))
    }
    fn mul(&self, a: &SymFrac, b: &SymFrac) -> SymFrac {
        if a.num.is_zero() || b.num.is_zero() {
            return self.zero();
        }
        self.reduce(a.num.mul(&b.num), a.den.mul(&b.den))
    }
    fn neg(&self, a: &SymFrac) -> SymFrac {
        SymFrac {
            num: a.num.neg(),
            den: a.den.clone(),
        }
    }
    fn inv(&self, a: &SymFrac) -> Option<SymFrac> {
        if a.num.is_zero() {
            return None;
        }
        Some(self.reduce(a.den.clone(), a.num.clone()))
    }
    fn from_rational(&self, q: &Rational) -> Option<SymFrac> {
        Some(self.poly(MPoly::constant(self.nvars(), q.clone())))
    }
    fn render(&self, a: &SymFrac) -> String {
        let n = a.num.render(&self.names);
        if a.den.constant_value().is_some_and(|d| d.is_one()) {
            return n;
        }
        format!("({n})/({})", a.den.render(&self.names))
    }
    fn symbol(&self, name: &str) -> Option<SymFrac> {
        self.index_of(name).map(|i| SymbolField::symbol(self, i))
    }
    fn is_one(&self, a: &SymFrac) -> bool {
        a.den.constant_value().is_some_and(|d| d.is_one())
            && a.num.constant_value().is_some_and(|n| n.is_one())
    }
}

impl Default for SymbolField {
    fn default() -> Self {
        SymbolField::new(Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::field::rational;

    #[test]
    fn fractions_cancel() {
        let f = SymbolField::new(vec!["a".into(), "b".into()]);
        let a = f.symbol(0);
        let b = f.symbol(1);
        // (a^2 - b^2)/(a - b) = a + b
        let num = f.sub(&f.mul(&a, &a), &f.mul(&b, &b));
        let q = f.div(&num, &f.sub(&a, &b)).unwrap();
        assert_eq!(q, f.add(&a, &b));
        // a/b + b/a - (a^2+b^2)/(ab) = 0
        let s = f.add(&f.div(&a, &b).unwrap(), &f.div(&b, &a).unwrap());
        let t = f
            .div(&f.add(&f.mul(&a, &a), &f.mul(&b, &b)), &f.mul(&a, &b))
            .unwrap();
        assert!(f.is_zero(&f.sub(&s, &t)));
    }

    #[test]
    fn constants_embed() {
        let f = SymbolField::new(vec!["a".into()]);
        let h = f.from_rational(&rational(1, 2)).unwrap();
        assert_eq!(f.mul(&h, &f.from_i64(2)), f.one());
        assert_eq!(f.render(&f.div(&f.one(), &f.symbol(0)).unwrap()), "(1)/(a)");
    }
}
