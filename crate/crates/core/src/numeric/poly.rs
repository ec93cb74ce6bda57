//! Dense univariate polynomials over an exact [`Field`].

use crate::error::{Error, Result};
use crate::numeric::field::Field;

/// Coefficients are stored lowest degree first with no trailing zeros, so the
/// zero polynomial is the empty vector.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly<E> {
    coeffs: Vec<E>,
}

impl<E: Clone + PartialEq> UniPoly<E> {
    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn from_coeffs<F: Field<Elem = E>>(f: &F, mut coeffs: Vec<E>) -> Self {
        while coeffs.last().is_some_and(|c| f.is_zero(c)) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn constant<F: Field<Elem = E>>(f: &F, c: E) -> Self {
        Self::from_coeffs(f, vec![c])
    }

    pub fn one<F: Field<Elem = E>>(f: &F) -> Self {
        Self::constant(f, f.one())
    }

    /// The indeterminate itself.
    pub fn x<F: Field<Elem = E>>(f: &F) -> Self {
        UniPoly {
            coeffs: vec![f.zero(), f.one()],
        }
    }

    pub fn monomial<F: Field<Elem = E>>(f: &F, c: E, degree: usize) -> Self {
        if f.is_zero(&c) {
            return Self::zero();
        }
        let mut coeffs = vec![f.zero(); degree + 1];
        coeffs[degree] = c;
        UniPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial counted as 0.
    pub fn degree_or_zero(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn leading(&self) -> Option<&E> {
        self.coeffs.last()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = f.zero();
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).unwrap_or(&zero);
                let b = other.coeffs.get(i).unwrap_or(&zero);
                f.add(a, b)
            })
            .collect();
        Self::from_coeffs(f, coeffs)
    }

    pub fn sub<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = f.zero();
        let coeffs = (0..n)
            .map(|i| {
                let a = self.coeffs.get(i).unwrap_or(&zero);
                let b = other.coeffs.get(i).unwrap_or(&zero);
                f.sub(a, b)
            })
            .collect();
        Self::from_coeffs(f, coeffs)
    }

    pub fn neg<F: Field<Elem = E>>(&self, f: &F) -> Self {
        UniPoly {
            coeffs: self.coeffs.iter().map(|c| f.neg(c)).collect(),
        }
    }

    pub fn scale<F: Field<Elem = E>>(&self, f: &F, c: &E) -> Self {
        if f.is_zero(c) {
            return Self::zero();
        }
        UniPoly {
            coeffs: self.coeffs.iter().map(|a| f.mul(a, c)).collect(),
        }
    }

    pub fn mul<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![f.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if f.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                let t = f.mul(a, b);
                out[i + j] = f.add(&out[i + j], &t);
            }
        }
        Self::from_coeffs(f, out)
    }

    pub fn pow<F: Field<Elem = E>>(&self, f: &F, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(f);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(f, &base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(f, &base);
            }
        }
        acc
    }

    /// Euclidean division `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn div_rem<F: Field<Elem = E>>(&self, f: &F, divisor: &Self) -> Result<(Self, Self)> {
        let dd = divisor.degree().ok_or(Error::DivisionByZero)?;
        let lead_inv = f
            .inv(divisor.leading().expect("nonzero divisor"))
            .ok_or(Error::DivisionByZero)?;
        let Some(sd) = self.degree() else {
            return Ok((Self::zero(), Self::zero()));
        };
        if sd < dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![f.zero(); sd - dd + 1];
        for k in (0..=sd - dd).rev() {
            let c = f.mul(&rem[k + dd], &lead_inv);
            if f.is_zero(&c) {
                continue;
            }
            for (j, d) in divisor.coeffs.iter().enumerate() {
                let t = f.mul(&c, d);
                rem[k + j] = f.sub(&rem[k + j], &t);
            }
            quot[k] = c;
        }
        rem.truncate(dd);
        Ok((Self::from_coeffs(f, quot), Self::from_coeffs(f, rem)))
    }

    /// Quotient of an exact division; errors if a remainder is left.
    pub fn exact_div<F: Field<Elem = E>>(&self, f: &F, divisor: &Self) -> Result<Self> {
        let (q, r) = self.div_rem(f, divisor)?;
        if !r.is_zero() {
            return Err(Error::InvalidInput(
                "polynomial division is not exact".into(),
            ));
        }
        Ok(q)
    }

    pub fn make_monic<F: Field<Elem = E>>(&self, f: &F) -> Self {
        match self.leading() {
            None => Self::zero(),
            Some(l) => {
                let inv = f.inv(l).expect("leading coefficient is nonzero");
                self.scale(f, &inv)
            }
        }
    }

    /// Monic greatest common divisor; `gcd(0, 0) = 0`.
    pub fn gcd<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Self {
        let mut a = self.make_monic(f);
        let mut b = other.make_monic(f);
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let (_, r) = a.div_rem(f, &b).expect("b is nonzero");
            a = b;
            b = r.make_monic(f);
        }
        a
    }

    pub fn eval<F: Field<Elem = E>>(&self, f: &F, x: &E) -> E {
        let mut acc = f.zero();
        for c in self.coeffs.iter().rev() {
            acc = f.add(&f.mul(&acc, x), c);
        }
        acc
    }

    pub fn derivative<F: Field<Elem = E>>(&self, f: &F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| f.mul(c, &f.from_i64(i as i64)))
            .collect();
        Self::from_coeffs(f, coeffs)
    }

    pub fn map<F: Field, G: Field<Elem = E>>(
        g: &G,
        source: &UniPoly<F::Elem>,
        map: impl FnMut(&F::Elem) -> E,
    ) -> Self {
        Self::from_coeffs(g, source.coeffs.iter().map(map).collect())
    }

    pub fn render<F: Field<Elem = E>>(&self, f: &F, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !f.is_zero(c))
            .map(|(i, c)| match i {
                0 => f.render(c),
                1 => format!("({})*{var}", f.render(c)),
                _ => format!("({})*{var}^{i}", f.render(c)),
            })
            .collect();
        terms.join(" + ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::field::{rational, PrimeField, Rationals};
    use crate::Rational;

    fn q(coeffs: &[i64]) -> UniPoly<Rational> {
        UniPoly::from_coeffs(&Rationals, coeffs.iter().map(|&c| rational(c, 1)).collect())
    }

    #[test]
    fn degree_tracks_last_nonzero() {
        assert_eq!(q(&[1, 2, 0, 0]).degree(), Some(1));
        assert_eq!(q(&[0, 0]).degree(), None);
        assert!(q(&[]).is_zero());
    }

    #[test]
    fn division_and_gcd() {
        let f = Rationals;
        // (w^2 - 1) = (w - 1)(w + 1)
        let a = q(&[-1, 0, 1]);
        let b = q(&[-1, 1]);
        let (qq, r) = a.div_rem(&f, &b).unwrap();
        assert_eq!(qq, q(&[1, 1]));
        assert!(r.is_zero());
        let g = a.gcd(&f, &q(&[-2, -1, 1]));
        // w^2 - w - 2 = (w - 2)(w + 1)
        assert_eq!(g, q(&[1, 1]));
        assert_eq!(q(&[3]).gcd(&f, &q(&[0, 5])), q(&[1]));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert_eq!(
            q(&[1]).div_rem(&Rationals, &q(&[])),
            Err(Error::DivisionByZero)
        );
    }

    #[test]
    fn modular_gcd_matches_rational() {
        let fp = PrimeField::new(1_000_000_007).unwrap();
        let lift = |p: &UniPoly<Rational>| {
            UniPoly::<u64>::map::<Rationals, _>(&fp, p, |c| fp.from_rational(c).unwrap())
        };
        let a = q(&[2, -3, 1]).mul(&Rationals, &q(&[5, 0, 1]));
        let b = q(&[2, -3, 1]).mul(&Rationals, &q(&[-7, 1]));
        let g = a.gcd(&Rationals, &b);
        assert_eq!(lift(&g), lift(&a).gcd(&fp, &lift(&b)));
    }

    #[test]
    fn derivative_and_eval() {
        let f = Rationals;
        let p = q(&[1, 0, 3]); // 3w^2 + 1
        assert_eq!(p.derivative(&f), q(&[0, 6]));
        assert_eq!(p.eval(&f, &rational(2, 1)), rational(13, 1));
    }
}
