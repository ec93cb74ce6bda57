//! Exact coefficient fields.
//!
//! A [`Field`] value describes the field (it may carry a modulus or a symbol
//! table); elements are plain data and all arithmetic goes through the field
//! value, so prime fields with a runtime modulus and rational-function fields
//! share one polynomial implementation.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::Rational;

pub trait Field: Clone + Debug {
    type Elem: Clone + PartialEq + Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse, `None` for zero.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    /// Image of a rational number, `None` when its denominator is not invertible.
    fn from_rational(&self, q: &Rational) -> Option<Self::Elem>;
    fn render(&self, a: &Self::Elem) -> String;

    /// Named symbol of a symbol field; numeric fields have none.
    fn symbol(&self, _name: &str) -> Option<Self::Elem> {
        None
    }

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        let bi = self.inv(b).ok_or(Error::DivisionByZero)?;
        Ok(self.mul(a, &bi))
    }

    fn from_i64(&self, v: i64) -> Self::Elem {
        self.from_rational(&Rational::from_integer(BigInt::from(v)))
            .expect("integers embed in every field of characteristic > 2^20")
    }

    fn pow(&self, a: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }
}

/// The rational numbers with arbitrary-precision numerators and denominators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = Rational;

    fn zero(&self) -> Rational {
        Rational::zero()
    }
    fn one(&self) -> Rational {
        Rational::one()
    }
    fn is_zero(&self, a: &Rational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &Rational, b: &Rational) -> Rational {
        a + b
    }
    fn sub(&self, a: &Rational, b: &Rational) -> Rational {
        a - b
    }
    fn mul(&self, a: &Rational, b: &Rational) -> Rational {
        a * b
    }
    fn neg(&self, a: &Rational) -> Rational {
        -a
    }
    fn inv(&self, a: &Rational) -> Option<Rational> {
        if a.is_zero() {
            None
        } else {
            Some(a.recip())
        }
    }
    fn from_rational(&self, q: &Rational) -> Option<Rational> {
        Some(q.clone())
    }
    fn render(&self, a: &Rational) -> String {
        a.to_string()
    }
}

/// Smallest modulus accepted for prime fields.
pub const MIN_PRIME: u64 = 1 << 20;

/// Integers modulo a prime `p` with `2^20 < p < 2^31`.
///
/// The upper bound keeps products of two residues inside `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p <= MIN_PRIME {
            return Err(Error::InvalidInput(format!(
                "prime field modulus {p} must exceed 2^20"
            )));
        }
        if p >= 1 << 31 {
            return Err(Error::InvalidInput(format!(
                "prime field modulus {p} must be below 2^31"
            )));
        }
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{p} is not prime")));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    fn reduce_bigint(&self, v: &BigInt) -> u64 {
        let r = v.mod_floor(&BigInt::from(self.p));
        r.to_u64().expect("residue fits in u64")
    }
}

impl Field for PrimeField {
    type Elem = u64;

    #[inline]
    fn zero(&self) -> u64 {
        0
    }
    #[inline]
    fn one(&self) -> u64 {
        1
    }
    #[inline]
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    #[inline]
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    #[inline]
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
    #[inline]
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        (a * b) % self.p
    }
    #[inline]
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    fn inv(&self, a: &u64) -> Option<u64> {
        if *a == 0 {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }
    fn from_rational(&self, q: &Rational) -> Option<u64> {
        let num = self.reduce_bigint(q.numer());
        let den = self.reduce_bigint(q.denom());
        self.inv(&den).map(|d| self.mul(&num, &d))
    }
    fn render(&self, a: &u64) -> String {
        format!("{a} (mod {})", self.p)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Parse `p/q`, `p`, or a decimal-free signed integer into a rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rational::new(n, d))
    } else {
        let n: BigInt = t.parse().ok()?;
        Some(Rational::from_integer(n))
    }
}

pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_to_f64(q: &Rational) -> f64 {
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        return n / d;
    }
    // Scale down very large numerators and denominators together.
    let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000) as usize;
    let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    if d == 0.0 {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        n / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_rejects_small_and_composite_moduli() {
        assert!(PrimeField::new(101).is_err());
        assert!(PrimeField::new((1 << 20) + 1).is_err());
        assert!(PrimeField::new(998_244_353).is_ok());
        assert!(PrimeField::new(998_244_351).is_err());
    }

    #[test]
    fn miller_rabin_small_cases() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007 * 3));
    }

    #[test]
    fn rationals_embed_in_prime_field() {
        let f = PrimeField::new(1_000_000_007).unwrap();
        let half = f.from_rational(&rational(1, 2)).unwrap();
        assert_eq!(f.mul(&half, &2), 1);
        let neg = f.from_rational(&rational(-3, 1)).unwrap();
        assert_eq!(f.add(&neg, &3), 0);
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("-3/6"), Some(rational(-1, 2)));
        assert_eq!(parse_rational(" 7 "), Some(rational(7, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn prime_field_ring_axioms(a in 0u64..998_244_353, b in 0u64..998_244_353, c in 0u64..998_244_353) {
            let f = PrimeField::new(998_244_353).unwrap();
            prop_assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
            prop_assert_eq!(f.add(&f.add(&a, &b), &c), f.add(&a, &f.add(&b, &c)));
            prop_assert_eq!(f.mul(&a, &f.add(&b, &c)), f.add(&f.mul(&a, &b), &f.mul(&a, &c)));
            prop_assert_eq!(f.add(&a, &f.neg(&a)), 0);
            if a != 0 {
                prop_assert_eq!(f.mul(&a, &f.inv(&a).unwrap()), 1);
            }
        }
    }
}
