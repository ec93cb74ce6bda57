//! Sparse multivariate polynomials over ℚ.
//!
//! Only what the symbol field needs: ring arithmetic, exact division, and a
//! recursive primitive-PRS gcd. Terms are kept in lexicographic order with
//! variable 0 most significant.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::numeric::field::{Field, PrimeField};
use crate::numeric::poly::UniPoly;
use crate::Rational;

pub type Monomial = Vec<u32>;

const IMAGE_PRIME: u64 = 2_147_483_647;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = vec![0; nvars];
        m[i] = 1;
        Self::from_terms(nvars, [(m, Rational::one())])
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.len(), nvars, "monomial arity");
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
            || (self.terms.len() == 1 && self.terms.keys().all(|m| m.iter().all(|&e| e == 0)))
    }

    pub fn constant_value(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        if self.is_constant() {
            return self.terms.values().next().cloned();
        }
        None
    }

    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|m| m[v]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn has_var(&self, v: usize) -> bool {
        self.terms.keys().any(|m| m[v] > 0)
    }

    pub fn vars(&self) -> Vec<usize> {
        (0..self.nvars).filter(|&v| self.has_var(v)).collect()
    }

    pub fn neg(&self) -> Self {
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    fn mul_term(&self, mono: &Monomial, c: &Rational) -> Self {
        MPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, a)| (m.iter().zip(mono).map(|(x, y)| x + y).collect(), a * c))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m: Monomial = m1.iter().zip(m2).map(|(x, y)| x + y).collect();
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.nvars);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Quotient when `divisor` divides `self` exactly.
    pub fn div_exact(&self, divisor: &Self) -> Option<Self> {
        let (lm, lc) = divisor.leading()?;
        let mut rem = self.clone();
        let mut quot = Self::zero(self.nvars);
        while let Some((m, c)) = rem.leading() {
            if m.iter().zip(lm).any(|(a, b)| a < b) {
                return None;
            }
            let tm: Monomial = m.iter().zip(lm).map(|(a, b)| a - b).collect();
            let tc = c / lc;
            rem = rem.sub(&divisor.mul_term(&tm, &tc));
            quot.add_term(tm, tc);
        }
        Some(quot)
    }

    /// Coefficients with respect to `v`, indexed by the power of `v`.
    pub fn coeffs_in(&self, v: usize) -> Vec<MPoly> {
        let deg = self.degree_in(v) as usize;
        let mut out = vec![Self::zero(self.nvars); deg + 1];
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            let k = m2[v] as usize;
            m2[v] = 0;
            out[k].add_term(m2, c.clone());
        }
        out
    }

    fn leading_coeff_in(&self, v: usize) -> MPoly {
        self.coeffs_in(v)
            .pop()
            .unwrap_or_else(|| Self::zero(self.nvars))
    }

    fn shift_var(&self, v: usize, k: u32) -> Self {
        let mut mono = vec![0; self.nvars];
        mono[v] = k;
        self.mul_term(&mono, &Rational::one())
    }

    /// Pseudo-remainder of `self` by `b` viewed as polynomials in `v`.
    fn prem(&self, b: &Self, v: usize) -> Self {
        let db = b.degree_in(v);
        let lb = b.leading_coeff_in(v);
        let mut r = self.clone();
        while !r.is_zero() && r.has_var(v) && r.degree_in(v) >= db {
            let dr = r.degree_in(v);
            let lr = r.leading_coeff_in(v);
            r = r.mul(&lb).sub(&b.mul(&lr).shift_var(v, dr - db));
        }
        r
    }

    pub fn content_in(&self, v: usize) -> Self {
        self.coeffs_in(v)
            .into_iter()
            .filter(|c| !c.is_zero())
            .fold(Self::zero(self.nvars), |acc, c| acc.gcd(&c))
    }

    /// Leading coefficient (lexicographic) scaled to one.
    pub fn monic(&self) -> Self {
        match self.leading() {
            None => self.clone(),
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
        }
    }

    /// Monic gcd; `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.monic();
        }
        if other.is_zero() {
            return self.monic();
        }
        if self.is_constant() || other.is_constant() {
            return Self::one(self.nvars);
        }
        // Monomial gcd shortcut: a single term divides cleanly.
        if self.terms.len() == 1 || other.terms.len() == 1 {
            let mut common: Option<Monomial> = None;
            for m in self.terms.keys().chain(other.terms.keys()) {
                common = Some(match common {
                    None => m.clone(),
                    Some(c) => c.iter().zip(m).map(|(a, b)| *a.min(b)).collect(),
                });
            }
            let m = common.expect("nonempty");
            return Self::from_terms(self.nvars, [(m, Rational::one())]);
        }
        if self.coprime_by_images(other) {
            return Self::one(self.nvars);
        }
        let v = (0..self.nvars)
            .find(|&v| self.has_var(v) || other.has_var(v))
            .expect("non-constant");
        if !self.has_var(v) {
            return self.gcd(&other.content_in(v));
        }
        if !other.has_var(v) {
            return self.content_in(v).gcd(other);
        }
        let ca = self.content_in(v);
        let cb = other.content_in(v);
        let c = ca.gcd(&cb);
        let mut a = self.div_exact(&ca).expect("content divides");
        let mut b = other.div_exact(&cb).expect("content divides");
        if a.degree_in(v) < b.degree_in(v) {
            std::mem::swap(&mut a, &mut b);
        }
        loop {
            let r = a.prem(&b, v);
            if r.is_zero() {
                break;
            }
            if !r.has_var(v) {
                return c.monic();
            }
            let cr = r.content_in(v);
            a = b;
            b = r.div_exact(&cr).expect("content divides");
        }
        let cbv = b.content_in(v);
        let g = b.div_exact(&cbv).expect("content divides");
        c.mul(&g).monic()
    }

    /// Value at `point` modulo a prime; `None` if a coefficient denominator
    /// vanishes there.
    pub fn eval_mod(&self, f: &PrimeField, point: &[u64]) -> Option<u64> {
        let mut acc = 0u64;
        for (m, c) in &self.terms {
            let mut t = f.from_rational(c)?;
            for (w, &e) in m.iter().enumerate() {
                if e > 0 {
                    t = f.mul(&t, &f.pow(&point[w], e as u64));
                }
            }
            acc = f.add(&acc, &t);
        }
        Some(acc)
    }

    /// Image modulo a prime as a univariate polynomial in `v`, the other
    /// variables set to `point`. `None` if a denominator is not invertible.
    fn image_in(&self, f: &PrimeField, v: usize, point: &[u64]) -> Option<UniPoly<u64>> {
        let mut coeffs = vec![0u64; self.degree_in(v) as usize + 1];
        for (m, c) in &self.terms {
            let mut t = f.from_rational(c)?;
            for (w, &e) in m.iter().enumerate() {
                if w != v && e > 0 {
                    t = f.mul(&t, &f.pow(&point[w], e as u64));
                }
            }
            let k = m[v] as usize;
            coeffs[k] = f.add(&coeffs[k], &t);
        }
        Some(UniPoly::from_coeffs(f, coeffs))
    }

    /// Certifies a constant gcd: for every variable, the gcd of univariate
    /// images is constant while both leading coefficients survive. A `false`
    /// answer proves nothing.
    fn coprime_by_images(&self, other: &Self) -> bool {
        let f = PrimeField::new(IMAGE_PRIME).expect("prime");
        let mut state: u64 = 0x2545_F491_4F6C_DD1D;
        let point: Vec<u64> = (0..self.nvars)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state % (IMAGE_PRIME - 2) + 2
            })
            .collect();
        for v in 0..self.nvars {
            let da = self.degree_in(v);
            let db = other.degree_in(v);
            if da == 0 || db == 0 {
                continue;
            }
            let (Some(a), Some(b)) = (self.image_in(&f, v, &point), other.image_in(&f, v, &point))
            else {
                return false;
            };
            if a.degree() != Some(da as usize) || b.degree() != Some(db as usize) {
                return false;
            }
            if a.gcd(&f, &b).degree_or_zero() > 0 {
                return false;
            }
        }
        true
    }

    /// Divide out every variable's common power and scale to a primitive
    /// integer polynomial with positive leading coefficient.
    pub fn primitive_relation(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut min = vec![u32::MAX; self.nvars];
        for m in self.terms.keys() {
            for (a, b) in min.iter_mut().zip(m) {
                *a = (*a).min(*b);
            }
        }
        let mut lcm_den = num_bigint::BigInt::one();
        let mut gcd_num = num_bigint::BigInt::zero();
        for c in self.terms.values() {
            lcm_den = lcm_den.lcm(c.denom());
            gcd_num = gcd_num.gcd(c.numer());
        }
        let mut scale = Rational::new(lcm_den, gcd_num);
        if self.leading().is_some_and(|(_, c)| c.is_negative()) {
            scale = -scale;
        }
        MPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.iter().zip(&min).map(|(a, b)| a - b).collect(), c * &scale))
                .collect(),
        }
    }

    /// Evaluate variables that have a value in `values`; others stay symbolic.
    pub fn eval(&self, values: &[Option<Rational>]) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut mono = m.clone();
            for (v, e) in m.iter().enumerate() {
                if let Some(x) = &values[v] {
                    coeff *= num_traits::pow(x.clone(), *e as usize);
                    mono[v] = 0;
                }
            }
            out.add_term(mono, coeff);
        }
        out
    }

    pub fn render(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let mono: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| {
                    if e == 1 {
                        names[v].clone()
                    } else {
                        format!("{}^{e}", names[v])
                    }
                })
                .collect();
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if mono.is_empty() {
                out.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    out.push_str(&mag.to_string());
                    out.push('*');
                }
                out.push_str(&mono.join("*"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::field::rational;

    fn v(n: usize, i: usize) -> MPoly {
        MPoly::var(n, i)
    }

    fn c(n: usize, x: i64) -> MPoly {
        MPoly::constant(n, rational(x, 1))
    }

    #[test]
    fn gcd_finds_common_factor() {
        let n = 3;
        let (x, y, z) = (v(n, 0), v(n, 1), v(n, 2));
        let common = x.mul(&y).add(&z.mul(&c(n, 2))); // xy + 2z
        let a = common.mul(&x.add(&c(n, 1)));
        let b = common.mul(&y.sub(&z)).mul(&c(n, 3));
        assert_eq!(a.gcd(&b), common.monic());
    }

    #[test]
    fn coprime_gcd_is_one() {
        let n = 2;
        let (x, y) = (v(n, 0), v(n, 1));
        let a = x.mul(&x).add(&y);
        let b = x.add(&y.mul(&y));
        assert_eq!(a.gcd(&b), MPoly::one(n));
    }

    #[test]
    fn exact_division_round_trip() {
        let n = 2;
        let (x, y) = (v(n, 0), v(n, 1));
        let a = x.add(&y).pow(3);
        let b = x.add(&y);
        assert_eq!(a.div_exact(&b).unwrap(), b.mul(&b));
        assert!(x.div_exact(&y).is_none());
    }

    #[test]
    fn primitive_relation_strips_monomials_and_content() {
        let n = 3;
        let (x, y, z) = (v(n, 0), v(n, 1), v(n, 2));
        // -(6/5) x^2 y + (3/5) x z  ->  2 x y - z
        let p = x
            .mul(&x)
            .mul(&y)
            .scale(&rational(-6, 5))
            .add(&x.mul(&z).scale(&rational(3, 5)));
        assert_eq!(
            p.primitive_relation(),
            x.mul(&y).scale(&rational(2, 1)).sub(&z)
        );
    }
}
