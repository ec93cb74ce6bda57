//! Truncated Laurent series in a small parameter ε.
//!
//! A series stores the coefficients of ε^start, ε^(start+1), … together with a
//! truncation order: every term at or beyond it is unknown. Series built from
//! exact data (constants, `v + ε`) carry no truncation until an inversion
//! forces one, so precision is only ever lost where information really is.

use crate::error::{Error, Result};
use crate::numeric::field::Field;

/// Terms kept when inverting an exact series.
pub const DEFAULT_PRECISION: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries<E> {
    /// Order of `coeffs[0]`; when `coeffs` is empty it is the order up to
    /// which the series is known to vanish.
    start: i64,
    coeffs: Vec<E>,
    /// `None` means exact: all terms past the stored ones are zero.
    trunc: Option<i64>,
}

/// Result of [`LaurentSeries::order`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaurentOrder {
    Finite(i64),
    /// Every known coefficient vanishes.
    ZeroToTruncation,
}

impl<E: Clone + PartialEq> LaurentSeries<E> {
    /// Build and normalise: leading zeros are stripped and, for truncated
    /// series, stored terms at or beyond the truncation are dropped.
    pub fn new<F: Field<Elem = E>>(f: &F, start: i64, coeffs: Vec<E>, trunc: Option<i64>) -> Self {
        let mut coeffs = coeffs;
        if let Some(t) = trunc {
            let keep = (t - start).max(0) as usize;
            coeffs.truncate(keep);
        }
        let lead = coeffs.iter().position(|c| !f.is_zero(c));
        match lead {
            None => LaurentSeries {
                start: trunc.unwrap_or(start),
                coeffs: Vec::new(),
                trunc,
            },
            Some(i) => {
                coeffs.drain(..i);
                if trunc.is_none() {
                    while coeffs.last().is_some_and(|c| f.is_zero(c)) {
                        coeffs.pop();
                    }
                }
                LaurentSeries {
                    start: start + i as i64,
                    coeffs,
                    trunc,
                }
            }
        }
    }

    pub fn constant<F: Field<Elem = E>>(f: &F, c: E) -> Self {
        Self::new(f, 0, vec![c], None)
    }

    /// ε itself.
    pub fn epsilon<F: Field<Elem = E>>(f: &F) -> Self {
        Self::new(f, 1, vec![f.one()], None)
    }

    /// `value + scale·ε`, the perturbed entry of a singularity trace.
    pub fn perturbed<F: Field<Elem = E>>(f: &F, value: E, scale: E) -> Self {
        Self::new(f, 0, vec![value, scale], None)
    }

    /// A series known only to vanish below `order`.
    pub fn zero_to<F: Field<Elem = E>>(f: &F, order: i64) -> Self {
        Self::new(f, order, Vec::new(), Some(order))
    }

    pub fn is_exact(&self) -> bool {
        self.trunc.is_none()
    }

    pub fn truncation(&self) -> Option<i64> {
        self.trunc
    }

    pub fn is_zero_to_truncation(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn order(&self) -> LaurentOrder {
        if self.coeffs.is_empty() {
            LaurentOrder::ZeroToTruncation
        } else {
            LaurentOrder::Finite(self.start)
        }
    }

    /// Order of the leading term, or a precision error when none is known.
    pub fn lead_order(&self) -> Result<i64> {
        match self.order() {
            LaurentOrder::Finite(o) => Ok(o),
            LaurentOrder::ZeroToTruncation => Err(Error::PrecisionExhausted),
        }
    }

    /// Coefficient of ε^k, `None` when that term is beyond the truncation.
    pub fn coeff<F: Field<Elem = E>>(&self, f: &F, k: i64) -> Option<E> {
        if let Some(t) = self.trunc {
            if k >= t {
                return None;
            }
        }
        if k < self.start {
            return Some(f.zero());
        }
        Some(
            self.coeffs
                .get((k - self.start) as usize)
                .cloned()
                .unwrap_or_else(|| f.zero()),
        )
    }

    pub fn leading_coeff(&self) -> Option<&E> {
        self.coeffs.first()
    }

    /// Number of known terms counted from the leading one.
    pub fn relative_precision(&self) -> Option<usize> {
        self.trunc.map(|t| (t - self.start).max(0) as usize)
    }

    fn min_trunc(a: Option<i64>, b: Option<i64>) -> Option<i64> {
        match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        }
    }

    pub fn neg<F: Field<Elem = E>>(&self, f: &F) -> Self {
        LaurentSeries {
            start: self.start,
            coeffs: self.coeffs.iter().map(|c| f.neg(c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn add<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Result<Self> {
        let trunc = Self::min_trunc(self.trunc, other.trunc);
        let start = self.start.min(other.start);
        if let Some(t) = trunc {
            if start >= t {
                // Known terms of one operand fall entirely past the other's window.
                if !self.is_zero_to_truncation() || !other.is_zero_to_truncation() {
                    return Err(Error::PrecisionExhausted);
                }
                return Ok(Self::zero_to(f, t));
            }
        }
        let end = match trunc {
            Some(t) => t,
            None => {
                (self.start + self.coeffs.len() as i64).max(other.start + other.coeffs.len() as i64)
            }
        };
        let coeffs = (start..end)
            .map(|k| {
                let a = self.stored(f, k);
                let b = other.stored(f, k);
                f.add(&a, &b)
            })
            .collect();
        Ok(Self::new(f, start, coeffs, trunc))
    }

    fn stored<F: Field<Elem = E>>(&self, f: &F, k: i64) -> E {
        if k < self.start {
            return f.zero();
        }
        self.coeffs
            .get((k - self.start) as usize)
            .cloned()
            .unwrap_or_else(|| f.zero())
    }

    pub fn sub<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Result<Self> {
        self.add(f, &other.neg(f))
    }

    pub fn mul<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Result<Self> {
        let start = self.start + other.start;
        let ta = self.trunc.map(|t| t + other.start);
        let tb = other.trunc.map(|t| t + self.start);
        let trunc = Self::min_trunc(ta, tb);
        if self.is_zero_to_truncation() || other.is_zero_to_truncation() {
            return match trunc {
                Some(t) => Ok(Self::zero_to(f, t)),
                None => Ok(Self::new(f, start, Vec::new(), None)),
            };
        }
        let len = match trunc {
            Some(t) => {
                if t <= start {
                    return Err(Error::PrecisionExhausted);
                }
                (t - start) as usize
            }
            None => self.coeffs.len() + other.coeffs.len() - 1,
        };
        let mut out = vec![f.zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if f.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                let t = f.mul(a, b);
                out[i + j] = f.add(&out[i + j], &t);
            }
        }
        Ok(Self::new(f, start, out, trunc))
    }

    pub fn scale<F: Field<Elem = E>>(&self, f: &F, c: &E) -> Self {
        Self::new(
            f,
            self.start,
            self.coeffs.iter().map(|a| f.mul(a, c)).collect(),
            self.trunc,
        )
    }

    /// Multiplicative inverse. Exact inputs are expanded to `precision` terms.
    pub fn invert<F: Field<Elem = E>>(&self, f: &F, precision: usize) -> Result<Self> {
        if self.is_zero_to_truncation() {
            return Err(Error::SingularSeries(self.start));
        }
        let lead = self.start;
        // An exact monomial inverts exactly.
        if self.trunc.is_none() && self.coeffs.len() == 1 {
            let c = f.inv(&self.coeffs[0]).ok_or(Error::DivisionByZero)?;
            return Ok(Self::new(f, -lead, vec![c], None));
        }
        let terms = self.relative_precision().unwrap_or(precision);
        let c0_inv = f.inv(&self.coeffs[0]).ok_or(Error::DivisionByZero)?;
        let mut out: Vec<E> = Vec::with_capacity(terms);
        for i in 0..terms {
            if i == 0 {
                out.push(c0_inv.clone());
                continue;
            }
            let mut acc = f.zero();
            for j in 1..=i.min(self.coeffs.len() - 1) {
                acc = f.add(&acc, &f.mul(&self.coeffs[j], &out[i - j]));
            }
            out.push(f.neg(&f.mul(&acc, &c0_inv)));
        }
        Ok(Self::new(f, -lead, out, Some(-lead + terms as i64)))
    }

    pub fn div<F: Field<Elem = E>>(&self, f: &F, other: &Self, precision: usize) -> Result<Self> {
        self.mul(f, &other.invert(f, precision)?)
    }

    pub fn powi<F: Field<Elem = E>>(&self, f: &F, e: i32, precision: usize) -> Result<Self> {
        let base = if e < 0 {
            self.invert(f, precision)?
        } else {
            self.clone()
        };
        let mut k = e.unsigned_abs();
        let mut acc = match base.relative_precision() {
            Some(p) => Self::new(f, 0, vec![f.one()], Some(p as i64)),
            None => Self::constant(f, f.one()),
        };
        if k == 0 {
            return Ok(acc);
        }
        let mut sq = base;
        let mut first = true;
        while k > 0 {
            if k & 1 == 1 {
                acc = if first { sq.clone() } else { acc.mul(f, &sq)? };
                first = false;
            }
            k >>= 1;
            if k > 0 {
                sq = sq.mul(f, &sq)?;
            }
        }
        Ok(acc)
    }

    pub fn render<F: Field<Elem = E>>(&self, f: &F) -> String {
        let mut parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !f.is_zero(c))
            .map(|(i, c)| {
                let k = self.start + i as i64;
                match k {
                    0 => f.render(c),
                    1 => format!("({})ε", f.render(c)),
                    _ => format!("({})ε^{k}", f.render(c)),
                }
            })
            .collect();
        if let Some(t) = self.trunc {
            parts.push(format!("O(ε^{t})"));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::field::{rational, Rationals};
    use crate::Rational;
    use proptest::prelude::*;

    fn s(start: i64, coeffs: &[i64], trunc: Option<i64>) -> LaurentSeries<Rational> {
        LaurentSeries::new(
            &Rationals,
            start,
            coeffs.iter().map(|&c| rational(c, 1)).collect(),
            trunc,
        )
    }

    #[test]
    fn invert_geometric() {
        let f = Rationals;
        let a = s(1, &[1, 1], None); // ε + ε²
        let inv = a.invert(&f, 6).unwrap();
        assert_eq!(inv.order(), LaurentOrder::Finite(-1));
        let expect = [1, -1, 1, -1, 1, -1];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(inv.coeff(&f, i as i64 - 1), Some(rational(*e, 1)));
        }
        assert_eq!(inv.truncation(), Some(5));
    }

    #[test]
    fn square_of_pole() {
        let f = Rationals;
        let a = s(-1, &[1, 1], None); // ε⁻¹ + 1
        let sq = a.powi(&f, 2, 16).unwrap();
        assert_eq!(sq, s(-2, &[1, 2, 1], None));
    }

    #[test]
    fn product_of_direct_terms() {
        let f = Rationals;
        let a = s(-3, &[2], None);
        let b = s(3, &[3, 1], None);
        assert_eq!(a.mul(&f, &b).unwrap(), s(0, &[6, 2], None));
    }

    #[test]
    fn orders() {
        assert_eq!(s(-2, &[1, 0, 5], None).order(), LaurentOrder::Finite(-2));
        assert_eq!(s(0, &[7, 1], None).order(), LaurentOrder::Finite(0));
        let z = s(0, &[0, 0, 0, 0, 0, 0], Some(6));
        assert_eq!(z.order(), LaurentOrder::ZeroToTruncation);
        assert_eq!(z.lead_order(), Err(Error::PrecisionExhausted));
    }

    #[test]
    fn inverting_zero_is_singular() {
        let z = s(0, &[0, 0], Some(2));
        assert!(matches!(
            z.invert(&Rationals, 8),
            Err(Error::SingularSeries(_))
        ));
    }

    #[test]
    fn cancellation_consumes_precision() {
        let f = Rationals;
        let a = s(0, &[1, 1], Some(2));
        let b = s(0, &[-1, -1], Some(2));
        let sum = a.add(&f, &b).unwrap();
        assert_eq!(sum.order(), LaurentOrder::ZeroToTruncation);
        // Adding a known term that lies past the other's window has no valid output.
        let c = s(5, &[1], Some(7));
        assert_eq!(sum.add(&f, &c), Err(Error::PrecisionExhausted));
    }

    fn series() -> impl Strategy<Value = LaurentSeries<Rational>> {
        (
            -4i64..4,
            prop::collection::vec(-5i64..=5, 1..6),
            prop::option::of(4i64..12),
        )
            .prop_map(|(start, c, t)| {
                let mut c = c;
                if c[0] == 0 {
                    c[0] = 1;
                }
                let trunc = t.map(|t| start + t);
                s(start, &c, trunc)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn order_is_additive_under_mul(a in series(), b in series()) {
            let f = Rationals;
            let p = a.mul(&f, &b).unwrap();
            prop_assert_eq!(p.lead_order().unwrap(), a.lead_order().unwrap() + b.lead_order().unwrap());
        }
    }

    proptest! {
        #[test]
        fn double_inversion_agrees_on_common_window(a in series()) {
            let f = Rationals;
            let back = a.invert(&f, 10).unwrap().invert(&f, 10).unwrap();
            let diff = back.sub(&f, &a).unwrap();
            prop_assert_eq!(diff.order(), LaurentOrder::ZeroToTruncation);
        }
    }
}
