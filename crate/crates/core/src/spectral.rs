//! Characteristic polynomials of coefficient recurrences and the
//! classification of their largest roots.
//!
//! Everything that can be decided exactly (palindromes, quadratic factors,
//! real-root counts) is decided over the integers or rationals; floating point
//! is only used for root moduli.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::dsl::{Recurrence, RecurrenceKind};
use crate::error::{Error, Result};
use crate::numeric::{rat_to_f64, Rationals, UniPoly};
use crate::Rational;

/// Residual tolerance for computed roots.
pub const ROOT_TOL: f64 = 1e-12;

/// Distance from the unit circle under which a root counts as on it.
pub const UNIT_TOL: f64 = 1e-9;

const MAX_ITERATIONS: usize = 2000;

/// Integer polynomial, lowest degree first. Content is kept.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Result<Self> {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidInput(
                "the zero polynomial has no roots".into(),
            ));
        }
        Ok(IntPoly { coeffs })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// `c·x^d`.
    pub fn monomial(c: i64, d: usize) -> Self {
        let mut v = vec![BigInt::zero(); d + 1];
        v[d] = BigInt::from(c);
        IntPoly::new(v).expect("nonzero monomial")
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> &BigInt {
        self.coeffs.last().expect("nonzero")
    }

    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
        }
        if self.leading().is_negative() {
            -g
        } else {
            g
        }
    }

    /// Divided by its content, with a positive leading coefficient.
    pub fn primitive(&self) -> Self {
        let g = self.content();
        IntPoly {
            coeffs: self.coeffs.iter().map(|c| c / &g).collect(),
        }
    }

    pub fn is_monic(&self) -> bool {
        self.leading().abs().is_one()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = BigInt::zero();
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&z) + other.coeffs.get(i).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, c: i64) -> Self {
        IntPoly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly { coeffs: out }
    }

    pub fn is_palindromic(&self) -> bool {
        let n = self.coeffs.len();
        (0..n).all(|i| self.coeffs[i] == self.coeffs[n - 1 - i])
    }

    pub fn is_antipalindromic(&self) -> bool {
        let n = self.coeffs.len();
        (0..n).all(|i| self.coeffs[i] == -&self.coeffs[n - 1 - i])
    }

    pub fn is_reciprocal(&self) -> bool {
        self.is_palindromic() || self.is_antipalindromic()
    }

    pub fn eval_int(&self, x: i64) -> BigInt {
        let x = BigInt::from(x);
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * &x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| {
                acc * z + c.to_f64().unwrap_or(f64::NAN)
            })
    }

    pub fn to_rational(&self) -> UniPoly<Rational> {
        UniPoly::from_coeffs(
            &Rationals,
            self.coeffs
                .iter()
                .map(|c| Rational::from_integer(c.clone()))
                .collect(),
        )
    }

    /// Whether `other` divides `self` over the integers.
    pub fn divisible_by(&self, other: &Self) -> bool {
        match self.to_rational().div_rem(&Rationals, &other.to_rational()) {
            Ok((q, r)) => r.is_zero() && q.coeffs().iter().all(|c| c.is_integer()),
            Err(_) => false,
        }
    }

    /// Number of distinct real roots, by a Sturm sequence.
    pub fn real_root_count(&self) -> usize {
        let f = &Rationals;
        let p = self.to_rational();
        if p.degree_or_zero() == 0 {
            return 0;
        }
        let mut seq = vec![p.clone(), p.derivative(f)];
        loop {
            let n = seq.len();
            let (_, r) = seq[n - 2].div_rem(f, &seq[n - 1]).expect("nonzero");
            if r.is_zero() {
                break;
            }
            seq.push(r.neg(f));
        }
        let changes = |signs: Vec<i32>| {
            let s: Vec<i32> = signs.into_iter().filter(|&s| s != 0).collect();
            s.windows(2).filter(|w| w[0] != w[1]).count()
        };
        let sign = |q: &Rational| {
            if q.is_positive() {
                1
            } else if q.is_negative() {
                -1
            } else {
                0
            }
        };
        let at_pos: Vec<i32> = seq
            .iter()
            .map(|q| sign(q.leading().expect("nonzero")))
            .collect();
        let at_neg: Vec<i32> = seq
            .iter()
            .map(|q| {
                let s = sign(q.leading().expect("nonzero"));
                if q.degree_or_zero() % 2 == 1 {
                    -s
                } else {
                    s
                }
            })
            .collect();
        changes(at_neg) - changes(at_pos)
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            let unit = a.is_one() && i > 0;
            if !unit {
                write!(f, "{a}")?;
            }
            match i {
                0 => {}
                1 => f.write_str(if unit { "x" } else { "*x" })?,
                _ => write!(f, "{}x^{i}", if unit { "" } else { "*" })?,
            }
        }
        Ok(())
    }
}

/// Additive `Σ c_i a[n+s_i] = 0` gives `Σ c_i x^(s_i - min s)`; a
/// multiplicative `Π a[n+s_i]^e_i = 1` is linearised by taking logarithms.
pub fn charpoly_of_recurrence(_kind: RecurrenceKind, terms: &[(i64, i64)]) -> Result<IntPoly> {
    if terms.len() < 2 {
        return Err(Error::InvalidInput(
            "a recurrence needs at least two terms".into(),
        ));
    }
    let mut shifts: Vec<i64> = terms.iter().map(|t| t.0).collect();
    shifts.sort();
    shifts.dedup();
    if shifts.len() != terms.len() {
        return Err(Error::InvalidInput(
            "recurrence shifts must be distinct".into(),
        ));
    }
    let lo = shifts[0];
    let hi = *shifts.last().expect("nonempty");
    let mut c = vec![BigInt::zero(); (hi - lo) as usize + 1];
    for &(s, k) in terms {
        c[(s - lo) as usize] = BigInt::from(k);
    }
    IntPoly::new(c).map_err(|_| Error::InvalidInput("all recurrence coefficients are zero".into()))
}

pub fn recurrence_charpoly(r: &Recurrence) -> Result<IntPoly> {
    charpoly_of_recurrence(r.kind, &r.terms)
}

/// `x^(l+1) - k x^l - k x + 1`.
pub fn p_ell(k: i64, l: usize) -> Result<IntPoly> {
    if k < 2 || l < 2 {
        return Err(Error::InvalidInput(format!(
            "need k >= 2 and l >= 2, got k={k}, l={l}"
        )));
    }
    let mut c = vec![0i64; l + 2];
    c[0] = 1;
    c[1] = -k;
    c[l] -= k;
    c[l + 1] = 1;
    IntPoly::from_i64(&c)
}

/// The full characteristic polynomial `(x^(l+1) + 1)·P_l` and its second factor.
pub fn reduction_charpoly(k: i64, l: usize) -> Result<(IntPoly, IntPoly)> {
    let p = p_ell(k, l)?;
    let mut c = vec![0i64; l + 2];
    c[0] = 1;
    c[l + 1] = 1;
    let full = IntPoly::from_i64(&c)?.mul(&p);
    Ok((full, p))
}

/// `x^l - k x^(l-1) - k`, the growth polynomial of the nonconfining case.
pub fn limit_polynomial(k: i64, l: usize) -> Result<IntPoly> {
    if k < 1 || l < 2 {
        return Err(Error::InvalidInput(format!(
            "need k >= 1 and l >= 2, got k={k}, l={l}"
        )));
    }
    let mut c = vec![0i64; l + 1];
    c[0] = -k;
    c[l - 1] = -k;
    c[l] = 1;
    IntPoly::from_i64(&c)
}

/// `(x - 1)(x^q - 1)`, from the lattice additive constraint with period q.
pub fn kdv_constraint_charpoly(q: usize) -> Result<IntPoly> {
    if q < 1 {
        return Err(Error::InvalidInput("q must be at least 1".into()));
    }
    charpoly_of_recurrence(
        RecurrenceKind::Additive,
        &[(q as i64 + 1, 1), (q as i64, -1), (1, -1), (0, 1)],
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl Root {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }
}

/// Square-free decomposition (Yun): monic factors with their multiplicities.
pub fn squarefree_factors(p: &IntPoly) -> Vec<(UniPoly<Rational>, usize)> {
    let f = &Rationals;
    let a = p.to_rational().make_monic(f);
    let mut out = Vec::new();
    if a.degree_or_zero() == 0 {
        return out;
    }
    let da = a.derivative(f);
    let b = a.gcd(f, &da);
    let mut c = a.exact_div(f, &b).expect("gcd divides");
    let mut d = da
        .exact_div(f, &b)
        .expect("gcd divides")
        .sub(f, &c.derivative(f));
    let mut i = 1;
    while c.degree_or_zero() > 0 {
        let g = c.gcd(f, &d);
        c = c.exact_div(f, &g).expect("gcd divides");
        d = d
            .exact_div(f, &g)
            .expect("gcd divides")
            .sub(f, &c.derivative(f));
        if g.degree_or_zero() > 0 {
            out.push((g, i));
        }
        i += 1;
    }
    out
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of a square-free monic polynomial by Aberth–Ehrlich iteration.
fn aberth(c: &[f64], tol: f64) -> Result<Vec<Complex64>> {
    let n = c.len() - 1;
    if n == 1 {
        return Ok(vec![Complex64::new(-c[0], 0.0)]);
    }
    let bound = 1.0 + c[..n].iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let radius = c[0].abs().powf(1.0 / n as f64).clamp(0.5, bound);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4,
            )
        })
        .collect();
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut worst = 0.0f64;
        for k in 0..n {
            let (p, dp) = horner(c, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if w.is_finite() {
                z[k] -= w;
                worst = worst.max(w.norm() / (1.0 + z[k].norm()));
            }
        }
        if worst < 1e-16 {
            converged = true;
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(c, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if step.is_finite() {
                *r -= step;
            }
        }
    }
    let residual_ok = z.iter().all(|r| {
        let scale: f64 = c
            .iter()
            .enumerate()
            .map(|(i, a)| a.abs() * r.norm().powi(i as i32))
            .sum();
        horner(c, *r).0.norm() <= tol * scale.max(1.0)
    });
    if !converged && !residual_ok {
        return Err(Error::NonConvergence {
            iterations: MAX_ITERATIONS,
            partial: z.iter().map(|r| (r.re, r.im)).collect(),
        });
    }
    Ok(z)
}

/// All complex roots with multiplicities, largest modulus first. Real roots
/// are identified exactly with a Sturm count and reported with `im = 0`.
pub fn find_roots(p: &IntPoly, tol: f64) -> Result<Vec<Root>> {
    if p.degree() == 0 {
        return Err(Error::InvalidInput(
            "constant polynomial has no roots".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let mut out = Vec::new();
    for (factor, mult) in squarefree_factors(p) {
        let c: Vec<f64> = factor.coeffs().iter().map(rat_to_f64).collect();
        let mut z = aberth(&c, tol)?;
        let real = rational_factor_real_count(&factor);
        z.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()));
        for (i, r) in z.into_iter().enumerate() {
            let im = if i < real { 0.0 } else { r.im };
            out.push(Root {
                re: r.re,
                im,
                multiplicity: mult,
            });
        }
    }
    out.sort_by(|a, b| {
        b.modulus()
            .total_cmp(&a.modulus())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    Ok(out)
}

fn rational_factor_real_count(f: &UniPoly<Rational>) -> usize {
    let lcm = f
        .coeffs()
        .iter()
        .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let ints = f
        .coeffs()
        .iter()
        .map(|c| (c * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    IntPoly::new(ints).map(|p| p.real_root_count()).unwrap_or(0)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Flags {
    pub all_roots_of_unity: bool,
    pub reciprocal: bool,
    pub quadratic_reciprocal: bool,
    pub salem: bool,
    pub pisot: bool,
    pub none_of_these: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RootClassification {
    pub polynomial: String,
    pub roots: Vec<Root>,
    pub largest_root_modulus: f64,
    pub dynamical_degree: f64,
    pub entropy: f64,
    pub flags: Flags,
    /// Trace `t` of the quadratic factor `x^2 - t x + 1` holding the largest root.
    pub quadratic_trace: Option<i64>,
    pub unit_tolerance: f64,
    pub notes: Vec<String>,
}

pub fn classify(p: &IntPoly) -> Result<RootClassification> {
    let prim = p.primitive();
    let roots = find_roots(&prim, ROOT_TOL)?;
    let largest = roots[0].modulus();
    let mut notes = Vec::new();
    let mut flags = Flags {
        reciprocal: prim.is_reciprocal(),
        ..Flags::default()
    };
    let monic = prim.is_monic();
    if !monic {
        notes.push("not monic after content removal; Salem and Pisot tests skipped".into());
    }
    let near_circle = roots
        .iter()
        .filter(|r| (r.modulus() - 1.0).abs() <= UNIT_TOL && (r.modulus() - 1.0).abs() > 1e-14)
        .count();
    if near_circle > 0 {
        notes.push(format!(
            "{near_circle} root(s) within {UNIT_TOL:e} of the unit circle treated as on it"
        ));
    }
    let top = roots[0];
    let top_real = top.is_real() && top.re > 1.0 + UNIT_TOL;
    let mut quadratic_trace = None;
    if top_real {
        let t0 = (top.re + 1.0 / top.re).round() as i64;
        for t in [t0, t0 - 1, t0 + 1] {
            let q = IntPoly::from_i64(&[1, -t, 1])?;
            let on_root =
                (top.re * top.re - t as f64 * top.re + 1.0).abs() < 1e-6 * top.re * top.re;
            if on_root && prim.divisible_by(&q) {
                quadratic_trace = Some(t);
                flags.quadratic_reciprocal = true;
                break;
            }
        }
    }
    if monic {
        let const_nonzero = !prim.coeffs()[0].is_zero();
        flags.all_roots_of_unity =
            const_nonzero && roots.iter().all(|r| r.modulus() <= 1.0 + UNIT_TOL);
        if top_real && top.multiplicity == 1 {
            let rest = &roots[1..];
            flags.pisot = rest.iter().all(|r| r.modulus() < 1.0 - UNIT_TOL);
            let inv = 1.0 / top.re;
            let is_inverse = |r: &Root| r.is_real() && (r.re - inv).abs() <= 1e-6;
            let has_inverse = rest.iter().any(is_inverse);
            let others: Vec<&Root> = rest.iter().filter(|r| !is_inverse(r)).collect();
            let on_circle = others.iter().all(|r| (r.modulus() - 1.0).abs() <= UNIT_TOL);
            flags.salem = prim.is_palindromic()
                && has_inverse
                && !others.is_empty()
                && on_circle
                && !flags.quadratic_reciprocal;
        }
    }
    flags.none_of_these =
        !(flags.all_roots_of_unity || flags.salem || flags.pisot || flags.quadratic_reciprocal);
    let dynamical_degree = largest.max(1.0);
    Ok(RootClassification {
        polynomial: p.to_string(),
        roots,
        largest_root_modulus: largest,
        dynamical_degree,
        entropy: dynamical_degree.ln(),
        flags,
        quadratic_trace,
        unit_tolerance: UNIT_TOL,
        notes,
    })
}

impl RootClassification {
    pub fn to_json(&self, p: &IntPoly) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("serialisable");
        v["coefficients"] = serde_json::Value::Array(
            p.coeffs()
                .iter()
                .map(|c| match c.to_i64() {
                    Some(i) => serde_json::json!(i),
                    None => serde_json::json!(c.to_string()),
                })
                .collect(),
        );
        v["roots"] = serde_json::Value::Array(
            self.roots
                .iter()
                .map(|r| serde_json::json!({"re": r.re, "im": r.im, "modulus": r.modulus(), "multiplicity": r.multiplicity}))
                .collect(),
        );
        v
    }
}

/// Largest real root of a polynomial with exactly one root outside the unit disc.
pub fn largest_root(p: &IntPoly) -> Result<f64> {
    let roots = find_roots(p, ROOT_TOL)?;
    Ok(roots[0].modulus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(c: &[i64]) -> IntPoly {
        IntPoly::from_i64(c).unwrap()
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(poly(&[1, -3, 0, 0, 1]).to_string(), "x^4 - 3*x + 1");
        assert_eq!(poly(&[-3, 0, -3, 1]).to_string(), "x^3 - 3*x^2 - 3");
        assert_eq!(
            poly(&[2, -4, 0, 0, 0, -4, 2]).to_string(),
            "2*x^6 - 4*x^5 - 4*x + 2"
        );
    }

    #[test]
    fn quadratic_roots() {
        let r = find_roots(&poly(&[1, -3, 1]), ROOT_TOL).unwrap();
        let s5 = 5f64.sqrt();
        assert!((r[0].re - (3.0 + s5) / 2.0).abs() < 1e-12);
        assert!((r[1].re - (3.0 - s5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn double_root_is_detected() {
        let r = find_roots(&poly(&[1, -2, 1]), ROOT_TOL).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sturm_counts_distinct_real_roots() {
        assert_eq!(poly(&[1, -3, 1]).real_root_count(), 2);
        assert_eq!(poly(&[1, 0, 1]).real_root_count(), 0);
        assert_eq!(poly(&[1, -2, 1]).real_root_count(), 1);
        assert_eq!(poly(&[-3, 0, -3, 1]).real_root_count(), 1);
    }

    #[test]
    fn charpoly_shifts_to_lowest_index() {
        let p = charpoly_of_recurrence(
            RecurrenceKind::Additive,
            &[(3, 1), (2, -2), (1, -2), (0, 1)],
        )
        .unwrap();
        assert_eq!(p, poly(&[1, -2, -2, 1]));
        let p = charpoly_of_recurrence(
            RecurrenceKind::Multiplicative,
            &[(3, 1), (-2, 1), (2, -1), (-1, -1)],
        )
        .unwrap();
        assert_eq!(p, poly(&[1, -1, 0, 0, -1, 1]));
        assert!(charpoly_of_recurrence(RecurrenceKind::Additive, &[(0, 1)]).is_err());
        assert!(charpoly_of_recurrence(RecurrenceKind::Additive, &[(0, 0), (1, 0)]).is_err());
        assert!(charpoly_of_recurrence(RecurrenceKind::Additive, &[(0, 1), (0, 2)]).is_err());
    }

    #[test]
    fn p2_factors() {
        for k in 2..=12 {
            let lhs = p_ell(k, 2).unwrap();
            let rhs = poly(&[1, 1]).mul(&poly(&[1, -(k + 1), 1]));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn classification_examples() {
        let c = classify(&poly(&[1, -3, 1])).unwrap();
        assert!(c.flags.quadratic_reciprocal && !c.flags.salem);
        assert_eq!(c.quadratic_trace, Some(3));
        let c = classify(&poly(&[-3, 0, -3, 1])).unwrap();
        assert!(c.flags.pisot && !c.flags.salem);
        let c = classify(&poly(&[-3, 0, 0, -3, 1])).unwrap();
        assert!(!c.flags.pisot && c.flags.none_of_these);
        let c = classify(&poly(&[-1, 1, 0, 0, -1, 1])).unwrap();
        assert!(c.flags.all_roots_of_unity);
        assert!((c.largest_root_modulus - 1.0).abs() < 1e-9);
        assert_eq!(c.entropy, 0.0);
        let c = classify(&p_ell(2, 5).unwrap()).unwrap();
        assert!(c.flags.salem && c.flags.reciprocal);
        let c = classify(&poly(&[2, -4, 0, 0, 0, -4, 2])).unwrap();
        assert!(c.flags.salem);
        assert_eq!(c.polynomial, "2*x^6 - 4*x^5 - 4*x + 2");
        let c = classify(&poly(&[2, -5, 2])).unwrap();
        assert!(c.flags.none_of_these && !c.notes.is_empty());
    }

    #[test]
    fn kdv_constraint_has_double_root_at_one() {
        for q in 2..=10 {
            let p = kdv_constraint_charpoly(q).unwrap();
            let mut qm1 = vec![0i64; q + 1];
            qm1[0] = -1;
            qm1[q] = 1;
            assert_eq!(p, poly(&[-1, 1]).mul(&poly(&qm1)));
            let r = find_roots(&p, ROOT_TOL).unwrap();
            let one: Vec<&Root> = r
                .iter()
                .filter(|r| (r.re - 1.0).abs() < 1e-9 && r.im == 0.0)
                .collect();
            assert_eq!(one.len(), 1);
            assert_eq!(one[0].multiplicity, 2);
            assert!(classify(&p).unwrap().flags.all_roots_of_unity);
        }
    }

    proptest! {
        #[test]
        fn reduction_charpoly_factorises(k in 2i64..=12, l in 2usize..=12) {
            let (full, p) = reduction_charpoly(k, l).unwrap();
            let mut c = vec![0i64; l + 2];
            c[0] = 1;
            c[l + 1] = 1;
            prop_assert_eq!(full, poly(&c).mul(&p));
            prop_assert!(p.is_palindromic());
        }

        #[test]
        fn p_ell_root_structure(k in 2i64..=12, l in 2usize..=12) {
            let p = p_ell(k, l).unwrap();
            let roots = find_roots(&p, ROOT_TOL).unwrap();
            let real = roots.iter().filter(|r| r.is_real()).count();
            if l >= 3 {
                prop_assert_eq!(real, if l % 2 == 1 { 2 } else { 3 });
                prop_assert!(roots[0].re > k as f64);
            }
            if l % 2 == 0 {
                prop_assert!(p.eval_int(-1).is_zero());
            }
            prop_assert_eq!(p.real_root_count(), real);
            for r in &roots {
                if !r.is_real() {
                    prop_assert!((r.modulus() - 1.0).abs() < 1e-9);
                }
                let inv = r.value().inv();
                prop_assert!(roots.iter().any(|s| (s.value() - inv).norm() < 1e-8));
            }
        }

        #[test]
        fn roots_are_closed_under_conjugation(c in prop::collection::vec(-9i64..=9, 2..8)) {
            prop_assume!(*c.last().unwrap() != 0);
            let p = poly(&c);
            let roots = find_roots(&p, ROOT_TOL).unwrap();
            let total: usize = roots.iter().map(|r| r.multiplicity).sum();
            prop_assert_eq!(total, p.degree());
            for r in &roots {
                let conj = r.value().conj();
                prop_assert!(roots.iter().any(|s| (s.value() - conj).norm() < 1e-6 * (1.0 + r.modulus())));
            }
        }
    }
}
