//! Degree growth of iterated mappings.
//!
//! The first `order - 1` initial values are generic rational constants and the
//! last one is an affine indeterminate `w`. Every iterate is kept as a reduced
//! rational function of `w` and its degree is `max(deg num, deg den)`.

use std::io::Write;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dsl::{eval, CoeffSpec, MappingDef, RatFuncDomain};
use crate::error::{Error, Result};
use crate::numeric::field::{rational, Field, PrimeField, Rationals};
use crate::numeric::ratfunc::RationalFunction;
use crate::Rational;

/// Default seed for generic initial constants.
pub const DEFAULT_SEED: u64 = 20160301;

/// Primes used by the modular mode.
pub const DEFAULT_PRIMES: [u64; 2] = [998_244_353, 1_000_000_007];

/// Extra prime consulted when the two default primes disagree.
pub const TIEBREAK_PRIME: u64 = 2_147_483_647;

/// Degrees above this abort the run with partial results.
pub const DEFAULT_MAX_DEGREE: u64 = 200_000;

/// Reseeding attempts after a degenerate orbit.
pub const MAX_RESEEDS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Mode {
    ExactRational,
    Modular { primes: Vec<u64> },
}

impl Mode {
    pub fn modular() -> Self {
        Mode::Modular {
            primes: DEFAULT_PRIMES.to_vec(),
        }
    }
}

/// Options for [`degree_sequence_with`].
#[derive(Clone)]
pub struct DegreeOptions<'a> {
    pub steps: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Absolute index of `n` at the first computed step.
    pub start: i64,
    pub max_degree: u64,
    pub progress: Option<&'a (dyn Fn(usize, u64) + Sync)>,
}

impl<'a> DegreeOptions<'a> {
    pub fn new(steps: usize, mode: Mode, seed: u64) -> Self {
        DegreeOptions {
            steps,
            mode,
            seed,
            start: 0,
            max_degree: DEFAULT_MAX_DEGREE,
            progress: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DegreeSequence {
    pub degrees: Vec<u64>,
    pub mode: Mode,
    /// Seed that produced the reported run (after any reseeding).
    pub seed: u64,
    pub reseeds: usize,
    /// `false` when the modular primes disagreed anywhere.
    pub reliable: bool,
    /// Entries where the primes disagreed; the reported degree is the maximum
    /// over all primes tried.
    pub disputed: Vec<usize>,
    #[serde(serialize_with = "ser_rationals")]
    pub initial_constants: Vec<Rational>,
}

fn ser_rationals<S: serde::Serializer>(
    v: &[Rational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for q in v {
        seq.serialize_element(&q.to_string())?;
    }
    seq.end()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntropyEstimate {
    pub final_ratio: f64,
    /// `log(final_ratio)`.
    pub log_final_ratio: f64,
    /// Least-squares slope of `log d_n` over the last third of the run.
    pub fitted_slope: f64,
}

impl DegreeSequence {
    pub fn growth_ratios(&self) -> Result<Vec<Rational>> {
        growth_ratios(&self.degrees)
    }

    pub fn entropy_estimate(&self) -> Result<EntropyEstimate> {
        entropy_estimate(&self.degrees)
    }

    /// CSV with columns `n,d_n,ratio`; the ratio is `d_n/d_{n-1}` when both
    /// are positive.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "d_n", "ratio"]).map_err(csv_err)?;
        for (i, d) in self.degrees.iter().enumerate() {
            let ratio = if i > 0 && self.degrees[i - 1] > 0 && *d > 0 {
                format!("{:.6}", *d as f64 / self.degrees[i - 1] as f64)
            } else {
                String::new()
            };
            wr.write_record([i.to_string(), d.to_string(), ratio])
                .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("serialisable");
        let ratios: Vec<f64> = self
            .growth_ratios()
            .map(|r| r.iter().map(crate::numeric::rat_to_f64).collect())
            .unwrap_or_default();
        v["ratios"] = serde_json::json!(ratios);
        if let Ok(e) = self.entropy_estimate() {
            v["entropyEstimate"] = serde_json::to_value(e).expect("serialisable");
        }
        v
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Ratios `d_{n+1}/d_n` over consecutive positive degrees.
pub fn growth_ratios(degrees: &[u64]) -> Result<Vec<Rational>> {
    let pos: Vec<u64> = degrees.iter().copied().filter(|&d| d > 0).collect();
    if pos.len() < 2 {
        return Err(Error::InsufficientData(
            "fewer than two positive degrees".into(),
        ));
    }
    Ok(pos
        .windows(2)
        .map(|w| rational(w[1] as i64, w[0] as i64))
        .collect())
}

pub fn entropy_estimate(degrees: &[u64]) -> Result<EntropyEstimate> {
    let pos: Vec<(usize, u64)> = degrees
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, d)| *d > 0)
        .collect();
    if pos.len() < 4 {
        return Err(Error::InsufficientData(
            "fewer than four positive degrees".into(),
        ));
    }
    let (_, last) = pos[pos.len() - 1];
    let (_, prev) = pos[pos.len() - 2];
    let final_ratio = last as f64 / prev as f64;
    let take = (pos.len() / 3).max(2);
    let tail = &pos[pos.len() - take..];
    let xs: Vec<f64> = tail.iter().map(|(i, _)| *i as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, d)| (*d as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(EntropyEstimate {
        final_ratio,
        log_final_ratio: final_ratio.ln(),
        fitted_slope: if sxx > 0.0 { sxy / sxx } else { 0.0 },
    })
}

/// Coefficient values that would make a generic constant special.
pub(crate) fn forbidden_values(map: &MappingDef) -> Vec<Rational> {
    let mut out = vec![Rational::zero()];
    for spec in map.coeffs.values() {
        match spec {
            CoeffSpec::Constant(v) => out.push(v.clone()),
            CoeffSpec::Periodic { values, .. } => out.extend(values.iter().cloned()),
            CoeffSpec::Recurrence { initial, .. } => out.extend(initial.iter().cloned()),
            _ => {}
        }
    }
    out
}

/// Deterministic generic constants: distinct, nonzero, with numerator and
/// denominator at most 50, avoiding the given values.
pub fn generic_constants(seed: u64, count: usize, avoid: &[Rational]) -> Vec<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Rational> = Vec::with_capacity(count);
    while out.len() < count {
        let num: i64 = rng.gen_range(-50..=50);
        let den: i64 = rng.gen_range(1..=50);
        if num == 0 {
            continue;
        }
        let q = rational(num, den);
        if avoid.contains(&q) || avoid.contains(&-q.clone()) || out.contains(&q) {
            continue;
        }
        out.push(q);
    }
    out
}

#[derive(Clone, Copy)]
struct Run<'a> {
    map: &'a MappingDef,
    constants: &'a [Rational],
    steps: usize,
    start: i64,
    max_degree: u64,
    progress: Option<&'a (dyn Fn(usize, u64) + Sync)>,
}

impl Run<'_> {
    fn degrees<F: Field>(&self, f: &F) -> Result<Vec<u64>> {
        let map = self.map;
        let order = map.order();
        let dom = RatFuncDomain(f.clone());
        let mut vals: Vec<RationalFunction<F::Elem>> = Vec::with_capacity(self.steps);
        let mut degrees = Vec::with_capacity(self.steps);
        for c in self.constants.iter().take(order - 1) {
            let e = f
                .from_rational(c)
                .ok_or_else(|| Error::InvalidInput("initial constant not representable".into()))?;
            vals.push(RationalFunction::constant(f, e));
            degrees.push(0);
        }
        vals.push(dom.indeterminate());
        degrees.push(1);
        let first = self.start + map.bottom;
        for i in order..self.steps {
            let n = first + i as i64 - map.top;
            let base = i as i64 - map.top;
            let next = eval(
                &map.rhs,
                &dom,
                &mut |s: &i64| Ok(vals[(base + s) as usize].clone()),
                &mut |name: &str, s: &i64| {
                    let spec = map
                        .coeffs
                        .get(name)
                        .ok_or_else(|| Error::UnboundSymbol(name.to_string()))?;
                    Ok(RationalFunction::constant(
                        f,
                        spec.value_in(f, name, &[n + s])?,
                    ))
                },
            )
            .map_err(|e| match e {
                Error::DivisionByZero => Error::DegenerateOrbit { step: i },
                e => e,
            })?;
            let d = next.degree() as u64;
            if d > self.max_degree {
                return Err(Error::Resource {
                    reason: format!("degree {d} exceeds the limit {}", self.max_degree),
                    partial: degrees,
                });
            }
            if let Some(p) = self.progress {
                p(i, d);
            }
            degrees.push(d);
            vals.push(next);
            // Only the last `order` values are read again.
            if vals.len() > order {
                let old = vals.len() - order - 1;
                vals[old] = RationalFunction::constant(f, f.zero());
            }
        }
        degrees.truncate(self.steps);
        Ok(degrees)
    }

    fn modular(&self, primes: &[u64]) -> Result<(Vec<u64>, Vec<usize>)> {
        let fields: Vec<PrimeField> = primes
            .iter()
            .map(|&p| PrimeField::new(p))
            .collect::<Result<_>>()?;
        let results: Vec<Result<Vec<u64>>> = std::thread::scope(|s| {
            let handles: Vec<_> = fields
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let run = Run {
                        progress: if i == 0 { self.progress } else { None },
                        ..*self
                    };
                    s.spawn(move || run.degrees(f))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        let mut runs = Vec::new();
        for r in results {
            runs.push(r?);
        }
        let disputed: Vec<usize> = (0..runs[0].len())
            .filter(|&i| runs.iter().any(|r| r[i] != runs[0][i]))
            .collect();
        if disputed.is_empty() {
            return Ok((runs.swap_remove(0), disputed));
        }
        // Reduction modulo p can only lower a degree, so the maximum over
        // several primes is the best available value.
        if !primes.contains(&TIEBREAK_PRIME) {
            runs.push(self.degrees(&PrimeField::new(TIEBREAK_PRIME)?)?);
        }
        let merged = (0..runs[0].len())
            .map(|i| runs.iter().map(|r| r[i]).max().expect("nonempty"))
            .collect();
        Ok((merged, disputed))
    }
}

pub fn degree_sequence(
    map: &MappingDef,
    steps: usize,
    mode: Mode,
    seed: u64,
) -> Result<DegreeSequence> {
    degree_sequence_with(map, &DegreeOptions::new(steps, mode, seed))
}

pub fn degree_sequence_with(map: &MappingDef, opts: &DegreeOptions<'_>) -> Result<DegreeSequence> {
    if opts.steps == 0 {
        return Err(Error::InvalidInput("steps must be at least 1".into()));
    }
    if map.has_symbolic_coefficients() {
        return Err(Error::InvalidInput(
            "degree runs need numeric coefficients".into(),
        ));
    }
    let order = map.order();
    let avoid = forbidden_values(map);
    let mut last_err = None;
    for attempt in 0..=MAX_RESEEDS {
        let seed = opts.seed.wrapping_add(attempt as u64 * 0x9E37_79B9);
        let constants = generic_constants(seed, order.saturating_sub(1), &avoid);
        let run = Run {
            map,
            constants: &constants,
            steps: opts.steps.max(order),
            start: opts.start,
            max_degree: opts.max_degree,
            progress: opts.progress,
        };
        let outcome = match &opts.mode {
            Mode::ExactRational => run.degrees(&Rationals).map(|d| (d, Vec::new())),
            Mode::Modular { primes } => {
                if primes.is_empty() {
                    return Err(Error::InvalidInput(
                        "modular mode needs at least one prime".into(),
                    ));
                }
                run.modular(primes)
            }
        };
        match outcome {
            Ok((mut degrees, disputed)) => {
                degrees.truncate(opts.steps);
                return Ok(DegreeSequence {
                    degrees,
                    mode: opts.mode.clone(),
                    seed,
                    reseeds: attempt,
                    reliable: disputed.is_empty(),
                    disputed,
                    initial_constants: constants,
                });
            }
            Err(e @ Error::DegenerateOrbit { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Runs under several seeds; returns the common degree list or the first
/// seed that disagrees with the majority.
pub fn seed_consensus(
    map: &MappingDef,
    steps: usize,
    mode: &Mode,
    seeds: &[u64],
) -> Result<Vec<u64>> {
    let runs: Vec<Vec<u64>> = seeds
        .iter()
        .map(|&s| degree_sequence(map, steps, mode.clone(), s).map(|r| r.degrees))
        .collect::<Result<_>>()?;
    let first = runs.first().cloned().unwrap_or_default();
    for (s, r) in seeds.iter().zip(&runs) {
        if *r != first {
            return Err(Error::InvalidInput(format!(
                "seed {s} gave a different degree list"
            )));
        }
    }
    Ok(first)
}

/// Second differences of a degree list.
pub fn second_differences(degrees: &[u64]) -> Vec<i64> {
    degrees
        .windows(3)
        .map(|w| w[2] as i64 - 2 * w[1] as i64 + w[0] as i64)
        .collect()
}

pub fn ratio_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{builtin_family, parse_mapping, Params};

    fn family(name: &str, k: i64, l: i64, violate: bool) -> MappingDef {
        let mut p = Params::new();
        p.insert("k".into(), rational(k, 1));
        p.insert("l".into(), rational(l, 1));
        if violate {
            p.insert("violate_constraint".into(), rational(1, 1));
        }
        builtin_family(name, &p)
            .unwrap()
            .def
            .as_mapping()
            .unwrap()
            .clone()
    }

    #[test]
    fn linear_map_has_bounded_degree() {
        let m = parse_mapping("x[n+2] = x[n+1] + x[n]").unwrap();
        let s = degree_sequence(&m, 8, Mode::ExactRational, 1).unwrap();
        assert_eq!(s.degrees, vec![0, 1, 1, 1, 1, 1, 1, 1]);
        let e = s.entropy_estimate().unwrap();
        assert_eq!(e.log_final_ratio, 0.0);
        assert_eq!(e.fitted_slope, 0.0);
        assert_eq!(s.growth_ratios().unwrap(), vec![rational(1, 1); 6]);
    }

    #[test]
    fn exact_and_modular_agree_on_short_runs() {
        let m = family("kmt_reduction", 2, 3, false);
        let a = degree_sequence(&m, 10, Mode::ExactRational, DEFAULT_SEED).unwrap();
        let b = degree_sequence(&m, 10, Mode::modular(), DEFAULT_SEED).unwrap();
        assert_eq!(a.degrees, b.degrees);
        assert_eq!(a.degrees, vec![0, 0, 0, 1, 2, 4, 10, 25, 56, 128]);
        assert!(b.reliable);
    }

    #[test]
    fn degrees_do_not_depend_on_the_seed() {
        let m = family("kmt_reduction", 3, 3, false);
        let d = seed_consensus(&m, 9, &Mode::modular(), &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(d, vec![0, 0, 0, 1, 3, 9, 30, 100, 324]);
    }

    #[test]
    fn ratio_and_entropy_need_data() {
        assert!(matches!(
            growth_ratios(&[0, 0, 1]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            entropy_estimate(&[1, 2, 4]),
            Err(Error::InsufficientData(_))
        ));
        assert_eq!(growth_ratios(&[1, 1, 1]).unwrap(), vec![rational(1, 1); 2]);
    }

    #[test]
    fn constants_are_generic_and_reproducible() {
        let avoid = vec![rational(1, 1)];
        let a = generic_constants(7, 20, &avoid);
        assert_eq!(a, generic_constants(7, 20, &avoid));
        assert!(a.iter().all(|q| !q.is_zero() && *q != rational(1, 1)));
        assert!(a
            .iter()
            .all(|q| q.numer().to_i64().unwrap().abs() <= 50 && q.denom().to_i64().unwrap() <= 50));
    }

    #[test]
    fn resource_limit_returns_partial_degrees() {
        let m = family("kmt_reduction", 2, 3, false);
        let mut o = DegreeOptions::new(20, Mode::modular(), 1);
        o.max_degree = 100;
        match degree_sequence_with(&m, &o) {
            Err(Error::Resource { partial, .. }) => {
                assert_eq!(partial, vec![0, 0, 0, 1, 2, 4, 10, 25, 56])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_has_ratio_column() {
        let m = family("kmt_reduction", 2, 2, false);
        let s = degree_sequence(&m, 6, Mode::modular(), 1).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,d_n,ratio\n0,0,\n"));
        assert_eq!(text.lines().count(), 7);
    }
}
