//! Acceptance gate: one line per criterion, nonzero exit if any fails.
//!
//! Expected values live here, independent of the golden tables inside the
//! library. Roots are checked against radical expressions evaluated below
//! and against a bisection on the integer coefficients.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use entropyforge::degree::{degree_sequence, second_differences, Mode, DEFAULT_SEED};
use entropyforge::dsl::{
    builtin_family, CoeffSpec, Definition, EntryValue, LatticeDef, MappingDef, Params, Recurrence,
};
use entropyforge::lattice::{
    check_confinement_conditions, conserved_quantity, cross_validate_reduction, gauge_normalize,
    kdv_reduction, trace_lattice_singularity, LatticePattern, LatticeVerdict, Region, Site,
    Staircase,
};
use entropyforge::numeric::rational;
use entropyforge::singularity::{
    derive_coefficient_constraints, trace_pattern, PerturbationSpec, Token, Verdict,
};
use entropyforge::spectral::{
    classify, kdv_constraint_charpoly, largest_root, limit_polynomial, p_ell, recurrence_charpoly,
    IntPoly,
};
use entropyforge::Rational;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

const ROOT_TOL: f64 = 1e-6;
const COARSE_TOL: f64 = 1e-4;
const RATIO_TOL: f64 = 0.01;
const FINAL_RATIO_TOL: f64 = 1e-3;
const CONTROL_RATIO_TOL: f64 = 0.05;
const CONTROL_SECOND_DIFF: i64 = 4;
const CONTROL_STEPS: usize = 80;
const CROSS_STEPS: usize = 10;
const ORBIT_STEPS: usize = 8;

type Outcome = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn params(pairs: &[(&str, i64)]) -> Params {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), rational(*v, 1)))
        .collect()
}

fn mapping(name: &str, pairs: &[(&str, i64)]) -> (MappingDef, EntryValue) {
    let f = builtin_family(name, &params(pairs)).expect("family builds");
    match f.def {
        Definition::Mapping(m) => (m, f.info.entry),
        Definition::Lattice(_) => panic!("{name} is a lattice"),
    }
}

fn lattice(name: &str, pairs: &[(&str, i64)]) -> LatticeDef {
    match builtin_family(name, &params(pairs))
        .expect("family builds")
        .def
    {
        Definition::Lattice(l) => l,
        Definition::Mapping(_) => panic!("{name} is a mapping"),
    }
}

fn degrees(map: &MappingDef, len: usize) -> Result<Vec<u64>, String> {
    let s = degree_sequence(map, len, Mode::modular(), DEFAULT_SEED).map_err(|e| e.to_string())?;
    ensure(s.reliable, || {
        format!("primes disagree at {:?}", s.disputed)
    })?;
    Ok(s.degrees)
}

fn reduction(k: i64, l: i64, violate: bool, len: usize) -> Result<Vec<u64>, String> {
    let mut p = vec![("k", k), ("l", l)];
    if violate {
        p.push(("violate_constraint", 1));
    }
    degrees(&mapping("kmt_reduction", &p).0, len)
}

fn last_ratio(d: &[u64]) -> f64 {
    d[d.len() - 1] as f64 / d[d.len() - 2] as f64
}

/// Degree sequences printed for the confining reductions.
fn confining() -> Vec<(i64, i64, Vec<u64>)> {
    vec![
        (
            2,
            3,
            vec![0, 0, 0, 1, 2, 4, 10, 25, 56, 128, 296, 681, 1562],
        ),
        (
            2,
            4,
            vec![0, 0, 0, 0, 1, 2, 4, 8, 18, 41, 88, 188, 404, 872],
        ),
        (
            2,
            5,
            vec![0, 0, 0, 0, 0, 1, 2, 4, 8, 16, 34, 73, 152, 316, 656],
        ),
        (3, 3, vec![0, 0, 0, 1, 3, 9, 30, 100, 324, 1053, 3429]),
        (3, 4, vec![0, 0, 0, 0, 1, 3, 9, 27, 84, 262, 810, 2502]),
        (
            3,
            5,
            vec![0, 0, 0, 0, 0, 1, 3, 9, 27, 81, 246, 748, 2268, 6876],
        ),
    ]
}

fn criterion_1() -> Outcome {
    for (k, l, want) in confining() {
        let got = reduction(k, l, false, want.len())?;
        ensure(got == want, || format!("k={k} l={l}: {got:?}"))?;
    }
    Ok(())
}

fn criterion_2() -> Outcome {
    let cases: [(i64, i64, usize, &[u64]); 2] =
        [(3, 3, 11, &[327, 1071, 3513]), (3, 4, 12, &[813, 2520])];
    for (k, l, len, tail) in cases {
        let base = reduction(k, l, false, len)?;
        let got = reduction(k, l, true, len)?;
        let first = got.iter().zip(&base).position(|(a, b)| a != b);
        ensure(first == Some(len - tail.len()), || {
            format!("k={k} l={l} first deviates at {first:?}")
        })?;
        ensure(&got[len - tail.len()..] == tail, || {
            format!("k={k} l={l}: {got:?}")
        })?;
    }
    let got = reduction(3, 5, true, 14)?;
    let r = last_ratio(&got);
    ensure((r - 6894.0 / 2271.0).abs() <= FINAL_RATIO_TOL, || {
        format!("k=3 l=5 ratio {r}")
    })
}

fn horner(p: &IntPoly, x: f64) -> f64 {
    p.coeffs()
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap())
}

/// Root inside `[lo, hi]` by bisection; the polynomial must change sign.
fn bisect(p: &IntPoly, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (flo, fhi) = (horner(p, lo), horner(p, hi));
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if horner(p, mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Largest real root, bracketed between 1 and the Cauchy bound.
fn bisect_largest(p: &IntPoly) -> Option<f64> {
    let c = p.coeffs();
    let lead = c.last()?.abs().to_f64()?;
    let bound = 1.0
        + c[..c.len() - 1]
            .iter()
            .map(|a| a.abs().to_f64().unwrap() / lead)
            .fold(0.0, f64::max);
    let mut hi = bound;
    let grid = 4096;
    for i in (0..grid).rev() {
        let lo = 1.0 + (bound - 1.0) * i as f64 / grid as f64;
        if let Some(r) = bisect(p, lo, hi) {
            return Some(r);
        }
        hi = lo;
    }
    None
}

/// (label, polynomial, expected root, tolerance)
fn root_cases() -> Vec<(String, IntPoly, f64, f64)> {
    let s = f64::sqrt;
    let p = |k: i64, l: usize| p_ell(k, l).unwrap();
    let lim = |l: usize| limit_polynomial(3, l).unwrap();
    vec![
        ("P_2 k=2".into(), p(2, 2), (3.0 + s(5.0)) / 2.0, ROOT_TOL),
        (
            "P_3 k=2".into(),
            p(2, 3),
            (1.0 + s(3.0) + s(2.0 * s(3.0))) / 2.0,
            ROOT_TOL,
        ),
        (
            "P_4 k=2".into(),
            p(2, 4),
            (3.0 + s(5.0) + s(6.0 * s(5.0) - 2.0)) / 4.0,
            ROOT_TOL,
        ),
        (
            "P_5 k=2".into(),
            p(2, 5),
            (1.0 + s(17.0) + s(2.0 * s(17.0) + 2.0)) / 4.0,
            ROOT_TOL,
        ),
        ("P_2 k=3".into(), p(3, 2), 2.0 + s(3.0), ROOT_TOL),
        (
            "P_3 k=3".into(),
            p(3, 3),
            (3.0 + s(17.0) + s(10.0 + 6.0 * s(17.0))) / 4.0,
            ROOT_TOL,
        ),
        (
            "P_4 k=3".into(),
            p(3, 4),
            (2.0 + s(2.0) + s(4.0 * s(2.0) + 2.0)) / 2.0,
            ROOT_TOL,
        ),
        ("P_5 k=3".into(), p(3, 5), 3.0316, COARSE_TOL),
        ("cubic limit".into(), lim(3), 3.2790, COARSE_TOL),
        ("quartic limit".into(), lim(4), 3.1006, COARSE_TOL),
        ("quintic limit".into(), lim(5), 3.0353, COARSE_TOL),
    ]
}

fn criterion_3() -> Outcome {
    let coeffs =
        |p: &IntPoly| -> Vec<i64> { p.coeffs().iter().map(|c| c.to_i64().unwrap()).collect() };
    ensure(
        coeffs(&limit_polynomial(3, 3).unwrap()) == [-3, 0, -3, 1],
        || "limit polynomial l=3".into(),
    )?;
    ensure(coeffs(&p_ell(3, 3).unwrap()) == [1, -3, 0, -3, 1], || {
        "P_3 k=3".into()
    })?;
    for (label, p, want, tol) in root_cases() {
        let got = largest_root(&p).map_err(|e| e.to_string())?;
        ensure((got - want).abs() <= tol, || {
            format!("{label}: {got:.9} vs {want:.9}")
        })?;
        let b = bisect_largest(&p).ok_or_else(|| format!("{label}: no bracket"))?;
        ensure((got - b).abs() <= 1e-9, || {
            format!("{label}: {got:.12} vs bisection {b:.12}")
        })?;
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let roots: BTreeMap<String, f64> = root_cases()
        .into_iter()
        .map(|(label, p, _, _)| (label, bisect_largest(&p).unwrap()))
        .collect();
    for (k, l, d) in confining() {
        let root = roots[&format!("P_{l} k={k}")];
        let r = last_ratio(&d);
        ensure((r - root).abs() <= RATIO_TOL, || {
            format!("k={k} l={l}: ratio {r:.4} vs {root:.4}")
        })?;
    }
    for (l, len, name) in [(3, 11, "cubic"), (4, 12, "quartic"), (5, 14, "quintic")] {
        let d = reduction(3, l, true, len)?;
        let root = roots[&format!("{name} limit")];
        let r = last_ratio(&d);
        ensure((r - root).abs() <= RATIO_TOL, || {
            format!("nonconfining k=3 l={l}: ratio {r:.4} vs {root:.4}")
        })?;
    }
    Ok(())
}

fn eval_int(p: &IntPoly, x: i64) -> BigInt {
    p.coeffs()
        .iter()
        .rev()
        .fold(BigInt::zero(), |acc, c| acc * x + c)
}

fn derivative(p: &IntPoly) -> IntPoly {
    let c: Vec<BigInt> = p
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, a)| a * BigInt::from(i))
        .collect();
    IntPoly::new(c).unwrap()
}

fn criterion_5() -> Outcome {
    for k in [2, 3] {
        for l in [3, 4, 5] {
            let p = p_ell(k, l).unwrap();
            let c = classify(&p).map_err(|e| e.to_string())?;
            let coeffs = p.coeffs().to_vec();
            let mut rev = coeffs.clone();
            rev.reverse();
            ensure(c.flags.salem && coeffs == rev, || {
                format!("P_{l} k={k}: {:?}", c.flags)
            })?;
        }
        let p = p_ell(k, 2).unwrap();
        let c = classify(&p).map_err(|e| e.to_string())?;
        let r = c.largest_root_modulus;
        let t = (k + 1) as f64;
        ensure(
            c.flags.quadratic_reciprocal
                && c.quadratic_trace == Some(k + 1)
                && (r * r - t * r + 1.0).abs() <= ROOT_TOL,
            || format!("P_2 k={k}: {:?}, trace {:?}", c.flags, c.quadratic_trace),
        )?;
    }
    for (l, pisot) in [(3, true), (4, false), (5, false)] {
        let c = classify(&limit_polynomial(3, l).unwrap()).map_err(|e| e.to_string())?;
        ensure(c.flags.pisot == pisot, || {
            format!("limit l={l}: {:?}", c.flags)
        })?;
    }
    let info = builtin_family("qrt_example", &Params::new()).unwrap().info;
    let p = recurrence_charpoly(&info.constraints[0]).map_err(|e| e.to_string())?;
    let c = classify(&p).map_err(|e| e.to_string())?;
    ensure(c.flags.all_roots_of_unity, || format!("{p}: {:?}", c.flags))?;
    for q in 2..=6usize {
        let p = kdv_constraint_charpoly(q).map_err(|e| e.to_string())?;
        let mut want = vec![0i64; q + 2];
        want[0] = 1;
        want[1] = -1;
        want[q] = -1;
        want[q + 1] = 1;
        ensure(p == IntPoly::from_i64(&want).unwrap(), || {
            format!("q={q}: {p}")
        })?;
        let c = classify(&p).map_err(|e| e.to_string())?;
        let d1 = derivative(&p);
        let d2 = derivative(&d1);
        let double =
            eval_int(&p, 1).is_zero() && eval_int(&d1, 1).is_zero() && !eval_int(&d2, 1).is_zero();
        ensure(c.flags.all_roots_of_unity && double, || {
            format!("q={q}: {:?}, double root {double}", c.flags)
        })?;
    }
    Ok(())
}

fn pattern(name: &str, pairs: &[(&str, i64)]) -> (String, Verdict, Vec<usize>) {
    let (m, e) = mapping(name, pairs);
    let p = trace_pattern(&m, &PerturbationSpec::new(e), 30).expect("trace runs");
    (p.rendered(), p.verdict, p.memory_steps)
}

fn criterion_6() -> Outcome {
    let (r, v, mem) = pattern("qrt_example", &[]);
    ensure(
        r == "{0, ∞, ∞, 0}" && v == Verdict::Confined { exit_step: 6 } && mem.contains(&6),
        || format!("qrt: {r} {v:?} {mem:?}"),
    )?;
    for a in [1, -1] {
        let (r, v, _) = pattern("mult_example", &[("a", a)]);
        ensure(r == "{0, ∞, ∞^2, ∞, 0}" && v.is_confined(), || {
            format!("a={a}: {r} {v:?}")
        })?;
    }
    let (r, v, _) = pattern("mult_example", &[("a", 2)]);
    ensure(!v.is_confined(), || format!("a=2: {r} {v:?}"))?;
    for name in ["hv", "hv_full"] {
        let (r, v, _) = pattern(name, &[]);
        ensure(r == "{0, ∞^2, ∞^2, 0}" && v.is_confined(), || {
            format!("{name}: {r} {v:?}")
        })?;
    }
    let literal: [(i64, i64, &str); 8] = [
        (2, 2, "{0, ∞^2, ∞^2, 0}"),
        (2, 3, "{0, ∞^2, f, ∞^2, 0}"),
        (2, 4, "{0, ∞^2, f, f, ∞^2, 0}"),
        (2, 5, "{0, ∞^2, f, f, f, ∞^2, 0}"),
        (3, 2, "{0, ∞^3, ∞^3, 0}"),
        (3, 3, "{0, ∞^3, f, ∞^3, 0}"),
        (3, 4, "{0, ∞^3, f, f, ∞^3, 0}"),
        (3, 5, "{0, ∞^3, f, f, f, ∞^3, 0}"),
    ];
    for (k, l, want) in literal {
        let (r, v, _) = pattern("kmt_reduction", &[("k", k), ("l", l)]);
        ensure(r == want && v.is_confined(), || {
            format!("k={k} l={l}: {r} {v:?}")
        })?;
        if k == 3 {
            let (r, v, _) = pattern(
                "kmt_reduction",
                &[("k", k), ("l", l), ("violate_constraint", 1)],
            );
            ensure(!v.is_confined(), || format!("k=3 l={l} a=1: {r} {v:?}"))?;
        }
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    let cases = [
        (
            "qrt_example",
            rational(2, 1),
            vec![(0, 1), (1, -1), (4, -1), (5, 1)],
            1.0,
        ),
        (
            "hv_full",
            Rational::zero(),
            vec![(0, 1), (1, -2), (2, -2), (3, 1)],
            (3.0 + 5f64.sqrt()) / 2.0,
        ),
    ];
    for (name, reference, terms, root) in cases {
        let (m, e) = mapping(name, &[]);
        let m = m.with_coeff("a", CoeffSpec::symbolic(0, 13).unwrap());
        let d = derive_coefficient_constraints(&m, &PerturbationSpec::new(e), &reference)
            .map_err(|e| e.to_string())?;
        ensure(d.relations.len() == 1, || {
            format!("{name}: {} relations", d.relations.len())
        })?;
        let rec: Recurrence = d.relations[0]
            .to_recurrence()
            .ok_or_else(|| format!("{name}: relation is not a recurrence"))?
            .shift_normal();
        let mut got = rec.terms.clone();
        got.sort();
        let negated: Vec<(i64, i64)> = terms.iter().map(|&(s, c)| (s, -c)).collect();
        ensure(got == terms || got == negated, || format!("{name}: {rec}"))?;
        let p = recurrence_charpoly(&rec).map_err(|e| e.to_string())?;
        let c = classify(&p).map_err(|e| e.to_string())?;
        ensure((c.largest_root_modulus - root).abs() <= ROOT_TOL, || {
            format!("{name}: {p} has {}", c.largest_root_modulus)
        })?;
        if root == 1.0 {
            ensure(c.flags.all_roots_of_unity, || {
                format!("{name}: {:?}", c.flags)
            })?;
        }
    }
    Ok(())
}

fn trace(def: &LatticeDef, zeros: &[Site]) -> LatticePattern {
    let region = Region::new(-4, 6, -3, 7).unwrap();
    let st = Staircase::alternating_for(0, &region);
    let seeds: Vec<(Site, Rational)> = zeros
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, rational(i as i64 + 1, 1)))
        .collect();
    trace_lattice_singularity(def, &st, &seeds, &region, 19).expect("trace runs")
}

/// Expected tokens: the listed singular sites, and `f` on each other computed
/// site with a singular neighbour below, to the left or diagonally.
fn expected_tokens(singular: &[(Site, Token)], p: &LatticePattern) -> BTreeMap<Site, Token> {
    let sing: BTreeSet<Site> = singular.iter().map(|s| s.0).collect();
    let mut want: BTreeMap<Site, Token> = singular.iter().copied().collect();
    for s in &p.sites {
        let site = (s.m, s.n);
        let fed = [(s.m - 1, s.n), (s.m, s.n - 1), (s.m - 1, s.n - 1)]
            .iter()
            .any(|t| sing.contains(t));
        if fed && !sing.contains(&site) {
            want.insert(site, Token::Finite);
        }
    }
    want
}

fn tokens(p: &LatticePattern) -> BTreeMap<Site, Token> {
    p.sites
        .iter()
        .filter(|s| s.token != Token::Regular)
        .map(|s| ((s.m, s.n), s.token))
        .collect()
}

fn condition(def: &LatticeDef, ids: &[&str]) -> Result<Vec<bool>, String> {
    let report = check_confinement_conditions(def, &Region::square(6).unwrap())
        .map_err(|e| e.to_string())?;
    ids.iter()
        .map(|id| {
            report
                .iter()
                .find(|c| c.id == *id)
                .map(|c| c.holds)
                .ok_or_else(|| format!("condition {id} not reported"))
        })
        .collect()
}

fn criterion_8() -> Outcome {
    for (label, def, k) in [
        ("kdv", lattice("kdv_lattice", &[]), 1u32),
        ("kmt k=2", lattice("kmt_lattice", &[("k", 2)]), 2),
        ("kmt k=3", lattice("kmt_lattice", &[("k", 3)]), 3),
    ] {
        let p = trace(&def, &[(0, 0)]);
        let want = expected_tokens(
            &[
                ((0, 0), Token::Zero(1)),
                ((1, 0), Token::Pole(k)),
                ((0, 1), Token::Pole(k)),
                ((1, 1), Token::Zero(1)),
            ],
            &p,
        );
        ensure(
            tokens(&p) == want && p.verdict == LatticeVerdict::Confined,
            || format!("{label}:\n{}", p.render_grid()),
        )?;
        if k >= 2 {
            let p = trace(&def, &[(0, 0), (-1, 1)]);
            let want = expected_tokens(
                &[
                    ((0, 0), Token::Zero(1)),
                    ((-1, 1), Token::Zero(1)),
                    ((1, 0), Token::Pole(k)),
                    ((0, 1), Token::Pole(k)),
                    ((-1, 2), Token::Pole(k)),
                    ((1, 1), Token::Zero(1)),
                    ((0, 2), Token::Zero(1)),
                ],
                &p,
            );
            ensure(
                tokens(&p) == want && p.verdict == LatticeVerdict::Confined,
                || format!("{label} adjacent zeros:\n{}", p.render_grid()),
            )?;
        }
    }
    let odd = lattice("kmt_lattice", &[("k", 3), ("violate_constraint", 1)]);
    let p = trace(&odd, &[(0, 0)]);
    ensure(p.verdict == LatticeVerdict::Nonconfined, || {
        format!("k=3, a=1: {:?}", p.verdict)
    })?;

    let kdv = lattice("kdv_lattice", &[]);
    let table = |f: fn(i64, i64) -> i64| -> BTreeMap<Vec<i64>, Rational> {
        let mut t = BTreeMap::new();
        for m in -1..=6 {
            for n in -1..=6 {
                t.insert(vec![m, n], rational(f(m, n), 1));
            }
        }
        t
    };
    let separable = kdv
        .clone()
        .with_coeff("a", CoeffSpec::table("g+h", table(|m, n| m * m + 3 * n)));
    ensure(
        condition(&separable, &["additive", "ratio_diagonal"])? == [true, false],
        || "a = m^2 + 3n".into(),
    )?;
    let product = table(|m, n| m * n + 1);
    let coupled = kdv
        .clone()
        .with_coeff("a", CoeffSpec::table("mn+1", product.clone()))
        .with_coeff("b", CoeffSpec::table("mn+1", product));
    ensure(condition(&coupled, &["additive"])? == [false], || {
        "a = b = mn+1".into()
    })?;
    let ids = ["diagonal_sign_a", "diagonal_sign_b"];
    ensure(
        condition(&lattice("kmt_lattice", &[("k", 3)]), &ids)? == [true, true],
        || "kmt k=3 signs".into(),
    )?;
    ensure(condition(&odd, &ids)? == [false, false], || {
        "kmt k=3, a=1".into()
    })?;
    let full = lattice("kmt_full", &[("k", 2), ("l", 3)]);
    let ids = ["d_from_c", "c_five_term"];
    ensure(condition(&full, &ids)? == [true, true], || {
        "kmt_full".into()
    })?;
    let c_one = full.with_coeff("c", CoeffSpec::Constant(Rational::one()));
    ensure(condition(&c_one, &ids)? == [false, false], || {
        "kmt_full c=1".into()
    })?;

    let four = kdv.with_coeff("a", CoeffSpec::Constant(rational(4, 1)));
    let g = gauge_normalize(&four, &Region::square(6).unwrap()).map_err(|e| e.to_string())?;
    ensure(g.verified && g.def.coeffs["a"] == g.def.coeffs["b"], || {
        "gauge a/b = 4".into()
    })?;

    for (k, l) in [(2, 2), (2, 3), (3, 3)] {
        let def = lattice("kmt_lattice", &[("k", k), ("l", l)]);
        let cv = cross_validate_reduction(&def, l as u32, false, CROSS_STEPS, DEFAULT_SEED)
            .map_err(|e| e.to_string())?;
        ensure(cv.agree && cv.sites_compared > 0, || {
            format!("reduction k={k} l={l}: {:?}", cv.first_mismatch)
        })?;
    }
    Ok(())
}

/// The reduced map with unit coefficients, iterated by hand.
fn orbit(l: usize, k: i32, init: &[Rational], steps: usize) -> Vec<Rational> {
    let mut x = init.to_vec();
    for _ in 0..steps {
        let n = x.len() - l;
        let next = -x[n - 1].clone() + x[n + l - 1].pow(k).recip() + x[n].pow(k).recip();
        x.push(next);
    }
    x
}

/// The alternating sum paired with a sign that flips with `n`.
fn signed_quantity(x: &[Rational], l: usize, k: i32) -> Vec<Rational> {
    (1..x.len() - l + 1)
        .map(|n| {
            let mut q = Rational::zero();
            for j in 0..=l {
                let t = x[n + j - 1].clone();
                q += if j % 2 == 0 { t } else { -t };
            }
            for j in 0..=l - 2 {
                let t = x[n + j].pow(k).recip();
                q -= if j % 2 == 0 { t } else { -t };
            }
            if n % 2 == 0 {
                q
            } else {
                -q
            }
        })
        .collect()
}

fn criterion_9() -> Outcome {
    for l in [2usize, 4] {
        let init: Vec<Rational> = (0..=l as i64).map(|i| rational(i + 2, i + 3)).collect();
        let x = orbit(l, 2, &init, ORBIT_STEPS);
        let oracle = signed_quantity(&x, l, 2);
        ensure(oracle.windows(2).all(|w| w[0] == w[1]), || {
            format!("oracle l={l} is not constant")
        })?;
        let (m, _) = mapping("kmt_reduction", &[("k", 2), ("l", l as i64)]);
        let q = conserved_quantity(&m, &x, -1).map_err(|e| e.to_string())?;
        ensure(
            q.len() >= ORBIT_STEPS && q.windows(2).all(|w| w[0] == w[1]),
            || format!("l={l}: {q:?}"),
        )?;
        ensure(q[0] == oracle[0] || q[0] == -oracle[0].clone(), || {
            format!("l={l}: {} vs oracle {}", q[0], oracle[0])
        })?;
    }
    let (m, _) = mapping("kmt_reduction", &[("k", 2), ("l", 3)]);
    let init: Vec<Rational> = (0..4).map(|i| rational(i + 2, 1)).collect();
    ensure(
        conserved_quantity(&m, &orbit(3, 2, &init, 4), -1).is_err(),
        || "odd l accepted".into(),
    )
}

fn control(label: &str, map: &MappingDef) -> Outcome {
    let d = degrees(map, CONTROL_STEPS)?;
    let worst = second_differences(&d)
        .iter()
        .map(|v| v.abs())
        .max()
        .unwrap_or(0);
    let r = last_ratio(&d);
    ensure(
        worst <= CONTROL_SECOND_DIFF && (r - 1.0).abs() <= CONTROL_RATIO_TOL,
        || format!("{label}: second difference {worst}, ratio {r:.4}"),
    )
}

fn criterion_10() -> Outcome {
    control("qrt", &mapping("qrt_example", &[]).0)?;
    let one = Rational::one();
    for (p, q) in [(1, 2), (2, 1), (1, 3)] {
        let map = kdv_reduction(p, q, &one, &one).map_err(|e| e.to_string())?;
        control(&format!("kdv ({p},{q})"), &map)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("degree sequences of the confining reductions", criterion_1),
        ("divergence of the nonconfining reductions", criterion_2),
        ("largest roots against radical expressions", criterion_3),
        ("growth ratios against dynamical degrees", criterion_4),
        ("root classification", criterion_5),
        ("singularity patterns", criterion_6),
        ("derived coefficient constraints", criterion_7),
        (
            "lattice patterns, conditions, gauge, reductions",
            criterion_8,
        ),
        ("conserved quantity of even reductions", criterion_9),
        ("integrable controls", criterion_10),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(()) => println!("criterion {:>2} PASS  {title} ({secs:.1}s)", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {title} ({secs:.1}s): {e}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
