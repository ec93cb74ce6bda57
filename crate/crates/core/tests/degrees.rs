use entropyforge::degree::{degree_sequence, Mode, DEFAULT_SEED};
use entropyforge::dsl::{builtin_family, MappingDef, Params};
use entropyforge::numeric::rational;

fn reduction(k: i64, l: i64, violate: bool) -> MappingDef {
    let mut p = Params::new();
    p.insert("k".into(), rational(k, 1));
    p.insert("l".into(), rational(l, 1));
    if violate {
        p.insert("violate_constraint".into(), rational(1, 1));
    }
    builtin_family("kmt_reduction", &p)
        .unwrap()
        .def
        .as_mapping()
        .unwrap()
        .clone()
}

fn degrees(k: i64, l: i64, violate: bool, steps: usize) -> Vec<u64> {
    let s = degree_sequence(
        &reduction(k, l, violate),
        steps,
        Mode::modular(),
        DEFAULT_SEED,
    )
    .unwrap();
    assert!(s.reliable);
    s.degrees
}

#[test]
fn compliant_reductions_match_reported_degrees() {
    let cases: [(i64, i64, &[u64]); 6] = [
        (2, 3, &[0, 0, 0, 1, 2, 4, 10, 25, 56, 128, 296, 681, 1562]),
        (2, 4, &[0, 0, 0, 0, 1, 2, 4, 8, 18, 41, 88, 188, 404, 872]),
        (
            2,
            5,
            &[0, 0, 0, 0, 0, 1, 2, 4, 8, 16, 34, 73, 152, 316, 656],
        ),
        (3, 3, &[0, 0, 0, 1, 3, 9, 30, 100, 324, 1053, 3429]),
        (3, 4, &[0, 0, 0, 0, 1, 3, 9, 27, 84, 262, 810, 2502]),
        (
            3,
            5,
            &[0, 0, 0, 0, 0, 1, 3, 9, 27, 81, 246, 748, 2268, 6876],
        ),
    ];
    for (k, l, want) in cases {
        assert_eq!(degrees(k, l, false, want.len()), want, "k={k} l={l}");
    }
}

#[test]
fn violating_coefficients_grow_faster() {
    let d = degrees(3, 3, true, 11);
    assert_eq!(&d[8..], &[327, 1071, 3513]);
    let d = degrees(3, 4, true, 12);
    assert_eq!(&d[10..], &[813, 2520]);
    let d = degrees(3, 5, true, 14);
    assert_eq!(&d[12..], &[2271, 6894]);
}

#[test]
fn exact_mode_agrees_with_modular_mode() {
    let m = reduction(2, 4, false);
    let a = degree_sequence(&m, 12, Mode::ExactRational, 11).unwrap();
    let b = degree_sequence(&m, 12, Mode::modular(), 11).unwrap();
    assert_eq!(a.degrees, b.degrees);
}
