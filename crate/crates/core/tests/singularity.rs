use entropyforge::dsl::{
    builtin_family, CoeffSpec, EntryValue, MappingDef, Params, Recurrence, RecurrenceKind,
};
use entropyforge::numeric::rational;
use entropyforge::singularity::{
    confinement_verdict, derive_coefficient_constraints, trace_pattern, verify_constraint,
    PerturbationSpec, Verdict,
};
use entropyforge::spectral::{classify, recurrence_charpoly};

fn family(name: &str, params: &[(&str, i64)]) -> (MappingDef, EntryValue) {
    let mut p = Params::new();
    for (k, v) in params {
        p.insert(k.to_string(), rational(*v, 1));
    }
    let fam = builtin_family(name, &p).unwrap();
    (fam.def.as_mapping().unwrap().clone(), fam.info.entry)
}

fn pattern(name: &str, params: &[(&str, i64)], depth: usize) -> (String, Verdict) {
    let (m, e) = family(name, params);
    let p = trace_pattern(&m, &PerturbationSpec::new(e), depth).unwrap();
    (p.rendered(), p.verdict)
}

#[test]
fn multiplicative_example_confines_only_for_fourth_roots_of_unity() {
    let (p, v) = pattern("mult_example", &[("a", 1)], 20);
    assert_eq!(p, "{0, ∞, ∞^2, ∞, 0}");
    assert!(v.is_confined());
    let (_, v) = pattern("mult_example", &[("a", -1)], 20);
    assert!(v.is_confined());
    let (_, v) = pattern("mult_example", &[("a", 2)], 20);
    assert!(!v.is_confined(), "{v:?}");
}

#[test]
fn hv_full_keeps_the_autonomous_pattern() {
    let (m, e) = family("hv_full", &[]);
    let s = confinement_verdict(&m, e, 16).unwrap();
    assert_eq!(s.pattern, "{0, ∞^2, ∞^2, 0}");
    assert!(s.verdict.is_confined());
    let (_, v) = pattern("hv_full", &[("violate_constraint", 1)], 16);
    assert!(!v.is_confined());
}

#[test]
fn kmt_reductions_confine_under_their_constraint() {
    for k in 2..=3 {
        for l in 2..=5 {
            let (p, v) = pattern("kmt_reduction", &[("k", k), ("l", l)], 30);
            assert!(v.is_confined(), "k={k} l={l}: {p} {v:?}");
            let inner = "f, ".repeat(l as usize - 2);
            assert_eq!(p, format!("{{0, ∞^{k}, {inner}∞^{k}, 0}}"), "k={k} l={l}");
        }
    }
    let (p, v) = pattern(
        "kmt_reduction",
        &[("k", 3), ("l", 3), ("violate_constraint", 1)],
        30,
    );
    assert!(!v.is_confined());
    assert!(p.starts_with("{0, ∞^3, f, ∞^3, 0, ∞^3"), "{p}");
}

#[test]
fn derivation_recovers_the_published_constraints() {
    let (m, e) = family("qrt_example", &[]);
    let m = m.with_coeff("a", CoeffSpec::symbolic(0, 13).unwrap());
    let d = derive_coefficient_constraints(&m, &PerturbationSpec::new(e), &rational(2, 1)).unwrap();
    for r in &d.relations {
        println!("qrt: {r}");
    }
    assert_eq!(d.relations.len(), 1);
    let rec = d.relations[0].to_recurrence().unwrap();
    assert_eq!(rec.kind, RecurrenceKind::Multiplicative);
    let c = classify(&recurrence_charpoly(&rec).unwrap()).unwrap();
    assert!(c.flags.all_roots_of_unity);

    let (m, e) = family("hv_full", &[]);
    let m = m.with_coeff("a", CoeffSpec::symbolic(0, 13).unwrap());
    let d = derive_coefficient_constraints(&m, &PerturbationSpec::new(e), &rational(0, 1)).unwrap();
    for r in &d.relations {
        println!("hv: {r}");
    }
    assert_eq!(d.relations.len(), 1);
    let rec = d.relations[0].to_recurrence().unwrap();
    assert_eq!(
        rec,
        Recurrence::additive("a", vec![(3, 1), (2, -2), (1, -2), (0, 1)])
    );
}

#[test]
fn verify_constraint_examples() {
    let (m, e) = family("kmt_reduction", &[("k", 3), ("l", 3)]);
    let r = Recurrence::additive("a", vec![(4, 1), (0, 1)]);
    assert!(
        verify_constraint(&m, &r, &PerturbationSpec::new(e.clone()), 30)
            .unwrap()
            .holds
    );
    let (m, e) = family("kmt_reduction", &[("k", 3), ("l", 5)]);
    let r = Recurrence::additive("a", vec![(6, 1), (0, 1)]);
    assert!(
        verify_constraint(&m, &r, &PerturbationSpec::new(e.clone()), 30)
            .unwrap()
            .holds
    );
    let (m, e) = family("kmt_reduction", &[("k", 2), ("l", 3)]);
    let r = Recurrence::additive("a", vec![(4, 1), (0, -1)]);
    assert!(
        verify_constraint(&m, &r, &PerturbationSpec::new(e), 30)
            .unwrap()
            .holds
    );
}
