//! Singularity patterns: one map written in the definition grammar, then a
//! builtin family at a confining and a nonconfining parameter.

use entropyforge::dsl::{builtin_family, parse_definition, Definition, EntryValue, Params};
use entropyforge::numeric::rational;
use entropyforge::singularity::{trace_pattern, PerturbationSpec};

fn main() -> entropyforge::Result<()> {
    let Definition::Mapping(qrt) = parse_definition("x[n+1]*x[n-1] = 1 - a[n]/x[n]\na: const 2")?
    else {
        unreachable!()
    };
    let p = trace_pattern(
        &qrt,
        &PerturbationSpec::new(EntryValue::Coefficient("a".into())),
        20,
    )?;
    println!("qrt: {} {:?}", p.rendered(), p.verdict);

    for a in [1, 2] {
        let mut params = Params::new();
        params.insert("a".into(), rational(a, 1));
        let family = builtin_family("mult_example", &params)?;
        let Definition::Mapping(map) = family.def else {
            unreachable!()
        };
        let p = trace_pattern(&map, &PerturbationSpec::new(family.info.entry), 20)?;
        println!("mult a={a}: {} {:?}", p.rendered(), p.verdict);
    }
    Ok(())
}
