//! Confinement constraint on the coefficient of a non-autonomous map.

use entropyforge::dsl::{builtin_family, CoeffSpec, Definition, Params};
use entropyforge::numeric::rational;
use entropyforge::singularity::{derive_coefficient_constraints, PerturbationSpec};
use entropyforge::spectral::{classify, recurrence_charpoly};

fn main() -> entropyforge::Result<()> {
    let family = builtin_family("hv_full", &Params::new())?;
    let Definition::Mapping(map) = family.def else {
        unreachable!()
    };
    let map = map.with_coeff("a", CoeffSpec::symbolic(0, 13)?);
    let spec = PerturbationSpec::new(family.info.entry);
    let derived = derive_coefficient_constraints(&map, &spec, &rational(0, 1))?;
    for r in &derived.relations {
        println!("{r}");
        if let Some(rec) = r.to_recurrence() {
            let p = recurrence_charpoly(&rec)?;
            println!(
                "  {p}: largest root {:.9}",
                classify(&p)?.largest_root_modulus
            );
        }
    }
    Ok(())
}
