//! Reduce a lattice to a map, check it against the lattice, and follow the
//! conserved quantity along an orbit.

use entropyforge::dsl::{builtin_family, iterate_mapping, Definition, Params};
use entropyforge::lattice::{conserved_quantity, cross_validate_reduction, reduce_to_mapping};
use entropyforge::numeric::rational;

fn main() -> entropyforge::Result<()> {
    let mut params = Params::new();
    params.insert("k".into(), rational(2, 1));
    params.insert("l".into(), rational(2, 1));
    let Definition::Lattice(def) = builtin_family("kmt_lattice", &params)?.def else {
        unreachable!()
    };
    let red = reduce_to_mapping(&def, 2, false)?;
    println!("{}", red.mapping);
    let cv = cross_validate_reduction(&def, 2, false, 6, 1)?;
    println!("{} sites agree: {}", cv.sites_compared, cv.agree);

    let init: Vec<_> = (2..5).map(|i| rational(i, 1)).collect();
    let mut orbit = init.clone();
    orbit.extend(iterate_mapping(&red.mapping, &init, -1, 8)?);
    for q in conserved_quantity(&red.mapping, &orbit, -1)? {
        println!("Q = {q}");
    }
    Ok(())
}
