//! Confinement of a single zero on the lattice, and the coefficient conditions.

use entropyforge::dsl::{builtin_family, Definition, Params};
use entropyforge::lattice::{
    check_confinement_conditions, trace_lattice_singularity, Region, Staircase,
};
use entropyforge::numeric::rational;

fn main() -> entropyforge::Result<()> {
    let mut params = Params::new();
    params.insert("k".into(), rational(2, 1));
    let Definition::Lattice(def) = builtin_family("kmt_lattice", &params)?.def else {
        unreachable!()
    };
    let region = Region::new(-4, 6, -3, 7)?;
    let st = Staircase::alternating_for(0, &region);
    let p = trace_lattice_singularity(&def, &st, &[((0, 0), rational(1, 1))], &region, 19)?;
    println!("{}", p.render_grid());
    println!("verdict {:?}", p.verdict);
    for c in check_confinement_conditions(&def, &Region::square(6)?)? {
        println!("{:<16} {}", c.id, c.holds);
    }
    Ok(())
}
