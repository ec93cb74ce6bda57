//! Degree sequence of a kmt reduction and its growth ratio.

use entropyforge::degree::{degree_sequence, Mode, DEFAULT_SEED};
use entropyforge::dsl::{builtin_family, Definition, Params};
use entropyforge::numeric::rational;

fn main() -> entropyforge::Result<()> {
    let mut params = Params::new();
    params.insert("k".into(), rational(2, 1));
    params.insert("l".into(), rational(3, 1));
    let Definition::Mapping(map) = builtin_family("kmt_reduction", &params)?.def else {
        unreachable!()
    };
    let seq = degree_sequence(&map, 13, Mode::modular(), DEFAULT_SEED)?;
    println!("degrees {:?}", seq.degrees);
    let e = seq.entropy_estimate()?;
    println!(
        "last ratio {:.4}, entropy estimate {:.4}",
        e.final_ratio, e.log_final_ratio
    );
    Ok(())
}
