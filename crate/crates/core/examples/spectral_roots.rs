//! Largest roots and Salem/Pisot flags of the predicted growth polynomials.

use entropyforge::spectral::{classify, limit_polynomial, p_ell};

fn main() -> entropyforge::Result<()> {
    for k in [2, 3] {
        for l in 2..=5 {
            let p = p_ell(k, l)?;
            let c = classify(&p)?;
            println!(
                "k={k} l={l}  {:<32} {:.6}  salem={}",
                p.to_string(),
                c.largest_root_modulus,
                c.flags.salem
            );
        }
    }
    for l in 3..=5 {
        let p = limit_polynomial(3, l)?;
        let c = classify(&p)?;
        println!(
            "limit l={l}  {:<24} {:.6}  pisot={}",
            p.to_string(),
            c.largest_root_modulus,
            c.flags.pisot
        );
    }
    Ok(())
}
