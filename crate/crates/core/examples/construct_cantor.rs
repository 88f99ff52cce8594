//! Builds the Lusin (N) Cantor map level by level and prints the exact
//! measures of the level-k cube unions in the domain and in the image.
//!
//! Run with `cargo run --release --example construct_cantor`.

use fracjac::cantor::{level_union_measure, CantorMapSpec, PiecewiseRadialMap, Side};
use fracjac::maps::Map;

fn main() -> fracjac::Result<()> {
    let spec = CantorMapSpec::lusin_n(2, 0.5, 8)?;
    println!("level  domain measure        image measure");
    for k in 1..=spec.level {
        let d = level_union_measure(&spec, Side::Domain, k)?;
        let i = level_union_measure(&spec, Side::Image, k)?;
        println!("{k:>5}  {:<20}  {}", d.to_string(), i);
    }
    if let Some(m) = spec.image_limit_measure() {
        println!("image of the Cantor set has measure {m}, the set itself has measure 0");
    }

    let f = PiecewiseRadialMap::new(spec)?;
    for x in [[0.0, 0.0], [0.5, 0.5], [0.9, -0.3], [1.0, 0.2]] {
        println!("f({x:?}) = {:?}", f.eval(&x));
    }
    println!("Lipschitz bound {:.3}", f.lipschitz_bound());
    Ok(())
}
