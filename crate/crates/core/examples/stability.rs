//! Ciarlet–Nečas verdicts along the construction levels of the Lusin (N)
//! map, together with the exact image measures of a subcube.
//!
//! Run with `cargo run --release --example stability`.

use fracjac::cantor::CantorMapSpec;
use fracjac::geometry::SupCube;
use fracjac::jacobian::{cn_stability_experiment, CnSettings};

fn main() -> fracjac::Result<()> {
    let spec = CantorMapSpec::lusin_n(2, 0.5, 6)?;
    let u = SupCube::new(vec![0.0, 0.0], 2.0 / 3.0)?;
    let t = cn_stability_experiment(&spec, &[2, 4, 6], &u, &CnSettings::with_base(0.02, 128, 128), 1.5)?;
    println!("level  J(U)      |f_k(U)|  verdict");
    for r in &t.rows {
        println!("{:>5}  {:.5}  {:.5}   {}", r.level, r.jacobian_measure, r.image_measure, r.verdict);
    }
    println!("gaps {:?}, converging: {:?}", t.gaps, t.converging);
    Ok(())
}
