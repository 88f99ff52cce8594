//! Ciarlet–Nečas check: compares the distributional Jacobian mass of a cube
//! with the measure of its image. Injective maps agree, a fold counts its
//! image twice.
//!
//! Run with `cargo run --release --example ciarlet_necas`.

use fracjac::cantor::{CantorMapSpec, PiecewiseRadialMap};
use fracjac::geometry::SupCube;
use fracjac::jacobian::{ciarlet_necas_check, CnSettings};
use fracjac::maps::{Affine, ComplexPower, Map};

fn main() -> fracjac::Result<()> {
    let q0 = SupCube::unit(2);
    let u = SupCube::new(vec![0.0, 0.0], 0.75)?;
    let settings = CnSettings::with_base(0.02, 128, 128);
    let id = Affine::identity(2);
    let lusin = PiecewiseRadialMap::new(CantorMapSpec::lusin_n(2, 0.5, 6)?)?;
    let fold = ComplexPower::new(2)?;
    for (name, f) in [("identity", &id as &dyn Map), ("lusin-6", &lusin), ("z^2", &fold)] {
        let r = ciarlet_necas_check(f, &q0, &u, &settings)?;
        println!(
            "{name:>9}: J(U) = {:.4}, |f(U)| in [{:.4}, {:.4}] -> {}",
            r.jacobian_measure, r.image.lower, r.image.upper, r.verdict
        );
    }
    Ok(())
}
