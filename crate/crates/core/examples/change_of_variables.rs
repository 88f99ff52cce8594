//! Change of variables for the distributional Jacobian: pairs `J_f` with
//! `psi o f` and compares against the degree-weighted integral of `psi`.
//!
//! Run with `cargo run --release --example change_of_variables`.

use fracjac::cantor::{CantorMapSpec, PiecewiseRadialMap};
use fracjac::geometry::SupCube;
use fracjac::jacobian::{change_of_variables_check, MollifierSettings};
use fracjac::maps::{ComplexPower, Map};
use fracjac::testfn::PolyBump;

fn main() -> fracjac::Result<()> {
    let q0 = SupCube::unit(2);
    let ms = MollifierSettings::halving(0.02, 3, 4);
    let sq = ComplexPower::new(2)?;
    let lusin = PiecewiseRadialMap::new(CantorMapSpec::lusin_n(2, 0.5, 8)?)?;
    let cases: [(&str, &dyn Map, PolyBump); 2] = [
        ("z^2", &sq, PolyBump::new(vec![0.2, -0.1], 0.5, 3)?),
        ("lusin-8", &lusin, PolyBump::new(vec![0.1, 0.05], 0.6, 3)?),
    ];
    for (name, f, psi) in cases {
        let c = change_of_variables_check(f, &q0, &psi, &ms, 256, 256)?;
        println!(
            "{name}: J_f(psi o f) = {:.6}, int deg psi = {:.6}, relative difference {:.1e} [{:?}]",
            c.lhs.limit, c.rhs, c.relative_difference, c.status
        );
    }
    Ok(())
}
