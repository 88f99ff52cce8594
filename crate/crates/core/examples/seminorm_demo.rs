//! Fractional Sobolev seminorms of the Lusin (N) map by grid and Monte
//! Carlo quadrature, and the Hölder comparison for a linear map when
//! `sp > n`.
//!
//! Run with `cargo run --release --example seminorm_demo`.

use fracjac::cantor::{CantorMapSpec, PiecewiseRadialMap};
use fracjac::geometry::SupCube;
use fracjac::maps::Affine;
use fracjac::norms::{gagliardo_seminorm, holder_vs_gagliardo, Quadrature, SeminormDomain, SeminormParams};

fn main() -> fracjac::Result<()> {
    let f = PiecewiseRadialMap::new(CantorMapSpec::lusin_n(2, 0.5, 6)?)?;
    let domain = SeminormDomain::Cube(SupCube::unit(2));
    for q in [
        Quadrature::Grid(64),
        Quadrature::MonteCarlo {
            samples: 200_000,
            seed: 1,
        },
    ] {
        let p = SeminormParams::new(0.3, 2.0, domain.clone(), q)?.with_holder_exponent(0.5)?;
        let e = gagliardo_seminorm(&f, &p)?;
        println!("{}: [f]^p = {:.4}, history {:?}", e.method, e.value, e.history);
    }

    let lin = Affine::new(vec![1.0, 0.5, -0.3, 2.0], vec![0.0, 0.0], "lin")?;
    let p = SeminormParams::new(0.75, 4.0, domain, Quadrature::Grid(64))?;
    let c = holder_vs_gagliardo(&lin, &p, 20_000, 3)?;
    println!(
        "Hölder alpha {:.2}: [f]_C = {:.4}, [f]_W = {:.4}, ratio {:.4}",
        c.alpha, c.holder_seminorm, c.gagliardo_value, c.ratio
    );
    Ok(())
}
