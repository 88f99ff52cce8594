//! Brouwer degree of piecewise-linear interpolants: complex powers, a
//! reflection and a hyperplane split of a fold.
//!
//! Run with `cargo run --release --example degree_demo`.

use fracjac::degree::{degree, hyperplane_split_test, Domain, GridFunction};
use fracjac::geometry::{Hyperplane, RegularGrid, SupCube};
use fracjac::maps::{Affine, ComplexPower, Map, SmoothFold};

fn sample(f: &dyn Map, grid: usize) -> fracjac::Result<GridFunction> {
    GridFunction::sample(f, RegularGrid::new(SupCube::unit(2), grid)?)
}

fn main() -> fracjac::Result<()> {
    let q0 = Domain::Cube(SupCube::unit(2));
    let y = [0.1, 0.05];
    for k in 1..=4 {
        let gf = sample(&ComplexPower::new(k)?, 128)?;
        let r = degree(&gf, &q0, &y)?;
        println!("deg(z^{k}, Q0, {y:?}) = {} (boundary gap {:.3})", r.value, r.boundary_gap);
    }

    let reflect = Affine::new(vec![-1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0], "reflect")?;
    println!("deg(reflection) = {}", degree(&sample(&reflect, 16)?, &q0, &y)?.value);

    // The fold covers y twice, once on each side of x0 = 0.
    let fold = sample(&SmoothFold::new(2, 0.1)?, 128)?;
    let plane = Hyperplane::axis(2, 0, 0.0)?;
    let s = hyperplane_split_test(&fold, &SupCube::unit(2), &[0.0, 0.1], &plane)?;
    println!(
        "fold: total {:?}, sides {:?} / {:?}, multiplicity flagged: {}",
        s.total, s.side_a, s.side_b, s.multiplicity_flag
    );
    Ok(())
}
