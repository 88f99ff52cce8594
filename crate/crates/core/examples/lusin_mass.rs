//! The limit Lusin (N) map carries Jacobian mass on a null Cantor set: the
//! pointwise Jacobian integrates to less than the distributional Jacobian,
//! and the gap is the measure of the image of the Cantor set.
//!
//! Run with `cargo run --release --example lusin_mass`.

use fracjac::cantor::{pointwise_jacobian_integral, CantorMapSpec, EvalMode, PiecewiseRadialMap};
use fracjac::geometry::SupCube;
use fracjac::jacobian::{ciarlet_necas_check, CnSettings};

fn main() -> fracjac::Result<()> {
    let spec = CantorMapSpec::lusin_n(2, 0.5, 8)?;
    for k in [2, 4, 6, 8] {
        println!("level {k}: int of pointwise J over Q0 = {:.6}", pointwise_jacobian_integral(&spec, k)?);
    }
    let limit = PiecewiseRadialMap::with_mode(spec.clone(), EvalMode::Limit { tolerance: 1e-6 })?;
    let q0 = SupCube::unit(2);
    let r = ciarlet_necas_check(&limit, &q0, &q0, &CnSettings::with_base(0.02, 128, 128))?;
    let pointwise = pointwise_jacobian_integral(&spec, 8)?;
    println!("distributional J(Q0) = {:.5}", r.jacobian_measure);
    for (delta, v) in &r.bracketing {
        println!("  cutoff width {delta}: {v:.5}");
    }
    println!(
        "singular part {:.4}, image of the Cantor set {:?}",
        r.jacobian_measure - pointwise,
        spec.image_limit_measure()
    );
    Ok(())
}
