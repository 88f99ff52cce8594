//! Reflected orientation example: the pointwise Jacobian is positive almost
//! everywhere while the degree is -1 at every sampled target.
//!
//! Run with `cargo run --release --example orientation_reflection`.

use fracjac::cantor::CantorMapSpec;
use fracjac::jacobian::reflection_diagnostic;

fn main() -> fracjac::Result<()> {
    let spec = CantorMapSpec::orientation_default(2, 5)?;
    let r = reflection_diagnostic(&spec, 20_000, 40, 256, 11)?;
    let minus_one = r.degrees.iter().filter(|d| **d == -1).count();
    println!(
        "positive Jacobian at {} of {} sampled points ({:.2}%)",
        r.positive,
        r.defined,
        100.0 * r.positive_fraction()
    );
    println!(
        "degree -1 at {minus_one} of {} certified targets, {} uncertified",
        r.degrees.len(),
        r.uncertified
    );
    Ok(())
}
