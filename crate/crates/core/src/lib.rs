//! Numerical toolkit for degree theory and distributional Jacobians of
//! continuous maps, together with explicit Cantor-type piecewise-radial maps
//! that fail the Lusin (N) condition or sense preservation.
//!
//! The main entry points:
//!
//! * [`geometry`]: sup-norm cubes, vertex paths, grids and Kuhn simplices.
//! * [`cantor`]: the piecewise-radial Cantor maps and their exact measures.
//! * [`norms`]: Gagliardo and Hölder seminorm estimators.
//! * [`degree`]: piecewise-linear topological degree with certified gaps.
//! * [`jacobian`]: mollified Jacobians, image measures and injectivity checks.
//! * [`report`] and [`cli`]: CSV/PGM output, configs and the command line.

pub mod cantor;
pub mod cli;
pub mod degree;
pub mod error;
pub mod geometry;
pub mod jacobian;
pub mod maps;
pub mod norms;
pub mod quadrature;
pub mod report;
pub mod testfn;

pub use error::{Error, Result};
