//! Mixed finite elements for 2D consistent couple-stress elasticity.
//!
//! Displacements are biquadratic, rotations bilinear and the Lagrange
//! multiplier tying rotation to the displacement curl is piecewise constant.
//! Everything is generic over the floating-point type; `f64` aliases are
//! provided for convenience.

mod error;

pub mod assembly;
pub mod dynamics;
pub mod elements;
pub mod material;
pub mod mesh;
pub mod statics;
pub mod vtk;

pub use ccst_linalg::Scalar;
pub use error::{CoreError, Result};
pub use material::Material;
pub use mesh::{Mesh, Side};

pub type Material64 = Material<f64>;
pub type Mesh64 = Mesh<f64>;
