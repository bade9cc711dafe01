//! Winding-angle laws for planar Brownian motion and for Brownian motion on a
//! cone with a flux parameter.

pub mod error;
pub mod kernels;
pub mod mc;
pub mod quad;
pub mod specfun;
pub mod stats;
pub mod winding_laws;

pub use error::{Error, Result};
pub use kernels::{ConeGeometry, KernelPoint};
pub use quad::QuadControl;
pub use specfun::SeriesControl;
