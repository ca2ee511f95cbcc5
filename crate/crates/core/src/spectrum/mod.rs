//! Characteristic determinant, root localization, sector geometry and the
//! resolvent probes used to certify minimal growth.

mod characteristic;
mod geometry;
mod probe;
mod roots;

pub use characteristic::*;
pub use geometry::*;
pub use probe::*;
pub use roots::*;
