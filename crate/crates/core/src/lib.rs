pub mod analysis;
pub mod assembly;
pub mod cholesky;
pub mod evolution;
pub mod geometry;
pub mod io;
pub mod meshing;
pub mod network;
pub mod optimize;
pub mod sparse;
pub mod spectral;
mod textio;

pub use geometry::Point;
