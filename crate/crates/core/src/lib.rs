//! Iso-hypersurface extraction from 4D toxel grids and time slicing into
//! 3D meshes.

pub mod extraction;
pub mod field;
pub mod handles;
pub mod io;
pub mod pipeline;
pub mod slicing;
pub mod sweep;
pub mod synth;
pub mod tessellation;
pub mod topology;
