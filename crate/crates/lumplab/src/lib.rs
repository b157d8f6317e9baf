//! lumplab: a numerical laboratory for sphere-valued sigma-model fields on
//! the 2-sphere with marked points.
//!
//! The crate builds geodesic meshes, samples closed-form maps into lattice
//! fields subject to basing constraints, measures energy and topological
//! degree, and runs the canned experiments: shrinking-bubble sweeps,
//! rational-lump checks, and energy descent within a fixed sector.

pub mod energy;
pub mod family;
pub mod field;
pub mod flow;
pub mod geometry;
pub mod profile;
pub mod quad;
pub mod ratmaps;
pub mod sectors;
