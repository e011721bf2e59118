//! Shape classification from binary masks via pruned skeletons, Delaunay
//! triangles over skeleton endpoints and junctions, interval-valued triangle
//! features, and an acceptance-count voting classifier.

pub mod classifier;
pub mod features;
pub mod geometry;
pub mod harness;
pub mod skeleton;
