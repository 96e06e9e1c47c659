//! Multi-modality flow matching for molecular surface generation.
pub mod esgn;
pub mod flow;
pub mod geom3d;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod spatial;
pub mod surface;
pub mod toy;
