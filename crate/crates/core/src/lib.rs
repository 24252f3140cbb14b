pub mod cap;
pub mod complex;
pub mod geometry;
pub mod linalg;
pub mod spectral;
pub mod synth;
