//! Exact Rauzy-Veech induction for interval exchange transformations, staged
//! path constructions of non-uniquely ergodic examples, and the numerical
//! layer used to check them.

pub mod analysis;
pub mod construction;
pub mod geometry;
pub mod induction;
pub mod matrix;
pub mod perm;
pub mod planar;
pub mod sampling;
pub mod symplectic;
