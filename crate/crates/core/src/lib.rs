//! Reconstruction of exact multivariate rational functions over Q from
//! black-box evaluations in 63-bit prime fields.

pub mod bench;
pub mod driver;
pub mod expr;
pub mod ffield;
pub mod polyint;
pub mod ratrec;
pub mod ratint;
