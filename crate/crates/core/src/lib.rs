pub mod error;
pub mod expr;
pub mod geometry;
pub mod classify;
pub mod hexfloat;
pub mod paths;
pub mod variational;
pub mod sampling;
pub mod scenario;
pub mod catalog;
pub mod sigma;
pub mod report;
pub mod harness;
