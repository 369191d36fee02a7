pub mod error;
pub mod geometry;
pub mod model;
pub mod quadrature;
pub mod special;
pub mod jsp;
pub mod aoi;
pub mod optimizer;
pub mod config;
pub mod experiment;
