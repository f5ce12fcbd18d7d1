pub mod error;
pub mod geometry;
pub mod cr;
pub mod ambient;
pub mod immersion;
pub mod catalog;
pub mod biharmonic;
pub mod energy;
pub mod report;
