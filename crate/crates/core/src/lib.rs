pub mod accumulator;
pub mod assign_complex;
pub mod assign_real;
pub mod bench;
pub mod driver;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod poles;
