//! Configuration, file formats, and the run pipeline behind the `pbmsim`
//! command line.

pub mod config;
pub mod io;
pub mod parallel;
pub mod pipeline;
pub mod validate;
