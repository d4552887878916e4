pub mod baselines;
pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod solver;
pub mod sylvester;
pub mod synthgen;
