//! Benchmark harness for Rosenbrock-Krylov integrators: convergence-order
//! fits, work-precision sweeps, stability sampling, order-condition
//! residuals and Krylov-projection checks, all written as CSV.

pub mod config;
pub mod csv;
pub mod error;
pub mod fit;
pub mod reference;
pub mod runs;
pub mod solver;

pub use config::{JvpSpec, KrylovDim, RunConfig};
pub use error::{BenchError, BenchResult};
pub use fit::{order_fit, OrderFit};
pub use solver::Solver;
