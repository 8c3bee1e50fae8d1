//! Bit rounding of objective coefficients in binary programs.
//!
//! The crate keeps the top ℓ bits of every objective coefficient, certifies
//! the resulting ε-optimality guarantees in exact arithmetic, counts
//! formulation symmetries before and after rounding, and drives small
//! experiments end to end.
//!
//! Modules, bottom-up:
//!
//! * [`model`]: binary programs and the OPB text format.
//! * [`rounding`]: ℓ-bit rounding and the ε bounds.
//! * [`generators`]: seeded facility-location and clustered-knapsack
//!   instances.
//! * [`symmetry`]: colored-graph automorphism search.
//! * [`solvers`]: exact enumeration and branch-and-bound.
//! * [`harness`]: ℓ sweeps, aggregation and reports.

pub mod generators;
pub mod harness;
pub mod model;
pub mod rounding;
pub mod solvers;
pub mod symmetry;
