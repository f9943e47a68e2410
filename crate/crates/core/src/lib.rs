//! Spatial random permutations on the torus.
//!
//! Points live on the torus of side `L` in `d` dimensions and a
//! permutation is weighted by the product over its cycles of periodised
//! convolution powers of a jump density. The crate computes the cycle
//! weights, the partition functions they generate, exact cycle-length laws,
//! Monte Carlo samples, and the limit laws and approximants these converge to.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod error;
pub mod genfun;
mod lattice;
pub mod limits;
pub mod oracle;
pub mod par;
pub mod partition;
pub mod quad;
pub mod sampler;
pub mod spectral;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
pub use spectral::{JumpDensity, Gaussian, Tabulated, make_tabulated, load_tabulated_csv};
pub use weights::{weight, weight_real_space, weight_table, ModelParams, WeightTable};
pub use partition::{partition_table, PartitionTable};
