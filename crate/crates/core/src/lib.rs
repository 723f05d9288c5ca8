//! Rate bounds for All-Reduce over parallel-link networks.
//!
//! A network is a set of `K` nodes joined by directed links, where link
//! `(i, j)` carries `beta_ij` symbols per network use. Every node holds an
//! input vector and wants the elementwise sum of all inputs. This crate
//! computes, exactly:
//!
//! * an upper bound on the achievable computation rate (minimum cut over
//!   all nonempty proper node subsets), via subset enumeration or max-flow;
//! * a lower bound given by the best fractional packing of rooted
//!   Reduce-then-Broadcast tree pairs, solved as an exact rational linear
//!   program either over the full column set or by column generation with
//!   a min-cost arborescence pricing step;
//! * closed-form packings for complete, cyclic, ring, 3-node cyclic and
//!   hypercube topologies, plus the cut-edge machinery that characterizes
//!   the exact rate of superpositions of single-tree-pair networks;
//! * symbol-by-symbol executions of the pipelined Reduce-Broadcast
//!   protocol over a prime field, validating causality, link capacities
//!   and decoding at every node.
//!
//! All bound arithmetic is exact: bandwidths are big integers and packing
//! weights are big rationals. There is no floating point in any bound or
//! packing computation.
//!
//! With the default `parallel` feature, independent subcomputations
//! (per-target flows, per-root pricing, per-column simulations) run on
//! rayon; disabling the feature yields a fully sequential build with the
//! same results.

pub mod arborescence;
pub mod cut;
pub mod edmonds;
pub mod lp;
pub mod network;
pub mod rng;
pub mod schemes;
pub mod simplex;
pub mod simulate;
pub mod topology;

mod par;

pub use num::rational::BigRational;
pub use num::{BigInt, BigUint};

pub use arborescence::{Arborescence, MacBcColumn, Orientation};
pub use cut::Cut;
pub use lp::{LpSolution, Packing};
pub use network::{Network, NodeId, RationalNetwork};
