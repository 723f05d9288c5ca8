//! Generators for the studied network families. All outputs are
//! reproducible bit-for-bit for the same parameters.

use num::{BigUint, One, Zero};
use thiserror::Error;

use crate::network::{Network, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("node count {0} too small for this topology (need at least {1})")]
    TooFewNodes(usize, usize),
    #[error("hypercube dimension must be at least 1")]
    BadDimension,
    #[error("3-node cyclic bandwidths must be positive")]
    NonPositiveBandwidth,
    #[error("parent map must have one entry per non-root node")]
    BadParentMap,
    #[error("parent map contains a cycle")]
    ParentMapCycle,
    #[error("need one bandwidth per tree edge")]
    BandwidthCountMismatch,
}

fn uniform(k: usize, has_edge: impl Fn(usize, usize) -> bool) -> Network {
    let mut beta = vec![BigUint::zero(); k * k];
    for i in 0..k {
        for j in 0..k {
            if i != j && has_edge(i, j) {
                beta[i * k + j] = BigUint::one();
            }
        }
    }
    Network::from_matrix(k, beta)
}

/// Unit bandwidth on every ordered pair.
pub fn complete(k: usize) -> Result<Network, TopologyError> {
    if k < 2 {
        return Err(TopologyError::TooFewNodes(k, 2));
    }
    Ok(uniform(k, |_, _| true))
}

/// Unit bandwidth on the directed cycle `0 -> 1 -> ... -> K-1 -> 0`.
pub fn cycle(k: usize) -> Result<Network, TopologyError> {
    if k < 3 {
        return Err(TopologyError::TooFewNodes(k, 3));
    }
    Ok(uniform(k, |i, j| (i + 1) % k == j))
}

/// Both orientations of the cycle: unit bandwidth on `i -> i+1` and
/// `i+1 -> i` for every cycle position.
pub fn ring(k: usize) -> Result<Network, TopologyError> {
    if k < 3 {
        return Err(TopologyError::TooFewNodes(k, 3));
    }
    Ok(uniform(k, |i, j| (i + 1) % k == j || (j + 1) % k == i))
}

/// 3-node directed cycle with bandwidths `a` on `0 -> 1`, `b` on `1 -> 2`,
/// `c` on `2 -> 0`.
pub fn three_cycle(a: u64, b: u64, c: u64) -> Result<Network, TopologyError> {
    if a == 0 || b == 0 || c == 0 {
        return Err(TopologyError::NonPositiveBandwidth);
    }
    Ok(
        Network::from_edge_list(3, &[(0, 1, a), (1, 2, b), (2, 0, c)])
            .expect("fixed edge list is valid"),
    )
}

/// Hypercube on `2^dim` nodes: unit bandwidth between nodes whose binary
/// labels differ in exactly one bit, in both directions.
pub fn hypercube(dim: u32) -> Result<Network, TopologyError> {
    if dim < 1 {
        return Err(TopologyError::BadDimension);
    }
    let k = 1usize << dim;
    Ok(uniform(k, |i, j| (i ^ j).count_ones() == 1))
}

/// Bidirected tree: `parents[v]` is the tree parent of node `v + 1`
/// (node 0 is the root), and `bandwidths[v]` the bandwidth of that edge in
/// both directions.
pub fn bidirected_tree(parents: &[usize], bandwidths: &[u64]) -> Result<Network, TopologyError> {
    let k = parents.len() + 1;
    if k < 2 {
        return Err(TopologyError::TooFewNodes(k, 2));
    }
    if bandwidths.len() != parents.len() {
        return Err(TopologyError::BandwidthCountMismatch);
    }
    if parents.iter().any(|&p| p >= k) {
        return Err(TopologyError::BadParentMap);
    }
    // Every chain of parent pointers must terminate at the root.
    for start in 1..k {
        let mut node = start;
        for _ in 0..k {
            if node == 0 {
                break;
            }
            node = parents[node - 1];
        }
        if node != 0 {
            return Err(TopologyError::ParentMapCycle);
        }
    }
    let mut edges = Vec::with_capacity(2 * parents.len());
    for (v, (&p, &b)) in parents.iter().zip(bandwidths).enumerate() {
        let child = v + 1;
        edges.push((child, p, b));
        edges.push((p, child, b));
    }
    Network::from_edge_list(k, &edges).map_err(|_| TopologyError::BadParentMap)
}

/// Number of bit positions in which two hypercube labels differ.
pub fn bit_distance(a: NodeId, b: NodeId) -> u32 {
    (a.0 ^ b.0).count_ones()
}
