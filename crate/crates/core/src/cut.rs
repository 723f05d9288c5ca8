//! Cut-set upper bound on the All-Reduce rate: the minimum, over all
//! nonempty proper node subsets, of the total bandwidth leaving the
//! subset. Computed two ways: exhaustive subset enumeration (the reference
//! oracle, `K <= 20`) and repeated max-flow (the scalable path).
//!
//! Everything here is integer arithmetic; augmenting-path termination
//! needs no tolerances.

use std::collections::VecDeque;

use num::{BigInt, BigUint, Signed, Zero};
use thiserror::Error;

use crate::network::{Network, NodeId};
use crate::par;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CutError {
    #[error("subset enumeration over {0} nodes exceeds the K <= 20 limit; use the max-flow path")]
    TooManyNodes(usize),
    #[error("max-flow needs distinct source and sink")]
    SourceEqualsSink,
}

/// A nonempty proper node subset together with the total bandwidth
/// crossing from the subset to its complement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    subset: Vec<NodeId>,
    value: BigUint,
}

impl Cut {
    /// Build a cut from a subset, recomputing its capacity.
    pub fn new(network: &Network, mut subset: Vec<NodeId>) -> Cut {
        subset.sort();
        subset.dedup();
        let k = network.node_count();
        assert!(
            !subset.is_empty() && subset.len() < k,
            "cut subset must be nonempty and proper"
        );
        let mut inside = vec![false; k];
        for n in &subset {
            inside[n.0] = true;
        }
        let mut value = BigUint::zero();
        for (from, to, b) in network.edges() {
            if inside[from.0] && !inside[to.0] {
                value += b;
            }
        }
        Cut { subset, value }
    }

    pub fn subset(&self) -> &[NodeId] {
        &self.subset
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }
}

/// Minimum cut by enumerating all `2^K - 2` nonempty proper subsets.
/// Ties are broken by the lexicographically smallest sorted subset.
pub fn cutset_bound_bruteforce(network: &Network) -> Result<Cut, CutError> {
    let k = network.node_count();
    if k > 20 {
        return Err(CutError::TooManyNodes(k));
    }
    let mut best: Option<Cut> = None;
    for mask in 1u32..((1u32 << k) - 1) {
        let mut value = BigUint::zero();
        for (from, to, b) in network.edges() {
            if mask & (1 << from.0) != 0 && mask & (1 << to.0) == 0 {
                value += b;
            }
        }
        let better = match &best {
            None => true,
            Some(b) => {
                value < b.value
                    || (value == b.value && {
                        let subset = mask_to_subset(mask, k);
                        subset < b.subset
                    })
            }
        };
        if better {
            best = Some(Cut {
                subset: mask_to_subset(mask, k),
                value,
            });
        }
    }
    Ok(best.expect("K >= 2 always yields at least one proper subset"))
}

fn mask_to_subset(mask: u32, k: usize) -> Vec<NodeId> {
    (0..k)
        .filter(|&i| mask & (1 << i) != 0)
        .map(NodeId)
        .collect()
}

/// Maximum `source -> sink` flow with bandwidths as capacities, by
/// shortest augmenting paths (Edmonds-Karp).
pub fn max_flow(network: &Network, source: NodeId, sink: NodeId) -> Result<BigUint, CutError> {
    if source == sink {
        return Err(CutError::SourceEqualsSink);
    }
    Ok(min_cut(network, source, sink).0)
}

/// Max-flow value plus the source side of a minimum cut (the nodes
/// reachable from `source` in the final residual graph).
fn min_cut(network: &Network, source: NodeId, sink: NodeId) -> (BigUint, Vec<NodeId>) {
    let k = network.node_count();
    let mut residual: Vec<BigInt> = (0..k * k)
        .map(|idx| BigInt::from(network.beta(NodeId(idx / k), NodeId(idx % k)).clone()))
        .collect();
    let mut value = BigUint::zero();
    loop {
        // BFS for a shortest augmenting path.
        let mut parent: Vec<Option<usize>> = vec![None; k];
        let mut queue = VecDeque::from([source.0]);
        parent[source.0] = Some(source.0);
        while let Some(u) = queue.pop_front() {
            for v in 0..k {
                if parent[v].is_none() && residual[u * k + v].is_positive() {
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if parent[sink.0].is_none() {
            break;
        }
        // Bottleneck along the path, then augment.
        let mut bottleneck: Option<BigInt> = None;
        let mut v = sink.0;
        while v != source.0 {
            let u = parent[v].unwrap();
            let r = &residual[u * k + v];
            if bottleneck.as_ref().is_none_or(|b| r < b) {
                bottleneck = Some(r.clone());
            }
            v = u;
        }
        let delta = bottleneck.expect("path has at least one edge");
        let mut v = sink.0;
        while v != source.0 {
            let u = parent[v].unwrap();
            residual[u * k + v] -= &delta;
            residual[v * k + u] += &delta;
            v = u;
        }
        value += delta.to_biguint().expect("bottleneck is positive");
    }
    // Source side of the min cut: residual-reachable nodes.
    let mut reachable = vec![false; k];
    let mut stack = vec![source.0];
    reachable[source.0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..k {
            if !reachable[v] && residual[u * k + v].is_positive() {
                reachable[v] = true;
                stack.push(v);
            }
        }
    }
    let subset = (0..k).filter(|&i| reachable[i]).map(NodeId).collect();
    (value, subset)
}

/// Minimum cut via `2(K-1)` max-flow computations: every nonempty proper
/// subset either contains node 0 (then it separates 0 from some node
/// outside) or not (then it separates some inside node from 0), so flows
/// `0 -> t` and `t -> 0` for all `t != 0` cover every candidate cut.
pub fn cutset_bound_maxflow(network: &Network) -> Cut {
    let k = network.node_count();
    let pairs: Vec<(NodeId, NodeId)> = (1..k)
        .flat_map(|t| [(NodeId(0), NodeId(t)), (NodeId(t), NodeId(0))])
        .collect();
    let cuts = par::map_collect(pairs, 16, |(s, t)| min_cut(network, s, t));
    let mut best: Option<Cut> = None;
    for (value, subset) in cuts {
        if best.as_ref().is_none_or(|b| value < b.value) {
            let cut = Cut::new(network, subset);
            debug_assert_eq!(cut.value, value, "flow value must match cut capacity");
            best = Some(cut);
        }
    }
    best.expect("K >= 2 yields at least one source-sink pair")
}
