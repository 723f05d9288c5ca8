//! Minimum-cost spanning arborescence by the Chu-Liu/Edmonds contraction
//! algorithm, over exact rational edge costs. This is the pricing engine
//! for column generation: the LP duals land here as costs, so no epsilon
//! comparisons are allowed anywhere.
//!
//! Ties are broken by the smallest original edge id `from * K + to`, which
//! makes the returned tree deterministic.

use num::rational::BigRational;
use thiserror::Error;

use crate::arborescence::{Arborescence, Orientation};
use crate::network::{EdgeMap, Network, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EdmondsError {
    #[error("no spanning arborescence with this root exists on the support")]
    Infeasible,
    #[error("cost missing for support edge {0} -> {1}")]
    MissingCost(NodeId, NodeId),
}

/// Minimum total cost arborescence of the given root and orientation on
/// the network's support. `costs` must cover every support edge.
pub fn min_cost_arborescence(
    network: &Network,
    root: NodeId,
    orientation: Orientation,
    costs: &EdgeMap<BigRational>,
) -> Result<(Arborescence, BigRational), EdmondsError> {
    let k = network.node_count();
    // Dense current-cost matrix plus, per slot, the original edge it
    // stands for. For Orientation::In the graph is reversed up front and
    // the answer mapped back, so the core always builds an out-tree
    // (every non-root with exactly one incoming edge).
    let mut cost: Vec<Option<(BigRational, usize)>> = vec![None; k * k];
    for (from, to, _) in network.edges() {
        let c = costs
            .get(&(from, to))
            .ok_or(EdmondsError::MissingCost(from, to))?;
        let edge_id = from.0 * k + to.0;
        let (u, v) = match orientation {
            Orientation::Out => (from.0, to.0),
            Orientation::In => (to.0, from.0),
        };
        cost[u * k + v] = Some((c.clone(), edge_id));
    }
    let mut active = vec![true; k];
    let edges = solve(k, &mut cost, &mut active, root.0)?;
    debug_assert_eq!(edges.len(), k - 1);

    let mut total = BigRational::from_integer(0.into());
    let mut parent: Vec<Option<usize>> = vec![None; k];
    for edge_id in edges {
        let (from, to) = (NodeId(edge_id / k), NodeId(edge_id % k));
        total += costs
            .get(&(from, to))
            .expect("edge ids come from the cost map");
        match orientation {
            // Out-tree: the edge enters its tree child.
            Orientation::Out => parent[to.0] = Some(from.0),
            // In-tree: the edge leaves its tree child.
            Orientation::In => parent[from.0] = Some(to.0),
        }
    }
    let tree = Arborescence::new(root, orientation, parent)
        .expect("contraction always yields a spanning tree");
    Ok((tree, total))
}

/// Unit cost on every support edge; handy for seeding a column set.
pub fn unit_costs(network: &Network) -> EdgeMap<BigRational> {
    network
        .edges()
        .map(|(from, to, _)| ((from, to), BigRational::from_integer(1.into())))
        .collect()
}

/// Core recursion on the contracted graph. Returns the ORIGINAL edge ids
/// of a minimum out-arborescence, plus the parent map on current vertex
/// ids (used by the caller to locate the edge entering a contracted
/// cycle).
fn solve(
    k: usize,
    cost: &mut Vec<Option<(BigRational, usize)>>,
    active: &mut Vec<bool>,
    root: usize,
) -> Result<Vec<usize>, EdmondsError> {
    let (edges, _parent) = solve_inner(k, cost, active, root)?;
    Ok(edges)
}

type Slot = Option<(BigRational, usize)>;

fn solve_inner(
    k: usize,
    cost: &mut Vec<Slot>,
    active: &mut Vec<bool>,
    root: usize,
) -> Result<(Vec<usize>, Vec<Option<usize>>), EdmondsError> {
    // Cheapest incoming edge per active non-root vertex.
    let mut best_in: Vec<Option<usize>> = vec![None; k];
    for v in 0..k {
        if v == root || !active[v] {
            continue;
        }
        let mut best: Option<(usize, &(BigRational, usize))> = None;
        for u in 0..k {
            if u == v || !active[u] {
                continue;
            }
            if let Some(slot) = &cost[u * k + v] {
                let better = match best {
                    None => true,
                    Some((_, incumbent)) => (&slot.0, slot.1) < (&incumbent.0, incumbent.1),
                };
                if better {
                    best = Some((u, slot));
                }
            }
        }
        match best {
            Some((u, _)) => best_in[v] = Some(u),
            None => return Err(EdmondsError::Infeasible),
        }
    }

    let cycle = match find_cycle(&best_in) {
        None => {
            // Base case: the chosen edges already form an arborescence.
            let mut edges = Vec::new();
            for (v, &bu) in best_in.iter().enumerate() {
                if let Some(u) = bu {
                    edges.push(cost[u * k + v].as_ref().unwrap().1);
                }
            }
            return Ok((edges, best_in));
        }
        Some(c) => c,
    };

    let rep = cycle[0];
    let in_cycle = {
        let mut f = vec![false; k];
        for &v in &cycle {
            f[v] = true;
        }
        f
    };
    // Original edge ids chosen inside the cycle, keyed by head vertex.
    let cycle_edge_into: Vec<(usize, usize)> = cycle
        .iter()
        .map(|&v| {
            let u = best_in[v].unwrap();
            (v, cost[u * k + v].as_ref().unwrap().1)
        })
        .collect();

    for &v in &cycle[1..] {
        active[v] = false;
    }

    // Rewire edges across the cycle boundary onto the representative,
    // remembering which cycle vertex each composite slot really touches.
    let mut incoming_target: Vec<Option<usize>> = vec![None; k];
    for x in 0..k {
        if !active[x] || in_cycle[x] {
            continue;
        }
        let mut best_in_slot: Slot = None;
        let mut best_in_target = None;
        let mut best_out_slot: Slot = None;
        for &v in &cycle {
            if let Some((c, id)) = &cost[x * k + v] {
                let chosen_u = best_in[v].unwrap();
                let drop_cost = &cost[chosen_u * k + v].as_ref().unwrap().0;
                let adjusted = c - drop_cost;
                if best_in_slot
                    .as_ref()
                    .is_none_or(|(bc, bid)| (&adjusted, *id) < (bc, *bid))
                {
                    best_in_slot = Some((adjusted, *id));
                    best_in_target = Some(v);
                }
            }
            if let Some((c, id)) = &cost[v * k + x] {
                if best_out_slot
                    .as_ref()
                    .is_none_or(|(bc, bid)| (c, *id) < (bc, *bid))
                {
                    best_out_slot = Some((c.clone(), *id));
                }
            }
        }
        cost[x * k + rep] = best_in_slot;
        incoming_target[x] = best_in_target;
        cost[rep * k + x] = best_out_slot;
    }

    let (mut edges, mut parent) = solve_inner(k, cost, active, root)?;

    // Break the cycle where the contracted solution enters it.
    let entering = parent[rep].expect("a contracted cycle never contains the root");
    let kicked = incoming_target[entering].expect("entering edge was rewired at contraction");
    for (head, edge_id) in cycle_edge_into {
        if head != kicked {
            edges.push(edge_id);
        }
    }
    // Repair the parent map for the caller: cycle vertices hang off their
    // cycle predecessor except where the entering edge replaced one.
    for &v in &cycle {
        parent[v] = best_in[v];
        active[v] = true;
    }
    parent[kicked] = Some(entering);
    Ok((edges, parent))
}

/// First cycle in the chosen-parent functional graph, if any, scanning
/// from the smallest vertex.
fn find_cycle(best_in: &[Option<usize>]) -> Option<Vec<usize>> {
    let k = best_in.len();
    // 0 = unvisited, 1 = on current walk, 2 = done
    let mut state = vec![0u8; k];
    for start in 0..k {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut v = start;
        loop {
            if state[v] == 2 {
                break;
            }
            if state[v] == 1 {
                let pos = path.iter().position(|&p| p == v).unwrap();
                return Some(path[pos..].to_vec());
            }
            state[v] = 1;
            path.push(v);
            match best_in[v] {
                Some(u) => v = u,
                None => break,
            }
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}
