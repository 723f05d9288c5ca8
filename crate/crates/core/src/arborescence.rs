//! Spanning in-/out-arborescences over a network's positive-bandwidth
//! support, their exhaustive enumeration, an independent matrix-tree
//! counting oracle, and rooted MAC-BC columns (an in-tree plus an
//! out-tree at a shared root).

use std::fmt;

use num::{BigInt, BigUint, Integer, One, Signed, Zero};
use thiserror::Error;

use crate::network::{Network, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    /// Every non-root node has one outgoing tree edge; paths lead to the
    /// root. Supports Reduce.
    In,
    /// Every non-root node has one incoming tree edge; paths lead away
    /// from the root. Supports Broadcast.
    Out,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColumnError {
    #[error("mac tree is rooted at {0} but bc tree at {1}")]
    RootMismatch(NodeId, NodeId),
    #[error("tree orientation does not match its role")]
    WrongOrientation,
}

/// A spanning directed tree: a root plus a tree-parent map over the
/// non-root nodes. For [`Orientation::In`] the directed edge is
/// `node -> parent`; for [`Orientation::Out`] it is `parent -> node`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arborescence {
    root: NodeId,
    orientation: Orientation,
    parent: Vec<Option<usize>>,
}

impl Arborescence {
    /// Build from a parent map, checking that every chain of parent
    /// pointers reaches the root.
    pub fn new(
        root: NodeId,
        orientation: Orientation,
        parent: Vec<Option<usize>>,
    ) -> Option<Arborescence> {
        let k = parent.len();
        if root.0 >= k || parent[root.0].is_some() {
            return None;
        }
        for v in 0..k {
            if v != root.0 && parent[v].is_none_or(|p| p >= k) {
                return None;
            }
        }
        if !chains_reach_root(&parent, root.0) {
            return None;
        }
        Some(Arborescence {
            root,
            orientation,
            parent,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    /// Tree parent of a non-root node.
    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.0].map(NodeId)
    }

    pub fn parent_map(&self) -> &[Option<usize>] {
        &self.parent
    }

    /// Directed edges of the tree, following the orientation.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        let orientation = self.orientation;
        self.parent.iter().enumerate().filter_map(move |(v, p)| {
            p.map(|p| match orientation {
                Orientation::In => (NodeId(v), NodeId(p)),
                Orientation::Out => (NodeId(p), NodeId(v)),
            })
        })
    }

    /// Tree children of a node, ascending.
    pub fn children(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(move |(c, p)| (*p == Some(v.0)).then_some(NodeId(c)))
    }

    /// Number of tree edges on the path from `v` to the root.
    pub fn depth_of(&self, v: NodeId) -> usize {
        let mut depth = 0;
        let mut node = v.0;
        while let Some(p) = self.parent[node] {
            node = p;
            depth += 1;
        }
        depth
    }

    /// Largest depth over all nodes.
    pub fn height(&self) -> usize {
        (0..self.parent.len())
            .map(|v| self.depth_of(NodeId(v)))
            .max()
            .unwrap_or(0)
    }

    /// The same tree with every directed edge reversed, which swaps the
    /// orientation.
    pub fn reversed(&self) -> Arborescence {
        Arborescence {
            root: self.root,
            orientation: match self.orientation {
                Orientation::In => Orientation::Out,
                Orientation::Out => Orientation::In,
            },
            parent: self.parent.clone(),
        }
    }

    /// True if every tree edge lies on the network's support.
    pub fn fits(&self, network: &Network) -> bool {
        self.node_count() == network.node_count()
            && self.edges().all(|(a, b)| network.has_edge(a, b))
    }
}

fn chains_reach_root(parent: &[Option<usize>], root: usize) -> bool {
    let k = parent.len();
    for start in 0..k {
        let mut node = start;
        let mut steps = 0;
        while node != root {
            match parent[node] {
                Some(p) => node = p,
                None => return false,
            }
            steps += 1;
            if steps > k {
                return false;
            }
        }
    }
    true
}

/// All spanning arborescences of the given root and orientation on the
/// network's support, in ascending parent-map order. Complete and
/// duplicate-free; empty if none exists. Intended for small `K`: the
/// candidate space is the product of per-node support degrees.
pub fn enumerate(network: &Network, root: NodeId, orientation: Orientation) -> Vec<Arborescence> {
    let k = network.node_count();
    let non_root: Vec<usize> = (0..k).filter(|&v| v != root.0).collect();
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(non_root.len());
    for &v in &non_root {
        let cands: Vec<usize> = (0..k)
            .filter(|&p| {
                p != v
                    && match orientation {
                        Orientation::In => network.has_edge(NodeId(v), NodeId(p)),
                        Orientation::Out => network.has_edge(NodeId(p), NodeId(v)),
                    }
            })
            .collect();
        if cands.is_empty() {
            return Vec::new();
        }
        candidates.push(cands);
    }

    let mut result = Vec::new();
    let mut choice = vec![0usize; non_root.len()];
    loop {
        let mut parent: Vec<Option<usize>> = vec![None; k];
        for (slot, &v) in non_root.iter().enumerate() {
            parent[v] = Some(candidates[slot][choice[slot]]);
        }
        if chains_reach_root(&parent, root.0) {
            result.push(Arborescence {
                root,
                orientation,
                parent,
            });
        }
        // Advance the odometer, most significant digit first, so parent
        // maps come out in ascending lexicographic order.
        let mut slot = non_root.len();
        loop {
            if slot == 0 {
                return result;
            }
            slot -= 1;
            choice[slot] += 1;
            if choice[slot] < candidates[slot].len() {
                break;
            }
            choice[slot] = 0;
        }
    }
}

/// Number of spanning arborescences of the given root and orientation, by
/// an exact integer determinant of the reduced Laplacian of the support
/// digraph. Independent of [`enumerate`] and used to cross-check it.
pub fn count(network: &Network, root: NodeId, orientation: Orientation) -> BigUint {
    let k = network.node_count();
    // Support adjacency; bandwidth magnitude is irrelevant.
    let adj = |i: usize, j: usize| -> i8 {
        if network.has_edge(NodeId(i), NodeId(j)) {
            1
        } else {
            0
        }
    };
    // In-arborescences pair with the out-degree Laplacian, out-arborescences
    // with the in-degree Laplacian.
    let degree = |v: usize| -> i64 {
        (0..k)
            .map(|w| match orientation {
                Orientation::In => adj(v, w) as i64,
                Orientation::Out => adj(w, v) as i64,
            })
            .sum()
    };
    let others: Vec<usize> = (0..k).filter(|&v| v != root.0).collect();
    let n = others.len();
    let mut m: Vec<Vec<BigInt>> = vec![vec![BigInt::zero(); n]; n];
    for (a, &i) in others.iter().enumerate() {
        for (b, &j) in others.iter().enumerate() {
            m[a][b] = if a == b {
                BigInt::from(degree(i))
            } else {
                -BigInt::from(adj(i, j))
            };
        }
    }
    let det = bareiss_determinant(m);
    assert!(
        !det.is_negative(),
        "arborescence count is a nonnegative determinant"
    );
    det.to_biguint().unwrap()
}

/// Fraction-free Gaussian elimination; exact for integer matrices.
fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for col in 0..n - 1 {
        if m[col][col].is_zero() {
            match (col + 1..n).find(|&r| !m[r][col].is_zero()) {
                Some(r) => {
                    m.swap(col, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for r in col + 1..n {
            for c in col + 1..n {
                let num = &m[r][c] * &m[col][col] - &m[r][col] * &m[col][c];
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division is exact");
                m[r][c] = q;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[col][col].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

/// One rooted MAC-BC column: an in-tree and an out-tree at a common root.
/// `beta(i, j)` counts how many of the two trees use link `(i, j)`, so the
/// entries are in `{0, 1, 2}` and sum to `2(K-1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MacBcColumn {
    root: NodeId,
    mac: Arborescence,
    bc: Arborescence,
    beta: Vec<u8>,
}

impl MacBcColumn {
    pub fn new(mac: Arborescence, bc: Arborescence) -> Result<MacBcColumn, ColumnError> {
        if mac.root() != bc.root() {
            return Err(ColumnError::RootMismatch(mac.root(), bc.root()));
        }
        if mac.orientation() != Orientation::In || bc.orientation() != Orientation::Out {
            return Err(ColumnError::WrongOrientation);
        }
        let k = mac.node_count();
        let mut beta = vec![0u8; k * k];
        for (a, b) in mac.edges().chain(bc.edges()) {
            beta[a.0 * k + b.0] += 1;
        }
        debug_assert_eq!(beta.iter().map(|&x| x as usize).sum::<usize>(), 2 * (k - 1));
        Ok(MacBcColumn {
            root: mac.root(),
            mac,
            bc,
            beta,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn mac(&self) -> &Arborescence {
        &self.mac
    }

    pub fn bc(&self) -> &Arborescence {
        &self.bc
    }

    pub fn node_count(&self) -> usize {
        self.mac.node_count()
    }

    pub fn beta(&self, from: NodeId, to: NodeId) -> u8 {
        self.beta[from.0 * self.node_count() + to.0]
    }

    pub fn beta_matrix(&self) -> &[u8] {
        &self.beta
    }

    /// Links used by at least one of the two trees, with multiplicity.
    pub fn used_edges(&self) -> impl Iterator<Item = (NodeId, NodeId, u8)> + '_ {
        let k = self.node_count();
        self.beta.iter().enumerate().filter_map(move |(idx, &c)| {
            if c > 0 {
                Some((NodeId(idx / k), NodeId(idx % k), c))
            } else {
                None
            }
        })
    }

    /// The column viewed as a network of its own.
    pub fn as_network(&self) -> Network {
        let k = self.node_count();
        let beta = self.beta.iter().map(|&c| BigUint::from(c)).collect();
        Network::from_matrix(k, beta)
    }
}

impl fmt::Display for MacBcColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "root={} mac=", self.root)?;
        write_parent_list(f, self.mac.parent_map())?;
        write!(f, " bc=")?;
        write_parent_list(f, self.bc.parent_map())
    }
}

pub(crate) fn write_parent_list(
    f: &mut fmt::Formatter<'_>,
    parent: &[Option<usize>],
) -> fmt::Result {
    for (v, p) in parent.iter().enumerate() {
        if v > 0 {
            write!(f, ",")?;
        }
        match p {
            Some(p) => write!(f, "{p}")?,
            None => write!(f, "-")?,
        }
    }
    Ok(())
}

/// Stream of all rooted MAC-BC columns on the network's support, ordered
/// by root, then mac parent map, then bc parent map. Lazy per root; use an
/// iterator cap for anything beyond small `K` (there are `K^(2K-3)` columns
/// on complete support).
pub fn columns(network: &Network) -> impl Iterator<Item = MacBcColumn> + '_ {
    let k = network.node_count();
    (0..k).map(NodeId).flat_map(move |root| {
        let macs = enumerate(network, root, Orientation::In);
        let bcs = enumerate(network, root, Orientation::Out);
        macs.into_iter().flat_map(move |mac| {
            bcs.clone().into_iter().map(move |bc| {
                MacBcColumn::new(mac.clone(), bc).expect("same root by construction")
            })
        })
    })
}
