//! Parallel-link networks: `K` nodes and a dense `K x K` matrix of
//! nonnegative integer link bandwidths (symbols per network use).
//!
//! Networks are immutable after construction and safe to share across
//! threads. Bandwidths are arbitrary-precision integers so that weighted
//! combinations and LP arithmetic never overflow. The module also owns the
//! line-oriented network file format used by the CLI.

use std::collections::BTreeMap;
use std::fmt;

use num::rational::BigRational;
use num::{BigInt, BigUint, Integer, One, Signed, Zero};
use thiserror::Error;

/// A node index in `[0, K)`. Internal ids are 0-based everywhere,
/// including the file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("a network needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("node id {id} out of range for K={k}")]
    NodeOutOfRange { id: usize, k: usize },
    #[error("self-loop {0} -> {0} is not allowed")]
    SelfLoop(usize),
    #[error("duplicate link {from} -> {to}")]
    DuplicateEdge { from: usize, to: usize },
    #[error("networks being combined have different node counts ({0} vs {1})")]
    MismatchedNodeCount(usize, usize),
    #[error("negative weight in combination")]
    NegativeWeight,
    #[error("combine needs one weight per network ({networks} networks, {weights} weights)")]
    WeightCountMismatch { networks: usize, weights: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A directed parallel-link network: `K` nodes and integer bandwidths
/// `beta(i, j)` with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    k: usize,
    beta: Vec<BigUint>,
}

impl Network {
    /// Build a network from an explicit link list. Unlisted pairs get
    /// bandwidth zero; duplicates, self-loops and out-of-range ids are
    /// rejected.
    pub fn from_edges(
        k: usize,
        edges: &[(NodeId, NodeId, BigUint)],
    ) -> Result<Network, NetworkError> {
        if k < 2 {
            return Err(NetworkError::TooFewNodes(k));
        }
        let mut beta = vec![BigUint::zero(); k * k];
        let mut seen = vec![false; k * k];
        for (from, to, bw) in edges {
            let (i, j) = (from.0, to.0);
            if i >= k {
                return Err(NetworkError::NodeOutOfRange { id: i, k });
            }
            if j >= k {
                return Err(NetworkError::NodeOutOfRange { id: j, k });
            }
            if i == j {
                return Err(NetworkError::SelfLoop(i));
            }
            if seen[i * k + j] {
                return Err(NetworkError::DuplicateEdge { from: i, to: j });
            }
            seen[i * k + j] = true;
            beta[i * k + j] = bw.clone();
        }
        Ok(Network { k, beta })
    }

    /// Convenience constructor over `u64` bandwidths.
    pub fn from_edge_list(
        k: usize,
        edges: &[(usize, usize, u64)],
    ) -> Result<Network, NetworkError> {
        let converted: Vec<(NodeId, NodeId, BigUint)> = edges
            .iter()
            .map(|&(i, j, b)| (NodeId(i), NodeId(j), BigUint::from(b)))
            .collect();
        Network::from_edges(k, &converted)
    }

    pub(crate) fn from_matrix(k: usize, beta: Vec<BigUint>) -> Network {
        debug_assert_eq!(beta.len(), k * k);
        debug_assert!((0..k).all(|i| beta[i * k + i].is_zero()));
        Network { k, beta }
    }

    pub fn node_count(&self) -> usize {
        self.k
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.k).map(NodeId)
    }

    pub fn beta(&self, from: NodeId, to: NodeId) -> &BigUint {
        &self.beta[from.0 * self.k + to.0]
    }

    /// True if link `(from, to)` has positive bandwidth.
    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        !self.beta(from, to).is_zero()
    }

    /// Positive-bandwidth links in (from, to) order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, &BigUint)> {
        (0..self.k).flat_map(move |i| {
            (0..self.k).filter_map(move |j| {
                let b = &self.beta[i * self.k + j];
                if b.is_zero() {
                    None
                } else {
                    Some((NodeId(i), NodeId(j), b))
                }
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Sum of all bandwidth entries.
    pub fn total_bandwidth(&self) -> BigUint {
        self.beta.iter().sum()
    }

    pub fn out_neighbors(&self, from: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.k)
            .map(NodeId)
            .filter(move |&j| self.has_edge(from, j))
    }

    pub fn in_neighbors(&self, to: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.k)
            .map(NodeId)
            .filter(move |&i| self.has_edge(i, to))
    }

    /// Network with every link reversed.
    pub fn reversed(&self) -> Network {
        let mut beta = vec![BigUint::zero(); self.k * self.k];
        for i in 0..self.k {
            for j in 0..self.k {
                beta[j * self.k + i] = self.beta[i * self.k + j].clone();
            }
        }
        Network { k: self.k, beta }
    }

    /// True if every node can reach every other node along
    /// positive-bandwidth links.
    pub fn is_strongly_connected(&self) -> bool {
        self.reaches_all(NodeId(0), false) && self.reaches_all(NodeId(0), true)
    }

    fn reaches_all(&self, start: NodeId, reverse: bool) -> bool {
        let mut seen = vec![false; self.k];
        let mut stack = vec![start.0];
        seen[start.0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..self.k {
                let present = if reverse {
                    self.has_edge(NodeId(v), NodeId(u))
                } else {
                    self.has_edge(NodeId(u), NodeId(v))
                };
                if present && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Entrywise scaling by a positive integer.
    pub fn scaled(&self, factor: &BigUint) -> Network {
        Network {
            k: self.k,
            beta: self.beta.iter().map(|b| b * factor).collect(),
        }
    }

    /// Serialize to the network file format. The inverse of [`parse`].
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("K {}\n", self.k));
        for (from, to, b) in self.edges() {
            out.push_str(&format!("{} {} {}\n", from.0, to.0, b));
        }
        out
    }
}

/// Parse the network file format: first non-comment line `K <n>`, then one
/// `<from> <to> <beta>` line per positive link. `#` starts a comment.
pub fn parse(text: &str) -> Result<Network, NetworkError> {
    let mut k: Option<usize> = None;
    let mut edges: Vec<(NodeId, NodeId, BigUint)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match k {
            None => {
                if fields.len() != 2 || fields[0] != "K" {
                    return Err(NetworkError::Parse {
                        line: line_no,
                        message: format!("expected `K <node count>`, got `{line}`"),
                    });
                }
                let parsed = fields[1]
                    .parse::<usize>()
                    .map_err(|e| NetworkError::Parse {
                        line: line_no,
                        message: format!("bad node count: {e}"),
                    })?;
                k = Some(parsed);
            }
            Some(_) => {
                if fields.len() != 3 {
                    return Err(NetworkError::Parse {
                        line: line_no,
                        message: format!("expected `<from> <to> <beta>`, got `{line}`"),
                    });
                }
                let from = fields[0]
                    .parse::<usize>()
                    .map_err(|e| NetworkError::Parse {
                        line: line_no,
                        message: format!("bad from-node: {e}"),
                    })?;
                let to = fields[1]
                    .parse::<usize>()
                    .map_err(|e| NetworkError::Parse {
                        line: line_no,
                        message: format!("bad to-node: {e}"),
                    })?;
                let bw = fields[2]
                    .parse::<BigUint>()
                    .map_err(|e| NetworkError::Parse {
                        line: line_no,
                        message: format!("bad bandwidth: {e}"),
                    })?;
                edges.push((NodeId(from), NodeId(to), bw));
            }
        }
    }
    let k = k.ok_or(NetworkError::Parse {
        line: 0,
        message: "missing `K <node count>` header".into(),
    })?;
    Network::from_edges(k, &edges)
}

/// A network whose bandwidths are exact rationals. Produced by [`combine`]
/// for analysis; the file format stores integer networks only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalNetwork {
    k: usize,
    beta: Vec<BigRational>,
}

impl RationalNetwork {
    pub fn node_count(&self) -> usize {
        self.k
    }

    pub fn beta(&self, from: NodeId, to: NodeId) -> &BigRational {
        &self.beta[from.0 * self.k + to.0]
    }

    pub fn total_bandwidth(&self) -> BigRational {
        self.beta.iter().sum()
    }

    /// Clears denominators: returns the integer network `d * self` along
    /// with the common denominator `d`.
    pub fn scaled_integer(&self) -> (Network, BigUint) {
        let mut denom = BigInt::one();
        for b in &self.beta {
            denom = denom.lcm(b.denom());
        }
        let beta = self
            .beta
            .iter()
            .map(|b| {
                let scaled = b * BigRational::from_integer(denom.clone());
                debug_assert!(scaled.is_integer());
                scaled
                    .to_integer()
                    .to_biguint()
                    .expect("entries are nonnegative")
            })
            .collect();
        (
            Network { k: self.k, beta },
            denom.to_biguint().expect("lcm of positives is positive"),
        )
    }

    /// The exact integer network, if every entry is an integer.
    pub fn to_network(&self) -> Option<Network> {
        if self.beta.iter().all(|b| b.is_integer()) {
            let beta = self
                .beta
                .iter()
                .map(|b| b.to_integer().to_biguint())
                .collect::<Option<Vec<_>>>()?;
            Some(Network { k: self.k, beta })
        } else {
            None
        }
    }
}

impl From<&Network> for RationalNetwork {
    fn from(n: &Network) -> RationalNetwork {
        RationalNetwork {
            k: n.k,
            beta: n
                .beta
                .iter()
                .map(|b| BigRational::from_integer(BigInt::from(b.clone())))
                .collect(),
        }
    }
}

/// Entrywise weighted sum of networks with nonnegative rational weights.
pub fn combine(
    networks: &[Network],
    weights: &[BigRational],
) -> Result<RationalNetwork, NetworkError> {
    if networks.len() != weights.len() {
        return Err(NetworkError::WeightCountMismatch {
            networks: networks.len(),
            weights: weights.len(),
        });
    }
    if weights.iter().any(|w| w.is_negative()) {
        return Err(NetworkError::NegativeWeight);
    }
    let k = networks.first().map(|n| n.k).unwrap_or(0);
    for n in networks {
        if n.k != k {
            return Err(NetworkError::MismatchedNodeCount(k, n.k));
        }
    }
    let mut beta = vec![BigRational::zero(); k * k];
    for (n, w) in networks.iter().zip(weights) {
        for (cell, b) in beta.iter_mut().zip(&n.beta) {
            *cell += w * BigRational::from_integer(BigInt::from(b.clone()));
        }
    }
    Ok(RationalNetwork { k, beta })
}

/// Map of per-edge values keyed by (from, to), used for costs and duals.
pub type EdgeMap<T> = BTreeMap<(NodeId, NodeId), T>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn two_node_unit_network() {
        let n = Network::from_edge_list(2, &[(0, 1, 1), (1, 0, 1)]).unwrap();
        assert_eq!(n.node_count(), 2);
        assert_eq!(n.beta(NodeId(0), NodeId(1)), &BigUint::from(1u32));
        assert_eq!(n.total_bandwidth(), BigUint::from(2u32));
    }

    #[test]
    fn three_node_cyclic_bandwidths() {
        let n = Network::from_edge_list(3, &[(0, 1, 2), (1, 2, 3), (2, 0, 4)]).unwrap();
        assert_eq!(n.beta(NodeId(0), NodeId(1)), &BigUint::from(2u32));
        assert_eq!(n.beta(NodeId(1), NodeId(2)), &BigUint::from(3u32));
        assert_eq!(n.beta(NodeId(2), NodeId(0)), &BigUint::from(4u32));
        assert!(!n.has_edge(NodeId(1), NodeId(0)));
    }

    #[test]
    fn rejects_bad_edge_lists() {
        assert_eq!(
            Network::from_edge_list(3, &[(0, 0, 1)]).unwrap_err(),
            NetworkError::SelfLoop(0)
        );
        assert_eq!(
            Network::from_edge_list(3, &[(0, 3, 1)]).unwrap_err(),
            NetworkError::NodeOutOfRange { id: 3, k: 3 }
        );
        assert_eq!(
            Network::from_edge_list(3, &[(0, 1, 1), (0, 1, 2)]).unwrap_err(),
            NetworkError::DuplicateEdge { from: 0, to: 1 }
        );
        assert_eq!(
            Network::from_edge_list(1, &[]).unwrap_err(),
            NetworkError::TooFewNodes(1)
        );
    }

    #[test]
    fn combine_identity_and_zero_weight() {
        let n1 = topology::complete(3).unwrap();
        let n2 = topology::cycle(3).unwrap();
        let id = combine(std::slice::from_ref(&n1), &[rat(1, 1)]).unwrap();
        assert_eq!(id.to_network().unwrap(), n1);
        let z = combine(&[n1.clone(), n2], &[rat(1, 1), rat(0, 1)]).unwrap();
        assert_eq!(z.to_network().unwrap(), n1);
    }

    #[test]
    fn combine_rejects_mismatched_k() {
        let n1 = topology::complete(3).unwrap();
        let n2 = topology::complete(4).unwrap();
        assert!(matches!(
            combine(&[n1, n2], &[rat(1, 1), rat(1, 1)]).unwrap_err(),
            NetworkError::MismatchedNodeCount(3, 4)
        ));
    }

    #[test]
    fn combine_fractional_then_scale() {
        let n = topology::complete(3).unwrap();
        let half = combine(std::slice::from_ref(&n), &[rat(1, 2)]).unwrap();
        assert!(half.to_network().is_none());
        let (scaled, denom) = half.scaled_integer();
        assert_eq!(denom, BigUint::from(2u32));
        assert_eq!(scaled, n);
    }

    #[test]
    fn strongly_connected_detection() {
        assert!(topology::cycle(4).unwrap().is_strongly_connected());
        let one_way = Network::from_edge_list(3, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        assert!(!one_way.is_strongly_connected());
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(matches!(parse(""), Err(NetworkError::Parse { .. })));
        assert!(matches!(
            parse("K 3\n0 1\n"),
            Err(NetworkError::Parse { .. })
        ));
        assert!(matches!(
            parse("K 3\n0 0 1\n"),
            Err(NetworkError::SelfLoop(0))
        ));
    }

    #[test]
    fn parse_accepts_comments_and_blank_lines() {
        let n = parse("# a comment\n\nK 2 # trailing\n0 1 3\n").unwrap();
        assert_eq!(n.beta(NodeId(0), NodeId(1)), &BigUint::from(3u32));
    }

    proptest! {
        #[test]
        fn file_round_trip(k in 2usize..8, seed in any::<u64>()) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let mut edges = Vec::new();
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        let b = rng.next_below(5);
                        if b > 0 {
                            edges.push((i, j, b));
                        }
                    }
                }
            }
            let n = Network::from_edge_list(k, &edges).unwrap();
            let round = parse(&n.to_file_string()).unwrap();
            prop_assert_eq!(round, n);
        }
    }
}
