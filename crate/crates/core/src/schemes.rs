//! Closed-form packings for the studied topologies, each certified
//! against the packing LP cap, plus the cut-edge machinery that yields
//! exact rates for superpositions of single-tree-pair networks. Also owns
//! the packing text format.

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};
use thiserror::Error;

use crate::arborescence::{self, Arborescence, MacBcColumn, Orientation};
use crate::lp::Packing;
use crate::network::{combine, Network, NodeId, RationalNetwork};
use crate::par;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemeError {
    #[error("node count {0} too small for this packing (need at least {1})")]
    TooFewNodes(usize, usize),
    #[error("hypercube packings are built for dimensions 1 through 4, got {0}")]
    DimensionOutOfRange(u32),
    #[error("3-node cyclic bandwidths must be positive")]
    NonPositiveBandwidth,
    #[error("{0} -> {1} is not a hypercube link")]
    NotAHypercubeEdge(NodeId, NodeId),
    #[error("component {0} is not a 1-MAC-BC network for the given cut-edge")]
    NotOneMacBc(usize),
    #[error("superposition failed verification: {0}")]
    Verification(String),
    #[error("packing parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
}

fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

fn star_tree(k: usize, root: usize, orientation: Orientation) -> Arborescence {
    let parent = (0..k)
        .map(|v| if v == root { None } else { Some(root) })
        .collect();
    Arborescence::new(NodeId(root), orientation, parent).expect("star maps are trees")
}

/// One column per root: everyone sends straight to the root, which sends
/// straight back. Each weight is 1/2, so the rate is `K/2`, which meets
/// the packing cap of the uniform complete network.
pub fn pack_complete(k: usize) -> Result<Packing, SchemeError> {
    if k < 2 {
        return Err(SchemeError::TooFewNodes(k, 2));
    }
    let mut columns = Vec::with_capacity(k);
    for root in 0..k {
        let mac = star_tree(k, root, Orientation::In);
        let bc = star_tree(k, root, Orientation::Out);
        columns.push(MacBcColumn::new(mac, bc).expect("same root"));
    }
    let weights = vec![rational(1, 2); k];
    Ok(Packing::new(columns, weights))
}

/// The cycle column rooted at `root`: the in-path enters the root along
/// the cycle and the out-path leaves it, together covering the two cycle
/// edges at the root once and every other cycle edge twice.
fn cycle_column(k: usize, root: usize, reverse: bool) -> MacBcColumn {
    let succ = |v: usize| {
        if reverse {
            (v + k - 1) % k
        } else {
            (v + 1) % k
        }
    };
    let pred = |v: usize| {
        if reverse {
            (v + 1) % k
        } else {
            (v + k - 1) % k
        }
    };
    let mac_parent = (0..k)
        .map(|v| if v == root { None } else { Some(succ(v)) })
        .collect();
    let bc_parent = (0..k)
        .map(|v| if v == root { None } else { Some(pred(v)) })
        .collect();
    let mac = Arborescence::new(NodeId(root), Orientation::In, mac_parent)
        .expect("cycle paths are trees");
    let bc = Arborescence::new(NodeId(root), Orientation::Out, bc_parent)
        .expect("cycle paths are trees");
    MacBcColumn::new(mac, bc).expect("same root")
}

/// One column per root with weight `1/(2(K-1))`; rate `K/(2(K-1))`,
/// meeting the cap of the uniform cyclic network.
pub fn pack_cycle(k: usize) -> Result<Packing, SchemeError> {
    if k < 3 {
        return Err(SchemeError::TooFewNodes(k, 3));
    }
    let columns = (0..k).map(|root| cycle_column(k, root, false)).collect();
    let weights = vec![rational(1, 2 * (k as i64 - 1)); k];
    Ok(Packing::new(columns, weights))
}

/// The cycle packing applied to each orientation; rate `K/(K-1)`.
pub fn pack_ring(k: usize) -> Result<Packing, SchemeError> {
    if k < 3 {
        return Err(SchemeError::TooFewNodes(k, 3));
    }
    let mut columns: Vec<MacBcColumn> = (0..k).map(|root| cycle_column(k, root, false)).collect();
    columns.extend((0..k).map(|root| cycle_column(k, root, true)));
    let weights = vec![rational(1, 2 * (k as i64 - 1)); 2 * k];
    Ok(Packing::new(columns, weights))
}

/// Optimal packing of the 3-node cyclic network with bandwidths
/// `(a, b, c)`. The three candidate columns put usage `(2,1,1)`, `(1,2,1)`
/// and `(1,1,2)` on the cycle edges; the weights depend on whether the
/// smallest bandwidth stays at or below a quarter of the total. The rate
/// is `min(a,b,c)` in the first case and `(a+b+c)/4` in the second.
pub fn pack_three_cycle(a: u64, b: u64, c: u64) -> Result<Packing, SchemeError> {
    if a == 0 || b == 0 || c == 0 {
        return Err(SchemeError::NonPositiveBandwidth);
    }
    let bands = [a as i64, b as i64, c as i64];
    // Rotate the labels so the smallest bandwidth leads; the weight
    // formulas assume exactly that.
    let shift = (0..3).min_by_key(|&i| bands[i]).unwrap();
    let (ra, rb, rc) = (bands[shift], bands[(shift + 1) % 3], bands[(shift + 2) % 3]);
    let total = ra + rb + rc;
    let rotated: [BigRational; 3] = if 4 * ra <= total {
        if rc >= 2 * ra {
            [BigRational::zero(), BigRational::zero(), rational(ra, 1)]
        } else {
            [
                BigRational::zero(),
                rational(2 * ra - rc, 1),
                rational(rc - ra, 1),
            ]
        }
    } else {
        [
            rational(3 * ra - rb - rc, 4),
            rational(3 * rb - ra - rc, 4),
            rational(3 * rc - ra - rb, 4),
        ]
    };
    // Rotate back: the column whose doubled edge sits at cycle position p
    // is rooted at node (p + 2) mod 3.
    let mut weights = vec![BigRational::zero(); 3];
    for (q, w) in rotated.into_iter().enumerate() {
        weights[(q + shift) % 3] = w;
    }
    let columns = (0..3)
        .map(|p| cycle_column(3, (p + 2) % 3, false))
        .collect();
    Ok(Packing::new(columns, weights))
}

fn factorial(n: u64) -> u64 {
    (1..=n).product::<u64>().max(1)
}

/// Lexicographic permutations of `0..n`.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, used: &mut Vec<bool>, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                current.push(v);
                rec(n, used, current, out);
                current.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(n, &mut vec![false; n], &mut Vec::new(), &mut out);
    out
}

/// The hypercube tree of one `(root, permutation)` pair: a node hangs off
/// the neighbor obtained by flipping its highest differing bit position in
/// permutation order, which always lies in an earlier level. The levels
/// double in size per step and partition the node set.
fn hypercube_tree(dim: u32, root: usize, perm: &[usize]) -> Vec<Option<usize>> {
    let k = 1usize << dim;
    (0..k)
        .map(|x| {
            let top = (0..perm.len())
                .rev()
                .find(|&i| (x ^ root) >> perm[i] & 1 == 1)?;
            Some(x ^ (1 << perm[top]))
        })
        .collect()
}

/// One column per `(root, permutation)` pair, all weighted
/// `1 / (2 (2^U - 1) (U-1)!)`; rate `2^(U-1) U / (2^U - 1)`, meeting the
/// cap of the uniform hypercube.
pub fn pack_hypercube(dim: u32) -> Result<Packing, SchemeError> {
    if !(1..=4).contains(&dim) {
        return Err(SchemeError::DimensionOutOfRange(dim));
    }
    let k = 1usize << dim;
    let perms = permutations(dim as usize);
    let pairs: Vec<(usize, Vec<usize>)> = (0..k)
        .flat_map(|root| perms.iter().map(move |p| (root, p.clone())))
        .collect();
    let columns = par::map_collect(pairs, 64, |(root, perm)| {
        let parent = hypercube_tree(dim, root, &perm);
        let mac = Arborescence::new(NodeId(root), Orientation::In, parent.clone())
            .expect("hypercube levels form a tree");
        let bc = Arborescence::new(NodeId(root), Orientation::Out, parent)
            .expect("hypercube levels form a tree");
        MacBcColumn::new(mac, bc).expect("same root")
    });
    let denom = 2 * ((1i64 << dim) - 1) * factorial(dim as u64 - 1) as i64;
    let weights = vec![rational(1, denom); columns.len()];
    Ok(Packing::new(columns, weights))
}

/// Total multiplicity of one directed hypercube link across all
/// `2^U * U!` generated columns, by direct scan. Every link reports
/// `2 (2^U - 1) (U-1)!`.
pub fn hypercube_edge_count(dim: u32, from: NodeId, to: NodeId) -> Result<u64, SchemeError> {
    let k = 1usize << dim;
    if from.0 >= k || to.0 >= k || (from.0 ^ to.0).count_ones() != 1 {
        return Err(SchemeError::NotAHypercubeEdge(from, to));
    }
    let packing = pack_hypercube(dim)?;
    Ok(packing
        .columns()
        .iter()
        .map(|c| c.beta(from, to) as u64)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutEdgeKind {
    /// The sole support edge entering its head.
    OnlyIn,
    /// The sole support edge leaving its tail.
    OnlyOut,
}

/// A link that alone crosses some cut of a column's support, which pins
/// the cut-set bound of any network built on that support to the link's
/// bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: CutEdgeKind,
}

/// In-degree and out-degree of every node over a column's support.
fn support_degrees(column: &MacBcColumn) -> (Vec<usize>, Vec<usize>) {
    let k = column.node_count();
    let mut indeg = vec![0usize; k];
    let mut outdeg = vec![0usize; k];
    for (from, to, _) in column.used_edges() {
        outdeg[from.0] += 1;
        indeg[to.0] += 1;
    }
    (indeg, outdeg)
}

/// An edge of the column's support that is the only one entering its head
/// (preferred, smallest head first) or the only one leaving its tail
/// (smallest tail). A column has at most `2(K-1)` support edges over `K`
/// nodes, so a degree-1 node always exists by pigeonhole.
pub fn find_cut_edge(column: &MacBcColumn) -> CutEdge {
    let k = column.node_count();
    let (indeg, outdeg) = support_degrees(column);
    for head in 0..k {
        if indeg[head] == 1 {
            let from = (0..k)
                .map(NodeId)
                .find(|&i| column.beta(i, NodeId(head)) > 0)
                .expect("in-degree 1 means one such edge");
            return CutEdge {
                from,
                to: NodeId(head),
                kind: CutEdgeKind::OnlyIn,
            };
        }
    }
    for tail in 0..k {
        if outdeg[tail] == 1 {
            let to = (0..k)
                .map(NodeId)
                .find(|&j| column.beta(NodeId(tail), j) > 0)
                .expect("out-degree 1 means one such edge");
            return CutEdge {
                from: NodeId(tail),
                to,
                kind: CutEdgeKind::OnlyOut,
            };
        }
    }
    unreachable!("a MAC-BC column's average support degree is below 2");
}

/// Checks the degree condition of a cut-edge against a network's support.
fn cut_edge_holds(network: &Network, cut_edge: &CutEdge) -> bool {
    if !network.has_edge(cut_edge.from, cut_edge.to) {
        return false;
    }
    match cut_edge.kind {
        CutEdgeKind::OnlyIn => network.in_neighbors(cut_edge.to).count() == 1,
        CutEdgeKind::OnlyOut => network.out_neighbors(cut_edge.from).count() == 1,
    }
}

/// A witness column showing the network is a 1-MAC-BC network for the
/// given cut-edge: the supports coincide, the bandwidths dominate the
/// column entrywise, and the cut-edge keeps unit bandwidth. Searches the
/// columns of the support exhaustively; a qualifying support has at most
/// `2(K-1)` edges, so the search stays small.
pub fn is_one_mac_bc(network: &Network, cut_edge: &CutEdge) -> Option<MacBcColumn> {
    let k = network.node_count();
    if network.edge_count() > 2 * (k - 1) {
        return None;
    }
    if !network.beta(cut_edge.from, cut_edge.to).is_one() {
        return None;
    }
    if !cut_edge_holds(network, cut_edge) {
        return None;
    }
    arborescence::columns(network).find(|column| {
        // Support equality plus entrywise dominance. Column edges lie on
        // the support by construction, so covering every support edge
        // gives equality.
        network.edges().all(|(from, to, beta)| {
            let used = column.beta(from, to);
            used >= 1 && BigInt::from(used) <= BigInt::from(beta.clone())
        })
    })
}

/// Exact rate of a nonnegative superposition of 1-MAC-BC networks that
/// share a cut-edge: the combined network's rate equals the total weight,
/// with the shared cut-edge pinning the upper bound and the witness
/// columns packing to the same value.
pub fn superposition_rate(
    components: &[(Network, BigRational)],
    cut_edge: &CutEdge,
) -> Result<(RationalNetwork, BigRational), SchemeError> {
    let mut witnesses = Vec::with_capacity(components.len());
    for (index, (network, _)) in components.iter().enumerate() {
        let witness = is_one_mac_bc(network, cut_edge).ok_or(SchemeError::NotOneMacBc(index))?;
        witnesses.push(witness);
    }
    let networks: Vec<Network> = components.iter().map(|(n, _)| n.clone()).collect();
    let weights: Vec<BigRational> = components.iter().map(|(_, w)| w.clone()).collect();
    let combined = combine(&networks, &weights)?;
    let rate: BigRational = weights.iter().cloned().sum();

    // The cut singled out by the cut-edge must evaluate to exactly the
    // total weight, which caps the rate from above.
    let k = combined.node_count();
    let cut_value: BigRational = match cut_edge.kind {
        CutEdgeKind::OnlyIn => (0..k)
            .map(|i| combined.beta(NodeId(i), cut_edge.to).clone())
            .sum(),
        CutEdgeKind::OnlyOut => (0..k)
            .map(|j| combined.beta(cut_edge.from, NodeId(j)).clone())
            .sum(),
    };
    if cut_value != rate {
        return Err(SchemeError::Verification(format!(
            "cut-edge cut evaluates to {cut_value}, expected {rate}"
        )));
    }
    // The witness columns at the component weights must fit the combined
    // bandwidths, which achieves the same value from below.
    let packing = Packing::new(witnesses, weights);
    if let Err(v) = packing.check_feasible_rational(&combined) {
        return Err(SchemeError::Verification(v.to_string()));
    }
    Ok((combined, rate))
}

/// Serialize a packing: one line per column,
/// `root=<r> mac=<parents> bc=<parents> weight=<p>/<q>`, where the parent
/// lists are comma-separated with `-` marking the root.
pub fn write_packing(packing: &Packing) -> String {
    let mut out = String::new();
    for (column, weight) in packing.iter() {
        out.push_str(&format!(
            "{} weight={}/{}\n",
            column,
            weight.numer(),
            weight.denom()
        ));
    }
    out
}

/// Parse the packing format written by [`write_packing`]. `#` starts a
/// comment.
pub fn parse_packing(text: &str) -> Result<Packing, SchemeError> {
    let mut columns = Vec::new();
    let mut weights = Vec::new();
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
        let mut root = None;
        let mut mac = None;
        let mut bc = None;
        let mut weight = None;
        for field in line.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| SchemeError::Parse {
                line: line_no,
                message: format!("expected key=value, got `{field}`"),
            })?;
            match key {
                "root" => {
                    root = Some(value.parse::<usize>().map_err(|e| SchemeError::Parse {
                        line: line_no,
                        message: format!("bad root: {e}"),
                    })?)
                }
                "mac" => mac = Some(parse_parent_list(value, line_no)?),
                "bc" => bc = Some(parse_parent_list(value, line_no)?),
                "weight" => weight = Some(parse_weight(value, line_no)?),
                other => {
                    return Err(SchemeError::Parse {
                        line: line_no,
                        message: format!("unknown field `{other}`"),
                    })
                }
            }
        }
        let (Some(root), Some(mac), Some(bc), Some(weight)) = (root, mac, bc, weight) else {
            return Err(SchemeError::Parse {
                line: line_no,
                message: "need root=, mac=, bc= and weight= fields".into(),
            });
        };
        let mac = Arborescence::new(NodeId(root), Orientation::In, mac).ok_or_else(|| {
            SchemeError::Parse {
                line: line_no,
                message: "mac parents do not form a tree onto the root".into(),
            }
        })?;
        let bc = Arborescence::new(NodeId(root), Orientation::Out, bc).ok_or_else(|| {
            SchemeError::Parse {
                line: line_no,
                message: "bc parents do not form a tree onto the root".into(),
            }
        })?;
        let column = MacBcColumn::new(mac, bc).map_err(|e| SchemeError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        columns.push(column);
        weights.push(weight);
    }
    Ok(Packing::new(columns, weights))
}

fn parse_parent_list(value: &str, line_no: usize) -> Result<Vec<Option<usize>>, SchemeError> {
    value
        .split(',')
        .map(|item| {
            if item == "-" {
                Ok(None)
            } else {
                item.parse::<usize>()
                    .map(Some)
                    .map_err(|e| SchemeError::Parse {
                        line: line_no,
                        message: format!("bad parent entry `{item}`: {e}"),
                    })
            }
        })
        .collect()
}

fn parse_weight(value: &str, line_no: usize) -> Result<BigRational, SchemeError> {
    let err = |message: String| SchemeError::Parse {
        line: line_no,
        message,
    };
    let (p, q) = value
        .split_once('/')
        .ok_or_else(|| err(format!("weight `{value}` is not of the form p/q")))?;
    let p = p
        .parse::<BigInt>()
        .map_err(|e| err(format!("bad weight numerator: {e}")))?;
    let q = q
        .parse::<BigInt>()
        .map_err(|e| err(format!("bad weight denominator: {e}")))?;
    if !q.is_positive() {
        return Err(err("weight denominator must be positive".into()));
    }
    if p.is_negative() {
        return Err(err("weight must be nonnegative".into()));
    }
    Ok(BigRational::new(p, q))
}
