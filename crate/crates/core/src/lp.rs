//! The packing LP that lower-bounds the All-Reduce rate: maximize the
//! total weight of rooted MAC-BC columns subject to the per-link
//! bandwidth constraints. Solved exactly, two ways: over the fully
//! enumerated column set (small `K`; the oracle) and by column generation
//! with a min-cost arborescence pricing step (the scalable path). Both
//! give exact rational optima and must agree.

use std::collections::HashMap;

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};
use thiserror::Error;

use crate::arborescence::{self, MacBcColumn, Orientation};
use crate::cut::{self, Cut};
use crate::edmonds::{min_cost_arborescence, unit_costs};
use crate::network::{EdgeMap, Network, NodeId, RationalNetwork};
use crate::par;
use crate::simplex::{PackingLp, SimplexError, SparseColumn};

/// Safety valve for the pivot loop; Bland's rule cannot cycle, so hitting
/// this means an implementation bug rather than a hard instance.
const PIVOT_LIMIT: usize = 200_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("exhaustive LP over {0} nodes refused (K <= 5); use column generation or force it")]
    TooManyNodesForExhaustive(usize),
    #[error("column generation did not converge within {rounds} pricing rounds")]
    NonConvergence { rounds: usize },
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("internal invariant breach: {0}")]
    InvariantBreach(&'static str),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("packing uses {usage} on link {from} -> {to}, which only carries {capacity}")]
pub struct FeasibilityViolation {
    pub from: NodeId,
    pub to: NodeId,
    pub usage: BigRational,
    pub capacity: BigRational,
}

/// A weighted set of rooted MAC-BC columns. The rate of the packing is
/// the sum of the weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packing {
    columns: Vec<MacBcColumn>,
    weights: Vec<BigRational>,
}

impl Packing {
    pub fn new(columns: Vec<MacBcColumn>, weights: Vec<BigRational>) -> Packing {
        assert_eq!(columns.len(), weights.len(), "one weight per column");
        assert!(
            weights.iter().all(|w| !w.is_negative()),
            "packing weights are nonnegative"
        );
        if let Some(first) = columns.first() {
            assert!(columns.iter().all(|c| c.node_count() == first.node_count()));
        }
        Packing { columns, weights }
    }

    pub fn empty() -> Packing {
        Packing {
            columns: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[MacBcColumn] {
        &self.columns
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MacBcColumn, &BigRational)> {
        self.columns.iter().zip(&self.weights)
    }

    /// Total weight, recomputed.
    pub fn rate(&self) -> BigRational {
        self.weights.iter().cloned().sum()
    }

    /// Weighted link usage, `K x K` row-major.
    pub fn usage_matrix(&self, k: usize) -> Vec<BigRational> {
        let mut usage = vec![BigRational::zero(); k * k];
        for (column, weight) in self.iter() {
            for (from, to, coeff) in column.used_edges() {
                usage[from.0 * k + to.0] += weight * BigRational::from_integer(coeff.into());
            }
        }
        usage
    }

    /// Exact entrywise check of the bandwidth constraint.
    pub fn check_feasible(&self, network: &Network) -> Result<(), FeasibilityViolation> {
        self.check_feasible_against(network.node_count(), |from, to| {
            BigRational::from_integer(BigInt::from(network.beta(from, to).clone()))
        })
    }

    /// Same check against a rational-bandwidth network.
    pub fn check_feasible_rational(
        &self,
        network: &RationalNetwork,
    ) -> Result<(), FeasibilityViolation> {
        self.check_feasible_against(network.node_count(), |from, to| {
            network.beta(from, to).clone()
        })
    }

    fn check_feasible_against(
        &self,
        k: usize,
        capacity: impl Fn(NodeId, NodeId) -> BigRational,
    ) -> Result<(), FeasibilityViolation> {
        assert!(
            self.columns.iter().all(|c| c.node_count() == k),
            "packing and network node counts differ"
        );
        let usage = self.usage_matrix(k);
        for i in 0..k {
            for j in 0..k {
                let u = &usage[i * k + j];
                if u.is_zero() {
                    continue;
                }
                let cap = capacity(NodeId(i), NodeId(j));
                if *u > cap {
                    return Err(FeasibilityViolation {
                        from: NodeId(i),
                        to: NodeId(j),
                        usage: u.clone(),
                        capacity: cap,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// No rooted MAC-BC column exists on the support (the network is not
    /// strongly connected); the LP value is 0 with an empty packing.
    InfeasibleSupport,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: BigRational,
    pub primal: Packing,
    pub duals: EdgeMap<BigRational>,
    pub status: LpStatus,
    /// Columns held by the solver (after deduplication).
    pub columns_used: usize,
    /// Pricing rounds for column generation; zero for the exhaustive path.
    pub pricing_rounds: usize,
    /// Simplex pivots performed in total.
    pub pivots: usize,
}

/// Restricted master shared by the exhaustive and column-generation
/// paths: rows are the support edges, columns are deduplicated by their
/// link-usage matrix.
struct Master<'a> {
    network: &'a Network,
    edges: Vec<(NodeId, NodeId)>,
    lp: PackingLp,
    columns: Vec<MacBcColumn>,
    seen: HashMap<Vec<u8>, usize>,
}

impl<'a> Master<'a> {
    fn new(network: &'a Network) -> Master<'a> {
        let edges: Vec<(NodeId, NodeId)> =
            network.edges().map(|(from, to, _)| (from, to)).collect();
        let rhs = edges
            .iter()
            .map(|&(from, to)| BigInt::from(network.beta(from, to).clone()))
            .collect();
        Master {
            network,
            edges,
            lp: PackingLp::new(rhs),
            columns: Vec::new(),
            seen: HashMap::new(),
        }
    }

    fn row_of(&self, from: NodeId, to: NodeId) -> usize {
        self.edges
            .binary_search(&(from, to))
            .expect("column edges lie on the support")
    }

    /// Index of an existing column with the same usage matrix, if any.
    fn index_of(&self, column: &MacBcColumn) -> Option<usize> {
        self.seen.get(column.beta_matrix()).copied()
    }

    /// Returns false when an equal-usage column is already present.
    fn add(&mut self, column: MacBcColumn) -> bool {
        if self.seen.contains_key(column.beta_matrix()) {
            return false;
        }
        let entries: Vec<(usize, u32)> = column
            .used_edges()
            .map(|(from, to, coeff)| (self.row_of(from, to), coeff as u32))
            .collect();
        self.seen
            .insert(column.beta_matrix().to_vec(), self.columns.len());
        self.columns.push(column);
        self.lp.add_column(SparseColumn::new(entries));
        true
    }

    fn duals_map(&self) -> EdgeMap<BigRational> {
        self.edges.iter().copied().zip(self.lp.duals()).collect()
    }

    fn solution(&self, pricing_rounds: usize) -> Result<LpSolution, LpError> {
        let value = self.lp.objective();
        let (cols, weights): (Vec<MacBcColumn>, Vec<BigRational>) = self
            .lp
            .primal()
            .into_iter()
            .map(|(j, w)| (self.columns[j].clone(), w))
            .unzip();
        let primal = Packing::new(cols, weights);
        if primal.rate() != value {
            return Err(LpError::InvariantBreach(
                "packing rate differs from LP value",
            ));
        }
        if primal.check_feasible(self.network).is_err() {
            return Err(LpError::InvariantBreach(
                "LP primal violates a bandwidth row",
            ));
        }
        Ok(LpSolution {
            value,
            primal,
            duals: self.duals_map(),
            status: LpStatus::Optimal,
            columns_used: self.columns.len(),
            pricing_rounds,
            pivots: self.lp.pivot_count(),
        })
    }
}

fn empty_solution(network: &Network) -> LpSolution {
    LpSolution {
        value: BigRational::zero(),
        primal: Packing::empty(),
        duals: network
            .edges()
            .map(|(from, to, _)| ((from, to), BigRational::zero()))
            .collect(),
        status: LpStatus::InfeasibleSupport,
        columns_used: 0,
        pricing_rounds: 0,
        pivots: 0,
    }
}

/// Optimal packing value over every rooted MAC-BC column on the support.
/// Refuses `K > 5`, where the column count `K^(2K-3)` explodes; see
/// [`lp_exhaustive_forced`] for an explicit override.
pub fn lp_exhaustive(network: &Network) -> Result<LpSolution, LpError> {
    let k = network.node_count();
    if k > 5 {
        return Err(LpError::TooManyNodesForExhaustive(k));
    }
    lp_exhaustive_forced(network)
}

/// Exhaustive LP without the node-count guard.
pub fn lp_exhaustive_forced(network: &Network) -> Result<LpSolution, LpError> {
    if !network.is_strongly_connected() {
        return Ok(empty_solution(network));
    }
    let mut master = Master::new(network);
    for column in arborescence::columns(network) {
        master.add(column);
    }
    master.lp.optimize(PIVOT_LIMIT)?;
    master.solution(0)
}

/// Optimal packing value by column generation: a restricted master over a
/// working column set, priced by exact min-cost in/out arborescences under
/// the master duals. Terminates at the same exact optimum as the
/// exhaustive LP. The pricing-round cap defaults to
/// `10 * K * |support edges|`; see [`lp_colgen_with_cap`] to override it.
pub fn lp_colgen(network: &Network) -> Result<LpSolution, LpError> {
    let cap = 10 * network.node_count() * network.edge_count();
    lp_colgen_with_cap(network, cap)
}

/// Column generation with an explicit pricing-round cap.
pub fn lp_colgen_with_cap(network: &Network, round_cap: usize) -> Result<LpSolution, LpError> {
    if !network.is_strongly_connected() {
        return Ok(empty_solution(network));
    }
    let mut master = Master::new(network);

    // Seed with one column per root, built from unit-cost trees.
    let unit = unit_costs(network);
    for root in network.nodes() {
        let mac = min_cost_arborescence(network, root, Orientation::In, &unit);
        let bc = min_cost_arborescence(network, root, Orientation::Out, &unit);
        if let (Ok((mac, _)), Ok((bc, _))) = (mac, bc) {
            master.add(MacBcColumn::new(mac, bc).expect("roots match by construction"));
        }
    }
    if master.columns.is_empty() {
        return Err(LpError::InvariantBreach(
            "strongly connected network produced no seed column",
        ));
    }

    let mut rounds = 0;
    loop {
        master.lp.optimize(PIVOT_LIMIT)?;
        let duals = master.duals_map();

        // Pricing: cheapest in-tree plus out-tree per root under the
        // duals. A total below 1 identifies a column with positive
        // reduced cost; every improving root contributes a column.
        let roots: Vec<NodeId> = network.nodes().collect();
        let priced = par::map_collect(roots, 16, |root| {
            let mac = min_cost_arborescence(network, root, Orientation::In, &duals).ok()?;
            let bc = min_cost_arborescence(network, root, Orientation::Out, &duals).ok()?;
            Some((mac.1 + bc.1, mac.0, bc.0))
        });
        if priced.iter().all(|p| p.is_none()) {
            return Err(LpError::InvariantBreach("pricing found no arborescence"));
        }
        let columns_before = master.columns.len();
        let mut improving = false;
        for (cost, mac, bc) in priced.into_iter().flatten() {
            if cost >= BigRational::one() {
                continue;
            }
            improving = true;
            let column = MacBcColumn::new(mac, bc).expect("pricing trees share a root");
            match master.index_of(&column) {
                // A master solved to optimality prices all of its own
                // columns at >= 1, so pricing cannot rediscover a column
                // that was already present when this round started.
                Some(idx) if idx < columns_before => {
                    return Err(LpError::NonConvergence { rounds });
                }
                // Two roots can share a usage matrix; one copy suffices.
                Some(_) => {}
                None => {
                    master.add(column);
                }
            }
        }
        if !improving {
            return master.solution(rounds);
        }
        if master.columns.len() == columns_before {
            return Err(LpError::NonConvergence { rounds });
        }
        rounds += 1;
        if rounds > round_cap {
            return Err(LpError::NonConvergence { rounds });
        }
    }
}

/// `sum(beta) / (2(K-1))`: an upper bound on the packing LP value.
/// Meeting it certifies that a packing is LP-optimal.
pub fn packing_cap(network: &Network) -> BigRational {
    let k = network.node_count();
    BigRational::new(
        BigInt::from(network.total_bandwidth()),
        BigInt::from(2 * (k - 1)),
    )
}

/// Lower bound, upper bound and their ratio for one network.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub lower: BigRational,
    pub upper: Cut,
    /// `upper / lower`; absent when both bounds are zero (network not
    /// strongly connected).
    pub gap_ratio: Option<BigRational>,
}

impl BoundsReport {
    pub fn upper_rational(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.upper.value().clone()))
    }

    /// True when the upper bound is within a factor two of the lower.
    pub fn within_factor_two(&self) -> bool {
        match &self.gap_ratio {
            Some(g) => *g <= BigRational::from_integer(2.into()),
            None => true,
        }
    }
}

/// Computes both bounds: the LP lower bound by column generation and the
/// cut-set upper bound (subset enumeration up to `K = 12`, max-flow
/// beyond).
pub fn bounds_report(network: &Network) -> Result<BoundsReport, LpError> {
    let lower = lp_colgen(network)?.value;
    let upper = if network.node_count() <= 12 {
        cut::cutset_bound_bruteforce(network).expect("K <= 12 fits the enumeration limit")
    } else {
        cut::cutset_bound_maxflow(network)
    };
    let upper_rat = BigRational::from_integer(BigInt::from(upper.value().clone()));
    if lower.is_zero() && upper_rat.is_positive() {
        return Err(LpError::InvariantBreach(
            "zero LP value with a positive cut bound contradicts strong connectivity",
        ));
    }
    if lower > upper_rat {
        return Err(LpError::InvariantBreach("lower bound exceeds upper bound"));
    }
    let gap_ratio = if lower.is_zero() {
        None
    } else {
        Some(&upper_rat / &lower)
    };
    Ok(BoundsReport {
        lower,
        upper,
        gap_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::topology;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn exhaustive_values_on_named_topologies() {
        assert_eq!(
            lp_exhaustive(&topology::complete(3).unwrap())
                .unwrap()
                .value,
            rat(3, 2)
        );
        assert_eq!(
            lp_exhaustive(&topology::cycle(3).unwrap()).unwrap().value,
            rat(3, 4)
        );
        assert_eq!(
            lp_exhaustive(&topology::three_cycle(1, 1, 2).unwrap())
                .unwrap()
                .value,
            rat(1, 1)
        );
    }

    #[test]
    fn colgen_values_on_named_topologies() {
        assert_eq!(
            lp_colgen(&topology::hypercube(2).unwrap()).unwrap().value,
            rat(4, 3)
        );
        assert_eq!(
            lp_colgen(&topology::ring(5).unwrap()).unwrap().value,
            rat(5, 4)
        );
        assert_eq!(
            lp_colgen(&topology::complete(4).unwrap()).unwrap().value,
            rat(2, 1)
        );
    }

    #[test]
    fn exhaustive_refuses_large_networks() {
        assert_eq!(
            lp_exhaustive(&topology::complete(6).unwrap()).unwrap_err(),
            LpError::TooManyNodesForExhaustive(6)
        );
    }

    #[test]
    fn disconnected_network_has_zero_value() {
        let n = Network::from_edge_list(3, &[(0, 1, 2), (1, 0, 1)]).unwrap();
        let sol = lp_exhaustive(&n).unwrap();
        assert_eq!(sol.value, BigRational::zero());
        assert_eq!(sol.status, LpStatus::InfeasibleSupport);
        assert!(sol.primal.is_empty());
        let sol = lp_colgen(&n).unwrap();
        assert_eq!(sol.status, LpStatus::InfeasibleSupport);
    }

    #[test]
    fn packing_cap_values() {
        for k in 2..=8usize {
            assert_eq!(
                packing_cap(&topology::complete(k).unwrap()),
                rat(k as i64, 2)
            );
        }
        for k in 3..=8usize {
            assert_eq!(
                packing_cap(&topology::cycle(k).unwrap()),
                rat(k as i64, 2 * (k as i64 - 1))
            );
        }
        let zero = Network::from_edge_list(3, &[]).unwrap();
        assert_eq!(packing_cap(&zero), BigRational::zero());
    }

    #[test]
    fn lp_value_never_exceeds_cap_or_cut() {
        let mut rng = SplitMix64::new(0x11ca);
        let mut tested = 0;
        while tested < 15 {
            let k = 3 + rng.next_below(2) as usize;
            let mut edges = Vec::new();
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        let b = rng.next_below(4);
                        if b > 0 {
                            edges.push((i, j, b));
                        }
                    }
                }
            }
            let n = Network::from_edge_list(k, &edges).unwrap();
            if !n.is_strongly_connected() {
                continue;
            }
            tested += 1;
            let sol = lp_exhaustive(&n).unwrap();
            assert!(sol.value <= packing_cap(&n));
            let cut = cut::cutset_bound_bruteforce(&n).unwrap();
            let cut_rat = BigRational::from_integer(BigInt::from(cut.value().clone()));
            assert!(sol.value <= cut_rat, "network:\n{}", n.to_file_string());
        }
    }

    #[test]
    fn colgen_matches_exhaustive_on_random_networks() {
        let mut rng = SplitMix64::new(0xfeed);
        let mut tested = 0;
        while tested < 12 {
            let k = 4;
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
            if !n.is_strongly_connected() {
                continue;
            }
            tested += 1;
            let ex = lp_exhaustive(&n).unwrap();
            let cg = lp_colgen(&n).unwrap();
            assert_eq!(ex.value, cg.value, "network:\n{}", n.to_file_string());
        }
    }

    #[test]
    fn weak_duality_holds_on_returned_duals() {
        for n in [
            topology::complete(3).unwrap(),
            topology::cycle(4).unwrap(),
            topology::three_cycle(2, 1, 3).unwrap(),
        ] {
            let sol = lp_exhaustive(&n).unwrap();
            // y . b equals the optimum.
            let yb: BigRational = sol
                .duals
                .iter()
                .map(|(&(from, to), y)| {
                    y * BigRational::from_integer(BigInt::from(n.beta(from, to).clone()))
                })
                .sum();
            assert_eq!(yb, sol.value);
            // Every column is priced out: y . beta_z >= 1.
            for column in arborescence::columns(&n) {
                let price: BigRational = column
                    .used_edges()
                    .map(|(from, to, c)| {
                        &sol.duals[&(from, to)] * BigRational::from_integer(c.into())
                    })
                    .sum();
                assert!(price >= BigRational::one());
            }
        }
    }

    #[test]
    fn scaling_the_network_scales_the_lp_value() {
        use num::BigUint;
        let base = topology::three_cycle(1, 2, 1).unwrap();
        let sol1 = lp_exhaustive(&base).unwrap();
        for c in [2u32, 3] {
            let scaled = base.scaled(&BigUint::from(c));
            let solc = lp_exhaustive(&scaled).unwrap();
            assert_eq!(
                solc.value,
                sol1.value.clone() * BigRational::from_integer(c.into())
            );
        }
    }

    #[test]
    fn bounds_report_on_named_topologies() {
        let report = bounds_report(&topology::hypercube(3).unwrap()).unwrap();
        assert_eq!(report.lower, rat(12, 7));
        assert_eq!(report.upper.value(), &num::BigUint::from(3u32));
        assert_eq!(report.gap_ratio, Some(rat(7, 4)));
        assert!(report.within_factor_two());

        let report = bounds_report(&topology::three_cycle(1, 1, 1).unwrap()).unwrap();
        assert_eq!(report.lower, rat(3, 4));
        assert_eq!(report.upper.value(), &num::BigUint::from(1u32));
        assert_eq!(report.gap_ratio, Some(rat(4, 3)));

        let tree = topology::bidirected_tree(&[0, 0, 1], &[3, 3, 3]).unwrap();
        let report = bounds_report(&tree).unwrap();
        assert_eq!(report.lower, rat(3, 1));
        assert_eq!(report.gap_ratio, Some(rat(1, 1)));
    }
}
