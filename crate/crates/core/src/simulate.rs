//! Symbol-by-symbol execution of pipelined Reduce-Broadcast protocols
//! over a prime field. A schedule lists, per network use, which partial
//! sum each node emits on which link; the executor replays it while
//! enforcing link capacities, causality (a node may only send what it can
//! derive from its own input and strictly earlier receptions) and exact
//! decoding of the total sum at every node.

use std::collections::HashMap;

use num::rational::BigRational;
use num::{BigInt, Integer, One, Zero};
use thiserror::Error;

use crate::arborescence::MacBcColumn;
use crate::lp::Packing;
use crate::network::{Network, NodeId};
use crate::par;
use crate::rng::SplitMix64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("{0} is not prime")]
    NonPrimeModulus(u64),
    #[error("inputs must all have the same positive length")]
    BadInputShape,
    #[error("inputs are over modulus {input} but execution asked for {expected}")]
    ModulusMismatch { input: u64, expected: u64 },
    #[error("schedule spans {schedule} nodes but the network has {network}")]
    NodeCountMismatch { schedule: usize, network: usize },
    #[error("round {round}: link {from} -> {to} used {used} symbols, capacity {capacity}")]
    CapacityViolation {
        round: usize,
        from: NodeId,
        to: NodeId,
        used: u64,
        capacity: u64,
    },
    #[error("round {round}: node {from} cannot derive the payload it sends to {to}")]
    CausalityViolation {
        round: usize,
        from: NodeId,
        to: NodeId,
    },
    #[error("node {node} decoded instance {instance} incorrectly (or not at all)")]
    DecodeFailure { node: NodeId, instance: usize },
    #[error("scale {scale} does not make every column weight integral")]
    NonIntegralScale { scale: u64 },
}

/// Deterministic primality check by trial division; moduli here are
/// small.
pub fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    if q.is_multiple_of(2) {
        return q == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An element of the prime field `F_q`, carrying its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl FieldElement {
    pub fn new(value: u64, modulus: u64) -> FieldElement {
        debug_assert!(modulus >= 2);
        FieldElement {
            value: value % modulus,
            modulus,
        }
    }

    pub fn zero(modulus: u64) -> FieldElement {
        FieldElement::new(0, modulus)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;

    fn add(self, other: FieldElement) -> FieldElement {
        assert_eq!(self.modulus, other.modulus, "mixed moduli");
        FieldElement::new((self.value + other.value) % self.modulus, self.modulus)
    }
}

/// The `K` input vectors, each `L` symbols over a common prime field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputAssignment {
    modulus: u64,
    inputs: Vec<Vec<FieldElement>>,
}

impl InputAssignment {
    pub fn new(values: Vec<Vec<u64>>, modulus: u64) -> Result<InputAssignment, SimError> {
        if !is_prime(modulus) {
            return Err(SimError::NonPrimeModulus(modulus));
        }
        let len = values.first().map(|v| v.len()).unwrap_or(0);
        if len == 0 || values.iter().any(|v| v.len() != len) {
            return Err(SimError::BadInputShape);
        }
        let inputs = values
            .into_iter()
            .map(|v| {
                v.into_iter()
                    .map(|x| FieldElement::new(x, modulus))
                    .collect()
            })
            .collect();
        Ok(InputAssignment { modulus, inputs })
    }

    /// Seeded uniform inputs via SplitMix64.
    pub fn random(
        nodes: usize,
        instances: usize,
        modulus: u64,
        rng: &mut SplitMix64,
    ) -> Result<InputAssignment, SimError> {
        let values = (0..nodes)
            .map(|_| (0..instances).map(|_| rng.next_below(modulus)).collect())
            .collect();
        InputAssignment::new(values, modulus)
    }

    pub fn node_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn instance_count(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn symbol(&self, node: NodeId, instance: usize) -> FieldElement {
        self.inputs[node.0][instance]
    }

    /// The decoding oracle: one plain vector addition over the field.
    pub fn total_sums(&self) -> Vec<FieldElement> {
        let mut sums = vec![FieldElement::zero(self.modulus); self.instance_count()];
        for node in &self.inputs {
            for (acc, &x) in sums.iter_mut().zip(node) {
                *acc = *acc + x;
            }
        }
        sums
    }
}

/// What a transmission carries: the running sum of one instance over a
/// node's Reduce subtree, or the finished total on its way down the
/// Broadcast tree. Everything is one field symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payload {
    SubtreeSum { instance: usize, node: NodeId },
    Total { instance: usize },
}

impl std::fmt::Display for Payload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Payload::SubtreeSum { instance, node } => write!(f, "partial:{}:{}", node, instance),
            Payload::Total { instance } => write!(f, "total:{}", instance),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub from: NodeId,
    pub to: NodeId,
    pub payload: Payload,
}

/// A timestep-ordered transmission plan for streaming `L` sum instances
/// through one MAC-BC column.
#[derive(Debug, Clone)]
pub struct Schedule {
    column: MacBcColumn,
    instances: usize,
    rounds: Vec<Vec<Transmission>>,
}

impl Schedule {
    pub fn column(&self) -> &MacBcColumn {
        &self.column
    }

    pub fn instances(&self) -> usize {
        self.instances
    }

    pub fn round_count(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[Vec<Transmission>] {
        &self.rounds
    }

    /// Rounds with the transmissions of `instance` shifted by `delta`;
    /// test hook for breaking causality on purpose.
    pub fn with_transmission_moved(
        mut self,
        round: usize,
        index: usize,
        to_round: usize,
    ) -> Schedule {
        let t = self.rounds[round].remove(index);
        self.rounds[to_round].push(t);
        self
    }
}

/// Pipelined Reduce-Broadcast over one column: instance `l` climbs the
/// Reduce tree one depth level per use during rounds `l .. l+K-2` and
/// descends the Broadcast tree during rounds `l+K-1 .. l+2K-3`, so `L`
/// instances finish in exactly `2(K-1) + L - 1` uses. Shallow trees leave
/// their early rounds idle rather than shortening the span.
pub fn schedule_column(column: &MacBcColumn, instances: usize) -> Schedule {
    assert!(instances >= 1, "need at least one instance");
    let k = column.node_count();
    let total_rounds = 2 * (k - 1) + instances - 1;
    let mut rounds: Vec<Vec<Transmission>> = vec![Vec::new(); total_rounds];
    for instance in 0..instances {
        for v in (0..k).map(NodeId) {
            if let Some(parent) = column.mac().parent_of(v) {
                let depth = column.mac().depth_of(v);
                let round = instance + (k - 1 - depth);
                rounds[round].push(Transmission {
                    from: v,
                    to: parent,
                    payload: Payload::SubtreeSum { instance, node: v },
                });
            }
            if let Some(parent) = column.bc().parent_of(v) {
                let depth = column.bc().depth_of(v);
                let round = instance + (k - 1) + (depth - 1);
                rounds[round].push(Transmission {
                    from: parent,
                    to: v,
                    payload: Payload::Total { instance },
                });
            }
        }
    }
    Schedule {
        column: column.clone(),
        instances,
        rounds,
    }
}

/// Instances per network use: `L / N`.
pub fn measured_rate(schedule: &Schedule) -> BigRational {
    BigRational::new(
        BigInt::from(schedule.instances),
        BigInt::from(schedule.round_count()),
    )
}

/// One delivered message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub from: NodeId,
    pub to: NodeId,
    pub payload: Payload,
    pub value: FieldElement,
}

/// Everything observable from one execution: the per-round deliveries
/// (node `j`'s round-`n` receptions are the entries with `to == j`) and
/// each node's decoded output vector.
#[derive(Debug, Clone)]
pub struct Transcript {
    instances: usize,
    rounds: Vec<Vec<Delivery>>,
    outputs: Vec<Vec<FieldElement>>,
}

impl Transcript {
    pub fn rounds(&self) -> &[Vec<Delivery>] {
        &self.rounds
    }

    pub fn output(&self, node: NodeId) -> &[FieldElement] {
        &self.outputs[node.0]
    }

    pub fn received_by(&self, node: NodeId, round: usize) -> Vec<&Delivery> {
        self.rounds[round].iter().filter(|d| d.to == node).collect()
    }

    /// Text dump: one line per transmission, then a summary line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (n, round) in self.rounds.iter().enumerate() {
            for d in round {
                out.push_str(&format!(
                    "n={} {}->{} len=1 desc={}\n",
                    n, d.from, d.to, d.payload
                ));
            }
        }
        out.push_str(&format!(
            "decoded=ok rate={}/{}\n",
            self.instances,
            self.rounds.len()
        ));
        out
    }
}

/// Per-node knowledge during a replay: everything received in earlier
/// rounds, keyed by payload.
struct NodeState {
    received: HashMap<Payload, FieldElement>,
}

impl NodeState {
    /// Value of a payload as derivable by `node` from its own input and
    /// earlier receptions. A node derives its own subtree sum once every
    /// Reduce child has reported, and the root's total is its whole-tree
    /// subtree sum.
    fn derive(
        &self,
        node: NodeId,
        payload: &Payload,
        column: &MacBcColumn,
        inputs: &InputAssignment,
    ) -> Option<FieldElement> {
        match payload {
            Payload::SubtreeSum { instance, node: v } if *v == node => {
                let mut acc = inputs.symbol(node, *instance);
                for child in column.mac().children(node) {
                    let sub = self.received.get(&Payload::SubtreeSum {
                        instance: *instance,
                        node: child,
                    })?;
                    acc = acc + *sub;
                }
                Some(acc)
            }
            Payload::Total { instance } if node == column.root() => self.derive(
                node,
                &Payload::SubtreeSum {
                    instance: *instance,
                    node,
                },
                column,
                inputs,
            ),
            other => self.received.get(other).copied(),
        }
    }
}

/// Replay a schedule without a capacity check, returning the transcript
/// and the per-round link usage (symbol counts, `K x K` row-major per
/// round). Causality and decoding are always enforced.
fn execute_stream(
    schedule: &Schedule,
    inputs: &InputAssignment,
) -> Result<(Transcript, Vec<Vec<u64>>), SimError> {
    let column = &schedule.column;
    let k = column.node_count();
    if inputs.node_count() != k || inputs.instance_count() != schedule.instances {
        return Err(SimError::BadInputShape);
    }
    let mut states: Vec<NodeState> = (0..k)
        .map(|_| NodeState {
            received: HashMap::new(),
        })
        .collect();
    let mut rounds_log: Vec<Vec<Delivery>> = Vec::with_capacity(schedule.round_count());
    let mut usage: Vec<Vec<u64>> = Vec::with_capacity(schedule.round_count());
    for (round_no, round) in schedule.rounds.iter().enumerate() {
        let mut round_usage = vec![0u64; k * k];
        let mut deliveries = Vec::with_capacity(round.len());
        for t in round {
            let value = states[t.from.0]
                .derive(t.from, &t.payload, column, inputs)
                .ok_or(SimError::CausalityViolation {
                    round: round_no,
                    from: t.from,
                    to: t.to,
                })?;
            round_usage[t.from.0 * k + t.to.0] += 1;
            deliveries.push(Delivery {
                from: t.from,
                to: t.to,
                payload: t.payload,
                value,
            });
        }
        // Receptions become available only from the next round on.
        for d in &deliveries {
            states[d.to.0].received.insert(d.payload, d.value);
        }
        rounds_log.push(deliveries);
        usage.push(round_usage);
    }
    // Decode at every node and compare against the direct sum oracle.
    let oracle = inputs.total_sums();
    let mut outputs = Vec::with_capacity(k);
    for node in (0..k).map(NodeId) {
        let mut decoded = Vec::with_capacity(schedule.instances);
        for (instance, expected) in oracle.iter().enumerate() {
            let got = states[node.0]
                .derive(node, &Payload::Total { instance }, column, inputs)
                .filter(|v| v == expected)
                .ok_or(SimError::DecodeFailure { node, instance })?;
            decoded.push(got);
        }
        outputs.push(decoded);
    }
    Ok((
        Transcript {
            instances: schedule.instances,
            rounds: rounds_log,
            outputs,
        },
        usage,
    ))
}

/// Execute a schedule over a network: capacity per round and link,
/// causality per transmission, and exact decoding at every node.
pub fn execute(
    network: &Network,
    schedule: &Schedule,
    inputs: &InputAssignment,
) -> Result<Transcript, SimError> {
    let k = network.node_count();
    if schedule.column.node_count() != k {
        return Err(SimError::NodeCountMismatch {
            schedule: schedule.column.node_count(),
            network: k,
        });
    }
    let (transcript, usage) = execute_stream(schedule, inputs)?;
    for (round_no, round_usage) in usage.iter().enumerate() {
        for i in 0..k {
            for j in 0..k {
                let used = round_usage[i * k + j];
                if used == 0 {
                    continue;
                }
                let capacity = network.beta(NodeId(i), NodeId(j));
                if BigInt::from(used) > BigInt::from(capacity.clone()) {
                    return Err(SimError::CapacityViolation {
                        round: round_no,
                        from: NodeId(i),
                        to: NodeId(j),
                        used,
                        capacity: u64::try_from(capacity).unwrap_or(u64::MAX),
                    });
                }
            }
        }
    }
    Ok(transcript)
}

/// Smallest positive integer scale making every packing weight integral:
/// the least common multiple of the weight denominators.
pub fn weight_scale(packing: &Packing) -> BigInt {
    let mut scale = BigInt::one();
    for weight in packing.weights() {
        scale = scale.lcm(weight.denom());
    }
    scale
}

/// Outcome of running every stream of a scaled packing concurrently.
#[derive(Debug, Clone)]
pub struct PackingRun {
    /// Streams executed (`scale * weight` copies of each column).
    pub streams: usize,
    /// Network uses, equal for every stream.
    pub rounds: usize,
    /// Sum instances decoded across all streams.
    pub instances_total: usize,
    /// Instances per unscaled network use,
    /// `instances_total / (scale * rounds)`; approaches the packing rate
    /// as `L` grows.
    pub throughput: BigRational,
    pub scale: u64,
}

/// Run `scale * weight` independent instance streams of every column
/// concurrently against the network with per-round capacity
/// `scale * beta`. Every stream must decode; the aggregate per-round
/// usage of each link must fit the scaled capacity, which the packing
/// LP constraint guarantees.
pub fn execute_packing(
    network: &Network,
    packing: &Packing,
    scale: u64,
    instances: usize,
    modulus: u64,
    rng: &mut SplitMix64,
) -> Result<PackingRun, SimError> {
    if !is_prime(modulus) {
        return Err(SimError::NonPrimeModulus(modulus));
    }
    let k = network.node_count();
    let scale_int = BigInt::from(scale);
    let mut jobs: Vec<(Schedule, InputAssignment)> = Vec::new();
    for (column, weight) in packing.iter() {
        let copies = weight * BigRational::from_integer(scale_int.clone());
        if !copies.is_integer() {
            return Err(SimError::NonIntegralScale { scale });
        }
        let copies =
            usize::try_from(copies.to_integer().to_biguint().unwrap_or_default()).unwrap_or(0);
        if copies == 0 {
            continue;
        }
        let schedule = schedule_column(column, instances);
        for _ in 0..copies {
            let inputs = InputAssignment::random(k, instances, modulus, rng)?;
            jobs.push((schedule.clone(), inputs));
        }
    }
    let streams = jobs.len();
    let rounds = jobs.first().map(|(s, _)| s.round_count()).unwrap_or(0);
    let results = par::map_collect(jobs, 8, |(schedule, inputs)| {
        execute_stream(&schedule, &inputs).map(|(_, usage)| usage)
    });
    let mut aggregate: Vec<Vec<u64>> = vec![vec![0u64; k * k]; rounds];
    for result in results {
        let usage = result?;
        for (agg_round, stream_round) in aggregate.iter_mut().zip(&usage) {
            for (a, u) in agg_round.iter_mut().zip(stream_round) {
                *a += u;
            }
        }
    }
    for (round_no, round_usage) in aggregate.iter().enumerate() {
        for i in 0..k {
            for j in 0..k {
                let used = round_usage[i * k + j];
                if used == 0 {
                    continue;
                }
                let capacity =
                    BigInt::from(network.beta(NodeId(i), NodeId(j)).clone()) * &scale_int;
                if BigInt::from(used) > capacity {
                    return Err(SimError::CapacityViolation {
                        round: round_no,
                        from: NodeId(i),
                        to: NodeId(j),
                        used,
                        capacity: u64::try_from(&capacity).unwrap_or(u64::MAX),
                    });
                }
            }
        }
    }
    let instances_total = streams * instances;
    let throughput = if rounds == 0 {
        BigRational::zero()
    } else {
        BigRational::new(
            BigInt::from(instances_total),
            BigInt::from(rounds) * &scale_int,
        )
    };
    Ok(PackingRun {
        streams,
        rounds,
        instances_total,
        throughput,
        scale,
    })
}
