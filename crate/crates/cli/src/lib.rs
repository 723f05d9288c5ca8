//! Command handling for the `arate` binary. Everything testable lives
//! here; `main` only parses arguments and maps errors to exit codes.
//!
//! Exit codes: 0 ok, 1 usage, 2 I/O or parse, 3 verification failure,
//! 4 internal invariant breach.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::rational::BigRational;
use num::ToPrimitive;

use allreduce_rate::cut::{self, Cut};
use allreduce_rate::lp::{self, LpSolution, Packing};
use allreduce_rate::network::{self, Network};
use allreduce_rate::rng::SplitMix64;
use allreduce_rate::schemes;
use allreduce_rate::simulate;
use allreduce_rate::topology;

#[derive(Debug, Parser)]
#[command(
    name = "arate",
    about = "Bounds on the All-Reduce computation rate of parallel-link networks",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated network file.
    Gen {
        #[command(subcommand)]
        topology: Topology,
    },
    /// Cut-set upper bound of a network file.
    Bounds {
        network: PathBuf,
        /// brute enumerates subsets, flow runs max-flows, both cross-checks.
        #[arg(long, value_enum, default_value_t = BoundMethod::Both)]
        method: BoundMethod,
    },
    /// Packing LP lower bound of a network file.
    Lp {
        network: PathBuf,
        #[arg(long, value_enum, default_value_t = LpMode::Colgen)]
        mode: LpMode,
        /// Allow exhaustive mode beyond 5 nodes.
        #[arg(long)]
        force: bool,
        /// Write the optimal packing to this file.
        #[arg(long)]
        emit_packing: Option<PathBuf>,
    },
    /// Closed-form packing of a named topology, verified.
    Pack {
        #[command(subcommand)]
        topology: Topology,
    },
    /// Execute a packing symbol-by-symbol over a prime field.
    Simulate {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        packing: PathBuf,
        /// Sum instances per stream.
        #[arg(long, default_value_t = 64)]
        instances: usize,
        /// Prime field size.
        #[arg(long, default_value_t = 257)]
        q: u64,
        /// Seed for the SplitMix64 input generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dump every transmission of the first stream.
        #[arg(long)]
        transcript: bool,
    },
    /// Lower bound, upper bound and gap for a network file.
    Report {
        network: PathBuf,
        /// Emit one JSON document instead of the table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum Topology {
    /// Uniform complete network on K nodes.
    Complete(KArg),
    /// Uniform directed cycle on K nodes.
    Cycle(KArg),
    /// Uniform bidirected ring on K nodes.
    Ring(KArg),
    /// 3-node cyclic network with bandwidths a, b, c.
    Cyc3 {
        #[arg(long)]
        a: u64,
        #[arg(long)]
        b: u64,
        #[arg(long)]
        c: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hypercube on 2^dim nodes.
    Hypercube {
        #[arg(long)]
        dim: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bidirected tree: node v+1 hangs off `parents[v]` with the given
    /// bandwidth in both directions.
    Tree {
        /// Comma-separated parent of each node 1..K-1.
        #[arg(long, value_delimiter = ',')]
        parents: Vec<usize>,
        /// Comma-separated per-edge bandwidths, same length as parents.
        #[arg(long, value_delimiter = ',')]
        bandwidths: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct KArg {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundMethod {
    Brute,
    Flow,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LpMode {
    Exhaustive,
    Colgen,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Verification(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m)
            | CliError::Io(m)
            | CliError::Verification(m)
            | CliError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::fmt::Error> for CliError {
    fn from(e: std::fmt::Error) -> CliError {
        CliError::Internal(e.to_string())
    }
}

fn lp_error(e: lp::LpError) -> CliError {
    match e {
        lp::LpError::TooManyNodesForExhaustive(_) => CliError::Usage(e.to_string()),
        lp::LpError::NonConvergence { .. } | lp::LpError::Simplex(_) => {
            CliError::Internal(e.to_string())
        }
        lp::LpError::InvariantBreach(_) => CliError::Internal(e.to_string()),
    }
}

/// Exact fraction as `p/q`, denominator always explicit.
pub fn frac(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

fn approx(value: &BigRational) -> f64 {
    let numer = value.numer().to_f64().unwrap_or(f64::NAN);
    let denom = value.denom().to_f64().unwrap_or(f64::NAN);
    numer / denom
}

fn cut_set_string(cut: &Cut) -> String {
    let ids: Vec<String> = cut.subset().iter().map(|n| n.to_string()).collect();
    format!("{{{}}}", ids.join(","))
}

fn read_network(path: &PathBuf) -> Result<Network, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    network::parse(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_packing(path: &PathBuf) -> Result<Packing, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    schemes::parse_packing(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_data(data: &str, out: &Option<PathBuf>, stdout: &mut impl Write) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, data).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => stdout
            .write_all(data.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn generate(topology: &Topology) -> Result<(Network, &Option<PathBuf>), CliError> {
    let usage = |e: topology::TopologyError| CliError::Usage(e.to_string());
    match topology {
        Topology::Complete(KArg { k, out }) => Ok((topology::complete(*k).map_err(usage)?, out)),
        Topology::Cycle(KArg { k, out }) => Ok((topology::cycle(*k).map_err(usage)?, out)),
        Topology::Ring(KArg { k, out }) => Ok((topology::ring(*k).map_err(usage)?, out)),
        Topology::Cyc3 { a, b, c, out } => {
            Ok((topology::three_cycle(*a, *b, *c).map_err(usage)?, out))
        }
        Topology::Hypercube { dim, out } => Ok((topology::hypercube(*dim).map_err(usage)?, out)),
        Topology::Tree {
            parents,
            bandwidths,
            out,
        } => Ok((
            topology::bidirected_tree(parents, bandwidths).map_err(usage)?,
            out,
        )),
    }
}

fn closed_form_packing(topology: &Topology) -> Result<(Packing, Network, bool), CliError> {
    let scheme_usage = |e: schemes::SchemeError| CliError::Usage(e.to_string());
    let (network, _) = generate(topology)?;
    // The 3-node cyclic packing is only cap-tight when the smallest
    // bandwidth exceeds a quarter of the total; everywhere else the cap
    // certifies LP optimality.
    match topology {
        Topology::Complete(KArg { k, .. }) => Ok((
            schemes::pack_complete(*k).map_err(scheme_usage)?,
            network,
            true,
        )),
        Topology::Cycle(KArg { k, .. }) => Ok((
            schemes::pack_cycle(*k).map_err(scheme_usage)?,
            network,
            true,
        )),
        Topology::Ring(KArg { k, .. }) => {
            Ok((schemes::pack_ring(*k).map_err(scheme_usage)?, network, true))
        }
        Topology::Cyc3 { a, b, c, .. } => {
            let packing = schemes::pack_three_cycle(*a, *b, *c).map_err(scheme_usage)?;
            let min = (*a).min(*b).min(*c);
            let cap_expected = 4 * min > a + b + c;
            Ok((packing, network, cap_expected))
        }
        Topology::Hypercube { dim, .. } => Ok((
            schemes::pack_hypercube(*dim).map_err(scheme_usage)?,
            network,
            true,
        )),
        Topology::Tree { .. } => Err(CliError::Usage(
            "no closed-form packing for arbitrary trees; use `lp` on the generated file".into(),
        )),
    }
}

pub fn run(cli: &Cli, stdout: &mut impl Write, stderr: &mut impl Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen { topology } => {
            let (network, out) = generate(topology)?;
            write_data(&network.to_file_string(), out, stdout)
        }
        Command::Bounds { network, method } => {
            let net = read_network(network)?;
            let cut = match method {
                BoundMethod::Brute => cut::cutset_bound_bruteforce(&net)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                BoundMethod::Flow => cut::cutset_bound_maxflow(&net),
                BoundMethod::Both => {
                    let brute = cut::cutset_bound_bruteforce(&net)
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    let flow = cut::cutset_bound_maxflow(&net);
                    if brute.value() != flow.value() {
                        return Err(CliError::Verification(format!(
                            "bound mismatch: brute={} flow={}",
                            brute.value(),
                            flow.value()
                        )));
                    }
                    brute
                }
            };
            writeln!(stdout, "upper={} cut={}", cut.value(), cut_set_string(&cut))
                .map_err(|e| CliError::Io(e.to_string()))
        }
        Command::Lp {
            network,
            mode,
            force,
            emit_packing,
        } => {
            let net = read_network(network)?;
            let solution = solve_lp(&net, *mode, *force)?;
            if let Some(path) = emit_packing {
                fs::write(path, schemes::write_packing(&solution.primal))
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
            writeln!(
                stdout,
                "lower={} columns={}",
                frac(&solution.value),
                solution.columns_used
            )
            .map_err(|e| CliError::Io(e.to_string()))
        }
        Command::Pack { topology } => {
            let (packing, network, expect_cap) = closed_form_packing(topology)?;
            if let Err(v) = packing.check_feasible(&network) {
                return Err(CliError::Verification(v.to_string()));
            }
            let rate = packing.rate();
            let cap_tight = rate == lp::packing_cap(&network);
            if expect_cap && !cap_tight {
                return Err(CliError::Verification(format!(
                    "packing rate {} misses the cap {}",
                    frac(&rate),
                    frac(&lp::packing_cap(&network))
                )));
            }
            let out = match topology {
                Topology::Complete(KArg { out, .. })
                | Topology::Cycle(KArg { out, .. })
                | Topology::Ring(KArg { out, .. }) => out,
                Topology::Cyc3 { out, .. }
                | Topology::Hypercube { out, .. }
                | Topology::Tree { out, .. } => out,
            };
            write_data(&schemes::write_packing(&packing), out, stdout)?;
            let verdict = format!(
                "rate={} feasible=ok cap_tight={}\n",
                frac(&rate),
                if cap_tight { "yes" } else { "no" }
            );
            // Keep the packing stream clean when it goes to stdout.
            let sink: &mut dyn Write = if out.is_some() { stdout } else { stderr };
            sink.write_all(verdict.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))
        }
        Command::Simulate {
            network,
            packing,
            instances,
            q,
            seed,
            transcript,
        } => {
            let net = read_network(network)?;
            let pack = read_packing(packing)?;
            if let Some(column) = pack.columns().first() {
                if column.node_count() != net.node_count() {
                    return Err(CliError::Usage(format!(
                        "packing spans {} nodes but the network has {}",
                        column.node_count(),
                        net.node_count()
                    )));
                }
            }
            if !simulate::is_prime(*q) {
                return Err(CliError::Usage(format!("q must be prime, got {q}")));
            }
            if *instances == 0 {
                return Err(CliError::Usage("need at least one instance".into()));
            }
            if let Err(v) = pack.check_feasible(&net) {
                return Err(CliError::Verification(format!(
                    "packing is infeasible for this network: {v}"
                )));
            }
            let scale = simulate::weight_scale(&pack);
            let scale = u64::try_from(&scale)
                .map_err(|_| CliError::Usage("packing weights have huge denominators".into()))?;
            let mut rng = SplitMix64::new(*seed);
            if *transcript {
                if let Some((column, _)) = pack.iter().next() {
                    let schedule = simulate::schedule_column(column, *instances);
                    let inputs = simulate::InputAssignment::random(
                        net.node_count(),
                        *instances,
                        *q,
                        &mut rng.split(),
                    )
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                    let t = simulate::execute(&column.as_network(), &schedule, &inputs)
                        .map_err(|e| CliError::Verification(e.to_string()))?;
                    stdout
                        .write_all(t.dump().as_bytes())
                        .map_err(|e| CliError::Io(e.to_string()))?;
                }
            }
            let run = simulate::execute_packing(&net, &pack, scale, *instances, *q, &mut rng)
                .map_err(|e| match e {
                    simulate::SimError::CapacityViolation { .. } => {
                        CliError::Internal(e.to_string())
                    }
                    simulate::SimError::DecodeFailure { .. }
                    | simulate::SimError::CausalityViolation { .. } => {
                        CliError::Verification(e.to_string())
                    }
                    other => CliError::Usage(other.to_string()),
                })?;
            writeln!(
                stdout,
                "seed={} q={} scale={} streams={} rounds={} decoded=ok rate={}",
                seed,
                q,
                run.scale,
                run.streams,
                run.rounds,
                frac(&run.throughput)
            )
            .map_err(|e| CliError::Io(e.to_string()))
        }
        Command::Report { network, json } => {
            let net = read_network(network)?;
            let report = lp::bounds_report(&net).map_err(lp_error)?;
            let cap = lp::packing_cap(&net);
            if *json {
                let doc = serde_json::json!({
                    "k": net.node_count(),
                    "links": net.edge_count(),
                    "beta_total": net.total_bandwidth().to_string(),
                    "upper": report.upper.value().to_string(),
                    "cut": report.upper.subset().iter().map(|n| n.0).collect::<Vec<_>>(),
                    "lower": frac(&report.lower),
                    "lower_provenance": "lp-colgen",
                    "packing_cap": frac(&cap),
                    "gap": report.gap_ratio.as_ref().map(frac),
                    "within_factor_two": report.within_factor_two(),
                });
                writeln!(stdout, "{doc}").map_err(|e| CliError::Io(e.to_string()))
            } else {
                let mut table = String::new();
                writeln!(
                    table,
                    "network: K={} links={} beta_total={}",
                    net.node_count(),
                    net.edge_count(),
                    net.total_bandwidth()
                )?;
                writeln!(
                    table,
                    "upper:   {} cut={}",
                    report.upper.value(),
                    cut_set_string(&report.upper)
                )?;
                writeln!(
                    table,
                    "lower:   {} (lp-colgen) ~ {:.6}",
                    frac(&report.lower),
                    approx(&report.lower)
                )?;
                writeln!(table, "cap:     {} ~ {:.6}", frac(&cap), approx(&cap))?;
                match &report.gap_ratio {
                    Some(gap) => writeln!(
                        table,
                        "gap:     {} ~ {:.6} within_2x={}",
                        frac(gap),
                        approx(gap),
                        if report.within_factor_two() {
                            "yes"
                        } else {
                            "no"
                        }
                    )?,
                    None => writeln!(table, "gap:     n/a (rate is zero)")?,
                }
                stdout
                    .write_all(table.as_bytes())
                    .map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }
}

fn solve_lp(net: &Network, mode: LpMode, force: bool) -> Result<LpSolution, CliError> {
    match mode {
        LpMode::Exhaustive => {
            if force {
                lp::lp_exhaustive_forced(net).map_err(lp_error)
            } else {
                lp::lp_exhaustive(net).map_err(lp_error)
            }
        }
        LpMode::Colgen => lp::lp_colgen(net).map_err(lp_error),
    }
}
