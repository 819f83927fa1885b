//! Traffic experiment report and its CSV form.

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use homenet::routing::all_pairs_profile;
use homenet::simnet::{run_traffic, SimConfig};
use homenet::{CountingMode, NodeId, Topology};
use sha2::{Digest, Sha256};

/// Echoes the configuration and carries the results. `Display` omits
/// `runtime` so the rendered report is byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub topology_hash: String,
    pub k: f64,
    pub seed: u64,
    pub mode: CountingMode,
    pub transmissions: u64,
    pub counts: Vec<u64>,
    pub expected: Vec<f64>,
    pub top3: Vec<NodeId>,
    /// Top three under the other counting mode, same draws.
    pub alt_top3: (CountingMode, Vec<NodeId>),
    pub unreachable: u64,
    pub runtime: Duration,
}

/// SHA-256 over node count, coordinator and every cost's IEEE bits.
pub fn topology_hash(topology: &Topology) -> String {
    let table = topology.table();
    let mut h = Sha256::new();
    h.update((table.len() as u32).to_be_bytes());
    h.update(topology.coordinator().get().to_be_bytes());
    for row in table.rows() {
        for c in row {
            h.update(c.to_bits().to_be_bytes());
        }
    }
    hex::encode(&h.finalize()[..8])
}

fn other(mode: CountingMode) -> CountingMode {
    match mode {
        CountingMode::TransmittersOnly => CountingMode::AllPathNodes,
        CountingMode::AllPathNodes => CountingMode::TransmittersOnly,
    }
}

pub fn run_experiment(
    topology: &Topology,
    k: f64,
    transmissions: u64,
    seed: u64,
    mode: CountingMode,
) -> homenet::Result<ExperimentReport> {
    let start = Instant::now();
    let config = SimConfig {
        radius: k,
        transmissions,
        seed,
        mode,
    };
    let stats = run_traffic(topology, &config)?;
    let alt = run_traffic(
        topology,
        &SimConfig {
            mode: other(mode),
            ..config
        },
    )?;
    let analytic = all_pairs_profile(topology.table(), k, mode)?;
    let n = topology.len() as f64;
    let pairs = n * (n - 1.0);
    let expected = analytic
        .counts()
        .iter()
        .map(|&c| {
            if pairs > 0.0 {
                transmissions as f64 * c as f64 / pairs
            } else {
                0.0
            }
        })
        .collect();
    Ok(ExperimentReport {
        topology_hash: topology_hash(topology),
        k,
        seed,
        mode,
        transmissions,
        counts: stats.counts().to_vec(),
        expected,
        top3: stats.top_nodes(3),
        alt_top3: (other(mode), alt.top_nodes(3)),
        unreachable: stats.unreachable(),
        runtime: start.elapsed(),
    })
}

fn ids(nodes: &[NodeId]) -> String {
    nodes
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentReport {
    pub fn write_csv(&self, out: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_id", "simulated_count", "expected_count"])?;
        for (i, (count, expected)) in self.counts.iter().zip(&self.expected).enumerate() {
            w.write_record([
                (i + 1).to_string(),
                count.to_string(),
                format!("{expected:.3}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "topology      {}", self.topology_hash)?;
        writeln!(f, "k             {}", self.k)?;
        writeln!(f, "seed          {}", self.seed)?;
        writeln!(f, "mode          {}", self.mode.as_str())?;
        writeln!(f, "transmissions {}", self.transmissions)?;
        writeln!(f, "unreachable   {}", self.unreachable)?;
        writeln!(f, "top3 {:<14} {}", self.mode.as_str(), ids(&self.top3))?;
        write!(
            f,
            "top3 {:<14} {}",
            self.alt_top3.0.as_str(),
            ids(&self.alt_top3.1)
        )
    }
}
