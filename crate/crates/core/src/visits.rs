use crate::netmodel::NodeId;

/// Which nodes on a delivered path count as visited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CountingMode {
    /// Every node that transmits the packet: the sender and each relay.
    #[default]
    TransmittersOnly,
    /// Every node on the path, the final receiver included.
    AllPathNodes,
}

impl CountingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CountingMode::TransmittersOnly => "transmitters",
            CountingMode::AllPathNodes => "all-path-nodes",
        }
    }
}

/// Per-node visit counts over a batch of routed transmissions.
///
/// `relay_counts` tracks interior path nodes only and is kept regardless of
/// the counting mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitStats {
    mode: CountingMode,
    counts: Vec<u64>,
    relays: Vec<u64>,
    transmissions: u64,
    unreachable: u64,
}

impl VisitStats {
    pub fn new(nodes: usize, mode: CountingMode) -> Self {
        VisitStats {
            mode,
            counts: vec![0; nodes],
            relays: vec![0; nodes],
            transmissions: 0,
            unreachable: 0,
        }
    }

    pub fn record_delivery(&mut self, path: &[NodeId]) {
        self.transmissions += 1;
        let counted = match self.mode {
            CountingMode::TransmittersOnly => &path[..path.len().saturating_sub(1)],
            CountingMode::AllPathNodes => path,
        };
        for node in counted {
            self.counts[node.index()] += 1;
        }
        if path.len() > 2 {
            for node in &path[1..path.len() - 1] {
                self.relays[node.index()] += 1;
            }
        }
    }

    pub fn record_unreachable(&mut self) {
        self.transmissions += 1;
        self.unreachable += 1;
    }

    pub fn mode(&self) -> CountingMode {
        self.mode
    }

    /// Indexed by node ID − 1.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, node: NodeId) -> u64 {
        self.counts[node.index()]
    }

    pub fn relay_counts(&self) -> &[u64] {
        &self.relays
    }

    /// Attempted transmissions, delivered or not.
    pub fn transmissions(&self) -> u64 {
        self.transmissions
    }

    pub fn delivered(&self) -> u64 {
        self.transmissions - self.unreachable
    }

    pub fn unreachable(&self) -> u64 {
        self.unreachable
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// The `k` most visited nodes, ties broken by lower ID.
    pub fn top_nodes(&self, k: usize) -> Vec<NodeId> {
        rank(&self.counts, k)
    }

    pub fn top_relays(&self, k: usize) -> Vec<NodeId> {
        rank(&self.relays, k)
    }
}

fn rank(counts: &[u64], k: usize) -> Vec<NodeId> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order.into_iter().take(k).map(NodeId::from_index).collect()
}
