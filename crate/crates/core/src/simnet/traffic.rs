//! Random point-to-point traffic and per-node visit accounting.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::netmodel::{check_radius, DistanceTable, NodeId, Topology};
use crate::rng::PairSampler;
use crate::routing::{find_optimal_path, Route, RouteQuery};
use crate::visits::{CountingMode, VisitStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub radius: f64,
    pub transmissions: u64,
    pub seed: u64,
    pub mode: CountingMode,
}

/// One drawn transmission and the route it took, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub from: NodeId,
    pub to: NodeId,
    pub route: Option<Route>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficRun {
    pub stats: VisitStats,
    pub log: Vec<Delivery>,
}

pub fn run_traffic(topology: &Topology, config: &SimConfig) -> Result<VisitStats> {
    run_traffic_with(topology, config, find_optimal_path).map(|run| run.stats)
}

/// Draws `config.transmissions` pairs from the seeded sampler and routes each
/// with `router`, keeping the per-transmission log.
pub fn run_traffic_with<R>(topology: &Topology, config: &SimConfig, router: R) -> Result<TrafficRun>
where
    R: Fn(&DistanceTable, &RouteQuery) -> Result<Route>,
{
    if topology.len() < 2 {
        return Err(Error::InvalidInput(
            "traffic needs at least two nodes".into(),
        ));
    }
    let pairs = PairSampler::new(topology.len(), config.seed).take(config.transmissions as usize);
    run_pairs_with(topology.table(), pairs, config.radius, config.mode, router)
}

/// Routes an explicit sequence of pairs.
pub fn run_pairs(
    table: &DistanceTable,
    pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    radius: f64,
    mode: CountingMode,
) -> Result<TrafficRun> {
    run_pairs_with(table, pairs, radius, mode, find_optimal_path)
}

fn run_pairs_with<R>(
    table: &DistanceTable,
    pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    radius: f64,
    mode: CountingMode,
    router: R,
) -> Result<TrafficRun>
where
    R: Fn(&DistanceTable, &RouteQuery) -> Result<Route>,
{
    check_radius(radius)?;
    let mut cache: HashMap<(NodeId, NodeId), Option<Route>> = HashMap::new();
    let mut stats = VisitStats::new(table.len(), mode);
    let mut log = Vec::new();
    for (from, to) in pairs {
        let route = match cache.get(&(from, to)) {
            Some(cached) => cached.clone(),
            None => {
                let route = match router(table, &RouteQuery { from, to, radius }) {
                    Ok(route) => Some(route),
                    Err(Error::NoPath { .. }) => None,
                    Err(e) => return Err(e),
                };
                cache.insert((from, to), route.clone());
                route
            }
        };
        match &route {
            Some(r) => stats.record_delivery(&r.path),
            None => stats.record_unreachable(),
        }
        log.push(Delivery { from, to, route });
    }
    Ok(TrafficRun { stats, log })
}
