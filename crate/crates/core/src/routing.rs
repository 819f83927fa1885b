//! Radius-constrained optimal routing.
//!
//! A hop from `a` to `b` is usable only when `cost[a][b] <= k`. Among all
//! simple paths built from usable hops, the optimal route minimises, in
//! order: total distance, hop count, and the node-ID sequence compared
//! lexicographically. The last key only breaks exact ties and makes the
//! result fully deterministic.
//!
//! [`find_optimal_path`] is a label-setting search over the pruned edge set
//! whose labels carry the whole lexicographic key. [`brute_force_route`]
//! enumerates every simple path and exists to check it.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::netmodel::{check_radius, DistanceTable, NodeId};
use crate::visits::{CountingMode, VisitStats};

/// Largest table [`brute_force_route`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteQuery {
    pub from: NodeId,
    pub to: NodeId,
    /// Transmission radius: the longest single hop allowed.
    pub radius: f64,
}

impl RouteQuery {
    pub fn new(from: impl Into<NodeId>, to: impl Into<NodeId>, radius: f64) -> Self {
        RouteQuery {
            from: from.into(),
            to: to.into(),
            radius,
        }
    }

    fn validate(&self, table: &DistanceTable) -> Result<()> {
        table.check_node(self.from)?;
        table.check_node(self.to)?;
        check_radius(self.radius)
    }

    fn no_path(&self) -> Error {
        Error::NoPath {
            from: self.from.get(),
            to: self.to.get(),
            radius: self.radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub path: Vec<NodeId>,
    pub dist: f64,
    pub hops: usize,
}

impl Route {
    /// Nodes strictly between the endpoints.
    pub fn relays(&self) -> &[NodeId] {
        match self.path.len() {
            0..=2 => &[],
            len => &self.path[1..len - 1],
        }
    }

    pub fn ids(&self) -> Vec<u32> {
        self.path.iter().map(|n| n.get()).collect()
    }
}

/// Candidate path to one node during the search. `hops` is `path.len() - 1`.
#[derive(Debug, Clone)]
struct Label {
    dist: f64,
    path: Vec<usize>,
}

impl Label {
    fn key_cmp(&self, other: &Label) -> Ordering {
        // Distances are finite sums of finite costs.
        self.dist
            .partial_cmp(&other.dist)
            .unwrap_or(Ordering::Equal)
            .then(self.path.len().cmp(&other.path.len()))
            .then_with(|| self.path.cmp(&other.path))
    }

    fn into_route(self) -> Route {
        Route {
            hops: self.path.len() - 1,
            path: self.path.into_iter().map(NodeId::from_index).collect(),
            dist: self.dist,
        }
    }
}

/// Per-search bookkeeping: visit marks and the best label found so far for
/// every node. Marks are set once and never cleared.
struct SearchState {
    visited: Vec<bool>,
    best: Vec<Option<Label>>,
}

impl SearchState {
    fn new(n: usize, source: usize) -> Self {
        let mut best = vec![None; n];
        best[source] = Some(Label {
            dist: 0.0,
            path: vec![source],
        });
        SearchState {
            visited: vec![false; n],
            best,
        }
    }

    fn next_unvisited(&self) -> Option<usize> {
        let mut pick: Option<usize> = None;
        for (i, label) in self.best.iter().enumerate() {
            let Some(label) = label else { continue };
            if self.visited[i] {
                continue;
            }
            match pick {
                Some(p) if self.best[p].as_ref().unwrap().key_cmp(label) != Ordering::Greater => {}
                _ => pick = Some(i),
            }
        }
        pick
    }

    fn offer(&mut self, node: usize, candidate: Label) {
        let improves = match &self.best[node] {
            None => true,
            Some(current) => candidate.key_cmp(current) == Ordering::Less,
        };
        if improves {
            self.best[node] = Some(candidate);
        }
    }
}

pub fn find_optimal_path(table: &DistanceTable, query: &RouteQuery) -> Result<Route> {
    query.validate(table)?;
    let n = table.len();
    let source = query.from.index();
    let target = query.to.index();
    let mut state = SearchState::new(n, source);

    while let Some(current) = state.next_unvisited() {
        state.visited[current] = true;
        if current == target {
            break;
        }
        let base = state.best[current].clone().unwrap();
        for next in 0..n {
            if state.visited[next] || next == current {
                continue;
            }
            let hop = table.cost_ix(current, next);
            if hop > query.radius {
                continue;
            }
            let mut path = base.path.clone();
            path.push(next);
            state.offer(
                next,
                Label {
                    dist: base.dist + hop,
                    path,
                },
            );
        }
    }

    if !state.visited[target] {
        return Err(query.no_path());
    }
    Ok(state.best[target].take().unwrap().into_route())
}

/// Exhaustive reference for [`find_optimal_path`]: enumerates every simple
/// path from `from` to `to` and keeps the lexicographic minimum.
pub fn brute_force_route(table: &DistanceTable, query: &RouteQuery) -> Result<Route> {
    query.validate(table)?;
    if table.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            nodes: table.len(),
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let target = query.to.index();
    let mut on_path = vec![false; table.len()];
    let mut path = vec![query.from.index()];
    on_path[query.from.index()] = true;
    let mut best: Option<Label> = None;
    enumerate(
        table,
        query.radius,
        target,
        &mut path,
        &mut on_path,
        0.0,
        &mut best,
    );
    best.map(Label::into_route).ok_or_else(|| query.no_path())
}

fn enumerate(
    table: &DistanceTable,
    radius: f64,
    target: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    dist: f64,
    best: &mut Option<Label>,
) {
    let last = *path.last().unwrap();
    if last == target {
        let candidate = Label {
            dist,
            path: path.clone(),
        };
        if best
            .as_ref()
            .is_none_or(|b| candidate.key_cmp(b) == Ordering::Less)
        {
            *best = Some(candidate);
        }
        return;
    }
    for next in 0..table.len() {
        let hop = table.cost_ix(last, next);
        if on_path[next] || hop > radius {
            continue;
        }
        on_path[next] = true;
        path.push(next);
        enumerate(table, radius, target, path, on_path, dist + hop, best);
        path.pop();
        on_path[next] = false;
    }
}

/// Sum of hop costs along `path`, left to right.
pub fn path_distance(table: &DistanceTable, path: &[NodeId]) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::InvalidPath("path is empty".into()));
    }
    let mut seen = vec![false; table.len()];
    for &node in path {
        table.check_node(node)?;
        if std::mem::replace(&mut seen[node.index()], true) {
            return Err(Error::InvalidPath(format!("node {node} appears twice")));
        }
    }
    Ok(path
        .windows(2)
        .fold(0.0, |acc, pair| acc + table.cost(pair[0], pair[1])))
}

/// Routes every ordered pair `(v, w)`, `v != w`, once and accumulates visit
/// counts. Unreachable pairs are counted separately.
pub fn all_pairs_profile(
    table: &DistanceTable,
    radius: f64,
    mode: CountingMode,
) -> Result<VisitStats> {
    check_radius(radius)?;
    if table.len() < 2 {
        return Err(Error::InvalidInput(
            "profiling needs at least two nodes".into(),
        ));
    }
    let mut stats = VisitStats::new(table.len(), mode);
    for from in table.nodes() {
        for to in table.nodes().filter(|&to| to != from) {
            match find_optimal_path(table, &RouteQuery { from, to, radius }) {
                Ok(route) => stats.record_delivery(&route.path),
                Err(Error::NoPath { .. }) => stats.record_unreachable(),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(stats)
}
