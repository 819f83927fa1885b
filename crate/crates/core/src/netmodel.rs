//! Immutable network model: node identities, optional planar positions and
//! the pairwise distance table.
//!
//! Node IDs are 1-based at every public interface. Internally the table is a
//! dense row-major `Vec<f64>` indexed from 0.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// A node identifier, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn new(id: u32) -> Self {
        NodeId(id)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub(crate) fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        NodeId(index as u32 + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(id: u32) -> Self {
        NodeId(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// How [`validate_table`] treats a matrix whose halves disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryPolicy {
    /// Reject any `cost[i][j] != cost[j][i]`.
    Strict,
    /// Copy the upper triangle over the lower one.
    SymmetrizeUpper,
}

/// The n×n pairwise cost matrix.
///
/// Every entry is finite and non-negative and the diagonal is zero. Tables
/// built through [`validate_table`] with [`SymmetryPolicy::Strict`] or
/// [`SymmetryPolicy::SymmetrizeUpper`], or through [`table_from_positions`],
/// are symmetric. [`DistanceTable::directed`] admits asymmetric tables for
/// callers that route over directed links.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTable {
    n: usize,
    cost: Vec<f64>,
}

impl DistanceTable {
    /// Builds a possibly asymmetric table. Entries must be finite and
    /// non-negative with a zero diagonal.
    pub fn directed(raw: &[Vec<f64>]) -> Result<Self> {
        let n = check_shape(raw)?;
        let cost = raw.iter().flatten().copied().collect();
        Ok(DistanceTable { n, cost })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Cost of travelling from `a` to `b`. Panics on unknown IDs; use
    /// [`DistanceTable::checked_cost`] for untrusted input.
    pub fn cost(&self, a: NodeId, b: NodeId) -> f64 {
        self.cost[a.index() * self.n + b.index()]
    }

    pub fn checked_cost(&self, a: NodeId, b: NodeId) -> Result<f64> {
        self.check_node(a)?;
        self.check_node(b)?;
        Ok(self.cost(a, b))
    }

    pub(crate) fn cost_ix(&self, a: usize, b: usize) -> f64 {
        self.cost[a * self.n + b]
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 >= 1 && (v.0 as usize) <= self.n
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownNode(v.0))
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (1..=self.n as u32).map(NodeId)
    }

    pub fn row(&self, v: NodeId) -> &[f64] {
        let start = v.index() * self.n;
        &self.cost[start..start + self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.cost
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .take(self.n)
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.cost_ix(i, j) == self.cost_ix(j, i)))
    }
}

fn check_shape(raw: &[Vec<f64>]) -> Result<usize> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::InvalidInput("distance table is empty".into()));
    }
    for (i, row) in raw.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                row.len()
            )));
        }
        for (j, &c) in row.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "cost[{}][{}] = {c} is not a finite non-negative distance",
                    i + 1,
                    j + 1
                )));
            }
            if i == j && c != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "cost[{}][{}] = {c}, diagonal must be zero",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(n)
}

/// Pairwise Euclidean distances, unrounded.
pub fn table_from_positions(positions: &[Position]) -> Result<DistanceTable> {
    if positions.is_empty() {
        return Err(Error::InvalidInput(
            "at least one position is required".into(),
        ));
    }
    if let Some((i, p)) = positions
        .iter()
        .enumerate()
        .find(|(_, p)| !p.x.is_finite() || !p.y.is_finite())
    {
        return Err(Error::InvalidInput(format!(
            "position of node {} ({}, {}) is not finite",
            i + 1,
            p.x,
            p.y
        )));
    }
    let n = positions.len();
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = positions[i].distance(&positions[j]);
            cost[i * n + j] = d;
            cost[j * n + i] = d;
        }
    }
    Ok(DistanceTable { n, cost })
}

pub fn validate_table(raw: &[Vec<f64>], policy: SymmetryPolicy) -> Result<DistanceTable> {
    let mut table = DistanceTable::directed(raw)?;
    let n = table.n;
    for i in 0..n {
        for j in i + 1..n {
            let upper = table.cost[i * n + j];
            let lower = table.cost[j * n + i];
            if upper == lower {
                continue;
            }
            match policy {
                SymmetryPolicy::Strict => {
                    return Err(Error::AsymmetricTable {
                        i: i as u32 + 1,
                        j: j as u32 + 1,
                        forward: upper,
                        backward: lower,
                    })
                }
                SymmetryPolicy::SymmetrizeUpper => table.cost[j * n + i] = upper,
            }
        }
    }
    Ok(table)
}

/// Every node other than `v` within `radius` of it.
pub fn neighbors(table: &DistanceTable, v: NodeId, radius: f64) -> Result<BTreeSet<NodeId>> {
    table.check_node(v)?;
    check_radius(radius)?;
    Ok(table
        .nodes()
        .filter(|&i| i != v && table.cost(v, i) <= radius)
        .collect())
}

pub(crate) fn check_radius(radius: f64) -> Result<()> {
    if radius.is_nan() || radius < 0.0 {
        return Err(Error::InvalidInput(format!(
            "transmission radius {radius} must be non-negative"
        )));
    }
    Ok(())
}

/// A network: its nodes, the ground-truth distance table, optional planar
/// positions, and which node acts as coordinator.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Option<Vec<Position>>,
    table: DistanceTable,
    coordinator: NodeId,
}

impl Topology {
    pub fn from_positions(positions: Vec<Position>) -> Result<Self> {
        let table = table_from_positions(&positions)?;
        Ok(Topology {
            positions: Some(positions),
            table,
            coordinator: NodeId(1),
        })
    }

    pub fn from_table(table: DistanceTable) -> Self {
        Topology {
            positions: None,
            table,
            coordinator: NodeId(1),
        }
    }

    pub fn with_coordinator(mut self, coordinator: NodeId) -> Result<Self> {
        self.table.check_node(coordinator)?;
        self.coordinator = coordinator;
        Ok(self)
    }

    pub fn table(&self) -> &DistanceTable {
        &self.table
    }

    pub fn positions(&self) -> Option<&[Position]> {
        self.positions.as_deref()
    }

    pub fn coordinator(&self) -> NodeId {
        self.coordinator
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        self.table.nodes()
    }

    /// Parses a topology document:
    /// `{"positions": [[x, y], ...]}` or `{"matrix": [[...], ...]}`, with
    /// optional `"symmetrize": true` and `"coordinator": <id>`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TopologyDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let topology = match (doc.positions, doc.matrix) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidInput(
                    "topology has both \"positions\" and \"matrix\"".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidInput(
                    "topology needs \"positions\" or \"matrix\"".into(),
                ))
            }
            (Some(points), None) => Topology::from_positions(
                points
                    .into_iter()
                    .map(|[x, y]| Position::new(x, y))
                    .collect(),
            )?,
            (None, Some(matrix)) => {
                let policy = if doc.symmetrize {
                    SymmetryPolicy::SymmetrizeUpper
                } else {
                    SymmetryPolicy::Strict
                };
                Topology::from_table(validate_table(&matrix, policy)?)
            }
        };
        match doc.coordinator {
            Some(id) => topology.with_coordinator(NodeId(id)),
            None => Ok(topology),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    positions: Option<Vec<[f64; 2]>>,
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    symmetrize: bool,
    coordinator: Option<u32>,
}

/// The 10-node distance table of the reference home network, verbatim,
/// including its single asymmetric pair (5, 7).
pub const TABLE_ONE_RAW: [[u8; 10]; 10] = [
    [0, 4, 2, 5, 5, 7, 6, 8, 9, 9],
    [4, 0, 2, 7, 6, 5, 5, 7, 7, 8],
    [2, 2, 0, 5, 4, 5, 4, 6, 7, 8],
    [5, 7, 5, 0, 3, 8, 7, 7, 9, 8],
    [5, 6, 4, 3, 0, 6, 5, 2, 7, 5],
    [7, 5, 5, 8, 6, 0, 3, 8, 2, 5],
    [6, 5, 4, 7, 4, 3, 0, 5, 4, 4],
    [8, 7, 6, 7, 2, 8, 5, 0, 6, 4],
    [9, 7, 7, 9, 7, 2, 4, 6, 0, 4],
    [9, 8, 8, 8, 5, 5, 4, 4, 4, 0],
];

pub fn table_one_raw() -> Vec<Vec<f64>> {
    TABLE_ONE_RAW
        .iter()
        .map(|row| row.iter().map(|&c| f64::from(c)).collect())
        .collect()
}

/// The reference table with its upper triangle mirrored.
pub fn table_one() -> DistanceTable {
    validate_table(&table_one_raw(), SymmetryPolicy::SymmetrizeUpper)
        .expect("reference table is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn single_position_gives_zero_table() {
        let t = table_from_positions(&[Position::new(0.0, 0.0)]).unwrap();
        assert_eq!(t.rows(), vec![vec![0.0]]);
    }

    #[test]
    fn euclidean_entries() {
        let t = table_from_positions(&[Position::new(0.0, 0.0), Position::new(3.0, 4.0)]).unwrap();
        assert_eq!(t.cost(NodeId(1), NodeId(2)), 5.0);

        let t = table_from_positions(&[
            Position::new(0.0, 0.0),
            Position::new(1.0, 0.0),
            Position::new(0.0, 1.0),
        ])
        .unwrap();
        assert!((t.cost(NodeId(2), NodeId(3)) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn non_finite_position_rejected() {
        let err = table_from_positions(&[Position::new(0.0, f64::NAN)]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(table_from_positions(&[]).is_err());
    }

    #[test]
    fn strict_accepts_symmetric() {
        let raw = vec![vec![0.0, 4.0], vec![4.0, 0.0]];
        let t = validate_table(&raw, SymmetryPolicy::Strict).unwrap();
        assert_eq!(t.rows(), raw);
    }

    #[test]
    fn reference_table_is_asymmetric_at_five_seven() {
        let err = validate_table(&table_one_raw(), SymmetryPolicy::Strict).unwrap_err();
        assert_eq!(
            err,
            Error::AsymmetricTable {
                i: 5,
                j: 7,
                forward: 5.0,
                backward: 4.0
            }
        );
    }

    #[test]
    fn symmetrize_upper_wins() {
        let t = table_one();
        assert_eq!(t.cost(NodeId(5), NodeId(7)), 5.0);
        assert_eq!(t.cost(NodeId(7), NodeId(5)), 5.0);
        assert!(t.is_symmetric());
    }

    #[test]
    fn bad_entries_rejected() {
        let neg = vec![vec![0.0, -1.0], vec![-1.0, 0.0]];
        assert!(matches!(
            validate_table(&neg, SymmetryPolicy::SymmetrizeUpper),
            Err(Error::InvalidInput(_))
        ));
        let diag = vec![vec![1.0, 2.0], vec![2.0, 0.0]];
        assert!(matches!(
            validate_table(&diag, SymmetryPolicy::Strict),
            Err(Error::InvalidInput(_))
        ));
        let ragged = vec![vec![0.0, 2.0], vec![2.0]];
        assert!(validate_table(&ragged, SymmetryPolicy::Strict).is_err());
    }

    #[test]
    fn neighbor_sets() {
        let t = table_one();
        assert_eq!(neighbors(&t, NodeId(1), 5.0).unwrap(), ids(&[2, 3, 4, 5]));
        assert!(neighbors(&t, NodeId(1), 1.0).unwrap().is_empty());
        assert_eq!(neighbors(&t, NodeId(10), 4.0).unwrap(), ids(&[7, 8, 9]));
        assert_eq!(
            neighbors(&t, NodeId(11), 4.0).unwrap_err(),
            Error::UnknownNode(11)
        );
        assert_eq!(
            neighbors(&t, NodeId(0), 4.0).unwrap_err(),
            Error::UnknownNode(0)
        );
    }

    #[test]
    fn fixture_file_matches_reference() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/table1.json");
        let topo = Topology::load(path).unwrap();
        assert_eq!(topo.table(), &table_one());
        assert_eq!(topo.coordinator(), NodeId(1));
        assert!(topo.positions().is_none());
    }

    #[test]
    fn json_documents() {
        let topo =
            Topology::from_json(r#"{"positions": [[0,0],[3,4]], "coordinator": 2}"#).unwrap();
        assert_eq!(topo.table().cost(NodeId(1), NodeId(2)), 5.0);
        assert_eq!(topo.coordinator(), NodeId(2));

        let err = Topology::from_json(r#"{"matrix": [[0,1],[2,0]]}"#).unwrap_err();
        assert!(matches!(err, Error::AsymmetricTable { .. }));

        let err = Topology::from_json("{\n  \"matrix\": [[0,1],\n  [1,0]\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");

        assert!(Topology::from_json(r#"{"matrix": [[0]], "coordinator": 3}"#).is_err());
        assert!(Topology::from_json(r#"{}"#).is_err());
        assert!(Topology::from_json(r#"{"matrix": [[0]], "radius": 3}"#).is_err());
    }

    fn positions() -> impl Strategy<Value = Vec<Position>> {
        prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..12)
            .prop_map(|v| v.into_iter().map(|(x, y)| Position::new(x, y)).collect())
    }

    fn square_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..8).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::vec(0.0..50.0f64, n), n).prop_map(|mut m| {
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = 0.0;
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn positions_give_symmetric_zero_diagonal(ps in positions()) {
            let t = table_from_positions(&ps).unwrap();
            prop_assert!(t.is_symmetric());
            for v in t.nodes() {
                prop_assert_eq!(t.cost(v, v), 0.0);
            }
        }

        #[test]
        fn positions_give_metric(ps in positions()) {
            let t = table_from_positions(&ps).unwrap();
            let n = t.len();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        prop_assert!(t.cost_ix(i, k) <= t.cost_ix(i, j) + t.cost_ix(j, k) + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn symmetrize_always_symmetric(m in square_matrix()) {
            let t = validate_table(&m, SymmetryPolicy::SymmetrizeUpper).unwrap();
            prop_assert!(t.is_symmetric());
        }

        #[test]
        fn neighbors_monotone_in_radius(m in square_matrix(), a in 0.0..60.0f64, b in 0.0..60.0f64) {
            let t = validate_table(&m, SymmetryPolicy::SymmetrizeUpper).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for v in t.nodes() {
                let small = neighbors(&t, v, lo).unwrap();
                let large = neighbors(&t, v, hi).unwrap();
                prop_assert!(small.is_subset(&large));
            }
        }
    }
}
