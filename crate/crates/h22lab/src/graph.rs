//! Finite pinned weighted graphs and wired-boundary collapses.
//!
//! A [`PinnedGraph`] is a finite, connected, undirected graph with strictly
//! positive edge weights and a distinguished pin vertex at which all fields
//! are clamped to zero. A [`HostExhaustion`] holds a finite host graph
//! together with nested vertex levels; collapsing everything outside a level
//! onto a fresh boundary vertex (summing the crossing weights) produces the
//! wired approximation of the host at that level.

use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque vertex identifier used in graph files and public constructors.
pub type VertexId = i64;

/// Validation failures for graph and exhaustion construction.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("pin vertex {0} is not in the vertex list")]
    PinNotPresent(VertexId),
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("edge endpoint {0} is not a listed vertex")]
    UnknownVertex(VertexId),
    #[error("self-loop on vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({i}, {j}) has non-positive or non-finite weight {weight}")]
    NonPositiveWeight { i: VertexId, j: VertexId, weight: f64 },
    #[error("edge ({i}, {j}) listed twice with conflicting weights {first} and {second}")]
    InconsistentEdge {
        i: VertexId,
        j: VertexId,
        first: f64,
        second: f64,
    },
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph has no interior vertices")]
    NoInterior,
    #[error("no exhaustion levels given")]
    NoLevels,
    #[error("level {0} contains vertex {1} which is not a host vertex")]
    LevelVertexUnknown(usize, VertexId),
    #[error("level {0} is not a proper subset of the host vertex set")]
    LevelNotProper(usize),
    #[error("level {0} is not strictly contained in level {1}")]
    LevelsNotNested(usize, usize),
    #[error("level index {0} out of range 1..={1}")]
    LevelOutOfRange(usize, usize),
    #[error("wired collapse at level {0} is disconnected")]
    CollapseDisconnected(usize),
}

/// Finite connected weighted graph with a pin vertex.
///
/// Internally the interior vertices keep their input order and occupy the
/// indices `0..n_interior()`; the pin sits at the last index. All matrix- and
/// vector-valued quantities in this crate follow that ordering, so a vector
/// over the interior aligns with the leading block of a vector over the whole
/// graph.
#[derive(Debug, Clone)]
pub struct PinnedGraph {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl PinnedGraph {
    /// Validate and build a pinned graph from a vertex list, a pin id, and an
    /// undirected edge list. The edge list may contain each undirected edge
    /// once or twice (in both orientations) as long as the weights agree.
    pub fn build(
        vertices: &[VertexId],
        pin: VertexId,
        edges: &[(VertexId, VertexId, f64)],
    ) -> Result<Self, GraphError> {
        if !vertices.contains(&pin) {
            return Err(GraphError::PinNotPresent(pin));
        }
        let mut ids: Vec<VertexId> = vertices.iter().copied().filter(|&v| v != pin).collect();
        if ids.is_empty() {
            return Err(GraphError::NoInterior);
        }
        ids.push(pin);
        let mut index = HashMap::with_capacity(ids.len());
        for (k, &v) in ids.iter().enumerate() {
            if index.insert(v, k).is_some() {
                return Err(GraphError::DuplicateVertex(v));
            }
        }

        let mut weight_of: HashMap<(usize, usize), f64> = HashMap::new();
        for &(a, b, w) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let ia = *index.get(&a).ok_or(GraphError::UnknownVertex(a))?;
            let ib = *index.get(&b).ok_or(GraphError::UnknownVertex(b))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::NonPositiveWeight { i: a, j: b, weight: w });
            }
            let key = (ia.min(ib), ia.max(ib));
            if let Some(&prev) = weight_of.get(&key) {
                if prev != w {
                    return Err(GraphError::InconsistentEdge {
                        i: a,
                        j: b,
                        first: prev,
                        second: w,
                    });
                }
            } else {
                weight_of.insert(key, w);
            }
        }

        let mut edge_list: Vec<(usize, usize, f64)> =
            weight_of.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        edge_list.sort_unstable_by_key(|e| (e.0, e.1));

        let mut adj = vec![Vec::new(); ids.len()];
        for &(i, j, w) in &edge_list {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }

        let graph = Self {
            ids,
            index,
            edges: edge_list,
            adj,
        };
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    fn is_connected(&self) -> bool {
        let n = self.ids.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Number of interior vertices `|V|`.
    pub fn n_interior(&self) -> usize {
        self.ids.len() - 1
    }

    /// Total number of vertices including the pin.
    pub fn n_total(&self) -> usize {
        self.ids.len()
    }

    /// Internal index of the pin (always the last index).
    pub fn pin_index(&self) -> usize {
        self.ids.len() - 1
    }

    /// Vertex id of the pin.
    pub fn pin_id(&self) -> VertexId {
        self.ids[self.pin_index()]
    }

    /// All vertex ids in internal order (interior first, pin last).
    pub fn vertex_ids(&self) -> &[VertexId] {
        &self.ids
    }

    /// Internal index of a vertex id.
    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.index.get(&v).copied()
    }

    /// Vertex id at an internal index.
    pub fn id_of(&self, idx: usize) -> VertexId {
        self.ids[idx]
    }

    /// Undirected edges as `(i, j, weight)` with internal indices `i < j`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Neighbors of an internal index with the connecting weights.
    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adj[idx]
    }

    /// Weight between two internal indices, zero when not adjacent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[i]
            .iter()
            .find(|&&(k, _)| k == j)
            .map_or(0.0, |&(_, w)| w)
    }

    /// The weight vector to the pin, `W_{i,pin}` for interior `i`.
    pub fn pin_weights(&self) -> DVector<f64> {
        let nv = self.n_interior();
        let pin = self.pin_index();
        DVector::from_fn(nv, |i, _| self.weight(i, pin))
    }

    /// Edges with both endpoints in the interior.
    pub fn interior_edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let pin = self.pin_index();
        self.edges
            .iter()
            .copied()
            .filter(move |&(i, j, _)| i != pin && j != pin)
    }

    /// Rebuild the graph with the same topology but new edge weights, given
    /// as `(i, j, weight)` over internal indices.
    pub fn with_weights(&self, weights: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let edges: Vec<(VertexId, VertexId, f64)> = weights
            .iter()
            .map(|&(i, j, w)| (self.ids[i], self.ids[j], w))
            .collect();
        let interior: Vec<VertexId> = self.ids[..self.n_interior()].to_vec();
        let mut vertices = interior;
        vertices.push(self.pin_id());
        Self::build(&vertices, self.pin_id(), &edges)
    }
}

/// Finite weighted graph without a pin; stands in for an infinite graph
/// truncated at a finite radius. Weights beyond the host are zero by
/// convention.
#[derive(Debug, Clone)]
pub struct HostGraph {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    edges: Vec<(usize, usize, f64)>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl HostGraph {
    /// Validate and build a host graph (connected, positive weights, no
    /// self-loops).
    pub fn build(
        vertices: &[VertexId],
        edges: &[(VertexId, VertexId, f64)],
    ) -> Result<Self, GraphError> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (k, &v) in vertices.iter().enumerate() {
            if index.insert(v, k).is_some() {
                return Err(GraphError::DuplicateVertex(v));
            }
        }
        let mut weight_of: HashMap<(usize, usize), f64> = HashMap::new();
        for &(a, b, w) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let ia = *index.get(&a).ok_or(GraphError::UnknownVertex(a))?;
            let ib = *index.get(&b).ok_or(GraphError::UnknownVertex(b))?;
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::NonPositiveWeight { i: a, j: b, weight: w });
            }
            let key = (ia.min(ib), ia.max(ib));
            if let Some(&prev) = weight_of.get(&key) {
                if prev != w {
                    return Err(GraphError::InconsistentEdge {
                        i: a,
                        j: b,
                        first: prev,
                        second: w,
                    });
                }
            } else {
                weight_of.insert(key, w);
            }
        }
        let mut edge_list: Vec<(usize, usize, f64)> =
            weight_of.into_iter().map(|((i, j), w)| (i, j, w)).collect();
        edge_list.sort_unstable_by_key(|e| (e.0, e.1));
        let mut adj = vec![Vec::new(); vertices.len()];
        for &(i, j, w) in &edge_list {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        let host = Self {
            ids: vertices.to_vec(),
            index,
            edges: edge_list,
            adj,
        };
        // connectivity
        let n = host.ids.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &host.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        if count != n {
            return Err(GraphError::Disconnected);
        }
        Ok(host)
    }

    /// All host vertex ids in input order.
    pub fn vertex_ids(&self) -> &[VertexId] {
        &self.ids
    }

    /// Internal index of a host vertex id.
    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.index.get(&v).copied()
    }

    /// Undirected host edges as `(i, j, weight)` over internal indices.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Neighbors of an internal index with the connecting weights.
    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adj[idx]
    }

    /// Number of host vertices.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    /// True when the host has no vertices.
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// A host graph with strictly nested vertex levels, each of which induces a
/// connected wired collapse.
#[derive(Debug, Clone)]
pub struct HostExhaustion {
    host: HostGraph,
    levels: Vec<Vec<VertexId>>,
    fresh_base: VertexId,
}

impl HostExhaustion {
    /// Validate levels against the host and pre-check every collapse.
    pub fn new(host: HostGraph, levels: Vec<Vec<VertexId>>) -> Result<Self, GraphError> {
        if levels.is_empty() {
            return Err(GraphError::NoLevels);
        }
        for (k, level) in levels.iter().enumerate() {
            for &v in level {
                if host.index_of(v).is_none() {
                    return Err(GraphError::LevelVertexUnknown(k + 1, v));
                }
            }
            if level.is_empty() || level.len() >= host.len() {
                return Err(GraphError::LevelNotProper(k + 1));
            }
        }
        for k in 0..levels.len() - 1 {
            let next: &Vec<VertexId> = &levels[k + 1];
            let nested = levels[k].iter().all(|v| next.contains(v));
            if !nested || levels[k].len() >= next.len() {
                return Err(GraphError::LevelsNotNested(k + 1, k + 2));
            }
        }
        let fresh_base = host.vertex_ids().iter().copied().max().unwrap_or(0);
        let exhaustion = Self {
            host,
            levels,
            fresh_base,
        };
        for n in 1..=exhaustion.num_levels() {
            exhaustion.wired_collapse(n)?;
        }
        Ok(exhaustion)
    }

    /// The underlying host graph.
    pub fn host(&self) -> &HostGraph {
        &self.host
    }

    /// Number of levels `m`.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Vertex ids of level `n` (1-based).
    pub fn level(&self, n: usize) -> Result<&[VertexId], GraphError> {
        if n == 0 || n > self.levels.len() {
            return Err(GraphError::LevelOutOfRange(n, self.levels.len()));
        }
        Ok(&self.levels[n - 1])
    }

    /// The reserved boundary-vertex id used at level `n`.
    pub fn boundary_id(&self, n: usize) -> VertexId {
        self.fresh_base + n as VertexId
    }

    /// Collapse everything outside level `n` onto a fresh boundary vertex,
    /// summing the crossing weights. The boundary vertex becomes the pin of
    /// the returned graph.
    pub fn wired_collapse(&self, n: usize) -> Result<PinnedGraph, GraphError> {
        let level = self.level(n)?;
        let inside: Vec<usize> = level
            .iter()
            .map(|&v| self.host.index_of(v).expect("validated level vertex"))
            .collect();
        let member: Vec<bool> = {
            let mut m = vec![false; self.host.len()];
            for &i in &inside {
                m[i] = true;
            }
            m
        };
        let pin = self.boundary_id(n);
        let mut vertices: Vec<VertexId> = level.to_vec();
        vertices.push(pin);
        let mut edges: Vec<(VertexId, VertexId, f64)> = Vec::new();
        for &i in &inside {
            let vi = self.host.vertex_ids()[i];
            let mut crossing = 0.0;
            for &(j, w) in self.host.neighbors(i) {
                if member[j] {
                    let vj = self.host.vertex_ids()[j];
                    if vi < vj {
                        edges.push((vi, vj, w));
                    }
                } else {
                    crossing += w;
                }
            }
            if crossing > 0.0 {
                edges.push((vi, pin, crossing));
            }
        }
        PinnedGraph::build(&vertices, pin, &edges).map_err(|e| match e {
            GraphError::Disconnected => GraphError::CollapseDisconnected(n),
            other => other,
        })
    }
}

/// Serialized form of a pinned graph: `vertices`, `pin`, and `edges` as
/// `[i, j, weight]` triples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<VertexId>,
    pub pin: VertexId,
    pub edges: Vec<(VertexId, VertexId, f64)>,
}

impl GraphFile {
    /// Validate into a [`PinnedGraph`].
    pub fn build(&self) -> Result<PinnedGraph, GraphError> {
        PinnedGraph::build(&self.vertices, self.pin, &self.edges)
    }
}

impl From<&PinnedGraph> for GraphFile {
    fn from(g: &PinnedGraph) -> Self {
        GraphFile {
            vertices: g.vertex_ids().to_vec(),
            pin: g.pin_id(),
            edges: g
                .edges()
                .iter()
                .map(|&(i, j, w)| (g.id_of(i), g.id_of(j), w))
                .collect(),
        }
    }
}

/// Serialized host graph (no pin).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HostFile {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<(VertexId, VertexId, f64)>,
}

/// Serialized exhaustion: a host plus nested levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExhaustionFile {
    pub host: HostFile,
    pub levels: Vec<Vec<VertexId>>,
}

impl ExhaustionFile {
    /// Validate into a [`HostExhaustion`].
    pub fn build(&self) -> Result<HostExhaustion, GraphError> {
        let host = HostGraph::build(&self.host.vertices, &self.host.edges)?;
        HostExhaustion::new(host, self.levels.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3_host() -> HostGraph {
        HostGraph::build(&[1, 2, 3], &[(1, 2, 1.0), (2, 3, 1.0)]).unwrap()
    }

    #[test]
    fn builds_minimal_single_interior_graph() {
        let g = PinnedGraph::build(&[0, 1], 0, &[(0, 1, 1.0)]).unwrap();
        assert_eq!(g.n_interior(), 1);
        assert_eq!(g.pin_id(), 0);
        assert_eq!(g.weight(0, g.pin_index()), 1.0);
    }

    #[test]
    fn builds_path_graph() {
        let g = PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(g.n_interior(), 2);
        // internal order: interior 1, 2 then pin
        assert_eq!(g.vertex_ids(), &[1, 2, 0]);
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, g.pin_index()), 0.0);
    }

    #[test]
    fn rejects_self_loop() {
        let err = PinnedGraph::build(&[0, 1], 0, &[(1, 1, 1.0)]).unwrap_err();
        assert!(matches!(err, GraphError::SelfLoop(1)));
    }

    #[test]
    fn rejects_non_positive_weight() {
        let err = PinnedGraph::build(&[0, 1], 0, &[(0, 1, -2.0)]).unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveWeight { .. }));
    }

    #[test]
    fn rejects_disconnected() {
        let err = PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0)]).unwrap_err();
        assert!(matches!(err, GraphError::Disconnected));
    }

    #[test]
    fn rejects_missing_pin_and_conflicting_duplicate() {
        let err = PinnedGraph::build(&[1, 2], 0, &[(1, 2, 1.0)]).unwrap_err();
        assert!(matches!(err, GraphError::PinNotPresent(0)));
        let err =
            PinnedGraph::build(&[0, 1], 0, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap_err();
        assert!(matches!(err, GraphError::InconsistentEdge { .. }));
        // agreeing duplicate is fine
        let g = PinnedGraph::build(&[0, 1], 0, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn wired_collapse_single_boundary_neighbor() {
        let exh = HostExhaustion::new(path3_host(), vec![vec![1]]).unwrap();
        let g = exh.wired_collapse(1).unwrap();
        assert_eq!(g.n_interior(), 1);
        let pin = g.pin_index();
        assert_eq!(g.weight(0, pin), 1.0);
    }

    #[test]
    fn wired_collapse_sums_exterior_weights() {
        let exh = HostExhaustion::new(path3_host(), vec![vec![1, 2]]).unwrap();
        let g = exh.wired_collapse(1).unwrap();
        assert_eq!(g.n_interior(), 2);
        let i1 = g.index_of(1).unwrap();
        let i2 = g.index_of(2).unwrap();
        let pin = g.pin_index();
        assert_eq!(g.weight(i1, i2), 1.0);
        assert_eq!(g.weight(i2, pin), 1.0);
        assert_eq!(g.weight(i1, pin), 0.0);
    }

    #[test]
    fn wired_collapse_star_center() {
        let host = HostGraph::build(
            &[10, 11, 12, 13],
            &[(10, 11, 1.0), (10, 12, 1.0), (10, 13, 1.0)],
        )
        .unwrap();
        let exh = HostExhaustion::new(host, vec![vec![10]]).unwrap();
        let g = exh.wired_collapse(1).unwrap();
        assert_eq!(g.weight(0, g.pin_index()), 3.0);
    }

    #[test]
    fn crossing_weights_telescope_across_levels() {
        let host = HostGraph::build(
            &[1, 2, 3, 4],
            &[(1, 2, 0.5), (2, 3, 1.5), (3, 4, 2.5), (1, 3, 0.25)],
        )
        .unwrap();
        let exh = HostExhaustion::new(host, vec![vec![1, 2], vec![1, 2, 3]]).unwrap();
        let g1 = exh.wired_collapse(1).unwrap();
        let g2 = exh.wired_collapse(2).unwrap();
        // W^{(1)}_{i,d1} = sum over {3} of W_{ij} + W^{(2)}_{i,d2}
        for &v in exh.level(1).unwrap() {
            let i1 = g1.index_of(v).unwrap();
            let i2 = g2.index_of(v).unwrap();
            let hv = host_weight(exh.host(), v, 3);
            let got = g1.weight(i1, g1.pin_index());
            let expect = hv + g2.weight(i2, g2.pin_index());
            assert!((got - expect).abs() < 1e-12, "vertex {v}: {got} vs {expect}");
        }
    }

    fn host_weight(host: &HostGraph, a: VertexId, b: VertexId) -> f64 {
        let ia = host.index_of(a).unwrap();
        let ib = host.index_of(b).unwrap();
        host.neighbors(ia)
            .iter()
            .find(|&&(k, _)| k == ib)
            .map_or(0.0, |&(_, w)| w)
    }

    #[test]
    fn rejects_bad_levels() {
        let err = HostExhaustion::new(path3_host(), vec![vec![1, 2, 3]]).unwrap_err();
        assert!(matches!(err, GraphError::LevelNotProper(1)));
        let err = HostExhaustion::new(path3_host(), vec![vec![2], vec![1]]).unwrap_err();
        assert!(matches!(err, GraphError::LevelsNotNested(1, 2)));
        let err = HostExhaustion::new(path3_host(), vec![vec![7]]).unwrap_err();
        assert!(matches!(err, GraphError::LevelVertexUnknown(1, 7)));
    }

    #[test]
    fn level_out_of_range() {
        let exh = HostExhaustion::new(path3_host(), vec![vec![1]]).unwrap();
        assert!(matches!(
            exh.wired_collapse(2).unwrap_err(),
            GraphError::LevelOutOfRange(2, 1)
        ));
    }

    #[test]
    fn graph_file_round_trip() {
        let g = PinnedGraph::build(&[0, 1, 2], 0, &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let file = GraphFile::from(&g);
        let text = serde_json::to_string(&file).unwrap();
        let back: GraphFile = serde_json::from_str(&text).unwrap();
        let g2 = back.build().unwrap();
        assert_eq!(g2.vertex_ids(), g.vertex_ids());
        assert_eq!(g2.edges(), g.edges());
    }
}
