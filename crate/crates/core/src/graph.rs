//! Finite topological graphs.
//!
//! A graph here is a finite vertex set together with finitely many edges,
//! each of which is attached at two, one or zero endpoints. Half-open and
//! free edges model the non-relatively-compact edges of a graph and carry
//! its open ends: a half-open edge has one open end, a free edge two.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Identifier of a vertex, totally ordered and unique within a graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub u32);

/// Identifier of an edge, totally ordered and unique within a graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeId(pub u32);

/// Identifier of an open-disc connected component of a curve.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct DiscId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for DiscId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.0)
    }
}

/// How an edge is attached to the vertex set.
///
/// `Closed(u, v)` is an edge with both endpoints (a loop when `u == v`),
/// `HalfOpen(u)` has a single endpoint and one open end, `Free` has no
/// endpoint at all and is a connected component of its own with two open
/// ends.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum EdgeAttachment {
    Closed(VertexId, VertexId),
    HalfOpen(VertexId),
    Free,
}

impl EdgeAttachment {
    /// Endpoint order is immaterial; store closed pairs as (min, max).
    pub fn normalized(self) -> Self {
        match self {
            EdgeAttachment::Closed(u, v) if v < u => EdgeAttachment::Closed(v, u),
            other => other,
        }
    }

    pub fn endpoints(&self) -> impl Iterator<Item = VertexId> + '_ {
        let (a, b) = match *self {
            EdgeAttachment::Closed(u, v) => (Some(u), Some(v)),
            EdgeAttachment::HalfOpen(u) => (Some(u), None),
            EdgeAttachment::Free => (None, None),
        };
        a.into_iter().chain(b)
    }

    pub fn is_open(&self) -> bool {
        matches!(self, EdgeAttachment::HalfOpen(_) | EdgeAttachment::Free)
    }

    /// Number of open ends this edge carries (0, 1 or 2).
    pub fn open_ends(&self) -> usize {
        match self {
            EdgeAttachment::Closed(..) => 0,
            EdgeAttachment::HalfOpen(_) => 1,
            EdgeAttachment::Free => 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {edge} is attached to {vertex}, which is not a vertex of the graph")]
    DanglingEdge { edge: EdgeId, vertex: VertexId },
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),
}

/// A finite topological graph: finitely many vertices and attached edges.
/// The vertex list is kept sorted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct TopoGraph {
    vertices: Vec<VertexId>,
    edges: BTreeMap<EdgeId, EdgeAttachment>,
}

/// One connected component of a graph, as subsets of the ambient id spaces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GraphComponent {
    pub vertices: BTreeSet<VertexId>,
    pub edges: BTreeSet<EdgeId>,
}

impl TopoGraph {
    pub fn new(
        vertices: impl IntoIterator<Item = VertexId>,
        edges: impl IntoIterator<Item = (EdgeId, EdgeAttachment)>,
    ) -> Result<Self, GraphError> {
        let mut vertices: Vec<VertexId> = vertices.into_iter().collect();
        vertices.sort_unstable();
        vertices.dedup();
        let mut normalized = BTreeMap::new();
        for (id, att) in edges {
            let att = att.normalized();
            for v in att.endpoints() {
                if vertices.binary_search(&v).is_err() {
                    return Err(GraphError::DanglingEdge { edge: id, vertex: v });
                }
            }
            normalized.insert(id, att);
        }
        Ok(TopoGraph { vertices, edges: normalized })
    }

    pub fn empty() -> Self {
        TopoGraph::default()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeMap<EdgeId, EdgeAttachment> {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn attachment(&self, e: EdgeId) -> Result<EdgeAttachment, GraphError> {
        self.edges.get(&e).copied().ok_or(GraphError::UnknownEdge(e))
    }

    pub fn max_vertex_token(&self) -> Option<u32> {
        self.vertices.last().map(|v| v.0)
    }

    pub fn max_edge_token(&self) -> Option<u32> {
        self.edges.keys().next_back().map(|e| e.0)
    }

    /// The vertex partition into connected pieces, as a union-find over the
    /// sorted vertex list. Free edges are not represented (they carry no
    /// vertex).
    fn vertex_partition(&self) -> (&[VertexId], UnionFind) {
        let verts = self.vertices.as_slice();
        let idx = |v: VertexId| verts.binary_search(&v).expect("endpoint is a vertex");
        let mut uf = UnionFind::new(verts.len());
        for att in self.edges.values() {
            if let EdgeAttachment::Closed(u, v) = att {
                uf.union(idx(*u), idx(*v));
            }
        }
        (verts, uf)
    }

    /// Connected components, in a fixed deterministic order: components
    /// containing vertices first (by minimum vertex id), then vertex-free
    /// free-edge components (by minimum edge id).
    pub fn components(&self) -> Vec<GraphComponent> {
        let (verts, mut uf) = self.vertex_partition();

        // Roots appear in ascending minimum-vertex order because union
        // keeps the smaller index as representative.
        let mut slot_of_root = vec![usize::MAX; verts.len()];
        let mut comps: Vec<GraphComponent> = Vec::new();
        for (i, &v) in verts.iter().enumerate() {
            let root = uf.find(i);
            if slot_of_root[root] == usize::MAX {
                slot_of_root[root] = comps.len();
                comps.push(GraphComponent { vertices: BTreeSet::new(), edges: BTreeSet::new() });
            }
            comps[slot_of_root[root]].vertices.insert(v);
        }
        for (&e, att) in &self.edges {
            if let Some(v) = att.endpoints().next() {
                let root = uf.find(verts.binary_search(&v).unwrap());
                comps[slot_of_root[root]].edges.insert(e);
            }
        }
        for (&e, att) in &self.edges {
            if matches!(att, EdgeAttachment::Free) {
                comps.push(GraphComponent {
                    vertices: BTreeSet::new(),
                    edges: std::iter::once(e).collect(),
                });
            }
        }
        comps
    }

    pub fn component_count(&self) -> usize {
        let (verts, mut uf) = self.vertex_partition();
        let vertex_comps = (0..verts.len()).filter(|&i| uf.find(i) == i).count();
        let free = self
            .edges
            .values()
            .filter(|a| matches!(a, EdgeAttachment::Free))
            .count();
        vertex_comps + free
    }

    /// The induced subgraph carried by one component.
    pub fn component_graph(&self, comp: &GraphComponent) -> TopoGraph {
        TopoGraph {
            vertices: comp.vertices.iter().copied().collect(),
            edges: comp.edges.iter().map(|e| (*e, self.edges[e])).collect(),
        }
    }

    /// e⁰(G): half-open edges contribute one open end, free edges two.
    pub fn open_end_count(&self) -> usize {
        self.edges.values().map(|a| a.open_ends()).sum()
    }

    /// Number of edge-endpoint incidences at `x`; a loop counts twice.
    pub fn valence(&self, x: VertexId) -> Result<usize, GraphError> {
        if !self.contains_vertex(x) {
            return Err(GraphError::UnknownVertex(x));
        }
        Ok(self
            .edges
            .values()
            .map(|att| att.endpoints().filter(|&v| v == x).count())
            .sum())
    }

    /// First Betti number: #π₀ − v + e − e⁰. Nonnegative for every graph.
    pub fn genus(&self) -> u64 {
        let g = self.component_count() as i64 - self.vertex_count() as i64
            + self.edge_count() as i64
            - self.open_end_count() as i64;
        u64::try_from(g).expect("genus of a finite topological graph is nonnegative")
    }

    /// Open-end compactification: one fresh vertex per open end. Fresh
    /// tokens are derived from the edge id and the end index, so the result
    /// is reproducible.
    pub fn compactify(&self) -> TopoGraph {
        let base = self.max_vertex_token().map_or(0, |m| m + 1);
        let mut vertices = self.vertices.clone();
        let mut edges = BTreeMap::new();
        for (&e, &att) in &self.edges {
            let fresh = |end: u32| VertexId(base + 2 * e.0 + end);
            let new_att = match att {
                EdgeAttachment::Closed(..) => att,
                EdgeAttachment::HalfOpen(u) => {
                    let w = fresh(0);
                    vertices.push(w);
                    EdgeAttachment::Closed(u, w).normalized()
                }
                EdgeAttachment::Free => {
                    let (w0, w1) = (fresh(0), fresh(1));
                    vertices.push(w0);
                    vertices.push(w1);
                    EdgeAttachment::Closed(w0, w1)
                }
            };
            edges.insert(e, new_att);
        }
        vertices.sort_unstable();
        TopoGraph { vertices, edges }
    }

    /// Delete a vertex set; every edge keeps its id and loses the removed
    /// endpoints (closed → half-open → free as endpoints disappear).
    pub fn remove_vertices(&self, remove: &BTreeSet<VertexId>) -> Result<TopoGraph, GraphError> {
        for v in remove {
            if !self.contains_vertex(*v) {
                return Err(GraphError::UnknownVertex(*v));
            }
        }
        let vertices: Vec<VertexId> =
            self.vertices.iter().copied().filter(|v| !remove.contains(v)).collect();
        let edges = self
            .edges
            .iter()
            .map(|(&e, &att)| {
                let kept: Vec<VertexId> =
                    att.endpoints().filter(|v| !remove.contains(v)).collect();
                let new_att = match (att, kept.as_slice()) {
                    (EdgeAttachment::Closed(..), [u, v]) => EdgeAttachment::Closed(*u, *v),
                    (EdgeAttachment::Closed(..), [u]) => EdgeAttachment::HalfOpen(*u),
                    (EdgeAttachment::HalfOpen(_), [u]) => EdgeAttachment::HalfOpen(*u),
                    _ => EdgeAttachment::Free,
                };
                (e, new_att.normalized())
            })
            .collect();
        Ok(TopoGraph { vertices, edges })
    }

    /// Borel–Moore Euler characteristic #π₀ − g − e⁰; equals v − e.
    pub fn bm_characteristic(&self) -> i64 {
        self.component_count() as i64 - self.genus() as i64 - self.open_end_count() as i64
    }

    /// Both sides of the localization identity for vertex deletion:
    /// the per-component sum Σ (1 − g − e⁰) over G∖S, and χ_BM(G) − #S.
    pub fn check_bm_localization(
        &self,
        remove: &BTreeSet<VertexId>,
    ) -> Result<(i64, i64), GraphError> {
        let h = self.remove_vertices(remove)?;
        let lhs = h
            .components()
            .iter()
            .map(|c| {
                let piece = h.component_graph(c);
                1 - piece.genus() as i64 - piece.open_end_count() as i64
            })
            .sum();
        let rhs = self.bm_characteristic() - remove.len() as i64;
        Ok((lhs, rhs))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Cycle rank of a compact graph, counted as the number of redundant
/// union operations over a spanning forest. Used as an independent check
/// against the genus formula.
pub fn compact_cycle_rank(g: &TopoGraph) -> u64 {
    let verts: Vec<VertexId> = g.vertices().iter().copied().collect();
    let index: BTreeMap<VertexId, usize> =
        verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::new(verts.len());
    let mut rank = 0;
    for att in g.edges().values() {
        match att {
            EdgeAttachment::Closed(u, v) => {
                if !uf.union(index[u], index[v]) {
                    rank += 1;
                }
            }
            _ => panic!("cycle rank is defined for compact graphs only"),
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph(
        n: u32,
        edges: &[(u32, EdgeAttachment)],
    ) -> TopoGraph {
        TopoGraph::new(
            (0..n).map(VertexId),
            edges.iter().map(|&(e, att)| (EdgeId(e), att)),
        )
        .unwrap()
    }

    fn closed(u: u32, v: u32) -> EdgeAttachment {
        EdgeAttachment::Closed(VertexId(u), VertexId(v))
    }

    fn half(u: u32) -> EdgeAttachment {
        EdgeAttachment::HalfOpen(VertexId(u))
    }

    #[test]
    fn components_empty_graph() {
        assert!(TopoGraph::empty().components().is_empty());
    }

    #[test]
    fn components_isolated_vertices_and_free_edge() {
        let g = graph(2, &[]);
        assert_eq!(g.components().len(), 2);
        let g = TopoGraph::new([VertexId(0)], [(EdgeId(0), EdgeAttachment::Free)]).unwrap();
        let comps = g.components();
        assert_eq!(comps.len(), 2);
        assert!(comps[0].vertices.contains(&VertexId(0)));
        assert!(comps[1].edges.contains(&EdgeId(0)));
    }

    #[test]
    fn open_end_counting() {
        let g = graph(1, &[(0, half(0))]);
        assert_eq!(g.open_end_count(), 1);
        let g = graph(0, &[(0, EdgeAttachment::Free)]);
        assert_eq!(g.open_end_count(), 2);
        let g = graph(2, &[(0, closed(0, 1))]);
        assert_eq!(g.open_end_count(), 0);
    }

    #[test]
    fn valence_counts_loops_twice() {
        let g = graph(1, &[]);
        assert_eq!(g.valence(VertexId(0)).unwrap(), 0);
        let g = graph(1, &[(0, closed(0, 0))]);
        assert_eq!(g.valence(VertexId(0)).unwrap(), 2);
        let g = graph(2, &[(0, closed(0, 1))]);
        assert_eq!(g.valence(VertexId(0)).unwrap(), 1);
        assert!(g.valence(VertexId(7)).is_err());
    }

    #[test]
    fn genus_basic_shapes() {
        let loop_graph = graph(1, &[(0, closed(0, 0))]);
        assert_eq!(loop_graph.genus(), 1);
        let free = graph(0, &[(0, EdgeAttachment::Free)]);
        assert_eq!(free.genus(), 0);
        let theta = graph(2, &[(0, closed(0, 1)), (1, closed(0, 1)), (2, closed(0, 1))]);
        assert_eq!(theta.genus(), 2);
    }

    #[test]
    fn compactify_adds_one_vertex_per_end() {
        let free = graph(0, &[(0, EdgeAttachment::Free)]);
        let c = free.compactify();
        assert_eq!(c.vertex_count(), 2);
        assert_eq!(c.open_end_count(), 0);
        assert_eq!(c.component_count(), free.component_count());
        assert_eq!(c.genus(), free.genus());

        let compact = graph(2, &[(0, closed(0, 1))]);
        assert_eq!(compact.compactify(), compact);

        let h = graph(1, &[(0, half(0))]);
        let c = h.compactify();
        assert_eq!(c.vertex_count(), 2);
        assert!(matches!(c.attachment(EdgeId(0)).unwrap(), EdgeAttachment::Closed(..)));
    }

    #[test]
    fn remove_vertices_degrades_attachments() {
        let seg = graph(2, &[(0, closed(0, 1))]);
        let h = seg.remove_vertices(&[VertexId(0)].into()).unwrap();
        assert_eq!(h.attachment(EdgeId(0)).unwrap(), half(1));

        let lp = graph(1, &[(0, closed(0, 0))]);
        let h = lp.remove_vertices(&[VertexId(0)].into()).unwrap();
        assert_eq!(h.attachment(EdgeId(0)).unwrap(), EdgeAttachment::Free);

        assert_eq!(seg.remove_vertices(&BTreeSet::new()).unwrap(), seg);
        assert!(seg.remove_vertices(&[VertexId(9)].into()).is_err());
    }

    #[test]
    fn bm_characteristic_examples() {
        assert_eq!(graph(1, &[]).bm_characteristic(), 1);
        assert_eq!(graph(0, &[(0, EdgeAttachment::Free)]).bm_characteristic(), -1);
        assert_eq!(graph(1, &[(0, closed(0, 0))]).bm_characteristic(), 0);
    }

    #[test]
    fn bm_localization_examples() {
        let seg = graph(2, &[(0, closed(0, 1))]);
        let (lhs, rhs) = seg.check_bm_localization(&[VertexId(0)].into()).unwrap();
        assert_eq!((lhs, rhs), (0, 0));

        let lp = graph(1, &[(0, closed(0, 0))]);
        let (lhs, rhs) = lp.check_bm_localization(&[VertexId(0)].into()).unwrap();
        assert_eq!((lhs, rhs), (-1, -1));

        let theta = graph(2, &[(0, closed(0, 1)), (1, closed(0, 1)), (2, closed(0, 1))]);
        let (lhs, rhs) = theta.check_bm_localization(&BTreeSet::new()).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(lhs, theta.bm_characteristic());
    }

    #[test]
    fn genus_matches_cycle_rank_after_compactifying() {
        let cases = [
            graph(0, &[(0, EdgeAttachment::Free)]),
            graph(1, &[(0, half(0)), (1, closed(0, 0))]),
            graph(3, &[(0, closed(0, 1)), (1, closed(1, 2)), (2, closed(0, 2)), (3, half(1))]),
        ];
        for g in cases {
            assert_eq!(g.genus(), compact_cycle_rank(&g.compactify()));
        }
    }
}
