//! Skeletal models of finite analytic curves.
//!
//! A curve is stored as its skeleton (a finite topological graph whose
//! vertices are the triangulation points), a marking of boundary vertices,
//! a coarse class, and a set of markers for connected components that are
//! open discs and therefore have an empty skeleton. Without the markers
//! the component and open-end counts of a curve with disc components would
//! come out wrong.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::graph::{DiscId, EdgeAttachment, EdgeId, GraphComponent, GraphError, TopoGraph, VertexId};

/// Coarse classification of a finite curve.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum CurveClass {
    Projective,
    Affinoid,
    WideOpen,
    FiniteGeneral,
}

impl CurveClass {
    pub const ALL: [CurveClass; 4] = [
        CurveClass::Projective,
        CurveClass::Affinoid,
        CurveClass::WideOpen,
        CurveClass::FiniteGeneral,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            CurveClass::Projective => "projective",
            CurveClass::Affinoid => "affinoid",
            CurveClass::WideOpen => "wideopen",
            CurveClass::FiniteGeneral => "general",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        CurveClass::ALL.into_iter().find(|c| c.keyword() == s)
    }
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("boundary vertex {0} is not a vertex of the skeleton")]
    BoundaryNotInGraph(VertexId),
    #[error("projective curve cannot have boundary vertices ({0})")]
    ProjectiveBoundary(VertexId),
    #[error("projective curve cannot have open edges ({0})")]
    ProjectiveOpenEdge(EdgeId),
    #[error("projective curve cannot have open-disc components ({0})")]
    ProjectiveDisc(DiscId),
    #[error("affinoid curve cannot have open edges ({0})")]
    AffinoidOpenEdge(EdgeId),
    #[error("affinoid curve cannot have open-disc components ({0})")]
    AffinoidDisc(DiscId),
    #[error("affinoid curve has a component without boundary vertices (containing {0})")]
    AffinoidUnboundedComponent(VertexId),
    #[error("wide open curve cannot have boundary vertices ({0})")]
    WideOpenBoundary(VertexId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A connected component of a curve: either a component of the skeleton
/// graph or a skeletonless open-disc component.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CurveComponent {
    Graph(GraphComponent),
    Disc(DiscId),
}

impl CurveComponent {
    pub fn contains_vertex(&self, v: VertexId) -> bool {
        matches!(self, CurveComponent::Graph(g) if g.vertices.contains(&v))
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        matches!(self, CurveComponent::Graph(g) if g.edges.contains(&e))
    }

    pub fn contains_disc(&self, d: DiscId) -> bool {
        matches!(self, CurveComponent::Disc(x) if *x == d)
    }
}

/// Skeleton, boundary marking, class and open-disc components of a curve.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct CurveSkeleton {
    graph: TopoGraph,
    boundary: BTreeSet<VertexId>,
    class: CurveClass,
    discs: BTreeSet<DiscId>,
}

impl CurveSkeleton {
    pub fn new(
        graph: TopoGraph,
        boundary: impl IntoIterator<Item = VertexId>,
        class: CurveClass,
        discs: impl IntoIterator<Item = DiscId>,
    ) -> Result<Self, CurveError> {
        let boundary: BTreeSet<VertexId> = boundary.into_iter().collect();
        let discs: BTreeSet<DiscId> = discs.into_iter().collect();
        for &v in &boundary {
            if !graph.contains_vertex(v) {
                return Err(CurveError::BoundaryNotInGraph(v));
            }
        }
        match class {
            CurveClass::Projective => {
                if let Some(&v) = boundary.iter().next() {
                    return Err(CurveError::ProjectiveBoundary(v));
                }
                if let Some((&e, _)) = graph.edges().iter().find(|(_, a)| a.is_open()) {
                    return Err(CurveError::ProjectiveOpenEdge(e));
                }
                if let Some(&d) = discs.iter().next() {
                    return Err(CurveError::ProjectiveDisc(d));
                }
            }
            CurveClass::Affinoid => {
                if let Some((&e, _)) = graph.edges().iter().find(|(_, a)| a.is_open()) {
                    return Err(CurveError::AffinoidOpenEdge(e));
                }
                if let Some(&d) = discs.iter().next() {
                    return Err(CurveError::AffinoidDisc(d));
                }
                for comp in graph.components() {
                    if comp.vertices.is_disjoint(&boundary) {
                        // Affinoid components are compact, so every component
                        // here has a vertex.
                        let v = *comp.vertices.iter().next().expect("compact component");
                        return Err(CurveError::AffinoidUnboundedComponent(v));
                    }
                }
            }
            CurveClass::WideOpen => {
                if let Some(&v) = boundary.iter().next() {
                    return Err(CurveError::WideOpenBoundary(v));
                }
            }
            CurveClass::FiniteGeneral => {}
        }
        Ok(CurveSkeleton { graph, boundary, class, discs })
    }

    pub fn graph(&self) -> &TopoGraph {
        &self.graph
    }

    pub fn boundary(&self) -> &BTreeSet<VertexId> {
        &self.boundary
    }

    pub fn class(&self) -> CurveClass {
        self.class
    }

    pub fn discs(&self) -> &BTreeSet<DiscId> {
        &self.discs
    }

    /// Components of the curve: skeleton components first (in the graph
    /// order), then disc components in ascending id order.
    pub fn components(&self) -> Vec<CurveComponent> {
        let mut out: Vec<CurveComponent> =
            self.graph.components().into_iter().map(CurveComponent::Graph).collect();
        out.extend(self.discs.iter().copied().map(CurveComponent::Disc));
        out
    }

    pub fn component_count(&self) -> usize {
        self.graph.component_count() + self.discs.len()
    }

    /// g_t: the first Betti number of the skeleton. Disc components are
    /// contractible and contribute nothing.
    pub fn topological_genus(&self) -> u64 {
        self.graph.genus()
    }

    /// e⁰: open ends of the skeleton plus one end per disc component.
    pub fn open_end_count(&self) -> usize {
        self.graph.open_end_count() + self.discs.len()
    }

    /// The genus computed through the triangulation count,
    /// #π₀ − #T + e − e⁰. Always equals `topological_genus`.
    pub fn genus_via_triangulation(&self) -> u64 {
        let g = self.component_count() as i64 - self.graph.vertex_count() as i64
            + self.graph.edge_count() as i64
            - self.open_end_count() as i64;
        u64::try_from(g).expect("triangulated genus is nonnegative")
    }

    /// Borel–Moore characteristic of the curve: #π₀ − g_t − e⁰.
    pub fn bm_characteristic(&self) -> i64 {
        self.component_count() as i64
            - self.topological_genus() as i64
            - self.open_end_count() as i64
    }

    /// Is some skeleton component compact and boundary-free? Such a
    /// component models a projective curve regardless of the stored class.
    pub fn has_projective_like_component(&self) -> bool {
        self.graph.components().iter().any(|c| {
            c.edges.iter().all(|e| !self.graph.edges()[e].is_open())
                && c.vertices.is_disjoint(&self.boundary)
                && !c.vertices.is_empty()
        })
    }

    /// Insert one fresh triangulation point in the interior of an edge.
    /// All curve invariants and invariant quantities are preserved.
    pub fn subdivide_edge(&self, e: EdgeId) -> Result<CurveSkeleton, CurveError> {
        let att = self.graph.attachment(e)?;
        let w = VertexId(self.graph.max_vertex_token().map_or(0, |m| m + 1));
        let e2 = EdgeId(self.graph.max_edge_token().map_or(0, |m| m + 1));
        let mut vertices: Vec<VertexId> = self.graph.vertices().iter().copied().collect();
        vertices.push(w);
        let mut edges: Vec<(EdgeId, EdgeAttachment)> =
            self.graph.edges().iter().map(|(&id, &a)| (id, a)).collect();
        edges.retain(|(id, _)| *id != e);
        match att {
            EdgeAttachment::Closed(u, v) => {
                edges.push((e, EdgeAttachment::Closed(u, w)));
                edges.push((e2, EdgeAttachment::Closed(w, v)));
            }
            EdgeAttachment::HalfOpen(u) => {
                edges.push((e, EdgeAttachment::Closed(u, w)));
                edges.push((e2, EdgeAttachment::HalfOpen(w)));
            }
            EdgeAttachment::Free => {
                edges.push((e, EdgeAttachment::HalfOpen(w)));
                edges.push((e2, EdgeAttachment::HalfOpen(w)));
            }
        }
        let graph = TopoGraph::new(vertices, edges)?;
        CurveSkeleton::new(graph, self.boundary.iter().copied(), self.class, self.discs.iter().copied())
    }

    /// Skeletal components of the curve minus a vertex set, as curves.
    ///
    /// Vertex removal turns residue discs loose; those are open discs with
    /// empty skeleton and are not represented (each contributes zero to the
    /// localization sum). Vertex-free free-edge pieces are open annuli and
    /// are kept. Original disc components are likewise dropped.
    pub fn localize(&self, remove: &BTreeSet<VertexId>) -> Result<Vec<CurveSkeleton>, CurveError> {
        let h = self.graph.remove_vertices(remove)?;
        h.components()
            .iter()
            .map(|comp| {
                let piece = h.component_graph(comp);
                let boundary: BTreeSet<VertexId> =
                    comp.vertices.intersection(&self.boundary).copied().collect();
                let class = if boundary.is_empty() {
                    CurveClass::WideOpen
                } else {
                    CurveClass::FiniteGeneral
                };
                CurveSkeleton::new(piece, boundary, class, [])
            })
            .collect()
    }

    /// Both sides of the curve localization identity:
    /// Σ over non-disc pieces of (1 − g_t − e⁰), and χ_BM(curve) − #S.
    pub fn check_bm_curves(&self, remove: &BTreeSet<VertexId>) -> Result<(i64, i64), CurveError> {
        let lhs = self
            .localize(remove)?
            .iter()
            .map(|p| 1 - p.topological_genus() as i64 - p.open_end_count() as i64)
            .sum();
        let rhs = self.bm_characteristic() - remove.len() as i64;
        Ok((lhs, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeAttachment::{Closed, Free, HalfOpen};

    fn g(n: u32, edges: &[(u32, EdgeAttachment)]) -> TopoGraph {
        TopoGraph::new((0..n).map(VertexId), edges.iter().map(|&(e, a)| (EdgeId(e), a))).unwrap()
    }

    fn banana(k: u32) -> CurveSkeleton {
        let edges: Vec<(u32, EdgeAttachment)> =
            (0..k).map(|i| (i, Closed(VertexId(0), VertexId(1)))).collect();
        CurveSkeleton::new(g(2, &edges), [], CurveClass::Projective, []).unwrap()
    }

    fn closed_annulus() -> CurveSkeleton {
        CurveSkeleton::new(
            g(2, &[(0, Closed(VertexId(0), VertexId(1)))]),
            [VertexId(0), VertexId(1)],
            CurveClass::Affinoid,
            [],
        )
        .unwrap()
    }

    fn wide_open_annulus() -> CurveSkeleton {
        CurveSkeleton::new(g(0, &[(0, Free)]), [], CurveClass::WideOpen, []).unwrap()
    }

    fn open_disc() -> CurveSkeleton {
        CurveSkeleton::new(TopoGraph::empty(), [], CurveClass::WideOpen, [DiscId(0)]).unwrap()
    }

    #[test]
    fn genus_of_basic_curves() {
        let pline = CurveSkeleton::new(g(1, &[]), [], CurveClass::Projective, []).unwrap();
        assert_eq!(pline.topological_genus(), 0);
        assert_eq!(banana(3).topological_genus(), 2);
        assert_eq!(wide_open_annulus().topological_genus(), 0);
    }

    #[test]
    fn open_ends_of_basic_curves() {
        assert_eq!(closed_annulus().open_end_count(), 0);
        assert_eq!(open_disc().open_end_count(), 1);
        assert_eq!(wide_open_annulus().open_end_count(), 2);
    }

    #[test]
    fn triangulated_genus_matches() {
        for c in [banana(2), open_disc(), closed_annulus(), wide_open_annulus()] {
            assert_eq!(c.genus_via_triangulation(), c.topological_genus());
        }
        assert_eq!(banana(2).genus_via_triangulation(), 1);
        assert_eq!(open_disc().genus_via_triangulation(), 0);
        assert_eq!(closed_annulus().genus_via_triangulation(), 0);
    }

    #[test]
    fn class_invariants_rejected() {
        assert!(matches!(
            CurveSkeleton::new(g(1, &[(0, HalfOpen(VertexId(0)))]), [], CurveClass::Projective, []),
            Err(CurveError::ProjectiveOpenEdge(_))
        ));
        assert!(matches!(
            CurveSkeleton::new(g(1, &[]), [VertexId(0)], CurveClass::Projective, []),
            Err(CurveError::ProjectiveBoundary(_))
        ));
        assert!(matches!(
            CurveSkeleton::new(g(2, &[(0, Closed(VertexId(0), VertexId(1)))]), [], CurveClass::Affinoid, []),
            Err(CurveError::AffinoidUnboundedComponent(_))
        ));
        assert!(matches!(
            CurveSkeleton::new(g(1, &[]), [VertexId(0)], CurveClass::WideOpen, []),
            Err(CurveError::WideOpenBoundary(_))
        ));
        assert!(matches!(
            CurveSkeleton::new(g(0, &[]), [VertexId(3)], CurveClass::FiniteGeneral, []),
            Err(CurveError::BoundaryNotInGraph(_))
        ));
    }

    #[test]
    fn subdivide_preserves_invariants() {
        let lp = CurveSkeleton::new(g(1, &[(0, Closed(VertexId(0), VertexId(0)))]), [], CurveClass::Projective, [])
            .unwrap();
        let s = lp.subdivide_edge(EdgeId(0)).unwrap();
        assert_eq!(s.topological_genus(), 1);
        assert_eq!(s.graph().vertex_count(), 2);

        let free = wide_open_annulus();
        let s = free.subdivide_edge(EdgeId(0)).unwrap();
        assert_eq!(s.topological_genus(), 0);
        assert_eq!(s.open_end_count(), 2);
        assert_eq!(s.component_count(), 1);

        let seg = closed_annulus();
        let s = seg.subdivide_edge(EdgeId(0)).unwrap();
        assert_eq!(s.graph().vertex_count(), 3);
        assert_eq!(s.graph().edge_count(), 2);
        assert_eq!(s.boundary().len(), 2);
    }

    #[test]
    fn localize_pieces() {
        let seg = closed_annulus();
        let pieces = seg.localize(&[VertexId(0), VertexId(1)].into()).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].graph().vertex_count(), 0);
        assert_eq!(pieces[0].open_end_count(), 2);

        let b = banana(2);
        let pieces = b.localize(&[VertexId(0)].into()).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].graph().vertex_count(), 1);
        assert_eq!(pieces[0].open_end_count(), 2);

        let pieces = b.localize(&BTreeSet::new()).unwrap();
        assert_eq!(pieces.len(), 1);
    }

    #[test]
    fn bm_for_curves_examples() {
        let seg = closed_annulus();
        let (lhs, rhs) = seg.check_bm_curves(&[VertexId(0), VertexId(1)].into()).unwrap();
        assert_eq!((lhs, rhs), (-1, -1));

        let b = banana(2);
        let (lhs, rhs) = b.check_bm_curves(&[VertexId(0)].into()).unwrap();
        assert_eq!((lhs, rhs), (-1, -1));

        let (lhs, rhs) = b.check_bm_curves(&BTreeSet::new()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn projective_like_detection() {
        assert!(banana(2).has_projective_like_component());
        assert!(!closed_annulus().has_projective_like_component());
        assert!(!wide_open_annulus().has_projective_like_component());
        let mixed = CurveSkeleton::new(
            g(2, &[(0, Closed(VertexId(0), VertexId(0)))]),
            [],
            CurveClass::FiniteGeneral,
            [],
        )
        .unwrap();
        // Isolated vertex component and a loop component, neither with ends
        // nor boundary.
        assert!(mixed.has_projective_like_component());
    }
}
