//! Skeletal morphisms: vertex, edge and disc maps decorated with
//! multiplicities and degrees, together with the balancing constraints
//! that characterize the finite morphisms they model.
//!
//! Validation is the core of this module. A morphism is a plain data
//! record; `validate` reports every broken constraint instead of failing,
//! so invalid instances can be inspected through the CLI.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::curve::{CurveClass, CurveComponent, CurveSkeleton};
use crate::graph::{DiscId, EdgeAttachment, EdgeId, TopoGraph, VertexId};

/// Lookup from target elements to the index of their curve component.
pub(crate) struct ComponentIndex {
    pub vertex: BTreeMap<VertexId, usize>,
    pub edge: BTreeMap<EdgeId, usize>,
    pub disc: BTreeMap<DiscId, usize>,
    pub count: usize,
}

impl ComponentIndex {
    pub fn of(curve: &CurveSkeleton) -> Self {
        let mut vertex = BTreeMap::new();
        let mut edge = BTreeMap::new();
        let mut disc = BTreeMap::new();
        let comps = curve.components();
        for (i, comp) in comps.iter().enumerate() {
            match comp {
                CurveComponent::Graph(g) => {
                    for &v in &g.vertices {
                        vertex.insert(v, i);
                    }
                    for &e in &g.edges {
                        edge.insert(e, i);
                    }
                }
                CurveComponent::Disc(d) => {
                    disc.insert(*d, i);
                }
            }
        }
        ComponentIndex { vertex, edge, disc, count: comps.len() }
    }
}

/// One open end class of a curve: a half-open edge, one of the two ends of
/// a free edge, or a disc component.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum EndClass {
    HalfOpen(EdgeId),
    FreeEnd(EdgeId, u8),
    Disc(DiscId),
}

impl fmt::Display for EndClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndClass::HalfOpen(e) => write!(f, "end({e})"),
            EndClass::FreeEnd(e, side) => write!(f, "end({e},{side})"),
            EndClass::Disc(d) => write!(f, "end({d})"),
        }
    }
}

/// A broken morphism constraint, naming the offending element.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Violation {
    DegreeArity { expected: usize, got: usize },
    ZeroComponentDegree { component: usize },
    MissingVertexImage(VertexId),
    UnknownSourceVertex(VertexId),
    UnknownTargetVertex { vertex: VertexId, image: VertexId },
    ZeroMultiplicity(VertexId),
    MissingEdgeImage(EdgeId),
    UnknownSourceEdge(EdgeId),
    UnknownTargetEdge { edge: EdgeId, image: EdgeId },
    ZeroEdgeDegree(EdgeId),
    MissingDiscImage(DiscId),
    UnknownSourceDisc(DiscId),
    UnknownTargetDisc { disc: DiscId, image: DiscId },
    ZeroDiscDegree(DiscId),
    EndpointCommutation { edge: EdgeId },
    RamifiedDiscVertex(VertexId),
    RamifiedDiscDegree { vertex: VertexId, degree: u32 },
    ComponentNotCovered { component: usize },
    VertexFiberBalance { target: VertexId, expected: u64, got: u64 },
    EdgeFiberBalance { target: EdgeId, expected: u64, got: u64 },
    DiscFiberBalance { target: DiscId, expected: u64, got: u64 },
    LocalBalance { vertex: VertexId, target_edge: EdgeId, expected: u64, got: u64 },
    LoopOrientation { target_edge: EdgeId },
    BoundaryMismatch { vertex: VertexId },
    ClassMismatch { source: CurveClass, target: CurveClass },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DegreeArity { expected, got } => {
                write!(f, "degree map arity: target has {expected} components, got {got} degrees")
            }
            ZeroComponentDegree { component } => {
                write!(f, "degree of target component {component} must be >= 1")
            }
            MissingVertexImage(v) => write!(f, "vertex map is missing source vertex {v}"),
            UnknownSourceVertex(v) => write!(f, "vertex map mentions unknown source vertex {v}"),
            UnknownTargetVertex { vertex, image } => {
                write!(f, "vertex {vertex} maps to unknown target vertex {image}")
            }
            ZeroMultiplicity(v) => write!(f, "multiplicity at {v} must be >= 1"),
            MissingEdgeImage(e) => write!(f, "edge map is missing source edge {e}"),
            UnknownSourceEdge(e) => write!(f, "edge map mentions unknown source edge {e}"),
            UnknownTargetEdge { edge, image } => {
                write!(f, "edge {edge} maps to unknown target edge {image}")
            }
            ZeroEdgeDegree(e) => write!(f, "degree on edge {e} must be >= 1"),
            MissingDiscImage(d) => write!(f, "disc map is missing disc component {d}"),
            UnknownSourceDisc(d) => write!(f, "disc map mentions unknown disc {d}"),
            UnknownTargetDisc { disc, image } => {
                write!(f, "disc {disc} maps to unknown target disc {image}")
            }
            ZeroDiscDegree(d) => write!(f, "degree on disc {d} must be >= 1"),
            EndpointCommutation { edge } => {
                write!(f, "endpoint commutation fails at edge {edge}")
            }
            RamifiedDiscVertex(v) => {
                write!(f, "ramified disc attached at unknown vertex {v}")
            }
            RamifiedDiscDegree { vertex, degree } => {
                write!(f, "ramified disc at {vertex} has degree {degree}, needs 2 <= degree <= multiplicity")
            }
            ComponentNotCovered { component } => {
                write!(f, "target component {component} has no preimage")
            }
            VertexFiberBalance { target, expected, got } => {
                write!(f, "vertex fiber balancing at {target}: expected {expected}, got {got}")
            }
            EdgeFiberBalance { target, expected, got } => {
                write!(f, "edge fiber balancing at {target}: expected {expected}, got {got}")
            }
            DiscFiberBalance { target, expected, got } => {
                write!(f, "disc fiber balancing at {target}: expected {expected}, got {got}")
            }
            LocalBalance { vertex, target_edge, expected, got } => {
                write!(f, "local balancing at {vertex} over {target_edge}: expected {expected}, got {got}")
            }
            LoopOrientation { target_edge } => {
                write!(f, "no consistent orientation of the lifts of loop {target_edge}")
            }
            BoundaryMismatch { vertex } => {
                write!(f, "boundary membership of {vertex} disagrees with its image")
            }
            ClassMismatch { source, target } => {
                write!(f, "source class {source} differs from target class {target}")
            }
        }
    }
}

/// Outcome of `validate`: empty means the morphism satisfies every
/// constraint.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn into_violations(self) -> Vec<Violation> {
        self.violations
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MorphismError {
    #[error("invalid morphism: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("structural violations: {}", format_violations(.0))]
    Structural(Vec<Violation>),
    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),
    #[error("unknown end class {0}")]
    UnknownEnd(EndClass),
    #[error("operation needs class {expected}, found {found}")]
    WrongClass { expected: CurveClass, found: CurveClass },
    #[error("source curve has a projective connected component")]
    ProjectiveComponent,
    #[error("no vertex chosen for target component {0}")]
    MissingChoice(usize),
    #[error("chosen vertex {vertex} lies outside target component {component}")]
    ChoiceOutsideComponent { vertex: VertexId, component: usize },
}

fn format_violations(violations: &[Violation]) -> String {
    let items: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    items.join("; ")
}

/// The skeletal model of a finite morphism between finite curves with
/// compatible triangulations.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct SkeletalMorphism {
    source: CurveSkeleton,
    target: CurveSkeleton,
    vmap: BTreeMap<VertexId, (VertexId, u32)>,
    emap: BTreeMap<EdgeId, (EdgeId, u32)>,
    dmap: BTreeMap<DiscId, (DiscId, u32)>,
    ramified_discs: Vec<(VertexId, u32)>,
    degree: Vec<u32>,
}

impl SkeletalMorphism {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        source: CurveSkeleton,
        target: CurveSkeleton,
        vmap: BTreeMap<VertexId, (VertexId, u32)>,
        emap: BTreeMap<EdgeId, (EdgeId, u32)>,
        dmap: BTreeMap<DiscId, (DiscId, u32)>,
        ramified_discs: impl IntoIterator<Item = (VertexId, u32)>,
        degree: Vec<u32>,
    ) -> Self {
        let mut ramified_discs: Vec<(VertexId, u32)> = ramified_discs.into_iter().collect();
        ramified_discs.sort_unstable();
        SkeletalMorphism { source, target, vmap, emap, dmap, ramified_discs, degree }
    }

    /// The identity morphism on a curve (all multiplicities and degrees 1).
    pub fn identity(curve: &CurveSkeleton) -> Self {
        let vmap = curve.graph().vertices().iter().map(|&v| (v, (v, 1))).collect();
        let emap = curve.graph().edges().keys().map(|&e| (e, (e, 1))).collect();
        let dmap = curve.discs().iter().map(|&d| (d, (d, 1))).collect();
        let degree = vec![1; curve.component_count()];
        SkeletalMorphism::new(curve.clone(), curve.clone(), vmap, emap, dmap, [], degree)
    }

    pub fn source(&self) -> &CurveSkeleton {
        &self.source
    }

    pub fn target(&self) -> &CurveSkeleton {
        &self.target
    }

    pub fn vmap(&self) -> &BTreeMap<VertexId, (VertexId, u32)> {
        &self.vmap
    }

    pub fn emap(&self) -> &BTreeMap<EdgeId, (EdgeId, u32)> {
        &self.emap
    }

    pub fn dmap(&self) -> &BTreeMap<DiscId, (DiscId, u32)> {
        &self.dmap
    }

    pub fn ramified_discs(&self) -> &[(VertexId, u32)] {
        &self.ramified_discs
    }

    /// Per-target-component total degree, indexed like
    /// `target.components()`.
    pub fn degrees(&self) -> &[u32] {
        &self.degree
    }

    pub fn vertex_image(&self, x: VertexId) -> Option<VertexId> {
        self.vmap.get(&x).map(|&(y, _)| y)
    }

    pub fn multiplicity(&self, x: VertexId) -> Option<u32> {
        self.vmap.get(&x).map(|&(_, m)| m)
    }

    pub fn edge_degree(&self, e: EdgeId) -> Option<u32> {
        self.emap.get(&e).map(|&(_, d)| d)
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Check every constraint; violations are data, not failures.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let target_index = ComponentIndex::of(&self.target);

        // Degree map arity and positivity.
        if self.degree.len() != target_index.count {
            violations.push(Violation::DegreeArity {
                expected: target_index.count,
                got: self.degree.len(),
            });
        }
        for (i, &n) in self.degree.iter().enumerate() {
            if n == 0 {
                violations.push(Violation::ZeroComponentDegree { component: i });
            }
        }

        // Totality and reference integrity of the three maps.
        for &v in self.source.graph().vertices() {
            if !self.vmap.contains_key(&v) {
                violations.push(Violation::MissingVertexImage(v));
            }
        }
        for (&x, &(y, mu)) in &self.vmap {
            if !self.source.graph().contains_vertex(x) {
                violations.push(Violation::UnknownSourceVertex(x));
            }
            if !self.target.graph().contains_vertex(y) {
                violations.push(Violation::UnknownTargetVertex { vertex: x, image: y });
            }
            if mu == 0 {
                violations.push(Violation::ZeroMultiplicity(x));
            }
        }
        for &e in self.source.graph().edges().keys() {
            if !self.emap.contains_key(&e) {
                violations.push(Violation::MissingEdgeImage(e));
            }
        }
        for (&e, &(e_img, d)) in &self.emap {
            if !self.source.graph().edges().contains_key(&e) {
                violations.push(Violation::UnknownSourceEdge(e));
            }
            if !self.target.graph().edges().contains_key(&e_img) {
                violations.push(Violation::UnknownTargetEdge { edge: e, image: e_img });
            }
            if d == 0 {
                violations.push(Violation::ZeroEdgeDegree(e));
            }
        }
        for &d in self.source.discs() {
            if !self.dmap.contains_key(&d) {
                violations.push(Violation::MissingDiscImage(d));
            }
        }
        for (&d, &(d_img, deg)) in &self.dmap {
            if !self.source.discs().contains(&d) {
                violations.push(Violation::UnknownSourceDisc(d));
            }
            if !self.target.discs().contains(&d_img) {
                violations.push(Violation::UnknownTargetDisc { disc: d, image: d_img });
            }
            if deg == 0 {
                violations.push(Violation::ZeroDiscDegree(d));
            }
        }

        let references_ok = violations.is_empty();

        // Endpoint commutation: a skeleton edge maps homeomorphically onto
        // its image, so attachment shapes must correspond under the vertex
        // map (closed pairs as unordered pairs, free onto free).
        if references_ok {
            for (&e, &(e_img, _)) in &self.emap {
                let src_att = self.source.graph().edges()[&e];
                let tgt_att = self.target.graph().edges()[&e_img];
                let ok = match (src_att, tgt_att) {
                    (EdgeAttachment::Closed(u, v), EdgeAttachment::Closed(a, b)) => {
                        let mut img = [self.vmap[&u].0, self.vmap[&v].0];
                        img.sort_unstable();
                        img == [a, b]
                    }
                    (EdgeAttachment::HalfOpen(u), EdgeAttachment::HalfOpen(a)) => {
                        self.vmap[&u].0 == a
                    }
                    (EdgeAttachment::Free, EdgeAttachment::Free) => true,
                    _ => false,
                };
                if !ok {
                    violations.push(Violation::EndpointCommutation { edge: e });
                }
            }

            for &(v, d) in &self.ramified_discs {
                match self.vmap.get(&v) {
                    None => violations.push(Violation::RamifiedDiscVertex(v)),
                    Some(&(_, mu)) => {
                        if d < 2 || d > mu {
                            violations.push(Violation::RamifiedDiscDegree { vertex: v, degree: d });
                        }
                    }
                }
            }
        }

        if !violations.is_empty() {
            return ValidationReport { violations };
        }

        // Component surjectivity.
        let mut covered = vec![false; target_index.count];
        for comp in self.source.components() {
            let image = match &comp {
                CurveComponent::Graph(g) => {
                    if let Some(&v) = g.vertices.iter().next() {
                        target_index.vertex[&self.vmap[&v].0]
                    } else {
                        let &e = g.edges.iter().next().expect("component has an element");
                        target_index.edge[&self.emap[&e].0]
                    }
                }
                CurveComponent::Disc(d) => target_index.disc[&self.dmap[d].0],
            };
            covered[image] = true;
        }
        for (i, c) in covered.iter().enumerate() {
            if !c {
                violations.push(Violation::ComponentNotCovered { component: i });
            }
        }

        // Fiber balancing: over every target vertex, edge and disc the
        // multiplicities and degrees sum to the component degree.
        let expected = |comp: usize| self.degree[comp] as u64;
        let mut vertex_sum: BTreeMap<VertexId, u64> =
            self.target.graph().vertices().iter().map(|&y| (y, 0)).collect();
        for &(y, mu) in self.vmap.values() {
            *vertex_sum.get_mut(&y).unwrap() += mu as u64;
        }
        for (&y, &got) in &vertex_sum {
            let want = expected(target_index.vertex[&y]);
            if got != want {
                violations.push(Violation::VertexFiberBalance { target: y, expected: want, got });
            }
        }
        let mut edge_sum: BTreeMap<EdgeId, u64> =
            self.target.graph().edges().keys().map(|&e| (e, 0)).collect();
        for &(e_img, d) in self.emap.values() {
            *edge_sum.get_mut(&e_img).unwrap() += d as u64;
        }
        for (&e, &got) in &edge_sum {
            let want = expected(target_index.edge[&e]);
            if got != want {
                violations.push(Violation::EdgeFiberBalance { target: e, expected: want, got });
            }
        }
        let mut disc_sum: BTreeMap<DiscId, u64> =
            self.target.discs().iter().map(|&d| (d, 0)).collect();
        for &(d_img, d) in self.dmap.values() {
            *disc_sum.get_mut(&d_img).unwrap() += d as u64;
        }
        for (&d, &got) in &disc_sum {
            let want = expected(target_index.disc[&d]);
            if got != want {
                violations.push(Violation::DiscFiberBalance { target: d, expected: want, got });
            }
        }

        // Local balancing at the level of directions. Non-loop target edges
        // have one direction per endpoint, so the edge-level sums are exact;
        // target loops are handled through the orientation of their lifts,
        // which is what subdividing every loop twice makes explicit.
        let mut incident_nonloop: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
        let mut loops: Vec<(EdgeId, VertexId)> = Vec::new();
        for (&e, &att) in self.target.graph().edges() {
            match att {
                EdgeAttachment::Closed(a, b) if a == b => loops.push((e, a)),
                _ => {
                    for y in att.endpoints() {
                        incident_nonloop.entry(y).or_default().push(e);
                    }
                }
            }
        }
        let mut src_at: BTreeMap<VertexId, Vec<EdgeId>> = BTreeMap::new();
        for (&e, &att) in self.source.graph().edges() {
            for v in att.endpoints() {
                src_at.entry(v).or_default().push(e);
            }
        }
        let empty = Vec::new();
        for (&x, &(y, mu)) in &self.vmap {
            for &e_img in incident_nonloop.get(&y).unwrap_or(&empty) {
                // A source loop cannot lie over a non-loop edge, so every
                // incidence counted here is simple.
                let got: u64 = src_at
                    .get(&x)
                    .unwrap_or(&empty)
                    .iter()
                    .filter(|&&e| self.emap[&e].0 == e_img)
                    .map(|&e| self.emap[&e].1 as u64)
                    .sum();
                if got != mu as u64 {
                    violations.push(Violation::LocalBalance {
                        vertex: x,
                        target_edge: e_img,
                        expected: mu as u64,
                        got,
                    });
                }
            }
        }
        for &(e_loop, y) in &loops {
            let fiber_mu: BTreeMap<VertexId, u32> = self
                .vmap
                .iter()
                .filter(|(_, &(img, _))| img == y)
                .map(|(&x, &(_, mu))| (x, mu))
                .collect();
            let lifts = self.loop_lifts(e_loop);
            if orient_loop_lifts(&fiber_mu, &lifts).is_none() {
                violations.push(Violation::LoopOrientation { target_edge: e_loop });
            }
        }

        // Boundary compatibility and class equality.
        for (&x, &(y, _)) in &self.vmap {
            if self.source.boundary().contains(&x) != self.target.boundary().contains(&y) {
                violations.push(Violation::BoundaryMismatch { vertex: x });
            }
        }
        if self.source.class() != self.target.class() {
            violations.push(Violation::ClassMismatch {
                source: self.source.class(),
                target: self.target.class(),
            });
        }

        ValidationReport { violations }
    }

    fn loop_lifts(&self, e_loop: EdgeId) -> Vec<(EdgeId, VertexId, VertexId, u32)> {
        self.emap
            .iter()
            .filter(|(_, &(img, _))| img == e_loop)
            .filter_map(|(&e, &(_, d))| match self.source.graph().edges()[&e] {
                EdgeAttachment::Closed(u, v) => Some((e, u, v, d)),
                _ => None,
            })
            .collect()
    }

    /// True when no closed source edge has both endpoints over the same
    /// target vertex.
    pub fn strict_compatibility(&self) -> Result<bool, MorphismError> {
        let report = self.validate();
        if !report.is_ok() {
            return Err(MorphismError::Invalid(report.into_violations()));
        }
        Ok(self.source.graph().edges().values().all(|att| match att {
            EdgeAttachment::Closed(u, v) => self.vmap[u].0 != self.vmap[v].0,
            _ => true,
        }))
    }

    pub fn fiber(&self, y: VertexId) -> Result<BTreeSet<VertexId>, MorphismError> {
        if !self.target.graph().contains_vertex(y) {
            return Err(MorphismError::UnknownVertex(y));
        }
        Ok(self
            .vmap
            .iter()
            .filter(|(_, &(img, _))| img == y)
            .map(|(&x, _)| x)
            .collect())
    }

    /// Ramification indicator of a source vertex: 1 iff μ(x) > 1.
    pub fn delta_vertex(&self, x: VertexId) -> Result<u32, MorphismError> {
        let &(_, mu) = self.vmap.get(&x).ok_or(MorphismError::UnknownVertex(x))?;
        Ok(u32::from(mu > 1))
    }

    /// End classes of the source curve: one per half-open edge, two per
    /// free edge, one per disc component.
    pub fn end_classes(&self) -> Vec<EndClass> {
        let mut out = Vec::new();
        for (&e, att) in self.source.graph().edges() {
            match att {
                EdgeAttachment::HalfOpen(_) => out.push(EndClass::HalfOpen(e)),
                EdgeAttachment::Free => {
                    out.push(EndClass::FreeEnd(e, 0));
                    out.push(EndClass::FreeEnd(e, 1));
                }
                EdgeAttachment::Closed(..) => {}
            }
        }
        out.extend(self.source.discs().iter().map(|&d| EndClass::Disc(d)));
        out
    }

    /// Ramification indicator of an end class: 1 iff the carrying edge or
    /// disc maps with degree > 1. The degree only depends on the class.
    pub fn delta_end(&self, end: EndClass) -> Result<u32, MorphismError> {
        let degree = match end {
            EndClass::HalfOpen(e) => match self.source.graph().edges().get(&e) {
                Some(EdgeAttachment::HalfOpen(_)) => self.edge_degree(e),
                _ => None,
            },
            EndClass::FreeEnd(e, side) if side < 2 => match self.source.graph().edges().get(&e) {
                Some(EdgeAttachment::Free) => self.edge_degree(e),
                _ => None,
            },
            EndClass::FreeEnd(..) => None,
            EndClass::Disc(d) => self.dmap.get(&d).map(|&(_, deg)| deg),
        };
        degree.map(|d| u32::from(d > 1)).ok_or(MorphismError::UnknownEnd(end))
    }

    /// Sum of the end indicators over all end classes of the source.
    pub fn end_delta_sum(&self) -> u64 {
        self.end_classes()
            .into_iter()
            .filter_map(|end| self.delta_end(end).ok())
            .map(u64::from)
            .sum()
    }

    /// Sum of the vertex indicators over the source boundary.
    pub fn boundary_delta_sum(&self) -> u64 {
        self.source
            .boundary()
            .iter()
            .filter_map(|&w| self.delta_vertex(w).ok())
            .map(u64::from)
            .sum()
    }

    /// Subdivide every target loop twice and every lift correspondingly,
    /// so that no loops remain and direction-level balancing becomes plain
    /// edge-level balancing. New source vertices carry μ = d of their edge.
    ///
    /// Requires the structural checks (totality, references, commutation)
    /// to pass; balancing may fail, in which case the refined morphism
    /// fails validation exactly when the original does.
    pub fn loop_free_refinement(&self) -> Result<SkeletalMorphism, MorphismError> {
        let structural: Vec<Violation> = self
            .validate()
            .into_violations()
            .into_iter()
            .filter(|v| {
                !matches!(
                    v,
                    Violation::ComponentNotCovered { .. }
                        | Violation::VertexFiberBalance { .. }
                        | Violation::EdgeFiberBalance { .. }
                        | Violation::DiscFiberBalance { .. }
                        | Violation::LocalBalance { .. }
                        | Violation::LoopOrientation { .. }
                        | Violation::BoundaryMismatch { .. }
                        | Violation::ClassMismatch { .. }
                )
            })
            .collect();
        if !structural.is_empty() {
            return Err(MorphismError::Structural(structural));
        }

        let loops: Vec<(EdgeId, VertexId)> = self
            .target
            .graph()
            .edges()
            .iter()
            .filter_map(|(&e, &att)| match att {
                EdgeAttachment::Closed(a, b) if a == b => Some((e, a)),
                _ => None,
            })
            .collect();
        if loops.is_empty() {
            return Ok(self.clone());
        }

        let mut tgt_vertices: Vec<VertexId> =
            self.target.graph().vertices().iter().copied().collect();
        let mut tgt_edges: BTreeMap<EdgeId, EdgeAttachment> = self.target.graph().edges().clone();
        let mut src_vertices: Vec<VertexId> =
            self.source.graph().vertices().iter().copied().collect();
        let mut src_edges: BTreeMap<EdgeId, EdgeAttachment> = self.source.graph().edges().clone();
        let mut vmap = self.vmap.clone();
        let mut emap = self.emap.clone();

        let mut next_tv = self.target.graph().max_vertex_token().map_or(0, |m| m + 1);
        let mut next_te = self.target.graph().max_edge_token().map_or(0, |m| m + 1);
        let mut next_sv = self.source.graph().max_vertex_token().map_or(0, |m| m + 1);
        let mut next_se = self.source.graph().max_edge_token().map_or(0, |m| m + 1);

        for &(e_loop, y) in &loops {
            let a = VertexId(next_tv);
            let b = VertexId(next_tv + 1);
            next_tv += 2;
            tgt_vertices.push(a);
            tgt_vertices.push(b);
            let e2 = EdgeId(next_te);
            let e3 = EdgeId(next_te + 1);
            next_te += 2;
            tgt_edges.insert(e_loop, EdgeAttachment::Closed(y, a).normalized());
            tgt_edges.insert(e2, EdgeAttachment::Closed(a, b).normalized());
            tgt_edges.insert(e3, EdgeAttachment::Closed(b, y).normalized());

            let fiber_mu: BTreeMap<VertexId, u32> = self
                .vmap
                .iter()
                .filter(|(_, &(img, _))| img == y)
                .map(|(&x, &(_, mu))| (x, mu))
                .collect();
            let lifts = self.loop_lifts(e_loop);
            // When no orientation balances, fall back to the normalized
            // endpoint so the construction stays deterministic; the refined
            // morphism then fails validation, as it should.
            let orientation = orient_loop_lifts(&fiber_mu, &lifts)
                .unwrap_or_else(|| lifts.iter().map(|&(e, u, _, _)| (e, u)).collect());

            for &(e, u, v, d) in &lifts {
                // A source loop covers both directions; its orientation is
                // immaterial and the solver leaves it unassigned.
                let plus = if u == v { u } else { orientation[&e] };
                let minus = if plus == u { v } else { u };
                let p = VertexId(next_sv);
                let q = VertexId(next_sv + 1);
                next_sv += 2;
                src_vertices.push(p);
                src_vertices.push(q);
                let f2 = EdgeId(next_se);
                let f3 = EdgeId(next_se + 1);
                next_se += 2;
                src_edges.insert(e, EdgeAttachment::Closed(plus, p).normalized());
                src_edges.insert(f2, EdgeAttachment::Closed(p, q).normalized());
                src_edges.insert(f3, EdgeAttachment::Closed(q, minus).normalized());
                vmap.insert(p, (a, d));
                vmap.insert(q, (b, d));
                emap.insert(e, (e_loop, d));
                emap.insert(f2, (e2, d));
                emap.insert(f3, (e3, d));
            }
        }

        let target = CurveSkeleton::new(
            TopoGraph::new(tgt_vertices, tgt_edges).expect("refined target graph"),
            self.target.boundary().iter().copied(),
            self.target.class(),
            self.target.discs().iter().copied(),
        )
        .expect("refinement preserves curve invariants");
        let source = CurveSkeleton::new(
            TopoGraph::new(src_vertices, src_edges).expect("refined source graph"),
            self.source.boundary().iter().copied(),
            self.source.class(),
            self.source.discs().iter().copied(),
        )
        .expect("refinement preserves curve invariants");

        // Subdividing edges changes neither the component partition nor the
        // minimum vertex of any component, so the degree vector carries over.
        Ok(SkeletalMorphism::new(
            source,
            target,
            vmap,
            emap,
            self.dmap.clone(),
            self.ramified_discs.iter().copied(),
            self.degree.clone(),
        ))
    }
}

/// Choose, for each lift of a target loop, which endpoint covers which of
/// the two loop directions, so that at every fiber vertex both directions
/// receive total degree μ. Source loops cover both directions at once.
/// Returns the plus-endpoint per lift, or None when no assignment balances.
pub(crate) fn orient_loop_lifts(
    fiber_mu: &BTreeMap<VertexId, u32>,
    lifts: &[(EdgeId, VertexId, VertexId, u32)],
) -> Option<BTreeMap<EdgeId, VertexId>> {
    let mut plus: BTreeMap<VertexId, i64> =
        fiber_mu.iter().map(|(&x, &m)| (x, m as i64)).collect();
    let mut minus = plus.clone();
    let mut pending = Vec::new();
    for &(e, u, v, d) in lifts {
        if u == v {
            let p = plus.get_mut(&u)?;
            *p -= d as i64;
            if *p < 0 {
                return None;
            }
            let m = minus.get_mut(&u)?;
            *m -= d as i64;
            if *m < 0 {
                return None;
            }
        } else {
            pending.push((e, u, v, d));
        }
    }

    fn assign(
        pending: &[(EdgeId, VertexId, VertexId, u32)],
        plus: &mut BTreeMap<VertexId, i64>,
        minus: &mut BTreeMap<VertexId, i64>,
        chosen: &mut BTreeMap<EdgeId, VertexId>,
    ) -> bool {
        let Some(&(e, u, v, d)) = pending.first() else {
            return plus.values().all(|&r| r == 0) && minus.values().all(|&r| r == 0);
        };
        let rest = &pending[1..];
        for (p_end, m_end) in [(u, v), (v, u)] {
            if plus[&p_end] >= d as i64 && minus[&m_end] >= d as i64 {
                *plus.get_mut(&p_end).unwrap() -= d as i64;
                *minus.get_mut(&m_end).unwrap() -= d as i64;
                chosen.insert(e, p_end);
                if assign(rest, plus, minus, chosen) {
                    return true;
                }
                chosen.remove(&e);
                *plus.get_mut(&p_end).unwrap() += d as i64;
                *minus.get_mut(&m_end).unwrap() += d as i64;
            }
        }
        false
    }

    let mut chosen = BTreeMap::new();
    if assign(&pending, &mut plus, &mut minus, &mut chosen) {
        Some(chosen)
    } else {
        None
    }
}
