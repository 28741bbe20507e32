//! Splitting a morphism along its boundary and boundary annuli: the
//! bookkeeping sets S₁ ⊇ S′₁ ⊇ S″₁, the stripped-and-cut pieces, and the
//! recursion inequality relating r′ of the whole to r′ of the pieces.

use std::collections::{BTreeMap, BTreeSet};

use crate::curve::{CurveClass, CurveSkeleton};
use crate::graph::{EdgeAttachment, EdgeId, TopoGraph, VertexId};
use crate::morphism::{MorphismError, SkeletalMorphism};
use crate::ramification::simulate;

/// Boundary bookkeeping of the source curve:
/// `s1_prime` are endpoints of half-open edges, `s1` adds the boundary,
/// `s1_dprime` are the vertices carrying exactly one half-open edge.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoundaryData {
    pub s1_prime: BTreeSet<VertexId>,
    pub s1: BTreeSet<VertexId>,
    pub s1_dprime: BTreeSet<VertexId>,
    pub annuli_at: BTreeMap<VertexId, BTreeSet<EdgeId>>,
}

fn ensure_valid_non_projective(m: &SkeletalMorphism) -> Result<(), MorphismError> {
    let report = m.validate();
    if !report.is_ok() {
        return Err(MorphismError::Invalid(report.into_violations()));
    }
    if m.source().class() == CurveClass::Projective || m.source().has_projective_like_component()
    {
        return Err(MorphismError::ProjectiveComponent);
    }
    Ok(())
}

pub fn boundary_data(m: &SkeletalMorphism) -> Result<BoundaryData, MorphismError> {
    ensure_valid_non_projective(m)?;
    let mut annuli_at: BTreeMap<VertexId, BTreeSet<EdgeId>> = BTreeMap::new();
    for (&e, &att) in m.source().graph().edges() {
        if let EdgeAttachment::HalfOpen(u) = att {
            annuli_at.entry(u).or_default().insert(e);
        }
    }
    let s1_prime: BTreeSet<VertexId> = annuli_at.keys().copied().collect();
    let s1: BTreeSet<VertexId> =
        s1_prime.union(m.source().boundary()).copied().collect();
    let s1_dprime: BTreeSet<VertexId> = annuli_at
        .iter()
        .filter(|(_, edges)| edges.len() == 1)
        .map(|(&v, _)| v)
        .collect();
    Ok(BoundaryData { s1_prime, s1, s1_dprime, annuli_at })
}

/// The curve with all of its half-open edges removed. The genus, the
/// component count and the boundary are untouched.
pub fn strip_boundary_annuli(c: &CurveSkeleton) -> CurveSkeleton {
    let graph = TopoGraph::new(
        c.graph().vertices().iter().copied(),
        c.graph()
            .edges()
            .iter()
            .filter(|(_, att)| !matches!(att, EdgeAttachment::HalfOpen(_)))
            .map(|(&e, &att)| (e, att)),
    )
    .expect("stripping preserves the vertex set");
    CurveSkeleton::new(graph, c.boundary().iter().copied(), c.class(), c.discs().iter().copied())
        .expect("stripping preserves curve invariants")
}

/// Strip boundary annuli, remove S₁ upstairs and its image T₁ downstairs,
/// and restrict the morphism to each surviving skeletal component of the
/// source. Cut closed edges reappear as half-open edges of the pieces;
/// bare free-edge pieces (open annuli) are kept, disc components vanish.
pub fn decompose(m: &SkeletalMorphism) -> Result<Vec<SkeletalMorphism>, MorphismError> {
    let bd = boundary_data(m)?;

    let strip = |graph: &TopoGraph| -> TopoGraph {
        TopoGraph::new(
            graph.vertices().iter().copied(),
            graph
                .edges()
                .iter()
                .filter(|(_, att)| !matches!(att, EdgeAttachment::HalfOpen(_)))
                .map(|(&e, &att)| (e, att)),
        )
        .expect("stripped graph is well formed")
    };

    let t1: BTreeSet<VertexId> = bd.s1.iter().map(|w| m.vertex_image(*w).unwrap()).collect();
    let src0 = strip(m.source().graph()).remove_vertices(&bd.s1).expect("S1 is a vertex set");
    let tgt0 = strip(m.target().graph()).remove_vertices(&t1).expect("T1 is a vertex set");

    let tgt_comps = tgt0.components();
    let mut tgt_vertex_comp: BTreeMap<VertexId, usize> = BTreeMap::new();
    let mut tgt_edge_comp: BTreeMap<EdgeId, usize> = BTreeMap::new();
    for (i, comp) in tgt_comps.iter().enumerate() {
        for &v in &comp.vertices {
            tgt_vertex_comp.insert(v, i);
        }
        for &e in &comp.edges {
            tgt_edge_comp.insert(e, i);
        }
    }

    let mut pieces = Vec::new();
    for comp in src0.components() {
        let target_idx = if let Some(&v) = comp.vertices.iter().next() {
            tgt_vertex_comp[&m.vertex_image(v).unwrap()]
        } else {
            let &e = comp.edges.iter().next().expect("component has an element");
            tgt_edge_comp[&m.emap()[&e].0]
        };
        let tgt_comp = &tgt_comps[target_idx];

        let source = CurveSkeleton::new(
            src0.component_graph(&comp),
            [],
            CurveClass::WideOpen,
            [],
        )
        .expect("piece is a wide open curve");
        let target = CurveSkeleton::new(
            tgt0.component_graph(tgt_comp),
            [],
            CurveClass::WideOpen,
            [],
        )
        .expect("piece target is a wide open curve");

        let vmap: BTreeMap<VertexId, (VertexId, u32)> =
            comp.vertices.iter().map(|&v| (v, m.vmap()[&v])).collect();
        let emap: BTreeMap<EdgeId, (EdgeId, u32)> =
            comp.edges.iter().map(|&e| (e, m.emap()[&e])).collect();
        let ramified_discs: Vec<(VertexId, u32)> = m
            .ramified_discs()
            .iter()
            .copied()
            .filter(|(v, _)| comp.vertices.contains(v))
            .collect();

        // Per-piece degree: the fiber sum inside the piece over any element
        // of the target component.
        let degree: u32 = if let Some(&y0) = tgt_comp.vertices.iter().next() {
            vmap.values().filter(|&&(y, _)| y == y0).map(|&(_, mu)| mu).sum()
        } else {
            let &e0 = tgt_comp.edges.iter().next().expect("target component has an element");
            emap.values().filter(|&&(e, _)| e == e0).map(|&(_, d)| d).sum()
        };

        pieces.push(SkeletalMorphism::new(
            source,
            target,
            vmap,
            emap,
            BTreeMap::new(),
            ramified_discs,
            vec![degree],
        ));
    }
    Ok(pieces)
}

/// The recursion inequality of the main bound:
/// r′(m) ≤ Σ_pieces r′ + Σ over S₁∖S″₁ of δ. Returns (lhs, rhs).
pub fn check_recursion(m: &SkeletalMorphism) -> Result<(usize, usize), MorphismError> {
    let bd = boundary_data(m)?;
    let lhs = simulate(m)?.r_prime;
    let mut rhs = 0usize;
    for piece in decompose(m)? {
        rhs += simulate(&piece)?.r_prime;
    }
    for &w in bd.s1.difference(&bd.s1_dprime) {
        rhs += m.delta_vertex(w)? as usize;
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{gen_chain, gen_kummer, KummerShape};
    use crate::graph::EdgeAttachment::{self, Free, HalfOpen};

    fn wide_open(n: u32, edges: &[(u32, EdgeAttachment)]) -> CurveSkeleton {
        let graph = TopoGraph::new(
            (0..n).map(VertexId),
            edges.iter().map(|&(e, a)| (EdgeId(e), a)),
        )
        .unwrap();
        CurveSkeleton::new(graph, [], CurveClass::WideOpen, []).unwrap()
    }

    #[test]
    fn boundary_data_examples() {
        let annulus = SkeletalMorphism::identity(&wide_open(0, &[(0, Free)]));
        let bd = boundary_data(&annulus).unwrap();
        assert!(bd.s1_prime.is_empty() && bd.s1.is_empty() && bd.s1_dprime.is_empty());

        let two_ends = SkeletalMorphism::identity(&wide_open(
            1,
            &[(0, HalfOpen(VertexId(0))), (1, HalfOpen(VertexId(0)))],
        ));
        let bd = boundary_data(&two_ends).unwrap();
        assert_eq!(bd.s1_prime, [VertexId(0)].into());
        assert!(bd.s1_dprime.is_empty());

        let one_end = SkeletalMorphism::identity(&wide_open(1, &[(0, HalfOpen(VertexId(0)))]));
        let bd = boundary_data(&one_end).unwrap();
        assert_eq!(bd.s1_dprime, [VertexId(0)].into());
        assert_eq!(bd.annuli_at[&VertexId(0)].len(), 1);
    }

    #[test]
    fn decompose_kummer_closed_annulus() {
        let m = gen_kummer(KummerShape::ClosedAnnulus, 2);
        let pieces = decompose(&m).unwrap();
        assert_eq!(pieces.len(), 1);
        let piece = &pieces[0];
        assert!(piece.validate().is_ok());
        assert_eq!(piece.source().graph().vertex_count(), 0);
        assert_eq!(piece.source().open_end_count(), 2);
        assert_eq!(piece.degrees(), &[2]);
        assert_eq!(simulate(piece).unwrap().r_prime, 0);
    }

    #[test]
    fn decompose_identity_on_closed_disc() {
        let m = SkeletalMorphism::identity(gen_kummer(KummerShape::ClosedDisc, 2).source());
        assert!(decompose(&m).unwrap().is_empty());
    }

    #[test]
    fn decompose_chain_two() {
        let m = gen_chain(2);
        let pieces = decompose(&m).unwrap();
        // One central piece carrying both remaining skeleton vertices and
        // two bare annulus pieces from the cut outer blocks.
        assert_eq!(pieces.len(), 3);
        for piece in &pieces {
            assert!(piece.validate().is_ok());
            assert!(
                piece.source().graph().vertex_count() < m.source().graph().vertex_count()
            );
        }
        let vertexful: Vec<_> =
            pieces.iter().filter(|p| p.source().graph().vertex_count() > 0).collect();
        assert_eq!(vertexful.len(), 1);
        assert_eq!(vertexful[0].source().graph().vertex_count(), 2);
    }

    #[test]
    fn recursion_inequality_examples() {
        let id = SkeletalMorphism::identity(gen_kummer(KummerShape::ClosedAnnulus, 2).source());
        assert_eq!(check_recursion(&id).unwrap(), (0, 0));

        let m = gen_kummer(KummerShape::ClosedAnnulus, 2);
        assert_eq!(check_recursion(&m).unwrap(), (1, 2));

        for n in 1..=4 {
            let (lhs, rhs) = check_recursion(&gen_chain(n)).unwrap();
            assert!(lhs <= rhs, "chain({n}): {lhs} > {rhs}");
        }
    }

    #[test]
    fn stripping_preserves_genus_and_components() {
        for m in [gen_chain(3), gen_kummer(KummerShape::OpenAnnulus, 2)] {
            let stripped = strip_boundary_annuli(m.source());
            assert_eq!(stripped.topological_genus(), m.source().topological_genus());
            assert_eq!(stripped.component_count(), m.source().component_count());
            assert_eq!(stripped.boundary(), m.source().boundary());
        }
    }

    #[test]
    fn projective_sources_are_rejected() {
        let m = crate::generator::gen_banana(2);
        assert!(matches!(boundary_data(&m), Err(MorphismError::ProjectiveComponent)));
        assert!(matches!(decompose(&m), Err(MorphismError::ProjectiveComponent)));
    }
}
