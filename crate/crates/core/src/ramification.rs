//! The ramified subgraph of a morphism, its connected components, and the
//! upper bounds on their number.
//!
//! A vertex is ramified when μ > 1, an edge or disc component when its
//! degree is > 1. Ramification inside residue discs attaches to the vertex
//! carrying the disc and never forms a component of its own, so the
//! skeletal component count is exact.

use std::collections::{BTreeMap, BTreeSet};

use crate::curve::{CurveClass, CurveComponent};
use crate::graph::{DiscId, EdgeAttachment, EdgeId, VertexId};
use crate::morphism::{ComponentIndex, MorphismError, SkeletalMorphism};

/// Elementwise description of the ramified part of the source skeleton.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RamifiedSubgraph {
    pub vertices: BTreeSet<VertexId>,
    pub edges: BTreeSet<EdgeId>,
    pub discs: BTreeSet<DiscId>,
}

/// One connected component of the ramified subgraph.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RamComponent {
    pub vertices: BTreeSet<VertexId>,
    pub edges: BTreeSet<EdgeId>,
    pub discs: BTreeSet<DiscId>,
    /// False iff the component touches an open end of the curve: it
    /// contains a ramified half-open or free edge, or is a ramified disc
    /// component.
    pub rel_compact: bool,
}

/// Components of the ramification locus with r_f and r′_f.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RamificationReport {
    pub components: Vec<RamComponent>,
    pub r_f: usize,
    pub r_prime: usize,
}

/// A named bound together with the observed quantity it dominates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoundReport {
    pub name: &'static str,
    pub applicable: bool,
    pub value: i64,
    pub observed: i64,
    pub holds: bool,
}

impl BoundReport {
    fn new(name: &'static str, value: i64, observed: i64) -> Self {
        BoundReport { name, applicable: true, value, observed, holds: observed <= value }
    }

    fn inapplicable(name: &'static str) -> Self {
        BoundReport { name, applicable: false, value: 0, observed: 0, holds: true }
    }
}

fn ensure_valid(m: &SkeletalMorphism) -> Result<(), MorphismError> {
    let report = m.validate();
    if report.is_ok() {
        Ok(())
    } else {
        Err(MorphismError::Invalid(report.into_violations()))
    }
}

/// Ramified vertices, edges and disc components. Every endpoint of a
/// ramified edge is itself ramified (d(e) ≤ μ at the endpoints).
pub fn ramified_subgraph(m: &SkeletalMorphism) -> Result<RamifiedSubgraph, MorphismError> {
    ensure_valid(m)?;
    Ok(RamifiedSubgraph {
        vertices: m.vmap().iter().filter(|(_, &(_, mu))| mu > 1).map(|(&x, _)| x).collect(),
        edges: m.emap().iter().filter(|(_, &(_, d))| d > 1).map(|(&e, _)| e).collect(),
        discs: m.dmap().iter().filter(|(_, &(_, d))| d > 1).map(|(&d, _)| d).collect(),
    })
}

/// Connected components of the ramified subgraph with relative-compactness
/// flags, in deterministic order.
pub fn simulate(m: &SkeletalMorphism) -> Result<RamificationReport, MorphismError> {
    let sub = ramified_subgraph(m)?;
    let graph = m.source().graph();

    let verts: Vec<VertexId> = sub.vertices.iter().copied().collect();
    let index: BTreeMap<VertexId, usize> =
        verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..verts.len()).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for &e in &sub.edges {
        if let EdgeAttachment::Closed(u, v) = graph.edges()[&e] {
            let (ru, rv) = (find(&mut parent, index[&u]), find(&mut parent, index[&v]));
            let (lo, hi) = (ru.min(rv), ru.max(rv));
            parent[hi] = lo;
        }
    }

    let mut by_root: BTreeMap<usize, RamComponent> = BTreeMap::new();
    for (i, &v) in verts.iter().enumerate() {
        let root = find(&mut parent, i);
        by_root
            .entry(root)
            .or_insert_with(|| RamComponent {
                vertices: BTreeSet::new(),
                edges: BTreeSet::new(),
                discs: BTreeSet::new(),
                rel_compact: true,
            })
            .vertices
            .insert(v);
    }
    for &e in &sub.edges {
        match graph.edges()[&e] {
            EdgeAttachment::Closed(u, _) => {
                let root = find(&mut parent, index[&u]);
                by_root.get_mut(&root).unwrap().edges.insert(e);
            }
            EdgeAttachment::HalfOpen(u) => {
                let root = find(&mut parent, index[&u]);
                let comp = by_root.get_mut(&root).unwrap();
                comp.edges.insert(e);
                comp.rel_compact = false;
            }
            EdgeAttachment::Free => {}
        }
    }

    let mut components: Vec<RamComponent> = by_root.into_values().collect();
    components.sort_by_key(|c| *c.vertices.iter().next().unwrap());
    for &e in &sub.edges {
        if matches!(graph.edges()[&e], EdgeAttachment::Free) {
            components.push(RamComponent {
                vertices: BTreeSet::new(),
                edges: std::iter::once(e).collect(),
                discs: BTreeSet::new(),
                rel_compact: false,
            });
        }
    }
    for &d in &sub.discs {
        components.push(RamComponent {
            vertices: BTreeSet::new(),
            edges: BTreeSet::new(),
            discs: std::iter::once(d).collect(),
            rel_compact: false,
        });
    }

    let r_f = components.len();
    let r_prime = components.iter().filter(|c| c.rel_compact).count();
    Ok(RamificationReport { components, r_f, r_prime })
}

/// r_f ≤ r′_f + Σ over end classes of δ. Holds for every valid morphism.
pub fn check_remark(m: &SkeletalMorphism) -> Result<BoundReport, MorphismError> {
    let report = simulate(m)?;
    let value = report.r_prime as i64 + m.end_delta_sum() as i64;
    Ok(BoundReport::new("remark", value, report.r_f as i64))
}

/// The two bounds for finite morphisms of finite curves with no projective
/// components:
/// r′ ≤ #∂ + e⁰ + g_t − #π₀ + Σ_∂ δ, and r ≤ the same + Σ_ends δ.
pub fn bound_main(m: &SkeletalMorphism) -> Result<(BoundReport, BoundReport), MorphismError> {
    ensure_valid(m)?;
    if m.source().class() == CurveClass::Projective || m.source().has_projective_like_component() {
        return Ok((BoundReport::inapplicable("main-r'"), BoundReport::inapplicable("main-r")));
    }
    let report = simulate(m)?;
    let w = m.source();
    let value_r_prime = w.boundary().len() as i64 + w.open_end_count() as i64
        + w.topological_genus() as i64
        - w.component_count() as i64
        + m.boundary_delta_sum() as i64;
    let value_r = value_r_prime + m.end_delta_sum() as i64;
    Ok((
        BoundReport::new("main-r'", value_r_prime, report.r_prime as i64),
        BoundReport::new("main-r", value_r, report.r_f as i64),
    ))
}

/// Wide open specialization: r′ ≤ e⁰ + g_t − #π₀ and r ≤ that + Σ_ends δ.
/// Values coincide with `bound_main` (the boundary is empty).
pub fn bound_wide_open(
    m: &SkeletalMorphism,
) -> Result<(BoundReport, BoundReport), MorphismError> {
    ensure_valid(m)?;
    if m.source().class() != CurveClass::WideOpen {
        return Err(MorphismError::WrongClass {
            expected: CurveClass::WideOpen,
            found: m.source().class(),
        });
    }
    if m.source().has_projective_like_component() {
        return Ok((
            BoundReport::inapplicable("wide-open-r'"),
            BoundReport::inapplicable("wide-open-r"),
        ));
    }
    let report = simulate(m)?;
    let w = m.source();
    let value_r_prime =
        w.open_end_count() as i64 + w.topological_genus() as i64 - w.component_count() as i64;
    let value_r = value_r_prime + m.end_delta_sum() as i64;
    Ok((
        BoundReport::new("wide-open-r'", value_r_prime, report.r_prime as i64),
        BoundReport::new("wide-open-r", value_r, report.r_f as i64),
    ))
}

/// Affinoid specialization: r ≤ #Sh + g_t − #π₀ + Σ_Sh δ, with the Shilov
/// boundary being the marked boundary. Coincides with the main r-bound.
pub fn bound_affinoid(m: &SkeletalMorphism) -> Result<BoundReport, MorphismError> {
    ensure_valid(m)?;
    if m.source().class() != CurveClass::Affinoid {
        return Err(MorphismError::WrongClass {
            expected: CurveClass::Affinoid,
            found: m.source().class(),
        });
    }
    let report = simulate(m)?;
    let w = m.source();
    let value = w.boundary().len() as i64 + w.topological_genus() as i64
        - w.component_count() as i64
        + m.boundary_delta_sum() as i64;
    Ok(BoundReport::new("affinoid-r", value, report.r_f as i64))
}

/// The minimum vertex of each target component, as the default choice for
/// `bound_projective`.
pub fn default_choice(m: &SkeletalMorphism) -> BTreeMap<usize, VertexId> {
    m.target()
        .components()
        .iter()
        .enumerate()
        .filter_map(|(i, comp)| match comp {
            CurveComponent::Graph(g) => g.vertices.iter().next().map(|&v| (i, v)),
            CurveComponent::Disc(_) => None,
        })
        .collect()
}

/// Projective bound via a chosen vertex v_C per target component:
/// r ≤ g_t − #π₀ + Σ_C (#f⁻¹(v_C) + n(v_C)), where n(v_C) counts the
/// ramification components meeting the fiber of v_C.
pub fn bound_projective(
    m: &SkeletalMorphism,
    choice: &BTreeMap<usize, VertexId>,
) -> Result<BoundReport, MorphismError> {
    ensure_valid(m)?;
    if m.source().class() != CurveClass::Projective {
        return Err(MorphismError::WrongClass {
            expected: CurveClass::Projective,
            found: m.source().class(),
        });
    }
    let index = ComponentIndex::of(m.target());
    let report = simulate(m)?;
    let mut fiber_terms: i64 = 0;
    for comp in 0..index.count {
        let &v = choice.get(&comp).ok_or(MorphismError::MissingChoice(comp))?;
        if index.vertex.get(&v) != Some(&comp) {
            return Err(MorphismError::ChoiceOutsideComponent { vertex: v, component: comp });
        }
        let fiber = m.fiber(v)?;
        let meeting = report
            .components
            .iter()
            .filter(|c| !c.vertices.is_disjoint(&fiber))
            .count();
        fiber_terms += fiber.len() as i64 + meeting as i64;
    }
    let value = m.source().topological_genus() as i64 - m.source().component_count() as i64
        + fiber_terms;
    Ok(BoundReport::new("projective-r", value, report.r_f as i64))
}

/// Coarse projective bound: r ≤ g_t − #π₀ + Σ_C n_C (the right side is
/// #π₀(V)·deg f when the degree is constant).
pub fn bound_projective_coarse(m: &SkeletalMorphism) -> Result<BoundReport, MorphismError> {
    ensure_valid(m)?;
    if m.source().class() != CurveClass::Projective {
        return Err(MorphismError::WrongClass {
            expected: CurveClass::Projective,
            found: m.source().class(),
        });
    }
    let report = simulate(m)?;
    let degree_sum: i64 = m.degrees().iter().map(|&n| n as i64).sum();
    let value = m.source().topological_genus() as i64 - m.source().component_count() as i64
        + degree_sum;
    Ok(BoundReport::new("projective-coarse-r", value, report.r_f as i64))
}

/// With a connected target and a totally ramified vertex (a single-point
/// fiber): r ≤ g_t + 1.
pub fn bound_totally_ramified(m: &SkeletalMorphism) -> Result<BoundReport, MorphismError> {
    ensure_valid(m)?;
    if m.source().class() != CurveClass::Projective {
        return Err(MorphismError::WrongClass {
            expected: CurveClass::Projective,
            found: m.source().class(),
        });
    }
    if m.target().component_count() != 1 {
        return Ok(BoundReport::inapplicable("totally-ramified-r"));
    }
    let totally_ramified = m
        .target()
        .graph()
        .vertices()
        .iter()
        .any(|&y| m.fiber(y).map(|f| f.len() == 1).unwrap_or(false));
    if !totally_ramified {
        return Ok(BoundReport::inapplicable("totally-ramified-r"));
    }
    let report = simulate(m)?;
    let value = m.source().topological_genus() as i64 + 1;
    Ok(BoundReport::new("totally-ramified-r", value, report.r_f as i64))
}

/// Every bound applicable to the morphism, plus the remark inequality and
/// the recursion inequality of the decomposition. All `holds` flags are
/// true on any valid instance; a false flag signals an implementation bug.
pub fn check_all(m: &SkeletalMorphism) -> Result<Vec<BoundReport>, MorphismError> {
    ensure_valid(m)?;
    let mut out = vec![check_remark(m)?];
    if m.source().class() == CurveClass::Projective {
        out.push(bound_projective(m, &default_choice(m))?);
        out.push(bound_projective_coarse(m)?);
        let tr = bound_totally_ramified(m)?;
        if tr.applicable {
            out.push(tr);
        }
    } else if !m.source().has_projective_like_component() {
        let (r_prime, r) = bound_main(m)?;
        out.push(r_prime);
        out.push(r);
        match m.source().class() {
            CurveClass::WideOpen => {
                let (a, b) = bound_wide_open(m)?;
                out.push(a);
                out.push(b);
            }
            CurveClass::Affinoid => out.push(bound_affinoid(m)?),
            _ => {}
        }
        let (lhs, rhs) = crate::decomposition::check_recursion(m)?;
        out.push(BoundReport::new("recursion-r'", rhs as i64, lhs as i64));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{gen_banana, gen_kummer, gen_projective_line, KummerShape};
    use crate::morphism::SkeletalMorphism;

    #[test]
    fn identity_has_empty_locus() {
        let m = SkeletalMorphism::identity(gen_kummer(KummerShape::ClosedAnnulus, 2).source());
        let report = simulate(&m).unwrap();
        assert_eq!(report.r_f, 0);
        assert_eq!(report.r_prime, 0);
        let sub = ramified_subgraph(&m).unwrap();
        assert!(sub.vertices.is_empty() && sub.edges.is_empty() && sub.discs.is_empty());
    }

    #[test]
    fn kummer_closed_annulus_locus_is_whole_skeleton() {
        let m = gen_kummer(KummerShape::ClosedAnnulus, 2);
        let sub = ramified_subgraph(&m).unwrap();
        assert_eq!(sub.vertices.len(), 2);
        assert_eq!(sub.edges.len(), 1);
        let report = simulate(&m).unwrap();
        assert_eq!(report.r_f, 1);
        assert_eq!(report.r_prime, 1);
        assert!(report.components[0].rel_compact);
    }

    #[test]
    fn banana_two_isolated_ramified_vertices() {
        let m = gen_banana(2);
        let sub = ramified_subgraph(&m).unwrap();
        assert_eq!(sub.vertices.len(), 2);
        assert!(sub.edges.is_empty());
        let report = simulate(&m).unwrap();
        assert_eq!(report.r_f, 2);
        assert_eq!(report.r_prime, 2);
    }

    #[test]
    fn open_ends_break_relative_compactness() {
        let m = gen_kummer(KummerShape::OpenAnnulus, 2);
        let report = simulate(&m).unwrap();
        assert_eq!(report.r_f, 1);
        assert_eq!(report.r_prime, 0);

        let m = gen_kummer(KummerShape::OpenDisc, 2);
        let report = simulate(&m).unwrap();
        assert_eq!(report.r_f, 1);
        assert_eq!(report.r_prime, 0);
    }

    #[test]
    fn remark_examples() {
        let id = SkeletalMorphism::identity(gen_banana(2).source());
        let r = check_remark(&id).unwrap();
        assert_eq!((r.value, r.observed), (0, 0));
        assert!(r.holds);

        let m = gen_kummer(KummerShape::OpenAnnulus, 2);
        let r = check_remark(&m).unwrap();
        assert_eq!((r.value, r.observed), (2, 1));
        assert!(r.holds);
    }

    #[test]
    fn main_bound_frozen_values() {
        let m = gen_kummer(KummerShape::ClosedAnnulus, 2);
        let (rp, r) = bound_main(&m).unwrap();
        assert!(rp.applicable);
        assert_eq!((rp.value, rp.observed), (3, 1));
        assert_eq!((r.value, r.observed), (3, 1));
        assert!(rp.holds && r.holds);

        let m = gen_kummer(KummerShape::OpenAnnulus, 2);
        let (rp, r) = bound_main(&m).unwrap();
        assert_eq!((rp.value, rp.observed), (1, 0));
        assert_eq!((r.value, r.observed), (3, 1));

        let id = SkeletalMorphism::identity(gen_kummer(KummerShape::ClosedDisc, 2).source());
        let (rp, r) = bound_main(&id).unwrap();
        assert_eq!(rp.observed, 0);
        assert_eq!(r.observed, 0);
        assert!(rp.holds && r.holds);
    }

    #[test]
    fn wide_open_bound_matches_main() {
        let m = gen_kummer(KummerShape::OpenAnnulus, 2);
        let (rp, r) = bound_wide_open(&m).unwrap();
        assert_eq!((rp.value, r.value), (1, 3));
        let (mp, mr) = bound_main(&m).unwrap();
        assert_eq!(rp.value, mp.value);
        assert_eq!(r.value, mr.value);

        let m = gen_kummer(KummerShape::OpenDisc, 3);
        let (rp, r) = bound_wide_open(&m).unwrap();
        assert_eq!((rp.value, rp.observed), (0, 0));
        assert_eq!((r.value, r.observed), (1, 1));

        assert!(bound_wide_open(&gen_kummer(KummerShape::ClosedDisc, 2)).is_err());
    }

    #[test]
    fn affinoid_bound_frozen_values() {
        let m = gen_kummer(KummerShape::ClosedAnnulus, 2);
        let b = bound_affinoid(&m).unwrap();
        assert_eq!((b.value, b.observed), (3, 1));

        let m = gen_kummer(KummerShape::ClosedDisc, 2);
        let b = bound_affinoid(&m).unwrap();
        assert_eq!((b.value, b.observed), (1, 1));

        let id = SkeletalMorphism::identity(gen_kummer(KummerShape::ClosedDisc, 2).source());
        let b = bound_affinoid(&id).unwrap();
        assert_eq!((b.value, b.observed), (0, 0));
    }

    #[test]
    fn projective_bounds_frozen_values() {
        let m = gen_banana(2);
        let b = bound_projective(&m, &default_choice(&m)).unwrap();
        assert_eq!((b.value, b.observed), (2, 2));

        let m = gen_projective_line(3);
        let b = bound_projective(&m, &default_choice(&m)).unwrap();
        assert_eq!((b.value, b.observed), (1, 1));
        let b = bound_projective_coarse(&m).unwrap();
        assert_eq!((b.value, b.observed), (2, 1));

        let b = bound_projective_coarse(&gen_banana(2)).unwrap();
        assert_eq!((b.value, b.observed), (2, 2));

        let id = SkeletalMorphism::identity(gen_banana(2).source());
        let b = bound_projective(&id, &default_choice(&id)).unwrap();
        assert_eq!(b.observed, 0);
        assert!(b.holds);
    }

    #[test]
    fn totally_ramified_bound() {
        let m = gen_banana(2);
        let b = bound_totally_ramified(&m).unwrap();
        assert!(b.applicable);
        assert_eq!((b.value, b.observed), (2, 2));

        let m = gen_banana(3);
        let b = bound_totally_ramified(&m).unwrap();
        assert_eq!((b.value, b.observed), (3, 2));

        let m = gen_projective_line(4);
        let b = bound_totally_ramified(&m).unwrap();
        assert_eq!((b.value, b.observed), (1, 1));

        // Split fiber everywhere: inapplicable.
        let id = SkeletalMorphism::identity(gen_banana(2).source());
        let split = {
            use crate::curve::CurveSkeleton;
            use crate::graph::TopoGraph;
            let one = CurveSkeleton::new(
                TopoGraph::new([VertexId(0)], []).unwrap(),
                [],
                CurveClass::Projective,
                [],
            )
            .unwrap();
            let two = CurveSkeleton::new(
                TopoGraph::new([VertexId(0), VertexId(1)], []).unwrap(),
                [],
                CurveClass::Projective,
                [],
            )
            .unwrap();
            SkeletalMorphism::new(
                two,
                one,
                [(VertexId(0), (VertexId(0), 1)), (VertexId(1), (VertexId(0), 1))].into(),
                BTreeMap::new(),
                BTreeMap::new(),
                [],
                vec![2],
            )
        };
        assert!(split.validate().is_ok());
        assert!(!bound_totally_ramified(&split).unwrap().applicable);
        assert!(bound_totally_ramified(&id).unwrap().applicable);
    }

    #[test]
    fn check_all_holds_on_generators() {
        let cases = vec![
            gen_banana(2),
            gen_banana(4),
            gen_projective_line(1),
            gen_projective_line(5),
            gen_kummer(KummerShape::ClosedAnnulus, 2),
            gen_kummer(KummerShape::OpenAnnulus, 3),
            gen_kummer(KummerShape::ClosedDisc, 4),
            gen_kummer(KummerShape::OpenDisc, 2),
        ];
        for m in cases {
            for report in check_all(&m).unwrap() {
                assert!(report.holds, "{}: {} > {}", report.name, report.observed, report.value);
            }
        }
    }

    #[test]
    fn compact_classes_have_equal_counts() {
        for m in [gen_banana(3), gen_kummer(KummerShape::ClosedAnnulus, 2)] {
            let report = simulate(&m).unwrap();
            assert_eq!(report.r_f, report.r_prime);
        }
    }

    #[test]
    fn refinement_preserves_counts() {
        // Loop over loop, degree 2: one component either way.
        use crate::curve::CurveSkeleton;
        use crate::graph::{EdgeAttachment, TopoGraph};
        let lp = CurveSkeleton::new(
            TopoGraph::new(
                [VertexId(0)],
                [(EdgeId(0), EdgeAttachment::Closed(VertexId(0), VertexId(0)))],
            )
            .unwrap(),
            [],
            CurveClass::Projective,
            [],
        )
        .unwrap();
        let m = SkeletalMorphism::new(
            lp.clone(),
            lp,
            [(VertexId(0), (VertexId(0), 2))].into(),
            [(EdgeId(0), (EdgeId(0), 2))].into(),
            BTreeMap::new(),
            [],
            vec![2],
        );
        let before = simulate(&m).unwrap();
        let after = simulate(&m.loop_free_refinement().unwrap()).unwrap();
        assert_eq!(before.r_f, after.r_f);
        assert_eq!(before.r_prime, after.r_prime);
    }
}
