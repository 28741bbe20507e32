//! Canonical instances, a seeded random generator, and the exhaustive
//! labelled enumerator of small morphisms that backs the soundness sweeps.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::curve::{CurveClass, CurveSkeleton};
use crate::graph::{DiscId, EdgeAttachment, EdgeId, TopoGraph, VertexId};
use crate::morphism::{orient_loop_lifts, ComponentIndex, SkeletalMorphism};

fn curve(
    vertices: impl IntoIterator<Item = u32>,
    edges: impl IntoIterator<Item = (u32, EdgeAttachment)>,
    boundary: impl IntoIterator<Item = u32>,
    class: CurveClass,
    discs: impl IntoIterator<Item = u32>,
) -> CurveSkeleton {
    let graph = TopoGraph::new(
        vertices.into_iter().map(VertexId),
        edges.into_iter().map(|(e, a)| (EdgeId(e), a)),
    )
    .expect("generator graph is well formed");
    CurveSkeleton::new(
        graph,
        boundary.into_iter().map(VertexId),
        class,
        discs.into_iter().map(DiscId),
    )
    .expect("generator curve satisfies its class invariants")
}

/// Degree-d self-cover of the projective line model: a single vertex with
/// multiplicity d on both sides.
pub fn gen_projective_line(d: u32) -> SkeletalMorphism {
    assert!(d >= 1);
    let w = curve([0], [], [], CurveClass::Projective, []);
    let v = w.clone();
    SkeletalMorphism::new(
        w,
        v,
        [(VertexId(0), (VertexId(0), d))].into(),
        BTreeMap::new(),
        BTreeMap::new(),
        [],
        vec![d],
    )
}

/// The banana graph B(k) over a segment: both vertices totally ramified
/// with multiplicity k, each of the k parallel edges of degree 1.
pub fn gen_banana(k: u32) -> SkeletalMorphism {
    assert!(k >= 2);
    let source = curve(
        [0, 1],
        (0..k).map(|i| (i, EdgeAttachment::Closed(VertexId(0), VertexId(1)))),
        [],
        CurveClass::Projective,
        [],
    );
    let target = curve(
        [0, 1],
        [(0, EdgeAttachment::Closed(VertexId(0), VertexId(1)))],
        [],
        CurveClass::Projective,
        [],
    );
    let vmap = [(VertexId(0), (VertexId(0), k)), (VertexId(1), (VertexId(1), k))].into();
    let emap = (0..k).map(|i| (EdgeId(i), (EdgeId(0), 1))).collect();
    SkeletalMorphism::new(source, target, vmap, emap, BTreeMap::new(), [], vec![k])
}

/// The four disc/annulus shapes a Kummer cover can take at skeleton level.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum KummerShape {
    OpenAnnulus,
    ClosedAnnulus,
    ClosedDisc,
    OpenDisc,
}

impl KummerShape {
    pub fn keyword(self) -> &'static str {
        match self {
            KummerShape::OpenAnnulus => "open-annulus",
            KummerShape::ClosedAnnulus => "closed-annulus",
            KummerShape::ClosedDisc => "closed-disc",
            KummerShape::OpenDisc => "open-disc",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        [
            KummerShape::OpenAnnulus,
            KummerShape::ClosedAnnulus,
            KummerShape::ClosedDisc,
            KummerShape::OpenDisc,
        ]
        .into_iter()
        .find(|k| k.keyword() == s)
    }
}

/// The skeletal shadow of t ↦ t^d on a disc or annulus: every multiplicity
/// and degree equals d.
pub fn gen_kummer(shape: KummerShape, d: u32) -> SkeletalMorphism {
    assert!(d >= 2);
    match shape {
        KummerShape::ClosedAnnulus => {
            let c = curve(
                [0, 1],
                [(0, EdgeAttachment::Closed(VertexId(0), VertexId(1)))],
                [0, 1],
                CurveClass::Affinoid,
                [],
            );
            SkeletalMorphism::new(
                c.clone(),
                c,
                [(VertexId(0), (VertexId(0), d)), (VertexId(1), (VertexId(1), d))].into(),
                [(EdgeId(0), (EdgeId(0), d))].into(),
                BTreeMap::new(),
                [],
                vec![d],
            )
        }
        KummerShape::OpenAnnulus => {
            let c = curve([], [(0, EdgeAttachment::Free)], [], CurveClass::WideOpen, []);
            SkeletalMorphism::new(
                c.clone(),
                c,
                BTreeMap::new(),
                [(EdgeId(0), (EdgeId(0), d))].into(),
                BTreeMap::new(),
                [],
                vec![d],
            )
        }
        KummerShape::ClosedDisc => {
            let c = curve([0], [], [0], CurveClass::Affinoid, []);
            SkeletalMorphism::new(
                c.clone(),
                c,
                [(VertexId(0), (VertexId(0), d))].into(),
                BTreeMap::new(),
                BTreeMap::new(),
                [],
                vec![d],
            )
        }
        KummerShape::OpenDisc => {
            let c = curve([], [], [], CurveClass::WideOpen, [0]);
            SkeletalMorphism::new(
                c.clone(),
                c,
                BTreeMap::new(),
                BTreeMap::new(),
                [(DiscId(0), (DiscId(0), d))].into(),
                [],
                vec![d],
            )
        }
    }
}

/// A truncation after n blocks of the glued chain of degree-2 annulus
/// covers. Each block contributes a central path of three degree-2 edges;
/// consecutive blocks are joined by a connector annulus downstairs that is
/// doubled into two degree-1 edges upstairs, so the ramified parts of the
/// blocks stay pairwise disjoint and the locus has exactly n components.
pub fn gen_chain(n: u32) -> SkeletalMorphism {
    assert!(n >= 1);
    // Vertices per block i: 4i = left Shilov, 4i+1 and 4i+2 = the two
    // points carrying the punctured residue discs, 4i+3 = right Shilov.
    let vertices: Vec<u32> = (0..4 * n).collect();
    let boundary: Vec<u32> = (0..n).flat_map(|i| [4 * i, 4 * i + 3]).collect();

    let mut tgt_edges = Vec::new();
    let mut src_edges = Vec::new();
    let mut vmap = BTreeMap::new();
    let mut emap: BTreeMap<EdgeId, (EdgeId, u32)> = BTreeMap::new();
    for v in 0..4 * n {
        vmap.insert(VertexId(v), (VertexId(v), 2));
    }

    let mut te = 0;
    let mut se = 0;
    let lift = |src_edges: &mut Vec<(u32, EdgeAttachment)>,
                    emap: &mut BTreeMap<EdgeId, (EdgeId, u32)>,
                    se: &mut u32,
                    target: u32,
                    att: EdgeAttachment,
                    degree: u32| {
        src_edges.push((*se, att));
        emap.insert(EdgeId(*se), (EdgeId(target), degree));
        *se += 1;
    };

    for i in 0..n {
        let [a, b, c, d] = [4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3];
        for (u, v) in [(a, b), (b, c), (c, d)] {
            let att = EdgeAttachment::Closed(VertexId(u), VertexId(v));
            tgt_edges.push((te, att));
            lift(&mut src_edges, &mut emap, &mut se, te, att, 2);
            te += 1;
        }
    }
    for i in 0..n.saturating_sub(1) {
        let att = EdgeAttachment::Closed(VertexId(4 * i + 2), VertexId(4 * (i + 1) + 1));
        tgt_edges.push((te, att));
        lift(&mut src_edges, &mut emap, &mut se, te, att, 1);
        lift(&mut src_edges, &mut emap, &mut se, te, att, 1);
        te += 1;
    }
    for end in [1, 4 * (n - 1) + 2] {
        let att = EdgeAttachment::HalfOpen(VertexId(end));
        tgt_edges.push((te, att));
        lift(&mut src_edges, &mut emap, &mut se, te, att, 1);
        lift(&mut src_edges, &mut emap, &mut se, te, att, 1);
        te += 1;
    }

    let source = curve(
        vertices.clone(),
        src_edges,
        boundary.clone(),
        CurveClass::FiniteGeneral,
        [],
    );
    let target = curve(vertices, tgt_edges, boundary, CurveClass::FiniteGeneral, []);
    SkeletalMorphism::new(source, target, vmap, emap, BTreeMap::new(), [], vec![2])
}

// ---------------------------------------------------------------------------
// Exhaustive labelled enumeration.

/// Bounds of the enumeration space.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EnumLimits {
    pub max_target_vertices: usize,
    pub max_target_edges: usize,
    pub max_degree: u32,
    pub classes: BTreeSet<CurveClass>,
}

impl EnumLimits {
    pub fn new(
        max_target_vertices: usize,
        max_target_edges: usize,
        max_degree: u32,
        classes: impl IntoIterator<Item = CurveClass>,
    ) -> Self {
        EnumLimits {
            max_target_vertices,
            max_target_edges,
            max_degree,
            classes: classes.into_iter().collect(),
        }
    }

    pub fn all_classes(
        max_target_vertices: usize,
        max_target_edges: usize,
        max_degree: u32,
    ) -> Self {
        EnumLimits::new(max_target_vertices, max_target_edges, max_degree, CurveClass::ALL)
    }
}

/// One enumerated target: a curve with a class-consistent boundary marking
/// and a degree per component.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TargetConfig {
    pub class: CurveClass,
    pub curve: CurveSkeleton,
    pub degrees: Vec<u32>,
}

/// All partitions of n into unordered parts, each partition written
/// non-increasing, in deterministic order ([n] first).
fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn rec(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        let mut part = max.min(n);
        while part >= 1 {
            prefix.push(part);
            rec(n - part, part, prefix, out);
            prefix.pop();
            part -= 1;
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Does every component of a graph fit the given class?
fn class_graph_ok(class: CurveClass, graph: &TopoGraph) -> bool {
    match class {
        // Compact classes never see open attachment kinds here.
        CurveClass::Projective | CurveClass::Affinoid | CurveClass::FiniteGeneral => true,
        // A compact end-free component would be a projective curve in
        // disguise; wide open curves have none.
        CurveClass::WideOpen => graph
            .components()
            .iter()
            .all(|c| c.edges.iter().any(|e| graph.edges()[e].is_open())),
    }
}

/// Class-consistent boundary markings of a graph, in ascending bitmask
/// order over the sorted vertex list.
fn boundary_markings(class: CurveClass, graph: &TopoGraph) -> Vec<BTreeSet<VertexId>> {
    match class {
        CurveClass::Projective | CurveClass::WideOpen => vec![BTreeSet::new()],
        CurveClass::Affinoid | CurveClass::FiniteGeneral => {
            let verts: Vec<VertexId> = graph.vertices().iter().copied().collect();
            let comps = graph.components();
            let mut out = Vec::new();
            for mask in 0u32..(1 << verts.len()) {
                let marking: BTreeSet<VertexId> = verts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &v)| v)
                    .collect();
                let ok = comps.iter().all(|c| {
                    let has_end = c.edges.iter().any(|e| graph.edges()[e].is_open());
                    let needs_boundary = match class {
                        CurveClass::Affinoid => true,
                        _ => !has_end && !c.vertices.is_empty(),
                    };
                    !needs_boundary
                        || c.vertices.is_empty()
                        || !c.vertices.is_disjoint(&marking)
                });
                if ok {
                    out.push(marking);
                }
            }
            out
        }
    }
}

/// Every labelled target configuration within the limits: all graphs up to
/// the size bounds, all class-consistent boundary markings, all per
/// component degrees.
pub fn target_configs(limits: &EnumLimits) -> Vec<TargetConfig> {
    let mut out = Vec::new();
    for &class in &limits.classes {
        let compact = matches!(class, CurveClass::Projective | CurveClass::Affinoid);
        for nv in 0..=limits.max_target_vertices {
            let mut kinds: Vec<EdgeAttachment> = Vec::new();
            for u in 0..nv as u32 {
                for v in u..nv as u32 {
                    kinds.push(EdgeAttachment::Closed(VertexId(u), VertexId(v)));
                }
            }
            if !compact {
                for u in 0..nv as u32 {
                    kinds.push(EdgeAttachment::HalfOpen(VertexId(u)));
                }
                kinds.push(EdgeAttachment::Free);
            }
            for ne in 0..=limits.max_target_edges {
                for combo in multisets(kinds.len(), ne) {
                    let graph = TopoGraph::new(
                        (0..nv as u32).map(VertexId),
                        combo.iter().enumerate().map(|(i, &k)| (EdgeId(i as u32), kinds[k])),
                    )
                    .expect("enumerated graph is well formed");
                    if !class_graph_ok(class, &graph) {
                        continue;
                    }
                    for marking in boundary_markings(class, &graph) {
                        let curve = CurveSkeleton::new(graph.clone(), marking, class, [])
                            .expect("enumerated curve satisfies its class invariants");
                        let comps = curve.component_count();
                        for degrees in tuples(comps, limits.max_degree) {
                            out.push(TargetConfig { class, curve: curve.clone(), degrees });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Non-decreasing index sequences of the given length over 0..kinds.
fn multisets(kinds: usize, len: usize) -> Vec<Vec<usize>> {
    fn rec(kinds: usize, len: usize, start: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for k in start..kinds {
            prefix.push(k);
            rec(kinds, len, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if len == 0 {
        out.push(Vec::new());
    } else if kinds > 0 {
        rec(kinds, len, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// All length-n tuples over 1..=max, in ascending odometer order.
fn tuples(n: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![1u32; n];
    loop {
        out.push(cur.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < max {
                cur[i] += 1;
                for item in cur.iter_mut().skip(i + 1) {
                    *item = 1;
                }
                break;
            }
        }
    }
}

/// One source vertex of an instance under construction.
#[derive(Clone, Debug)]
struct FiberVertex {
    id: VertexId,
    mu: u32,
}

/// One lift of a target edge.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Lift {
    Closed(VertexId, VertexId, u32),
    HalfOpen(VertexId, u32),
    Free(u32),
}

/// All balanced lift sets of one target edge given the fibers over its
/// endpoints.
fn edge_options(
    att: EdgeAttachment,
    degree: u32,
    fibers: &BTreeMap<VertexId, Vec<FiberVertex>>,
) -> Vec<Vec<Lift>> {
    match att {
        EdgeAttachment::Free => partitions(degree)
            .into_iter()
            .map(|parts| parts.into_iter().map(Lift::Free).collect())
            .collect(),
        EdgeAttachment::HalfOpen(y) => {
            // Independently at each fiber vertex, split μ into lift degrees.
            let mut options: Vec<Vec<Lift>> = vec![Vec::new()];
            for fv in &fibers[&y] {
                let mut next = Vec::new();
                for opt in &options {
                    for parts in partitions(fv.mu) {
                        let mut ext = opt.clone();
                        ext.extend(parts.into_iter().map(|d| Lift::HalfOpen(fv.id, d)));
                        next.push(ext);
                    }
                }
                options = next;
            }
            options
        }
        EdgeAttachment::Closed(y, z) if y != z => {
            let rows = &fibers[&y];
            let cols = &fibers[&z];
            let mut out = Vec::new();
            let mut cells = vec![vec![0u32; cols.len()]; rows.len()];
            let mut col_rem: Vec<u32> = cols.iter().map(|f| f.mu).collect();
            fill_table(rows, cols, 0, 0, rows.first().map_or(0, |r| r.mu), &mut cells, &mut col_rem, &mut out);
            out.into_iter()
                .flat_map(|cells| expand_cells(rows, cols, &cells))
                .collect()
        }
        EdgeAttachment::Closed(y, _) => {
            let fiber = &fibers[&y];
            let mut out = Vec::new();
            let mut inc_rem: Vec<u32> = fiber.iter().map(|f| 2 * f.mu).collect();
            let mut cells: Vec<(usize, usize, u32)> = Vec::new();
            loop_tables(fiber, 0, 0, &mut inc_rem, &mut cells, &mut out);
            out.into_iter()
                .flat_map(|cells| expand_loop_cells(fiber, &cells))
                .filter(|lifts| loop_lift_set_feasible(fiber, lifts))
                .collect()
        }
    }
}

/// Enumerate nonnegative cell sums with the fiber multiplicities as row
/// and column sums.
#[allow(clippy::too_many_arguments)]
fn fill_table(
    rows: &[FiberVertex],
    cols: &[FiberVertex],
    i: usize,
    j: usize,
    row_rem: u32,
    cells: &mut Vec<Vec<u32>>,
    col_rem: &mut Vec<u32>,
    out: &mut Vec<Vec<Vec<u32>>>,
) {
    if i == rows.len() {
        if col_rem.iter().all(|&r| r == 0) {
            out.push(cells.clone());
        }
        return;
    }
    if j == cols.len() {
        if row_rem == 0 {
            let next_rem = rows.get(i + 1).map_or(0, |r| r.mu);
            fill_table(rows, cols, i + 1, 0, next_rem, cells, col_rem, out);
        }
        return;
    }
    let hi = row_rem.min(col_rem[j]);
    for a in 0..=hi {
        cells[i][j] = a;
        col_rem[j] -= a;
        fill_table(rows, cols, i, j + 1, row_rem - a, cells, col_rem, out);
        col_rem[j] += a;
        cells[i][j] = 0;
    }
}

fn expand_cells(rows: &[FiberVertex], cols: &[FiberVertex], cells: &[Vec<u32>]) -> Vec<Vec<Lift>> {
    let mut options: Vec<Vec<Lift>> = vec![Vec::new()];
    for (i, row) in cells.iter().enumerate() {
        for (j, &sum) in row.iter().enumerate() {
            if sum == 0 {
                continue;
            }
            let mut next = Vec::new();
            for opt in &options {
                for parts in partitions(sum) {
                    let mut ext = opt.clone();
                    ext.extend(parts.into_iter().map(|d| Lift::Closed(rows[i].id, cols[j].id, d)));
                    next.push(ext);
                }
            }
            options = next;
        }
    }
    options
}

/// Enumerate unordered cell sums (i ≤ j) for lifts of a loop, subject to
/// the incidence constraint: at each fiber vertex the incident lift
/// degrees, loops counted twice, sum to 2μ.
fn loop_tables(
    fiber: &[FiberVertex],
    i: usize,
    j: usize,
    inc_rem: &mut Vec<u32>,
    cells: &mut Vec<(usize, usize, u32)>,
    out: &mut Vec<Vec<(usize, usize, u32)>>,
) {
    if i == fiber.len() {
        if inc_rem.iter().all(|&r| r == 0) {
            out.push(cells.clone());
        }
        return;
    }
    if j == fiber.len() {
        loop_tables(fiber, i + 1, i + 1, inc_rem, cells, out);
        return;
    }
    let hi = if i == j { inc_rem[i] / 2 } else { inc_rem[i].min(inc_rem[j]) };
    for a in 0..=hi {
        let (di, dj) = if i == j { (2 * a, 0) } else { (a, a) };
        inc_rem[i] -= di;
        inc_rem[j] -= dj;
        if a > 0 {
            cells.push((i, j, a));
        }
        loop_tables(fiber, i, j + 1, inc_rem, cells, out);
        if a > 0 {
            cells.pop();
        }
        inc_rem[i] += di;
        inc_rem[j] += dj;
    }
}

fn expand_loop_cells(fiber: &[FiberVertex], cells: &[(usize, usize, u32)]) -> Vec<Vec<Lift>> {
    let mut options: Vec<Vec<Lift>> = vec![Vec::new()];
    for &(i, j, sum) in cells {
        let mut next = Vec::new();
        for opt in &options {
            for parts in partitions(sum) {
                let mut ext = opt.clone();
                ext.extend(parts.into_iter().map(|d| Lift::Closed(fiber[i].id, fiber[j].id, d)));
                next.push(ext);
            }
        }
        options = next;
    }
    options
}

/// Can the lifts of a loop be oriented so that both loop directions are
/// balanced at every fiber vertex?
fn loop_lift_set_feasible(fiber: &[FiberVertex], lifts: &[Lift]) -> bool {
    let mu: BTreeMap<VertexId, u32> = fiber.iter().map(|f| (f.id, f.mu)).collect();
    let tagged: Vec<(EdgeId, VertexId, VertexId, u32)> = lifts
        .iter()
        .enumerate()
        .map(|(i, l)| match *l {
            Lift::Closed(u, v, d) => (EdgeId(i as u32), u, v, d),
            _ => unreachable!("loop lifts are closed edges"),
        })
        .collect();
    orient_loop_lifts(&mu, &tagged).is_some()
}

/// Every labelled valid morphism onto the configured target.
pub fn instances_for(config: &TargetConfig) -> Vec<SkeletalMorphism> {
    let curve = &config.curve;
    let index = ComponentIndex::of(curve);
    let target_vertices: Vec<VertexId> = curve.graph().vertices().iter().copied().collect();

    // All fiber shapes: a partition of the component degree per vertex.
    let per_vertex: Vec<Vec<Vec<u32>>> = target_vertices
        .iter()
        .map(|y| partitions(config.degrees[index.vertex[y]]))
        .collect();

    let mut out = Vec::new();
    let mut choice = vec![0usize; target_vertices.len()];
    loop {
        // Materialize source vertices for this fiber shape.
        let mut fibers: BTreeMap<VertexId, Vec<FiberVertex>> = BTreeMap::new();
        let mut next_vertex = 0u32;
        for (k, y) in target_vertices.iter().enumerate() {
            let parts = &per_vertex[k][choice[k]];
            let fiber = parts
                .iter()
                .map(|&mu| {
                    let id = VertexId(next_vertex);
                    next_vertex += 1;
                    FiberVertex { id, mu }
                })
                .collect();
            fibers.insert(*y, fiber);
        }

        // Lift options per target edge, then their cartesian product.
        let edge_ids: Vec<EdgeId> = curve.graph().edges().keys().copied().collect();
        let options: Vec<Vec<Vec<Lift>>> = edge_ids
            .iter()
            .map(|e| {
                let att = curve.graph().edges()[e];
                let comp = match att {
                    EdgeAttachment::Free => index.edge[e],
                    EdgeAttachment::Closed(y, _) | EdgeAttachment::HalfOpen(y) => index.vertex[&y],
                };
                edge_options(att, config.degrees[comp], &fibers)
            })
            .collect();

        if options.iter().all(|o| !o.is_empty()) {
            let mut pick = vec![0usize; edge_ids.len()];
            loop {
                out.push(assemble(config, &fibers, &target_vertices, &edge_ids, &options, &pick));
                if !advance(&mut pick, &options.iter().map(|o| o.len()).collect::<Vec<_>>()) {
                    break;
                }
            }
        }

        if !advance(&mut choice, &per_vertex.iter().map(|p| p.len()).collect::<Vec<_>>()) {
            break;
        }
    }
    out
}

fn advance(state: &mut [usize], lens: &[usize]) -> bool {
    for i in (0..state.len()).rev() {
        if state[i] + 1 < lens[i] {
            state[i] += 1;
            for s in state.iter_mut().skip(i + 1) {
                *s = 0;
            }
            return true;
        }
    }
    false
}

fn assemble(
    config: &TargetConfig,
    fibers: &BTreeMap<VertexId, Vec<FiberVertex>>,
    target_vertices: &[VertexId],
    edge_ids: &[EdgeId],
    options: &[Vec<Vec<Lift>>],
    pick: &[usize],
) -> SkeletalMorphism {
    let mut src_vertices = Vec::new();
    let mut vmap = BTreeMap::new();
    let mut boundary = Vec::new();
    for y in target_vertices {
        for fv in &fibers[y] {
            src_vertices.push(fv.id);
            vmap.insert(fv.id, (*y, fv.mu));
            if config.curve.boundary().contains(y) {
                boundary.push(fv.id);
            }
        }
    }

    let mut src_edges = Vec::new();
    let mut emap = BTreeMap::new();
    let mut next_edge = 0u32;
    for (k, e) in edge_ids.iter().enumerate() {
        for lift in &options[k][pick[k]] {
            let id = EdgeId(next_edge);
            next_edge += 1;
            let (att, d) = match *lift {
                Lift::Closed(u, v, d) => (EdgeAttachment::Closed(u, v), d),
                Lift::HalfOpen(u, d) => (EdgeAttachment::HalfOpen(u), d),
                Lift::Free(d) => (EdgeAttachment::Free, d),
            };
            src_edges.push((id, att));
            emap.insert(id, (*e, d));
        }
    }

    let graph = TopoGraph::new(src_vertices, src_edges).expect("assembled source graph");
    let source = CurveSkeleton::new(graph, boundary, config.class, [])
        .expect("assembled source satisfies its class invariants");
    SkeletalMorphism::new(
        source,
        config.curve.clone(),
        vmap,
        emap,
        BTreeMap::new(),
        [],
        config.degrees.clone(),
    )
}

/// Every labelled valid morphism within the limits, streamed in
/// deterministic order.
pub fn enumerate_small(limits: &EnumLimits) -> impl Iterator<Item = SkeletalMorphism> {
    target_configs(limits).into_iter().flat_map(|c| instances_for(&c))
}

/// Apply `f` to every enumerated instance on a pool of `workers` threads.
/// The result order does not depend on the worker count: instances are
/// partitioned by target configuration and re-merged in sequence.
pub fn map_instances_parallel<R: Send>(
    limits: &EnumLimits,
    workers: usize,
    f: impl Fn(&SkeletalMorphism) -> R + Sync,
) -> Vec<R> {
    let configs = target_configs(limits);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("worker pool");
    pool.install(|| {
        configs
            .par_iter()
            .map(|c| instances_for(c).iter().map(&f).collect::<Vec<R>>())
            .collect::<Vec<Vec<R>>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

// ---------------------------------------------------------------------------
// Seeded random generation.

/// Size and class bounds for `gen_random`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RandomParams {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub max_degree: u32,
    pub class: CurveClass,
    pub max_attempts: u32,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            max_vertices: 3,
            max_edges: 4,
            max_degree: 3,
            class: CurveClass::FiniteGeneral,
            max_attempts: 64,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RandomGenError {
    #[error("random generation gave up after {attempts} attempts")]
    Exhausted { attempts: u32 },
}

/// Build a random valid morphism: sample a target, a boundary marking,
/// degrees and fiber partitions, then pick one balanced lift set per edge.
/// The same seed always yields the same instance.
pub fn gen_random(seed: u64, params: &RandomParams) -> Result<SkeletalMorphism, RandomGenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..params.max_attempts {
        if let Some(m) = random_attempt(&mut rng, params) {
            return Ok(m);
        }
    }
    Err(RandomGenError::Exhausted { attempts: params.max_attempts })
}

fn random_attempt(rng: &mut ChaCha8Rng, params: &RandomParams) -> Option<SkeletalMorphism> {
    let class = params.class;
    let compact = matches!(class, CurveClass::Projective | CurveClass::Affinoid);
    let nv = rng.random_range(0..=params.max_vertices);

    let mut kinds: Vec<EdgeAttachment> = Vec::new();
    for u in 0..nv as u32 {
        for v in u..nv as u32 {
            kinds.push(EdgeAttachment::Closed(VertexId(u), VertexId(v)));
        }
    }
    if !compact {
        for u in 0..nv as u32 {
            kinds.push(EdgeAttachment::HalfOpen(VertexId(u)));
        }
        kinds.push(EdgeAttachment::Free);
    }

    let ne = if kinds.is_empty() { 0 } else { rng.random_range(0..=params.max_edges) };
    let edges: Vec<(u32, EdgeAttachment)> = (0..ne)
        .map(|i| (i as u32, kinds[rng.random_range(0..kinds.len())]))
        .collect();
    let graph = TopoGraph::new(
        (0..nv as u32).map(VertexId),
        edges.iter().map(|&(e, a)| (EdgeId(e), a)),
    )
    .expect("sampled graph is well formed");
    if !class_graph_ok(class, &graph) {
        return None;
    }

    let comps = graph.components();
    let mut marking: BTreeSet<VertexId> = BTreeSet::new();
    match class {
        CurveClass::Projective | CurveClass::WideOpen => {}
        CurveClass::Affinoid | CurveClass::FiniteGeneral => {
            for &v in graph.vertices() {
                if rng.random_bool(0.33) {
                    marking.insert(v);
                }
            }
            for comp in &comps {
                let has_end = comp.edges.iter().any(|e| graph.edges()[e].is_open());
                let needs = class == CurveClass::Affinoid || (!has_end && !comp.vertices.is_empty());
                if needs && comp.vertices.is_disjoint(&marking) {
                    let verts: Vec<VertexId> = comp.vertices.iter().copied().collect();
                    if verts.is_empty() {
                        return None;
                    }
                    marking.insert(verts[rng.random_range(0..verts.len())]);
                }
            }
        }
    }

    let curve = CurveSkeleton::new(graph, marking, class, []).ok()?;
    let degrees: Vec<u32> = (0..curve.component_count())
        .map(|_| rng.random_range(1..=params.max_degree))
        .collect();

    // Random fiber partition per vertex.
    let index = ComponentIndex::of(&curve);
    let target_vertices: Vec<VertexId> = curve.graph().vertices().iter().copied().collect();
    let mut fibers: BTreeMap<VertexId, Vec<FiberVertex>> = BTreeMap::new();
    let mut next_vertex = 0u32;
    for y in &target_vertices {
        let mut parts = random_partition(rng, degrees[index.vertex[y]]);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let fiber = parts
            .into_iter()
            .map(|mu| {
                let id = VertexId(next_vertex);
                next_vertex += 1;
                FiberVertex { id, mu }
            })
            .collect();
        fibers.insert(*y, fiber);
    }

    // One random balanced lift set per edge.
    let config = TargetConfig { class, curve: curve.clone(), degrees: degrees.clone() };
    let edge_ids: Vec<EdgeId> = curve.graph().edges().keys().copied().collect();
    let mut picks: Vec<Vec<Lift>> = Vec::new();
    for e in &edge_ids {
        let att = curve.graph().edges()[e];
        let comp = match att {
            EdgeAttachment::Free => index.edge[e],
            EdgeAttachment::Closed(y, _) | EdgeAttachment::HalfOpen(y) => index.vertex[&y],
        };
        let options = edge_options(att, degrees[comp], &fibers);
        if options.is_empty() {
            return None;
        }
        picks.push(options[rng.random_range(0..options.len())].clone());
    }

    let mut src_vertices = Vec::new();
    let mut vmap = BTreeMap::new();
    let mut boundary = Vec::new();
    for y in &target_vertices {
        for fv in &fibers[y] {
            src_vertices.push(fv.id);
            vmap.insert(fv.id, (*y, fv.mu));
            if curve.boundary().contains(y) {
                boundary.push(fv.id);
            }
        }
    }
    let mut src_edges = Vec::new();
    let mut emap = BTreeMap::new();
    let mut next_edge = 0u32;
    for (k, e) in edge_ids.iter().enumerate() {
        for lift in &picks[k] {
            let id = EdgeId(next_edge);
            next_edge += 1;
            let (att, d) = match *lift {
                Lift::Closed(u, v, d) => (EdgeAttachment::Closed(u, v), d),
                Lift::HalfOpen(u, d) => (EdgeAttachment::HalfOpen(u), d),
                Lift::Free(d) => (EdgeAttachment::Free, d),
            };
            src_edges.push((id, att));
            emap.insert(id, (*e, d));
        }
    }
    let source_graph = TopoGraph::new(src_vertices, src_edges).expect("sampled source graph");
    let source = CurveSkeleton::new(source_graph, boundary, class, []).ok()?;
    let m = SkeletalMorphism::new(source, config.curve, vmap, emap, BTreeMap::new(), [], degrees);
    m.is_valid().then_some(m)
}

fn random_partition(rng: &mut ChaCha8Rng, n: u32) -> Vec<u32> {
    let mut parts = Vec::new();
    let mut rem = n;
    while rem > 0 {
        let p = rng.random_range(1..=rem);
        parts.push(p);
        rem -= p;
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ramification::{check_all, simulate};

    #[test]
    fn projective_line_examples() {
        let id = gen_projective_line(1);
        assert!(id.validate().is_ok());
        assert_eq!(simulate(&id).unwrap().r_f, 0);

        let m = gen_projective_line(3);
        assert!(m.validate().is_ok());
        assert_eq!(simulate(&m).unwrap().r_f, 1);
    }

    #[test]
    fn banana_examples() {
        for k in 2..=4 {
            let m = gen_banana(k);
            assert!(m.validate().is_ok());
            assert_eq!(m.source().topological_genus(), (k - 1) as u64);
            assert_eq!(simulate(&m).unwrap().r_f, 2);
            for y in m.target().graph().vertices() {
                assert_eq!(m.fiber(*y).unwrap().len(), 1);
            }
        }
    }

    #[test]
    fn kummer_shapes_validate() {
        for shape in [
            KummerShape::OpenAnnulus,
            KummerShape::ClosedAnnulus,
            KummerShape::ClosedDisc,
            KummerShape::OpenDisc,
        ] {
            for d in [2, 5] {
                let m = gen_kummer(shape, d);
                assert!(m.validate().is_ok(), "{shape:?} d={d}");
                assert_eq!(simulate(&m).unwrap().r_f, 1);
            }
        }
    }

    #[test]
    fn chain_component_counts() {
        for n in 1..=10 {
            let m = gen_chain(n);
            assert!(m.validate().is_ok(), "chain({n})");
            let report = simulate(&m).unwrap();
            assert_eq!(report.r_f, n as usize, "chain({n})");
            assert_eq!(report.r_prime, n as usize);
            // The ramified pieces are pairwise disjoint by construction.
            let mut seen: BTreeSet<VertexId> = BTreeSet::new();
            for comp in &report.components {
                assert!(comp.vertices.iter().all(|v| seen.insert(*v)));
            }
        }
    }

    #[test]
    fn chain_genus_grows_linearly() {
        for n in 1..=6 {
            assert_eq!(gen_chain(n).source().topological_genus(), (n - 1) as u64);
        }
    }

    #[test]
    fn chain_satisfies_all_bounds() {
        for n in [1, 2, 5] {
            for report in check_all(&gen_chain(n)).unwrap() {
                assert!(report.holds, "chain({n}) {}", report.name);
            }
        }
    }

    #[test]
    fn smallest_projective_enumeration() {
        // One target vertex, no edges, degree up to 2: the degree-1 and
        // degree-2 one-vertex covers plus the split two-vertex fiber.
        let limits = EnumLimits::new(1, 0, 2, [CurveClass::Projective]);
        let instances: Vec<_> = enumerate_small(&limits).collect();
        // The empty target also appears, with its unique empty cover.
        assert_eq!(instances.len(), 4);
        for m in &instances {
            assert!(m.validate().is_ok());
        }
        let fibers: Vec<usize> =
            instances.iter().map(|m| m.source().graph().vertex_count()).collect();
        assert_eq!(fibers, vec![0, 1, 1, 2]);
    }

    #[test]
    fn degree_one_enumeration_is_unramified() {
        let limits = EnumLimits::all_classes(2, 2, 1);
        for m in enumerate_small(&limits) {
            assert!(m.validate().is_ok());
            assert_eq!(simulate(&m).unwrap().r_f, 0);
        }
    }

    #[test]
    fn enumeration_is_deterministic_across_workers() {
        let limits = EnumLimits::all_classes(2, 2, 2);
        let one = map_instances_parallel(&limits, 1, |m| m.clone());
        let four = map_instances_parallel(&limits, 4, |m| m.clone());
        assert_eq!(one, four);
        let seq: Vec<_> = enumerate_small(&limits).collect();
        assert_eq!(one, seq);
    }

    #[test]
    fn random_generation_is_deterministic() {
        let params = RandomParams::default();
        let a = gen_random(7, &params).unwrap();
        let b = gen_random(7, &params).unwrap();
        assert_eq!(a, b);
        let c = gen_random(8, &params).unwrap();
        assert!(c.validate().is_ok());
    }

    #[test]
    fn random_sweep_validates() {
        let params = RandomParams::default();
        for seed in 0..1000 {
            let m = gen_random(seed, &params).unwrap();
            assert!(m.validate().is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn degree_one_random_is_identity_like() {
        let params = RandomParams { max_degree: 1, ..RandomParams::default() };
        let m = gen_random(3, &params).unwrap();
        assert!(m.vmap().values().all(|&(_, mu)| mu == 1));
        assert!(m.emap().values().all(|&(_, d)| d == 1));
    }

    #[test]
    fn partitions_are_canonical() {
        assert_eq!(partitions(3), vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(partitions(0), vec![Vec::<u32>::new()]);
    }
}
