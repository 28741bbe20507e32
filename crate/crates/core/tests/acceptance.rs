//! Acceptance suite: one test per criterion, each printing a pass line
//! (run with `--nocapture` to see them). The exhaustive families are small
//! enough to brute-force and large enough to leave no room for luck.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use skelram::curve::{CurveClass, CurveSkeleton};
use skelram::generator::{
    gen_banana, gen_chain, gen_kummer, gen_projective_line, map_instances_parallel, EnumLimits,
    KummerShape,
};
use skelram::graph::{compact_cycle_rank, EdgeAttachment, EdgeId, TopoGraph, VertexId};
use skelram::ramification::{
    bound_affinoid, bound_main, bound_projective_coarse, bound_totally_ramified, bound_wide_open,
    check_all, simulate,
};

/// Every attachment kind available on `nv` labelled vertices.
fn attachment_kinds(nv: u32) -> Vec<EdgeAttachment> {
    let mut kinds = Vec::new();
    for u in 0..nv {
        for v in u..nv {
            kinds.push(EdgeAttachment::Closed(VertexId(u), VertexId(v)));
        }
    }
    for u in 0..nv {
        kinds.push(EdgeAttachment::HalfOpen(VertexId(u)));
    }
    kinds.push(EdgeAttachment::Free);
    kinds
}

/// Non-decreasing index sequences: the edge multisets of a labelled graph.
fn edge_multisets(kinds: usize, max_len: usize) -> Vec<Vec<usize>> {
    fn rec(kinds: usize, left: usize, start: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(prefix.clone());
        if left == 0 {
            return;
        }
        for k in start..kinds {
            prefix.push(k);
            rec(kinds, left - 1, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(kinds, max_len, 0, &mut Vec::new(), &mut out);
    out
}

fn build_graph(nv: u32, kinds: &[EdgeAttachment], combo: &[usize]) -> TopoGraph {
    TopoGraph::new(
        (0..nv).map(VertexId),
        combo.iter().enumerate().map(|(i, &k)| (EdgeId(i as u32), kinds[k])),
    )
    .expect("exhaustive graph is well formed")
}

fn subset(verts: &[VertexId], mask: u32) -> BTreeSet<VertexId> {
    verts
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &v)| v)
        .collect()
}

const MAX_VERTICES: u32 = 5;
const MAX_EDGES: usize = 6;

#[test]
fn criterion_1_graph_identities() {
    let t0 = Instant::now();
    let graphs = AtomicUsize::new(0);
    for nv in 0..=MAX_VERTICES {
        let kinds = attachment_kinds(nv);
        let combos = edge_multisets(kinds.len(), MAX_EDGES);
        combos.par_iter().for_each(|combo| {
            let g = build_graph(nv, &kinds, combo);
            assert_eq!(
                g.genus(),
                compact_cycle_rank(&g.compactify()),
                "genus vs cycle rank on {g:?}"
            );
            let verts: Vec<VertexId> = g.vertices().iter().copied().collect();
            for mask in 0..(1u32 << nv) {
                let s = subset(&verts, mask);
                let (lhs, rhs) = g.check_bm_localization(&s).expect("S is a vertex subset");
                assert_eq!(lhs, rhs, "localization on {g:?} minus {s:?}");
            }
            graphs.fetch_add(1, Ordering::Relaxed);
        });
    }
    let dt = t0.elapsed();
    assert!(dt < Duration::from_secs(60), "criterion 1 took {dt:?}");
    println!(
        "criterion 1 (graph identities, {} graphs, all vertex subsets): pass in {dt:?}",
        graphs.load(Ordering::Relaxed)
    );
}

#[test]
fn criterion_2_curve_identities() {
    let t0 = Instant::now();
    let curves = AtomicUsize::new(0);
    for nv in 0..=MAX_VERTICES {
        let kinds = attachment_kinds(nv);
        let combos = edge_multisets(kinds.len(), MAX_EDGES);
        combos.par_iter().for_each(|combo| {
            let g = build_graph(nv, &kinds, combo);
            let verts: Vec<VertexId> = g.vertices().iter().copied().collect();

            // Every boundary marking: construction, the two genus routes,
            // and localization (the localization sums never involve the
            // boundary, so the all-subsets sweep below uses the extremes).
            for bmask in 0..(1u32 << nv) {
                let boundary = subset(&verts, bmask);
                let c = CurveSkeleton::new(g.clone(), boundary, CurveClass::FiniteGeneral, [])
                    .expect("general curve accepts any marking");
                assert_eq!(c.genus_via_triangulation(), c.topological_genus());
                let (lhs, rhs) = c.check_bm_curves(&BTreeSet::new()).unwrap();
                assert_eq!(lhs, rhs);
                curves.fetch_add(1, Ordering::Relaxed);
            }

            for bmask in [0u32, (1u32 << nv) - 1] {
                let boundary = subset(&verts, bmask);
                let c = CurveSkeleton::new(g.clone(), boundary, CurveClass::FiniteGeneral, [])
                    .expect("general curve accepts any marking");
                for smask in 0..(1u32 << nv) {
                    let s = subset(&verts, smask);
                    let (lhs, rhs) = c.check_bm_curves(&s).expect("S is a vertex subset");
                    assert_eq!(lhs, rhs, "curve localization on {c:?} minus {s:?}");
                }
            }
        });
    }
    let dt = t0.elapsed();
    assert!(dt < Duration::from_secs(60), "criterion 2 took {dt:?}");
    println!(
        "criterion 2 (curve identities, {} marked curves): pass in {dt:?}",
        curves.load(Ordering::Relaxed)
    );
}

#[test]
fn criterion_3_bound_soundness_sweep() {
    let t0 = Instant::now();
    let limits = EnumLimits::all_classes(2, 3, 3);
    let rows = map_instances_parallel(&limits, 2, |m| {
        assert!(m.validate().is_ok());
        let reports = check_all(m).expect("enumerated instance validates");
        reports.into_iter().filter(|b| !b.holds).count()
    });
    let count = rows.len();
    let violations: usize = rows.into_iter().sum();
    let dt = t0.elapsed();
    assert!(count >= 1000, "only {count} instances");
    assert_eq!(violations, 0);
    assert!(dt < Duration::from_secs(300), "criterion 3 took {dt:?}");
    println!("criterion 3 (bound soundness sweep, {count} instances, 0 violations): pass in {dt:?}");
}

#[test]
fn criterion_4_faber_recovery() {
    for d in 2..=6 {
        let m = gen_projective_line(d);
        let b = bound_projective_coarse(&m).expect("projective line model is valid");
        assert!(b.applicable);
        assert_eq!(b.value, (d - 1) as i64, "degree {d}");
        assert!(b.holds);
    }
    println!("criterion 4 (coarse projective bound equals deg-1 on the line, d=2..6): pass");
}

#[test]
fn criterion_5_totally_ramified_attained() {
    let m = gen_banana(2);
    let b = bound_totally_ramified(&m).expect("banana cover is valid");
    assert!(b.applicable);
    assert_eq!(b.value, 2);
    assert_eq!(m.source().topological_genus() + 1, 2);
    assert_eq!(simulate(&m).unwrap().r_f, 2);
    println!("criterion 5 (totally ramified bound g_t+1 = 2 attained by B(2)): pass");
}

#[test]
fn criterion_6_chain_truncations() {
    let t0 = Instant::now();
    for n in 1..=10u32 {
        let m = gen_chain(n);
        assert_eq!(simulate(&m).unwrap().r_f, n as usize, "chain({n})");
        for b in check_all(&m).expect("chain is valid") {
            assert!(b.holds, "chain({n}) violates {}", b.name);
        }
    }
    let dt = t0.elapsed();
    assert!(dt < Duration::from_secs(10), "criterion 6 took {dt:?}");
    println!("criterion 6 (chain truncations give r_f = n for n=1..10, all bounds hold): pass in {dt:?}");
}

#[test]
fn criterion_7_kummer_annulus_component() {
    let m = gen_kummer(KummerShape::ClosedAnnulus, 2);
    let report = simulate(&m).unwrap();
    assert_eq!(report.r_f, 1);
    let comp = &report.components[0];
    assert_eq!(comp.vertices.len(), 2);
    assert!(comp.edges.contains(&EdgeId(0)));
    println!("criterion 7 (Kummer annulus: one component containing the whole skeleton): pass");
}

#[test]
fn criterion_8_specialization_coherence() {
    let t0 = Instant::now();
    let limits = EnumLimits::new(2, 3, 3, [CurveClass::WideOpen, CurveClass::Affinoid]);
    let rows = map_instances_parallel(&limits, 2, |m| {
        match m.source().class() {
            CurveClass::WideOpen => {
                let (wp, wr) = bound_wide_open(m).expect("wide open instance");
                let (mp, mr) = bound_main(m).expect("wide open instance");
                assert!(wp.applicable && mp.applicable);
                assert_eq!(wp.value, mp.value);
                assert_eq!(wr.value, mr.value);
                assert_eq!(wp.observed, mp.observed);
                assert_eq!(wr.observed, mr.observed);
            }
            CurveClass::Affinoid => {
                let a = bound_affinoid(m).expect("affinoid instance");
                let (_, mr) = bound_main(m).expect("affinoid instance");
                assert!(a.applicable && mr.applicable);
                assert_eq!(a.value, mr.value);
                assert_eq!(a.observed, mr.observed);
            }
            other => panic!("unexpected class {other}"),
        }
        1usize
    });
    let dt = t0.elapsed();
    println!(
        "criterion 8 (specialized bounds equal the main bounds on {} instances): pass in {dt:?}",
        rows.len()
    );
}
