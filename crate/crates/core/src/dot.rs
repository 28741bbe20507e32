//! DOT rendering of curves and morphisms, in the style of skeletal
//! drawings: boundary vertices doubled, open ends as point-shaped phantom
//! nodes, ramified elements in red, multiplicities and degrees as labels.

use std::fmt::Write;

use thiserror::Error;

use crate::document::{NamedCurve, NamedMorphism, SkelDocument};
use crate::graph::{EdgeAttachment, EdgeId, VertexId};
use crate::morphism::SkeletalMorphism;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DotError {
    #[error("no curve or morphism named `{0}` in the document")]
    UnknownName(String),
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Render the named curve or morphism of a document.
pub fn export_dot(doc: &SkelDocument, name: &str) -> Result<String, DotError> {
    if let Some(nc) = doc.curves.get(name) {
        return Ok(curve_dot(name, nc));
    }
    if let Some(nm) = doc.morphisms.get(name) {
        let source = &doc.curves[&nm.source_curve];
        return Ok(morphism_dot(name, nm, source));
    }
    Err(DotError::UnknownName(name.to_string()))
}

fn curve_dot(name: &str, nc: &NamedCurve) -> String {
    let c = nc.curve();
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {{", quoted(name));
    for &v in c.graph().vertices() {
        let vname = nc.vertex_name(v);
        let marks = if c.boundary().contains(&v) { ", peripheries=2" } else { "" };
        let _ = writeln!(out, "  {} [label={}{}];", quoted(vname), quoted(vname), marks);
    }
    for (&e, &att) in c.graph().edges() {
        let ename = nc.edge_name(e);
        emit_edge(&mut out, nc, e, att, ename.to_string(), "");
    }
    for &d in c.discs() {
        let dname = nc.disc_name(d);
        let _ = writeln!(out, "  {} [label={}, shape=circle, style=dotted];", quoted(dname), quoted(dname));
    }
    out.push_str("}\n");
    out
}

fn morphism_dot(name: &str, nm: &NamedMorphism, source: &NamedCurve) -> String {
    let m: &SkeletalMorphism = &nm.morphism;
    let c = m.source();
    let mut out = String::new();
    let _ = writeln!(out, "graph {} {{", quoted(name));
    for &v in c.graph().vertices() {
        let vname = source.vertex_name(v);
        let mu = m.multiplicity(v).unwrap_or(1);
        let mut attrs = format!("label={}", quoted(&format!("{vname} \u{03bc}={mu}")));
        if c.boundary().contains(&v) {
            attrs.push_str(", peripheries=2");
        }
        if mu > 1 {
            attrs.push_str(", color=red");
        }
        let _ = writeln!(out, "  {} [{}];", quoted(vname), attrs);
    }
    for (&e, &att) in c.graph().edges() {
        let ename = source.edge_name(e);
        let d = m.edge_degree(e).unwrap_or(1);
        let style = if d > 1 { ", color=red, penwidth=2" } else { "" };
        emit_edge(&mut out, source, e, att, format!("{ename} d={d}"), style);
    }
    for &disc in c.discs() {
        let dname = source.disc_name(disc);
        let d = m.dmap().get(&disc).map(|&(_, k)| k).unwrap_or(1);
        let style = if d > 1 { ", color=red" } else { "" };
        let _ = writeln!(
            out,
            "  {} [label={}, shape=circle, style=dotted{}];",
            quoted(dname),
            quoted(&format!("{dname} d={d}")),
            style
        );
    }
    for &(v, d) in m.ramified_discs() {
        let vname = source.vertex_name(v);
        let marker = format!("{vname}__rdisc{d}");
        let _ = writeln!(out, "  {} [label={}, shape=circle, style=dashed, color=red];", quoted(&marker), quoted(&format!("disc d={d}")));
        let _ = writeln!(out, "  {} -- {} [style=dashed, color=red];", quoted(vname), quoted(&marker));
    }
    out.push_str("}\n");
    out
}

fn emit_edge(
    out: &mut String,
    nc: &NamedCurve,
    e: EdgeId,
    att: EdgeAttachment,
    label: String,
    style: &str,
) {
    let ename = nc.edge_name(e);
    let node = |v: VertexId| quoted(nc.vertex_name(v));
    match att {
        EdgeAttachment::Closed(u, v) => {
            let _ = writeln!(out, "  {} -- {} [label={}{}];", node(u), node(v), quoted(&label), style);
        }
        EdgeAttachment::HalfOpen(u) => {
            let phantom = quoted(&format!("{ename}__end"));
            let _ = writeln!(out, "  {phantom} [shape=point];");
            let _ = writeln!(out, "  {} -- {} [label={}, style=dashed{}];", node(u), phantom, quoted(&label), style);
        }
        EdgeAttachment::Free => {
            let p0 = quoted(&format!("{ename}__end0"));
            let p1 = quoted(&format!("{ename}__end1"));
            let _ = writeln!(out, "  {p0} [shape=point];");
            let _ = writeln!(out, "  {p1} [shape=point];");
            let _ = writeln!(out, "  {p0} -- {p1} [label={}, style=dashed{}];", quoted(&label), style);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::doc_from_morphism;
    use crate::generator::{gen_kummer, gen_projective_line, KummerShape};

    #[test]
    fn single_vertex_curve_renders_one_node() {
        let doc = doc_from_morphism("f", "W", "V", &gen_projective_line(1));
        let dot = export_dot(&doc, "W").unwrap();
        assert_eq!(dot.matches("label").count(), 1);
        assert!(dot.starts_with("graph \"W\" {"));
    }

    #[test]
    fn kummer_annulus_is_fully_ramification_styled() {
        let doc = doc_from_morphism("f", "W", "V", &gen_kummer(KummerShape::ClosedAnnulus, 2));
        let dot = export_dot(&doc, "f").unwrap();
        assert_eq!(dot.matches("color=red").count(), 3);
        assert!(dot.contains("peripheries=2"));
        assert!(dot.contains("d=2"));
    }

    #[test]
    fn unknown_name_errors() {
        let doc = doc_from_morphism("f", "W", "V", &gen_projective_line(2));
        assert!(matches!(export_dot(&doc, "nope"), Err(DotError::UnknownName(_))));
    }
}
