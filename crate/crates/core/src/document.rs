//! The `.skel` text format: named curves and morphisms in a line-oriented
//! grammar, with a canonical serialization that round-trips.
//!
//! Element names are per-curve strings. Internally each curve assigns ids
//! in sorted-name order, so two documents with the same declarations are
//! structurally equal no matter how they were produced.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::curve::{CurveClass, CurveComponent, CurveSkeleton};
use crate::graph::{DiscId, EdgeAttachment, EdgeId, TopoGraph, VertexId};
use crate::morphism::{ComponentIndex, SkeletalMorphism};

/// A parse or document-construction error with its position in the input.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, col {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// True when the text is well formed but a curve violates its class
    /// invariants; the CLI reports these as validation failures.
    pub semantic: bool,
}

impl ParseError {
    fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into(), semantic: false }
    }
}

/// A curve together with the element names of the document it came from.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NamedCurve {
    curve: CurveSkeleton,
    vertex_names: Vec<String>,
    edge_names: Vec<String>,
    disc_names: Vec<String>,
}

impl NamedCurve {
    pub fn curve(&self) -> &CurveSkeleton {
        &self.curve
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0 as usize]
    }

    pub fn edge_name(&self, e: EdgeId) -> &str {
        &self.edge_names[e.0 as usize]
    }

    pub fn disc_name(&self, d: DiscId) -> &str {
        &self.disc_names[d.0 as usize]
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.vertex_names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| VertexId(i as u32))
    }

    pub fn edge_id(&self, name: &str) -> Option<EdgeId> {
        self.edge_names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| EdgeId(i as u32))
    }

    pub fn disc_id(&self, name: &str) -> Option<DiscId> {
        self.disc_names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| DiscId(i as u32))
    }
}

/// A morphism between two named curves of the same document.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NamedMorphism {
    pub source_curve: String,
    pub target_curve: String,
    pub morphism: SkeletalMorphism,
}

/// All named curves and morphisms of one `.skel` file.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SkelDocument {
    pub curves: BTreeMap<String, NamedCurve>,
    pub morphisms: BTreeMap<String, NamedMorphism>,
}

// --- Raw declarations, shared by the parser and programmatic builders. ---

#[derive(Clone, Debug)]
enum RawAttachment {
    Closed(String, String),
    Half(String),
    Free,
}

#[derive(Clone, Debug)]
struct RawCurve {
    class: CurveClass,
    line: usize,
    vertices: Vec<(String, bool, usize)>,
    edges: Vec<(String, RawAttachment, usize)>,
    discs: Vec<(String, usize)>,
}

#[derive(Clone, Debug)]
struct RawMorphism {
    source: String,
    target: String,
    line: usize,
    degrees: Vec<(String, u32, usize)>,
    vmaps: Vec<(String, String, u32, usize)>,
    emaps: Vec<(String, String, u32, usize)>,
    dmaps: Vec<(String, String, u32, usize)>,
    rdiscs: Vec<(String, u32, usize)>,
}

fn build_curve(name: &str, raw: &RawCurve) -> Result<NamedCurve, ParseError> {
    let mut vertex_names: Vec<String> = raw.vertices.iter().map(|(n, _, _)| n.clone()).collect();
    vertex_names.sort();
    for (name, _, line) in &raw.vertices {
        if raw.vertices.iter().filter(|(n, _, _)| n == name).count() > 1 {
            return Err(ParseError::syntax(*line, 1, format!("duplicate vertex id `{name}`")));
        }
    }
    let mut edge_names: Vec<String> = raw.edges.iter().map(|(n, _, _)| n.clone()).collect();
    edge_names.sort();
    for (name, _, line) in &raw.edges {
        if raw.edges.iter().filter(|(n, _, _)| n == name).count() > 1 {
            return Err(ParseError::syntax(*line, 1, format!("duplicate edge id `{name}`")));
        }
    }
    let mut disc_names: Vec<String> = raw.discs.iter().map(|(n, _)| n.clone()).collect();
    disc_names.sort();
    for (name, line) in &raw.discs {
        if raw.discs.iter().filter(|(n, _)| n == name).count() > 1 {
            return Err(ParseError::syntax(*line, 1, format!("duplicate disc id `{name}`")));
        }
    }

    let vertex_id = |n: &str| {
        vertex_names
            .binary_search_by(|x| x.as_str().cmp(n))
            .ok()
            .map(|i| VertexId(i as u32))
    };

    let mut edges = Vec::new();
    for (ename, att, line) in &raw.edges {
        let id = EdgeId(edge_names.binary_search(ename).unwrap() as u32);
        let resolve = |n: &String| {
            vertex_id(n).ok_or_else(|| {
                ParseError::syntax(*line, 1, format!("edge `{ename}` references undeclared vertex `{n}`"))
            })
        };
        let att = match att {
            RawAttachment::Closed(u, v) => EdgeAttachment::Closed(resolve(u)?, resolve(v)?),
            RawAttachment::Half(u) => EdgeAttachment::HalfOpen(resolve(u)?),
            RawAttachment::Free => EdgeAttachment::Free,
        };
        edges.push((id, att));
    }

    let boundary: Vec<VertexId> = raw
        .vertices
        .iter()
        .filter(|(_, b, _)| *b)
        .map(|(n, _, _)| vertex_id(n).expect("declared vertex"))
        .collect();
    let graph = TopoGraph::new(
        (0..vertex_names.len() as u32).map(VertexId),
        edges,
    )
    .expect("resolved edges reference declared vertices");
    let curve = CurveSkeleton::new(
        graph,
        boundary,
        raw.class,
        (0..disc_names.len() as u32).map(DiscId),
    )
    .map_err(|e| ParseError {
        line: raw.line,
        col: 1,
        message: format!("curve `{name}`: {e}"),
        semantic: true,
    })?;
    Ok(NamedCurve { curve, vertex_names, edge_names, disc_names })
}

fn build_morphism(
    name: &str,
    raw: &RawMorphism,
    curves: &BTreeMap<String, NamedCurve>,
) -> Result<NamedMorphism, ParseError> {
    let source = curves.get(&raw.source).ok_or_else(|| {
        ParseError::syntax(raw.line, 1, format!("morphism `{name}`: unknown source curve `{}`", raw.source))
    })?;
    let target = curves.get(&raw.target).ok_or_else(|| {
        ParseError::syntax(raw.line, 1, format!("morphism `{name}`: unknown target curve `{}`", raw.target))
    })?;

    let mut vmap = BTreeMap::new();
    for (x, y, mult, line) in &raw.vmaps {
        let xv = source.vertex_id(x).ok_or_else(|| {
            ParseError::syntax(*line, 1, format!("undeclared source vertex `{x}`"))
        })?;
        let yv = target.vertex_id(y).ok_or_else(|| {
            ParseError::syntax(*line, 1, format!("undeclared target vertex `{y}`"))
        })?;
        if vmap.insert(xv, (yv, *mult)).is_some() {
            return Err(ParseError::syntax(*line, 1, format!("duplicate vmap for `{x}`")));
        }
    }
    let mut emap = BTreeMap::new();
    for (e, e2, deg, line) in &raw.emaps {
        let ee = source
            .edge_id(e)
            .ok_or_else(|| ParseError::syntax(*line, 1, format!("undeclared source edge `{e}`")))?;
        let ee2 = target
            .edge_id(e2)
            .ok_or_else(|| ParseError::syntax(*line, 1, format!("undeclared target edge `{e2}`")))?;
        if emap.insert(ee, (ee2, *deg)).is_some() {
            return Err(ParseError::syntax(*line, 1, format!("duplicate emap for `{e}`")));
        }
    }
    let mut dmap = BTreeMap::new();
    for (d, d2, deg, line) in &raw.dmaps {
        let dd = source
            .disc_id(d)
            .ok_or_else(|| ParseError::syntax(*line, 1, format!("undeclared source disc `{d}`")))?;
        let dd2 = target
            .disc_id(d2)
            .ok_or_else(|| ParseError::syntax(*line, 1, format!("undeclared target disc `{d2}`")))?;
        if dmap.insert(dd, (dd2, *deg)).is_some() {
            return Err(ParseError::syntax(*line, 1, format!("duplicate dmap for `{d}`")));
        }
    }
    let mut rdiscs = Vec::new();
    for (x, deg, line) in &raw.rdiscs {
        let xv = source.vertex_id(x).ok_or_else(|| {
            ParseError::syntax(*line, 1, format!("undeclared source vertex `{x}`"))
        })?;
        rdiscs.push((xv, *deg));
    }

    // Degrees are keyed by any element of the target component.
    let index = ComponentIndex::of(target.curve());
    let mut degree = vec![0u32; index.count];
    let mut seen = vec![false; index.count];
    for (elem, n, line) in &raw.degrees {
        let comp = target
            .vertex_id(elem)
            .and_then(|v| index.vertex.get(&v).copied())
            .or_else(|| target.edge_id(elem).and_then(|e| index.edge.get(&e).copied()))
            .or_else(|| target.disc_id(elem).and_then(|d| index.disc.get(&d).copied()))
            .ok_or_else(|| {
                ParseError::syntax(*line, 1, format!("degree key `{elem}` is not an element of the target"))
            })?;
        if seen[comp] {
            return Err(ParseError::syntax(
                *line,
                1,
                format!("duplicate degree for the target component of `{elem}`"),
            ));
        }
        seen[comp] = true;
        degree[comp] = *n;
    }

    let morphism = SkeletalMorphism::new(
        source.curve().clone(),
        target.curve().clone(),
        vmap,
        emap,
        dmap,
        rdiscs,
        degree,
    );
    Ok(NamedMorphism {
        source_curve: raw.source.clone(),
        target_curve: raw.target.clone(),
        morphism,
    })
}

// --- Parsing. ---

fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let text = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &text[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &text[s..]));
    }
    out
}

fn parse_count(tok: (usize, &str), line: usize, what: &str) -> Result<u32, ParseError> {
    tok.1
        .parse::<u32>()
        .map_err(|_| ParseError::syntax(line, tok.0, format!("{what} must be a nonnegative integer, got `{}`", tok.1)))
}

enum Block {
    Curve(String, RawCurve),
    Morphism(String, RawMorphism),
}

/// Parse a `.skel` document. `#` starts a comment; tokens are whitespace
/// separated; declarations must precede their uses.
pub fn parse(text: &str) -> Result<SkelDocument, ParseError> {
    let mut doc = SkelDocument::default();
    let mut block: Option<Block> = None;
    let mut last_line = 0;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        last_line = lineno;
        let tokens = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        let head = tokens[0];
        let arity = |n: usize, usage: &str| -> Result<(), ParseError> {
            if tokens.len() != n {
                Err(ParseError::syntax(lineno, head.0, format!("expected `{usage}`")))
            } else {
                Ok(())
            }
        };

        match &mut block {
            None => match head.1 {
                "curve" => {
                    arity(4, "curve <name> class <class>")?;
                    if tokens[2].1 != "class" {
                        return Err(ParseError::syntax(lineno, tokens[2].0, "expected `class`"));
                    }
                    let class = CurveClass::from_keyword(tokens[3].1).ok_or_else(|| {
                        ParseError::syntax(
                            lineno,
                            tokens[3].0,
                            format!("unknown class `{}` (projective|affinoid|wideopen|general)", tokens[3].1),
                        )
                    })?;
                    let name = tokens[1].1.to_string();
                    if doc.curves.contains_key(&name) {
                        return Err(ParseError::syntax(lineno, tokens[1].0, format!("duplicate curve `{name}`")));
                    }
                    block = Some(Block::Curve(
                        name,
                        RawCurve { class, line: lineno, vertices: vec![], edges: vec![], discs: vec![] },
                    ));
                }
                "morphism" => {
                    arity(6, "morphism <name> source <curve> target <curve>")?;
                    if tokens[2].1 != "source" || tokens[4].1 != "target" {
                        return Err(ParseError::syntax(lineno, tokens[2].0, "expected `source <curve> target <curve>`"));
                    }
                    let name = tokens[1].1.to_string();
                    if doc.morphisms.contains_key(&name) {
                        return Err(ParseError::syntax(lineno, tokens[1].0, format!("duplicate morphism `{name}`")));
                    }
                    block = Some(Block::Morphism(
                        name,
                        RawMorphism {
                            source: tokens[3].1.to_string(),
                            target: tokens[5].1.to_string(),
                            line: lineno,
                            degrees: vec![],
                            vmaps: vec![],
                            emaps: vec![],
                            dmaps: vec![],
                            rdiscs: vec![],
                        },
                    ));
                }
                other => {
                    return Err(ParseError::syntax(lineno, head.0, format!("expected `curve`, `morphism` or end of file, got `{other}`")));
                }
            },
            Some(Block::Curve(name, raw)) => match head.1 {
                "vertex" => {
                    if tokens.len() == 2 {
                        raw.vertices.push((tokens[1].1.to_string(), false, lineno));
                    } else if tokens.len() == 3 && tokens[2].1 == "boundary" {
                        raw.vertices.push((tokens[1].1.to_string(), true, lineno));
                    } else {
                        return Err(ParseError::syntax(lineno, head.0, "expected `vertex <id> [boundary]`"));
                    }
                }
                "edge" => {
                    if tokens.len() < 3 {
                        return Err(ParseError::syntax(lineno, head.0, "expected `edge <id> closed|half|free ...`"));
                    }
                    let att = match tokens[2].1 {
                        "closed" => {
                            arity(5, "edge <id> closed <u> <v>")?;
                            RawAttachment::Closed(tokens[3].1.to_string(), tokens[4].1.to_string())
                        }
                        "half" => {
                            arity(4, "edge <id> half <u>")?;
                            RawAttachment::Half(tokens[3].1.to_string())
                        }
                        "free" => {
                            arity(3, "edge <id> free")?;
                            RawAttachment::Free
                        }
                        other => {
                            return Err(ParseError::syntax(lineno, tokens[2].0, format!("unknown attachment `{other}`")));
                        }
                    };
                    raw.edges.push((tokens[1].1.to_string(), att, lineno));
                }
                "disc" => {
                    arity(2, "disc <id>")?;
                    raw.discs.push((tokens[1].1.to_string(), lineno));
                }
                "end" => {
                    arity(1, "end")?;
                    let built = build_curve(name, raw)?;
                    doc.curves.insert(name.clone(), built);
                    block = None;
                }
                other => {
                    return Err(ParseError::syntax(lineno, head.0, format!("unknown curve item `{other}`")));
                }
            },
            Some(Block::Morphism(name, raw)) => match head.1 {
                "degree" => {
                    arity(3, "degree <element> <n>")?;
                    let n = parse_count(tokens[2], lineno, "degree")?;
                    raw.degrees.push((tokens[1].1.to_string(), n, lineno));
                }
                "vmap" => {
                    arity(5, "vmap <x> <y> mult <m>")?;
                    if tokens[3].1 != "mult" {
                        return Err(ParseError::syntax(lineno, tokens[3].0, "expected `mult`"));
                    }
                    let m = parse_count(tokens[4], lineno, "multiplicity")?;
                    raw.vmaps.push((tokens[1].1.to_string(), tokens[2].1.to_string(), m, lineno));
                }
                "emap" => {
                    arity(5, "emap <e> <e'> deg <k>")?;
                    if tokens[3].1 != "deg" {
                        return Err(ParseError::syntax(lineno, tokens[3].0, "expected `deg`"));
                    }
                    let k = parse_count(tokens[4], lineno, "degree")?;
                    raw.emaps.push((tokens[1].1.to_string(), tokens[2].1.to_string(), k, lineno));
                }
                "dmap" => {
                    arity(5, "dmap <D> <D'> deg <k>")?;
                    if tokens[3].1 != "deg" {
                        return Err(ParseError::syntax(lineno, tokens[3].0, "expected `deg`"));
                    }
                    let k = parse_count(tokens[4], lineno, "degree")?;
                    raw.dmaps.push((tokens[1].1.to_string(), tokens[2].1.to_string(), k, lineno));
                }
                "rdisc" => {
                    arity(4, "rdisc <x> deg <k>")?;
                    if tokens[2].1 != "deg" {
                        return Err(ParseError::syntax(lineno, tokens[2].0, "expected `deg`"));
                    }
                    let k = parse_count(tokens[3], lineno, "degree")?;
                    raw.rdiscs.push((tokens[1].1.to_string(), k, lineno));
                }
                "end" => {
                    arity(1, "end")?;
                    let built = build_morphism(name, raw, &doc.curves)?;
                    doc.morphisms.insert(name.clone(), built);
                    block = None;
                }
                other => {
                    return Err(ParseError::syntax(lineno, head.0, format!("unknown morphism item `{other}`")));
                }
            },
        }
    }
    if let Some(open) = block {
        let (kind, name) = match &open {
            Block::Curve(n, _) => ("curve", n.clone()),
            Block::Morphism(n, _) => ("morphism", n.clone()),
        };
        return Err(ParseError::syntax(last_line, 1, format!("unterminated {kind} `{name}` (missing `end`)")));
    }
    Ok(doc)
}

// --- Serialization. ---

/// The canonical key of a target component: its least-named element.
fn component_key<'a>(curve: &'a NamedCurve, comp: &CurveComponent) -> &'a str {
    match comp {
        CurveComponent::Graph(g) => {
            if let Some(&v) = g.vertices.iter().next() {
                curve.vertex_name(v)
            } else {
                let &e = g.edges.iter().next().expect("component has an element");
                curve.edge_name(e)
            }
        }
        CurveComponent::Disc(d) => curve.disc_name(*d),
    }
}

/// Canonical text form: blocks and declarations sorted by token order.
/// `parse(serialize(doc)) == doc`.
pub fn serialize(doc: &SkelDocument) -> String {
    let mut blocks: Vec<String> = Vec::new();
    for (name, nc) in &doc.curves {
        let mut out = String::new();
        out.push_str(&format!("curve {name} class {}\n", nc.curve.class().keyword()));
        for (i, vname) in nc.vertex_names.iter().enumerate() {
            let v = VertexId(i as u32);
            if nc.curve.boundary().contains(&v) {
                out.push_str(&format!("  vertex {vname} boundary\n"));
            } else {
                out.push_str(&format!("  vertex {vname}\n"));
            }
        }
        for (i, ename) in nc.edge_names.iter().enumerate() {
            let att = nc.curve.graph().edges()[&EdgeId(i as u32)];
            match att {
                EdgeAttachment::Closed(u, v) => {
                    out.push_str(&format!(
                        "  edge {ename} closed {} {}\n",
                        nc.vertex_name(u),
                        nc.vertex_name(v)
                    ));
                }
                EdgeAttachment::HalfOpen(u) => {
                    out.push_str(&format!("  edge {ename} half {}\n", nc.vertex_name(u)));
                }
                EdgeAttachment::Free => out.push_str(&format!("  edge {ename} free\n")),
            }
        }
        for dname in &nc.disc_names {
            out.push_str(&format!("  disc {dname}\n"));
        }
        out.push_str("end\n");
        blocks.push(out);
    }
    for (name, nm) in &doc.morphisms {
        let source = &doc.curves[&nm.source_curve];
        let target = &doc.curves[&nm.target_curve];
        let m = &nm.morphism;
        let mut out = String::new();
        out.push_str(&format!(
            "morphism {name} source {} target {}\n",
            nm.source_curve, nm.target_curve
        ));
        for (i, comp) in target.curve().components().iter().enumerate() {
            let key = component_key(target, comp);
            let n = m.degrees().get(i).copied().unwrap_or(0);
            out.push_str(&format!("  degree {key} {n}\n"));
        }
        for (&x, &(y, mult)) in m.vmap() {
            out.push_str(&format!(
                "  vmap {} {} mult {mult}\n",
                source.vertex_name(x),
                target.vertex_name(y)
            ));
        }
        for (&e, &(e2, deg)) in m.emap() {
            out.push_str(&format!(
                "  emap {} {} deg {deg}\n",
                source.edge_name(e),
                target.edge_name(e2)
            ));
        }
        for (&d, &(d2, deg)) in m.dmap() {
            out.push_str(&format!(
                "  dmap {} {} deg {deg}\n",
                source.disc_name(d),
                target.disc_name(d2)
            ));
        }
        for &(x, deg) in m.ramified_discs() {
            out.push_str(&format!("  rdisc {} deg {deg}\n", source.vertex_name(x)));
        }
        out.push_str("end\n");
        blocks.push(out);
    }
    blocks.join("\n")
}

/// Wrap a standalone morphism into a document with generated names, by
/// way of the same canonicalizing build path the parser uses.
pub fn doc_from_morphism(
    morphism_name: &str,
    source_name: &str,
    target_name: &str,
    m: &SkeletalMorphism,
) -> SkelDocument {
    fn raw_curve(c: &CurveSkeleton) -> RawCurve {
        RawCurve {
            class: c.class(),
            line: 0,
            vertices: c
                .graph()
                .vertices()
                .iter()
                .map(|&v| (format!("v{}", v.0), c.boundary().contains(&v), 0))
                .collect(),
            edges: c
                .graph()
                .edges()
                .iter()
                .map(|(&e, &att)| {
                    let raw = match att {
                        EdgeAttachment::Closed(u, v) => {
                            RawAttachment::Closed(format!("v{}", u.0), format!("v{}", v.0))
                        }
                        EdgeAttachment::HalfOpen(u) => RawAttachment::Half(format!("v{}", u.0)),
                        EdgeAttachment::Free => RawAttachment::Free,
                    };
                    (format!("e{}", e.0), raw, 0)
                })
                .collect(),
            discs: c.discs().iter().map(|&d| (format!("D{}", d.0), 0)).collect(),
        }
    }

    let mut curves = BTreeMap::new();
    curves.insert(
        source_name.to_string(),
        build_curve(source_name, &raw_curve(m.source())).expect("generated source curve"),
    );
    curves.insert(
        target_name.to_string(),
        build_curve(target_name, &raw_curve(m.target())).expect("generated target curve"),
    );

    let target_components = m.target().components();
    let degrees: Vec<(String, u32, usize)> = target_components
        .iter()
        .enumerate()
        .map(|(i, comp)| {
            let key = match comp {
                CurveComponent::Graph(g) => {
                    if let Some(&v) = g.vertices.iter().next() {
                        format!("v{}", v.0)
                    } else {
                        format!("e{}", g.edges.iter().next().expect("element").0)
                    }
                }
                CurveComponent::Disc(d) => format!("D{}", d.0),
            };
            (key, m.degrees().get(i).copied().unwrap_or(0), 0)
        })
        .collect();

    let raw = RawMorphism {
        source: source_name.to_string(),
        target: target_name.to_string(),
        line: 0,
        degrees,
        vmaps: m
            .vmap()
            .iter()
            .map(|(&x, &(y, mu))| (format!("v{}", x.0), format!("v{}", y.0), mu, 0))
            .collect(),
        emaps: m
            .emap()
            .iter()
            .map(|(&e, &(e2, d))| (format!("e{}", e.0), format!("e{}", e2.0), d, 0))
            .collect(),
        dmaps: m
            .dmap()
            .iter()
            .map(|(&d, &(d2, k))| (format!("D{}", d.0), format!("D{}", d2.0), k, 0))
            .collect(),
        rdiscs: m
            .ramified_discs()
            .iter()
            .map(|&(x, k)| (format!("v{}", x.0), k, 0))
            .collect(),
    };
    let morphism = build_morphism(morphism_name, &raw, &curves).expect("generated morphism");
    let mut morphisms = BTreeMap::new();
    morphisms.insert(morphism_name.to_string(), morphism);
    SkelDocument { curves, morphisms }
}

impl fmt::Display for SkelDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize(self))
    }
}

/// Rewrite a violation in terms of the document's element names.
pub fn describe_violation(
    v: &crate::morphism::Violation,
    source: &NamedCurve,
    target: &NamedCurve,
) -> String {
    use crate::morphism::Violation::*;
    let sv = |x: VertexId| {
        source.vertex_names.get(x.0 as usize).cloned().unwrap_or_else(|| x.to_string())
    };
    let se = |e: EdgeId| {
        source.edge_names.get(e.0 as usize).cloned().unwrap_or_else(|| e.to_string())
    };
    let sd = |d: DiscId| {
        source.disc_names.get(d.0 as usize).cloned().unwrap_or_else(|| d.to_string())
    };
    let tv = |x: VertexId| {
        target.vertex_names.get(x.0 as usize).cloned().unwrap_or_else(|| x.to_string())
    };
    let te = |e: EdgeId| {
        target.edge_names.get(e.0 as usize).cloned().unwrap_or_else(|| e.to_string())
    };
    let td = |d: DiscId| {
        target.disc_names.get(d.0 as usize).cloned().unwrap_or_else(|| d.to_string())
    };
    match v {
        MissingVertexImage(x) => format!("vertex map is missing source vertex {}", sv(*x)),
        UnknownSourceVertex(x) => format!("vertex map mentions unknown source vertex {}", sv(*x)),
        UnknownTargetVertex { vertex, image } => {
            format!("vertex {} maps to unknown target vertex {}", sv(*vertex), tv(*image))
        }
        ZeroMultiplicity(x) => format!("multiplicity at {} must be >= 1", sv(*x)),
        MissingEdgeImage(e) => format!("edge map is missing source edge {}", se(*e)),
        UnknownSourceEdge(e) => format!("edge map mentions unknown source edge {}", se(*e)),
        UnknownTargetEdge { edge, image } => {
            format!("edge {} maps to unknown target edge {}", se(*edge), te(*image))
        }
        ZeroEdgeDegree(e) => format!("degree on edge {} must be >= 1", se(*e)),
        MissingDiscImage(d) => format!("disc map is missing disc component {}", sd(*d)),
        UnknownSourceDisc(d) => format!("disc map mentions unknown disc {}", sd(*d)),
        UnknownTargetDisc { disc, image } => {
            format!("disc {} maps to unknown target disc {}", sd(*disc), td(*image))
        }
        ZeroDiscDegree(d) => format!("degree on disc {} must be >= 1", sd(*d)),
        EndpointCommutation { edge } => format!("endpoint commutation fails at edge {}", se(*edge)),
        RamifiedDiscVertex(x) => format!("ramified disc attached at unknown vertex {}", sv(*x)),
        RamifiedDiscDegree { vertex, degree } => format!(
            "ramified disc at {} has degree {degree}, needs 2 <= degree <= multiplicity",
            sv(*vertex)
        ),
        VertexFiberBalance { target, expected, got } => format!(
            "vertex fiber balancing at {}: expected {expected}, got {got}",
            tv(*target)
        ),
        EdgeFiberBalance { target, expected, got } => {
            format!("edge fiber balancing at {}: expected {expected}, got {got}", te(*target))
        }
        DiscFiberBalance { target, expected, got } => {
            format!("disc fiber balancing at {}: expected {expected}, got {got}", td(*target))
        }
        LocalBalance { vertex, target_edge, expected, got } => format!(
            "local balancing at {} over {}: expected {expected}, got {got}",
            sv(*vertex),
            te(*target_edge)
        ),
        LoopOrientation { target_edge } => {
            format!("no consistent orientation of the lifts of loop {}", te(*target_edge))
        }
        BoundaryMismatch { vertex } => {
            format!("boundary membership of {} disagrees with its image", sv(*vertex))
        }
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{gen_chain, gen_kummer, KummerShape};

    const KUMMER_ANNULUS: &str = "\
# closed-annulus Kummer cover of degree 2
curve W class affinoid
  vertex a boundary
  vertex b boundary
  edge s closed a b
end

curve V class affinoid
  vertex a boundary
  vertex b boundary
  edge s closed a b
end

morphism f source W target V
  degree a 2
  vmap a a mult 2
  vmap b b mult 2
  emap s s deg 2
end
";

    #[test]
    fn parses_kummer_document() {
        let doc = parse(KUMMER_ANNULUS).unwrap();
        let m = &doc.morphisms["f"].morphism;
        assert!(m.validate().is_ok());
        assert_eq!(m, &gen_kummer(KummerShape::ClosedAnnulus, 2));
    }

    #[test]
    fn empty_document() {
        let doc = parse("").unwrap();
        assert!(doc.curves.is_empty() && doc.morphisms.is_empty());
        assert_eq!(serialize(&doc), "");
        assert_eq!(parse(&serialize(&doc)).unwrap(), doc);
    }

    #[test]
    fn arity_error_is_reported_with_position() {
        let text = "curve W class affinoid\n  vertex a\n  edge e closed a\nend\n";
        let err = parse(text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(!err.semantic);
    }

    #[test]
    fn semantic_error_is_flagged() {
        let text = "curve W class projective\n  vertex a boundary\nend\n";
        let err = parse(text).unwrap_err();
        assert!(err.semantic);
    }

    #[test]
    fn undeclared_references_fail() {
        let text = "curve W class general\n  vertex a\nend\nmorphism f source W target X\nend\n";
        assert!(parse(text).is_err());

        let text = "curve W class general\n  vertex a\nend\n\
                    morphism f source W target W\n  vmap a b mult 1\nend\n";
        let err = parse(text).unwrap_err();
        assert!(err.message.contains("undeclared target vertex"));
    }

    #[test]
    fn round_trip_on_generators() {
        for m in [
            gen_kummer(KummerShape::ClosedAnnulus, 2),
            gen_kummer(KummerShape::OpenDisc, 3),
            gen_chain(3),
        ] {
            let doc = doc_from_morphism("f", "W", "V", &m);
            let text = serialize(&doc);
            let back = parse(&text).unwrap();
            assert_eq!(back, doc);
            assert_eq!(serialize(&back), text);
            assert_eq!(
                back.morphisms["f"].morphism.validate().is_ok(),
                m.validate().is_ok()
            );
        }
    }

    #[test]
    fn missing_degree_surfaces_in_validation() {
        let text = "curve W class general\n  vertex a\nend\n\
                    morphism f source W target W\n  vmap a a mult 1\nend\n";
        let doc = parse(text).unwrap();
        assert!(!doc.morphisms["f"].morphism.validate().is_ok());
    }
}
