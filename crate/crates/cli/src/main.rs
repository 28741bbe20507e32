//! Command line front end: parse `.skel` files, validate and analyze the
//! morphisms they declare, generate canonical instances and sweep the
//! small-instance space.
//!
//! Exit codes: 0 success, 1 validation failure, 2 bound violation,
//! 3 parse error.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use skelram::curve::CurveClass;
use skelram::decomposition::{boundary_data, check_recursion, decompose};
use skelram::document::{
    describe_violation, doc_from_morphism, parse, serialize, NamedCurve, NamedMorphism,
    SkelDocument,
};
use skelram::dot::export_dot;
use skelram::generator::{
    gen_banana, gen_chain, gen_kummer, gen_projective_line, gen_random, map_instances_parallel,
    EnumLimits, KummerShape, RandomParams,
};
use skelram::morphism::SkeletalMorphism;
use skelram::ramification::{
    bound_projective, bound_projective_coarse, bound_totally_ramified, check_all, check_remark,
    default_choice, simulate, BoundReport, RamificationReport,
};
use skelram::VertexId;

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_BOUND: u8 = 2;
const EXIT_PARSE: u8 = 3;

#[derive(Parser)]
#[command(name = "skelram", version, about = "Skeletal curves, morphisms and ramification bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every morphism of a file against the balancing constraints.
    Validate { file: String },
    /// Print the topological invariants of every curve in a file.
    Invariants { file: String },
    /// Print the ramification components of a morphism.
    Simulate { file: String, morphism: String },
    /// Evaluate every applicable bound for a morphism.
    Bounds {
        file: String,
        morphism: String,
        /// Choice of target vertex per component for the projective bound,
        /// as <component-element>=<vertex>.
        #[arg(long = "v-c", value_name = "ELEM=VERTEX")]
        v_c: Vec<String>,
    },
    /// Split a morphism along its boundary annuli and check the recursion
    /// inequality.
    Decompose { file: String, morphism: String },
    /// Emit a canonical instance as a `.skel` document.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Enumerate all small instances, check every bound, print a summary.
    Enumerate(EnumerateArgs),
    /// Render a curve or morphism as DOT.
    #[command(name = "export-dot")]
    ExportDot {
        file: String,
        name: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Truncated chain of glued degree-2 annulus covers.
    Chain {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        n: u32,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Kummer cover of a disc or annulus.
    Kummer {
        #[arg(long)]
        shape: String,
        #[arg(short, long, value_parser = clap::value_parser!(u32).range(2..))]
        d: u32,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Degree-d self-cover of the projective line model.
    Pline {
        #[arg(short, long, value_parser = clap::value_parser!(u32).range(1..))]
        d: u32,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Totally ramified cover of a segment by the banana graph B(k).
    Banana {
        #[arg(short, long, value_parser = clap::value_parser!(u32).range(2..))]
        k: u32,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Seeded random valid morphism.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_vertices: usize,
        #[arg(long, default_value_t = 4)]
        max_edges: usize,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        max_degree: u32,
        #[arg(long, default_value = "general")]
        class: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    max_vertices: usize,
    #[arg(long)]
    max_edges: usize,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    max_degree: u32,
    /// Comma-separated classes (projective,affinoid,wideopen,general).
    #[arg(long, default_value = "projective,affinoid,wideopen,general")]
    classes: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}

fn read_input(file: &str) -> Result<String, String> {
    if file == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("stdin: {e}"))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(file).map_err(|e| format!("{file}: {e}"))
    }
}

fn load(file: &str) -> Result<SkelDocument, u8> {
    let text = match read_input(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(EXIT_PARSE);
        }
    };
    match parse(&text) {
        Ok(doc) => Ok(doc),
        Err(e) => {
            eprintln!("error: {e}");
            Err(if e.semantic { EXIT_INVALID } else { EXIT_PARSE })
        }
    }
}

fn find_morphism<'d>(doc: &'d SkelDocument, name: &str) -> Result<&'d NamedMorphism, u8> {
    doc.morphisms.get(name).ok_or_else(|| {
        eprintln!("error: no morphism named `{name}` in the document");
        EXIT_PARSE
    })
}

/// Validate and print violations; Ok only when clean.
fn require_valid(doc: &SkelDocument, name: &str, nm: &NamedMorphism) -> Result<(), u8> {
    let report = nm.morphism.validate();
    if report.is_ok() {
        return Ok(());
    }
    let source = &doc.curves[&nm.source_curve];
    let target = &doc.curves[&nm.target_curve];
    println!("morphism {name}: {} violation(s)", report.violations().len());
    for v in report.violations() {
        println!("  {}", describe_violation(v, source, target));
    }
    Err(EXIT_INVALID)
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Validate { file } => cmd_validate(&file),
        Command::Invariants { file } => cmd_invariants(&file),
        Command::Simulate { file, morphism } => cmd_simulate(&file, &morphism),
        Command::Bounds { file, morphism, v_c } => cmd_bounds(&file, &morphism, &v_c),
        Command::Decompose { file, morphism } => cmd_decompose(&file, &morphism),
        Command::Generate { kind } => cmd_generate(kind),
        Command::Enumerate(args) => cmd_enumerate(&args),
        Command::ExportDot { file, name, out } => cmd_export_dot(&file, &name, out.as_deref()),
    }
}

fn cmd_validate(file: &str) -> u8 {
    let doc = match load(file) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let mut bad = false;
    for (name, nm) in &doc.morphisms {
        if require_valid(&doc, name, nm).is_err() {
            bad = true;
        } else {
            println!("morphism {name}: ok");
        }
    }
    if doc.morphisms.is_empty() {
        println!("no morphisms declared; {} curve(s) parsed", doc.curves.len());
    }
    if bad {
        EXIT_INVALID
    } else {
        EXIT_OK
    }
}

fn cmd_invariants(file: &str) -> u8 {
    let doc = match load(file) {
        Ok(d) => d,
        Err(code) => return code,
    };
    for (name, nc) in &doc.curves {
        let c = nc.curve();
        println!(
            "curve {name}: pi0={} g_t={} e0={} boundary={} chi_bm={}",
            c.component_count(),
            c.topological_genus(),
            c.open_end_count(),
            c.boundary().len(),
            c.bm_characteristic()
        );
    }
    EXIT_OK
}

fn print_report(report: &RamificationReport, source: &NamedCurve) {
    println!("r_f = {}", report.r_f);
    println!("r'_f = {}", report.r_prime);
    for (i, comp) in report.components.iter().enumerate() {
        let verts: Vec<&str> = comp.vertices.iter().map(|&v| source.vertex_name(v)).collect();
        let edges: Vec<&str> = comp.edges.iter().map(|&e| source.edge_name(e)).collect();
        let discs: Vec<&str> = comp.discs.iter().map(|&d| source.disc_name(d)).collect();
        println!(
            "component {}: vertices {{{}}} edges {{{}}} discs {{{}}} {}",
            i + 1,
            verts.join(", "),
            edges.join(", "),
            discs.join(", "),
            if comp.rel_compact { "relatively compact" } else { "not relatively compact" }
        );
    }
}

fn cmd_simulate(file: &str, morphism: &str) -> u8 {
    let doc = match load(file) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let nm = match find_morphism(&doc, morphism) {
        Ok(nm) => nm,
        Err(code) => return code,
    };
    if let Err(code) = require_valid(&doc, morphism, nm) {
        return code;
    }
    let report = simulate(&nm.morphism).expect("validated morphism");
    print_report(&report, &doc.curves[&nm.source_curve]);
    EXIT_OK
}

fn print_bound(b: &BoundReport) {
    if b.applicable {
        println!(
            "{}: observed {} <= value {}: {}",
            b.name,
            b.observed,
            b.value,
            if b.holds { "holds" } else { "VIOLATED" }
        );
    } else {
        println!("{}: inapplicable", b.name);
    }
}

fn cmd_bounds(file: &str, morphism: &str, v_c: &[String]) -> u8 {
    let doc = match load(file) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let nm = match find_morphism(&doc, morphism) {
        Ok(nm) => nm,
        Err(code) => return code,
    };
    if let Err(code) = require_valid(&doc, morphism, nm) {
        return code;
    }
    let m = &nm.morphism;
    let target = &doc.curves[&nm.target_curve];

    let reports = if m.source().class() == CurveClass::Projective {
        let mut choice = default_choice(m);
        for spec in v_c {
            match parse_choice(spec, target, m) {
                Ok((comp, v)) => {
                    choice.insert(comp, v);
                }
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return EXIT_PARSE;
                }
            }
        }
        let mut out = vec![check_remark(m).expect("valid morphism")];
        match bound_projective(m, &choice) {
            Ok(b) => out.push(b),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_PARSE;
            }
        }
        out.push(bound_projective_coarse(m).expect("valid projective morphism"));
        out.push(bound_totally_ramified(m).expect("valid projective morphism"));
        out
    } else {
        if !v_c.is_empty() {
            eprintln!("error: --v-c only applies to projective sources");
            return EXIT_PARSE;
        }
        check_all(m).expect("validated morphism")
    };

    let mut violated = false;
    for b in &reports {
        print_bound(b);
        if b.applicable && !b.holds {
            violated = true;
        }
    }
    if violated {
        EXIT_BOUND
    } else {
        EXIT_OK
    }
}

/// Parse `elem=vertex` into (target component index, chosen vertex).
fn parse_choice(
    spec: &str,
    target: &NamedCurve,
    m: &SkeletalMorphism,
) -> Result<(usize, VertexId), String> {
    let (elem, vert) = spec
        .split_once('=')
        .ok_or_else(|| format!("--v-c takes <element>=<vertex>, got `{spec}`"))?;
    let v = target
        .vertex_id(vert)
        .ok_or_else(|| format!("unknown target vertex `{vert}`"))?;
    let comps = m.target().components();
    let comp = comps
        .iter()
        .position(|c| {
            target.vertex_id(elem).is_some_and(|x| c.contains_vertex(x))
                || target.edge_id(elem).is_some_and(|e| c.contains_edge(e))
                || target.disc_id(elem).is_some_and(|d| c.contains_disc(d))
        })
        .ok_or_else(|| format!("`{elem}` is not an element of the target"))?;
    Ok((comp, v))
}

fn cmd_decompose(file: &str, morphism: &str) -> u8 {
    let doc = match load(file) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let nm = match find_morphism(&doc, morphism) {
        Ok(nm) => nm,
        Err(code) => return code,
    };
    if let Err(code) = require_valid(&doc, morphism, nm) {
        return code;
    }
    let m = &nm.morphism;
    let source = &doc.curves[&nm.source_curve];
    let bd = match boundary_data(m) {
        Ok(bd) => bd,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    let names = |s: &BTreeSet<VertexId>| {
        let v: Vec<&str> = s.iter().map(|&x| source.vertex_name(x)).collect();
        v.join(", ")
    };
    println!("S1' = {{{}}}", names(&bd.s1_prime));
    println!("S1 = {{{}}}", names(&bd.s1));
    println!("S1'' = {{{}}}", names(&bd.s1_dprime));

    let pieces = decompose(m).expect("boundary data already computed");
    for (i, piece) in pieces.iter().enumerate() {
        let report = simulate(piece).expect("piece validates");
        println!(
            "piece {}: source v={} e={} ends={}, target v={} e={}, degree {}, r' = {}",
            i + 1,
            piece.source().graph().vertex_count(),
            piece.source().graph().edge_count(),
            piece.source().open_end_count(),
            piece.target().graph().vertex_count(),
            piece.target().graph().edge_count(),
            piece.degrees().first().copied().unwrap_or(0),
            report.r_prime
        );
    }
    let (lhs, rhs) = check_recursion(m).expect("decomposition succeeded");
    println!("recursion: r' = {lhs} <= {rhs}: {}", if lhs <= rhs { "holds" } else { "VIOLATED" });
    if lhs <= rhs {
        EXIT_OK
    } else {
        EXIT_BOUND
    }
}

fn write_output(out: Option<&std::path::Path>, text: &str) -> u8 {
    match out {
        None => {
            print!("{text}");
            EXIT_OK
        }
        Some(path) => match std::fs::write(path, text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                EXIT_PARSE
            }
        },
    }
}

fn cmd_generate(kind: GenerateKind) -> u8 {
    let (m, out) = match kind {
        GenerateKind::Chain { n, out } => (gen_chain(n), out),
        GenerateKind::Kummer { shape, d, out } => {
            let Some(shape) = KummerShape::from_keyword(&shape) else {
                eprintln!(
                    "error: unknown shape `{shape}` (open-annulus|closed-annulus|closed-disc|open-disc)"
                );
                return EXIT_PARSE;
            };
            (gen_kummer(shape, d), out)
        }
        GenerateKind::Pline { d, out } => (gen_projective_line(d), out),
        GenerateKind::Banana { k, out } => (gen_banana(k), out),
        GenerateKind::Random { seed, max_vertices, max_edges, max_degree, class, out } => {
            let Some(class) = CurveClass::from_keyword(&class) else {
                eprintln!("error: unknown class `{class}`");
                return EXIT_PARSE;
            };
            let params =
                RandomParams { max_vertices, max_edges, max_degree, class, max_attempts: 256 };
            match gen_random(seed, &params) {
                Ok(m) => (m, out),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_PARSE;
                }
            }
        }
    };
    let doc = doc_from_morphism("f", "W", "V", &m);
    write_output(out.as_deref(), &serialize(&doc))
}

fn cmd_enumerate(args: &EnumerateArgs) -> u8 {
    let mut classes = BTreeSet::new();
    for part in args.classes.split(',').filter(|s| !s.is_empty()) {
        match CurveClass::from_keyword(part.trim()) {
            Some(c) => {
                classes.insert(c);
            }
            None => {
                eprintln!("error: unknown class `{part}`");
                return EXIT_PARSE;
            }
        }
    }
    let limits = EnumLimits {
        max_target_vertices: args.max_vertices,
        max_target_edges: args.max_edges,
        max_degree: args.max_degree,
        classes,
    };

    // Per instance: maximum component degree, r_f, bound violations.
    let rows = map_instances_parallel(&limits, args.workers, |m| {
        let degree = m.degrees().iter().copied().max().unwrap_or(0);
        let report = simulate(m).expect("enumerated instance validates");
        let violations = check_all(m)
            .expect("enumerated instance validates")
            .iter()
            .filter(|b| !b.holds)
            .count();
        (degree, report.r_f, violations)
    });

    let mut per_degree: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    let mut violations = 0usize;
    for &(degree, r_f, v) in &rows {
        let entry = per_degree.entry(degree).or_insert((0, 0));
        entry.0 += 1;
        entry.1 = entry.1.max(r_f);
        violations += v;
    }
    println!("instances = {}", rows.len());
    println!("violations = {violations}");
    for (degree, (count, max_r)) in &per_degree {
        println!("degree {degree}: instances = {count}, max r_f = {max_r}");
    }
    if violations > 0 {
        EXIT_BOUND
    } else {
        EXIT_OK
    }
}

fn cmd_export_dot(file: &str, name: &str, out: Option<&std::path::Path>) -> u8 {
    let doc = match load(file) {
        Ok(d) => d,
        Err(code) => return code,
    };
    match export_dot(&doc, name) {
        Ok(text) => write_output(out, &text),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_PARSE
        }
    }
}
