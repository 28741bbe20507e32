//! Skeletal models of finite Berkovich curves and of finite morphisms
//! between them, as balanced degree-decorated graph morphisms.
//!
//! The crate provides:
//!
//! * finite topological graphs with genus, open ends and Borel–Moore
//!   localization ([`graph`]);
//! * curve skeletons with boundary markings, classes and open-disc
//!   components ([`curve`]);
//! * skeletal morphisms and their validation ([`morphism`]);
//! * the ramification locus simulation and the component-count bounds
//!   ([`ramification`]);
//! * the boundary-annulus decomposition and its recursion inequality
//!   ([`decomposition`]);
//! * canonical generators, a seeded random generator and the exhaustive
//!   small-instance enumerator ([`generator`]);
//! * the `.skel` text format and DOT export ([`document`], [`dot`]).

pub mod curve;
pub mod decomposition;
pub mod document;
pub mod dot;
pub mod generator;
pub mod graph;
pub mod morphism;
pub mod ramification;

pub use curve::{CurveClass, CurveError, CurveSkeleton};
pub use graph::{DiscId, EdgeAttachment, EdgeId, GraphError, TopoGraph, VertexId};
pub use morphism::{EndClass, MorphismError, SkeletalMorphism, ValidationReport, Violation};
pub use ramification::{BoundReport, RamificationReport};
