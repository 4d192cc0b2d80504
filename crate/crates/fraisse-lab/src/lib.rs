//! Finite approximations of Fraïssé limits for a catalog of
//! ultrahomogeneous structures, canonical independence relations with
//! executable axiom checkers, and the staged shift-automorphism
//! construction with repulsiveness, shiftiness, and cyclic-density checks.
//!
//! Everything is exhaustive or seeded-deterministic at desk scale: same
//! inputs, same seed, same bytes out.

pub mod cir;
pub mod cli;
pub mod dynamics;
pub mod fraisse;
pub mod structures;

pub use cir::{check_axiom, product_cir, Axiom, CheckBudget, CirPlugin};
pub use fraisse::{build_approximation, check_extension_property, ClassId, ClassPlugin};
pub use structures::{FinStructure, PartialMap, Signature};
