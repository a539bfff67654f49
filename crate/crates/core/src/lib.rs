//! Computational toolkit for the Hermitian generalised quadrangle H(3,q^2)
//! with its symplectic subquadrangle W(3,q).
//!
//! The crate builds the geometry over exact finite-field arithmetic, verifies
//! generalised-quadrangle and spread-level facts about external lines, builds
//! the 4-class association scheme on external lines with exact-rational
//! idempotents, and searches for relative m-covers.
//!
//! Module map:
//! - [`field`]: GF(q) and the tower GF(q^2)/GF(q)
//! - [`geometry`]: points, lines, W(3,q), external objects, the Baer involution, cache file
//! - [`incidence`]: quadrangle axioms, subtended spreads, antipodes, common-neighbour counts
//! - [`linalg`]: exact integer/rational matrices, rank, row-space membership
//! - [`scheme`]: relations, eigenmatrices, idempotents and their identities
//! - [`covers`]: relative m-covers, certificates, exhaustive search
//! - [`report`]: the statement catalogue and the verification pipeline

pub mod covers;
pub mod field;
pub mod geometry;
pub mod incidence;
pub mod linalg;
pub mod par;
pub mod report;
pub mod scheme;
pub mod verdict;

pub use covers::{CoverCandidate, SearchConfig, SearchMode, SearchOutcome};
pub use field::{field_create, Field, FieldElement, FieldTower};
pub use geometry::GeometryBundle;
pub use report::{RunReport, Statement};
pub use scheme::RelationScheme;
pub use verdict::Verdict;

/// Version string stamped into reports.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
