//! Fracture parameters from measured displacement grids.
//!
//! A displacement field on a regular lattice is meshed with bilinear quads,
//! the crack is inserted as a seam of duplicated nodes, and the measured
//! displacements drive a finite element solve outside the masked region.
//! Domain integrals over rings of elements around the tip give J and, through
//! the interaction integral, K_I and K_II. Out-of-plane data is routed through
//! a second in-plane problem to obtain K_III.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision used by the command line and the service.

// `!(x > 0.0)` is how NaN gets rejected along with the bad values; the FE
// kernels index several arrays with one counter.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod field_io;
pub mod fracture;
pub mod material;
pub mod mesh;
pub mod report;
pub mod scalar;
pub mod solver;
pub mod studies;
pub mod synthfield;

pub use analysis::{analyze, prepare, AnalysisOptions, FractureResult, PreparedAnalysis};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Field = field_io::DisplacementField<f64>;
pub type Crack = mesh::CrackDefinition<f64>;
pub type Mat = material::Material<f64>;
pub type Mesh = mesh::SeamMesh<f64>;
pub type Solution = solver::SolutionState<f64>;
pub type Series = fracture::ContourSeries<f64>;
pub type Analysis = analysis::FractureResult<f64>;
pub type Spec = synthfield::SyntheticSpec<f64>;

pub type FieldF32 = field_io::DisplacementField<f32>;
pub type CrackF32 = mesh::CrackDefinition<f32>;
pub type MatF32 = material::Material<f32>;
pub type AnalysisF32 = analysis::FractureResult<f32>;
