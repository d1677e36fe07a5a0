//! Contour integrals, mode decomposition and convergence plateaus.

pub mod auxiliary;
pub mod domains;
pub mod integrals;
pub mod plateau;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field_io::DisplacementField;
use crate::material::{ElasticModel, Material, PlaneState};
use crate::mesh::{CrackFrame, SeamMesh};
use crate::scalar::Scalar;
use crate::solver::{solve_elastic, SolutionState, SolverError};

pub use domains::{contour_domains, ContourDomain, ContourDomains};
pub use integrals::{compute_interaction_k, compute_j_edi, evaluate_integrals, ContourIntegrals};
pub use plateau::{detect_plateau, PlateauOptions, PlateauStats, Stat};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FractureError {
    #[error("mesh has no crack tip")]
    NoCrackTip,
    #[error("contour rings reach the grid boundary ({available} contours available)")]
    ContourHitsBoundary { available: usize },
    #[error("every integration domain lies inside the masked region")]
    ContourHitsMaskOnly,
    #[error("the interaction integral needs an elastic solution")]
    ElastoplasticSolution,
    #[error("field has no out-of-plane displacement")]
    NoOutOfPlaneData,
    #[error("stress intensity factors are not available for general anisotropic materials")]
    KUnavailable,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no contour window satisfies the plateau tolerance (best spread {:.3})", best.spread)]
    NoPlateau { best: Box<PlateauStats> },
    #[error("{0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl FractureError {
    pub fn kind(&self) -> &'static str {
        match self {
            FractureError::NoCrackTip => "NoCrackTip",
            FractureError::ContourHitsBoundary { .. } => "ContourHitsBoundary",
            FractureError::ContourHitsMaskOnly => "ContourHitsMaskOnly",
            FractureError::ElastoplasticSolution => "ElastoplasticSolution",
            FractureError::NoOutOfPlaneData => "NoOutOfPlaneData",
            FractureError::KUnavailable => "KUnavailable",
            FractureError::LengthMismatch(..) => "LengthMismatch",
            FractureError::NoPlateau { .. } => "NoPlateau",
            FractureError::InvalidOptions(_) => "InvalidOptions",
            FractureError::Solver(e) => e.kind(),
        }
    }
}

/// One contour of the result series. SI units; K in Pa m^0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourRow<T> {
    pub contour: usize,
    pub radius: T,
    /// In-plane J from the domain integral.
    pub j: T,
    pub k_i: Option<T>,
    pub k_ii: Option<T>,
    pub k_ii_pseudo: Option<T>,
    pub k_iii: Option<T>,
    pub j_iii: Option<T>,
    pub j_total: Option<T>,
    pub masked_only: bool,
}

impl<T: Scalar> ContourRow<T> {
    pub fn new(contour: usize, radius: T) -> Self {
        ContourRow {
            contour,
            radius,
            j: T::zero(),
            k_i: None,
            k_ii: None,
            k_ii_pseudo: None,
            k_iii: None,
            j_iii: None,
            j_total: None,
            masked_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSeries<T> {
    pub rows: Vec<ContourRow<T>>,
}

impl<T: Scalar> ContourSeries<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn j(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.j).collect()
    }
}

/// Anti-plane results of one contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntiPlaneRow<T> {
    pub k_ii_pseudo: T,
    pub k_iii: T,
    pub j_iii: T,
}

/// The q-independent half of the anti-plane analysis: the in-plane problem
/// driven by `(Ux, Uy) = (Uz, 0)`, solved in plane stress.
#[derive(Debug, Clone)]
pub struct AntiPlaneSolution<T> {
    pub mesh: SeamMesh<T>,
    pub solution: SolutionState<T>,
}

pub fn solve_anti_plane<T: Scalar>(
    field: &DisplacementField<T>,
    mesh: &SeamMesh<T>,
    material: &Material<T>,
) -> Result<AntiPlaneSolution<T>, FractureError> {
    if !field.has_out_of_plane {
        return Err(FractureError::NoOutOfPlaneData);
    }
    if material.model == ElasticModel::Anisotropic {
        return Err(FractureError::KUnavailable);
    }
    let bc = mesh
        .bc_values
        .iter()
        .map(|v| [v[2], T::zero(), T::zero()])
        .collect();
    let pseudo = mesh.with_bc_values(bc);
    let elastic = Material {
        ramberg_osgood: None,
        ..material.with_plane_state(PlaneState::PlaneStress)
    };
    let solution = solve_elastic(&pseudo, &elastic)?;
    Ok(AntiPlaneSolution {
        mesh: pseudo,
        solution,
    })
}

/// Converts the sliding-mode intensity of the pseudo problem to K_III with `2G/E`.
pub fn anti_plane_rows<T: Scalar>(
    pseudo: &AntiPlaneSolution<T>,
    material: &Material<T>,
    frame: &CrackFrame<T>,
    domains: &ContourDomains<T>,
) -> Result<Vec<AntiPlaneRow<T>>, FractureError> {
    let eff = material.effective();
    let aux = eff.with_plane_state(PlaneState::PlaneStress);
    let k = compute_interaction_k(&pseudo.solution, &pseudo.mesh, frame, domains, &aux)?;
    let factor = T::lit(2.0) * eff.g / eff.e;
    Ok(k.into_iter()
        .map(|[_, k_ii_pseudo]| {
            let k_iii = factor * k_ii_pseudo;
            AntiPlaneRow {
                k_ii_pseudo,
                k_iii,
                j_iii: k_iii * k_iii / (T::lit(2.0) * eff.g),
            }
        })
        .collect())
}

/// K_II of the pseudo problem, K_III and J_III per contour.
pub fn mode3_pipeline<T: Scalar>(
    field: &DisplacementField<T>,
    mesh: &SeamMesh<T>,
    material: &Material<T>,
    frame: &CrackFrame<T>,
    domains: &ContourDomains<T>,
) -> Result<Vec<AntiPlaneRow<T>>, FractureError> {
    let pseudo = solve_anti_plane(field, mesh, material)?;
    anti_plane_rows(&pseudo, material, frame, domains)
}

/// Elementwise sum of the in-plane and anti-plane J series.
pub fn combine_total_j<T: Scalar>(
    in_plane: &[T],
    anti_plane: &[T],
) -> Result<Vec<T>, FractureError> {
    if in_plane.len() != anti_plane.len() {
        return Err(FractureError::LengthMismatch(
            in_plane.len(),
            anti_plane.len(),
        ));
    }
    Ok(in_plane
        .iter()
        .zip(anti_plane)
        .map(|(a, b)| *a + *b)
        .collect())
}
