//! The full pipeline for one field: mask, seam mesh, solve, contour integrals
//! and plateau. The solve is independent of the virtual crack extension
//! direction, so a prepared analysis can be evaluated for many q angles.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field_io::{apply_mask, DisplacementField};
use crate::fracture::{
    anti_plane_rows, contour_domains, detect_plateau, evaluate_integrals, solve_anti_plane,
    AntiPlaneSolution, ContourDomains, ContourRow, ContourSeries, FractureError, PlateauOptions,
    PlateauStats,
};
use crate::material::{EffectiveConstants, ElasticModel, Material, MaterialError};
use crate::mesh::{build_seam_mesh, CrackDefinition, CrackFrame, SeamMesh};
use crate::scalar::Scalar;
use crate::solver::{
    solve_deformation_plasticity, solve_elastic, PlasticityOptions, SolutionModel, SolutionState,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub model: SolutionModel,
    /// Number of contours; all rings that fit in the grid when absent.
    pub contours: Option<usize>,
    pub plateau: PlateauOptions,
    pub plasticity_tol: f64,
    pub plasticity_max_iter: usize,
    /// Anti-plane pipeline: `None` runs it whenever the field carries Uz,
    /// `Some(true)` additionally warns when it does not, `Some(false)` disables it.
    pub anti_plane: Option<bool>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        let p = PlasticityOptions::<f64>::default();
        AnalysisOptions {
            model: SolutionModel::Elastic,
            contours: None,
            plateau: PlateauOptions::default(),
            plasticity_tol: p.tol,
            plasticity_max_iter: p.max_iter,
            anti_plane: None,
        }
    }
}

/// Contour series, plateau and run metadata of one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractureResult<T> {
    pub series: ContourSeries<T>,
    pub plateau: Option<PlateauStats>,
    /// Best window of minimum length when no plateau was found.
    pub plateau_candidate: Option<PlateauStats>,
    /// Leading contours excluded from plateau detection.
    pub plateau_skip: usize,
    pub tip: [T; 2],
    pub q_angle: T,
    pub model_used: SolutionModel,
    pub iterations: usize,
    pub residual: f64,
    /// The rings reached the grid edge before the requested contour count.
    pub truncated: bool,
    pub effective: EffectiveConstants<f64>,
    pub masked_nodes: usize,
    pub seam_pairs: usize,
    /// Lattice points of the snapped crack, mouth to tip.
    pub snapped_chain: Vec<[f64; 2]>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> FractureResult<T> {
    pub fn no_plateau(&self) -> bool {
        self.plateau.is_none()
    }

    /// The detected plateau, or the fallback window when there is none.
    pub fn window_stats(&self) -> Option<&PlateauStats> {
        self.plateau.as_ref().or(self.plateau_candidate.as_ref())
    }

    pub fn has_anti_plane(&self) -> bool {
        self.series.rows.first().is_some_and(|r| r.k_iii.is_some())
    }
}

/// Everything of an analysis that does not depend on the q angle.
#[derive(Debug, Clone)]
pub struct PreparedAnalysis<T> {
    pub field: DisplacementField<T>,
    pub crack: CrackDefinition<T>,
    pub material: Material<T>,
    pub options: AnalysisOptions,
    pub mesh: SeamMesh<T>,
    pub solution: SolutionState<T>,
    pub domains: ContourDomains<T>,
    pub anti_plane: Option<AntiPlaneSolution<T>>,
    pub warnings: Vec<String>,
}

fn warn(warnings: &mut Vec<String>, msg: String) {
    log::warn!("{msg}");
    warnings.push(msg);
}

pub fn prepare<T: Scalar>(
    field: &DisplacementField<T>,
    crack: &CrackDefinition<T>,
    material: &Material<T>,
    options: &AnalysisOptions,
) -> Result<PreparedAnalysis<T>> {
    material.validate()?;
    crack.validate()?;
    let mut warnings = Vec::new();
    let dropped = field.valid.iter().filter(|v| !**v).count();
    if dropped > 0 {
        warn(
            &mut warnings,
            format!("{dropped} grid nodes without data were masked"),
        );
    }
    let masked = match &crack.mask {
        Some(region) => {
            let m = apply_mask(field, region)?;
            if m.nodes_in_region == 0 {
                warn(&mut warnings, "mask region covers no grid node".into());
            }
            m.field
        }
        None => field.clone(),
    };
    let mesh = build_seam_mesh(&masked, crack)?;
    let solution = match options.model {
        SolutionModel::Elastic => solve_elastic(&mesh, material)?,
        SolutionModel::DeformationPlasticity => {
            if material.ramberg_osgood.is_none() {
                return Err(MaterialError::InvalidParameter(
                    "the ramberg-osgood model needs ramberg_osgood parameters in the material"
                        .into(),
                )
                .into());
            }
            let opts = PlasticityOptions {
                tol: T::lit(options.plasticity_tol),
                max_iter: options.plasticity_max_iter,
            };
            solve_deformation_plasticity(&mesh, material, opts)?
        }
    };
    let domains = contour_domains(&mesh, options.contours)?;
    if domains.truncated {
        warn(
            &mut warnings,
            format!(
                "contour rings reach the grid boundary; series truncated to {} contours",
                domains.len()
            ),
        );
    }
    let anti_plane = if options.anti_plane == Some(false) {
        None
    } else if !masked.has_out_of_plane {
        if options.anti_plane == Some(true) {
            warn(
                &mut warnings,
                "field has no out-of-plane displacement; K_III and J_III omitted".into(),
            );
        }
        None
    } else if options.model != SolutionModel::Elastic {
        warn(
            &mut warnings,
            "anti-plane results need an elastic analysis; K_III and J_III omitted".into(),
        );
        None
    } else if material.model == ElasticModel::Anisotropic {
        None
    } else {
        Some(solve_anti_plane(&masked, &mesh, material)?)
    };
    if material.model == ElasticModel::Anisotropic {
        warn(
            &mut warnings,
            "stress intensity factors are not decomposed for general anisotropic materials; J only"
                .into(),
        );
    }
    Ok(PreparedAnalysis {
        field: masked,
        crack: crack.clone(),
        material: material.clone(),
        options: options.clone(),
        mesh,
        solution,
        domains,
        anti_plane,
        warnings,
    })
}

impl<T: Scalar> PreparedAnalysis<T> {
    /// Plateau options with the skip raised past the leading contours whose
    /// integration band reaches into the mask, as long as a minimum window remains.
    pub fn plateau_options(&self) -> PlateauOptions {
        let mut opts = self.options.plateau;
        let lead = self
            .domains
            .domains
            .iter()
            .take_while(|d| d.touches_mask)
            .count();
        if opts.window.is_none() && lead > opts.skip && self.domains.len() >= lead + opts.window_min
        {
            opts.skip = lead;
        }
        opts
    }

    /// Contour integrals and plateau with the virtual crack extension along `q_angle`.
    pub fn evaluate(&self, q_angle: T) -> Result<FractureResult<T>> {
        let tip = self.mesh.nodes[self.domains.tip_node];
        let frame = CrackFrame::new(tip, q_angle);
        let eff = self.material.effective();
        let want_k = self.solution.model_used == SolutionModel::Elastic
            && self.material.model != ElasticModel::Anisotropic;
        let integrals = evaluate_integrals(
            &self.solution,
            &self.mesh,
            &frame,
            &self.domains,
            want_k.then_some(&eff),
        )?;
        let anti = match &self.anti_plane {
            Some(p) => Some(anti_plane_rows(p, &self.material, &frame, &self.domains)?),
            None => None,
        };
        let rows = self
            .domains
            .domains
            .iter()
            .enumerate()
            .map(|(c, dom)| {
                let mut row = ContourRow::new(dom.ring, dom.outer_radius);
                row.j = integrals[c].j;
                row.masked_only = dom.masked_only;
                if let Some([k1, k2]) = integrals[c].k {
                    row.k_i = Some(k1);
                    row.k_ii = Some(k2);
                }
                if let Some(a) = &anti {
                    row.k_ii_pseudo = Some(a[c].k_ii_pseudo);
                    row.k_iii = Some(a[c].k_iii);
                    row.j_iii = Some(a[c].j_iii);
                    row.j_total = Some(row.j + a[c].j_iii);
                }
                row
            })
            .collect();
        let series = ContourSeries { rows };
        let mut warnings = self.warnings.clone();
        let plateau_options = self.plateau_options();
        let (plateau, plateau_candidate) = match detect_plateau(&series, &plateau_options) {
            Ok(p) => (Some(p), None),
            Err(FractureError::NoPlateau { best }) => {
                warn(
                    &mut warnings,
                    format!(
                        "no plateau within {:.1}%; best window {}..{} varies by {:.1}%",
                        100.0 * self.options.plateau.rel_tol,
                        best.start_contour,
                        best.end_contour,
                        100.0 * best.spread
                    ),
                );
                (None, Some(*best))
            }
            Err(e) => return Err(e.into()),
        };
        Ok(FractureResult {
            series,
            plateau,
            plateau_candidate,
            plateau_skip: plateau_options.skip,
            tip,
            q_angle,
            model_used: self.solution.model_used,
            iterations: self.solution.iterations,
            residual: self.solution.residual.as_f64(),
            truncated: self.domains.truncated,
            effective: EffectiveConstants::new(eff.e.as_f64(), eff.nu.as_f64(), eff.plane_state),
            masked_nodes: self.field.masked_count(),
            seam_pairs: self.mesh.seam_pairs.len(),
            snapped_chain: self
                .mesh
                .chain_points()
                .into_iter()
                .map(|p| [p[0].as_f64(), p[1].as_f64()])
                .collect(),
            warnings,
        })
    }
}

/// Runs the whole pipeline with the crack's own q angle.
pub fn analyze<T: Scalar>(
    field: &DisplacementField<T>,
    crack: &CrackDefinition<T>,
    material: &Material<T>,
    options: &AnalysisOptions,
) -> Result<FractureResult<T>> {
    prepare(field, crack, material, options)?.evaluate(crack.q_angle())
}
