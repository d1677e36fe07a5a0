//! Equivalent domain J and the interaction integral.

use crate::material::EffectiveConstants;
use crate::mesh::{CrackFrame, SeamMesh};
use crate::scalar::Scalar;
use crate::solver::element::gradient;
use crate::solver::{mesh_geometry, SolutionModel, SolutionState};
use crate::synthfield::crack_polar_angle;

use super::auxiliary::{auxiliary_field, Mode};
use super::domains::ContourDomains;
use super::FractureError;

/// Per-contour integrals; `k` is `[K_I, K_II]` when requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourIntegrals<T> {
    pub j: T,
    pub k: Option<[T; 2]>,
}

#[inline]
fn tensor<T: Scalar>(s: &[T; 3]) -> [[T; 2]; 2] {
    [[s[0], s[2]], [s[2], s[1]]]
}

/// Evaluates J and, when `aux` is given, the interaction-integral K for every contour.
pub fn evaluate_integrals<T: Scalar>(
    solution: &SolutionState<T>,
    mesh: &SeamMesh<T>,
    frame: &CrackFrame<T>,
    domains: &ContourDomains<T>,
    aux: Option<&EffectiveConstants<T>>,
) -> Result<Vec<ContourIntegrals<T>>, FractureError> {
    if aux.is_some() && solution.model_used != SolutionModel::Elastic {
        return Err(FractureError::ElastoplasticSolution);
    }
    let geom = mesh_geometry(mesh)?;
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(domains.len());
    for dom in &domains.domains {
        let mut j = T::zero();
        let mut inter = [T::zero(); 2];
        for &e in &dom.elements {
            let conn = &mesh.elements[e];
            let ue = conn.map(|n| solution.nodal_u[n]);
            let qe = conn.map(|n| dom.q[n]);
            for (p, gp) in geom[e].gps.iter().enumerate() {
                let mut dq = [T::zero(); 2];
                for a in 0..4 {
                    dq[0] += gp.dndx[0][a] * qe[a];
                    dq[1] += gp.dndx[1][a] * qe[a];
                }
                let dq = frame.vector_to_local(dq);
                let g = frame.tensor_to_local(gradient(gp, &ue));
                let s = frame.tensor_to_local(tensor(&solution.gp_stress[e][p]));
                let w = solution.gp_energy_density[e][p];
                let mut val = -w * dq[0];
                for i in 0..2 {
                    for jj in 0..2 {
                        val += s[i][jj] * g[i][0] * dq[jj];
                    }
                }
                j += val * gp.weight;

                if let Some(eff) = aux {
                    let x = frame.point_to_local(gp.xy);
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    let theta = crack_polar_angle(x[0], x[1]);
                    for (m, mode) in [Mode::Opening, Mode::Sliding].into_iter().enumerate() {
                        let a = auxiliary_field(mode, eff.g, eff.kappa(), r, theta);
                        let ga = a.gradient;
                        let sa = a.stress;
                        let work = s[0][0] * ga[0][0]
                            + s[1][1] * ga[1][1]
                            + s[0][1] * (ga[0][1] + ga[1][0]);
                        let mut v = -work * dq[0];
                        for i in 0..2 {
                            for jj in 0..2 {
                                v += (s[i][jj] * ga[i][0] + sa[i][jj] * g[i][0]) * dq[jj];
                            }
                        }
                        inter[m] += v * gp.weight;
                    }
                }
            }
        }
        out.push(ContourIntegrals {
            j,
            k: aux.map(|eff| [eff.e_star / two * inter[0], eff.e_star / two * inter[1]]),
        });
    }
    Ok(out)
}

/// Domain J per contour in the tip frame.
pub fn compute_j_edi<T: Scalar>(
    solution: &SolutionState<T>,
    mesh: &SeamMesh<T>,
    frame: &CrackFrame<T>,
    domains: &ContourDomains<T>,
) -> Result<Vec<T>, FractureError> {
    Ok(evaluate_integrals(solution, mesh, frame, domains, None)?
        .into_iter()
        .map(|c| c.j)
        .collect())
}

/// `[K_I, K_II]` per contour from the interaction integral.
pub fn compute_interaction_k<T: Scalar>(
    solution: &SolutionState<T>,
    mesh: &SeamMesh<T>,
    frame: &CrackFrame<T>,
    domains: &ContourDomains<T>,
    eff: &EffectiveConstants<T>,
) -> Result<Vec<[T; 2]>, FractureError> {
    Ok(
        evaluate_integrals(solution, mesh, frame, domains, Some(eff))?
            .into_iter()
            .map(|c| c.k.expect("requested"))
            .collect(),
    )
}
