//! Displacement-driven boundary value problem on a seam mesh.

pub mod element;
pub mod skyline;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::{
    plane_stiffness, plane_stiffness_from_moduli, Material, MaterialError, PlaneState,
    RambergOsgood,
};
use crate::mesh::SeamMesh;
use crate::scalar::Scalar;
use element::{apply_d, element_geometry, element_stiffness, strain, ElementGeometry};
use skyline::{reverse_cuthill_mckee, Skyline};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error("element {0} has a non-positive Jacobian")]
    NonPositiveJacobian(usize),
    #[error("{0}")]
    UnsupportedModel(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

impl SolverError {
    pub fn kind(&self) -> &'static str {
        match self {
            SolverError::SingularSystem(_) => "SingularSystem",
            SolverError::NonFiniteInput(_) => "NonFiniteInput",
            SolverError::NoConvergence { .. } => "NoConvergence",
            SolverError::NonPositiveJacobian(_) => "NonPositiveJacobian",
            SolverError::UnsupportedModel(_) => "UnsupportedModel",
            SolverError::Material(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionModel {
    #[default]
    Elastic,
    #[serde(alias = "ramberg-osgood")]
    DeformationPlasticity,
}

impl std::str::FromStr for SolutionModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "elastic" => Ok(SolutionModel::Elastic),
            "ramberg-osgood" | "deformation-plasticity" | "plastic" => {
                Ok(SolutionModel::DeformationPlasticity)
            }
            other => Err(format!(
                "unknown model '{other}' (expected elastic or ramberg-osgood)"
            )),
        }
    }
}

/// Nodal displacements and Gauss point fields; Gauss point arrays are indexed by element.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState<T> {
    pub nodal_u: Vec<[T; 2]>,
    pub gp_xy: Vec<[[T; 2]; 4]>,
    /// `(sxx, syy, sxy)`.
    pub gp_stress: Vec<[[T; 3]; 4]>,
    /// `(exx, eyy, gxy)` with engineering shear strain.
    pub gp_strain: Vec<[[T; 3]; 4]>,
    pub gp_energy_density: Vec<[T; 4]>,
    pub gp_equivalent_stress: Vec<[T; 4]>,
    pub model_used: SolutionModel,
    pub plane_state: PlaneState,
    pub iterations: usize,
    pub residual: T,
    pub residual_history: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticityOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for PlasticityOptions<T> {
    fn default() -> Self {
        PlasticityOptions {
            tol: T::lit(1e-8),
            max_iter: 50,
        }
    }
}

pub fn mesh_geometry<T: Scalar>(
    mesh: &SeamMesh<T>,
) -> Result<Vec<ElementGeometry<T>>, SolverError> {
    mesh.elements
        .iter()
        .enumerate()
        .map(|(e, conn)| {
            let corners = conn.map(|n| mesh.nodes[n]);
            element_geometry(&corners).ok_or(SolverError::NonPositiveJacobian(e))
        })
        .collect()
}

// Free-DOF numbering and envelope of the reduced stiffness.
struct Layout {
    /// First free DOF of each node (`2 k`, `2 k + 1`), `None` if prescribed.
    dof: Vec<Option<usize>>,
    n_free: usize,
    first: Vec<usize>,
}

fn layout<T: Scalar>(mesh: &SeamMesh<T>) -> Result<Layout, SolverError> {
    let n = mesh.node_count();
    let free: Vec<usize> = (0..n).filter(|&k| !mesh.constrained[k]).collect();
    let mut local = vec![usize::MAX; n];
    for (k, &v) in free.iter().enumerate() {
        local[v] = k;
    }
    let mut adj = vec![Vec::new(); free.len()];
    for conn in &mesh.elements {
        for &a in conn {
            for &b in conn {
                if a != b && local[a] != usize::MAX && local[b] != usize::MAX {
                    adj[local[a]].push(local[b]);
                }
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    check_supported(mesh, &free, &local, &adj)?;

    let order = reverse_cuthill_mckee(&adj);
    let mut dof = vec![None; n];
    for (pos, &k) in order.iter().enumerate() {
        dof[free[k]] = Some(2 * pos);
    }
    let n_free = 2 * free.len();
    let mut first: Vec<usize> = (0..n_free).collect();
    for conn in &mesh.elements {
        let ds: Vec<usize> = conn.iter().filter_map(|&a| dof[a]).collect();
        if let Some(&lo) = ds.iter().min() {
            for &d in &ds {
                first[d] = first[d].min(lo);
                first[d + 1] = first[d + 1].min(lo);
            }
        }
    }
    Ok(Layout { dof, n_free, first })
}

// Every group of connected free nodes must be held by at least two prescribed nodes.
fn check_supported<T: Scalar>(
    mesh: &SeamMesh<T>,
    free: &[usize],
    local: &[usize],
    adj: &[Vec<usize>],
) -> Result<(), SolverError> {
    let mut comp = vec![usize::MAX; free.len()];
    let mut n_comp = 0;
    for s in 0..free.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = n_comp;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if comp[w] == usize::MAX {
                    comp[w] = n_comp;
                    stack.push(w);
                }
            }
        }
        n_comp += 1;
    }
    let mut anchors: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for conn in &mesh.elements {
        let comps: Vec<usize> = conn
            .iter()
            .filter(|&&a| local[a] != usize::MAX)
            .map(|&a| comp[local[a]])
            .collect();
        for &c in &comps {
            for &a in conn {
                if mesh.constrained[a] && anchors[c].len() < 2 && !anchors[c].contains(&a) {
                    anchors[c].push(a);
                }
            }
        }
    }
    if let Some(c) = anchors.iter().position(|a| a.len() < 2) {
        let node = free[comp.iter().position(|&x| x == c).unwrap()];
        let (i, j) = mesh.lattice_ij(node);
        return Err(SolverError::SingularSystem(format!(
            "free region containing lattice node ({i}, {j}) is not held by measured displacements"
        )));
    }
    Ok(())
}

fn solve_displacements<T: Scalar>(
    mesh: &SeamMesh<T>,
    geom: &[ElementGeometry<T>],
    lay: &Layout,
    dmats: &[[[[T; 3]; 3]; 4]],
) -> Result<Vec<[T; 2]>, SolverError> {
    let mut u: Vec<[T; 2]> = mesh.bc_values.iter().map(|v| [v[0], v[1]]).collect();
    if lay.n_free == 0 {
        return Ok(u);
    }
    let mut k = Skyline::new(lay.first.clone());
    let mut rhs = vec![T::zero(); lay.n_free];
    for ((conn, g), d) in mesh.elements.iter().zip(geom).zip(dmats) {
        let ke = element_stiffness(g, d);
        let dofs: [Option<usize>; 8] =
            std::array::from_fn(|r| lay.dof[conn[r / 2]].map(|base| base + r % 2));
        for r in 0..8 {
            let Some(gr) = dofs[r] else { continue };
            for c in 0..8 {
                match dofs[c] {
                    Some(gc) if gc <= gr => k.add(gr, gc, ke[r][c]),
                    Some(_) => {}
                    None => {
                        let prescribed = mesh.bc_values[conn[c / 2]][c % 2];
                        rhs[gr] -= ke[r][c] * prescribed;
                    }
                }
            }
        }
    }
    let pivot = T::epsilon() * T::lit(64.0);
    let factor = k.factorize(pivot).map_err(|row| {
        SolverError::SingularSystem(format!("pivot {row} of {} vanished", lay.n_free))
    })?;
    let x = factor.solve(&rhs);
    for (node, d) in lay.dof.iter().enumerate() {
        if let Some(base) = d {
            u[node] = [x[*base], x[*base + 1]];
        }
    }
    Ok(u)
}

fn check_inputs<T: Scalar>(mesh: &SeamMesh<T>) -> Result<(), SolverError> {
    for (n, v) in mesh.bc_values.iter().enumerate() {
        if mesh.constrained[n] && !(v[0].is_finite() && v[1].is_finite()) {
            let (i, j) = mesh.lattice_ij(n);
            return Err(SolverError::NonFiniteInput(format!(
                "prescribed displacement at lattice node ({i}, {j})"
            )));
        }
    }
    if mesh.nodes.iter().flatten().any(|c| !c.is_finite()) {
        return Err(SolverError::NonFiniteInput("node coordinate".into()));
    }
    Ok(())
}

fn element_displacements<T: Scalar>(u: &[[T; 2]], conn: &[usize; 4]) -> [[T; 2]; 4] {
    conn.map(|n| u[n])
}

fn von_mises_plane<T: Scalar>(s: &[T; 3], szz: T) -> T {
    let (a, b, c) = (s[0] - s[1], s[1] - szz, szz - s[0]);
    ((a * a + b * b + c * c) * T::lit(0.5) + T::lit(3.0) * s[2] * s[2]).sqrt()
}

/// Linear elastic solution with `sigma = D eps` and `W = sigma . eps / 2`.
pub fn solve_elastic<T: Scalar>(
    mesh: &SeamMesh<T>,
    material: &Material<T>,
) -> Result<SolutionState<T>, SolverError> {
    check_inputs(mesh)?;
    let d = plane_stiffness(material)?;
    let geom = mesh_geometry(mesh)?;
    let lay = layout(mesh)?;
    let dmats = vec![[d; 4]; mesh.element_count()];
    let u = solve_displacements(mesh, &geom, &lay, &dmats)?;

    let ne = mesh.element_count();
    let mut state = empty_state(u, ne, material.plane_state, SolutionModel::Elastic);
    let isotropic = material.stiffness.is_none();
    for (e, (conn, g)) in mesh.elements.iter().zip(&geom).enumerate() {
        let ue = element_displacements(&state.nodal_u, conn);
        for (p, gp) in g.gps.iter().enumerate() {
            let eps = strain(gp, &ue);
            let sig = apply_d(&d, &eps);
            let szz = match material.plane_state {
                PlaneState::PlaneStress => T::zero(),
                PlaneState::PlaneStrain if isotropic => material.nu * (sig[0] + sig[1]),
                // out-of-plane stress is not tracked for condensed anisotropic stiffness
                PlaneState::PlaneStrain => T::zero(),
            };
            state.gp_xy[e][p] = gp.xy;
            state.gp_strain[e][p] = eps;
            state.gp_stress[e][p] = sig;
            state.gp_energy_density[e][p] =
                T::lit(0.5) * (sig[0] * eps[0] + sig[1] * eps[1] + sig[2] * eps[2]);
            state.gp_equivalent_stress[e][p] = von_mises_plane(&sig, szz);
        }
    }
    state.iterations = 1;
    Ok(state)
}

fn empty_state<T: Scalar>(
    u: Vec<[T; 2]>,
    ne: usize,
    plane_state: PlaneState,
    model: SolutionModel,
) -> SolutionState<T> {
    SolutionState {
        nodal_u: u,
        gp_xy: vec![[[T::zero(); 2]; 4]; ne],
        gp_stress: vec![[[T::zero(); 3]; 4]; ne],
        gp_strain: vec![[[T::zero(); 3]; 4]; ne],
        gp_energy_density: vec![[T::zero(); 4]; ne],
        gp_equivalent_stress: vec![[T::zero(); 4]; ne],
        model_used: model,
        plane_state,
        iterations: 0,
        residual: T::zero(),
        residual_history: Vec::new(),
    }
}

/// Hencky material point: elastic bulk response, Ramberg–Osgood shear response.
#[derive(Debug, Clone, Copy)]
struct Hencky<T> {
    ro: RambergOsgood<T>,
    e: T,
    bulk: T,
    shear: T,
    plane_state: PlaneState,
}

#[derive(Debug, Clone, Copy)]
struct PointState<T> {
    secant_shear: T,
    stress: [T; 3],
    sigma_eq: T,
    energy: T,
}

impl<T: Scalar> Hencky<T> {
    fn new(ro: RambergOsgood<T>, e: T, nu: T, plane_state: PlaneState) -> Self {
        Hencky {
            ro,
            e,
            bulk: e / (T::lit(3.0) * (T::one() - T::lit(2.0) * nu)),
            shear: e / (T::lit(2.0) * (T::one() + nu)),
            plane_state,
        }
    }

    // Equivalent stress solving eps_eq = s / (3 G) + (alpha s0 / E)(s / s0)^n.
    fn equivalent_stress(&self, eps_eq: T) -> T {
        let three_g = T::lit(3.0) * self.shear;
        let elastic = three_g * eps_eq;
        if eps_eq <= T::zero() || self.ro.alpha == T::zero() {
            return elastic;
        }
        let c = self.ro.alpha * self.ro.sigma0 / self.e;
        let n = self.ro.n;
        // f is increasing and convex, so Newton from the elastic bound decreases monotonically
        let mut s = elastic;
        for _ in 0..100 {
            let ratio = s / self.ro.sigma0;
            let f = s / three_g + c * ratio.powf(n) - eps_eq;
            let df = T::one() / three_g + c * n / self.ro.sigma0 * ratio.powf(n - T::one());
            let next = (s - f / df).max(T::zero());
            if (next - s).abs() <= T::epsilon() * T::lit(4.0) * s {
                return next;
            }
            s = next;
        }
        s
    }

    fn deviatoric_eq(&self, eps: &[T; 3], ezz: T) -> (T, T) {
        let tr = eps[0] + eps[1] + ezz;
        let third = tr / T::lit(3.0);
        let (dx, dy, dz) = (eps[0] - third, eps[1] - third, ezz - third);
        let dxy = eps[2] * T::lit(0.5);
        let sq = dx * dx + dy * dy + dz * dz + T::lit(2.0) * dxy * dxy;
        ((T::lit(2.0) / T::lit(3.0) * sq).sqrt(), tr)
    }

    fn secant_at(&self, eps_eq: T) -> (T, T) {
        let s = self.equivalent_stress(eps_eq);
        let g = if eps_eq > T::zero() {
            s / (T::lit(3.0) * eps_eq)
        } else {
            self.shear
        };
        (g.min(self.shear), s)
    }

    fn state(&self, eps: &[T; 3]) -> PointState<T> {
        let two = T::lit(2.0);
        let (eq, tr) = match self.plane_state {
            PlaneState::PlaneStrain => self.deviatoric_eq(eps, T::zero()),
            PlaneState::PlaneStress => {
                // out-of-plane strain from szz = 0, iterated with the secant modulus
                let mut g = self.shear;
                let mut ezz = T::zero();
                for _ in 0..60 {
                    let lam = self.bulk - two * g / T::lit(3.0);
                    let next = -lam * (eps[0] + eps[1]) / (lam + two * g);
                    let converged = (next - ezz).abs() <= T::epsilon() * T::lit(8.0) * next.abs();
                    ezz = next;
                    let (eq, _) = self.deviatoric_eq(eps, ezz);
                    g = self.secant_at(eq).0;
                    if converged {
                        break;
                    }
                }
                self.deviatoric_eq(eps, ezz)
            }
        };
        let (g, sigma_eq) = self.secant_at(eq);
        let third = tr / T::lit(3.0);
        let mean = self.bulk * tr;
        let stress = [
            two * g * (eps[0] - third) + mean,
            two * g * (eps[1] - third) + mean,
            g * eps[2],
        ];
        let eps_p = self.ro.plastic_strain(self.e, sigma_eq);
        let n = self.ro.n;
        let energy = sigma_eq * sigma_eq / (T::lit(6.0) * self.shear)
            + mean * mean / (two * self.bulk)
            + n / (n + T::one()) * sigma_eq * eps_p;
        PointState {
            secant_shear: g,
            stress,
            sigma_eq,
            energy,
        }
    }
}

/// Secant-stiffness iteration for Ramberg–Osgood deformation plasticity.
pub fn solve_deformation_plasticity<T: Scalar>(
    mesh: &SeamMesh<T>,
    material: &Material<T>,
    options: PlasticityOptions<T>,
) -> Result<SolutionState<T>, SolverError> {
    let ro = material.ramberg_osgood.ok_or_else(|| {
        SolverError::UnsupportedModel(
            "deformation plasticity needs Ramberg-Osgood parameters".into(),
        )
    })?;
    if !material.is_isotropic() {
        return Err(SolverError::UnsupportedModel(
            "deformation plasticity is available for isotropic materials only".into(),
        ));
    }
    ro.validate()?;
    if !(options.tol > T::zero()) || options.max_iter == 0 {
        return Err(SolverError::UnsupportedModel(
            "tolerance and iteration limit must be positive".into(),
        ));
    }
    check_inputs(mesh)?;
    let law = Hencky::new(ro, material.e, material.nu, material.plane_state);
    let geom = mesh_geometry(mesh)?;
    let lay = layout(mesh)?;
    let ne = mesh.element_count();

    let elastic_d = plane_stiffness_from_moduli(law.bulk, law.shear, law.plane_state);
    let mut u = solve_displacements(mesh, &geom, &lay, &vec![[elastic_d; 4]; ne])?;
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iter {
        let dmats: Vec<[[[T; 3]; 3]; 4]> = mesh
            .elements
            .iter()
            .zip(&geom)
            .map(|(conn, g)| {
                let ue = element_displacements(&u, conn);
                std::array::from_fn(|p| {
                    let st = law.state(&strain(&g.gps[p], &ue));
                    plane_stiffness_from_moduli(law.bulk, st.secant_shear, law.plane_state)
                })
            })
            .collect();
        let next = solve_displacements(mesh, &geom, &lay, &dmats)?;
        let mut change = T::zero();
        let mut scale = T::zero();
        for (node, d) in lay.dof.iter().enumerate() {
            if d.is_some() {
                for c in 0..2 {
                    change = change.max((next[node][c] - u[node][c]).abs());
                    scale = scale.max(next[node][c].abs());
                }
            }
        }
        let res = if scale > T::zero() {
            change / scale
        } else {
            T::zero()
        };
        if !res.is_finite() {
            return Err(SolverError::NonFiniteInput(
                "iteration produced non-finite displacements".into(),
            ));
        }
        history.push(res);
        u = next;
        if res < options.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SolverError::NoConvergence {
            iterations: history.len(),
            residual: history.last().map_or(f64::NAN, |r| r.as_f64()),
            history: history.iter().map(|r| r.as_f64()).collect(),
        });
    }

    let mut state = empty_state(u, ne, law.plane_state, SolutionModel::DeformationPlasticity);
    for (e, (conn, g)) in mesh.elements.iter().zip(&geom).enumerate() {
        let ue = element_displacements(&state.nodal_u, conn);
        for (p, gp) in g.gps.iter().enumerate() {
            let eps = strain(gp, &ue);
            let st = law.state(&eps);
            state.gp_xy[e][p] = gp.xy;
            state.gp_strain[e][p] = eps;
            state.gp_stress[e][p] = st.stress;
            state.gp_energy_density[e][p] = st.energy;
            state.gp_equivalent_stress[e][p] = st.sigma_eq;
        }
    }
    state.iterations = history.len();
    state.residual = *history.last().unwrap();
    state.residual_history = history;
    Ok(state)
}

/// Quadrature point dump: `elem,gp,x,y,sxx,syy,sxy,W`.
pub fn write_gp_csv<T: Scalar, W: Write>(
    state: &SolutionState<T>,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "elem,gp,x,y,sxx,syy,sxy,W")?;
    for e in 0..state.gp_stress.len() {
        for p in 0..4 {
            let xy = state.gp_xy[e][p];
            let s = state.gp_stress[e][p];
            writeln!(
                out,
                "{e},{p},{:e},{:e},{:e},{:e},{:e},{:e}",
                xy[0].as_f64(),
                xy[1].as_f64(),
                s[0].as_f64(),
                s[1].as_f64(),
                s[2].as_f64(),
                state.gp_energy_density[e][p].as_f64()
            )?;
        }
    }
    Ok(())
}
