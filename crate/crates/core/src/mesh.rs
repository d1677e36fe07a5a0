//! Quad mesh on the measurement lattice with a duplicated-node crack seam.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field_io::{point_segment_distance, DisplacementField, MaskRegion};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("crack tip lies outside the grid")]
    TipOutsideGrid,
    #[error("crack polyline cannot be snapped to the grid: {0}")]
    PolylineNotSnappable(String),
    #[error("crack tip lies on the outer boundary of the grid")]
    CrackTouchesBoundaryTip,
    #[error("invalid crack definition: {0}")]
    InvalidCrack(String),
    #[error("grid must have at least 3x3 nodes")]
    GridTooSmall,
}

impl MeshError {
    pub fn kind(&self) -> &'static str {
        match self {
            MeshError::TipOutsideGrid => "TipOutsideGrid",
            MeshError::PolylineNotSnappable(_) => "PolylineNotSnappable",
            MeshError::CrackTouchesBoundaryTip => "CrackTouchesBoundaryTip",
            MeshError::InvalidCrack(_) => "InvalidCrack",
            MeshError::GridTooSmall => "GridTooSmall",
        }
    }
}

/// User description of a crack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackDefinition<T> {
    /// Points from the crack mouth to the tip (last point), meters.
    pub polyline: Vec<[T; 2]>,
    /// Direction of virtual crack extension; defaults to the last segment direction.
    #[serde(default)]
    pub q_angle: Option<T>,
    #[serde(default)]
    pub mask: Option<MaskRegion>,
}

impl<T: Scalar> CrackDefinition<T> {
    pub fn straight(mouth: [T; 2], tip: [T; 2]) -> Self {
        CrackDefinition {
            polyline: vec![mouth, tip],
            q_angle: None,
            mask: None,
        }
    }

    pub fn with_mask(mut self, mask: MaskRegion) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn with_q_angle(mut self, q: T) -> Self {
        self.q_angle = Some(q);
        self
    }

    pub fn tip(&self) -> [T; 2] {
        *self.polyline.last().expect("validated crack has points")
    }

    pub fn mouth(&self) -> [T; 2] {
        self.polyline[0]
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if self.polyline.len() < 2 {
            return Err(MeshError::InvalidCrack(
                "polyline needs at least two points".into(),
            ));
        }
        if self.polyline.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MeshError::InvalidCrack(
                "non-finite polyline coordinate".into(),
            ));
        }
        if self.polyline.windows(2).any(|w| w[0] == w[1]) {
            return Err(MeshError::InvalidCrack(
                "consecutive polyline points coincide".into(),
            ));
        }
        if let Some(q) = self.q_angle {
            if !q.is_finite() {
                return Err(MeshError::InvalidCrack("non-finite q angle".into()));
            }
        }
        Ok(())
    }

    /// Angle of the last polyline segment, pointing into the uncracked material.
    pub fn default_q_angle(&self) -> T {
        let n = self.polyline.len();
        let (a, b) = (self.polyline[n - 2], self.polyline[n - 1]);
        (b[1] - a[1]).atan2(b[0] - a[0])
    }

    pub fn q_angle(&self) -> T {
        self.q_angle.unwrap_or_else(|| self.default_q_angle())
    }

    /// Shifts the polyline and the mask by `d` meters.
    pub fn translated(&self, d: [T; 2]) -> Self {
        CrackDefinition {
            polyline: self
                .polyline
                .iter()
                .map(|p| [p[0] + d[0], p[1] + d[1]])
                .collect(),
            q_angle: self.q_angle,
            mask: self
                .mask
                .as_ref()
                .map(|m| m.translated([d[0].as_f64(), d[1].as_f64()])),
        }
    }

    pub fn cast<U: Scalar>(&self) -> CrackDefinition<U> {
        let c = |v: T| U::lit(v.as_f64());
        CrackDefinition {
            polyline: self.polyline.iter().map(|p| p.map(c)).collect(),
            q_angle: self.q_angle.map(c),
            mask: self.mask.clone(),
        }
    }
}

/// Rotation from global `(x, y)` into the tip frame `(x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrackFrame<T> {
    pub angle: T,
    pub origin: [T; 2],
    /// Rows are the local axes expressed globally.
    pub rotation: [[T; 2]; 2],
}

impl<T: Scalar> CrackFrame<T> {
    pub fn new(origin: [T; 2], angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        CrackFrame {
            angle,
            origin,
            rotation: [[c, s], [-s, c]],
        }
    }

    #[inline]
    pub fn vector_to_local(&self, v: [T; 2]) -> [T; 2] {
        let r = &self.rotation;
        [
            r[0][0] * v[0] + r[0][1] * v[1],
            r[1][0] * v[0] + r[1][1] * v[1],
        ]
    }

    #[inline]
    pub fn point_to_local(&self, p: [T; 2]) -> [T; 2] {
        self.vector_to_local([p[0] - self.origin[0], p[1] - self.origin[1]])
    }

    /// `R A R^T` for a 2x2 tensor.
    #[inline]
    pub fn tensor_to_local(&self, a: [[T; 2]; 2]) -> [[T; 2]; 2] {
        let r = &self.rotation;
        let mut out = [[T::zero(); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                let mut s = T::zero();
                for k in 0..2 {
                    for l in 0..2 {
                        s += r[i][k] * a[k][l] * r[j][l];
                    }
                }
                *o = s;
            }
        }
        out
    }
}

pub fn crack_frame<T: Scalar>(crack: &CrackDefinition<T>) -> [[T; 2]; 2] {
    CrackFrame::new(crack.tip(), crack.q_angle()).rotation
}

/// Finite element mesh coincident with the measurement lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SeamMesh<T> {
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<[T; 2]>,
    /// Counter-clockwise node indices; element `ci + cj (nx - 1)` covers lattice cell `(ci, cj)`.
    pub elements: Vec<[usize; 4]>,
    /// `(original, duplicate)` per duplicated seam node.
    pub seam_pairs: Vec<(usize, usize)>,
    pub tip_node: Option<usize>,
    /// Snapped crack path as lattice nodes, mouth first.
    pub chain: Vec<usize>,
    /// Lattice node each mesh node sits on.
    pub lattice_node: Vec<usize>,
    pub masked: Vec<bool>,
    pub constrained: Vec<bool>,
    /// Measured `[Ux, Uy, Uz]` per mesh node; used where `constrained`.
    pub bc_values: Vec<[T; 3]>,
}

impl<T: Scalar> SeamMesh<T> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn lattice_ij(&self, node: usize) -> (usize, usize) {
        let l = self.lattice_node[node];
        (l % self.nx, l / self.nx)
    }

    pub fn on_outer_boundary(&self, node: usize) -> bool {
        let (i, j) = self.lattice_ij(node);
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn constrained_count(&self) -> usize {
        self.constrained.iter().filter(|c| **c).count()
    }

    /// Same mesh with different prescribed values (e.g. the pseudo anti-plane problem).
    pub fn with_bc_values(&self, bc: Vec<[T; 3]>) -> Self {
        assert_eq!(bc.len(), self.nodes.len());
        SeamMesh {
            bc_values: bc,
            ..self.clone()
        }
    }

    /// Node-to-element incidence lists.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.nodes.len()];
        for (e, conn) in self.elements.iter().enumerate() {
            for &n in conn {
                inc[n].push(e);
            }
        }
        inc
    }

    pub fn chain_points(&self) -> Vec<[T; 2]> {
        self.chain.iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn dump(&self) -> MeshDump {
        MeshDump {
            nx: self.nx,
            ny: self.ny,
            nodes: self.nodes.iter().map(|p| p.map(|v| v.as_f64())).collect(),
            elements: self.elements.clone(),
            seam_pairs: self.seam_pairs.clone(),
            tip_node: self.tip_node,
            chain: self.chain.clone(),
            constrained: self.constrained.clone(),
        }
    }
}

/// Serializable mesh snapshot for debugging and plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDump {
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
    pub seam_pairs: Vec<(usize, usize)>,
    pub tip_node: Option<usize>,
    pub chain: Vec<usize>,
    pub constrained: Vec<bool>,
}

fn lattice_elements(nx: usize, ny: usize) -> Vec<[usize; 4]> {
    let mut els = Vec::with_capacity((nx - 1) * (ny - 1));
    for cj in 0..ny - 1 {
        for ci in 0..nx - 1 {
            let n = ci + cj * nx;
            els.push([n, n + 1, n + 1 + nx, n + nx]);
        }
    }
    els
}

/// Mesh without a crack; every unmasked node is prescribed.
pub fn build_uncracked_mesh<T: Scalar>(
    field: &DisplacementField<T>,
) -> Result<SeamMesh<T>, MeshError> {
    if field.nx < 3 || field.ny < 3 {
        return Err(MeshError::GridTooSmall);
    }
    let n = field.len();
    Ok(SeamMesh {
        nx: field.nx,
        ny: field.ny,
        nodes: (0..n).map(|k| field.position(k)).collect(),
        elements: lattice_elements(field.nx, field.ny),
        seam_pairs: Vec::new(),
        tip_node: None,
        chain: Vec::new(),
        lattice_node: (0..n).collect(),
        masked: field.mask.clone(),
        constrained: field.mask.iter().map(|m| !m).collect(),
        bc_values: field.u.clone(),
    })
}

#[derive(PartialEq)]
struct Candidate(f64, usize);

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, ties on node index for determinism
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn polyline_distance(p: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    poly.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

// Nearest lattice node of a point lying at most half a cell outside the grid.
fn snap_point<T: Scalar>(field: &DisplacementField<T>, p: [T; 2]) -> Option<(usize, usize)> {
    let f = field.lattice_coords(p);
    let (fi, fj) = (f[0].as_f64(), f[1].as_f64());
    let (mi, mj) = ((field.nx - 1) as f64, (field.ny - 1) as f64);
    let tol = 0.5 + 1e-9;
    if fi < -tol || fj < -tol || fi > mi + tol || fj > mj + tol {
        return None;
    }
    Some((
        fi.round().clamp(0.0, mi) as usize,
        fj.round().clamp(0.0, mj) as usize,
    ))
}

/// Snaps the crack polyline onto a chain of element edges from mouth to tip.
pub fn snap_crack<T: Scalar>(
    field: &DisplacementField<T>,
    crack: &CrackDefinition<T>,
) -> Result<Vec<usize>, MeshError> {
    crack.validate()?;
    let (nx, ny) = (field.nx, field.ny);
    let (ti, tj) = snap_point(field, crack.tip()).ok_or(MeshError::TipOutsideGrid)?;
    if ti == 0 || tj == 0 || ti + 1 == nx || tj + 1 == ny {
        return Err(MeshError::CrackTouchesBoundaryTip);
    }
    let (mi, mj) = snap_point(field, crack.mouth()).ok_or_else(|| {
        MeshError::PolylineNotSnappable("crack mouth lies outside the grid".into())
    })?;
    let tip = ti + tj * nx;
    let mouth = mi + mj * nx;
    if tip == mouth {
        return Err(MeshError::PolylineNotSnappable(
            "crack is shorter than one grid cell".into(),
        ));
    }

    let poly: Vec<[f64; 2]> = crack
        .polyline
        .iter()
        .map(|p| p.map(|v| v.as_f64()))
        .collect();
    let sx = field.spacing[0].as_f64();
    let sy = field.spacing[1].as_f64();
    let h = sx.min(sy);
    let pos = |n: usize| {
        let p = field.position(n);
        [p[0].as_f64(), p[1].as_f64()]
    };
    let boundary = |n: usize| {
        let (i, j) = (n % nx, n / nx);
        i == 0 || j == 0 || i + 1 == nx || j + 1 == ny
    };

    let mut cost = vec![f64::INFINITY; nx * ny];
    let mut prev = vec![usize::MAX; nx * ny];
    let mut heap = BinaryHeap::new();
    cost[mouth] = 0.0;
    heap.push(Candidate(0.0, mouth));
    while let Some(Candidate(c, n)) = heap.pop() {
        if n == tip {
            break;
        }
        if c > cost[n] {
            continue;
        }
        let (i, j) = (n % nx, n / nx);
        let mut nbrs = [usize::MAX; 4];
        if i > 0 {
            nbrs[0] = n - 1;
        }
        if i + 1 < nx {
            nbrs[1] = n + 1;
        }
        if j > 0 {
            nbrs[2] = n - nx;
        }
        if j + 1 < ny {
            nbrs[3] = n + nx;
        }
        for (k, &m) in nbrs.iter().enumerate() {
            if m == usize::MAX || (boundary(m) && m != tip) {
                continue;
            }
            let (a, b) = (pos(n), pos(m));
            let mid = [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5];
            let d = polyline_distance(mid, &poly) / h;
            let len = if k < 2 { sx } else { sy };
            let nc = c + len / h * (0.05 + d * d);
            if nc < cost[m] {
                cost[m] = nc;
                prev[m] = n;
                heap.push(Candidate(nc, m));
            }
        }
    }
    if !cost[tip].is_finite() {
        return Err(MeshError::PolylineNotSnappable(
            "no interior path from mouth to tip".into(),
        ));
    }
    let mut chain = vec![tip];
    while *chain.last().unwrap() != mouth {
        chain.push(prev[*chain.last().unwrap()]);
    }
    chain.reverse();

    let diag = sx.hypot(sy) * (1.0 + 1e-9);
    if let Some(&bad) = chain
        .iter()
        .find(|&&n| polyline_distance(pos(n), &poly) > diag)
    {
        let (i, j) = (bad % nx, bad / nx);
        return Err(MeshError::PolylineNotSnappable(format!(
            "snapped path leaves the polyline at node ({i}, {j})"
        )));
    }
    Ok(chain)
}

// Counter-clockwise angle from `a` to `b` in [0, 2 pi).
fn ccw_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    let t = b[1].atan2(b[0]) - a[1].atan2(a[0]);
    if t < 0.0 {
        t + std::f64::consts::TAU
    } else {
        t
    }
}

/// Builds the cracked mesh: the snapped chain (tip excluded) is duplicated and
/// elements on the left of the mouth-to-tip direction are rebound to the duplicates.
pub fn build_seam_mesh<T: Scalar>(
    field: &DisplacementField<T>,
    crack: &CrackDefinition<T>,
) -> Result<SeamMesh<T>, MeshError> {
    let mut mesh = build_uncracked_mesh(field)?;
    let chain = snap_crack(field, crack)?;
    let (nx, ny) = (field.nx, field.ny);
    let last = chain.len() - 1;
    let tip = chain[last];
    let mouth = chain[0];
    let mouth_on_boundary = {
        let (i, j) = (mouth % nx, mouth / nx);
        i == 0 || j == 0 || i + 1 == nx || j + 1 == ny
    };

    let mut seam = vec![false; nx * ny];
    for &n in &chain[..last] {
        seam[n] = true;
    }
    let dir = |a: usize, b: usize| {
        [
            (b % nx) as f64 - (a % nx) as f64,
            (b / nx) as f64 - (a / nx) as f64,
        ]
    };

    let first_dup = if mouth_on_boundary { 0 } else { 1 };
    for c in first_dup..last {
        let n = chain[c];
        let out = dir(n, chain[c + 1]);
        let inward = if c == 0 {
            [-out[0], -out[1]]
        } else {
            dir(n, chain[c - 1])
        };
        let span = ccw_between(out, inward);
        let dup = mesh.nodes.len();
        mesh.nodes.push(mesh.nodes[n]);
        mesh.lattice_node.push(n);
        mesh.masked.push(mesh.masked[n]);
        mesh.constrained.push(false);
        mesh.bc_values.push(mesh.bc_values[n]);
        mesh.seam_pairs.push((n, dup));

        let (i, j) = ((n % nx) as isize, (n / nx) as isize);
        for (di, dj) in [(-1isize, -1isize), (0, -1), (-1, 0), (0, 0)] {
            let (ci, cj) = (i + di, j + dj);
            if ci < 0 || cj < 0 || ci as usize >= nx - 1 || cj as usize >= ny - 1 {
                continue;
            }
            let centroid = [di as f64 + 0.5, dj as f64 + 0.5];
            if ccw_between(out, centroid) < span {
                let e = ci as usize + cj as usize * (nx - 1);
                for slot in mesh.elements[e].iter_mut() {
                    if *slot == n {
                        *slot = dup;
                    }
                }
            }
        }
    }
    for (k, s) in seam.iter().enumerate() {
        if *s {
            mesh.constrained[k] = false;
        }
    }
    mesh.tip_node = Some(tip);
    mesh.chain = chain;
    Ok(mesh)
}
