//! Element rings around the crack tip and their weight functions.

use crate::mesh::SeamMesh;
use crate::scalar::{hypot2, Scalar};

use super::FractureError;

/// Integration domain of one contour.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourDomain<T> {
    /// 1-based ring index.
    pub ring: usize,
    /// Nodal weight, 1 inside the ring and 0 on and beyond its outer edge.
    pub q: Vec<T>,
    /// Elements where `q` is not constant; only these contribute.
    pub elements: Vec<usize>,
    /// Smallest distance from the tip to a zero-weight node of the ring.
    pub outer_radius: T,
    /// True when the contributing elements touch no measured node.
    pub masked_only: bool,
    /// True when a contributing element has a node inside the mask region.
    pub touches_mask: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourDomains<T> {
    pub tip_node: usize,
    pub domains: Vec<ContourDomain<T>>,
    /// Set when the rings reached the outer boundary before the requested count.
    pub truncated: bool,
}

impl<T> ContourDomains<T> {
    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }
}

/// Builds up to `n_contours` rings (all available when `None`).
pub fn contour_domains<T: Scalar>(
    mesh: &SeamMesh<T>,
    n_contours: Option<usize>,
) -> Result<ContourDomains<T>, FractureError> {
    let tip = mesh.tip_node.ok_or(FractureError::NoCrackTip)?;
    if n_contours == Some(0) {
        return Err(FractureError::InvalidOptions(
            "contour count must be at least 1".into(),
        ));
    }
    let incidence = mesh.node_elements();
    let ne = mesh.element_count();
    let nn = mesh.node_count();
    let mut in_ring = vec![false; ne];
    let mut members: Vec<usize> = incidence[tip].clone();
    for &e in &members {
        in_ring[e] = true;
    }
    let tip_xy = mesh.nodes[tip];
    let mut domains = Vec::new();
    let mut truncated = false;
    let mut ring = 1;
    loop {
        // the outer grid edge always closes the domain
        let mut q = vec![T::zero(); nn];
        for n in 0..nn {
            if !incidence[n].is_empty()
                && !mesh.on_outer_boundary(n)
                && incidence[n].iter().all(|&e| in_ring[e])
            {
                q[n] = T::one();
            }
        }
        let mut elements = Vec::new();
        let mut outer = T::infinity();
        let mut masked_only = true;
        let mut touches_mask = false;
        for &e in &members {
            let conn = &mesh.elements[e];
            let ones = conn.iter().filter(|&&n| q[n] == T::one()).count();
            if ones == 0 || ones == 4 {
                continue;
            }
            elements.push(e);
            for &n in conn {
                if mesh.constrained[n] {
                    masked_only = false;
                }
                touches_mask |= mesh.masked[n];
                if q[n] == T::zero() {
                    outer = outer.min(hypot2([
                        mesh.nodes[n][0] - tip_xy[0],
                        mesh.nodes[n][1] - tip_xy[1],
                    ]));
                }
            }
        }
        elements.sort_unstable();
        domains.push(ContourDomain {
            ring,
            q,
            elements,
            outer_radius: outer,
            masked_only,
            touches_mask,
        });
        if Some(ring) == n_contours {
            break;
        }
        if members
            .iter()
            .any(|&e| mesh.elements[e].iter().any(|&n| mesh.on_outer_boundary(n)))
        {
            truncated = n_contours.is_some();
            break;
        }
        // grow by one layer of node-sharing elements
        let mut grown = Vec::new();
        for &e in &members {
            for &n in &mesh.elements[e] {
                for &f in &incidence[n] {
                    if !in_ring[f] {
                        in_ring[f] = true;
                        grown.push(f);
                    }
                }
            }
        }
        if grown.is_empty() {
            break;
        }
        members.extend(grown);
        ring += 1;
    }
    if truncated {
        log::warn!(
            "contour rings reach the grid boundary; series truncated to {} contours",
            domains.len()
        );
    }
    if domains.iter().all(|d| d.masked_only) {
        return Err(FractureError::ContourHitsMaskOnly);
    }
    Ok(ContourDomains {
        tip_node: tip,
        domains,
        truncated,
    })
}
