use serde::{Deserialize, Serialize};

use super::FieldError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Rectangle,
    Polygon,
}

/// Region of the field excluded from the boundary conditions, in meters.
///
/// A rectangle is given by two opposite corners; a polygon by its vertices
/// in order (closing edge implied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRegion {
    pub kind: MaskKind,
    pub vertices: Vec<[f64; 2]>,
}

impl MaskRegion {
    pub fn rectangle(a: [f64; 2], b: [f64; 2]) -> Self {
        MaskRegion {
            kind: MaskKind::Rectangle,
            vertices: vec![a, b],
        }
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Self {
        MaskRegion {
            kind: MaskKind::Polygon,
            vertices,
        }
    }

    /// Rectangle centred on `c` with half widths `h`.
    pub fn centred(c: [f64; 2], h: [f64; 2]) -> Self {
        Self::rectangle([c[0] - h[0], c[1] - h[1]], [c[0] + h[0], c[1] + h[1]])
    }

    pub fn translated(&self, d: [f64; 2]) -> Self {
        MaskRegion {
            kind: self.kind,
            vertices: self
                .vertices
                .iter()
                .map(|v| [v[0] + d[0], v[1] + d[1]])
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        MaskRegion {
            kind: self.kind,
            vertices: self.vertices.iter().map(|v| [v[0] * s, v[1] * s]).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        if self.vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(FieldError::InvalidMask("non-finite vertex".into()));
        }
        match self.kind {
            MaskKind::Rectangle => {
                if self.vertices.len() != 2 {
                    return Err(FieldError::InvalidMask(
                        "rectangle needs exactly two corners".into(),
                    ));
                }
                let [a, b] = [self.vertices[0], self.vertices[1]];
                if a[0] == b[0] || a[1] == b[1] {
                    return Err(FieldError::InvalidMask("rectangle has zero area".into()));
                }
                Ok(())
            }
            MaskKind::Polygon => {
                let v = &self.vertices;
                if v.len() < 3 {
                    return Err(FieldError::InvalidMask(
                        "polygon needs at least three vertices".into(),
                    ));
                }
                let n = v.len();
                for a in 0..n {
                    for b in a + 1..n {
                        // skip edges sharing a vertex
                        if b == a + 1 || (a == 0 && b == n - 1) {
                            continue;
                        }
                        if segments_intersect(v[a], v[(a + 1) % n], v[b], v[(b + 1) % n]) {
                            return Err(FieldError::InvalidMask(
                                "polygon is self-intersecting".into(),
                            ));
                        }
                    }
                }
                if signed_area(v).abs() == 0.0 {
                    return Err(FieldError::InvalidMask("polygon has zero area".into()));
                }
                Ok(())
            }
        }
    }

    /// Point containment, boundary inclusive.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self.kind {
            MaskKind::Rectangle => {
                let [a, b] = [self.vertices[0], self.vertices[1]];
                let (x0, x1) = (a[0].min(b[0]), a[0].max(b[0]));
                let (y0, y1) = (a[1].min(b[1]), a[1].max(b[1]));
                let tol = 1e-9 * ((x1 - x0) + (y1 - y0));
                p[0] >= x0 - tol && p[0] <= x1 + tol && p[1] >= y0 - tol && p[1] <= y1 + tol
            }
            MaskKind::Polygon => {
                let v = &self.vertices;
                let n = v.len();
                let scale = v
                    .iter()
                    .map(|q| q[0].abs().max(q[1].abs()))
                    .fold(0.0, f64::max);
                let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
                let mut inside = false;
                for k in 0..n {
                    let a = v[k];
                    let b = v[(k + 1) % n];
                    if point_segment_distance(p, a, b) <= tol {
                        return true;
                    }
                    if (a[1] > p[1]) != (b[1] > p[1]) {
                        let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                        if p[0] < x {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|k| {
            let a = v[k];
            let b = v[(k + 1) % n];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

pub(crate) fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

pub(crate) fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * ab[0] - p[0], a[1] + t * ab[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}
