//! Four-node isoparametric quadrilateral with 2x2 Gauss integration.

use crate::scalar::Scalar;

const XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

/// Gauss point order: (-g,-g), (g,-g), (g,g), (-g,g).
pub fn gauss_points<T: Scalar>() -> [[T; 2]; 4] {
    let g = T::one() / T::lit(3.0).sqrt();
    [[-g, -g], [g, -g], [g, g], [-g, g]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussPoint<T> {
    pub shape: [T; 4],
    /// `dndx[0][a] = dN_a/dx`, `dndx[1][a] = dN_a/dy`.
    pub dndx: [[T; 4]; 2],
    /// Jacobian determinant times the (unit) quadrature weight.
    pub weight: T,
    pub xy: [T; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry<T> {
    pub gps: [GaussPoint<T>; 4],
}

pub fn shape_functions<T: Scalar>(xi: T, eta: T) -> ([T; 4], [[T; 4]; 2]) {
    let q = T::lit(0.25);
    let mut n = [T::zero(); 4];
    let mut d = [[T::zero(); 4]; 2];
    for a in 0..4 {
        let (xa, ea) = (T::lit(XI[a]), T::lit(ETA[a]));
        n[a] = q * (T::one() + xi * xa) * (T::one() + eta * ea);
        d[0][a] = q * xa * (T::one() + eta * ea);
        d[1][a] = q * ea * (T::one() + xi * xa);
    }
    (n, d)
}

/// Geometry at the Gauss points; `None` if the Jacobian is not positive somewhere.
pub fn element_geometry<T: Scalar>(corners: &[[T; 2]; 4]) -> Option<ElementGeometry<T>> {
    let pts = gauss_points::<T>();
    let mut gps = [GaussPoint {
        shape: [T::zero(); 4],
        dndx: [[T::zero(); 4]; 2],
        weight: T::zero(),
        xy: [T::zero(); 2],
    }; 4];
    for (g, p) in gps.iter_mut().zip(pts) {
        let (n, d) = shape_functions(p[0], p[1]);
        let mut jac = [[T::zero(); 2]; 2];
        let mut xy = [T::zero(); 2];
        for a in 0..4 {
            for r in 0..2 {
                jac[r][0] += d[r][a] * corners[a][0];
                jac[r][1] += d[r][a] * corners[a][1];
                xy[r] += n[a] * corners[a][r];
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det > T::zero()) {
            return None;
        }
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        let mut dndx = [[T::zero(); 4]; 2];
        for a in 0..4 {
            dndx[0][a] = inv[0][0] * d[0][a] + inv[0][1] * d[1][a];
            dndx[1][a] = inv[1][0] * d[0][a] + inv[1][1] * d[1][a];
        }
        *g = GaussPoint {
            shape: n,
            dndx,
            weight: det,
            xy,
        };
    }
    Some(ElementGeometry { gps })
}

/// `(exx, eyy, gxy)` from element nodal displacements.
#[inline]
pub fn strain<T: Scalar>(gp: &GaussPoint<T>, ue: &[[T; 2]; 4]) -> [T; 3] {
    let mut e = [T::zero(); 3];
    for a in 0..4 {
        let (dx, dy) = (gp.dndx[0][a], gp.dndx[1][a]);
        e[0] += dx * ue[a][0];
        e[1] += dy * ue[a][1];
        e[2] += dy * ue[a][0] + dx * ue[a][1];
    }
    e
}

/// Displacement gradient `g[i][j] = du_i/dx_j`.
#[inline]
pub fn gradient<T: Scalar>(gp: &GaussPoint<T>, ue: &[[T; 2]; 4]) -> [[T; 2]; 2] {
    let mut g = [[T::zero(); 2]; 2];
    for a in 0..4 {
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] += ue[a][i] * gp.dndx[j][a];
            }
        }
    }
    g
}

#[inline]
pub fn apply_d<T: Scalar>(d: &[[T; 3]; 3], e: &[T; 3]) -> [T; 3] {
    let mut s = [T::zero(); 3];
    for (si, row) in s.iter_mut().zip(d) {
        *si = row[0] * e[0] + row[1] * e[1] + row[2] * e[2];
    }
    s
}

/// 8x8 stiffness, DOFs ordered `(u0, v0, u1, v1, ...)`; one constitutive matrix per Gauss point.
pub fn element_stiffness<T: Scalar>(
    geom: &ElementGeometry<T>,
    d: &[[[T; 3]; 3]; 4],
) -> [[T; 8]; 8] {
    let mut k = [[T::zero(); 8]; 8];
    for (gp, dm) in geom.gps.iter().zip(d) {
        let mut b = [[T::zero(); 8]; 3];
        for a in 0..4 {
            b[0][2 * a] = gp.dndx[0][a];
            b[1][2 * a + 1] = gp.dndx[1][a];
            b[2][2 * a] = gp.dndx[1][a];
            b[2][2 * a + 1] = gp.dndx[0][a];
        }
        let mut db = [[T::zero(); 8]; 3];
        for r in 0..3 {
            for c in 0..8 {
                db[r][c] = dm[r][0] * b[0][c] + dm[r][1] * b[1][c] + dm[r][2] * b[2][c];
            }
        }
        for r in 0..8 {
            for c in 0..8 {
                let v = b[0][r] * db[0][c] + b[1][r] * db[1][c] + b[2][r] * db[2][c];
                k[r][c] += v * gp.weight;
            }
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> [[f64; 2]; 4] {
        [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]
    }

    #[test]
    fn partition_of_unity_and_area() {
        let g = element_geometry(&unit()).unwrap();
        let area: f64 = g.gps.iter().map(|p| p.weight).sum();
        assert!((area - 2.0).abs() < 1e-14);
        for p in &g.gps {
            assert!((p.shape.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(p.dndx[0].iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn inverted_element_rejected() {
        let mut c = unit();
        c.swap(1, 3);
        assert!(element_geometry(&c).is_none());
    }

    #[test]
    fn linear_field_gradient_exact() {
        let c = [[0.3, -0.1], [1.9, 0.2], [2.2, 1.4], [-0.2, 1.1]];
        let g = element_geometry(&c).unwrap();
        let f = |p: [f64; 2]| [0.5 * p[0] - 0.2 * p[1] + 1.0, 0.1 * p[0] + 0.7 * p[1]];
        let ue = c.map(f);
        for p in &g.gps {
            let gr = gradient(p, &ue);
            assert!((gr[0][0] - 0.5).abs() < 1e-13 && (gr[0][1] + 0.2).abs() < 1e-13);
            assert!((gr[1][0] - 0.1).abs() < 1e-13 && (gr[1][1] - 0.7).abs() < 1e-13);
        }
    }

    #[test]
    fn stiffness_is_symmetric_with_rigid_null_space() {
        let g = element_geometry(&unit()).unwrap();
        let d = [[1.0, 0.3, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 0.35]];
        let k = element_stiffness(&g, &[d; 4]);
        for r in 0..8 {
            for c in 0..8 {
                assert!((k[r][c] - k[c][r]).abs() < 1e-14);
            }
        }
        let c = unit();
        let modes: [[f64; 8]; 3] = [
            [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
            [
                -c[0][1], c[0][0], -c[1][1], c[1][0], -c[2][1], c[2][0], -c[3][1], c[3][0],
            ],
        ];
        for m in &modes {
            for row in &k {
                let f: f64 = row.iter().zip(m).map(|(a, b)| a * b).sum();
                assert!(f.abs() < 1e-13);
            }
        }
    }
}
