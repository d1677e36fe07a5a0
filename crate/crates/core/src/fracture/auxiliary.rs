//! Unit-K near-tip fields in the crack frame, used by the interaction integral.

use crate::scalar::Scalar;

/// Displacement gradient `g[i][j] = du_i/dx_j` and stress `[[s11, s12], [s12, s22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxiliaryField<T> {
    pub gradient: [[T; 2]; 2],
    pub stress: [[T; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Opening,
    Sliding,
}

/// Field of mode `mode` with unit stress intensity at crack-frame polar position `(r, theta)`.
pub fn auxiliary_field<T: Scalar>(
    mode: Mode,
    mu: T,
    kappa: T,
    r: T,
    theta: T,
) -> AuxiliaryField<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let tau = two * T::PI();
    let (s, c) = (theta * half).sin_cos();
    let (s3, c3) = (T::lit(1.5) * theta).sin_cos();
    let (st, ct) = theta.sin_cos();

    // u = amp sqrt(r) f(theta)
    let amp = one / (two * mu * tau.sqrt());
    let (f, df) = match mode {
        Mode::Opening => (
            [
                c * (kappa - one + two * s * s),
                s * (kappa + one - two * c * c),
            ],
            [
                -half * s * (kappa - one + two * s * s) + two * s * c * c,
                half * c * (kappa + one - two * c * c) + two * s * s * c,
            ],
        ),
        Mode::Sliding => (
            [
                s * (kappa + one + two * c * c),
                -c * (kappa - one - two * s * s),
            ],
            [
                half * c * (kappa + one + two * c * c) - two * s * s * c,
                half * s * (kappa - one - two * s * s) + two * s * c * c,
            ],
        ),
    };
    let sr = r.sqrt();
    let mut gradient = [[T::zero(); 2]; 2];
    for i in 0..2 {
        let du_dr = amp * f[i] / (two * sr);
        let du_dt = amp * sr * df[i];
        gradient[i][0] = ct * du_dr - st / r * du_dt;
        gradient[i][1] = st * du_dr + ct / r * du_dt;
    }

    let pre = one / (tau * r).sqrt();
    let (s11, s22, s12) = match mode {
        Mode::Opening => (c * (one - s * s3), c * (one + s * s3), c * s * c3),
        Mode::Sliding => (-s * (two + c * c3), s * c * c3, c * (one - s * s3)),
    };
    AuxiliaryField {
        gradient,
        stress: [[pre * s11, pre * s12], [pre * s12, pre * s22]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{isotropic_plane_stiffness, EffectiveConstants, PlaneState};
    use crate::synthfield::williams_displacement;

    fn constants(ps: PlaneState) -> (f64, f64, [[f64; 3]; 3]) {
        let eff = EffectiveConstants::new(210e9, 0.3, ps);
        (
            eff.g,
            eff.kappa(),
            isotropic_plane_stiffness(210e9, 0.3, ps),
        )
    }

    // Central differences of the displacement generator, in Cartesian crack-frame coordinates.
    #[test]
    fn gradient_matches_finite_differences() {
        let (mu, kappa, _) = constants(PlaneState::PlaneStrain);
        for (mode, k) in [
            (Mode::Opening, [1.0, 0.0, 0.0]),
            (Mode::Sliding, [0.0, 1.0, 0.0]),
        ] {
            for &(r, th) in &[(1e-7, 0.4), (3e-7, 2.5), (2e-7, -1.9), (5e-8, -2.9)] {
                let aux = auxiliary_field(mode, mu, kappa, r, th);
                let (x, y) = (r * f64::cos(th), r * f64::sin(th));
                let u = |x: f64, y: f64| {
                    let t = y.atan2(x);
                    williams_displacement(k, mu, kappa, x.hypot(y), t)
                };
                let h = 1e-5 * r;
                for i in 0..2 {
                    let dx = (u(x + h, y)[i] - u(x - h, y)[i]) / (2.0 * h);
                    let dy = (u(x, y + h)[i] - u(x, y - h)[i]) / (2.0 * h);
                    let scale = aux.gradient[i][0].abs().max(aux.gradient[i][1].abs());
                    assert!(
                        (aux.gradient[i][0] - dx).abs() < 1e-6 * scale,
                        "{mode:?} {i} x"
                    );
                    assert!(
                        (aux.gradient[i][1] - dy).abs() < 1e-6 * scale,
                        "{mode:?} {i} y"
                    );
                }
            }
        }
    }

    #[test]
    fn stress_is_hookean_in_both_plane_states() {
        for ps in [PlaneState::PlaneStrain, PlaneState::PlaneStress] {
            let (mu, kappa, d) = constants(ps);
            for mode in [Mode::Opening, Mode::Sliding] {
                for &(r, th) in &[(1e-7, 0.4), (3e-7, 2.5), (2e-7, -1.9)] {
                    let aux = auxiliary_field(mode, mu, kappa, r, th);
                    let g = aux.gradient;
                    let eps = [g[0][0], g[1][1], g[0][1] + g[1][0]];
                    let s: Vec<f64> = d
                        .iter()
                        .map(|row| row[0] * eps[0] + row[1] * eps[1] + row[2] * eps[2])
                        .collect();
                    let scale = aux
                        .stress
                        .iter()
                        .flatten()
                        .fold(0.0f64, |a, v| a.max(v.abs()));
                    assert!((s[0] - aux.stress[0][0]).abs() < 1e-10 * scale);
                    assert!((s[1] - aux.stress[1][1]).abs() < 1e-10 * scale);
                    assert!((s[2] - aux.stress[0][1]).abs() < 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn crack_faces_are_traction_free() {
        let (mu, kappa, _) = constants(PlaneState::PlaneStrain);
        for mode in [Mode::Opening, Mode::Sliding] {
            for th in [std::f64::consts::PI, -std::f64::consts::PI] {
                let a = auxiliary_field(mode, mu, kappa, 1e-7, th);
                let scale = 1.0 / (2.0 * std::f64::consts::PI * 1e-7).sqrt();
                assert!(a.stress[1][1].abs() < 1e-12 * scale);
                assert!(a.stress[0][1].abs() < 1e-12 * scale);
            }
        }
    }
}
