//! Analytical near-tip displacement fields and controlled noise injection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::field_io::{DisplacementField, LengthUnit};
use crate::material::{EffectiveConstants, PlaneState};
use crate::scalar::Scalar;

/// Which shear modulus scales the generated field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MuConvention {
    /// `mu = E / (2 (1 + nu))`.
    #[default]
    Standard,
    /// `mu = E' / (2 (1 + nu))` with `E' = E / (1 - nu^2)`.
    PrimedModulus,
}

/// Ground truth of a synthetic crack field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec<T> {
    /// `[K_I, K_II, K_III]`, Pa m^0.5.
    pub k: [T; 3],
    pub youngs: T,
    pub poisson: T,
    pub plane_state: PlaneState,
    pub nx: usize,
    pub ny: usize,
    pub spacing: [T; 2],
    /// Grid centre, m.
    pub centre: [T; 2],
    /// Crack tip, m.
    pub tip: [T; 2],
    /// Direction of crack extension; the faces lie along the opposite direction.
    pub crack_angle: T,
    #[serde(default)]
    pub mu_convention: MuConvention,
}

impl<T: Scalar> SyntheticSpec<T> {
    /// 51x51 nodes at 0.04 um pitch, K = (3, 1, 5) MPa m^0.5, E = 210 GPa, nu = 0.3,
    /// plane strain, tip at the grid centre (0, 0), crack along -x.
    pub fn reference_mixed_mode() -> Self {
        SyntheticSpec {
            k: [T::lit(3e6), T::lit(1e6), T::lit(5e6)],
            youngs: T::lit(210e9),
            poisson: T::lit(0.3),
            plane_state: PlaneState::PlaneStrain,
            nx: 51,
            ny: 51,
            spacing: [T::lit(4e-8), T::lit(4e-8)],
            centre: [T::zero(), T::zero()],
            tip: [T::zero(), T::zero()],
            crack_angle: T::zero(),
            mu_convention: MuConvention::Standard,
        }
    }

    pub fn with_k(mut self, k: [T; 3]) -> Self {
        self.k = k;
        self
    }

    pub fn effective(&self) -> EffectiveConstants<T> {
        EffectiveConstants::new(self.youngs, self.poisson, self.plane_state)
    }

    pub fn shear_modulus(&self) -> T {
        let nu = self.poisson;
        match self.mu_convention {
            MuConvention::Standard => self.youngs / (T::lit(2.0) * (T::one() + nu)),
            MuConvention::PrimedModulus => {
                self.youngs / (T::one() - nu * nu) / (T::lit(2.0) * (T::one() + nu))
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.nx < 3 || self.ny < 3 {
            return Err("grid needs at least 3x3 nodes".into());
        }
        if !(self.spacing[0] > T::zero() && self.spacing[1] > T::zero()) {
            return Err("spacing must be positive".into());
        }
        if !(self.youngs > T::zero()) || !(self.poisson > -T::one() && self.poisson < T::lit(0.5)) {
            return Err("invalid elastic constants".into());
        }
        if self.k.iter().chain(self.tip.iter()).any(|v| !v.is_finite())
            || !self.crack_angle.is_finite()
        {
            return Err("non-finite K, tip or angle".into());
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> SyntheticSpec<U> {
        let c = |v: T| U::lit(v.as_f64());
        SyntheticSpec {
            k: self.k.map(c),
            youngs: c(self.youngs),
            poisson: c(self.poisson),
            plane_state: self.plane_state,
            nx: self.nx,
            ny: self.ny,
            spacing: self.spacing.map(c),
            centre: self.centre.map(c),
            tip: self.tip.map(c),
            crack_angle: c(self.crack_angle),
            mu_convention: self.mu_convention,
        }
    }
}

/// Polar angle in `(-pi, pi]`; points on the negative x1 axis get `+pi`.
#[inline]
pub fn crack_polar_angle<T: Scalar>(x1: T, x2: T) -> T {
    if x2 == T::zero() && x1 < T::zero() {
        T::PI()
    } else {
        x2.atan2(x1)
    }
}

/// First-term near-tip displacement `[u1, u2, u3]` in the crack frame.
pub fn williams_displacement<T: Scalar>(k: [T; 3], mu: T, kappa: T, r: T, theta: T) -> [T; 3] {
    if r <= T::zero() {
        return [T::zero(); 3];
    }
    let half = theta * T::lit(0.5);
    let (s, c) = half.sin_cos();
    let one = T::one();
    let two = T::lit(2.0);
    let amp = (r / (two * T::PI())).sqrt() / (two * mu);
    // mode I and II columns, written with the Kolosov constant
    let u1 = k[0] * c * (kappa - one + two * s * s) + k[1] * s * (kappa + one + two * c * c);
    let u2 = k[0] * s * (kappa + one - two * c * c) - k[1] * c * (kappa - one - two * s * s);
    let u3 = k[2] * T::lit(4.0) * s;
    [amp * u1, amp * u2, amp * u3]
}

pub fn generate_williams_field<T: Scalar>(spec: &SyntheticSpec<T>) -> DisplacementField<T> {
    let mu = spec.shear_modulus();
    let kappa = spec.effective().kappa();
    let (sa, ca) = spec.crack_angle.sin_cos();
    let has_oop = spec.k[2] != T::zero();
    let mut field =
        DisplacementField::from_fn(spec.nx, spec.ny, spec.spacing, spec.centre, has_oop, |p| {
            let d = [p[0] - spec.tip[0], p[1] - spec.tip[1]];
            let x1 = ca * d[0] + sa * d[1];
            let x2 = -sa * d[0] + ca * d[1];
            let r = (x1 * x1 + x2 * x2).sqrt();
            let theta = crack_polar_angle(x1, x2);
            let local = williams_displacement(spec.k, mu, kappa, r, theta);
            [
                ca * local[0] - sa * local[1],
                sa * local[0] + ca * local[1],
                local[2],
            ]
        });
    field.source_units = LengthUnit::Meter;
    field
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Uniform with the same standard deviation.
    Uniform,
}

/// Mean displacement magnitude over unmasked nodes.
pub fn mean_magnitude<T: Scalar>(field: &DisplacementField<T>) -> T {
    let mags = field.magnitude();
    let (sum, count) = mags
        .iter()
        .zip(&field.mask)
        .filter(|(_, m)| !**m)
        .fold((T::zero(), 0usize), |(s, n), (v, _)| (s + *v, n + 1));
    if count == 0 {
        T::zero()
    } else {
        sum / T::from_usize_lossy(count)
    }
}

/// Adds zero-mean noise with standard deviation `fraction * mean(|u|)` to every
/// unmasked displacement component.
pub fn add_noise<T: Scalar>(
    field: &DisplacementField<T>,
    fraction: T,
    seed: u64,
    kind: NoiseKind,
) -> DisplacementField<T> {
    let mut out = field.clone();
    if fraction == T::zero() {
        return out;
    }
    let sigma = (fraction * mean_magnitude(field)).as_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = if field.has_out_of_plane { 3 } else { 2 };
    let sqrt3 = 3f64.sqrt();
    for (v, masked) in out.u.iter_mut().zip(&field.mask) {
        if *masked {
            continue;
        }
        for c in v.iter_mut().take(comps) {
            let z: f64 = match kind {
                NoiseKind::Gaussian => StandardNormal.sample(&mut rng),
                NoiseKind::Uniform => rand::Rng::random_range(&mut rng, -sqrt3..sqrt3),
            };
            *c += T::lit(sigma * z);
        }
    }
    out
}
