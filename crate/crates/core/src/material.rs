//! Constitutive models: elastic stiffness for the plane problem, effective
//! isotropic constants, Ramberg–Osgood secant response and the J–K relation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("invalid material parameter: {0}")]
    InvalidParameter(String),
    #[error("stiffness is not positive definite")]
    NotPositiveDefinite,
    #[error("plane stiffness is singular")]
    SingularStiffness,
    #[error("material file: {0}")]
    Parse(String),
}

impl MaterialError {
    pub fn kind(&self) -> &'static str {
        match self {
            MaterialError::InvalidParameter(_) => "InvalidParameter",
            MaterialError::NotPositiveDefinite => "NotPositiveDefinite",
            MaterialError::SingularStiffness => "SingularStiffness",
            MaterialError::Parse(_) => "MaterialParse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlaneState {
    PlaneStress,
    #[default]
    PlaneStrain,
}

impl std::str::FromStr for PlaneState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "plane_stress" | "stress" => Ok(PlaneState::PlaneStress),
            "plane_strain" | "strain" => Ok(PlaneState::PlaneStrain),
            other => Err(format!("unknown plane state '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElasticModel {
    Isotropic,
    Cubic,
    #[serde(alias = "general-anisotropic", alias = "general_anisotropic")]
    Anisotropic,
}

/// Ramberg–Osgood hardening, `E eps = sigma + alpha sigma (sigma / sigma0)^(n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RambergOsgood<T> {
    pub sigma0: T,
    pub alpha: T,
    pub n: T,
}

impl<T: Scalar> RambergOsgood<T> {
    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.sigma0 > T::zero()) {
            return Err(MaterialError::InvalidParameter("sigma0 must be > 0".into()));
        }
        if !(self.alpha >= T::zero()) {
            return Err(MaterialError::InvalidParameter("alpha must be >= 0".into()));
        }
        if !(self.n > T::one()) {
            return Err(MaterialError::InvalidParameter("n must be > 1".into()));
        }
        Ok(())
    }

    /// Plastic part of the equivalent strain, `(alpha sigma0 / E) (sigma / sigma0)^n`.
    pub fn plastic_strain(&self, e: T, sigma_eq: T) -> T {
        self.alpha * self.sigma0 / e * (sigma_eq / self.sigma0).powf(self.n)
    }
}

/// Secant Young's modulus of the uniaxial Ramberg–Osgood curve at `sigma_eq`.
pub fn secant_modulus<T: Scalar>(ro: &RambergOsgood<T>, e: T, sigma_eq: T) -> T {
    e / (T::one() + ro.alpha * (sigma_eq / ro.sigma0).powf(ro.n - T::one()))
}

/// Secant shear modulus of the deviatoric (Hencky) response; the bulk response stays elastic.
pub fn secant_shear_modulus<T: Scalar>(ro: &RambergOsgood<T>, e: T, nu: T, sigma_eq: T) -> T {
    let g = e / (T::lit(2.0) * (T::one() + nu));
    let extra = T::lit(1.5) * ro.alpha / e * (sigma_eq / ro.sigma0).powf(ro.n - T::one());
    T::one() / (T::one() / g + T::lit(2.0) * extra)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConstants<T> {
    pub e: T,
    pub g: T,
    pub nu: T,
    /// `E / (1 - nu^2)` in plane strain, `E` in plane stress.
    pub e_star: T,
    pub plane_state: PlaneState,
}

impl<T: Scalar> EffectiveConstants<T> {
    pub fn new(e: T, nu: T, plane_state: PlaneState) -> Self {
        let g = e / (T::lit(2.0) * (T::one() + nu));
        let e_star = match plane_state {
            PlaneState::PlaneStrain => e / (T::one() - nu * nu),
            PlaneState::PlaneStress => e,
        };
        EffectiveConstants {
            e,
            g,
            nu,
            e_star,
            plane_state,
        }
    }

    /// Kolosov constant.
    pub fn kappa(&self) -> T {
        match self.plane_state {
            PlaneState::PlaneStrain => T::lit(3.0) - T::lit(4.0) * self.nu,
            PlaneState::PlaneStress => (T::lit(3.0) - self.nu) / (T::one() + self.nu),
        }
    }

    pub fn with_plane_state(&self, plane_state: PlaneState) -> Self {
        Self::new(self.e, self.nu, plane_state)
    }

    pub fn cast<U: Scalar>(&self) -> EffectiveConstants<U> {
        EffectiveConstants::new(
            U::lit(self.e.as_f64()),
            U::lit(self.nu.as_f64()),
            self.plane_state,
        )
    }
}

/// Voigt, Reuss and Hill estimates of an anisotropic stiffness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrhAverage<T> {
    pub bulk: T,
    pub g_voigt: T,
    pub g_reuss: T,
    pub g_hill: T,
    pub e: T,
    pub nu: T,
}

impl<T: Scalar> VrhAverage<T> {
    fn from_moduli(bulk: T, g_voigt: T, g_reuss: T) -> Self {
        let g = (g_voigt + g_reuss) * T::lit(0.5);
        let three_k = T::lit(3.0) * bulk;
        VrhAverage {
            bulk,
            g_voigt,
            g_reuss,
            g_hill: g,
            e: T::lit(9.0) * bulk * g / (three_k + g),
            nu: (three_k - T::lit(2.0) * g) / (T::lit(2.0) * (three_k + g)),
        }
    }

    pub fn constants(&self, plane_state: PlaneState) -> EffectiveConstants<T> {
        EffectiveConstants::new(self.e, self.nu, plane_state)
    }
}

/// Hill average of a cubic crystal.
pub fn effective_isotropic_from_cubic<T: Scalar>(
    c11: T,
    c12: T,
    c44: T,
) -> Result<VrhAverage<T>, MaterialError> {
    if !(c11 > c12) || !(c44 > T::zero()) || !(c11 + T::lit(2.0) * c12 > T::zero()) {
        return Err(MaterialError::NotPositiveDefinite);
    }
    let d = c11 - c12;
    let bulk = (c11 + T::lit(2.0) * c12) / T::lit(3.0);
    let g_voigt = (d + T::lit(3.0) * c44) / T::lit(5.0);
    let g_reuss = T::lit(5.0) * d * c44 / (T::lit(4.0) * c44 + T::lit(3.0) * d);
    Ok(VrhAverage::from_moduli(bulk, g_voigt, g_reuss))
}

/// Hill average of a general 6x6 stiffness (Voigt order 11, 22, 33, 23, 13, 12).
pub fn effective_isotropic_from_stiffness<T: Scalar>(
    c: &[[T; 6]; 6],
) -> Result<VrhAverage<T>, MaterialError> {
    let s = invert(c).ok_or(MaterialError::NotPositiveDefinite)?;
    let diag = |m: &[[T; 6]; 6], k: [usize; 3]| m[k[0]][k[0]] + m[k[1]][k[1]] + m[k[2]][k[2]];
    let off = |m: &[[T; 6]; 6]| m[0][1] + m[1][2] + m[2][0];
    let c_a = diag(c, [0, 1, 2]);
    let c_b = off(c);
    let c_c = diag(c, [3, 4, 5]);
    let s_a = diag(&s, [0, 1, 2]);
    let s_b = off(&s);
    let s_c = diag(&s, [3, 4, 5]);
    let bulk_v = (c_a + T::lit(2.0) * c_b) / T::lit(9.0);
    let g_voigt = (c_a - c_b + T::lit(3.0) * c_c) / T::lit(15.0);
    let bulk_r = T::one() / (s_a + T::lit(2.0) * s_b);
    let g_reuss = T::lit(15.0) / (T::lit(4.0) * s_a - T::lit(4.0) * s_b + T::lit(3.0) * s_c);
    if !(bulk_r > T::zero()) || !(g_reuss > T::zero()) {
        return Err(MaterialError::NotPositiveDefinite);
    }
    Ok(VrhAverage::from_moduli(
        (bulk_v + bulk_r) * T::lit(0.5),
        g_voigt,
        g_reuss,
    ))
}

/// Isotropic 6x6 stiffness in Voigt notation.
pub fn isotropic_stiffness<T: Scalar>(e: T, nu: T) -> [[T; 6]; 6] {
    let two = T::lit(2.0);
    let lambda = e * nu / ((T::one() + nu) * (T::one() - two * nu));
    let mu = e / (two * (T::one() + nu));
    let mut c = [[T::zero(); 6]; 6];
    for a in 0..3 {
        for b in 0..3 {
            c[a][b] = lambda;
        }
        c[a][a] = lambda + two * mu;
        c[a + 3][a + 3] = mu;
    }
    c
}

pub fn cubic_stiffness<T: Scalar>(c11: T, c12: T, c44: T) -> [[T; 6]; 6] {
    let mut c = [[T::zero(); 6]; 6];
    for a in 0..3 {
        for b in 0..3 {
            c[a][b] = c12;
        }
        c[a][a] = c11;
        c[a + 3][a + 3] = c44;
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material<T> {
    pub model: ElasticModel,
    /// Young's modulus; the Hill estimate for anisotropic input unless given explicitly.
    pub e: T,
    pub nu: T,
    /// Full stiffness (Voigt order 11, 22, 33, 23, 13, 12) for cubic/anisotropic models.
    pub stiffness: Option<[[T; 6]; 6]>,
    pub ramberg_osgood: Option<RambergOsgood<T>>,
    pub plane_state: PlaneState,
}

impl<T: Scalar> Material<T> {
    pub fn isotropic(e: T, nu: T, plane_state: PlaneState) -> Result<Self, MaterialError> {
        let m = Material {
            model: ElasticModel::Isotropic,
            e,
            nu,
            stiffness: None,
            ramberg_osgood: None,
            plane_state,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn cubic(c11: T, c12: T, c44: T, plane_state: PlaneState) -> Result<Self, MaterialError> {
        let avg = effective_isotropic_from_cubic(c11, c12, c44)?;
        let m = Material {
            model: ElasticModel::Cubic,
            e: avg.e,
            nu: avg.nu,
            stiffness: Some(cubic_stiffness(c11, c12, c44)),
            ramberg_osgood: None,
            plane_state,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn anisotropic(c: [[T; 6]; 6], plane_state: PlaneState) -> Result<Self, MaterialError> {
        check_spd(&c)?;
        let avg = effective_isotropic_from_stiffness(&c)?;
        let m = Material {
            model: ElasticModel::Anisotropic,
            e: avg.e,
            nu: avg.nu,
            stiffness: Some(c),
            ramberg_osgood: None,
            plane_state,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_ramberg_osgood(mut self, ro: RambergOsgood<T>) -> Result<Self, MaterialError> {
        ro.validate()?;
        if self.model != ElasticModel::Isotropic {
            return Err(MaterialError::InvalidParameter(
                "Ramberg-Osgood hardening requires an isotropic elastic model".into(),
            ));
        }
        self.ramberg_osgood = Some(ro);
        Ok(self)
    }

    pub fn with_plane_state(&self, plane_state: PlaneState) -> Self {
        Material {
            plane_state,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        if !(self.e > T::zero()) || !self.e.is_finite() {
            return Err(MaterialError::InvalidParameter("E must be > 0".into()));
        }
        if !(self.nu > -T::one() && self.nu < T::lit(0.5)) {
            return Err(MaterialError::InvalidParameter(
                "Poisson's ratio must lie in (-1, 0.5)".into(),
            ));
        }
        if let Some(c) = &self.stiffness {
            check_spd(c)?;
            if self.model == ElasticModel::Cubic {
                let (c11, c12, c44) = (c[0][0], c[0][1], c[3][3]);
                if !(c11 > c12) || !(c44 > T::zero()) {
                    return Err(MaterialError::NotPositiveDefinite);
                }
            }
        } else if self.model != ElasticModel::Isotropic {
            return Err(MaterialError::InvalidParameter(
                "anisotropic model needs a stiffness matrix".into(),
            ));
        }
        if let Some(ro) = &self.ramberg_osgood {
            ro.validate()?;
        }
        Ok(())
    }

    pub fn effective(&self) -> EffectiveConstants<T> {
        EffectiveConstants::new(self.e, self.nu, self.plane_state)
    }

    pub fn is_isotropic(&self) -> bool {
        self.model == ElasticModel::Isotropic
    }

    pub fn cast<U: Scalar>(&self) -> Material<U> {
        let c = |v: T| U::lit(v.as_f64());
        Material {
            model: self.model,
            e: c(self.e),
            nu: c(self.nu),
            stiffness: self.stiffness.map(|m| m.map(|row| row.map(c))),
            ramberg_osgood: self.ramberg_osgood.map(|r| RambergOsgood {
                sigma0: c(r.sigma0),
                alpha: c(r.alpha),
                n: c(r.n),
            }),
            plane_state: self.plane_state,
        }
    }
}

/// 3x3 matrix relating `(exx, eyy, gxy)` to `(sxx, syy, sxy)`.
pub fn plane_stiffness<T: Scalar>(material: &Material<T>) -> Result<[[T; 3]; 3], MaterialError> {
    match &material.stiffness {
        None => Ok(isotropic_plane_stiffness(
            material.e,
            material.nu,
            material.plane_state,
        )),
        Some(c) => condensed_plane_stiffness(c, material.plane_state),
    }
}

pub fn isotropic_plane_stiffness<T: Scalar>(e: T, nu: T, plane_state: PlaneState) -> [[T; 3]; 3] {
    let one = T::one();
    let two = T::lit(2.0);
    let g = e / (two * (one + nu));
    let z = T::zero();
    match plane_state {
        PlaneState::PlaneStress => {
            let f = e / (one - nu * nu);
            [[f, nu * f, z], [nu * f, f, z], [z, z, g]]
        }
        PlaneState::PlaneStrain => {
            let lambda = e * nu / ((one + nu) * (one - two * nu));
            [
                [lambda + two * g, lambda, z],
                [lambda, lambda + two * g, z],
                [z, z, g],
            ]
        }
    }
}

/// Plane stiffness from bulk and shear moduli (used by the secant iteration).
pub fn plane_stiffness_from_moduli<T: Scalar>(
    bulk: T,
    shear: T,
    plane_state: PlaneState,
) -> [[T; 3]; 3] {
    let two = T::lit(2.0);
    let z = T::zero();
    match plane_state {
        PlaneState::PlaneStrain => {
            let lambda = bulk - two * shear / T::lit(3.0);
            [
                [lambda + two * shear, lambda, z],
                [lambda, lambda + two * shear, z],
                [z, z, shear],
            ]
        }
        PlaneState::PlaneStress => {
            let three_k = T::lit(3.0) * bulk;
            let e = T::lit(9.0) * bulk * shear / (three_k + shear);
            let nu = (three_k - two * shear) / (two * (three_k + shear));
            isotropic_plane_stiffness(e, nu, PlaneState::PlaneStress)
        }
    }
}

const PLANE: [usize; 3] = [0, 1, 5];

fn condensed_plane_stiffness<T: Scalar>(
    c: &[[T; 6]; 6],
    plane_state: PlaneState,
) -> Result<[[T; 3]; 3], MaterialError> {
    let pick = |m: &[[T; 6]; 6]| {
        let mut out = [[T::zero(); 3]; 3];
        for (a, &ia) in PLANE.iter().enumerate() {
            for (b, &ib) in PLANE.iter().enumerate() {
                out[a][b] = m[ia][ib];
            }
        }
        out
    };
    match plane_state {
        PlaneState::PlaneStrain => Ok(pick(c)),
        PlaneState::PlaneStress => {
            let s = invert(c).ok_or(MaterialError::SingularStiffness)?;
            invert(&pick(&s)).ok_or(MaterialError::SingularStiffness)
        }
    }
}

/// Gauss–Jordan inverse with partial pivoting.
pub(crate) fn invert<T: Scalar, const N: usize>(m: &[[T; N]; N]) -> Option<[[T; N]; N]> {
    let mut a = *m;
    let mut inv = [[T::zero(); N]; N];
    for (k, row) in inv.iter_mut().enumerate() {
        row[k] = T::one();
    }
    let scale = m
        .iter()
        .flatten()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    if !(scale > T::zero()) {
        return None;
    }
    for col in 0..N {
        let piv =
            (col..N).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())?;
        if a[piv][col].abs() <= scale * T::epsilon() * T::lit(16.0) {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for k in 0..N {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for r in 0..N {
            if r != col {
                let f = a[r][col];
                if f != T::zero() {
                    for k in 0..N {
                        let ak = a[col][k];
                        let ik = inv[col][k];
                        a[r][k] -= f * ak;
                        inv[r][k] -= f * ik;
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Symmetric positive definiteness via Cholesky.
pub(crate) fn check_spd<T: Scalar, const N: usize>(c: &[[T; N]; N]) -> Result<(), MaterialError> {
    let scale = c
        .iter()
        .flatten()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    for a in 0..N {
        for b in 0..a {
            if (c[a][b] - c[b][a]).abs() > scale * T::lit(1e-9) {
                return Err(MaterialError::NotPositiveDefinite);
            }
        }
    }
    let mut l = [[T::zero(); N]; N];
    for j in 0..N {
        let mut d = c[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > scale * T::epsilon()) {
            return Err(MaterialError::NotPositiveDefinite);
        }
        l[j][j] = d.sqrt();
        for i in j + 1..N {
            let mut s = c[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / l[j][j];
        }
    }
    Ok(())
}

/// Energy release rate of a mixed-mode crack under small-scale yielding.
pub fn j_from_k<T: Scalar>(k_i: T, k_ii: T, k_iii: T, eff: &EffectiveConstants<T>) -> T {
    (k_i * k_i + k_ii * k_ii) / eff.e_star + k_iii * k_iii / (T::lit(2.0) * eff.g)
}

/// On-disk material description (SI units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialFile {
    pub model: ElasticModel,
    #[serde(rename = "E", default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default)]
    pub plane_state: PlaneState,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramberg_osgood: Option<RambergOsgood<f64>>,
}

impl MaterialFile {
    pub fn from_json(text: &str) -> Result<Self, MaterialError> {
        serde_json::from_str(text).map_err(|e| MaterialError::Parse(e.to_string()))
    }

    pub fn from_material(m: &Material<f64>) -> Self {
        MaterialFile {
            model: m.model,
            e: Some(m.e),
            nu: Some(m.nu),
            plane_state: m.plane_state,
            c: m.stiffness.map(|c| c.iter().flatten().copied().collect()),
            ramberg_osgood: m.ramberg_osgood,
        }
    }

    pub fn to_material<T: Scalar>(&self) -> Result<Material<T>, MaterialError> {
        let stiffness = match &self.c {
            None => None,
            Some(v) if v.len() == 36 => {
                let mut c = [[T::zero(); 6]; 6];
                for (k, x) in v.iter().enumerate() {
                    c[k / 6][k % 6] = T::lit(*x);
                }
                Some(c)
            }
            Some(v) => {
                return Err(MaterialError::Parse(format!(
                    "C must hold 36 numbers, found {}",
                    v.len()
                )))
            }
        };
        let mut m = match self.model {
            ElasticModel::Isotropic => {
                let (e, nu) = self.e.zip(self.nu).ok_or_else(|| {
                    MaterialError::Parse("isotropic material needs E and nu".into())
                })?;
                Material::isotropic(T::lit(e), T::lit(nu), self.plane_state)?
            }
            ElasticModel::Cubic => {
                let c = stiffness
                    .ok_or_else(|| MaterialError::Parse("cubic material needs C".into()))?;
                let mut m = Material::cubic(c[0][0], c[0][1], c[3][3], self.plane_state)?;
                m.stiffness = Some(c);
                m
            }
            ElasticModel::Anisotropic => {
                let c = stiffness
                    .ok_or_else(|| MaterialError::Parse("anisotropic material needs C".into()))?;
                Material::anisotropic(c, self.plane_state)?
            }
        };
        // explicit constants take precedence over the Hill estimate
        if self.model != ElasticModel::Isotropic {
            if let Some(e) = self.e {
                m.e = T::lit(e);
            }
            if let Some(nu) = self.nu {
                m.nu = T::lit(nu);
            }
        }
        if let Some(ro) = self.ramberg_osgood {
            m = m.with_ramberg_osgood(RambergOsgood {
                sigma0: T::lit(ro.sigma0),
                alpha: T::lit(ro.alpha),
                n: T::lit(ro.n),
            })?;
        }
        m.validate()?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zener_one_reproduces_isotropic() {
        let (e, nu) = (210e9_f64, 0.3);
        let c = isotropic_stiffness(e, nu);
        let avg = effective_isotropic_from_cubic(c[0][0], c[0][1], c[3][3]).unwrap();
        assert_relative_eq!(avg.g_voigt, avg.g_reuss, max_relative = 1e-14);
        assert_relative_eq!(avg.e, e, max_relative = 1e-13);
        assert_relative_eq!(avg.nu, nu, max_relative = 1e-13);
    }

    #[test]
    fn aluminium_hill_average() {
        // reference evaluated independently in Python: K = 229/3, G_V = 26, G_R = 25.76
        let avg = effective_isotropic_from_cubic(107e9_f64, 61e9, 28e9).unwrap();
        assert_relative_eq!(avg.bulk, 229e9 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(avg.g_voigt, 26e9, max_relative = 1e-14);
        assert_relative_eq!(avg.g_reuss, 25.76e9, max_relative = 1e-14);
        assert_relative_eq!(avg.e, 69.756_591_337_099_82e9, max_relative = 1e-10);
        assert_relative_eq!(avg.nu, 0.347_693_032_015_065_96, max_relative = 1e-10);
        assert!((avg.e / 1e9 - 69.7).abs() < 0.1);
        assert!((avg.nu - 0.348).abs() < 5e-4);
    }

    #[test]
    fn general_vrh_matches_cubic_route() {
        let c = cubic_stiffness(107e9_f64, 61e9, 28e9);
        let a = effective_isotropic_from_stiffness(&c).unwrap();
        let b = effective_isotropic_from_cubic(107e9_f64, 61e9, 28e9).unwrap();
        assert_relative_eq!(a.e, b.e, max_relative = 1e-12);
        assert_relative_eq!(a.nu, b.nu, max_relative = 1e-12);
    }

    #[test]
    fn cubic_rejects_degenerate() {
        assert_eq!(
            effective_isotropic_from_cubic(100.0_f64, 100.0, 30.0).unwrap_err(),
            MaterialError::NotPositiveDefinite
        );
    }

    #[test]
    fn plane_stress_d11() {
        let m = Material::isotropic(210e9_f64, 0.3, PlaneState::PlaneStress).unwrap();
        let d = plane_stiffness(&m).unwrap();
        assert_relative_eq!(d[0][0], 230.769_230_769_230_77e9, max_relative = 1e-14);
        assert_relative_eq!(
            d[0][1],
            0.3 * 230.769_230_769_230_77e9,
            max_relative = 1e-14
        );
        assert_relative_eq!(d[2][2], 210e9 / 2.6, max_relative = 1e-14);
    }

    #[test]
    fn zero_poisson_decouples() {
        for ps in [PlaneState::PlaneStress, PlaneState::PlaneStrain] {
            let d = plane_stiffness(&Material::isotropic(5.0_f64, 0.0, ps).unwrap()).unwrap();
            assert_eq!(d[0][1], 0.0);
            assert_relative_eq!(d[0][0], 5.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn anisotropic_branch_matches_isotropic() {
        for ps in [PlaneState::PlaneStress, PlaneState::PlaneStrain] {
            let iso = Material::isotropic(210e9_f64, 0.3, ps).unwrap();
            let ani = Material::anisotropic(isotropic_stiffness(210e9, 0.3), ps).unwrap();
            let a = plane_stiffness(&iso).unwrap();
            let b = plane_stiffness(&ani).unwrap();
            for r in 0..3 {
                for c in 0..3 {
                    assert!(
                        (a[r][c] - b[r][c]).abs() <= 1e-12 * a[0][0],
                        "{ps:?} {r}{c}"
                    );
                }
            }
        }
    }

    #[test]
    fn moduli_route_matches_isotropic() {
        let (e, nu) = (70e9_f64, 0.33);
        let k = e / (3.0 * (1.0 - 2.0 * nu));
        let g = e / (2.0 * (1.0 + nu));
        for ps in [PlaneState::PlaneStress, PlaneState::PlaneStrain] {
            let a = isotropic_plane_stiffness(e, nu, ps);
            let b = plane_stiffness_from_moduli(k, g, ps);
            for r in 0..3 {
                for c in 0..3 {
                    assert!((a[r][c] - b[r][c]).abs() <= 1e-12 * a[0][0]);
                }
            }
        }
    }

    #[test]
    fn secant_limits() {
        let ro = RambergOsgood {
            sigma0: 193e6_f64,
            alpha: 0.6,
            n: 8.87,
        };
        let e = 70e9;
        assert_eq!(secant_modulus(&ro, e, 0.0), e);
        assert_relative_eq!(secant_modulus(&ro, e, 193e6), e / 1.6, max_relative = 1e-15);
        let lin = RambergOsgood { alpha: 0.0, ..ro };
        assert_eq!(secant_modulus(&lin, e, 5e8), e);
        assert!(secant_modulus(&ro, e, 2e8) < secant_modulus(&ro, e, 1e8));
    }

    #[test]
    fn secant_shear_reproduces_uniaxial_curve() {
        // uniaxial stress s: eps = s/(9K) + s/(3 G_sec) must equal the RO strain
        let ro = RambergOsgood {
            sigma0: 193e6_f64,
            alpha: 0.6,
            n: 8.87,
        };
        let (e, nu) = (70e9, 0.33);
        let k = e / (3.0 * (1.0 - 2.0 * nu));
        for s in [1e7, 1.5e8, 3e8] {
            let gs = secant_shear_modulus(&ro, e, nu, s);
            let eps = s / (9.0 * k) + s / (3.0 * gs);
            let ro_eps = (s + ro.alpha * s * (s / ro.sigma0).powf(ro.n - 1.0)) / e;
            assert_relative_eq!(eps, ro_eps, max_relative = 1e-12);
        }
    }

    #[test]
    fn j_from_k_values() {
        let eff = EffectiveConstants::new(210e9_f64, 0.3, PlaneState::PlaneStrain);
        // (9 + 1) / 230769.23 + 25 / 161538.46 in MPa m
        let j = j_from_k(3e6, 1e6, 5e6, &eff);
        assert_relative_eq!(
            j,
            10e12 * 0.91 / 210e9 + 25e12 / (2.0 * 210e9 / 2.6),
            max_relative = 1e-14
        );
        assert!((j - 198.1).abs() < 0.05);
        assert!((j_from_k(3e6, 0.0, 0.0, &eff) - 39.0).abs() < 0.01);
        assert_eq!(j_from_k(0.0, 0.0, 0.0, &eff), 0.0);
    }

    #[test]
    fn material_file_roundtrip() {
        let text = r#"{"model":"isotropic","E":2.1e11,"nu":0.3,"plane_state":"plane_strain",
            "ramberg_osgood":{"sigma0":1.93e8,"alpha":0.6,"n":8.87}}"#;
        let m: Material<f64> = MaterialFile::from_json(text)
            .unwrap()
            .to_material()
            .unwrap();
        assert_eq!(m.e, 2.1e11);
        assert!(m.ramberg_osgood.is_some());
        let again: Material<f64> = MaterialFile::from_material(&m).to_material().unwrap();
        assert_eq!(again, m);

        let cubic = r#"{"model":"cubic","plane_state":"plane_stress","C":[
            107e9,61e9,61e9,0,0,0, 61e9,107e9,61e9,0,0,0, 61e9,61e9,107e9,0,0,0,
            0,0,0,28e9,0,0, 0,0,0,0,28e9,0, 0,0,0,0,0,28e9]}"#;
        let m: Material<f64> = MaterialFile::from_json(cubic)
            .unwrap()
            .to_material()
            .unwrap();
        assert_eq!(m.model, ElasticModel::Cubic);
        assert!((m.e / 1e9 - 69.76).abs() < 0.01);
        assert!(MaterialFile::from_json(r#"{"model":"isotropic","E":1}"#)
            .unwrap()
            .to_material::<f64>()
            .is_err());
    }
}
