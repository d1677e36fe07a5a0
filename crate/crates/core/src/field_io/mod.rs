//! Ingestion and manipulation of gridded displacement measurements.
//!
//! Every field lives on a regular lattice. Nodes are stored row-major with
//! index `i + j * nx`, `i` running along +X. Coordinates are in meters
//! regardless of the units the data arrived in.

mod csv;
mod lattice;
mod region;

pub use self::csv::{
    field_from_points, load_field, load_field_from_str, parse_points, write_field_csv,
    write_field_csv_in, PointCloud, DEFAULT_GRID_TOLERANCE,
};
pub use self::lattice::validate_grid;
pub(crate) use self::region::point_segment_distance;
pub use self::region::{MaskKind, MaskRegion};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("no data rows found")]
    EmptyFile,
    #[error("line {line}: expected {expected} columns, found {found}")]
    MixedColumnCounts {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("points deviate from the inferred lattice by {max_deviation:.3} of the spacing (tolerance {tolerance})")]
    IrregularGrid { max_deviation: f64, tolerance: f64 },
    #[error("points span a single row or column")]
    DegenerateGrid,
    #[error("two points map to lattice node ({i}, {j})")]
    DuplicatePoints { i: usize, j: usize },
    #[error("crop keeps {nx}x{ny} nodes, at least 3x3 required")]
    CropTooSmall { nx: usize, ny: usize },
    #[error("crop rectangle exceeds the {nx}x{ny} grid")]
    CropOutOfBounds { nx: usize, ny: usize },
    #[error("mask leaves no constrained node")]
    MaskCoversAllNodes,
    #[error("invalid mask region: {0}")]
    InvalidMask(String),
    #[error("{0}")]
    Io(String),
}

impl FieldError {
    pub fn kind(&self) -> &'static str {
        match self {
            FieldError::MalformedRow { .. } => "MalformedRow",
            FieldError::EmptyFile => "EmptyFile",
            FieldError::MixedColumnCounts { .. } => "MixedColumnCounts",
            FieldError::IrregularGrid { .. } => "IrregularGrid",
            FieldError::DegenerateGrid => "DegenerateGrid",
            FieldError::DuplicatePoints { .. } => "DuplicatePoints",
            FieldError::CropTooSmall { .. } => "CropTooSmall",
            FieldError::CropOutOfBounds { .. } => "CropOutOfBounds",
            FieldError::MaskCoversAllNodes => "MaskCoversAllNodes",
            FieldError::InvalidMask(_) => "InvalidMask",
            FieldError::Io(_) => "IoError",
        }
    }
}

/// Length unit of the source data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LengthUnit {
    #[default]
    #[serde(rename = "m")]
    Meter,
    #[serde(rename = "mm")]
    Millimeter,
    #[serde(rename = "um")]
    Micrometer,
}

impl LengthUnit {
    pub fn to_meters(self) -> f64 {
        match self {
            LengthUnit::Meter => 1.0,
            LengthUnit::Millimeter => 1e-3,
            LengthUnit::Micrometer => 1e-6,
        }
    }
}

impl std::str::FromStr for LengthUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "meter" | "meters" | "metre" | "metres" => Ok(LengthUnit::Meter),
            "mm" | "millimeter" | "millimetre" | "millimeters" | "millimetres" => {
                Ok(LengthUnit::Millimeter)
            }
            "um" | "µm" | "micron" | "microns" | "micrometer" | "micrometre" | "micrometers"
            | "micrometres" => Ok(LengthUnit::Micrometer),
            other => Err(format!(
                "unknown length unit '{other}' (expected m, mm or um)"
            )),
        }
    }
}

impl std::fmt::Display for LengthUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LengthUnit::Meter => "m",
            LengthUnit::Millimeter => "mm",
            LengthUnit::Micrometer => "um",
        })
    }
}

/// Lattice inferred from a point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub nx: usize,
    pub ny: usize,
    pub spacing: [f64; 2],
    pub origin: [f64; 2],
    /// Largest distance of a point from its lattice node, as a fraction of the spacing.
    pub max_deviation: f64,
    /// Lattice nodes with no measurement; they are auto-masked on load.
    pub missing_nodes: usize,
}

/// Regular grid of displacement vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField<T> {
    pub nx: usize,
    pub ny: usize,
    pub spacing: [T; 2],
    /// Centre of the lattice; rotations keep it fixed.
    pub centre: [T; 2],
    /// `[Ux, Uy, Uz]` per node; `Uz` is zero for in-plane data.
    pub u: Vec<[T; 3]>,
    pub has_out_of_plane: bool,
    /// True where the node must not act as a boundary condition.
    pub mask: Vec<bool>,
    /// False where the source had no finite measurement (NaN or missing row).
    pub valid: Vec<bool>,
    pub source_units: LengthUnit,
    /// Max |Z - mean(Z)| of stereo data, meters.
    pub out_of_flatness: Option<T>,
}

impl<T: Scalar> DisplacementField<T> {
    /// Builds an unmasked field centred at `centre`.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        spacing: [T; 2],
        centre: [T; 2],
        has_out_of_plane: bool,
        mut f: impl FnMut([T; 2]) -> [T; 3],
    ) -> Self {
        let mut field = DisplacementField {
            nx,
            ny,
            spacing,
            centre,
            u: Vec::with_capacity(nx * ny),
            has_out_of_plane,
            mask: vec![false; nx * ny],
            valid: vec![true; nx * ny],
            source_units: LengthUnit::Meter,
            out_of_flatness: None,
        };
        for n in 0..nx * ny {
            let p = field.position(n);
            let mut v = f(p);
            if !has_out_of_plane {
                v[2] = T::zero();
            }
            field.u.push(v);
        }
        field
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.nx
    }

    #[inline]
    pub fn ij(&self, n: usize) -> (usize, usize) {
        (n % self.nx, n / self.nx)
    }

    /// Coordinates of lattice node `(i, j)`.
    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> [T; 2] {
        let half = T::lit(0.5);
        let ci = T::from_usize_lossy(i) - T::from_usize_lossy(self.nx - 1) * half;
        let cj = T::from_usize_lossy(j) - T::from_usize_lossy(self.ny - 1) * half;
        [
            self.centre[0] + ci * self.spacing[0],
            self.centre[1] + cj * self.spacing[1],
        ]
    }

    #[inline]
    pub fn position(&self, n: usize) -> [T; 2] {
        let (i, j) = self.ij(n);
        self.coords(i, j)
    }

    /// Lower-left lattice corner.
    pub fn origin(&self) -> [T; 2] {
        self.coords(0, 0)
    }

    pub fn extent(&self) -> [T; 2] {
        [
            T::from_usize_lossy(self.nx - 1) * self.spacing[0],
            T::from_usize_lossy(self.ny - 1) * self.spacing[1],
        ]
    }

    pub fn diagonal(&self) -> T {
        let e = self.extent();
        (e[0] * e[0] + e[1] * e[1]).sqrt()
    }

    /// Fractional lattice coordinates of a point.
    pub fn lattice_coords(&self, p: [T; 2]) -> [T; 2] {
        let o = self.origin();
        [
            (p[0] - o[0]) / self.spacing[0],
            (p[1] - o[1]) / self.spacing[1],
        ]
    }

    /// Per-node displacement magnitude.
    pub fn magnitude(&self) -> Vec<T> {
        self.u
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .collect()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> DisplacementField<U> {
        let c = |v: T| U::lit(v.as_f64());
        DisplacementField {
            nx: self.nx,
            ny: self.ny,
            spacing: [c(self.spacing[0]), c(self.spacing[1])],
            centre: [c(self.centre[0]), c(self.centre[1])],
            u: self.u.iter().map(|v| [c(v[0]), c(v[1]), c(v[2])]).collect(),
            has_out_of_plane: self.has_out_of_plane,
            mask: self.mask.clone(),
            valid: self.valid.clone(),
            source_units: self.source_units,
            out_of_flatness: self.out_of_flatness.map(c),
        }
    }

    /// Multiplies every displacement component by `s`.
    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.u {
            for c in v.iter_mut() {
                *c *= s;
            }
        }
        out
    }
}

/// Inclusive index rectangle used for cropping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRect {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

/// Crops (in the original indexing) and then rotates by `rotation` counter-clockwise
/// quarter turns about the grid centre.
pub fn transform_field<T: Scalar>(
    field: &DisplacementField<T>,
    rotation: u32,
    crop: Option<IndexRect>,
) -> Result<DisplacementField<T>, FieldError> {
    let mut out = match crop {
        Some(rect) => crop_field(field, rect)?,
        None => field.clone(),
    };
    for _ in 0..rotation % 4 {
        out = quarter_turn(&out);
    }
    Ok(out)
}

fn crop_field<T: Scalar>(
    field: &DisplacementField<T>,
    rect: IndexRect,
) -> Result<DisplacementField<T>, FieldError> {
    if rect.i0 > rect.i1 || rect.j0 > rect.j1 || rect.i1 >= field.nx || rect.j1 >= field.ny {
        return Err(FieldError::CropOutOfBounds {
            nx: field.nx,
            ny: field.ny,
        });
    }
    let nx = rect.i1 - rect.i0 + 1;
    let ny = rect.j1 - rect.j0 + 1;
    if nx < 3 || ny < 3 {
        return Err(FieldError::CropTooSmall { nx, ny });
    }
    let lo = field.coords(rect.i0, rect.j0);
    let hi = field.coords(rect.i1, rect.j1);
    let half = T::lit(0.5);
    let mut out = DisplacementField {
        nx,
        ny,
        spacing: field.spacing,
        centre: [(lo[0] + hi[0]) * half, (lo[1] + hi[1]) * half],
        u: Vec::with_capacity(nx * ny),
        has_out_of_plane: field.has_out_of_plane,
        mask: Vec::with_capacity(nx * ny),
        valid: Vec::with_capacity(nx * ny),
        source_units: field.source_units,
        out_of_flatness: field.out_of_flatness,
    };
    for j in rect.j0..=rect.j1 {
        for i in rect.i0..=rect.i1 {
            let n = field.index(i, j);
            out.u.push(field.u[n]);
            out.mask.push(field.mask[n]);
            out.valid.push(field.valid[n]);
        }
    }
    Ok(out)
}

// (x, y) -> (-y, x) about the centre; (Ux, Uy) -> (-Uy, Ux).
fn quarter_turn<T: Scalar>(field: &DisplacementField<T>) -> DisplacementField<T> {
    let (nx, ny) = (field.ny, field.nx);
    let mut u = vec![[T::zero(); 3]; nx * ny];
    let mut mask = vec![false; nx * ny];
    let mut valid = vec![true; nx * ny];
    for j in 0..field.ny {
        for i in 0..field.nx {
            let old = field.index(i, j);
            let new = (field.ny - 1 - j) + i * nx;
            let v = field.u[old];
            u[new] = [-v[1], v[0], v[2]];
            mask[new] = field.mask[old];
            valid[new] = field.valid[old];
        }
    }
    DisplacementField {
        nx,
        ny,
        spacing: [field.spacing[1], field.spacing[0]],
        centre: field.centre,
        u,
        has_out_of_plane: field.has_out_of_plane,
        mask,
        valid,
        source_units: field.source_units,
        out_of_flatness: field.out_of_flatness,
    }
}

/// Result of [`apply_mask`].
#[derive(Debug, Clone)]
pub struct Masked<T> {
    pub field: DisplacementField<T>,
    /// Nodes inside the region, including ones that were already masked.
    pub nodes_in_region: usize,
}

/// Flags every node inside `region` (boundary inclusive) as excluded from the
/// boundary conditions. Displacements are kept.
pub fn apply_mask<T: Scalar>(
    field: &DisplacementField<T>,
    region: &MaskRegion,
) -> Result<Masked<T>, FieldError> {
    region.validate()?;
    let mut out = field.clone();
    let mut inside = 0;
    for n in 0..field.len() {
        let p = field.position(n);
        if region.contains([p[0].as_f64(), p[1].as_f64()]) {
            out.mask[n] = true;
            inside += 1;
        }
    }
    if inside == 0 {
        log::warn!("mask region covers no grid node; field left unchanged");
        return Ok(Masked {
            field: field.clone(),
            nodes_in_region: 0,
        });
    }
    if out.mask.iter().all(|&m| m) {
        return Err(FieldError::MaskCoversAllNodes);
    }
    Ok(Masked {
        field: out,
        nodes_in_region: inside,
    })
}
