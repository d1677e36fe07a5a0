use std::io::Write;
use std::path::Path;

use super::lattice::{infer_lattice, LatticeFit};
use super::{DisplacementField, FieldError, LengthUnit};
use crate::scalar::Scalar;

/// Raw rows of a displacement file, converted to meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    /// `(x, y)` per row.
    pub xy: Vec<[f64; 2]>,
    /// Z per row, stereo data only.
    pub z: Option<Vec<f64>>,
    /// `[Ux, Uy, Uz]` per row (`Uz = 0` for 4-column data). May contain NaN.
    pub u: Vec<[f64; 3]>,
    pub units: LengthUnit,
}

impl PointCloud {
    pub fn columns(&self) -> usize {
        if self.z.is_some() {
            6
        } else {
            4
        }
    }
}

fn detect_delimiter(line: &str) -> Option<char> {
    if line.contains(',') {
        Some(',')
    } else if line.contains('\t') {
        Some('\t')
    } else {
        None
    }
}

fn split_row(line: &str, delim: Option<char>) -> Vec<&str> {
    match delim {
        Some(c) if !c.is_whitespace() => line.split(c).map(str::trim).collect(),
        Some(c) => line
            .split(c)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect(),
        None => line.split_whitespace().collect(),
    }
}

/// Parses a 4- or 6-column text table. An optional single non-numeric header row is skipped.
pub fn parse_points(
    text: &str,
    units: LengthUnit,
    delimiter: Option<char>,
) -> Result<PointCloud, FieldError> {
    let mut delim = delimiter;
    let mut delim_fixed = delimiter.is_some();
    let mut columns: Option<usize> = None;
    let mut seen_first = false;
    let scale = units.to_meters();
    let mut cloud = PointCloud {
        xy: Vec::new(),
        z: None,
        u: Vec::new(),
        units,
    };
    let mut zs = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim_start_matches('\u{feff}').trim();
        if line.is_empty() {
            continue;
        }
        if !delim_fixed {
            delim = detect_delimiter(line);
            delim_fixed = true;
        }
        let tokens = split_row(line, delim);
        let parsed: Result<Vec<f64>, _> = tokens.iter().map(|t| t.parse::<f64>()).collect();
        let first = !seen_first;
        seen_first = true;
        let values = match parsed {
            Ok(v) => v,
            Err(_) if first => {
                // header row; the delimiter is re-detected on the first data row
                if delimiter.is_none() {
                    delim_fixed = false;
                }
                continue;
            }
            Err(_) => {
                return Err(FieldError::MalformedRow {
                    line: line_no,
                    reason: "non-numeric value".into(),
                })
            }
        };
        let n = values.len();
        match columns {
            None => {
                if n != 4 && n != 6 {
                    return Err(FieldError::MalformedRow {
                        line: line_no,
                        reason: format!("expected 4 or 6 columns, found {n}"),
                    });
                }
                columns = Some(n);
            }
            Some(expected) if expected != n => {
                if n == 4 || n == 6 {
                    return Err(FieldError::MixedColumnCounts {
                        line: line_no,
                        expected,
                        found: n,
                    });
                }
                return Err(FieldError::MalformedRow {
                    line: line_no,
                    reason: format!("expected {expected} columns, found {n}"),
                });
            }
            _ => {}
        }
        if !values[0].is_finite() || !values[1].is_finite() {
            return Err(FieldError::MalformedRow {
                line: line_no,
                reason: "non-finite coordinate".into(),
            });
        }
        cloud.xy.push([values[0] * scale, values[1] * scale]);
        if n == 6 {
            zs.push(values[2] * scale);
            cloud
                .u
                .push([values[3] * scale, values[4] * scale, values[5] * scale]);
        } else {
            cloud.u.push([values[2] * scale, values[3] * scale, 0.0]);
        }
    }
    if cloud.xy.is_empty() {
        return Err(FieldError::EmptyFile);
    }
    if columns == Some(6) {
        cloud.z = Some(zs);
    }
    Ok(cloud)
}

/// Default lattice tolerance used by the loaders, as a fraction of the spacing.
pub const DEFAULT_GRID_TOLERANCE: f64 = 0.1;

pub fn load_field<T: Scalar>(
    path: &Path,
    units: LengthUnit,
    delimiter: Option<char>,
) -> Result<DisplacementField<T>, FieldError> {
    let bytes =
        std::fs::read(path).map_err(|e| FieldError::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| FieldError::Io(format!("{}: not valid UTF-8", path.display())))?;
    load_field_from_str(&text, units, delimiter)
}

pub fn load_field_from_str<T: Scalar>(
    text: &str,
    units: LengthUnit,
    delimiter: Option<char>,
) -> Result<DisplacementField<T>, FieldError> {
    let cloud = parse_points(text, units, delimiter)?;
    field_from_points(&cloud, DEFAULT_GRID_TOLERANCE)
}

/// Places a point cloud onto its lattice. Missing lattice nodes and NaN
/// displacements are auto-masked.
pub fn field_from_points<T: Scalar>(
    cloud: &PointCloud,
    tolerance: f64,
) -> Result<DisplacementField<T>, FieldError> {
    let LatticeFit { report, node_of } = infer_lattice(&cloud.xy, tolerance)?;
    let n = report.nx * report.ny;
    let mut u = vec![[T::zero(); 3]; n];
    let mut valid = vec![false; n];
    for (row, &node) in node_of.iter().enumerate() {
        let v = cloud.u[row];
        if v.iter().all(|c| c.is_finite()) {
            u[node] = [T::lit(v[0]), T::lit(v[1]), T::lit(v[2])];
            valid[node] = true;
        }
    }
    let dropped = valid.iter().filter(|v| !**v).count();
    if dropped > 0 {
        log::warn!("{dropped} lattice nodes without finite data were auto-masked");
    }
    let spacing = [T::lit(report.spacing[0]), T::lit(report.spacing[1])];
    let centre = [
        T::lit(report.origin[0] + 0.5 * (report.nx - 1) as f64 * report.spacing[0]),
        T::lit(report.origin[1] + 0.5 * (report.ny - 1) as f64 * report.spacing[1]),
    ];
    let out_of_flatness = cloud.z.as_ref().map(|z| {
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let dev = z.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        let diag = ((report.nx - 1) as f64 * report.spacing[0]).hypot((report.ny - 1) as f64 * report.spacing[1]);
        if dev > 0.02 * diag {
            log::warn!(
                "stereo data deviates from a plane by {dev:.3e} m (> 2% of the field diagonal); Z is discarded"
            );
        }
        T::lit(dev)
    });
    Ok(DisplacementField {
        nx: report.nx,
        ny: report.ny,
        spacing,
        centre,
        u,
        has_out_of_plane: cloud.z.is_some(),
        mask: valid.iter().map(|v| !v).collect(),
        valid,
        source_units: cloud.units,
        out_of_flatness,
    })
}

/// Writes the canonical CSV (meters, full round-trip precision). Nodes without
/// data are written as NaN.
pub fn write_field_csv<T: Scalar, W: Write>(
    field: &DisplacementField<T>,
    out: W,
) -> std::io::Result<()> {
    write_field_csv_in(field, LengthUnit::Meter, out)
}

/// Canonical CSV with coordinates and displacements expressed in `units`.
pub fn write_field_csv_in<T: Scalar, W: Write>(
    field: &DisplacementField<T>,
    units: LengthUnit,
    mut out: W,
) -> std::io::Result<()> {
    let scale = units.to_meters();
    if field.has_out_of_plane {
        writeln!(out, "X,Y,Z,Ux,Uy,Uz")?;
    } else {
        writeln!(out, "X,Y,Ux,Uy")?;
    }
    for n in 0..field.len() {
        let p = field.position(n);
        let (x, y) = (p[0].as_f64() / scale, p[1].as_f64() / scale);
        let v = if field.valid[n] {
            field.u[n].map(|c| c.as_f64() / scale)
        } else {
            [f64::NAN; 3]
        };
        if field.has_out_of_plane {
            writeln!(out, "{x:e},{y:e},0,{:e},{:e},{:e}", v[0], v[1], v[2])?;
        } else {
            writeln!(out, "{x:e},{y:e},{:e},{:e}", v[0], v[1])?;
        }
    }
    Ok(())
}
