//! Result files: per-contour CSV, summary JSON and an SVG of the series.
//! Every file is written to a temporary sibling and renamed into place.

pub mod svg;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{AnalysisOptions, FractureResult};
use crate::error::{Error, Result};
use crate::field_io::{DisplacementField, LengthUnit};
use crate::fracture::{ContourRow, ContourSeries, PlateauStats};
use crate::material::{j_from_k, EffectiveConstants, MaterialFile};
use crate::mesh::CrackDefinition;
use crate::scalar::Scalar;
use crate::solver::SolutionModel;

use self::svg::{line_chart, Line, Panel};

pub const RESULTS_HEADER: &str = "contour,radius_m,J,K_I,K_II,K_II_pseudo,K_III,J_III,J_total";
pub const SUMMARY_FORMAT: &str = "crackfield-summary";

pub fn engine_id() -> String {
    format!("crackfield {}", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::Builder::new()
        .prefix(".crackfield-")
        .tempfile_in(&dir)
        .map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn cell<T: Scalar>(out: &mut String, v: Option<T>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{:e}", v.as_f64());
    }
}

pub fn results_csv<T: Scalar>(series: &ContourSeries<T>) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in &series.rows {
        let _ = write!(out, "{},{:e}", r.contour, r.radius.as_f64());
        cell(&mut out, Some(r.j));
        for v in [r.k_i, r.k_ii, r.k_ii_pseudo, r.k_iii, r.j_iii, r.j_total] {
            cell(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// Reads a results CSV written by [`results_csv`].
pub fn parse_results_csv(text: &str) -> Result<ContourSeries<f64>> {
    let bad = |line: usize, why: &str| Error::Io(format!("results line {line}: {why}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RESULTS_HEADER => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(bad(i + 1, "expected 9 fields"));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(i + 1, "not a number"))
            }
        };
        let contour = f[0].parse().map_err(|_| bad(i + 1, "bad contour index"))?;
        let mut row = ContourRow::new(
            contour,
            num(f[1])?.ok_or_else(|| bad(i + 1, "missing radius"))?,
        );
        row.j = num(f[2])?.ok_or_else(|| bad(i + 1, "missing J"))?;
        row.k_i = num(f[3])?;
        row.k_ii = num(f[4])?;
        row.k_ii_pseudo = num(f[5])?;
        row.k_iii = num(f[6])?;
        row.j_iii = num(f[7])?;
        row.j_total = num(f[8])?;
        rows.push(row);
    }
    Ok(ContourSeries { rows })
}

/// Inputs and settings that produced a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub engine: String,
    /// SHA-256 of the input file bytes.
    pub input_sha256: Option<String>,
    pub input_units: Option<LengthUnit>,
    pub material: MaterialFile,
    pub crack: CrackDefinition<f64>,
    pub options: AnalysisOptions,
    /// Rotation and crop applied before the analysis.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub preprocessing: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub nx: usize,
    pub ny: usize,
    pub spacing_m: [f64; 2],
    pub centre_m: [f64; 2],
    pub has_out_of_plane: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub out_of_flatness_m: Option<f64>,
}

impl GridInfo {
    pub fn of<T: Scalar>(field: &DisplacementField<T>) -> Self {
        GridInfo {
            nx: field.nx,
            ny: field.ny,
            spacing_m: field.spacing.map(|v| v.as_f64()),
            centre_m: field.centre.map(|v| v.as_f64()),
            has_out_of_plane: field.has_out_of_plane,
            out_of_flatness_m: field.out_of_flatness.map(|v| v.as_f64()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub format: String,
    pub version: u32,
    /// Floating point type of the computation.
    pub precision: String,
    pub provenance: Provenance,
    pub grid: GridInfo,
    pub tip_m: [f64; 2],
    pub q_angle_rad: f64,
    pub snapped_chain_m: Vec<[f64; 2]>,
    pub seam_pairs: usize,
    pub masked_nodes: usize,
    pub model: SolutionModel,
    pub iterations: usize,
    pub residual: f64,
    pub effective: EffectiveConstants<f64>,
    pub contours: usize,
    pub truncated: bool,
    pub no_plateau: bool,
    pub plateau_skip: usize,
    pub plateau: Option<PlateauStats>,
    pub plateau_candidate: Option<PlateauStats>,
    /// Closed-form J of the plateau stress intensity factors.
    pub j_from_plateau_k: Option<f64>,
    pub warnings: Vec<String>,
}

impl Summary {
    pub fn new<T: Scalar>(
        result: &FractureResult<T>,
        provenance: Provenance,
        grid: GridInfo,
    ) -> Self {
        let j_from_plateau_k = result.plateau.as_ref().and_then(|p| {
            let k_iii = p.k_iii.map(|s| s.mean).unwrap_or(0.0);
            Some(j_from_k(
                p.k_i?.mean,
                p.k_ii?.mean,
                k_iii,
                &result.effective,
            ))
        });
        Summary {
            format: SUMMARY_FORMAT.into(),
            version: 1,
            precision: T::NAME.into(),
            provenance,
            grid,
            tip_m: result.tip.map(|v| v.as_f64()),
            q_angle_rad: result.q_angle.as_f64(),
            snapped_chain_m: result.snapped_chain.clone(),
            seam_pairs: result.seam_pairs,
            masked_nodes: result.masked_nodes,
            model: result.model_used,
            iterations: result.iterations,
            residual: result.residual,
            effective: result.effective,
            contours: result.series.len(),
            truncated: result.truncated,
            no_plateau: result.no_plateau(),
            plateau_skip: result.plateau_skip,
            plateau: result.plateau.clone(),
            plateau_candidate: result.plateau_candidate.clone(),
            j_from_plateau_k,
            warnings: result.warnings.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// J and K against contour index, with the plateau band shaded.
pub fn contour_svg<T: Scalar>(
    series: &ContourSeries<T>,
    plateau: Option<&PlateauStats>,
    comment: Option<&str>,
) -> String {
    let x = |r: &ContourRow<T>| r.contour as f64;
    let col = |f: &dyn Fn(&ContourRow<T>) -> Option<T>, scale: f64| -> Vec<(f64, f64)> {
        series
            .rows
            .iter()
            .filter_map(|r| f(r).map(|v| (x(r), v.as_f64() * scale)))
            .collect()
    };
    let band = plateau.map(|p| (p.start_contour as f64 - 0.5, p.end_contour as f64 + 0.5));
    let mut jp = Panel::new("J-integral by contour", "contour", "J (J/m^2)");
    jp.band = band;
    let have = |v: &Vec<(f64, f64)>| !v.is_empty();
    for (name, pts) in [
        ("J (in-plane)", col(&|r| Some(r.j), 1.0)),
        ("J_III", col(&|r| r.j_iii, 1.0)),
        ("J_total", col(&|r| r.j_total, 1.0)),
    ] {
        if have(&pts) {
            jp.lines.push(Line::new(name, pts));
        }
    }
    let mut kp = Panel::new(
        "Stress intensity factors by contour",
        "contour",
        "K (MPa m^0.5)",
    );
    kp.band = band;
    for (name, pts) in [
        ("K_I", col(&|r| r.k_i, 1e-6)),
        ("K_II", col(&|r| r.k_ii, 1e-6)),
        ("K_III", col(&|r| r.k_iii, 1e-6)),
    ] {
        if have(&pts) {
            kp.lines.push(Line::new(name, pts));
        }
    }
    let panels = if kp.lines.is_empty() {
        vec![jp]
    } else {
        vec![jp, kp]
    };
    line_chart(&panels, comment)
}

#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    /// Comment embedded at the top of the SVG, usually a timestamp.
    pub svg_comment: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub chart: PathBuf,
}

impl ReportFiles {
    pub fn in_dir(outdir: &Path) -> Self {
        ReportFiles {
            results: outdir.join("results.csv"),
            summary: outdir.join("summary.json"),
            chart: outdir.join("contours.svg"),
        }
    }
}

pub fn emit_report<T: Scalar>(
    series: &ContourSeries<T>,
    summary: &Summary,
    outdir: &Path,
    options: &ReportOptions,
) -> Result<ReportFiles> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::Io(format!("{}: {e}", outdir.display())))?;
    let files = ReportFiles::in_dir(outdir);
    write_atomic(&files.results, results_csv(series).as_bytes())?;
    write_atomic(&files.summary, summary.to_json().as_bytes())?;
    let svg = contour_svg(
        series,
        summary.plateau.as_ref(),
        options.svg_comment.as_deref(),
    );
    write_atomic(&files.chart, svg.as_bytes())?;
    Ok(files)
}
