use std::path::{Path, PathBuf};

use serde_json::Value;

use crackfield::field_io::{IndexRect, LengthUnit, MaskRegion};
use crackfield::material::MaterialFile;
use crackfield::solver::SolutionModel;
use crackfield::{AnalysisOptions, Crack};

use crate::args::{Precision, RunArgs, Toggle};
use crate::error::{config, CliError};

/// Loads `--config` and lays the non-empty flags over it. Relative paths in
/// the file are taken from the file's directory.
pub fn merge(file: Option<&Path>, flags: &RunArgs) -> Result<RunArgs, CliError> {
    let Some(path) = file else {
        return Ok(flags.clone());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| config(format!("config file {}: {e}", path.display())))?;
    let mut base: RunArgs = serde_json::from_str(&text)
        .map_err(|e| config(format!("config file {}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new(""));
    for p in [&mut base.input, &mut base.material, &mut base.out]
        .into_iter()
        .flatten()
    {
        if p.is_relative() {
            *p = dir.join(&*p);
        }
    }
    let mut merged = serde_json::to_value(&base).expect("settings serialize");
    let over = serde_json::to_value(flags).expect("settings serialize");
    if let (Value::Object(m), Value::Object(o)) = (&mut merged, over) {
        m.extend(o.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(merged).map_err(|e| config(e.to_string()))
}

/// A complete, checked analysis setup in SI units.
#[derive(Debug, Clone)]
pub struct Run {
    pub input: PathBuf,
    pub units: LengthUnit,
    pub delimiter: Option<char>,
    pub crack: Crack,
    pub material: MaterialFile,
    pub options: AnalysisOptions,
    pub rotate: u32,
    pub crop: Option<IndexRect>,
    pub out: PathBuf,
    pub precision: Precision,
}

impl Run {
    /// Rotation and crop for the provenance record.
    pub fn preprocessing(&self) -> Value {
        if self.rotate.is_multiple_of(4) && self.crop.is_none() {
            return Value::Null;
        }
        serde_json::json!({ "rotate_quarter_turns": self.rotate % 4, "crop": self.crop })
    }
}

pub fn read_material(path: &Path) -> Result<MaterialFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config(format!("material file {}: {e}", path.display())))?;
    MaterialFile::from_json(&text)
        .map_err(|e| config(format!("material file {}: {e}", path.display())))
}

pub fn resolve(args: &RunArgs) -> Result<Run, CliError> {
    let input = args
        .input
        .clone()
        .ok_or_else(|| config("no input file (--input)"))?;
    let out = args
        .out
        .clone()
        .ok_or_else(|| config("no output directory (--out)"))?;
    let units = args.units.unwrap_or_default();
    let s = units.to_meters();
    let si = |p: [f64; 2]| [p[0] * s, p[1] * s];

    let polyline = match (&args.polyline, args.mouth, args.tip) {
        (Some(p), None, None) => p.0.iter().map(|&v| si(v)).collect(),
        (None, Some(m), Some(t)) => vec![si(m.0), si(t.0)],
        (Some(_), _, _) => return Err(config("give either --polyline or --mouth with --tip")),
        _ => return Err(config("the crack needs --mouth and --tip, or --polyline")),
    };
    let mask = match (&args.mask_rect, &args.mask_polygon) {
        (Some(_), Some(_)) => {
            return Err(config("give at most one of --mask-rect and --mask-polygon"))
        }
        (Some(r), None) => Some(MaskRegion::rectangle(
            si([r.0[0], r.0[1]]),
            si([r.0[2], r.0[3]]),
        )),
        (None, Some(p)) => Some(MaskRegion::polygon(p.0.iter().map(|&v| si(v)).collect())),
        (None, None) => None,
    };
    let crack = Crack {
        polyline,
        q_angle: args.q_angle_deg.map(f64::to_radians),
        mask,
    };

    let material_path = args
        .material
        .as_ref()
        .ok_or_else(|| config("no material file (--material)"))?;
    let mut material = read_material(material_path)?;
    if let Some(ps) = args.plane_state {
        material.plane_state = ps;
    }
    material
        .to_material::<f64>()
        .map_err(|e| config(format!("material file {}: {e}", material_path.display())))?;

    let mut options = AnalysisOptions::default();
    if let Some(m) = args.model {
        options.model = m;
    }
    if options.model == SolutionModel::DeformationPlasticity && material.ramberg_osgood.is_none() {
        return Err(config(
            "model ramberg-osgood needs ramberg_osgood parameters in the material file",
        ));
    }
    options.contours = args.contours;
    if let Some(v) = args.plateau_min {
        options.plateau.window_min = v;
    }
    if let Some(v) = args.plateau_tol {
        options.plateau.rel_tol = v;
    }
    if let Some(v) = args.plateau_skip {
        options.plateau.skip = v;
    }
    options.plateau.window = args.plateau_window.map(|w| (w.0[0], w.0[1]));
    options.anti_plane = match args.anti_plane {
        None | Some(Toggle::Auto) => None,
        Some(Toggle::On) => Some(true),
        Some(Toggle::Off) => Some(false),
    };

    Ok(Run {
        input,
        units,
        delimiter: args.delimiter,
        crack,
        material,
        options,
        rotate: args.rotate.unwrap_or(0),
        crop: args.crop.map(|c| IndexRect {
            i0: c.0[0],
            j0: c.0[1],
            i1: c.0[2],
            j1: c.0[3],
        }),
        out,
        precision: args.precision.unwrap_or_default(),
    })
}
