use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crackfield::field_io::LengthUnit;
use crackfield::material::PlaneState;
use crackfield::solver::SolutionModel;
use crackfield::synthfield::NoiseKind;

#[derive(Parser, Debug)]
#[command(
    name = "crackfield",
    version,
    about = "J-integral and stress intensity factors from displacement grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Analyse one displacement file and write results.csv, summary.json and contours.svg.
    Analyze(AnalyzeArgs),
    /// Write a synthetic crack-tip field as CSV with a JSON sidecar.
    Synth(SynthArgs),
    /// Sweep the virtual crack extension direction over a solved field.
    Qsweep(QsweepArgs),
    /// Error and scatter of the extracted parameters against displacement noise.
    NoiseStudy(NoiseArgs),
    /// Error of the extracted parameters against a misplaced crack tip.
    TipStudy(TipArgs),
    /// Run the local HTTP service.
    Serve(ServeArgs),
    /// Redraw contours.svg from an existing results directory.
    Report(ReportArgs),
}

fn numbers<const N: usize>(s: &str, sep: char) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(sep).map(str::trim).collect();
    if parts.len() != N {
        return Err(format!(
            "expected {N} values separated by '{sep}', got '{s}'"
        ));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("'{p}' is not a number"))?;
    }
    Ok(out)
}

/// `x,y`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub [f64; 2]);

impl FromStr for Point {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        numbers::<2>(s, ',').map(Point)
    }
}

/// `x,y;x,y;...`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Points(pub Vec<[f64; 2]>);

impl FromStr for Points {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(';')
            .filter(|p| !p.trim().is_empty())
            .map(|p| numbers::<2>(p, ','))
            .collect::<Result<_, _>>()
            .map(Points)
    }
}

/// `x0,y0,x1,y1`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rect(pub [f64; 4]);

impl FromStr for Rect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        numbers::<4>(s, ',').map(Rect)
    }
}

/// Inclusive node index rectangle `i0,j0,i1,j1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Crop(pub [usize; 4]);

impl FromStr for Crop {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = numbers::<4>(s, ',')?;
        if v.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
            return Err(format!(
                "crop indices must be non-negative integers, got '{s}'"
            ));
        }
        Ok(Crop(v.map(|x| x as usize)))
    }
}

/// Inclusive contour range `first-last`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Window(pub [usize; 2]);

impl FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(['-', ','])
            .ok_or_else(|| format!("expected first-last, got '{s}'"))?;
        let p = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{v}' is not a contour index"))
        };
        Ok(Window([p(a)?, p(b)?]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Toggle {
    Auto,
    On,
    Off,
}

/// Settings of one analysis. Every field can come from the `--config` JSON
/// file (same names, snake_case); flags override the file. Lengths are in
/// `units`.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// Displacement CSV: x,y,ux,uy or x,y,z,ux,uy,uz.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Length unit of the input file and of every length given here [m, mm, um].
    #[arg(long)]
    pub units: Option<LengthUnit>,
    /// Column delimiter; detected when absent.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Crack tip `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub tip: Option<Point>,
    /// Crack mouth `x,y`.
    #[arg(long, allow_hyphen_values = true)]
    pub mouth: Option<Point>,
    /// Crack path `x,y;x,y;...` from mouth to tip, instead of --mouth/--tip.
    #[arg(long, allow_hyphen_values = true)]
    pub polyline: Option<Points>,
    /// Virtual crack extension direction, degrees from +x.
    #[arg(long, allow_hyphen_values = true)]
    pub q_angle_deg: Option<f64>,
    /// Tip mask rectangle `x0,y0,x1,y1`.
    #[arg(long, allow_hyphen_values = true)]
    pub mask_rect: Option<Rect>,
    /// Tip mask polygon `x,y;x,y;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub mask_polygon: Option<Points>,
    /// Material JSON file.
    #[arg(short, long)]
    pub material: Option<PathBuf>,
    /// Overrides the plane state of the material file.
    #[arg(long)]
    pub plane_state: Option<PlaneState>,
    /// elastic or ramberg-osgood.
    #[arg(long)]
    pub model: Option<SolutionModel>,
    /// Number of contours; every ring that fits when absent.
    #[arg(long)]
    pub contours: Option<usize>,
    /// Shortest accepted plateau, contours.
    #[arg(long)]
    pub plateau_min: Option<usize>,
    /// Largest accepted std / |mean| over the plateau.
    #[arg(long)]
    pub plateau_tol: Option<f64>,
    /// Leading contours never used for the plateau.
    #[arg(long)]
    pub plateau_skip: Option<usize>,
    /// Fixed plateau `first-last`, skipping detection.
    #[arg(long)]
    pub plateau_window: Option<Window>,
    /// Mode III pipeline: auto runs it for 6-column input.
    #[arg(long)]
    pub anti_plane: Option<Toggle>,
    /// Counter-clockwise quarter turns applied after cropping.
    #[arg(long)]
    pub rotate: Option<u32>,
    /// Keep nodes `i0,j0,i1,j1` (inclusive, original indexing).
    #[arg(long)]
    pub crop: Option<Crop>,
    /// Output directory.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub precision: Option<Precision>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// JSON file with any of the analysis settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Leave the generation time out of the SVG.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug)]
pub struct QsweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Sweep start relative to the crack q direction, degrees.
    #[arg(long, default_value_t = -60.0, allow_hyphen_values = true)]
    pub from_deg: f64,
    #[arg(long, default_value_t = 60.0, allow_hyphen_values = true)]
    pub to_deg: f64,
    #[arg(long, default_value_t = 10.0)]
    pub step_deg: f64,
    #[arg(long)]
    pub no_timestamp: bool,
}

/// Synthetic field description; defaults reproduce the mixed-mode reference field.
#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// K_I, Pa m^0.5.
    #[arg(long, default_value_t = 3e6, allow_hyphen_values = true)]
    pub k_i: f64,
    #[arg(long, default_value_t = 1e6, allow_hyphen_values = true)]
    pub k_ii: f64,
    #[arg(long, default_value_t = 5e6, allow_hyphen_values = true)]
    pub k_iii: f64,
    #[arg(long, default_value_t = 51)]
    pub nx: usize,
    #[arg(long, default_value_t = 51)]
    pub ny: usize,
    /// Node pitch in --units; 0.04 um when absent.
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long, default_value = "um")]
    pub units: LengthUnit,
    /// Young's modulus, Pa.
    #[arg(long, default_value_t = 210e9)]
    pub youngs: f64,
    #[arg(long, default_value_t = 0.3)]
    pub poisson: f64,
    #[arg(long, default_value = "plane_strain")]
    pub plane_state: PlaneState,
    /// Crack tip `x,y` in --units; the grid centre is the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub tip: Option<Point>,
    /// Crack extension direction, degrees from +x.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub crack_angle_deg: f64,
    /// Scale the field with E/(1-nu^2) in place of E in the shear modulus.
    #[arg(long)]
    pub paper_mu: bool,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Output CSV; the sidecar is written next to it with a .json extension.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Noise standard deviation as a fraction of the mean displacement magnitude.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gaussian")]
    pub noise_kind: NoiseKindArg,
    /// Write x,y,ux,uy only.
    #[arg(long)]
    pub in_plane_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseKindArg {
    Gaussian,
    Uniform,
}

impl From<NoiseKindArg> for NoiseKind {
    fn from(k: NoiseKindArg) -> Self {
        match k {
            NoiseKindArg::Gaussian => NoiseKind::Gaussian,
            NoiseKindArg::Uniform => NoiseKind::Uniform,
        }
    }
}

/// Options shared by the synthetic studies.
#[derive(Args, Debug)]
pub struct StudyCommon {
    /// Material JSON; isotropic with the field's constants when absent.
    #[arg(short, long)]
    pub material: Option<PathBuf>,
    #[arg(long)]
    pub contours: Option<usize>,
    /// Half width of the square tip mask, nodes.
    #[arg(long, default_value_t = 2)]
    pub mask_half_nodes: usize,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub common: StudyCommon,
    /// Noise fractions, increasing; 1e-6 to 1e-2 in five log steps when absent.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "gaussian")]
    pub noise_kind: NoiseKindArg,
    /// Independent draws instead of antithetic pairs.
    #[arg(long)]
    pub no_antithetic: bool,
    /// Detect the plateau on every noisy series instead of using the noise-free window.
    #[arg(long)]
    pub free_window: bool,
}

#[derive(Args, Debug)]
pub struct TipArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub common: StudyCommon,
    /// Tip offsets along x, nodes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub dx: Vec<i32>,
    /// Tip offsets along y, nodes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub dy: Vec<i32>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8765")]
    pub bind: SocketAddr,
    /// Allow a non-loopback bind address. The service has no authentication.
    #[arg(long)]
    pub allow_remote: bool,
    /// Analysis workers.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory holding results.csv and summary.json.
    pub dir: PathBuf,
    /// Where to write; the input directory when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_timestamp: bool,
}
