//! Parameter studies: virtual crack extension direction, measurement noise
//! and crack tip placement.

mod output;
mod rank;

pub use output::{study_csv, write_study_csv, write_study_plots, STUDY_HEADER};
pub use rank::spearman;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{prepare, AnalysisOptions, FractureResult, PreparedAnalysis};
use crate::error::{Error, Result};
use crate::field_io::{DisplacementField, MaskRegion};
use crate::fracture::{PlateauStats, Stat};
use crate::material::{j_from_k, Material};
use crate::mesh::CrackDefinition;
use crate::scalar::Scalar;
use crate::synthfield::{add_noise, generate_williams_field, NoiseKind, SyntheticSpec};

/// One value per reported quantity; absent where the analysis does not produce it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quantities<V> {
    pub j: Option<V>,
    pub j_total: Option<V>,
    pub k_i: Option<V>,
    pub k_ii: Option<V>,
    pub k_iii: Option<V>,
}

impl<V: Copy> Quantities<V> {
    pub const NAMES: [&'static str; 5] = ["J", "J_total", "K_I", "K_II", "K_III"];

    pub fn values(&self) -> [Option<V>; 5] {
        [self.j, self.j_total, self.k_i, self.k_ii, self.k_iii]
    }

    fn from_values(v: [Option<V>; 5]) -> Self {
        Quantities {
            j: v[0],
            j_total: v[1],
            k_i: v[2],
            k_ii: v[3],
            k_iii: v[4],
        }
    }

    pub fn get(&self, name: &str) -> Option<V> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .and_then(|i| self.values()[i])
    }
}

impl Quantities<Stat> {
    fn from_plateau(p: &PlateauStats) -> Self {
        Quantities {
            j: Some(p.j),
            j_total: p.j_total,
            k_i: p.k_i,
            k_ii: p.k_ii,
            k_iii: p.k_iii,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    QSweep,
    Noise,
    TipOffset,
}

/// Results at one axis value, aggregated over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyPoint {
    /// q angle, radians.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub angle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fraction: Option<f64>,
    /// Assumed tip offset from the true tip, lattice nodes.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub offset: Option<[i32; 2]>,
    /// Trial averages of the plateau mean and of the plateau standard deviation.
    pub plateau: Quantities<Stat>,
    /// Trial average of `(estimate - truth) / truth`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<Quantities<f64>>,
    /// Standard deviation of the normalized error over trials.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error_spread: Option<Quantities<f64>>,
    pub trials: usize,
    /// Analyses whose series had no plateau under free detection.
    pub no_plateau: usize,
}

/// Direction of maximum plateau J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QSuggestion {
    pub angle: f64,
    /// The maximum sits on the first or last sampled angle.
    pub range_exhausted: bool,
    /// J does not vary beyond its plateau scatter; `angle` is the crack direction.
    pub flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub study: StudyKind,
    pub points: Vec<StudyPoint>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub truth: Option<Quantities<f64>>,
    /// Crack direction of the analysed crack, radians.
    pub crack_angle: f64,
    /// Indices of the points with `dx == dy` (tip offset studies).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub diagonal: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub suggestion: Option<QSuggestion>,
}

impl StudyResult {
    /// `(axis value, plateau mean)` of one quantity along a 1D study.
    pub fn curve(&self, quantity: &str) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| {
                let x = p.angle.or(p.fraction)?;
                Some((x, p.plateau.get(quantity)?.mean))
            })
            .collect()
    }

    pub fn point_at_offset(&self, dx: i32, dy: i32) -> Option<&StudyPoint> {
        self.points.iter().find(|p| p.offset == Some([dx, dy]))
    }
}

/// Ground-truth plateau values of a synthetic field.
pub fn truth_of<T: Scalar>(spec: &SyntheticSpec<T>) -> Quantities<f64> {
    let eff = spec.effective().cast::<f64>();
    let k = spec.k.map(|v| v.as_f64());
    let j = j_from_k(k[0], k[1], 0.0, &eff);
    let anti = k[2] != 0.0;
    Quantities {
        j: Some(j),
        j_total: anti.then(|| j_from_k(k[0], k[1], k[2], &eff)),
        k_i: Some(k[0]),
        k_ii: Some(k[1]),
        k_iii: anti.then_some(k[2]),
    }
}

/// Straight crack from the grid edge to the spec's tip, along the spec's crack
/// direction, with a square mask of `mask_half_nodes` nodes around the tip.
pub fn spec_crack<T: Scalar>(
    spec: &SyntheticSpec<T>,
    mask_half_nodes: usize,
) -> CrackDefinition<T> {
    crack_from_edge(spec, spec.tip, mask_half_nodes)
}

fn crack_from_edge<T: Scalar>(
    spec: &SyntheticSpec<T>,
    tip: [T; 2],
    mask_half_nodes: usize,
) -> CrackDefinition<T> {
    let (s, c) = spec.crack_angle.sin_cos();
    let half = [
        T::lit(0.5 * (spec.nx - 1) as f64) * spec.spacing[0],
        T::lit(0.5 * (spec.ny - 1) as f64) * spec.spacing[1],
    ];
    let lo = [spec.centre[0] - half[0], spec.centre[1] - half[1]];
    let hi = [spec.centre[0] + half[0], spec.centre[1] + half[1]];
    // distance from the tip to the edge along -(c, s)
    let reach = |d: T, p: T, lo: T, hi: T| {
        if d > T::lit(1e-12) {
            (p - lo) / d
        } else if d < T::lit(-1e-12) {
            (p - hi) / d
        } else {
            T::infinity()
        }
    };
    let len = reach(c, tip[0], lo[0], hi[0]).min(reach(s, tip[1], lo[1], hi[1]));
    let mouth = [tip[0] - len * c, tip[1] - len * s];
    let mut crack = CrackDefinition::straight(mouth, tip);
    if mask_half_nodes > 0 {
        let h = [spec.spacing[0].as_f64(), spec.spacing[1].as_f64()];
        let m = mask_half_nodes as f64;
        crack = crack.with_mask(MaskRegion::centred(
            [tip[0].as_f64(), tip[1].as_f64()],
            [m * h[0], m * h[1]],
        ));
    }
    crack
}

fn normalized_error(estimate: &Quantities<Stat>, truth: &Quantities<f64>) -> Quantities<f64> {
    let e = estimate.values();
    let t = truth.values();
    Quantities::from_values(std::array::from_fn(|i| match (e[i], t[i]) {
        (Some(est), Some(tr)) if tr != 0.0 => Some((est.mean - tr) / tr),
        _ => None,
    }))
}

fn window_quantities<T: Scalar>(r: &FractureResult<T>) -> Quantities<Stat> {
    r.window_stats()
        .map(Quantities::from_plateau)
        .unwrap_or(Quantities {
            j: None,
            j_total: None,
            k_i: None,
            k_ii: None,
            k_iii: None,
        })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates the trials of one axis point.
fn aggregate<T: Scalar>(runs: &[FractureResult<T>], truth: Option<&Quantities<f64>>) -> StudyPoint {
    let per_run: Vec<Quantities<Stat>> = runs.iter().map(window_quantities).collect();
    let plateau = Quantities::from_values(std::array::from_fn(|i| {
        let v: Option<Vec<Stat>> = per_run.iter().map(|q| q.values()[i]).collect();
        v.map(|v| Stat {
            mean: v.iter().map(|s| s.mean).sum::<f64>() / v.len() as f64,
            std: v.iter().map(|s| s.std).sum::<f64>() / v.len() as f64,
        })
    }));
    let (error, error_spread) = match truth {
        Some(t) => {
            let errs: Vec<Quantities<f64>> =
                per_run.iter().map(|q| normalized_error(q, t)).collect();
            let pairs: [Option<(f64, f64)>; 5] = std::array::from_fn(|i| {
                let v: Option<Vec<f64>> = errs.iter().map(|e| e.values()[i]).collect();
                v.map(|v| mean_std(&v))
            });
            (
                Some(Quantities::from_values(pairs.map(|p| p.map(|x| x.0)))),
                Some(Quantities::from_values(pairs.map(|p| p.map(|x| x.1)))),
            )
        }
        None => (None, None),
    };
    StudyPoint {
        angle: None,
        fraction: None,
        offset: None,
        plateau,
        error,
        error_spread,
        trials: runs.len(),
        no_plateau: runs.iter().filter(|r| r.no_plateau()).count(),
    }
}

/// Re-evaluates the contour integrals for each q angle (radians) on a single solve.
pub fn q_sweep<T: Scalar>(
    field: &DisplacementField<T>,
    crack: &CrackDefinition<T>,
    material: &Material<T>,
    angles: &[f64],
    options: &AnalysisOptions,
) -> Result<StudyResult> {
    check_angles(angles)?;
    let prepared = prepare(field, crack, material, options)?;
    q_sweep_prepared(&prepared, angles)
}

fn check_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::Study("q sweep needs at least one angle".into()));
    }
    if angles.iter().any(|a| !a.is_finite()) || angles.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Study(
            "q sweep angles must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// [`q_sweep`] on an analysis that is already solved.
pub fn q_sweep_prepared<T: Scalar>(
    prepared: &PreparedAnalysis<T>,
    angles: &[f64],
) -> Result<StudyResult> {
    check_angles(angles)?;
    let crack = &prepared.crack;
    let runs: Vec<FractureResult<T>> = angles
        .par_iter()
        .map(|&a| prepared.evaluate(T::lit(a)))
        .collect::<Result<_>>()?;
    let points = angles
        .iter()
        .zip(&runs)
        .map(|(&a, r)| StudyPoint {
            angle: Some(a),
            ..aggregate(std::slice::from_ref(r), None)
        })
        .collect();
    let mut study = StudyResult {
        study: StudyKind::QSweep,
        points,
        truth: None,
        crack_angle: crack.default_q_angle().as_f64(),
        diagonal: Vec::new(),
        suggestion: None,
    };
    if angles.len() >= 3 {
        study.suggestion = Some(suggest_q_direction(&study)?);
    }
    Ok(study)
}

/// Angle of maximum plateau J, refined by a parabola through the discrete
/// maximum and its neighbours.
pub fn suggest_q_direction(sweep: &StudyResult) -> Result<QSuggestion> {
    let pts: Vec<(f64, Stat)> = sweep
        .points
        .iter()
        .filter_map(|p| Some((p.angle?, p.plateau.j?)))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Study(
            "direction suggestion needs at least three angles".into(),
        ));
    }
    let (lo, hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1.mean), hi.max(p.1.mean))
        });
    let scatter = pts.iter().map(|p| p.1.std).fold(0.0, f64::max);
    if hi - lo <= scatter {
        return Ok(QSuggestion {
            angle: sweep.crack_angle,
            range_exhausted: false,
            flat: true,
        });
    }
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        if p.1.mean > pts[best].1.mean {
            best = i;
        }
    }
    if best == 0 || best == pts.len() - 1 {
        return Ok(QSuggestion {
            angle: pts[best].0,
            range_exhausted: true,
            flat: false,
        });
    }
    let (x0, y0) = (pts[best - 1].0, pts[best - 1].1.mean);
    let (x1, y1) = (pts[best].0, pts[best].1.mean);
    let (x2, y2) = (pts[best + 1].0, pts[best + 1].1.mean);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    let angle = if den != 0.0 {
        (x1 - 0.5 * num / den).clamp(x0, x2)
    } else {
        x1
    };
    Ok(QSuggestion {
        angle,
        range_exhausted: false,
        flat: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseStudyOptions {
    pub fractions: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub kind: NoiseKind,
    /// Half width of the square tip mask, nodes.
    pub mask_half_nodes: usize,
    /// Analyse every realisation together with its negation.
    pub antithetic: bool,
    /// Evaluate every realisation over the plateau window of the noise-free field.
    pub fixed_window: bool,
}

impl Default for NoiseStudyOptions {
    fn default() -> Self {
        NoiseStudyOptions {
            fractions: log_space(1e-6, 1e-2, 5),
            trials: 5,
            seed: 0,
            kind: NoiseKind::Gaussian,
            mask_half_nodes: 2,
            antithetic: true,
            fixed_window: true,
        }
    }
}

/// `n` points from `a` to `b`, evenly spaced in log10.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.log10(), b.log10());
    (0..n)
        .map(|i| 10f64.powf(la + (lb - la) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Analyses seeded noisy copies of a synthetic field. Trial `t` draws its noise
/// from seed `seed + t` at every fraction, so fractions differ only in amplitude.
/// With `antithetic` each trial also analyses the negated noise; both enter the
/// trial statistics, which cancels the first-order interaction between the noise
/// and the noise-free scatter of the series.
pub fn noise_study<T: Scalar>(
    spec: &SyntheticSpec<T>,
    material: &Material<T>,
    analysis: &AnalysisOptions,
    options: &NoiseStudyOptions,
) -> Result<StudyResult> {
    spec.validate().map_err(Error::Study)?;
    if options.trials == 0 {
        return Err(Error::Study("noise study needs at least one trial".into()));
    }
    if options.fractions.is_empty()
        || options
            .fractions
            .iter()
            .any(|f| !(*f >= 0.0) || !f.is_finite())
    {
        return Err(Error::Study(
            "noise fractions must be finite and non-negative".into(),
        ));
    }
    if options.fractions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Study(
            "noise fractions must be strictly increasing".into(),
        ));
    }
    let field = generate_williams_field(spec);
    let crack = spec_crack(spec, options.mask_half_nodes);
    let truth = truth_of(spec);
    let mut run_options = analysis.clone();
    if options.fixed_window && analysis.plateau.window.is_none() {
        let clean = crate::analysis::analyze(&field, &crack, material, analysis)?;
        let w = clean
            .window_stats()
            .ok_or_else(|| Error::Study("noise-free field has no contour window".into()))?;
        run_options.plateau.window = Some((w.start_contour, w.end_contour));
    }
    let signs: &[f64] = if options.antithetic {
        &[1.0, -1.0]
    } else {
        &[1.0]
    };
    let per_point = options.trials * signs.len();
    let jobs: Vec<(usize, usize, f64)> = (0..options.fractions.len())
        .flat_map(|f| (0..options.trials).flat_map(move |t| signs.iter().map(move |&s| (f, t, s))))
        .collect();
    let runs: Vec<(FractureResult<T>, bool)> = jobs
        .par_iter()
        .map(|&(f, t, sign)| {
            let noisy = add_noise(
                &field,
                T::lit(sign * options.fractions[f]),
                options.seed.wrapping_add(t as u64),
                options.kind,
            );
            let r = crate::analysis::analyze(&noisy, &crack, material, &run_options)?;
            // whether free detection would have found a plateau on this series
            let detected = run_options.plateau.window.is_none()
                || crate::fracture::detect_plateau(&r.series, &analysis.plateau).is_ok();
            Ok((r, detected))
        })
        .collect::<Result<_>>()?;
    let points = runs
        .chunks(per_point)
        .zip(&options.fractions)
        .map(|(chunk, &f)| {
            let results: Vec<FractureResult<T>> = chunk.iter().map(|(r, _)| r.clone()).collect();
            let mut p = aggregate(&results, Some(&truth));
            p.fraction = Some(f);
            p.trials = options.trials;
            p.no_plateau = chunk.iter().filter(|(r, d)| r.no_plateau() || !d).count();
            p
        })
        .collect();
    Ok(StudyResult {
        study: StudyKind::Noise,
        points,
        truth: Some(truth),
        crack_angle: spec.crack_angle.as_f64(),
        diagonal: Vec::new(),
        suggestion: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TipStudyOptions {
    /// Offsets along x, nodes.
    pub dx: Vec<i32>,
    /// Offsets along y, nodes.
    pub dy: Vec<i32>,
    pub mask_half_nodes: usize,
}

impl Default for TipStudyOptions {
    fn default() -> Self {
        TipStudyOptions {
            dx: (-3..=3).collect(),
            dy: (-3..=3).collect(),
            mask_half_nodes: 2,
        }
    }
}

/// Moves the assumed tip (and its mask) over a grid of lattice offsets while
/// the field keeps its true tip. The crack always runs from the grid edge.
pub fn tip_offset_study<T: Scalar>(
    spec: &SyntheticSpec<T>,
    material: &Material<T>,
    analysis: &AnalysisOptions,
    options: &TipStudyOptions,
) -> Result<StudyResult> {
    spec.validate().map_err(Error::Study)?;
    let strictly_increasing = |v: &[i32]| !v.is_empty() && v.windows(2).all(|w| w[1] > w[0]);
    if !strictly_increasing(&options.dx) || !strictly_increasing(&options.dy) {
        return Err(Error::Study(
            "offset axes must be nonempty and strictly increasing".into(),
        ));
    }
    let field = generate_williams_field(spec);
    let truth = truth_of(spec);
    let offsets: Vec<[i32; 2]> = options
        .dy
        .iter()
        .flat_map(|&dy| options.dx.iter().map(move |&dx| [dx, dy]))
        .collect();
    let h = spec.spacing;
    let runs: Vec<FractureResult<T>> = offsets
        .par_iter()
        .map(|&[dx, dy]| {
            let tip = [
                spec.tip[0] + T::lit(dx as f64) * h[0],
                spec.tip[1] + T::lit(dy as f64) * h[1],
            ];
            let crack = crack_from_edge(spec, tip, options.mask_half_nodes);
            crate::analysis::analyze(&field, &crack, material, analysis)
        })
        .collect::<Result<_>>()?;
    let points: Vec<StudyPoint> = offsets
        .iter()
        .zip(&runs)
        .map(|(&o, r)| StudyPoint {
            offset: Some(o),
            ..aggregate(std::slice::from_ref(r), Some(&truth))
        })
        .collect();
    let diagonal = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.offset.is_some_and(|[a, b]| a == b))
        .map(|(i, _)| i)
        .collect();
    Ok(StudyResult {
        study: StudyKind::TipOffset,
        points,
        truth: Some(truth),
        crack_angle: spec.crack_angle.as_f64(),
        diagonal,
        suggestion: None,
    })
}
