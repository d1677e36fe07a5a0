use serde::{Deserialize, Serialize};

use crackfield::field_io::LengthUnit;
use crackfield::material::MaterialFile;
use crackfield::report::{engine_id, GridInfo, Provenance, Summary};
use crackfield::solver::SolutionModel;
use crackfield::studies::{q_sweep_prepared, QSuggestion, StudyResult};
use crackfield::{prepare, AnalysisOptions, Crack, Field, Mat, Result, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Analysis,
    Qsweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

/// Body of `POST /api/fields/{id}/jobs`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    pub kind: JobKind,
    pub material: MaterialFile,
    #[serde(default)]
    pub options: AnalysisOptions,
    /// Shorthand for `options.model`.
    #[serde(default)]
    pub model: Option<SolutionModel>,
    /// Shorthand for `options.contours`.
    #[serde(default)]
    pub contours: Option<usize>,
    /// Absolute q angles of a sweep, radians. Defaults to the crack's q
    /// direction +-60 degrees in 10 degree steps.
    #[serde(default)]
    pub angles_rad: Option<Vec<f64>>,
}

impl JobRequest {
    pub fn effective_options(&self) -> AnalysisOptions {
        let mut o = self.options.clone();
        if let Some(m) = self.model {
            o.model = m;
        }
        if self.contours.is_some() {
            o.contours = self.contours;
        }
        o
    }
}

/// Result of a finished job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobOutput {
    pub summary: Summary,
    pub series: Series,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<QSuggestion>,
}

/// Source description recorded in the summary provenance.
#[derive(Debug, Clone)]
pub struct InputInfo {
    pub sha256: String,
    pub units: LengthUnit,
}

pub fn default_sweep(crack: &Crack) -> Vec<f64> {
    let q = crack.q_angle();
    (-6..=6)
        .map(|i| q + (10.0 * i as f64).to_radians())
        .collect()
}

/// Runs one job to completion on the calling thread.
pub fn run_job(
    field: &Field,
    crack: &Crack,
    input: &InputInfo,
    request: &JobRequest,
) -> Result<JobOutput> {
    let material: Mat = request.material.to_material()?;
    let options = request.effective_options();
    let prepared = prepare(field, crack, &material, &options)?;
    let result = prepared.evaluate(crack.q_angle())?;
    let provenance = Provenance {
        engine: engine_id(),
        input_sha256: Some(input.sha256.clone()),
        input_units: Some(input.units),
        material: request.material.clone(),
        crack: crack.clone(),
        options,
        preprocessing: serde_json::Value::Null,
    };
    let summary = Summary::new(&result, provenance, GridInfo::of(field));
    let (study, suggestion) = match request.kind {
        JobKind::Analysis => (None, None),
        JobKind::Qsweep => {
            let angles = request
                .angles_rad
                .clone()
                .unwrap_or_else(|| default_sweep(crack));
            let s = q_sweep_prepared(&prepared, &angles)?;
            let suggestion = s.suggestion;
            (Some(s), suggestion)
        }
    };
    Ok(JobOutput {
        summary,
        series: result.series,
        study,
        suggestion,
    })
}
