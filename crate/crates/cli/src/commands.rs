use std::path::{Path, PathBuf};

use serde::Serialize;

use crackfield::field_io::{
    load_field_from_str, transform_field, write_field_csv_in, DisplacementField, LengthUnit,
};
use crackfield::material::{Material, MaterialFile};
use crackfield::report::{
    emit_report, engine_id, parse_results_csv, sha256_hex, write_atomic, GridInfo, Provenance,
    ReportOptions, Summary,
};
use crackfield::studies::{
    noise_study, q_sweep, spec_crack, tip_offset_study, truth_of, write_study_csv,
    write_study_plots, NoiseStudyOptions, Quantities, StudyResult, TipStudyOptions,
};
use crackfield::synthfield::{
    add_noise, generate_williams_field, MuConvention, NoiseKind, SyntheticSpec,
};
use crackfield::{analyze, AnalysisOptions, Crack, Scalar};
use crackfield_service::{check_bind, ServiceConfig};

use crate::args::{
    AnalyzeArgs, Command, NoiseArgs, Precision, QsweepArgs, ReportArgs, ServeArgs, SpecArgs,
    StudyCommon, SynthArgs, TipArgs,
};
use crate::config::{merge, read_material, resolve, Run};
use crate::error::{config, CliError};

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Analyze(a) => analyze_command(a),
        Command::Synth(a) => synth_command(a),
        Command::Qsweep(a) => qsweep_command(a),
        Command::NoiseStudy(a) => noise_command(a),
        Command::TipStudy(a) => tip_command(a),
        Command::Serve(a) => serve_command(a),
        Command::Report(a) => report_command(a),
    }
}

fn svg_comment(no_timestamp: bool) -> Option<String> {
    (!no_timestamp).then(|| {
        format!(
            "generated {}",
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        )
    })
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn read_input(path: &Path) -> Result<(String, String), CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let sha = sha256_hex(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Io(format!("{}: not valid UTF-8", path.display())))?;
    Ok((text, sha))
}

fn load<T: Scalar>(run: &Run) -> Result<(DisplacementField<T>, String), CliError> {
    let (text, sha) = read_input(&run.input)?;
    let field: DisplacementField<T> = load_field_from_str(&text, run.units, run.delimiter)?;
    let field = if !run.rotate.is_multiple_of(4) || run.crop.is_some() {
        transform_field(&field, run.rotate, run.crop)?
    } else {
        field
    };
    Ok((field, sha))
}

fn material<T: Scalar>(file: &MaterialFile) -> Result<Material<T>, CliError> {
    file.to_material().map_err(|e| config(e.to_string()))
}

fn analyze_as<T: Scalar>(run: &Run, no_timestamp: bool) -> Result<(), CliError> {
    let (field, sha) = load::<T>(run)?;
    let mat = material::<T>(&run.material)?;
    let result = analyze(&field, &run.crack.cast::<T>(), &mat, &run.options)?;
    let provenance = Provenance {
        engine: engine_id(),
        input_sha256: Some(sha),
        input_units: Some(run.units),
        material: run.material.clone(),
        crack: run.crack.clone(),
        options: run.options.clone(),
        preprocessing: run.preprocessing(),
    };
    let summary = Summary::new(&result, provenance, GridInfo::of(&field));
    let files = emit_report(
        &result.series,
        &summary,
        &run.out,
        &ReportOptions {
            svg_comment: svg_comment(no_timestamp),
        },
    )?;
    match &summary.plateau {
        Some(p) => log::info!(
            "plateau over contours {}-{}: J = {:.6e} J/m^2",
            p.start_contour,
            p.end_contour,
            p.j.mean
        ),
        None => log::warn!("no plateau found; see plateau_candidate in the summary"),
    }
    announce(&[files.results, files.summary, files.chart]);
    Ok(())
}

fn analyze_command(a: AnalyzeArgs) -> Result<(), CliError> {
    let run = resolve(&merge(a.config.as_deref(), &a.run)?)?;
    match run.precision {
        Precision::F64 => analyze_as::<f64>(&run, a.no_timestamp),
        Precision::F32 => analyze_as::<f32>(&run, a.no_timestamp),
    }
}

fn write_study(study: &StudyResult, out: &Path, no_timestamp: bool) -> Result<(), CliError> {
    let mut files = write_study_csv(study, out)?;
    files.extend(write_study_plots(
        study,
        out,
        svg_comment(no_timestamp).as_deref(),
    )?);
    announce(&files);
    Ok(())
}

fn sweep_angles(base: f64, from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(config(
            "the sweep needs --from-deg <= --to-deg and a positive --step-deg",
        ));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| base + (from + i as f64 * step).to_radians())
        .collect())
}

fn qsweep_as<T: Scalar>(run: &Run, angles: &[f64], no_timestamp: bool) -> Result<(), CliError> {
    let (field, _) = load::<T>(run)?;
    let mat = material::<T>(&run.material)?;
    let study = q_sweep(&field, &run.crack.cast::<T>(), &mat, angles, &run.options)?;
    if let Some(s) = &study.suggestion {
        log::info!("suggested q direction {:.2} deg", s.angle.to_degrees());
    }
    write_study(&study, &run.out, no_timestamp)
}

fn qsweep_command(a: QsweepArgs) -> Result<(), CliError> {
    let run = resolve(&merge(a.config.as_deref(), &a.run)?)?;
    let angles = sweep_angles(run.crack.q_angle(), a.from_deg, a.to_deg, a.step_deg)?;
    match run.precision {
        Precision::F64 => qsweep_as::<f64>(&run, &angles, a.no_timestamp),
        Precision::F32 => qsweep_as::<f32>(&run, &angles, a.no_timestamp),
    }
}

fn spec_of(a: &SpecArgs) -> Result<SyntheticSpec<f64>, CliError> {
    let s = a.units.to_meters();
    let mut spec = SyntheticSpec::reference_mixed_mode();
    spec.k = [a.k_i, a.k_ii, a.k_iii];
    spec.nx = a.nx;
    spec.ny = a.ny;
    if let Some(h) = a.spacing {
        spec.spacing = [h * s, h * s];
    }
    spec.youngs = a.youngs;
    spec.poisson = a.poisson;
    spec.plane_state = a.plane_state;
    if let Some(t) = a.tip {
        spec.tip = [t.0[0] * s, t.0[1] * s];
    }
    spec.crack_angle = a.crack_angle_deg.to_radians();
    if a.paper_mu {
        spec.mu_convention = MuConvention::PrimedModulus;
    }
    spec.validate().map_err(config)?;
    Ok(spec)
}

/// Sidecar describing a synthetic field.
#[derive(Serialize)]
struct SynthSidecar<'a> {
    format: &'static str,
    version: u32,
    engine: String,
    csv: String,
    sha256: String,
    units: LengthUnit,
    columns: usize,
    spec: &'a SyntheticSpec<f64>,
    noise: Option<NoiseRecord>,
    /// Crack from the grid edge to the tip with a two-node tip mask, meters.
    crack: Crack,
    truth: Quantities<f64>,
}

#[derive(Serialize)]
struct NoiseRecord {
    fraction: f64,
    seed: u64,
    kind: NoiseKind,
}

fn synth_command(a: SynthArgs) -> Result<(), CliError> {
    let mut spec = spec_of(&a.spec)?;
    if a.in_plane_only {
        spec.k[2] = 0.0;
    }
    if !(a.noise >= 0.0) || !a.noise.is_finite() {
        return Err(config("--noise must be a non-negative fraction"));
    }
    let mut field = generate_williams_field(&spec);
    if a.in_plane_only {
        field.has_out_of_plane = false;
        for u in &mut field.u {
            u[2] = 0.0;
        }
    }
    let noise = (a.noise > 0.0).then(|| NoiseRecord {
        fraction: a.noise,
        seed: a.seed,
        kind: a.noise_kind.into(),
    });
    if let Some(n) = &noise {
        field = add_noise(&field, n.fraction, n.seed, n.kind);
    }
    let mut csv = Vec::new();
    write_field_csv_in(&field, a.spec.units, &mut csv).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    write_atomic(&a.out, &csv)?;
    let sidecar = SynthSidecar {
        format: "crackfield-synthetic",
        version: 1,
        engine: engine_id(),
        csv: a
            .out
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: sha256_hex(&csv),
        units: a.spec.units,
        columns: if field.has_out_of_plane { 6 } else { 4 },
        spec: &spec,
        noise,
        crack: spec_crack(&spec, 2),
        truth: truth_of(&spec),
    };
    let json_path = a.out.with_extension("json");
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    write_atomic(&json_path, text.as_bytes())?;
    announce(&[a.out, json_path]);
    Ok(())
}

fn study_material(
    spec: &SyntheticSpec<f64>,
    common: &StudyCommon,
) -> Result<Material<f64>, CliError> {
    match &common.material {
        Some(p) => material(&read_material(p)?),
        None => Material::isotropic(spec.youngs, spec.poisson, spec.plane_state)
            .map_err(|e| config(e.to_string())),
    }
}

fn study_options(common: &StudyCommon) -> AnalysisOptions {
    AnalysisOptions {
        contours: common.contours,
        ..Default::default()
    }
}

fn noise_command(a: NoiseArgs) -> Result<(), CliError> {
    let spec = spec_of(&a.spec)?;
    let mat = study_material(&spec, &a.common)?;
    let mut opts = NoiseStudyOptions {
        trials: a.trials,
        seed: a.seed,
        kind: a.noise_kind.into(),
        mask_half_nodes: a.common.mask_half_nodes,
        antithetic: !a.no_antithetic,
        fixed_window: !a.free_window,
        ..Default::default()
    };
    if !a.fractions.is_empty() {
        opts.fractions = a.fractions.clone();
    }
    let study = noise_study(&spec, &mat, &study_options(&a.common), &opts).map_err(study_error)?;
    write_study(&study, &a.common.out, a.common.no_timestamp)
}

fn tip_command(a: TipArgs) -> Result<(), CliError> {
    let spec = spec_of(&a.spec)?;
    let mat = study_material(&spec, &a.common)?;
    let mut opts = TipStudyOptions {
        mask_half_nodes: a.common.mask_half_nodes,
        ..Default::default()
    };
    if !a.dx.is_empty() {
        opts.dx = a.dx.clone();
    }
    if !a.dy.is_empty() {
        opts.dy = a.dy.clone();
    }
    let study =
        tip_offset_study(&spec, &mat, &study_options(&a.common), &opts).map_err(study_error)?;
    write_study(&study, &a.common.out, a.common.no_timestamp)
}

/// Invalid study options are configuration problems.
fn study_error(e: crackfield::Error) -> CliError {
    match e {
        crackfield::Error::Study(m) => CliError::Config(m),
        other => other.into(),
    }
}

fn serve_command(a: ServeArgs) -> Result<(), CliError> {
    check_bind(a.bind, a.allow_remote).map_err(CliError::Config)?;
    let mut config = ServiceConfig::default();
    if let Some(w) = a.workers {
        config.workers = w.max(1);
    }
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    rt.block_on(crackfield_service::serve(a.bind, config))
        .map_err(|e| CliError::Io(format!("{}: {e}", a.bind)))
}

fn report_command(a: ReportArgs) -> Result<(), CliError> {
    let read = |name: &str| {
        let p = a.dir.join(name);
        std::fs::read_to_string(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
    };
    let series = parse_results_csv(&read("results.csv")?)?;
    let summary: Summary = serde_json::from_str(&read("summary.json")?)
        .map_err(|e| config(format!("summary.json: {e}")))?;
    let out = a.out.unwrap_or(a.dir);
    let files = emit_report(
        &series,
        &summary,
        &out,
        &ReportOptions {
            svg_comment: svg_comment(a.no_timestamp),
        },
    )?;
    announce(&[files.results, files.summary, files.chart]);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_includes_both_ends() {
        let a = sweep_angles(0.5, -60.0, 60.0, 10.0).unwrap();
        assert_eq!(a.len(), 13);
        assert!((a[0] - (0.5 - 60f64.to_radians())).abs() < 1e-15);
        assert!((a[12] - (0.5 + 60f64.to_radians())).abs() < 1e-15);
        assert_eq!(sweep_angles(0.0, 0.0, 0.0, 1.0).unwrap(), vec![0.0]);
        assert!(sweep_angles(0.0, 10.0, 0.0, 1.0).is_err());
        assert!(sweep_angles(0.0, 0.0, 10.0, 0.0).is_err());
    }
}
