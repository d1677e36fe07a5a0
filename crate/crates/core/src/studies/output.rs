use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::report::svg::{heatmap, line_chart, Line, Panel};
use crate::report::write_atomic;

use super::{Quantities, StudyKind, StudyResult};

pub const STUDY_HEADER: &str =
    "study,angle_rad,fraction,dx,dy,quantity,plateau_mean,plateau_std,normalized_error,error_std,trials,no_plateau";

fn opt(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v:e}");
    }
}

/// One row per axis point and quantity.
pub fn study_csv(study: &StudyResult) -> String {
    let kind = match study.study {
        StudyKind::QSweep => "q_sweep",
        StudyKind::Noise => "noise",
        StudyKind::TipOffset => "tip_offset",
    };
    let mut out = String::from(STUDY_HEADER);
    out.push('\n');
    for p in &study.points {
        for (i, name) in Quantities::<f64>::NAMES.iter().enumerate() {
            let Some(stat) = p.plateau.values()[i] else {
                continue;
            };
            out.push_str(kind);
            opt(&mut out, p.angle);
            opt(&mut out, p.fraction);
            match p.offset {
                Some([dx, dy]) => {
                    let _ = write!(out, ",{dx},{dy}");
                }
                None => out.push_str(",,"),
            }
            let _ = write!(out, ",{name}");
            opt(&mut out, Some(stat.mean));
            opt(&mut out, Some(stat.std));
            opt(&mut out, p.error.and_then(|e| e.values()[i]));
            opt(&mut out, p.error_spread.and_then(|e| e.values()[i]));
            let _ = writeln!(out, ",{},{}", p.trials, p.no_plateau);
        }
    }
    out
}

fn present(study: &StudyResult) -> Vec<&'static str> {
    Quantities::<f64>::NAMES
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            study
                .points
                .iter()
                .all(|p| p.plateau.values()[*i].is_some())
        })
        .map(|(_, n)| *n)
        .collect()
}

/// Writes `study.csv`, `study.json` and the SVG plots; returns the paths written.
pub fn write_study_csv(study: &StudyResult, outdir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::Io(format!("{}: {e}", outdir.display())))?;
    let csv = outdir.join("study.csv");
    write_atomic(&csv, study_csv(study).as_bytes())?;
    let json = outdir.join("study.json");
    let mut text = serde_json::to_string_pretty(study).expect("study serializes");
    text.push('\n');
    write_atomic(&json, text.as_bytes())?;
    Ok(vec![csv, json])
}

pub fn write_study_plots(
    study: &StudyResult,
    outdir: &Path,
    comment: Option<&str>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::Io(format!("{}: {e}", outdir.display())))?;
    let names = present(study);
    let mut written = Vec::new();
    match study.study {
        StudyKind::QSweep => {
            let deg =
                |pts: Vec<(f64, f64)>| pts.into_iter().map(|(a, v)| (a.to_degrees(), v)).collect();
            let mut jp = Panel::new(
                "Plateau J against q direction",
                "q angle (deg)",
                "J (J/m^2)",
            );
            for n in names.iter().filter(|n| n.starts_with('J')) {
                jp.lines.push(Line::new(*n, deg(study.curve(n))));
            }
            if let Some(s) = &study.suggestion {
                jp.marker = Some((
                    s.angle.to_degrees(),
                    format!("max J {:.1} deg", s.angle.to_degrees()),
                ));
            }
            let mut kp = Panel::new(
                "Plateau K against q direction",
                "q angle (deg)",
                "K (MPa m^0.5)",
            );
            for n in names.iter().filter(|n| n.starts_with('K')) {
                let pts = study
                    .curve(n)
                    .into_iter()
                    .map(|(a, v)| (a.to_degrees(), v * 1e-6))
                    .collect();
                kp.lines.push(Line::new(*n, pts));
            }
            let path = outdir.join("q_sweep.svg");
            write_atomic(&path, line_chart(&[jp, kp], comment).as_bytes())?;
            written.push(path);
        }
        StudyKind::Noise => {
            let mut ep = Panel::new(
                "Normalized error against noise",
                "noise fraction",
                "|error|",
            );
            ep.log_x = true;
            let mut sp = Panel::new(
                "Plateau scatter against noise",
                "noise fraction",
                "std / |mean|",
            );
            sp.log_x = true;
            for n in &names {
                let i = Quantities::<f64>::NAMES
                    .iter()
                    .position(|x| x == n)
                    .expect("known name");
                let err: Vec<(f64, f64)> = study
                    .points
                    .iter()
                    .filter_map(|p| Some((p.fraction?, p.error?.values()[i]?.abs())))
                    .collect();
                if !err.is_empty() {
                    ep.lines.push(Line::new(*n, err));
                }
                let spread = study
                    .points
                    .iter()
                    .filter_map(|p| {
                        let s = p.plateau.values()[i]?;
                        Some((
                            p.fraction?,
                            if s.mean != 0.0 {
                                s.std / s.mean.abs()
                            } else {
                                0.0
                            },
                        ))
                    })
                    .collect();
                sp.lines.push(Line::new(*n, spread));
            }
            let path = outdir.join("noise.svg");
            write_atomic(&path, line_chart(&[ep, sp], comment).as_bytes())?;
            written.push(path);
        }
        StudyKind::TipOffset => {
            let mut xs: Vec<i32> = study
                .points
                .iter()
                .filter_map(|p| p.offset.map(|o| o[0]))
                .collect();
            let mut ys: Vec<i32> = study
                .points
                .iter()
                .filter_map(|p| p.offset.map(|o| o[1]))
                .collect();
            xs.sort_unstable();
            xs.dedup();
            ys.sort_unstable();
            ys.dedup();
            for n in &names {
                let i = Quantities::<f64>::NAMES
                    .iter()
                    .position(|x| x == n)
                    .expect("known name");
                let values: Vec<Option<f64>> = ys
                    .iter()
                    .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
                    .map(|(x, y)| {
                        study
                            .point_at_offset(x, y)
                            .and_then(|p| p.error?.values()[i])
                    })
                    .collect();
                if values.iter().all(Option::is_none) {
                    continue;
                }
                let title = format!("Normalized {n} error against assumed tip offset");
                let path = outdir.join(format!("tip_offset_{n}.svg"));
                write_atomic(
                    &path,
                    heatmap(
                        &title,
                        &xs,
                        &ys,
                        &values,
                        "(estimate - truth) / truth",
                        comment,
                    )
                    .as_bytes(),
                )?;
                written.push(path);
            }
            let mut dp = Panel::new(
                "Normalized error along the offset diagonal",
                "dx = dy (nodes)",
                "error",
            );
            for n in &names {
                let i = Quantities::<f64>::NAMES
                    .iter()
                    .position(|x| x == n)
                    .expect("known name");
                let pts: Vec<(f64, f64)> = study
                    .diagonal
                    .iter()
                    .filter_map(|&k| {
                        let p = &study.points[k];
                        Some((p.offset?[0] as f64, p.error?.values()[i]?))
                    })
                    .collect();
                if !pts.is_empty() {
                    dp.lines.push(Line::new(*n, pts));
                }
            }
            let path = outdir.join("tip_offset_diagonal.svg");
            write_atomic(&path, line_chart(&[dp], comment).as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}
