//! Selection of the contour-independent window of a contour series.

use serde::{Deserialize, Serialize};

use super::{ContourSeries, FractureError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauOptions {
    pub window_min: usize,
    /// Largest accepted std / |mean| of every tracked quantity.
    pub rel_tol: f64,
    /// Contours ignored at the start of the series.
    pub skip: usize,
    /// Inclusive 1-based contour range that overrides detection.
    #[serde(default)]
    pub window: Option<(usize, usize)>,
}

impl Default for PlateauOptions {
    fn default() -> Self {
        PlateauOptions {
            window_min: 5,
            rel_tol: 0.05,
            skip: 2,
            window: None,
        }
    }
}

/// Mean and population standard deviation over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauStats {
    /// First and last contour (1-based ring index) of the window.
    pub start_contour: usize,
    pub end_contour: usize,
    pub j: Stat,
    pub j_total: Option<Stat>,
    pub k_i: Option<Stat>,
    pub k_ii: Option<Stat>,
    pub k_ii_pseudo: Option<Stat>,
    pub k_iii: Option<Stat>,
    pub j_iii: Option<Stat>,
    /// Largest std / reference over the tracked quantities.
    pub spread: f64,
    pub explicit: bool,
}

fn stat(values: &[f64]) -> Stat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Stat {
        mean,
        std: var.sqrt(),
    }
}

struct Columns {
    j: Vec<f64>,
    j_total: Option<Vec<f64>>,
    k: [Option<Vec<f64>>; 3],
    k_ii_pseudo: Option<Vec<f64>>,
    j_iii: Option<Vec<f64>>,
}

fn column<T, F: Fn(&super::ContourRow<T>) -> Option<f64>>(
    series: &ContourSeries<T>,
    f: F,
) -> Option<Vec<f64>> {
    series.rows.iter().map(f).collect()
}

impl Columns {
    fn new<T: crate::Scalar>(series: &ContourSeries<T>) -> Self {
        let o = |v: Option<T>| v.map(|x| x.as_f64());
        Columns {
            j: series.rows.iter().map(|r| r.j.as_f64()).collect(),
            j_total: column(series, |r| o(r.j_total)),
            k: [
                column(series, |r| o(r.k_i)),
                column(series, |r| o(r.k_ii)),
                column(series, |r| o(r.k_iii)),
            ],
            k_ii_pseudo: column(series, |r| o(r.k_ii_pseudo)),
            j_iii: column(series, |r| o(r.j_iii)),
        }
    }

    fn stats(&self, a: usize, b: usize, explicit: bool, start_ring: usize) -> PlateauStats {
        let w = |c: &Option<Vec<f64>>| c.as_ref().map(|v| stat(&v[a..b]));
        let j = stat(&self.j[a..b]);
        let j_total = w(&self.j_total);
        let ks = [w(&self.k[0]), w(&self.k[1]), w(&self.k[2])];

        let rel = |s: &Stat, reference: f64| {
            if s.std == 0.0 {
                0.0
            } else if reference > 0.0 {
                s.std / reference
            } else {
                f64::INFINITY
            }
        };
        let mut spread = rel(&j, j.mean.abs());
        if let Some(t) = &j_total {
            spread = spread.max(rel(t, t.mean.abs()));
        }
        // K components near zero are judged against the overall K magnitude
        let norm: f64 = (a..b)
            .map(|i| {
                self.k
                    .iter()
                    .filter_map(|c| c.as_ref().map(|v| v[i] * v[i]))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum::<f64>()
            / (b - a) as f64;
        for s in ks.iter().flatten() {
            spread = spread.max(rel(s, s.mean.abs().max(0.1 * norm)));
        }
        PlateauStats {
            start_contour: start_ring + a,
            end_contour: start_ring + b - 1,
            j,
            j_total,
            k_i: ks[0],
            k_ii: ks[1],
            k_ii_pseudo: w(&self.k_ii_pseudo),
            k_iii: ks[2],
            j_iii: w(&self.j_iii),
            spread,
            explicit,
        }
    }
}

/// Longest window after `skip` whose tracked quantities all vary by at most
/// `rel_tol`; ties go to the smaller J standard deviation, then the earlier start.
pub fn detect_plateau<T: crate::Scalar>(
    series: &ContourSeries<T>,
    options: &PlateauOptions,
) -> Result<PlateauStats, FractureError> {
    let n = series.rows.len();
    if n == 0 {
        return Err(FractureError::InvalidOptions("empty contour series".into()));
    }
    let cols = Columns::new(series);
    let first_ring = series.rows[0].contour;
    if let Some((s, e)) = options.window {
        if s < first_ring || e < s || e >= first_ring + n {
            return Err(FractureError::InvalidOptions(format!(
                "explicit window {s}..{e} outside contours {first_ring}..{}",
                first_ring + n - 1
            )));
        }
        return Ok(cols.stats(s - first_ring, e - first_ring + 1, true, first_ring));
    }
    if options.window_min == 0 || !(options.rel_tol >= 0.0) {
        return Err(FractureError::InvalidOptions(
            "window_min must be >= 1 and rel_tol >= 0".into(),
        ));
    }
    let skip = options.skip.min(n.saturating_sub(1));
    let wmin = options.window_min.min(n - skip);
    let mut best_fallback: Option<PlateauStats> = None;
    for len in (wmin..=n - skip).rev() {
        let mut chosen: Option<PlateauStats> = None;
        for a in skip..=n - len {
            let s = cols.stats(a, a + len, false, first_ring);
            if len == wmin && best_fallback.as_ref().is_none_or(|b| s.spread < b.spread) {
                best_fallback = Some(s.clone());
            }
            if s.spread <= options.rel_tol && chosen.as_ref().is_none_or(|c| s.j.std < c.j.std) {
                chosen = Some(s);
            }
        }
        if let Some(c) = chosen {
            if n >= options.skip + options.window_min {
                return Ok(c);
            }
            break;
        }
    }
    Err(FractureError::NoPlateau {
        best: Box::new(best_fallback.expect("at least one window")),
    })
}
