use super::{FieldError, GridReport, PointCloud};

pub(crate) struct LatticeFit {
    pub report: GridReport,
    /// Lattice node of each input row.
    pub node_of: Vec<usize>,
}

// Median gap between distinct sorted values, ignoring gaps below `eps`.
fn axis_spacing(values: &[f64]) -> Option<(f64, f64, f64)> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let (lo, hi) = (v[0], v[v.len() - 1]);
    let range = hi - lo;
    if range <= 0.0 {
        return None;
    }
    let eps = 1e-9 * range;
    let mut gaps: Vec<f64> = v
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|g| *g > eps)
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(|a, b| a.total_cmp(b));
    Some((lo, hi, gaps[gaps.len() / 2]))
}

pub(crate) fn infer_lattice(xy: &[[f64; 2]], tolerance: f64) -> Result<LatticeFit, FieldError> {
    if xy.is_empty() {
        return Err(FieldError::EmptyFile);
    }
    let xs: Vec<f64> = xy.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = xy.iter().map(|p| p[1]).collect();
    let (x0, x1, sx) = axis_spacing(&xs).ok_or(FieldError::DegenerateGrid)?;
    let (y0, y1, sy) = axis_spacing(&ys).ok_or(FieldError::DegenerateGrid)?;
    let nx = ((x1 - x0) / sx).round() as usize + 1;
    let ny = ((y1 - y0) / sy).round() as usize + 1;
    if nx < 2 || ny < 2 {
        return Err(FieldError::DegenerateGrid);
    }
    let mut max_dev: f64 = 0.0;
    let mut cells = Vec::with_capacity(xy.len());
    for p in xy {
        let fi = (p[0] - x0) / sx;
        let fj = (p[1] - y0) / sy;
        let (i, j) = (fi.round(), fj.round());
        max_dev = max_dev.max((fi - i).abs().max((fj - j).abs()));
        cells.push((i as usize, j as usize));
    }
    // numerical noise in decimal coordinates is not a deviation
    if max_dev < 1e-9 {
        max_dev = 0.0;
    }
    if max_dev > tolerance {
        return Err(FieldError::IrregularGrid {
            max_deviation: max_dev,
            tolerance,
        });
    }
    let mut seen = vec![false; nx * ny];
    let mut node_of = Vec::with_capacity(xy.len());
    for (i, j) in cells {
        let node = i + j * nx;
        if seen[node] {
            return Err(FieldError::DuplicatePoints { i, j });
        }
        seen[node] = true;
        node_of.push(node);
    }
    Ok(LatticeFit {
        report: GridReport {
            nx,
            ny,
            spacing: [sx, sy],
            origin: [x0, y0],
            max_deviation: max_dev,
            missing_nodes: seen.iter().filter(|s| !**s).count(),
        },
        node_of,
    })
}

/// Checks that every point sits within `tolerance * spacing` of the inferred lattice.
pub fn validate_grid(cloud: &PointCloud, tolerance: f64) -> Result<GridReport, FieldError> {
    infer_lattice(&cloud.xy, tolerance).map(|fit| fit.report)
}
