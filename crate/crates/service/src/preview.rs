use serde::{Deserialize, Serialize};

use crackfield::Field;

/// Displacement magnitude on a block-averaged copy of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudePreview {
    pub nx: usize,
    pub ny: usize,
    /// Cell size of the preview, meters.
    pub spacing_m: [f64; 2],
    /// Centre of the first preview cell, meters.
    pub origin_m: [f64; 2],
    /// Grid nodes averaged into one preview cell along x and y.
    pub stride: [usize; 2],
    /// Row-major, `null` where the block holds no measured node.
    pub values: Vec<Option<f64>>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

pub fn magnitude_preview(field: &Field, max_cells: usize) -> MagnitudePreview {
    let max_cells = max_cells.max(1);
    let sx = field.nx.div_ceil(max_cells);
    let sy = field.ny.div_ceil(max_cells);
    let (px, py) = (field.nx.div_ceil(sx), field.ny.div_ceil(sy));
    let mag = field.magnitude();
    let mut values = Vec::with_capacity(px * py);
    for bj in 0..py {
        for bi in 0..px {
            let (mut sum, mut n) = (0.0, 0usize);
            for j in bj * sy..((bj + 1) * sy).min(field.ny) {
                for i in bi * sx..((bi + 1) * sx).min(field.nx) {
                    let k = field.index(i, j);
                    if field.valid[k] {
                        sum += mag[k];
                        n += 1;
                    }
                }
            }
            values.push((n > 0).then(|| sum / n as f64));
        }
    }
    let finite = values.iter().flatten().copied();
    let min = finite.clone().reduce(f64::min);
    let max = finite.reduce(f64::max);
    let o = field.origin();
    // block centres of full blocks
    let half = |s: usize, h: f64| 0.5 * (s - 1) as f64 * h;
    MagnitudePreview {
        nx: px,
        ny: py,
        spacing_m: [sx as f64 * field.spacing[0], sy as f64 * field.spacing[1]],
        origin_m: [
            o[0] + half(sx, field.spacing[0]),
            o[1] + half(sy, field.spacing[1]),
        ],
        stride: [sx, sy],
        values,
        min,
        max,
    }
}
