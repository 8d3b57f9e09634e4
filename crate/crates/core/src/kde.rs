//! Gaussian kernel density on [0, 1] with reflection at both boundaries.

use std::f64::consts::PI;

use serde::Serialize;

pub const GRID_POINTS: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Density {
    /// Evenly spaced evaluation points, `grid[0] = 0`, `grid[last] = 1`.
    pub grid: Vec<f64>,
    pub heights: Vec<f64>,
    pub bandwidth: f64,
}

/// Nearest-rank quantile of sorted data: the value at rank `ceil(p n)`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR / 1.34) n^(-1/5)`.
///
/// Falls back to whichever spread measure is non-zero, and to the grid
/// spacing when the data is a single repeated value.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = if sorted.len() > 1 {
        (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let iqr = (nearest_rank(sorted, 0.75) - nearest_rank(sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return 1.0 / (GRID_POINTS - 1) as f64,
    };
    0.9 * spread * n.powf(-0.2)
}

/// Density of `sorted` (values in [0, 1]) on a `GRID_POINTS` grid. Each
/// observation contributes its kernel plus mirror images at `-x` and `2 - x`,
/// so no mass is lost past the boundaries.
pub fn reflected_kde(sorted: &[f64]) -> Density {
    let bandwidth = silverman_bandwidth(sorted);
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| i as f64 / (GRID_POINTS - 1) as f64).collect();

    // Seat shares take few distinct values; weight each by its multiplicity.
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for &v in sorted {
        match atoms.last_mut() {
            Some((x, w)) if *x == v => *w += 1.0,
            _ => atoms.push((v, 1.0)),
        }
    }

    let norm = 1.0 / (sorted.len() as f64 * bandwidth * (2.0 * PI).sqrt());
    let kernel = |u: f64| (-0.5 * u * u).exp();
    let heights = grid
        .iter()
        .map(|&x| {
            let sum: f64 = atoms
                .iter()
                .map(|&(v, w)| {
                    w * (kernel((x - v) / bandwidth) + kernel((x + v) / bandwidth) + kernel((x - (2.0 - v)) / bandwidth))
                })
                .sum();
            sum * norm
        })
        .collect();
    Density { grid, heights, bandwidth }
}
