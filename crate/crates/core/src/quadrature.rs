//! Composite Simpson quadrature on a uniform grid.
//!
//! Every integral in the estimators goes through here, so results are
//! deterministic for fixed inputs: node values are summed in a fixed order
//! regardless of how they were produced.

use crate::error::{Error, Result};

fn check_grid(lo: f64, hi: f64, grid_points: usize) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("integration interval [{lo}, {hi}] is empty or not finite")));
    }
    if grid_points < 3 || grid_points.is_multiple_of(2) {
        return Err(Error::invalid(format!("Simpson's rule needs an odd number of nodes >= 3, got {grid_points}")));
    }
    Ok(())
}

/// Uniform grid of `grid_points` nodes on `[lo, hi]`, endpoints included.
///
/// Nodes in the upper half are measured back from `hi`, so a symmetric
/// interval yields an exactly symmetric grid.
pub fn uniform_grid(lo: f64, hi: f64, grid_points: usize) -> Vec<f64> {
    if grid_points == 1 {
        return vec![lo];
    }
    let last = grid_points - 1;
    let width = hi - lo;
    (0..grid_points)
        .map(|i| {
            if 2 * i <= last {
                lo + width * (i as f64 / last as f64)
            } else {
                hi - width * ((last - i) as f64 / last as f64)
            }
        })
        .collect()
}

/// Simpson sum of precomputed node values with spacing `h`.
///
/// Fails on the first non-finite value, reporting its node index.
pub fn simpson_sum(values: &[f64], nodes: &[f64], h: f64) -> Result<f64> {
    let m = values.len();
    debug_assert_eq!(m, nodes.len());
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Quadrature { node: i, t: nodes[i], value: values[i] });
    }
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, &v) in values.iter().enumerate().take(m - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    Ok(h / 3.0 * (values[0] + values[m - 1] + 4.0 * odd + 2.0 * even))
}

/// Integrates `f` over `[lo, hi]` with composite Simpson on `grid_points`
/// uniform nodes (odd, at least 3).
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid_points: usize) -> Result<f64> {
    check_grid(lo, hi, grid_points)?;
    let nodes = uniform_grid(lo, hi, grid_points);
    let values: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
    simpson_sum(&values, &nodes, (hi - lo) / (grid_points - 1) as f64)
}

pub(crate) fn validate_grid(lo: f64, hi: f64, grid_points: usize) -> Result<()> {
    check_grid(lo, hi, grid_points)
}
