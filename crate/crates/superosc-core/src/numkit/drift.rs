//! Drift measurement for first integrals along integrated trajectories.
//!
//! A candidate integral is sampled on a uniform grid over the trajectory;
//! samples can be inadmissible (outside a hypergeometric branch, at a
//! turning point) or belong to different branches, in which case the
//! trajectory splits into segments and drift is the worst in-segment spread.

use alloc::vec::Vec;

use super::ode::Trajectory;

/// One admissible sample of a candidate first integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSample {
    pub value: f64,
    /// Branch key; a change starts a new segment (e.g. the sign of y_x
    /// across a turning point).
    pub branch: i8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    /// Worst max-min spread within any admissible segment; `None` when no
    /// segment had enough points.
    pub max_drift: Option<f64>,
    pub segments: usize,
    pub points_used: usize,
    pub points_total: usize,
}

/// Sample `integral` at `n_samples + 1` uniform times along `traj` and
/// report the worst in-segment drift. Segments need at least `min_points`
/// admissible samples to count.
pub fn measure_drift<F>(traj: &Trajectory, n_samples: usize, min_points: usize, integral: F) -> DriftReport
where
    F: Fn(f64, &[f64]) -> Option<DriftSample>,
{
    let samples = traj.sample_uniform(n_samples);
    let mut segments: Vec<Vec<f64>> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut current_branch: Option<i8> = None;
    let mut used = 0usize;

    let flush = |seg: &mut Vec<f64>, segments: &mut Vec<Vec<f64>>| {
        if seg.len() >= min_points {
            segments.push(core::mem::take(seg));
        } else {
            seg.clear();
        }
    };

    for (t, state) in &samples {
        match integral(*t, state) {
            Some(s) if s.value.is_finite() => {
                used += 1;
                if current_branch != Some(s.branch) {
                    flush(&mut current, &mut segments);
                    current_branch = Some(s.branch);
                }
                current.push(s.value);
            }
            _ => {
                flush(&mut current, &mut segments);
                current_branch = None;
            }
        }
    }
    flush(&mut current, &mut segments);

    let max_drift = segments
        .iter()
        .map(|seg| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in seg {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            hi - lo
        })
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));

    DriftReport {
        max_drift,
        segments: segments.len(),
        points_used: used,
        points_total: samples.len(),
    }
}
