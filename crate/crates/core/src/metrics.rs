//! Error statistics over recorded trajectories.

use serde::{Deserialize, Serialize};

use crate::solver::Trajectory;

fn errors_in(traj: &Trajectory, channel: usize, from: f64, to: f64) -> impl Iterator<Item = f64> + '_ {
    let errors = traj.errors.as_deref().unwrap_or(&[]);
    traj.times
        .iter()
        .zip(errors)
        .filter(move |(t, _)| **t >= from && **t <= to)
        .map(move |(_, e)| e.channel(channel))
}

/// RMS of `e_channel` over samples with `from <= t <= to`.
pub fn window_rms(traj: &Trajectory, channel: usize, from: f64, to: f64) -> Option<f64> {
    let (n, sq) = errors_in(traj, channel, from, to).fold((0usize, 0.0), |(n, s), e| (n + 1, s + e * e));
    (n > 0).then(|| (sq / n as f64).sqrt())
}

pub fn window_max_abs(traj: &Trajectory, channel: usize, from: f64, to: f64) -> Option<f64> {
    errors_in(traj, channel, from, to).map(f64::abs).reduce(f64::max)
}

/// `max |e1|` over the last 10% of the run divided by `max |e1|` over the
/// 50%..60% window. `None` without truths; zero when both are zero.
pub fn drift_ratio(traj: &Trajectory) -> Option<f64> {
    let end = *traj.times.last()?;
    let late = window_max_abs(traj, 1, 0.9 * end, end)?;
    let mid = window_max_abs(traj, 1, 0.5 * end, 0.6 * end)?;
    Some(if late == 0.0 { 0.0 } else { late / mid })
}

/// Earliest recorded time after which `|e_channel|` stays below `threshold`
/// for the rest of the run.
pub fn settling_time(traj: &Trajectory, channel: usize, threshold: f64) -> Option<f64> {
    let errors = traj.errors.as_ref()?;
    let last_out = errors.iter().rposition(|e| e.channel(channel).abs() >= threshold);
    match last_out {
        None => traj.times.first().copied(),
        Some(i) if i + 1 < traj.len() => Some(traj.times[i + 1]),
        Some(_) => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub from: f64,
    pub to: f64,
    /// RMS error of channels 1, 2, 3.
    pub rms: [f64; 3],
    pub max_abs: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMetrics {
    pub windows: Vec<WindowStats>,
    pub max_abs: [f64; 3],
    pub drift_ratio: Option<f64>,
}

/// Summary statistics; `None` when the trajectory carries no truths.
pub fn summarize(traj: &Trajectory, windows: &[(f64, f64)]) -> Option<TrajectoryMetrics> {
    traj.errors.as_ref()?;
    let end = traj.times.last().copied().unwrap_or(0.0);
    let per_channel = |f: &dyn Fn(usize) -> Option<f64>| [1, 2, 3].map(|j| f(j).unwrap_or(f64::NAN));
    let windows = windows
        .iter()
        .map(|&(from, to)| WindowStats {
            from,
            to,
            rms: per_channel(&|j| window_rms(traj, j, from, to)),
            max_abs: per_channel(&|j| window_max_abs(traj, j, from, to)),
        })
        .collect();
    Some(TrajectoryMetrics {
        windows,
        max_abs: per_channel(&|j| window_max_abs(traj, j, 0.0, end)),
        drift_ratio: drift_ratio(traj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::ObserverState;

    fn traj(e1: &[f64]) -> Trajectory {
        let n = e1.len();
        Trajectory {
            times: (0..n).map(|i| i as f64).collect(),
            states: vec![ObserverState::ZERO; n],
            inputs: vec![0.0; n],
            truths: None,
            errors: Some(e1.iter().map(|&e| ObserverState::new(e, 0.0, 0.0)).collect()),
        }
    }

    #[test]
    fn rms_and_max() {
        let t = traj(&[3.0, -4.0, 0.0, 0.0]);
        assert_eq!(window_rms(&t, 1, 0.0, 1.0), Some((12.5f64).sqrt()));
        assert_eq!(window_max_abs(&t, 1, 0.0, 3.0), Some(4.0));
        assert_eq!(window_rms(&t, 1, 10.0, 20.0), None);
    }

    #[test]
    fn settling() {
        let t = traj(&[0.0, 0.2, 0.1, 0.01, 0.02, 0.0]);
        assert_eq!(settling_time(&t, 1, 0.05), Some(3.0));
        assert_eq!(settling_time(&traj(&[0.0, 0.0]), 1, 0.05), Some(0.0));
        assert_eq!(settling_time(&traj(&[0.0, 1.0]), 1, 0.05), None);
    }

    #[test]
    fn drift() {
        let e: Vec<f64> = (0..=100).map(|i| if i >= 90 { 2.0 } else { 1.0 }).collect();
        assert_eq!(drift_ratio(&traj(&e)), Some(2.0));
        assert_eq!(drift_ratio(&traj(&[0.0; 11])), Some(0.0));
    }
}
