use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tracklet::Tracklet;

/// Overlapping time windows covering a timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub length: f64,
    pub overlap: f64,
    /// `(start, end)` of each window; the last one is clipped to the timeline.
    pub windows: Vec<(f64, f64)>,
}

pub fn plan_windows(start: f64, end: f64, length: f64, overlap: f64) -> Result<WindowPlan> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid("window length must be positive"));
    }
    if !(overlap >= 0.0) || overlap >= length {
        return Err(Error::invalid("window overlap must be non-negative and shorter than the window"));
    }
    if !(start.is_finite() && end.is_finite()) || end < start {
        return Err(Error::invalid("timeline end precedes its start"));
    }
    let step = length - overlap;
    let mut windows = Vec::new();
    let mut k = 0usize;
    loop {
        let s = start + k as f64 * step;
        let e = (s + length).min(end);
        windows.push((s, e));
        if e >= end {
            break;
        }
        k += 1;
    }
    Ok(WindowPlan { length, overlap, windows })
}

/// Indices of the tracklets evaluated in each window. A tracklet belongs to
/// every window that contains it; one that fits in no window goes to the
/// window it overlaps most.
pub fn assign_tracklets(plan: &WindowPlan, tracklets: &[Tracklet]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); plan.windows.len()];
    for (i, t) in tracklets.iter().enumerate() {
        let mut placed = false;
        for (w, &(s, e)) in plan.windows.iter().enumerate() {
            if s <= t.t_start && t.t_end <= e {
                out[w].push(i);
                placed = true;
            }
        }
        if !placed {
            let overlap = |&(s, e): &(f64, f64)| (e.min(t.t_end) - s.max(t.t_start)).max(0.0);
            let best = (0..plan.windows.len())
                .max_by(|&a, &b| overlap(&plan.windows[a]).total_cmp(&overlap(&plan.windows[b])).then(b.cmp(&a)))
                .expect("at least one window");
            log::warn!(
                "tracklet {} ({}..{}) is longer than any window; evaluated in window {best}",
                t.id,
                t.t_start,
                t.t_end
            );
            out[best].push(i);
        }
    }
    out
}
