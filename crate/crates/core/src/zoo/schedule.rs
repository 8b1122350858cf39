use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Order in which clusters are updated, with a declared period bound: every
/// cluster must appear in every window of `period` consecutive steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateSchedule {
    /// 0-based cluster index per step.
    pub order: Vec<usize>,
    pub period: usize,
}

impl UpdateSchedule {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// 1-based cluster ids.
    pub fn one_based(&self) -> Vec<usize> {
        self.order.iter().map(|z| z + 1).collect()
    }
}

/// `z_k = k mod s`, period `s`.
pub fn make_cyclic_schedule(s: usize, iterations: usize) -> UpdateSchedule {
    let s = s.max(1);
    UpdateSchedule {
        order: (0..iterations).map(|k| k % s).collect(),
        period: s,
    }
}

/// Independent random permutation of the clusters in each epoch of `s` steps.
/// Consecutive epochs can separate two visits of a cluster by up to `2s - 2`
/// steps, so the declared period is `2s - 1`.
pub fn make_shuffled_schedule<R: Rng + ?Sized>(s: usize, iterations: usize, rng: &mut R) -> UpdateSchedule {
    let s = s.max(1);
    let mut order = Vec::with_capacity(iterations);
    let mut epoch: Vec<usize> = (0..s).collect();
    while order.len() < iterations {
        epoch.shuffle(rng);
        order.extend(epoch.iter().copied().take(iterations - order.len()));
    }
    UpdateSchedule {
        order,
        period: 2 * s - 1,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleReport {
    pub valid: bool,
    /// Why the schedule is rejected, if it is.
    pub reason: Option<String>,
}

/// Checks the period bound: `period >= s`, indices in range, and every
/// length-`period` window containing every cluster index.
pub fn validate_schedule(sched: &UpdateSchedule, s: usize) -> ScheduleReport {
    let fail = |reason: String| ScheduleReport {
        valid: false,
        reason: Some(reason),
    };
    if s == 0 {
        return fail("no clusters".into());
    }
    if sched.period < s {
        return fail(format!("period {} is smaller than the cluster count {s}", sched.period));
    }
    if let Some(k) = sched.order.iter().position(|&z| z >= s) {
        return fail(format!(
            "step {k} names cluster {} but only {s} clusters exist",
            sched.order[k] + 1
        ));
    }
    let t0 = sched.period;
    if sched.order.len() >= t0 {
        // sliding window counts
        let mut count = vec![0usize; s];
        let mut missing = s;
        for &z in &sched.order[..t0] {
            if count[z] == 0 {
                missing -= 1;
            }
            count[z] += 1;
        }
        let mut start = 0;
        loop {
            if missing > 0 {
                let absent = count.iter().position(|&c| c == 0).unwrap();
                return fail(format!(
                    "window starting at step {start} (length {t0}) never updates cluster {}",
                    absent + 1
                ));
            }
            if start + t0 == sched.order.len() {
                break;
            }
            let out = sched.order[start];
            count[out] -= 1;
            if count[out] == 0 {
                missing += 1;
            }
            let inc = sched.order[start + t0];
            if count[inc] == 0 {
                missing -= 1;
            }
            count[inc] += 1;
            start += 1;
        }
    }
    ScheduleReport {
        valid: true,
        reason: None,
    }
}
