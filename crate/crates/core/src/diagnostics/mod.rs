//! Monte-Carlo checks of the gradient estimators: moments, the local-vs-global
//! covariance gap, bias audits, and gradient-bound audits of run traces.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose, StreamRng};
use crate::zoo::{one_point_gradient, sample_unit_sphere, BlockVector, NetworkedObjective, RunTrace};

const CHUNK: usize = 4096;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub samples: usize,
    pub mean: Vec<f64>,
    /// Row-major unbiased sample covariance.
    pub covariance: Vec<Vec<f64>>,
    pub trace: f64,
    /// Standard error of each mean component.
    pub mean_se: Vec<f64>,
    /// Standard error of the covariance trace.
    pub trace_se: f64,
}

impl CovarianceReport {
    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let d = self.mean.len();
        DMatrix::from_fn(d, d, |r, c| self.covariance[r][c])
    }

    /// Standard error of the Euclidean norm of the mean, `sqrt(trace / M)`.
    pub fn mean_norm_se(&self) -> f64 {
        (self.trace / self.samples as f64).sqrt()
    }
}

fn chunked<F, T>(m: usize, f: F) -> Vec<T>
where
    F: Fn(std::ops::Range<usize>) -> T + Sync,
    T: Send,
{
    let n_chunks = m.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(m)))
        .collect()
}

/// Sample mean and covariance of `M` draws of `sampler(j, rng)`, draw `j`
/// using stream `(seed, Diagnostics, j, salt)`.
///
/// Draws are regenerated for a second, centered pass, and chunk partial sums
/// are combined in a fixed order, so the result does not depend on the
/// number of threads.
pub fn mc_covariance<F>(sampler: F, m: usize, seed: u64, salt: u64) -> Result<CovarianceReport>
where
    F: Fn(usize, &mut StreamRng) -> Vec<f64> + Sync,
{
    if m < 2 {
        return Err(Error::arg("at least two draws are needed for a covariance"));
    }
    let draw = |j: usize| sampler(j, &mut stream(seed, Purpose::Diagnostics, j as u64, salt));
    let d = draw(0).len();
    if d == 0 {
        return Err(Error::arg("estimator returned an empty vector"));
    }

    let partial_means = chunked(m, |range| {
        let mut acc = vec![CompensatedSum::default(); d];
        for j in range {
            let g = draw(j);
            for (a, v) in acc.iter_mut().zip(&g) {
                a.add(*v);
            }
        }
        acc
    });
    let mut sums = vec![CompensatedSum::default(); d];
    for p in &partial_means {
        for (s, v) in sums.iter_mut().zip(p) {
            s.merge(v);
        }
    }
    let mean: Vec<f64> = sums.iter().map(|s| s.value() / m as f64).collect();

    struct Second {
        outer: Vec<CompensatedSum>,
        sq: CompensatedSum,
        sq2: CompensatedSum,
    }
    let partial = chunked(m, |range| {
        let mut acc = Second {
            outer: vec![CompensatedSum::default(); d * d],
            sq: CompensatedSum::default(),
            sq2: CompensatedSum::default(),
        };
        for j in range {
            let g = draw(j);
            let c: Vec<f64> = g.iter().zip(&mean).map(|(a, b)| a - b).collect();
            for r in 0..d {
                for s in r..d {
                    acc.outer[r * d + s].add(c[r] * c[s]);
                }
            }
            let n2: f64 = c.iter().map(|v| v * v).sum();
            acc.sq.add(n2);
            acc.sq2.add(n2 * n2);
        }
        acc
    });
    let mut outer = vec![CompensatedSum::default(); d * d];
    let mut sq = CompensatedSum::default();
    let mut sq2 = CompensatedSum::default();
    for p in &partial {
        for (o, v) in outer.iter_mut().zip(&p.outer) {
            o.merge(v);
        }
        sq.merge(&p.sq);
        sq2.merge(&p.sq2);
    }
    let denom = (m - 1) as f64;
    let mut covariance = vec![vec![0.0; d]; d];
    for r in 0..d {
        for s in r..d {
            let v = outer[r * d + s].value() / denom;
            covariance[r][s] = v;
            covariance[s][r] = v;
        }
    }
    let trace: f64 = (0..d).map(|r| covariance[r][r]).sum();
    let mf = m as f64;
    let mean_sq = sq.value() / mf;
    let var_sq = (sq2.value() / mf - mean_sq * mean_sq).max(0.0) * mf / denom;
    Ok(CovarianceReport {
        samples: m,
        mean_se: (0..d).map(|r| (covariance[r][r] / mf).sqrt()).collect(),
        mean,
        covariance,
        trace,
        trace_se: (var_sq / mf).sqrt(),
    })
}

/// Local one-point estimate for agent `i`: `(q_i/r) h_i(x + r u e_i, xi) u`.
pub fn local_estimate<O: NetworkedObjective + ?Sized>(
    obj: &O,
    x: &BlockVector,
    agent: usize,
    r: f64,
    rng: &mut StreamRng,
) -> Vec<f64> {
    let noise = obj.sample_noise(rng);
    let q_i = x.block_dim(agent);
    let u = sample_unit_sphere(q_i, rng).expect("block dims are positive");
    let mut probe = x.clone();
    for (p, d) in probe.block_mut(agent).iter_mut().zip(&u) {
        *p += r * d;
    }
    let h = obj.local_observation(agent, &probe, &noise);
    one_point_gradient(h, &u, q_i, r).expect("radius checked by caller")
}

/// Block `i` of the global one-point estimate: `(q/r) h(x + r z, xi) z_i`.
pub fn global_estimate_block<O: NetworkedObjective + ?Sized>(
    obj: &O,
    x: &BlockVector,
    agent: usize,
    r: f64,
    rng: &mut StreamRng,
) -> Vec<f64> {
    let noise = obj.sample_noise(rng);
    let q = x.dim();
    let z = sample_unit_sphere(q, rng).expect("dimension is positive");
    let mut probe = x.clone();
    for (p, d) in probe.as_mut_slice().iter_mut().zip(&z) {
        *p += r * d;
    }
    let h = obj.global_observation(&probe, &noise);
    let g = one_point_gradient(h, &z, q, r).expect("radius checked by caller");
    let dims = x.dims();
    let start: usize = dims[..agent].iter().sum();
    g[start..start + dims[agent]].to_vec()
}

/// Leading term of the trace gap between global and local estimators of
/// block `i`: `q_i * sum_{j != i} q_j * E[h^2] / r^2`.
pub fn predicted_gap_leading(q_i: usize, q_others: usize, mean_h_sq: f64, r: f64) -> f64 {
    (q_i * q_others) as f64 * mean_h_sq / (r * r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub local_trace: f64,
    pub global_trace: f64,
    pub gap: f64,
    pub gap_se: f64,
    /// Gap in units of its standard error.
    pub z: f64,
    /// One-sided normal p-value for `gap <= 0`.
    pub p_value: f64,
    pub predicted: f64,
    /// `gap / predicted`; `None` when the prediction is zero.
    pub ratio: Option<f64>,
    pub significant: bool,
}

/// Compares the covariance traces of the two estimators; `significant` means
/// the gap is positive at 5 standard errors.
pub fn covariance_gap(local: &CovarianceReport, global: &CovarianceReport, predicted: f64) -> Result<GapReport> {
    if local.mean.len() != global.mean.len() {
        return Err(Error::arg("covariance reports have different dimensions"));
    }
    let gap = global.trace - local.trace;
    let gap_se = (local.trace_se.powi(2) + global.trace_se.powi(2)).sqrt();
    let z = if gap_se > 0.0 { gap / gap_se } else if gap > 0.0 { f64::INFINITY } else { 0.0 };
    let std_normal = Normal::standard();
    Ok(GapReport {
        local_trace: local.trace,
        global_trace: global.trace,
        gap,
        gap_se,
        z,
        p_value: 1.0 - std_normal.cdf(z),
        predicted,
        ratio: (predicted != 0.0).then(|| gap / predicted),
        significant: z > 5.0,
    })
}

/// Central differences `(f(x + h e_j) - f(x - h e_j)) / 2h`.
pub fn finite_difference_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::arg(format!("difference step must be positive, got {h}")));
    }
    let mut p = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        p[j] = x[j] + h;
        let fp = f(&p);
        p[j] = x[j] - h;
        let fm = f(&p);
        p[j] = x[j];
        out.push((fp - fm) / (2.0 * h));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasAudit {
    pub agent: usize,
    pub radius: f64,
    pub samples: usize,
    pub bias: f64,
    pub standard_error: f64,
    /// `phi * r + 3 * standard_error`.
    pub bound: f64,
    pub passed: bool,
}

/// Distance between the Monte-Carlo mean of agent `i`'s local estimate and
/// the exact block gradient, against `phi r` plus a 3-sigma band.
pub fn bias_audit<O: NetworkedObjective + ?Sized>(
    obj: &O,
    x: &BlockVector,
    agent: usize,
    r: f64,
    phi: f64,
    m: usize,
    seed: u64,
) -> Result<BiasAudit> {
    if !(r > 0.0) {
        return Err(Error::arg("smoothing radius must be positive"));
    }
    let grad = obj
        .exact_gradient(x)
        .ok_or_else(|| Error::arg("bias audit needs an exact gradient"))?;
    let report = mc_covariance(|_, rng| local_estimate(obj, x, agent, r, rng), m, seed, agent as u64)?;
    let bias = report
        .mean
        .iter()
        .zip(grad.block(agent))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let se = report.mean_norm_se();
    let bound = phi * r + 3.0 * se;
    Ok(BiasAudit {
        agent,
        radius: r,
        samples: m,
        bias,
        standard_error: se,
        bound,
        passed: bias <= bound,
    })
}

/// `(q_i / r_i) c [alpha_i f_i(x^0) + lambda0 rho0]`.
pub fn estimate_norm_bound(q_i: usize, r_i: f64, c: f64, alpha_f_i_x0: f64, lambda0: f64, rho0: f64) -> f64 {
    q_i as f64 / r_i * c * (alpha_f_i_x0 + lambda0 * rho0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub iter: usize,
    /// 1-based agent id.
    pub agent: usize,
    pub norm: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoundAudit {
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
}

impl GradientBoundAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every recorded estimate norm against its agent's bound.
pub fn gradient_bound_audit(trace: &RunTrace, bounds: &[f64]) -> GradientBoundAudit {
    let mut checked = 0;
    let mut violations = Vec::new();
    for rec in &trace.records {
        for &(agent, norm) in &rec.grad_norms {
            checked += 1;
            let bound = bounds.get(agent).copied().unwrap_or(f64::NAN);
            if !(norm <= bound) {
                violations.push(BoundViolation {
                    iter: rec.iter,
                    agent: agent + 1,
                    norm,
                    bound,
                });
            }
        }
    }
    GradientBoundAudit { checked, violations }
}

/// Plain-text rendering of a serializable report, one `key: value` per line.
pub fn render_text<T: Serialize>(title: &str, report: &T) -> Result<String> {
    let value = serde_json::to_value(report)?;
    let mut out = format!("{title}\n");
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            out.push_str(&format!("  {k}: {v}\n"));
        }
    } else {
        out.push_str(&format!("  {value}\n"));
    }
    Ok(out)
}
