use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::block::norm;
use crate::error::{Error, Result};

/// Uniform draw from the unit sphere in `R^dim` (normalized isotropic Gaussian).
pub fn sample_unit_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::arg("sphere dimension must be at least 1"));
    }
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-300 && n.is_finite() {
            v.iter_mut().for_each(|a| *a /= n);
            return Ok(v);
        }
    }
}

/// One-point feedback `(q_i / r_i) * h * u`.
pub fn one_point_gradient(h_value: f64, u: &[f64], q_i: usize, r_i: f64) -> Result<Vec<f64>> {
    if !(r_i > 0.0) {
        return Err(Error::arg(format!("smoothing radius must be positive, got {r_i}")));
    }
    let scale = q_i as f64 / r_i * h_value;
    Ok(u.iter().map(|a| scale * a).collect())
}

/// `x + w (x - prev)`; with no previous value the block is returned unchanged.
pub fn extrapolate(x: &[f64], prev: Option<&[f64]>, w: f64) -> Result<Vec<f64>> {
    match prev {
        None => Ok(x.to_vec()),
        Some(p) if p.len() != x.len() => Err(Error::arg(format!(
            "extrapolation needs equal dimensions, got {} and {}",
            x.len(),
            p.len()
        ))),
        Some(p) => Ok(x.iter().zip(p).map(|(a, b)| a + w * (a - b)).collect()),
    }
}

/// Step-size-dependent caps on the extrapolation weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightCaps {
    pub rho0: f64,
    /// Tighter cap used under an essentially cyclic schedule with period `t0`.
    #[serde(default)]
    pub cyclic: Option<CyclicCap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicCap {
    pub t0: usize,
    pub eps_bar: f64,
}

/// Extrapolation weight actually applied to one block.
///
/// Returns `min(w_base, caps / delta_norm)` where the caps are
/// `min(eta^{3/2}, rho0 / (2 sqrt(n_i)))` and, for cyclic schedules,
/// `eps_bar / (2 (t0 - 1) n_i)`. A zero displacement gives weight 0.
pub fn effective_weight(
    w_base: f64,
    delta_norm: f64,
    eta: f64,
    n_i: usize,
    caps: Option<&WeightCaps>,
) -> f64 {
    if delta_norm <= 0.0 || w_base <= 0.0 {
        return 0.0;
    }
    let Some(caps) = caps else {
        return w_base;
    };
    let n_i = n_i.max(1) as f64;
    let mut cap = eta.powf(1.5).min(caps.rho0 / (2.0 * n_i.sqrt()));
    if let Some(c) = caps.cyclic {
        if c.t0 > 1 {
            cap = cap.min(c.eps_bar / (2.0 * (c.t0 - 1) as f64 * n_i));
        }
    }
    w_base.min(cap / delta_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn sphere_rejects_zero_dim() {
        let mut rng = stream(0, Purpose::Probe, 0, 0);
        assert!(sample_unit_sphere(0, &mut rng).is_err());
    }

    #[test]
    fn sphere_samples_have_unit_norm() {
        let mut rng = stream(1, Purpose::Probe, 0, 0);
        for _ in 0..100 {
            let u = sample_unit_sphere(3, &mut rng).unwrap();
            assert!((norm(&u) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_sphere_is_a_fair_sign() {
        let mut plus = 0;
        let n = 20_000;
        for seed in 0..n {
            let mut rng = stream(seed, Purpose::Probe, 1, 0);
            let u = sample_unit_sphere(1, &mut rng).unwrap();
            assert!(u[0] == 1.0 || u[0] == -1.0);
            plus += usize::from(u[0] > 0.0);
        }
        // 5 sigma of a fair coin
        let dev = (plus as f64 - n as f64 / 2.0).abs();
        assert!(dev < 5.0 * (n as f64 * 0.25).sqrt(), "{plus}");
    }

    #[test]
    fn two_dimensional_sphere_moments() {
        let mut rng = stream(2, Purpose::Probe, 2, 0);
        let m = 1_000_000;
        let (mut s1, mut s2) = ([0.0; 2], [0.0; 2]);
        for _ in 0..m {
            let u = sample_unit_sphere(2, &mut rng).unwrap();
            for c in 0..2 {
                s1[c] += u[c];
                s2[c] += u[c] * u[c];
            }
        }
        for c in 0..2 {
            assert!((s1[c] / m as f64).abs() < 3e-3);
            assert!(((s2[c] / m as f64) - 0.5).abs() < 0.005);
        }
    }

    #[test]
    fn one_point_formula() {
        assert_eq!(one_point_gradient(2.0, &[1.0, 0.0], 2, 0.5).unwrap(), vec![8.0, 0.0]);
        assert_eq!(one_point_gradient(0.0, &[0.6, 0.8], 2, 0.5).unwrap(), vec![0.0, 0.0]);
        assert!(one_point_gradient(1.0, &[1.0], 1, 0.0).is_err());
        assert!(one_point_gradient(1.0, &[1.0], 1, -1.0).is_err());
    }

    #[test]
    fn extrapolation_cases() {
        assert_eq!(extrapolate(&[1.0, 1.0], Some(&[0.0, 0.0]), 0.5).unwrap(), vec![1.5, 1.5]);
        assert_eq!(extrapolate(&[1.0, 2.0], Some(&[0.0, 0.0]), 0.0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(extrapolate(&[2.0], Some(&[1.0]), 1.0).unwrap(), vec![3.0]);
        assert_eq!(extrapolate(&[2.0], None, 1.0).unwrap(), vec![2.0]);
        assert!(extrapolate(&[2.0], Some(&[1.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn weight_caps() {
        let caps = WeightCaps { rho0: 1.0, cyclic: None };
        assert_eq!(effective_weight(0.5, 0.0, 0.1, 1, Some(&caps)), 0.0);
        // eta^{3/2} = 1e-9 binds against rho0 / (2 sqrt 4) = 0.25
        let w = effective_weight(0.5, 1.0, 1e-6, 4, Some(&caps));
        assert!((w - 1e-9).abs() < 1e-21);
        // caps of 0.2 (delta 1, rho0 = 0.8, n_i = 4, eta large)
        let caps = WeightCaps { rho0: 0.8, cyclic: None };
        assert!((effective_weight(0.5, 1.0, 1.0, 4, Some(&caps)) - 0.2).abs() < 1e-15);
        assert_eq!(effective_weight(0.5, 3.0, 1e-3, 2, None), 0.5);
        let cyc = WeightCaps {
            rho0: 10.0,
            cyclic: Some(CyclicCap { t0: 3, eps_bar: 0.4 }),
        };
        // eps_bar / (2 * 2 * 1) = 0.1 < eta^{3/2} = 1
        assert!((effective_weight(0.5, 1.0, 1.0, 1, Some(&cyc)) - 0.1).abs() < 1e-15);
    }
}
