//! Gaussian kernel density on `[0, 1]` with reflecting boundaries.
//!
//! Every sample is mirrored across both walls repeatedly (the method of
//! images), so no kernel mass leaves the interval. The sampled curve is
//! then rescaled to unit trapezoid mass, which absorbs discretisation error
//! when the bandwidth is narrower than the grid spacing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::summary::quantile_sorted;
use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 512;
/// Kernel support cut-off in bandwidths.
const CUTOFF: f64 = 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub bandwidth: f64,
    pub xs: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.xs, &self.density)
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `0.9 · min(sd, IQR / 1.34) · n^{-1/5}`; falls back to whichever spread
/// is non-zero.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let iqr = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    0.9 * spread * n.powf(-0.2)
}

pub fn smooth_distribution(values: &[f64], bandwidth: Option<f64>) -> Result<DensityCurve> {
    if values.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("values must lie in [0, 1]"));
    }
    let h = match bandwidth {
        Some(h) if h.is_finite() && h > 0.0 => h,
        Some(h) => return Err(Error::invalid(format!("bandwidth must be positive, got {h}"))),
        None => {
            let h = silverman_bandwidth(values);
            if h <= 0.0 {
                return Err(Error::DegenerateSample(
                    "all values are identical; pass an explicit bandwidth".into(),
                ));
            }
            h
        }
    };

    let step = 1.0 / (GRID_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..GRID_POINTS).map(|j| j as f64 * step).collect();
    let mut density = vec![0.0f64; GRID_POINTS];
    let reach = CUTOFF * h;
    let periods = (reach / 2.0).ceil() as i64 + 1;
    let norm = 1.0 / (h * (2.0 * PI).sqrt());
    for &v in values {
        for k in -periods..=periods {
            let shift = 2.0 * k as f64;
            for centre in [v + shift, -v + shift] {
                if centre < -reach || centre > 1.0 + reach {
                    continue;
                }
                let lo = ((centre - reach) / step).ceil().max(0.0) as usize;
                let hi = ((centre + reach) / step).floor().min((GRID_POINTS - 1) as f64);
                if hi < 0.0 {
                    continue;
                }
                for j in lo..=hi as usize {
                    let z = (xs[j] - centre) / h;
                    density[j] += norm * (-0.5 * z * z).exp();
                }
            }
        }
    }
    let mass = trapezoid(&xs, &density);
    if mass > 0.0 {
        density.iter_mut().for_each(|y| *y /= mass);
    }
    Ok(DensityCurve {
        bandwidth: h,
        xs,
        density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_mass() {
        let curve = smooth_distribution(&[0.0, 0.01, 0.5, 0.99, 1.0], None).unwrap();
        assert_eq!(curve.xs.len(), GRID_POINTS);
        assert!((curve.trapezoid_mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn reflection_keeps_mass_near_boundary_without_rescaling() {
        // With a grid-resolved bandwidth the raw images already integrate
        // to one, so the rescale factor is close to 1.
        let values = vec![0.0; 50];
        let curve = smooth_distribution(&values, Some(0.05)).unwrap();
        let peak = curve.density[0];
        // Half-normal at the wall: 2 φ(0) / h.
        let expected = 2.0 / (0.05 * (2.0 * PI).sqrt());
        assert!((peak - expected).abs() / expected < 1e-3, "{peak} vs {expected}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(smooth_distribution(&[0.3], None), Err(Error::TooFewValues { .. })));
        assert!(matches!(
            smooth_distribution(&[0.3, 0.3, 0.3], None),
            Err(Error::DegenerateSample(_))
        ));
        assert!(smooth_distribution(&[0.3, 1.2], None).is_err());
        assert!(smooth_distribution(&[0.3, 0.4], Some(0.0)).is_err());

        let spike = smooth_distribution(&[0.3, 0.3, 0.3], Some(0.01)).unwrap();
        let argmax = spike
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((spike.xs[argmax] - 0.3).abs() < 2.0 / GRID_POINTS as f64);
        assert!((spike.trapezoid_mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn uniform_sample_is_flat_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let values: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let curve = smooth_distribution(&values, None).unwrap();
        let worst = curve
            .xs
            .iter()
            .zip(&curve.density)
            .filter(|(x, _)| (0.1..=0.9).contains(*x))
            .map(|(_, y)| (y - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.1, "max deviation {worst}");
    }
}
