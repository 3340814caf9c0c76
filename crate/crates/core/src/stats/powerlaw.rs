//! Discrete power-law fitting.
//!
//! For each candidate cutoff `xmin` (every distinct sample value) the
//! exponent is the discrete maximum-likelihood estimate, i.e. the root of
//! `-ζ'(α, xmin) / ζ(α, xmin) = mean(ln x | x ≥ xmin)`. The cutoff with the
//! smallest Kolmogorov-Smirnov distance between the empirical and fitted
//! tail CDFs wins. Goodness of fit is a semi-parametric bootstrap: each
//! replicate draws the tail from the fitted law and the body from the
//! empirical values below `xmin`, is refitted from scratch, and the p-value
//! is the share of replicates whose distance is at least the observed one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::zeta::hurwitz_scaled;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

const ALPHA_MIN: f64 = 1.0 + 1e-6;
const ALPHA_MAX: f64 = 1e3;
const SAMPLER_TABLE_MAX: usize = 1 << 16;
pub const DEFAULT_MAX_ALPHA: f64 = 3.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerLawOptions {
    /// Bootstrap replicates for the p-value; 0 skips the test.
    pub bootstrap: usize,
    /// Root seed; replicate `i` uses a generator derived from `(seed, i)`.
    pub seed: u64,
    /// Use this cutoff instead of scanning.
    pub xmin: Option<u64>,
    /// Upper end of the exponent search range; the likelihood is concave in
    /// the exponent, so a root beyond it is clamped to it. `None` searches up
    /// to 1000.
    pub max_alpha: Option<f64>,
}

impl Default for PowerLawOptions {
    fn default() -> Self {
        Self {
            bootstrap: 100,
            seed: 0,
            xmin: None,
            max_alpha: Some(DEFAULT_MAX_ALPHA),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub xmin: u64,
    pub ks_distance: f64,
    /// `None` when no bootstrap was requested.
    pub gof_p: Option<f64>,
    pub n_tail: usize,
    pub n: usize,
    pub bootstrap_replicates: usize,
    /// Replicates whose refit failed; excluded from the p-value.
    pub bootstrap_failures: usize,
}

/// Sorted distinct values with suffix sufficient statistics.
struct Distinct {
    values: Vec<u64>,
    counts: Vec<u64>,
    tail_n: Vec<u64>,
    tail_log: Vec<f64>,
}

impl Distinct {
    fn new(sorted: &[u64]) -> Self {
        let mut values = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        for &v in sorted {
            if values.last() == Some(&v) {
                *counts.last_mut().unwrap() += 1;
            } else {
                values.push(v);
                counts.push(1);
            }
        }
        let m = values.len();
        let mut tail_n = vec![0u64; m];
        let mut tail_log = vec![0.0f64; m];
        let (mut n, mut l) = (0u64, 0.0f64);
        for i in (0..m).rev() {
            n += counts[i];
            l += counts[i] as f64 * (values[i] as f64).ln();
            tail_n[i] = n;
            tail_log[i] = l;
        }
        Self {
            values,
            counts,
            tail_n,
            tail_log,
        }
    }
}

/// `E_α[ln X | X ≥ xmin]` for the discrete power law.
fn expected_log(alpha: f64, xmin: f64) -> f64 {
    let (z, w) = hurwitz_scaled(alpha, xmin, xmin);
    -w / z
}

/// Maximum-likelihood exponent given the tail's mean log, over
/// `[ALPHA_MIN, max_alpha]`. `None` when the root lies below the range or
/// the tail is a point mass.
fn mle_alpha(xmin: f64, mean_log: f64, max_alpha: Option<f64>) -> Option<f64> {
    if mean_log - xmin.ln() <= 1e-12 {
        return None;
    }
    let f = |a: f64| expected_log(a, xmin) - mean_log;
    let lo = ALPHA_MIN;
    let f_lo = f(lo);
    if f_lo <= 0.0 {
        return None;
    }
    if let Some(cap) = max_alpha {
        if f(cap) >= 0.0 {
            return Some(cap);
        }
        let f_cap = f(cap);
        return Some(brent_root(f, lo, cap, f_lo, f_cap, 1e-13));
    }
    let mut hi = 2.0;
    let mut f_hi = f(hi);
    while f_hi > 0.0 {
        if hi >= ALPHA_MAX {
            return None;
        }
        hi = (1.0 + 2.0 * (hi - 1.0)).min(ALPHA_MAX);
        f_hi = f(hi);
    }
    let lo = if hi > 2.0 { 1.0 + (hi - 1.0) / 2.0 } else { lo };
    let f_lo = f(lo);
    Some(brent_root(f, lo, hi, f_lo, f_hi, 1e-13))
}

/// Brent's root finder on a sign-changing bracket.
fn brent_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    b
}

/// KS distance between the empirical tail starting at distinct index `i`
/// and the fitted law. Evaluated at each distinct value.
fn ks_distance(d: &Distinct, i: usize, alpha: f64) -> f64 {
    let xmin = d.values[i] as f64;
    let n_tail = d.tail_n[i] as f64;
    let (z0, _) = hurwitz_scaled(alpha, xmin, xmin);
    // `tail` holds xmin^α ζ(α, next) for the current `next`.
    let mut tail = z0;
    let mut next = d.values[i];
    let mut cum = 0u64;
    let mut dist = 0.0f64;
    for j in i..d.values.len() {
        let v = d.values[j];
        let steps = v + 1 - next;
        if steps <= 64 {
            for k in next..=v {
                tail -= (k as f64 / xmin).powf(-alpha);
            }
        } else {
            tail = hurwitz_scaled(alpha, (v + 1) as f64, xmin).0;
        }
        next = v + 1;
        cum += d.counts[j];
        let emp_survival = (d.tail_n[i] - cum) as f64 / n_tail;
        let fit_survival = (tail / z0).max(0.0);
        dist = dist.max((emp_survival - fit_survival).abs());
        if emp_survival <= dist && fit_survival <= dist {
            break;
        }
    }
    dist
}

struct Candidate {
    index: usize,
    alpha: f64,
    ks: f64,
}

fn fit_at(d: &Distinct, i: usize, max_alpha: Option<f64>) -> Option<Candidate> {
    if d.tail_n[i] < 2 || i + 1 >= d.values.len() {
        return None;
    }
    let mean_log = d.tail_log[i] / d.tail_n[i] as f64;
    let alpha = mle_alpha(d.values[i] as f64, mean_log, max_alpha)?;
    Some(Candidate {
        index: i,
        alpha,
        ks: ks_distance(d, i, alpha),
    })
}

fn check_samples(samples: &[u64]) -> Result<Vec<u64>> {
    if samples.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: samples.len(),
        });
    }
    if samples.contains(&0) {
        return Err(Error::invalid("power-law samples must be positive integers"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::DegenerateSample(format!("all {} samples equal {}", sorted.len(), sorted[0])));
    }
    Ok(sorted)
}

fn point_fit(sorted: &[u64], options: &PowerLawOptions) -> Result<(Distinct, Candidate)> {
    let Some(xmin) = options.xmin else {
        let d = Distinct::new(sorted);
        let best = (0..d.values.len())
            .filter_map(|i| fit_at(&d, i, options.max_alpha))
            .fold(None, |best: Option<Candidate>, c| match best {
                Some(b) if b.ks <= c.ks => Some(b),
                _ => Some(c),
            })
            .ok_or_else(|| Error::DegenerateSample("no cutoff leaves a fittable tail".into()))?;
        return Ok((d, best));
    };
    let tail = &sorted[sorted.partition_point(|&v| v < xmin)..];
    if tail.len() < 2 {
        return Err(Error::InsufficientTail { n_tail: tail.len() });
    }
    let mut d = Distinct::new(tail);
    // The cutoff need not be an observed value.
    if d.values[0] != xmin {
        d.values.insert(0, xmin);
        d.counts.insert(0, 0);
        d.tail_n.insert(0, d.tail_n[0]);
        d.tail_log.insert(0, d.tail_log[0]);
    }
    let mean_log = d.tail_log[0] / d.tail_n[0] as f64;
    let alpha = mle_alpha(xmin as f64, mean_log, options.max_alpha)
        .ok_or_else(|| Error::DegenerateSample(format!("every tail sample equals the cutoff {xmin}")))?;
    let ks = ks_distance(&d, 0, alpha);
    Ok((d, Candidate { index: 0, alpha, ks }))
}

/// Samples a discrete power law on `[xmin, ∞)` by table inversion, switching
/// to the rounded continuous approximation beyond the table.
pub struct PowerLawSampler {
    alpha: f64,
    xmin: u64,
    cdf: Vec<f64>,
}

impl PowerLawSampler {
    pub fn new(alpha: f64, xmin: u64) -> Self {
        let q = xmin as f64;
        let (z0, _) = hurwitz_scaled(alpha, q, q);
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for k in 0..SAMPLER_TABLE_MAX as u64 {
            acc += ((xmin + k) as f64 / q).powf(-alpha) / z0;
            cdf.push(acc);
            if 1.0 - acc < 1e-12 {
                break;
            }
        }
        Self { alpha, xmin, cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.cdf.len() {
            return self.xmin + idx as u64;
        }
        let start = (self.xmin + self.cdf.len() as u64) as f64 - 0.5;
        let v: f64 = rng.random();
        let x = (start * (1.0 - v).powf(-1.0 / (self.alpha - 1.0)) + 0.5).floor();
        x.min(9.0e15) as u64
    }
}

/// Fits a discrete power law to positive integer samples.
pub fn fit_power_law(samples: &[u64], options: PowerLawOptions) -> Result<PowerLawFit> {
    if let Some(cap) = options.max_alpha {
        if !(cap > ALPHA_MIN && cap <= ALPHA_MAX) {
            return Err(Error::invalid(format!("max_alpha must lie in (1, {ALPHA_MAX}], got {cap}")));
        }
    }
    let sorted = check_samples(samples)?;
    let (d, best) = point_fit(&sorted, &options)?;
    let xmin = d.values[best.index];
    let n_tail = d.tail_n[best.index] as usize;
    let n = sorted.len();

    let (gof_p, failures) = if options.bootstrap == 0 {
        (None, 0)
    } else {
        let body = &sorted[..n - n_tail];
        let sampler = PowerLawSampler::new(best.alpha, xmin);
        let tail_share = n_tail as f64 / n as f64;
        let distances: Vec<Option<f64>> = (0..options.bootstrap)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(options.seed, r as u64));
                let mut synth: Vec<u64> = (0..n)
                    .map(|_| {
                        if body.is_empty() || rng.random::<f64>() < tail_share {
                            sampler.sample(&mut rng)
                        } else {
                            body[rng.random_range(0..body.len())]
                        }
                    })
                    .collect();
                synth.sort_unstable();
                if synth[0] == synth[n - 1] {
                    return None;
                }
                point_fit(&synth, &options).ok().map(|(_, c)| c.ks)
            })
            .collect();
        let ok: Vec<f64> = distances.iter().flatten().copied().collect();
        let failures = distances.len() - ok.len();
        let p = if ok.is_empty() {
            None
        } else {
            Some(ok.iter().filter(|&&ks| ks >= best.ks).count() as f64 / ok.len() as f64)
        };
        (p, failures)
    };

    Ok(PowerLawFit {
        alpha: best.alpha,
        xmin,
        ks_distance: best.ks,
        gof_p,
        n_tail,
        n,
        bootstrap_replicates: options.bootstrap,
        bootstrap_failures: failures,
    })
}
