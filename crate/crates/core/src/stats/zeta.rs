//! Hurwitz zeta function `ζ(s, q) = Σ_{k≥0} (q + k)^{-s}` for `s > 1`.
//!
//! Evaluated by direct summation followed by an Euler-Maclaurin tail.
//! Results can be scaled by `c^s` to keep large exponents representable.

/// `B_{2j} / (2j)!` for `j = 1..=8`.
const BERNOULLI_OVER_FACTORIAL: [f64; 8] = [
    1.0 / 6.0 / 2.0,
    -1.0 / 30.0 / 24.0,
    1.0 / 42.0 / 720.0,
    -1.0 / 30.0 / 40_320.0,
    5.0 / 66.0 / 3_628_800.0,
    -691.0 / 2730.0 / 479_001_600.0,
    7.0 / 6.0 / 87_178_291_200.0,
    -3617.0 / 510.0 / 20_922_789_888_000.0,
];

/// Returns `(c^s ζ(s, q), c^s ∂ζ/∂s (s, q))`.
pub fn hurwitz_scaled(s: f64, q: f64, c: f64) -> (f64, f64) {
    debug_assert!(s > 1.0 && q > 0.0 && c > 0.0);
    let target = 12.0_f64.max(2.0 * s);
    let n_direct = if q >= target { 0 } else { (target - q).ceil() as usize };

    let mut z = 0.0;
    let mut w = 0.0;
    for k in 0..n_direct {
        let x = q + k as f64;
        let ln_x = x.ln();
        let t = (-s * (ln_x - c.ln())).exp();
        z += t;
        w -= ln_x * t;
        // Remaining sum ≤ t (1 + x / (s - 1)); stop once it is negligible.
        if t * (1.0 + x / (s - 1.0)) < 1e-17 * z {
            return (z, w);
        }
    }

    let a = q + n_direct as f64;
    let ln_a = a.ln();
    let r = (-s * (ln_a - c.ln())).exp();
    let sm1 = s - 1.0;
    z += a * r / sm1 + 0.5 * r;
    w += a * r * (-ln_a / sm1 - 1.0 / (sm1 * sm1)) - 0.5 * ln_a * r;

    // Correction terms B_{2j}/(2j)! · s(s+1)…(s+2j-2) · a^{-s-2j+1}.
    let mut poly = s;
    let mut dpoly = 1.0;
    let mut a_pow = 1.0 / a;
    for (j, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if j > 0 {
            let k1 = s + (2 * j - 1) as f64;
            let k2 = s + (2 * j) as f64;
            dpoly = dpoly * k1 * k2 + poly * (k1 + k2);
            poly *= k1 * k2;
            a_pow /= a * a;
        }
        let term = coef * r * a_pow;
        z += term * poly;
        w += term * (dpoly - ln_a * poly);
    }
    (z, w)
}

pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    hurwitz_scaled(s, q, 1.0).0
}
