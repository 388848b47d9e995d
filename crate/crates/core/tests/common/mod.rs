#![allow(dead_code)]

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Black–Scholes European put with continuous dividend yield.
pub fn bs_put(s: f64, k: f64, r: f64, d: f64, sigma: f64, t: f64) -> f64 {
    let sd = sigma * t.sqrt();
    let d1 = ((s / k).ln() + (r - d + 0.5 * sigma * sigma) * t) / sd;
    let d2 = d1 - sd;
    k * (-r * t).exp() * norm_cdf(-d2) - s * (-d * t).exp() * norm_cdf(-d1)
}

/// Plain f64 CRR American put by backward induction, independent of the
/// library lattice.
pub fn crr_american_put(s0: f64, k: f64, r: f64, sigma: f64, t: f64, steps: usize) -> f64 {
    let dt = t / steps as f64;
    let u = (sigma * dt.sqrt()).exp();
    let d = 1.0 / u;
    let p = ((r * dt).exp() - d) / (u - d);
    let disc = (-r * dt).exp();
    let mut v: Vec<f64> = (0..=steps).map(|j| (k - s0 * u.powi(j as i32) * d.powi((steps - j) as i32)).max(0.0)).collect();
    for i in (0..steps).rev() {
        for j in 0..=i {
            let s = s0 * u.powi(j as i32) * d.powi((i - j) as i32);
            v[j] = (disc * (p * v[j + 1] + (1.0 - p) * v[j])).max(k - s);
        }
    }
    v[0]
}
