//! Independent oracles used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// e^{-t} I_0(t) = (1/pi) int_0^pi exp(-t (1 - cos theta)) dtheta, by the trapezoid rule
/// (spectrally accurate for this periodic integrand).
pub fn scaled_bessel_i0(t: f64) -> f64 {
    let m = 1024;
    let h = PI / m as f64;
    let mut s = 0.5 * (1.0 + (-2.0 * t).exp());
    for i in 1..m {
        let th = i as f64 * h;
        s += (-t * (1.0 - th.cos())).exp();
    }
    s * h / PI
}

/// W_3 = (2 pi)^-3 int_{T^3} dq / (3 - sum_j cos q_j) = int_0^inf (e^{-t} I_0(t))^3 dt.
///
/// Composite Simpson on [0, T] plus the large-t expansion
/// (2 pi t)^{-3/2} (1 + 3 / (8 t)) integrated over [T, inf).
pub fn watson_w3() -> f64 {
    let t_max = 400.0;
    let steps = 40_000;
    let h = t_max / steps as f64;
    let f = |t: f64| scaled_bessel_i0(t).powi(3);
    let mut s = f(0.0) + f(t_max);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    let body = s * h / 3.0;
    let tail = (2.0 * PI).powf(-1.5) * (2.0 / t_max.sqrt() + 0.25 * t_max.powf(-1.5));
    body + tail
}

/// Closed form of 3 W_3 in Gamma functions.
pub fn watson_w3_gamma() -> f64 {
    let g = gamma(1.0 / 24.0) * gamma(5.0 / 24.0) * gamma(7.0 / 24.0) * gamma(11.0 / 24.0);
    6f64.sqrt() / (32.0 * PI.powi(3)) * g / 3.0
}

/// Midpoint lattice sum N^-3 sum_n 1 / (3 - sum_j cos q_j) on the half-step grid.
pub fn watson_lattice_sum(n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let c: Vec<f64> = (0..n).map(|i| (-PI + (i as f64 + 0.5) * h).cos()).collect();
    let mut s = 0.0;
    for a in &c {
        for b in &c {
            for d in &c {
                s += 1.0 / (3.0 - a - b - d);
            }
        }
    }
    s / (n * n * n) as f64
}
