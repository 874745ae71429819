//! The free two-particle dispersion and its closed-form band geometry.
//!
//! With `a_j = (1/m1 + 1/m2) cos(k_j/2)` and `b_j = (1/m2 - 1/m1) sin(k_j/2)`
//! the dispersion separates as
//!
//! ```text
//! E_k(q) = 3 (1/m1 + 1/m2) - sum_j r_j cos(q_j - phase_j),   r_j = sqrt(a_j^2 + b_j^2),
//! ```
//!
//! so the band edges, the total width and the directional widths `2 r_j` are
//! all explicit. `phase_j` is the location of the minimum along axis `j`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::model::{MassPair, Quasimomentum, RelativeMomentum};

/// eps(q) = sum_j (1 - cos q_j), in [0, 6].
pub fn eps(q: [f64; 3]) -> f64 {
    q.iter().map(|c| 1.0 - c.cos()).sum()
}

/// E_k(q) = eps(k/2 + q) / m1 + eps(k/2 - q) / m2.
pub fn dispersion(m: &MassPair, k: &Quasimomentum, q: &RelativeMomentum) -> f64 {
    dispersion_at(m, k, q.components())
}

/// Same as [`dispersion`] on a raw coordinate triple (grid nodes are not wrapped).
pub fn dispersion_at(m: &MassPair, k: &Quasimomentum, q: [f64; 3]) -> f64 {
    let k = k.components();
    let plus = [0.5 * k[0] + q[0], 0.5 * k[1] + q[1], 0.5 * k[2] + q[2]];
    let minus = [0.5 * k[0] - q[0], 0.5 * k[1] - q[1], 0.5 * k[2] - q[2]];
    eps(plus) / m.m1() + eps(minus) / m.m2()
}

/// cos(k/2) for k in (-pi, pi], written so that k = pi gives exactly zero.
fn half_cos(k: f64) -> f64 {
    (0.5 * (std::f64::consts::PI - k)).sin()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandGeometry {
    pub center: f64,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub r: [f64; 3],
    pub phase: [f64; 3],
    pub e_min: f64,
    pub e_max: f64,
    pub w_b: f64,
    pub w_jb: [f64; 3],
}

impl BandGeometry {
    /// center - sum_j r_j cos(q_j - phase_j).
    pub fn separable(&self, q: [f64; 3]) -> f64 {
        self.center
            - (0..3)
                .map(|j| self.r[j] * (q[j] - self.phase[j]).cos())
                .sum::<f64>()
    }
}

pub fn band_geometry(m: &MassPair, k: &Quasimomentum) -> BandGeometry {
    let center = 3.0 * m.inv_sum();
    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    let mut r = [0.0; 3];
    let mut phase = [0.0; 3];
    for j in 0..3 {
        let kj = k.get(j);
        a[j] = m.inv_sum() * half_cos(kj);
        b[j] = m.inv_diff() * (0.5 * kj).sin();
        r[j] = a[j].hypot(b[j]);
        phase[j] = if r[j] > 0.0 { b[j].atan2(a[j]) } else { 0.0 };
    }
    let w_jb = r.map(|x| 2.0 * x);
    let w_b = w_jb.iter().sum();
    let spread: f64 = r.iter().sum();
    BandGeometry {
        center,
        a,
        b,
        r,
        phase,
        e_min: center - spread,
        e_max: center + spread,
        w_b,
        w_jb,
    }
}

/// Axes (0-based) whose directional width is at most `tol`.
pub fn degenerate_directions(m: &MassPair, k: &Quasimomentum, tol: f64) -> BTreeSet<usize> {
    let g = band_geometry(m, k);
    (0..3).filter(|&j| g.w_jb[j] <= tol).collect()
}
