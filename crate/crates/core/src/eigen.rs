//! Dense real symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by implicit-shift QL iteration.
//!
//! Storage is row-major and full (both triangles). Eigenvectors are kept as rows
//! of the transposed accumulator so every rotation touches contiguous memory.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Eigenvalues in ascending order with optional eigenvectors as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    pub vectors: Option<Array2<f64>>,
}

/// Relative tolerance for the symmetry precondition.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub fn check_symmetric(a: &Array2<f64>) -> Result<()> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::DimensionMismatch(n, m));
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in 0..i {
            let diff = (a[[i, j]] - a[[j, i]]).abs();
            if diff
                .partial_cmp(&(SYMMETRY_TOL * scale))
                .is_none_or(|o| o.is_gt())
            {
                return Err(Error::NotSymmetric { i, j, diff });
            }
        }
    }
    Ok(())
}

pub fn eigenvalues(a: &Array2<f64>) -> Result<Array1<f64>> {
    Ok(decompose(a, false)?.values)
}

pub fn eigh(a: &Array2<f64>) -> Result<SymmetricEigen> {
    decompose(a, true)
}

fn decompose(a: &Array2<f64>, want_vectors: bool) -> Result<SymmetricEigen> {
    check_symmetric(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Array1::zeros(0),
            vectors: want_vectors.then(|| Array2::zeros((0, 0))),
        });
    }
    // symmetrize so the reduction sees exactly one matrix
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut w, n, &mut d, &mut e, want_vectors);
    let mut zt = if want_vectors {
        // w holds Q (columns are basis vectors); work on its transpose
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = w[i * n + j];
            }
        }
        Some(t)
    } else {
        None
    };
    ql_implicit(&mut d, &mut e, n, zt.as_deref_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = Array1::from_iter(order.iter().map(|&i| d[i]));
    let vectors = zt.map(|zt| {
        let mut v = Array2::zeros((n, n));
        for (col, &src) in order.iter().enumerate() {
            let row = &zt[src * n..(src + 1) * n];
            for (i, &x) in row.iter().enumerate() {
                v[[i, col]] = x;
            }
        }
        v
    });
    Ok(SymmetricEigen { values, vectors })
}

/// Householder reduction (tred2 ordering: rows from the bottom up). On exit `d` is the
/// diagonal, `e[1..]` the subdiagonal and, when `accumulate` is set, `a` holds the
/// orthogonal transform Q with A = Q T Q^T.
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64], accumulate: bool) {
    // rows below this scale are already reduced to working precision; reflecting them
    // only drives roundoff into subnormals
    let anorm = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let negligible = f64::EPSILON * f64::EPSILON * anorm;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = a[i * n..i * n + i].iter().map(|x| x.abs()).sum();
            if scale <= negligible {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;

                let u: Vec<f64> = a[i * n..i * n + i].to_vec();
                // p = A u / h over the leading i x i block
                let mut f_acc = 0.0;
                for j in 0..=l {
                    if accumulate {
                        a[j * n + i] = u[j] / h;
                    }
                    let row = &a[j * n..j * n + i];
                    let g: f64 = row.iter().zip(&u).map(|(x, y)| x * y).sum();
                    e[j] = g / h;
                    f_acc += e[j] * u[j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    e[j] -= hh * u[j];
                }
                // A -= u q^T + q u^T on the full block
                for j in 0..=l {
                    let fj = u[j];
                    let gj = e[j];
                    let row = &mut a[j * n..j * n + i];
                    for ((x, &qk), &uk) in row.iter_mut().zip(&e[..i]).zip(&u) {
                        *x -= fj * qk + gj * uk;
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;

    if !accumulate {
        for i in 0..n {
            d[i] = a[i * n + i];
        }
        return;
    }
    let mut g = vec![0.0; n];
    for i in 0..n {
        if d[i] != 0.0 {
            // g_j = sum_k a[i][k] a[k][j]; a[k][j] -= g_j a[k][i]
            g[..i].iter_mut().for_each(|x| *x = 0.0);
            for k in 0..i {
                let uk = a[i * n + k];
                if uk != 0.0 {
                    let row = &a[k * n..k * n + i];
                    for (gj, &x) in g[..i].iter_mut().zip(row) {
                        *gj += uk * x;
                    }
                }
            }
            for k in 0..i {
                let c = a[k * n + i];
                if c != 0.0 {
                    let row = &mut a[k * n..k * n + i];
                    for (x, &gj) in row.iter_mut().zip(&g[..i]) {
                        *x -= gj * c;
                    }
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL on the tridiagonal (d, e). `zt`, when present, has the
/// basis vectors as rows and receives the same rotations.
fn ql_implicit(d: &mut [f64], e: &mut [f64], n: usize, mut zt: Option<&mut [f64]>) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let cap = 50 * n.max(1);
    let mut total = 0usize;
    // absolute floor so blocks of exact zeros still deflate
    let anorm = (0..n).fold(0.0f64, |a, i| a.max(d[i].abs() + e[i].abs()));
    let floor = f64::EPSILON * f64::EPSILON * anorm;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            total += 1;
            if total > cap {
                return Err(Error::NoConvergence(total));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..(i + 1) * n];
                    let zi1 = &mut hi[..n];
                    for (x, y) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let fy = *y;
                        *y = s * *x + c * fy;
                        *x = c * *x - s * fy;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
