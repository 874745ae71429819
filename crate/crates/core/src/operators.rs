//! Finite representatives of H0(k), V, H(k), V^(1/2) and the Birman-Schwinger
//! operator G(k, z) on the discrete torus dual to a [`MomentumGrid`].
//!
//! For a potential supported inside the centered position box (N >= 2R + 1) the
//! matrix `(1/N^3) sum_x v(x) cos((q_m - q_n, x))` is unitarily equivalent to
//! multiplication by v on the periodic lattice Z_N^3, so the only approximation
//! is the finite volume.

use std::fmt;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::dispersion::dispersion_at;
use crate::eigen;
use crate::error::{Error, Result};
use crate::model::{dot_site, MassPair, MomentumGrid, Potential, Quasimomentum};
use crate::spectral::spectral_radius;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    H0,
    V,
    H,
    Vhalf,
    BS,
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorKind::H0 => "H0",
            OperatorKind::V => "V",
            OperatorKind::H => "H",
            OperatorKind::Vhalf => "Vhalf",
            OperatorKind::BS => "BS",
        };
        f.write_str(s)
    }
}

/// Dense real symmetric matrix tied to the grid it was assembled on.
#[derive(Debug, Clone)]
pub struct GridOperator {
    kind: OperatorKind,
    grid: MomentumGrid,
    matrix: Array2<f64>,
}

/// Eigenvalues of a Birman-Schwinger matrix below this (relative) level are a numerical failure.
pub const PSD_TOL: f64 = 1e-10;

impl GridOperator {
    fn new(kind: OperatorKind, grid: MomentumGrid, mut matrix: Array2<f64>) -> Self {
        symmetrize(&mut matrix);
        Self { kind, grid, matrix }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }

    /// Ascending eigenvalues. For `BS` operators positive semidefiniteness is checked.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eigs = eigen::eigenvalues(&self.matrix)?.to_vec();
        if self.kind == OperatorKind::BS {
            check_psd(&eigs)?;
        }
        Ok(eigs)
    }

    pub fn eigh(&self) -> Result<eigen::SymmetricEigen> {
        let e = eigen::eigh(&self.matrix)?;
        if self.kind == OperatorKind::BS {
            check_psd(e.values.as_slice().expect("contiguous"))?;
        }
        Ok(e)
    }
}

fn check_psd(eigs: &[f64]) -> Result<()> {
    let floor = -PSD_TOL * spectral_radius(eigs).max(1.0);
    match eigs.first() {
        Some(&lo) if lo < floor => Err(Error::Numerical(format!(
            "Birman-Schwinger operator has eigenvalue {lo:e} < {floor:e}"
        ))),
        _ => Ok(()),
    }
}

fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}

/// E_k(q_n) over the grid nodes in node order.
pub fn grid_dispersion(m: &MassPair, k: &Quasimomentum, grid: &MomentumGrid) -> Vec<f64> {
    grid.nodes()
        .into_iter()
        .map(|q| dispersion_at(m, k, q))
        .collect()
}

pub fn grid_band_min(m: &MassPair, k: &Quasimomentum, grid: &MomentumGrid) -> f64 {
    grid_dispersion(m, k, grid)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub fn build_h0(m: &MassPair, k: &Quasimomentum, grid: &MomentumGrid) -> GridOperator {
    let diag = Array1::from(grid_dispersion(m, k, grid));
    GridOperator::new(OperatorKind::H0, grid.clone(), Array2::from_diag(&diag))
}

/// Circulant matrix (1/N^3) sum_x w(x) cos((q_m - q_n, x)). The node difference is
/// (i_m - i_n) * 2 pi / N per axis, so the entry only depends on index differences mod N.
fn circulant(pot: &Potential, grid: &MomentumGrid) -> Array2<f64> {
    let n = grid.n();
    let dim = grid.dim();
    let h = grid.step();
    let norm = 1.0 / dim as f64;
    let mut symbol = vec![0.0; dim];
    for (idx, c) in symbol.iter_mut().enumerate() {
        let d = grid.multi_index(idx);
        let delta = [d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h];
        *c = norm
            * pot
                .entries()
                .map(|(s, v)| v * dot_site(delta, s).cos())
                .sum::<f64>();
    }
    let mut out = Array2::zeros((dim, dim));
    for row in 0..dim {
        let a = grid.multi_index(row);
        for col in 0..dim {
            let b = grid.multi_index(col);
            let d = [
                (a[0] + n - b[0]) % n,
                (a[1] + n - b[1]) % n,
                (a[2] + n - b[2]) % n,
            ];
            out[[row, col]] = symbol[grid.index(d)];
        }
    }
    out
}

pub fn build_v(pot: &Potential, grid: &MomentumGrid) -> Result<GridOperator> {
    grid.check_resolves(pot)?;
    Ok(GridOperator::new(
        OperatorKind::V,
        grid.clone(),
        circulant(pot, grid),
    ))
}

fn sqrt_potential(pot: &Potential) -> Result<Potential> {
    if let Some((site, value)) = pot.first_negative() {
        return Err(Error::NegativePotential { site, value });
    }
    Ok(pot.map_values(f64::sqrt))
}

/// V^(1/2): the circulant built from sqrt(v). Requires v >= 0.
pub fn build_vhalf(pot: &Potential, grid: &MomentumGrid) -> Result<GridOperator> {
    grid.check_resolves(pot)?;
    let root = sqrt_potential(pot)?;
    Ok(GridOperator::new(
        OperatorKind::Vhalf,
        grid.clone(),
        circulant(&root, grid),
    ))
}

pub fn build_h(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    grid: &MomentumGrid,
) -> Result<GridOperator> {
    let v = build_v(pot, grid)?;
    let mut mat = v.into_matrix().mapv_into(|x| -x);
    for (i, e) in grid_dispersion(m, k, grid).into_iter().enumerate() {
        mat[[i, i]] += e;
    }
    Ok(GridOperator::new(OperatorKind::H, grid.clone(), mat))
}

/// Multiset {v(x) : x in the centered N^3 position box}, ascending; off-support sites give 0.
pub fn potential_spectrum(pot: &Potential, grid: &MomentumGrid) -> Result<Vec<f64>> {
    grid.check_resolves(pot)?;
    let mut out: Vec<f64> = grid
        .position_box()
        .into_iter()
        .map(|x| pot.value(x))
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// G(k, z) = W D^(-1) W with W = V^(1/2) and D = diag(E_k(q_n) - z).
///
/// W = B S B^T with B = [cos(q_n, x) | sin(q_n, x)] over the support of v and
/// S = diag(sqrt(v(x)) / N^3), so G = B (S B^T D^-1 B S) B^T is assembled through
/// the small middle factor.
pub fn build_bs(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    z: f64,
    grid: &MomentumGrid,
) -> Result<GridOperator> {
    grid.check_resolves(pot)?;
    let root = sqrt_potential(pot)?;
    let energies = grid_dispersion(m, k, grid);
    let grid_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    if z.partial_cmp(&grid_min) != Some(std::cmp::Ordering::Less) {
        return Err(Error::ZNotBelowBand { z, grid_min });
    }
    let dim = grid.dim();
    match bs_factors(&root, &energies, z, grid) {
        None => Ok(GridOperator::new(
            OperatorKind::BS,
            grid.clone(),
            Array2::zeros((dim, dim)),
        )),
        Some((basis, middle)) => {
            let g = basis.dot(&middle).dot(&basis.t());
            Ok(GridOperator::new(OperatorKind::BS, grid.clone(), g))
        }
    }
}

/// G = B M B^T with B = [cos((q, s)) | sin((q, s))] over the support of v and
/// M = S B^T D^-1 B S, S = diag(v^(1/2)(s)) / N^3.
fn bs_factors(
    root: &Potential,
    energies: &[f64],
    z: f64,
    grid: &MomentumGrid,
) -> Option<(Array2<f64>, Array2<f64>)> {
    let dim = grid.dim();
    let sites: Vec<_> = root.entries().collect();
    let r = sites.len();
    if r == 0 {
        return None;
    }
    let nodes = grid.nodes();
    let mut basis = Array2::zeros((dim, 2 * r));
    for (i, q) in nodes.iter().enumerate() {
        for (j, &(s, _)) in sites.iter().enumerate() {
            let phase = dot_site(*q, s);
            basis[[i, j]] = phase.cos();
            basis[[i, r + j]] = phase.sin();
        }
    }
    let norm = 1.0 / dim as f64;
    let weights: Vec<f64> = sites
        .iter()
        .chain(sites.iter())
        .map(|&(_, w)| w * norm)
        .collect();
    let mut scaled = basis.clone();
    for (i, row) in scaled.rows_mut().into_iter().enumerate() {
        let inv = 1.0 / (energies[i] - z);
        for (x, w) in row.into_iter().zip(&weights) {
            *x *= inv * w;
        }
    }
    let mut middle = basis.t().dot(&scaled);
    for (i, row) in middle.rows_mut().into_iter().enumerate() {
        row.into_iter().for_each(|x| *x *= weights[i]);
    }
    Some((basis, middle))
}

/// G(k, z) compressed to its range: `frame` has orthonormal columns spanning a space
/// that contains the range of G, and G = frame * reduced * frame^T exactly.
#[derive(Debug, Clone)]
pub struct ReducedBs {
    pub frame: Array2<f64>,
    pub reduced: Array2<f64>,
}

pub fn build_bs_reduced(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    z: f64,
    grid: &MomentumGrid,
) -> Result<ReducedBs> {
    grid.check_resolves(pot)?;
    let root = sqrt_potential(pot)?;
    let energies = grid_dispersion(m, k, grid);
    let grid_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    if z.partial_cmp(&grid_min) != Some(std::cmp::Ordering::Less) {
        return Err(Error::ZNotBelowBand { z, grid_min });
    }
    let dim = grid.dim();
    let Some((basis, middle)) = bs_factors(&root, &energies, z, grid) else {
        return Ok(ReducedBs {
            frame: Array2::zeros((dim, 0)),
            reduced: Array2::zeros((0, 0)),
        });
    };
    // orthonormal frame for span(B) from the Gram matrix; +-s columns are dependent
    let gram = basis.t().dot(&basis);
    let eig = crate::eigen::eigh(&gram)?;
    let u = eig.vectors.expect("eigh returns vectors");
    let top = eig.values.iter().fold(0.0f64, |a, &x| a.max(x));
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&i| eig.values[i] > 1e-10 * top)
        .collect();
    let mut coords = Array2::zeros((basis.ncols(), keep.len()));
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / eig.values[i].sqrt();
        for r in 0..basis.ncols() {
            coords[[r, c]] = u[[r, i]] * s;
        }
    }
    let frame = basis.dot(&coords);
    let p = gram.dot(&coords);
    let mut reduced = p.t().dot(&middle).dot(&p);
    let sym = (&reduced + &reduced.t()) * 0.5;
    reduced.assign(&sym);
    Ok(ReducedBs { frame, reduced })
}

/// The grid vector of the kernel function v^(1/2)(q_n) = (2 pi)^(-3/2) sum_s sqrt(v(s)) cos((q_n, s)).
pub fn half_kernel_vector(pot: &Potential, grid: &MomentumGrid) -> Result<Vec<f64>> {
    let root = sqrt_potential(pot)?;
    Ok(grid
        .nodes()
        .into_iter()
        .map(|q| crate::model::momentum_kernel(&root, crate::model::RelativeMomentum::new(q)))
        .collect())
}
