//! Theorem checks on grid operators: Birman-Schwinger counting, threshold
//! classification of H(0), critical coupling, positivity transfer, eigenvalue
//! emergence below the band and the band-width estimates.

use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;

use crate::dispersion::{band_geometry, degenerate_directions};
use crate::error::{Error, Result};
use crate::model::{MassPair, MomentumGrid, Potential, Quasimomentum};
use crate::operators::{
    build_bs, build_bs_reduced, build_h, build_h0, grid_band_min, half_kernel_vector,
    potential_spectrum,
};
use crate::spectral::{
    abs_spectrum, count_above, count_below, default_tie_tol, eigenvalues, eigh, spectral_radius,
    InequalityCheck,
};

/// Numerical bands used by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Absolute tie band for counts; `None` uses 1e-9 * max(1, |A|) per spectrum.
    pub tie_tol: Option<f64>,
    pub unit_tol: f64,
    pub overlap_tol: f64,
    /// Relative: eigenvalues >= -pos_tol * |H| count as nonnegative.
    pub pos_tol: f64,
    /// Counts below the band are taken against e_min - edge_margin.
    pub edge_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tie_tol: None,
            unit_tol: 1e-6,
            overlap_tol: 1e-6,
            pos_tol: 1e-8,
            edge_margin: 0.0,
        }
    }
}

impl Tolerances {
    fn tie(&self, eigs: &[f64]) -> f64 {
        self.tie_tol.unwrap_or_else(|| default_tie_tol(eigs))
    }

    fn pos_floor(&self, eigs: &[f64]) -> f64 {
        -self.pos_tol * spectral_radius(eigs)
    }
}

/// z_i = e_min - delta0 * ratio^i, i = 0..steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZSchedule {
    pub delta0: f64,
    pub ratio: f64,
    pub steps: usize,
}

impl Default for ZSchedule {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            ratio: 0.1,
            steps: 7,
        }
    }
}

impl ZSchedule {
    pub fn new(delta0: f64, ratio: f64, steps: usize) -> Result<Self> {
        if !(delta0 > 0.0 && delta0.is_finite()) {
            return Err(Error::Precondition(format!(
                "delta0 = {delta0} must be positive"
            )));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Precondition(format!(
                "ratio = {ratio} must lie in (0, 1)"
            )));
        }
        if steps < 2 {
            return Err(Error::Precondition(format!(
                "steps = {steps} must be at least 2"
            )));
        }
        Ok(Self {
            delta0,
            ratio,
            steps,
        })
    }

    pub fn deltas(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|i| self.delta0 * self.ratio.powi(i as i32))
            .collect()
    }

    pub fn points(&self, e_min: f64) -> Vec<f64> {
        self.deltas().into_iter().map(|d| e_min - d).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BsCheck {
    pub z: f64,
    pub n_minus: usize,
    pub n_plus: usize,
    pub equal: bool,
    /// Eigenvalues of H(k) counted below z.
    pub h_below: Vec<f64>,
    /// Eigenvalues of G(k, z) counted above one.
    pub g_above: Vec<f64>,
}

/// n-(z, H) from H and n+(1, G(k, z)) from G, both by full diagonalization.
pub fn bs_check(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    z: f64,
    grid: &MomentumGrid,
    tol: &Tolerances,
) -> Result<BsCheck> {
    let g = build_bs(m, k, pot, z, grid)?.eigenvalues()?;
    let h = build_h(m, k, pot, grid)?.eigenvalues()?;
    let n_minus = count_below(z, &h, tol.tie(&h));
    let n_plus = count_above(1.0, &g, tol.tie(&g));
    Ok(BsCheck {
        z,
        n_minus,
        n_plus,
        equal: n_minus == n_plus,
        h_below: h[..n_minus].to_vec(),
        g_above: g[g.len() - n_plus..].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stabilization {
    Value(usize),
    Divergent,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdCount {
    pub e_min: f64,
    pub z: Vec<f64>,
    pub counts: Vec<usize>,
    /// Largest eigenvalue of G(k, z_i).
    pub lambda_max: Vec<f64>,
    pub stabilized: Stabilization,
    pub monotone: bool,
}

impl ThresholdCount {
    pub fn final_count(&self) -> usize {
        self.counts.last().copied().unwrap_or(0)
    }
}

/// n+(1, G(k, z_i)) along the schedule approaching the analytic band bottom.
pub fn threshold_count(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    grid: &MomentumGrid,
    schedule: &ZSchedule,
    tol: &Tolerances,
) -> Result<ThresholdCount> {
    let e_min = band_geometry(m, k).e_min;
    let z = schedule.points(e_min);
    let spectra: Vec<Vec<f64>> = z
        .par_iter()
        .map(|&zi| build_bs(m, k, pot, zi, grid)?.eigenvalues())
        .collect::<Result<_>>()?;
    let counts: Vec<usize> = spectra
        .iter()
        .map(|g| count_above(1.0, g, tol.tie(g)))
        .collect();
    let lambda_max = spectra
        .iter()
        .map(|g| g.last().copied().unwrap_or(0.0))
        .collect();
    let tail = &counts[counts.len().saturating_sub(3)..];
    let stabilized = if tail.iter().all(|&c| c == tail[0]) {
        Stabilization::Value(tail[0])
    } else {
        Stabilization::Divergent
    };
    let monotone = counts.windows(2).all(|w| w[0] <= w[1]);
    Ok(ThresholdCount {
        e_min,
        z,
        counts,
        lambda_max,
        stabilized,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Classification {
    None,
    Resonance,
    ZeroEigenvalue { multiplicity: usize },
    ResonancePlusZeroEigenvalue { multiplicity: usize },
}

impl Classification {
    pub fn has_resonance(&self) -> bool {
        matches!(
            self,
            Classification::Resonance | Classification::ResonancePlusZeroEigenvalue { .. }
        )
    }

    /// Multiplicity of the zero eigenvalue of H(0).
    pub fn zero_multiplicity(&self) -> usize {
        match *self {
            Classification::ZeroEigenvalue { multiplicity }
            | Classification::ResonancePlusZeroEigenvalue { multiplicity } => multiplicity,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitEigen {
    pub lambda: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub lambda_max: f64,
    pub unit_eigenvalues: Vec<UnitEigen>,
    pub classification: Classification,
    pub ambiguous: bool,
}

/// Classifies the zero-energy threshold of H(0) from the eigenvalue-1 eigenspace of G(0, 0).
///
/// Overlaps are reported in a basis of the unit eigenspace whose first vector is the
/// projection of v^(1/2); the remaining vectors are orthogonal to v^(1/2), so the
/// classification does not depend on how a degenerate eigensolver picks its basis.
pub fn resonance_analysis(
    m: &MassPair,
    pot: &Potential,
    grid: &MomentumGrid,
    tol: &Tolerances,
) -> Result<ThresholdReport> {
    let k = Quasimomentum::zero();
    let z = band_geometry(m, &k).e_min;
    // the unit eigenspace lies in the range of G, so the compressed form suffices
    let red = build_bs_reduced(m, &k, pot, z, grid)?;
    let eig = eigh(&red.reduced)?;
    let values = eig.values.to_vec();
    let vectors = eig.vectors.expect("eigh returns vectors");
    let lambda_max = values.last().copied().unwrap_or(0.0).max(0.0);

    let half = Array1::from(half_kernel_vector(pot, grid)?);
    let half_norm = half.dot(&half).sqrt();
    let half_coords = red.frame.t().dot(&half);
    let unit: Vec<usize> = (0..values.len())
        .filter(|&i| (values[i] - 1.0).abs() <= tol.unit_tol)
        .collect();
    // coefficients of v^(1/2) in the unit eigenspace
    let coeffs: Vec<f64> = unit
        .iter()
        .map(|&i| vectors.column(i).dot(&half_coords))
        .collect();
    let proj = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let overlap = if half_norm > 0.0 {
        proj / half_norm
    } else {
        0.0
    };

    let d = unit.len();
    let resonant = d > 0 && overlap > tol.overlap_tol;
    let ambiguous = d > 0 && overlap >= 0.1 * tol.overlap_tol && overlap <= 10.0 * tol.overlap_tol;
    let mut unit_eigenvalues = Vec::with_capacity(d);
    for (slot, &i) in unit.iter().enumerate() {
        let ov = if slot == 0 { overlap } else { 0.0 };
        unit_eigenvalues.push(UnitEigen {
            lambda: values[i],
            overlap: ov,
        });
    }
    let zeros = if resonant { d - 1 } else { d };
    let classification = match (resonant, zeros) {
        (false, 0) => Classification::None,
        (true, 0) => Classification::Resonance,
        (false, n) => Classification::ZeroEigenvalue { multiplicity: n },
        (true, n) => Classification::ResonancePlusZeroEigenvalue { multiplicity: n },
    };
    Ok(ThresholdReport {
        lambda_max,
        unit_eigenvalues,
        classification,
        ambiguous,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Richardson {
    pub coarse_n: usize,
    pub fine_n: usize,
    pub lambda_star_coarse: f64,
    pub lambda_star_fine: f64,
    /// lambda_max(G_base) extrapolated linearly in 1/N.
    pub lambda_max_extrapolated: f64,
    pub lambda_star: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalCoupling {
    pub n: usize,
    pub lambda_max: f64,
    pub lambda_star: f64,
    pub richardson: Option<Richardson>,
}

/// Largest eigenvalue of G_base(0, e_min(0)).
pub fn threshold_lambda_max(m: &MassPair, base: &Potential, grid: &MomentumGrid) -> Result<f64> {
    let k = Quasimomentum::zero();
    let z = band_geometry(m, &k).e_min;
    let g = build_bs(m, &k, base, z, grid)?.eigenvalues()?;
    Ok(g.last().copied().unwrap_or(0.0))
}

/// Default coarse size for refinement: two thirds of N rounded to an even number.
pub fn default_coarse_n(n: usize) -> usize {
    (((2 * n) as f64 / 6.0).round() as usize * 2).max(2)
}

/// lambda* = 1 / lambda_max(G_base(0, 0)); G is linear in the coupling.
///
/// With `coarse_n` set, the threshold eigenvalue is also computed on an N = coarse_n grid
/// with the same offset and extrapolated to 1/N -> 0 before inverting.
pub fn critical_coupling(
    m: &MassPair,
    base: &Potential,
    grid: &MomentumGrid,
    coarse_n: Option<usize>,
) -> Result<CriticalCoupling> {
    if base.is_empty() {
        return Err(Error::ZeroPotential(
            "critical coupling needs a nonzero potential",
        ));
    }
    if let Some((site, value)) = base.first_negative() {
        return Err(Error::NegativePotential { site, value });
    }
    let fine = threshold_lambda_max(m, base, grid)?;
    let richardson = match coarse_n {
        None => None,
        Some(nc) => {
            let nf = grid.n();
            if nc == nf {
                return Err(Error::InvalidGrid(
                    "refinement needs two distinct grid sizes".into(),
                ));
            }
            let coarse_grid = MomentumGrid::new(nc, grid.offset())?;
            let coarse = threshold_lambda_max(m, base, &coarse_grid)?;
            let (nc_f, nf_f) = (nc as f64, nf as f64);
            let extrapolated = (nf_f * fine - nc_f * coarse) / (nf_f - nc_f);
            Some(Richardson {
                coarse_n: nc,
                fine_n: nf,
                lambda_star_coarse: 1.0 / coarse,
                lambda_star_fine: 1.0 / fine,
                lambda_max_extrapolated: extrapolated,
                lambda_star: 1.0 / extrapolated,
            })
        }
    };
    Ok(CriticalCoupling {
        n: grid.n(),
        lambda_max: fine,
        lambda_star: 1.0 / fine,
        richardson,
    })
}

/// Coupling c such that the eigenvalue of G(0, 0) for `c * base` with the given rank
/// (0 = largest) equals one.
pub fn coupling_for_branch(
    m: &MassPair,
    base: &Potential,
    grid: &MomentumGrid,
    rank_from_top: usize,
) -> Result<f64> {
    let k = Quasimomentum::zero();
    let z = band_geometry(m, &k).e_min;
    let g = build_bs(m, &k, base, z, grid)?.eigenvalues()?;
    let lam = g
        .iter()
        .rev()
        .nth(rank_from_top)
        .copied()
        .ok_or_else(|| Error::Precondition("branch index beyond dimension".into()))?;
    if lam <= 0.0 {
        return Err(Error::ZeroPotential("selected branch has zero eigenvalue"));
    }
    Ok(1.0 / lam)
}

/// Eigenvalues of H(k) below the analytic band bottom.
#[derive(Debug, Clone, Serialize)]
pub struct BelowBand {
    pub k: [f64; 3],
    pub e_min: f64,
    pub e_max: f64,
    pub min_eigenvalue: f64,
    pub norm: f64,
    pub count: usize,
    pub n_above_band: usize,
    pub eigenvalues: Vec<f64>,
}

pub fn below_band(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    grid: &MomentumGrid,
    tol: &Tolerances,
) -> Result<BelowBand> {
    let geom = band_geometry(m, k);
    let eigs = build_h(m, k, pot, grid)?.eigenvalues()?;
    let tie = tol.tie(&eigs);
    let level = geom.e_min - tol.edge_margin;
    let count = count_below(level, &eigs, tie);
    Ok(BelowBand {
        k: k.components(),
        e_min: geom.e_min,
        e_max: geom.e_max,
        min_eigenvalue: eigs[0],
        norm: spectral_radius(&eigs),
        count,
        n_above_band: count_above(geom.e_max, &eigs, tie),
        eigenvalues: eigs[..count].to_vec(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityEntry {
    pub k: [f64; 3],
    pub min_eigenvalue: f64,
    pub floor: f64,
    pub e_min: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivityReport {
    pub h0_min_eigenvalue: f64,
    pub h0_floor: f64,
    pub entries: Vec<PositivityEntry>,
    pub holds: bool,
}

/// Given equal masses and H(0) >= -pos_tol, checks min eig H(k) >= -pos_tol for each k.
pub fn positivity_check(
    m: &MassPair,
    pot: &Potential,
    k_list: &[Quasimomentum],
    grid: &MomentumGrid,
    tol: &Tolerances,
) -> Result<PositivityReport> {
    if !m.equal_masses() {
        return Err(Error::Precondition(
            "positivity transfer needs equal masses".into(),
        ));
    }
    let h0 = build_h(m, &Quasimomentum::zero(), pot, grid)?.eigenvalues()?;
    let h0_floor = tol.pos_floor(&h0);
    if h0[0] < h0_floor {
        return Err(Error::Precondition(format!(
            "H(0) is not positive: min eigenvalue {:e} < {:e}",
            h0[0], h0_floor
        )));
    }
    let entries: Vec<PositivityEntry> = k_list
        .par_iter()
        .map(|k| {
            let eigs = build_h(m, k, pot, grid)?.eigenvalues()?;
            let floor = tol.pos_floor(&eigs);
            Ok(PositivityEntry {
                k: k.components(),
                min_eigenvalue: eigs[0],
                floor,
                e_min: band_geometry(m, k).e_min,
                holds: eigs[0] >= floor,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PositivityReport {
        h0_min_eigenvalue: h0[0],
        h0_floor,
        holds: entries.iter().all(|e| e.holds),
        entries,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExistenceEntry {
    pub below: BelowBand,
    pub required: usize,
    pub nonnegative: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExistenceReport {
    pub threshold: ThresholdReport,
    pub required: usize,
    pub entries: Vec<ExistenceEntry>,
    pub holds: bool,
}

/// Emergence of nonnegative eigenvalues below e_min(k) for k != 0 when H(0) has a
/// threshold state: at least n + 1 with a resonance, at least n without.
pub fn verify_existence(
    m: &MassPair,
    pot: &Potential,
    k_list: &[Quasimomentum],
    grid: &MomentumGrid,
    tol: &Tolerances,
) -> Result<ExistenceReport> {
    if !m.equal_masses() {
        return Err(Error::Precondition(
            "emergence theorem needs equal masses".into(),
        ));
    }
    if let Some(k) = k_list.iter().find(|k| k.is_zero() || !k.is_interior()) {
        return Err(Error::Precondition(format!(
            "k = {:?} must be nonzero and interior",
            k.components()
        )));
    }
    let threshold = resonance_analysis(m, pot, grid, tol)?;
    if threshold.classification == Classification::None {
        return Err(Error::Precondition(
            "H(0) has neither a zero-energy resonance nor a zero eigenvalue".into(),
        ));
    }
    let required = threshold.classification.zero_multiplicity()
        + usize::from(threshold.classification.has_resonance());
    let entries: Vec<ExistenceEntry> = k_list
        .par_iter()
        .map(|k| {
            let below = below_band(m, k, pot, grid, tol)?;
            let floor = -tol.pos_tol * below.norm;
            let nonnegative = below.eigenvalues.iter().all(|&x| x >= floor);
            Ok(ExistenceEntry {
                holds: below.count >= required && nonnegative,
                nonnegative,
                required,
                below,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExistenceReport {
        threshold,
        required,
        holds: entries.iter().all(|e| e.holds),
        entries,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarCase {
    pub level: f64,
    pub n_minus_h: usize,
    pub n_plus_v: usize,
    pub n_plus_h: usize,
    pub n_minus_v: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeravenReport {
    pub e_min: f64,
    pub e_max: f64,
    pub w_b: f64,
    /// n-(E_min, H) >= n+(w_b, V)
    pub lower: InequalityCheck,
    /// n-(E_min, H) + n+(E_max, H) >= n+(w_b, |V|)
    pub absolute: InequalityCheck,
    pub scalar_case: Option<ScalarCase>,
    pub holds: bool,
}

/// Band-width bound on the number of eigenvalues outside the band, with the exact
/// equalities at k = (pi, pi, pi) for equal masses.
pub fn verify_neraven(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    grid: &MomentumGrid,
    tol: &Tolerances,
) -> Result<NeravenReport> {
    let geom = band_geometry(m, k);
    let eigs = build_h(m, k, pot, grid)?.eigenvalues()?;
    let tie = tol.tie(&eigs);
    let v_spec = potential_spectrum(pot, grid)?;
    let below = count_below(geom.e_min - tol.edge_margin, &eigs, tie);
    let above = count_above(geom.e_max + tol.edge_margin, &eigs, tie);
    let lower = InequalityCheck {
        lhs: below,
        rhs: count_above(geom.w_b, &v_spec, tie),
        holds: false,
    };
    let lower = InequalityCheck {
        holds: lower.lhs >= lower.rhs,
        ..lower
    };
    let abs_rhs = count_above(geom.w_b, &abs_spectrum(&v_spec), tie);
    let absolute = InequalityCheck {
        lhs: below + above,
        rhs: abs_rhs,
        holds: below + above >= abs_rhs,
    };
    let corner = k.components().iter().all(|&c| c == std::f64::consts::PI);
    let scalar_case = (m.equal_masses() && corner).then(|| {
        let level = 6.0 / m.m1();
        let n_minus_h = count_below(level, &eigs, tie);
        let n_plus_h = count_above(level, &eigs, tie);
        let n_plus_v = count_above(0.0, &v_spec, 0.0);
        let n_minus_v = count_below(0.0, &v_spec, 0.0);
        ScalarCase {
            level,
            n_minus_h,
            n_plus_v,
            n_plus_h,
            n_minus_v,
            holds: n_minus_h == n_plus_v && n_plus_h == n_minus_v,
        }
    });
    let holds = lower.holds && absolute.holds && scalar_case.as_ref().is_none_or(|s| s.holds);
    Ok(NeravenReport {
        e_min: geom.e_min,
        e_max: geom.e_max,
        w_b: geom.w_b,
        lower,
        absolute,
        scalar_case,
        holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisTarget {
    pub axis: usize,
    pub w_jb: f64,
    pub target: usize,
    pub h0_constant_along_axis: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheksizReport {
    pub axes: Vec<AxisTarget>,
    pub target: usize,
    pub threshold: ThresholdCount,
    pub final_count: usize,
    pub holds: bool,
}

/// Lower bound on the count below the band by the positive axis sites of v when the
/// directional width vanishes.
pub fn verify_cheksiz(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    grid: &MomentumGrid,
    schedule: &ZSchedule,
    tol: &Tolerances,
) -> Result<CheksizReport> {
    if !pot.is_nonnegative() {
        let (site, value) = pot.first_negative().expect("has a negative entry");
        return Err(Error::NegativePotential { site, value });
    }
    let degenerate = degenerate_directions(m, k, 1e-12);
    if degenerate.is_empty() {
        return Err(Error::Precondition(format!(
            "no degenerate direction at k = {:?}",
            k.components()
        )));
    }
    grid.check_resolves(pot)?;
    let geom = band_geometry(m, k);
    let h0 = build_h0(m, k, grid);
    let diag: Vec<f64> = h0.matrix().diag().to_vec();
    let axes: Vec<AxisTarget> = degenerate
        .iter()
        .map(|&axis| {
            let target = pot
                .axis_values(axis)
                .iter()
                .filter(|&&(_, v)| v > 0.0)
                .count();
            let constant = (0..grid.dim()).all(|i| {
                let mut idx = grid.multi_index(i);
                idx[axis] = 0;
                (diag[i] - diag[grid.index(idx)]).abs() <= 1e-12 * diag[i].abs().max(1.0)
            });
            AxisTarget {
                axis,
                w_jb: geom.w_jb[axis],
                target,
                h0_constant_along_axis: constant,
            }
        })
        .collect();
    let target = axes.iter().map(|a| a.target).max().unwrap_or(0);
    let threshold = threshold_count(m, k, pot, grid, schedule, tol)?;
    let final_count = threshold.final_count();
    let holds = final_count >= target
        && threshold.monotone
        && axes
            .iter()
            .all(|a| a.h0_constant_along_axis && a.w_jb <= 1e-12);
    Ok(CheksizReport {
        axes,
        target,
        threshold,
        final_count,
        holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub e_min: f64,
    pub deltas: Vec<f64>,
    pub norms: Vec<f64>,
    pub exponent: f64,
}

/// |G(k, e_min) - G(k, z)| along the schedule and the least-squares slope of
/// log|.| against log(e_min - z).
pub fn continuity_exponent(
    m: &MassPair,
    k: &Quasimomentum,
    pot: &Potential,
    grid: &MomentumGrid,
    schedule: &ZSchedule,
) -> Result<ContinuityReport> {
    let e_min = band_geometry(m, k).e_min;
    let grid_min = grid_band_min(m, k, grid);
    if e_min.partial_cmp(&grid_min) != Some(std::cmp::Ordering::Less) {
        return Err(Error::ZNotBelowBand { z: e_min, grid_min });
    }
    let at_edge = build_bs(m, k, pot, e_min, grid)?.into_matrix();
    let deltas = schedule.deltas();
    let norms: Vec<f64> = deltas
        .par_iter()
        .map(|&d| {
            let g = build_bs(m, k, pot, e_min - d, grid)?.into_matrix();
            let diff = &at_edge - &g;
            Ok(spectral_radius(
                eigenvalues(&diff)?.as_slice().expect("contiguous"),
            ))
        })
        .collect::<Result<_>>()?;
    let exponent = loglog_slope(&deltas, &norms);
    Ok(ContinuityReport {
        e_min,
        deltas,
        norms,
        exponent,
    })
}

/// Least-squares slope of log y against log x over the positive pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
