//! Counting functionals n+-(mu, A), the spectral width and the abstract
//! counting inequality for a perturbation A - V.

use ndarray::Array2;
use serde::Serialize;

use crate::eigen;
use crate::error::{Error, Result};

pub use crate::eigen::{eigenvalues, eigh, SymmetricEigen};

/// Sorted eigenvalues of a symmetric matrix.
pub fn eig_sym(a: &Array2<f64>) -> Result<Vec<f64>> {
    Ok(eigen::eigenvalues(a)?.to_vec())
}

/// Default tie band: 1e-9 * max(1, |A|) where |A| is the spectral radius.
pub fn default_tie_tol(eigs: &[f64]) -> f64 {
    1e-9 * spectral_radius(eigs).max(1.0)
}

pub fn spectral_radius(eigs: &[f64]) -> f64 {
    eigs.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// #{lambda < mu - tie_tol} for an ascending list.
pub fn count_below(mu: f64, eigs: &[f64], tie_tol: f64) -> usize {
    eigs.partition_point(|&x| x < mu - tie_tol)
}

/// #{lambda > mu + tie_tol} for an ascending list.
pub fn count_above(mu: f64, eigs: &[f64], tie_tol: f64) -> usize {
    eigs.len() - eigs.partition_point(|&x| x <= mu + tie_tol)
}

/// M(A) - m(A) for an ascending list.
pub fn spectral_width(eigs: &[f64]) -> Result<f64> {
    match (eigs.first(), eigs.last()) {
        (Some(lo), Some(hi)) => Ok(hi - lo),
        _ => Err(Error::EmptySpectrum),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCount {
    pub label: String,
    pub mu: f64,
    pub n_below: usize,
    pub n_above: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub tie_tol: f64,
    pub counts: Vec<LevelCount>,
    pub width: f64,
}

impl SpectralReport {
    pub fn new(eigenvalues: Vec<f64>, levels: &[(&str, f64)], tie_tol: f64) -> Result<Self> {
        let width = spectral_width(&eigenvalues)?;
        let counts = levels
            .iter()
            .map(|&(label, mu)| LevelCount {
                label: label.to_string(),
                mu,
                n_below: count_below(mu, &eigenvalues, tie_tol),
                n_above: count_above(mu, &eigenvalues, tie_tol),
            })
            .collect();
        Ok(Self {
            eigenvalues,
            tie_tol,
            counts,
            width,
        })
    }

    pub fn level(&self, label: &str) -> Option<&LevelCount> {
        self.counts.iter().find(|c| c.label == label)
    }
}

/// Spectrum of |V|: the absolute values of V's eigenvalues, re-sorted.
pub fn abs_spectrum(v_eigs: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = v_eigs.iter().map(|x| x.abs()).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// |V| = Q |Lambda| Q^T built in V's own eigenbasis.
pub fn abs_operator(v: &Array2<f64>) -> Result<Array2<f64>> {
    let eig = eigen::eigh(v)?;
    let q = eig.vectors.expect("eigh returns vectors");
    let mut scaled = q.clone();
    for (j, lam) in eig.values.iter().enumerate() {
        scaled.column_mut(j).mapv_inplace(|x| x * lam.abs());
    }
    Ok(scaled.dot(&q.t()))
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub lhs: usize,
    pub rhs: usize,
    pub holds: bool,
}

impl InequalityCheck {
    fn ge(lhs: usize, rhs: usize) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountingTheoremReport {
    pub m_a: f64,
    pub big_m_a: f64,
    pub width: f64,
    /// n-(m(A), A - V) >= n+(w_s(A), V)
    pub lower: InequalityCheck,
    /// n+(M(A), A - V) >= n-(-w_s(A), V)
    pub upper: InequalityCheck,
    /// n-(m(A), A - V) + n+(M(A), A - V) >= n+(w_s(A), |V|)
    pub absolute: InequalityCheck,
    pub a_eigenvalues: Vec<f64>,
    pub v_eigenvalues: Vec<f64>,
    pub diff_eigenvalues: Vec<f64>,
}

impl CountingTheoremReport {
    pub fn holds(&self) -> bool {
        self.lower.holds && self.upper.holds && self.absolute.holds
    }
}

/// Checks the counting inequality, its mirrored form and the |V| form on one pair.
/// Counts use the default tie band of each spectrum.
pub fn verify_counting_theorem(a: &Array2<f64>, v: &Array2<f64>) -> Result<CountingTheoremReport> {
    if a.dim() != v.dim() {
        return Err(Error::DimensionMismatch(a.nrows(), v.nrows()));
    }
    let a_eigs = eig_sym(a)?;
    let v_eigs = eig_sym(v)?;
    let diff = a - v;
    let d_eigs = eig_sym(&diff)?;
    let m_a = a_eigs[0];
    let big_m_a = *a_eigs.last().expect("nonempty");
    let width = big_m_a - m_a;

    let tol_d = default_tie_tol(&d_eigs).max(default_tie_tol(&a_eigs));
    let tol_v = default_tie_tol(&v_eigs).max(default_tie_tol(&a_eigs));
    let below = count_below(m_a, &d_eigs, tol_d);
    let above = count_above(big_m_a, &d_eigs, tol_d);
    let abs_v = abs_spectrum(&v_eigs);

    Ok(CountingTheoremReport {
        m_a,
        big_m_a,
        width,
        lower: InequalityCheck::ge(below, count_above(width, &v_eigs, tol_v)),
        upper: InequalityCheck::ge(above, count_below(-width, &v_eigs, tol_v)),
        absolute: InequalityCheck::ge(below + above, count_above(width, &abs_v, tol_v)),
        a_eigenvalues: a_eigs,
        v_eigenvalues: v_eigs,
        diff_eigenvalues: d_eigs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn counting_examples() {
        assert_eq!(count_below(0.0, &[-2.0, 1.0], 0.0), 1);
        let mut eigs = vec![4.0];
        eigs.extend(std::iter::repeat_n(6.0, 26));
        assert_eq!(count_below(6.0, &eigs, 1e-9), 1);
        assert_eq!(count_above(6.0, &eigs, 1e-9), 0);
        assert_eq!(count_below(0.0, &[0.0, 0.0, 0.0], 1e-9), 0);
        assert_eq!(count_above(0.0, &[0.0, 0.0, 0.0], 1e-9), 0);
    }

    #[test]
    fn counts_are_monotone_in_mu() {
        let eigs = [-3.0, -1.0, -1.0, 0.5, 2.0, 2.0, 7.0];
        let mut prev_below = 0;
        let mut prev_above = usize::MAX;
        for i in 0..=200 {
            let mu = -4.0 + 12.0 * i as f64 / 200.0;
            let b = count_below(mu, &eigs, 1e-9);
            let a = count_above(mu, &eigs, 1e-9);
            assert!(b >= prev_below && a <= prev_above);
            let ties = eigs.iter().filter(|&&x| (x - mu).abs() <= 1e-9).count();
            assert_eq!(a + b + ties, eigs.len());
            prev_below = b;
            prev_above = a;
        }
    }

    #[test]
    fn width_examples() {
        assert_eq!(spectral_width(&[0.0, 12.0]).unwrap(), 12.0);
        assert_eq!(spectral_width(&[3.0; 5]).unwrap(), 0.0);
        assert!(matches!(spectral_width(&[]), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn report_levels() {
        let r = SpectralReport::new(vec![-1.0, 0.0, 2.0], &[("zero", 0.0)], 1e-9).unwrap();
        let z = r.level("zero").unwrap();
        assert_eq!((z.n_below, z.n_above), (1, 1));
        assert_eq!(r.width, 3.0);
    }

    #[test]
    fn counting_theorem_hand_example() {
        let a = array![[0.0, 0.0], [0.0, 1.0]];
        let v = array![[2.0, 0.0], [0.0, 0.0]];
        let r = verify_counting_theorem(&a, &v).unwrap();
        assert_eq!(r.width, 1.0);
        assert_eq!((r.lower.lhs, r.lower.rhs), (1, 1));
        assert!(r.holds());
    }

    #[test]
    fn scalar_operator_gives_equality() {
        let mu = 2.5;
        let a = Array2::from_diag(&ndarray::Array1::from_elem(4, mu));
        let v = array![
            [1.0, 0.5, 0.0, 0.0],
            [0.5, -2.0, 0.0, 0.3],
            [0.0, 0.0, 0.7, 0.0],
            [0.0, 0.3, 0.0, -0.1]
        ];
        let r = verify_counting_theorem(&a, &v).unwrap();
        let v_eigs = eig_sym(&v).unwrap();
        assert_eq!(r.width, 0.0);
        assert_eq!(r.lower.lhs, count_above(0.0, &v_eigs, 1e-9));
        assert_eq!(r.lower.lhs, r.lower.rhs);
        assert_eq!(r.upper.lhs, r.upper.rhs);
    }

    #[test]
    fn abs_operator_flips_negative_part() {
        let v = array![[0.0, 2.0], [2.0, 0.0]];
        let a = abs_operator(&v).unwrap();
        assert!((a[[0, 0]] - 2.0).abs() < 1e-12 && a[[0, 1]].abs() < 1e-12);
        assert!(matches!(
            verify_counting_theorem(&v, &Array2::zeros((3, 3))),
            Err(Error::DimensionMismatch(2, 3))
        ));
    }
}
