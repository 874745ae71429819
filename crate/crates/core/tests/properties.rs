use std::f64::consts::PI;

use lattice_spectra::analysis::{
    bs_check, critical_coupling, threshold_count, Tolerances, ZSchedule,
};
use lattice_spectra::dispersion::{band_geometry, dispersion_at};
use lattice_spectra::eigen::eigenvalues;
use lattice_spectra::model::{
    load_potential, save_potential, wrap_angle, MassPair, MomentumGrid, Potential, Quasimomentum,
};
use lattice_spectra::operators::{build_h, build_v, potential_spectrum};
use lattice_spectra::spectral::{count_above, count_below};
use ndarray::Array2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

fn triple() -> impl Strategy<Value = [f64; 3]> {
    [angle(), angle(), angle()]
}

fn masses() -> impl Strategy<Value = MassPair> {
    (0.2f64..5.0, 0.2f64..5.0).prop_map(|(a, b)| MassPair::new(a, b).unwrap())
}

fn site_list() -> impl Strategy<Value = Vec<([i64; 3], f64)>> {
    prop::collection::btree_map([-1i64..=1, -1i64..=1, -1i64..=1], 0.1f64..5.0, 1..4).prop_map(
        |m| {
            let mut out: Vec<([i64; 3], f64)> = Vec::new();
            for (s, v) in m {
                let mirror = [-s[0], -s[1], -s[2]];
                if !out.iter().any(|(t, _)| *t == mirror) {
                    out.push((s, v));
                }
            }
            out
        },
    )
}

/// Q from Gram-Schmidt on a seeded random matrix.
fn random_orthogonal(n: usize, seed: u64) -> Array2<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for p in 0..j {
                let d: f64 = (0..n).map(|i| q[[i, p]] * v[i]).sum();
                for i in 0..n {
                    v[i] -= d * q[[i, p]];
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..n {
            q[[i, j]] = v[i] / norm;
        }
    }
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wrapping_is_idempotent(x in -50.0f64..50.0) {
        let w = wrap_angle(x);
        prop_assert!(w > -PI && w <= PI);
        prop_assert_eq!(wrap_angle(w), w);
        prop_assert!(((x - w) / (2.0 * PI) - ((x - w) / (2.0 * PI)).round()).abs() < 1e-9);
    }

    #[test]
    fn dispersion_stays_in_band(m in masses(), k in triple(), q in triple()) {
        let k = Quasimomentum::new(k);
        let g = band_geometry(&m, &k);
        let e = dispersion_at(&m, &k, q);
        prop_assert!(e >= g.e_min - 1e-12 && e <= g.e_max + 1e-12);
        prop_assert!((e - g.separable(q)).abs() < 1e-11);
        prop_assert_eq!(g.w_b, g.w_jb.iter().sum::<f64>());
    }

    #[test]
    fn directional_widths_are_even(m in masses(), k in triple()) {
        let a = band_geometry(&m, &Quasimomentum::new(k));
        let b = band_geometry(&m, &Quasimomentum::new(k).neg());
        for j in 0..3 {
            prop_assert!((a.w_jb[j] - b.w_jb[j]).abs() < 1e-13);
        }
        prop_assert!((a.e_min - b.e_min).abs() < 1e-13);
    }

    #[test]
    fn counts_partition_the_spectrum(mut xs in prop::collection::vec(-5.0f64..5.0, 0..40), mu in -6.0f64..6.0) {
        xs.sort_by(f64::total_cmp);
        let tie = 1e-9;
        let ties = xs.iter().filter(|&&x| (x - mu).abs() <= tie).count();
        prop_assert_eq!(count_below(mu, &xs, tie) + count_above(mu, &xs, tie) + ties, xs.len());
    }

    #[test]
    fn potential_round_trip(sites in site_list()) {
        let pot = Potential::from_sites(sites).unwrap();
        let mut buf = Vec::new();
        save_potential(&pot, &mut buf).unwrap();
        let back = load_potential(buf.as_slice()).unwrap();
        prop_assert_eq!(back, pot);
    }

    #[test]
    fn v_spectrum_is_position_values(sites in site_list(), n in prop::sample::select(vec![3usize, 4, 5])) {
        let pot = Potential::from_sites(sites).unwrap();
        let grid = MomentumGrid::centered(n).unwrap();
        let eigs = eigenvalues(build_v(&pot, &grid).unwrap().matrix()).unwrap();
        let want = potential_spectrum(&pot, &grid).unwrap();
        for (a, b) in eigs.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bs_identity_small_grids(m in masses(), k in triple(), sites in site_list(), scale in 0.1f64..4.0) {
        let pot = Potential::from_sites(sites).unwrap().scaled(scale);
        let grid = MomentumGrid::centered(4).unwrap();
        let k = Quasimomentum::new(k);
        let z = band_geometry(&m, &k).e_min - 0.5;
        let r = bs_check(&m, &k, &pot, z, &grid, &Tolerances::default()).unwrap();
        prop_assert!(r.equal, "{:?}", r);
    }

    #[test]
    fn threshold_counts_are_monotone(k in triple(), sites in site_list()) {
        let m = MassPair::equal(1.0).unwrap();
        let pot = Potential::from_sites(sites).unwrap();
        let grid = MomentumGrid::centered(4).unwrap();
        let t = threshold_count(&m, &Quasimomentum::new(k), &pot, &grid, &ZSchedule::default(), &Tolerances::default()).unwrap();
        prop_assert!(t.monotone, "{:?}", t.counts);
    }

    #[test]
    fn critical_coupling_is_linear(sites in site_list(), c in 0.1f64..10.0) {
        let m = MassPair::equal(1.0).unwrap();
        let pot = Potential::from_sites(sites).unwrap();
        let grid = MomentumGrid::centered(4).unwrap();
        let a = critical_coupling(&m, &pot, &grid, None).unwrap().lambda_star;
        let b = critical_coupling(&m, &pot.scaled(c), &grid, None).unwrap().lambda_star;
        prop_assert!((b * c - a).abs() <= 1e-12 * a);
    }

    #[test]
    fn hamiltonian_is_hermitian_conjugation_invariant(m in masses(), k in triple(), sites in site_list(), seed in 0u64..1000) {
        let pot = Potential::from_sites(sites).unwrap();
        let grid = MomentumGrid::centered(3).unwrap();
        let h = build_h(&m, &Quasimomentum::new(k), &pot, &grid).unwrap().into_matrix();
        let q = random_orthogonal(h.nrows(), seed);
        let rotated = q.t().dot(&h).dot(&q);
        let rotated = (&rotated + &rotated.t()) * 0.5;
        let a = eigenvalues(&h).unwrap();
        let b = eigenvalues(&rotated).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}

#[test]
fn similarity_invariance_dim_50() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut a = Array2::<f64>::zeros((50, 50));
    for i in 0..50 {
        for j in 0..=i {
            let x = rng.gen_range(-1.0..1.0);
            a[[i, j]] = x;
            a[[j, i]] = x;
        }
    }
    let q = random_orthogonal(50, 1);
    let b = q.t().dot(&a).dot(&q);
    let b = (&b + &b.t()) * 0.5;
    let x = eigenvalues(&a).unwrap();
    let y = eigenvalues(&b).unwrap();
    for (u, v) in x.iter().zip(y.iter()) {
        assert!((u - v).abs() < 1e-8);
    }
}

#[test]
fn doubling_axis_support_raises_the_count() {
    let m = MassPair::equal(1.0).unwrap();
    let k = Quasimomentum::new([PI, 0.0, 0.0]);
    let grid = MomentumGrid::centered(6).unwrap();
    let five =
        Potential::from_sites([([0, 0, 0], 4.0), ([1, 0, 0], 4.0), ([2, 0, 0], 4.0)]).unwrap();
    let deep = ZSchedule::new(1.0, 0.1, 10).unwrap();
    let r = lattice_spectra::analysis::verify_cheksiz(
        &m,
        &k,
        &five,
        &grid,
        &deep,
        &Tolerances::default(),
    )
    .unwrap();
    assert_eq!(r.target, 5);
    assert!(r.final_count >= 5, "{:?}", r.threshold.counts);
}
