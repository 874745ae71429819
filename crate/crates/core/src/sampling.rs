//! Seeded random instances for the randomized verification suites.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::dispersion::band_geometry;
use crate::model::{MassPair, MomentumGrid, Potential, Quasimomentum, Site};

fn symmetric<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let x = scale * rng.gen_range(-1.0..1.0);
            a[[i, j]] = x;
            a[[j, i]] = x;
        }
    }
    a
}

/// A random symmetric A of dimension 1..=max_dim and a symmetric V of rank <= 10
/// built from random rank-one terms with signed weights.
pub fn counting_pair<R: Rng>(rng: &mut R, max_dim: usize) -> (Array2<f64>, Array2<f64>) {
    let n = rng.gen_range(1..=max_dim.max(1));
    let scale = rng.gen_range(0.1..5.0);
    let a = symmetric(rng, n, scale);
    let rank = rng.gen_range(0..=n.min(10));
    let mut v = Array2::zeros((n, n));
    for _ in 0..rank {
        let u: Array1<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = u.dot(&u).sqrt();
        if norm == 0.0 {
            continue;
        }
        let u = u / norm;
        let w = rng.gen_range(-10.0..10.0);
        for i in 0..n {
            for j in 0..=i {
                let x = w * u[i] * u[j];
                v[[i, j]] += x;
                if i != j {
                    v[[j, i]] += x;
                }
            }
        }
    }
    (a, v)
}

pub fn quasimomentum<R: Rng>(rng: &mut R) -> Quasimomentum {
    let pi = std::f64::consts::PI;
    Quasimomentum::new([0; 3].map(|_: i32| rng.gen_range(-pi..pi)))
}

/// Nonnegative even potential with 1..=max_sites listed sites inside the box of
/// radius `radius`.
pub fn nonnegative_potential<R: Rng>(rng: &mut R, radius: i64, max_sites: usize) -> Potential {
    let mut listed: Vec<(Site, f64)> = Vec::new();
    let count = rng.gen_range(1..=max_sites.max(1));
    for _ in 0..count {
        let s: Site = [0; 3].map(|_: i32| rng.gen_range(-radius..=radius));
        let m = [-s[0], -s[1], -s[2]];
        if listed.iter().any(|(t, _)| *t == s || *t == m) {
            continue;
        }
        listed.push((s, rng.gen_range(0.1..6.0)));
    }
    Potential::from_sites(listed).expect("sites are distinct and mirror-free")
}

#[derive(Debug, Clone)]
pub struct BsInstance {
    pub masses: MassPair,
    pub k: Quasimomentum,
    pub potential: Potential,
    pub grid: MomentumGrid,
    pub z: f64,
}

/// Random masses, k and nonnegative potential on N in {4, 6, 8}, with z = e_min - 1.
pub fn bs_instance<R: Rng>(rng: &mut R) -> BsInstance {
    let n = *[4usize, 6, 8].choose(rng).expect("nonempty");
    let masses =
        MassPair::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)).expect("positive masses");
    let k = quasimomentum(rng);
    let radius = ((n - 1) / 2) as i64;
    let potential = nonnegative_potential(rng, radius.min(2), 4);
    let grid = MomentumGrid::centered(n).expect("valid size");
    let z = band_geometry(&masses, &k).e_min - 1.0;
    BsInstance {
        masses,
        k,
        potential,
        grid,
        z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pairs_are_symmetric_and_reproducible() {
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (a, v) = counting_pair(&mut r1, 50);
            let (b, w) = counting_pair(&mut r2, 50);
            assert_eq!(a, b);
            assert_eq!(v, w);
            assert!(a.nrows() <= 50);
            for i in 0..v.nrows() {
                for j in 0..v.nrows() {
                    assert_eq!(v[[i, j]], v[[j, i]]);
                }
            }
        }
    }

    #[test]
    fn bs_instances_satisfy_preconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let inst = bs_instance(&mut rng);
            assert!(inst.potential.is_nonnegative() && !inst.potential.is_empty());
            inst.grid.check_resolves(&inst.potential).unwrap();
        }
    }
}
