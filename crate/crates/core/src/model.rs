//! Shared domain types: masses, momenta on the torus, finitely supported
//! even potentials and momentum grids.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalizes an angle into (-pi, pi]. Values already in range are returned untouched,
/// which makes the map exactly idempotent.
pub fn wrap_angle(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let r = (x + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassPair {
    m1: f64,
    m2: f64,
}

impl MassPair {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        for m in [m1, m2] {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidMass(m));
            }
        }
        Ok(Self { m1, m2 })
    }

    /// Both masses equal to `m`.
    pub fn equal(m: f64) -> Result<Self> {
        Self::new(m, m)
    }

    pub fn m1(&self) -> f64 {
        self.m1
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn equal_masses(&self) -> bool {
        (self.m1 - self.m2).abs() <= 1e-12 * self.m1.max(self.m2)
    }

    /// 1/m1 + 1/m2.
    pub fn inv_sum(&self) -> f64 {
        1.0 / self.m1 + 1.0 / self.m2
    }

    /// 1/m2 - 1/m1.
    pub fn inv_diff(&self) -> f64 {
        1.0 / self.m2 - 1.0 / self.m1
    }
}

/// A point of the torus (-pi, pi]^3.
macro_rules! torus_point {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
        pub struct $name([f64; 3]);

        impl $name {
            /// Each component is reduced modulo 2*pi into (-pi, pi].
            pub fn new(components: [f64; 3]) -> Self {
                Self(components.map(wrap_angle))
            }

            pub fn zero() -> Self {
                Self([0.0; 3])
            }

            pub fn components(&self) -> [f64; 3] {
                self.0
            }

            pub fn get(&self, j: usize) -> f64 {
                self.0[j]
            }

            /// Every component lies strictly inside (-pi, pi).
            pub fn is_interior(&self) -> bool {
                self.0.iter().all(|&c| c > -PI && c < PI)
            }

            pub fn neg(&self) -> Self {
                Self::new(self.0.map(|c| -c))
            }
        }

        impl From<[f64; 3]> for $name {
            fn from(c: [f64; 3]) -> Self {
                Self::new(c)
            }
        }
    };
}

torus_point!(
    /// Total quasi-momentum of the pair.
    Quasimomentum
);
torus_point!(
    /// Relative momentum, the argument of the dispersion and of the kernels.
    RelativeMomentum
);

impl Quasimomentum {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }
}

pub type Site = [i64; 3];

fn neg_site(s: Site) -> Site {
    [-s[0], -s[1], -s[2]]
}

/// Finitely supported even real function on Z^3.
///
/// Entries are stored for both `s` and `-s`; exact zeros are dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Potential {
    entries: BTreeMap<Site, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SiteRecord {
    s: Site,
    v: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PotentialFile {
    sites: Vec<SiteRecord>,
}

impl Potential {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds the even closure of the listed sites. Listing the same site twice is an
    /// error; listing `s` and `-s` with different values is an evenness violation.
    pub fn from_sites<I>(sites: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Site, f64)>,
    {
        let mut listed: BTreeMap<Site, f64> = BTreeMap::new();
        for (s, v) in sites {
            if !v.is_finite() {
                return Err(Error::NonFinite(s));
            }
            if listed.insert(s, v).is_some() {
                return Err(Error::DuplicateSite(s));
            }
        }
        let mut entries = BTreeMap::new();
        for (&s, &v) in &listed {
            let m = neg_site(s);
            if let Some(&w) = listed.get(&m) {
                if w != v {
                    return Err(Error::EvennessViolation {
                        site: s,
                        value: v,
                        mirror: w,
                    });
                }
            }
            if v != 0.0 {
                entries.insert(s, v);
                entries.insert(m, v);
            }
        }
        Ok(Self { entries })
    }

    /// Point interaction of strength `lambda` at the origin.
    pub fn point(lambda: f64) -> Result<Self> {
        Self::from_sites([([0, 0, 0], lambda)])
    }

    pub fn entries(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        self.entries.iter().map(|(&s, &v)| (s, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value(&self, s: Site) -> f64 {
        self.entries.get(&s).copied().unwrap_or(0.0)
    }

    /// max |s|_inf over the support; 0 for the empty potential.
    pub fn support_radius(&self) -> i64 {
        self.entries
            .keys()
            .map(|s| s.iter().map(|c| c.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.values().all(|&v| v >= 0.0)
    }

    /// First negative entry, if any.
    pub fn first_negative(&self) -> Option<(Site, f64)> {
        self.entries().find(|&(_, v)| v < 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|&(_, &v)| v * c != 0.0)
            .map(|(&s, &v)| (s, v * c))
            .collect();
        Self { entries }
    }

    /// Entrywise map, keeping evenness. Used for the square root of a nonnegative potential.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&s, &v)| (s, f(v)))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        Self { entries }
    }

    /// Values v(s e^j) for s in Z, as (s, value) pairs.
    pub fn axis_values(&self, axis: usize) -> Vec<(i64, f64)> {
        self.entries()
            .filter(|(s, _)| (0..3).all(|i| i == axis || s[i] == 0))
            .map(|(s, v)| (s[axis], v))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Parses the JSON potential file format.
pub fn load_potential<R: Read>(mut source: R) -> Result<Potential> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::Parse(e.to_string()))?;
    let file: PotentialFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    Potential::from_sites(file.sites.into_iter().map(|r| (r.s, r.v)))
}

pub fn load_potential_file(path: &std::path::Path) -> Result<Potential> {
    let file = std::fs::File::open(path)?;
    load_potential(std::io::BufReader::new(file))
}

/// Writes the canonical form: every stored site, sorted, both members of each +-s pair.
pub fn save_potential<W: Write>(pot: &Potential, mut sink: W) -> Result<()> {
    let file = PotentialFile {
        sites: pot.entries().map(|(s, v)| SiteRecord { s, v }).collect(),
    };
    serde_json::to_writer_pretty(&mut sink, &file).map_err(|e| Error::Parse(e.to_string()))?;
    sink.write_all(b"\n")?;
    Ok(())
}

/// (2 pi)^(-3/2)
pub fn fourier_norm() -> f64 {
    (2.0 * PI).powf(-1.5)
}

/// v(q) = (2 pi)^(-3/2) sum_s v(s) cos((q, s)); the sine part cancels by evenness.
pub fn momentum_kernel(pot: &Potential, q: RelativeMomentum) -> f64 {
    let q = q.components();
    let sum: f64 = pot.entries().map(|(s, v)| v * dot_site(q, s).cos()).sum();
    fourier_norm() * sum
}

#[inline]
pub(crate) fn dot_site(q: [f64; 3], s: Site) -> f64 {
    q[0] * s[0] as f64 + q[1] * s[1] as f64 + q[2] * s[2] as f64
}

/// The N^3 nodes q_n = -pi + (n_j + offset) 2 pi / N, n_j = 0..N-1.
///
/// Node index is `(n1 * N + n2) * N + n3`. For even N with offset 0.5 no
/// component is 0 or pi; odd N with offset 0.5 contains q = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    n: usize,
    offset: f64,
}

impl MomentumGrid {
    pub const DEFAULT_OFFSET: f64 = 0.5;

    pub fn new(n: usize, offset: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("N = {n} must be at least 2")));
        }
        if !(0.0..1.0).contains(&offset) {
            return Err(Error::InvalidGrid(format!(
                "offset {offset} must lie in [0, 1)"
            )));
        }
        Ok(Self { n, offset })
    }

    /// Half-step offset grid.
    pub fn centered(n: usize) -> Result<Self> {
        Self::new(n, Self::DEFAULT_OFFSET)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// The N per-axis coordinates.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n)
            .map(|i| -PI + (i as f64 + self.offset) * h)
            .collect()
    }

    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.n + i[1]) * self.n + i[2]
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn nodes(&self) -> Vec<[f64; 3]> {
        let ax = self.axis();
        let mut out = Vec::with_capacity(self.dim());
        for &a in &ax {
            for &b in &ax {
                for &c in &ax {
                    out.push([a, b, c]);
                }
            }
        }
        out
    }

    /// Sites of the centered position box: per axis the N integers in
    /// (-N/2, N/2] for even N and [-(N-1)/2, (N-1)/2] for odd N.
    pub fn position_box(&self) -> Vec<Site> {
        let n = self.n as i64;
        let lo = -(n - 1) / 2;
        let range: Vec<i64> = (lo..lo + n).collect();
        let mut out = Vec::with_capacity(self.dim());
        for &a in &range {
            for &b in &range {
                for &c in &range {
                    out.push([a, b, c]);
                }
            }
        }
        out
    }

    /// Fails unless N >= 2 R + 1 for the support radius R of `pot`.
    pub fn check_resolves(&self, pot: &Potential) -> Result<()> {
        let radius = pot.support_radius();
        let needed = (2 * radius + 1) as usize;
        if self.n < needed {
            return Err(Error::GridTooSmall {
                n: self.n,
                radius,
                needed,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(s: &str) -> Result<Potential> {
        load_potential(s.as_bytes())
    }

    #[test]
    fn loads_singleton_at_origin() {
        let p = load(r#"{"sites": [{"s": [0,0,0], "v": 2.0}]}"#).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.value([0, 0, 0]), 2.0);
    }

    #[test]
    fn symmetrizes_missing_mirror() {
        let p = load(r#"{"sites": [{"s": [1,0,0], "v": 1.0}]}"#).unwrap();
        assert_eq!(p.value([1, 0, 0]), 1.0);
        assert_eq!(p.value([-1, 0, 0]), 1.0);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn rejects_conflicting_mirror() {
        let e = load(r#"{"sites": [{"s": [1,0,0], "v": 1.0}, {"s": [-1,0,0], "v": 2.0}]}"#);
        assert!(matches!(e, Err(Error::EvennessViolation { .. })));
    }

    #[test]
    fn accepts_consistent_mirror_and_rejects_duplicates() {
        let p =
            load(r#"{"sites": [{"s": [0,1,0], "v": 3.0}, {"s": [0,-1,0], "v": 3.0}]}"#).unwrap();
        assert_eq!(p.len(), 2);
        let e = load(r#"{"sites": [{"s": [0,1,0], "v": 3.0}, {"s": [0,1,0], "v": 3.0}]}"#);
        assert!(matches!(e, Err(Error::DuplicateSite(_))));
    }

    #[test]
    fn rejects_malformed_and_out_of_range() {
        assert!(matches!(load("{\"sites\": 3}"), Err(Error::Parse(_))));
        assert!(matches!(load("not json"), Err(Error::Parse(_))));
        assert!(load(r#"{"sites": [{"s": [0,0,0], "v": 1e999}]}"#).is_err());
        assert!(matches!(
            Potential::from_sites([([0, 0, 0], f64::NAN)]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn round_trip_is_canonical() {
        let p = load(r#"{"sites": [{"s": [2,-1,0], "v": -0.5}, {"s": [0,0,0], "v": 4}]}"#).unwrap();
        let mut buf = Vec::new();
        save_potential(&p, &mut buf).unwrap();
        let q = load_potential(buf.as_slice()).unwrap();
        assert_eq!(p, q);
        assert_eq!(p.support_radius(), 2);
    }

    #[test]
    fn kernel_examples() {
        let c = fourier_norm();
        let point = Potential::point(2.0).unwrap();
        let q = RelativeMomentum::new([0.3, -1.1, 2.0]);
        assert!((momentum_kernel(&point, q) - 2.0 * c).abs() < 1e-15);
        assert!((2.0 * c - 0.12698).abs() < 1e-5);
        let dip = Potential::from_sites([([1, 0, 0], 1.0)]).unwrap();
        let at0 = momentum_kernel(&dip, RelativeMomentum::zero());
        let at_pi = momentum_kernel(&dip, RelativeMomentum::new([PI, 0.0, 0.0]));
        assert!((at0 - 2.0 * c).abs() < 1e-15);
        assert!((at_pi + 2.0 * c).abs() < 1e-15);
    }

    #[test]
    fn wraps_into_half_open_torus() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(2.0 * PI + 0.25) - 0.25).abs() < 1e-15);
        assert_eq!(wrap_angle(0.7), 0.7);
        let k = Quasimomentum::new([PI, -PI, 4.0]);
        assert_eq!(k.get(0), PI);
        assert_eq!(k.get(1), PI);
        assert!(!k.is_interior());
        assert!(Quasimomentum::new([0.1, -3.0, 3.0]).is_interior());
    }

    #[test]
    fn masses() {
        assert!(MassPair::new(1.0, 1.0).unwrap().equal_masses());
        assert!(!MassPair::new(1.0, 1.0 + 1e-9).unwrap().equal_masses());
        assert!(MassPair::new(1.0, 1.0 + 1e-13).unwrap().equal_masses());
        assert!(MassPair::new(0.0, 1.0).is_err());
        assert!(MassPair::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn grid_nodes() {
        let g = MomentumGrid::centered(6).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes.len(), 216);
        for q in &nodes {
            for &c in q {
                assert!((-PI..PI).contains(&c));
                assert!(c.abs() > 1e-12 && (c.abs() - PI).abs() > 1e-12);
            }
        }
        for (i, q) in nodes.iter().enumerate() {
            assert_eq!(g.index(g.multi_index(i)), i);
            for p in nodes.iter().skip(i + 1) {
                assert_ne!(q, p);
            }
        }
        assert!(MomentumGrid::new(1, 0.0).is_err());
        assert!(MomentumGrid::new(4, 1.0).is_err());
        let b = MomentumGrid::new(4, 0.0).unwrap().position_box();
        assert_eq!(b[0], [-1, -1, -1]);
        assert_eq!(b[63], [2, 2, 2]);
    }

    #[test]
    fn grid_size_precondition() {
        let p = Potential::from_sites([([2, 0, 0], 1.0)]).unwrap();
        assert!(MomentumGrid::centered(5)
            .unwrap()
            .check_resolves(&p)
            .is_ok());
        assert!(matches!(
            MomentumGrid::centered(4).unwrap().check_resolves(&p),
            Err(Error::GridTooSmall { needed: 5, .. })
        ));
    }
}
