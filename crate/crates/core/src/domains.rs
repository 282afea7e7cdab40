//! Square-tile domain lattice and per-domain Landau anisotropy constants.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{FtjError, Result};

/// Periodic `nx` x `ny` lattice of square domains of side `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Domain side, m.
    pub d: f64,
    /// Domain-wall region width, m.
    pub w: f64,
    /// Domain-wall coupling factor k/w, m^2/F.
    pub k_over_w: f64,
}

impl Default for GridSpec {
    /// 20 x 20 domains, d = 5 nm, w/d = 0.1, k/w = 2e-3 m^2/F.
    fn default() -> Self {
        Self {
            nx: 20,
            ny: 20,
            d: 5e-9,
            w: 0.5e-9,
            k_over_w: 2e-3,
        }
    }
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self {
            nx: n,
            ny: n,
            ..Self::default()
        }
    }

    pub fn n_domains(&self) -> usize {
        self.nx * self.ny
    }

    /// Lattice footprint area n_D d^2, m^2.
    pub fn area(&self) -> f64 {
        self.n_domains() as f64 * self.d * self.d
    }

    /// Coefficient t_F k / (d w) of the domain-wall term, m^2/F.
    pub fn wall_coefficient(&self, t_f: f64) -> f64 {
        t_f * self.k_over_w / self.d
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(FtjError::InvalidGrid("grid needs at least one domain".into()));
        }
        if !(self.d > 0.0) {
            return Err(FtjError::InvalidGrid("domain side must be positive".into()));
        }
        if !(self.w > 0.0 && self.w < self.d) {
            return Err(FtjError::InvalidGrid(
                "wall width must satisfy 0 < w < d".into(),
            ));
        }
        if !(self.k_over_w >= 0.0) {
            return Err(FtjError::InvalidGrid("k/w must be non-negative".into()));
        }
        Ok(())
    }

    /// (x, y) lattice coordinates of domain `i` (row-major, x fastest).
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.nx + x
    }

    /// Von Neumann neighbours of `i` with periodic wraparound, ordered
    /// (-x, +x, -y, +y). Small grids repeat entries; a 1 x 1 grid returns
    /// the domain itself four times.
    pub fn neighbors(&self, i: usize) -> Result<[usize; 4]> {
        let n = self.n_domains();
        if i >= n {
            return Err(FtjError::IndexOutOfRange {
                index: i,
                n_domains: n,
            });
        }
        let (x, y) = self.coords(i);
        let (nx, ny) = (self.nx, self.ny);
        Ok([
            self.index((x + nx - 1) % nx, y),
            self.index((x + 1) % nx, y),
            self.index(x, (y + ny - 1) % ny),
            self.index(x, (y + 1) % ny),
        ])
    }

    /// Neighbour table for all domains.
    pub fn neighbor_table(&self) -> Vec<[usize; 4]> {
        (0..self.n_domains())
            .map(|i| self.neighbors(i).expect("index in range"))
            .collect()
    }

    /// Periodic (torus) offset from `j` to `i` in lattice units, folded into
    /// [-n/2, n/2].
    pub fn torus_offset(&self, i: usize, j: usize) -> (i64, i64) {
        let (xi, yi) = self.coords(i);
        let (xj, yj) = self.coords(j);
        let fold = |a: usize, b: usize, n: usize| {
            let n = n as i64;
            let mut dlt = (a as i64 - b as i64).rem_euclid(n);
            if dlt > n / 2 {
                dlt -= n;
            }
            dlt
        };
        (fold(xi, xj, self.nx), fold(yi, yj, self.ny))
    }

    /// Torus distance between domain centres, m.
    pub fn torus_distance(&self, i: usize, j: usize) -> f64 {
        let (dx, dy) = self.torus_offset(i, j);
        ((dx * dx + dy * dy) as f64).sqrt() * self.d
    }
}

/// Landau anisotropy constants of one domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anisotropy {
    /// m/F
    pub alpha: f64,
    /// m^5/F/C^2
    pub beta: f64,
    /// m^9/F/C^4
    pub gamma: f64,
}

impl Anisotropy {
    /// Nominal HZO constants.
    pub const HZO: Anisotropy = Anisotropy {
        alpha: -5.8e8,
        beta: 2.9e9,
        gamma: 6.5e10,
    };

    /// Field 2 alpha P + 4 beta P^3 + 6 gamma P^5, V/m.
    #[inline]
    pub fn field(&self, p: f64) -> f64 {
        let p2 = p * p;
        p * (2.0 * self.alpha + p2 * (4.0 * self.beta + 6.0 * self.gamma * p2))
    }

    /// Free energy density alpha P^2 + beta P^4 + gamma P^6, J/m^3.
    #[inline]
    pub fn energy(&self, p: f64) -> f64 {
        let p2 = p * p;
        p2 * (self.alpha + p2 * (self.beta + self.gamma * p2))
    }
}

/// Relative (normalised to the mean) standard deviations of the anisotropy
/// constants, plus the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    pub sigma_alpha: f64,
    pub sigma_beta: f64,
    pub sigma_gamma: f64,
    pub seed: u64,
}

impl Default for VariationSpec {
    fn default() -> Self {
        Self {
            sigma_alpha: 0.05,
            sigma_beta: 0.05,
            sigma_gamma: 0.05,
            seed: 1,
        }
    }
}

impl VariationSpec {
    pub fn none() -> Self {
        Self {
            sigma_alpha: 0.0,
            sigma_beta: 0.0,
            sigma_gamma: 0.0,
            seed: 0,
        }
    }
}

/// Per-domain anisotropy constants, one entry per domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl DomainParams {
    pub fn uniform(n: usize, a: Anisotropy) -> Self {
        Self {
            alpha: vec![a.alpha; n],
            beta: vec![a.beta; n],
            gamma: vec![a.gamma; n],
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn get(&self, i: usize) -> Anisotropy {
        Anisotropy {
            alpha: self.alpha[i],
            beta: self.beta[i],
            gamma: self.gamma[i],
        }
    }

    /// Mean of alpha over domains.
    pub fn mean_alpha(&self) -> f64 {
        self.alpha.iter().sum::<f64>() / self.alpha.len() as f64
    }

    /// Writes `index,alpha,beta,gamma` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "alpha", "beta", "gamma"])?;
        for i in 0..self.len() {
            w.write_record(&[
                i.to_string(),
                format!("{:e}", self.alpha[i]),
                format!("{:e}", self.beta[i]),
                format!("{:e}", self.gamma[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws each constant from Normal(nominal, |sigma * nominal|), independently
/// per domain and per constant, from a ChaCha20 stream seeded with
/// `variation.seed`. Draws that flip the sign of a constant are rejected and
/// redrawn so every domain keeps the nominal double-well shape.
pub fn sample_anisotropy(
    nominal: Anisotropy,
    variation: &VariationSpec,
    grid: &GridSpec,
) -> Result<DomainParams> {
    for (name, s) in [
        ("sigma_alpha", variation.sigma_alpha),
        ("sigma_beta", variation.sigma_beta),
        ("sigma_gamma", variation.sigma_gamma),
    ] {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(FtjError::InvalidParameter(format!(
                "{name} must be a finite non-negative number"
            )));
        }
    }
    let n = grid.n_domains();
    let mut rng = ChaCha20Rng::seed_from_u64(variation.seed);
    let mut draw = |mean: f64, rel_sigma: f64| -> f64 {
        if rel_sigma == 0.0 || mean == 0.0 {
            return mean;
        }
        let sd = (rel_sigma * mean).abs();
        loop {
            let z: f64 = StandardNormal.sample(&mut rng);
            let v = mean + sd * z;
            if v.signum() == mean.signum() && v != 0.0 {
                return v;
            }
        }
    };
    let mut params = DomainParams {
        alpha: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        gamma: Vec::with_capacity(n),
    };
    for _ in 0..n {
        params.alpha.push(draw(nominal.alpha, variation.sigma_alpha));
        params.beta.push(draw(nominal.beta, variation.sigma_beta));
        params.gamma.push(draw(nominal.gamma, variation.sigma_gamma));
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_variance_gives_nominal() {
        let g = GridSpec::square(4);
        let p = sample_anisotropy(Anisotropy::HZO, &VariationSpec::none(), &g).unwrap();
        assert_eq!(p, DomainParams::uniform(16, Anisotropy::HZO));
        assert_eq!(p.mean_alpha(), Anisotropy::HZO.alpha);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let g = GridSpec::square(10);
        let v = VariationSpec {
            seed: 42,
            ..Default::default()
        };
        let a = sample_anisotropy(Anisotropy::HZO, &v, &g).unwrap();
        let b = sample_anisotropy(Anisotropy::HZO, &v, &g).unwrap();
        assert!(a.alpha.iter().zip(&b.alpha).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = sample_anisotropy(Anisotropy::HZO, &VariationSpec { seed: 43, ..v }, &g).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn large_sigma_never_flips_signs() {
        let g = GridSpec::square(30);
        let v = VariationSpec {
            sigma_alpha: 1.5,
            sigma_beta: 1.5,
            sigma_gamma: 1.5,
            seed: 3,
        };
        let p = sample_anisotropy(Anisotropy::HZO, &v, &g).unwrap();
        assert!(p.alpha.iter().all(|&a| a < 0.0));
        assert!(p.beta.iter().all(|&b| b > 0.0));
        assert!(p.gamma.iter().all(|&c| c > 0.0));
    }

    #[test]
    fn negative_sigma_rejected() {
        let v = VariationSpec {
            sigma_alpha: -0.1,
            ..Default::default()
        };
        assert!(sample_anisotropy(Anisotropy::HZO, &v, &GridSpec::square(2)).is_err());
    }

    #[test]
    fn sample_mean_converges() {
        // 10^4 domains: |mean - alpha| < 3 sigma |alpha| / sqrt(n)
        let g = GridSpec::square(100);
        let v = VariationSpec {
            sigma_alpha: 0.1,
            sigma_beta: 0.1,
            sigma_gamma: 0.1,
            seed: 2024,
        };
        let p = sample_anisotropy(Anisotropy::HZO, &v, &g).unwrap();
        let n = p.len() as f64;
        let bound = |nom: f64| 3.0 * 0.1 * nom.abs() / n.sqrt();
        let mean = |x: &[f64]| x.iter().sum::<f64>() / n;
        assert!((mean(&p.alpha) - Anisotropy::HZO.alpha).abs() < bound(Anisotropy::HZO.alpha));
        assert!((mean(&p.beta) - Anisotropy::HZO.beta).abs() < bound(Anisotropy::HZO.beta));
        assert!((mean(&p.gamma) - Anisotropy::HZO.gamma).abs() < bound(Anisotropy::HZO.gamma));
    }

    #[test]
    fn single_domain_grid_is_its_own_neighbour() {
        let g = GridSpec::square(1);
        assert_eq!(g.neighbors(0).unwrap(), [0, 0, 0, 0]);
    }

    #[test]
    fn center_of_3x3() {
        let g = GridSpec::square(3);
        let mut nb = g.neighbors(4).unwrap();
        nb.sort();
        assert_eq!(nb, [1, 3, 5, 7]);
    }

    #[test]
    fn corner_of_2x2_wraps() {
        // (0,0): -x and +x both land on (1,0) = 1, -y and +y on (0,1) = 2
        let g = GridSpec::square(2);
        assert_eq!(g.neighbors(0).unwrap(), [1, 1, 2, 2]);
        assert_eq!(g.neighbors(3).unwrap(), [2, 2, 1, 1]);
    }

    #[test]
    fn out_of_range_index() {
        let g = GridSpec::square(3);
        assert!(matches!(
            g.neighbors(9),
            Err(FtjError::IndexOutOfRange { index: 9, n_domains: 9 })
        ));
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec::default();
        g.validate().unwrap();
        g.w = g.d;
        assert!(g.validate().is_err());
        let g0 = GridSpec { nx: 0, ..GridSpec::default() };
        assert!(g0.validate().is_err());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let p = DomainParams::uniform(3, Anisotropy::HZO);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "index,alpha,beta,gamma");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,-5.8e8,"));
    }

    proptest! {
        #[test]
        fn neighbour_relation_is_symmetric(nx in 1usize..7, ny in 1usize..7) {
            let g = GridSpec { nx, ny, ..GridSpec::default() };
            let table = g.neighbor_table();
            for i in 0..g.n_domains() {
                for &j in &table[i] {
                    let ci = table[i].iter().filter(|&&k| k == j).count();
                    let cj = table[j].iter().filter(|&&k| k == i).count();
                    prop_assert_eq!(ci, cj);
                }
            }
        }

        #[test]
        fn wall_sum_conserves_total(nx in 1usize..6, ny in 1usize..6,
                                    seed in 0u64..1000) {
            let g = GridSpec { nx, ny, ..GridSpec::default() };
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let p: Vec<f64> = (0..g.n_domains())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let total: f64 = (0..g.n_domains())
                .map(|i| g.neighbors(i).unwrap().iter().map(|&n| p[i] - p[n]).sum::<f64>())
                .sum();
            prop_assert!(total.abs() < 1e-12);
        }
    }
}
