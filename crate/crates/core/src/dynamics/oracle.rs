//! Closed-form stationary points of the single-domain Landau polynomial.

use crate::domains::Anisotropy;
use crate::{FtjError, Result};

/// Stationary polarizations and coercive field of an isolated domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibria {
    /// Stationary points of alpha P^2 + beta P^4 + gamma P^6, ascending.
    pub roots: Vec<f64>,
    /// Remnant polarization (positive minimum), C/m^2; zero when paraelectric.
    pub remnant: f64,
    /// Coercive field, V/m; zero when paraelectric.
    pub coercive_field: f64,
    /// Polarization at which the coercive field is reached, C/m^2.
    pub coercive_polarization: f64,
}

impl Equilibria {
    pub fn is_ferroelectric(&self) -> bool {
        self.remnant > 0.0
    }
}

/// Positive roots of a x^2 + b x + c = 0, ascending, computed without
/// cancellation.
fn positive_quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b != 0.0 && -c / b > 0.0 { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots: Vec<f64> = [q / a, if q != 0.0 { c / q } else { f64::NAN }]
        .into_iter()
        .filter(|r| r.is_finite() && *r > 0.0)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// Stationary points from 6 gamma x^2 + 4 beta x + 2 alpha = 0 (x = P^2) and
/// the coercive field from 30 gamma y^2 + 12 beta y + 2 alpha = 0 (y = P^2).
pub fn single_domain_equilibria(a: Anisotropy) -> Result<Equilibria> {
    let xs = positive_quadratic_roots(6.0 * a.gamma, 4.0 * a.beta, 2.0 * a.alpha);
    let mut roots = vec![0.0];
    for &x in &xs {
        roots.push(x.sqrt());
        roots.push(-x.sqrt());
    }
    roots.sort_by(f64::total_cmp);
    // minima have positive curvature 2 alpha + 12 beta P^2 + 30 gamma P^4
    let curvature = |p: f64| 2.0 * a.alpha + 12.0 * a.beta * p * p + 30.0 * a.gamma * p.powi(4);
    let remnant = roots
        .iter()
        .copied()
        .filter(|&p| p > 0.0 && curvature(p) > 0.0)
        .fold(0.0, f64::max);
    if a.alpha >= 0.0 && remnant == 0.0 {
        return Ok(Equilibria {
            roots,
            remnant: 0.0,
            coercive_field: 0.0,
            coercive_polarization: 0.0,
        });
    }
    if remnant == 0.0 {
        return Err(FtjError::NotFerroelectric(format!(
            "no stable positive polarization for {a:?}"
        )));
    }
    // the descending branch runs from 0 to the first spinodal point
    let ys = positive_quadratic_roots(30.0 * a.gamma, 12.0 * a.beta, 2.0 * a.alpha);
    let p_c = ys
        .iter()
        .map(|y| y.sqrt())
        .find(|&p| p < remnant)
        .ok_or_else(|| FtjError::NotFerroelectric("no spinodal point below P_r".into()))?;
    Ok(Equilibria {
        roots,
        remnant,
        coercive_field: a.field(p_c).abs(),
        coercive_polarization: p_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute-force scan of the field polynomial, independent of the closed form.
    fn scan(a: Anisotropy) -> (f64, f64) {
        let n = 2_000_000;
        let p_max = 0.5;
        let mut remnant = 0.0;
        let mut min_field = f64::INFINITY;
        let mut prev = a.field(1e-12);
        for k in 1..=n {
            let p = p_max * k as f64 / n as f64;
            let f = a.field(p);
            if prev < 0.0 && f >= 0.0 && remnant == 0.0 {
                remnant = p;
            }
            if remnant == 0.0 {
                min_field = min_field.min(f);
            }
            prev = f;
        }
        (remnant, -min_field)
    }

    #[test]
    fn nominal_constants_match_scan() {
        let eq = single_domain_equilibria(Anisotropy::HZO).unwrap();
        let (pr, ec) = scan(Anisotropy::HZO);
        assert_relative_eq!(eq.remnant, pr, max_relative = 1e-5);
        assert_relative_eq!(eq.coercive_field, ec, max_relative = 1e-8);
        // frozen from the scan above: P_r = 0.20410 C/m^2, E_c = 1.1084e8 V/m
        assert_relative_eq!(eq.remnant, 0.204_10, max_relative = 1e-4);
        assert_relative_eq!(eq.coercive_field, 1.1084e8, max_relative = 1e-4);
        assert_relative_eq!(eq.coercive_field * 12e-9, 1.3301, max_relative = 1e-4);
        assert_eq!(eq.roots.len(), 3);
        assert!(eq.is_ferroelectric());
    }

    #[test]
    fn remnant_is_a_zero_of_the_field() {
        let eq = single_domain_equilibria(Anisotropy::HZO).unwrap();
        let f = Anisotropy::HZO.field(eq.remnant);
        assert!(f.abs() < 1e-6 * Anisotropy::HZO.alpha.abs() * eq.remnant);
    }

    #[test]
    fn paraelectric_has_single_root() {
        let a = Anisotropy { alpha: 1e8, beta: 1e9, gamma: 1e10 };
        let eq = single_domain_equilibria(a).unwrap();
        assert_eq!(eq.roots, vec![0.0]);
        assert!(!eq.is_ferroelectric());
    }
}
