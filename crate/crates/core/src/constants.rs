//! CODATA 2018 physical constants in SI units.

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Elementary charge, C.
pub const Q_E: f64 = 1.602_176_634e-19;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Free electron mass, kg.
pub const M0: f64 = 9.109_383_701_5e-31;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Thermal energy in eV at temperature `t_k`.
#[inline]
pub fn thermal_energy_ev(t_k: f64) -> f64 {
    K_B * t_k / Q_E
}
