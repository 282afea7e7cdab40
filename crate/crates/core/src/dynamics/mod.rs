//! Multi-domain Landau-Ginzburg-Devonshire kinetics.
//!
//! Per domain, in volts:
//!
//! ```text
//! t_F rho dP_i/dt = -(2 a_i P_i + 4 b_i P_i^3 + 6 g_i P_i^5) t_F
//!                   - (t_F k / (d w)) sum_n (P_i - P_n)
//!                   - 1/2 sum_j (1/C_ij + 1/C_ji) P_j
//!                   + (C_D / C_0) (V_T + V_bi)
//! ```

mod integrator;
mod oracle;

pub use integrator::{Integrator, StepStats};
pub use oracle::{single_domain_equilibria, Equilibria};

use serde::{Deserialize, Serialize};

use crate::domains::{DomainParams, GridSpec};
use crate::electrostatics::{CouplingMatrix, VoltagePartition};
use crate::stack::StackSpec;
use crate::{FtjError, Result};

/// Time-dependent applied bias V_T(t).
pub trait Bias {
    fn voltage(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Bias for F {
    fn voltage(&self, t: f64) -> f64 {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    /// Kinetic resistivity rho, Ohm m.
    pub rho: f64,
    /// Relative local error tolerance.
    pub rel_tol: f64,
    /// Absolute local error tolerance, C/m^2.
    pub abs_tol: f64,
    /// Largest step, s. `None` uses t_rho / 20.
    pub dt_max: Option<f64>,
    /// First trial step, s. `None` uses t_rho / 1000.
    pub dt_init: Option<f64>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            rho: 116.0,
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            dt_max: None,
            dt_init: None,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(FtjError::InvalidParameter("rho must be positive".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(FtjError::InvalidParameter("tolerances must be positive".into()));
        }
        if let (Some(init), Some(max)) = (self.dt_init, self.dt_max) {
            if init > max {
                return Err(FtjError::InvalidParameter("dt_init must not exceed dt_max".into()));
            }
        }
        for dt in [self.dt_init, self.dt_max].into_iter().flatten() {
            if !(dt > 0.0) {
                return Err(FtjError::InvalidParameter("time steps must be positive".into()));
            }
        }
        Ok(())
    }
}

/// t_rho = rho / (2 |<alpha>|).
pub fn characteristic_time(params: &DomainParams, rho: f64) -> Result<f64> {
    if params.is_empty() {
        return Err(FtjError::InvalidParameter("no domains".into()));
    }
    let mean = params.mean_alpha();
    if mean == 0.0 || !mean.is_finite() {
        return Err(FtjError::InvalidParameter(
            "mean alpha must be non-zero to define t_rho".into(),
        ));
    }
    if !(rho > 0.0) {
        return Err(FtjError::InvalidParameter("rho must be positive".into()));
    }
    Ok(rho / (2.0 * mean.abs()))
}

/// Polarization snapshot at time `t` under bias `v_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub p: Vec<f64>,
    pub v_t: f64,
}

impl SimState {
    pub fn zero(n: usize) -> Self {
        Self {
            t: 0.0,
            p: vec![0.0; n],
            v_t: 0.0,
        }
    }

    pub fn mean_p(&self) -> f64 {
        self.p.iter().sum::<f64>() / self.p.len() as f64
    }
}

/// One MFIM (or bare MFM) capacitor: stack, lattice, anisotropy and coupling.
#[derive(Debug, Clone)]
pub struct LgdSystem {
    stack: StackSpec,
    grid: GridSpec,
    params: DomainParams,
    coupling: CouplingMatrix,
    partition: VoltagePartition,
    neighbors: Vec<[usize; 4]>,
    wall: f64,
    rho: f64,
    t_rho: f64,
    p_guard: f64,
}

impl LgdSystem {
    pub fn new(
        stack: StackSpec,
        grid: GridSpec,
        params: DomainParams,
        coupling: CouplingMatrix,
        rho: f64,
    ) -> Result<Self> {
        stack.validate()?;
        grid.validate()?;
        let n = grid.n_domains();
        if params.len() != n {
            return Err(FtjError::DimensionMismatch {
                expected: n,
                got: params.len(),
            });
        }
        if coupling.n() != n {
            return Err(FtjError::DimensionMismatch {
                expected: n,
                got: coupling.n(),
            });
        }
        let coupling = if coupling.is_symmetrized() {
            coupling
        } else {
            coupling.symmetrized()
        };
        let partition = VoltagePartition::from_stack(&stack)?;
        let t_rho = characteristic_time(&params, rho)?;
        let mut p_r_max: f64 = 0.0;
        for i in 0..n {
            let eq = single_domain_equilibria(params.get(i))?;
            p_r_max = p_r_max.max(eq.remnant);
        }
        let p_guard = if p_r_max > 0.0 { 2.0 * p_r_max } else { 1.0 };
        Ok(Self {
            wall: grid.wall_coefficient(stack.t_f),
            neighbors: grid.neighbor_table(),
            stack,
            grid,
            params,
            coupling,
            partition,
            rho,
            t_rho,
            p_guard,
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n_domains()
    }
    pub fn stack(&self) -> &StackSpec {
        &self.stack
    }
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn params(&self) -> &DomainParams {
        &self.params
    }
    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }
    pub fn partition(&self) -> &VoltagePartition {
        &self.partition
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn t_rho(&self) -> f64 {
        self.t_rho
    }
    /// Divergence guard on |P_i|, C/m^2.
    pub fn polarization_guard(&self) -> f64 {
        self.p_guard
    }

    /// dP/dt for every domain, C/m^2/s.
    pub fn rhs(&self, p: &[f64], v_t: f64, out: &mut [f64]) {
        let t_f = self.stack.t_f;
        let drive = self.partition.c_d_over_c0 * (v_t + self.partition.v_bi);
        let inv = 1.0 / (t_f * self.rho);
        // out <- M_sym P
        self.coupling.apply(p, out);
        for (i, o) in out.iter_mut().enumerate() {
            let pi = p[i];
            let p2 = pi * pi;
            let aniso = pi
                * (2.0 * self.params.alpha[i]
                    + p2 * (4.0 * self.params.beta[i] + 6.0 * self.params.gamma[i] * p2));
            let nb = &self.neighbors[i];
            let wall = 4.0 * pi - p[nb[0]] - p[nb[1]] - p[nb[2]] - p[nb[3]];
            *o = (-aniso * t_f - self.wall * wall - *o + drive) * inv;
        }
    }

    /// Individual terms of the right-hand side for one domain, in volts:
    /// (anisotropy, wall, depolarization, drive).
    pub fn rhs_terms(&self, p: &[f64], v_t: f64, i: usize) -> (f64, f64, f64, f64) {
        let t_f = self.stack.t_f;
        let a = self.params.get(i);
        let nb = &self.neighbors[i];
        let wall: f64 = nb.iter().map(|&n| p[i] - p[n]).sum();
        let dep = crate::electrostatics::dot(self.coupling.row(i), p);
        (
            -a.field(p[i]) * t_f,
            -self.wall * wall,
            -dep,
            self.partition.c_d_over_c0 * (v_t + self.partition.v_bi),
        )
    }

    pub fn dielectric_voltages(&self, p: &[f64], v_t: f64) -> Vec<f64> {
        crate::electrostatics::dielectric_voltages(p, v_t, &self.coupling, &self.partition)
            .expect("dimensions checked at construction")
    }

    pub fn ferroelectric_voltages(&self, p: &[f64], v_t: f64) -> Vec<f64> {
        let vd = self.dielectric_voltages(p, v_t);
        crate::electrostatics::ferroelectric_voltages(&vd, v_t, &self.partition)
    }

    /// Q = <P_i + eps0 eps_F V_F,i / t_F>, C/m^2.
    pub fn total_charge(&self, p: &[f64], v_t: f64) -> f64 {
        let c_f = self.stack.eps_f() / self.stack.t_f;
        let vf = self.ferroelectric_voltages(p, v_t);
        p.iter().zip(&vf).map(|(pi, v)| pi + c_f * v).sum::<f64>() / p.len() as f64
    }

    /// Dielectric-side charge <C_D V_D,i>; `None` for a bare ferroelectric.
    pub fn dielectric_charge(&self, p: &[f64], v_t: f64) -> Option<f64> {
        if self.stack.is_bare() {
            return None;
        }
        let c_d = self.stack.eps_d() / self.stack.t_d;
        let vd = self.dielectric_voltages(p, v_t);
        Some(c_d * vd.iter().sum::<f64>() / vd.len() as f64)
    }

    /// Errors if any polarization is non-finite or beyond the guard.
    pub fn check_state(&self, state: &SimState) -> Result<()> {
        for (i, &p) in state.p.iter().enumerate() {
            if !p.is_finite() || p.abs() > self.p_guard {
                return Err(FtjError::Divergence {
                    domain: i,
                    t: state.t,
                    value: p,
                    limit: self.p_guard,
                });
            }
        }
        Ok(())
    }
}
