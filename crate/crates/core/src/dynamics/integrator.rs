//! Dormand-Prince 5(4) with first-same-as-last reuse and PI-free step control.

use super::{Bias, DynamicsConfig, LgdSystem, SimState};
use crate::{FtjError, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// fifth-order weights; also row 7 of the tableau
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// fifth minus fourth order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

/// Adaptive explicit integrator bound to one [`LgdSystem`].
pub struct Integrator<'a> {
    sys: &'a LgdSystem,
    rel_tol: f64,
    abs_tol: f64,
    dt_max: f64,
    dt_min: f64,
    h: f64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    // derivative at the end of the last accepted step, with the state it belongs to
    fsal: Option<(f64, Vec<f64>)>,
    stats: StepStats,
}

impl<'a> Integrator<'a> {
    pub fn new(sys: &'a LgdSystem, cfg: &DynamicsConfig) -> Result<Self> {
        cfg.validate()?;
        let t_rho = sys.t_rho();
        let cap = t_rho / 20.0;
        let dt_max = cfg.dt_max.map_or(cap, |d| d.min(cap));
        let h = cfg.dt_init.unwrap_or(t_rho / 1000.0).min(dt_max);
        let n = sys.n();
        Ok(Self {
            sys,
            rel_tol: cfg.rel_tol,
            abs_tol: cfg.abs_tol,
            dt_max,
            dt_min: 1e-6 * t_rho,
            h,
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
            fsal: None,
            stats: StepStats::default(),
        })
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    /// Current trial step, s.
    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Integrates `state` to `t_end`, landing on it exactly. `observer` sees
    /// every accepted step.
    pub fn advance_to<B, O>(
        &mut self,
        state: &mut SimState,
        bias: &B,
        t_end: f64,
        mut observer: O,
    ) -> Result<()>
    where
        B: Bias + ?Sized,
        O: FnMut(&SimState) -> Result<()>,
    {
        if state.p.len() != self.sys.n() {
            return Err(FtjError::DimensionMismatch {
                expected: self.sys.n(),
                got: state.p.len(),
            });
        }
        if t_end < state.t {
            return Err(FtjError::InvalidParameter(format!(
                "cannot integrate backwards from {} to {}",
                state.t, t_end
            )));
        }
        let span_eps = 1e-12 * t_end.abs().max(self.sys.t_rho());
        while t_end - state.t > span_eps {
            let remaining = t_end - state.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            let err = self.attempt(state, bias, h);
            if err <= 1.0 {
                self.stats.accepted += 1;
                state.t = if last { t_end } else { state.t + h };
                std::mem::swap(&mut state.p, &mut self.y_new);
                state.v_t = bias.voltage(state.t);
                self.k.swap(0, 6);
                self.fsal = Some((state.t, state.p.clone()));
                self.sys.check_state(state)?;
                observer(state)?;
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                // a clipped final step says nothing about the natural step size
                if !last || h == self.h {
                    self.h = (h * factor).min(self.dt_max);
                }
            } else {
                self.stats.rejected += 1;
                let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                let next = h * factor;
                if next < self.dt_min {
                    return Err(FtjError::StepUnderflow { t: state.t, dt: next });
                }
                self.h = next;
            }
        }
        state.t = t_end;
        state.v_t = bias.voltage(t_end);
        Ok(())
    }

    /// One trial step of size `h` from `state`; leaves the candidate in
    /// `y_new`, the end derivative in `k[6]` and returns the scaled error norm.
    fn attempt<B: Bias + ?Sized>(&mut self, state: &SimState, bias: &B, h: f64) -> f64 {
        let t = state.t;
        let y = &state.p;
        let reuse = matches!(&self.fsal, Some((ft, fy)) if *ft == t && fy == y);
        if !reuse {
            self.sys.rhs(y, bias.voltage(t), &mut self.k[0]);
            self.stats.rhs_evals += 1;
        }
        let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in rows.iter().enumerate() {
            let stage = s + 1;
            for i in 0..y.len() {
                let mut acc = 0.0;
                for (j, a) in row.iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                self.y_stage[i] = y[i] + h * acc;
            }
            let (done, rest) = self.k.split_at_mut(stage);
            let _ = done;
            self.sys
                .rhs(&self.y_stage, bias.voltage(t + C[stage] * h), &mut rest[0]);
            self.stats.rhs_evals += 1;
        }
        for i in 0..y.len() {
            let mut acc = 0.0;
            for (j, b) in B.iter().enumerate() {
                acc += b * self.k[j][i];
            }
            self.y_new[i] = y[i] + h * acc;
        }
        let (_, last) = self.k.split_at_mut(6);
        self.sys.rhs(&self.y_new, bias.voltage(t + h), &mut last[0]);
        self.stats.rhs_evals += 1;

        let mut sum = 0.0;
        for i in 0..y.len() {
            let mut e = 0.0;
            for (j, w) in E.iter().enumerate() {
                e += w * self.k[j][i];
            }
            let scale = self.abs_tol + self.rel_tol * y[i].abs().max(self.y_new[i].abs());
            let r = h * e / scale;
            sum += r * r;
        }
        let norm = (sum / y.len() as f64).sqrt();
        if norm.is_finite() {
            norm
        } else {
            f64::INFINITY
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{Anisotropy, DomainParams, GridSpec};
    use crate::dynamics::single_domain_equilibria;
    use crate::electrostatics::CouplingMatrix;
    use crate::stack::StackSpec;
    use approx::assert_relative_eq;

    fn bare_single() -> LgdSystem {
        let stack = StackSpec::baseline().with_dielectric_thickness(0.0);
        LgdSystem::new(
            stack,
            GridSpec::square(1),
            DomainParams::uniform(1, Anisotropy::HZO),
            CouplingMatrix::zeros(1),
            116.0,
        )
        .unwrap()
    }

    #[test]
    fn relaxes_to_remnant_polarization() {
        let sys = bare_single();
        let mut it = Integrator::new(&sys, &DynamicsConfig::default()).unwrap();
        let mut st = SimState::zero(1);
        st.p[0] = 0.01;
        it.advance_to(&mut st, &|_t: f64| 0.0, 200.0 * sys.t_rho(), |_| Ok(()))
            .unwrap();
        let p_r = single_domain_equilibria(Anisotropy::HZO).unwrap().remnant;
        assert_relative_eq!(st.p[0], p_r, max_relative = 1e-6);
        assert_eq!(st.t, 200.0 * sys.t_rho());
    }

    #[test]
    fn linear_relaxation_matches_exponential() {
        // paraelectric with beta = gamma = 0: dP/dt = -2 alpha P / rho
        let stack = StackSpec::baseline().with_dielectric_thickness(0.0);
        let a = Anisotropy { alpha: 5.8e8, beta: 0.0, gamma: 0.0 };
        let sys = LgdSystem::new(
            stack,
            GridSpec::square(1),
            DomainParams::uniform(1, a),
            CouplingMatrix::zeros(1),
            116.0,
        )
        .unwrap();
        let cfg = DynamicsConfig { rel_tol: 1e-9, abs_tol: 1e-14, ..Default::default() };
        let mut it = Integrator::new(&sys, &cfg).unwrap();
        let mut st = SimState::zero(1);
        st.p[0] = 0.1;
        let t_end = 3.0 * sys.t_rho();
        it.advance_to(&mut st, &|_t: f64| 0.0, t_end, |_| Ok(())).unwrap();
        let rate = 2.0 * 5.8e8 / 116.0;
        assert_relative_eq!(st.p[0], 0.1 * (-rate * t_end).exp(), max_relative = 1e-7);
    }

    #[test]
    fn step_never_exceeds_cap() {
        let sys = bare_single();
        let cfg = DynamicsConfig { dt_max: Some(1.0), ..Default::default() };
        let mut it = Integrator::new(&sys, &cfg).unwrap();
        assert_relative_eq!(it.dt_max(), sys.t_rho() / 20.0);
        let mut st = SimState::zero(1);
        st.p[0] = 0.2;
        let mut last_t = 0.0;
        let cap = it.dt_max();
        it.advance_to(&mut st, &|_t: f64| 0.0, 50.0 * sys.t_rho(), |s| {
            assert!(s.t - last_t <= cap * (1.0 + 1e-12));
            last_t = s.t;
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn split_integration_matches_single_call() {
        let sys = bare_single();
        let ramp = |t: f64| 3.0 * t / (100.0 * 1e-7);
        let run = |splits: usize| {
            let mut it = Integrator::new(&sys, &DynamicsConfig::default()).unwrap();
            let mut st = SimState::zero(1);
            st.p[0] = -0.2;
            for k in 1..=splits {
                let t = 100.0 * sys.t_rho() * k as f64 / splits as f64;
                it.advance_to(&mut st, &ramp, t, |_| Ok(())).unwrap();
            }
            st.p[0]
        };
        assert_relative_eq!(run(1), run(7), max_relative = 1e-5);
    }

    #[test]
    fn underflow_is_reported() {
        let sys = bare_single();
        let cfg = DynamicsConfig { rel_tol: 1e-300, abs_tol: 1e-300, ..Default::default() };
        let mut it = Integrator::new(&sys, &cfg).unwrap();
        let mut st = SimState::zero(1);
        st.p[0] = 0.05;
        let r = it.advance_to(&mut st, &|_t: f64| 0.0, sys.t_rho(), |_| Ok(()));
        assert!(matches!(r, Err(FtjError::StepUnderflow { .. })));
    }

    #[test]
    fn observer_error_stops_integration() {
        let sys = bare_single();
        let mut it = Integrator::new(&sys, &DynamicsConfig::default()).unwrap();
        let mut st = SimState::zero(1);
        st.p[0] = 0.05;
        let r = it.advance_to(&mut st, &|_t: f64| 0.0, sys.t_rho(), |_| {
            Err(FtjError::InvalidParameter("stop".into()))
        });
        assert!(r.is_err());
    }

    #[test]
    fn rejects_backwards_time() {
        let sys = bare_single();
        let mut it = Integrator::new(&sys, &DynamicsConfig::default()).unwrap();
        let mut st = SimState::zero(1);
        st.t = 1.0;
        assert!(it.advance_to(&mut st, &|_t: f64| 0.0, 0.5, |_| Ok(())).is_err());
    }
}
