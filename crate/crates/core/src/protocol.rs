//! Waveforms and experiments: hysteresis loops, program/retention/read
//! sequences, f_UP and V_D,up extraction, V_SET and t_D sweeps.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domains::{sample_anisotropy, Anisotropy, GridSpec, VariationSpec};
use crate::dynamics::{Bias, DynamicsConfig, Integrator, LgdSystem, SimState};
use crate::electrostatics::{build_coupling, ClosureKernel, CouplingMethod, LaplaceMesh, LaplaceReport};
use crate::exec::Execution;
use crate::stack::StackSpec;
use crate::tunneling::{device_current, TransportConfig};
use crate::{FtjError, Result};

/// Piecewise-linear V_T(t), held constant outside its breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    points: Vec<(f64, f64)>,
    markers: Vec<(String, f64)>,
}

impl Waveform {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(FtjError::InvalidWaveform("no breakpoints".into()));
        }
        for &(t, v) in &points {
            if !t.is_finite() || !v.is_finite() {
                return Err(FtjError::InvalidWaveform("non-finite breakpoint".into()));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(FtjError::InvalidWaveform(
                "breakpoint times must be strictly increasing".into(),
            ));
        }
        Ok(Self { points, markers: Vec::new() })
    }

    /// Starts a waveform at time `t0` and voltage `v0`.
    pub fn builder(t0: f64, v0: f64) -> WaveformBuilder {
        WaveformBuilder {
            points: vec![(t0, v0)],
            markers: Vec::new(),
            error: None,
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn start(&self) -> f64 {
        self.points[0].0
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn marker(&self, name: &str) -> Option<f64> {
        self.markers.iter().find(|(n, _)| n == name).map(|&(_, t)| t)
    }

    pub fn markers(&self) -> &[(String, f64)] {
        &self.markers
    }

    pub fn voltage(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        if t >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let k = pts.partition_point(|&(tk, _)| tk <= t);
        let (t0, v0) = pts[k - 1];
        let (t1, v1) = pts[k];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Breakpoint times strictly inside (a, b].
    pub fn breakpoints_in(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|&(t, _)| t).filter(move |&t| t > a && t <= b)
    }

    /// Same shape with every duration scaled by `factor` about the start.
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(FtjError::InvalidWaveform("dilation must be positive".into()));
        }
        let t0 = self.start();
        let mut w = Self::new(self.points.iter().map(|&(t, v)| (t0 + (t - t0) * factor, v)).collect())?;
        w.markers = self.markers.iter().map(|(n, t)| (n.clone(), t0 + (t - t0) * factor)).collect();
        Ok(w)
    }

    /// Steepest |dV/dt| over all segments, V/s.
    pub fn max_slew(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }
}

impl Bias for Waveform {
    fn voltage(&self, t: f64) -> f64 {
        Waveform::voltage(self, t)
    }
}

pub struct WaveformBuilder {
    points: Vec<(f64, f64)>,
    markers: Vec<(String, f64)>,
    error: Option<FtjError>,
}

impl WaveformBuilder {
    fn last(&self) -> (f64, f64) {
        self.points[self.points.len() - 1]
    }

    /// Linear ramp to `v` at `rate` V/s; a no-op when already at `v`.
    pub fn ramp_to(mut self, v: f64, rate: f64) -> Self {
        if !(rate > 0.0) {
            self.error.get_or_insert(FtjError::InvalidWaveform("ramp rate must be positive".into()));
            return self;
        }
        let (t, v0) = self.last();
        if v != v0 {
            self.points.push((t + (v - v0).abs() / rate, v));
        }
        self
    }

    pub fn hold(mut self, duration: f64) -> Self {
        if duration < 0.0 || !duration.is_finite() {
            self.error.get_or_insert(FtjError::InvalidWaveform("hold must be non-negative".into()));
            return self;
        }
        let (t, v) = self.last();
        if duration > 0.0 {
            self.points.push((t + duration, v));
        }
        self
    }

    /// Names the current end time.
    pub fn mark(mut self, name: &str) -> Self {
        let t = self.last().0;
        self.markers.push((name.to_string(), t));
        self
    }

    pub fn build(self) -> Result<Waveform> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let mut w = Waveform::new(self.points)?;
        w.markers = self.markers;
        Ok(w)
    }
}

/// Fraction of domains with P_i > 0.
pub fn f_up(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).count() as f64 / p.len() as f64
}

/// Mean dielectric drop over the UP domains at bias `v_t`.
pub fn v_d_up(system: &LgdSystem, p: &[f64], v_t: f64) -> Result<f64> {
    let vd = system.dielectric_voltages(p, v_t);
    let (sum, count) = p
        .iter()
        .zip(&vd)
        .filter(|(&pi, _)| pi > 0.0)
        .fold((0.0, 0usize), |(s, c), (_, &v)| (s + v, c + 1));
    if count == 0 {
        return Err(FtjError::UndefinedMetric("V_D,up needs at least one UP domain".into()));
    }
    Ok(sum / count as f64)
}

/// Mean charge Q = <P_i + eps0 eps_F V_F,i / t_F>, C/m^2.
pub fn total_charge(system: &LgdSystem, state: &SimState) -> f64 {
    system.total_charge(&state.p, state.v_t)
}

/// Everything needed to build an [`LgdSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub stack: StackSpec,
    pub grid: GridSpec,
    pub anisotropy: Anisotropy,
    pub variation: VariationSpec,
    pub coupling: CouplingMethod,
    pub closure: ClosureKernel,
    pub mesh: LaplaceMesh,
}

impl DeviceSpec {
    pub fn baseline() -> Self {
        Self {
            stack: StackSpec::baseline(),
            grid: GridSpec::default(),
            anisotropy: Anisotropy::HZO,
            variation: VariationSpec::default(),
            coupling: CouplingMethod::Laplace,
            closure: ClosureKernel::default(),
            mesh: LaplaceMesh::default(),
        }
    }

    pub fn with_stack(&self, stack: StackSpec) -> Self {
        Self { stack, ..self.clone() }
    }

    pub fn build(
        &self,
        dynamics: DynamicsConfig,
        transport: TransportConfig,
        exec: Execution,
    ) -> Result<Simulation> {
        dynamics.validate()?;
        let params = sample_anisotropy(self.anisotropy, &self.variation, &self.grid)?;
        let (m, report) = build_coupling(self.coupling, &self.grid, &self.stack, &self.closure, &self.mesh, exec)?;
        let system = LgdSystem::new(self.stack.clone(), self.grid, params, m, dynamics.rho)?;
        let transport = TransportConfig {
            domain_area: self.grid.area(),
            ..transport
        };
        transport.validate()?;
        Ok(Simulation {
            system,
            dynamics,
            transport,
            exec,
            laplace: report,
        })
    }
}

/// A built device plus the numerical settings experiments run with.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub system: LgdSystem,
    pub dynamics: DynamicsConfig,
    pub transport: TransportConfig,
    pub exec: Execution,
    pub laplace: Option<LaplaceReport>,
}

/// Waveform durations in units of t_rho.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Ramp duration per volt.
    pub ramp_per_volt: f64,
    /// Zero-bias hold between set and read.
    pub retention: f64,
    /// Hold at V_R.
    pub read_hold: f64,
    /// Spacing of recorded trace samples.
    pub sample_interval: f64,
    /// Current evaluations spread over the final half of the read hold.
    pub read_samples: usize,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            ramp_per_volt: 100.0,
            retention: 10.0,
            read_hold: 20.0,
            sample_interval: 1.0,
            read_samples: 5,
        }
    }
}

impl Timing {
    /// Waveform durations scaled by `factor`; sampling is left alone.
    pub fn dilated(&self, factor: f64) -> Self {
        Self {
            ramp_per_volt: self.ramp_per_volt * factor,
            retention: self.retention * factor,
            read_hold: self.read_hold * factor,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ramp_per_volt >= 100.0) {
            return Err(FtjError::InvalidWaveform(format!(
                "ramps of {} t_rho per volt are not quasi-static (need >= 100)",
                self.ramp_per_volt
            )));
        }
        if !(self.retention >= 0.0) || !(self.read_hold > 0.0) || !(self.sample_interval > 0.0) {
            return Err(FtjError::InvalidWaveform("holds and sampling must be positive".into()));
        }
        if self.read_samples == 0 {
            return Err(FtjError::InvalidWaveform("need at least one read sample".into()));
        }
        Ok(())
    }
}

/// Program/read sequence in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgramReadSpec {
    pub v_preset: f64,
    pub v_set: f64,
    pub v_r: f64,
    /// V/s
    pub ramp_rate: f64,
    /// s
    pub retention: f64,
    /// s
    pub read_hold: f64,
    /// s
    pub sample_interval: f64,
    pub read_samples: usize,
}

pub const DEFAULT_PRESET: f64 = -5.0;

impl ProgramReadSpec {
    pub fn new(v_set: f64, v_r: f64, t_rho: f64, timing: &Timing) -> Self {
        Self {
            v_preset: DEFAULT_PRESET,
            v_set,
            v_r,
            ramp_rate: 1.0 / (timing.ramp_per_volt * t_rho),
            retention: timing.retention * t_rho,
            read_hold: timing.read_hold * t_rho,
            sample_interval: timing.sample_interval * t_rho,
            read_samples: timing.read_samples,
        }
    }

    pub fn validate(&self, t_rho: f64) -> Result<()> {
        if !(self.ramp_rate > 0.0) || self.ramp_rate * 100.0 * t_rho > 1.0 + 1e-12 {
            return Err(FtjError::InvalidWaveform(format!(
                "ramp rate {:e} V/s exceeds the quasi-static limit 1/(100 t_rho) = {:e} V/s",
                self.ramp_rate,
                1.0 / (100.0 * t_rho)
            )));
        }
        if !(self.retention >= 0.0) || !(self.read_hold > 0.0) || !(self.sample_interval > 0.0) {
            return Err(FtjError::InvalidWaveform("holds and sampling must be positive".into()));
        }
        if self.read_samples == 0 {
            return Err(FtjError::InvalidWaveform("need at least one read sample".into()));
        }
        for v in [self.v_preset, self.v_set, self.v_r] {
            if !v.is_finite() {
                return Err(FtjError::InvalidWaveform("voltages must be finite".into()));
            }
        }
        Ok(())
    }

    /// Preset, return to zero, ramp to V_SET (markers `preset_peak`,
    /// `preset_end`, `set_peak`).
    pub fn set_prefix(&self) -> Result<Waveform> {
        Waveform::builder(0.0, 0.0)
            .ramp_to(self.v_preset, self.ramp_rate)
            .mark("preset_peak")
            .ramp_to(0.0, self.ramp_rate)
            .mark("preset_end")
            .ramp_to(self.v_set, self.ramp_rate)
            .mark("set_peak")
            .build()
    }

    /// From the set peak at `t0`: back to zero, retention hold, ramp to V_R,
    /// read hold, back to zero.
    pub fn read_tail(&self, t0: f64) -> Result<Waveform> {
        Waveform::builder(t0, self.v_set)
            .mark("set_peak")
            .ramp_to(0.0, self.ramp_rate)
            .hold(self.retention)
            .mark("retention_end")
            .ramp_to(self.v_r, self.ramp_rate)
            .mark("read_start")
            .hold(self.read_hold)
            .mark("read_end")
            .ramp_to(0.0, self.ramp_rate)
            .mark("end")
            .build()
    }
}

/// One sampled point of an experiment trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub v_t: f64,
    pub v_f_mean: f64,
    pub q: f64,
    pub p_mean: f64,
    pub f_up: f64,
    /// Device read current at this point, when evaluated.
    pub i_r: Option<f64>,
}

impl TracePoint {
    fn of(system: &LgdSystem, state: &SimState) -> Self {
        let vf = system.ferroelectric_voltages(&state.p, state.v_t);
        Self {
            t: state.t,
            v_t: state.v_t,
            v_f_mean: vf.iter().sum::<f64>() / vf.len() as f64,
            q: system.total_charge(&state.p, state.v_t),
            p_mean: state.mean_p(),
            f_up: f_up(&state.p),
            i_r: None,
        }
    }
}

pub fn write_trace_csv<W: Write>(trace: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "V_T_V", "V_F_mean_V", "Q_C_per_m2", "P_mean_C_per_m2", "f_UP", "I_R_A"])?;
    for p in trace {
        w.write_record(&[
            format!("{:e}", p.t),
            format!("{:e}", p.v_t),
            format!("{:e}", p.v_f_mean),
            format!("{:e}", p.q),
            format!("{:e}", p.p_mean),
            format!("{}", p.f_up),
            p.i_r.map(|i| format!("{i:e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Integrates along `wf` to `t_end`, stopping at every breakpoint, at every
/// multiple of `sample_dt` and at each time in `extra`; `on_sample` runs at
/// the sampling grid points, the extra stops and `t_end`.
fn drive<F>(
    integ: &mut Integrator<'_>,
    state: &mut SimState,
    wf: &Waveform,
    t_end: f64,
    sample_dt: f64,
    extra: &[f64],
    mut on_sample: F,
) -> Result<()>
where
    F: FnMut(&SimState) -> Result<()>,
{
    let t_start = state.t;
    let mut stops: Vec<(f64, bool)> = wf.breakpoints_in(t_start, t_end).map(|t| (t, false)).collect();
    let first = (t_start / sample_dt).floor() as i64 + 1;
    let last = (t_end / sample_dt).floor() as i64;
    stops.extend((first..=last).map(|k| (k as f64 * sample_dt, true)));
    stops.extend(extra.iter().filter(|&&t| t > t_start && t <= t_end).map(|&t| (t, true)));
    stops.push((t_end, true));
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tiny = 1e-9 * sample_dt;
    let mut i = 0;
    while i < stops.len() {
        let t = stops[i].0;
        let mut sample = stops[i].1;
        // merge stops closer than rounding
        while i + 1 < stops.len() && stops[i + 1].0 - t < tiny {
            i += 1;
            sample |= stops[i].1;
        }
        let target = if i + 1 == stops.len() { t_end } else { t };
        if target > state.t {
            integ.advance_to(state, wf, target, |_| Ok(()))?;
        }
        if sample {
            on_sample(state)?;
        }
        i += 1;
    }
    Ok(())
}

/// Outcome of one program/retention/read sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SetReadResult {
    pub summary: SetReadSummary,
    pub trace: Vec<TracePoint>,
    /// Polarization at the end of the read hold, C/m^2.
    pub read_state: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetReadSummary {
    pub v_set: f64,
    pub f_up_set: f64,
    pub f_up_retention: f64,
    pub f_up_read: f64,
    /// Device read current averaged over the final half of the read hold, A.
    pub i_r: f64,
    /// None when no domain is UP at read.
    pub v_d_up: Option<f64>,
}

/// State after preset and set ramp, with the trace recorded so far.
struct SetPeak {
    state: SimState,
    trace: Vec<TracePoint>,
}

fn run_tail(sim: &Simulation, spec: &ProgramReadSpec, peak: SetPeak) -> Result<SetReadResult> {
    let sys = &sim.system;
    let wf = spec.read_tail(peak.state.t)?;
    let mut integ = Integrator::new(sys, &sim.dynamics)?;
    let mut state = peak.state;
    let mut trace = peak.trace;
    let f_up_set = f_up(&state.p);

    let t_ret = wf.marker("retention_end").expect("marked");
    let t_read = wf.marker("read_start").expect("marked");
    let t_read_end = wf.marker("read_end").expect("marked");
    let n_s = spec.read_samples;
    let read_times: Vec<f64> = (0..n_s)
        .map(|k| {
            if n_s == 1 {
                t_read_end
            } else {
                let frac = 0.5 + 0.5 * k as f64 / (n_s - 1) as f64;
                t_read + frac * (t_read_end - t_read)
            }
        })
        .collect();

    let record = |trace: &mut Vec<TracePoint>, s: &SimState| trace.push(TracePoint::of(sys, s));
    drive(&mut integ, &mut state, &wf, t_ret, spec.sample_interval, &[], |s| {
        record(&mut trace, s);
        Ok(())
    })?;
    let f_up_retention = f_up(&state.p);

    let mut currents = Vec::with_capacity(n_s);
    drive(&mut integ, &mut state, &wf, t_read_end, spec.sample_interval, &read_times, |s| {
        let mut pt = TracePoint::of(sys, s);
        if read_times.iter().any(|&t| (t - s.t).abs() <= 1e-9 * spec.sample_interval) {
            let i = device_current(sys, &s.p, s.v_t, &sim.transport, sim.exec)?.total;
            pt.i_r = Some(i);
            currents.push(i);
        }
        trace.push(pt);
        Ok(())
    })?;
    if currents.len() != n_s {
        return Err(FtjError::InvalidWaveform(format!(
            "expected {n_s} read samples, evaluated {}",
            currents.len()
        )));
    }
    let f_up_read = f_up(&state.p);
    let v_d_up = match v_d_up(sys, &state.p, spec.v_r) {
        Ok(v) => Some(v),
        Err(FtjError::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    let i_r = currents.iter().sum::<f64>() / n_s as f64;
    let read_state = state.p.clone();

    drive(&mut integ, &mut state, &wf, wf.end(), spec.sample_interval, &[], |s| {
        record(&mut trace, s);
        Ok(())
    })?;

    Ok(SetReadResult {
        summary: SetReadSummary {
            v_set: spec.v_set,
            f_up_set,
            f_up_retention,
            f_up_read,
            i_r,
            v_d_up,
        },
        trace,
        read_state,
    })
}

/// Preset from P = 0, set ramp, retention and read.
pub fn run_set_read(sim: &Simulation, spec: &ProgramReadSpec) -> Result<SetReadResult> {
    let sys = &sim.system;
    spec.validate(sys.t_rho())?;
    let prefix = spec.set_prefix()?;
    let mut integ = Integrator::new(sys, &sim.dynamics)?;
    let mut state = SimState::zero(sys.n());
    let mut trace = vec![TracePoint::of(sys, &state)];
    let t_peak = prefix.marker("set_peak").expect("marked");
    drive(&mut integ, &mut state, &prefix, t_peak, spec.sample_interval, &[], |s| {
        trace.push(TracePoint::of(sys, s));
        Ok(())
    })?;
    run_tail(sim, spec, SetPeak { state, trace })
}

/// Results of a V_SET sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct VsetSweep {
    pub points: Vec<SetReadSummary>,
    /// Max over min read current across the sweep.
    pub r_i: f64,
    /// Full trace of each point, in sweep order.
    pub traces: Vec<Vec<TracePoint>>,
}

impl VsetSweep {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["V_SET", "f_UP_set", "f_UP_read", "I_R_A", "V_D_up_V"])?;
        for p in &self.points {
            w.write_record(&[
                format!("{}", p.v_set),
                format!("{}", p.f_up_set),
                format!("{}", p.f_up_read),
                format!("{:e}", p.i_r),
                p.v_d_up.map(|v| format!("{v}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Q(V_T) from the end of the preset onwards, one block per V_SET.
    pub fn write_minor_loops_csv<W: Write>(&self, t_preset_end: f64, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["V_SET", "t_s", "V_T_V", "Q_C_per_m2", "f_UP"])?;
        for (p, trace) in self.points.iter().zip(&self.traces) {
            for pt in trace.iter().filter(|pt| pt.t >= t_preset_end) {
                w.write_record(&[
                    format!("{}", p.v_set),
                    format!("{:e}", pt.t),
                    format!("{:e}", pt.v_t),
                    format!("{:e}", pt.q),
                    format!("{}", pt.f_up),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// max I_R / min I_R over the sweep.
pub fn current_ratio(currents: &[f64]) -> Result<f64> {
    let max = currents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = currents.iter().copied().fold(f64::INFINITY, f64::min);
    if currents.len() < 2 || !(min > 0.0) || !max.is_finite() {
        return Err(FtjError::UndefinedMetric(
            "R_I needs at least two positive currents".into(),
        ));
    }
    Ok(max / min)
}

/// Runs the program/read sequence for every V_SET (ascending, positive). The
/// preset and the set ramp are shared: one ramp to the largest V_SET is
/// snapshotted at each smaller peak and the read tails run independently.
pub fn sweep_vset(sim: &Simulation, v_sets: &[f64], base: &ProgramReadSpec) -> Result<VsetSweep> {
    if v_sets.len() < 2 {
        return Err(FtjError::InvalidParameter("a sweep needs at least two V_SET values".into()));
    }
    if v_sets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FtjError::InvalidParameter("V_SET values must be strictly increasing".into()));
    }
    if v_sets[0] <= 0.0 {
        return Err(FtjError::InvalidParameter("V_SET values must be positive".into()));
    }
    let sys = &sim.system;
    base.validate(sys.t_rho())?;
    let top = ProgramReadSpec { v_set: *v_sets.last().expect("non-empty"), ..*base };
    let prefix = top.set_prefix()?;
    let t_preset = prefix.marker("preset_end").expect("marked");
    let peak_times: Vec<f64> = v_sets.iter().map(|v| t_preset + v / base.ramp_rate).collect();

    let mut integ = Integrator::new(sys, &sim.dynamics)?;
    let mut state = SimState::zero(sys.n());
    let mut trace = vec![TracePoint::of(sys, &state)];
    let mut peaks = Vec::with_capacity(v_sets.len());
    let mut prev_t = 0.0;
    for &t_peak in &peak_times {
        let t_peak = t_peak.max(prev_t);
        drive(&mut integ, &mut state, &prefix, t_peak, base.sample_interval, &[], |s| {
            trace.push(TracePoint::of(sys, s));
            Ok(())
        })?;
        peaks.push(SetPeak { state: state.clone(), trace: trace.clone() });
        prev_t = t_peak;
    }

    let results = sim.exec.try_map(v_sets.len(), |k| {
        let spec = ProgramReadSpec { v_set: v_sets[k], ..*base };
        let peak = SetPeak {
            state: peaks[k].state.clone(),
            trace: peaks[k].trace.clone(),
        };
        run_tail(sim, &spec, peak)
    })?;
    let points: Vec<SetReadSummary> = results.iter().map(|r| r.summary).collect();
    let r_i = current_ratio(&points.iter().map(|p| p.i_r).collect::<Vec<_>>())?;
    Ok(VsetSweep {
        points,
        r_i,
        traces: results.into_iter().map(|r| r.trace).collect(),
    })
}

/// V_SET grid lo, lo + step, ..., hi (inclusive within rounding).
pub fn vset_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(FtjError::InvalidParameter("invalid V_SET grid".into()));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// One t_D point of a thickness sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TdPoint {
    pub t_d: f64,
    pub sweep: VsetSweep,
}

impl TdPoint {
    pub fn i_r_low(&self) -> f64 {
        self.sweep.points[0].i_r
    }
    pub fn i_r_high(&self) -> f64 {
        self.sweep.points[self.sweep.points.len() - 1].i_r
    }
    pub fn v_d_up_high(&self) -> Option<f64> {
        self.sweep.points[self.sweep.points.len() - 1].v_d_up
    }
}

pub fn write_td_csv<W: Write>(points: &[TdPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t_D_m",
        "V_SET_low",
        "V_SET_high",
        "I_R_low_A",
        "I_R_high_A",
        "R_I",
        "V_D_up_low_V",
        "V_D_up_high_V",
        "f_UP_read_low",
        "f_UP_read_high",
    ])?;
    for p in points {
        let lo = &p.sweep.points[0];
        let hi = &p.sweep.points[p.sweep.points.len() - 1];
        let opt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
        w.write_record(&[
            format!("{:e}", p.t_d),
            format!("{}", lo.v_set),
            format!("{}", hi.v_set),
            format!("{:e}", lo.i_r),
            format!("{:e}", hi.i_r),
            format!("{}", p.sweep.r_i),
            opt(lo.v_d_up),
            opt(hi.v_d_up),
            format!("{}", lo.f_up_read),
            format!("{}", hi.f_up_read),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds the device for each dielectric thickness and sweeps `v_sets`
/// (typically 2.5 V and 6.5 V).
#[allow(clippy::too_many_arguments)]
pub fn sweep_td(
    device: &DeviceSpec,
    t_ds: &[f64],
    v_sets: &[f64],
    v_r: f64,
    timing: &Timing,
    dynamics: DynamicsConfig,
    transport: TransportConfig,
    exec: Execution,
) -> Result<Vec<TdPoint>> {
    if t_ds.is_empty() || t_ds.iter().any(|&t| !(t > 0.0)) {
        return Err(FtjError::InvalidParameter("t_D values must be positive".into()));
    }
    t_ds.iter()
        .map(|&t_d| {
            let dev = device.with_stack(device.stack.with_dielectric_thickness(t_d));
            let sim = dev.build(dynamics, transport, exec)?;
            let spec = ProgramReadSpec::new(v_sets[0], v_r, sim.system.t_rho(), timing);
            let sweep = sweep_vset(&sim, v_sets, &spec)?;
            Ok(TdPoint { t_d, sweep })
        })
        .collect()
}

/// Recorded closed Q-V_F loop.
#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisResult {
    pub trace: Vec<TracePoint>,
    pub amplitude: f64,
    pub period: f64,
    /// Quasi-static check failures and similar notes.
    pub warnings: Vec<String>,
}

/// Zero crossings of the recorded loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopMetrics {
    /// Q at V_F = 0 on the descending branch (positive) and ascending branch.
    pub remnant_down: f64,
    pub remnant_up: f64,
    /// V_F at which mean P crosses zero on the ascending and descending branches.
    pub switching_up: f64,
    pub switching_down: f64,
}

impl HysteresisResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "V_T", "V_F_mean", "Q"])?;
        for p in &self.trace {
            w.write_record(&[
                format!("{:e}", p.t),
                format!("{:e}", p.v_t),
                format!("{:e}", p.v_f_mean),
                format!("{:e}", p.q),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Linear interpolation of the loop's zero crossings.
    pub fn metrics(&self) -> Result<LoopMetrics> {
        // the recorded cycle runs +A -> -A -> +A
        let turn = self
            .trace
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.v_t.total_cmp(&b.1.v_t))
            .map(|(i, _)| i)
            .ok_or_else(|| FtjError::UndefinedMetric("empty loop".into()))?;
        let (down, up) = self.trace.split_at(turn);
        let cross = |branch: &[TracePoint], x: fn(&TracePoint) -> f64, y: fn(&TracePoint) -> f64| {
            branch.windows(2).find_map(|w| {
                let (x0, x1) = (x(&w[0]), x(&w[1]));
                if (x0 <= 0.0 && x1 > 0.0) || (x0 >= 0.0 && x1 < 0.0) {
                    let f = x0 / (x0 - x1);
                    Some(y(&w[0]) + f * (y(&w[1]) - y(&w[0])))
                } else {
                    None
                }
            })
        };
        let missing = || FtjError::UndefinedMetric("loop does not cross zero".into());
        Ok(LoopMetrics {
            remnant_down: cross(down, |p| p.v_f_mean, |p| p.q).ok_or_else(missing)?,
            remnant_up: cross(up, |p| p.v_f_mean, |p| p.q).ok_or_else(missing)?,
            switching_down: cross(down, |p| p.p_mean, |p| p.v_f_mean).ok_or_else(missing)?,
            switching_up: cross(up, |p| p.p_mean, |p| p.v_f_mean).ok_or_else(missing)?,
        })
    }
}

/// Triangular sweep 0 -> +A, one preconditioning cycle +A -> -A -> +A, then
/// the recorded cycle. `period` is the duration of one full cycle.
pub fn run_hysteresis(sim: &Simulation, amplitude: f64, period: f64, samples: usize) -> Result<HysteresisResult> {
    if !(amplitude > 0.0) || !(period > 0.0) || samples < 8 {
        return Err(FtjError::InvalidParameter(
            "hysteresis needs positive amplitude and period and at least 8 samples".into(),
        ));
    }
    let sys = &sim.system;
    let t_rho = sys.t_rho();
    let mut warnings = Vec::new();
    let needed = 100.0 * t_rho * 4.0 * amplitude;
    if period < needed {
        let msg = format!(
            "period {period:e} s is shorter than the quasi-static minimum {needed:e} s (100 t_rho per volt)"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let rate = 4.0 * amplitude / period;
    let wf = Waveform::builder(0.0, 0.0)
        .ramp_to(amplitude, rate)
        .ramp_to(-amplitude, rate)
        .ramp_to(amplitude, rate)
        .mark("record_start")
        .ramp_to(-amplitude, rate)
        .ramp_to(amplitude, rate)
        .build()?;
    let t0 = wf.marker("record_start").expect("marked");
    let mut integ = Integrator::new(sys, &sim.dynamics)?;
    let mut state = SimState::zero(sys.n());
    integ.advance_to(&mut state, &wf, t0, |_| Ok(()))?;
    let mut trace = vec![TracePoint::of(sys, &state)];
    for k in 1..=samples {
        let t = t0 + period * k as f64 / samples as f64;
        drive(&mut integ, &mut state, &wf, t, period, &[], |_| Ok(()))?;
        trace.push(TracePoint::of(sys, &state));
    }
    Ok(HysteresisResult { trace, amplitude, period, warnings })
}
