//! WKB transmission through the linear MFIM band profile and the
//! Tsu-Esaki/Landauer read current.
//!
//! Energies are in eV with the MD electrode Fermi level at zero.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constants::{thermal_energy_ev, HBAR, M0, Q_E};
use crate::dynamics::LgdSystem;
use crate::exec::Execution;
use crate::stack::StackSpec;
use crate::{FtjError, Result};

/// Slopes below this (eV/m) use the rectangular-barrier formula.
const FLAT_SLOPE: f64 = 1e-3 / 1e-9;
const WINDOW_STEP: f64 = 0.5;
const MAX_WINDOW_STEPS: usize = 40;
const MAX_SUBINTERVALS: usize = 4000;

/// Linear conduction-band segment of one insulating layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub z_start: f64,
    pub z_end: f64,
    /// E_C at `z_start`, eV.
    pub e_start: f64,
    /// E_C at `z_end`, eV.
    pub e_end: f64,
    /// Tunnelling mass, units of m0.
    pub mass: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.z_end - self.z_start
    }

    /// Slope in eV/m.
    pub fn slope(&self) -> f64 {
        (self.e_end - self.e_start) / self.length()
    }

    pub fn energy_at(&self, z: f64) -> f64 {
        self.e_start + (z - self.z_start) * self.slope()
    }

    pub fn top(&self) -> f64 {
        self.e_start.max(self.e_end)
    }

    pub fn bottom(&self) -> f64 {
        self.e_start.min(self.e_end)
    }

    /// Integral of kappa over the part of the segment where E_C > e, 1/m
    /// (dimensionless exponent contribution before the factor 2).
    pub fn kappa_integral(&self, e: f64) -> f64 {
        let hi = self.top() - e;
        if hi <= 0.0 {
            return 0.0;
        }
        let c = (2.0 * self.mass * M0 * Q_E).sqrt() / HBAR;
        let s = self.slope().abs();
        let len = self.length();
        if s < FLAT_SLOPE {
            let mean = 0.5 * (self.e_start + self.e_end) - e;
            return c * len * mean.max(0.0).sqrt();
        }
        let lo = self.bottom() - e;
        if lo <= 0.0 {
            return c * (2.0 / 3.0) * hi * hi.sqrt() / s;
        }
        // hi^{3/2} - lo^{3/2} without cancellation, with hi - lo = s len
        let (a, b) = (hi.sqrt(), lo.sqrt());
        c * (2.0 / 3.0) * len * (hi + a * b + lo) / (a + b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandProfile {
    /// Dielectric then ferroelectric; the dielectric is absent for bare stacks.
    pub segments: Vec<Segment>,
    pub e_f_md: f64,
    pub e_f_mf: f64,
    /// Lattice temperature, K.
    pub temperature: f64,
}

/// A maximal interval where E_C(z) exceeds the carrier energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenInterval {
    pub z_in: f64,
    pub z_out: f64,
    /// Indices of the segments the interval crosses.
    pub segments: Vec<usize>,
}

/// Builds the band profile for a read bias `v_r` on the MF electrode with
/// layer drops `v_d` (dielectric) and `v_f` (ferroelectric).
pub fn band_profile(stack: &StackSpec, v_d: f64, v_f: f64, v_r: f64) -> Result<BandProfile> {
    stack.validate()?;
    let v_bi = -stack.builtin_voltage();
    let scale = 1.0 + v_r.abs() + v_d.abs() + v_f.abs();
    if !(v_d + v_f - v_r - v_bi).abs().le(&(1e-9 * scale)) {
        return Err(FtjError::InvalidParameter(format!(
            "inconsistent partition: V_D + V_F = {} but V_R + V_bi = {}",
            v_d + v_f,
            v_r + v_bi
        )));
    }
    if stack.is_bare() && v_d != 0.0 {
        return Err(FtjError::InvalidParameter(
            "bare stack cannot carry a dielectric drop".into(),
        ));
    }
    let phi = stack.electrode_md.workfunction;
    let chi_d = stack.dielectric.electron_affinity;
    let chi_f = stack.ferroelectric.electron_affinity;
    let mut segments = Vec::with_capacity(2);
    if !stack.is_bare() {
        segments.push(Segment {
            z_start: 0.0,
            z_end: stack.t_d,
            e_start: phi - chi_d,
            e_end: phi - chi_d - v_d,
            mass: stack.dielectric.tunnelling_mass,
        });
    }
    let e_f0 = phi - chi_f - v_d;
    segments.push(Segment {
        z_start: stack.t_d,
        z_end: stack.t_d + stack.t_f,
        e_start: e_f0,
        e_end: e_f0 - v_f,
        mass: stack.ferroelectric.tunnelling_mass,
    });
    Ok(BandProfile {
        segments,
        e_f_md: 0.0,
        e_f_mf: -v_r,
        temperature: stack.temperature,
    })
}

impl BandProfile {
    pub fn thickness(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.z_end) - self.segments.first().map_or(0.0, |s| s.z_start)
    }

    pub fn max_barrier(&self) -> f64 {
        self.segments.iter().map(Segment::top).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Shifts every energy, Fermi levels included, by `de` eV.
    pub fn shifted(&self, de: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.segments {
            s.e_start += de;
            s.e_end += de;
        }
        out.e_f_md += de;
        out.e_f_mf += de;
        out
    }
}

pub fn forbidden_segments(profile: &BandProfile, e: f64) -> Vec<ForbiddenInterval> {
    let mut out: Vec<ForbiddenInterval> = Vec::new();
    let mut open: Option<ForbiddenInterval> = None;
    for (idx, s) in profile.segments.iter().enumerate() {
        let above_start = s.e_start > e;
        let above_end = s.e_end > e;
        let crossing = if above_start != above_end {
            Some(s.z_start + (e - s.e_start) / s.slope())
        } else {
            None
        };
        match (above_start, above_end) {
            (true, true) => {
                let iv = open.get_or_insert_with(|| ForbiddenInterval {
                    z_in: s.z_start,
                    z_out: s.z_end,
                    segments: vec![],
                });
                iv.z_out = s.z_end;
                iv.segments.push(idx);
            }
            (true, false) => {
                let mut iv = open.take().unwrap_or(ForbiddenInterval {
                    z_in: s.z_start,
                    z_out: s.z_start,
                    segments: vec![],
                });
                iv.z_out = crossing.expect("sign change");
                iv.segments.push(idx);
                out.push(iv);
            }
            (false, true) => {
                if let Some(iv) = open.take() {
                    out.push(iv);
                }
                open = Some(ForbiddenInterval {
                    z_in: crossing.expect("sign change"),
                    z_out: s.z_end,
                    segments: vec![idx],
                });
            }
            (false, false) => {
                if let Some(iv) = open.take() {
                    out.push(iv);
                }
            }
        }
    }
    if let Some(iv) = open {
        out.push(iv);
    }
    out
}

/// -ln T = 2 sum over forbidden regions of the kappa integral.
pub fn wkb_exponent(profile: &BandProfile, e: f64) -> f64 {
    2.0 * profile.segments.iter().map(|s| s.kappa_integral(e)).sum::<f64>()
}

pub fn wkb_transmission(profile: &BandProfile, e: f64) -> f64 {
    (-wkb_exponent(profile, e)).exp()
}

/// ln(1 + exp((e_f - e)/kT)).
pub fn supply_function(e: f64, e_f: f64, temperature: f64) -> f64 {
    softplus((e_f - e) / thermal_energy_ev(temperature))
}

fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportConfig {
    /// Transverse mass, units of m0.
    pub m_parallel: f64,
    /// Window below the lower Fermi level, eV.
    pub window_below: f64,
    /// Window above the higher of Fermi level and lowest barrier top, in units of kT.
    pub window_above_kt: f64,
    /// Relative quadrature tolerance.
    pub tolerance: f64,
    /// Domain footprint d^2, m^2.
    pub domain_area: f64,
    /// Physical device area, m^2.
    pub device_area: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            m_parallel: 1.0,
            window_below: 3.0,
            window_above_kt: 20.0,
            tolerance: 1e-6,
            domain_area: 25e-18,
            device_area: 3.14e-8,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.m_parallel) {
            return Err(FtjError::InvalidParameter("m_parallel must be positive".into()));
        }
        if !ok(self.window_below) || !ok(self.window_above_kt) {
            return Err(FtjError::InvalidParameter("energy windows must be positive".into()));
        }
        if !ok(self.tolerance) || self.tolerance >= 1.0 {
            return Err(FtjError::InvalidParameter("tolerance must lie in (0, 1)".into()));
        }
        if !ok(self.domain_area) || !ok(self.device_area) {
            return Err(FtjError::InvalidParameter("areas must be positive".into()));
        }
        Ok(())
    }

    /// A d K_B T m_par q / (2 pi^2 hbar^3) with energies measured in eV, A per eV.
    fn prefactor(&self, temperature: f64) -> f64 {
        let kt = thermal_energy_ev(temperature) * Q_E;
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        self.domain_area * kt * self.m_parallel * M0 * Q_E * Q_E
            / (2.0 * pi2 * HBAR * HBAR * HBAR)
    }
}

/// T(E) [ln(1 + e^eta_MD) - ln(1 + e^eta_MF)].
pub fn current_integrand(profile: &BandProfile, e: f64) -> f64 {
    let s = supply_function(e, profile.e_f_md, profile.temperature)
        - supply_function(e, profile.e_f_mf, profile.temperature);
    if s == 0.0 {
        return 0.0;
    }
    s * wkb_transmission(profile, e)
}

// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Kronrod over the sorted `points`, refined until the
/// summed error estimate is below `rel_tol |I|` (or `abs_floor`).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, points: &[f64], rel_tol: f64, abs_floor: f64) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let (mut total, mut error) = (0.0, 0.0);
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, err) = gauss_kronrod(f, w[0], w[1]);
            total += value;
            error += err;
            heap.push(Piece { a: w[0], b: w[1], value, error: err });
        }
    }
    let mut pieces = heap.len();
    while error > (rel_tol * total.abs()).max(abs_floor) {
        if pieces >= MAX_SUBINTERVALS {
            return Err(FtjError::QuadratureNotConverged {
                error: error / total.abs().max(f64::MIN_POSITIVE),
                tolerance: rel_tol,
            });
        }
        let worst = heap.pop().expect("non-empty while error is positive");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gauss_kronrod(f, worst.a, mid);
        let (v2, e2) = gauss_kronrod(f, mid, worst.b);
        total += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        pieces += 1;
    }
    // re-sum to shed accumulated update rounding
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Energy interval [lower, upper] used by [`domain_current`] before any extension.
pub fn energy_window(profile: &BandProfile, cfg: &TransportConfig) -> (f64, f64) {
    let f_lo = profile.e_f_md.min(profile.e_f_mf);
    let f_hi = profile.e_f_md.max(profile.e_f_mf);
    let lowest_top = profile
        .segments
        .iter()
        .map(Segment::top)
        .fold(f64::INFINITY, f64::min);
    let kt = thermal_energy_ev(profile.temperature);
    (f_lo - cfg.window_below, f_hi.max(lowest_top) + cfg.window_above_kt * kt)
}

fn breakpoints(profile: &BandProfile, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![lo, hi, profile.e_f_md, profile.e_f_mf];
    for s in &profile.segments {
        pts.push(s.e_start);
        pts.push(s.e_end);
    }
    pts.retain(|&e| e >= lo && e <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Read current through one domain, A; positive when electrons flow from the
/// MD to the MF electrode (V_R > 0).
pub fn domain_current(profile: &BandProfile, cfg: &TransportConfig) -> Result<f64> {
    cfg.validate()?;
    if profile.temperature <= 0.0 {
        return Err(FtjError::InvalidParameter("temperature must be positive".into()));
    }
    if profile.e_f_md == profile.e_f_mf {
        return Ok(0.0);
    }
    let f = |e: f64| current_integrand(profile, e);
    let (mut lo, mut hi) = energy_window(profile, cfg);
    let mut core = integrate(&f, &breakpoints(profile, lo, hi), cfg.tolerance, 0.0)?;
    for _ in 0..MAX_WINDOW_STEPS {
        let floor = 1e-3 * cfg.tolerance * core.abs();
        let below = integrate(&f, &breakpoints(profile, lo - WINDOW_STEP, lo), cfg.tolerance, floor)?;
        let above = integrate(&f, &breakpoints(profile, hi, hi + WINDOW_STEP), cfg.tolerance, floor)?;
        let grew_below = below.abs() > cfg.tolerance * core.abs();
        let grew_above = above.abs() > cfg.tolerance * core.abs();
        if !grew_below && !grew_above {
            return Ok(cfg.prefactor(profile.temperature) * (core + below + above));
        }
        if grew_below {
            lo -= WINDOW_STEP;
            core += below;
        }
        if grew_above {
            hi += WINDOW_STEP;
            core += above;
        }
    }
    let tail = integrate(&f, &breakpoints(profile, hi, hi + WINDOW_STEP), cfg.tolerance, 0.0)?;
    Err(FtjError::WindowNotConverged {
        tail: (tail / core).abs(),
        tolerance: cfg.tolerance,
    })
}

/// One domain's read-state record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainCurrent {
    pub index: usize,
    pub p: f64,
    pub v_d: f64,
    pub v_f: f64,
    pub current: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceCurrent {
    /// Device current scaled to the physical area, A.
    pub total: f64,
    pub domains: Vec<DomainCurrent>,
}

impl DeviceCurrent {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "P_C_per_m2", "V_D_V", "V_F_V", "I_R_A"])?;
        for d in &self.domains {
            w.write_record(&[
                d.index.to_string(),
                format!("{:e}", d.p),
                format!("{:e}", d.v_d),
                format!("{:e}", d.v_f),
                format!("{:e}", d.current),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// I_R = A / (n_D d^2) sum_i I_R,i with each domain read through its own
/// voltage partition under read bias `v_r`.
pub fn device_current(
    system: &LgdSystem,
    p: &[f64],
    v_r: f64,
    cfg: &TransportConfig,
    exec: Execution,
) -> Result<DeviceCurrent> {
    cfg.validate()?;
    let n = system.n();
    if p.len() != n {
        return Err(FtjError::DimensionMismatch { expected: n, got: p.len() });
    }
    let stack = system.stack();
    let v_d = system.dielectric_voltages(p, v_r);
    let v_f = system.ferroelectric_voltages(p, v_r);
    let domains = exec.try_map(n, |i| {
        let profile = band_profile(stack, v_d[i], v_f[i], v_r)?;
        Ok::<_, FtjError>(DomainCurrent {
            index: i,
            p: p[i],
            v_d: v_d[i],
            v_f: v_f[i],
            current: domain_current(&profile, cfg)?,
        })
    })?;
    let sum: f64 = domains.iter().map(|d| d.current).sum();
    Ok(DeviceCurrent {
        total: cfg.device_area / (n as f64 * cfg.domain_area) * sum,
        domains,
    })
}
