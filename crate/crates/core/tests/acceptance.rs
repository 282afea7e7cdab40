//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p ftj-core --test acceptance`. Failures are reported
//! but only abort the process when `FTJ_ACCEPTANCE_STRICT` is set.

use std::f64::consts::PI;
use std::time::Instant;

use ftj_core::constants::{thermal_energy_ev, HBAR, M0, Q_E};
use ftj_core::domains::{Anisotropy, GridSpec, VariationSpec};
use ftj_core::dynamics::{single_domain_equilibria, DynamicsConfig};
use ftj_core::electrostatics::{
    build_coupling_closure, build_coupling_laplace, dielectric_voltages, ClosureKernel, CouplingMatrix,
    LaplaceMesh, VoltagePartition,
};
use ftj_core::exec::Execution;
use ftj_core::protocol::{
    run_hysteresis, sweep_td, sweep_vset, vset_grid, DeviceSpec, ProgramReadSpec, Timing, VsetSweep,
};
use ftj_core::stack::{presets, StackSpec};
use ftj_core::tunneling::{
    band_profile, current_integrand, domain_current, energy_window, wkb_exponent, wkb_transmission,
    BandProfile, Segment, TransportConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<(bool, String), String>;

struct Report {
    passed: usize,
    failed: usize,
}

impl Report {
    fn record(&mut self, name: &str, outcome: Outcome, started: Instant) {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok((true, detail)) => {
                self.passed += 1;
                println!("PASS  {name}: {detail} [{secs:.1}s]");
            }
            Ok((false, detail)) => {
                self.failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.1}s]");
            }
            Err(e) => {
                self.failed += 1;
                println!("FAIL  {name}: error: {e} [{secs:.1}s]");
            }
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn single_domain_oracle() -> Outcome {
    let eq = single_domain_equilibria(Anisotropy::HZO).map_err(|e| e.to_string())?;
    let t_f = 12e-9;
    let v_c = eq.coercive_field * t_f;
    // frozen oracle values for the nominal constants
    if rel(eq.remnant, 0.20410) > 1e-4 || rel(v_c, 1.3301) > 1e-4 {
        return Ok((false, format!("oracle drifted: P_r {} V_c {}", eq.remnant, v_c)));
    }
    let device = DeviceSpec {
        stack: StackSpec::baseline().with_dielectric_thickness(0.0),
        grid: GridSpec::square(1),
        variation: VariationSpec::none(),
        ..DeviceSpec::baseline()
    };
    let sim = device
        .build(DynamicsConfig::default(), TransportConfig::default(), Execution::Sequential)
        .map_err(|e| e.to_string())?;
    let amplitude = 3.0;
    let period = 1000.0 * sim.system.t_rho() * 4.0 * amplitude;
    let loop_ = run_hysteresis(&sim, amplitude, period, 4000).map_err(|e| e.to_string())?;
    let m = loop_.metrics().map_err(|e| e.to_string())?;
    let p_r = 0.5 * (m.remnant_down - m.remnant_up);
    let v_sw = 0.5 * (m.switching_up - m.switching_down);
    let (e1, e2) = (rel(p_r, eq.remnant), rel(v_sw, v_c));
    Ok((
        e1 < 0.01 && e2 < 0.05,
        format!(
            "P_r {p_r:.5} vs {:.5} C/m^2 ({:.3}% < 1%), V_sw {v_sw:.4} vs {v_c:.4} V ({:.2}% < 5%)",
            eq.remnant,
            100.0 * e1,
            100.0 * e2
        ),
    ))
}

fn baseline_laplace() -> Result<(CouplingMatrix, f64), String> {
    let stack = StackSpec::baseline();
    let c_0 = stack.derive_capacitances().map_err(|e| e.to_string())?.c_0;
    let (m, _) = build_coupling_laplace(&GridSpec::default(), &stack, &LaplaceMesh::default(), Execution::default())
        .map_err(|e| e.to_string())?;
    Ok((m, c_0))
}

fn sum_rules(laplace: &CouplingMatrix, c_0: f64) -> Outcome {
    let closure = build_coupling_closure(&GridSpec::default(), c_0, &ClosureKernel::default()).map_err(|e| e.to_string())?;
    let rl = laplace.sum_rule_residual(c_0);
    let rc = closure.sum_rule_residual(c_0);
    Ok((
        rl < 1e-3 && rc < 1e-14,
        format!("Laplace residual {rl:.2e} (< 1e-3), closure residual {rc:.2e} (< 1e-14)"),
    ))
}

fn one_d_limit(laplace: &CouplingMatrix, c_0: f64) -> Outcome {
    let stack = StackSpec::baseline();
    let caps = stack.derive_capacitances().map_err(|e| e.to_string())?;
    let part = VoltagePartition::from_stack(&stack).map_err(|e| e.to_string())?;
    let closure = build_coupling_closure(&GridSpec::default(), c_0, &ClosureKernel::default()).map_err(|e| e.to_string())?;
    let (p, v_t) = (0.15, 1.2);
    let exact = p / caps.c_0 + caps.c_f / caps.c_0 * v_t;
    let worst = |m: &CouplingMatrix| -> Result<f64, String> {
        let v = dielectric_voltages(&vec![p; m.n()], v_t, m, &part).map_err(|e| e.to_string())?;
        Ok(v.iter().map(|&x| rel(x, exact)).fold(0.0, f64::max))
    };
    let (ec, el) = (worst(&closure)?, worst(laplace)?);
    Ok((
        ec < 1e-12 && el < 1e-3,
        format!("series value {exact:.6} V; closure dev {ec:.2e} (< 1e-12), Laplace dev {el:.2e} (< 1e-3)"),
    ))
}

/// Tanh-sinh quadrature on [a, b]; robust to square-root endpoint behaviour.
fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let h = 1.0 / 128.0;
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    let kmax = (4.0 / h) as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / (u.cosh() * u.cosh());
        let x = c + r * u.tanh();
        if x > a && x < b {
            sum += w * f(x);
        }
    }
    sum * h * r
}

/// -ln T by direct quadrature of 2 kappa(z) over each segment.
fn numeric_exponent(profile: &BandProfile, e: f64) -> f64 {
    let mut total = 0.0;
    for s in &profile.segments {
        let c = (2.0 * s.mass * M0 * Q_E).sqrt() / HBAR;
        let ec = |z: f64| s.e_start + (s.e_end - s.e_start) * (z - s.z_start) / (s.z_end - s.z_start);
        let (mut a, mut b) = (s.z_start, s.z_end);
        if s.e_start <= e && s.e_end <= e {
            continue;
        }
        if s.e_start != s.e_end {
            let zt = s.z_start + (e - s.e_start) * (s.z_end - s.z_start) / (s.e_end - s.e_start);
            if zt > a && zt < b {
                if s.e_start > e {
                    b = zt;
                } else {
                    a = zt;
                }
            }
        }
        total += 2.0 * c * tanh_sinh(|z| (ec(z) - e).max(0.0).sqrt(), a, b);
    }
    total
}

fn wkb_oracle() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut forbidden = 0;
    for _ in 0..100 {
        let t_d = rng.random_range(0.5e-9..3e-9);
        let t_f = rng.random_range(5e-9..15e-9);
        let e0 = rng.random_range(1.0..4.0);
        let e1 = rng.random_range(-1.0..4.0);
        let e2 = e1 + rng.random_range(-1.0..1.0);
        let e3 = rng.random_range(-1.5..3.0);
        let profile = BandProfile {
            segments: vec![
                Segment { z_start: 0.0, z_end: t_d, e_start: e0, e_end: e1, mass: rng.random_range(0.2..0.6) },
                Segment { z_start: t_d, z_end: t_d + t_f, e_start: e2, e_end: e3, mass: rng.random_range(0.2..0.6) },
            ],
            e_f_md: 0.0,
            e_f_mf: -1.0,
            temperature: 300.0,
        };
        let e = rng.random_range(-1.0..2.5);
        let closed = wkb_exponent(&profile, e);
        let numeric = numeric_exponent(&profile, e);
        if closed > 0.0 {
            forbidden += 1;
            worst = worst.max(rel(closed, numeric));
        } else if numeric != 0.0 {
            return Ok((false, format!("closed form sees no barrier at E={e} but quadrature gives {numeric}")));
        }
    }
    // rectangular barrier, exp(-2 kappa L) written out from constants
    let kappa = (2.0 * 0.3 * M0 * Q_E * 3.15).sqrt() / HBAR;
    let expected = (-2.0 * kappa * 1e-9).exp();
    let rect = BandProfile {
        segments: vec![Segment { z_start: 0.0, z_end: 1e-9, e_start: 3.15, e_end: 3.15, mass: 0.3 }],
        e_f_md: 0.0,
        e_f_mf: 0.0,
        temperature: 300.0,
    };
    let t = wkb_transmission(&rect, 0.0);
    let er = rel(t, expected);
    Ok((
        worst < 1e-6 && er < 1e-6 && (expected - 4.7e-5).abs() < 0.05e-5,
        format!(
            "max |d ln T|/ln T {worst:.2e} over {forbidden} barrier profiles (< 1e-6); rectangular T {t:.4e} (kappa {kappa:.4e} 1/m), dev {er:.1e} (< 1e-6)"
        ),
    ))
}

fn landauer_sanity() -> Outcome {
    let stack = StackSpec::baseline();
    let cfg = TransportConfig::default();
    let zero = domain_current(&band_profile(&stack, 0.4, -0.4, 0.0).map_err(|e| e.to_string())?, &cfg)
        .map_err(|e| e.to_string())?;
    let profile = band_profile(&stack, 2.6, -0.6, 2.0).map_err(|e| e.to_string())?;
    let i = domain_current(&profile, &cfg).map_err(|e| e.to_string())?;

    let (lo, _) = energy_window(&profile, &cfg);
    let (a, b) = (lo - 0.5, profile.max_barrier() + 0.5);
    let n = 100_000;
    let h = (b - a) / n as f64;
    let mut sum = 0.5 * (current_integrand(&profile, a) + current_integrand(&profile, b));
    for k in 1..n {
        sum += current_integrand(&profile, a + k as f64 * h);
    }
    let kt = thermal_energy_ev(300.0) * Q_E;
    let pref = cfg.domain_area * kt * M0 * Q_E * Q_E / (2.0 * PI * PI * HBAR.powi(3));
    let trap = pref * sum * h;
    let e_trap = rel(i, trap);

    let wider = TransportConfig {
        window_below: cfg.window_below + 0.5,
        window_above_kt: cfg.window_above_kt + 0.5 / thermal_energy_ev(300.0),
        ..cfg
    };
    let i_wide = domain_current(&profile, &wider).map_err(|e| e.to_string())?;
    let e_win = rel(i_wide, i);
    Ok((
        zero == 0.0 && e_trap < 1e-4 && e_win < cfg.tolerance,
        format!(
            "I(V_R=0) = {zero}; I = {i:.6e} A vs trapezoid {trap:.6e} A ({e_trap:.1e} < 1e-4); +0.5 eV windows change {e_win:.1e} (< {:.0e})",
            cfg.tolerance
        ),
    ))
}

fn run_sweep(device: &DeviceSpec, lo: f64, v_r: f64, timing: &Timing) -> Result<VsetSweep, String> {
    let sim = device
        .build(DynamicsConfig::default(), TransportConfig::default(), Execution::default())
        .map_err(|e| e.to_string())?;
    let grid = vset_grid(lo, 6.5, 0.25).map_err(|e| e.to_string())?;
    let spec = ProgramReadSpec::new(grid[0], v_r, sim.system.t_rho(), timing);
    sweep_vset(&sim, &grid, &spec).map_err(|e| e.to_string())
}

fn program_read_behaviour(base: &VsetSweep) -> Outcome {
    let sets: Vec<f64> = base.points.iter().map(|p| p.f_up_set).collect();
    let monotone = sets.windows(2).all(|w| w[1] >= w[0]);
    let inner = &base.points[1..base.points.len() - 1];
    let back: Vec<String> = inner
        .iter()
        .filter(|p| p.f_up_read < p.f_up_set)
        .map(|p| format!("{:.2}", p.v_set))
        .collect();
    Ok((
        monotone && !back.is_empty(),
        format!(
            "f_UP(set) non-decreasing: {monotone} ({:.3} .. {:.3}); f_UP(read) < f_UP(set) at V_SET = [{}]",
            sets[0],
            sets[sets.len() - 1],
            back.join(", ")
        ),
    ))
}

fn read_magnitude(base: &VsetSweep) -> Outcome {
    let p = base
        .points
        .iter()
        .find(|p| (p.v_set - 2.5).abs() < 1e-9)
        .ok_or("V_SET = 2.5 V missing")?;
    let ok_i = p.i_r >= 10e-12 && p.i_r <= 1e-9;
    let ok_r = (5.0..=20.0).contains(&base.r_i);
    Ok((
        ok_i && ok_r,
        format!(
            "I_R(2.5 V) = {:.3e} A (in [1e-11, 1e-9]); R_I = {:.2} (in [5, 20]) over 2.5-6.5 V",
            p.i_r, base.r_i
        ),
    ))
}

fn thickness_trends() -> Outcome {
    let t_ds = [2.5e-9, 2e-9, 1.5e-9, 1e-9];
    let pts = sweep_td(
        &DeviceSpec::baseline(),
        &t_ds,
        &[2.5, 6.5],
        2.0,
        &Timing::default(),
        DynamicsConfig::default(),
        TransportConfig::default(),
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    let inc = |f: &dyn Fn(&ftj_core::protocol::TdPoint) -> f64| pts.windows(2).all(|w| f(&w[1]) > f(&w[0]));
    let dec = |f: &dyn Fn(&ftj_core::protocol::TdPoint) -> f64| pts.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let i_ok = inc(&|p| p.i_r_low()) && inc(&|p| p.i_r_high());
    let r_ok = dec(&|p| p.sweep.r_i);
    let v_ok = dec(&|p| p.v_d_up_high().unwrap_or(f64::NAN));
    let table: Vec<String> = pts
        .iter()
        .map(|p| {
            format!(
                "t_D {:.1} nm: I {:.2e}/{:.2e} A, R_I {:.2}, V_D,up {:.3} V",
                p.t_d * 1e9,
                p.i_r_low(),
                p.i_r_high(),
                p.sweep.r_i,
                p.v_d_up_high().unwrap_or(f64::NAN)
            )
        })
        .collect();
    Ok((
        i_ok && r_ok && v_ok,
        format!(
            "I_R rises as t_D thins: {i_ok}; R_I falls: {r_ok}; V_D,up(6.5 V) falls: {v_ok} | {}",
            table.join("; ")
        ),
    ))
}

fn variant_trends(base: &VsetSweep) -> Outcome {
    let timing = Timing::default();
    let sio2 = presets::sio2();
    let tin = DeviceSpec::baseline().with_stack(StackSpec::baseline().with_dielectric(sio2.clone(), 1e-9));
    let al_stack = StackSpec::baseline().with_dielectric(sio2, 1e-9).with_electrodes(presets::al());
    let al = DeviceSpec::baseline().with_stack(al_stack.clone());
    let s_tin = run_sweep(&tin, 2.5, 2.0, &timing)?;
    let s_al = run_sweep(&al, 2.0, 1.5, &timing)?;
    let i_max = |s: &VsetSweep| s.points.iter().map(|p| p.i_r).fold(0.0, f64::max);
    let tin_ok = s_tin.points.iter().zip(&base.points).all(|(a, b)| a.i_r > b.i_r) && rel(s_tin.r_i, base.r_i) <= 0.3;
    let al_up = s_al.points.iter().skip(2).zip(&base.points).all(|(a, b)| a.i_r > b.i_r);
    let threshold = al_stack.barrier_heights().md_ferroelectric;
    let v_d_up = s_al.points.last().and_then(|p| p.v_d_up).unwrap_or(f64::NAN);
    let al_ok = al_up && s_al.r_i > base.r_i && v_d_up > threshold;
    Ok((
        tin_ok && al_ok,
        format!(
            "TiN/SiO2: I_R max {:.2e} vs {:.2e} A, R_I {:.2} vs {:.2} (within 30%: {}); Al/SiO2 at 1.5 V: I_R max {:.2e} A, R_I {:.2}, qV_D,up {:.3} eV vs Phi_MD - chi_F = {:.2} eV",
            i_max(&s_tin),
            i_max(base),
            s_tin.r_i,
            base.r_i,
            rel(s_tin.r_i, base.r_i) <= 0.3,
            i_max(&s_al),
            s_al.r_i,
            v_d_up,
            threshold
        ),
    ))
}

fn rate_independence(base: &VsetSweep) -> Outcome {
    let slow = run_sweep(&DeviceSpec::baseline(), 2.5, 2.0, &Timing::default().dilated(2.0))?;
    let mut worst: (f64, String) = (rel(slow.r_i, base.r_i), "R_I".into());
    let mut consider = |d: f64, what: String| {
        if d > worst.0 {
            worst = (d, what);
        }
    };
    for (a, b) in slow.points.iter().zip(&base.points) {
        consider(rel(a.i_r, b.i_r), format!("I_R at {:.2} V", b.v_set));
        consider(rel(a.f_up_set, b.f_up_set), format!("f_UP(set) at {:.2} V", b.v_set));
        consider(rel(a.f_up_read, b.f_up_read), format!("f_UP(read) at {:.2} V", b.v_set));
        if let (Some(x), Some(y)) = (a.v_d_up, b.v_d_up) {
            consider(rel(x, y), format!("V_D,up at {:.2} V", b.v_set));
        }
    }
    let n = 400.0;
    let max_count = slow
        .points
        .iter()
        .zip(&base.points)
        .map(|(a, b)| ((a.f_up_read - b.f_up_read).abs() * n).round() as i64)
        .max()
        .unwrap_or(0);
    Ok((
        worst.0 < 0.03,
        format!(
            "largest change under 2x dilation {:.2}% ({}), R_I {:.2} -> {:.2}, max f_UP(read) change {} domains",
            100.0 * worst.0,
            worst.1,
            base.r_i,
            slow.r_i,
            max_count
        ),
    ))
}

fn main() {
    let mut report = Report { passed: 0, failed: 0 };

    let t = Instant::now();
    report.record("single-domain oracle", single_domain_oracle(), t);

    let t = Instant::now();
    let laplace = baseline_laplace();
    match &laplace {
        Ok((m, c_0)) => {
            report.record("sum rules", sum_rules(m, *c_0), t);
            let t = Instant::now();
            report.record("1D-limit equivalence", one_d_limit(m, *c_0), t);
        }
        Err(e) => {
            report.record("sum rules", Err(e.clone()), t);
            report.record("1D-limit equivalence", Err(e.clone()), t);
        }
    }

    let t = Instant::now();
    report.record("WKB oracle", wkb_oracle(), t);
    let t = Instant::now();
    report.record("Landauer sanity", landauer_sanity(), t);

    let t = Instant::now();
    let base = run_sweep(&DeviceSpec::baseline(), 2.5, 2.0, &Timing::default());
    let with_base = |f: fn(&VsetSweep) -> Outcome| match &base {
        Ok(b) => f(b),
        Err(e) => Err(e.clone()),
    };
    report.record("program/read back-switching", with_base(program_read_behaviour), t);
    report.record("read current magnitude", with_base(read_magnitude), t);
    let t = Instant::now();
    report.record("dielectric thickness trends", thickness_trends(), t);
    let t = Instant::now();
    report.record("design variant trends", with_base(variant_trends), t);
    let t = Instant::now();
    report.record("rate independence", with_base(rate_independence), t);

    println!("{} passed, {} failed", report.passed, report.failed);
    if report.failed > 0 && std::env::var_os("FTJ_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
