//! Experiment dispatch and artifact writing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ftj_core::electrostatics::build_coupling;
use ftj_core::exec::Execution;
use ftj_core::protocol::{
    run_hysteresis, run_set_read, sweep_td, sweep_vset, vset_grid, write_td_csv, write_trace_csv,
    ProgramReadSpec, Simulation,
};
use ftj_core::stack::presets;
use ftj_core::tunneling::device_current;

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.toml";

/// One resolved invocation.
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
    pub exec: Execution,
}

impl Run {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        Ok(BufWriter::new(f))
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create output directory {}", self.out.display()))
    }

    fn simulation(&self) -> Result<Simulation> {
        let sim = self
            .config
            .device()
            .build(self.config.dynamics(), self.config.transport(), self.exec)
            .context("building the device")?;
        if let Some(r) = &sim.laplace {
            log::info!(
                "Laplace coupling: {} unknowns, {} iterations, residual {:.2e}, sum rule {:.2e}",
                r.unknowns,
                r.iterations,
                r.residual,
                r.sum_rule_residual
            );
        }
        log::info!("t_rho = {:e} s", sim.system.t_rho());
        Ok(sim)
    }

    /// Resolved config under a comment header; parses back as a config.
    pub fn manifest(&self, command: &str) -> String {
        let mode = match self.exec {
            Execution::Sequential => "sequential",
            Execution::Parallel => "parallel",
        };
        format!(
            "# ftj {} run manifest\n# command: {command}\n# execution: {mode}\n\
             # units: nm, eV, V, K, cm^2, s; waveform durations in t_rho\n\n{}",
            env!("CARGO_PKG_VERSION"),
            self.config.to_toml_string()
        )
    }

    fn write_manifest(&self, command: &str) -> Result<()> {
        let mut w = self.create(MANIFEST)?;
        w.write_all(self.manifest(command).as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn program_read_spec(&self, sim: &Simulation, v_set: f64) -> ProgramReadSpec {
        let e = &self.config.experiment;
        ProgramReadSpec {
            v_preset: e.v_preset,
            ..ProgramReadSpec::new(v_set, e.v_r, sim.system.t_rho(), &self.config.timing())
        }
    }

    pub fn hysteresis(&self) -> Result<()> {
        self.prepare()?;
        let sim = self.simulation()?;
        let e = &self.config.experiment;
        let amplitude = e.hysteresis_amplitude;
        let period = e.hysteresis_ramp_per_volt * sim.system.t_rho() * 4.0 * amplitude;
        let res = run_hysteresis(&sim, amplitude, period, e.hysteresis_samples)?;
        res.write_csv(self.create("qvf.csv")?)?;
        match res.metrics() {
            Ok(m) => println!(
                "P_r = {:.5} C/m^2, V_sw = {:.4} / {:.4} V",
                0.5 * (m.remnant_down - m.remnant_up),
                m.switching_up,
                m.switching_down
            ),
            Err(err) => println!("loop metrics unavailable: {err}"),
        }
        self.write_manifest("hysteresis")
    }

    pub fn program_read(&self) -> Result<()> {
        self.prepare()?;
        let sim = self.simulation()?;
        let spec = self.program_read_spec(&sim, self.config.experiment.v_set);
        let res = run_set_read(&sim, &spec)?;
        write_trace_csv(&res.trace, self.create("trace.csv")?)?;
        let s = res.summary;
        let mut w = csv::Writer::from_writer(self.create("summary.csv")?);
        w.write_record(["V_SET", "f_UP_set", "f_UP_retention", "f_UP_read", "I_R_A", "V_D_up_V"])?;
        w.write_record(&[
            format!("{}", s.v_set),
            format!("{}", s.f_up_set),
            format!("{}", s.f_up_retention),
            format!("{}", s.f_up_read),
            format!("{:e}", s.i_r),
            s.v_d_up.map(|v| format!("{v}")).unwrap_or_default(),
        ])?;
        w.flush()?;
        if self.config.experiment.dump_domains {
            let cur = device_current(&sim.system, &res.read_state, spec.v_r, &sim.transport, sim.exec)?;
            cur.write_csv(self.create("domains.csv")?)?;
        }
        println!(
            "V_SET = {} V: f_UP set {:.4}, read {:.4}, I_R = {:.4e} A",
            s.v_set, s.f_up_set, s.f_up_read, s.i_r
        );
        self.write_manifest("program-read")
    }

    pub fn sweep_vset(&self) -> Result<()> {
        self.prepare()?;
        let sim = self.simulation()?;
        let e = &self.config.experiment;
        let grid = vset_grid(e.v_set_min, e.v_set_max, e.v_set_step)?;
        let spec = self.program_read_spec(&sim, grid[0]);
        let sweep = sweep_vset(&sim, &grid, &spec)?;
        sweep.write_csv(self.create("ir_vs_vset.csv")?)?;
        let t_preset_end = spec.set_prefix()?.marker("preset_end").unwrap_or(0.0);
        sweep.write_minor_loops_csv(t_preset_end, self.create("minor_loops.csv")?)?;
        println!("R_I = {:.4}", sweep.r_i);
        self.write_manifest("sweep-vset")
    }

    pub fn sweep_td(&self) -> Result<()> {
        self.prepare()?;
        let e = &self.config.experiment;
        let t_ds: Vec<f64> = e.t_d_values.iter().map(|t| t / 1e9).collect();
        let pts = sweep_td(
            &self.config.device(),
            &t_ds,
            &e.td_v_sets,
            e.v_r,
            &self.config.timing(),
            self.config.dynamics(),
            self.config.transport(),
            self.exec,
        )?;
        write_td_csv(&pts, self.create("td_sweep.csv")?)?;
        for p in &pts {
            println!("t_D = {:.2} nm: R_I = {:.4}", p.t_d * 1e9, p.sweep.r_i);
        }
        self.write_manifest("sweep-td")
    }

    pub fn coupling_matrix(&self) -> Result<()> {
        self.prepare()?;
        let dev = self.config.device();
        let (m, report) = build_coupling(dev.coupling, &dev.grid, &dev.stack, &dev.closure, &dev.mesh, self.exec)?;
        m.write_csv(self.create("coupling_matrix.csv")?)?;
        let mut r = toml::Table::new();
        r.insert("method".into(), dev.coupling.to_string().into());
        r.insert("n_domains".into(), (m.n() as i64).into());
        r.insert("asymmetry".into(), m.asymmetry().into());
        if dev.stack.is_bare() {
            r.insert("bare".into(), true.into());
        } else {
            let c_0 = dev.stack.derive_capacitances()?.c_0;
            r.insert("c_0".into(), c_0.into());
            r.insert("sum_rule_residual".into(), m.sum_rule_residual(c_0).into());
        }
        if let Some(rep) = report {
            r.insert("iterations".into(), (rep.iterations as i64).into());
            r.insert("solver_residual".into(), rep.residual.into());
            r.insert("unknowns".into(), (rep.unknowns as i64).into());
        }
        let text = toml::to_string(&r)?;
        let mut w = self.create("coupling_report.toml")?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        print!("{text}");
        self.write_manifest("coupling-matrix")
    }
}

/// Built-in materials and electrodes, as CSV on `out`.
pub fn materials<W: Write>(out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "name", "electron_affinity_eV", "permittivity", "mass_m0", "workfunction_eV"])?;
    for m in presets::materials() {
        w.write_record(&[
            "material".to_string(),
            m.name,
            m.electron_affinity.to_string(),
            m.relative_permittivity.to_string(),
            m.tunnelling_mass.to_string(),
            String::new(),
        ])?;
    }
    for e in presets::electrodes() {
        w.write_record(&[
            "electrode".to_string(),
            e.name,
            String::new(),
            String::new(),
            String::new(),
            e.workfunction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn check_out_dir(out: &Path) -> Result<()> {
    if out.exists() && !out.is_dir() {
        bail!("{} exists and is not a directory", out.display());
    }
    Ok(())
}
