//! Run configuration: TOML parsing with units, defaults and strict key
//! checking, conversion to the core types, and re-emission of the resolved
//! values.
//!
//! Values are held in the config's canonical units (nm, eV, V, K, cm^2, s;
//! waveform durations in units of t_rho) so that emitting and re-parsing a
//! resolved config is an identity.

use std::collections::BTreeSet;
use std::path::Path;

use ftj_core::domains::{Anisotropy, GridSpec, VariationSpec};
use ftj_core::dynamics::DynamicsConfig;
use ftj_core::electrostatics::{ClosureKernel, CouplingMethod, LaplaceMesh};
use ftj_core::protocol::{DeviceSpec, Timing};
use ftj_core::stack::{presets, Electrode, Material, StackSpec};
use ftj_core::tunneling::TransportConfig;
use thiserror::Error;
use toml::{Table, Value};

use crate::units::{parse_quantity, Kind};

/// The shipped baseline preset, used when no config file is given.
pub const BASELINE_PRESET: &str = include_str!("../presets/baseline_al2o3.toml");

#[derive(Debug, Error)]
#[error("invalid config:\n  {}", .0.join("\n  "))]
pub struct ConfigError(pub Vec<String>);

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialConfig {
    pub name: String,
    /// eV
    pub electron_affinity: f64,
    pub permittivity: f64,
    /// units of m0
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FerroelectricConfig {
    pub material: MaterialConfig,
    /// nm
    pub thickness: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma_alpha: f64,
    pub sigma_beta: f64,
    pub sigma_gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DielectricConfig {
    pub material: MaterialConfig,
    /// nm; zero selects a bare metal/ferroelectric/metal stack.
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeConfig {
    pub md: String,
    /// eV
    pub md_workfunction: f64,
    pub mf: String,
    pub mf_workfunction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub nx: usize,
    pub ny: usize,
    /// nm
    pub domain_size: f64,
    /// nm
    pub wall_width: f64,
    /// m^2/F
    pub k_over_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectrostaticsConfig {
    pub method: CouplingMethod,
    pub self_fraction: f64,
    /// nm
    pub decay_length: f64,
    pub lateral_cells: usize,
    pub dielectric_cells: usize,
    pub ferroelectric_cells: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSection {
    /// Ohm m
    pub rho: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// s
    pub dt_max: Option<f64>,
    pub dt_init: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSection {
    pub m_parallel: f64,
    /// eV
    pub window_below: f64,
    pub window_above_kt: f64,
    pub tolerance: f64,
    /// cm^2
    pub device_area: f64,
    /// K
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub v_r: f64,
    pub v_preset: f64,
    pub v_set: f64,
    pub v_set_min: f64,
    pub v_set_max: f64,
    pub v_set_step: f64,
    /// t_rho per volt
    pub ramp_per_volt: f64,
    /// t_rho
    pub retention: f64,
    pub read_hold: f64,
    pub sample_interval: f64,
    pub read_samples: usize,
    pub hysteresis_amplitude: f64,
    /// t_rho per volt
    pub hysteresis_ramp_per_volt: f64,
    pub hysteresis_samples: usize,
    /// nm
    pub t_d_values: Vec<f64>,
    pub td_v_sets: Vec<f64>,
    pub dump_domains: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub ferroelectric: FerroelectricConfig,
    pub dielectric: DielectricConfig,
    pub electrodes: ElectrodeConfig,
    pub geometry: GeometryConfig,
    pub electrostatics: ElectrostaticsConfig,
    pub dynamics: DynamicsSection,
    pub transport: TransportSection,
    pub experiment: ExperimentConfig,
}

const SECTIONS: [&str; 8] = [
    "ferroelectric",
    "dielectric",
    "electrodes",
    "geometry",
    "electrostatics",
    "dynamics",
    "transport",
    "experiment",
];

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str, errs: &mut Vec<String>) -> Self {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                errs.push(format!("[{name}] must be a table"));
                None
            }
        };
        Self {
            name,
            table,
            used: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn string(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<String> {
        match self.get(key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                errs.push(format!("{}: expected a string", self.path(key)));
                None
            }
        }
    }

    fn required_string(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<String> {
        let v = self.string(key, errs);
        if v.is_none() && self.table.and_then(|t| t.get(key)).is_none() {
            errs.push(format!("missing key {}", self.path(key)));
        }
        v
    }

    /// Bare numbers are in the canonical unit; strings carry their own unit.
    fn number(&mut self, key: &'static str, kind: Option<Kind>, errs: &mut Vec<String>) -> Option<f64> {
        let path = self.path(key);
        let parsed = match (self.get(key)?, kind) {
            (Value::Float(x), _) => Ok(*x),
            (Value::Integer(i), _) => Ok(*i as f64),
            (Value::String(s), Some(kind)) => parse_quantity(s, kind),
            (Value::String(_), None) => Err("expected a dimensionless number".to_string()),
            _ => Err("expected a number".to_string()),
        };
        match parsed {
            Ok(x) if x.is_finite() => Some(x),
            Ok(_) => {
                errs.push(format!("{path}: value must be finite"));
                None
            }
            Err(e) => {
                errs.push(format!("{path}: {e}"));
                None
            }
        }
    }

    fn required_number(&mut self, key: &'static str, kind: Option<Kind>, errs: &mut Vec<String>) -> Option<f64> {
        let present = self.table.is_some_and(|t| t.contains_key(key));
        if !present {
            self.used.insert(key);
            errs.push(format!("missing key {}", self.path(key)));
            return None;
        }
        self.number(key, kind, errs)
    }

    fn number_or(&mut self, key: &'static str, kind: Option<Kind>, default: f64, errs: &mut Vec<String>) -> f64 {
        self.number(key, kind, errs).unwrap_or(default)
    }

    fn count_or(&mut self, key: &'static str, default: usize, errs: &mut Vec<String>) -> usize {
        match self.get(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(_) => {
                errs.push(format!("{}: expected a non-negative integer", self.path(key)));
                default
            }
        }
    }

    fn bool_or(&mut self, key: &'static str, default: bool, errs: &mut Vec<String>) -> bool {
        match self.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                errs.push(format!("{}: expected true or false", self.path(key)));
                default
            }
        }
    }

    fn list_or(&mut self, key: &'static str, kind: Kind, default: &[f64], errs: &mut Vec<String>) -> Vec<f64> {
        let path = self.path(key);
        match self.get(key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => items
                .iter()
                .filter_map(|v| {
                    let r = match v {
                        Value::Float(x) => Ok(*x),
                        Value::Integer(i) => Ok(*i as f64),
                        Value::String(s) => parse_quantity(s, kind),
                        _ => Err("expected a number".to_string()),
                    };
                    r.map_err(|e| errs.push(format!("{path}: {e}"))).ok()
                })
                .collect(),
            Some(_) => {
                errs.push(format!("{path}: expected an array"));
                default.to_vec()
            }
        }
    }

    fn finish(self, errs: &mut Vec<String>) {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.used.contains(key.as_str()) {
                    errs.push(format!("unknown key {}.{key}", self.name));
                }
            }
        }
    }
}

fn material(sec: &mut Section<'_>, errs: &mut Vec<String>) -> MaterialConfig {
    let name = sec.required_string("material", errs).unwrap_or_default();
    let preset = presets::material(&name);
    let mut field = |key: &'static str, from: fn(&Material) -> f64| match &preset {
        Some(m) => sec.number_or(key, None, from(m), errs),
        None => {
            let kind = (key == "electron_affinity").then_some(Kind::Energy);
            if !name.is_empty() && !sec.table.is_some_and(|t| t.contains_key(key)) {
                errs.push(format!("missing key {} (no built-in material '{name}')", sec.path(key)));
            }
            sec.number(key, kind, errs).unwrap_or(f64::NAN)
        }
    };
    let electron_affinity = field("electron_affinity", |m| m.electron_affinity);
    let permittivity = field("permittivity", |m| m.relative_permittivity);
    let mass = field("mass", |m| m.tunnelling_mass);
    MaterialConfig {
        name: preset.map(|m| m.name).unwrap_or(name),
        electron_affinity,
        permittivity,
        mass,
    }
}

fn electrode(sec: &mut Section<'_>, key: &'static str, wf_key: &'static str, errs: &mut Vec<String>) -> (String, f64) {
    let name = sec.required_string(key, errs).unwrap_or_default();
    match presets::electrode(&name) {
        Some(e) => {
            let wf = sec.number_or(wf_key, Some(Kind::Energy), e.workfunction, errs);
            (e.name, wf)
        }
        None => {
            if !name.is_empty() && !sec.table.is_some_and(|t| t.contains_key(wf_key)) {
                errs.push(format!("missing key {} (no built-in electrode '{name}')", sec.path(wf_key)));
            }
            let wf = sec.number(wf_key, Some(Kind::Energy), errs).unwrap_or(f64::NAN);
            (name, wf)
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Self::from_toml_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError(vec![e.to_string()]))?;
        Self::from_table(&root)
    }

    pub fn from_table(root: &Table) -> Result<Self, ConfigError> {
        let mut errs = Vec::new();
        for key in root.keys() {
            if key != "seed" && !SECTIONS.contains(&key.as_str()) {
                errs.push(format!("unknown key {key}"));
            }
        }
        let seed = match root.get("seed") {
            None => 1,
            Some(Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(Value::String(s)) => s.parse().unwrap_or_else(|_| {
                errs.push("seed: expected a non-negative integer".into());
                1
            }),
            Some(_) => {
                errs.push("seed: expected a non-negative integer".into());
                1
            }
        };

        let a = Anisotropy::HZO;
        let v = VariationSpec::default();
        let mut s = Section::new(root, "ferroelectric", &mut errs);
        let fe_material = material(&mut s, &mut errs);
        let ferroelectric = FerroelectricConfig {
            material: fe_material,
            thickness: s.required_number("thickness", Some(Kind::Length), &mut errs).unwrap_or(f64::NAN),
            alpha: s.number_or("alpha", None, a.alpha, &mut errs),
            beta: s.number_or("beta", None, a.beta, &mut errs),
            gamma: s.number_or("gamma", None, a.gamma, &mut errs),
            sigma_alpha: s.number_or("sigma_alpha", None, v.sigma_alpha, &mut errs),
            sigma_beta: s.number_or("sigma_beta", None, v.sigma_beta, &mut errs),
            sigma_gamma: s.number_or("sigma_gamma", None, v.sigma_gamma, &mut errs),
        };
        s.finish(&mut errs);

        let mut s = Section::new(root, "dielectric", &mut errs);
        let de_material = material(&mut s, &mut errs);
        let dielectric = DielectricConfig {
            material: de_material,
            thickness: s.required_number("thickness", Some(Kind::Length), &mut errs).unwrap_or(f64::NAN),
        };
        s.finish(&mut errs);

        let mut s = Section::new(root, "electrodes", &mut errs);
        let (md, md_workfunction) = electrode(&mut s, "md", "md_workfunction", &mut errs);
        let (mf, mf_workfunction) = electrode(&mut s, "mf", "mf_workfunction", &mut errs);
        let electrodes = ElectrodeConfig {
            md,
            md_workfunction,
            mf,
            mf_workfunction,
        };
        s.finish(&mut errs);

        let g = GridSpec::default();
        let mut s = Section::new(root, "geometry", &mut errs);
        let geometry = GeometryConfig {
            nx: s.count_or("nx", g.nx, &mut errs),
            ny: s.count_or("ny", g.ny, &mut errs),
            domain_size: s.number_or("domain_size", Some(Kind::Length), 5.0, &mut errs),
            wall_width: s.number_or("wall_width", Some(Kind::Length), 0.5, &mut errs),
            k_over_w: s.number_or("k_over_w", None, g.k_over_w, &mut errs),
        };
        s.finish(&mut errs);

        let c = ClosureKernel::default();
        let m = LaplaceMesh::default();
        let mut s = Section::new(root, "electrostatics", &mut errs);
        let method = match s.string("method", &mut errs) {
            None => CouplingMethod::Laplace,
            Some(text) => text.parse().unwrap_or_else(|e| {
                errs.push(format!("electrostatics.method: {e}"));
                CouplingMethod::Laplace
            }),
        };
        let electrostatics = ElectrostaticsConfig {
            method,
            self_fraction: s.number_or("self_fraction", None, c.self_fraction, &mut errs),
            decay_length: s.number_or("decay_length", Some(Kind::Length), 3.219, &mut errs),
            lateral_cells: s.count_or("lateral_cells", m.lateral_cells, &mut errs),
            dielectric_cells: s.count_or("dielectric_cells", m.dielectric_cells, &mut errs),
            ferroelectric_cells: s.count_or("ferroelectric_cells", m.ferroelectric_cells, &mut errs),
            tolerance: s.number_or("tolerance", None, m.tolerance, &mut errs),
            max_iterations: s.count_or("max_iterations", m.max_iterations, &mut errs),
        };
        s.finish(&mut errs);

        let d = DynamicsConfig::default();
        let mut s = Section::new(root, "dynamics", &mut errs);
        let dynamics = DynamicsSection {
            rho: s.number_or("rho", None, d.rho, &mut errs),
            rel_tol: s.number_or("rel_tol", None, d.rel_tol, &mut errs),
            abs_tol: s.number_or("abs_tol", None, d.abs_tol, &mut errs),
            dt_max: s.number("dt_max", Some(Kind::Time), &mut errs),
            dt_init: s.number("dt_init", Some(Kind::Time), &mut errs),
        };
        s.finish(&mut errs);

        let t = TransportConfig::default();
        let mut s = Section::new(root, "transport", &mut errs);
        let transport = TransportSection {
            m_parallel: s.number_or("m_parallel", None, t.m_parallel, &mut errs),
            window_below: s.number_or("window_below", Some(Kind::Energy), t.window_below, &mut errs),
            window_above_kt: s.number_or("window_above_kt", None, t.window_above_kt, &mut errs),
            tolerance: s.number_or("tolerance", None, t.tolerance, &mut errs),
            device_area: s.number_or("device_area", Some(Kind::Area), 3.14e-4, &mut errs),
            temperature: s.number_or(
                "temperature",
                Some(Kind::Temperature),
                ftj_core::stack::DEFAULT_TEMPERATURE,
                &mut errs,
            ),
        };
        s.finish(&mut errs);

        let tm = Timing::default();
        let mut s = Section::new(root, "experiment", &mut errs);
        let volts = Some(Kind::Voltage);
        let experiment = ExperimentConfig {
            v_r: s.number_or("v_r", volts, 2.0, &mut errs),
            v_preset: s.number_or("v_preset", volts, -5.0, &mut errs),
            v_set: s.number_or("v_set", volts, 4.0, &mut errs),
            v_set_min: s.number_or("v_set_min", volts, 2.0, &mut errs),
            v_set_max: s.number_or("v_set_max", volts, 6.5, &mut errs),
            v_set_step: s.number_or("v_set_step", volts, 0.25, &mut errs),
            ramp_per_volt: s.number_or("ramp_per_volt", None, tm.ramp_per_volt, &mut errs),
            retention: s.number_or("retention", None, tm.retention, &mut errs),
            read_hold: s.number_or("read_hold", None, tm.read_hold, &mut errs),
            sample_interval: s.number_or("sample_interval", None, tm.sample_interval, &mut errs),
            read_samples: s.count_or("read_samples", tm.read_samples, &mut errs),
            hysteresis_amplitude: s.number_or("hysteresis_amplitude", volts, 3.0, &mut errs),
            hysteresis_ramp_per_volt: s.number_or("hysteresis_ramp_per_volt", None, 100.0, &mut errs),
            hysteresis_samples: s.count_or("hysteresis_samples", 2000, &mut errs),
            t_d_values: s.list_or("t_d_values", Kind::Length, &[1.0, 1.5, 2.0, 2.5], &mut errs),
            td_v_sets: s.list_or("td_v_sets", Kind::Voltage, &[2.5, 6.5], &mut errs),
            dump_domains: s.bool_or("dump_domains", false, &mut errs),
        };
        s.finish(&mut errs);

        if errs.is_empty() {
            Ok(Self {
                seed,
                ferroelectric,
                dielectric,
                electrodes,
                geometry,
                electrostatics,
                dynamics,
                transport,
                experiment,
            })
        } else {
            Err(ConfigError(errs))
        }
    }

    /// Every resolved value, in canonical units.
    pub fn to_table(&self) -> Table {
        fn table<const N: usize>(items: [(&str, Value); N]) -> Value {
            Value::Table(items.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
        }
        let f = Value::Float;
        let n = |x: usize| Value::Integer(x as i64);
        let s = |x: &str| Value::String(x.to_string());
        let list = |xs: &[f64]| Value::Array(xs.iter().copied().map(Value::Float).collect());

        let fe = &self.ferroelectric;
        let de = &self.dielectric;
        let el = &self.electrodes;
        let g = &self.geometry;
        let es = &self.electrostatics;
        let dy = &self.dynamics;
        let tr = &self.transport;
        let ex = &self.experiment;

        let mut root = Table::new();
        root.insert(
            "seed".into(),
            i64::try_from(self.seed).map_or_else(|_| Value::String(self.seed.to_string()), Value::Integer),
        );
        root.insert(
            "ferroelectric".into(),
            table([
                ("material", s(&fe.material.name)),
                ("electron_affinity", f(fe.material.electron_affinity)),
                ("permittivity", f(fe.material.permittivity)),
                ("mass", f(fe.material.mass)),
                ("thickness", f(fe.thickness)),
                ("alpha", f(fe.alpha)),
                ("beta", f(fe.beta)),
                ("gamma", f(fe.gamma)),
                ("sigma_alpha", f(fe.sigma_alpha)),
                ("sigma_beta", f(fe.sigma_beta)),
                ("sigma_gamma", f(fe.sigma_gamma)),
            ]),
        );
        root.insert(
            "dielectric".into(),
            table([
                ("material", s(&de.material.name)),
                ("electron_affinity", f(de.material.electron_affinity)),
                ("permittivity", f(de.material.permittivity)),
                ("mass", f(de.material.mass)),
                ("thickness", f(de.thickness)),
            ]),
        );
        root.insert(
            "electrodes".into(),
            table([
                ("md", s(&el.md)),
                ("md_workfunction", f(el.md_workfunction)),
                ("mf", s(&el.mf)),
                ("mf_workfunction", f(el.mf_workfunction)),
            ]),
        );
        root.insert(
            "geometry".into(),
            table([
                ("nx", n(g.nx)),
                ("ny", n(g.ny)),
                ("domain_size", f(g.domain_size)),
                ("wall_width", f(g.wall_width)),
                ("k_over_w", f(g.k_over_w)),
            ]),
        );
        root.insert(
            "electrostatics".into(),
            table([
                ("method", s(&es.method.to_string())),
                ("self_fraction", f(es.self_fraction)),
                ("decay_length", f(es.decay_length)),
                ("lateral_cells", n(es.lateral_cells)),
                ("dielectric_cells", n(es.dielectric_cells)),
                ("ferroelectric_cells", n(es.ferroelectric_cells)),
                ("tolerance", f(es.tolerance)),
                ("max_iterations", n(es.max_iterations)),
            ]),
        );
        let mut dyn_table = Table::new();
        dyn_table.insert("rho".into(), f(dy.rho));
        dyn_table.insert("rel_tol".into(), f(dy.rel_tol));
        dyn_table.insert("abs_tol".into(), f(dy.abs_tol));
        if let Some(x) = dy.dt_max {
            dyn_table.insert("dt_max".into(), f(x));
        }
        if let Some(x) = dy.dt_init {
            dyn_table.insert("dt_init".into(), f(x));
        }
        root.insert("dynamics".into(), Value::Table(dyn_table));
        root.insert(
            "transport".into(),
            table([
                ("m_parallel", f(tr.m_parallel)),
                ("window_below", f(tr.window_below)),
                ("window_above_kt", f(tr.window_above_kt)),
                ("tolerance", f(tr.tolerance)),
                ("device_area", f(tr.device_area)),
                ("temperature", f(tr.temperature)),
            ]),
        );
        root.insert(
            "experiment".into(),
            table([
                ("v_r", f(ex.v_r)),
                ("v_preset", f(ex.v_preset)),
                ("v_set", f(ex.v_set)),
                ("v_set_min", f(ex.v_set_min)),
                ("v_set_max", f(ex.v_set_max)),
                ("v_set_step", f(ex.v_set_step)),
                ("ramp_per_volt", f(ex.ramp_per_volt)),
                ("retention", f(ex.retention)),
                ("read_hold", f(ex.read_hold)),
                ("sample_interval", f(ex.sample_interval)),
                ("read_samples", n(ex.read_samples)),
                ("hysteresis_amplitude", f(ex.hysteresis_amplitude)),
                ("hysteresis_ramp_per_volt", f(ex.hysteresis_ramp_per_volt)),
                ("hysteresis_samples", n(ex.hysteresis_samples)),
                ("t_d_values", list(&ex.t_d_values)),
                ("td_v_sets", list(&ex.td_v_sets)),
                ("dump_domains", Value::Boolean(ex.dump_domains)),
            ]),
        );
        root
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_table()).expect("config tables always serialize")
    }

    pub fn stack(&self) -> StackSpec {
        let mat = |m: &MaterialConfig| Material::new(m.name.clone(), m.electron_affinity, m.permittivity, m.mass);
        StackSpec {
            ferroelectric: mat(&self.ferroelectric.material),
            dielectric: mat(&self.dielectric.material),
            t_f: self.ferroelectric.thickness / 1e9,
            t_d: self.dielectric.thickness / 1e9,
            electrode_mf: Electrode::new(self.electrodes.mf.clone(), self.electrodes.mf_workfunction),
            electrode_md: Electrode::new(self.electrodes.md.clone(), self.electrodes.md_workfunction),
            temperature: self.transport.temperature,
        }
    }

    pub fn grid(&self) -> GridSpec {
        let g = &self.geometry;
        GridSpec {
            nx: g.nx,
            ny: g.ny,
            d: g.domain_size / 1e9,
            w: g.wall_width / 1e9,
            k_over_w: g.k_over_w,
        }
    }

    pub fn device(&self) -> DeviceSpec {
        let fe = &self.ferroelectric;
        let es = &self.electrostatics;
        DeviceSpec {
            stack: self.stack(),
            grid: self.grid(),
            anisotropy: Anisotropy {
                alpha: fe.alpha,
                beta: fe.beta,
                gamma: fe.gamma,
            },
            variation: VariationSpec {
                sigma_alpha: fe.sigma_alpha,
                sigma_beta: fe.sigma_beta,
                sigma_gamma: fe.sigma_gamma,
                seed: self.seed,
            },
            coupling: es.method,
            closure: ClosureKernel {
                self_fraction: es.self_fraction,
                decay_length: es.decay_length / 1e9,
            },
            mesh: LaplaceMesh {
                lateral_cells: es.lateral_cells,
                dielectric_cells: es.dielectric_cells,
                ferroelectric_cells: es.ferroelectric_cells,
                tolerance: es.tolerance,
                max_iterations: es.max_iterations,
            },
        }
    }

    pub fn dynamics(&self) -> DynamicsConfig {
        let d = &self.dynamics;
        DynamicsConfig {
            rho: d.rho,
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            dt_max: d.dt_max,
            dt_init: d.dt_init,
        }
    }

    pub fn transport(&self) -> TransportConfig {
        let t = &self.transport;
        TransportConfig {
            m_parallel: t.m_parallel,
            window_below: t.window_below,
            window_above_kt: t.window_above_kt,
            tolerance: t.tolerance,
            device_area: t.device_area / 1e4,
            ..TransportConfig::default()
        }
    }

    pub fn timing(&self) -> Timing {
        let e = &self.experiment;
        Timing {
            ramp_per_volt: e.ramp_per_volt,
            retention: e.retention,
            read_hold: e.read_hold,
            sample_interval: e.sample_interval,
            read_samples: e.read_samples,
        }
    }
}
