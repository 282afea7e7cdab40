//! MFIM layer stack: materials, electrodes, and the derived per-area
//! capacitances and barrier heights.
//!
//! Energies are in eV, lengths in metres. The ferroelectric contacts the MF
//! electrode and the dielectric contacts the MD electrode; positive
//! polarization points from the ferroelectric towards the dielectric.

use serde::{Deserialize, Serialize};

use crate::constants::EPS0;
use crate::{FtjError, Result};

/// Insulating layer material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Electron affinity, eV.
    pub electron_affinity: f64,
    /// Relative permittivity.
    pub relative_permittivity: f64,
    /// Tunnelling effective mass in units of the free electron mass.
    pub tunnelling_mass: f64,
}

impl Material {
    pub fn new(
        name: impl Into<String>,
        electron_affinity: f64,
        relative_permittivity: f64,
        tunnelling_mass: f64,
    ) -> Self {
        Self {
            name: name.into(),
            electron_affinity,
            relative_permittivity,
            tunnelling_mass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(FtjError::InvalidStack(format!(
                "material '{}': {what}",
                self.name
            )))
        };
        if !(self.electron_affinity > 0.0) {
            return bad("electron affinity must be positive");
        }
        if !(self.relative_permittivity >= 1.0) {
            return bad("relative permittivity must be >= 1");
        }
        if !(self.tunnelling_mass > 0.0 && self.tunnelling_mass <= 2.0) {
            return bad("tunnelling mass must lie in (0, 2] m0");
        }
        Ok(())
    }
}

/// Metal electrode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Electrode {
    pub name: String,
    /// Work function, eV.
    pub workfunction: f64,
}

impl Electrode {
    pub fn new(name: impl Into<String>, workfunction: f64) -> Self {
        Self {
            name: name.into(),
            workfunction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.workfunction > 0.0) {
            return Err(FtjError::InvalidStack(format!(
                "electrode '{}': work function must be positive",
                self.name
            )));
        }
        Ok(())
    }
}

/// Built-in material and electrode library.
pub mod presets {
    use super::{Electrode, Material};

    pub fn hzo() -> Material {
        Material::new("HZO", 2.1, 30.0, 0.4)
    }

    pub fn al2o3() -> Material {
        Material::new("Al2O3", 1.4, 10.0, 0.3)
    }

    pub fn sio2() -> Material {
        Material::new("SiO2", 0.95, 3.9, 0.5)
    }

    pub fn tin() -> Electrode {
        Electrode::new("TiN", 4.55)
    }

    pub fn al() -> Electrode {
        Electrode::new("Al", 4.08)
    }

    pub fn materials() -> Vec<Material> {
        vec![hzo(), al2o3(), sio2()]
    }

    pub fn electrodes() -> Vec<Electrode> {
        vec![tin(), al()]
    }

    /// Case-insensitive lookup of a material preset.
    pub fn material(name: &str) -> Option<Material> {
        materials()
            .into_iter()
            .find(|m| m.name.eq_ignore_ascii_case(name))
    }

    /// Case-insensitive lookup of an electrode preset.
    pub fn electrode(name: &str) -> Option<Electrode> {
        electrodes()
            .into_iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }
}

/// Per-unit-area capacitances, F/m^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacitances {
    pub c_f: f64,
    pub c_d: f64,
    pub c_0: f64,
}

/// Electrode-to-layer conduction band offsets, eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierHeights {
    /// MD electrode to dielectric conduction band.
    pub md_dielectric: f64,
    /// MD electrode to ferroelectric conduction band; the read condition
    /// requires `q V_D` above this value.
    pub md_ferroelectric: f64,
    /// MF electrode to ferroelectric conduction band.
    pub mf_ferroelectric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackSpec {
    pub ferroelectric: Material,
    pub dielectric: Material,
    /// Ferroelectric thickness, m.
    pub t_f: f64,
    /// Dielectric thickness, m. Zero means a bare metal/ferroelectric/metal
    /// capacitor.
    pub t_d: f64,
    pub electrode_mf: Electrode,
    pub electrode_md: Electrode,
    /// Lattice temperature, K.
    pub temperature: f64,
}

pub const DEFAULT_TEMPERATURE: f64 = 300.0;

impl StackSpec {
    /// TiN / HZO (12 nm) / Al2O3 (2 nm) / TiN.
    pub fn baseline() -> Self {
        Self {
            ferroelectric: presets::hzo(),
            dielectric: presets::al2o3(),
            t_f: 12e-9,
            t_d: 2e-9,
            electrode_mf: presets::tin(),
            electrode_md: presets::tin(),
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    /// Same stack with a different dielectric thickness.
    pub fn with_dielectric_thickness(&self, t_d: f64) -> Self {
        Self { t_d, ..self.clone() }
    }

    pub fn with_dielectric(&self, dielectric: Material, t_d: f64) -> Self {
        Self {
            dielectric,
            t_d,
            ..self.clone()
        }
    }

    pub fn with_electrodes(&self, electrode: Electrode) -> Self {
        Self {
            electrode_mf: electrode.clone(),
            electrode_md: electrode,
            ..self.clone()
        }
    }

    /// True when there is no dielectric layer.
    pub fn is_bare(&self) -> bool {
        self.t_d == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        self.ferroelectric.validate()?;
        self.dielectric.validate()?;
        self.electrode_mf.validate()?;
        self.electrode_md.validate()?;
        if !(self.t_f > 0.0) || !self.t_f.is_finite() {
            return Err(FtjError::InvalidStack(format!(
                "ferroelectric thickness must be positive (got {:e} m)",
                self.t_f
            )));
        }
        if !(self.t_d >= 0.0) || !self.t_d.is_finite() {
            return Err(FtjError::InvalidStack(format!(
                "dielectric thickness must be non-negative (got {:e} m)",
                self.t_d
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(FtjError::InvalidStack(format!(
                "temperature must be positive (got {} K)",
                self.temperature
            )));
        }
        Ok(())
    }

    /// C_F = eps0 eps_F / t_F, C_D = eps0 eps_D / t_D, C_0 = C_F + C_D.
    pub fn derive_capacitances(&self) -> Result<Capacitances> {
        self.validate()?;
        if self.t_d <= 0.0 {
            return Err(FtjError::InvalidStack(
                "dielectric thickness must be positive to define C_D".into(),
            ));
        }
        let c_f = EPS0 * self.ferroelectric.relative_permittivity / self.t_f;
        let c_d = EPS0 * self.dielectric.relative_permittivity / self.t_d;
        Ok(Capacitances {
            c_f,
            c_d,
            c_0: c_f + c_d,
        })
    }

    pub fn barrier_heights(&self) -> BarrierHeights {
        let md = self.electrode_md.workfunction;
        let mf = self.electrode_mf.workfunction;
        BarrierHeights {
            md_dielectric: md - self.dielectric.electron_affinity,
            md_ferroelectric: md - self.ferroelectric.electron_affinity,
            mf_ferroelectric: mf - self.ferroelectric.electron_affinity,
        }
    }

    /// Work-function difference (Phi_MF - Phi_MD)/q, added to the applied bias.
    pub fn builtin_voltage(&self) -> f64 {
        self.electrode_mf.workfunction - self.electrode_md.workfunction
    }

    /// Absolute ferroelectric background permittivity, F/m.
    pub fn eps_f(&self) -> f64 {
        EPS0 * self.ferroelectric.relative_permittivity
    }

    /// Absolute dielectric permittivity, F/m.
    pub fn eps_d(&self) -> f64 {
        EPS0 * self.dielectric.relative_permittivity
    }
}
