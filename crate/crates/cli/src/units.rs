//! Quantities in config files: a bare number in the canonical unit of the
//! key, or a string such as "12 nm" or "3.14e-4 cm^2".

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// canonical nm
    Length,
    /// canonical eV
    Energy,
    /// canonical V
    Voltage,
    /// canonical K
    Temperature,
    /// canonical cm^2
    Area,
    /// canonical s
    Time,
}

impl Kind {
    pub fn canonical(self) -> &'static str {
        match self {
            Kind::Length => "nm",
            Kind::Energy => "eV",
            Kind::Voltage => "V",
            Kind::Temperature => "K",
            Kind::Area => "cm^2",
            Kind::Time => "s",
        }
    }

    /// Factor converting one `unit` into the canonical unit.
    fn scale(self, unit: &str) -> Option<f64> {
        let s = match (self, unit) {
            (Kind::Length, "nm") => 1.0,
            (Kind::Length, "m") => 1e9,
            (Kind::Length, "um") => 1e3,
            (Kind::Length, "pm") => 1e-3,
            (Kind::Length, "A") => 0.1,
            (Kind::Energy, "eV") => 1.0,
            (Kind::Energy, "meV") => 1e-3,
            (Kind::Voltage, "V") => 1.0,
            (Kind::Voltage, "mV") => 1e-3,
            (Kind::Temperature, "K") => 1.0,
            (Kind::Area, "cm^2") => 1.0,
            (Kind::Area, "m^2") => 1e4,
            (Kind::Area, "mm^2") => 1e-2,
            (Kind::Area, "um^2") => 1e-8,
            (Kind::Area, "nm^2") => 1e-14,
            (Kind::Time, "s") => 1.0,
            (Kind::Time, "ms") => 1e-3,
            (Kind::Time, "us") => 1e-6,
            (Kind::Time, "ns") => 1e-9,
            (Kind::Time, "ps") => 1e-12,
            _ => return None,
        };
        Some(s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Kind::Length => "length",
            Kind::Energy => "energy",
            Kind::Voltage => "voltage",
            Kind::Temperature => "temperature",
            Kind::Area => "area",
            Kind::Time => "time",
        };
        f.write_str(name)
    }
}

/// Parses "<number> <unit>" into the canonical unit of `kind`.
pub fn parse_quantity(text: &str, kind: Kind) -> Result<f64, String> {
    let text = text.trim();
    let (num, unit) = text
        .split_once(char::is_whitespace)
        .ok_or_else(|| format!("expected \"<number> <unit>\" for a {kind}, got \"{text}\""))?;
    let value: f64 = num
        .parse()
        .map_err(|_| format!("'{num}' is not a number"))?;
    let scale = kind
        .scale(unit.trim())
        .ok_or_else(|| format!("unit '{}' is not a {kind} unit (canonical {})", unit.trim(), kind.canonical()))?;
    Ok(if scale == 1.0 { value } else { value * scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converts_to_canonical() {
        assert_eq!(parse_quantity("12 nm", Kind::Length).unwrap(), 12.0);
        assert!((parse_quantity("2e-9 m", Kind::Length).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(parse_quantity("3.14e-4 cm^2", Kind::Area).unwrap(), 3.14e-4);
        assert_eq!(parse_quantity("300 K", Kind::Temperature).unwrap(), 300.0);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let err = parse_quantity("2 V", Kind::Length).unwrap_err();
        assert!(err.contains("not a length unit"), "{err}");
        assert!(parse_quantity("12nm", Kind::Length).is_err());
    }
}
