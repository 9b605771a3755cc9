//! Parameter ingestion: a built-in baseline, an optional JSON config file,
//! and repeatable `--param key=value` overrides, merged in that order.
//!
//! Mutually redundant fields are exclusive within one source: a file or
//! override set may fix the decay rate or the quality factor but not both,
//! the probe as a ratio or a power but not both, the detuning absolutely or
//! relative to the mechanical frequency but not both, and the Kerr strength
//! through a mode volume or a tagged coefficient but not both. A later
//! source may switch the representation of any pair.

use serde::Deserialize;

use kerromit::constants::SPEED_OF_LIGHT;
use kerromit::params::HZ_PAPER_FACTOR;
use kerromit::{KerrInput, KerrUnit, PhysicalParams64, ProbeInput};

use crate::Failure;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One configuration source, every field optional. Field names are the
/// `--param` keys; unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub wavelength_m: Option<f64>,
    pub mass_kg: Option<f64>,
    pub radius_m: Option<f64>,
    pub linear_index: Option<f64>,
    pub nonlinear_index_m2_per_w: Option<f64>,
    pub quality_factor: Option<f64>,
    pub kappa_rad_per_s: Option<f64>,
    pub mech_frequency_rad_per_s: Option<f64>,
    pub mech_damping_rad_per_s: Option<f64>,
    pub pump_power_w: Option<f64>,
    pub probe_ratio: Option<f64>,
    pub probe_power_w: Option<f64>,
    pub detuning_rad_per_s: Option<f64>,
    pub detuning_over_omega_m: Option<f64>,
    pub mode_volume_m3: Option<f64>,
    pub kerr_u: Option<f64>,
    pub kerr_u_unit: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum KappaSpec {
    Quality(f64),
    Kappa(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProbeSpec {
    Ratio(f64),
    Power(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DetuningSpec {
    RadPerSec(f64),
    OverOmegaM(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum KerrSpec {
    ModeVolume(f64),
    Coefficient { value: f64, unit: KerrUnit },
}

/// Fully resolved parameter set plus the record of which keys each source
/// overrode, carried into the output metadata.
#[derive(Debug, Clone)]
pub struct Settings {
    wavelength_m: f64,
    mass_kg: f64,
    radius_m: f64,
    linear_index: f64,
    nonlinear_index_m2_per_w: f64,
    kappa: KappaSpec,
    mech_frequency_rad_per_s: f64,
    mech_damping_rad_per_s: f64,
    pump_power_w: f64,
    probe: ProbeSpec,
    detuning: DetuningSpec,
    kerr: KerrSpec,
    /// A config file or override supplied an explicit Kerr unit tag; a bare
    /// `kerr_u` override is only accepted once this is true.
    unit_explicit: bool,
    from_config: Vec<&'static str>,
    from_param: Vec<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Config,
    Param,
}

fn parse_unit(s: &str) -> Result<KerrUnit, Failure> {
    match s {
        "rad_per_s" => Ok(KerrUnit::RadPerSec),
        "hz" => Ok(KerrUnit::Hz),
        "hz_paper" => Ok(KerrUnit::HzPaper),
        other => Err(Failure::Validation(format!(
            "unknown kerr_u_unit `{other}` (expected rad_per_s, hz, or hz_paper)"
        ))),
    }
}

pub fn kerr_unit_name(unit: KerrUnit) -> &'static str {
    match unit {
        KerrUnit::RadPerSec => "rad_per_s",
        KerrUnit::Hz => "hz",
        KerrUnit::HzPaper => "hz_paper",
    }
}

/// How a tagged coefficient is scaled to rad/s, for the output metadata.
pub fn kerr_unit_note(unit: KerrUnit) -> String {
    match unit {
        KerrUnit::RadPerSec => "rad_per_s(x1)".to_string(),
        KerrUnit::Hz => "hz(x2pi)".to_string(),
        KerrUnit::HzPaper => format!("hz_paper(x{HZ_PAPER_FACTOR:?})"),
    }
}

impl Settings {
    /// The common operating point every command starts from: the microtoroid
    /// numbers with the decay rate authoritative at 2*pi*22 MHz, a 10 mW pump
    /// one mechanical frequency below resonance, a 5% probe, and the u-tag-3
    /// Kerr coefficient.
    pub fn baseline() -> Settings {
        Settings {
            wavelength_m: 780e-9,
            mass_kg: 5e-11,
            radius_m: 19e-6,
            linear_index: 1.47,
            nonlinear_index_m2_per_w: 3.2e-20,
            kappa: KappaSpec::Kappa(TWO_PI * 22e6),
            mech_frequency_rad_per_s: TWO_PI * 83.7e6,
            mech_damping_rad_per_s: TWO_PI * 20e3,
            pump_power_w: 10e-3,
            probe: ProbeSpec::Ratio(0.05),
            detuning: DetuningSpec::OverOmegaM(-1.0),
            kerr: KerrSpec::Coefficient { value: 3.0, unit: KerrUnit::HzPaper },
            unit_explicit: false,
            from_config: Vec::new(),
            from_param: Vec::new(),
        }
    }

    pub fn apply_config(&mut self, file: &ConfigFile) -> Result<(), Failure> {
        self.absorb(file, Source::Config)
    }

    /// Parses `key=value` pairs through the same schema as the config file.
    pub fn apply_params(&mut self, pairs: &[String]) -> Result<(), Failure> {
        if pairs.is_empty() {
            return Ok(());
        }
        let mut object = serde_json::Map::new();
        for pair in pairs {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Failure::Validation(format!("--param `{pair}` is not of the form key=value"))
            })?;
            let json_value = if key == "kerr_u_unit" {
                serde_json::Value::String(value.to_string())
            } else {
                let number: f64 = value.parse().map_err(|_| {
                    Failure::Validation(format!("--param {key}: `{value}` is not a number"))
                })?;
                serde_json::Number::from_f64(number)
                    .map(serde_json::Value::Number)
                    .ok_or_else(|| {
                        Failure::Validation(format!("--param {key}: `{value}` is not finite"))
                    })?
            };
            if object.insert(key.to_string(), json_value).is_some() {
                return Err(Failure::Validation(format!("--param {key} given twice")));
            }
        }
        let file: ConfigFile = serde_json::from_value(serde_json::Value::Object(object))
            .map_err(|e| Failure::Validation(format!("--param: {e}")))?;
        self.absorb(&file, Source::Param)
    }

    fn absorb(&mut self, file: &ConfigFile, source: Source) -> Result<(), Failure> {
        let mut touched: Vec<&'static str> = Vec::new();
        let mut set = |slot: &mut f64, value: Option<f64>, key: &'static str| {
            if let Some(v) = value {
                *slot = v;
                touched.push(key);
            }
        };
        set(&mut self.wavelength_m, file.wavelength_m, "wavelength_m");
        set(&mut self.mass_kg, file.mass_kg, "mass_kg");
        set(&mut self.radius_m, file.radius_m, "radius_m");
        set(&mut self.linear_index, file.linear_index, "linear_index");
        set(
            &mut self.nonlinear_index_m2_per_w,
            file.nonlinear_index_m2_per_w,
            "nonlinear_index_m2_per_w",
        );
        set(&mut self.mech_frequency_rad_per_s, file.mech_frequency_rad_per_s, "mech_frequency_rad_per_s");
        set(&mut self.mech_damping_rad_per_s, file.mech_damping_rad_per_s, "mech_damping_rad_per_s");
        set(&mut self.pump_power_w, file.pump_power_w, "pump_power_w");

        if file.quality_factor.is_some() && file.kappa_rad_per_s.is_some() {
            return Err(Failure::Validation(
                "quality_factor and kappa_rad_per_s fix each other; give one".into(),
            ));
        }
        if let Some(q) = file.quality_factor {
            self.kappa = KappaSpec::Quality(q);
            touched.push("quality_factor");
        }
        if let Some(k) = file.kappa_rad_per_s {
            self.kappa = KappaSpec::Kappa(k);
            touched.push("kappa_rad_per_s");
        }

        if file.probe_ratio.is_some() && file.probe_power_w.is_some() {
            return Err(Failure::Validation(
                "probe_ratio and probe_power_w are exclusive; give one".into(),
            ));
        }
        if let Some(r) = file.probe_ratio {
            self.probe = ProbeSpec::Ratio(r);
            touched.push("probe_ratio");
        }
        if let Some(p) = file.probe_power_w {
            self.probe = ProbeSpec::Power(p);
            touched.push("probe_power_w");
        }

        if file.detuning_rad_per_s.is_some() && file.detuning_over_omega_m.is_some() {
            return Err(Failure::Validation(
                "detuning_rad_per_s and detuning_over_omega_m are exclusive; give one".into(),
            ));
        }
        if let Some(d) = file.detuning_rad_per_s {
            self.detuning = DetuningSpec::RadPerSec(d);
            touched.push("detuning_rad_per_s");
        }
        if let Some(d) = file.detuning_over_omega_m {
            self.detuning = DetuningSpec::OverOmegaM(d);
            touched.push("detuning_over_omega_m");
        }

        if file.mode_volume_m3.is_some() && file.kerr_u.is_some() {
            return Err(Failure::Validation(
                "mode_volume_m3 and kerr_u are exclusive; give one".into(),
            ));
        }
        if file.kerr_u_unit.is_some() && file.kerr_u.is_none() && file.mode_volume_m3.is_some() {
            return Err(Failure::Validation(
                "kerr_u_unit has no effect when the Kerr strength comes from a mode volume".into(),
            ));
        }
        if let Some(v) = file.mode_volume_m3 {
            self.kerr = KerrSpec::ModeVolume(v);
            self.unit_explicit = false;
            touched.push("mode_volume_m3");
        }
        if let Some(unit) = file.kerr_u_unit.as_deref() {
            let unit = parse_unit(unit)?;
            match (&mut self.kerr, file.kerr_u) {
                (_, Some(value)) => self.kerr = KerrSpec::Coefficient { value, unit },
                (KerrSpec::Coefficient { unit: slot, .. }, None) => *slot = unit,
                (KerrSpec::ModeVolume(_), None) => {
                    return Err(Failure::Validation(
                        "kerr_u_unit has no effect while the Kerr strength comes from a \
                         mode volume"
                            .into(),
                    ));
                }
            }
            self.unit_explicit = true;
            touched.push("kerr_u_unit");
            if file.kerr_u.is_some() {
                touched.push("kerr_u");
            }
        } else if let Some(value) = file.kerr_u {
            // A bare coefficient is only meaningful once some source has
            // pinned its unit; the built-in default does not count.
            if !self.unit_explicit {
                return Err(Failure::Validation(
                    "kerr_u needs kerr_u_unit (rad_per_s, hz, or hz_paper)".into(),
                ));
            }
            match &mut self.kerr {
                KerrSpec::Coefficient { value: slot, .. } => *slot = value,
                KerrSpec::ModeVolume(_) => unreachable!("unit_explicit implies a coefficient"),
            }
            touched.push("kerr_u");
        }

        match source {
            Source::Config => self.from_config.extend(touched),
            Source::Param => self.from_param.extend(touched),
        }
        Ok(())
    }

    pub fn cavity_frequency(&self) -> f64 {
        TWO_PI * SPEED_OF_LIGHT / self.wavelength_m
    }

    pub fn mech_frequency(&self) -> f64 {
        self.mech_frequency_rad_per_s
    }

    pub fn decay_rate(&self) -> f64 {
        match self.kappa {
            KappaSpec::Kappa(k) => k,
            KappaSpec::Quality(q) => self.cavity_frequency() / q,
        }
    }

    pub fn quality_factor(&self) -> f64 {
        match self.kappa {
            KappaSpec::Quality(q) => q,
            KappaSpec::Kappa(k) => self.cavity_frequency() / k,
        }
    }

    pub fn detuning_rad_per_s(&self) -> f64 {
        match self.detuning {
            DetuningSpec::RadPerSec(d) => d,
            DetuningSpec::OverOmegaM(f) => f * self.mech_frequency_rad_per_s,
        }
    }

    pub fn with_pump_power(&self, watts: f64) -> Settings {
        let mut s = self.clone();
        s.pump_power_w = watts;
        s
    }

    pub fn with_detuning_frac(&self, frac: f64) -> Settings {
        let mut s = self.clone();
        s.detuning = DetuningSpec::OverOmegaM(frac);
        s
    }

    pub fn with_kerr_tag(&self, tag: f64) -> Settings {
        self.with_kerr(tag, KerrUnit::HzPaper)
    }

    pub fn with_kerr(&self, value: f64, unit: KerrUnit) -> Settings {
        let mut s = self.clone();
        s.kerr = KerrSpec::Coefficient { value, unit };
        s
    }

    pub fn with_probe_ratio(&self, ratio: f64) -> Settings {
        let mut s = self.clone();
        s.probe = ProbeSpec::Ratio(ratio);
        s
    }

    pub fn to_physical(&self) -> PhysicalParams64 {
        PhysicalParams64 {
            wavelength: self.wavelength_m,
            mass: self.mass_kg,
            radius: self.radius_m,
            linear_index: self.linear_index,
            nonlinear_index: self.nonlinear_index_m2_per_w,
            quality_factor: self.quality_factor(),
            mech_frequency: self.mech_frequency_rad_per_s,
            mech_damping: self.mech_damping_rad_per_s,
            pump_power: self.pump_power_w,
            probe: match self.probe {
                ProbeSpec::Ratio(r) => ProbeInput::Ratio(r),
                ProbeSpec::Power(p) => ProbeInput::Power(p),
            },
            detuning: self.detuning_rad_per_s(),
            kerr: match self.kerr {
                KerrSpec::ModeVolume(v) => KerrInput::ModeVolume(v),
                KerrSpec::Coefficient { value, unit } => KerrInput::Coefficient { value, unit },
            },
        }
    }

    /// Full parameter provenance for the output metadata, in a fixed key
    /// order. Keys in `skip` are omitted; sweeps use that for the axis their
    /// rows enumerate.
    pub fn metadata(&self, skip: &[&str]) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |key: &str, value: String| {
            if !skip.contains(&key) {
                out.push((key.to_string(), value));
            }
        };
        push("wavelength_m", format!("{:?}", self.wavelength_m));
        push("mass_kg", format!("{:?}", self.mass_kg));
        push("radius_m", format!("{:?}", self.radius_m));
        push("linear_index", format!("{:?}", self.linear_index));
        push("nonlinear_index_m2_per_w", format!("{:?}", self.nonlinear_index_m2_per_w));
        push("kappa_rad_per_s", format!("{:?}", self.decay_rate()));
        push("quality_factor", format!("{:?}", self.quality_factor()));
        push(
            "quality_factor_source",
            match self.kappa {
                KappaSpec::Kappa(_) => "derived_from_kappa".to_string(),
                KappaSpec::Quality(_) => "given".to_string(),
            },
        );
        push("mech_frequency_rad_per_s", format!("{:?}", self.mech_frequency_rad_per_s));
        push("mech_damping_rad_per_s", format!("{:?}", self.mech_damping_rad_per_s));
        push("pump_power_w", format!("{:?}", self.pump_power_w));
        match self.probe {
            ProbeSpec::Ratio(r) => push("probe_ratio", format!("{r:?}")),
            ProbeSpec::Power(p) => push("probe_power_w", format!("{p:?}")),
        }
        push("detuning_rad_per_s", format!("{:?}", self.detuning_rad_per_s()));
        push(
            "detuning_over_omega_m",
            format!("{:?}", self.detuning_rad_per_s() / self.mech_frequency_rad_per_s),
        );
        match self.kerr {
            KerrSpec::ModeVolume(v) => {
                push("mode_volume_m3", format!("{v:?}"));
                push("u_interpretation", "mode_volume".to_string());
            }
            KerrSpec::Coefficient { value, unit } => {
                push("kerr_u", format!("{value:?}"));
                push("kerr_u_unit", kerr_unit_name(unit).to_string());
                push("u_interpretation", kerr_unit_note(unit));
            }
        }
        let describe = |keys: &[&'static str]| {
            if keys.is_empty() {
                "none".to_string()
            } else {
                keys.join(",")
            }
        };
        push("overrides_config", describe(&self.from_config));
        push("overrides_param", describe(&self.from_param));
        out
    }
}
