//! Experiment configuration: JSON, unknown keys rejected, every field defaulted.

use std::fmt;
use std::io::Read;
use std::path::Path;

use ibi_core::channel::ChannelDocument;
use ibi_core::{ChannelPreset, ChannelSpec, Domain, FrameLayout, GuardMode, PsBandwidth};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 1;

/// Invalid configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    /// Block length.
    #[serde(rename = "N")]
    pub n: usize,
    /// Blocks per frame.
    #[serde(rename = "L")]
    pub l: usize,
    /// Guard length.
    #[serde(rename = "D")]
    pub d: usize,
    pub guard: GuardMode,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            n: 129,
            l: 21,
            d: 16,
            guard: GuardMode::Zero,
        }
    }
}

/// A named preset or an explicit path list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelConfig {
    Preset(String),
    Explicit(ChannelDocument),
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig::Preset(ChannelPreset::MildFractional.name().to_string())
    }
}

impl ChannelConfig {
    pub fn preset(&self) -> Option<ChannelPreset> {
        match self {
            ChannelConfig::Preset(name) => ChannelPreset::from_name(name),
            ChannelConfig::Explicit(_) => None,
        }
    }

    /// Realization used for S2IBI and bound sweeps (and for BER when explicit).
    pub fn realize(&self, seed: u64) -> Result<ChannelSpec<f64>, ConfigError> {
        match self {
            ChannelConfig::Preset(name) => {
                let preset = ChannelPreset::from_name(name).ok_or_else(|| invalid("channel", unknown_preset(name)))?;
                preset.draw(seed).map_err(|e| invalid("channel", e))
            }
            ChannelConfig::Explicit(doc) => {
                let spec = ChannelSpec::from_document(doc).map_err(|e| invalid("channel", e))?;
                Ok(match &doc.id {
                    Some(id) => spec.with_id(id.clone()),
                    None => spec.with_id("custom"),
                })
            }
        }
    }
}

fn unknown_preset(name: &str) -> String {
    format!("unknown preset {name:?}, expected one of mild_fractional, mild_integer, severe_fractional, severe_integer")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DpssConfig {
    pub length: usize,
    pub half_bandwidth: f64,
    pub order: usize,
}

impl Default for DpssConfig {
    fn default() -> Self {
        DpssConfig {
            length: 129,
            half_bandwidth: 0.45,
            order: 116,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub layout: LayoutConfig,
    pub domains: Vec<Domain>,
    pub eta: Vec<f64>,
    pub channel: ChannelConfig,
    pub snr_db: Vec<f64>,
    pub frames: usize,
    pub seed: u64,
    pub ps_bandwidth: PsBandwidth,
    /// Also compute the prolate-eigenvalue bound in `s2ibi`.
    pub bound: bool,
    pub dpss: DpssConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            layout: LayoutConfig::default(),
            domains: vec![Domain::TD, Domain::FD, Domain::PS],
            eta: vec![0.9, 0.92, 0.93, 0.95, 0.96, 0.98, 1.0],
            channel: ChannelConfig::default(),
            snr_db: (0..=8).map(|k| 5.0 * k as f64).collect(),
            frames: 100,
            seed: DEFAULT_SEED,
            ps_bandwidth: PsBandwidth::default(),
            bound: true,
            dpss: DpssConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, or standard input for `-`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = if path.as_os_str() == "-" {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| ConfigError(format!("stdin: {e}")))?;
            s
        } else {
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?
        };
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let l = &self.layout;
        if l.n == 0 {
            return Err(invalid("layout.N", "must be positive"));
        }
        if l.l == 0 {
            return Err(invalid("layout.L", "must be positive"));
        }
        if self.domains.is_empty() {
            return Err(invalid("domains", "must not be empty"));
        }
        if self.eta.is_empty() {
            return Err(invalid("eta", "must not be empty"));
        }
        for (i, &e) in self.eta.iter().enumerate() {
            if !(e > 0.0 && e <= 1.0) {
                return Err(invalid(&format!("eta[{i}]"), format!("{e} outside (0, 1]")));
            }
            if ibi_core::basis::used_dimensions(l.n, e) == 0 {
                return Err(invalid(
                    &format!("eta[{i}]"),
                    format!("{e} leaves no dimensions at N={}", l.n),
                ));
            }
        }
        if self.snr_db.is_empty() {
            return Err(invalid("snr_db", "must not be empty"));
        }
        if let Some((i, s)) = self.snr_db.iter().enumerate().find(|(_, s)| !s.is_finite()) {
            return Err(invalid(&format!("snr_db[{i}]"), format!("{s} is not finite")));
        }
        if self.frames == 0 {
            return Err(invalid("frames", "must be positive"));
        }
        if let PsBandwidth::Fixed(w) = self.ps_bandwidth {
            if !(w > 0.0 && w <= 0.5) {
                return Err(invalid("ps_bandwidth.fixed", format!("{w} outside (0, 0.5]")));
            }
        }
        let d = &self.dpss;
        if d.length == 0 {
            return Err(invalid("dpss.length", "must be positive"));
        }
        if !(d.half_bandwidth > 0.0 && d.half_bandwidth < 0.5) {
            return Err(invalid(
                "dpss.half_bandwidth",
                format!("{} outside (0, 0.5)", d.half_bandwidth),
            ));
        }
        if d.order == 0 || d.order > d.length {
            return Err(invalid("dpss.order", format!("must lie in 1..={}", d.length)));
        }
        self.channel.realize(self.seed)?;
        Ok(())
    }

    pub fn frame_layout(&self) -> Result<FrameLayout, ConfigError> {
        FrameLayout::new(self.layout.l, self.layout.n, self.layout.d)
            .and_then(|f| f.with_guard(self.layout.guard))
            .map_err(|e| invalid("layout", e))
    }
}
