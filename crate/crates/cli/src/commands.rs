//! Subcommand bodies. Each writes its tables through [`RunOutputs`].

use std::fmt;
use std::path::Path;

use ibi_core::simulate::ChannelSource;
use ibi_core::{
    build_basis_with, generate_dpss, ibi_bound, run_ber, s2ibi_sweep, ChannelPreset, Domain, SimConfig, SweepOptions,
};
use log::info;
use rayon::prelude::*;

use crate::config::{ChannelConfig, ConfigError, DpssConfig, ExperimentConfig};
use crate::output::{full, RunOutputs};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<ibi_core::Error> for CliError {
    fn from(e: ibi_core::Error) -> Self {
        match e {
            ibi_core::Error::Numerical(m) => CliError::Numerical(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub fn dpss_dump(params: &DpssConfig, out: &mut RunOutputs, file: &Path) -> Result<(), CliError> {
    info!(
        "dpss: N={} W={} K={}",
        params.length, params.half_bandwidth, params.order
    );
    let set = generate_dpss::<f64>(params.length, params.half_bandwidth, params.order)?;
    let mut w = out.csv(file)?;
    w.write_record(set.eigenvalues.iter().map(|&l| full(l)))?;
    for n in 0..set.length {
        w.write_record(set.sequences.row(n).iter().map(|&x| full(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn s2ibi(cfg: &ExperimentConfig, out: &mut RunOutputs, file: &Path) -> Result<(), CliError> {
    let layout = cfg.frame_layout()?;
    let spec = cfg.channel.realize(cfg.seed)?;
    info!(
        "s2ibi: channel {} ({} paths), {} cells",
        spec.id,
        spec.paths.len(),
        cfg.domains.len() * cfg.eta.len()
    );
    let options = SweepOptions {
        ps_bandwidth: cfg.ps_bandwidth,
        with_bound: cfg.bound,
    };
    let reports = s2ibi_sweep(&cfg.domains, &cfg.eta, &spec, &layout, options)?;
    let mut w = out.csv(file)?;
    w.write_record([
        "domain",
        "eta",
        "s2ibi_db",
        "s2ibi_bound_db",
        "ibi_energy",
        "bound_energy",
        "channel_id",
        "seed",
    ])?;
    let cells = cfg.domains.iter().flat_map(|&d| cfg.eta.iter().map(move |&e| (d, e)));
    for ((domain, eta), r) in cells.zip(&reports) {
        if let Some(delta) = r.truncation_delta_db {
            if delta.abs() > 0.1 {
                log::warn!("{domain} eta={eta}: frame truncation changes S2IBI by {delta:.3} dB");
            }
        }
        let opt = |x: Option<f64>| x.map(full).unwrap_or_default();
        w.write_record([
            domain.to_string(),
            eta.to_string(),
            full(r.s2ibi_db),
            opt(r.s2ibi_lower_bound_db),
            full(r.total_energy),
            opt(r.bound_energy),
            spec.id.clone(),
            cfg.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn bound(cfg: &ExperimentConfig, out: &mut RunOutputs, file: &Path) -> Result<(), CliError> {
    let layout = cfg.frame_layout()?;
    let spec = cfg.channel.realize(cfg.seed)?;
    let cells: Vec<(Domain, f64)> = cfg
        .domains
        .iter()
        .flat_map(|&d| cfg.eta.iter().map(move |&e| (d, e)))
        .collect();
    info!("bound: channel {}, {} cells", spec.id, cells.len());
    let bounds = cells
        .par_iter()
        .map(|&(d, eta)| {
            let basis = build_basis_with::<f64>(d, layout.block_length, eta, cfg.ps_bandwidth)?;
            ibi_bound(&basis, &layout, &spec, basis.used_dims)
        })
        .collect::<ibi_core::Result<Vec<_>>>()?;
    let mut w = out.csv(file)?;
    w.write_record([
        "domain",
        "eta",
        "subset_size",
        "bound_energy",
        "s2ibi_bound_db",
        "vacuous",
        "channel_id",
        "seed",
    ])?;
    for (&(domain, eta), b) in cells.iter().zip(&bounds) {
        w.write_record([
            domain.to_string(),
            eta.to_string(),
            b.subset_size.to_string(),
            full(b.energy),
            full(b.s2ibi_lower_bound_db),
            b.vacuous.to_string(),
            spec.id.clone(),
            cfg.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn channel_source(channel: &ChannelConfig, seed: u64) -> Result<ChannelSource<f64>, CliError> {
    Ok(match channel.preset() {
        Some(p) => ChannelSource::PerFrame {
            profile: p.profile(),
            id: p.name().to_string(),
        },
        None => ChannelSource::Fixed(channel.realize(seed)?),
    })
}

pub fn ber(cfg: &ExperimentConfig, out: &mut RunOutputs, file: &Path) -> Result<(), CliError> {
    let layout = cfg.frame_layout()?;
    let source = channel_source(&cfg.channel, cfg.seed)?;
    let mut w = out.csv(file)?;
    w.write_record([
        "domain", "eta", "snr_db", "ber", "errors", "bits", "ci_low", "ci_high", "seed",
    ])?;
    for &domain in &cfg.domains {
        for &eta in &cfg.eta {
            info!("ber: {domain} eta={eta} over {} frames", cfg.frames);
            let sim = SimConfig {
                ps_bandwidth: cfg.ps_bandwidth,
                layout,
                num_frames: cfg.frames,
                ..SimConfig::reference(domain, eta, source.clone(), cfg.snr_db.clone(), cfg.seed)
            };
            let curve = run_ber(&sim)?;
            for p in &curve.points {
                w.write_record([
                    domain.to_string(),
                    eta.to_string(),
                    p.snr_db.to_string(),
                    full(p.ber),
                    p.error_count.to_string(),
                    p.bit_count.to_string(),
                    full(p.ci_low),
                    full(p.ci_high),
                    cfg.seed.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// S2IBI and BER tables for every channel preset.
pub fn reproduce(cfg: &ExperimentConfig, out: &mut RunOutputs) -> Result<(), CliError> {
    for preset in [
        ChannelPreset::MildFractional,
        ChannelPreset::MildInteger,
        ChannelPreset::SevereFractional,
        ChannelPreset::SevereInteger,
    ] {
        let run = ExperimentConfig {
            channel: ChannelConfig::Preset(preset.name().to_string()),
            ..cfg.clone()
        };
        let name = preset.name();
        s2ibi(&run, out, Path::new(&format!("s2ibi_{name}.csv")))?;
        ber(&run, out, Path::new(&format!("ber_{name}.csv")))?;
    }
    Ok(())
}
