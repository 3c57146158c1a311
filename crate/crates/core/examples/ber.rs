//! Prints one BER curve: `ber <preset> <TD|FD|PS> <eta> [frames]`.

use std::time::Instant;

use ibi_core::simulate::ChannelSource;
use ibi_core::{run_ber, ChannelPreset, Domain, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let preset =
        ChannelPreset::from_name(args.get(1).map_or("mild_fractional", String::as_str)).ok_or("unknown preset")?;
    let domain: Domain = args.get(2).map_or("TD", String::as_str).parse()?;
    let eta: f64 = args.get(3).map_or(Ok(1.0), |s| s.parse())?;
    let frames: usize = args.get(4).map_or(Ok(100), |s| s.parse())?;
    let source = ChannelSource::PerFrame {
        profile: preset.profile(),
        id: preset.name().to_string(),
    };
    let snr: Vec<f64> = (0..=8).map(|k| 5.0 * k as f64).collect();
    let mut cfg = SimConfig::<f64>::reference(domain, eta, source, snr, 1);
    cfg.num_frames = frames;
    let start = Instant::now();
    let curve = run_ber(&cfg)?;
    for p in &curve.points {
        println!(
            "{:>5.1} dB  ber {:.3e}  ({} / {})",
            p.snr_db, p.ber, p.error_count, p.bit_count
        );
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
