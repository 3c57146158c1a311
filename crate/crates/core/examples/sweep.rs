//! Prints S2IBI and its lower bound versus utilization for one preset channel.
//!
//! `cargo run --release -p ibi-core --example sweep -- severe_fractional`

use std::time::Instant;

use ibi_core::{s2ibi_sweep, ChannelPreset, Domain, FrameLayout, SweepOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "mild_fractional".into());
    let preset = ChannelPreset::from_name(&name).ok_or("unknown preset")?;
    let spec = preset.draw::<f64>(1)?;
    let layout = FrameLayout::new(21, 129, 16)?;
    let etas = [1.0, 0.98, 0.96, 0.95, 0.93, 0.92, 0.9];
    let start = Instant::now();
    let reports = s2ibi_sweep(&Domain::ALL, &etas, &spec, &layout, SweepOptions::default())?;
    println!("domain  eta    s2ibi_db  bound_db  trunc_db");
    for r in &reports {
        println!(
            "{:<6} {:.3} {:>9.3} {:>9.3} {:>9.2e}",
            r.fingerprint.domain,
            r.fingerprint.eta,
            r.s2ibi_db,
            r.s2ibi_lower_bound_db.unwrap_or(f64::NAN),
            r.truncation_delta_db.unwrap_or(f64::NAN)
        );
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
