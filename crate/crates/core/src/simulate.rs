//! Monte-Carlo QPSK link simulation with per-block LMMSE equalization.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{assemble_frame, build_basis_with, extract_block, Domain, FrameLayout, PsBandwidth, SignalingBasis};
use crate::channel::{ChannelOperator, ChannelSpec, ExponentialProfile};
use crate::error::{domain, Error, Result};
use crate::scalar::{Cplx, Real};

/// Two-sided 95% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Gray-mapped unit-energy QPSK: `(b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt 2`.
pub fn qpsk_map<T: Real>(bits: &[bool]) -> Result<Vec<Cplx<T>>> {
    if !bits.len().is_multiple_of(2) {
        return Err(domain!("QPSK needs an even number of bits, got {}", bits.len()));
    }
    let a = T::FRAC_1_SQRT_2();
    let level = |b: bool| if b { -a } else { a };
    Ok(bits
        .chunks_exact(2)
        .map(|p| Complex::new(level(p[0]), level(p[1])))
        .collect())
}

/// Hard decisions on each quadrature; a zero component decides bit 0.
pub fn qpsk_demap<T: Real>(symbols: &[Cplx<T>]) -> Vec<bool> {
    symbols
        .iter()
        .flat_map(|z| [z.re < T::zero(), z.im < T::zero()])
        .collect()
}

/// Noise variance per complex sample for an SNR in dB.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Adds circularly-symmetric complex Gaussian noise of variance `10^(-snr/10)`.
pub fn awgn<T: Real, R: Rng + ?Sized>(signal: &[Cplx<T>], snr_db: f64, rng: &mut R) -> Vec<Cplx<T>> {
    let sigma = (noise_variance(snr_db) / 2.0).sqrt();
    signal
        .iter()
        .map(|&x| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x + Complex::new(T::of(sigma * re), T::of(sigma * im))
        })
        .collect()
}

/// `(H^H H + sigma^2 I)^{-1} H^H z`; the unregularized case is the least-squares solution.
pub fn lmmse_equalize<T: Real>(
    block_channel: &DMatrix<Cplx<T>>,
    observation: &[Cplx<T>],
    noise_var: T,
) -> Result<Vec<Cplx<T>>> {
    if observation.len() != block_channel.nrows() {
        return Err(domain!(
            "observation length {} does not match channel rows {}",
            observation.len(),
            block_channel.nrows()
        ));
    }
    let z = DMatrix::from_column_slice(observation.len(), 1, observation);
    let x = lmmse_solve(block_channel, &z, noise_var)?;
    Ok(x.column(0).iter().copied().collect())
}

/// LMMSE estimates for several observations at once (one per column of `z`).
pub fn lmmse_solve<T: Real>(h: &DMatrix<Cplx<T>>, z: &DMatrix<Cplx<T>>, noise_var: T) -> Result<DMatrix<Cplx<T>>> {
    if noise_var < T::zero() || !noise_var.is_finite() {
        return Err(domain!(
            "noise variance must be finite and non-negative, got {noise_var}"
        ));
    }
    let mut gram = h.ad_mul(h);
    for i in 0..gram.nrows() {
        gram[(i, i)] += Complex::new(noise_var, T::zero());
    }
    let rhs = h.ad_mul(z);
    if noise_var > T::zero() {
        if let Some(chol) = gram.clone().cholesky() {
            return Ok(chol.solve(&rhs));
        }
    }
    let singular = || Error::Numerical("equalizer normal matrix is singular".into());
    let lu = gram.lu();
    if !lu.is_invertible() {
        return Err(singular());
    }
    let x = lu.solve(&rhs).ok_or_else(singular)?;
    if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(singular());
    }
    Ok(x)
}

/// Channel used by a BER run.
#[derive(Debug, Clone)]
pub enum ChannelSource<T: Real> {
    /// Same realization in every frame.
    Fixed(ChannelSpec<T>),
    /// Fresh tap phases in every frame, drawn from a frame-derived seed.
    PerFrame { profile: ExponentialProfile, id: String },
}

impl<T: Real> ChannelSource<T> {
    pub fn id(&self) -> &str {
        match self {
            ChannelSource::Fixed(spec) => &spec.id,
            ChannelSource::PerFrame { id, .. } => id,
        }
    }

    fn realize(&self, seed: u64, frame: usize) -> Result<ChannelSpec<T>> {
        match self {
            ChannelSource::Fixed(spec) => Ok(spec.clone()),
            ChannelSource::PerFrame { profile, id } => Ok(profile
                .draw::<T>(derive_seed(seed, frame as u64, u64::MAX))?
                .with_id(id.clone())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Equalizer {
    #[default]
    Lmmse,
}

/// Parameters of one BER curve.
#[derive(Debug, Clone)]
pub struct SimConfig<T: Real> {
    pub domain: Domain,
    pub utilization: f64,
    pub ps_bandwidth: PsBandwidth,
    pub layout: FrameLayout,
    pub channel: ChannelSource<T>,
    pub snr_grid_db: Vec<f64>,
    pub num_frames: usize,
    pub seed: u64,
    pub equalizer: Equalizer,
}

impl<T: Real> SimConfig<T> {
    /// Reference layout (21 blocks of 129 samples, 16-sample zero guards), 100 frames.
    pub fn reference(
        domain: Domain,
        utilization: f64,
        channel: ChannelSource<T>,
        snr_grid_db: Vec<f64>,
        seed: u64,
    ) -> Self {
        SimConfig {
            domain,
            utilization,
            ps_bandwidth: PsBandwidth::default(),
            layout: FrameLayout::new(21, 129, 16).expect("reference layout"),
            channel,
            snr_grid_db,
            num_frames: 100,
            seed,
            equalizer: Equalizer::Lmmse,
        }
    }
}

/// One SNR point of a BER curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub ber: f64,
    pub bit_count: u64,
    pub error_count: u64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerFingerprint {
    pub domain: Domain,
    pub eta: f64,
    pub used_dims: usize,
    pub channel_id: String,
    pub seed: u64,
    pub num_frames: usize,
    pub layout: FrameLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
    pub fingerprint: BerFingerprint,
}

/// Wilson score interval for `errors` out of `trials` at 95% confidence.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// SplitMix64-style mixing of a base seed with stream coordinates.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Genie per-block model `P^H H_{l,l} P`.
pub fn block_channel<T: Real>(
    basis: &SignalingBasis<T>,
    op: &ChannelOperator<T>,
    layout: &FrameLayout,
    block: usize,
) -> DMatrix<Cplx<T>> {
    let start = layout.block_start(block);
    let h = op.block(start, start, layout.block_length, layout.block_length);
    basis.matrix.ad_mul(&(h * &basis.matrix))
}

/// Runs the Monte-Carlo BER simulation. Deterministic for a fixed config.
pub fn run_ber<T: Real>(config: &SimConfig<T>) -> Result<BerCurve> {
    if config.snr_grid_db.is_empty() {
        return Err(domain!("SNR grid must not be empty"));
    }
    if config.num_frames == 0 {
        return Err(domain!("at least one frame is required"));
    }
    let layout = config.layout;
    let basis = build_basis_with::<T>(
        config.domain,
        layout.block_length,
        config.utilization,
        config.ps_bandwidth,
    )?;
    let points = config.snr_grid_db.len();

    let counts = (0..config.num_frames)
        .into_par_iter()
        .map(|frame| simulate_frame(config, &basis, frame))
        .try_reduce(
            || vec![0u64; points],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;

    let bits_per_point = 2 * (basis.used_dims * layout.num_blocks * config.num_frames) as u64;
    let points = config
        .snr_grid_db
        .iter()
        .zip(counts)
        .map(|(&snr_db, errors)| {
            let (ci_low, ci_high) = wilson_interval(errors, bits_per_point);
            BerPoint {
                snr_db,
                ber: errors as f64 / bits_per_point as f64,
                bit_count: bits_per_point,
                error_count: errors,
                ci_low,
                ci_high,
            }
        })
        .collect();
    Ok(BerCurve {
        points,
        fingerprint: BerFingerprint {
            domain: config.domain,
            eta: basis.utilization.to_f64_lossy(),
            used_dims: basis.used_dims,
            channel_id: config.channel.id().to_string(),
            seed: config.seed,
            num_frames: config.num_frames,
            layout,
        },
    })
}

/// Bit errors per SNR point for one frame.
fn simulate_frame<T: Real>(config: &SimConfig<T>, basis: &SignalingBasis<T>, frame: usize) -> Result<Vec<u64>> {
    let layout = &config.layout;
    let m = basis.used_dims;
    let l_blocks = layout.num_blocks;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, frame as u64, 0));

    let bits: Vec<bool> = (0..2 * m * l_blocks).map(|_| rng.random::<bool>()).collect();
    let symbols = qpsk_map::<T>(&bits)?;
    let blocks = symbols
        .chunks_exact(m)
        .map(|d| basis.modulate(d))
        .collect::<Result<Vec<_>>>()?;
    let tx = assemble_frame(layout, &blocks)?;

    let spec = config.channel.realize(config.seed, frame)?;
    let op = ChannelOperator::new(&spec, layout.total_length());
    let rx = op.apply(&tx);

    // A delay-only channel is Toeplitz, so every block sees the same model.
    let shared = (!spec.has_doppler()).then(|| block_channel(basis, &op, layout, 0));
    let models: Vec<DMatrix<Cplx<T>>> = match &shared {
        Some(_) => Vec::new(),
        None => (0..l_blocks).map(|l| block_channel(basis, &op, layout, l)).collect(),
    };

    let mut errors = Vec::with_capacity(config.snr_grid_db.len());
    for (k, &snr_db) in config.snr_grid_db.iter().enumerate() {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, frame as u64, k as u64 + 1));
        let noisy = awgn(&rx, snr_db, &mut noise_rng);
        let sigma2 = T::of(noise_variance(snr_db));
        let mut z = DMatrix::<Cplx<T>>::zeros(m, l_blocks);
        for l in 0..l_blocks {
            let y = extract_block(layout, &noisy, l)?;
            z.set_column(l, &nalgebra::DVector::from_vec(basis.demodulate(&y)?));
        }
        let estimates = match &shared {
            Some(h) => lmmse_solve(h, &z, sigma2)?,
            None => {
                let mut est = DMatrix::zeros(m, l_blocks);
                for (l, model) in models.iter().enumerate() {
                    let col = lmmse_solve(model, &z.columns(l, 1).into_owned(), sigma2)?;
                    est.set_column(l, &col.column(0));
                }
                est
            }
        };
        let mut count = 0u64;
        for l in 0..l_blocks {
            let decided = qpsk_demap(estimates.column(l).as_slice());
            let sent = &bits[2 * m * l..2 * m * (l + 1)];
            count += decided.iter().zip(sent).filter(|(a, b)| a != b).count() as u64;
        }
        errors.push(count);
    }
    Ok(errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PathSpec;

    #[test]
    fn qpsk_constellation() {
        let s = qpsk_map::<f64>(&[false, false, true, true, false, true, true, false]).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s[0], Complex::new(a, a));
        assert_eq!(s[1], Complex::new(-a, -a));
        for z in &s {
            assert!((z.norm_sqr() - 1.0).abs() < 1e-15);
        }
        assert!(qpsk_map::<f64>(&[true]).is_err());
    }

    #[test]
    fn qpsk_decisions() {
        assert_eq!(qpsk_demap(&[Complex::new(0.9_f64, 0.1)]), vec![false, false]);
        assert_eq!(qpsk_demap(&[Complex::new(-0.1_f64, -0.9)]), vec![true, true]);
        assert_eq!(qpsk_demap(&[Complex::new(0.0_f64, -0.0)]), vec![false, false]);
    }

    #[test]
    fn awgn_vanishes_at_high_snr() {
        let x: Vec<Cplx<f64>> = (0..64).map(|i| Complex::new(i as f64, 1.0)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = awgn(&x, 300.0, &mut rng);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn awgn_is_reproducible() {
        let x = vec![Complex::new(0.0_f64, 0.0); 32];
        let a = awgn(&x, 3.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = awgn(&x, 3.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn lmmse_identity_cases() {
        let h = DMatrix::<Cplx<f64>>::identity(3, 3);
        let z = vec![Complex::new(1.0, 2.0), Complex::new(-3.0, 0.5), Complex::new(0.0, 1.0)];
        assert_eq!(lmmse_equalize(&h, &z, 0.0).unwrap(), z);
        let half = lmmse_equalize(&h, &z, 1.0).unwrap();
        for (a, b) in half.iter().zip(&z) {
            assert!((a - b * 0.5).norm() < 1e-15);
        }
        assert!(lmmse_equalize(&h, &z[..2], 0.0).is_err());
        assert!(lmmse_equalize(&h, &z, -1.0).is_err());
    }

    #[test]
    fn singular_zero_forcing_reports_error() {
        let h = DMatrix::<Cplx<f64>>::zeros(2, 2);
        let z = vec![Complex::new(1.0, 0.0); 2];
        assert!(matches!(lmmse_equalize(&h, &z, 0.0), Err(Error::Numerical(_))));
        assert!(lmmse_equalize(&h, &z, 0.1).is_ok());
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0, 1000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn noiseless_identity_channel_is_error_free() {
        let spec = ChannelSpec::new(vec![PathSpec::delay_only(Complex::new(1.0, 0.0), 0.0)], true).unwrap();
        for d in Domain::ALL {
            let mut cfg = SimConfig::reference(d, 0.9, ChannelSource::Fixed(spec.clone()), vec![300.0], 5);
            cfg.layout = FrameLayout::new(4, 16, 2).unwrap();
            cfg.num_frames = 3;
            let curve = run_ber(&cfg).unwrap();
            assert_eq!(curve.points[0].error_count, 0);
            assert_eq!(curve.points[0].bit_count, 2 * 14 * 4 * 3);
        }
    }

    #[test]
    fn config_validation() {
        let spec = ChannelSpec::new(vec![PathSpec::delay_only(Complex::new(1.0, 0.0), 0.0)], true).unwrap();
        let mut cfg = SimConfig::reference(Domain::TD, 1.0, ChannelSource::Fixed(spec), vec![], 5);
        assert!(run_ber(&cfg).is_err());
        cfg.snr_grid_db = vec![10.0];
        cfg.num_frames = 0;
        assert!(run_ber(&cfg).is_err());
    }
}
