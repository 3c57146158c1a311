//! Discrete doubly-dispersive channels with fractional delays.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::{cis, sinc, Cplx, Real};

/// Identifier of the generator used for every random draw in the crate.
pub const PRNG_ID: &str = "ChaCha8Rng (rand_chacha 0.9)";

/// Delays within this distance of an integer are snapped onto it.
const INTEGER_SNAP: f64 = 1e-9;

/// One specular path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec<T: Real> {
    pub gain: Cplx<T>,
    /// Delay in samples.
    pub delay: T,
    /// Normalized Doppler shift in cycles per sample.
    pub doppler: T,
}

impl<T: Real> PathSpec<T> {
    pub fn new(gain: Cplx<T>, delay: T, doppler: T) -> Self {
        PathSpec { gain, delay, doppler }
    }

    pub fn delay_only(gain: Cplx<T>, delay: T) -> Self {
        PathSpec::new(gain, delay, T::zero())
    }

    /// Integer part of the delay.
    pub fn integer_delay(&self) -> i64 {
        self.delay.floor().to_i64().unwrap_or(0)
    }

    /// Fractional part of the delay, in `[0, 1)`.
    pub fn fractional_delay(&self) -> T {
        self.delay - self.delay.floor()
    }

    pub fn is_fractional(&self) -> bool {
        self.fractional_delay() > T::zero()
    }

    pub fn power(&self) -> T {
        self.gain.norm_sqr()
    }
}

/// A multipath channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec<T: Real> {
    pub paths: Vec<PathSpec<T>>,
    pub normalize_power: bool,
    /// Seed the gains were drawn with, if any.
    pub seed: Option<u64>,
    /// Free-form identifier carried into reports.
    pub id: String,
}

impl<T: Real> ChannelSpec<T> {
    /// Validates the paths and, if requested, rescales the gains to unit total power.
    pub fn new(paths: Vec<PathSpec<T>>, normalize_power: bool) -> Result<Self> {
        if paths.is_empty() {
            return Err(domain!("channel must contain at least one path"));
        }
        for (i, p) in paths.iter().enumerate() {
            let finite = p.delay.is_finite() && p.gain.re.is_finite() && p.gain.im.is_finite() && p.doppler.is_finite();
            if !finite {
                return Err(domain!("path {i} has a non-finite parameter"));
            }
            if p.delay < T::zero() {
                return Err(domain!("path {i} has negative delay {}", p.delay));
            }
        }
        let mut spec = ChannelSpec {
            paths,
            normalize_power,
            seed: None,
            id: "custom".to_string(),
        };
        if normalize_power {
            let total = spec.total_power();
            if total <= T::zero() {
                return Err(domain!("cannot normalize a channel with zero total power"));
            }
            let scale = total.sqrt().recip();
            for p in &mut spec.paths {
                p.gain = p.gain.scale(scale);
            }
        }
        Ok(spec)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn total_power(&self) -> T {
        self.paths.iter().fold(T::zero(), |acc, p| acc + p.power())
    }

    pub fn max_integer_delay(&self) -> i64 {
        self.paths.iter().map(PathSpec::integer_delay).max().unwrap_or(0)
    }

    pub fn has_doppler(&self) -> bool {
        self.paths.iter().any(|p| p.doppler != T::zero())
    }

    pub fn has_fractional_delay(&self) -> bool {
        self.paths.iter().any(PathSpec::is_fractional)
    }

    pub fn to_document(&self) -> ChannelDocument {
        ChannelDocument {
            id: Some(self.id.clone()),
            paths: self
                .paths
                .iter()
                .map(|p| PathDocument {
                    gain_re: p.gain.re.to_f64_lossy(),
                    gain_im: p.gain.im.to_f64_lossy(),
                    delay: p.delay.to_f64_lossy(),
                    doppler: p.doppler.to_f64_lossy(),
                })
                .collect(),
            normalized: self.normalize_power,
            seed: self.seed,
        }
    }

    /// Builds the spec from its JSON form. Gains are taken verbatim; a
    /// `normalized` document is trusted to already carry unit power.
    pub fn from_document(doc: &ChannelDocument) -> Result<Self> {
        let paths = doc
            .paths
            .iter()
            .map(|p| {
                PathSpec::new(
                    Complex::new(T::of(p.gain_re), T::of(p.gain_im)),
                    T::of(p.delay),
                    T::of(p.doppler),
                )
            })
            .collect();
        let mut spec = ChannelSpec::new(paths, false)?;
        spec.normalize_power = doc.normalized;
        spec.seed = doc.seed;
        if let Some(id) = &doc.id {
            spec.id = id.clone();
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ChannelDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }
}

/// Serialized path, `{"gain_re":..,"gain_im":..,"delay":..,"doppler":..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDocument {
    pub gain_re: f64,
    pub gain_im: f64,
    pub delay: f64,
    #[serde(default)]
    pub doppler: f64,
}

/// Serialized channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub paths: Vec<PathDocument>,
    pub normalized: bool,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// `size x size` fractional delay matrix, entry `(l, k) = sinc(l - k - delay)`.
pub fn delay_matrix<T: Real>(size: usize, delay: T) -> DMatrix<Cplx<T>> {
    let row = delay_generator(size, delay);
    DMatrix::from_fn(size, size, |l, k| Complex::new(row[l + size - 1 - k], T::zero()))
}

/// `sinc(d - delay)` for `d = -(size-1) ..= size-1`, stored at index `d + size - 1`.
fn delay_generator<T: Real>(size: usize, delay: T) -> Vec<T> {
    let span = size.saturating_sub(1) as i64;
    (-span..=span).map(|d| sinc(T::of_i64(d) - delay)).collect()
}

/// Diagonal Doppler modulation matrix, entry `(l, l) = e^{j 2 pi l doppler}`.
pub fn doppler_matrix<T: Real>(size: usize, doppler: T) -> DMatrix<Cplx<T>> {
    let mut m = DMatrix::zeros(size, size);
    for l in 0..size {
        m[(l, l)] = doppler_phase(l, doppler);
    }
    m
}

fn doppler_phase<T: Real>(index: usize, doppler: T) -> Cplx<T> {
    // Reduce l * nu modulo one before scaling by 2 pi.
    let cycles = T::of_usize(index) * doppler;
    cis(T::two_pi() * (cycles - cycles.round()))
}

/// Dense channel matrix `sum_p h_p D(nu_p) T(tau_p)`.
pub fn channel_matrix<T: Real>(spec: &ChannelSpec<T>, size: usize) -> DMatrix<Cplx<T>> {
    let mut h = DMatrix::<Cplx<T>>::zeros(size, size);
    for p in &spec.paths {
        let row = delay_generator(size, p.delay);
        for l in 0..size {
            let phase = p.gain * doppler_phase(l, p.doppler);
            for k in 0..size {
                h[(l, k)] += phase.scale(row[l + size - 1 - k]);
            }
        }
    }
    h
}

/// Parameters of an exponentially decaying tapped delay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialProfile {
    /// Amplitude decay rate per sample of delay.
    pub decay_rate: f64,
    pub tap_spacing: f64,
    pub max_delay: f64,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

impl ExponentialProfile {
    pub fn draw<T: Real>(&self, seed: u64) -> Result<ChannelSpec<T>> {
        exponential_profile(self.decay_rate, self.tap_spacing, self.max_delay, seed, self.normalize)
    }
}

/// The four test channels: mild/severe decay with integer/fractional tap grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelPreset {
    MildFractional,
    MildInteger,
    SevereFractional,
    SevereInteger,
}

impl ChannelPreset {
    pub const ALL: [ChannelPreset; 4] = [
        ChannelPreset::MildFractional,
        ChannelPreset::MildInteger,
        ChannelPreset::SevereFractional,
        ChannelPreset::SevereInteger,
    ];

    pub fn profile(self) -> ExponentialProfile {
        let (decay_rate, tap_spacing) = match self {
            ChannelPreset::MildFractional => (0.5, 0.1),
            ChannelPreset::MildInteger => (0.5, 1.0),
            ChannelPreset::SevereFractional => (0.05, 0.1),
            ChannelPreset::SevereInteger => (0.05, 1.0),
        };
        ExponentialProfile {
            decay_rate,
            tap_spacing,
            max_delay: 15.0,
            normalize: true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelPreset::MildFractional => "mild_fractional",
            ChannelPreset::MildInteger => "mild_integer",
            ChannelPreset::SevereFractional => "severe_fractional",
            ChannelPreset::SevereInteger => "severe_integer",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn draw<T: Real>(self, seed: u64) -> Result<ChannelSpec<T>> {
        Ok(self.profile().draw(seed)?.with_id(self.name()))
    }
}

/// Taps at `0, spacing, 2 spacing, ..., max_delay` with `|h(n)| = e^{-decay n}`
/// and i.i.d. uniform phases drawn from a seeded generator.
pub fn exponential_profile<T: Real>(
    decay_rate: f64,
    tap_spacing: f64,
    max_delay: f64,
    seed: u64,
    normalize: bool,
) -> Result<ChannelSpec<T>> {
    if !(decay_rate > 0.0 && decay_rate.is_finite()) {
        return Err(domain!("decay rate must be positive, got {decay_rate}"));
    }
    if !(tap_spacing > 0.0 && tap_spacing.is_finite()) {
        return Err(domain!("tap spacing must be positive, got {tap_spacing}"));
    }
    if !(max_delay >= tap_spacing && max_delay.is_finite()) {
        return Err(domain!(
            "max delay {max_delay} yields an empty tap set for spacing {tap_spacing}"
        ));
    }
    let count = (max_delay / tap_spacing + 1e-12).floor() as usize + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = (0..count)
        .map(|i| {
            let mut delay = i as f64 * tap_spacing;
            if (delay - delay.round()).abs() < INTEGER_SNAP {
                delay = delay.round();
            }
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let magnitude = (-decay_rate * delay).exp();
            PathSpec::delay_only(
                Complex::new(T::of(magnitude * phase.cos()), T::of(magnitude * phase.sin())),
                T::of(delay),
            )
        })
        .collect();
    let mut spec = ChannelSpec::new(paths, normalize)?;
    spec.seed = Some(seed);
    spec.id = format!("exp(decay={decay_rate},spacing={tap_spacing},max={max_delay})");
    Ok(spec)
}

/// Frame-length channel stored as one Toeplitz generator per distinct Doppler value.
///
/// Entry `(m, k)` equals `sum_nu e^{j 2 pi m nu} g_nu[m - k]`, the same as
/// [`channel_matrix`] without materializing the dense matrix.
#[derive(Debug, Clone)]
pub struct ChannelOperator<T: Real> {
    size: usize,
    groups: Vec<(T, Vec<Cplx<T>>)>,
}

impl<T: Real> ChannelOperator<T> {
    pub fn new(spec: &ChannelSpec<T>, size: usize) -> Self {
        let mut groups: Vec<(T, Vec<Cplx<T>>)> = Vec::new();
        let span = size.saturating_sub(1) as i64;
        for p in &spec.paths {
            let idx = match groups.iter().position(|(nu, _)| *nu == p.doppler) {
                Some(i) => i,
                None => {
                    groups.push((p.doppler, vec![Complex::new(T::zero(), T::zero()); 2 * size - 1]));
                    groups.len() - 1
                }
            };
            let g = &mut groups[idx].1;
            for (slot, d) in g.iter_mut().zip(-span..=span) {
                *slot += p.gain.scale(sinc(T::of_i64(d) - p.delay));
            }
        }
        ChannelOperator { size, groups }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, m: usize, k: usize) -> Cplx<T> {
        let off = m + self.size - 1 - k;
        self.groups
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (nu, g)| {
                if *nu == T::zero() {
                    acc + g[off]
                } else {
                    acc + doppler_phase(m, *nu) * g[off]
                }
            })
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(x.len(), self.size, "input length must match channel size");
        let n = self.size;
        let support: Vec<usize> = (0..n).filter(|&k| x[k] != Complex::new(T::zero(), T::zero())).collect();
        let mut y = vec![Complex::new(T::zero(), T::zero()); n];
        for (nu, g) in &self.groups {
            for (m, out) in y.iter_mut().enumerate() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for &k in &support {
                    acc += g[m + n - 1 - k] * x[k];
                }
                if *nu != T::zero() {
                    acc *= doppler_phase(m, *nu);
                }
                *out += acc;
            }
        }
        y
    }

    /// The `rows x cols` sub-block starting at `(row0, col0)`.
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> DMatrix<Cplx<T>> {
        DMatrix::from_fn(rows, cols, |a, b| self.entry(row0 + a, col0 + b))
    }
}
