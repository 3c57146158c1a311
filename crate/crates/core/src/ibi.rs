//! Inter-block interference: cross-correlations, the fractional shift
//! operator, exact IBI energy and its prolate-eigenvalue upper bound.
//!
//! The exact energy of waveform `r` in the victim block is
//!
//! ```text
//! E_r = sum_p |h_p|^2 sum_{j != l} sum_s |sum_q c_rs[q] sinc(q - (j - l)(N + D) - tau_p)|^2
//! ```
//!
//! which is evaluated as `sum_s c_rs^T K c_rs` with the real symmetric
//! kernel `K = sum_{p,j} |h_p|^2 k_{p,j} k_{p,j}^T`. Channels with Doppler or
//! cyclic guards fall back to explicit channel-matrix blocks.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{build_basis_with, Domain, FrameLayout, GuardMode, PsBandwidth, SignalingBasis};
use crate::channel::{ChannelOperator, ChannelSpec, PathSpec};
use crate::error::{domain, Result};
use crate::prolate::generate_dpss;
use crate::scalar::{bandlimited_kernel, sinc, to_db, Cplx, Real};

/// Half-bandwidth of the fractional shift operator (full normalized band).
pub const OPERATOR_HALF_BANDWIDTH: f64 = 0.5;

/// Extra blocks added on each side of the frame for the truncation diagnostic.
pub const TRUNCATION_PROBE_BLOCKS: usize = 2;

/// `c_rs[q] = sum_n conj(p_r[n]) p_s[n - q]` for `q = -(N-1) ..= N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrelation<T: Real> {
    pub values: Vec<Cplx<T>>,
    pub row_index: usize,
    pub col_index: usize,
}

impl<T: Real> CrossCorrelation<T> {
    /// `N`, the length of the correlated waveforms.
    pub fn waveform_length(&self) -> usize {
        self.values.len().div_ceil(2)
    }

    pub fn max_lag(&self) -> i64 {
        self.waveform_length() as i64 - 1
    }

    pub fn lag(&self, q: i64) -> Cplx<T> {
        let m = self.max_lag();
        if q < -m || q > m {
            Complex::new(T::zero(), T::zero())
        } else {
            self.values[(q + m) as usize]
        }
    }
}

/// Cross-correlation of two equal-length waveforms.
pub fn cross_correlation<T: Real>(p_r: &[Cplx<T>], p_s: &[Cplx<T>]) -> Result<CrossCorrelation<T>> {
    correlate_indexed(p_r, p_s, 0, 0)
}

fn correlate_indexed<T: Real>(p_r: &[Cplx<T>], p_s: &[Cplx<T>], r: usize, s: usize) -> Result<CrossCorrelation<T>> {
    let n = p_r.len();
    if n == 0 || p_s.len() != n {
        return Err(domain!(
            "cross-correlation needs equal non-empty lengths, got {} and {}",
            n,
            p_s.len()
        ));
    }
    let span = n as i64 - 1;
    let values = (-span..=span)
        .map(|q| {
            let lo = q.max(0) as usize;
            let hi = (n as i64 + q.min(0)) as usize;
            (lo..hi).fold(Complex::new(T::zero(), T::zero()), |acc, i| {
                acc + p_r[i].conj() * p_s[(i as i64 - q) as usize]
            })
        })
        .collect();
    Ok(CrossCorrelation {
        values,
        row_index: r,
        col_index: s,
    })
}

/// Cross-correlation of two basis columns.
pub fn basis_cross_correlation<T: Real>(basis: &SignalingBasis<T>, r: usize, s: usize) -> Result<CrossCorrelation<T>> {
    if r >= basis.used_dims || s >= basis.used_dims {
        return Err(domain!("waveform index out of range 0..{}", basis.used_dims));
    }
    correlate_indexed(&basis.column(r), &basis.column(s), r, s)
}

/// Band-limited fractional shift of a sequence, evaluated on `[-window, window]`.
///
/// `seq[i]` sits at index `i - center`. Output sample `k` (stored at
/// `k + window`) is `sum_q seq[q] sinc(q - shift - k)`.
pub fn bandlimited_shift<T: Real>(seq: &[Cplx<T>], center: usize, shift: T, window: usize) -> Result<Vec<Cplx<T>>> {
    bandlimited_shift_with_bandwidth(seq, center, shift, window, T::of(OPERATOR_HALF_BANDWIDTH))
}

/// [`bandlimited_shift`] with kernel `2W sinc(2W x)`.
pub fn bandlimited_shift_with_bandwidth<T: Real>(
    seq: &[Cplx<T>],
    center: usize,
    shift: T,
    window: usize,
    half_bandwidth: T,
) -> Result<Vec<Cplx<T>>> {
    if window == 0 {
        return Err(domain!("shift window half-width must be at least 1"));
    }
    if center >= seq.len() {
        return Err(domain!(
            "center index {center} outside sequence of length {}",
            seq.len()
        ));
    }
    if !(half_bandwidth > T::zero() && half_bandwidth <= T::of(0.5)) {
        return Err(domain!("operator half-bandwidth must lie in (0, 0.5]"));
    }
    let w = window as i64;
    Ok((-w..=w)
        .map(|k| {
            seq.iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (i, &x)| {
                    let q = T::of_i64(i as i64 - center as i64);
                    acc + x.scale(bandlimited_kernel(q - shift - T::of_i64(k), half_bandwidth))
                })
        })
        .collect())
}

/// Energy outside `[-inner, inner]` of a sequence given on `[-window, window]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEnergy<T> {
    pub energy: T,
    /// `|seq[-window]|^2 + |seq[window]|^2`: how much the window edge still carries.
    pub truncation: T,
}

pub fn tail_energy<T: Real>(seq: &[Cplx<T>], inner_half_width: usize) -> Result<TailEnergy<T>> {
    if seq.len().is_multiple_of(2) {
        return Err(domain!("windowed sequence must have odd length, got {}", seq.len()));
    }
    let window = seq.len() / 2;
    if inner_half_width >= window {
        return Err(domain!(
            "inner half-width {inner_half_width} must be below window {window}"
        ));
    }
    let energy = seq
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(window) > inner_half_width)
        .fold(T::zero(), |acc, (_, z)| acc + z.norm_sqr());
    let truncation = seq[0].norm_sqr() + seq[seq.len() - 1].norm_sqr();
    Ok(TailEnergy { energy, truncation })
}

/// Identifies the configuration a report was computed for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub domain: Domain,
    /// Realized utilization `M / N`.
    pub eta: f64,
    pub used_dims: usize,
    pub channel_id: String,
    pub seed: Option<u64>,
    pub layout: FrameLayout,
}

/// Interference energies for the center block of a frame, unit-energy symbols.
#[derive(Debug, Clone)]
pub struct IbiReport<T: Real> {
    pub per_waveform_energy: Vec<T>,
    pub total_energy: T,
    /// `-10 log10(mean_r E_r)`.
    pub s2ibi_db: T,
    pub bound_energy: Option<T>,
    pub s2ibi_lower_bound_db: Option<T>,
    /// S2IBI change when the frame grows by [`TRUNCATION_PROBE_BLOCKS`] on each side.
    pub truncation_delta_db: Option<T>,
    pub fingerprint: Fingerprint,
}

/// Result of the prolate-eigenvalue IBI bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbiBound<T> {
    pub energy: T,
    pub subset_size: usize,
    /// `-10 log10(energy / subset_size)`.
    pub s2ibi_lower_bound_db: T,
    /// No path has a fractional delay, so the bound is trivially zero.
    pub vacuous: bool,
}

fn s2ibi_from_mean<T: Real>(mean: T) -> T {
    if mean <= T::zero() {
        T::max_value().unwrap_or(T::of(f64::MAX))
    } else {
        -to_db(mean)
    }
}

fn check_consistent<T: Real>(basis: &SignalingBasis<T>, layout: &FrameLayout) -> Result<()> {
    if basis.block_length != layout.block_length {
        return Err(domain!(
            "basis block length {} differs from layout block length {}",
            basis.block_length,
            layout.block_length
        ));
    }
    Ok(())
}

/// Block offsets `j - l` of the interfering blocks for the center block.
fn interferer_offsets(num_blocks: usize) -> Vec<i64> {
    let l = (num_blocks / 2) as i64;
    (0..num_blocks as i64).map(|j| j - l).filter(|&d| d != 0).collect()
}

/// Real and imaginary parts of the basis, `M x N` (transposed).
struct SplitBasis<T: Real> {
    re_t: DMatrix<T>,
    im_t: Option<DMatrix<T>>,
    n: usize,
    m: usize,
}

impl<T: Real> SplitBasis<T> {
    fn new(basis: &SignalingBasis<T>) -> Self {
        let re_t = basis.matrix.map(|z| z.re).transpose();
        let is_real = basis.matrix.iter().all(|z| z.im == T::zero());
        let im_t = (!is_real).then(|| basis.matrix.map(|z| z.im).transpose());
        SplitBasis {
            re_t,
            im_t,
            n: basis.block_length,
            m: basis.used_dims,
        }
    }

    /// Real and imaginary parts of `C_r[s, q] = c_rs[q]`, `M x (2N - 1)`.
    fn correlation_rows(&self, r: usize) -> (DMatrix<T>, Option<DMatrix<T>>) {
        let n = self.n;
        let q_len = 2 * n - 1;
        // R[m, q] = conj(p_r[m + q])
        let mut x = DMatrix::<T>::zeros(n, q_len);
        let mut y = self.im_t.as_ref().map(|_| DMatrix::<T>::zeros(n, q_len));
        for qi in 0..q_len {
            let q = qi as i64 - (n as i64 - 1);
            for m in 0..n {
                let idx = m as i64 + q;
                if idx < 0 || idx >= n as i64 {
                    continue;
                }
                let idx = idx as usize;
                x[(m, qi)] = self.re_t[(r, idx)];
                if let (Some(y), Some(im)) = (y.as_mut(), self.im_t.as_ref()) {
                    y[(m, qi)] = -im[(r, idx)];
                }
            }
        }
        match (&self.im_t, y) {
            (Some(b), Some(y)) => {
                let c_re = &self.re_t * &x - b * &y;
                let c_im = &self.re_t * &y + b * &x;
                (c_re, Some(c_im))
            }
            _ => (&self.re_t * &x, None),
        }
    }
}

/// `sum_{i,j} a[i,j] b[i,j]`.
fn frobenius_dot<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn row_dots<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    frobenius_dot(a, b)
}

/// Kernel `K = sum |h_p|^2 k k^T` over the given block offsets.
fn interference_kernel<T: Real>(paths: &[PathSpec<T>], offsets: &[i64], stride: usize, n: usize) -> DMatrix<T> {
    let q_len = 2 * n - 1;
    let span = n as i64 - 1;
    let mut columns: Vec<T> = Vec::new();
    let mut count = 0;
    for p in paths {
        let weight = p.power().sqrt();
        if weight == T::zero() {
            continue;
        }
        for &d in offsets {
            let shift = T::of_i64(d * stride as i64) + p.delay;
            let start = columns.len();
            let mut nonzero = false;
            for q in -span..=span {
                let v = sinc(T::of_i64(q) - shift);
                nonzero |= v != T::zero();
                columns.push(weight * v);
            }
            if nonzero {
                count += 1;
            } else {
                columns.truncate(start);
            }
        }
    }
    if count == 0 {
        return DMatrix::zeros(q_len, q_len);
    }
    let v = DMatrix::from_vec(q_len, count, columns);
    &v * v.transpose()
}

/// Accumulated correlation statistics of a basis against an interference kernel.
struct CorrelationPass<T: Real> {
    per_waveform: Vec<T>,
    /// `sum_{r,s < M} Re(c_rs c_rs^H)`.
    gram_full: DMatrix<T>,
    /// Same, restricted to `r, s < subset`.
    gram_subset: Option<DMatrix<T>>,
}

fn correlation_pass<T: Real>(split: &SplitBasis<T>, kernel: &DMatrix<T>, subset: Option<usize>) -> CorrelationPass<T> {
    let q_len = 2 * split.n - 1;
    let m = split.m;
    let sub = subset.filter(|&k| k < m);
    let zero_gram = || DMatrix::<T>::zeros(q_len, q_len);
    let (mut per, gram_full, gram_subset) = (0..m)
        .into_par_iter()
        .fold(
            || (Vec::new(), zero_gram(), sub.map(|_| zero_gram())),
            |(mut per, mut gram, mut gram_sub), r| {
                let (c_re, c_im) = split.correlation_rows(r);
                let mut e = row_dots(&(&c_re * kernel), &c_re);
                gram += c_re.tr_mul(&c_re);
                if let Some(c_im) = &c_im {
                    e += row_dots(&(c_im * kernel), c_im);
                    gram += c_im.tr_mul(c_im);
                }
                if let (Some(k), Some(g)) = (sub, gram_sub.as_mut()) {
                    if r < k {
                        let top = c_re.rows(0, k);
                        *g += top.tr_mul(&top);
                        if let Some(c_im) = &c_im {
                            let top = c_im.rows(0, k);
                            *g += top.tr_mul(&top);
                        }
                    }
                }
                per.push((r, e));
                (per, gram, gram_sub)
            },
        )
        .reduce(
            || (Vec::new(), zero_gram(), sub.map(|_| zero_gram())),
            |(mut pa, ga, sa), (pb, gb, sb)| {
                pa.extend(pb);
                let s = match (sa, sb) {
                    (Some(a), Some(b)) => Some(a + b),
                    (a, _) => a,
                };
                (pa, ga + gb, s)
            },
        );
    per.sort_by_key(|(r, _)| *r);
    CorrelationPass {
        per_waveform: per.into_iter().map(|(_, e)| e).collect(),
        gram_full,
        gram_subset,
    }
}

type KernelMap<T> = HashMap<(usize, usize), Arc<DMatrix<T>>>;

/// Cache of bound kernels `B = sum_l lambda_l (1 - lambda_l) s_l[2n] s_l[2n']`,
/// keyed by `(N_p, N)`.
#[derive(Default)]
pub struct BoundKernelCache<T: Real> {
    kernels: Mutex<KernelMap<T>>,
}

impl<T: Real> BoundKernelCache<T> {
    pub fn new() -> Self {
        BoundKernelCache {
            kernels: Mutex::new(HashMap::new()),
        }
    }

    pub fn get(&self, half_length: usize, block_length: usize) -> Result<Arc<DMatrix<T>>> {
        if let Some(k) = self
            .kernels
            .lock()
            .expect("cache lock")
            .get(&(half_length, block_length))
        {
            return Ok(k.clone());
        }
        let k = Arc::new(bound_kernel(half_length, block_length)?);
        self.kernels
            .lock()
            .expect("cache lock")
            .insert((half_length, block_length), k.clone());
        Ok(k)
    }

    /// Builds all kernels the channel needs, in parallel.
    pub fn prefetch(&self, spec: &ChannelSpec<T>, layout: &FrameLayout) -> Result<()> {
        let mut keys: Vec<usize> = spec
            .paths
            .iter()
            .filter(|p| p.is_fractional())
            .map(|p| bound_half_length(layout, p))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.par_iter()
            .try_for_each(|&np| self.get(np, layout.block_length).map(|_| ()))
    }
}

/// Half-width `N_p = (N + D) - 1 - floor(tau_p)` of the window whose tail is bounded.
///
/// The nearest interfering sample of the shifted correlation sits at
/// `-(N + D - floor(tau_p))`, which must lie strictly outside `[-N_p, N_p]`.
fn bound_half_length<T: Real>(layout: &FrameLayout, path: &PathSpec<T>) -> usize {
    (layout.stride() as i64 - 1 - path.integer_delay()).max(1) as usize
}

fn bound_kernel<T: Real>(half_length: usize, block_length: usize) -> Result<DMatrix<T>> {
    let len = 4 * half_length + 1;
    let w = T::of(0.5 * OPERATOR_HALF_BANDWIDTH);
    let set = generate_dpss(len, w, len)?;
    let q_len = 2 * block_length - 1;
    let span = block_length as i64 - 1;
    let mut s_even = DMatrix::<T>::zeros(q_len, len);
    for l in 0..len {
        let lambda = set.eigenvalues[l];
        let weight = (lambda * (T::one() - lambda)).max(T::zero()).sqrt();
        for (qi, q) in (-span..=span).enumerate() {
            if let Some(v) = set.centered(l, 2 * q) {
                s_even[(qi, l)] = weight * v;
            }
        }
    }
    Ok(&s_even * s_even.transpose())
}

/// Exact IBI energy per waveform of the center block.
pub fn ibi_energy_exact<T: Real>(
    basis: &SignalingBasis<T>,
    layout: &FrameLayout,
    spec: &ChannelSpec<T>,
) -> Result<IbiReport<T>> {
    analyze(basis, layout, spec, None, None)
}

/// Prolate-eigenvalue upper bound on the IBI energy of the first `subset_size` waveforms.
pub fn ibi_bound<T: Real>(
    basis: &SignalingBasis<T>,
    layout: &FrameLayout,
    spec: &ChannelSpec<T>,
    subset_size: usize,
) -> Result<IbiBound<T>> {
    check_consistent(basis, layout)?;
    if subset_size == 0 || subset_size > basis.used_dims {
        return Err(domain!(
            "subset size must lie in 1..={}, got {subset_size}",
            basis.used_dims
        ));
    }
    let cache = BoundKernelCache::new();
    let split = SplitBasis::new(basis);
    let q_len = 2 * basis.block_length - 1;
    let pass = correlation_pass(&split, &DMatrix::zeros(q_len, q_len), Some(subset_size));
    let gram = pass.gram_subset.as_ref().unwrap_or(&pass.gram_full);
    bound_from_gram(gram, layout, spec, subset_size, &cache)
}

fn bound_from_gram<T: Real>(
    gram: &DMatrix<T>,
    layout: &FrameLayout,
    spec: &ChannelSpec<T>,
    subset_size: usize,
    cache: &BoundKernelCache<T>,
) -> Result<IbiBound<T>> {
    let w = T::of(OPERATOR_HALF_BANDWIDTH);
    let mut by_length: HashMap<usize, T> = HashMap::new();
    for p in spec.paths.iter().filter(|p| p.is_fractional()) {
        *by_length.entry(bound_half_length(layout, p)).or_insert(T::zero()) += p.power();
    }
    let vacuous = by_length.is_empty();
    let mut keys: Vec<_> = by_length.keys().copied().collect();
    keys.sort_unstable();
    let mut energy = T::zero();
    for np in keys {
        let kernel = cache.get(np, layout.block_length)?;
        energy += by_length[&np] * frobenius_dot(&kernel, gram) / (w * w);
    }
    Ok(IbiBound {
        energy,
        subset_size,
        s2ibi_lower_bound_db: s2ibi_from_mean(energy / T::of_usize(subset_size)),
        vacuous,
    })
}

fn analyze<T: Real>(
    basis: &SignalingBasis<T>,
    layout: &FrameLayout,
    spec: &ChannelSpec<T>,
    bound_subset: Option<usize>,
    cache: Option<&BoundKernelCache<T>>,
) -> Result<IbiReport<T>> {
    check_consistent(basis, layout)?;
    let fingerprint = Fingerprint {
        domain: basis.domain,
        eta: basis.utilization.to_f64_lossy(),
        used_dims: basis.used_dims,
        channel_id: spec.id.clone(),
        seed: spec.seed,
        layout: *layout,
    };
    if spec.has_doppler() || layout.guard != GuardMode::Zero {
        let per = direct_per_waveform(basis, layout, spec)?;
        let mut report = report_from(per, fingerprint);
        if let Some(k) = bound_subset {
            let b = ibi_bound(basis, layout, spec, k)?;
            report.bound_energy = Some(b.energy);
            report.s2ibi_lower_bound_db = Some(b.s2ibi_lower_bound_db);
        }
        return Ok(report);
    }

    let n = basis.block_length;
    let offsets = interferer_offsets(layout.num_blocks);
    let kernel = interference_kernel(&spec.paths, &offsets, layout.stride(), n);
    let split = SplitBasis::new(basis);
    let pass = correlation_pass(&split, &kernel, bound_subset);

    let mut report = report_from(pass.per_waveform, fingerprint);

    let extended = interferer_offsets(layout.num_blocks + 2 * TRUNCATION_PROBE_BLOCKS);
    let extra: Vec<i64> = extended.into_iter().filter(|d| !offsets.contains(d)).collect();
    let extra_kernel = interference_kernel(&spec.paths, &extra, layout.stride(), n);
    let extra_energy = frobenius_dot(&extra_kernel, &pass.gram_full);
    let m = T::of_usize(basis.used_dims);
    let wider = s2ibi_from_mean((report.total_energy + extra_energy) / m);
    report.truncation_delta_db = Some(report.s2ibi_db - wider);

    if let Some(k) = bound_subset {
        let owned;
        let cache = match cache {
            Some(c) => c,
            None => {
                owned = BoundKernelCache::new();
                &owned
            }
        };
        let gram = pass.gram_subset.as_ref().unwrap_or(&pass.gram_full);
        let b = bound_from_gram(gram, layout, spec, k, cache)?;
        report.bound_energy = Some(b.energy);
        report.s2ibi_lower_bound_db = Some(b.s2ibi_lower_bound_db);
    }
    Ok(report)
}

fn report_from<T: Real>(per_waveform_energy: Vec<T>, fingerprint: Fingerprint) -> IbiReport<T> {
    let total_energy = per_waveform_energy.iter().fold(T::zero(), |a, &b| a + b);
    let mean = total_energy / T::of_usize(per_waveform_energy.len().max(1));
    IbiReport {
        per_waveform_energy,
        total_energy,
        s2ibi_db: s2ibi_from_mean(mean),
        bound_energy: None,
        s2ibi_lower_bound_db: None,
        truncation_delta_db: None,
        fingerprint,
    }
}

/// Transmit waveforms including the guard, `(D + N) x M`.
fn guarded_basis<T: Real>(basis: &SignalingBasis<T>, layout: &FrameLayout) -> DMatrix<Cplx<T>> {
    let n = basis.block_length;
    let d = layout.guard_length;
    DMatrix::from_fn(d + n, basis.used_dims, |i, k| {
        if i >= d {
            basis.matrix[(i - d, k)]
        } else {
            match layout.guard {
                GuardMode::Zero => Complex::new(T::zero(), T::zero()),
                GuardMode::Cyclic => basis.matrix[(n - d + i, k)],
            }
        }
    })
}

/// Per-waveform IBI from explicit single-path channel-matrix blocks.
///
/// Handles Doppler and cyclic guards; cost grows with paths times blocks.
pub fn direct_per_waveform<T: Real>(
    basis: &SignalingBasis<T>,
    layout: &FrameLayout,
    spec: &ChannelSpec<T>,
) -> Result<Vec<T>> {
    check_consistent(basis, layout)?;
    let n = basis.block_length;
    let l = layout.center_block();
    let stride = layout.stride();
    let total = layout.total_length();
    let tx = guarded_basis(basis, layout);
    let rx_start = layout.block_start(l);
    let per_path: Vec<Vec<T>> = spec
        .paths
        .par_iter()
        .map(|p| {
            let single = ChannelSpec {
                paths: vec![PathSpec::new(Complex::new(T::one(), T::zero()), p.delay, p.doppler)],
                normalize_power: false,
                seed: None,
                id: String::new(),
            };
            let op = ChannelOperator::new(&single, total);
            let mut e = vec![T::zero(); basis.used_dims];
            for j in (0..layout.num_blocks).filter(|&j| j != l) {
                let h = op.block(rx_start, j * stride, n, stride);
                let lam = basis.matrix.ad_mul(&(h * &tx));
                for (r, acc) in e.iter_mut().enumerate() {
                    *acc += lam.row(r).iter().fold(T::zero(), |a, z| a + z.norm_sqr());
                }
            }
            let w = p.power();
            e.into_iter().map(|x| x * w).collect()
        })
        .collect();
    let mut e = vec![T::zero(); basis.used_dims];
    for v in per_path {
        for (a, b) in e.iter_mut().zip(v) {
            *a += b;
        }
    }
    Ok(e)
}

/// Options shared by every cell of an S2IBI sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub ps_bandwidth: PsBandwidth,
    pub with_bound: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            ps_bandwidth: PsBandwidth::default(),
            with_bound: true,
        }
    }
}

/// One report per `(domain, eta)`, in domain-major order.
pub fn s2ibi_sweep<T: Real>(
    domains: &[Domain],
    etas: &[f64],
    spec: &ChannelSpec<T>,
    layout: &FrameLayout,
    options: SweepOptions,
) -> Result<Vec<IbiReport<T>>> {
    let cache = BoundKernelCache::new();
    if options.with_bound {
        cache.prefetch(spec, layout)?;
    }
    let cells: Vec<(Domain, f64)> = domains
        .iter()
        .flat_map(|&d| etas.iter().map(move |&e| (d, e)))
        .collect();
    cells
        .par_iter()
        .map(|&(d, eta)| {
            let basis = build_basis_with::<T>(d, layout.block_length, eta, options.ps_bandwidth)?;
            let subset = options.with_bound.then_some(basis.used_dims);
            analyze(&basis, layout, spec, subset, Some(&cache))
        })
        .collect()
}

/// Tail energies of shifted correlation sequences for a grid of shifts.
#[derive(Debug, Clone)]
pub struct ConjectureRow<T> {
    pub row_index: usize,
    pub col_index: usize,
    /// `(shift, tail energy)` pairs.
    pub tails: Vec<(T, T)>,
    /// Shifts whose tail exceeded the half-sample tail.
    pub violations: Vec<T>,
}

/// Compares the tail energy at a half-sample shift against every other shift
/// on the grid, for the given waveform pairs.
///
/// Tails within roundoff of the correlation energy (`eps * sum |c|^2`) are not
/// counted as violations.
pub fn half_shift_tail_check<T: Real>(
    basis: &SignalingBasis<T>,
    pairs: &[(usize, usize)],
    shifts: &[T],
    inner_half_width: usize,
    window: usize,
) -> Result<Vec<ConjectureRow<T>>> {
    let half = T::of(0.5);
    pairs
        .iter()
        .map(|&(r, s)| {
            let c = basis_cross_correlation(basis, r, s)?;
            let center = c.max_lag() as usize;
            let tail_at = |tau: T| -> Result<T> {
                let shifted = bandlimited_shift(&c.values, center, tau, window)?;
                Ok(tail_energy(&shifted, inner_half_width)?.energy)
            };
            let reference = tail_at(half)?;
            let floor = T::eps() * c.values.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
            let mut tails = Vec::with_capacity(shifts.len());
            let mut violations = Vec::new();
            for &tau in shifts {
                let t = tail_at(tau)?;
                if t > reference * (T::one() + T::of(1e-9)) + floor {
                    violations.push(tau);
                }
                tails.push((tau, t));
            }
            Ok(ConjectureRow {
                row_index: r,
                col_index: s,
                tails,
                violations,
            })
        })
        .collect()
}
