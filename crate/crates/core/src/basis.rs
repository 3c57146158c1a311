//! Orthonormal signaling bases and guarded frame layout.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::prolate::generate_dpss;
use crate::scalar::{cis, Cplx, Real};

/// Signaling domain of a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    /// Time domain: unit impulses.
    TD,
    /// Frequency domain: unitary DFT columns.
    FD,
    /// Prolate spheroidal domain: Slepian sequences.
    PS,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::TD, Domain::FD, Domain::PS];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::TD => "TD",
            Domain::FD => "FD",
            Domain::PS => "PS",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TD" => Ok(Domain::TD),
            "FD" => Ok(Domain::FD),
            "PS" | "PD" => Ok(Domain::PS),
            other => Err(domain!("unknown signaling domain {other:?}")),
        }
    }
}

/// How the half-bandwidth of the prolate basis is chosen from `(M, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PsBandwidth {
    /// `W = (M + N) / (4N)`: the Slepian dimension `2NW` sits halfway
    /// between the used dimensions and the block length.
    #[default]
    Midpoint,
    /// `W = M / (2N)`: the Slepian dimension equals the used dimensions.
    SlepianDimension,
    /// A fixed half-bandwidth in `(0, 0.5]`.
    Fixed(f64),
}

impl PsBandwidth {
    pub fn half_bandwidth(self, used: usize, block: usize) -> f64 {
        let w = match self {
            PsBandwidth::Midpoint => (used + block) as f64 / (4.0 * block as f64),
            PsBandwidth::SlepianDimension => used as f64 / (2.0 * block as f64),
            PsBandwidth::Fixed(w) => w,
        };
        w.min(0.5)
    }
}

/// Number of used dimensions for a requested utilization: `round(eta N)`, at least one.
pub fn used_dimensions(block_length: usize, utilization: f64) -> usize {
    ((utilization * block_length as f64).round() as usize).clamp(1, block_length)
}

/// An `N x M` matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct SignalingBasis<T: Real> {
    pub domain: Domain,
    pub block_length: usize,
    pub used_dims: usize,
    /// Realized utilization `M / N`.
    pub utilization: T,
    pub matrix: DMatrix<Cplx<T>>,
    pub ps_half_bandwidth: Option<T>,
}

/// Builds a basis with the default prolate bandwidth rule.
pub fn build_basis<T: Real>(domain: Domain, block_length: usize, utilization: f64) -> Result<SignalingBasis<T>> {
    build_basis_with(domain, block_length, utilization, PsBandwidth::default())
}

/// Builds the `M = round(eta N)` leading columns of the domain's complete basis.
pub fn build_basis_with<T: Real>(
    domain: Domain,
    block_length: usize,
    utilization: f64,
    ps_bandwidth: PsBandwidth,
) -> Result<SignalingBasis<T>> {
    if block_length < 2 {
        return Err(domain!("block length must be at least 2, got {block_length}"));
    }
    if !(utilization > 0.0 && utilization <= 1.0) {
        return Err(domain!("utilization must lie in (0, 1], got {utilization}"));
    }
    let n = block_length;
    let m = used_dimensions(n, utilization);
    let zero = Complex::new(T::zero(), T::zero());
    let mut ps_half_bandwidth = None;
    let matrix = match domain {
        Domain::TD => DMatrix::from_fn(n, m, |i, j| {
            if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                zero
            }
        }),
        Domain::FD => {
            let scale = T::of_usize(n).sqrt().recip();
            let step = T::two_pi() / T::of_usize(n);
            DMatrix::from_fn(n, m, |i, k| cis(step * T::of_usize((i * k) % n)).scale(scale))
        }
        Domain::PS => {
            let w = ps_bandwidth.half_bandwidth(m, n);
            let set = generate_dpss(n, T::of(w), m)?;
            ps_half_bandwidth = Some(T::of(w));
            set.sequences.map(|x| Complex::new(x, T::zero()))
        }
    };
    Ok(SignalingBasis {
        domain,
        block_length: n,
        used_dims: m,
        utilization: T::of_usize(m) / T::of_usize(n),
        matrix,
        ps_half_bandwidth,
    })
}

impl<T: Real> SignalingBasis<T> {
    /// `x = O d`.
    pub fn modulate(&self, symbols: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        if symbols.len() != self.used_dims {
            return Err(domain!("expected {} symbols, got {}", self.used_dims, symbols.len()));
        }
        let d = DVector::from_column_slice(symbols);
        Ok((&self.matrix * d).data.into())
    }

    /// Matched filter `z = O^H y`.
    pub fn demodulate(&self, block: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        if block.len() != self.block_length {
            return Err(domain!(
                "expected a block of {} samples, got {}",
                self.block_length,
                block.len()
            ));
        }
        let y = DVector::from_column_slice(block);
        Ok((self.matrix.ad_mul(&y)).data.into())
    }

    pub fn column(&self, k: usize) -> Vec<Cplx<T>> {
        self.matrix.column(k).iter().copied().collect()
    }

    /// Largest deviation of `O^H O` from the identity.
    pub fn orthonormality_error(&self) -> T {
        let g = self.matrix.ad_mul(&self.matrix);
        let mut worst = T::zero();
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g[(i, j)] - Complex::new(target, T::zero())).norm_sqr().sqrt());
            }
        }
        worst
    }

    /// Writes the matrix as CSV with interleaved `re_k,im_k` columns, one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.used_dims)
            .flat_map(|k| [format!("re_{k}"), format!("im_{k}")])
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.block_length {
            let row: Vec<String> = (0..self.used_dims)
                .flat_map(|k| {
                    let z = self.matrix[(i, k)];
                    [
                        format!("{:.16e}", z.re.to_f64_lossy()),
                        format!("{:.16e}", z.im.to_f64_lossy()),
                    ]
                })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Guard placed in front of every block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GuardMode {
    #[default]
    Zero,
    /// Copy of the last `D` samples of the block.
    Cyclic,
}

/// `L` blocks of `N` samples, each preceded by a `D`-sample guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub num_blocks: usize,
    pub block_length: usize,
    pub guard_length: usize,
    #[serde(default)]
    pub guard: GuardMode,
}

impl FrameLayout {
    pub fn new(num_blocks: usize, block_length: usize, guard_length: usize) -> Result<Self> {
        if num_blocks == 0 || block_length == 0 {
            return Err(domain!("frame needs at least one block of positive length"));
        }
        Ok(FrameLayout {
            num_blocks,
            block_length,
            guard_length,
            guard: GuardMode::Zero,
        })
    }

    pub fn with_guard(mut self, guard: GuardMode) -> Result<Self> {
        if guard == GuardMode::Cyclic && self.guard_length > self.block_length {
            return Err(domain!("cyclic guard longer than the block"));
        }
        self.guard = guard;
        Ok(self)
    }

    /// `D + N`.
    pub fn stride(&self) -> usize {
        self.guard_length + self.block_length
    }

    pub fn total_length(&self) -> usize {
        self.num_blocks * self.stride()
    }

    /// Index of the first data sample of block `index`.
    pub fn block_start(&self, index: usize) -> usize {
        index * self.stride() + self.guard_length
    }

    pub fn center_block(&self) -> usize {
        self.num_blocks / 2
    }
}

/// Concatenates `[g, b_0, g, b_1, ..]` where `g` is the guard of each block.
pub fn assemble_frame<T: Real>(layout: &FrameLayout, blocks: &[Vec<Cplx<T>>]) -> Result<Vec<Cplx<T>>> {
    if blocks.len() != layout.num_blocks {
        return Err(domain!("expected {} blocks, got {}", layout.num_blocks, blocks.len()));
    }
    let n = layout.block_length;
    let d = layout.guard_length;
    let mut frame = Vec::with_capacity(layout.total_length());
    for (i, b) in blocks.iter().enumerate() {
        if b.len() != n {
            return Err(domain!("block {i} has {} samples, expected {n}", b.len()));
        }
        match layout.guard {
            GuardMode::Zero => frame.extend(std::iter::repeat_n(Complex::new(T::zero(), T::zero()), d)),
            GuardMode::Cyclic => frame.extend_from_slice(&b[n - d..]),
        }
        frame.extend_from_slice(b);
    }
    Ok(frame)
}

/// Data samples of block `index`, discarding its guard.
pub fn extract_block<T: Real>(layout: &FrameLayout, frame: &[Cplx<T>], index: usize) -> Result<Vec<Cplx<T>>> {
    if index >= layout.num_blocks {
        return Err(domain!("block index {index} out of range 0..{}", layout.num_blocks));
    }
    if frame.len() < layout.total_length() {
        return Err(domain!(
            "frame has {} samples, layout needs {}",
            frame.len(),
            layout.total_length()
        ));
    }
    let start = layout.block_start(index);
    Ok(frame[start..start + layout.block_length].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Cplx<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn td_full_is_identity() {
        let b = build_basis::<f64>(Domain::TD, 4, 1.0).unwrap();
        assert_eq!(b.matrix, DMatrix::identity(4, 4));
    }

    #[test]
    fn fd_full_is_unitary_dft() {
        let b = build_basis::<f64>(Domain::FD, 4, 1.0).unwrap();
        assert!(b.orthonormality_error() < 1e-15);
        assert!((b.matrix[(1, 1)] - Complex::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn utilization_rounding() {
        let b = build_basis::<f64>(Domain::TD, 129, 0.9).unwrap();
        assert_eq!(b.used_dims, 116);
        assert!((b.utilization - 116.0 / 129.0).abs() < 1e-15);
        let b = build_basis::<f64>(Domain::TD, 10, 0.01).unwrap();
        assert_eq!(b.used_dims, 1);
        assert!(build_basis::<f64>(Domain::TD, 10, 0.0).is_err());
        assert!(build_basis::<f64>(Domain::TD, 10, 1.2).is_err());
        assert!(build_basis::<f64>(Domain::TD, 1, 1.0).is_err());
    }

    #[test]
    fn ps_bandwidth_rules() {
        assert!((PsBandwidth::Midpoint.half_bandwidth(116, 129) - 245.0 / 516.0).abs() < 1e-15);
        assert!((PsBandwidth::SlepianDimension.half_bandwidth(116, 129) - 116.0 / 258.0).abs() < 1e-15);
        assert_eq!(PsBandwidth::Midpoint.half_bandwidth(129, 129), 0.5);
        let b = build_basis::<f64>(Domain::PS, 32, 0.75).unwrap();
        assert_eq!(b.ps_half_bandwidth, Some(56.0 / 128.0));
    }

    #[test]
    fn modulate_unit_and_zero() {
        let b = build_basis::<f64>(Domain::TD, 5, 1.0).unwrap();
        let mut d = vec![c(0.0); 5];
        d[0] = c(1.0);
        assert_eq!(b.modulate(&d).unwrap(), {
            let mut e = vec![c(0.0); 5];
            e[0] = c(1.0);
            e
        });
        let ps = build_basis::<f64>(Domain::PS, 16, 0.75).unwrap();
        assert!(ps.modulate(&[c(0.0); 12]).unwrap().iter().all(|z| z.norm() == 0.0));
        assert!(ps.modulate(&[c(0.0); 11]).is_err());
        assert!(ps.demodulate(&vec![c(0.0); 15]).is_err());
    }

    #[test]
    fn fd_modulation_matches_column_sum() {
        let b = build_basis::<f64>(Domain::FD, 4, 1.0).unwrap();
        let x = b.modulate(&[c(1.0); 4]).unwrap();
        // Sum of all unitary DFT columns concentrates on sample 0.
        for (n, z) in x.iter().enumerate() {
            let mut expect = Complex::new(0.0, 0.0);
            for k in 0..4 {
                expect += Complex::from_polar(0.5, std::f64::consts::TAU * (n * k) as f64 / 4.0);
            }
            assert!((z - expect).norm() < 1e-14);
        }
        assert!((x[0].re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ps_column_demodulates_to_unit_vector() {
        let b = build_basis::<f64>(Domain::PS, 24, 0.8).unwrap();
        let z = b.demodulate(&b.column(3)).unwrap();
        for (k, v) in z.iter().enumerate() {
            let target = if k == 3 { 1.0 } else { 0.0 };
            assert!((v - c(target)).norm() < 1e-10);
        }
    }

    #[test]
    fn orthogonal_complement_demodulates_to_zero() {
        let b = build_basis::<f64>(Domain::TD, 6, 0.5).unwrap();
        let mut y = vec![c(0.0); 6];
        y[4] = c(2.0);
        y[5] = Complex::new(0.0, -1.0);
        assert!(b.demodulate(&y).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn frame_assembly() {
        let layout = FrameLayout::new(1, 2, 2).unwrap();
        let f = assemble_frame(&layout, &[vec![c(1.0), c(1.0)]]).unwrap();
        assert_eq!(f, vec![c(0.0), c(0.0), c(1.0), c(1.0)]);
        assert_eq!(extract_block(&layout, &f, 0).unwrap(), vec![c(1.0), c(1.0)]);
        assert!(extract_block(&layout, &f, 1).is_err());
        assert!(assemble_frame(&layout, &[vec![c(1.0)]]).is_err());
        assert!(assemble_frame::<f64>(&layout, &[]).is_err());
    }

    #[test]
    fn reference_frame_length() {
        let layout = FrameLayout::new(21, 129, 16).unwrap();
        assert_eq!(layout.total_length(), 3045);
        let blocks = vec![vec![c(0.0); 129]; 21];
        let f = assemble_frame(&layout, &blocks).unwrap();
        assert_eq!(f.len(), 3045);
        assert!(f.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn cyclic_guard_copies_tail() {
        let layout = FrameLayout::new(2, 3, 2)
            .unwrap()
            .with_guard(GuardMode::Cyclic)
            .unwrap();
        let f = assemble_frame(&layout, &[vec![c(1.0), c(2.0), c(3.0)], vec![c(4.0), c(5.0), c(6.0)]]).unwrap();
        let expect: Vec<_> = [2.0, 3.0, 1.0, 2.0, 3.0, 5.0, 6.0, 4.0, 5.0, 6.0]
            .iter()
            .map(|&x| c(x))
            .collect();
        assert_eq!(f, expect);
        assert!(FrameLayout::new(1, 2, 3)
            .unwrap()
            .with_guard(GuardMode::Cyclic)
            .is_err());
    }

    #[test]
    fn domain_parsing() {
        assert_eq!("ps".parse::<Domain>().unwrap(), Domain::PS);
        assert!("xx".parse::<Domain>().is_err());
    }

    #[test]
    fn csv_export_shape() {
        let b = build_basis::<f64>(Domain::FD, 4, 0.5).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "re_0,im_0,re_1,im_1");
        assert_eq!(lines[1].split(',').count(), 4);
    }
}
