use ibi_core::simulate::ChannelSource;
use ibi_core::{
    assemble_frame, build_basis, cross_correlation, delay_matrix, extract_block, generate_dpss, run_ber, ChannelPreset,
    ChannelSpec, Complex64, Domain, FrameLayout, PathSpec, SimConfig,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)),
        len,
    )
}

fn domain() -> impl Strategy<Value = Domain> {
    prop_oneof![Just(Domain::TD), Just(Domain::FD), Just(Domain::PS)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dpss_are_orthonormal_and_ordered(n in 2usize..64, w in 0.01f64..0.49, frac in 0.1f64..1.0) {
        let k = ((n as f64 * frac).ceil() as usize).clamp(1, n);
        let set = generate_dpss::<f64>(n, w, k).unwrap();
        let gram = set.sequences.transpose() * &set.sequences;
        prop_assert!((gram - DMatrix::<f64>::identity(k, k)).abs().max() < 1e-11);
        for pair in set.eigenvalues.windows(2) {
            prop_assert!(pair[0] >= pair[1]);
        }
        prop_assert!(set.eigenvalues.iter().all(|&l| l > 0.0 && l < 1.0));
    }

    #[test]
    fn dpss_match_dense_eigensolver(n in 2usize..=64, w in 0.02f64..0.48) {
        let set = generate_dpss::<f64>(n, w, n).unwrap();
        let dense = ibi_core::sinc_kernel_matrix::<f64>(n, w).unwrap();
        let eig = dense.clone().symmetric_eigen();
        let mut want: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (l, (got, expect)) in set.eigenvalues.iter().zip(&want).enumerate() {
            prop_assert!((got - expect.max(1e-300)).abs() < 1e-11, "order {l}: {got} vs {expect}");
        }
        // Trace identity: the full spectrum sums to N * 2W.
        let sum: f64 = want.iter().sum();
        prop_assert!((sum - 2.0 * w * n as f64).abs() < 1e-10);
        // Eigen-relation on well-separated, unclamped eigenvalues.
        for l in 0..n {
            let lam = set.eigenvalues[l];
            let gap = want.iter().enumerate().filter(|&(j, _)| j != l).map(|(_, &x)| (x - lam).abs()).fold(f64::INFINITY, f64::min);
            if gap > 1e-6 && lam > 1e-12 && lam < 1.0 - 1e-12 {
                let v = nalgebra::DVector::from_column_slice(set.sequence(l));
                let resid = (&dense * &v - v.scale(lam)).norm();
                prop_assert!(resid < 1e-10, "order {l}: residual {resid}");
            }
        }
    }

    #[test]
    fn cross_correlation_is_hermitian((a, b) in (1usize..24).prop_flat_map(|n| (complex_vec(n), complex_vec(n)))) {
        let rs = cross_correlation(&a, &b).unwrap();
        let sr = cross_correlation(&b, &a).unwrap();
        let m = rs.max_lag();
        for q in -m..=m {
            prop_assert!((sr.lag(q) - rs.lag(-q).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn delay_matrix_is_toeplitz(size in 2usize..24, delay in -8.0f64..8.0) {
        let d = delay_matrix::<f64>(size, delay);
        for i in 1..size {
            for j in 1..size {
                prop_assert!((d[(i, j)] - d[(i - 1, j - 1)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn integer_delay_is_exact_shift(size in 2usize..24, shift in 0i64..6) {
        let d = delay_matrix::<f64>(size, shift as f64);
        for i in 0..size {
            for j in 0..size {
                let want = if i as i64 - j as i64 == shift { 1.0 } else { 0.0 };
                prop_assert!(d[(i, j)].re == want && d[(i, j)].im == 0.0);
            }
        }
    }

    #[test]
    fn modulate_demodulate_round_trip(dom in domain(), n in 4usize..40, eta in 0.3f64..1.0, seed in any::<u64>()) {
        let basis = build_basis::<f64>(dom, n, eta).unwrap();
        prop_assert!(basis.orthonormality_error() < 1e-11);
        let symbols: Vec<Complex64> = (0..basis.used_dims)
            .map(|i| Complex64::new(((seed >> (i % 60)) & 1) as f64 - 0.5, (i as f64).sin()))
            .collect();
        let back = basis.demodulate(&basis.modulate(&symbols).unwrap()).unwrap();
        for (a, b) in symbols.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn assemble_extract_round_trip((blocks, n) in (1usize..6, 1usize..12)
        .prop_flat_map(|(l, n)| (prop::collection::vec(complex_vec(n), l), Just(n))), guard in 0usize..5) {
        let layout = FrameLayout::new(blocks.len(), n, guard).unwrap();
        let frame = assemble_frame(&layout, &blocks).unwrap();
        prop_assert_eq!(frame.len(), layout.total_length());
        for (l, b) in blocks.iter().enumerate() {
            prop_assert_eq!(&extract_block(&layout, &frame, l).unwrap(), b);
        }
    }

    #[test]
    fn channel_json_round_trip(paths in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.0f64..20.0, -0.05f64..0.05), 1..6)) {
        let paths: Vec<PathSpec<f64>> = paths.into_iter().map(|(a, b, d, f)| PathSpec::new(Complex64::new(a, b), d, f)).collect();
        prop_assume!(paths.iter().any(|p| p.gain.norm_sqr() > 1e-6));
        let spec = ChannelSpec::new(paths, true).unwrap();
        let back = ChannelSpec::<f64>::from_json(&spec.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.paths.len(), spec.paths.len());
        for (p, q) in spec.paths.iter().zip(&back.paths) {
            prop_assert_eq!(p.gain, q.gain);
            prop_assert_eq!(p.delay, q.delay);
            prop_assert_eq!(p.doppler, q.doppler);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn ber_is_deterministic_for_fixed_seed(seed in any::<u64>(), dom in domain()) {
        let source = ChannelSource::PerFrame { profile: ChannelPreset::MildFractional.profile(), id: "mild".into() };
        let mut cfg = SimConfig::<f64>::reference(dom, 0.9, source, vec![5.0, 15.0], seed);
        cfg.layout = FrameLayout::new(4, 32, 16).unwrap();
        cfg.num_frames = 3;
        let a = run_ber(&cfg).unwrap();
        let b = run_ber(&cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn channel_draw_is_deterministic(seed in any::<u64>()) {
        let a = ChannelPreset::SevereFractional.draw::<f64>(seed).unwrap();
        let b = ChannelPreset::SevereFractional.draw::<f64>(seed).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}
