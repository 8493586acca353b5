use erflab::measures::{apply_slocc, measure_pure, MeasureKind, SloccElement};
use erflab::random::{gaussian_matrix, haar_unitary, random_density_matrix, seeded};
use erflab::states::{
    local_entropies, random_pure, von_neumann_entropy, w_state, DensityOperator, MultiState,
};
use erflab::tensor::{
    det, hermitian_eig, inner, kron, partial_trace_matrix, ComplexMatrix, Dims, Permutation, C64,
};
use proptest::prelude::*;

fn kinds() -> Vec<MeasureKind> {
    vec![
        MeasureKind::Concurrence,
        MeasureKind::GConcurrence(3),
        MeasureKind::Srt,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(seed in any::<u64>()) {
        let mut rng = seeded(seed, 1);
        let a = gaussian_matrix(&mut rng, 2, 2);
        let b = gaussian_matrix(&mut rng, 3, 3);
        let c = gaussian_matrix(&mut rng, 2, 2);
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace(seed in any::<u64>(), keep in 0usize..3) {
        let dims = Dims::new(vec![2, 3, 2]).unwrap();
        let mut rng = seeded(seed, 2);
        let rho = random_density_matrix(&mut rng, 12, 4);
        let (red, kept) = partial_trace_matrix(&rho, &dims, &[keep]).unwrap();
        prop_assert_eq!(kept.as_slice(), &[dims.as_slice()[keep]]);
        prop_assert!((red.trace() - rho.trace()).norm() < 1e-12);
    }

    #[test]
    fn permutations_preserve_inner_products(seed in any::<u64>(), which in 0usize..6) {
        let dims = Dims::qubits(3);
        let perm = Permutation::all(3)[which].clone();
        let a = random_pure(&dims, seed);
        let b = random_pure(&dims, seed.wrapping_add(1));
        let pa = perm.apply_vector(a.amplitudes(), &dims).unwrap();
        let pb = perm.apply_vector(b.amplitudes(), &dims).unwrap();
        prop_assert!((inner(&pa, &pb) - inner(a.amplitudes(), b.amplitudes())).norm() < 1e-12);
        let back = perm.inverse().apply_vector(&pa, &dims).unwrap();
        prop_assert!(back.iter().zip(a.amplitudes()).all(|(x, y)| (x - y).norm() < 1e-15));
    }

    #[test]
    fn measures_are_slocc_invariant_and_homogeneous(seed in any::<u64>(), scale in 0.1f64..3.0) {
        for kind in kinds() {
            let dims = kind.dims();
            let psi = random_pure(&dims, seed);
            let e = measure_pure(kind, &psi).unwrap();
            let g = SloccElement::random(&mut seeded(seed, 3), &dims);
            let moved = measure_pure(kind, &apply_slocc(&g, &psi).unwrap()).unwrap();
            prop_assert!((moved - e).abs() <= 1e-8 * e.max(1e-12), "{:?}: {} vs {}", kind, moved, e);
            let scaled = measure_pure(kind, &psi.scaled(scale)).unwrap();
            prop_assert!((scaled - scale * scale * e).abs() <= 1e-8 * (scale * scale * e).max(1e-12));
        }
    }

    #[test]
    fn srt_is_permutation_invariant(seed in any::<u64>(), which in 0usize..6) {
        let dims = Dims::qubits(3);
        let psi = random_pure(&dims, seed);
        let perm = Permutation::all(3)[which].clone();
        let a = measure_pure(MeasureKind::Srt, &psi).unwrap();
        let b = measure_pure(MeasureKind::Srt, &psi.permuted(&perm).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn local_unitaries_leave_entropies_unchanged(seed in any::<u64>()) {
        let dims = Dims::qubits(3);
        let psi = random_pure(&dims, seed);
        let mut rng = seeded(seed, 4);
        let us: Vec<ComplexMatrix> = (0..3).map(|_| haar_unitary(&mut rng, 2)).collect();
        let moved = psi.apply_product(&us).unwrap();
        for (x, y) in local_entropies(&psi).iter().zip(local_entropies(&moved)) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn entropy_is_concave(seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut rng = seeded(seed, 5);
        let dims = Dims::new(vec![4]).unwrap();
        let a = random_density_matrix(&mut rng, 4, 2);
        let b = random_density_matrix(&mut rng, 4, 3);
        let mix = &a.scale_real(t) + &b.scale_real(1.0 - t);
        let s = |m: ComplexMatrix| von_neumann_entropy(&DensityOperator::new(dims.clone(), m).unwrap());
        prop_assert!(s(mix) >= t * s(a) + (1.0 - t) * s(b) - 1e-10);
    }

    #[test]
    fn random_pure_states_are_rank_one(seed in any::<u64>()) {
        let psi = random_pure(&Dims::new(vec![2, 3]).unwrap(), seed);
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(psi.to_density().unwrap().rank(1e-10), 1);
    }

    #[test]
    fn determinant_is_multiplicative(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = seeded(seed, 6);
        let a = gaussian_matrix(&mut rng, n, n);
        let b = gaussian_matrix(&mut rng, n, n);
        let lhs = det(&(&a * &b)).unwrap();
        let rhs = det(&a).unwrap() * det(&b).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn hermitian_eig_reconstructs(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = seeded(seed, 7);
        let g = gaussian_matrix(&mut rng, n, n);
        let h = (&g + &g.adjoint()).scale_real(0.5);
        let (vals, vecs) = hermitian_eig(&h).unwrap();
        prop_assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let diag: Vec<C64> = vals.iter().map(|&v| C64::new(v, 0.0)).collect();
        let back = &(&vecs * &ComplexMatrix::from_diag(&diag)) * &vecs.adjoint();
        prop_assert!(back.max_abs_diff(&h) < 1e-10);
    }
}

#[test]
fn haar_states_have_uniform_mean_weight() {
    let dims = Dims::qubits(2);
    let n = 4000;
    let mut mean = [0.0; 4];
    for seed in 0..n {
        for (m, a) in mean.iter_mut().zip(random_pure(&dims, seed).amplitudes()) {
            *m += a.norm_sqr() / n as f64;
        }
    }
    // each weight is Beta(1, 3) with standard deviation ~0.19; 5 sigma of the mean
    for m in mean {
        assert!((m - 0.25).abs() < 5.0 * 0.194 / (n as f64).sqrt(), "{m}");
    }
}

#[test]
fn states_outside_the_orbit_have_zero_measure() {
    let product = MultiState::basis(Dims::qubits(3), &[0, 1, 0]).unwrap();
    assert!(measure_pure(MeasureKind::Srt, &product).unwrap() < 1e-10);
    assert!(measure_pure(MeasureKind::Srt, &w_state()).unwrap() < 1e-10);
    // biseparable: Bell pair on qubits 1,2 with qubit 3 in |0>
    let s = 0.5f64.sqrt();
    let amps = [s, 0.0, 0.0, 0.0, 0.0, 0.0, s, 0.0]
        .map(|x| C64::new(x, 0.0))
        .to_vec();
    let bisep = MultiState::new(Dims::qubits(3), amps).unwrap();
    assert!(measure_pure(MeasureKind::Srt, &bisep).unwrap() < 1e-10);
    for seed in 0..20 {
        let mut rng = seeded(seed, 8);
        let a = erflab::random::gaussian_vector(&mut rng, 3);
        let b = erflab::random::gaussian_vector(&mut rng, 3);
        let amps = a
            .iter()
            .flat_map(|x| b.iter().map(move |y| x * y))
            .collect();
        let prod = MultiState::new(Dims::new(vec![3, 3]).unwrap(), amps).unwrap();
        assert!(measure_pure(MeasureKind::GConcurrence(3), &prod).unwrap() < 1e-10);
    }
}
