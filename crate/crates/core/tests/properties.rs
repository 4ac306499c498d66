use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use robertson::algebra::{ModeSystem, OperatorMatrix, QuantumState};
use robertson::linalg::symplectic_form;
use robertson::moments::{inequality_report, trace_i_sigma_j, uncertainty_pair};
use robertson::ris::{
    canonical_observables, canonical_ris, normalizability, recover_canonical_ris, squared_amplitude_observables,
    squared_amplitude_ris, su11_ris, Parity,
};
use robertson::transform::{
    invariant_suite, transform_operators, transform_sigma, williamson_diagonalize, CongruenceMap, MapClass,
};
use robertson::{Error, C64};
use robertson_oracle::sampler::{random_state, Sample, StateKind};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn cnormal(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(normal(rng), normal(rng))
}

fn random_hermitian(rng: &mut ChaCha8Rng, system: &ModeSystem) -> OperatorMatrix {
    let d = system.total_dim();
    let a = DMatrix::from_fn(d, d, |_, _| cnormal(rng));
    let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    OperatorMatrix::new(h, system.clone(), d).unwrap()
}

fn state_from(sample: Sample, system: ModeSystem) -> QuantumState {
    match sample {
        Sample::Pure(v) => QuantumState::pure_normalized(v, system).unwrap(),
        Sample::Mixed(rho) => QuantumState::mixed(rho, system).unwrap(),
    }
}

fn kind(i: u8) -> StateKind {
    [StateKind::Pure, StateKind::Mixed, StateKind::GaussianLike][i as usize % 3]
}

/// A random matrix with positive determinant scaled to det 1.
fn random_sl(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let mut m = DMatrix::from_fn(n, n, |_, _| normal(rng)) + DMatrix::identity(n, n);
        let d = m.determinant();
        if d.abs() < 0.1 {
            continue;
        }
        if d < 0.0 {
            m.row_mut(0).neg_mut();
        }
        return m / d.abs().powf(1.0 / n as f64);
    }
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| normal(rng));
    &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.2
}

fn bogoliubov(rng: &mut ChaCha8Rng, n: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    // the Williamson map of a random SPD matrix is a random symplectic map
    let sigma = random_spd(rng, 2 * n) * 0.5;
    let w = williamson_diagonalize(&sigma).unwrap();
    robertson::ris::symplectic_to_bogoliubov(&w.map.lambda).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn robertson_and_product_relations(seed in any::<u64>(), k in 0u8..3, n_idx in 0usize..4) {
        let n = [2usize, 3, 4, 6][n_idx];
        let system = ModeSystem::fock(1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<OperatorMatrix> = (0..n).map(|_| random_hermitian(&mut rng, &system)).collect();
        let state = state_from(random_state(&[8], kind(k), seed), system);
        let pair = uncertainty_pair(&ops, &state).unwrap();
        let report = inequality_report(&pair, &[], None).unwrap();
        prop_assert!(report.robertson_gap >= -1e-8, "robertson gap {}", report.robertson_gap);
        prop_assert!(report.product_gap >= -1e-8, "product gap {}", report.product_gap);
        let min_eig = pair.sigma.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min_eig >= -1e-10);
        if n % 2 == 1 {
            prop_assert!(pair.det_c().abs() < 1e-12);
        }
        if n == 2 {
            let t = trace_i_sigma_j(&pair.sigma, 1).unwrap();
            prop_assert!((t - 2.0 * pair.det_sigma()).abs() < 1e-12 * t.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn congruence_both_ways(seed in any::<u64>(), n in 2usize..5) {
        let system = ModeSystem::fock(1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<OperatorMatrix> = (0..n).map(|_| random_hermitian(&mut rng, &system)).collect();
        let state = state_from(random_state(&[8], StateKind::Mixed, seed), system);
        let lambda = DMatrix::from_fn(n, n, |_, _| normal(&mut rng)) + DMatrix::identity(n, n) * 2.0;
        let map = CongruenceMap::new(lambda, MapClass::General).unwrap();
        let pair = uncertainty_pair(&ops, &state).unwrap();
        let via_sigma = transform_sigma(&map, &pair).unwrap();
        let via_ops = uncertainty_pair(&transform_operators(&map, &ops).unwrap(), &state).unwrap();
        let scale = via_sigma.sigma.abs().max().max(1.0);
        prop_assert!((&via_sigma.sigma - &via_ops.sigma).abs().max() < 1e-10 * scale);
        prop_assert!((&via_sigma.cmat - &via_ops.cmat).abs().max() < 1e-10 * scale);
    }

    #[test]
    fn invariants_hold_per_class(seed in any::<u64>(), modes in 1usize..3) {
        let n = 2 * modes;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = random_spd(&mut rng, n);
        let cmat = symplectic_form(modes) * -0.5;
        let labels = (0..n).map(|i| format!("X{i}")).collect();
        let pair = robertson::moments::UncertaintyPair::new(sigma.clone(), cmat, labels).unwrap();
        let sl = CongruenceMap::new(random_sl(&mut rng, n), MapClass::General).unwrap();
        let q = DMatrix::from_fn(n, n, |_, _| normal(&mut rng)).qr().q();
        let orth = CongruenceMap::new(q, MapClass::Orthogonal).unwrap();
        let symp = williamson_diagonalize(&random_spd(&mut rng, n)).unwrap().map;
        for map in [sl, orth, symp] {
            let report = invariant_suite(&map, &pair, &[1, 2, 3]).unwrap();
            prop_assert!(report.pass, "{:?}: drift {}", map.class, report.max_drift);
        }
    }

    #[test]
    fn williamson_round_trip(seed in any::<u64>(), modes in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = random_spd(&mut rng, 2 * modes);
        let w = williamson_diagonalize(&sigma).unwrap();
        let back = w.reconstruct();
        prop_assert!((&back - &sigma).abs().max() < 1e-9 * sigma.abs().max());
    }

    #[test]
    fn canonical_pair_products_at_least_quarter(seed in any::<u64>(), k in 0u8..3) {
        // zero-pad into a larger box so the quadratures act exactly
        let sample = random_state(&[20], kind(k), seed);
        let big = ModeSystem::fock(1, 22).unwrap();
        let state = match sample {
            Sample::Pure(v) => QuantumState::pure_normalized(v.resize_vertically(22, C64::new(0.0, 0.0)), big).unwrap(),
            Sample::Mixed(rho) => QuantumState::mixed(rho.resize(22, 22, C64::new(0.0, 0.0)), big).unwrap(),
        };
        let pair = uncertainty_pair(&canonical_observables(1, 22).unwrap(), &state).unwrap();
        let w = williamson_diagonalize(&pair.sigma).unwrap();
        prop_assert!(w.pair_products.iter().all(|&p| p >= 0.25 - 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenstates_of_real_combinations_are_degenerate(seed in any::<u64>(), n in 2usize..5) {
        let system = ModeSystem::fock(1, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<OperatorMatrix> = (0..n).map(|_| random_hermitian(&mut rng, &system)).collect();
        let lambda: Vec<C64> = (0..n).map(|_| C64::new(normal(&mut rng), 0.0)).collect();
        let comb = robertson::algebra::linear_combination(&lambda, &ops).unwrap();
        let eig = comb.entries().clone().symmetric_eigen();
        let pick = rng.random_range(0..8);
        let psi = eig.eigenvectors.column(pick).into_owned();
        let state = QuantumState::pure_normalized(psi, system).unwrap();
        let pair = uncertainty_pair(&ops, &state).unwrap();
        prop_assert!(pair.det_sigma().abs() < 1e-10, "det sigma {}", pair.det_sigma());
    }

    #[test]
    fn nondegenerate_states_are_not_eigenstates(seed in any::<u64>()) {
        let system = ModeSystem::fock(1, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops: Vec<OperatorMatrix> = (0..2).map(|_| random_hermitian(&mut rng, &system)).collect();
        let state = state_from(random_state(&[6], StateKind::Pure, seed), system);
        let pair = uncertainty_pair(&ops, &state).unwrap();
        prop_assume!(pair.det_sigma() > 1e-3);
        let psi = state.amplitudes().unwrap();
        for step in 0..72 {
            let t = step as f64 * std::f64::consts::PI / 72.0;
            let lambda = [C64::new(t.cos(), 0.0), C64::new(t.sin(), 0.0)];
            let comb = robertson::algebra::linear_combination(&lambda, &ops).unwrap();
            let eig = comb.entries().clone().symmetric_eigen();
            for col in eig.eigenvectors.column_iter() {
                let f = col.dotc(psi).norm_sqr();
                prop_assert!(f < 1.0 - 1e-6, "fidelity {f} at angle {t}");
            }
        }
    }

    #[test]
    fn canonical_ris_is_minimal_and_recoverable(seed in any::<u64>(), modes in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v) = bogoliubov(&mut rng, modes);
        let xnorm = (-(u.clone().try_inverse().unwrap()) * &v).singular_values().max();
        prop_assume!(xnorm < 0.6);
        let alpha = DVector::from_fn(modes, |_, _| cnormal(&mut rng) * 0.3);
        let dim = if modes == 1 { 48 } else { 20 };
        let s = match canonical_ris(&u, &v, &alpha, dim) {
            Ok(s) if s.converged => s,
            Err(Error::Truncation { .. }) | Ok(_) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let pair = uncertainty_pair(&canonical_observables(modes, dim).unwrap(), &s.state).unwrap();
        let dc = pair.det_c();
        prop_assert!((pair.det_sigma() - dc).abs() < 1e-7 * dc.max(1.0));
        // 2 sigma is symplectic
        let two = &pair.sigma * 2.0;
        let j = symplectic_form(modes);
        prop_assert!((&two * &j * two.transpose() - &j).abs().max() < 1e-8);
        let fit = recover_canonical_ris(&s.state, modes, dim).unwrap();
        prop_assert!(fit.residual < 1e-7, "residual {}", fit.residual);
        prop_assert!(fit.pair_products.iter().all(|p| (p - 0.25).abs() < 1e-8));
    }

    #[test]
    fn su11_and_squared_amplitude_minimize(seed in any::<u64>(), odd in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = C64::from_polar(rng.random_range(0.6..1.6), rng.random_range(0.0..6.28));
        let v = C64::from_polar(rng.random_range(0.0..0.8), rng.random_range(0.0..6.28)) * u.norm();
        let z = C64::from_polar(rng.random_range(0.0..2.0), rng.random_range(0.0..6.28));
        let parity = if odd { Parity::Odd } else { Parity::Even };
        let s = squared_amplitude_ris(u, v, z, parity, 64).unwrap();
        prop_assert!(s.converged);
        let pair = uncertainty_pair(&squared_amplitude_observables(s.dim()).unwrap(), &s.state).unwrap();
        let dc = pair.det_c();
        prop_assert!((pair.det_sigma() - dc).abs() < 1e-7 * dc.abs().max(1.0));
    }

    #[test]
    fn divergent_parameters_are_rejected(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = C64::from_polar(rng.random_range(0.5..1.5), rng.random_range(0.0..6.28));
        let v = C64::from_polar(rng.random_range(1.1..2.0), rng.random_range(0.0..6.28)) * u.norm();
        let w = C64::from_polar(rng.random_range(0.0..0.05), rng.random_range(0.0..6.28));
        prop_assume!(normalizability(u, v, w).unwrap().decaying == 0);
        let z = C64::from_polar(rng.random_range(0.0..2.0), rng.random_range(0.0..6.28));
        let r = su11_ris(u, v, w, z, "1/2".parse().unwrap(), 32);
        prop_assert!(matches!(r, Err(Error::NonNormalizable(_))), "{:?}", r.map(|s| s.tail_mass));
    }
}
