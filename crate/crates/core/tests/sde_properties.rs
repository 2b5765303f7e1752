use std::sync::Arc;

use dcsl::master::energy_law;
use dcsl::noise::NoiseField;
use dcsl::sde::{run_ensemble, run_trajectory, Hamiltonian, Scheme, SdeConfig, Stepper};
use dcsl::{Grid, KernelL, SimModel, WaveState, C64};
use proptest::prelude::*;

fn setup(k: f64, n: usize) -> (Arc<Grid>, KernelL) {
    let g = Grid::shared(n, 40.0, 1.0).unwrap();
    let kernel = KernelL::build(&SimModel::dimensionless(k), &g).unwrap();
    (g, kernel)
}

fn biased_superposition(g: &Arc<Grid>) -> WaveState {
    let w = (C64::new(0.8f64.sqrt(), 0.0), C64::new(0.2f64.sqrt(), 0.0));
    WaveState::gaussian_superposition(g.clone(), 2.5, 0.55, w).unwrap()
}

fn short_config(seed: u64, t_end: f64) -> SdeConfig {
    SdeConfig { t_end, snapshot_times: vec![], ..SdeConfig::fig1(seed) }
}

#[test]
fn mean_position_is_a_martingale() {
    let (g, kernel) = setup(0.0, 128);
    let state = biased_superposition(&g);
    let x0 = state.observables(1.0).unwrap().mean_x;
    let ens = run_ensemble(&short_config(3, 0.6), &kernel, &state, 300).unwrap();
    for s in ens.stats.iter().step_by(10) {
        let se = (s.mean_x.variance / 300.0).sqrt().max(1e-12);
        assert!((s.mean_x.mean - x0).abs() < 4.0 * se, "t = {}: {} vs {x0}", s.time, s.mean_x.mean);
    }
    assert!(ens.stats.iter().all(|s| (s.norm.mean - 1.0).abs() < 1e-12));
}

#[test]
fn spread_collapses_on_average() {
    let (g, kernel) = setup(0.0, 128);
    let state = biased_superposition(&g);
    let ens = run_ensemble(&short_config(5, 1.0), &kernel, &state, 100).unwrap();
    let first = ens.stats.first().unwrap().var_x.mean;
    let last = ens.stats.last().unwrap().var_x.mean;
    assert!(last < 0.6 * first, "{first} -> {last}");
    // Born rule: about 80% of the resolved trajectories sit on the right
    let right = ens.final_observables.iter().filter(|o| o.mean_x > 0.0).count();
    assert!((60..=95).contains(&right), "{right} of 100 on the right");
}

#[test]
fn mean_kinetic_energy_follows_energy_law_for_both_step_sizes() {
    for (k, dt) in [(0.0, 0.01), (0.0, 0.005), (0.25, 0.01), (0.25, 0.005)] {
        let (g, kernel) = setup(k, 128);
        let model = SimModel::dimensionless(k);
        let state = WaveState::gaussian_packet(g.clone(), 0.0, 0.8, 0.0).unwrap();
        let e0 = state.observables(1.0).unwrap().kinetic_energy;
        let config = SdeConfig { dt, hamiltonian: Hamiltonian::Free, ..short_config(11, 0.5) };
        let n = 200;
        let ens = run_ensemble(&config, &kernel, &state, n).unwrap();
        let last = ens.stats.last().unwrap();
        let expect = energy_law(&model, e0, last.time);
        let se = (last.kinetic_energy.variance / n as f64).sqrt();
        assert!(
            (last.kinetic_energy.mean - expect).abs() < 4.0 * se + 1e-3,
            "k = {k}, dt = {dt}: {} vs {expect} (se {se})",
            last.kinetic_energy.mean
        );
    }
}

#[test]
fn tiny_k_is_numerically_robust() {
    let (g, kernel) = setup(3.175e-6, 128);
    let state = biased_superposition(&g);
    let traj = run_trajectory(&short_config(1, 0.3), &kernel, &state, 0).unwrap();
    for o in &traj.observables {
        assert!(o.mean_x.is_finite() && o.var_x.is_finite() && o.kinetic_energy.is_finite());
        assert!((o.norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (g, kernel) = setup(0.25, 64);
    let state = biased_superposition(&g);
    let config = SdeConfig { hamiltonian: Hamiltonian::Free, snapshot_times: vec![0.2], ..short_config(42, 0.2) };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_ensemble(&config, &kernel, &state, 40).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.stats, b.stats);
    assert_eq!(a.final_observables, b.final_observables);
    assert_eq!(a.position_density, b.position_density);
}

#[test]
fn reruns_with_same_seed_are_identical_and_seeds_differ() {
    let (g, kernel) = setup(0.0, 64);
    let state = biased_superposition(&g);
    let a = run_trajectory(&short_config(8, 0.2), &kernel, &state, 4).unwrap();
    let b = run_trajectory(&short_config(8, 0.2), &kernel, &state, 4).unwrap();
    let c = run_trajectory(&short_config(9, 0.2), &kernel, &state, 4).unwrap();
    assert_eq!(a.observables, b.observables);
    assert_ne!(a.observables, c.observables);
}

#[test]
fn zero_steps_returns_initial_state() {
    let (g, kernel) = setup(0.0, 64);
    let state = biased_superposition(&g);
    let traj = run_trajectory(&short_config(1, 0.0), &kernel, &state, 0).unwrap();
    assert_eq!(traj.observables.len(), 1);
    let (a, b) = (traj.observables[0], state.observables(1.0).unwrap());
    for (x, y) in [(a.norm, b.norm), (a.mean_x, b.mean_x), (a.var_x, b.var_x), (a.kinetic_energy, b.kinetic_energy)] {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn unstable_step_is_rejected() {
    let (g, kernel) = setup(0.0, 64);
    let state = biased_superposition(&g);
    let config = SdeConfig { dt: 0.2, ..short_config(1, 1.0) };
    assert!(run_trajectory(&config, &kernel, &state, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nonlinear_step_keeps_unit_norm(k in 0.0f64..0.5, seed in 0u64..1000, free in any::<bool>()) {
        let (g, kernel) = setup(k, 64);
        let ham = if free { Hamiltonian::Free } else { Hamiltonian::None };
        let mut stepper = Stepper::new(&kernel, &g, 0.01, ham).unwrap();
        let mut phi = biased_superposition(&g).momentum();
        let mut noise = NoiseField::new(&g, seed, 0);
        for step in 0..20 {
            let dw = noise.sample_increments(0.01).unwrap();
            stepper.step_nonlinear(&mut phi, &dw, step, true).unwrap();
        }
        let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum::<f64>() / g.length();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_weights_are_positive_and_average_to_one(seed in 0u64..1000) {
        let (g, kernel) = setup(0.0, 64);
        let state = biased_superposition(&g);
        let config = SdeConfig { scheme: Scheme::Linear, seed, ..short_config(seed, 0.1) };
        let ens = run_ensemble(&config, &kernel, &state, 64).unwrap();
        prop_assert!(ens.weights.iter().all(|w| *w > 0.0 && w.is_finite()));
        let mean = ens.weights.iter().sum::<f64>() / 64.0;
        prop_assert!((mean - 1.0).abs() < 0.5, "mean weight {}", mean);
    }
}
