//! End-to-end checks of the preparation-filtration pipeline: the gate
//! sequence lands on the WW-bar state, the filtration converts it to GHZ
//! with success probability 1/9, and the two simulation backends agree
//! trial by trial.

use wwbar_core::circuit::{run_with_checkpoints, wwbar_circuit, wwbar_nmr_variant};
use wwbar_core::filtration::{
    apply_ilo_deterministic, filter_three_qubit_conditioned, filter_three_qubit_with_order,
    run_ensemble, EnsembleStats, FilterMode, IDEAL_SUCCESS_PROBABILITY,
};
use wwbar_core::rng::stream;
use wwbar_core::state::{deviation_up_to_phase, StateVector};

#[test]
fn gate_sequence_prepares_the_superposition_state() {
    let run = run_with_checkpoints(&wwbar_circuit(), &StateVector::basis(3, 0).unwrap()).unwrap();
    for dev in &run.deviations {
        assert!(*dev < 1e-10);
    }
    let overlap = run
        .final_state
        .overlap_squared(&StateVector::wwbar())
        .unwrap();
    assert!((overlap - 1.0).abs() < 1e-12);
}

#[test]
fn deterministic_map_sends_prepared_state_to_scaled_ghz() {
    let prepared = run_with_checkpoints(&wwbar_circuit(), &StateVector::basis(3, 0).unwrap())
        .unwrap()
        .final_state;
    let image = apply_ilo_deterministic(&prepared).unwrap();
    assert!((image.success_probability - IDEAL_SUCCESS_PROBABILITY).abs() < 1e-12);
    let rescaled: Vec<_> = image.amplitudes.iter().map(|a| a * 3.0).collect();
    let normalized = StateVector::from_unnormalized(3, rescaled).unwrap();
    assert!(deviation_up_to_phase(&normalized, &StateVector::ghz()).unwrap() < 1e-10);
}

#[test]
fn conditioned_filtration_reaches_ghz_from_both_circuit_variants() {
    for program in [wwbar_circuit(), wwbar_nmr_variant()] {
        let prepared = run_with_checkpoints(&program, &StateVector::basis(3, 0).unwrap())
            .unwrap()
            .final_state;
        let conditioned = filter_three_qubit_conditioned(&prepared, FilterMode::Fast).unwrap();
        let fidelity = conditioned
            .post_state
            .overlap_squared(&StateVector::ghz())
            .unwrap();
        assert!(fidelity > 1.0 - 1e-12);
        let product: f64 = conditioned.branch_probabilities.iter().product();
        assert!((product - IDEAL_SUCCESS_PROBABILITY).abs() < 1e-12);
    }
}

#[test]
fn ensemble_statistics_match_the_success_probability() {
    let trials = 20_000u64;
    let stats = run_ensemble(&StateVector::wwbar(), trials, 42).unwrap();
    let p = IDEAL_SUCCESS_PROBABILITY;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((stats.retained_fraction - p).abs() < 3.0 * sigma);
    assert!(stats.mean_fidelity_to_ghz > 1.0 - 1e-10);
    assert!(stats.min_fidelity_to_ghz > 1.0 - 1e-10);
}

#[test]
fn measurement_order_does_not_bias_acceptance() {
    let state = StateVector::wwbar();
    let trials = 20_000u64;
    let p = IDEAL_SUCCESS_PROBABILITY;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    for (seed, order) in [(1u64, [1, 2, 3]), (2, [3, 2, 1]), (3, [2, 1, 3])] {
        let mut retained = 0u64;
        for i in 0..trials {
            let mut rng = stream(seed, "filtration-trial", i);
            let outcome =
                filter_three_qubit_with_order(&state, order, FilterMode::Fast, &mut rng).unwrap();
            if outcome.retained {
                retained += 1;
            }
        }
        let fraction = retained as f64 / trials as f64;
        assert!(
            (fraction - p).abs() < 3.0 * sigma,
            "order {order:?}: fraction {fraction}"
        );
    }
}

#[test]
fn faithful_backend_agrees_with_fast_on_the_pipeline() {
    let prepared = run_with_checkpoints(&wwbar_circuit(), &StateVector::basis(3, 0).unwrap())
        .unwrap()
        .final_state;
    for i in 0..200u64 {
        let mut rng_fast = stream(77, "filtration-trial", i);
        let mut rng_faithful = stream(77, "filtration-trial", i);
        let fast =
            filter_three_qubit_with_order(&prepared, [1, 2, 3], FilterMode::Fast, &mut rng_fast)
                .unwrap();
        let faithful = filter_three_qubit_with_order(
            &prepared,
            [1, 2, 3],
            FilterMode::Faithful,
            &mut rng_faithful,
        )
        .unwrap();
        assert_eq!(fast.retained, faithful.retained);
        assert_eq!(fast.stage_failed, faithful.stage_failed);
        if let (Some(a), Some(b)) = (&fast.post_state, &faithful.post_state) {
            assert!(deviation_up_to_phase(a, b).unwrap() < 1e-12);
        }
    }
}

#[test]
fn ensemble_csv_format_is_stable() {
    let stats = run_ensemble(&StateVector::wwbar(), 1000, 7).unwrap();
    assert_eq!(
        EnsembleStats::csv_header(),
        "trials,retained,retained_fraction,mean_fidelity,seed"
    );
    let row = stats.csv_row();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 5);
    assert_eq!(fields[0], "1000");
    assert_eq!(fields[0].parse::<u64>().unwrap(), stats.trials);
    assert_eq!(fields[1].parse::<u64>().unwrap(), stats.retained);
    assert_eq!(fields[2].parse::<f64>().unwrap(), stats.retained_fraction);
    assert_eq!(fields[3].parse::<f64>().unwrap(), stats.mean_fidelity_to_ghz);
    assert_eq!(fields[4], "7");
}
