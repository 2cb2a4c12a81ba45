//! Measurement-based local filtration that maps the prepared state onto the
//! GHZ state.
//!
//! The non-unitary single-qubit map is the matrix `A` with rows `(1, w)` and
//! `(1, w^2)` over `sqrt(3)`, where `w = exp(i 2 pi / 3)`. Its singular value
//! decomposition `A = U D V` isolates the non-unitary part in
//! `D = diag(1, 1/sqrt(3))`, and `D` is realized probabilistically: couple an
//! ancilla prepared in `|0>`, measure the two-outcome observable built from
//! the projector pair below, then read the ancilla out in the computational
//! basis. Keeping the (projector success, ancilla `|0>`) branch applies `D`
//! up to normalization.
//!
//! Two simulation backends cover the same protocol:
//! * [`FilterMode::Fast`] tracks only the three system qubits and uses the
//!   closed-form branch probabilities of `D`.
//! * [`FilterMode::Faithful`] tracks a six-qubit register (three system
//!   qubits plus one ancilla each) and applies the embedded projectors
//!   literally.
//!
//! Both consume one uniform variate per measurement in the same order, so a
//! shared seed yields identical accept/reject decisions.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gate::apply_on_qubits;
use crate::linalg::{kron, ComplexMatrix};
use crate::rng::stream;
use crate::state::{DensityMatrix, StateVector};

/// Success probability of the full three-qubit filtration on the prepared
/// state, `(1/3)^2`.
pub const IDEAL_SUCCESS_PROBABILITY: f64 = 1.0 / 9.0;

/// The filtration operator and its singular value decomposition `a = u d v`.
#[derive(Clone, Debug)]
pub struct IloDecomposition {
    /// The target non-unitary map, `(1/sqrt(3)) [[1, w], [1, w^2]]`.
    pub a: ComplexMatrix,
    /// Left unitary factor.
    pub u: ComplexMatrix,
    /// Diagonal factor `diag(1, 1/sqrt(3))` carrying the non-unitarity.
    pub d: ComplexMatrix,
    /// Right unitary factor.
    pub v: ComplexMatrix,
}

/// Fixed decomposition of the filtration map into `unitary * diagonal *
/// unitary`; the factors are pinned so downstream pulse sequences are
/// reproducible.
pub fn ilo_decomposition() -> IloDecomposition {
    let s3 = 3f64.sqrt();
    let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    let a = ComplexMatrix::from_rows(&[
        vec![Complex64::new(1.0 / s3, 0.0), w / s3],
        vec![Complex64::new(1.0 / s3, 0.0), w * w / s3],
    ])
    .expect("fixed 2x2 shape");

    let lead = Complex64::from_polar(1.0 / 2f64.sqrt(), FRAC_PI_2);
    let u = ComplexMatrix::from_rows(&[
        vec![
            lead * Complex64::from_polar(1.0, -FRAC_PI_6),
            -lead * Complex64::from_polar(1.0, FRAC_PI_3),
        ],
        vec![
            lead * Complex64::from_polar(1.0, FRAC_PI_6),
            -lead * Complex64::from_polar(1.0, -FRAC_PI_3),
        ],
    ])
    .expect("fixed 2x2 shape");

    let d = ComplexMatrix::from_rows(&[
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0 / s3, 0.0)],
    ])
    .expect("fixed 2x2 shape");

    let h = 1.0 / 2f64.sqrt();
    let v = ComplexMatrix::from_rows(&[
        vec![Complex64::new(0.0, -h), Complex64::new(0.0, h)],
        vec![Complex64::new(0.0, h), Complex64::new(0.0, h)],
    ])
    .expect("fixed 2x2 shape");

    IloDecomposition { a, u, d, v }
}

/// Rank-one projectors on the ancilla+system pair (ancilla is the leading
/// qubit) whose sum `p` realizes `diag(d, sqrt(1 - d^2))` measurements.
#[derive(Clone, Debug)]
pub struct ProjectorPair {
    /// Projector onto `|00>`.
    pub p1: ComplexMatrix,
    /// Projector onto the normalized vector `(0, 3^{1/4}, 0, sqrt(3 - sqrt(3))) / sqrt(3)`.
    pub p2: ComplexMatrix,
    /// The measured observable `p1 + p2`.
    pub p: ComplexMatrix,
}

/// Build the two-outcome measurement used by the faithful backend. In
/// ancilla blocks `p = [[d, e], [e, 1 - d]]` with `e = sqrt(d (1 - d))`
/// (idempotence forces `d^2 + e^2 = d`), so on `|0> <0| (x) rho` the success
/// branch acts as `[[d rho d, d rho e], [e rho d, e rho e]]` and the ancilla
/// `|0>` sector carries exactly `d rho d`.
pub fn build_projectors() -> ProjectorPair {
    let s3 = 3f64.sqrt();
    let xi1 = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let xi2 = [
        Complex64::new(0.0, 0.0),
        Complex64::new(s3.sqrt() / s3, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new((3.0 - s3).sqrt() / s3, 0.0),
    ];
    let p1 = ComplexMatrix::outer(&xi1, &xi1);
    let p2 = ComplexMatrix::outer(&xi2, &xi2);
    let p = p1.add(&p2).expect("projector dimensions match");
    ProjectorPair { p1, p2, p }
}

/// Which of the two measurements in a single-qubit filtration step rejected
/// the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementStage {
    /// The two-outcome projector measurement on the ancilla+system pair.
    Projector,
    /// The computational-basis readout of the ancilla.
    Ancilla,
}

/// Result of one sampled filtration attempt.
#[derive(Clone, Debug)]
pub struct FilterOutcome<S> {
    /// True when every measurement landed on its success branch.
    pub retained: bool,
    /// First failing measurement, when `retained` is false.
    pub stage_failed: Option<MeasurementStage>,
    /// Normalized post-measurement state of the success branch.
    pub post_state: Option<S>,
    /// Success probability of each measurement actually reached, in order.
    pub probability_trace: Vec<f64>,
}

/// Backend used by the three-qubit filtration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterMode {
    /// Track the three system qubits only; branch probabilities come from
    /// the diagonal factor in closed form.
    Fast,
    /// Track system plus ancillas (six qubits) and apply the embedded
    /// projectors literally.
    Faithful,
}

/// Image of a state under the deterministic (trace-decreasing) map
/// `a (x) a (x) a`, before renormalization.
#[derive(Clone, Debug)]
pub struct IloImage {
    /// Unnormalized amplitudes of `(a (x) a (x) a) |psi>`.
    pub amplitudes: Vec<Complex64>,
    /// Squared norm of the image, i.e. the total success probability of the
    /// measurement realization.
    pub success_probability: f64,
}

/// Apply `a (x) a (x) a` to a three-qubit pure state without sampling.
pub fn apply_ilo_deterministic(state: &StateVector) -> Result<IloImage> {
    if state.n_qubits() != 3 {
        return Err(Error::InvalidInput(format!(
            "expected a three-qubit state, got {} qubits",
            state.n_qubits()
        )));
    }
    let a = ilo_decomposition().a;
    let a3 = kron(&kron(&a, &a), &a);
    let amplitudes = a3.mul_vec(state.amplitudes())?;
    let success_probability = amplitudes.iter().map(|c| c.norm_sqr()).sum();
    Ok(IloImage {
        amplitudes,
        success_probability,
    })
}

/// Run the two measurements of one filtration step on a single-qubit density
/// matrix, materializing the ancilla+system composite.
///
/// The success branch returns the renormalized reduced state
/// `d rho d / tr(d rho d)`.
pub fn filter_single_qubit(
    rho: &DensityMatrix,
    rng: &mut impl Rng,
) -> Result<FilterOutcome<DensityMatrix>> {
    if rho.n_qubits() != 1 {
        return Err(Error::InvalidInput(format!(
            "expected a single-qubit state, got {} qubits",
            rho.n_qubits()
        )));
    }
    let pair = build_projectors();
    let ancilla = DensityMatrix::from_pure(&StateVector::basis(1, 0)?);
    let composite = kron(ancilla.matrix(), rho.matrix());

    // Projector measurement: success probability tr(p C p) = tr(C p).
    let projected = pair.p.mul(&composite)?.mul(&pair.p)?;
    let p_success = projected.trace().re;
    let mut probability_trace = vec![p_success];
    if rng.gen::<f64>() >= p_success {
        return Ok(FilterOutcome {
            retained: false,
            stage_failed: Some(MeasurementStage::Projector),
            post_state: None,
            probability_trace,
        });
    }
    let after_projector = projected.scale(Complex64::new(1.0 / p_success, 0.0));

    // Ancilla readout: keep the |0> sector (upper-left 2x2 block).
    let mut zero_block = ComplexMatrix::zeros(2, 2);
    for r in 0..2 {
        for c in 0..2 {
            zero_block.set(r, c, after_projector.get(r, c));
        }
    }
    let a_success = zero_block.trace().re;
    probability_trace.push(a_success);
    if rng.gen::<f64>() >= a_success {
        return Ok(FilterOutcome {
            retained: false,
            stage_failed: Some(MeasurementStage::Ancilla),
            post_state: None,
            probability_trace,
        });
    }
    let normalized = zero_block.scale(Complex64::new(1.0 / a_success, 0.0));
    let (post, _) = DensityMatrix::sanitized(&normalized)?;
    Ok(FilterOutcome {
        retained: true,
        stage_failed: None,
        post_state: Some(post),
        probability_trace,
    })
}

/// Sample the full three-qubit filtration in qubit order 1, 2, 3.
pub fn filter_three_qubit(
    state: &StateVector,
    mode: FilterMode,
    rng: &mut impl Rng,
) -> Result<FilterOutcome<StateVector>> {
    filter_three_qubit_with_order(state, [1, 2, 3], mode, rng)
}

/// Sample the full three-qubit filtration, measuring the qubits in the given
/// order. The overall success probability is order-independent.
pub fn filter_three_qubit_with_order(
    state: &StateVector,
    order: [usize; 3],
    mode: FilterMode,
    rng: &mut impl Rng,
) -> Result<FilterOutcome<StateVector>> {
    run_filtration(state, order, mode, &mut Sampler::Random(rng))
}

/// Deterministic success-conditioned filtration: every measurement is forced
/// onto its success branch.
#[derive(Clone, Debug)]
pub struct ConditionedFilter {
    /// Normalized post-filtration state.
    pub post_state: StateVector,
    /// Success probability of each of the six measurements, in order.
    pub branch_probabilities: Vec<f64>,
}

/// Force the success branch of all six measurements and return the post
/// state together with the branch probabilities. Their product equals the
/// squared norm of the deterministic image.
pub fn filter_three_qubit_conditioned(
    state: &StateVector,
    mode: FilterMode,
) -> Result<ConditionedFilter> {
    let mut sampler: Sampler<'_, ChaCha8Rng> = Sampler::ForceSuccess;
    let outcome = run_filtration(state, [1, 2, 3], mode, &mut sampler)?;
    Ok(ConditionedFilter {
        post_state: outcome.post_state.expect("forced branch retains the state"),
        branch_probabilities: outcome.probability_trace,
    })
}

enum Sampler<'a, R: Rng> {
    Random(&'a mut R),
    ForceSuccess,
}

impl<R: Rng> Sampler<'_, R> {
    fn accept(&mut self, probability: f64) -> bool {
        match self {
            Sampler::Random(rng) => rng.gen::<f64>() < probability,
            Sampler::ForceSuccess => true,
        }
    }
}

fn check_order(order: [usize; 3]) -> Result<()> {
    let mut seen = [false; 3];
    for q in order {
        if !(1..=3).contains(&q) {
            return Err(Error::InvalidInput(format!("qubit {q} out of range 1..=3")));
        }
        if seen[q - 1] {
            return Err(Error::InvalidInput(format!("qubit {q} listed twice")));
        }
        seen[q - 1] = true;
    }
    Ok(())
}

fn run_filtration<R: Rng>(
    state: &StateVector,
    order: [usize; 3],
    mode: FilterMode,
    sampler: &mut Sampler<'_, R>,
) -> Result<FilterOutcome<StateVector>> {
    if state.n_qubits() != 3 {
        return Err(Error::InvalidInput(format!(
            "expected a three-qubit state, got {} qubits",
            state.n_qubits()
        )));
    }
    check_order(order)?;
    match mode {
        FilterMode::Fast => run_fast(state, order, sampler),
        FilterMode::Faithful => run_faithful(state, order, sampler),
    }
}

fn reject<S>(
    stage: MeasurementStage,
    probability_trace: Vec<f64>,
) -> Result<FilterOutcome<S>> {
    Ok(FilterOutcome {
        retained: false,
        stage_failed: Some(stage),
        post_state: None,
        probability_trace,
    })
}

/// Fast backend: per measured qubit `k`, the projector succeeds with
/// `|psi_0|^2 + |psi_1|^2 / sqrt(3)` and the joint success of both
/// measurements is `|| d_k psi ||^2`, where the subscripts split the state by
/// the value of bit `k`.
fn run_fast<R: Rng>(
    state: &StateVector,
    order: [usize; 3],
    sampler: &mut Sampler<'_, R>,
) -> Result<FilterOutcome<StateVector>> {
    let ilo = ilo_decomposition();
    let s3 = 3f64.sqrt();
    let mut amps = state.amplitudes().to_vec();
    let mut probability_trace = Vec::with_capacity(6);

    for qubit in order {
        apply_on_qubits(&mut amps, &ilo.v, &[qubit], 3)?;

        let bit = 1usize << (3 - qubit);
        let mut low = 0.0;
        let mut high = 0.0;
        for (idx, amp) in amps.iter().enumerate() {
            if idx & bit == 0 {
                low += amp.norm_sqr();
            } else {
                high += amp.norm_sqr();
            }
        }
        let p_projector = low + high / s3;
        probability_trace.push(p_projector);
        if !sampler.accept(p_projector) {
            return reject(MeasurementStage::Projector, probability_trace);
        }

        let joint = low + high / 3.0;
        let p_ancilla = joint / p_projector;
        probability_trace.push(p_ancilla);
        if !sampler.accept(p_ancilla) {
            return reject(MeasurementStage::Ancilla, probability_trace);
        }

        let scale = 1.0 / joint.sqrt();
        for (idx, amp) in amps.iter_mut().enumerate() {
            if idx & bit == 0 {
                *amp *= scale;
            } else {
                *amp *= scale / s3;
            }
        }

        apply_on_qubits(&mut amps, &ilo.u, &[qubit], 3)?;
    }

    let post = StateVector::new(3, amps)?;
    Ok(FilterOutcome {
        retained: true,
        stage_failed: None,
        post_state: Some(post),
        probability_trace,
    })
}

/// Faithful backend: six-qubit register with the ancilla for system qubit
/// `k` at position `k + 3`, the pair projector applied on `(ancilla, system)`
/// and the ancilla read out as an explicit `|0> <0|` projector.
fn run_faithful<R: Rng>(
    state: &StateVector,
    order: [usize; 3],
    sampler: &mut Sampler<'_, R>,
) -> Result<FilterOutcome<StateVector>> {
    let ilo = ilo_decomposition();
    let pair = build_projectors();
    let mut zero_readout = ComplexMatrix::zeros(2, 2);
    zero_readout.set(0, 0, Complex64::new(1.0, 0.0));

    // Register layout: bits 1..=3 system, bits 4..=6 ancillas, all |0>.
    let mut amps = vec![Complex64::new(0.0, 0.0); 64];
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        amps[idx << 3] = *amp;
    }
    let mut probability_trace = Vec::with_capacity(6);

    for qubit in order {
        let ancilla = qubit + 3;
        apply_on_qubits(&mut amps, &ilo.v, &[qubit], 6)?;

        let mut projected = amps.clone();
        apply_on_qubits(&mut projected, &pair.p, &[ancilla, qubit], 6)?;
        let p_projector: f64 = projected.iter().map(|c| c.norm_sqr()).sum();
        probability_trace.push(p_projector);
        if !sampler.accept(p_projector) {
            return reject(MeasurementStage::Projector, probability_trace);
        }
        let scale = Complex64::new(1.0 / p_projector.sqrt(), 0.0);
        amps = projected.iter().map(|c| c * scale).collect();

        let mut readout = amps.clone();
        apply_on_qubits(&mut readout, &zero_readout, &[ancilla], 6)?;
        let p_ancilla: f64 = readout.iter().map(|c| c.norm_sqr()).sum();
        probability_trace.push(p_ancilla);
        if !sampler.accept(p_ancilla) {
            return reject(MeasurementStage::Ancilla, probability_trace);
        }
        let scale = Complex64::new(1.0 / p_ancilla.sqrt(), 0.0);
        amps = readout.iter().map(|c| c * scale).collect();

        apply_on_qubits(&mut amps, &ilo.u, &[qubit], 6)?;
    }

    // All ancillas were projected back to |0>, so only indices with zero
    // ancilla bits carry weight.
    let mut system = vec![Complex64::new(0.0, 0.0); 8];
    let mut leak = 0.0;
    for (idx, amp) in amps.iter().enumerate() {
        if idx & 0b111 == 0 {
            system[idx >> 3] = *amp;
        } else {
            leak += amp.norm_sqr();
        }
    }
    if leak > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "ancilla register retained weight {leak:.3e} after readout"
        )));
    }
    let post = StateVector::new(3, system)?;
    Ok(FilterOutcome {
        retained: true,
        stage_failed: None,
        post_state: Some(post),
        probability_trace,
    })
}

/// Aggregate statistics of a sampled filtration ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    /// Number of attempts.
    pub trials: u64,
    /// Number of attempts in which all six measurements succeeded.
    pub retained: u64,
    /// `retained / trials`.
    pub retained_fraction: f64,
    /// Mean squared overlap of retained states with the GHZ state; zero when
    /// nothing was retained.
    pub mean_fidelity_to_ghz: f64,
    /// Smallest squared overlap among retained states; zero when nothing was
    /// retained.
    pub min_fidelity_to_ghz: f64,
    /// Seed the ensemble was drawn from.
    pub seed: u64,
}

impl EnsembleStats {
    /// Column header matching [`EnsembleStats::csv_row`].
    pub fn csv_header() -> &'static str {
        "trials,retained,retained_fraction,mean_fidelity,seed"
    }

    /// One CSV row of the summary statistics. The per-trial minimum stays a
    /// struct-only field; the export keeps the frozen five-column shape.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.trials, self.retained, self.retained_fraction, self.mean_fidelity_to_ghz, self.seed
        )
    }
}

/// Run `trials` independent filtration attempts with the fast backend.
///
/// Attempt `i` draws from `stream(seed, "filtration-trial", i)`, so the
/// ensemble is reproducible and insensitive to iteration chunking.
pub fn run_ensemble(state: &StateVector, trials: u64, seed: u64) -> Result<EnsembleStats> {
    let ghz = StateVector::ghz();
    let mut retained = 0u64;
    let mut fidelity_sum = 0.0;
    let mut fidelity_min = f64::INFINITY;
    for i in 0..trials {
        let mut rng = stream(seed, "filtration-trial", i);
        let outcome = filter_three_qubit(state, FilterMode::Fast, &mut rng)?;
        if outcome.retained {
            retained += 1;
            let f = ghz.overlap_squared(outcome.post_state.as_ref().expect("retained"))?;
            fidelity_sum += f;
            fidelity_min = fidelity_min.min(f);
        }
    }
    let retained_fraction = if trials == 0 {
        0.0
    } else {
        retained as f64 / trials as f64
    };
    let (mean, min) = if retained == 0 {
        (0.0, 0.0)
    } else {
        (fidelity_sum / retained as f64, fidelity_min)
    };
    Ok(EnsembleStats {
        trials,
        retained,
        retained_fraction,
        mean_fidelity_to_ghz: mean,
        min_fidelity_to_ghz: min,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unitary_deviation(m: &ComplexMatrix) -> f64 {
        let prod = m.adjoint().mul(m).unwrap();
        prod.distance(&ComplexMatrix::identity(m.rows())).unwrap()
    }

    #[test]
    fn decomposition_factors_reproduce_the_map() {
        let ilo = ilo_decomposition();
        let udv = ilo.u.mul(&ilo.d).unwrap().mul(&ilo.v).unwrap();
        assert!(udv.distance(&ilo.a).unwrap() < 1e-12);
        assert!(unitary_deviation(&ilo.u) < 1e-12);
        assert!(unitary_deviation(&ilo.v) < 1e-12);
        assert!((ilo.d.get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((ilo.d.get(1, 1).re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn projectors_are_orthogonal_idempotents() {
        let pair = build_projectors();
        for m in [&pair.p1, &pair.p2, &pair.p] {
            assert!(m.mul(m).unwrap().distance(m).unwrap() < 1e-12);
            assert!(m.adjoint().distance(m).unwrap() < 1e-12);
        }
        let cross = pair.p1.mul(&pair.p2).unwrap();
        assert!(cross.frobenius_norm() < 1e-12);
        assert!((pair.p1.trace().re - 1.0).abs() < 1e-12);
        assert!((pair.p2.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_action_reproduces_diagonal_blocks() {
        // p (|0><0| (x) rho) p must equal the block matrix
        // [[d rho d, d rho e], [e rho d, e rho e]] with e = sqrt(d (1 - d)).
        let pair = build_projectors();
        let ilo = ilo_decomposition();
        let mut rng = stream(5, "filtration-blocks", 0);
        let d0 = ilo.d.get(0, 0).re;
        let d1 = ilo.d.get(1, 1).re;
        let e = [(d0 * (1.0 - d0)).sqrt(), (d1 * (1.0 - d1)).sqrt()];
        for _ in 0..5 {
            let rho = crate::state::random_density(1, &mut rng).unwrap();
            let composite = kron(
                DensityMatrix::from_pure(&StateVector::basis(1, 0).unwrap()).matrix(),
                rho.matrix(),
            );
            let lhs = pair.p.mul(&composite).unwrap().mul(&pair.p).unwrap();
            let mut expected = ComplexMatrix::zeros(4, 4);
            let dv = [d0, d1];
            for r in 0..2 {
                for c in 0..2 {
                    let x = rho.matrix().get(r, c);
                    expected.set(r, c, x * dv[r] * dv[c]);
                    expected.set(r, c + 2, x * dv[r] * e[c]);
                    expected.set(r + 2, c, x * e[r] * dv[c]);
                    expected.set(r + 2, c + 2, x * e[r] * e[c]);
                }
            }
            assert!(lhs.distance(&expected).unwrap() < 1e-12);
        }
    }

    #[test]
    fn deterministic_image_matches_ghz_up_to_sign() {
        let image = apply_ilo_deterministic(&StateVector::wwbar()).unwrap();
        let ghz = StateVector::ghz();
        // The image is exactly -(1/3) |GHZ>.
        for (idx, amp) in image.amplitudes.iter().enumerate() {
            let expected = -ghz.amplitudes()[idx] / 3.0;
            assert!((amp - expected).norm() < 1e-12);
        }
        assert!((image.success_probability - IDEAL_SUCCESS_PROBABILITY).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_branch_probabilities() {
        // For rho = |1><1|: projector branch 1/sqrt(3), ancilla branch
        // 1/sqrt(3), joint 1/3, post state |1><1| unchanged.
        let rho = DensityMatrix::from_pure(&StateVector::basis(1, 1).unwrap());
        let s3 = 3f64.sqrt();
        let mut seen_retained = false;
        for i in 0..40 {
            let mut rng = stream(7, "filtration-single", i);
            let outcome = filter_single_qubit(&rho, &mut rng).unwrap();
            assert!((outcome.probability_trace[0] - 1.0 / s3).abs() < 1e-12);
            if outcome.retained {
                seen_retained = true;
                assert!((outcome.probability_trace[1] - 1.0 / s3).abs() < 1e-12);
                let post = outcome.post_state.unwrap();
                assert!((post.matrix().get(1, 1).re - 1.0).abs() < 1e-10);
            }
        }
        assert!(seen_retained);
    }

    #[test]
    fn single_qubit_mixed_state_joint_probability() {
        // For rho = I/2 the joint success probability is 2/3 and the post
        // state is diag(3/4, 1/4).
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        let s3 = 3f64.sqrt();
        let p1_expected = (1.0 + 1.0 / s3) / 2.0;
        for i in 0..40 {
            let mut rng = stream(8, "filtration-mixed", i);
            let outcome = filter_single_qubit(&rho, &mut rng).unwrap();
            assert!((outcome.probability_trace[0] - p1_expected).abs() < 1e-12);
            if outcome.retained {
                let joint = outcome.probability_trace[0] * outcome.probability_trace[1];
                assert!((joint - 2.0 / 3.0).abs() < 1e-12);
                let post = outcome.post_state.unwrap();
                assert!((post.matrix().get(0, 0).re - 0.75).abs() < 1e-10);
                assert!((post.matrix().get(1, 1).re - 0.25).abs() < 1e-10);
                return;
            }
        }
        panic!("no retained outcome in 40 seeded attempts");
    }

    #[test]
    fn sampled_retention_frequency_matches_exact_probability() {
        // Binomial check: at 1e5 trials the retained fraction must land
        // within five standard deviations of tr(d rho d).
        let mut state_rng = stream(13, "filtration-frequency", 0);
        let rho = crate::state::random_density(1, &mut state_rng).unwrap();
        let d = ilo_decomposition().d;
        let exact = d.mul(rho.matrix()).unwrap().mul(&d).unwrap().trace().re;

        let trials = 100_000u64;
        let mut retained = 0u64;
        for i in 0..trials {
            let mut rng = stream(13, "filtration-frequency", i + 1);
            let outcome = filter_single_qubit(&rho, &mut rng).unwrap();
            if outcome.retained {
                let joint: f64 = outcome.probability_trace.iter().product();
                assert!((joint - exact).abs() < 1e-12);
                retained += 1;
            }
        }
        let frequency = retained as f64 / trials as f64;
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((frequency - exact).abs() < 5.0 * sigma);
    }

    #[test]
    fn retained_outcomes_reached_all_six_measurements() {
        // A trial is retained only when both measurements on each of the
        // three qubits landed on the success branch; rejected trials name
        // the stage that failed and carry no post state.
        let mut state_rng = stream(14, "filtration-contract", 0);
        for i in 0..30 {
            let state = crate::state::random_pure(3, &mut state_rng).unwrap();
            let mut rng = stream(15, "filtration-contract", i);
            let outcome = filter_three_qubit(&state, FilterMode::Fast, &mut rng).unwrap();
            if outcome.retained {
                assert_eq!(outcome.probability_trace.len(), 6);
                assert!(outcome.stage_failed.is_none());
                assert!(outcome.post_state.is_some());
            } else {
                assert!(outcome.probability_trace.len() <= 6);
                assert!(outcome.stage_failed.is_some());
                assert!(outcome.post_state.is_none());
            }
        }
    }

    #[test]
    fn sampled_success_state_matches_the_deterministic_image() {
        let state = StateVector::wwbar();
        let image = apply_ilo_deterministic(&state).unwrap();
        let normalized =
            StateVector::from_unnormalized(3, image.amplitudes.clone()).unwrap();
        let mut seen = 0;
        for i in 0..60 {
            let mut rng = stream(16, "filtration-image", i);
            let outcome = filter_three_qubit(&state, FilterMode::Fast, &mut rng).unwrap();
            if let Some(post) = outcome.post_state {
                seen += 1;
                let dev = crate::state::deviation_up_to_phase(&post, &normalized).unwrap();
                assert!(dev < 1e-10, "deviation {dev}");
            }
        }
        assert!(seen > 0, "no retained trial in 60 seeded attempts");
    }

    #[test]
    fn conditioned_modes_agree_and_multiply_to_image_norm() {
        let mut rng = stream(9, "filtration-conditioned", 0);
        for _ in 0..6 {
            let state = crate::state::random_pure(3, &mut rng).unwrap();
            let fast = filter_three_qubit_conditioned(&state, FilterMode::Fast).unwrap();
            let faithful = filter_three_qubit_conditioned(&state, FilterMode::Faithful).unwrap();
            let dev = crate::state::deviation_up_to_phase(&fast.post_state, &faithful.post_state)
                .unwrap();
            assert!(dev < 1e-12);
            for (a, b) in fast
                .branch_probabilities
                .iter()
                .zip(faithful.branch_probabilities.iter())
            {
                assert!((a - b).abs() < 1e-12);
            }
            let product: f64 = fast.branch_probabilities.iter().product();
            let image = apply_ilo_deterministic(&state).unwrap();
            assert!((product - image.success_probability).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_modes_share_decisions_under_one_seed() {
        let mut state_rng = stream(10, "filtration-modes", 0);
        for i in 0..8 {
            let state = crate::state::random_pure(3, &mut state_rng).unwrap();
            let mut rng_fast = stream(11, "filtration-pair", i);
            let mut rng_faithful = stream(11, "filtration-pair", i);
            let fast = filter_three_qubit(&state, FilterMode::Fast, &mut rng_fast).unwrap();
            let faithful =
                filter_three_qubit(&state, FilterMode::Faithful, &mut rng_faithful).unwrap();
            assert_eq!(fast.retained, faithful.retained);
            assert_eq!(fast.stage_failed, faithful.stage_failed);
            assert_eq!(fast.probability_trace.len(), faithful.probability_trace.len());
            for (a, b) in fast
                .probability_trace
                .iter()
                .zip(faithful.probability_trace.iter())
            {
                assert!((a - b).abs() < 1e-12);
            }
            if fast.retained {
                let dev = crate::state::deviation_up_to_phase(
                    fast.post_state.as_ref().unwrap(),
                    faithful.post_state.as_ref().unwrap(),
                )
                .unwrap();
                assert!(dev < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_image_recovers_basis_state() {
        // Filtering (a^{-1} (x) a^{-1} (x) a^{-1}) |000>, normalized, must
        // land exactly on |000> when conditioned on success.
        let ilo = ilo_decomposition();
        let a = &ilo.a;
        let det = a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0);
        let mut inv = ComplexMatrix::zeros(2, 2);
        inv.set(0, 0, a.get(1, 1) / det);
        inv.set(0, 1, -a.get(0, 1) / det);
        inv.set(1, 0, -a.get(1, 0) / det);
        inv.set(1, 1, a.get(0, 0) / det);
        let inv3 = kron(&kron(&inv, &inv), &inv);
        let raw = inv3
            .mul_vec(StateVector::basis(3, 0).unwrap().amplitudes())
            .unwrap();
        let state = StateVector::from_unnormalized(3, raw).unwrap();
        let conditioned = filter_three_qubit_conditioned(&state, FilterMode::Fast).unwrap();
        let dev = crate::state::deviation_up_to_phase(
            &conditioned.post_state,
            &StateVector::basis(3, 0).unwrap(),
        )
        .unwrap();
        assert!(dev < 1e-12);
    }

    #[test]
    fn ensemble_with_filtration_proof_state_always_retains() {
        // (v^dag |0>)^(x3) passes both measurements with certainty: v maps it
        // back to |0>, on which d acts as the identity.
        let ilo = ilo_decomposition();
        let vdag = ilo.v.adjoint();
        let col = [vdag.get(0, 0), vdag.get(1, 0)];
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        for (idx, amp) in amps.iter_mut().enumerate() {
            let mut value = Complex64::new(1.0, 0.0);
            for q in 0..3 {
                value *= col[(idx >> (2 - q)) & 1];
            }
            *amp = value;
        }
        let state = StateVector::new(3, amps).unwrap();
        let stats = run_ensemble(&state, 200, 21).unwrap();
        assert_eq!(stats.retained, 200);
        assert!((stats.retained_fraction - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ensemble_reproducible_and_csv_shaped() {
        let state = StateVector::wwbar();
        let a = run_ensemble(&state, 500, 33).unwrap();
        let b = run_ensemble(&state, 500, 33).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            EnsembleStats::csv_header().split(',').count(),
            a.csv_row().split(',').count()
        );
        assert!(a.csv_row().starts_with("500,"));
        assert!(a.csv_row().ends_with(",33"));
    }
}
