//! NMR-style state tomography with single-quantum readout.
//!
//! A detection setting is a word over `{I, X, Y}`, one letter per spin,
//! naming the pi/2 pulse applied to that spin right before acquisition. The
//! readout then exposes the single-quantum coherences of the rotated state
//! `rho' = r rho r^dag`: for every spin `k` and every pair of basis states
//! that differ only in bit `k`, the complex entry `rho'_{i, j}` with
//! `bit_k(i) = 0`, `bit_k(j) = 1` is observed (both quadratures, optionally
//! with additive Gaussian noise).
//!
//! Reconstruction is linear inversion: expand `rho = I/2^n + sum_w c_w P_w`
//! over non-identity Pauli words `P_w`, collect every observed quadrature as
//! one linear equation in the real coefficients `c_w`, and solve the normal
//! equations by eigendecomposition. The design-matrix rank counts how many
//! Pauli directions the settings actually pin down; a full-rank scheme
//! (`4^n - 1` directions) determines the state completely.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, ComplexMatrix};
use crate::state::DensityMatrix;

/// Relative eigenvalue threshold for the design-matrix rank and for the
/// pseudo-inverse cut in the normal equations.
pub const RANK_TOL: f64 = 1e-10;

/// One detection setting: a pulse word over `{I, X, Y}`, one letter per
/// spin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionSetting {
    label: String,
}

impl DetectionSetting {
    /// Validate a pulse word; every letter must be `I`, `X` or `Y`.
    pub fn new(label: &str) -> Result<Self> {
        if label.is_empty() || !label.chars().all(|c| matches!(c, 'I' | 'X' | 'Y')) {
            return Err(Error::InvalidInput(format!(
                "detection setting {label:?} is not a word over I, X, Y"
            )));
        }
        Ok(DetectionSetting {
            label: label.to_string(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_qubits(&self) -> usize {
        self.label.len()
    }

    /// The composite pulse unitary. `X` is exp(-i pi/4 sigma_x), `Y` is
    /// exp(-i pi/4 sigma_y), `I` is the identity.
    pub fn rotation(&self) -> ComplexMatrix {
        let mut total = ComplexMatrix::identity(1);
        for c in self.label.chars() {
            total = kron(&total, &pulse_matrix(c));
        }
        total
    }
}

fn pulse_matrix(c: char) -> ComplexMatrix {
    let h = 1.0 / 2f64.sqrt();
    let rows = match c {
        'I' => return ComplexMatrix::identity(2),
        'X' => [
            [Complex64::new(h, 0.0), Complex64::new(0.0, -h)],
            [Complex64::new(0.0, -h), Complex64::new(h, 0.0)],
        ],
        'Y' => [
            [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
            [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
        ],
        _ => unreachable!("validated at construction"),
    };
    let mut m = ComplexMatrix::zeros(2, 2);
    for (r, row) in rows.iter().enumerate() {
        for (col, v) in row.iter().enumerate() {
            m.set(r, col, *v);
        }
    }
    m
}

/// The eleven-setting three-qubit scheme. Together with the single-quantum
/// readout it spans all 63 Pauli directions.
pub fn detection_settings_3q() -> Vec<DetectionSetting> {
    [
        "III", "IIX", "IXI", "XII", "IIY", "IYI", "YII", "YYI", "IXX", "XXX", "YYY",
    ]
    .iter()
    .map(|l| DetectionSetting::new(l).expect("static labels are valid"))
    .collect()
}

/// Which adjacent pair of the three-qubit register a two-qubit scheme
/// addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoQubitScheme {
    /// Qubits 1 and 2.
    AB,
    /// Qubits 2 and 3.
    BC,
}

/// Four-setting schemes for the two-party reduced states; each spans all 15
/// two-qubit Pauli directions.
pub fn detection_settings_2q(scheme: TwoQubitScheme) -> Vec<DetectionSetting> {
    let labels: [&str; 4] = match scheme {
        TwoQubitScheme::AB => ["II", "XI", "YI", "XX"],
        TwoQubitScheme::BC => ["II", "IX", "IY", "XX"],
    };
    labels
        .iter()
        .map(|l| DetectionSetting::new(l).expect("static labels are valid"))
        .collect()
}

/// Single-quantum transitions of an `n`-qubit register: for each spin `k`
/// (ascending) and each basis index `i` with bit `k` clear (ascending), the
/// observable entry is `(bra, ket) = (i, i + 2^(n-k))`.
pub fn transitions(n_qubits: usize) -> Vec<Transition> {
    let mut out = Vec::new();
    for spin in 1..=n_qubits {
        let bit = 1usize << (n_qubits - spin);
        for i in 0..1usize << n_qubits {
            if i & bit == 0 {
                out.push(Transition {
                    spin,
                    bra_index: i,
                    ket_index: i | bit,
                });
            }
        }
    }
    out
}

/// One single-quantum matrix element location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub spin: usize,
    pub bra_index: usize,
    pub ket_index: usize,
}

/// One observed complex matrix element of the rotated state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub spin: usize,
    pub bra_index: usize,
    pub ket_index: usize,
    pub re: f64,
    pub im: f64,
}

/// All observations acquired under one detection setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub setting: String,
    pub sigma: f64,
    pub observations: Vec<Observation>,
}

/// Simulate the readout of one detection setting. Each quadrature picks up
/// independent `N(0, sigma^2)` noise; the real part of every transition is
/// drawn before its imaginary part, transitions in [`transitions`] order.
pub fn simulate_readout(
    rho: &DensityMatrix,
    setting: &DetectionSetting,
    sigma: f64,
    rng: &mut impl Rng,
) -> Result<MeasurementRecord> {
    if setting.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "setting {} vs {}-qubit state",
            setting.label(),
            rho.n_qubits()
        )));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("noise level {sigma} invalid")));
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidInput(format!("noise level {sigma}: {e}")))?;
    let r = setting.rotation();
    let rotated = r.mul(rho.matrix())?.mul(&r.adjoint())?;
    let observations = transitions(rho.n_qubits())
        .into_iter()
        .map(|t| {
            let value = rotated.get(t.bra_index, t.ket_index);
            Observation {
                spin: t.spin,
                bra_index: t.bra_index,
                ket_index: t.ket_index,
                re: value.re + noise.sample(rng),
                im: value.im + noise.sample(rng),
            }
        })
        .collect();
    Ok(MeasurementRecord {
        setting: setting.label().to_string(),
        sigma,
        observations,
    })
}

/// Linear-inversion problem for a fixed list of detection settings.
#[derive(Clone, Debug)]
pub struct TomographyProblem {
    n_qubits: usize,
    settings: Vec<DetectionSetting>,
    /// Row-major design matrix: one row per observed quadrature, one column
    /// per non-identity Pauli word.
    design: Vec<Vec<f64>>,
    rank: usize,
}

impl TomographyProblem {
    /// Build the design matrix mapping Pauli coefficients to observed
    /// quadratures and compute its rank.
    pub fn new(n_qubits: usize, settings: Vec<DetectionSetting>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 4 {
            return Err(Error::InvalidInput(format!(
                "tomography supports 1..=4 qubits, got {n_qubits}"
            )));
        }
        if settings.is_empty() {
            return Err(Error::InvalidInput("no detection settings".into()));
        }
        for s in &settings {
            if s.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch(format!(
                    "setting {} in a {n_qubits}-qubit problem",
                    s.label()
                )));
            }
        }
        let words = pauli_words(n_qubits);
        let trans = transitions(n_qubits);
        let mut design = Vec::with_capacity(settings.len() * trans.len() * 2);
        for setting in &settings {
            let r = setting.rotation();
            let radj = r.adjoint();
            // Rotated Pauli words; the identity word is excluded, and every
            // transition is strictly off-diagonal, so the I/2^n term of the
            // expansion never contributes to an observation.
            let rotated: Vec<ComplexMatrix> = words
                .iter()
                .map(|w| r.mul(w).expect("square").mul(&radj).expect("square"))
                .collect();
            for t in &trans {
                let mut row_re = Vec::with_capacity(words.len());
                let mut row_im = Vec::with_capacity(words.len());
                for m in &rotated {
                    let entry = m.get(t.bra_index, t.ket_index);
                    row_re.push(entry.re);
                    row_im.push(entry.im);
                }
                design.push(row_re);
                design.push(row_im);
            }
        }
        let rank = design_rank(&design)?;
        Ok(TomographyProblem {
            n_qubits,
            settings,
            design,
            rank,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn settings(&self) -> &[DetectionSetting] {
        &self.settings
    }

    /// Number of independent Pauli directions the scheme observes; complete
    /// schemes reach `4^n - 1`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_parameters(&self) -> usize {
        (1 << (2 * self.n_qubits)) - 1
    }

    pub fn is_complete(&self) -> bool {
        self.rank == self.n_parameters()
    }
}

/// Result of a linear-inversion reconstruction.
#[derive(Clone, Debug)]
pub struct TomographyResult {
    /// Physical (PSD, unit-trace) estimate.
    pub rho: DensityMatrix,
    /// Design-matrix rank of the scheme that produced the records.
    pub rank: usize,
    /// True when the raw linear estimate needed eigenvalue clipping to
    /// become physical.
    pub projected: bool,
    /// Euclidean norm of the residual `design * coefficients - data`.
    pub residual: f64,
}

/// Solve the normal equations for the records and assemble the state.
///
/// The records must line up one-to-one with the problem's settings, each
/// carrying the canonical transition list.
pub fn reconstruct_linear_inversion(
    problem: &TomographyProblem,
    records: &[MeasurementRecord],
) -> Result<TomographyResult> {
    let trans = transitions(problem.n_qubits);
    if records.len() != problem.settings.len() {
        return Err(Error::InvalidInput(format!(
            "{} records for {} settings",
            records.len(),
            problem.settings.len()
        )));
    }
    let mut data = Vec::with_capacity(problem.design.len());
    for (record, setting) in records.iter().zip(&problem.settings) {
        if record.setting != setting.label() {
            return Err(Error::InvalidInput(format!(
                "record for {} where setting {} was expected",
                record.setting,
                setting.label()
            )));
        }
        if record.observations.len() != trans.len() {
            return Err(Error::InvalidInput(format!(
                "record {} has {} observations, expected {}",
                record.setting,
                record.observations.len(),
                trans.len()
            )));
        }
        for (obs, t) in record.observations.iter().zip(&trans) {
            if obs.spin != t.spin || obs.bra_index != t.bra_index || obs.ket_index != t.ket_index
            {
                return Err(Error::InvalidInput(format!(
                    "record {} observations deviate from the canonical transition order",
                    record.setting
                )));
            }
            data.push(obs.re);
            data.push(obs.im);
        }
    }

    let coefficients = solve_normal_equations(&problem.design, &data)?;

    let mut residual_sq = 0.0;
    for (row, y) in problem.design.iter().zip(&data) {
        let fit: f64 = row.iter().zip(&coefficients).map(|(a, c)| a * c).sum();
        residual_sq += (fit - y) * (fit - y);
    }

    let dim = 1usize << problem.n_qubits;
    let mut raw = ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0));
    for (word, &c) in pauli_words(problem.n_qubits).iter().zip(&coefficients) {
        raw = raw.add(&word.scale(Complex64::new(c, 0.0)))?;
    }
    let (rho, projected) = DensityMatrix::sanitized(&raw)?;
    Ok(TomographyResult {
        rho,
        rank: problem.rank,
        projected,
        residual: residual_sq.sqrt(),
    })
}

/// Extend a base scheme to full rank by scanning pulse words over
/// `{I, X, Y}` in lexicographic order and keeping every word that raises the
/// design-matrix rank. Returns the completed problem and the added labels;
/// a base scheme that is already complete comes back unchanged.
pub fn complete_settings(
    n_qubits: usize,
    base: &[DetectionSetting],
) -> Result<(TomographyProblem, Vec<String>)> {
    let mut settings = base.to_vec();
    let mut problem = TomographyProblem::new(n_qubits, settings.clone())?;
    let mut added = Vec::new();
    if problem.is_complete() {
        return Ok((problem, added));
    }
    for word in lexicographic_words(n_qubits) {
        if problem.is_complete() {
            break;
        }
        if settings.iter().any(|s| s.label() == word) {
            continue;
        }
        let candidate = DetectionSetting::new(&word)?;
        let mut extended = settings.clone();
        extended.push(candidate);
        let next = TomographyProblem::new(n_qubits, extended.clone())?;
        if next.rank() > problem.rank() {
            settings = extended;
            problem = next;
            added.push(word);
        }
    }
    Ok((problem, added))
}

/// Uniform depolarizing channel `(1 - p) rho + p I / 2^n`.
pub fn depolarize(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "depolarizing weight {p} outside [0, 1]"
        )));
    }
    let dim = rho.matrix().rows();
    let mixed = ComplexMatrix::identity(dim).scale(Complex64::new(p / dim as f64, 0.0));
    let mat = rho
        .matrix()
        .scale(Complex64::new(1.0 - p, 0.0))
        .add(&mixed)?;
    DensityMatrix::new(mat)
}

/// All `3^n` pulse words over `{I, X, Y}` in lexicographic order.
fn lexicographic_words(n_qubits: usize) -> Vec<String> {
    let letters = ['I', 'X', 'Y'];
    let mut words = vec![String::new()];
    for _ in 0..n_qubits {
        let mut next = Vec::with_capacity(words.len() * 3);
        for w in &words {
            for l in letters {
                let mut in_progress = w.clone();
                in_progress.push(l);
                next.push(in_progress);
            }
        }
        words = next;
    }
    words
}

/// Non-identity Pauli words, ordered by base-4 digits (I, X, Y, Z) with the
/// first qubit as the most significant digit.
fn pauli_words(n_qubits: usize) -> Vec<ComplexMatrix> {
    let singles = [
        ComplexMatrix::identity(2),
        pauli(1.0, 0.0),
        pauli(0.0, 1.0),
        {
            let mut z = ComplexMatrix::identity(2);
            z.set(1, 1, Complex64::new(-1.0, 0.0));
            z
        },
    ];
    let mut words = Vec::with_capacity((1 << (2 * n_qubits)) - 1);
    for w in 1..1usize << (2 * n_qubits) {
        let mut m = ComplexMatrix::identity(1);
        for q in 0..n_qubits {
            let digit = (w >> (2 * (n_qubits - 1 - q))) & 3;
            m = kron(&m, &singles[digit]);
        }
        words.push(m);
    }
    words
}

fn pauli(x: f64, y: f64) -> ComplexMatrix {
    // x = 1 selects sigma_x, y = 1 selects sigma_y.
    let mut m = ComplexMatrix::zeros(2, 2);
    m.set(0, 1, Complex64::new(x, -y));
    m.set(1, 0, Complex64::new(x, y));
    m
}

fn design_rank(design: &[Vec<f64>]) -> Result<usize> {
    let gram = normal_matrix(design)?;
    let eig = linalg::hermitian_eig(&gram)?;
    let lead = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if lead <= 0.0 {
        return Ok(0);
    }
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > RANK_TOL * lead)
        .count())
}

fn normal_matrix(design: &[Vec<f64>]) -> Result<ComplexMatrix> {
    let cols = design
        .first()
        .ok_or_else(|| Error::InvalidInput("empty design matrix".into()))?
        .len();
    let mut gram = ComplexMatrix::zeros(cols, cols);
    for row in design {
        for (i, &a) in row.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                let v = gram.get(i, j) + Complex64::new(a * b, 0.0);
                gram.set(i, j, v);
            }
        }
    }
    Ok(gram)
}

/// Minimum-norm least squares via eigendecomposition of the normal matrix.
fn solve_normal_equations(design: &[Vec<f64>], data: &[f64]) -> Result<Vec<f64>> {
    if design.len() != data.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} design rows vs {} data points",
            design.len(),
            data.len()
        )));
    }
    let cols = design[0].len();
    let mut rhs = vec![0.0; cols];
    for (row, &y) in design.iter().zip(data) {
        for (i, &a) in row.iter().enumerate() {
            rhs[i] += a * y;
        }
    }
    let gram = normal_matrix(design)?;
    let eig = linalg::hermitian_eig(&gram)?;
    let lead = eig.eigenvalues.first().copied().unwrap_or(0.0);
    let mut solution = vec![0.0; cols];
    if lead <= 0.0 {
        return Ok(solution);
    }
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= RANK_TOL * lead {
            continue;
        }
        let vec = eig.vector(i);
        let mut proj = Complex64::new(0.0, 0.0);
        for (v, &r) in vec.iter().zip(&rhs) {
            proj += v.conj() * r;
        }
        let weight = proj / lambda;
        for (s, v) in solution.iter_mut().zip(&vec) {
            *s += (weight * v).re;
        }
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::state::StateVector;

    #[test]
    fn pulse_words_validate_and_rotate_unitarily() {
        assert!(DetectionSetting::new("IZX").is_err());
        assert!(DetectionSetting::new("").is_err());
        let s = DetectionSetting::new("XYI").unwrap();
        let r = s.rotation();
        let prod = r.adjoint().mul(&r).unwrap();
        assert!(prod.distance(&ComplexMatrix::identity(8)).unwrap() < 1e-12);
    }

    #[test]
    fn pulse_matrices_are_the_pi_half_rotations() {
        // exp(-i pi/4 sigma_x) and exp(-i pi/4 sigma_y).
        let h = 1.0 / 2f64.sqrt();
        let x = pulse_matrix('X');
        assert!((x.get(0, 0) - Complex64::new(h, 0.0)).norm() < 1e-15);
        assert!((x.get(0, 1) - Complex64::new(0.0, -h)).norm() < 1e-15);
        let y = pulse_matrix('Y');
        assert!((y.get(0, 1) - Complex64::new(-h, 0.0)).norm() < 1e-15);
        assert!((y.get(1, 0) - Complex64::new(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn setting_lists_have_expected_shape() {
        let three = detection_settings_3q();
        assert_eq!(three.len(), 11);
        assert_eq!(three[0].label(), "III");
        assert_eq!(three[10].label(), "YYY");
        for scheme in [TwoQubitScheme::AB, TwoQubitScheme::BC] {
            assert_eq!(detection_settings_2q(scheme).len(), 4);
        }
    }

    #[test]
    fn transition_lists_enumerate_single_quantum_pairs() {
        let t3 = transitions(3);
        assert_eq!(t3.len(), 12);
        assert_eq!(
            t3[0],
            Transition {
                spin: 1,
                bra_index: 0,
                ket_index: 4
            }
        );
        for t in &t3 {
            assert_eq!(t.bra_index | (1 << (3 - t.spin)), t.ket_index);
            assert_eq!(t.bra_index & (1 << (3 - t.spin)), 0);
        }
        assert_eq!(transitions(2).len(), 4);
    }

    #[test]
    fn noiseless_identity_setting_reads_matrix_elements() {
        let rho = StateVector::wwbar().density();
        let setting = DetectionSetting::new("III").unwrap();
        let mut rng = stream(0, "unused", 0);
        let record = simulate_readout(&rho, &setting, 0.0, &mut rng).unwrap();
        assert_eq!(record.observations.len(), 12);
        for obs in &record.observations {
            let expected = rho.matrix().get(obs.bra_index, obs.ket_index);
            assert!((obs.re - expected.re).abs() < 1e-15);
            assert!((obs.im - expected.im).abs() < 1e-15);
        }
    }

    #[test]
    fn two_qubit_schemes_are_complete() {
        for scheme in [TwoQubitScheme::AB, TwoQubitScheme::BC] {
            let problem = TomographyProblem::new(2, detection_settings_2q(scheme)).unwrap();
            assert_eq!(problem.rank(), 15);
            assert!(problem.is_complete());
        }
    }

    #[test]
    fn noiseless_two_qubit_roundtrip_is_exact() {
        let rho = StateVector::wwbar()
            .density()
            .partial_trace(&[2, 3])
            .unwrap();
        let problem = TomographyProblem::new(2, detection_settings_2q(TwoQubitScheme::BC)).unwrap();
        let mut rng = stream(0, "unused", 0);
        let records: Vec<MeasurementRecord> = problem
            .settings()
            .iter()
            .map(|s| simulate_readout(&rho, s, 0.0, &mut rng).unwrap())
            .collect();
        let result = reconstruct_linear_inversion(&problem, &records).unwrap();
        assert!(result.rho.matrix().distance(rho.matrix()).unwrap() < 1e-10);
        assert!(result.residual < 1e-10);
        assert!(!result.projected);
    }

    #[test]
    fn record_validation_rejects_mismatches() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let problem = TomographyProblem::new(2, detection_settings_2q(TwoQubitScheme::AB)).unwrap();
        let mut rng = stream(0, "unused", 0);
        let mut records: Vec<MeasurementRecord> = problem
            .settings()
            .iter()
            .map(|s| simulate_readout(&rho, s, 0.0, &mut rng).unwrap())
            .collect();
        records.swap(0, 1);
        assert!(reconstruct_linear_inversion(&problem, &records).is_err());
        records.swap(0, 1);
        records[0].observations.pop();
        assert!(reconstruct_linear_inversion(&problem, &records).is_err());
    }

    #[test]
    fn depolarize_endpoints() {
        let rho = StateVector::ghz().density();
        let same = depolarize(&rho, 0.0).unwrap();
        assert!(same.matrix().distance(rho.matrix()).unwrap() < 1e-15);
        let mixed = depolarize(&rho, 1.0).unwrap();
        let expected = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(mixed.matrix().distance(expected.matrix()).unwrap() < 1e-15);
        assert!(depolarize(&rho, 1.5).is_err());
    }

    #[test]
    fn record_json_roundtrip() {
        let rho = StateVector::w().density();
        let setting = DetectionSetting::new("IXY").unwrap();
        let mut rng = stream(3, "tomography-test", 0);
        let record = simulate_readout(&rho, &setting, 0.01, &mut rng).unwrap();
        let json = serde_json::to_string(&record).unwrap();
        let back: MeasurementRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(record, back);
    }
}
