//! State vectors and density matrices.
//!
//! Qubit 1 is the leftmost ket label and the most significant bit of a basis
//! index: |b1 b2 b3> lives at index b1*4 + b2*2 + b3. The named three-qubit
//! states used throughout:
//!
//! * GHZ    = (|000> + |111>)/sqrt(2)
//! * W      = (|001> + |010> + |100>)/sqrt(3)
//! * W-bar  = (|011> + |101> + |110>)/sqrt(3), the bit-flipped W
//! * WW-bar = (W + W-bar)/sqrt(2), uniform over the six weight-1 and
//!   weight-2 kets with amplitude 1/sqrt(6)

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};

/// Constructors accepted by [`make_state`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateName {
    W,
    WBar,
    WWBar,
    Ghz,
    /// Three-qubit computational basis ket by index (0..=7).
    Basis(usize),
}

/// Normalized pure state on `n_qubits` qubits.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "StateVectorRepr", into = "StateVectorRepr")]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct StateVectorRepr {
    n_qubits: usize,
    amplitudes: Vec<[f64; 2]>,
}

impl From<StateVector> for StateVectorRepr {
    fn from(s: StateVector) -> Self {
        StateVectorRepr {
            n_qubits: s.n_qubits,
            amplitudes: s.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<StateVectorRepr> for StateVector {
    type Error = Error;

    fn try_from(r: StateVectorRepr) -> Result<Self> {
        let amps = r
            .amplitudes
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        StateVector::new(r.n_qubits, amps)
    }
}

impl StateVector {
    /// Accepts amplitudes normalized within 1e-10.
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_qubit_range(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::InvalidInput(format!(
                "expected {} amplitudes for {} qubits, got {}",
                1 << n_qubits,
                n_qubits,
                amplitudes.len()
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidInput("non-finite amplitude".into()));
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    /// Normalizes the given amplitudes; errors if the norm is negligible.
    pub fn from_unnormalized(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if norm < 1e-12 {
            return Err(Error::NotNormalized { norm });
        }
        let scaled = amplitudes.into_iter().map(|z| z / norm).collect();
        StateVector::new(n_qubits, scaled)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_range(n_qubits)?;
        if index >= 1 << n_qubits {
            return Err(Error::InvalidInput(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes: amps,
        })
    }

    pub fn ghz() -> Self {
        let a = 1.0 / 2f64.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[0] = Complex64::new(a, 0.0);
        amps[7] = Complex64::new(a, 0.0);
        StateVector {
            n_qubits: 3,
            amplitudes: amps,
        }
    }

    pub fn w() -> Self {
        let a = 1.0 / 3f64.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        for idx in [1, 2, 4] {
            amps[idx] = Complex64::new(a, 0.0);
        }
        StateVector {
            n_qubits: 3,
            amplitudes: amps,
        }
    }

    pub fn wbar() -> Self {
        let a = 1.0 / 3f64.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        for idx in [3, 5, 6] {
            amps[idx] = Complex64::new(a, 0.0);
        }
        StateVector {
            n_qubits: 3,
            amplitudes: amps,
        }
    }

    pub fn wwbar() -> Self {
        let a = 1.0 / 6f64.sqrt();
        let mut amps = vec![Complex64::new(a, 0.0); 8];
        amps[0] = Complex64::new(0.0, 0.0);
        amps[7] = Complex64::new(0.0, 0.0);
        StateVector {
            n_qubits: 3,
            amplitudes: amps,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    /// <self|other>.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {} qubits",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |<self|other>|^2; equals the mixed-state fidelity for pure inputs.
    pub fn overlap_squared(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn density(&self) -> DensityMatrix {
        let mat = ComplexMatrix::outer(&self.amplitudes, &self.amplitudes);
        DensityMatrix {
            n_qubits: self.n_qubits,
            mat,
        }
    }

    /// Copy with the global phase gauged so the largest-magnitude amplitude
    /// is real positive.
    pub fn phase_gauged(&self) -> StateVector {
        let mut amps = self.amplitudes.clone();
        linalg::gauge_phase(&mut amps);
        StateVector {
            n_qubits: self.n_qubits,
            amplitudes: amps,
        }
    }
}

/// ||actual - expected||_2 after aligning the global phase of `actual` at the
/// largest-magnitude component of `expected`.
pub fn deviation_up_to_phase(actual: &StateVector, expected: &StateVector) -> Result<f64> {
    if actual.dim() != expected.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} qubits",
            actual.n_qubits, expected.n_qubits
        )));
    }
    let (mut anchor, mut mag) = (0, 0.0);
    for (i, z) in expected.amplitudes.iter().enumerate() {
        if z.norm() > mag {
            anchor = i;
            mag = z.norm();
        }
    }
    let a = actual.amplitudes[anchor];
    let e = expected.amplitudes[anchor];
    // Rotate `actual` so its anchor amplitude has the phase of the expected
    // anchor; if the actual anchor vanishes no rotation helps.
    let correction = if a.norm() > 1e-15 {
        (e / e.norm()) * (a.conj() / a.norm())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let diff: f64 = actual
        .amplitudes
        .iter()
        .zip(&expected.amplitudes)
        .map(|(x, y)| (x * correction - y).norm_sqr())
        .sum();
    Ok(diff.sqrt())
}

pub fn make_state(name: StateName) -> Result<StateVector> {
    match name {
        StateName::W => Ok(StateVector::w()),
        StateName::WBar => Ok(StateVector::wbar()),
        StateName::WWBar => Ok(StateVector::wwbar()),
        StateName::Ghz => Ok(StateVector::ghz()),
        StateName::Basis(index) => StateVector::basis(3, index),
    }
}

/// Draw a Haar-distributed pure state: independent standard complex Gaussian
/// amplitudes, normalized.
pub fn random_pure(n_qubits: usize, rng: &mut impl Rng) -> Result<StateVector> {
    check_qubit_range(n_qubits)?;
    let normal = Normal::new(0.0, 1.0).expect("valid normal parameters");
    let amps: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|_| Complex64::new(normal.sample(rng), normal.sample(rng)))
        .collect();
    StateVector::from_unnormalized(n_qubits, amps)
}

/// Draw a full-rank random density matrix: `g g^dag / tr(g g^dag)` for a
/// square matrix `g` of standard complex Gaussians.
pub fn random_density(n_qubits: usize, rng: &mut impl Rng) -> Result<DensityMatrix> {
    check_qubit_range(n_qubits)?;
    let dim = 1usize << n_qubits;
    let normal = Normal::new(0.0, 1.0).expect("valid normal parameters");
    let mut g = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            g.set(r, c, Complex64::new(normal.sample(rng), normal.sample(rng)));
        }
    }
    let gram = g.mul(&g.adjoint())?;
    let trace = gram.trace().re;
    let rho = gram.scale(Complex64::new(1.0 / trace, 0.0));
    DensityMatrix::new(rho)
}

/// Density matrix: Hermitian within 1e-8, unit trace within 1e-8, spectrum
/// bounded below by -1e-8.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let n_qubits = linalg::qubit_count(&mat)?;
        check_qubit_range(n_qubits)?;
        let dev = mat.hermiticity_deviation();
        if dev > linalg::HERMITICITY_TOL * mat.frobenius_norm().max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "density matrix trace {} + {}i is not 1",
                tr.re, tr.im
            )));
        }
        let eig = linalg::hermitian_eig(&mat)?;
        if let Some(&lambda) = eig
            .eigenvalues
            .iter()
            .find(|&&l| l < -linalg::PSD_CLIP)
        {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: lambda });
        }
        Ok(DensityMatrix { n_qubits, mat })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        state.density()
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubit_range(n_qubits)?;
        let dim = 1 << n_qubits;
        let mat = ComplexMatrix::identity(dim).scale((1.0 / dim as f64).into());
        Ok(DensityMatrix { n_qubits, mat })
    }

    /// Hermitize, clip negative eigenvalues at zero, renormalize the trace.
    ///
    /// This is the projection applied to noisy reconstructions; the flag
    /// reports whether any eigenvalue actually needed clipping.
    pub fn sanitized(mat: &ComplexMatrix) -> Result<(Self, bool)> {
        let n_qubits = linalg::qubit_count(mat)?;
        check_qubit_range(n_qubits)?;
        let herm = mat.hermitize();
        let eig = linalg::hermitian_eig(&herm)?;
        let mut clipped = false;
        let dim = herm.rows();
        // Negatives within the eigensolver's accuracy are exact zeros; only
        // material negativity counts as a clipping event.
        let noise = linalg::JACOBI_TOL * herm.frobenius_norm().max(1.0);
        let mut rebuilt = ComplexMatrix::zeros(dim, dim);
        let mut total = 0.0;
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            let lambda = if lambda < 0.0 {
                if lambda < -noise {
                    clipped = true;
                }
                0.0
            } else {
                lambda
            };
            if lambda == 0.0 {
                continue;
            }
            total += lambda;
            let v = eig.vector(i);
            rebuilt = rebuilt
                .add(&ComplexMatrix::outer(&v, &v).scale(lambda.into()))
                .unwrap();
        }
        if total < 1e-12 {
            return Err(Error::InvalidInput(
                "matrix has no positive spectral weight".into(),
            ));
        }
        let mat = rebuilt.scale((1.0 / total).into()).hermitize();
        Ok((DensityMatrix { n_qubits, mat }, clipped))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// Reduced state on the kept qubits (1-based, strictly increasing).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let reduced = linalg::partial_trace(&self.mat, keep)?;
        // Mathematically trace-preserving and PSD; skip the spectral check.
        Ok(DensityMatrix {
            n_qubits: keep.len(),
            mat: reduced,
        })
    }
}

fn check_qubit_range(n_qubits: usize) -> Result<()> {
    if !(1..=6).contains(&n_qubits) {
        return Err(Error::InvalidInput(format!(
            "qubit count {n_qubits} outside the supported range 1..=6"
        )));
    }
    Ok(())
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_states_are_normalized() {
        for name in [StateName::W, StateName::WBar, StateName::WWBar, StateName::Ghz] {
            let s = make_state(name).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-14);
            assert_eq!(s.n_qubits(), 3);
        }
    }

    #[test]
    fn wwbar_is_uniform_over_middle_kets() {
        let s = StateVector::wwbar();
        let a = 1.0 / 6f64.sqrt();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!(s.amplitudes()[7].norm() < 1e-15);
        for idx in 1..=6 {
            assert!((s.amplitudes()[idx].re - a).abs() < 1e-15);
        }
    }

    #[test]
    fn wwbar_is_even_mix_of_w_and_wbar() {
        let w = StateVector::w();
        let wbar = StateVector::wbar();
        let mix: Vec<Complex64> = w
            .amplitudes()
            .iter()
            .zip(wbar.amplitudes())
            .map(|(a, b)| (a + b) / 2f64.sqrt())
            .collect();
        let mix = StateVector::new(3, mix).unwrap();
        assert!((mix.overlap_squared(&StateVector::wwbar()).unwrap() - 1.0).abs() < 1e-14);
        // W and W-bar are orthogonal, so the mix is normalized on its own.
        assert!(w.inner(&wbar).unwrap().norm() < 1e-15);
    }

    #[test]
    fn constructor_rejects_bad_inputs() {
        assert!(StateVector::new(3, vec![Complex64::new(1.0, 0.0); 4]).is_err());
        let unnorm = vec![Complex64::new(0.5, 0.0); 8];
        assert!(StateVector::new(3, unnorm.clone()).is_err());
        assert!(StateVector::from_unnormalized(3, unnorm).is_ok());
        let zeros = vec![Complex64::new(0.0, 0.0); 8];
        assert!(StateVector::from_unnormalized(3, zeros).is_err());
        assert!(StateVector::basis(3, 8).is_err());
        assert!(StateVector::basis(0, 0).is_err());
        assert!(StateVector::basis(7, 0).is_err());
    }

    #[test]
    fn density_from_pure_has_unit_trace_and_purity() {
        let rho = StateVector::wwbar().density();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-14);
        let sq = rho.matrix().mul(rho.matrix()).unwrap();
        assert!((sq.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_constructor_validates() {
        // Non-unit trace.
        let m = ComplexMatrix::identity(2);
        assert!(DensityMatrix::new(m).is_err());
        // Negative eigenvalue.
        let m = ComplexMatrix::diag(&[1.5, -0.5]);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        // Valid mixed state.
        let m = ComplexMatrix::diag(&[0.5, 0.5]);
        assert!(DensityMatrix::new(m).is_ok());
    }

    #[test]
    fn sanitized_clips_and_renormalizes() {
        let m = ComplexMatrix::diag(&[1.1, -0.1]);
        let (rho, clipped) = DensityMatrix::sanitized(&m).unwrap();
        assert!(clipped);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!((rho.matrix().get(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deviation_up_to_phase_ignores_global_phase() {
        let s = StateVector::wwbar();
        let rotated: Vec<Complex64> = s
            .amplitudes()
            .iter()
            .map(|z| z * Complex64::from_polar(1.0, 1.234))
            .collect();
        let rotated = StateVector::new(3, rotated).unwrap();
        assert!(deviation_up_to_phase(&rotated, &s).unwrap() < 1e-14);
        // A genuinely different state keeps a large deviation.
        let other = StateVector::ghz();
        assert!(deviation_up_to_phase(&other, &s).unwrap() > 0.5);
    }

    #[test]
    fn serde_roundtrip_preserves_amplitudes() {
        let s = StateVector::wwbar();
        let json = serde_json::to_string(&s).unwrap();
        let back: StateVector = serde_json::from_str(&json).unwrap();
        assert!((s.overlap_squared(&back).unwrap() - 1.0).abs() < 1e-14);
        // Deserialization enforces normalization.
        let bad = r#"{"n_qubits":1,"amplitudes":[[0.9,0.0],[0.0,0.0]]}"#;
        assert!(serde_json::from_str::<StateVector>(bad).is_err());
    }
}
