//! Reconstruction of a three-qubit pure state from its two adjacent
//! two-party reduced density matrices.
//!
//! For a pure global state, the single-qubit marginal of party A and the
//! two-party marginal of BC share a spectrum, and the global state must have
//! the Schmidt form `sum_i e^{i alpha_i} sqrt(p_i) |a_i> (x) |bc_i>` built
//! from their eigenvectors. Pairing eigenvectors fixes everything except the
//! relative phases `alpha_i`, and those are read off the AB marginal: the
//! cross term of `rho_AB` between the two A eigenvectors is proportional to
//! `e^{i alpha_1}`, so a single trace inner product recovers it.
//!
//! When the cross block vanishes (the GHZ marginals are the canonical case)
//! every relative phase is compatible with the data: the reconstruction
//! still returns a state, but flags it as non-unique.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, kron, ComplexMatrix};
use crate::state::{DensityMatrix, StateVector};

/// Eigenvalues of the single-qubit marginal below this are treated as rank
/// deficiency rather than signal.
pub const RANK_CUT: f64 = 1e-7;

/// Cross blocks with Frobenius norm below this carry no phase information;
/// the fit then reports a non-unique reconstruction.
pub const CROSS_BLOCK_TOL: f64 = 1e-8;

/// Matched eigenpairs of `rho_A` and `rho_BC`.
#[derive(Clone, Debug)]
pub struct SchmidtPairing {
    /// Shared spectrum, descending, after the rank cut.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors of the single-qubit marginal, one per eigenvalue.
    pub a_vectors: Vec<Vec<Complex64>>,
    /// Eigenvectors of the two-party marginal, paired by position.
    pub bc_vectors: Vec<Vec<Complex64>>,
    /// True when the kept spectrum has a near-degenerate pair, in which case
    /// the eigenbasis pairing itself is ambiguous.
    pub degenerate: bool,
}

/// Pair the eigendecompositions of the two marginals of a pure state.
///
/// The spectra must agree within `spectra_tol` on the kept eigenvalues, and
/// the BC spectrum may not carry more than `spectra_tol` of weight beyond
/// the rank of the A side.
pub fn schmidt_pairing(
    rho_a: &DensityMatrix,
    rho_bc: &DensityMatrix,
    spectra_tol: f64,
) -> Result<SchmidtPairing> {
    if rho_a.n_qubits() != 1 || rho_bc.n_qubits() != 2 {
        return Err(Error::InvalidInput(format!(
            "pairing expects 1-qubit and 2-qubit marginals, got {} and {}",
            rho_a.n_qubits(),
            rho_bc.n_qubits()
        )));
    }
    let eig_a = linalg::hermitian_eig(rho_a.matrix())?;
    let eig_bc = linalg::hermitian_eig(rho_bc.matrix())?;

    let rank = eig_a.eigenvalues.iter().filter(|&&l| l > RANK_CUT).count();
    if rank == 0 {
        return Err(Error::InvalidInput(
            "single-qubit marginal has no spectral weight".into(),
        ));
    }

    let mut deviation: f64 = 0.0;
    for i in 0..rank {
        deviation = deviation.max((eig_a.eigenvalues[i] - eig_bc.eigenvalues[i]).abs());
    }
    for &l in eig_bc.eigenvalues.iter().skip(rank) {
        deviation = deviation.max(l.abs());
    }
    if deviation > spectra_tol {
        return Err(Error::SpectraMismatch {
            deviation,
            tolerance: spectra_tol,
        });
    }

    let eigenvalues: Vec<f64> = eig_a.eigenvalues[..rank].to_vec();
    let degenerate = eigenvalues
        .windows(2)
        .any(|w| (w[0] - w[1]).abs() < linalg::DEGENERACY_TOL);
    let a_vectors = (0..rank).map(|i| eig_a.vector(i)).collect();
    let bc_vectors = (0..rank).map(|i| eig_bc.vector(i)).collect();
    Ok(SchmidtPairing {
        eigenvalues,
        a_vectors,
        bc_vectors,
        degenerate,
    })
}

/// Assemble `sum_i e^{i alpha_i} sqrt(p_i) |a_i> (x) |bc_i>`, normalized.
pub fn compatible_state(pairing: &SchmidtPairing, alphas: &[f64]) -> Result<StateVector> {
    if alphas.len() != pairing.eigenvalues.len() {
        return Err(Error::InvalidInput(format!(
            "{} phases for {} Schmidt terms",
            alphas.len(),
            pairing.eigenvalues.len()
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    for (i, (&p, &alpha)) in pairing.eigenvalues.iter().zip(alphas).enumerate() {
        let weight = Complex64::from_polar(p.sqrt(), alpha);
        for (ia, &a) in pairing.a_vectors[i].iter().enumerate() {
            for (ibc, &bc) in pairing.bc_vectors[i].iter().enumerate() {
                amps[ia * 4 + ibc] += weight * a * bc;
            }
        }
    }
    StateVector::from_unnormalized(3, amps)
}

/// Relative phases extracted from the AB marginal.
#[derive(Clone, Debug)]
pub struct PhaseFit {
    /// One phase per Schmidt term; the first is pinned to zero.
    pub alphas: Vec<f64>,
    /// Frobenius deviation of the fitted state's AB marginal from the input.
    pub residual: f64,
    /// False when the data cannot distinguish the relative phase: degenerate
    /// spectrum or vanishing cross block.
    pub unique: bool,
}

/// Determine the relative Schmidt phases from `rho_AB`.
///
/// The cross operator `c = sqrt(p_0 p_1) (|a_0><a_1|) (x) tr_C |bc_0><bc_1|`
/// satisfies `tr(rho_AB c) = p_0 p_1 ||K||_F^2 e^{i alpha_1}` for marginals
/// of a genuine pure state, so the phase is the argument of that trace.
pub fn fit_phases(pairing: &SchmidtPairing, rho_ab: &DensityMatrix) -> Result<PhaseFit> {
    if rho_ab.n_qubits() != 2 {
        return Err(Error::InvalidInput(format!(
            "phase fit expects a 2-qubit marginal, got {} qubits",
            rho_ab.n_qubits()
        )));
    }
    let rank = pairing.eigenvalues.len();
    let (alphas, unique) = match rank {
        1 => (vec![0.0], true),
        2 => {
            let k = trace_c_outer(&pairing.bc_vectors[0], &pairing.bc_vectors[1]);
            let a_outer = ComplexMatrix::outer(&pairing.a_vectors[0], &pairing.a_vectors[1]);
            let weight = (pairing.eigenvalues[0] * pairing.eigenvalues[1]).sqrt();
            let cross = kron(&a_outer, &k).scale(Complex64::new(weight, 0.0));
            if cross.frobenius_norm() < CROSS_BLOCK_TOL {
                (vec![0.0, 0.0], false)
            } else {
                let inner = rho_ab.matrix().mul(&cross)?.trace();
                (vec![0.0, inner.arg()], !pairing.degenerate)
            }
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "a single-qubit marginal supports rank 1 or 2, got {rank}"
            )))
        }
    };
    let state = compatible_state(pairing, &alphas)?;
    let fitted_ab = state.density().partial_trace(&[1, 2])?;
    let residual = fitted_ab.matrix().distance(rho_ab.matrix())?;
    Ok(PhaseFit {
        alphas,
        residual,
        unique,
    })
}

/// `tr_C |u><v|` for 4-dimensional BC vectors: `K[b][b'] = sum_c u[bc]
/// conj(v[b'c])`.
fn trace_c_outer(u: &[Complex64], v: &[Complex64]) -> ComplexMatrix {
    let mut k = ComplexMatrix::zeros(2, 2);
    for b in 0..2 {
        for bp in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..2 {
                acc += u[b * 2 + c] * v[bp * 2 + c].conj();
            }
            k.set(b, bp, acc);
        }
    }
    k
}

/// Frobenius deviation between the two marginals' views of the shared qubit
/// B: `|| tr_A rho_AB - tr_C rho_BC ||_F`.
pub fn consistency_check(rho_ab: &DensityMatrix, rho_bc: &DensityMatrix) -> Result<f64> {
    if rho_ab.n_qubits() != 2 || rho_bc.n_qubits() != 2 {
        return Err(Error::InvalidInput(
            "consistency check expects two 2-qubit marginals".into(),
        ));
    }
    let b_from_ab = rho_ab.partial_trace(&[2])?;
    let b_from_bc = rho_bc.partial_trace(&[1])?;
    b_from_ab.matrix().distance(b_from_bc.matrix())
}

/// Tolerances for [`reconstruct_from_marginals`].
#[derive(Clone, Copy, Debug)]
pub struct ReconstructOptions {
    /// Maximum allowed disagreement of the shared-qubit marginals.
    pub consistency_tol: f64,
    /// Maximum allowed spectral disagreement between `rho_A` and `rho_BC`.
    pub spectra_tol: f64,
}

impl ReconstructOptions {
    /// Tight tolerances for analytically exact marginals.
    pub fn exact() -> Self {
        ReconstructOptions {
            consistency_tol: 1e-6,
            spectra_tol: 1e-5,
        }
    }

    /// Loose tolerances for marginals estimated from noisy tomography.
    pub fn noisy() -> Self {
        ReconstructOptions {
            consistency_tol: 0.05,
            spectra_tol: 0.05,
        }
    }
}

/// Outcome of a marginal-based reconstruction.
#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    /// The reconstructed pure state.
    pub state: StateVector,
    /// Combined Frobenius deviation of the state's AB and BC marginals from
    /// the (sanitized) inputs.
    pub residual: f64,
    /// False when other global states share the same marginals.
    pub unique: bool,
    /// Observed disagreement of the shared-qubit marginals.
    pub consistency_deviation: f64,
}

/// Rebuild the global pure state from the AB and BC marginals.
///
/// Inputs are sanitized (symmetrized, spectrum clipped, renormalized) first,
/// so estimates from noisy tomography are accepted as-is.
pub fn reconstruct_from_marginals(
    rho_ab: &DensityMatrix,
    rho_bc: &DensityMatrix,
    options: ReconstructOptions,
) -> Result<ReconstructionResult> {
    if rho_ab.n_qubits() != 2 || rho_bc.n_qubits() != 2 {
        return Err(Error::InvalidInput(
            "reconstruction expects two 2-qubit marginals".into(),
        ));
    }
    let (ab, _) = DensityMatrix::sanitized(rho_ab.matrix())?;
    let (bc, _) = DensityMatrix::sanitized(rho_bc.matrix())?;

    let consistency_deviation = consistency_check(&ab, &bc)?;
    if consistency_deviation > options.consistency_tol {
        return Err(Error::InconsistentMarginals {
            deviation: consistency_deviation,
            tolerance: options.consistency_tol,
        });
    }

    let rho_a = ab.partial_trace(&[1])?;
    let pairing = schmidt_pairing(&rho_a, &bc, options.spectra_tol)?;
    let fit = fit_phases(&pairing, &ab)?;
    let state = compatible_state(&pairing, &fit.alphas)?;

    let density = state.density();
    let res_ab = density
        .partial_trace(&[1, 2])?
        .matrix()
        .distance(ab.matrix())?;
    let res_bc = density
        .partial_trace(&[2, 3])?
        .matrix()
        .distance(bc.matrix())?;
    Ok(ReconstructionResult {
        state,
        residual: (res_ab * res_ab + res_bc * res_bc).sqrt(),
        unique: fit.unique,
        consistency_deviation,
    })
}
