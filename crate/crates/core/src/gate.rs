//! Three-qubit gate set and operator embedding.
//!
//! The y-rotation follows the matrix
//!
//! ```text
//! U[alpha]_y = [ cos(alpha/2)  -sin(alpha/2) ]
//!              [ sin(alpha/2)   cos(alpha/2) ]
//! ```
//!
//! Controlled rotations apply U[alpha]_y to the target when the control is
//! |1>. The diagonal phase gate carries one phase per basis ket and models
//! the phase-accrual/compensation steps of the pulsed implementation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::state::StateVector;

pub const N_QUBITS: usize = 3;
const DIM: usize = 1 << N_QUBITS;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    RotationY {
        qubit: usize,
        angle: f64,
    },
    ControlledRotationY {
        control: usize,
        target: usize,
        angle: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// diag(exp(i*phases[k])) over the eight basis kets.
    PhaseDiag {
        phases: Vec<f64>,
    },
}

impl Gate {
    pub fn rotation_y(qubit: usize, angle: f64) -> Result<Gate> {
        check_qubit(qubit)?;
        check_angle(angle)?;
        Ok(Gate::RotationY { qubit, angle })
    }

    pub fn controlled_rotation_y(control: usize, target: usize, angle: f64) -> Result<Gate> {
        check_qubit(control)?;
        check_qubit(target)?;
        check_angle(angle)?;
        if control == target {
            return Err(Error::InvalidInput(
                "control and target must differ".into(),
            ));
        }
        Ok(Gate::ControlledRotationY {
            control,
            target,
            angle,
        })
    }

    pub fn cnot(control: usize, target: usize) -> Result<Gate> {
        check_qubit(control)?;
        check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidInput(
                "control and target must differ".into(),
            ));
        }
        Ok(Gate::Cnot { control, target })
    }

    pub fn phase_diag(phases: Vec<f64>) -> Result<Gate> {
        if phases.len() != DIM {
            return Err(Error::InvalidInput(format!(
                "phase gate needs {DIM} phases, got {}",
                phases.len()
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite phase".into()));
        }
        Ok(Gate::PhaseDiag { phases })
    }

    /// Realized 8x8 unitary.
    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            Gate::RotationY { qubit, angle } => {
                embed_operator(&rotation_y_matrix(*angle), &[*qubit], N_QUBITS)
                    .expect("validated on construction")
            }
            Gate::ControlledRotationY {
                control,
                target,
                angle,
            } => {
                let mut block = ComplexMatrix::identity(4);
                let u = rotation_y_matrix(*angle);
                for r in 0..2 {
                    for c in 0..2 {
                        block.set(2 + r, 2 + c, u.get(r, c));
                    }
                }
                embed_operator(&block, &[*control, *target], N_QUBITS)
                    .expect("validated on construction")
            }
            Gate::Cnot { control, target } => {
                let mut block = ComplexMatrix::identity(4);
                block.set(2, 2, Complex64::new(0.0, 0.0));
                block.set(3, 3, Complex64::new(0.0, 0.0));
                block.set(2, 3, Complex64::new(1.0, 0.0));
                block.set(3, 2, Complex64::new(1.0, 0.0));
                embed_operator(&block, &[*control, *target], N_QUBITS)
                    .expect("validated on construction")
            }
            Gate::PhaseDiag { phases } => {
                let mut m = ComplexMatrix::zeros(DIM, DIM);
                for (k, &p) in phases.iter().enumerate() {
                    m.set(k, k, Complex64::from_polar(1.0, p));
                }
                m
            }
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        apply_matrix(&self.matrix(), state)
    }
}

/// The 2x2 y-rotation.
pub fn rotation_y_matrix(angle: f64) -> ComplexMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    let mut m = ComplexMatrix::zeros(2, 2);
    m.set(0, 0, Complex64::new(c, 0.0));
    m.set(0, 1, Complex64::new(-s, 0.0));
    m.set(1, 0, Complex64::new(s, 0.0));
    m.set(1, 1, Complex64::new(c, 0.0));
    m
}

/// Embed a 2^k-dimensional operator acting on the listed qubits into an
/// n-qubit space, identity on the rest.
///
/// The first listed qubit supplies the most significant bit of the
/// operator's own index; the list need not be sorted (so a 4-dim operator on
/// `[3, 1]` reads qubit 3 as its leading label).
pub fn embed_operator(
    op: &ComplexMatrix,
    qubits: &[usize],
    n_qubits: usize,
) -> Result<ComplexMatrix> {
    if !op.is_square() || op.rows() != 1 << qubits.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, expected {} for {} qubits",
            op.rows(),
            op.cols(),
            1 << qubits.len(),
            qubits.len()
        )));
    }
    if qubits.iter().any(|&q| q < 1 || q > n_qubits) {
        return Err(Error::InvalidInput(format!(
            "qubit list {qubits:?} out of range for {n_qubits} qubits"
        )));
    }
    let mut seen = vec![false; n_qubits + 1];
    for &q in qubits {
        if seen[q] {
            return Err(Error::InvalidInput(format!("duplicate qubit {q}")));
        }
        seen[q] = true;
    }

    let k = qubits.len();
    let dim = 1usize << n_qubits;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for row in 0..dim {
        for col in 0..dim {
            // Bits off the listed qubits must match; listed bits address op.
            let ok = (1..=n_qubits)
                .all(|q| seen[q] || bit_of(row, q, n_qubits) == bit_of(col, q, n_qubits));
            if !ok {
                continue;
            }
            let mut r_sub = 0usize;
            let mut c_sub = 0usize;
            for (pos, &q) in qubits.iter().enumerate() {
                r_sub |= bit_of(row, q, n_qubits) << (k - 1 - pos);
                c_sub |= bit_of(col, q, n_qubits) << (k - 1 - pos);
            }
            out.set(row, col, op.get(r_sub, c_sub));
        }
    }
    Ok(out)
}

#[inline]
fn bit_of(index: usize, qubit: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - qubit)) & 1
}

/// Apply a square operator to a state of matching dimension; the result is
/// renormalization-free (unitary inputs preserve the norm).
pub fn apply_matrix(op: &ComplexMatrix, state: &StateVector) -> Result<StateVector> {
    let amps = op.mul_vec(state.amplitudes())?;
    StateVector::new(state.n_qubits(), amps)
}

/// Apply a 2^k-dimensional operator to the listed qubits of a raw amplitude
/// vector, in place, without materializing the embedded matrix.
///
/// Same index convention as [`embed_operator`]; the operator need not be
/// unitary (projectors shrink the norm), so callers own renormalization.
pub fn apply_on_qubits(
    amps: &mut [Complex64],
    op: &ComplexMatrix,
    qubits: &[usize],
    n_qubits: usize,
) -> Result<()> {
    if amps.len() != 1 << n_qubits {
        return Err(Error::DimensionMismatch(format!(
            "state has {} amplitudes, expected {}",
            amps.len(),
            1 << n_qubits
        )));
    }
    if !op.is_square() || op.rows() != 1 << qubits.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, expected {} for {} qubits",
            op.rows(),
            op.cols(),
            1 << qubits.len(),
            qubits.len()
        )));
    }
    if qubits.iter().any(|&q| q < 1 || q > n_qubits) {
        return Err(Error::InvalidInput(format!(
            "qubit list {qubits:?} out of range for {n_qubits} qubits"
        )));
    }
    let k = qubits.len();
    let masks: Vec<usize> = qubits.iter().map(|&q| 1usize << (n_qubits - q)).collect();
    if masks.iter().enumerate().any(|(i, &m)| {
        masks[i + 1..].contains(&m)
    }) {
        return Err(Error::InvalidInput("duplicate qubit".into()));
    }
    let all_mask: usize = masks.iter().sum();
    let sub_dim = 1usize << k;
    let mut gathered = vec![Complex64::new(0.0, 0.0); sub_dim];
    for base in 0..amps.len() {
        if base & all_mask != 0 {
            continue;
        }
        for (s, g) in gathered.iter_mut().enumerate() {
            let mut idx = base;
            for (pos, &mask) in masks.iter().enumerate() {
                if (s >> (k - 1 - pos)) & 1 == 1 {
                    idx |= mask;
                }
            }
            *g = amps[idx];
        }
        for row in 0..sub_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, g) in gathered.iter().enumerate() {
                acc += op.get(row, c) * g;
            }
            let mut idx = base;
            for (pos, &mask) in masks.iter().enumerate() {
                if (row >> (k - 1 - pos)) & 1 == 1 {
                    idx |= mask;
                }
            }
            amps[idx] = acc;
        }
    }
    Ok(())
}

fn check_qubit(q: usize) -> Result<()> {
    if !(1..=N_QUBITS).contains(&q) {
        return Err(Error::InvalidInput(format!(
            "qubit {q} outside 1..={N_QUBITS}"
        )));
    }
    Ok(())
}

fn check_angle(a: f64) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("non-finite angle".into()));
    }
    Ok(())
}
