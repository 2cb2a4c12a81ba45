//! JSON state files exchanged between pipeline stages.
//!
//! A file holds either a pure state (2^n amplitudes) or a density matrix
//! (4^n row-major entries), each entry an `[re, im]` pair, plus a free-form
//! string metadata map recording provenance (stage, seed, noise levels,
//! diagnostics). Serialization is deterministic: metadata keys are sorted
//! and floats survive a write-read round trip bit for bit.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use wwbar_core::linalg::ComplexMatrix;
use wwbar_core::{DensityMatrix, Error, StateVector};

/// What the `data` field encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Density,
}

/// One state artifact on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub kind: StateKind,
    pub n_qubits: usize,
    pub data: Vec<[f64; 2]>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// Why a state file could not be read, written, or converted.
#[derive(Debug)]
pub enum FileError {
    Io { path: PathBuf, source: std::io::Error },
    Json { path: PathBuf, source: serde_json::Error },
    /// Parsed fine but the payload violates a state invariant.
    Invalid(Error),
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            FileError::Json { path, source } => write!(f, "{}: {source}", path.display()),
            FileError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl StateFile {
    /// Wrap a pure state; metadata starts empty.
    pub fn from_pure(state: &StateVector) -> Self {
        StateFile {
            kind: StateKind::Pure,
            n_qubits: state.n_qubits(),
            data: state.amplitudes().iter().map(|a| [a.re, a.im]).collect(),
            metadata: BTreeMap::new(),
        }
    }

    /// Wrap a density matrix row by row; metadata starts empty.
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let dim = rho.dim();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                let z = rho.matrix().get(r, c);
                data.push([z.re, z.im]);
            }
        }
        StateFile {
            kind: StateKind::Density,
            n_qubits: rho.n_qubits(),
            data,
            metadata: BTreeMap::new(),
        }
    }

    /// Decode as a pure state, enforcing normalization.
    pub fn to_pure(&self) -> Result<StateVector, FileError> {
        if self.kind != StateKind::Pure {
            return Err(FileError::Invalid(Error::InvalidInput(
                "state file does not hold a pure state".into(),
            )));
        }
        let amps = self.data.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        StateVector::new(self.n_qubits, amps).map_err(FileError::Invalid)
    }

    /// Decode as a density matrix; a pure payload is promoted to its
    /// projector.
    pub fn to_density(&self) -> Result<DensityMatrix, FileError> {
        match self.kind {
            StateKind::Pure => Ok(self.to_pure()?.density()),
            StateKind::Density => {
                let dim = 1usize << self.n_qubits;
                if self.data.len() != dim * dim {
                    return Err(FileError::Invalid(Error::InvalidInput(format!(
                        "density data length {} does not match {dim}x{dim}",
                        self.data.len()
                    ))));
                }
                let rows: Vec<Vec<Complex64>> = (0..dim)
                    .map(|r| {
                        (0..dim)
                            .map(|c| {
                                let [re, im] = self.data[r * dim + c];
                                Complex64::new(re, im)
                            })
                            .collect()
                    })
                    .collect();
                let mat = ComplexMatrix::from_rows(&rows).map_err(FileError::Invalid)?;
                DensityMatrix::new(mat).map_err(FileError::Invalid)
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self, FileError> {
        let text = fs::read_to_string(path)
            .map_err(|source| FileError::Io { path: path.into(), source })?;
        serde_json::from_str(&text)
            .map_err(|source| FileError::Json { path: path.into(), source })
    }

    pub fn save(&self, path: &Path) -> Result<(), FileError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|source| FileError::Json { path: path.into(), source })?;
        text.push('\n');
        fs::write(path, text).map_err(|source| FileError::Io { path: path.into(), source })
    }
}
