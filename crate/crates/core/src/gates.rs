//! Finite unitary gate sets and their averages.
//!
//! Gate indices are 0-based positions into [`GateSet::gates`]. Gates that
//! differ only by a global phase are treated as the same gate.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// Tolerance used for equality up to global phase.
pub const PHASE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GateSet {
    name: String,
    gates: Vec<CMatrix>,
    labels: Vec<String>,
    design_order: u8,
    /// Qubit gate set this one was embedded from, if any. Inversion is
    /// resolved on the logical gates.
    logical: Option<Box<GateSet>>,
}

impl GateSet {
    /// Builds a gate set, checking unitarity, matching dimensions and label
    /// uniqueness. `design_order` is taken on trust; see [`twirl`] to verify.
    pub fn new(
        name: impl Into<String>,
        gates: Vec<CMatrix>,
        labels: Vec<String>,
        design_order: u8,
    ) -> Result<Self> {
        let dim = gates
            .first()
            .ok_or_else(|| Error::InvalidGateSet("no gates".into()))?
            .nrows();
        if labels.len() != gates.len() {
            return Err(Error::InvalidGateSet(format!(
                "{} labels for {} gates",
                labels.len(),
                gates.len()
            )));
        }
        for (g, label) in gates.iter().zip(&labels) {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: g.nrows(),
                });
            }
            let deviation = linalg::unitarity_deviation(g);
            if deviation >= 1e-12 {
                return Err(Error::InvalidGateSet(format!(
                    "gate {label} is not unitary (deviation {deviation:e})"
                )));
            }
        }
        let mut sorted = labels.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGateSet("duplicate labels".into()));
        }
        Ok(Self {
            name: name.into(),
            gates,
            labels,
            design_order,
            logical: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.gates[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> &[CMatrix] {
        &self.gates
    }

    pub fn gate(&self, index: usize) -> Result<&CMatrix> {
        self.gates.get(index).ok_or(Error::GateIndexOutOfRange {
            index,
            len: self.len(),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn design_order(&self) -> u8 {
        self.design_order
    }

    pub fn logical(&self) -> Option<&GateSet> {
        self.logical.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Every gate embedded as `U ⊕ e^{iθ}` on a qutrit.
    ///
    /// The result is not a design on the qutrit, so `design_order` is 0.
    pub fn embedded_in_qutrit(&self, theta: f64) -> Result<GateSet> {
        let gates = self
            .gates
            .iter()
            .map(|g| embed_in_qutrit(g, theta))
            .collect::<Result<Vec<_>>>()?;
        Ok(GateSet {
            name: format!("{}+leak", self.name),
            gates,
            labels: self.labels.clone(),
            design_order: 0,
            logical: Some(Box::new(self.clone())),
        })
    }
}

fn pauli_matrices() -> [CMatrix; 4] {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        linalg::identity(2),
        CMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
        CMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]),
        CMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]),
    ]
}

/// The single-qubit Pauli operators `𝟙, X, Y, Z` (a unitary 1-design).
pub fn pauli_gateset() -> GateSet {
    GateSet::new(
        "pauli",
        pauli_matrices().to_vec(),
        ["I", "X", "Y", "Z"].map(String::from).to_vec(),
        1,
    )
    .expect("Pauli matrices are unitary")
}

pub fn hadamard() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(-FRAC_1_SQRT_2, 0.0),
        ],
    )
}

pub fn phase_gate() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
}

/// The 24 single-qubit Clifford unitaries (a unitary 2-design).
///
/// Generated breadth-first from words in `H` and `S`, so every label is a
/// shortest word; labels read as matrix products (`"HS"` is `H·S`). Each
/// matrix is stored with its first non-negligible entry real and positive.
pub fn clifford_gateset() -> GateSet {
    let generators = [("H", hadamard()), ("S", phase_gate())];
    let mut gates = vec![linalg::identity(2)];
    let mut labels = vec![String::from("I")];
    let mut frontier = 0;
    while frontier < gates.len() {
        for (name, g) in &generators {
            let product = linalg::canonical_phase(&(g * &gates[frontier]));
            if !gates
                .iter()
                .any(|known| linalg::equal_up_to_phase(known, &product, PHASE_TOL))
            {
                let label = if labels[frontier] == "I" {
                    (*name).to_string()
                } else {
                    format!("{name}{}", labels[frontier])
                };
                gates.push(product);
                labels.push(label);
            }
        }
        frontier += 1;
    }
    debug_assert_eq!(gates.len(), 24);
    GateSet::new("clifford", gates, labels, 2).expect("Clifford matrices are unitary")
}

/// Group average `|G|⁻¹ Σ_g U_g A U_gᴴ`.
pub fn twirl(set: &GateSet, a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != set.dim() || a.ncols() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: a.nrows(),
        });
    }
    let sum = set
        .gates
        .iter()
        .fold(CMatrix::zeros(set.dim(), set.dim()), |acc, u| {
            acc + u * a * u.adjoint()
        });
    Ok(sum / c(set.len() as f64, 0.0))
}

/// `U_{k_m} ··· U_{k_1}` for the sequence `k = (k_1, …, k_m)`; the first
/// index is applied first. The empty sequence gives `𝟙`.
pub fn compose_sequence(set: &GateSet, sequence: &[usize]) -> Result<CMatrix> {
    sequence.iter().try_fold(
        linalg::identity(set.dim()),
        |acc, &k| Ok(set.gate(k)? * acc),
    )
}

/// Index `j` such that `U_j · compose_sequence(k) ∝ 𝟙`.
///
/// For embedded gate sets the inverse is looked up among the logical gates.
pub fn inverse_gate(set: &GateSet, sequence: &[usize]) -> Result<usize> {
    let logical = set.logical().unwrap_or(set);
    let product = compose_sequence(logical, sequence)?;
    let target = product.adjoint();
    logical
        .gates
        .iter()
        .position(|g| linalg::equal_up_to_phase(g, &target, PHASE_TOL))
        .ok_or(Error::NoInverse)
}

/// `U ⊕ e^{iθ}`: a qubit gate acting trivially (up to a phase) on a third
/// level.
pub fn embed_in_qutrit(u: &CMatrix, theta: f64) -> Result<CMatrix> {
    if u.nrows() != 2 || u.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: u.nrows(),
        });
    }
    let mut out = CMatrix::zeros(3, 3);
    out.view_mut((0, 0), (2, 2)).copy_from(u);
    out[(2, 2)] = Complex64::from_polar(1.0, theta);
    Ok(out)
}
