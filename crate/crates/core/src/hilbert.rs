//! Dense complex linear algebra for small tensor-product Hilbert spaces.
//!
//! Every composite index is row-major over the declared subsystem sequence:
//! the last subsystem varies fastest. All scenarios handled by this crate live
//! in spaces of at most a few thousand dimensions, so everything is dense.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Probability amplitude.
pub type Complex = Complex64;

/// Tolerance for structural checks: orthonormality, unitarity, normalization.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Tolerance for comparing probabilities produced by different engines.
pub const PROBABILITY_TOL: f64 = 1e-9;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("slot {slot} out of range for a {count}-subsystem space")]
    SlotOutOfRange { slot: usize, count: usize },
    #[error("slot {0} listed more than once")]
    DuplicateSlot(usize),
    #[error("subsystem dimension must be positive")]
    ZeroDimension,
    #[error("non-finite amplitude")]
    NonFinite,
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Row-major strides for `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut out = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] * dims[k + 1];
    }
    out
}

/// Splits a composite index into per-subsystem digits.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

fn check_dims(dims: &[usize]) -> Result<(), HilbertError> {
    if dims.contains(&0) {
        return Err(HilbertError::ZeroDimension);
    }
    Ok(())
}

fn check_slots(slots: &[usize], count: usize) -> Result<(), HilbertError> {
    for (i, &s) in slots.iter().enumerate() {
        if s >= count {
            return Err(HilbertError::SlotOutOfRange { slot: s, count });
        }
        if slots[..i].contains(&s) {
            return Err(HilbertError::DuplicateSlot(s));
        }
    }
    Ok(())
}

/// Offsets into a full composite index contributed by each local index of
/// the subspace spanned by `slots` (local order follows `slots`).
fn local_offsets(slots: &[usize], full_dims: &[usize]) -> Vec<usize> {
    let full_strides = strides(full_dims);
    let local_dims: Vec<usize> = slots.iter().map(|&s| full_dims[s]).collect();
    (0..product(&local_dims))
        .map(|l| {
            digits(l, &local_dims)
                .iter()
                .zip(slots)
                .map(|(d, &s)| d * full_strides[s])
                .sum()
        })
        .collect()
}

/// Composite indices whose digits on `slots` are all zero.
fn complement_bases(slots: &[usize], full_dims: &[usize]) -> Vec<usize> {
    let rest: Vec<usize> = (0..full_dims.len())
        .filter(|k| !slots.contains(k))
        .collect();
    local_offsets(&rest, full_dims)
}

/// A pure state over a tensor product of subsystems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: Vec<Complex>,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amps: Vec<Complex>) -> Result<Self, HilbertError> {
        check_dims(&dims)?;
        let expected = product(&dims);
        if amps.len() != expected {
            return Err(HilbertError::LengthMismatch {
                expected,
                found: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.is_finite()) {
            return Err(HilbertError::NonFinite);
        }
        Ok(StateVector { dims, amps })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = product(&dims);
        StateVector {
            dims,
            amps: vec![ZERO; n],
        }
    }

    /// The computational basis state with composite index `index`.
    pub fn basis(dims: Vec<usize>, index: usize) -> Self {
        let mut s = Self::zeros(dims);
        s.amps[index] = ONE;
        s
    }

    pub fn from_real(dims: Vec<usize>, amps: &[f64]) -> Result<Self, HilbertError> {
        Self::new(dims, amps.iter().map(|&a| Complex::new(a, 0.0)).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[Complex] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= STRUCTURE_TOL
    }

    pub fn scale(&self, factor: Complex) -> Self {
        StateVector {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    /// Adds `other` in place; dimensions must agree.
    pub fn add_assign(&mut self, other: &StateVector) -> Result<(), HilbertError> {
        self.same_dims(other)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += b;
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> Option<f64> {
        if self.dims != other.dims {
            return None;
        }
        Some(
            self.amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }

    fn same_dims(&self, other: &StateVector) -> Result<(), HilbertError> {
        if self.dims != other.dims {
            return Err(HilbertError::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(())
    }

    /// Builds a product state where each part lives on its own slots of
    /// `full_dims`. Slots not covered by any part must not exist.
    pub fn product_on_slots(
        parts: &[(&[usize], &StateVector)],
        full_dims: &[usize],
    ) -> Result<StateVector, HilbertError> {
        check_dims(full_dims)?;
        let mut covered = Vec::new();
        for (slots, v) in parts {
            check_slots(slots, full_dims.len())?;
            let local: Vec<usize> = slots.iter().map(|&s| full_dims[s]).collect();
            if local != v.dims {
                return Err(HilbertError::DimensionMismatch {
                    expected: local,
                    found: v.dims.clone(),
                });
            }
            covered.extend_from_slice(slots);
        }
        check_slots(&covered, full_dims.len())?;
        if covered.len() != full_dims.len() {
            return Err(HilbertError::LengthMismatch {
                expected: full_dims.len(),
                found: covered.len(),
            });
        }
        let amps = (0..product(full_dims))
            .map(|idx| {
                let d = digits(idx, full_dims);
                parts.iter().fold(ONE, |acc, (slots, v)| {
                    let local: usize = slots
                        .iter()
                        .zip(strides(&v.dims))
                        .map(|(&s, st)| d[s] * st)
                        .sum();
                    acc * v.amps[local]
                })
            })
            .collect();
        Ok(StateVector {
            dims: full_dims.to_vec(),
            amps,
        })
    }
}

/// Tensor product `a ⊗ b`.
pub fn tensor(a: &StateVector, b: &StateVector) -> StateVector {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    let amps = a
        .amps
        .iter()
        .flat_map(|x| b.amps.iter().map(move |y| x * y))
        .collect();
    StateVector { dims, amps }
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<Complex, HilbertError> {
    a.same_dims(b)?;
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// A dense square operator on a tensor-product space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub struct Operator {
    dims: Vec<usize>,
    side: usize,
    entries: Vec<Complex>,
}

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    dims: Vec<usize>,
    entries: Vec<Vec<Complex>>,
}

impl From<Operator> for OperatorRepr {
    fn from(op: Operator) -> Self {
        let entries = op.entries.chunks(op.side).map(<[_]>::to_vec).collect();
        OperatorRepr {
            dims: op.dims,
            entries,
        }
    }
}

impl TryFrom<OperatorRepr> for Operator {
    type Error = HilbertError;

    fn try_from(r: OperatorRepr) -> Result<Self, Self::Error> {
        Operator::from_rows(r.dims, r.entries)
    }
}

impl Operator {
    /// Builds an operator from row-major entries.
    pub fn new(dims: Vec<usize>, entries: Vec<Complex>) -> Result<Self, HilbertError> {
        check_dims(&dims)?;
        let side = product(&dims);
        if entries.len() != side * side {
            return Err(HilbertError::LengthMismatch {
                expected: side * side,
                found: entries.len(),
            });
        }
        if entries.iter().any(|a| !a.is_finite()) {
            return Err(HilbertError::NonFinite);
        }
        Ok(Operator {
            dims,
            side,
            entries,
        })
    }

    pub fn from_rows(dims: Vec<usize>, rows: Vec<Vec<Complex>>) -> Result<Self, HilbertError> {
        let side = product(&dims);
        if rows.len() != side {
            return Err(HilbertError::LengthMismatch {
                expected: side,
                found: rows.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != side) {
            return Err(HilbertError::LengthMismatch {
                expected: side,
                found: bad.len(),
            });
        }
        Self::new(dims, rows.into_iter().flatten().collect())
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let side = product(&dims);
        let mut entries = vec![ZERO; side * side];
        for i in 0..side {
            entries[i * side + i] = ONE;
        }
        Operator {
            dims,
            side,
            entries,
        }
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &StateVector) -> Self {
        let side = v.len();
        let mut entries = Vec::with_capacity(side * side);
        for r in &v.amps {
            for c in &v.amps {
                entries.push(r * c.conj());
            }
        }
        Operator {
            dims: v.dims.clone(),
            side,
            entries,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.entries[row * self.side + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex]> {
        self.entries.chunks(self.side)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.side;
        let mut entries = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                entries[c * n + r] = self.entries[r * n + c].conj();
            }
        }
        Operator {
            dims: self.dims.clone(),
            side: n,
            entries,
        }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Operator, HilbertError> {
        if self.dims != rhs.dims {
            return Err(HilbertError::DimensionMismatch {
                expected: self.dims.clone(),
                found: rhs.dims.clone(),
            });
        }
        let n = self.side;
        let mut entries = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.entries[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    entries[r * n + c] += a * rhs.entries[k * n + c];
                }
            }
        }
        Ok(Operator {
            dims: self.dims.clone(),
            side: n,
            entries,
        })
    }

    /// Largest entrywise deviation `‖A − B‖_max`.
    pub fn max_abs_diff(&self, other: &Operator) -> Option<f64> {
        if self.dims != other.dims {
            return None;
        }
        Some(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        )
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.side;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.entries[k * n + i].conj() * self.entries[k * n + j];
                }
                if i == j {
                    s -= ONE;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= STRUCTURE_TOL
    }
}

/// Lifts `op` acting on `target_slots` of a `full_dims` composite to the whole
/// space, acting as identity on every other slot. The order of
/// `target_slots` is the order of `op`'s own subsystems.
pub fn embed(
    op: &Operator,
    target_slots: &[usize],
    full_dims: &[usize],
) -> Result<Operator, HilbertError> {
    check_dims(full_dims)?;
    check_slots(target_slots, full_dims.len())?;
    let local: Vec<usize> = target_slots.iter().map(|&s| full_dims[s]).collect();
    if local != op.dims {
        return Err(HilbertError::DimensionMismatch {
            expected: local,
            found: op.dims.clone(),
        });
    }
    let n = product(full_dims);
    let offsets = local_offsets(target_slots, full_dims);
    let bases = complement_bases(target_slots, full_dims);
    let mut entries = vec![ZERO; n * n];
    for &base in &bases {
        for (r, &ro) in offsets.iter().enumerate() {
            for (c, &co) in offsets.iter().enumerate() {
                entries[(base + ro) * n + base + co] = op.get(r, c);
            }
        }
    }
    Ok(Operator {
        dims: full_dims.to_vec(),
        side: n,
        entries,
    })
}

/// Matrix–vector product `op |psi⟩`.
pub fn apply(op: &Operator, psi: &StateVector) -> Result<StateVector, HilbertError> {
    if op.dims != psi.dims {
        return Err(HilbertError::DimensionMismatch {
            expected: op.dims.clone(),
            found: psi.dims.clone(),
        });
    }
    let n = op.side;
    let amps = (0..n)
        .map(|r| {
            op.entries[r * n..(r + 1) * n]
                .iter()
                .zip(&psi.amps)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    Ok(StateVector {
        dims: psi.dims.clone(),
        amps,
    })
}

/// Applies `op` to the subsystems at `slots` of `psi` without materializing
/// the embedded operator. Equal to `apply(embed(op, slots, psi.dims), psi)`.
pub fn apply_on(
    op: &Operator,
    slots: &[usize],
    psi: &StateVector,
) -> Result<StateVector, HilbertError> {
    check_slots(slots, psi.dims.len())?;
    let local: Vec<usize> = slots.iter().map(|&s| psi.dims[s]).collect();
    if local != op.dims {
        return Err(HilbertError::DimensionMismatch {
            expected: local,
            found: op.dims.clone(),
        });
    }
    let offsets = local_offsets(slots, &psi.dims);
    let mut out = vec![ZERO; psi.len()];
    let mut gathered = vec![ZERO; offsets.len()];
    for base in complement_bases(slots, &psi.dims) {
        for (g, &o) in gathered.iter_mut().zip(&offsets) {
            *g = psi.amps[base + o];
        }
        for (r, &ro) in offsets.iter().enumerate() {
            out[base + ro] = op.entries[r * op.side..(r + 1) * op.side]
                .iter()
                .zip(&gathered)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    Ok(StateVector {
        dims: psi.dims.clone(),
        amps: out,
    })
}

/// Partial inner product: contracts `bra` against the subsystems at `slots`
/// of `psi`, leaving a vector over the remaining subsystems (in order).
pub fn partial_inner(
    bra: &StateVector,
    slots: &[usize],
    psi: &StateVector,
) -> Result<StateVector, HilbertError> {
    check_slots(slots, psi.dims.len())?;
    let local: Vec<usize> = slots.iter().map(|&s| psi.dims[s]).collect();
    if local != bra.dims {
        return Err(HilbertError::DimensionMismatch {
            expected: local,
            found: bra.dims.clone(),
        });
    }
    let rest_dims: Vec<usize> = (0..psi.dims.len())
        .filter(|k| !slots.contains(k))
        .map(|k| psi.dims[k])
        .collect();
    let offsets = local_offsets(slots, &psi.dims);
    let amps = complement_bases(slots, &psi.dims)
        .into_iter()
        .map(|base| {
            offsets
                .iter()
                .zip(&bra.amps)
                .map(|(&o, b)| b.conj() * psi.amps[base + o])
                .sum()
        })
        .collect();
    Ok(StateVector {
        dims: rest_dims,
        amps,
    })
}

/// Why a set of vectors is not a complete orthonormal basis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BasisViolation {
    #[error("basis has {labels} labels but {vectors} vectors")]
    LabelCount { labels: usize, vectors: usize },
    #[error("duplicate basis label `{0}`")]
    DuplicateLabel(String),
    #[error("basis vector {index} has dims {found:?}, expected {expected:?}")]
    VectorDims {
        index: usize,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("basis vector {index} has norm {norm}, expected 1")]
    NotNormalized { index: usize, norm: f64 },
    #[error("basis vectors {first} and {second} overlap with magnitude {magnitude}")]
    Overlap {
        first: usize,
        second: usize,
        magnitude: f64,
    },
    #[error("basis has {count} vectors but the space has dimension {dimension}")]
    Incomplete { count: usize, dimension: usize },
}

/// A labelled orthonormal basis of a (possibly composite) space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    dims: Vec<usize>,
    labels: Vec<String>,
    vectors: Vec<StateVector>,
}

impl Basis {
    /// Builds and validates a basis; partial bases are rejected.
    pub fn new(
        dims: Vec<usize>,
        labels: Vec<String>,
        vectors: Vec<StateVector>,
    ) -> Result<Self, BasisViolation> {
        let b = Self::unchecked(dims, labels, vectors);
        validate_basis(&b)?;
        Ok(b)
    }

    /// Assembles a basis without checking it; see [`validate_basis`].
    pub fn unchecked(dims: Vec<usize>, labels: Vec<String>, vectors: Vec<StateVector>) -> Self {
        Basis {
            dims,
            labels,
            vectors,
        }
    }

    /// The computational basis, one label per composite index.
    pub fn computational(dims: Vec<usize>, labels: Vec<String>) -> Result<Self, BasisViolation> {
        let vectors = (0..product(&dims))
            .map(|i| StateVector::basis(dims.clone(), i))
            .collect();
        Self::new(dims, labels, vectors)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn vector(&self, label: &str) -> Option<&StateVector> {
        self.position(label).map(|i| &self.vectors[i])
    }
}

/// Checks that `b` is a complete orthonormal basis to [`STRUCTURE_TOL`].
pub fn validate_basis(b: &Basis) -> Result<(), BasisViolation> {
    if b.labels.len() != b.vectors.len() {
        return Err(BasisViolation::LabelCount {
            labels: b.labels.len(),
            vectors: b.vectors.len(),
        });
    }
    for (i, l) in b.labels.iter().enumerate() {
        if b.labels[..i].contains(l) {
            return Err(BasisViolation::DuplicateLabel(l.clone()));
        }
    }
    for (index, v) in b.vectors.iter().enumerate() {
        if v.dims != b.dims {
            return Err(BasisViolation::VectorDims {
                index,
                expected: b.dims.clone(),
                found: v.dims.clone(),
            });
        }
        let norm = v.norm_sqr();
        if (norm - 1.0).abs() > STRUCTURE_TOL {
            return Err(BasisViolation::NotNormalized {
                index,
                norm: norm.sqrt(),
            });
        }
    }
    for first in 0..b.vectors.len() {
        for second in first + 1..b.vectors.len() {
            let magnitude = inner(&b.vectors[first], &b.vectors[second])
                .map(|z| z.norm())
                .unwrap_or(f64::INFINITY);
            if magnitude > STRUCTURE_TOL {
                return Err(BasisViolation::Overlap {
                    first,
                    second,
                    magnitude,
                });
            }
        }
    }
    let dimension = product(&b.dims);
    if b.vectors.len() != dimension {
        return Err(BasisViolation::Incomplete {
            count: b.vectors.len(),
            dimension,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn labels(ls: &[&str]) -> Vec<String> {
        ls.iter().map(|s| s.to_string()).collect()
    }

    fn coin_spin_unitary() -> Operator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Operator::from_rows(
            vec![2, 2],
            vec![
                vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)],
                vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)],
                vec![c(0., 0.), c(0., 0.), c(h, 0.), c(h, 0.)],
                vec![c(0., 0.), c(0., 0.), c(-h, 0.), c(h, 0.)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn tensor_of_zero_kets() {
        let z = StateVector::basis(vec![2], 0);
        let t = tensor(&z, &z);
        assert_eq!(t.dims(), &[2, 2]);
        assert_eq!(t.amps(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
    }

    #[test]
    fn tensor_coin_with_spin_down() {
        let s3 = 1.0 / 3f64.sqrt();
        let coin = StateVector::from_real(vec![2], &[s3, 2f64.sqrt() * s3]).unwrap();
        let down = StateVector::basis(vec![2], 1);
        let t = tensor(&coin, &down);
        let expected = [0.0, s3, 0.0, 2f64.sqrt() * s3];
        for (a, e) in t.amps().iter().zip(expected) {
            assert!((a - c(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn embed_identity_is_identity() {
        let e = embed(&Operator::identity(vec![2]), &[0], &[2, 2]).unwrap();
        assert_eq!(e, Operator::identity(vec![2, 2]));
    }

    #[test]
    fn coin_controlled_rotation_blocks() {
        let u = coin_spin_unitary();
        let e = embed(&u, &[0, 1], &[2, 2]).unwrap();
        assert_eq!(e, u);
        assert!(e.is_unitary());
        // heads block is the identity, tails block is the rotation.
        assert_eq!(e.get(0, 0), c(1., 0.));
        assert_eq!(e.get(0, 1), c(0., 0.));
        assert!((e.get(2, 3) - c(std::f64::consts::FRAC_1_SQRT_2, 0.)).norm() < 1e-15);
        assert!((e.get(3, 2) + c(std::f64::consts::FRAC_1_SQRT_2, 0.)).norm() < 1e-15);
    }

    #[test]
    fn embed_reversed_slots_permutes() {
        let u = coin_spin_unitary();
        let swapped = embed(&u, &[1, 0], &[2, 2]).unwrap();
        // spin is now the control: |up⟩|tails⟩ stays put only when spin = heads-index 0.
        let psi = StateVector::basis(vec![2, 2], 0b01);
        let out = apply(&swapped, &psi).unwrap();
        let direct = apply_on(&u, &[1, 0], &psi).unwrap();
        assert!(out.max_abs_diff(&direct).unwrap() < 1e-15);
    }

    #[test]
    fn embed_twice_equals_single_embedding() {
        let u = coin_spin_unitary();
        // u on slots (0, 1) of [2, 2, 2], then that onto slots (0, 2, 3) of [2, 3, 2, 2].
        let twice = embed(
            &embed(&u, &[0, 1], &[2, 2, 2]).unwrap(),
            &[0, 2, 3],
            &[2, 3, 2, 2],
        )
        .unwrap();
        let once = embed(&u, &[0, 2], &[2, 3, 2, 2]).unwrap();
        assert!(once.max_abs_diff(&twice).unwrap() < 1e-15);
        assert!(twice.is_unitary());
    }

    #[test]
    fn embed_rejects_mismatch() {
        let u = coin_spin_unitary();
        assert!(matches!(
            embed(&u, &[0], &[2, 2]),
            Err(HilbertError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            embed(&u, &[0, 0], &[2, 2]),
            Err(HilbertError::DuplicateSlot(0))
        ));
        assert!(matches!(
            embed(&u, &[0, 5], &[2, 2]),
            Err(HilbertError::SlotOutOfRange { .. })
        ));
    }

    #[test]
    fn rotation_on_tails_down_and_heads_down() {
        let u = coin_spin_unitary();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let tails_down = StateVector::basis(vec![2, 2], 3);
        let out = apply(&u, &tails_down).unwrap();
        let expected = StateVector::from_real(vec![2, 2], &[0., 0., h, h]).unwrap();
        assert!(out.max_abs_diff(&expected).unwrap() < 1e-15);

        let heads_down = StateVector::basis(vec![2, 2], 1);
        assert_eq!(apply(&u, &heads_down).unwrap(), heads_down);
    }

    #[test]
    fn identity_apply() {
        let psi = StateVector::new(vec![3], vec![c(0.6, 0.), c(0., 0.8), c(0., 0.)]).unwrap();
        assert_eq!(apply(&Operator::identity(vec![3]), &psi).unwrap(), psi);
        assert!(apply(&Operator::identity(vec![2]), &psi).is_err());
    }

    #[test]
    fn inner_products() {
        let z = StateVector::basis(vec![2], 0);
        assert_eq!(inner(&z, &z).unwrap(), c(1., 0.));
        let alpha = c(0.6, 0.3);
        let beta = c(0.2, -0.5);
        let fail = StateVector::new(vec![2], vec![alpha, beta]).unwrap();
        let up = StateVector::basis(vec![2], 0);
        assert_eq!(inner(&fail, &up).unwrap(), alpha.conj());
        assert!(inner(&fail, &StateVector::basis(vec![3], 0)).is_err());
    }

    #[test]
    fn validate_basis_examples() {
        let up = StateVector::basis(vec![2], 0);
        let down = StateVector::basis(vec![2], 1);
        let b = Basis::unchecked(vec![2], labels(&["up", "down"]), vec![up.clone(), down]);
        assert_eq!(validate_basis(&b), Ok(()));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_real(vec![2], &[h, h]).unwrap();
        let minus = StateVector::from_real(vec![2], &[h, -h]).unwrap();
        assert!(Basis::new(vec![2], labels(&["fail", "ok"]), vec![plus, minus]).is_ok());

        let dup = Basis::unchecked(vec![2], labels(&["a", "b"]), vec![up.clone(), up.clone()]);
        match validate_basis(&dup) {
            Err(BasisViolation::Overlap {
                first,
                second,
                magnitude,
            }) => {
                assert_eq!((first, second), (0, 1));
                assert!((magnitude - 1.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }

        let partial = Basis::unchecked(vec![2], labels(&["a"]), vec![up]);
        assert!(matches!(
            validate_basis(&partial),
            Err(BasisViolation::Incomplete {
                count: 1,
                dimension: 2
            })
        ));
    }

    #[test]
    fn partial_inner_contracts_slots() {
        let s3 = 1.0 / 3f64.sqrt();
        let psi = StateVector::from_real(vec![2, 2], &[0.0, s3, 0.0, 2f64.sqrt() * s3]).unwrap();
        let down = StateVector::basis(vec![2], 1);
        let coin = partial_inner(&down, &[1], &psi).unwrap();
        assert_eq!(coin.dims(), &[2]);
        assert!((coin.amps()[0] - c(s3, 0.)).norm() < 1e-15);
    }

    fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map(
            "nonzero",
            move |v| {
                let amps: Vec<Complex> = v.into_iter().map(|(r, i)| c(r, i)).collect();
                let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                (norm > 1e-3).then(|| {
                    StateVector::new(vec![n], amps.into_iter().map(|a| a / norm).collect()).unwrap()
                })
            },
        )
    }

    fn arb_unitary(n: usize) -> impl Strategy<Value = Operator> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_filter_map(
            "full rank",
            move |v| {
                // Gram–Schmidt on the columns of a random matrix.
                let mut cols: Vec<Vec<Complex>> = (0..n)
                    .map(|j| (0..n).map(|i| c(v[i * n + j].0, v[i * n + j].1)).collect())
                    .collect();
                for j in 0..n {
                    for k in 0..j {
                        let proj: Complex = cols[k]
                            .iter()
                            .zip(&cols[j])
                            .map(|(a, b)| a.conj() * b)
                            .sum();
                        let ck = cols[k].clone();
                        for (x, y) in cols[j].iter_mut().zip(ck) {
                            *x -= proj * y;
                        }
                    }
                    let norm = cols[j].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                    if norm < 1e-3 {
                        return None;
                    }
                    cols[j].iter_mut().for_each(|x| *x /= norm);
                }
                let entries = (0..n * n).map(|idx| cols[idx % n][idx / n]).collect();
                Operator::new(vec![n], entries).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn tensor_norm_is_multiplicative(a in arb_state(3), b in arb_state(2)) {
            let t = tensor(&a, &b);
            prop_assert!((t.norm_sqr() - 1.0).abs() <= STRUCTURE_TOL);
        }

        #[test]
        fn inner_is_hermitian(a in arb_state(4), b in arb_state(4)) {
            let ab = inner(&a, &b).unwrap();
            let ba = inner(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-15);
        }

        #[test]
        fn unitary_preserves_norm(u in arb_unitary(3), psi in arb_state(3)) {
            prop_assert!(u.is_unitary());
            let out = apply(&u, &psi).unwrap();
            prop_assert!((out.norm() - psi.norm()).abs() <= STRUCTURE_TOL);
        }

        #[test]
        fn apply_on_matches_embedding(u in arb_unitary(2), a in arb_state(3), b in arb_state(2)) {
            let psi = tensor(&a, &b);
            let full = embed(&u, &[1], &[3, 2]).unwrap();
            prop_assert!(full.is_unitary());
            let lhs = apply(&full, &psi).unwrap();
            let rhs = apply_on(&u, &[1], &psi).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-14);
        }

        #[test]
        fn unit_modulus_pairs_are_accepted(theta in 0.0f64..std::f64::consts::PI,
                                           phi in -3.0f64..3.0, chi in -3.0f64..3.0,
                                           eps in 1e-6f64..1e-2) {
            // fail = α|up⟩ + β|down⟩, ok = γ|up⟩ + δ|down⟩ with γ = −β* e^{iχ}, δ = α* e^{iχ}.
            let alpha = Complex::from_polar(theta.cos(), phi);
            let beta = c(theta.sin(), 0.0);
            let phase = Complex::from_polar(1.0, chi);
            let gamma = -beta.conj() * phase;
            let delta = alpha.conj() * phase;
            prop_assert!((alpha * gamma.conj() + beta * delta.conj()).norm() < 1e-15);
            let fail = StateVector::new(vec![2], vec![alpha, beta]).unwrap();
            let ok = StateVector::new(vec![2], vec![gamma, delta]).unwrap();
            let good = Basis::unchecked(vec![2], labels(&["fail", "ok"]), vec![fail.clone(), ok]);
            prop_assert_eq!(validate_basis(&good), Ok(()));

            // Tilting `ok` off the orthogonal complement must be rejected.
            let tilted = StateVector::new(vec![2], vec![gamma + alpha * eps, delta + beta * eps]).unwrap();
            let norm = tilted.norm();
            let tilted = tilted.scale(c(1.0 / norm, 0.0));
            let bad = Basis::unchecked(vec![2], labels(&["fail", "ok"]), vec![fail, tilted]);
            let rejected = matches!(validate_basis(&bad), Err(BasisViolation::Overlap { .. }));
            prop_assert!(rejected);
        }
    }
}
