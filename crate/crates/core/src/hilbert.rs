//! Dense complex linear algebra on small tensor-product Hilbert spaces.
//!
//! Subsystems are ordered left to right; the leftmost subsystem is the most
//! significant index of the flattened basis (row-major Kronecker order).

use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest total dimension accepted by [`HilbertSpec::new`].
pub const MAX_DIMENSION: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled subsystems defining a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpec {
    subsystems: Vec<Subsystem>,
    total: usize,
}

impl HilbertSpec {
    pub fn new<S: Into<String>>(parts: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut subsystems: Vec<Subsystem> = Vec::new();
        let mut total: usize = 1;
        for (label, dim) in parts {
            let label = label.into();
            if dim == 0 {
                return Err(Error::ZeroDimension(label));
            }
            if subsystems.iter().any(|s| s.label == label) {
                return Err(Error::DuplicateLabel(label));
            }
            total = total.saturating_mul(dim);
            if total > MAX_DIMENSION {
                return Err(Error::DimensionCap(total, MAX_DIMENSION));
            }
            subsystems.push(Subsystem { label, dim });
        }
        Ok(Self { subsystems, total })
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownSubsystem(label.to_string()))
    }

    pub fn subsystem_dim(&self, label: &str) -> Result<usize> {
        Ok(self.subsystems[self.position(label)?].dim)
    }

    /// Stride of subsystem `pos` in the flattened index.
    fn stride(&self, pos: usize) -> usize {
        self.subsystems[pos + 1..].iter().map(|s| s.dim).product()
    }

    /// Flattened basis index for one level per subsystem.
    pub fn basis_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.subsystems.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} levels, got {}",
                self.subsystems.len(),
                levels.len()
            )));
        }
        let mut idx = 0;
        for (s, &l) in self.subsystems.iter().zip(levels) {
            if l >= s.dim {
                return Err(Error::LevelOutOfRange {
                    label: s.label.clone(),
                    index: l,
                    dim: s.dim,
                });
            }
            idx = idx * s.dim + l;
        }
        Ok(idx)
    }

    /// Level of subsystem `pos` encoded in the flattened basis index `idx`.
    pub fn level_of(&self, idx: usize, pos: usize) -> usize {
        (idx / self.stride(pos)) % self.subsystems[pos].dim
    }

    /// Embed a local operator acting on one subsystem into the full space.
    pub fn embed(&self, label: &str, local: &Array2<Complex64>) -> Result<OperatorMatrix> {
        let pos = self.position(label)?;
        let d = self.subsystems[pos].dim;
        if local.dim() != (d, d) {
            return Err(Error::SpaceMismatch);
        }
        let n = self.total;
        let stride = self.stride(pos);
        let mut m = Array2::from_elem((n, n), ZERO);
        for row in 0..n {
            let a = (row / stride) % d;
            let base = row - a * stride;
            for b in 0..d {
                let v = local[[a, b]];
                if v != ZERO {
                    m[[row, base + b * stride]] = v;
                }
            }
        }
        Ok(OperatorMatrix {
            space: self.clone(),
            entries: m,
        })
    }
}

/// Pure state in a [`HilbertSpec`]. Amplitudes are not normalized implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: HilbertSpec,
    amplitudes: Array1<Complex64>,
}

impl StateVector {
    pub fn new(space: HilbertSpec, amplitudes: Array1<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space, amplitudes })
    }

    /// Product basis state with the given level on each subsystem.
    pub fn basis(space: &HilbertSpec, levels: &[usize]) -> Result<Self> {
        let idx = space.basis_index(levels)?;
        let mut amps = Array1::from_elem(space.dim(), ZERO);
        amps[idx] = ONE;
        Ok(Self {
            space: space.clone(),
            amplitudes: amps,
        })
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Ok(Self {
            space: self.space.clone(),
            amplitudes: self.amplitudes.mapv(|c| c / n),
        })
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |psi><psi| as a dense matrix.
    pub fn projector(&self) -> Array2<Complex64> {
        let n = self.amplitudes.len();
        Array2::from_shape_fn((n, n), |(i, j)| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        })
    }
}

/// Dense square operator on a [`HilbertSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    space: HilbertSpec,
    entries: Array2<Complex64>,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpec, entries: Array2<Complex64>) -> Result<Self> {
        let n = space.dim();
        if entries.dim() != (n, n) {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space, entries })
    }

    /// Construct and check `A = A†` entrywise within 1e-12.
    pub fn new_hermitian(space: HilbertSpec, entries: Array2<Complex64>) -> Result<Self> {
        let op = Self::new(space, entries)?;
        if !op.is_hermitian(1e-12) {
            return Err(Error::InvalidParameter(
                "matrix is not Hermitian within 1e-12".into(),
            ));
        }
        Ok(op)
    }

    pub fn zeros(space: &HilbertSpec) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            entries: Array2::from_elem((n, n), ZERO),
        }
    }

    pub fn identity(space: &HilbertSpec) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            entries: Array2::from_shape_fn((n, n), |(i, j)| if i == j { ONE } else { ZERO }),
        }
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            entries: self.entries.t().mapv(|c| c.conj()),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            space: self.space.clone(),
            entries: self.entries.mapv(|c| c * factor),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn matmul(&self, rhs: &OperatorMatrix) -> Result<Self> {
        self.check(rhs)?;
        Ok(Self {
            space: self.space.clone(),
            entries: self.entries.dot(&rhs.entries),
        })
    }

    pub fn try_add(&self, rhs: &OperatorMatrix) -> Result<Self> {
        self.check(rhs)?;
        Ok(Self {
            space: self.space.clone(),
            entries: &self.entries + &rhs.entries,
        })
    }

    pub fn try_sub(&self, rhs: &OperatorMatrix) -> Result<Self> {
        self.check(rhs)?;
        Ok(Self {
            space: self.space.clone(),
            entries: &self.entries - &rhs.entries,
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (self.entries[[i, j]] - self.entries[[j, i]].conj()).norm() <= tol))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        self.check(other)?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|c| **c != ZERO).count()
    }

    fn check(&self, rhs: &OperatorMatrix) -> Result<()> {
        if self.space != rhs.space {
            Err(Error::SpaceMismatch)
        } else {
            Ok(())
        }
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.try_add(rhs).expect("operator spaces differ")
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.try_sub(rhs).expect("operator spaces differ")
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs).expect("operator spaces differ")
    }
}

/// `|i><j|` on `subsystem`, identity on every other factor.
pub fn transition_op(space: &HilbertSpec, subsystem: &str, i: usize, j: usize) -> Result<OperatorMatrix> {
    let d = space.subsystem_dim(subsystem)?;
    for idx in [i, j] {
        if idx >= d {
            return Err(Error::LevelOutOfRange {
                label: subsystem.to_string(),
                index: idx,
                dim: d,
            });
        }
    }
    let mut local = Array2::from_elem((d, d), ZERO);
    local[[i, j]] = ONE;
    space.embed(subsystem, &local)
}

/// Truncated bosonic annihilator with `sqrt(n)` on the first superdiagonal.
pub fn annihilation_op(space: &HilbertSpec, subsystem: &str) -> Result<OperatorMatrix> {
    let d = space.subsystem_dim(subsystem)?;
    if d < 2 {
        return Err(Error::DimensionTooSmall {
            label: subsystem.to_string(),
            dim: d,
        });
    }
    let mut local = Array2::from_elem((d, d), ZERO);
    for n in 1..d {
        local[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    space.embed(subsystem, &local)
}

/// Matrix-vector product; no normalization.
pub fn apply(op: &OperatorMatrix, psi: &StateVector) -> Result<StateVector> {
    if op.space != psi.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(StateVector {
        space: psi.space.clone(),
        amplitudes: op.entries.dot(&psi.amplitudes),
    })
}

/// `<psi|A|psi>`.
pub fn expectation(op: &OperatorMatrix, psi: &StateVector) -> Result<Complex64> {
    let a_psi = apply(op, psi)?;
    psi.inner(&a_psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn target_cavity() -> HilbertSpec {
        HilbertSpec::new([("target", 3), ("cavity", 2)]).unwrap()
    }

    #[test]
    fn spec_rejects_bad_shapes() {
        assert!(matches!(
            HilbertSpec::new([("a", 2), ("a", 3)]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(matches!(HilbertSpec::new([("a", 0)]), Err(Error::ZeroDimension(_))));
        assert!(matches!(
            HilbertSpec::new([("a", 64), ("b", 65)]),
            Err(Error::DimensionCap(..))
        ));
        assert_eq!(HilbertSpec::new([("a", 64), ("b", 64)]).unwrap().dim(), 4096);
    }

    #[test]
    fn projector_on_single_subsystem() {
        let s = HilbertSpec::new([("q", 3)]).unwrap();
        let p = transition_op(&s, "q", 1, 1).unwrap();
        assert_eq!(p.nonzero_count(), 1);
        assert_eq!(p.entries()[[1, 1]], ONE);
    }

    #[test]
    fn sigma_gf_embedded_in_target_cavity() {
        // target levels (G, E, F) = (0, 1, 2); |G><F| (x) 1_2 by hand.
        let s = target_cavity();
        let op = transition_op(&s, "target", 0, 2).unwrap();
        assert_eq!(op.dim(), 6);
        assert_eq!(op.nonzero_count(), 2);
        // rows: G0=0, G1=1; cols: F0=4, F1=5
        assert_eq!(op.entries()[[0, 4]], ONE);
        assert_eq!(op.entries()[[1, 5]], ONE);
    }

    #[test]
    fn adjoint_swaps_indices() {
        let s = target_cavity();
        let a = transition_op(&s, "target", 0, 2).unwrap();
        let b = transition_op(&s, "target", 2, 0).unwrap();
        assert_eq!(a.adjoint(), b);
    }

    #[test]
    fn ladder_operators() {
        let s2 = HilbertSpec::new([("c", 2)]).unwrap();
        let a2 = annihilation_op(&s2, "c").unwrap();
        assert_eq!(a2.nonzero_count(), 1);
        assert_eq!(a2.entries()[[0, 1]], ONE);

        let s3 = HilbertSpec::new([("c", 3)]).unwrap();
        let a3 = annihilation_op(&s3, "c").unwrap();
        assert_eq!(a3.entries()[[0, 1]], ONE);
        assert!((a3.entries()[[1, 2]] - c(2f64.sqrt())).norm() < 1e-15);
        let num = &a3.adjoint() * &a3;
        for (k, want) in [0.0, 1.0, 2.0].iter().enumerate() {
            assert!((num.entries()[[k, k]] - c(*want)).norm() < 1e-14);
        }
        assert!(matches!(
            annihilation_op(&HilbertSpec::new([("c", 1)]).unwrap(), "c"),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn errors_on_bad_labels_and_levels() {
        let s = target_cavity();
        assert!(matches!(transition_op(&s, "nope", 0, 0), Err(Error::UnknownSubsystem(_))));
        assert!(matches!(
            transition_op(&s, "target", 3, 0),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn apply_and_expectation() {
        let s = target_cavity();
        let f0 = StateVector::basis(&s, &[2, 0]).unwrap();
        let g0 = StateVector::basis(&s, &[0, 0]).unwrap();
        let id = OperatorMatrix::identity(&s);
        assert_eq!(apply(&id, &f0).unwrap(), f0);

        let sgf = transition_op(&s, "target", 0, 2).unwrap();
        assert_eq!(apply(&sgf, &f0).unwrap(), g0);
        assert_eq!((&sgf * &sgf).nonzero_count(), 0);

        let pf = transition_op(&s, "target", 2, 2).unwrap();
        assert!((expectation(&pf, &f0).unwrap() - ONE).norm() < 1e-15);

        let a = annihilation_op(&s, "cavity").unwrap();
        let n = &a.adjoint() * &a;
        let one_photon = StateVector::basis(&s, &[0, 1]).unwrap();
        assert!((expectation(&n, &one_photon).unwrap() - ONE).norm() < 1e-15);

        let other = HilbertSpec::new([("x", 6)]).unwrap();
        let foreign = StateVector::basis(&other, &[0]).unwrap();
        assert_eq!(apply(&id, &foreign), Err(Error::SpaceMismatch));
    }

    #[test]
    fn hermitian_constructor_checks() {
        let s = HilbertSpec::new([("q", 2)]).unwrap();
        let x = transition_op(&s, "q", 0, 1).unwrap();
        let herm = &x + &x.adjoint();
        assert!(OperatorMatrix::new_hermitian(s.clone(), herm.entries().clone()).is_ok());
        assert!(OperatorMatrix::new_hermitian(s, x.entries().clone()).is_err());
    }
}
