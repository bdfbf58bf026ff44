//! Coefficient-space representation of divergence-free fields and the
//! fractional calculus of the Stokes operator.
//!
//! A [`SpectralField`] is a finite vector of real coefficients against a fixed
//! Stokes eigenbasis. All the operators in this module are diagonal in that
//! basis, so everything here is exact finite-dimensional arithmetic; the
//! geometry (torus or disk) only enters through the eigenvalue table of the
//! bound basis.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};

/// Opaque identifier binding a field to one eigenbasis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisId(pub String);

impl std::fmt::Display for BasisId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Read-only view of a Stokes eigenbasis: an ordered eigenvalue table.
///
/// Eigenvalues are sorted ascending with a deterministic tie-break fixed by
/// the concrete basis, so truncation indices are reproducible.
pub trait StokesBasis {
    fn id(&self) -> &BasisId;
    /// Number of tabulated eigenpairs.
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn eigenvalues(&self) -> &[f64];
    fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues()[k]
    }
    /// First index with eigenvalue >= 1, if any: the tail bound of the
    /// truncation estimate is only asserted from this index on.
    fn first_index_lambda_ge_one(&self) -> Option<usize> {
        self.eigenvalues().iter().position(|&l| l >= 1.0)
    }
}

/// Nonnegative Sobolev exponent `s` for the fractional Stokes power `A^s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(CoreError::InvalidField(format!(
                "Sobolev index must be finite and nonnegative, got {s}"
            )));
        }
        Ok(SobolevIndex(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A velocity field as coefficients in a fixed Stokes eigenbasis.
///
/// Immutable after construction; all operations are pure functions.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    basis_id: BasisId,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(basis_id: BasisId, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(CoreError::InvalidField(
                "a spectral field needs at least one coefficient".into(),
            ));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(CoreError::InvalidField(format!(
                "non-finite coefficient {c}"
            )));
        }
        Ok(SpectralField { basis_id, coeffs })
    }

    pub fn zeros(basis: &dyn StokesBasis) -> Self {
        SpectralField {
            basis_id: basis.id().clone(),
            coeffs: vec![0.0; basis.len()],
        }
    }

    /// Unit coefficient on mode `k`, zero elsewhere.
    pub fn unit_mode(basis: &dyn StokesBasis, k: usize) -> Self {
        let mut coeffs = vec![0.0; basis.len()];
        coeffs[k] = 1.0;
        SpectralField {
            basis_id: basis.id().clone(),
            coeffs,
        }
    }

    pub fn basis_id(&self) -> &BasisId {
        &self.basis_id
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Truncation order (coefficient count).
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn check_bound(&self, basis: &dyn StokesBasis) -> Result<()> {
        if &self.basis_id != basis.id() {
            return Err(CoreError::BasisMismatch {
                field: self.basis_id.0.clone(),
                basis: basis.id().0.clone(),
            });
        }
        if self.coeffs.len() > basis.len() {
            return Err(CoreError::InvalidField(format!(
                "field has {} coefficients but basis tabulates {}",
                self.coeffs.len(),
                basis.len()
            )));
        }
        Ok(())
    }

    fn check_combinable(&self, other: &SpectralField) -> Result<()> {
        if self.basis_id != other.basis_id {
            return Err(CoreError::BasisMismatch {
                field: self.basis_id.0.clone(),
                basis: other.basis_id.0.clone(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField {
            basis_id: self.basis_id.clone(),
            coeffs: self.coeffs.iter().map(|c| a * c).collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_combinable(other)?;
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        Ok(SpectralField {
            basis_id: self.basis_id.clone(),
            coeffs,
        })
    }
}

/// `(sum_k lambda_k^{2s} c_k^2)^{1/2}`; the `A^s` norm of the field.
pub fn as_norm(basis: &dyn StokesBasis, f: &SpectralField, s: SobolevIndex) -> Result<f64> {
    f.check_bound(basis)?;
    let s = s.value();
    let mut acc = 0.0;
    for (k, c) in f.coeffs.iter().enumerate() {
        acc += basis.eigenvalue(k).powf(2.0 * s) * c * c;
    }
    Ok(acc.sqrt())
}

/// Coefficientwise `c_k -> lambda_k^s c_k`.
pub fn apply_fractional_stokes(
    basis: &dyn StokesBasis,
    f: &SpectralField,
    s: SobolevIndex,
) -> Result<SpectralField> {
    f.check_bound(basis)?;
    let s = s.value();
    let coeffs = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| basis.eigenvalue(k).powf(s) * c)
        .collect();
    Ok(SpectralField {
        basis_id: f.basis_id.clone(),
        coeffs,
    })
}

/// `sum_k lambda_k^{2s} c_k d_k`; the inner product of `D(A^s)`.
pub fn as_inner(
    basis: &dyn StokesBasis,
    f: &SpectralField,
    g: &SpectralField,
    s: SobolevIndex,
) -> Result<f64> {
    f.check_bound(basis)?;
    g.check_bound(basis)?;
    let s = s.value();
    let n = f.coeffs.len().min(g.coeffs.len());
    let mut acc = 0.0;
    for k in 0..n {
        acc += basis.eigenvalue(k).powf(2.0 * s) * f.coeffs[k] * g.coeffs[k];
    }
    Ok(acc)
}

/// Result of a Galerkin truncation, carrying a clamp note when the requested
/// order exceeded the field's truncation.
#[derive(Debug, Clone)]
pub struct Projected {
    pub field: SpectralField,
    pub clamped: bool,
}

/// Orthogonal projection onto the first `n` eigenmodes: zeroes every
/// coefficient beyond `n`. Idempotent and self-adjoint in every `A^s` inner
/// product.
pub fn galerkin_project(basis: &dyn StokesBasis, f: &SpectralField, n: usize) -> Result<Projected> {
    f.check_bound(basis)?;
    if n == 0 {
        return Err(CoreError::InvalidField(
            "projection order must be at least 1".into(),
        ));
    }
    let clamped = n > f.coeffs.len();
    let keep = n.min(f.coeffs.len());
    let mut coeffs = f.coeffs.clone();
    for c in coeffs.iter_mut().skip(keep) {
        *c = 0.0;
    }
    Ok(Projected {
        field: SpectralField {
            basis_id: f.basis_id.clone(),
            coeffs,
        },
        clamped,
    })
}

/// Norm summary recorded along trajectories.
#[derive(Debug, Clone)]
pub struct NormReport {
    pub l2: f64,
    /// `s -> ||f||_{A^s}`, keyed by the recording set (stored on a fixed-point
    /// grid of 1/2 so half-integer exponents are exact map keys).
    pub as_norms: BTreeMap<u32, f64>,
    /// Grid-computed W^{1,2} norm when available.
    pub w12: Option<f64>,
    /// Grid-computed W^{2,2} norm when available.
    pub w22: Option<f64>,
}

impl NormReport {
    /// `s` values are supplied in halves: `s_halves = 2s`.
    pub fn compute(
        basis: &dyn StokesBasis,
        f: &SpectralField,
        s_halves: &[u32],
    ) -> Result<NormReport> {
        let l2 = as_norm(basis, f, SobolevIndex::new(0.0)?)?;
        let mut as_norms = BTreeMap::new();
        for &h in s_halves {
            let s = SobolevIndex::new(h as f64 / 2.0)?;
            as_norms.insert(h, as_norm(basis, f, s)?);
        }
        Ok(NormReport {
            l2,
            as_norms,
            w12: None,
            w22: None,
        })
    }
}
