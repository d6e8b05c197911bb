//! Signature-aware vector algebra for E³, E⁴ and the Lorentz–Minkowski space L⁴,
//! together with the three space-form models embedded in them.
//!
//! L⁴ carries the metric `dx₁² + dx₂² + dx₃² − dx₄²`; the fourth coordinate is the
//! only timelike one. The hyperbolic space is the upper sheet
//! `⟨r,r⟩ = −1, x₄ > 0`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Relative Gram-determinant threshold below which a spanning set is degenerate.
pub const GRAM_DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    dim: usize,
    timelike_count: usize,
}

impl Signature {
    pub const EUCLIDEAN_3: Signature = Signature {
        dim: 3,
        timelike_count: 0,
    };
    pub const EUCLIDEAN_4: Signature = Signature {
        dim: 4,
        timelike_count: 0,
    };
    pub const LORENTZ_4: Signature = Signature {
        dim: 4,
        timelike_count: 1,
    };

    pub fn new(dim: usize, timelike_count: usize) -> Result<Self, GeometryError> {
        match (dim, timelike_count) {
            (3, 0) | (4, 0) | (4, 1) => Ok(Signature {
                dim,
                timelike_count,
            }),
            _ => Err(GeometryError::InvalidSignature {
                dim,
                timelike_count,
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn timelike_count(&self) -> usize {
        self.timelike_count
    }

    pub fn is_lorentzian(&self) -> bool {
        self.timelike_count == 1
    }

    /// Metric coefficient εᵢ of coordinate `i`.
    #[inline]
    pub fn eps(&self, i: usize) -> f64 {
        if self.timelike_count == 1 && i == 3 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn zero(&self) -> AmbientVector {
        AmbientVector {
            comps: [0.0; 4],
            sig: *self,
        }
    }

    /// Canonical basis vector `e_{i+1}` (zero-based index).
    pub fn basis(&self, i: usize) -> AmbientVector {
        assert!(
            i < self.dim,
            "basis index {i} out of range for dimension {}",
            self.dim
        );
        let mut comps = [0.0; 4];
        comps[i] = 1.0;
        AmbientVector { comps, sig: *self }
    }

    pub fn vector(&self, comps: &[f64]) -> Result<AmbientVector, GeometryError> {
        if comps.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: comps.len(),
            });
        }
        let mut c = [0.0; 4];
        c[..self.dim].copy_from_slice(comps);
        Ok(AmbientVector {
            comps: c,
            sig: *self,
        })
    }

    /// Infallible constructor; components past `dim` are dropped.
    #[inline]
    pub fn from_array(&self, mut comps: [f64; 4]) -> AmbientVector {
        comps[self.dim..].iter_mut().for_each(|c| *c = 0.0);
        AmbientVector { comps, sig: *self }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.dim, self.timelike_count) {
            (d, 0) => write!(f, "E{d}"),
            (d, _) => write!(f, "L{d}"),
        }
    }
}

/// A vector of E³, E⁴ or L⁴. Unused trailing components of E³ vectors are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmbientVector {
    comps: [f64; 4],
    sig: Signature,
}

impl AmbientVector {
    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn components(&self) -> &[f64] {
        &self.comps[..self.sig.dim]
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.comps[i]
    }

    #[inline]
    pub fn to_array(&self) -> [f64; 4] {
        self.comps
    }

    /// Signature inner product `Σ εᵢ aᵢ bᵢ`.
    pub fn inner(&self, other: &AmbientVector) -> Result<f64, GeometryError> {
        if self.sig != other.sig {
            return Err(GeometryError::SignatureMismatch {
                left: self.sig,
                right: other.sig,
            });
        }
        Ok(self.dot(other))
    }

    /// Inner product for vectors already known to share a signature.
    #[inline]
    pub fn dot(&self, other: &AmbientVector) -> f64 {
        debug_assert_eq!(self.sig, other.sig);
        let mut s = 0.0;
        for i in 0..self.sig.dim {
            s += self.sig.eps(i) * self.comps[i] * other.comps[i];
        }
        s
    }

    /// Plain Euclidean length of the coordinate tuple, used for scale estimates.
    pub fn euclidean_norm(&self) -> f64 {
        self.comps.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// `sqrt(|⟨v,v⟩|)`.
    pub fn norm(&self) -> f64 {
        self.dot(self).abs().sqrt()
    }

    pub fn scale(&self, s: f64) -> AmbientVector {
        let mut comps = self.comps;
        comps.iter_mut().for_each(|c| *c *= s);
        AmbientVector {
            comps,
            sig: self.sig,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }
}

impl Add for AmbientVector {
    type Output = AmbientVector;
    fn add(self, rhs: AmbientVector) -> AmbientVector {
        debug_assert_eq!(self.sig, rhs.sig);
        let mut comps = self.comps;
        for (c, r) in comps.iter_mut().zip(rhs.comps) {
            *c += r;
        }
        AmbientVector {
            comps,
            sig: self.sig,
        }
    }
}

impl AddAssign for AmbientVector {
    fn add_assign(&mut self, rhs: AmbientVector) {
        *self = *self + rhs;
    }
}

impl Sub for AmbientVector {
    type Output = AmbientVector;
    fn sub(self, rhs: AmbientVector) -> AmbientVector {
        self + (-rhs)
    }
}

impl Neg for AmbientVector {
    type Output = AmbientVector;
    fn neg(self) -> AmbientVector {
        self.scale(-1.0)
    }
}

impl Mul<AmbientVector> for f64 {
    type Output = AmbientVector;
    fn mul(self, rhs: AmbientVector) -> AmbientVector {
        rhs.scale(self)
    }
}

/// Gram determinant of `vs` under their common signature.
pub fn gram_determinant(vs: &[AmbientVector]) -> f64 {
    let n = vs.len();
    assert!(n <= 4);
    let mut g = [[0.0; 4]; 4];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = vs[i].dot(&vs[j]);
        }
    }
    determinant(g, n)
}

/// Determinant of the leading `n × n` block, by partial-pivot elimination.
fn determinant(mut m: [[f64; 4]; 4], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap_or(col);
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    det
}

/// Unit vector orthogonal to every vector of `vs`, oriented to have positive inner
/// product with `sign_convention` whenever that product is nonzero.
///
/// `vs` must contain `dim − 1` vectors. The result is the metric dual of the
/// generalized cross product, so it is orthogonal in the signature inner product.
pub fn orthonormal_complement(
    vs: &[AmbientVector],
    sign_convention: &AmbientVector,
) -> Result<AmbientVector, GeometryError> {
    let sig = sign_convention.sig;
    let dim = sig.dim;
    if vs.len() + 1 != dim {
        return Err(GeometryError::DimensionMismatch {
            expected: dim - 1,
            got: vs.len(),
        });
    }
    for v in vs {
        if v.sig != sig {
            return Err(GeometryError::SignatureMismatch {
                left: v.sig,
                right: sig,
            });
        }
    }
    let gram = gram_determinant(vs);
    let scale: f64 = vs.iter().map(|v| v.euclidean_norm().powi(2)).product();
    if !(gram.abs() > GRAM_DEGENERACY_TOL * scale) {
        return Err(GeometryError::Degenerate { gram, scale });
    }

    // Cofactor expansion: c_j = (−1)^j det(M with column j removed), M rows = vs.
    let mut comps = [0.0; 4];
    for (j, comp) in comps.iter_mut().enumerate().take(dim) {
        let mut minor = [[0.0; 4]; 4];
        for (row, v) in vs.iter().enumerate() {
            for (col, c) in (0..dim).filter(|&c| c != j).enumerate() {
                minor[row][col] = v.comps[c];
            }
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *comp = sig.eps(j) * sign * determinant(minor, dim - 1);
    }
    let w = AmbientVector { comps, sig };
    let nn = w.dot(&w);
    if !(nn.abs() > GRAM_DEGENERACY_TOL * scale) {
        return Err(GeometryError::Degenerate { gram: nn, scale });
    }
    let mut w = w.scale(1.0 / nn.abs().sqrt());
    if w.dot(sign_convention) < 0.0 {
        w = -w;
    }
    Ok(w)
}

/// One of the three 3-dimensional space forms, realized in its standard model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceForm {
    c: i32,
    ambient: Signature,
}

impl SpaceForm {
    pub const EUCLIDEAN: SpaceForm = SpaceForm {
        c: 0,
        ambient: Signature::EUCLIDEAN_3,
    };
    pub const SPHERE: SpaceForm = SpaceForm {
        c: 1,
        ambient: Signature::EUCLIDEAN_4,
    };
    pub const HYPERBOLIC: SpaceForm = SpaceForm {
        c: -1,
        ambient: Signature::LORENTZ_4,
    };

    pub fn from_curvature(c: i32) -> Result<Self, GeometryError> {
        match c {
            0 => Ok(Self::EUCLIDEAN),
            1 => Ok(Self::SPHERE),
            -1 => Ok(Self::HYPERBOLIC),
            other => Err(GeometryError::InvalidCurvature(other)),
        }
    }

    pub fn curvature(&self) -> i32 {
        self.c
    }

    pub fn ambient(&self) -> Signature {
        self.ambient
    }

    /// Target value of `⟨r,r⟩` on the model, `None` for flat space.
    pub fn constraint_target(&self) -> Option<f64> {
        match self.c {
            0 => None,
            c => Some(c as f64),
        }
    }

    /// Ricci curvature `Ric(η,η)` of a unit vector in N³(c).
    pub fn ricci_unit(&self) -> f64 {
        2.0 * self.c as f64
    }

    pub fn on_model(&self, p: &AmbientVector, tol: f64) -> Result<bool, GeometryError> {
        let target = self
            .constraint_target()
            .ok_or(GeometryError::NoModelConstraint)?;
        if p.sig != self.ambient {
            return Err(GeometryError::SignatureMismatch {
                left: p.sig,
                right: self.ambient,
            });
        }
        let rr = p.dot(p);
        let mut ok = (rr - target).abs() <= tol;
        if self.c == -1 {
            ok &= p.comps[3] > 0.0;
        }
        Ok(ok)
    }

    pub fn name(&self) -> &'static str {
        match self.c {
            0 => "R3",
            1 => "S3",
            _ => "H3",
        }
    }
}
