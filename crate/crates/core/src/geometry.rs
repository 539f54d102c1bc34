//! Covector coordinates, the structural constants `C1`, `C2` of the canonical
//! frame, and the block-structured canonical curvature `R`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Cotangent vector at the base point: horizontal part `h` (length `2n`) and
/// Reeb component `z = p(v0)`.
///
/// The horizontal components are ordered in complex pairs
/// `(h_{X_1}, h_{Y_1}, h_{X_2}, h_{Y_2}, ...)` so that the complex structure
/// acts as the standard rotation on each pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    h: Vec<f64>,
    z: f64,
}

impl Covector {
    pub fn new(h: Vec<f64>, z: f64) -> Result<Self> {
        if h.is_empty() || h.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "horizontal part must have even positive length 2n, got {}",
                h.len()
            )));
        }
        if !z.is_finite() || h.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("covector has non-finite entries".into()));
        }
        Ok(Self { h, z })
    }

    /// Unit horizontal covector `(1, 0, ..., 0)` with Reeb component `z`.
    pub fn unit(n: usize, z: f64) -> Result<Self> {
        let mut h = vec![0.0; 2 * n];
        if n > 0 {
            h[0] = 1.0;
        }
        Self::new(h, z)
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// Complex dimension `n`; the ambient dimension is `2n + 1`.
    pub fn n(&self) -> usize {
        self.h.len() / 2
    }

    /// `r = |p^h|`.
    pub fn r(&self) -> f64 {
        self.h.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Horizontal part as `n` complex numbers `P_j = h_{2j} + i h_{2j+1}`.
    pub fn complex_pairs(&self) -> Vec<num_complex::Complex64> {
        self.h
            .chunks_exact(2)
            .map(|c| num_complex::Complex64::new(c[0], c[1]))
            .collect()
    }

    pub(crate) fn require_unit(&self, tol: f64) -> Result<()> {
        let r = self.r();
        if (r - 1.0).abs() > tol {
            return Err(Error::Normalization {
                constraint: format!("|p^h| = 1 (got {r:.17})"),
            });
        }
        Ok(())
    }
}

/// Cylindrical coordinates `(r, z, dir)` of a covector.
#[derive(Debug, Clone, PartialEq)]
pub struct CylCoord {
    pub r: f64,
    pub z: f64,
    /// Unit direction of `p^h`; `None` when `r = 0`.
    pub dir: Option<Vec<f64>>,
}

pub fn to_cylindrical(p: &Covector) -> CylCoord {
    let r = p.r();
    let dir = (r > 0.0).then(|| p.h.iter().map(|x| x / r).collect());
    CylCoord { r, z: p.z, dir }
}

pub fn from_cylindrical(c: &CylCoord, n: usize) -> Result<Covector> {
    if !(c.r >= 0.0) {
        return Err(Error::InvalidInput(format!("r must be nonnegative, got {}", c.r)));
    }
    match &c.dir {
        Some(dir) => {
            if dir.len() != 2 * n {
                return Err(Error::InvalidInput(format!(
                    "direction has length {}, expected {}",
                    dir.len(),
                    2 * n
                )));
            }
            Covector::new(dir.iter().map(|d| c.r * d).collect(), c.z)
        }
        None if c.r > 0.0 => Err(Error::InvalidInput(
            "direction is required when r > 0".into(),
        )),
        None => Covector::new(vec![0.0; 2 * n], c.z),
    }
}

/// The constant matrices of the structural equations
/// `E' = C1 E + C2 F`, `F' = -R E - C1^T F`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralConstants {
    pub n: usize,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
}

impl StructuralConstants {
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }
}

pub fn assemble_structural(n: usize) -> Result<StructuralConstants> {
    if n == 0 {
        return Err(Error::InvalidInput("complex dimension n must be >= 1".into()));
    }
    let dim = 2 * n + 1;
    let mut c1 = DMatrix::zeros(dim, dim);
    c1[(0, 1)] = 1.0;
    let mut c2 = DMatrix::identity(dim, dim);
    c2[(0, 0)] = 0.0;
    Ok(StructuralConstants { n, c1, c2 })
}

/// Canonical curvature in the `(1, 1, 2n-1)` block layout. The `(1,2)` block
/// is structurally zero and therefore not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalCurvature {
    pub n: usize,
    pub r11: f64,
    pub r22: f64,
    pub r33: DMatrix<f64>,
    pub r13: DVector<f64>,
    pub r23: DVector<f64>,
}

impl CanonicalCurvature {
    /// The full symmetric `(2n+1) x (2n+1)` matrix.
    pub fn assemble(&self) -> DMatrix<f64> {
        let m = 2 * self.n - 1;
        let dim = 2 * self.n + 1;
        let mut r = DMatrix::zeros(dim, dim);
        r[(0, 0)] = self.r11;
        r[(1, 1)] = self.r22;
        for i in 0..m {
            r[(0, 2 + i)] = self.r13[i];
            r[(2 + i, 0)] = self.r13[i];
            r[(1, 2 + i)] = self.r23[i];
            r[(2 + i, 1)] = self.r23[i];
            for j in 0..m {
                r[(2 + i, 2 + j)] = self.r33[(i, j)];
            }
        }
        r
    }

    /// Returns the `(frak1, frak2)` pair when this is a constant-curvature
    /// normal form `diag(0, frak1, frak2 I, 0)` (for `n = 1`, `frak2` is
    /// reported as 0 since the block is empty).
    pub fn as_constant(&self) -> Option<(f64, f64)> {
        let m = 2 * self.n - 1;
        if self.r11 != 0.0
            || self.r13.iter().any(|&x| x != 0.0)
            || self.r23.iter().any(|&x| x != 0.0)
        {
            return None;
        }
        let k2 = if m > 1 { self.r33[(0, 0)] } else { 0.0 };
        for i in 0..m {
            for j in 0..m {
                let expected = if i == j && i + 1 < m { k2 } else { 0.0 };
                if self.r33[(i, j)] != expected {
                    return None;
                }
            }
        }
        Some((self.r22, k2))
    }
}

/// `R = diag(0, frak1, frak2 I_{2n-2}, 0)`.
pub fn constant_curvature_matrix(n: usize, frak1: f64, frak2: f64) -> CanonicalCurvature {
    let m = 2 * n - 1;
    let mut r33 = DMatrix::zeros(m, m);
    for i in 0..m.saturating_sub(1) {
        r33[(i, i)] = frak2;
    }
    CanonicalCurvature {
        n,
        r11: 0.0,
        r22: frak1,
        r33,
        r13: DVector::zeros(m),
        r23: DVector::zeros(m),
    }
}
