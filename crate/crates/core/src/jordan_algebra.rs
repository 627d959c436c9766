//! Euclidean Jordan algebras of three kinds and their symmetric cones.
//!
//! * `SymReal`: real symmetric r×r matrices, Peirce constant 1.
//! * `HermComplex`: complex Hermitian r×r matrices, Peirce constant 2, realified.
//! * `Lorentz`: the spin factor R^(n+1), rank 2, Peirce constant n − 1.
//!
//! Elements carry coordinates in a fixed basis. For the matrix kinds the basis
//! is orthonormal for the trace form `⟨x, y⟩ = tr(x∘y)`:
//!
//! ```text
//! E_11, E_22, …, E_rr,
//! then for each pair i < j in column-major order (j outer, i inner):
//!     (E_ij + E_ji)/√2                (SymReal and HermComplex)
//!     i·(E_ij − E_ji)/√2              (HermComplex only, right after the real unit)
//! ```
//!
//! Lorentz elements use the raw coordinates `(x₀, x₁, …, xₙ)` with the product
//! `(x∘y)₀ = Σ xᵢyᵢ`, `(x∘y)ᵢ = x₀yᵢ + y₀xᵢ`. Here the trace form is twice the
//! coordinate dot product, so the basis is orthogonal but not orthonormal.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Relative singularity cutoff: an eigenvalue is treated as zero when
/// `|λ| ≤ DEFAULT_SINGULAR_REL · (1 + max|λ|)`.
pub const DEFAULT_SINGULAR_REL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgebraKind {
    SymReal,
    HermComplex,
    Lorentz,
}

impl AlgebraKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgebraKind::SymReal => "sym-real",
            AlgebraKind::HermComplex => "herm-complex",
            AlgebraKind::Lorentz => "lorentz",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sym-real" => Ok(AlgebraKind::SymReal),
            "herm-complex" => Ok(AlgebraKind::HermComplex),
            "lorentz" => Ok(AlgebraKind::Lorentz),
            other => Err(ConeError::Parse(format!("unknown algebra kind '{other}'"))),
        }
    }
}

impl fmt::Display for AlgebraKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which simple Euclidean Jordan algebra, with its rank `r`, Peirce constant `d`
/// and real dimension. Constructors enforce `dim = r + d·r(r−1)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Algebra {
    kind: AlgebraKind,
    rank: usize,
    peirce: usize,
    dim: usize,
}

impl Algebra {
    pub fn sym_real(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(ConeError::InvalidDescriptor("sym-real rank must be at least 1".into()));
        }
        Ok(Algebra { kind: AlgebraKind::SymReal, rank, peirce: 1, dim: rank * (rank + 1) / 2 })
    }

    pub fn herm_complex(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(ConeError::InvalidDescriptor("herm-complex rank must be at least 1".into()));
        }
        Ok(Algebra { kind: AlgebraKind::HermComplex, rank, peirce: 2, dim: rank * rank })
    }

    /// The spin factor on R^(n+1), `n ≥ 2`.
    pub fn lorentz(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(ConeError::InvalidDescriptor(format!(
                "lorentz algebra R^(n+1) needs n >= 2, got n = {n}"
            )));
        }
        Ok(Algebra { kind: AlgebraKind::Lorentz, rank: 2, peirce: n - 1, dim: n + 1 })
    }

    /// Matrix kinds take the rank; Lorentz takes the ambient dimension `n + 1`.
    pub fn from_kind(kind: AlgebraKind, size: usize) -> Result<Self> {
        match kind {
            AlgebraKind::SymReal => Self::sym_real(size),
            AlgebraKind::HermComplex => Self::herm_complex(size),
            AlgebraKind::Lorentz => Self::lorentz(size.saturating_sub(1)),
        }
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn peirce(&self) -> usize {
        self.peirce
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `dim V / r`, the exponent that recurs in every density on the cone.
    pub fn dim_over_rank(&self) -> f64 {
        self.dim as f64 / self.rank as f64
    }

    pub fn is_matrix_kind(&self) -> bool {
        self.kind != AlgebraKind::Lorentz
    }

    /// Column header names for the coordinates, in basis order.
    pub fn basis_labels(&self) -> Vec<String> {
        match self.kind {
            AlgebraKind::Lorentz => (0..self.dim).map(|i| format!("x{i}")).collect(),
            _ => {
                let mut labels: Vec<String> =
                    (1..=self.rank).map(|i| format!("e{i}{i}")).collect();
                for (i, j) in offdiag_pairs(self.rank) {
                    labels.push(format!("s{}{}", i + 1, j + 1));
                    if self.kind == AlgebraKind::HermComplex {
                        labels.push(format!("a{}{}", i + 1, j + 1));
                    }
                }
                labels
            }
        }
    }
}

impl fmt::Display for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AlgebraKind::Lorentz => write!(f, "lorentz(n={})", self.dim - 1),
            kind => write!(f, "{kind}(r={})", self.rank),
        }
    }
}

/// Off-diagonal positions `(i, j)`, `i < j`, in column-major order.
fn offdiag_pairs(rank: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..rank).flat_map(|j| (0..j).map(move |i| (i, j)))
}

/// A point of the Jordan algebra in canonical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    alg: Algebra,
    coords: DVector<f64>,
}

impl Element {
    pub fn new(alg: Algebra, coords: Vec<f64>) -> Result<Self> {
        Self::from_dvector(alg, DVector::from_vec(coords))
    }

    pub fn from_dvector(alg: Algebra, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != alg.dim {
            return Err(ConeError::CoordinateLength { expected: alg.dim, got: coords.len() });
        }
        Ok(Element { alg, coords })
    }

    pub fn zeros(alg: Algebra) -> Self {
        Element { alg, coords: DVector::zeros(alg.dim) }
    }

    /// The neutral element `e`.
    pub fn identity(alg: Algebra) -> Self {
        let mut coords = DVector::zeros(alg.dim);
        match alg.kind {
            AlgebraKind::Lorentz => coords[0] = 1.0,
            _ => coords.rows_mut(0, alg.rank).fill(1.0),
        }
        Element { alg, coords }
    }

    /// Diagonal matrix element (matrix kinds only).
    pub fn diag(alg: Algebra, values: &[f64]) -> Result<Self> {
        if !alg.is_matrix_kind() {
            return Err(ConeError::Unsupported("diag elements exist only for matrix kinds".into()));
        }
        if values.len() != alg.rank {
            return Err(ConeError::CoordinateLength { expected: alg.rank, got: values.len() });
        }
        let mut coords = DVector::zeros(alg.dim);
        coords.rows_mut(0, alg.rank).copy_from_slice(values);
        Ok(Element { alg, coords })
    }

    pub fn algebra(&self) -> Algebra {
        self.alg
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    /// Canonical basis vector `k`.
    pub fn basis(alg: Algebra, k: usize) -> Self {
        let mut coords = DVector::zeros(alg.dim);
        coords[k] = 1.0;
        Element { alg, coords }
    }

    pub fn scale(&self, s: f64) -> Self {
        Element { alg: self.alg, coords: &self.coords * s }
    }

    fn same_algebra(&self, other: &Element) -> Result<()> {
        if self.alg != other.alg {
            return Err(ConeError::AlgebraMismatch { left: self.alg, right: other.alg });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Element) -> Result<Element> {
        self.same_algebra(other)?;
        Ok(Element { alg: self.alg, coords: &self.coords + &other.coords })
    }

    pub fn checked_sub(&self, other: &Element) -> Result<Element> {
        self.same_algebra(other)?;
        Ok(Element { alg: self.alg, coords: &self.coords - &other.coords })
    }

    // ---- matrix realisations -------------------------------------------------

    /// The real symmetric matrix of a `SymReal` element.
    pub fn to_real_symmetric(&self) -> Result<DMatrix<f64>> {
        if self.alg.kind != AlgebraKind::SymReal {
            return Err(ConeError::Unsupported(format!("{} is not sym-real", self.alg)));
        }
        let r = self.alg.rank;
        let mut m = DMatrix::zeros(r, r);
        for i in 0..r {
            m[(i, i)] = self.coords[i];
        }
        for (k, (i, j)) in offdiag_pairs(r).enumerate() {
            let v = self.coords[r + k] * FRAC_1_SQRT_2;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Ok(m)
    }

    /// Coordinates of the symmetric part of `m`.
    pub fn from_real_symmetric(alg: Algebra, m: &DMatrix<f64>) -> Result<Self> {
        if alg.kind != AlgebraKind::SymReal {
            return Err(ConeError::Unsupported(format!("{alg} is not sym-real")));
        }
        let r = alg.rank;
        if m.nrows() != r || m.ncols() != r {
            return Err(ConeError::CoordinateLength { expected: r * r, got: m.len() });
        }
        let mut coords = DVector::zeros(alg.dim);
        for i in 0..r {
            coords[i] = m[(i, i)];
        }
        for (k, (i, j)) in offdiag_pairs(r).enumerate() {
            coords[r + k] = SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]);
        }
        Ok(Element { alg, coords })
    }

    /// The Hermitian matrix of an `HermComplex` element.
    pub fn to_hermitian(&self) -> Result<DMatrix<Complex64>> {
        if self.alg.kind != AlgebraKind::HermComplex {
            return Err(ConeError::Unsupported(format!("{} is not herm-complex", self.alg)));
        }
        let r = self.alg.rank;
        let mut m = DMatrix::from_element(r, r, Complex64::new(0.0, 0.0));
        for i in 0..r {
            m[(i, i)] = Complex64::new(self.coords[i], 0.0);
        }
        for (k, (i, j)) in offdiag_pairs(r).enumerate() {
            let z = Complex64::new(self.coords[r + 2 * k], self.coords[r + 2 * k + 1]) * FRAC_1_SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        Ok(m)
    }

    /// Coordinates of the Hermitian part of `m`.
    pub fn from_hermitian(alg: Algebra, m: &DMatrix<Complex64>) -> Result<Self> {
        if alg.kind != AlgebraKind::HermComplex {
            return Err(ConeError::Unsupported(format!("{alg} is not herm-complex")));
        }
        let r = alg.rank;
        if m.nrows() != r || m.ncols() != r {
            return Err(ConeError::CoordinateLength { expected: r * r, got: m.len() });
        }
        let mut coords = DVector::zeros(alg.dim);
        for i in 0..r {
            coords[i] = m[(i, i)].re;
        }
        for (k, (i, j)) in offdiag_pairs(r).enumerate() {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5 * SQRT_2;
            coords[r + 2 * k] = z.re;
            coords[r + 2 * k + 1] = z.im;
        }
        Ok(Element { alg, coords })
    }

    // ---- algebra ------------------------------------------------------------

    /// The Jordan product `x∘y`.
    pub fn jordan(&self, other: &Element) -> Result<Element> {
        self.same_algebra(other)?;
        Ok(self.jordan_unchecked(other))
    }

    fn jordan_unchecked(&self, other: &Element) -> Element {
        let alg = self.alg;
        match alg.kind {
            AlgebraKind::SymReal => {
                let x = self.to_real_symmetric().expect("kind checked");
                let y = other.to_real_symmetric().expect("kind checked");
                let p = (&x * &y + &y * &x) * 0.5;
                Element::from_real_symmetric(alg, &p).expect("shape checked")
            }
            AlgebraKind::HermComplex => {
                let x = self.to_hermitian().expect("kind checked");
                let y = other.to_hermitian().expect("kind checked");
                let p = (&x * &y + &y * &x) * Complex64::new(0.5, 0.0);
                Element::from_hermitian(alg, &p).expect("shape checked")
            }
            AlgebraKind::Lorentz => {
                let x = &self.coords;
                let y = &other.coords;
                let mut out = DVector::zeros(alg.dim);
                out[0] = x.dot(y);
                for i in 1..alg.dim {
                    out[i] = x[0] * y[i] + y[0] * x[i];
                }
                Element { alg, coords: out }
            }
        }
    }

    pub fn square(&self) -> Element {
        self.jordan_unchecked(self)
    }

    /// Trace form `⟨x, y⟩ = tr(x∘y)`.
    pub fn inner(&self, other: &Element) -> Result<f64> {
        self.same_algebra(other)?;
        Ok(self.inner_unchecked(other))
    }

    fn inner_unchecked(&self, other: &Element) -> f64 {
        let dot = self.coords.dot(&other.coords);
        match self.alg.kind {
            AlgebraKind::Lorentz => 2.0 * dot,
            _ => dot,
        }
    }

    /// Norm induced by the trace form.
    pub fn norm(&self) -> f64 {
        self.inner_unchecked(self).sqrt()
    }

    pub fn trace(&self) -> f64 {
        match self.alg.kind {
            AlgebraKind::Lorentz => 2.0 * self.coords[0],
            _ => self.coords.rows(0, self.alg.rank).sum(),
        }
    }

    /// Product of the spectral eigenvalues.
    pub fn det(&self) -> f64 {
        self.eigenvalues().iter().product()
    }

    /// `log det x`, defined on the open cone.
    pub fn log_det(&self) -> Result<f64> {
        let eig = self.eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(ConeError::NotInCone { min_eigenvalue: min });
        }
        Ok(eig.iter().map(|l| l.ln()).sum())
    }

    /// Multiplication operator `L(x): y ↦ x∘y`.
    pub fn lmap(&self) -> LinearOperator {
        let alg = self.alg;
        let n = alg.dim;
        let matrix = match alg.kind {
            AlgebraKind::Lorentz => {
                let x = &self.coords;
                let mut m = DMatrix::from_diagonal_element(n, n, x[0]);
                for i in 1..n {
                    m[(0, i)] = x[i];
                    m[(i, 0)] = x[i];
                }
                m
            }
            _ => {
                let mut m = DMatrix::zeros(n, n);
                for k in 0..n {
                    let col = self.jordan_unchecked(&Element::basis(alg, k));
                    m.set_column(k, &col.coords);
                }
                m
            }
        };
        LinearOperator { alg, matrix }
    }

    /// Quadratic representation `P(x) = 2L(x)² − L(x²)`.
    pub fn quad_rep(&self) -> LinearOperator {
        let l = self.lmap();
        let l2 = self.square().lmap();
        let matrix = (&l.matrix * &l.matrix) * 2.0 - l2.matrix;
        LinearOperator { alg: self.alg, matrix }
    }

    /// Eigenvalues only, sorted descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eig = match self.alg.kind {
            AlgebraKind::SymReal => {
                let m = self.to_real_symmetric().expect("kind checked");
                m.symmetric_eigenvalues().iter().copied().collect::<Vec<_>>()
            }
            AlgebraKind::HermComplex => {
                let m = self.to_hermitian().expect("kind checked");
                m.symmetric_eigenvalues().iter().copied().collect::<Vec<_>>()
            }
            AlgebraKind::Lorentz => {
                let x0 = self.coords[0];
                let rho = self.coords.rows(1, self.alg.dim - 1).norm();
                vec![x0 + rho, x0 - rho]
            }
        };
        eig.sort_by(|a, b| b.total_cmp(a));
        eig
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(f64::NAN)
    }

    /// Spectral decomposition `x = Σ λᵢ cᵢ`, eigenvalues descending.
    pub fn spectral(&self) -> SpectralDecomposition {
        let alg = self.alg;
        let mut pairs: Vec<(f64, Element)> = match alg.kind {
            AlgebraKind::SymReal => {
                let m = self.to_real_symmetric().expect("kind checked");
                let eig = SymmetricEigen::new(m);
                (0..alg.rank)
                    .map(|k| {
                        let v = eig.eigenvectors.column(k);
                        let proj = v * v.transpose();
                        (eig.eigenvalues[k], Element::from_real_symmetric(alg, &proj).expect("shape"))
                    })
                    .collect()
            }
            AlgebraKind::HermComplex => {
                let m = self.to_hermitian().expect("kind checked");
                let eig = SymmetricEigen::new(m);
                (0..alg.rank)
                    .map(|k| {
                        let v = eig.eigenvectors.column(k);
                        let proj = v * v.adjoint();
                        (eig.eigenvalues[k], Element::from_hermitian(alg, &proj).expect("shape"))
                    })
                    .collect()
            }
            AlgebraKind::Lorentz => {
                let x0 = self.coords[0];
                let bar = self.coords.rows(1, alg.dim - 1).into_owned();
                let rho = bar.norm();
                let dir = if rho > 0.0 {
                    bar / rho
                } else {
                    let mut axis = DVector::zeros(alg.dim - 1);
                    axis[0] = 1.0;
                    axis
                };
                let idem = |sign: f64| {
                    let mut c = DVector::zeros(alg.dim);
                    c[0] = 0.5;
                    c.rows_mut(1, alg.dim - 1).copy_from(&(&dir * (0.5 * sign)));
                    Element { alg, coords: c }
                };
                vec![(x0 + rho, idem(1.0)), (x0 - rho, idem(-1.0))]
            }
        };
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (eigenvalues, idempotents) = pairs.into_iter().unzip();
        SpectralDecomposition { eigenvalues, idempotents }
    }

    pub fn in_cone(&self, tol: f64) -> bool {
        self.min_eigenvalue() > tol
    }

    /// Inverse with the default scale-aware singularity threshold.
    pub fn inverse(&self) -> Result<Element> {
        self.inverse_with(DEFAULT_SINGULAR_REL)
    }

    /// Inverse treating `|λ| ≤ rel·(1 + max|λ|)` as singular.
    pub fn inverse_with(&self, rel: f64) -> Result<Element> {
        let sd = self.spectral();
        let max_abs = sd.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let min_abs = sd.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
        let threshold = rel * (1.0 + max_abs);
        if !(min_abs > threshold) {
            return Err(ConeError::SingularElement { min_abs, threshold });
        }
        Ok(sd.map(|l| 1.0 / l))
    }

    /// Square root on the open cone.
    pub fn sqrt(&self) -> Result<Element> {
        self.power(0.5)
    }

    /// Real power `Σ λᵢ^s cᵢ` on the open cone.
    pub fn power(&self, s: f64) -> Result<Element> {
        let sd = self.spectral();
        let min = sd.min_eigenvalue();
        if !(min > 0.0) {
            return Err(ConeError::NotInCone { min_eigenvalue: min });
        }
        Ok(sd.map(|l| l.powf(s)))
    }

    /// Error unless all eigenvalues exceed `tol`.
    pub fn require_cone(&self, tol: f64) -> Result<()> {
        let min = self.min_eigenvalue();
        if min > tol {
            Ok(())
        } else {
            Err(ConeError::NotInCone { min_eigenvalue: min })
        }
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Element> for &Element {
            type Output = Element;
            /// Panics on algebra mismatch; use the `checked_*` form to get an error.
            fn $method(self, rhs: &Element) -> Element {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<Element> for Element {
            type Output = Element;
            fn $method(self, rhs: Element) -> Element {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Element> for Element {
            type Output = Element;
            fn $method(self, rhs: &Element) -> Element {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);

impl Mul<f64> for &Element {
    type Output = Element;
    fn mul(self, s: f64) -> Element {
        self.scale(s)
    }
}

impl Mul<f64> for Element {
    type Output = Element;
    fn mul(self, s: f64) -> Element {
        self.scale(s)
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale(-1.0)
    }
}

impl Neg for Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale(-1.0)
    }
}

/// A linear map on the algebra, as a `dim × dim` matrix acting on coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    alg: Algebra,
    matrix: DMatrix<f64>,
}

impl LinearOperator {
    pub fn new(alg: Algebra, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != alg.dim || matrix.ncols() != alg.dim {
            return Err(ConeError::CoordinateLength { expected: alg.dim * alg.dim, got: matrix.len() });
        }
        Ok(LinearOperator { alg, matrix })
    }

    pub fn identity(alg: Algebra) -> Self {
        LinearOperator { alg, matrix: DMatrix::identity(alg.dim, alg.dim) }
    }

    pub fn algebra(&self) -> Algebra {
        self.alg
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        if x.alg != self.alg {
            return Err(ConeError::AlgebraMismatch { left: self.alg, right: x.alg });
        }
        Ok(Element { alg: self.alg, coords: &self.matrix * &x.coords })
    }

    pub fn compose(&self, other: &LinearOperator) -> Result<LinearOperator> {
        if other.alg != self.alg {
            return Err(ConeError::AlgebraMismatch { left: self.alg, right: other.alg });
        }
        Ok(LinearOperator { alg: self.alg, matrix: &self.matrix * &other.matrix })
    }

    pub fn inverse(&self) -> Option<LinearOperator> {
        self.matrix.clone().try_inverse().map(|matrix| LinearOperator { alg: self.alg, matrix })
    }

    /// Determinant of the operator on the `dim`-dimensional space.
    pub fn det(&self) -> f64 {
        self.matrix.clone().lu().determinant()
    }

    /// Largest absolute entry of `M − Mᵀ`.
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

/// Eigenvalues (descending) and a complete system of orthogonal idempotents.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub idempotents: Vec<Element>,
}

impl SpectralDecomposition {
    /// Functional calculus: `Σ f(λᵢ) cᵢ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Element {
        let alg = self.idempotents[0].alg;
        let mut coords = DVector::zeros(alg.dim);
        for (l, c) in self.eigenvalues.iter().zip(&self.idempotents) {
            coords.axpy(f(*l), &c.coords, 1.0);
        }
        Element { alg, coords }
    }

    pub fn reconstruct(&self) -> Element {
        self.map(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }
}

// ---- free-function forms ------------------------------------------------------

pub fn identity(alg: Algebra) -> Element {
    Element::identity(alg)
}

pub fn jordan_product(x: &Element, y: &Element) -> Result<Element> {
    x.jordan(y)
}

pub fn inner(x: &Element, y: &Element) -> Result<f64> {
    x.inner(y)
}

pub fn lmap(x: &Element) -> LinearOperator {
    x.lmap()
}

pub fn quad_rep(x: &Element) -> LinearOperator {
    x.quad_rep()
}

pub fn spectral_decomposition(x: &Element) -> SpectralDecomposition {
    x.spectral()
}

pub fn in_cone(x: &Element, tol: f64) -> bool {
    x.in_cone(tol)
}

// ---- random points --------------------------------------------------------------

/// Standard Gaussian coordinates.
pub fn random_element<R: Rng + ?Sized>(alg: Algebra, rng: &mut R) -> Element {
    let coords = DVector::from_fn(alg.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    Element { alg, coords }
}

/// `g∘g + spread·e` for Gaussian `g`; every eigenvalue is at least `spread`.
///
/// Panics if `spread` is not positive.
pub fn random_cone_point<R: Rng + ?Sized>(alg: Algebra, rng: &mut R, spread: f64) -> Element {
    assert!(spread > 0.0, "spread must be positive, got {spread}");
    let g = random_element(alg, rng);
    g.square() + Element::identity(alg).scale(spread)
}

/// A cone point with a Gaussian-random frame and eigenvalues uniform in `[lo, hi]`.
pub fn random_cone_point_banded<R: Rng + ?Sized>(alg: Algebra, rng: &mut R, lo: f64, hi: f64) -> Element {
    assert!(0.0 < lo && lo <= hi, "band must satisfy 0 < lo <= hi");
    let frame = random_element(alg, rng).spectral();
    let mut coords = DVector::zeros(alg.dim);
    for c in &frame.idempotents {
        let l = rng.random_range(lo..=hi);
        coords.axpy(l, &c.coords, 1.0);
    }
    Element { alg, coords }
}
