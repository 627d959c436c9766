//! The Matsumoto-Yor map `Ψ(x, y) = ((x+y)⁻¹, x⁻¹ − (x+y)⁻¹)` on pairs of
//! cone points, Hua's identity, and the Jacobian of `Ψ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{ConeError, Result};
use crate::jordan_algebra::{Algebra, Element};

/// Tolerance used when a pair is checked for cone membership.
pub const CONE_TOL: f64 = 0.0;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Two points of the same open cone.
#[derive(Clone, Debug, PartialEq)]
pub struct ConePair {
    pub first: Element,
    pub second: Element,
}

impl ConePair {
    pub fn new(first: Element, second: Element) -> Result<Self> {
        if first.algebra() != second.algebra() {
            return Err(ConeError::AlgebraMismatch { left: first.algebra(), right: second.algebra() });
        }
        first.require_cone(CONE_TOL)?;
        second.require_cone(CONE_TOL)?;
        Ok(ConePair { first, second })
    }

    pub fn algebra(&self) -> Algebra {
        self.first.algebra()
    }
}

/// `Ψ(x, y)`; both outputs are checked to lie in the open cone.
pub fn my_map(x: &Element, y: &Element) -> Result<ConePair> {
    x.require_cone(CONE_TOL)?;
    y.require_cone(CONE_TOL)?;
    let (u, v) = my_map_raw(x, y)?;
    ConePair::new(u, v)
}

/// `Ψ` without cone checks; used for finite differencing.
fn my_map_raw(x: &Element, y: &Element) -> Result<(Element, Element)> {
    let u = x.checked_add(y)?.inverse()?;
    let v = x.inverse()?.checked_sub(&u)?;
    Ok((u, v))
}

/// Right-hand side of Hua's identity, `(a + P(a) b⁻¹)⁻¹`, which equals
/// `a⁻¹ − (a+b)⁻¹`.
pub fn hua_rhs(a: &Element, b: &Element) -> Result<Element> {
    a.require_cone(CONE_TOL)?;
    let pb = a.quad_rep().apply(&b.inverse()?)?;
    a.checked_add(&pb)?.inverse()
}

/// Left-hand side of Hua's identity, `a⁻¹ − (a+b)⁻¹`.
pub fn hua_lhs(a: &Element, b: &Element) -> Result<Element> {
    a.inverse()?.checked_sub(&a.checked_add(b)?.inverse()?)
}

/// `(det u · det(u+v))^(−2·dim/r)`, the Jacobian of `Ψ` at `(u, v)`.
pub fn jacobian_det_formula(u: &Element, v: &Element) -> Result<f64> {
    u.require_cone(CONE_TOL)?;
    v.require_cone(CONE_TOL)?;
    let alg = u.algebra();
    let log_det = u.log_det()? + u.checked_add(v)?.log_det()?;
    Ok((-2.0 * alg.dim_over_rank() * log_det).exp())
}

/// Central-difference Jacobian matrix of `(u, v) ↦ Ψ(u, v)` in coordinates,
/// shape `2·dim × 2·dim`, block order `[u, v]`. Each coordinate is perturbed by
/// `step·max(1, |c|)`.
pub fn jacobian_matrix_numeric(u: &Element, v: &Element, step: f64) -> Result<DMatrix<f64>> {
    u.require_cone(CONE_TOL)?;
    v.require_cone(CONE_TOL)?;
    let alg = u.algebra();
    let n = alg.dim();
    let mut point = DVector::zeros(2 * n);
    point.rows_mut(0, n).copy_from(u.coords());
    point.rows_mut(n, n).copy_from(v.coords());

    let eval = |p: &DVector<f64>| -> Result<DVector<f64>> {
        let a = Element::from_dvector(alg, p.rows(0, n).into_owned())?;
        let b = Element::from_dvector(alg, p.rows(n, n).into_owned())?;
        a.require_cone(CONE_TOL)?;
        b.require_cone(CONE_TOL)?;
        let (x, y) = my_map_raw(&a, &b)?;
        let mut out = DVector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(x.coords());
        out.rows_mut(n, n).copy_from(y.coords());
        Ok(out)
    };

    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..2 * n {
        let h = step * point[k].abs().max(1.0);
        let mut plus = point.clone();
        plus[k] += h;
        let mut minus = point.clone();
        minus[k] -= h;
        let col = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
        jac.set_column(k, &col);
    }
    Ok(jac)
}

/// `|det|` of the finite-difference Jacobian of `Ψ`.
pub fn jacobian_det_numeric(u: &Element, v: &Element, step: f64) -> Result<f64> {
    Ok(jacobian_matrix_numeric(u, v, step)?.lu().determinant().abs())
}

#[derive(Clone, Copy, Debug)]
pub struct JacobianComparison {
    pub formula: f64,
    pub numeric: f64,
    pub rel_error: f64,
    pub refined: bool,
}

/// Compare formula and finite-difference Jacobians; if they disagree beyond
/// `tol`, apply one Richardson step `(4·D(h/2) − D(h))/3` to the matrix.
pub fn compare_jacobian(u: &Element, v: &Element, step: f64, tol: f64) -> Result<JacobianComparison> {
    let formula = jacobian_det_formula(u, v)?;
    let coarse = jacobian_matrix_numeric(u, v, step)?;
    let numeric = coarse.clone().lu().determinant().abs();
    let rel_error = (numeric - formula).abs() / formula;
    if rel_error <= tol {
        return Ok(JacobianComparison { formula, numeric, rel_error, refined: false });
    }
    let fine = jacobian_matrix_numeric(u, v, step / 2.0)?;
    let extrapolated = (fine * 4.0 - coarse) / 3.0;
    let numeric = extrapolated.lu().determinant().abs();
    let rel_error = (numeric - formula).abs() / formula;
    Ok(JacobianComparison { formula, numeric, rel_error, refined: true })
}
