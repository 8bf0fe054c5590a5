//! Exact series reference solutions on the annulus.
//!
//! Scattering of the incident plane wave `e^{ikx₁}` by the sound-soft disk
//! of radius `a`: the scattered pressure is
//! `u(r,θ) = Σ_n [a_n H_n⁽¹⁾(kr) + b_n H_n⁽²⁾(kr)] e^{inθ}` with `b_n = 0`
//! and `a_n = -iⁿ J_n(ka)/H_n⁽¹⁾(ka)` for the free-field (radiating)
//! solution. When the domain is truncated at `r = R` with one of the ABC
//! conditions, the exact solution of the truncated problem keeps both
//! Hankel branches and each mode solves a 2×2 system: the ABC relation at
//! `r = R` and the Dirichlet condition at `r = a`.
//!
//! The displacement reference is `v = ∇u`, evaluated from the cylinder
//! derivative identities, so that `u = -∇·v/k²` holds exactly.

use crate::boundary::modal::{abc_gamma, AbcVariant};
use crate::specfun::cyl_arrays;
use crate::{C64, CVec2, Error, Point2, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesKind {
    /// Exact solution of the ABC-truncated annulus problem.
    AbcExact(AbcVariant),
    /// Free-field scattering by the sound-soft disk (also the exact
    /// solution when the truncation uses the exact NtD map).
    SoundSoftScattering,
}

#[derive(Debug, Clone)]
pub struct ExactSeries {
    pub kind: SeriesKind,
    pub k: f64,
    pub a: f64,
    pub r_outer: f64,
    pub m_exact: usize,
    /// `a_n` for `n = i - M_exact`.
    pub a_n: Vec<C64>,
    /// `b_n` in the same layout (all zero for the scattering solution).
    pub b_n: Vec<C64>,
}

fn ipow(n: i32) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Sign of the negative-order reflection `C_{-n} = (-1)^n C_n`; positive
/// orders are returned unchanged.
fn parity(n: i32) -> f64 {
    if n >= 0 || n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `H_n⁽¹⁾, H_n⁽¹⁾′, J_n` for signed order from precomputed arrays.
struct Cyl {
    j: Vec<f64>,
    jp: Vec<f64>,
    y: Vec<f64>,
    yp: Vec<f64>,
}

impl Cyl {
    fn at(x: f64, nmax: usize) -> Result<Self> {
        let arr = cyl_arrays(nmax, x)?;
        Ok(Cyl {
            j: arr.j,
            jp: arr.jp,
            y: arr.y,
            yp: arr.yp,
        })
    }

    fn h1(&self, n: i32) -> C64 {
        let m = n.unsigned_abs() as usize;
        parity(n) * C64::new(self.j[m], self.y[m])
    }

    fn h1p(&self, n: i32) -> C64 {
        let m = n.unsigned_abs() as usize;
        parity(n) * C64::new(self.jp[m], self.yp[m])
    }

    fn j(&self, n: i32) -> f64 {
        parity(n) * self.j[n.unsigned_abs() as usize]
    }

    fn jp_s(&self, n: i32) -> f64 {
        parity(n) * self.jp[n.unsigned_abs() as usize]
    }

    fn y_s(&self, n: i32) -> f64 {
        parity(n) * self.y[n.unsigned_abs() as usize]
    }

    fn yp_s(&self, n: i32) -> f64 {
        parity(n) * self.yp[n.unsigned_abs() as usize]
    }
}

fn validate_geometry(k: f64, a: f64, r_outer: f64) -> Result<()> {
    if !(k > 0.0 && a > 0.0 && r_outer > a) {
        return Err(Error::InvalidParameter(format!(
            "need k > 0 and 0 < a < R, got k = {k}, a = {a}, R = {r_outer}"
        )));
    }
    Ok(())
}

/// Exact solution of the ABC-truncated scattering problem.
///
/// Per mode `n`, `(a_n, b_n)` solves
/// `[γ_n H_n⁽¹⁾(kR) + k H_n⁽¹⁾′(kR),  γ_n H_n⁽²⁾(kR) + k H_n⁽²⁾′(kR)] = 0`
/// `[H_n⁽¹⁾(ka),                      H_n⁽²⁾(ka)]                  = -iⁿ J_n(ka)`
/// by Cramer's rule with row scaling.
pub fn exact_abc_series(
    variant: AbcVariant,
    k: f64,
    a: f64,
    r_outer: f64,
    m_exact: usize,
) -> Result<ExactSeries> {
    validate_geometry(k, a, r_outer)?;
    let cr = Cyl::at(k * r_outer, m_exact + 1)?;
    let ca = Cyl::at(k * a, m_exact + 1)?;
    let mm = m_exact as i32;
    let mut a_n = Vec::with_capacity(2 * m_exact + 1);
    let mut b_n = Vec::with_capacity(2 * m_exact + 1);
    for n in -mm..=mm {
        let gamma = abc_gamma(variant, k, r_outer, n);
        // In the Hankel basis the two columns are numerically parallel at
        // large order (both dominated by ±iY_n), so the mode is solved in
        // the (J, Y) basis, u_n = p J_n + q Y_n, and mapped back through
        // a = (p - iq)/2, b = (p + iq)/2.
        let r1j = gamma * cr.j(n) + k * cr.jp_s(n);
        let r1y = gamma * cr.y_s(n) + k * cr.yp_s(n);
        let r2j = ca.j(n);
        let r2y = ca.y_s(n);
        let rhs = -ipow(n) * ca.j(n);
        // Column scaling keeps the determinant away from overflow and
        // underflow: the J column is tiny and the Y column huge at large n.
        let sj = 1.0 / r1j.norm().max(r2j.abs()).max(1e-300);
        let sy = 1.0 / r1y.norm().max(r2y.abs()).max(1e-300);
        let det = (r1j * sj) * (r2y * sy) - (r1y * sy) * (r2j * sj);
        if !det.is_finite() || det.norm() < 1e-300 {
            return Err(Error::SpecFun(format!(
                "ABC exact-series mode n = {n} is singular (det = {det})"
            )));
        }
        let p = -(r1y * sy) * rhs / det * sj;
        let q = (r1j * sj) * rhs / det * sy;
        let iq = C64::new(0.0, 1.0) * q;
        a_n.push((p - iq) * 0.5);
        b_n.push((p + iq) * 0.5);
    }
    Ok(ExactSeries {
        kind: SeriesKind::AbcExact(variant),
        k,
        a,
        r_outer,
        m_exact,
        a_n,
        b_n,
    })
}

/// Free-field sound-soft scattering series (exact NtD reference).
pub fn exact_scattering_series(k: f64, a: f64, r_outer: f64, m_exact: usize) -> Result<ExactSeries> {
    validate_geometry(k, a, r_outer)?;
    let ca = Cyl::at(k * a, m_exact + 1)?;
    let mm = m_exact as i32;
    let mut a_n = Vec::with_capacity(2 * m_exact + 1);
    for n in -mm..=mm {
        let h = ca.h1(n);
        if h.norm() < 1e-300 {
            return Err(Error::SpecFun(format!(
                "scattering-series mode n = {n} is singular (H_n(ka) = {h})"
            )));
        }
        a_n.push(-ipow(n) * ca.j(n) / h);
    }
    Ok(ExactSeries {
        kind: SeriesKind::SoundSoftScattering,
        k,
        a,
        r_outer,
        m_exact,
        b_n: vec![C64::new(0.0, 0.0); a_n.len()],
        a_n,
    })
}

impl ExactSeries {
    /// Pressure `u` and displacement `v = ∇u` at a point.
    ///
    /// In polar components `v_r = Σ k(a_n H_n⁽¹⁾′ + b_n H_n⁽²⁾′)e^{inθ}`
    /// and `v_θ = Σ (in/r)(a_n H_n⁽¹⁾ + b_n H_n⁽²⁾)e^{inθ}`.
    pub fn eval(&self, x: Point2) -> Result<(C64, CVec2)> {
        let r = x.norm();
        if !(r > 0.0) {
            return Err(Error::PointOutsideDomain { x: x.x, y: x.y });
        }
        let theta = x.angle();
        let c = Cyl::at(self.k * r, self.m_exact + 1)?;
        let mm = self.m_exact as i32;
        let mut u = C64::new(0.0, 0.0);
        let mut vr = C64::new(0.0, 0.0);
        let mut vt = C64::new(0.0, 0.0);
        for n in -mm..=mm {
            let i = (n + mm) as usize;
            let (an, bn) = (self.a_n[i], self.b_n[i]);
            let h = c.h1(n);
            let hp = c.h1p(n);
            let radial = an * h + bn * h.conj();
            let radial_d = an * hp + bn * hp.conj();
            let phase = C64::new(0.0, n as f64 * theta).exp();
            u += radial * phase;
            vr += self.k * radial_d * phase;
            vt += C64::new(0.0, n as f64 / r) * radial * phase;
        }
        let (ct, st) = (theta.cos(), theta.sin());
        let v = CVec2::new(vr * ct - vt * st, vr * st + vt * ct);
        Ok((u, v))
    }

    /// Pressure trace on a circle of radius `rho` (used for boundary checks).
    pub fn eval_u_polar(&self, rho: f64, theta: f64) -> Result<C64> {
        Ok(self
            .eval(Point2::new(rho * theta.cos(), rho * theta.sin()))?
            .0)
    }
}
