//! Modal boundary operators on a circle: the exact Neumann-to-Dirichlet
//! map of the radiating exterior solution and the ABC0–ABC3 local
//! approximations, all diagonal in the Fourier basis `e^{inθ}`.
//!
//! The exact NtD coefficient is `γ_n = (1/k)·H_n⁽¹⁾(kR)/H_n⁽¹⁾′(kR)`, with
//! `Re γ_n < 0` and `Im γ_n = -2/(πk²R|H_n⁽¹⁾′(kR)|²) < 0`; the imaginary
//! part is evaluated through the Wronskian form, which is exact and avoids
//! catastrophic cancellation at large order.
//!
//! ABC variants use the per-mode symbol `γ = ᾱ - β̄ n²/R²` and the NtD-like
//! coefficient `-1/γ`. The conjugation of the tabulated (α, β) pairs makes
//! the coefficients consistent with the exact NtD limit (`γ_n → -i/k` for
//! `kR → ∞` fixed `n`) and with the outgoing `H⁽¹⁾` branch used everywhere
//! else; the unconjugated values select the conjugate (incoming) branch.

use crate::specfun::cyl_arrays;
use crate::{C64, Error, Result};
use std::f64::consts::{PI, TAU};

use super::BoundaryOp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbcVariant {
    Abc0,
    Abc1,
    Abc2,
    Abc3,
}

impl AbcVariant {
    pub const ALL: [AbcVariant; 4] = [
        AbcVariant::Abc0,
        AbcVariant::Abc1,
        AbcVariant::Abc2,
        AbcVariant::Abc3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AbcVariant::Abc0 => "abc0",
            AbcVariant::Abc1 => "abc1",
            AbcVariant::Abc2 => "abc2",
            AbcVariant::Abc3 => "abc3",
        }
    }

    /// Tabulated symbol coefficients (α, β) of the variant.
    pub fn alpha_beta(self, k: f64, r: f64) -> (C64, C64) {
        let i = C64::new(0.0, 1.0);
        let ik = i * k;
        match self {
            AbcVariant::Abc0 => (ik, C64::new(0.0, 0.0)),
            AbcVariant::Abc1 => (ik + 0.5 / r, C64::new(0.0, 0.0)),
            AbcVariant::Abc2 => (
                ik + 0.5 / r + i / (8.0 * k * r * r),
                i / (2.0 * k * r * r),
            ),
            AbcVariant::Abc3 => (
                ik + 0.5 / r + i / (8.0 * k * r * r) - 1.0 / (8.0 * k * k * r * r * r),
                i / (2.0 * k * r * r) - 1.0 / (2.0 * k * k * r * r * r),
            ),
        }
    }
}

/// Per-mode ABC symbol `γ = ᾱ - β̄ n²/R²` (outgoing-branch convention).
pub fn abc_gamma(variant: AbcVariant, k: f64, r: f64, n: i32) -> C64 {
    let (alpha, beta) = variant.alpha_beta(k, r);
    alpha.conj() - beta.conj() * (n as f64 * n as f64) / (r * r)
}

/// NtD-like modal coefficient of the ABC variant: `-1/γ`, so that
/// `u_n = coeff · (∂u/∂r)_n` realizes `γ u + ∂u/∂r = 0`.
pub fn abc_coefficient(variant: AbcVariant, k: f64, r: f64, n: i32) -> Result<C64> {
    let g = abc_gamma(variant, k, r, n);
    if g.norm() == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "ABC symbol vanishes at mode n = {n}"
        )));
    }
    Ok(-C64::new(1.0, 0.0) / g)
}

/// Exact NtD coefficient `γ_n = (1/k)·H_n⁽¹⁾(kR)/H_n⁽¹⁾′(kR)`.
///
/// Evaluated in scaled real arithmetic:
/// `Re γ_n = (J J' + Y Y') / (k (J'² + Y'²))` and
/// `Im γ_n = -2/(πk²R (J'² + Y'²))` (Wronskian form), with the large
/// factor `s = max(|J'|, |Y'|)` divided out so high orders neither overflow
/// nor lose the strict sign of the imaginary part.
pub fn ntd_coefficient(k: f64, r: f64, n: i32) -> Result<C64> {
    if !(k > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ntd_coefficient needs k, R > 0, got k = {k}, R = {r}"
        )));
    }
    let x = k * r;
    let m = n.unsigned_abs() as usize;
    // Parity signs cancel in the ratio, so |n| suffices.
    let arr = cyl_arrays(m, x)?;
    let (j, jp, y, yp) = (arr.j[m], arr.jp[m], arr.y[m], arr.yp[m]);
    let s = jp.abs().max(yp.abs());
    let (js, jps, ys, yps) = (j / s, jp / s, y / s, yp / s);
    let q = jps * jps + yps * yps;
    let re = (js * jps + ys * yps) / (k * q);
    let t = 2.0 / (PI * k * k * r);
    let mut im = -(t / s) / (s * q);
    if im == 0.0 {
        // The exact value is strictly negative but below the f64 range.
        im = -f64::MIN_POSITIVE;
    }
    Ok(C64::new(re, im))
}

/// Fourier coefficients `f_n = (1/2π)∫ f(θ) e^{-inθ} dθ` for `|n| ≤ M` by
/// the trapezoidal rule (spectrally accurate for smooth periodic traces).
pub fn modal_trace(f: impl Fn(f64) -> C64, m_modes: usize, n_quad: usize) -> Vec<C64> {
    if n_quad < 4 * m_modes + 4 {
        log::warn!(
            "modal_trace under-resolved: n_quad = {n_quad} < {} for M = {m_modes}",
            4 * m_modes + 4
        );
    }
    let dim = 2 * m_modes + 1;
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for q in 0..n_quad {
        let theta = TAU * q as f64 / n_quad as f64;
        let fv = f(theta) / n_quad as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let n = i as f64 - m_modes as f64;
            *o += fv * C64::new(0.0, -n * theta).exp();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModalKind {
    ExactNtd,
    Abc(AbcVariant),
}

/// Diagonal boundary operator with modes `n ∈ [-M, M]` on a circle.
#[derive(Debug, Clone)]
pub struct ModalBoundaryOperator {
    pub radius: f64,
    pub m_modes: usize,
    pub kind: ModalKind,
    /// NtD-like coefficient per mode, index `i ↔ n = i - M`.
    pub coeff: Vec<C64>,
}

impl ModalBoundaryOperator {
    pub fn new_exact_ntd(k: f64, r: f64, m_modes: usize) -> Result<Self> {
        let coeff = (-(m_modes as i32)..=m_modes as i32)
            .map(|n| ntd_coefficient(k, r, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModalBoundaryOperator {
            radius: r,
            m_modes,
            kind: ModalKind::ExactNtd,
            coeff,
        })
    }

    pub fn new_abc(variant: AbcVariant, k: f64, r: f64, m_modes: usize) -> Result<Self> {
        let coeff = (-(m_modes as i32)..=m_modes as i32)
            .map(|n| abc_coefficient(variant, k, r, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModalBoundaryOperator {
            radius: r,
            m_modes,
            kind: ModalKind::Abc(variant),
            coeff,
        })
    }

    /// Per-mode application to a Fourier mode vector (index `i ↔ n = i-M`).
    pub fn apply_modal(&self, modes: &[C64]) -> Vec<C64> {
        assert_eq!(modes.len(), self.coeff.len(), "mode vector size mismatch");
        modes.iter().zip(&self.coeff).map(|(f, c)| f * c).collect()
    }

    /// L²-adjoint application: per-mode multiplication by the conjugates.
    pub fn apply_modal_adjoint(&self, modes: &[C64]) -> Vec<C64> {
        assert_eq!(modes.len(), self.coeff.len(), "mode vector size mismatch");
        modes
            .iter()
            .zip(&self.coeff)
            .map(|(f, c)| f * c.conj())
            .collect()
    }
}

impl BoundaryOp for ModalBoundaryOperator {
    fn dim(&self) -> usize {
        2 * self.m_modes + 1
    }

    fn radius(&self) -> f64 {
        self.radius
    }

    fn basis_at(&self, theta: f64, out: &mut [C64]) {
        let m = self.m_modes as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let n = i as f64 - m;
            *o = C64::new(0.0, -n * theta).exp();
        }
    }

    fn apply(&self, m: &[C64]) -> Vec<C64> {
        // Moments against e^{inθ} on the circle: m_n = 2πR f_n.
        let scale = 1.0 / (TAU * self.radius);
        m.iter()
            .zip(&self.coeff)
            .map(|(mi, c)| mi * c * scale)
            .collect()
    }

    fn apply_adjoint(&self, m: &[C64]) -> Vec<C64> {
        let scale = 1.0 / (TAU * self.radius);
        m.iter()
            .zip(&self.coeff)
            .map(|(mi, c)| mi * c.conj() * scale)
            .collect()
    }

    fn apply_mass(&self, x: &[C64]) -> Vec<C64> {
        x.iter().map(|v| v * TAU * self.radius).collect()
    }

    fn eval(&self, x: &[C64], theta: f64) -> C64 {
        let m = self.m_modes as f64;
        x.iter()
            .enumerate()
            .map(|(i, v)| v * C64::new(0.0, (i as f64 - m) * theta).exp())
            .sum()
    }
}
