//! Boundary solution operators on the two circles: the modal
//! Neumann-to-Dirichlet map (exact or ABC-approximated) on the outer circle
//! and the discrete generalized-impedance operator on the inner circle.
//!
//! Both operators act on traces through a common moment interface so the
//! boundary flux assembly is written once. A trace `f` on the circle is
//! represented by its moment vector `m_i = ∫ f conj(φ_i) ds` against the
//! operator's trace basis `φ_i` (Fourier modes `e^{inθ}` or boundary FEM
//! hat functions); operator applications return coefficient vectors in the
//! same basis.

pub mod gibc;
pub mod modal;

pub use gibc::{gibc_build_fem, gibc_build_trig, GibcOperator, SurfaceCoefficient};
pub use modal::{abc_coefficient, abc_gamma, modal_trace, ntd_coefficient, AbcVariant, ModalBoundaryOperator};

use crate::C64;

/// Discrete solution operator on a circle, acting through trace moments.
pub trait BoundaryOp {
    /// Dimension of the trace basis.
    fn dim(&self) -> usize;

    /// Circle radius.
    fn radius(&self) -> f64;

    /// Conjugated trace basis values at angle `theta`: moments accumulate as
    /// `m_i += w · f(θ) · out[i]` over quadrature points (`w` includes the
    /// arc-length Jacobian).
    fn basis_at(&self, theta: f64, out: &mut [C64]);

    /// Coefficients of the operator applied to the trace with moments `m`.
    fn apply(&self, m: &[C64]) -> Vec<C64>;

    /// Coefficients of the L²-adjoint applied to the trace with moments `m`.
    fn apply_adjoint(&self, m: &[C64]) -> Vec<C64>;

    /// Mass application: `pair(apply_mass(x), y) = ∫ X conj(Y) ds` for
    /// fields `X`, `Y` with coefficients `x`, `y`.
    fn apply_mass(&self, x: &[C64]) -> Vec<C64>;

    /// Field value of the coefficient vector `x` at angle `theta`.
    fn eval(&self, x: &[C64], theta: f64) -> C64;

    /// Angles at which the trace basis is only piecewise smooth (FEM nodes);
    /// quadrature on boundary arcs splits at these.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `∫ X conj(Y) ds` from coefficient vectors.
    fn mass_pair(&self, x: &[C64], y: &[C64]) -> C64 {
        pair(&self.apply_mass(x), y)
    }
}

/// `Σ x_i conj(m_i)`. When `m` is the moment vector of a trace `f` and `x`
/// a coefficient vector, this equals `∫ X conj(f) ds`.
pub fn pair(x: &[C64], m: &[C64]) -> C64 {
    x.iter().zip(m).map(|(a, b)| a * b.conj()).sum()
}
