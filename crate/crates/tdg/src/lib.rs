//! Trefftz discontinuous Galerkin (TDG/UWVF) solver for the displacement
//! form of the Helmholtz equation, `∇(∇·v) + k²v = 0`, on an annulus.
//!
//! The scatterer boundary (inner circle `Γ`) carries either a Dirichlet
//! condition or a generalized impedance boundary condition realized by a
//! discrete surface solution operator; the truncation boundary (outer circle
//! `Σ_R`) carries a modal Neumann-to-Dirichlet map or one of the ABC0–ABC3
//! absorbing conditions. The pressure field is recovered from the
//! displacement unknown as `u = -∇·v / k²`.
//!
//! Modules follow the pipeline: [`specfun`] (cylinder functions) →
//! [`mesh`] (structured annular triangulation) → [`basis`] (vector plane
//! waves) → [`boundary`] (NtD / ABC / GIBC operators) → [`assembly`]
//! (skeleton fluxes and the linear system) → [`solve`] (factorization,
//! field evaluation, norms, exact series references) → [`driver`]
//! (configuration-driven runs and CSV output).

pub mod assembly;
pub mod basis;
pub mod boundary;
pub mod check;
pub mod config;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod series;
pub mod solve;
pub mod specfun;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, `self × other`.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point2) -> Point2 {
        Point2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

/// A complex 2-vector (value of a displacement field at a point).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVec2 {
    pub x: C64,
    pub y: C64,
}

impl CVec2 {
    pub const ZERO: CVec2 = CVec2 {
        x: C64::new(0.0, 0.0),
        y: C64::new(0.0, 0.0),
    };

    pub fn new(x: C64, y: C64) -> Self {
        CVec2 { x, y }
    }

    /// Dot with a real vector (no conjugation).
    pub fn dot_real(self, v: Point2) -> C64 {
        self.x * v.x + self.y * v.y
    }

    pub fn add(self, o: CVec2) -> CVec2 {
        CVec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: CVec2) -> CVec2 {
        CVec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: C64) -> CVec2 {
        CVec2::new(self.x * s, self.y * s)
    }

    pub fn norm(self) -> f64 {
        (self.x.norm_sqr() + self.y.norm_sqr()).sqrt()
    }
}
