//! Per-element vector plane-wave Trefftz basis for the displacement
//! equation.
//!
//! Each basis function is the gradient of a scalar plane wave anchored at
//! the element centroid, `w_j(x) = ik d_j exp(ik d_j·(x - x_K))`, with
//! `div w_j(x) = -k² exp(ik d_j·(x - x_K))`. These satisfy the displacement
//! Helmholtz equation `∇(∇·w) + k²w = 0` exactly.

use crate::mesh::AnnularMesh;
use crate::{C64, CVec2, Error, Point2, Result};
use std::f64::consts::TAU;

#[derive(Debug, Clone)]
pub struct PlaneWaveBasis {
    pub k: f64,
    /// Directions per element (`p ≥ 4`).
    pub p: usize,
    /// Unit direction vectors `d_j = (cos 2πj/p, sin 2πj/p)`.
    pub directions: Vec<Point2>,
    /// Per-element anchor points `x_K` (element centroids).
    pub anchors: Vec<Point2>,
}

impl PlaneWaveBasis {
    pub fn new(mesh: &AnnularMesh, k: f64, p: usize) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("k = {k} must be positive")));
        }
        if p < 4 {
            return Err(Error::InvalidParameter(format!("p = {p} must be at least 4")));
        }
        let directions = (0..p)
            .map(|j| {
                let t = TAU * j as f64 / p as f64;
                Point2::new(t.cos(), t.sin())
            })
            .collect();
        let anchors = (0..mesh.n_elements()).map(|t| mesh.centroid(t)).collect();
        Ok(PlaneWaveBasis {
            k,
            p,
            directions,
            anchors,
        })
    }

    /// Value and divergence of basis function `j` of element `elem` at `x`.
    pub fn eval_basis(&self, elem: usize, j: usize, x: Point2) -> (CVec2, C64) {
        assert!(j < self.p, "basis index {j} out of range (p = {})", self.p);
        let d = self.directions[j];
        let phase = C64::new(0.0, self.k * d.dot(x.sub(self.anchors[elem]))).exp();
        let ik = C64::new(0.0, self.k);
        let w = CVec2::new(ik * d.x * phase, ik * d.y * phase);
        let divw = -self.k * self.k * phase;
        (w, divw)
    }

    /// Pressure recovery from a divergence value: `u = -div v / k²`.
    pub fn recover_scalar_field(divw_value: C64, k: f64) -> C64 {
        -divw_value / (k * k)
    }
}
