//! Structured triangular mesh of the annulus `a ≤ r ≤ R` with a classified
//! edge skeleton and exact circular-arc geometry on both boundaries.
//!
//! The grid has `n_theta × n_r` polar cells, each split along the diagonal
//! from its inner-left to its outer-right corner into two counterclockwise
//! triangles. Boundary cells are curvilinear: the chord on `r = a` or
//! `r = R` is replaced by the true circular arc for all edge integrals.

use crate::quadrature::gauss_legendre_on;
use crate::{Error, Point2, Result};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    Interior,
    Gamma,
    SigmaR,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeGeometry {
    StraightSegment,
    /// Arc of the circle `|x| = radius` from `theta0` to `theta1`.
    CircularArc { radius: f64, theta0: f64, theta1: f64 },
}

pub const NO_ELEM: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint vertex indices.
    pub v: [usize; 2],
    pub class: EdgeClass,
    /// Adjacent triangles; `elems[1] == NO_ELEM` on boundary edges.
    /// For interior edges the stored normal is the outward normal of
    /// `elems[0]` (the `ν⁻` convention).
    pub elems: [usize; 2],
    /// Unit normal for straight edges (from `elems[0]` toward `elems[1]`);
    /// boundary arcs use the radial normal `+r̂(θ)` instead.
    pub normal: Point2,
    pub geometry: EdgeGeometry,
    /// Segment length, or arc length `radius·Δθ` for arcs.
    pub length: f64,
}

/// One quadrature point on an edge: location, weight (includes the
/// arc-length Jacobian), the edge's designated unit normal at that point,
/// and the polar angle (used for boundary trace expansions).
#[derive(Debug, Clone, Copy)]
pub struct EdgeQuadPoint {
    pub x: Point2,
    pub w: f64,
    pub normal: Point2,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct AnnularMesh {
    pub a: f64,
    pub r_outer: f64,
    pub n_theta: usize,
    pub n_r: usize,
    pub vertices: Vec<Point2>,
    /// Vertex-index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Mesh width: maximum triangle diameter (brute-force scan).
    pub h: f64,
}

/// Build the structured polar mesh.
pub fn build_annular_mesh(a: f64, r_outer: f64, n_theta: usize, n_r: usize) -> Result<AnnularMesh> {
    if !(r_outer > a && a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need R > a > 0, got a = {a}, R = {r_outer}"
        )));
    }
    if n_theta < 8 || n_r < 2 {
        return Err(Error::InvalidParameter(format!(
            "need n_theta ≥ 8 and n_r ≥ 2, got {n_theta} × {n_r}"
        )));
    }
    let dtheta = TAU / n_theta as f64;
    let dr = (r_outer - a) / n_r as f64;
    let vid = |j: usize, i: usize| j * n_theta + (i % n_theta);

    let mut vertices = Vec::with_capacity((n_r + 1) * n_theta);
    for j in 0..=n_r {
        let r = a + j as f64 * dr;
        for i in 0..n_theta {
            let t = i as f64 * dtheta;
            vertices.push(Point2::new(r * t.cos(), r * t.sin()));
        }
    }

    // Cell (i, j): corners A inner-left, B inner-right, C outer-right,
    // D outer-left; triangles t1 = (A, C, B) and t2 = (A, D, C).
    let mut triangles = Vec::with_capacity(2 * n_theta * n_r);
    for j in 0..n_r {
        for i in 0..n_theta {
            let (va, vb, vc, vd) = (vid(j, i), vid(j, i + 1), vid(j + 1, i + 1), vid(j + 1, i));
            triangles.push([va, vc, vb]);
            triangles.push([va, vd, vc]);
        }
    }
    let t1 = |i: usize, j: usize| 2 * (j * n_theta + i % n_theta);
    let t2 = |i: usize, j: usize| t1(i, j) + 1;

    let centroid = |t: usize| -> Point2 {
        let [p, q, r] = triangles[t];
        vertices[p]
            .add(vertices[q])
            .add(vertices[r])
            .scale(1.0 / 3.0)
    };

    let mut edges = Vec::new();
    let mut push_interior = |v0: usize, v1: usize, e0: usize, e1: usize| {
        let d = vertices[v1].sub(vertices[v0]);
        let len = d.norm();
        let mut n = Point2::new(d.y / len, -d.x / len);
        if n.dot(centroid(e1).sub(centroid(e0))) < 0.0 {
            n = n.scale(-1.0);
        }
        edges.push(Edge {
            v: [v0, v1],
            class: EdgeClass::Interior,
            elems: [e0, e1],
            normal: n,
            geometry: EdgeGeometry::StraightSegment,
            length: len,
        });
    };

    for j in 0..n_r {
        for i in 0..n_theta {
            // Diagonal A–C between the cell's own triangles.
            push_interior(vid(j, i), vid(j + 1, i + 1), t1(i, j), t2(i, j));
            // Radial edge at θ_i between the previous cell's t1 and this t2.
            push_interior(
                vid(j, i),
                vid(j + 1, i),
                t1((i + n_theta - 1) % n_theta, j),
                t2(i, j),
            );
        }
    }
    // Interior circumferential chords at the internal rings.
    for j in 1..n_r {
        for i in 0..n_theta {
            push_interior(vid(j, i), vid(j, i + 1), t2(i, j - 1), t1(i, j));
        }
    }
    // Boundary arcs.
    for i in 0..n_theta {
        let (th0, th1) = (i as f64 * dtheta, (i + 1) as f64 * dtheta);
        edges.push(Edge {
            v: [vid(0, i), vid(0, i + 1)],
            class: EdgeClass::Gamma,
            elems: [t1(i, 0), NO_ELEM],
            normal: Point2::new(0.0, 0.0),
            geometry: EdgeGeometry::CircularArc {
                radius: a,
                theta0: th0,
                theta1: th1,
            },
            length: a * dtheta,
        });
        edges.push(Edge {
            v: [vid(n_r, i), vid(n_r, i + 1)],
            class: EdgeClass::SigmaR,
            elems: [t2(i, n_r - 1), NO_ELEM],
            normal: Point2::new(0.0, 0.0),
            geometry: EdgeGeometry::CircularArc {
                radius: r_outer,
                theta0: th0,
                theta1: th1,
            },
            length: r_outer * dtheta,
        });
    }

    let mut h = 0.0f64;
    for t in &triangles {
        for (p, q) in [(0, 1), (1, 2), (2, 0)] {
            h = h.max(vertices[t[p]].sub(vertices[t[q]]).norm());
        }
    }

    Ok(AnnularMesh {
        a,
        r_outer,
        n_theta,
        n_r,
        vertices,
        triangles,
        edges,
        h,
    })
}

impl AnnularMesh {
    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn centroid(&self, t: usize) -> Point2 {
        let [p, q, r] = self.triangles[t];
        self.vertices[p]
            .add(self.vertices[q])
            .add(self.vertices[r])
            .scale(1.0 / 3.0)
    }

    /// Index of the `t1` triangle (owns the Γ arc when `j = 0`).
    pub fn tri1(&self, i: usize, j: usize) -> usize {
        2 * (j * self.n_theta + i % self.n_theta)
    }

    /// Index of the `t2` triangle (owns the Σ_R arc when `j = n_r - 1`).
    pub fn tri2(&self, i: usize, j: usize) -> usize {
        self.tri1(i, j) + 1
    }

    /// Gauss–Legendre points on an edge; arcs are parameterized by angle
    /// with the arc-length Jacobian folded into the weights.
    pub fn edge_quadrature(&self, edge: &Edge, order: usize) -> Vec<EdgeQuadPoint> {
        assert!(order >= 1);
        match edge.geometry {
            EdgeGeometry::StraightSegment => {
                let p0 = self.vertices[edge.v[0]];
                let p1 = self.vertices[edge.v[1]];
                let (ts, ws) = gauss_legendre_on(0.0, 1.0, order);
                ts.iter()
                    .zip(&ws)
                    .map(|(t, w)| {
                        let x = p0.add(p1.sub(p0).scale(*t));
                        EdgeQuadPoint {
                            x,
                            w: w * edge.length,
                            normal: edge.normal,
                            theta: x.angle(),
                        }
                    })
                    .collect()
            }
            EdgeGeometry::CircularArc {
                radius,
                theta0,
                theta1,
            } => {
                let (ts, ws) = gauss_legendre_on(theta0, theta1, order);
                ts.iter()
                    .zip(&ws)
                    .map(|(t, w)| {
                        let n = Point2::new(t.cos(), t.sin());
                        EdgeQuadPoint {
                            x: n.scale(radius),
                            w: w * radius,
                            normal: n,
                            theta: *t,
                        }
                    })
                    .collect()
            }
        }
    }

    /// Default quadrature point count for plane-wave products on an edge.
    pub fn default_edge_order(k: f64, edge_length: f64) -> usize {
        10 + (k * edge_length).ceil() as usize
    }

    /// O(1) point location from the polar indices of the structured grid.
    pub fn locate_point(&self, x: Point2) -> Result<usize> {
        let r = x.norm();
        let slack = 1e-10 * self.r_outer;
        if r < self.a - slack || r > self.r_outer + slack {
            return Err(Error::PointOutsideDomain { x: x.x, y: x.y });
        }
        let dtheta = TAU / self.n_theta as f64;
        let dr = (self.r_outer - self.a) / self.n_r as f64;
        let theta = x.angle().rem_euclid(TAU);
        let i = ((theta / dtheta) as usize).min(self.n_theta - 1);
        let j = (((r - self.a) / dr) as usize).min(self.n_r - 1);
        let va = self.vertices[j * self.n_theta + i];
        let vc = self.vertices[(j + 1) * self.n_theta + (i + 1) % self.n_theta];
        // The diagonal of cell (i, j) runs A→C; the first triangle holds the
        // inner-ring vertex B on the positive-cross side of it.
        let t = if vc.sub(va).cross(x.sub(va)) > 0.0 {
            self.tri1(i, j)
        } else {
            self.tri2(i, j)
        };
        Ok(t)
    }

    /// Plain-text dump (versioned header; vertices, triangles, edge classes).
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "# annular-mesh v1").unwrap();
        writeln!(
            s,
            "# a={} R={} n_theta={} n_r={} h={}",
            self.a, self.r_outer, self.n_theta, self.n_r, self.h
        )
        .unwrap();
        writeln!(s, "[vertices {}]", self.vertices.len()).unwrap();
        for v in &self.vertices {
            writeln!(s, "{:.17e} {:.17e}", v.x, v.y).unwrap();
        }
        writeln!(s, "[triangles {}]", self.triangles.len()).unwrap();
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(s, "[edges {}]", self.edges.len()).unwrap();
        for e in &self.edges {
            let class = match e.class {
                EdgeClass::Interior => "interior",
                EdgeClass::Gamma => "gamma",
                EdgeClass::SigmaR => "sigma_r",
            };
            writeln!(s, "{} {} {}", e.v[0], e.v[1], class).unwrap();
        }
        s
    }
}
