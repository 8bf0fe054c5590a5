//! Assembly of the discrete TDG system: interior skeleton fluxes, the
//! modal-NtD/ABC terms on the outer circle, the GIBC or Dirichlet terms on
//! the inner circle, and the right-hand side.
//!
//! Conventions. The matrix is row-for-test, column-for-trial with
//! conjugation on the test side throughout: `A[r][c] = a_h(φ_c, φ_r)`.
//! The normal `ν` in every boundary integral is the radial unit vector
//! (outward through `Σ_R`, pointing from the scatterer into the annulus on
//! `Γ`); interior edges use the stored normal pointing from the first to
//! the second adjacent element. Assembled boundary forms (`N = N_R` the
//! outer operator, `G = G_Γ^H` the inner one, `u` trial, `w` test):
//!
//! `Σ_R`: `-∫(k²N(u·ν)w̄·ν + (u·ν)div w̄) - (δ/ik)∫(div u + k²N(u·ν))(div w̄ + k²N(w̄·ν))`
//! `Γ` (GIBC): `+∫(k²G(u·ν)w̄·ν + (u·ν)div w̄) - (τ/ik)∫(div u + k²G(u·ν))(div w̄ + k²G(w̄·ν))`
//! with `f(w) = ∫k²G(g)w̄·ν - (τk²/ik)∫G(g)(div w̄ + k²G(w̄·ν))`.
//! `Γ` (Dirichlet, flux `d̂iv v = -k²u_D`, `û = v - (τ_D/ik)(div v + k²u_D)ν`):
//! `+∫(u·ν)div w̄ - (τ_D/ik)∫div u div w̄` with
//! `f(w) = -∫k²u_D w̄·ν + (τ_Dk²/ik)∫u_D div w̄`.
//!
//! Boundary operators act on whole-circle traces, so each boundary element
//! couples to every other element on the same circle: the assembly
//! precomputes, per boundary degree of freedom, the moment vectors of its
//! `w·ν` and `div w` traces and forms the coupling blocks by exact algebra
//! in the operator's trace space.

use crate::basis::PlaneWaveBasis;
use crate::boundary::{pair, BoundaryOp, GibcOperator, ModalBoundaryOperator};
use crate::linalg::Coo;
use crate::mesh::{AnnularMesh, EdgeClass, EdgeGeometry};
use crate::quadrature::gauss_legendre_on;
use crate::series::ExactSeries;
use crate::{C64, CVec2, Error, Point2, Result};
use std::f64::consts::TAU;

/// Strictly positive interior penalties `α₁, α₂`; nonnegative boundary
/// penalties `δ` (on `Σ_R`), `τ` (GIBC on `Γ`), `τ_D` (Dirichlet on `Γ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta: f64,
    pub tau: f64,
    pub tau_d: f64,
}

impl Default for FluxParams {
    fn default() -> Self {
        FluxParams {
            alpha1: 0.5,
            alpha2: 0.5,
            delta: 0.5,
            tau: 0.5,
            tau_d: 0.5,
        }
    }
}

impl FluxParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 > 0.0 && self.alpha2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interior penalties must be strictly positive, got α₁ = {}, α₂ = {}",
                self.alpha1, self.alpha2
            )));
        }
        if !(self.delta >= 0.0 && self.tau >= 0.0 && self.tau_d >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "boundary penalties must be nonnegative, got δ = {}, τ = {}, τ_D = {}",
                self.delta, self.tau, self.tau_d
            )));
        }
        Ok(())
    }
}

/// Boundary data on `Γ` for the scattering of the incident plane wave
/// `e^{ik d·x}` with direction `d = (cos angle, sin angle)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaData {
    Zero,
    PlaneWave { angle: f64 },
}

impl GammaData {
    /// Dirichlet datum for the scattered field: `u_D = -e^{ik d·x}`.
    pub fn dirichlet_datum(&self, k: f64, x: Point2) -> C64 {
        match *self {
            GammaData::Zero => C64::new(0.0, 0.0),
            GammaData::PlaneWave { angle } => {
                let d = Point2::new(angle.cos(), angle.sin());
                -C64::new(0.0, k * d.dot(x)).exp()
            }
        }
    }

    /// GIBC source trace: the normal derivative of the incident wave,
    /// `g = ∂_ν e^{ik d·x} = ik(d·ν) e^{ik d·x}`.
    pub fn gibc_source(&self, k: f64, x: Point2, nu: Point2) -> C64 {
        match *self {
            GammaData::Zero => C64::new(0.0, 0.0),
            GammaData::PlaneWave { angle } => {
                let d = Point2::new(angle.cos(), angle.sin());
                C64::new(0.0, k * d.dot(nu)) * C64::new(0.0, k * d.dot(x)).exp()
            }
        }
    }
}

/// Boundary condition on the inner circle.
#[derive(Debug)]
pub enum GammaBc {
    Dirichlet { data: GammaData },
    Gibc { op: GibcOperator, data: GammaData },
}

/// Assembled discrete system together with the independent form
/// evaluators used by the invariant tests and the DG norms.
#[derive(Debug)]
pub struct DGSystem {
    pub mesh: AnnularMesh,
    pub basis: PlaneWaveBasis,
    pub flux: FluxParams,
    pub sigma_op: ModalBoundaryOperator,
    pub gamma_bc: GammaBc,
    pub coo: Coo,
    pub rhs: Vec<C64>,
}

/// A piecewise-smooth displacement field evaluated element-locally:
/// returns `(v, div v)` at `x`, where `elem` selects the element branch
/// for discontinuous fields.
pub trait PwField {
    fn eval(&self, elem: usize, x: Point2) -> (CVec2, C64);
}

/// DG field from a global coefficient vector.
pub struct CoeffField<'a> {
    pub basis: &'a PlaneWaveBasis,
    pub coeffs: &'a [C64],
}

impl PwField for CoeffField<'_> {
    fn eval(&self, elem: usize, x: Point2) -> (CVec2, C64) {
        let p = self.basis.p;
        let mut v = CVec2::ZERO;
        let mut dv = C64::new(0.0, 0.0);
        for j in 0..p {
            let c = self.coeffs[elem * p + j];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let (w, dw) = self.basis.eval_basis(elem, j, x);
            v = v.add(w.scale(c));
            dv += c * dw;
        }
        (v, dv)
    }
}

/// Smooth field from an exact series (element-independent, `div v = -k²u`).
pub struct SeriesField<'a>(pub &'a ExactSeries);

impl PwField for SeriesField<'_> {
    fn eval(&self, _elem: usize, x: Point2) -> (CVec2, C64) {
        let (u, v) = self.0.eval(x).expect("series evaluation inside the annulus");
        (v, -self.0.k * self.0.k * u)
    }
}

/// Difference of two fields (e.g. `v - Πv` for the approximation bounds).
pub struct DiffField<'a>(pub &'a dyn PwField, pub &'a dyn PwField);

impl PwField for DiffField<'_> {
    fn eval(&self, elem: usize, x: Point2) -> (CVec2, C64) {
        let (v1, d1) = self.0.eval(elem, x);
        let (v2, d2) = self.1.eval(elem, x);
        (v1.sub(v2), d1 - d2)
    }
}

/// Quadrature order for the whole-circle moment integrals on a boundary
/// arc: resolves both the plane-wave oscillation and the operator basis.
fn arc_moment_order(k: f64, rho: f64, dtheta: f64, op: &dyn BoundaryOp) -> usize {
    let m_eff = if op.breakpoints().is_empty() {
        // Modal basis: frequencies up to (dim-1)/2 over the full arc.
        (op.dim() as f64 - 1.0) / 2.0
    } else {
        // FEM basis after breakpoint splitting: low-degree polynomials.
        4.0
    };
    10 + ((k * rho + m_eff) * dtheta).ceil() as usize
}

/// Quadrature order for products of two element traces on an arc.
fn arc_local_order(k: f64, len: f64) -> usize {
    10 + (2.0 * k * len).ceil() as usize
}

/// Ordered angular interval of a circular-arc edge.
fn arc_interval(geometry: &EdgeGeometry) -> (f64, f64, f64) {
    match *geometry {
        EdgeGeometry::CircularArc {
            radius,
            theta0,
            theta1,
        } => {
            let (lo, hi) = if theta1 >= theta0 {
                (theta0, theta1)
            } else {
                (theta1, theta0)
            };
            (radius, lo, hi)
        }
        EdgeGeometry::StraightSegment => unreachable!("boundary edges are circular arcs"),
    }
}

/// Split `(lo, hi)` at the operator's breakpoint angles (mod 2π).
fn arc_subintervals(lo: f64, hi: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![lo, hi];
    for &b in breaks {
        // Shift the breakpoint into the interval's periodic window.
        let shifted = lo + (b - lo).rem_euclid(TAU);
        if shifted > lo + 1e-12 && shifted < hi - 1e-12 {
            cuts.push(shifted);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Gauss points `(θ, ds-weight)` on an arc subinterval.
fn arc_gauss(radius: f64, lo: f64, hi: f64, order: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre_on(lo, hi, order);
    xs.into_iter().zip(ws.into_iter().map(|w| w * radius)).collect()
}

/// Contribution of one interior edge: the average terms of `a_{0,h}` and
/// the `α₁`, `α₂` penalty terms of `b_h`, written into the four
/// element-pair blocks.
pub fn assemble_interior_edge(
    mesh: &AnnularMesh,
    basis: &PlaneWaveBasis,
    edge_index: usize,
    flux: &FluxParams,
    coo: &mut Coo,
) {
    let e = &mesh.edges[edge_index];
    assert_eq!(e.class, EdgeClass::Interior);
    let k = basis.k;
    let p = basis.p;
    let ik = C64::new(0.0, k);
    let elems = e.elems;
    let q = mesh.edge_quadrature(e, AnnularMesh::default_edge_order(k, e.length));
    let mut block = vec![C64::new(0.0, 0.0); 4 * p * p];
    let mut wnu = vec![C64::new(0.0, 0.0); 2 * p];
    let mut divw = vec![C64::new(0.0, 0.0); 2 * p];
    for qp in &q {
        for side in 0..2 {
            for j in 0..p {
                let (w, dw) = basis.eval_basis(elems[side], j, qp.x);
                wnu[side * p + j] = w.dot_real(qp.normal);
                divw[side * p + j] = dw;
            }
        }
        for side_w in 0..2 {
            let sw = if side_w == 0 { 1.0 } else { -1.0 };
            for side_u in 0..2 {
                let su = if side_u == 0 { 1.0 } else { -1.0 };
                let ss = su * sw;
                for jw in 0..p {
                    let twn = wnu[side_w * p + jw].conj();
                    let tdw = divw[side_w * p + jw].conj();
                    for ju in 0..p {
                        let un = wnu[side_u * p + ju];
                        let du = divw[side_u * p + ju];
                        // {div u}⟦w̄⟧ - {u}⟦div w̄⟧ + ikα₁⟦u⟧⟦w̄⟧ - (α₂/ik)⟦div u⟧⟦div w̄⟧
                        let val = sw * 0.5 * (du * twn - un * tdw)
                            + ik * flux.alpha1 * ss * un * twn
                            - flux.alpha2 / ik * ss * du * tdw;
                        block[(side_w * p + jw) * 2 * p + side_u * p + ju] += qp.w * val;
                    }
                }
            }
        }
    }
    for side_w in 0..2 {
        for jw in 0..p {
            let r = elems[side_w] * p + jw;
            for side_u in 0..2 {
                for ju in 0..p {
                    let c = elems[side_u] * p + ju;
                    let v = block[(side_w * p + jw) * 2 * p + side_u * p + ju];
                    if v.norm_sqr() != 0.0 {
                        coo.entries.push((r as u32, c as u32, v));
                    }
                }
            }
        }
    }
}

/// Per-dof boundary-ring traces: moment vectors of `w·ν` and `div w`
/// against the operator basis, with the operator applied once per dof.
struct RingTraces {
    /// Global dof indices of the ring.
    dofs: Vec<usize>,
    mnu: Vec<Vec<C64>>,
    md: Vec<Vec<C64>>,
    /// `op.apply(mnu)` per dof.
    xv: Vec<Vec<C64>>,
    /// `op.apply_mass(xv)` per dof.
    mxv: Vec<Vec<C64>>,
}

fn ring_traces(
    mesh: &AnnularMesh,
    basis: &PlaneWaveBasis,
    class: EdgeClass,
    op: &dyn BoundaryOp,
    warn_label: Option<&str>,
) -> RingTraces {
    let k = basis.k;
    let p = basis.p;
    let dim = op.dim();
    let breaks = op.breakpoints();
    let mut dofs = Vec::new();
    let mut mnu = Vec::new();
    let mut md = Vec::new();
    let mut worst_fraction = 0.0f64;
    let mut warn_count = 0usize;
    let mut obasis = vec![C64::new(0.0, 0.0); dim];
    for e in &mesh.edges {
        if e.class != class {
            continue;
        }
        let elem = e.elems[0];
        let (radius, lo, hi) = arc_interval(&e.geometry);
        let mut m_nu = vec![vec![C64::new(0.0, 0.0); dim]; p];
        let mut m_d = vec![vec![C64::new(0.0, 0.0); dim]; p];
        let mut trace_l2 = vec![0.0f64; p];
        for (slo, shi) in arc_subintervals(lo, hi, &breaks) {
            let order = arc_moment_order(k, radius, shi - slo, op);
            for (theta, w) in arc_gauss(radius, slo, shi, order) {
                let x = Point2::new(radius * theta.cos(), radius * theta.sin());
                let nu = Point2::new(theta.cos(), theta.sin());
                op.basis_at(theta, &mut obasis);
                for j in 0..p {
                    let (wv, dw) = basis.eval_basis(elem, j, x);
                    let un = wv.dot_real(nu);
                    trace_l2[j] += w * un.norm_sqr();
                    for i in 0..dim {
                        m_nu[j][i] += w * un * obasis[i];
                        m_d[j][i] += w * dw * obasis[i];
                    }
                }
            }
        }
        if let Some(label) = warn_label {
            // Parseval check of the retained modal energy of each trace.
            let _ = label;
            for j in 0..p {
                let captured: f64 =
                    m_nu[j].iter().map(|v| v.norm_sqr()).sum::<f64>() / (TAU * radius);
                let total = trace_l2[j];
                if total > 0.0 && (total - captured) / total > 1e-8 {
                    warn_count += 1;
                    worst_fraction = worst_fraction.max((total - captured) / total);
                }
            }
        }
        for j in 0..p {
            dofs.push(elem * p + j);
            mnu.push(std::mem::take(&mut m_nu[j]));
            md.push(std::mem::take(&mut m_d[j]));
        }
    }
    if warn_count > 0 {
        log::warn!(
            "{}: {warn_count} boundary traces keep less than 1 - 1e-8 of their modal energy \
             (worst discarded fraction {worst_fraction:.2e}); increase the mode count M to tighten",
            warn_label.unwrap_or("boundary operator")
        );
    }
    let xv: Vec<Vec<C64>> = mnu.iter().map(|m| op.apply(m)).collect();
    let mxv: Vec<Vec<C64>> = xv.iter().map(|x| op.apply_mass(x)).collect();
    RingTraces {
        dofs,
        mnu,
        md,
        xv,
        mxv,
    }
}

/// Local arc products `∫(u·ν)div w̄` and `∫div u div w̄` for the element
/// owning a boundary arc, accumulated into the matrix with the given
/// prefactors (`A[w][u] += c_uv·∫(u·ν)div w̄ + c_dd·∫div u div w̄`).
fn assemble_arc_local(
    mesh: &AnnularMesh,
    basis: &PlaneWaveBasis,
    class: EdgeClass,
    c_uv: C64,
    c_dd: C64,
    coo: &mut Coo,
) {
    let k = basis.k;
    let p = basis.p;
    for e in &mesh.edges {
        if e.class != class {
            continue;
        }
        let elem = e.elems[0];
        let q = mesh.edge_quadrature(e, arc_local_order(k, e.length));
        let mut block = vec![C64::new(0.0, 0.0); p * p];
        for qp in &q {
            let mut vals = Vec::with_capacity(p);
            for j in 0..p {
                let (wv, dw) = basis.eval_basis(elem, j, qp.x);
                vals.push((wv.dot_real(qp.normal), dw));
            }
            for jw in 0..p {
                let tdw = vals[jw].1.conj();
                for ju in 0..p {
                    block[jw * p + ju] += qp.w * (c_uv * vals[ju].0 + c_dd * vals[ju].1) * tdw;
                }
            }
        }
        for jw in 0..p {
            for ju in 0..p {
                let v = block[jw * p + ju];
                if v.norm_sqr() != 0.0 {
                    coo.entries
                        .push(((elem * p + jw) as u32, (elem * p + ju) as u32, v));
                }
            }
        }
    }
}

/// Dense ring coupling through a boundary operator:
/// `A[r][c] += sign·k²·pair(xv_c, mnu_r) + c_pen·(k²·conj(pair(xv_r, md_c))
///            + k²·pair(xv_c, md_r) + k⁴·pair(mxv_c, xv_r))`.
fn assemble_ring_coupling(traces: &RingTraces, k: f64, sign: f64, c_pen: C64, coo: &mut Coo) {
    let k2 = k * k;
    let n = traces.dofs.len();
    for r in 0..n {
        for c in 0..n {
            let direct = sign * k2 * pair(&traces.xv[c], &traces.mnu[r]);
            let pen = k2 * pair(&traces.xv[r], &traces.md[c]).conj()
                + k2 * pair(&traces.xv[c], &traces.md[r])
                + k2 * k2 * pair(&traces.mxv[c], &traces.xv[r]);
            let v = direct + c_pen * pen;
            if v.norm_sqr() != 0.0 {
                coo.entries
                    .push((traces.dofs[r] as u32, traces.dofs[c] as u32, v));
            }
        }
    }
}

/// All `Σ_R` terms: the local `a_0` part, the `δ`-stabilized NtD coupling.
pub fn assemble_sigma_edges(
    mesh: &AnnularMesh,
    basis: &PlaneWaveBasis,
    op: &ModalBoundaryOperator,
    delta: f64,
    coo: &mut Coo,
) {
    let k = basis.k;
    let ik = C64::new(0.0, k);
    let c_pen = -C64::new(delta, 0.0) / ik;
    // -∫(u·ν)div w̄ - (δ/ik)∫div u div w̄
    assemble_arc_local(mesh, basis, EdgeClass::SigmaR, -C64::new(1.0, 0.0), c_pen, coo);
    let traces = ring_traces(mesh, basis, EdgeClass::SigmaR, op, Some("outer NtD operator"));
    assemble_ring_coupling(&traces, k, -1.0, c_pen, coo);
}

/// All `Γ` terms (matrix and right-hand side) for either boundary mode.
pub fn assemble_gamma_edges(
    mesh: &AnnularMesh,
    basis: &PlaneWaveBasis,
    gamma_bc: &GammaBc,
    flux: &FluxParams,
    coo: &mut Coo,
    rhs: &mut [C64],
) {
    let k = basis.k;
    let p = basis.p;
    let ik = C64::new(0.0, k);
    let k2 = k * k;
    match gamma_bc {
        GammaBc::Dirichlet { data } => {
            let c_pen = -C64::new(flux.tau_d, 0.0) / ik;
            // +∫(u·ν)div w̄ - (τ_D/ik)∫div u div w̄
            assemble_arc_local(mesh, basis, EdgeClass::Gamma, C64::new(1.0, 0.0), c_pen, coo);
            // f(w) = -k²∫u_D w̄·ν + (τ_D k²/ik)∫u_D div w̄
            for e in &mesh.edges {
                if e.class != EdgeClass::Gamma {
                    continue;
                }
                let elem = e.elems[0];
                let q = mesh.edge_quadrature(e, arc_local_order(k, e.length));
                for qp in &q {
                    let ud = data.dirichlet_datum(k, qp.x);
                    if ud.norm_sqr() == 0.0 {
                        continue;
                    }
                    for j in 0..p {
                        let (wv, dw) = basis.eval_basis(elem, j, qp.x);
                        rhs[elem * p + j] += qp.w
                            * (-k2 * ud * wv.dot_real(qp.normal).conj()
                                + flux.tau_d * k2 / ik * ud * dw.conj());
                    }
                }
            }
        }
        GammaBc::Gibc { op, data } => {
            let c_pen = -C64::new(flux.tau, 0.0) / ik;
            assemble_arc_local(mesh, basis, EdgeClass::Gamma, C64::new(1.0, 0.0), c_pen, coo);
            let traces = ring_traces(mesh, basis, EdgeClass::Gamma, op, None);
            assemble_ring_coupling(&traces, k, 1.0, c_pen, coo);
            // Moments of the source g over the whole circle, operator applied.
            let dim = op.dim();
            let mut mg = vec![C64::new(0.0, 0.0); dim];
            let mut obasis = vec![C64::new(0.0, 0.0); dim];
            let breaks = op.breakpoints();
            for e in &mesh.edges {
                if e.class != EdgeClass::Gamma {
                    continue;
                }
                let (radius, lo, hi) = arc_interval(&e.geometry);
                for (slo, shi) in arc_subintervals(lo, hi, &breaks) {
                    let order = arc_moment_order(k, radius, shi - slo, op.as_op());
                    for (theta, w) in arc_gauss(radius, slo, shi, order) {
                        let nu = Point2::new(theta.cos(), theta.sin());
                        let x = Point2::new(radius * theta.cos(), radius * theta.sin());
                        let g = data.gibc_source(k, x, nu);
                        if g.norm_sqr() == 0.0 {
                            continue;
                        }
                        op.basis_at(theta, &mut obasis);
                        for i in 0..dim {
                            mg[i] += w * g * obasis[i];
                        }
                    }
                }
            }
            let xg = op.apply(&mg);
            let mxg = op.apply_mass(&xg);
            // f(w) = k²·pair(xg, mnu_w) - (τk²/ik)(pair(xg, md_w) + k²·pair(mxg, xv_w))
            for (idx, &dof) in traces.dofs.iter().enumerate() {
                rhs[dof] += k2 * pair(&xg, &traces.mnu[idx])
                    + k2 * c_pen * (pair(&xg, &traces.md[idx]) + k2 * pair(&mxg, &traces.xv[idx]));
            }
        }
    }
}

impl GibcOperator {
    fn as_op(&self) -> &dyn BoundaryOp {
        self
    }
}

/// Assemble the complete system.
pub fn assemble_system(
    mesh: AnnularMesh,
    basis: PlaneWaveBasis,
    flux: FluxParams,
    sigma_op: ModalBoundaryOperator,
    gamma_bc: GammaBc,
) -> Result<DGSystem> {
    flux.validate()?;
    if (sigma_op.radius() - mesh.r_outer).abs() > 1e-12 * mesh.r_outer {
        return Err(Error::InvalidParameter(format!(
            "outer operator radius {} does not match the mesh radius {}",
            sigma_op.radius(),
            mesh.r_outer
        )));
    }
    if let GammaBc::Gibc { op, .. } = &gamma_bc {
        if (op.radius() - mesh.a).abs() > 1e-12 * mesh.a {
            return Err(Error::InvalidParameter(format!(
                "inner operator radius {} does not match the scatterer radius {}",
                op.radius(),
                mesh.a
            )));
        }
    }
    let n = mesh.n_elements() * basis.p;
    let mut coo = Coo {
        n,
        entries: Vec::new(),
    };
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    for e in 0..mesh.edges.len() {
        if mesh.edges[e].class == EdgeClass::Interior {
            assemble_interior_edge(&mesh, &basis, e, &flux, &mut coo);
        }
    }
    assemble_sigma_edges(&mesh, &basis, &sigma_op, flux.delta, &mut coo);
    assemble_gamma_edges(&mesh, &basis, &gamma_bc, &flux, &mut coo, &mut rhs);
    Ok(DGSystem {
        mesh,
        basis,
        flux,
        sigma_op,
        gamma_bc,
        coo,
        rhs,
    })
}

/// Whole-ring traces of an arbitrary field against a boundary operator,
/// plus the local products needed by the forms.
struct FieldRing {
    m_nu: Vec<C64>,
    md: Vec<C64>,
}

impl DGSystem {
    pub fn n_dof(&self) -> usize {
        self.mesh.n_elements() * self.basis.p
    }

    pub fn dof(&self, elem: usize, j: usize) -> usize {
        elem * self.basis.p + j
    }

    fn field_ring(&self, class: EdgeClass, op: &dyn BoundaryOp, f: &dyn PwField) -> FieldRing {
        let k = self.basis.k;
        let dim = op.dim();
        let breaks = op.breakpoints();
        let mut m_nu = vec![C64::new(0.0, 0.0); dim];
        let mut md = vec![C64::new(0.0, 0.0); dim];
        let mut obasis = vec![C64::new(0.0, 0.0); dim];
        for e in &self.mesh.edges {
            if e.class != class {
                continue;
            }
            let elem = e.elems[0];
            let (radius, lo, hi) = arc_interval(&e.geometry);
            for (slo, shi) in arc_subintervals(lo, hi, &breaks) {
                let order = arc_moment_order(k, radius, shi - slo, op);
                for (theta, w) in arc_gauss(radius, slo, shi, order) {
                    let nu = Point2::new(theta.cos(), theta.sin());
                    let x = Point2::new(radius * theta.cos(), radius * theta.sin());
                    let (v, dv) = f.eval(elem, x);
                    op.basis_at(theta, &mut obasis);
                    let un = v.dot_real(nu);
                    for i in 0..dim {
                        m_nu[i] += w * un * obasis[i];
                        md[i] += w * dv * obasis[i];
                    }
                }
            }
        }
        FieldRing { m_nu, md }
    }

    /// Local products over one boundary ring:
    /// `(∫(u·ν)div w̄, ∫div u div w̄, ∫(u·ν)(w̄·ν))`.
    fn ring_locals(&self, class: EdgeClass, u: &dyn PwField, w: &dyn PwField) -> (C64, C64, C64) {
        let k = self.basis.k;
        let mut uv_dw = C64::new(0.0, 0.0);
        let mut dd = C64::new(0.0, 0.0);
        let mut unu_wnu = C64::new(0.0, 0.0);
        for e in &self.mesh.edges {
            if e.class != class {
                continue;
            }
            let elem = e.elems[0];
            for qp in &self.mesh.edge_quadrature(e, arc_local_order(k, e.length)) {
                let (uu, du) = u.eval(elem, qp.x);
                let (ww, dw) = w.eval(elem, qp.x);
                let un = uu.dot_real(qp.normal);
                let wn = ww.dot_real(qp.normal);
                uv_dw += qp.w * un * dw.conj();
                dd += qp.w * du * dw.conj();
                unu_wnu += qp.w * un * wn.conj();
            }
        }
        (uv_dw, dd, unu_wnu)
    }

    /// Interior-edge pieces of the forms, as `(a0_part, a0_abs, b_part,
    /// jump_sq_u_nu, jump_sq_div_u, avg_sq_div_w, avg_sq_w)` where the
    /// squared terms refer to `u` (for the DG bound) and `w` (for DG⁺).
    #[allow(clippy::type_complexity)]
    fn interior_parts(&self, u: &dyn PwField, w: &dyn PwField) -> (C64, f64, C64, f64, f64, f64, f64) {
        let k = self.basis.k;
        let ik = C64::new(0.0, k);
        let flux = &self.flux;
        let mut a0 = C64::new(0.0, 0.0);
        let mut a0_abs = 0.0f64;
        let mut b = C64::new(0.0, 0.0);
        let mut ju_sq = 0.0f64;
        let mut jdu_sq = 0.0f64;
        let mut avg_dw_sq = 0.0f64;
        let mut avg_w_sq = 0.0f64;
        for e in &self.mesh.edges {
            if e.class != EdgeClass::Interior {
                continue;
            }
            let q = self
                .mesh
                .edge_quadrature(e, AnnularMesh::default_edge_order(k, e.length));
            for qp in &q {
                let (um, dum) = u.eval(e.elems[0], qp.x);
                let (up, dup) = u.eval(e.elems[1], qp.x);
                let (wm, dwm) = w.eval(e.elems[0], qp.x);
                let (wp, dwp) = w.eval(e.elems[1], qp.x);
                // Scalar jump coefficients along the stored normal.
                let ju = um.dot_real(qp.normal) - up.dot_real(qp.normal);
                let jdu = dum - dup;
                let jw = wm.dot_real(qp.normal) - wp.dot_real(qp.normal);
                let jdw = dwm - dwp;
                let avg_du = 0.5 * (dum + dup);
                let avg_u = um.add(up).scale(C64::new(0.5, 0.0));
                let avg_dw = 0.5 * (dwm + dwp);
                let avg_w = wm.add(wp).scale(C64::new(0.5, 0.0));
                let t1 = avg_du * jw.conj();
                let t2 = avg_u.dot_real(qp.normal) * jdw.conj();
                a0 += qp.w * (t1 - t2);
                a0_abs += qp.w * (t1.norm() + t2.norm());
                b += qp.w * (ik * flux.alpha1 * ju * jw.conj() - flux.alpha2 / ik * jdu * jdw.conj());
                ju_sq += qp.w * flux.alpha1 * ju.norm_sqr();
                jdu_sq += qp.w * flux.alpha2 * jdu.norm_sqr();
                avg_dw_sq += qp.w / flux.alpha1 * avg_dw.norm_sqr();
                avg_w_sq += qp.w / flux.alpha2
                    * (avg_w.x.norm_sqr() + avg_w.y.norm_sqr());
            }
        }
        (a0, a0_abs, b, ju_sq, jdu_sq, avg_dw_sq, avg_w_sq)
    }

    /// Boundary contribution of `b_h` on one ring through an operator:
    /// `sign·k²·pair + c_pen·(penalty product)` with the local `dd` term.
    fn boundary_b(
        &self,
        class: EdgeClass,
        op: &dyn BoundaryOp,
        sign: f64,
        c_pen: C64,
        u: &dyn PwField,
        w: &dyn PwField,
    ) -> C64 {
        let k2 = self.basis.k * self.basis.k;
        let ru = self.field_ring(class, op, u);
        let rw = self.field_ring(class, op, w);
        let xu = op.apply(&ru.m_nu);
        let xw = op.apply(&rw.m_nu);
        let (_, dd, _) = self.ring_locals(class, u, w);
        sign * k2 * pair(&xu, &rw.m_nu)
            + c_pen
                * (dd
                    + k2 * pair(&xw, &ru.md).conj()
                    + k2 * pair(&xu, &rw.md)
                    + k2 * k2 * pair(&op.apply_mass(&xu), &xw))
    }

    /// The skew part `a_{0,h}(u, w)`: interior averages plus the local
    /// boundary terms `-∫_{Σ_R}(u·ν)div w̄ + ∫_Γ(u·ν)div w̄`.
    pub fn form_a0(&self, u: &dyn PwField, w: &dyn PwField) -> C64 {
        let (a0_int, _, _, _, _, _, _) = self.interior_parts(u, w);
        let (sig_uv, _, _) = self.ring_locals(EdgeClass::SigmaR, u, w);
        let (gam_uv, _, _) = self.ring_locals(EdgeClass::Gamma, u, w);
        a0_int - sig_uv + gam_uv
    }

    /// Magnitude scale of `a_{0,h}(u, w)`: the same integrals with every
    /// term replaced by its absolute value (tolerance reference for the
    /// quadrature-limited identity `Im a_{0,h}(u,u) = 0`).
    pub fn form_a0_abs(&self, u: &dyn PwField, w: &dyn PwField) -> f64 {
        let (_, a0_abs, _, _, _, _, _) = self.interior_parts(u, w);
        let k = self.basis.k;
        let mut s = a0_abs;
        for class in [EdgeClass::SigmaR, EdgeClass::Gamma] {
            for e in &self.mesh.edges {
                if e.class != class {
                    continue;
                }
                let elem = e.elems[0];
                for qp in &self.mesh.edge_quadrature(e, arc_local_order(k, e.length)) {
                    let (uu, _) = u.eval(elem, qp.x);
                    let (_, dw) = w.eval(elem, qp.x);
                    s += qp.w * (uu.dot_real(qp.normal) * dw.conj()).norm();
                }
            }
        }
        s
    }

    /// The dissipative part `b_h(u, w)` (penalties and boundary operators).
    pub fn form_b(&self, u: &dyn PwField, w: &dyn PwField) -> C64 {
        let k = self.basis.k;
        let ik = C64::new(0.0, k);
        let (_, _, b_int, _, _, _, _) = self.interior_parts(u, w);
        let b_sigma = self.boundary_b(
            EdgeClass::SigmaR,
            &self.sigma_op,
            -1.0,
            -C64::new(self.flux.delta, 0.0) / ik,
            u,
            w,
        );
        let b_gamma = match &self.gamma_bc {
            GammaBc::Dirichlet { .. } => {
                let (_, dd, _) = self.ring_locals(EdgeClass::Gamma, u, w);
                -C64::new(self.flux.tau_d, 0.0) / ik * dd
            }
            GammaBc::Gibc { op, .. } => self.boundary_b(
                EdgeClass::Gamma,
                op.as_op(),
                1.0,
                -C64::new(self.flux.tau, 0.0) / ik,
                u,
                w,
            ),
        };
        b_int + b_sigma + b_gamma
    }

    /// Full form `a_h(u, w) = a_{0,h}(u, w) + b_h(u, w)`.
    pub fn form_a(&self, u: &dyn PwField, w: &dyn PwField) -> C64 {
        self.form_a0(u, w) + self.form_b(u, w)
    }

    /// The antilinear functional `f_h(w)`, evaluated independently of the
    /// assembled right-hand side.
    pub fn form_f(&self, w: &dyn PwField) -> C64 {
        let k = self.basis.k;
        let k2 = k * k;
        let ik = C64::new(0.0, k);
        match &self.gamma_bc {
            GammaBc::Dirichlet { data } => {
                let mut f = C64::new(0.0, 0.0);
                for e in &self.mesh.edges {
                    if e.class != EdgeClass::Gamma {
                        continue;
                    }
                    let elem = e.elems[0];
                    for qp in &self.mesh.edge_quadrature(e, arc_local_order(k, e.length)) {
                        let ud = data.dirichlet_datum(k, qp.x);
                        let (wv, dw) = w.eval(elem, qp.x);
                        f += qp.w
                            * (-k2 * ud * wv.dot_real(qp.normal).conj()
                                + self.flux.tau_d * k2 / ik * ud * dw.conj());
                    }
                }
                f
            }
            GammaBc::Gibc { op, data } => {
                let dim = op.dim();
                let breaks = op.breakpoints();
                let mut mg = vec![C64::new(0.0, 0.0); dim];
                let mut obasis = vec![C64::new(0.0, 0.0); dim];
                for e in &self.mesh.edges {
                    if e.class != EdgeClass::Gamma {
                        continue;
                    }
                    let (radius, lo, hi) = arc_interval(&e.geometry);
                    for (slo, shi) in arc_subintervals(lo, hi, &breaks) {
                        let order = arc_moment_order(k, radius, shi - slo, op.as_op());
                        for (theta, wq) in arc_gauss(radius, slo, shi, order) {
                            let nu = Point2::new(theta.cos(), theta.sin());
                            let x = Point2::new(radius * theta.cos(), radius * theta.sin());
                            let g = data.gibc_source(k, x, nu);
                            op.basis_at(theta, &mut obasis);
                            for i in 0..dim {
                                mg[i] += wq * g * obasis[i];
                            }
                        }
                    }
                }
                let xg = op.apply(&mg);
                let rw = self.field_ring(EdgeClass::Gamma, op.as_op(), w);
                let xw = op.apply(&rw.m_nu);
                k2 * pair(&xg, &rw.m_nu)
                    - self.flux.tau * k2 / ik
                        * (pair(&xg, &rw.md) + k2 * pair(&op.apply_mass(&xg), &xw))
            }
        }
    }

    /// DG semi-norm `sqrt(max(0, Im b_h(w, w)))`.
    pub fn dg_norm(&self, w: &dyn PwField) -> f64 {
        self.form_b(w, w).im.max(0.0).sqrt()
    }

    /// DG⁺ norm: DG norm plus the average/trace terms of the continuity
    /// estimate.
    pub fn dg_plus_norm(&self, w: &dyn PwField) -> f64 {
        let k = self.basis.k;
        let (_, _, _, _, _, avg_dw_sq, avg_w_sq) = self.interior_parts(w, w);
        let (_, _, sig_nn) = self.ring_locals(EdgeClass::SigmaR, w, w);
        let (_, _, gam_nn) = self.ring_locals(EdgeClass::Gamma, w, w);
        let tau_like = match &self.gamma_bc {
            GammaBc::Dirichlet { .. } => self.flux.tau_d,
            GammaBc::Gibc { .. } => self.flux.tau,
        };
        let dg_sq = self.form_b(w, w).im.max(0.0);
        let extra = avg_dw_sq / k
            + k * avg_w_sq
            + k / self.flux.delta.max(f64::MIN_POSITIVE) * sig_nn.re.max(0.0)
            + k / tau_like.max(f64::MIN_POSITIVE) * gam_nn.re.max(0.0);
        (dg_sq + extra).sqrt()
    }

    /// Matrix-market style dump of the assembled system (versioned).
    pub fn dump_system(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        writeln!(s, "%%MatrixMarket matrix coordinate complex general").unwrap();
        writeln!(s, "% tdg-system v1 n={} nnz={}", self.coo.n, self.coo.entries.len()).unwrap();
        writeln!(s, "{} {} {}", self.coo.n, self.coo.n, self.coo.entries.len()).unwrap();
        for &(i, j, v) in &self.coo.entries {
            writeln!(s, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re, v.im).unwrap();
        }
        writeln!(s, "% rhs {}", self.rhs.len()).unwrap();
        for v in &self.rhs {
            writeln!(s, "{:.17e} {:.17e}", v.re, v.im).unwrap();
        }
        s
    }
}
