//! Run configuration: TOML-serializable description of a single solve
//! (geometry, wavenumber, basis size, boundary conditions, flux
//! parameters, output options) and its resolution into an assembled
//! system.

use crate::assembly::{assemble_system, DGSystem, FluxParams, GammaBc, GammaData};
use crate::basis::PlaneWaveBasis;
use crate::boundary::modal::AbcVariant;
use crate::boundary::{gibc_build_fem, gibc_build_trig, ModalBoundaryOperator, SurfaceCoefficient};
use crate::mesh::build_annular_mesh;
use crate::series::{exact_abc_series, exact_scattering_series, ExactSeries};
use crate::{C64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Complex number in configuration files: `{ re = ..., im = ... }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexParam {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexParam> for C64 {
    fn from(c: ComplexParam) -> C64 {
        C64::new(c.re, c.im)
    }
}

impl From<C64> for ComplexParam {
    fn from(c: C64) -> ComplexParam {
        ComplexParam { re: c.re, im: c.im }
    }
}

/// Piecewise-constant surface coefficient: one value, or one per
/// half-circle (`[0, π)` and `[π, 2π)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientParam {
    Constant(ComplexParam),
    TwoConstant([ComplexParam; 2]),
}

impl From<&CoefficientParam> for SurfaceCoefficient {
    fn from(c: &CoefficientParam) -> SurfaceCoefficient {
        match c {
            CoefficientParam::Constant(v) => SurfaceCoefficient::Constant((*v).into()),
            CoefficientParam::TwoConstant([a, b]) => {
                SurfaceCoefficient::TwoConstant((*a).into(), (*b).into())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeshSpec {
    /// Explicit grid dimensions.
    Explicit { n_theta: usize, n_r: usize },
    /// Resolve from a target mesh width: `n_theta = ceil(2πR/h)`,
    /// `n_r = ceil((R - a)/h)`.
    TargetH { h: f64 },
}

impl MeshSpec {
    pub fn resolve(&self, a: f64, r_outer: f64) -> (usize, usize) {
        match *self {
            MeshSpec::Explicit { n_theta, n_r } => (n_theta, n_r),
            MeshSpec::TargetH { h } => (
                (TAU * r_outer / h).ceil() as usize,
                ((r_outer - a) / h).ceil().max(1.0) as usize,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaVariant {
    ExactNtd,
    Abc0,
    Abc1,
    Abc2,
    Abc3,
}

impl SigmaVariant {
    pub fn abc_variant(self) -> Option<AbcVariant> {
        match self {
            SigmaVariant::ExactNtd => None,
            SigmaVariant::Abc0 => Some(AbcVariant::Abc0),
            SigmaVariant::Abc1 => Some(AbcVariant::Abc1),
            SigmaVariant::Abc2 => Some(AbcVariant::Abc2),
            SigmaVariant::Abc3 => Some(AbcVariant::Abc3),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SigmaVariant::ExactNtd => "exact_ntd",
            SigmaVariant::Abc0 => "abc0",
            SigmaVariant::Abc1 => "abc1",
            SigmaVariant::Abc2 => "abc2",
            SigmaVariant::Abc3 => "abc3",
        }
    }

    pub const ALL: [SigmaVariant; 5] = [
        SigmaVariant::Abc0,
        SigmaVariant::Abc1,
        SigmaVariant::Abc2,
        SigmaVariant::Abc3,
        SigmaVariant::ExactNtd,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaBcSpec {
    pub variant: SigmaVariant,
    /// Modal truncation of the boundary operator.
    #[serde(default = "default_m_modes")]
    pub m: usize,
}

fn default_m_modes() -> usize {
    13
}

impl Default for SigmaBcSpec {
    fn default() -> Self {
        SigmaBcSpec {
            variant: SigmaVariant::ExactNtd,
            m: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GibcRepresentation {
    Trig,
    Fem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GammaBcSpec {
    /// Sound-soft scatterer: Dirichlet data from the incident plane wave.
    Dirichlet,
    /// Generalized impedance condition through a surface solution operator
    /// with coefficients `beta` (diffusion) and `lambda` (potential).
    Gibc {
        beta: CoefficientParam,
        lambda: CoefficientParam,
        representation: GibcRepresentation,
        /// Modal truncation for the trig representation.
        #[serde(default = "default_m_modes")]
        m: usize,
        /// Periodic FEM degree for the fem representation.
        #[serde(default = "default_fem_degree")]
        fem_degree: usize,
    },
}

fn default_fem_degree() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FluxSpec {
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta: f64,
    pub tau: f64,
    pub tau_d: f64,
}

impl Default for FluxSpec {
    fn default() -> Self {
        let f = FluxParams::default();
        FluxSpec {
            alpha1: f.alpha1,
            alpha2: f.alpha2,
            delta: f.delta,
            tau: f.tau,
            tau_d: f.tau_d,
        }
    }
}

impl From<FluxSpec> for FluxParams {
    fn from(f: FluxSpec) -> FluxParams {
        FluxParams {
            alpha1: f.alpha1,
            alpha2: f.alpha2,
            delta: f.delta,
            tau: f.tau,
            tau_d: f.tau_d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSpec {
    /// Directory for CSV output (created if missing).
    pub dir: String,
    /// Also write the field-grid CSV (`x,y,r,theta,Re_u,Im_u,abs_u`).
    pub fields: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: "out".to_string(),
            fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub k: f64,
    pub a: f64,
    pub r_outer: f64,
    /// Plane waves per element.
    pub p: usize,
    pub incident_angle: f64,
    pub seed: u64,
    /// Mode count for the exact reference series.
    pub m_exact: usize,
    pub mesh: MeshSpec,
    pub sigma_bc: SigmaBcSpec,
    pub gamma_bc: GammaBcSpec,
    pub flux: FluxSpec,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 8.0,
            a: 0.5,
            r_outer: 1.0,
            p: 7,
            incident_angle: 0.0,
            seed: 7,
            m_exact: 40,
            mesh: MeshSpec::TargetH { h: 0.2 },
            sigma_bc: SigmaBcSpec::default(),
            gamma_bc: GammaBcSpec::Dirichlet,
            flux: FluxSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config parse: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization")
    }

    /// Resolved grid dimensions.
    pub fn mesh_dims(&self) -> (usize, usize) {
        self.mesh.resolve(self.a, self.r_outer)
    }

    /// Mesh width implied by the resolved grid (the `h` reported in CSV).
    pub fn nominal_h(&self) -> f64 {
        match self.mesh {
            MeshSpec::TargetH { h } => h,
            MeshSpec::Explicit { n_theta, .. } => TAU * self.r_outer / n_theta as f64,
        }
    }

    fn build_sigma_op(&self) -> Result<ModalBoundaryOperator> {
        match self.sigma_bc.variant.abc_variant() {
            None => ModalBoundaryOperator::new_exact_ntd(self.k, self.r_outer, self.sigma_bc.m),
            Some(v) => ModalBoundaryOperator::new_abc(v, self.k, self.r_outer, self.sigma_bc.m),
        }
    }

    fn build_gamma_bc(&self) -> Result<GammaBc> {
        let data = GammaData::PlaneWave {
            angle: self.incident_angle,
        };
        match &self.gamma_bc {
            GammaBcSpec::Dirichlet => Ok(GammaBc::Dirichlet { data }),
            GammaBcSpec::Gibc {
                beta,
                lambda,
                representation,
                m,
                fem_degree,
            } => {
                let beta = SurfaceCoefficient::from(beta);
                let lambda = SurfaceCoefficient::from(lambda);
                let op = match representation {
                    GibcRepresentation::Trig => gibc_build_trig(self.a, beta, lambda, *m)?,
                    GibcRepresentation::Fem => {
                        let (n_theta, _) = self.mesh_dims();
                        let h_mesh = TAU * self.r_outer / n_theta as f64;
                        gibc_build_fem(self.a, beta, lambda, h_mesh, *fem_degree)?
                    }
                };
                Ok(GammaBc::Gibc { op, data })
            }
        }
    }

    /// Assemble the full system described by this configuration.
    pub fn build_system(&self) -> Result<DGSystem> {
        let (n_theta, n_r) = self.mesh_dims();
        let mesh = build_annular_mesh(self.a, self.r_outer, n_theta, n_r)?;
        let basis = PlaneWaveBasis::new(&mesh, self.k, self.p)?;
        let sigma_op = self.build_sigma_op()?;
        let gamma_bc = self.build_gamma_bc()?;
        assemble_system(mesh, basis, self.flux.into(), sigma_op, gamma_bc)
    }

    /// Exact reference for this configuration's `Σ_R` variant (sound-soft
    /// `Γ` only).
    pub fn variant_exact(&self) -> Result<ExactSeries> {
        match self.sigma_bc.variant.abc_variant() {
            None => exact_scattering_series(self.k, self.a, self.r_outer, self.m_exact),
            Some(v) => exact_abc_series(v, self.k, self.a, self.r_outer, self.m_exact),
        }
    }

    /// Exact full-space scattering reference (sound-soft `Γ` only).
    pub fn scattering_exact(&self) -> Result<ExactSeries> {
        exact_scattering_series(self.k, self.a, self.r_outer, self.m_exact)
    }
}
