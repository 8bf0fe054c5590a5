//! Configuration-driven runs: single solves, convergence sweeps over mesh
//! widths and outer-boundary variants, and CSV emission.

use crate::assembly::{CoeffField, DGSystem, DiffField, PwField, SeriesField};
use crate::config::{MeshSpec, RunConfig, SigmaVariant};
use crate::solve::{relative_l2_error, solve_system, SolutionField};
use crate::{C64, Point2, Result};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

/// Format version written into every CSV header.
pub const CSV_VERSION: &str = "tdg-csv v1";

/// One row of the convergence table.
#[derive(Debug, Clone)]
pub struct RunRow {
    pub h: f64,
    pub n_dof: usize,
    pub variant: String,
    /// Relative L² pressure error against the exact solution of the same
    /// truncated problem (NaN when no reference applies).
    pub rel_l2_vs_variant_exact: f64,
    /// Relative L² pressure error against the exact full-space scattering
    /// solution (NaN when no reference applies).
    pub rel_l2_vs_scattering_exact: f64,
    /// DG norm of the discrete error `v_h - v_exact(variant)` (NaN when no
    /// reference applies).
    pub dg_norm_residual: f64,
    pub condition_estimate: f64,
}

/// Result of a single configured solve.
pub struct RunOutcome {
    pub system: DGSystem,
    pub solution: SolutionField,
    pub row: RunRow,
}

/// Whether exact series references exist for this configuration (sound-soft
/// scatterer with plane-wave data).
fn has_reference(cfg: &RunConfig) -> bool {
    matches!(cfg.gamma_bc, crate::config::GammaBcSpec::Dirichlet)
}

pub fn run_single(cfg: &RunConfig) -> Result<RunOutcome> {
    let sys = cfg.build_system()?;
    let solution = solve_system(&sys, cfg.seed)?;
    let mut row = RunRow {
        h: cfg.nominal_h(),
        n_dof: sys.n_dof(),
        variant: cfg.sigma_bc.variant.label().to_string(),
        rel_l2_vs_variant_exact: f64::NAN,
        rel_l2_vs_scattering_exact: f64::NAN,
        dg_norm_residual: f64::NAN,
        condition_estimate: solution.condition_estimate,
    };
    if has_reference(cfg) {
        let variant_exact = cfg.variant_exact()?;
        let scattering_exact = cfg.scattering_exact()?;
        row.rel_l2_vs_variant_exact = relative_l2_error(&sys, &solution.coeffs, &variant_exact)?;
        row.rel_l2_vs_scattering_exact =
            relative_l2_error(&sys, &solution.coeffs, &scattering_exact)?;
        let fh = CoeffField {
            basis: &sys.basis,
            coeffs: &solution.coeffs,
        };
        let fe = SeriesField(&variant_exact);
        row.dg_norm_residual = sys.dg_norm(&DiffField(&fh, &fe));
    }
    Ok(RunOutcome {
        system: sys,
        solution,
        row,
    })
}

/// Convergence sweep: every (h, variant) pair, deterministic order.
pub fn run_convergence(
    base: &RunConfig,
    hs: &[f64],
    variants: &[SigmaVariant],
) -> Result<Vec<RunRow>> {
    let mut rows = Vec::new();
    for &h in hs {
        for &variant in variants {
            let mut cfg = base.clone();
            cfg.mesh = MeshSpec::TargetH { h };
            cfg.sigma_bc.variant = variant;
            log::info!("solving h = {h}, variant = {}", variant.label());
            rows.push(run_single(&cfg)?.row);
        }
    }
    Ok(rows)
}

/// Comment header with the resolved parameters, shared by all CSV files.
fn csv_header(cfg: &RunConfig) -> String {
    let (n_theta, n_r) = cfg.mesh_dims();
    let mut s = String::new();
    writeln!(s, "# {CSV_VERSION}").unwrap();
    writeln!(
        s,
        "# k={} a={} r_outer={} p={} incident_angle={} seed={} m_exact={}",
        cfg.k, cfg.a, cfg.r_outer, cfg.p, cfg.incident_angle, cfg.seed, cfg.m_exact
    )
    .unwrap();
    writeln!(
        s,
        "# mesh n_theta={n_theta} n_r={n_r} flux alpha1={} alpha2={} delta={} tau={} tau_d={}",
        cfg.flux.alpha1, cfg.flux.alpha2, cfg.flux.delta, cfg.flux.tau, cfg.flux.tau_d
    )
    .unwrap();
    s
}

pub fn convergence_csv(cfg: &RunConfig, rows: &[RunRow]) -> String {
    let mut s = csv_header(cfg);
    writeln!(
        s,
        "h,inv_h,n_dof,variant,rel_l2_vs_variant_exact,rel_l2_vs_scattering_exact,dg_norm_residual,condition_estimate"
    )
    .unwrap();
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{:.10e},{:.10e},{:.10e},{:.6e}",
            r.h,
            1.0 / r.h,
            r.n_dof,
            r.variant,
            r.rel_l2_vs_variant_exact,
            r.rel_l2_vs_scattering_exact,
            r.dg_norm_residual,
            r.condition_estimate
        )
        .unwrap();
    }
    s
}

/// Pressure field sampled on a polar grid, one row per point.
pub fn field_csv(sys: &DGSystem, coeffs: &[C64], n_theta: usize, n_r: usize) -> Result<String> {
    let k = sys.basis.k;
    let (a, r_outer) = (sys.mesh.a, sys.mesh.r_outer);
    let f = CoeffField {
        basis: &sys.basis,
        coeffs,
    };
    let mut s = String::new();
    writeln!(s, "x,y,r,theta,Re_u,Im_u,abs_u").unwrap();
    for ir in 0..n_r {
        // Cell-centered radii keep every sample strictly inside the annulus.
        let r = a + (r_outer - a) * (ir as f64 + 0.5) / n_r as f64;
        for it in 0..n_theta {
            let theta = TAU * (it as f64 + 0.5) / n_theta as f64;
            let x = Point2::new(r * theta.cos(), r * theta.sin());
            let elem = sys.mesh.locate_point(x)?;
            let (_, dv) = f.eval(elem, x);
            let u = -dv / (k * k);
            writeln!(
                s,
                "{},{},{},{},{:.10e},{:.10e},{:.10e}",
                x.x,
                x.y,
                r,
                theta,
                u.re,
                u.im,
                u.norm()
            )
            .unwrap();
        }
    }
    Ok(s)
}

pub fn write_outputs(cfg: &RunConfig, rows: &[RunRow], outcome: Option<&RunOutcome>) -> Result<()> {
    let dir = Path::new(&cfg.output.dir);
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("convergence.csv"), convergence_csv(cfg, rows))?;
    if cfg.output.fields {
        if let Some(o) = outcome {
            let n_theta = 256usize;
            let n_r = 64usize;
            let csv = field_csv(&o.system, &o.solution.coeffs, n_theta, n_r)?;
            let name = format!("field_{}.csv", o.row.variant);
            std::fs::write(dir.join(name), format!("{}{}", csv_header(cfg), csv))?;
        }
    }
    Ok(())
}
