//! Fast self-check battery: cheap spot checks of the numerical invariants
//! (special functions, boundary-operator signs, assembly energy identities,
//! solver residual) intended for the `check` CLI subcommand.

use crate::assembly::CoeffField;
use crate::boundary::{gibc_build_trig, pair, BoundaryOp, ModalBoundaryOperator, SurfaceCoefficient};
use crate::config::{MeshSpec, RunConfig};
use crate::solve::solve_system;
use crate::specfun::cyl_arrays;
use crate::{C64, Result};
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn record(results: &mut Vec<CheckResult>, name: &'static str, passed: bool, detail: String) {
    results.push(CheckResult {
        name,
        passed,
        detail,
    });
}

/// Run the battery; returns one record per check.
pub fn run_checks() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    // Cross-kind Wronskian J_n(x)Y_n'(x) - J_n'(x)Y_n(x) = 2/(πx).
    {
        let mut worst = 0.0f64;
        for &x in &[0.5, 4.0, 12.0] {
            let c = cyl_arrays(8, x)?;
            for n in 0..=8 {
                let w = c.j[n] * c.yp[n] - c.jp[n] * c.y[n];
                let exact = 2.0 / (PI * x);
                worst = worst.max((w - exact).abs() / exact);
            }
        }
        record(
            &mut out,
            "wronskian",
            worst <= 1e-10,
            format!("max relative deviation {worst:.3e}"),
        );
    }

    // NtD sign: Im γ_n < 0 for every retained mode.
    {
        let op = ModalBoundaryOperator::new_exact_ntd(8.0, 1.0, 20)?;
        let dim = op.dim();
        let mut ok = true;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[i] = C64::new(1.0, 0.0);
            // Quadratic form of a single mode: Im⟨N e, e⟩ ∝ Im γ_n.
            let x = op.apply(&e);
            let im = pair(&x, &e).im;
            worst = worst.max(im);
            ok &= im < 0.0;
        }
        record(
            &mut out,
            "ntd_sign",
            ok,
            format!("max Im quadratic form {worst:.3e}"),
        );
    }

    // GIBC adjoint identity on random moment vectors.
    {
        let op = gibc_build_trig(
            0.5,
            SurfaceCoefficient::Constant(C64::new(1.0, -0.5)),
            SurfaceCoefficient::Constant(C64::new(0.0, 1.0)),
            10,
        )?;
        let dim = op.dim();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let m1: Vec<C64> = (0..dim)
                .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let m2: Vec<C64> = (0..dim)
                .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let lhs = pair(&op.apply(&m1), &m2);
            let rhs = pair(&op.apply_adjoint(&m2), &m1).conj();
            worst = worst.max((lhs - rhs).norm() / lhs.norm().max(1e-30));
        }
        record(
            &mut out,
            "gibc_adjoint",
            worst <= 1e-12,
            format!("max relative defect {worst:.3e}"),
        );
    }

    // Assembly energy identities and solver residual on a coarse system.
    {
        let cfg = RunConfig {
            mesh: MeshSpec::Explicit {
                n_theta: 16,
                n_r: 2,
            },
            ..RunConfig::default()
        };
        let sys = cfg.build_system()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u: Vec<C64> = (0..sys.n_dof())
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let fu = CoeffField {
            basis: &sys.basis,
            coeffs: &u,
        };
        let a0 = sys.form_a0(&fu, &fu);
        let scale = sys.form_a0_abs(&fu, &fu);
        let b = sys.form_b(&fu, &fu);
        record(
            &mut out,
            "im_a0_zero",
            a0.im.abs() <= 1e-8 * scale,
            format!("Im a0 = {:.3e}, scale {:.3e}", a0.im, scale),
        );
        record(
            &mut out,
            "im_b_nonnegative",
            b.im >= -1e-9 * scale,
            format!("Im b = {:.3e}", b.im),
        );
        let sol = solve_system(&sys, cfg.seed)?;
        record(
            &mut out,
            "solver_residual",
            sol.residual <= 1e-10,
            format!("relative residual {:.3e}", sol.residual),
        );
    }

    Ok(out)
}
