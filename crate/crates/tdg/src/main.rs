//! Command-line driver: single solves, convergence sweeps, self checks,
//! and mesh/system dumps, configured by TOML with flag overrides.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tdg::config::{MeshSpec, RunConfig, SigmaVariant};
use tdg::driver::{convergence_csv, run_convergence, run_single, write_outputs};

#[derive(Parser)]
#[command(name = "tdg", version, about = "Trefftz DG solver for the displacement Helmholtz equation on an annulus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// TOML configuration file (defaults used when omitted).
    #[arg(long)]
    config: Option<String>,
    /// Override: wavenumber k.
    #[arg(long)]
    k: Option<f64>,
    /// Override: target mesh width h.
    #[arg(long)]
    h: Option<f64>,
    /// Override: plane waves per element.
    #[arg(long)]
    p: Option<usize>,
    /// Override: outer boundary variant
    /// (exact_ntd, abc0, abc1, abc2, abc3).
    #[arg(long)]
    variant: Option<String>,
    /// Override: output directory.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write the convergence row (and
    /// optionally the sampled field) to the output directory.
    Solve {
        #[command(flatten)]
        common: CommonOpts,
        /// Also write the sampled pressure field CSV.
        #[arg(long)]
        fields: bool,
    },
    /// Convergence sweep over mesh widths and outer-boundary variants.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Mesh widths, e.g. --hs 0.4,0.2,0.1,0.05
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
        hs: Vec<f64>,
        /// Variants to include (default: all five).
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<String>>,
    },
    /// Run the fast invariant self-checks.
    Check,
    /// Print the mesh (vertices, triangles, classified edges) as CSV.
    DumpMesh {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Print the assembled matrix and right-hand side (matrix market
    /// style).
    DumpSystem {
        #[command(flatten)]
        common: CommonOpts,
    },
}

#[derive(Serialize)]
struct ErrorRecord {
    error: String,
    kind: String,
}

fn parse_variant(s: &str) -> anyhow::Result<SigmaVariant> {
    Ok(match s {
        "exact_ntd" => SigmaVariant::ExactNtd,
        "abc0" => SigmaVariant::Abc0,
        "abc1" => SigmaVariant::Abc1,
        "abc2" => SigmaVariant::Abc2,
        "abc3" => SigmaVariant::Abc3,
        other => anyhow::bail!("unknown variant {other:?}"),
    })
}

fn load_config(common: &CommonOpts) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(k) = common.k {
        cfg.k = k;
    }
    if let Some(h) = common.h {
        cfg.mesh = MeshSpec::TargetH { h };
    }
    if let Some(p) = common.p {
        cfg.p = p;
    }
    if let Some(v) = &common.variant {
        cfg.sigma_bc.variant = parse_variant(v)?;
    }
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve { common, fields } => {
            let mut cfg = load_config(&common)?;
            cfg.output.fields |= fields;
            let outcome = run_single(&cfg)?;
            let rows = vec![outcome.row.clone()];
            write_outputs(&cfg, &rows, Some(&outcome))?;
            print!("{}", convergence_csv(&cfg, &rows));
        }
        Command::Sweep {
            common,
            hs,
            variants,
        } => {
            let cfg = load_config(&common)?;
            let variants = match variants {
                Some(vs) => vs
                    .iter()
                    .map(|s| parse_variant(s))
                    .collect::<anyhow::Result<Vec<_>>>()?,
                None => SigmaVariant::ALL.to_vec(),
            };
            let rows = run_convergence(&cfg, &hs, &variants)?;
            write_outputs(&cfg, &rows, None)?;
            print!("{}", convergence_csv(&cfg, &rows));
        }
        Command::Check => {
            let results = tdg::check::run_checks()?;
            let mut failed = 0;
            for r in &results {
                println!(
                    "{:<18} {}  {}",
                    r.name,
                    if r.passed { "pass" } else { "FAIL" },
                    r.detail
                );
                failed += usize::from(!r.passed);
            }
            anyhow::ensure!(failed == 0, "{failed} checks failed");
        }
        Command::DumpMesh { common } => {
            let cfg = load_config(&common)?;
            let (n_theta, n_r) = cfg.mesh_dims();
            let mesh = tdg::mesh::build_annular_mesh(cfg.a, cfg.r_outer, n_theta, n_r)?;
            println!("# mesh n_theta={n_theta} n_r={n_r} h={}", mesh.h);
            println!("vertex,x,y");
            for (i, v) in mesh.vertices.iter().enumerate() {
                println!("{i},{},{}", v.x, v.y);
            }
            println!("triangle,v0,v1,v2");
            for (t, tri) in mesh.triangles.iter().enumerate() {
                println!("{t},{},{},{}", tri[0], tri[1], tri[2]);
            }
            println!("edge,class,elem0,elem1,length");
            for (i, e) in mesh.edges.iter().enumerate() {
                println!(
                    "{i},{:?},{},{},{}",
                    e.class,
                    e.elems[0],
                    if e.elems[1] == tdg::mesh::NO_ELEM {
                        -1
                    } else {
                        e.elems[1] as i64
                    },
                    e.length
                );
            }
        }
        Command::DumpSystem { common } => {
            let cfg = load_config(&common)?;
            let sys = cfg.build_system()?;
            print!("{}", sys.dump_system());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        // Machine-readable error record on stderr, one TOML document.
        let rec = ErrorRecord {
            error: format!("{e:#}"),
            kind: e
                .downcast_ref::<tdg::Error>()
                .map(|te| {
                    match te {
                        tdg::Error::InvalidParameter(_) => "invalid_parameter",
                        tdg::Error::SpecFun(_) => "specfun",
                        tdg::Error::Singular { .. } => "singular",
                        tdg::Error::ResidualTooLarge { .. } => "residual_too_large",
                        tdg::Error::PointOutsideDomain { .. } => "point_outside_domain",
                        tdg::Error::Config(_) => "config",
                        tdg::Error::Io(_) => "io",
                    }
                    .to_string()
                })
                .unwrap_or_else(|| "other".to_string()),
        };
        eprintln!("{}", toml::to_string(&rec).unwrap_or_else(|_| format!("error = \"{e}\"")));
        std::process::exit(1);
    }
}
