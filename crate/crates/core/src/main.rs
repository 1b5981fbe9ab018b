//! Command-line laboratory for random Čech complexes.

use cechlab::analytics::lambda_of;
use cechlab::cech::{build_complex, CechComplex};
use cechlab::error::{Error, Result};
use cechlab::harness::{run_sweep, SweepConfig};
use cechlab::homology::betti_numbers;
use cechlab::manifold::{ManifoldKind, ManifoldModel};
use cechlab::morse::{coverage_certificate, enumerate_critical_points, write_critical_csv};
use cechlab::sampler::{poisson_process, PointCloud};
use cechlab::theta::{count_theta_cycles, ThetaConfig};
use cechlab::verify::{run_suite, suite_passed, Scale};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::{BufReader, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "cechlab", version, about = "Random Čech complexes on the flat torus and round sphere")]
struct Cli {
    /// JSON sweep config (used by `sweep`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed for sampling commands
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output path (defaults to stdout for file-producing commands)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Torus,
    Sphere,
}

#[derive(Args)]
struct ManifoldArgs {
    /// Ambient model
    #[arg(long, value_enum, default_value_t = KindArg::Torus)]
    manifold: KindArg,
    /// Intrinsic dimension
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Torus side length or sphere embedding radius
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

impl ManifoldArgs {
    fn model(&self) -> Result<ManifoldModel> {
        let kind = match self.manifold {
            KindArg::Torus => ManifoldKind::Torus,
            KindArg::Sphere => ManifoldKind::Sphere,
        };
        ManifoldModel::new(kind, self.dim, self.scale)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a Poisson point cloud and write it as CSV
    Sample {
        #[command(flatten)]
        manifold: ManifoldArgs,
        /// Expected number of points
        #[arg(long)]
        n: f64,
    },
    /// Build the Čech complex of a point-cloud CSV at one radius
    Build {
        #[command(flatten)]
        manifold: ManifoldArgs,
        /// Point-cloud CSV (as written by `sample`)
        #[arg(long)]
        cloud: PathBuf,
        /// Filtration radius
        #[arg(long)]
        r: f64,
        /// Maximum simplex dimension retained
        #[arg(long, default_value_t = 3)]
        dim_cap: usize,
    },
    /// Betti numbers of a complex file (as written by `build`)
    Betti {
        /// Complex text file
        #[arg(long)]
        complex: PathBuf,
    },
    /// Enumerate critical points of the distance function
    Critical {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[arg(long)]
        cloud: PathBuf,
        /// Critical index (0..=dim)
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        r_lo: f64,
        #[arg(long)]
        r_hi: f64,
    },
    /// Count Θ-cycles at the default radii rule
    Theta {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[arg(long)]
        cloud: PathBuf,
        /// Cycle degree (1..=dim-1)
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Base radius
        #[arg(long)]
        r: f64,
        /// Density parameter (sets xi = 1/lambda); derived from r when omitted
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Net-based coverage certificate at radius r0
    Coverage {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        r0: f64,
    },
    /// Run a Monte Carlo sweep from a JSON config (--config)
    Sweep,
    /// Run the verification suite
    Verify {
        /// quick: reduced sizes; full: the complete acceptance runs
        #[arg(value_enum, default_value_t = ScaleArg::Quick)]
        scale: ScaleArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Quick,
    Full,
}

fn load_cloud(m: &ManifoldModel, path: &PathBuf) -> Result<PointCloud> {
    let f = std::fs::File::open(path)?;
    PointCloud::read_csv(*m, BufReader::new(f))
}

fn out_writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match out {
        Some(p) => Ok(Box::new(std::io::BufWriter::new(std::fs::File::create(p)?))),
        None => Ok(Box::new(std::io::stdout())),
    }
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.cmd {
        Cmd::Sample { manifold, n } => {
            let m = manifold.model()?;
            let cloud = poisson_process(&m, n, cli.seed)?;
            let mut w = out_writer(&cli.out)?;
            cloud.write_csv(&mut w)?;
            Ok(0)
        }
        Cmd::Build { manifold, cloud, r, dim_cap } => {
            let m = manifold.model()?;
            let cloud = load_cloud(&m, &cloud)?;
            let cx = build_complex(&cloud, r, dim_cap)?;
            let mut w = out_writer(&cli.out)?;
            cx.write_text(&mut w)?;
            Ok(0)
        }
        Cmd::Betti { complex } => {
            let f = std::fs::File::open(&complex)?;
            let cx = CechComplex::read_text(BufReader::new(f))?;
            let bv = betti_numbers(&cx)?;
            let mut w = out_writer(&cli.out)?;
            writeln!(w, "f_vector: {:?}", cx.f_vector())?;
            writeln!(w, "betti: {:?} (top degree {} untrusted: {})", bv.betti, cx.dim_cap, bv.top_untrusted)?;
            writeln!(w, "euler: {}", bv.euler)?;
            Ok(0)
        }
        Cmd::Critical { manifold, cloud, k, r_lo, r_hi } => {
            let m = manifold.model()?;
            let cloud = load_cloud(&m, &cloud)?;
            let e = enumerate_critical_points(&cloud, k, r_lo, r_hi)?;
            let mut w = out_writer(&cli.out)?;
            write_critical_csv(&mut w, &m, &e.points)?;
            eprintln!(
                "{} critical points of index {k}; degenerate candidates skipped: {}",
                e.points.len(),
                e.degenerate_skips
            );
            Ok(0)
        }
        Cmd::Theta { manifold, cloud, k, r, lambda, epsilon } => {
            let m = manifold.model()?;
            let cloud = load_cloud(&m, &cloud)?;
            let lam = match lambda {
                Some(l) => l,
                None => lambda_of(cloud.intensity_n.max(cloud.len() as f64), r, m.dim, m.volume())?,
            };
            let cfg = ThetaConfig::from_rule(&m, r, lam, epsilon)?;
            let (count, cycles) = count_theta_cycles(&cloud, k, &cfg)?;
            let mut w = out_writer(&cli.out)?;
            writeln!(w, "k,radius,phi,certificate")?;
            for c in &cycles {
                writeln!(w, "{k},{:.16e},{:.16e},1", c.radius, c.phi)?;
            }
            eprintln!("theta count (k={k}): {count} at r1={:.6} r={:.6} r2={:.6}", cfg.r1, cfg.r, cfg.r2);
            Ok(0)
        }
        Cmd::Coverage { manifold, cloud, r0 } => {
            let m = manifold.model()?;
            let cloud = load_cloud(&m, &cloud)?;
            let covered = coverage_certificate(&cloud, r0)?;
            println!("{covered}");
            Ok(0)
        }
        Cmd::Sweep => {
            let path = cli
                .config
                .ok_or_else(|| Error::Config("sweep requires --config <path>".into()))?;
            let text = std::fs::read_to_string(&path)?;
            let mut cfg = SweepConfig::from_json(&text)?;
            if let Some(out) = &cli.out {
                cfg.out = out.to_string_lossy().into_owned();
            }
            let outcome = run_sweep(&cfg)?;
            for s in &outcome.summaries {
                println!(
                    "cell {} (n={}, k={}, c={}): match {:.4} [{:.4}, {:.4}] over {} trials",
                    s.cell,
                    s.n,
                    s.offset.k,
                    s.offset.c,
                    s.match_fraction,
                    s.wilson_low,
                    s.wilson_high,
                    s.trials
                );
            }
            Ok(if outcome.any_failed { 1 } else { 0 })
        }
        Cmd::Verify { scale } => {
            let scale = match scale {
                ScaleArg::Quick => Scale::Quick,
                ScaleArg::Full => Scale::Full,
            };
            let work = cli
                .out
                .unwrap_or_else(|| std::env::temp_dir().join("cechlab-verify"));
            let results = run_suite(scale, &work)?;
            Ok(if suite_passed(&results) { 0 } else { 1 })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
