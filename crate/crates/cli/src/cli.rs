//! Command-line surface: generation, embedding, graph construction,
//! reconstruction, the scaling experiments, and graph validation.
//!
//! Exit codes: 0 on success, 1 when `validate` finds a violated invariant,
//! 2 on bad input or usage errors.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nsmds_core::cmds::cmds_embed;
use nsmds_core::geometry::{squared_distance_matrix, structural_loss, PointCloud};
use nsmds_core::graph::{
    build_anchor_graph, edge_connectivity_at_least, generic_rigidity_2d, rho_default, AnchorGraph,
};
use nsmds_core::io;
use nsmds_core::noise::{bias_matrix, debias, perturb_distances, NoiseSpec};
use nsmds_core::reconstruct::{quick_mds, reconstruct};
use nsmds_core::SquaredDistanceMatrix;

use crate::experiments::{
    run_cost_scaling, run_degenerate_gap, run_noise_scaling, ExperimentConfig, StrategyChoice,
    REPORT_SCHEMA,
};
use crate::generators::{generate, Generator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "nsmds",
    version,
    about = "Noise-stable multidimensional scaling: embedding, anchor graphs, reconstruction and scaling experiments"
)]
pub struct Cli {
    /// Seed for every randomized step of the invoked command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Primary output path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Serialization format for point clouds.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic point cloud.
    Gen {
        #[arg(long, value_enum)]
        generator: Generator,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Classical MDS embedding of a distance matrix (or of a cloud's
    /// distances), optionally under fresh Gaussian noise with debiasing.
    Cmds {
        /// Cloud CSV input: distances are computed from it.
        #[arg(long, conflicts_with = "sdm")]
        cloud: Option<PathBuf>,
        /// Squared-distance-matrix CSV input.
        #[arg(long)]
        sdm: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Uniform noise level applied before embedding (0 = clean).
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// Ground-truth cloud; when given, the structural loss is printed.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Build an anchor graph from a cloud (synthetic mode: true distances
    /// drive selection; observations can carry noise).
    BuildGraph {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Anchor count; defaults to max(k+2, ceil(n^{k/(2k+1)})).
        #[arg(long)]
        rho: Option<usize>,
        #[arg(long, value_enum, default_value_t = StrategyChoice::Nearest)]
        strategy: StrategyChoice,
        /// Observation noise on edge lengths.
        #[arg(long, default_value_t = 0.0, conflicts_with = "noise_spec")]
        sigma: f64,
        /// Noise spec JSON ({"sigma_uniform": s, "seed": u64} or
        /// {"sigma_matrix_csv": path, "seed": u64}).
        #[arg(long)]
        noise_spec: Option<PathBuf>,
        /// Stable-selection slack as a multiple of the sampling radius.
        #[arg(long, default_value_t = 1.0)]
        delta_factor: f64,
    },
    /// Two-stage reconstruction from an anchor graph file.
    Reconstruct {
        #[arg(long)]
        graph: PathBuf,
        /// Ground-truth cloud for loss fields.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Noise level of the recorded observations; enables stage-1
        /// debiasing with sigma^2.
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// Where to write the reconstructed cloud.
        #[arg(long)]
        cloud_out: Option<PathBuf>,
    },
    /// Randomized fast embedding from a full distance matrix.
    QuickMds {
        #[arg(long, conflicts_with = "sdm")]
        cloud: Option<PathBuf>,
        #[arg(long)]
        sdm: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        cloud_out: Option<PathBuf>,
    },
    /// Noise-scaling experiment: loss of debiased cMDS across sizes.
    NoiseScaling {
        #[arg(long, value_enum, default_value_t = Generator::UniformDisk)]
        generator: Generator,
        /// Comma-separated ascending sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0.45)]
        zeta: f64,
    },
    /// Cost-scaling experiment: anchor-graph total edge length across sizes.
    CostScaling {
        #[arg(long, value_enum, default_value_t = Generator::UniformDisk)]
        generator: Generator,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value_t = StrategyChoice::Nearest)]
        strategy: StrategyChoice,
        #[arg(long, default_value_t = 1.0)]
        delta_factor: f64,
    },
    /// Observation run on the equal-eigenvalue curve family.
    DegenerateGap {
        #[arg(long, value_delimiter = ',', default_value = "400")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Check epsilon-net, rigidity and connectivity invariants of a graph
    /// file; exits 1 on any failure.
    Validate {
        #[arg(long)]
        graph: PathBuf,
        /// Relative slack for the length-based net checks.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// Runs a parsed invocation; the returned integer is the process exit code.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Gen { generator, n, k } => {
            let out = require_out(&cli.out, "gen")?;
            let cloud = generate(generator, n, k, cli.seed)?;
            write_cloud(&out, &cloud, cli.format)?;
            println!("wrote {} points (k = {k}) to {}", cloud.len(), out.display());
            Ok(0)
        }
        Command::Cmds {
            cloud,
            sdm,
            k,
            sigma,
            truth,
        } => {
            let out = require_out(&cli.out, "cmds")?;
            let d = load_distances(cloud.as_deref(), sdm.as_deref())?;
            let d = if sigma > 0.0 {
                let spec = NoiseSpec::uniform(d.size(), sigma, cli.seed)?;
                let noisy = perturb_distances(&d, &spec)?.sdm;
                debias(&noisy, &bias_matrix(&spec))?
            } else {
                d
            };
            let embed = cmds_embed(&d, k)?;
            write_cloud(&out, &embed.cloud, cli.format)?;
            if let Some(truth_path) = truth {
                let truth = io::load_cloud_csv(&truth_path)?;
                let (loss, _) = structural_loss(&embed.cloud, &truth)?;
                println!("{}", serde_json::json!({ "loss": loss }));
            }
            Ok(0)
        }
        Command::BuildGraph {
            cloud,
            k,
            rho,
            strategy,
            sigma,
            noise_spec,
            delta_factor,
        } => {
            let out = require_out(&cli.out, "build-graph")?;
            let p = io::load_cloud_csv(&cloud)?;
            let d_true = squared_distance_matrix(&p);
            let spec = match &noise_spec {
                Some(path) => {
                    let file: io::NoiseSpecFile = io::load_json(path)?;
                    let base = path.parent().unwrap_or_else(|| Path::new("."));
                    Some(io::resolve_noise_spec(&file, d_true.size(), base)?)
                }
                None if sigma > 0.0 => {
                    Some(NoiseSpec::uniform(d_true.size(), sigma, cli.seed)?)
                }
                None => None,
            };
            let d_obs = match &spec {
                Some(spec) => perturb_distances(&d_true, spec)?.sdm,
                None => d_true.clone(),
            };
            let rho = match rho {
                Some(r) => r,
                None => rho_default(p.len(), k)?,
            };
            let strategy =
                crate::experiments::resolve_strategy(strategy, &d_true, rho, cli.seed, delta_factor)?;
            let g = build_anchor_graph(&d_true, &d_obs, k, rho, strategy)?;
            io::save_graph_json(&out, &g)?;
            println!(
                "wrote graph: n = {}, anchors = {}, edges = {}, e = {:.6}",
                g.n(),
                g.anchors().len(),
                g.edge_count(),
                g.meta.sampling_radius
            );
            Ok(0)
        }
        Command::Reconstruct {
            graph,
            truth,
            sigma,
            cloud_out,
        } => {
            let out = require_out(&cli.out, "reconstruct")?;
            let g = io::load_graph_json(&graph)?;
            let truth_cloud = truth.map(|p| io::load_cloud_csv(&p)).transpose()?;
            let bias = if sigma > 0.0 {
                bias_matrix(&NoiseSpec::uniform(g.n(), sigma, cli.seed)?)
            } else {
                nsmds_core::noise::BiasMatrix::zeros(g.n())
            };
            let report = reconstruct(&g, &bias, g.k(), truth_cloud.as_ref())?;
            if let Some(path) = cloud_out {
                write_cloud(&path, &report.cloud, cli.format)?;
            }
            io::save_json(
                &out,
                &serde_json::json!({ "schema": REPORT_SCHEMA, "report": report }),
            )?;
            println!(
                "reconstructed {} points; loss = {}",
                report.cloud.len(),
                report
                    .loss
                    .map(|l| l.to_string())
                    .unwrap_or_else(|| "n/a (no ground truth)".into())
            );
            Ok(0)
        }
        Command::QuickMds {
            cloud,
            sdm,
            k,
            cloud_out,
        } => {
            let out = require_out(&cli.out, "quick-mds")?;
            let d = load_distances(cloud.as_deref(), sdm.as_deref())?;
            let report = quick_mds(&d, k, cli.seed)?;
            if let Some(path) = cloud_out {
                write_cloud(&path, &report.cloud, cli.format)?;
            }
            io::save_json(
                &out,
                &serde_json::json!({ "schema": REPORT_SCHEMA, "report": report }),
            )?;
            println!(
                "quick-mds placed {} points in {:.3}s",
                report.cloud.len(),
                report.timings.total_s
            );
            Ok(0)
        }
        Command::NoiseScaling {
            generator,
            n,
            k,
            sigma,
            trials,
            zeta,
        } => {
            let out = require_out(&cli.out, "noise-scaling")?;
            let config = ExperimentConfig {
                generator,
                n_list: n,
                k,
                sigma,
                trials,
                seed: cli.seed,
                strategy: StrategyChoice::Nearest,
                zeta,
                delta_factor: 1.0,
            };
            let report = run_noise_scaling(&config)?;
            io::save_json(&out, &report)?;
            match &report.fit {
                Some(fit) => println!(
                    "noise scaling: slope = {:.4}, r^2 = {:.4}",
                    fit.slope, fit.r_squared
                ),
                None => println!("noise scaling: fit skipped"),
            }
            Ok(0)
        }
        Command::CostScaling {
            generator,
            n,
            k,
            strategy,
            delta_factor,
        } => {
            let out = require_out(&cli.out, "cost-scaling")?;
            let config = ExperimentConfig {
                generator,
                n_list: n,
                k,
                sigma: 0.0,
                trials: 1,
                seed: cli.seed,
                strategy,
                zeta: 0.45,
                delta_factor,
            };
            let report = run_cost_scaling(&config)?;
            io::save_json(&out, &report)?;
            println!(
                "cost scaling: slope = {:.4}, r^2 = {:.4}",
                report.fit.slope, report.fit.r_squared
            );
            Ok(0)
        }
        Command::DegenerateGap { n, sigma, trials } => {
            let out = require_out(&cli.out, "degenerate-gap")?;
            let config = ExperimentConfig {
                generator: Generator::CurveCardioid,
                n_list: n,
                k: 2,
                sigma,
                trials,
                seed: cli.seed,
                strategy: StrategyChoice::Nearest,
                zeta: 0.45,
                delta_factor: 1.0,
            };
            let report = run_degenerate_gap(&config)?;
            io::save_json(&out, &report)?;
            for row in &report.rows {
                println!(
                    "n = {}: gap ratio = {:.2e}, median loss = {:.6}",
                    row.n, row.gap_ratio, row.median_loss
                );
            }
            Ok(0)
        }
        Command::Validate { graph, tol } => {
            let g = io::load_graph_json(&graph)?;
            let report = validate_graph(&g, tol);
            let text = serde_json::to_string_pretty(&report)?;
            match &cli.out {
                Some(path) => {
                    std::fs::write(path, format!("{text}\n"))?;
                }
                None => println!("{text}"),
            }
            Ok(if report.pass { 0 } else { 1 })
        }
    }
}

fn require_out(out: &Option<PathBuf>, command: &str) -> anyhow::Result<PathBuf> {
    out.clone()
        .ok_or_else(|| anyhow!("--out is required for {command}"))
}

fn load_distances(
    cloud: Option<&Path>,
    sdm: Option<&Path>,
) -> anyhow::Result<SquaredDistanceMatrix> {
    match (cloud, sdm) {
        (Some(path), None) => {
            let p = io::load_cloud_csv(path)
                .with_context(|| format!("reading cloud {}", path.display()))?;
            Ok(squared_distance_matrix(&p))
        }
        (None, Some(path)) => io::load_sdm_csv(path)
            .with_context(|| format!("reading distance matrix {}", path.display())),
        _ => bail!("exactly one of --cloud or --sdm is required"),
    }
}

fn write_cloud(path: &Path, cloud: &PointCloud, format: Format) -> anyhow::Result<()> {
    match format {
        Format::Csv => io::save_cloud_csv(path, cloud)?,
        Format::Json => io::save_cloud_json(path, cloud)?,
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub schema: u32,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

/// Runs the invariant suite on a loaded graph: edge-count identity, the
/// epsilon-net inequalities on recorded lengths, the (2,3)-pebble game and
/// (k+1)-vertex-connectivity.
pub fn validate_graph(g: &AnchorGraph, tol: f64) -> ValidationReport {
    let mut checks = Vec::new();
    let n = g.n();
    let k = g.k();
    let rho = g.anchors().len();
    let e = g.meta.sampling_radius;

    let uniform_degree = g.locals().iter().all(|s| s.edges.len() == k + 1);
    if uniform_degree {
        let expected = rho * (rho - 1) / 2 + (k + 1) * (n - rho);
        checks.push(CheckResult {
            name: "edge-count-identity".into(),
            pass: g.edge_count() == expected,
            detail: format!("|E| = {}, expected {}", g.edge_count(), expected),
        });
    } else {
        checks.push(CheckResult {
            name: "edge-count-identity".into(),
            pass: true,
            detail: "skipped: local degrees are not uniform".into(),
        });
    }

    let min_global = g
        .global_edges()
        .iter()
        .map(|&(_, _, d)| d)
        .fold(f64::INFINITY, f64::min);
    checks.push(CheckResult {
        name: "epsnet-sparse".into(),
        pass: min_global >= e * (1.0 - tol),
        detail: format!("min anchor distance {min_global}, radius {e}"),
    });

    if g.meta.strategy == "random" {
        checks.push(CheckResult {
            name: "epsnet-cover".into(),
            pass: true,
            detail: "skipped: random local edges need not include the nearest anchor".into(),
        });
    } else {
        let worst = g
            .locals()
            .iter()
            .map(|s| {
                s.edges
                    .iter()
                    .map(|&(_, d)| d)
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0_f64, f64::max);
        checks.push(CheckResult {
            name: "epsnet-cover".into(),
            pass: worst <= e * (1.0 + tol),
            detail: format!("max nearest-anchor distance {worst}, radius {e}"),
        });
    }

    if k == 2 {
        checks.push(CheckResult {
            name: "rigidity-pebble-game".into(),
            pass: generic_rigidity_2d(n, &g.edge_list()),
            detail: "spanning Laman subgraph".into(),
        });
    }

    checks.push(CheckResult {
        name: "vertex-connectivity".into(),
        pass: edge_connectivity_at_least(n, &g.edge_list(), k + 1),
        detail: format!("required connectivity {}", k + 1),
    });

    let pass = checks.iter().all(|c| c.pass);
    ValidationReport {
        schema: REPORT_SCHEMA,
        pass,
        checks,
    }
}
