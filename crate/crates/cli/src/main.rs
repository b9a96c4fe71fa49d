use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use graphenergy::dynamics::{heat_trajectory, walk_trajectory};
use graphenergy::fixtures::random_features;
use graphenergy::gnn::{forward_with, init_stack, Activation, Arch, ForwardOptions};
use graphenergy::io::{self, write_atomic};
use graphenergy::verify::{all_pass, run_verify};
use graphenergy::{eigendecompose, energy_report, graph_stats, NodeFunction, Preset, WeightedGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "graphenergy",
    version,
    about = "Energies, spectra and diffusion on weighted graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list, one `i<TAB>j<TAB>omega` per line.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, conflicts_with = "measure")]
    preset: Option<Preset>,
    /// Node measure, one `i<TAB>mu` per line.
    #[arg(long)]
    measure: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeatureArgs {
    /// Dense CSV, one row per node. Random U[-1, 1] features when omitted.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Width of generated features.
    #[arg(long, default_value_t = 1)]
    width: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Graph statistics as JSON.
    Inspect {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Eigenvalues of `−Δ_μ` as `k,alpha_k`.
    Spectrum {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Energies `E_m` and `γ_m` for the requested orders.
    Energy {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long, value_delimiter = ',', value_parser = parse_order, default_value = "0,1,2")]
        orders: Vec<u32>,
    },
    /// Every identity and inequality as a CSV; exits 0 only if all pass.
    Verify {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        features: FeatureArgs,
    },
    /// Exact heat flow sampled at the given times.
    Diffuse {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
        times: Vec<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_order, default_value = "0,1,2")]
        orders: Vec<u32>,
    },
    /// Random walk `P_μ = Δ_μ + I` for `k = 0..=steps`.
    Walk {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        features: FeatureArgs,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, value_delimiter = ',', value_parser = parse_order, default_value = "0,1,2")]
        orders: Vec<u32>,
    },
    /// Untrained GCN/GAT forward pass with per-layer energies.
    Gnn {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, default_value = "gcn")]
        arch: Arch,
        #[arg(long, default_value_t = 64)]
        depth: usize,
        #[arg(long, default_value_t = 16)]
        width: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "relu")]
        activation: Activation,
        #[arg(long, default_value_t = 0.5)]
        tail_fraction: f64,
        /// JSON summary path; defaults to `<out>.json`, or stderr without `--out`.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn parse_order(s: &str) -> Result<u32, String> {
    let v: i64 = s.trim().parse().map_err(|_| format!("invalid order `{s}`"))?;
    if v < 0 {
        return Err(format!("negative order {v}"));
    }
    u32::try_from(v).map_err(|_| format!("order {v} is too large"))
}

impl GraphArgs {
    fn load(&self) -> Result<WeightedGraph> {
        io::load_graph(&self.graph, self.measure.as_deref(), self.preset)
            .with_context(|| format!("loading {}", self.graph.display()))
    }

    /// Topology only; weights and measure are rebuilt by the layer.
    fn load_topology(&self) -> Result<graphenergy::Topology> {
        let g = match (&self.measure, self.preset) {
            (None, None) => io::load_graph(&self.graph, None, Some(Preset::Adj)),
            _ => io::load_graph(&self.graph, self.measure.as_deref(), self.preset),
        };
        Ok(g.with_context(|| format!("loading {}", self.graph.display()))?
            .topology())
    }

    fn emit(&self, contents: &str) -> Result<()> {
        emit(self.out.as_deref(), contents)
    }
}

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

impl FeatureArgs {
    fn load(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<NodeFunction> {
        let f = match &self.features {
            Some(p) => io::load_features(p).with_context(|| format!("loading {}", p.display()))?,
            None => {
                if self.width == 0 {
                    bail!("--width must be positive");
                }
                random_features(rng, n, self.width)
            }
        };
        if f.n() != n {
            bail!("features have {} rows but the graph has {n} nodes", f.n());
        }
        Ok(f)
    }
}

/// Returns `Ok(false)` when a verify check fails.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Inspect { graph } => {
            let g = graph.load()?;
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "n": g.n(),
                "edges": g.edge_count(),
                "stats": graph_stats(&g),
            }))?;
            s.push('\n');
            graph.emit(&s)?;
        }
        Command::Spectrum { graph } => {
            let g = graph.load()?;
            graph.emit(&io::spectrum_csv(&eigendecompose(&g)?))?;
        }
        Command::Energy {
            graph,
            features,
            orders,
        } => {
            let g = graph.load()?;
            let mut rng = ChaCha8Rng::seed_from_u64(features.seed);
            let f = features.load(g.n(), &mut rng)?;
            graph.emit(&io::energy_csv(&energy_report(&g, &f, &orders)?))?;
        }
        Command::Verify { graph, features } => {
            let g = graph.load()?;
            let mut rng = ChaCha8Rng::seed_from_u64(features.seed);
            let f = features.load(g.n(), &mut rng)?;
            let h = random_features(&mut rng, g.n(), f.dim());
            let rows = run_verify(&g, &f, &h)?;
            graph.emit(&io::checks_csv(&rows))?;
            return Ok(all_pass(&rows));
        }
        Command::Diffuse {
            graph,
            features,
            times,
            orders,
        } => {
            let g = graph.load()?;
            let mut rng = ChaCha8Rng::seed_from_u64(features.seed);
            let f = features.load(g.n(), &mut rng)?;
            let sd = eigendecompose(&g)?;
            graph.emit(&io::trajectory_csv(&heat_trajectory(
                &g, &sd, &f, &times, &orders, false,
            )?))?;
        }
        Command::Walk {
            graph,
            features,
            steps,
            orders,
        } => {
            let g = graph.load()?;
            let mut rng = ChaCha8Rng::seed_from_u64(features.seed);
            let f = features.load(g.n(), &mut rng)?;
            let sd = eigendecompose(&g)?;
            graph.emit(&io::trajectory_csv(&walk_trajectory(
                &g, &sd, &f, steps, &orders, false,
            )?))?;
        }
        Command::Gnn {
            graph,
            features,
            arch,
            depth,
            width,
            seed,
            activation,
            tail_fraction,
            summary,
        } => {
            let topology = graph.load_topology()?;
            let n = topology.n();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0 = match &features {
                Some(p) => io::load_features(p).with_context(|| format!("loading {}", p.display()))?,
                None => random_features(&mut rng, n, width),
            };
            if x0.n() != n {
                bail!("features have {} rows but the graph has {n} nodes", x0.n());
            }
            let mut dims = vec![width; depth + 1];
            dims[0] = x0.dim();
            let stack = init_stack(arch, depth, &dims, seed, activation)?;
            let options = ForwardOptions {
                tail_fraction,
                keep_layers: false,
            };
            let out = forward_with(&topology, &stack, &x0, &[0, 1, 2], options)?;
            graph.emit(&io::gnn_csv(&out.report))?;
            let json = io::gnn_summary_json(&out.report);
            let summary_path = summary.or_else(|| {
                graph.out.as_ref().map(|p| {
                    let mut s = p.clone().into_os_string();
                    s.push(".json");
                    PathBuf::from(s)
                })
            });
            match summary_path {
                Some(p) => write_atomic(&p, &json).with_context(|| format!("writing {}", p.display()))?,
                None => eprint!("{json}"),
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
