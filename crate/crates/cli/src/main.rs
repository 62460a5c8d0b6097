mod artifact;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "cmin",
    version,
    about = "Harvest compact minimal sets of flows and diagnose their stability"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the run config. A config file given with `--config`
/// overrides them.
#[derive(Args, Debug, Default, Clone)]
pub struct RunFlags {
    /// TOML run config; its values override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Gallery flow: pendulum, v_lambda, hopf, nested_rings, north_south.
    #[arg(long)]
    pub flow: Option<String>,
    /// Rotation profile of v_lambda: `p/q`, a number, `golden` or `identity`.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Rings 1/n the nested_rings grid resolves.
    #[arg(long)]
    pub rings: Option<usize>,
    /// Sphere dimension of north_south.
    #[arg(long)]
    pub sphere_dim: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Net resolution of every sample.
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub window: Option<f64>,
    /// Sampling interval of limit estimates.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub dedup_eps: Option<f64>,
    #[arg(long)]
    pub mesh: Option<f64>,
    /// Comma-separated decreasing shell radii.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Confinement factor κ.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Stability horizon.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub shell_samples: Option<usize>,
    #[arg(long)]
    pub hyper_radius: Option<f64>,
    /// Topology scales as `eps:delta` pairs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<String>>,
    /// Seed of the shell sampler.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Harvest the space of compact minimal sets from the seed grid.
    Harvest {
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Test stability and hyper-stability of every record.
    Classify {
        /// Output of `harvest`.
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Local-connectedness diagnostics and the dense criterion.
    Diagnose {
        /// Output of `harvest`.
        #[arg(long)]
        space: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Compare topological predictions with the dynamical verdicts.
    Crossvalidate {
        /// Output of `classify`.
        #[arg(long)]
        classified: PathBuf,
        /// Output of `diagnose`.
        #[arg(long)]
        diagnosed: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// List or run gallery entries against their expectations.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
    /// Export an orbit as CSV.
    Orbit {
        /// Comma-separated starting point.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Vec<f64>,
        /// Length of the orbit segment.
        #[arg(long)]
        span: f64,
        /// Sampling interval.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// CSV file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Export the distance matrix of a harvested space as CSV.
    Dmatrix {
        #[arg(long)]
        space: PathBuf,
        /// CSV file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum GalleryAction {
    List,
    Run {
        /// Entry name; `v_lambda` runs its three rotation profiles.
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        all: bool,
        /// Directory for per-entry reports.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Harvest { flags } => commands::harvest(&flags),
        Command::Classify { space, flags } => commands::classify(&space, &flags),
        Command::Diagnose { space, flags } => commands::diagnose(&space, &flags),
        Command::Crossvalidate {
            classified,
            diagnosed,
            out,
        } => commands::crossvalidate(&classified, &diagnosed, out.as_deref()),
        Command::Gallery { action } => match action {
            GalleryAction::List => commands::gallery_list(),
            GalleryAction::Run { name, all, out } => {
                commands::gallery_run(name.as_deref(), all, out.as_deref())
            }
        },
        Command::Orbit {
            point,
            span,
            step,
            output,
            flags,
        } => commands::orbit(&point, span, step, output.as_deref(), &flags),
        Command::Dmatrix { space, output } => commands::dmatrix(&space, output.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
