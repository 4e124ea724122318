use clap::{Args, Parser, Subcommand, ValueEnum};
use epivax::analysis::{EffectivenessEncoding, SensitivityParameter};
use epivax::harness::{dispatch, Command, Method, Preset, RunConfig, WeightOverride};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "epivax", version, about = "Epidemic-aware vaccine allocation and distribution planning")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Random seed (only `gen` draws random numbers)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (a file path for `gen`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feasibility tolerance
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Knapsack,
    Gini,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Tiny,
    Uniform,
    Mid,
    Scale,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    /// Multiplier applies to the vaccinated infection rate
    Ratio,
    /// Multiplier applies to the efficacy 1 - β₁/β
    Efficacy,
}

#[derive(Subcommand)]
enum Cmd {
    /// Recover effective infection rates from observed cases and doses
    Calibrate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        timeseries: PathBuf,
        /// Fractional protection of vaccinated people
        #[arg(long, default_value_t = 0.8)]
        reduction: f64,
        #[arg(long, default_value_t = 0.0)]
        underreporting: f64,
        /// Fill unrecoverable periods by linear interpolation
        #[arg(long)]
        interpolate: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Plan vaccinations and distribution
    Optimize {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "knapsack")]
        method: MethodArg,
        /// λ0,λa,λb,λreg
        #[arg(long, value_parser = parse_weights)]
        weights: Option<WeightOverride>,
        /// Observed cases, for the infections-averted figure
        #[arg(long)]
        timeseries: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate the epidemic under a plan (no vaccination by default)
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        timeseries: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit seasonal ARIMA models to calibrated rates and forecast
    Forecast {
        /// rates.tsv written by `calibrate`
        #[arg(long)]
        rates: PathBuf,
        #[arg(long, default_value_t = 8)]
        m_max: usize,
        #[arg(long, default_value_t = 4)]
        horizon: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Check a scenario, and optionally a plan against it
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// One-at-a-time sensitivity of the knapsack plan
    Sensitivity {
        #[arg(long)]
        scenario: PathBuf,
        /// Parameter to vary; all six when omitted
        #[arg(long, value_parser = parse_parameter)]
        parameter: Option<SensitivityParameter>,
        #[arg(long, value_delimiter = ',', default_value = "0.8,1.2")]
        multipliers: Vec<f64>,
        #[arg(long, value_enum, default_value = "ratio")]
        effectiveness: EncodingArg,
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic scenario
    Gen {
        #[arg(long, value_enum, default_value = "tiny")]
        preset: PresetArg,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_weights(s: &str) -> Result<WeightOverride, String> {
    let v: Vec<f64> =
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"))).collect::<Result<_, _>>()?;
    let arr: [f64; 4] = v.try_into().map_err(|v: Vec<f64>| format!("expected 4 weights, found {}", v.len()))?;
    if arr.iter().any(|w| !w.is_finite()) {
        return Err("weights must be finite".into());
    }
    Ok(WeightOverride(arr))
}

fn parse_parameter(s: &str) -> Result<SensitivityParameter, String> {
    s.parse().map_err(|e: epivax::analysis::AnalysisError| e.to_string())
}

fn config(cli: Cli) -> RunConfig {
    let (command, common) = match cli.command {
        Cmd::Calibrate { scenario, timeseries, reduction, underreporting, interpolate, common } => {
            (Command::Calibrate { scenario, timeseries, reduction, underreporting, interpolate }, common)
        }
        Cmd::Optimize { scenario, method, weights, timeseries, common } => {
            let method = match method {
                MethodArg::Knapsack => Method::Knapsack,
                MethodArg::Gini => Method::Gini,
                MethodArg::Oracle => Method::Oracle,
            };
            (Command::Optimize { scenario, method, weights, timeseries }, common)
        }
        Cmd::Simulate { scenario, plan, timeseries, common } => {
            (Command::Simulate { scenario, plan, timeseries }, common)
        }
        Cmd::Forecast { rates, m_max, horizon, level, common } => {
            (Command::Forecast { rates, m_max, horizon, level }, common)
        }
        Cmd::Validate { scenario, plan, common } => (Command::Validate { scenario, plan }, common),
        Cmd::Sensitivity { scenario, parameter, multipliers, effectiveness, common } => {
            let parameters = parameter.map_or_else(|| SensitivityParameter::ALL.to_vec(), |p| vec![p]);
            let encoding = match effectiveness {
                EncodingArg::Ratio => EffectivenessEncoding::RatioScale,
                EncodingArg::Efficacy => EffectivenessEncoding::EfficacyScale,
            };
            (Command::Sensitivity { scenario, parameters, multipliers, encoding }, common)
        }
        Cmd::Gen { preset, common } => {
            let preset = match preset {
                PresetArg::Tiny => Preset::Tiny,
                PresetArg::Uniform => Preset::UniformRegional,
                PresetArg::Mid => Preset::MidSize,
                PresetArg::Scale => Preset::Scale,
                PresetArg::Random => Preset::RandomSmall,
            };
            (Command::Gen { preset }, common)
        }
    };
    RunConfig { command, seed: common.seed, out: common.out, tolerance: common.tolerance }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match dispatch(&config(cli)) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("epivax: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
