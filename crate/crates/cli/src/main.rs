//! Command-line front end: resolve a configuration, run verification or
//! Monte Carlo sweeps, and emit comma-delimited tables.
//!
//! Exit codes: 0 success, 1 failed verification checks, 2 configuration or
//! flag errors (with the offending key named), 3 numerical or I/O failures.
//! Output bytes are deterministic given (config, seed, trials): every row
//! carries the fully resolved configuration, means and standard errors in
//! both block and per-s/Hz units, and the closed-form bound columns, so a
//! table can be re-plotted or diffed without knowing how it was produced.

use std::fmt;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use an_sim_core::asymptotics::BoundReport;
use an_sim_core::montecarlo::{run_sweep, SweepParam, SweepRow, TrialPlan, DEFAULT_TRIALS};
use an_sim_core::ofdm::SystemConfig;
use an_sim_core::rates::{EveStrategy, RateReport};
use an_sim_core::verify;
use clap::{Parser, Subcommand};

/// Reference setup: 64 subcarriers, CP covering a 16-tap delay spread,
/// 4 transmit / 2 receive / 2 eavesdropper antennas, 2 streams, 20 dB links,
/// an even data/noise power split. All keys match the config-file schema.
const DEFAULT_CONFIG: &str = "\
n = 64
n_cp = 16
nu = 16
n_a = 4
n_b = 2
n_e = 2
n_s = 2
gamma_bob_db = 20.0
gamma_eve_db = 20.0
var_ab = 1.0
var_ae = 1.0
theta = 0.5
alpha = 0.5
";

#[derive(Parser)]
#[command(
    name = "an-sim",
    version,
    about = "Secrecy-rate simulator for hybrid spatial/temporal artificial noise",
    after_help = "Configuration layering: built-in defaults, then --config, then (for the \
fig presets) the preset's pinned parameters, then --set overrides, then validation. \
AN_SIM_THREADS caps worker parallelism."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// TOML configuration file (defaults to the built-in reference setup)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file (default: stdout for sweep/bounds, <preset>.csv for figs)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Trials per sweep point (default 200; fig2 uses 400)
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,

    /// Master seed; per-trial seeds are derived from it
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    seed: u64,

    /// Override one config key, e.g. --set theta=0.7 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Eavesdropper processing model
    #[arg(long, global = true, value_name = "joint|persub|worst")]
    eve: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every named self-check over a small built-in grid (plus --config if given)
    Verify,
    /// Monte Carlo at the resolved config, optionally swept over one parameter
    Sweep {
        /// Parameter to sweep
        #[arg(long, value_name = "n_e|n_a|theta|alpha|gamma_db")]
        param: Option<String>,
        /// Comma-separated sweep values, e.g. 0.1,0.2,0.5
        #[arg(long, value_name = "V1,V2,…")]
        grid: Option<String>,
    },
    /// Print the closed-form bound report for the resolved config
    Bounds,
    /// Preset: secrecy vs. eavesdropper antennas (1..8) for 2 and 4 transmit antennas
    Fig2,
    /// Preset: secrecy vs. data power fraction θ for three antenna setups
    Fig3,
    /// Preset: secrecy vs. noise split α for 10 and 20 transmit antennas
    Fig4,
}

// ── errors and exit codes ──

enum CliError {
    Core(an_sim_core::Error),
    Flag(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Flag(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<an_sim_core::Error> for CliError {
    fn from(e: an_sim_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Flag(_) => 2,
            CliError::Core(e) if e.is_config() => 2,
            _ => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    init_thread_pool()?;
    let strategy = match &cli.eve {
        Some(name) => EveStrategy::from_name(name)?,
        None => EveStrategy::Joint,
    };
    let base_text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?,
        None => DEFAULT_CONFIG.to_string(),
    };

    match &cli.cmd {
        Cmd::Verify => {
            let mut outcomes = verify::run_suite(cli.seed);
            if cli.config.is_some() {
                let cfg = resolve(&base_text, &cli.set, &[])?;
                outcomes.extend(verify::run_all("config", &cfg, cli.seed));
            }
            let mut failed = 0usize;
            for o in &outcomes {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                println!("{tag} {} — {}", o.name, o.detail);
                failed += usize::from(!o.passed);
            }
            println!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
            Ok(if failed == 0 { 0 } else { 1 })
        }
        Cmd::Sweep { param, grid } => {
            let cfg = resolve(&base_text, &cli.set, &[])?;
            let sweep_param = param.as_deref().map(SweepParam::from_name).transpose()?;
            let grid = grid.as_deref().map(parse_grid).transpose()?.unwrap_or_default();
            let plan = TrialPlan {
                base: cfg,
                n_trials: cli.trials.unwrap_or(DEFAULT_TRIALS),
                master_seed: cli.seed,
                sweep_param,
                grid,
                strategy,
            };
            let result = run_sweep(&plan)?;
            let table = render_rows(result.param, strategy, &result.rows);
            emit(cli.out.as_deref(), &table)?;
            Ok(0)
        }
        Cmd::Bounds => {
            let cfg = resolve(&base_text, &cli.set, &[])?;
            let table = render_bounds(&cfg);
            emit(cli.out.as_deref(), &table)?;
            Ok(0)
        }
        Cmd::Fig2 => {
            // Eavesdropper-antenna sweep; the 2-antenna transmitter has no
            // spare spatial dimensions, so its noise budget is all-temporal.
            let blocks = [
                vec![("n_a", "4"), ("alpha", "0.5")],
                vec![("n_a", "2"), ("alpha", "0.0")],
            ];
            let grid: Vec<f64> = (1..=8).map(|v| v as f64).collect();
            let trials = cli.trials.unwrap_or(400);
            let table =
                run_preset(&cli, &base_text, &blocks, SweepParam::NE, &grid, trials, strategy)?;
            emit(Some(cli.out.as_deref().unwrap_or(std::path::Path::new("fig2.csv"))), &table)?;
            Ok(0)
        }
        Cmd::Fig3 => {
            let blocks = [
                vec![("n_e", "4"), ("n_a", "3"), ("alpha", "0.5")],
                vec![("n_e", "2"), ("n_a", "10"), ("alpha", "0.5")],
                vec![("n_e", "2"), ("n_a", "20"), ("alpha", "0.5")],
            ];
            let grid: Vec<f64> = (1..=19).map(|v| v as f64 * 0.05).collect();
            let trials = cli.trials.unwrap_or(DEFAULT_TRIALS);
            let table =
                run_preset(&cli, &base_text, &blocks, SweepParam::Theta, &grid, trials, strategy)?;
            emit(Some(cli.out.as_deref().unwrap_or(std::path::Path::new("fig3.csv"))), &table)?;
            Ok(0)
        }
        Cmd::Fig4 => {
            let blocks = [
                vec![("n_e", "2"), ("n_a", "10"), ("theta", "0.5")],
                vec![("n_e", "2"), ("n_a", "20"), ("theta", "0.5")],
            ];
            let grid: Vec<f64> = (0..=10).map(|v| v as f64 / 10.0).collect();
            let trials = cli.trials.unwrap_or(DEFAULT_TRIALS);
            let table =
                run_preset(&cli, &base_text, &blocks, SweepParam::Alpha, &grid, trials, strategy)?;
            emit(Some(cli.out.as_deref().unwrap_or(std::path::Path::new("fig4.csv"))), &table)?;
            Ok(0)
        }
    }
}

fn init_thread_pool() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("AN_SIM_THREADS") {
        let k: usize = v
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| CliError::Flag(format!("AN_SIM_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    Ok(())
}

// ── configuration resolution ──

/// Parse the config text, pin preset keys, apply `--set` overrides, validate.
/// Unknown keys and type mismatches surface as named config errors.
fn resolve(base_text: &str, sets: &[String], pins: &[(&str, &str)]) -> Result<SystemConfig, CliError> {
    let mut table: toml::Table = base_text.parse().map_err(|e: toml::de::Error| {
        CliError::Core(an_sim_core::Error::ConfigFile {
            path: "<config>".to_string(),
            message: e.to_string(),
        })
    })?;
    for (key, value) in pins {
        table.insert((*key).to_string(), parse_value(value));
    }
    for s in sets {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| CliError::Flag(format!("--set expects key=value, got {s:?}")))?;
        table.insert(key.trim().to_string(), parse_value(value.trim()));
    }
    Ok(SystemConfig::from_config_str(&table.to_string())?)
}

/// Interpret an override value as a TOML literal; anything that isn't one
/// becomes a string and fails downstream with the key named.
fn parse_value(v: &str) -> toml::Value {
    format!("v = {v}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()))
}

fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Flag(format!("--grid value {tok:?} is not a number")))
        })
        .collect()
}

/// Run one preset: the same sweep over several pinned configuration blocks,
/// all sharing the master seed, concatenated into one table.
fn run_preset(
    cli: &Cli,
    base_text: &str,
    blocks: &[Vec<(&str, &str)>],
    param: SweepParam,
    grid: &[f64],
    trials: usize,
    strategy: EveStrategy,
) -> Result<String, CliError> {
    let common: [(&str, &str); 9] = [
        ("n", "64"),
        ("n_cp", "16"),
        ("nu", "16"),
        ("n_b", "2"),
        ("n_s", "2"),
        ("gamma_bob_db", "20.0"),
        ("gamma_eve_db", "20.0"),
        ("var_ab", "1.0"),
        ("var_ae", "1.0"),
    ];
    let mut rows = Vec::new();
    for block in blocks {
        let mut pins: Vec<(&str, &str)> = common.to_vec();
        pins.extend(block.iter().copied());
        let cfg = resolve(base_text, &cli.set, &pins)?;
        let plan = TrialPlan {
            base: cfg,
            n_trials: trials,
            master_seed: cli.seed,
            sweep_param: Some(param),
            grid: grid.to_vec(),
            strategy,
        };
        rows.extend(run_sweep(&plan)?.rows);
    }
    Ok(render_rows(Some(param), strategy, &rows))
}

// ── table rendering ──

const CONFIG_COLUMNS: [&str; 14] = [
    "n", "n_cp", "nu", "n_a", "n_b", "n_e", "n_s", "gamma_bob", "gamma_eve", "var_ab", "var_ae",
    "theta", "alpha", "exact_cp_power",
];

fn push_config(out: &mut String, c: &SystemConfig) {
    use fmt::Write as _;
    let _ = write!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        c.n, c.n_cp, c.nu, c.n_a, c.n_b, c.n_e, c.n_s, c.gamma_bob, c.gamma_eve, c.var_ab,
        c.var_ae, c.theta, c.alpha, c.exact_cp_power
    );
}

fn render_rows(param: Option<SweepParam>, strategy: EveStrategy, rows: &[SweepRow]) -> String {
    use fmt::Write as _;
    let mut out = String::new();
    out.push_str("sweep_param,sweep_value");
    for name in RateReport::FIELD_NAMES {
        let _ = write!(out, ",mean_{name}");
    }
    for name in RateReport::FIELD_NAMES {
        let _ = write!(out, ",mean_{name}_per_shz");
    }
    for name in RateReport::FIELD_NAMES {
        let _ = write!(out, ",stderr_{name}");
    }
    for name in RateReport::FIELD_NAMES {
        let _ = write!(out, ",stderr_{name}_per_shz");
    }
    for name in BoundReport::FIELD_NAMES {
        let _ = write!(out, ",{name}");
    }
    out.push_str(",n_trials,master_seed,eve_strategy,");
    out.push_str(&CONFIG_COLUMNS.join(","));
    out.push('\n');

    for row in rows {
        match (param, row.value) {
            (Some(p), Some(v)) => {
                let _ = write!(out, "{},{v}", p.name());
            }
            _ => out.push(','),
        }
        let s = &row.summary;
        for group in [s.mean, s.mean.per_shz(&row.config), s.stderr, s.stderr.per_shz(&row.config)]
        {
            for v in group.to_array() {
                let _ = write!(out, ",{v}");
            }
        }
        for v in s.bounds.to_array() {
            let _ = write!(out, ",{v}");
        }
        let _ = write!(out, ",{},{},{},", s.n_trials, s.master_seed, strategy.name());
        push_config(&mut out, &row.config);
        out.push('\n');
    }
    out
}

fn render_bounds(cfg: &SystemConfig) -> String {
    use fmt::Write as _;
    let mut out = String::new();
    out.push_str(&BoundReport::FIELD_NAMES.join(","));
    out.push(',');
    out.push_str(&CONFIG_COLUMNS.join(","));
    out.push('\n');
    for (i, v) in BoundReport::compute(cfg).to_array().into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push(',');
    push_config(&mut out, cfg);
    out.push('\n');
    out
}

fn emit(path: Option<&std::path::Path>, table: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, table)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(table.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    }
}
