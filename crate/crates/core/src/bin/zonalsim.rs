use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zonalsim::audit::audit_dir;
use zonalsim::sim::{run_scenario, Mode, RunMetrics, RunOutput, ScenarioConfig};

#[derive(Parser)]
#[command(name = "zonalsim", version, about = "Zonal identity authentication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics, trace, dumps and audit reports.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit the dumps of a previous run.
    Audit {
        /// Output directory of a run.
        dir: PathBuf,
    },
    /// Run both modes with one seed and print the traffic table.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Also write both runs under DIR/baseline and DIR/zonal.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration as JSON.
    Config,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the mode in the config.
    #[arg(long, value_parser = ["zonal", "baseline"])]
    mode: Option<String>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p).map_err(|e| e.to_string())?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = &self.mode {
            cfg.mode = mode.parse().map_err(|e: zonalsim::sim::ConfigError| e.to_string())?;
        }
        Ok(cfg)
    }
}

fn run_once(cfg: &ScenarioConfig) -> Result<RunOutput, String> {
    run_scenario(cfg, cfg.seed).map_err(|e| e.to_string())
}

fn write(out: &RunOutput, dir: &Path) -> Result<(), String> {
    out.write_to(dir)
        .map_err(|e| format!("cannot write {}: {e}", dir.display()))
}

const COMPARE_ROWS: [&str; 9] = [
    "auth_attempts",
    "out_of_zone_attempts",
    "cidr_auth_requests",
    "cidr_fetch_requests",
    "zonal_local_hits",
    "zonal_cache_hits",
    "responses_successful",
    "responses_unsuccessful",
    "messages_total",
];

fn compare_table(baseline: &RunMetrics, zonal: &RunMetrics) -> String {
    let b = RunMetrics::parse_pairs(&baseline.to_string());
    let z = RunMetrics::parse_pairs(&zonal.to_string());
    let mut s = format!("{:<24} {:>10} {:>10}\n", "metric", "baseline", "zonal");
    for row in COMPARE_ROWS {
        s.push_str(&format!("{row:<24} {:>10} {:>10}\n", b[row], z[row]));
    }
    let load = |m: &RunMetrics| m.cidr_auth_requests + m.cidr_fetch_requests;
    s.push_str(&format!(
        "{:<24} {:>10} {:>10}\n",
        "cidr_load",
        load(baseline),
        load(zonal)
    ));
    s
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main_inner(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { scenario, out } => {
            let cfg = scenario.load()?;
            let output = run_once(&cfg)?;
            write(&output, &out)?;
            emit(&output.metrics.to_string());
        }
        Command::Audit { dir } => {
            let report = audit_dir(&dir).map_err(|e| e.to_string())?;
            emit(&report.violations_text());
            emit(&report.linkage_text());
            if !report.passed() {
                return Err(format!(
                    "audit failed: {} violations, {} linkage entries",
                    report.violations.len(),
                    report.linkage.entries.len()
                ));
            }
        }
        Command::Compare { scenario, out } => {
            let cfg = scenario.load()?;
            let mut base_cfg = cfg.clone();
            base_cfg.mode = Mode::Baseline;
            let mut zonal_cfg = cfg;
            zonal_cfg.mode = Mode::Zonal;
            let baseline = run_once(&base_cfg)?;
            let zonal = run_once(&zonal_cfg)?;
            let table = compare_table(&baseline.metrics, &zonal.metrics);
            if let Some(dir) = out {
                write(&baseline, &dir.join("baseline"))?;
                write(&zonal, &dir.join("zonal"))?;
                std::fs::write(dir.join("compare.txt"), &table).map_err(|e| e.to_string())?;
            }
            emit(&table);
        }
        Command::Config => emit(&format!("{}\n", ScenarioConfig::default().to_json())),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ZONALSIM_LOG", "warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zonalsim: {e}");
            ExitCode::FAILURE
        }
    }
}
