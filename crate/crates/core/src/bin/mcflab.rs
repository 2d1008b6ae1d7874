use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use mcflab::flow::GConvention;
use mcflab::gaussian::K1Variant;
use mcflab::runner::{
    expand_grid, preset, run_scenario_status, sweep, verify_path, ScenarioConfig, SweepAxis, EXIT_ERROR, PRESETS,
};

#[derive(Parser)]
#[command(name = "mcflab", version, about = "Forced mean curvature flow near round shrinkers: runs and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write series.csv, reports/ and manifest.json.
    Run(Scenario),
    /// Run a parameter grid over a base scenario and write sweep.csv.
    Sweep {
        #[command(flatten)]
        scenario: Scenario,
        /// Swept parameter as a dotted config key, e.g. `forcing.k=0,0.05,0.1`.
        #[arg(long = "param", required = true)]
        params: Vec<String>,
    },
    /// List the built-in presets.
    ListPresets {
        /// Print each preset as TOML.
        #[arg(long)]
        toml: bool,
    },
    /// Re-derive verdicts of a report file or an output directory.
    VerifyReport { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum GArg {
    Paper,
    Derived,
}

#[derive(Clone, Copy, ValueEnum)]
enum K1Arg {
    Paper,
    Derivation,
}

#[derive(Args)]
struct Scenario {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; defaults to the config's, then `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    g_rescaling: Option<GArg>,
    #[arg(long, value_enum)]
    k1_exponent: Option<K1Arg>,
}

impl Scenario {
    fn load(&self) -> Result<(ScenarioConfig, PathBuf), String> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(p), None) => ScenarioConfig::load(p).map_err(|e| format!("{}: {e}", p.display()))?,
            (None, Some(n)) => preset(n).map_err(|e| e.to_string())?,
            _ => return Err("give exactly one of --config or --preset".into()),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(g) = self.g_rescaling {
            cfg.conventions.g_rescaling = match g {
                GArg::Paper => GConvention::Paper,
                GArg::Derived => GConvention::Derived,
            };
        }
        if let Some(k) = self.k1_exponent {
            cfg.conventions.k1_exponent = match k {
                K1Arg::Paper => K1Variant::Paper,
                K1Arg::Derivation => K1Variant::Derivation,
            };
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
        Ok((cfg, out))
    }
}

fn status(code: i32) -> ExitCode {
    ExitCode::from(code.clamp(0, 255) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(sc) => {
            let (cfg, out) = match sc.load() {
                Ok(x) => x,
                Err(e) => {
                    eprintln!("error: {e}");
                    return status(EXIT_ERROR);
                }
            };
            let (code, outcome, err) = run_scenario_status(&cfg, &out);
            if let Some(e) = err {
                eprintln!("error: {e}");
            }
            if let Some(o) = outcome {
                for s in &o.manifest.checks {
                    match (&s.verdict, &s.error) {
                        (Some(v), _) => println!("{:<24} {:<8} min slack {:?}", s.name, format!("{v:?}").to_lowercase(), s.min_slack),
                        (None, Some(e)) => println!("{:<24} error    {e}", s.name),
                        _ => {}
                    }
                }
                if let Some(t) = &o.trajectory.truncation {
                    println!("trajectory truncated at t = {}: {}", t.time, t.reason);
                }
            }
            println!("wrote {} (exit {code})", out.display());
            status(code)
        }
        Command::Sweep { scenario, params } => {
            let run = || -> Result<i32, String> {
                let (cfg, out) = scenario.load()?;
                let axes = params.iter().map(|p| SweepAxis::parse(p)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
                let points = expand_grid(&cfg, &axes).map_err(|e| e.to_string())?;
                let table = sweep(&points, &out).map_err(|e| e.to_string())?;
                print!("{}", table.to_csv());
                Ok(table.rows.iter().map(|r| r.exit_code).max().unwrap_or(0))
            };
            match run() {
                Ok(c) => status(c),
                Err(e) => {
                    eprintln!("error: {e}");
                    status(EXIT_ERROR)
                }
            }
        }
        Command::ListPresets { toml } => {
            for name in PRESETS {
                if toml {
                    match preset(name).and_then(|c| c.to_toml()) {
                        Ok(t) => println!("# {name}\n{t}"),
                        Err(e) => {
                            eprintln!("error: {e}");
                            return status(EXIT_ERROR);
                        }
                    }
                } else {
                    println!("{name}");
                }
            }
            status(0)
        }
        Command::VerifyReport { path } => match verify_path(&path) {
            Ok((checks, code)) => {
                for c in &checks {
                    let state = if c.consistent { "consistent" } else { "INCONSISTENT" };
                    println!("{:<28} {:<8} {state}{}", c.name, format!("{:?}", c.stored).to_lowercase(), c.message.as_deref().map(|m| format!(": {m}")).unwrap_or_default());
                }
                status(code)
            }
            Err(e) => {
                eprintln!("error: {e}");
                status(EXIT_ERROR)
            }
        },
    }
}
