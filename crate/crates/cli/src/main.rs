use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use aodv_core::explorer::{loop_scenario, violation_scenario, InitialTopology};
use aodv_core::report::{explore_json, render_explore, render_run, render_trace, run_json};
use aodv_core::scenario::BUILTINS;
use aodv_core::{
    explore, explore_from, Amb1, Amb2, Amb3, Amb4, DetectionMode, ExploreBounds, ExploreResult,
    InterpretationConfig, Preset, Scenario, ScenarioRun, SnIncrement,
};

#[derive(Parser)]
#[command(name = "aodv", version, about = "Replay and explore AODV routing under different rule interpretations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario file or built-in scenario and check its assertions.
    Run {
        /// Path to a scenario file, or the name of a built-in scenario.
        scenario: String,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exhaustively explore event sequences up to the given bounds.
    Explore {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        bounds: BoundsArgs,
        /// Start from the state reached by this scenario instead of a fresh network.
        #[arg(long, value_name = "SCENARIO")]
        from: Option<String>,
        /// With --from: stop the prefix before this part label.
        #[arg(long, requires = "from", value_name = "LABEL")]
        from_part: Option<String>,
        /// Write every witness as a replayable scenario file into this directory.
        #[arg(long, value_name = "DIR")]
        witness_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// List the named configurations.
    Presets {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Replay the built-in loop construction. Without a configuration it is
    /// run under every preset.
    Figure1 {
        #[arg(long, value_enum, default_value_t = Variant::Plain)]
        variant: Variant,
        /// Print the scenario text instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Default)]
struct ConfigArgs {
    /// Named configuration; individual --amb flags override its axes.
    #[arg(long)]
    preset: Option<Preset>,
    /// Destination number from a route reply: 1a copy, 1b keep fresher.
    #[arg(long)]
    amb1: Option<Amb1>,
    /// Previous-hop entry: 2a no update, 2b overwrite, 2c merge.
    #[arg(long)]
    amb2: Option<Amb2>,
    /// Self-entries: 3a allow, 3b optimal only, 3c drop, 3d forward.
    #[arg(long)]
    amb3: Option<Amb3>,
    /// Route-error number: 4a copy .. 4e if strictly older.
    #[arg(long)]
    amb4: Option<Amb4>,
    /// Own sequence-number increment before a route request (1 or 2).
    #[arg(long)]
    sn_increment: Option<SnIncrement>,
    /// Accepted for scripts; every run is deterministic.
    #[arg(long)]
    seedless: bool,
}

impl ConfigArgs {
    fn is_set(&self) -> bool {
        self.preset.is_some()
            || self.amb1.is_some()
            || self.amb2.is_some()
            || self.amb3.is_some()
            || self.amb4.is_some()
            || self.sn_increment.is_some()
    }

    /// Preset if given, else `base`, with single-axis flags applied on top.
    fn resolve(&self, base: Option<InterpretationConfig>) -> InterpretationConfig {
        let mut cfg = self.preset.map(Preset::config).or(base).unwrap_or_default();
        if let Some(v) = self.amb1 {
            cfg.amb1 = v;
        }
        if let Some(v) = self.amb2 {
            cfg.amb2 = v;
        }
        if let Some(v) = self.amb3 {
            cfg.amb3 = v;
        }
        if let Some(v) = self.amb4 {
            cfg.amb4 = v;
        }
        if let Some(v) = self.sn_increment {
            cfg.rreq_sn_increment = v;
        }
        cfg
    }
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 3)]
    nodes: usize,
    #[arg(long, default_value_t = 8)]
    max_events: usize,
    #[arg(long, default_value_t = 3)]
    max_link_changes: usize,
    #[arg(long, default_value_t = 2)]
    max_route_requests: usize,
    #[arg(long, default_value_t = 4_000_000)]
    state_limit: usize,
    /// Links present before the first event: empty, line or complete.
    #[arg(long, default_value_t = InitialTopology::Empty)]
    initial: InitialTopology,
    /// Link-break detection: eager or on-send.
    #[arg(long, default_value_t = DetectionMode::Eager)]
    detection: DetectionMode,
    /// Also offer "deliver everything" as a single event.
    #[arg(long)]
    deliver_all: bool,
}

impl BoundsArgs {
    fn bounds(&self) -> ExploreBounds {
        ExploreBounds {
            node_count: self.nodes,
            max_events: self.max_events,
            max_link_changes: self.max_link_changes,
            max_route_requests: self.max_route_requests,
            state_limit: self.state_limit,
            initial: self.initial,
            detection: self.detection,
            deliver_all: self.deliver_all,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the full message trace to this file.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Plain,
    Ns2,
}

/// Failures that are the input's fault, reported with exit code 2.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every check held.
fn dispatch(command: Command) -> Result<bool, InputError> {
    match command {
        Command::Run { scenario, config, output } => {
            let scenario = load_scenario(&scenario)?;
            let cfg = config.resolve(scenario.config);
            run_one(&scenario, &cfg, &output)
        }
        Command::Explore {
            config,
            bounds,
            from,
            from_part,
            witness_dir,
            format,
        } => {
            let result = match from {
                None => explore(&config.resolve(None), &bounds.bounds())?,
                Some(path) => {
                    let scenario = load_scenario(&path)?;
                    let cfg = config.resolve(scenario.config);
                    let prefix = match &from_part {
                        Some(part) => scenario
                            .events_before(part)
                            .ok_or_else(|| anyhow!("scenario `{}` has no part `{part}`", scenario.name))?,
                        None => scenario.events().cloned().collect(),
                    };
                    explore_from(&cfg, &bounds.bounds(), &scenario.initial_state(&cfg), &prefix, |_| {})?
                }
            };
            if let Some(dir) = &witness_dir {
                write_witnesses(&result, dir)?;
            }
            match format {
                Format::Text => print!("{}", render_explore(&result)),
                Format::Json => print_json(&explore_json(&result)),
            }
            Ok(result.loops.is_empty() && result.monotonicity_violations == 0)
        }
        Command::Presets { format } => {
            match format {
                Format::Text => {
                    for &p in Preset::ALL {
                        println!("{:<16} {}  {}", p.name(), p.config(), p.description());
                    }
                }
                Format::Json => print_json(&Value::Array(
                    Preset::ALL
                        .iter()
                        .map(|p| json!({"name": p.name(), "config": p.config(), "compact": p.config().to_string(), "description": p.description()}))
                        .collect(),
                )),
            }
            Ok(true)
        }
        Command::Figure1 {
            variant,
            print,
            config,
            output,
        } => {
            let name = match variant {
                Variant::Plain => "figure1",
                Variant::Ns2 => "figure1-ns2",
            };
            let scenario = Scenario::builtin(name).expect("built-in scenario");
            if print {
                print!("{}", scenario.to_text());
                return Ok(true);
            }
            if config.is_set() {
                return run_one(&scenario, &config.resolve(None), &output);
            }
            if output.trace.is_some() {
                return Err(anyhow!("--trace needs a single configuration (use --preset)").into());
            }
            let runs = Preset::ALL
                .iter()
                .map(|p| Ok((*p, scenario.run(&p.config())?)))
                .collect::<Result<Vec<_>, InputError>>()?;
            match output.format {
                Format::Text => {
                    for (p, run) in &runs {
                        println!("{:<16} {:<16} {}", p.name(), run.config.to_string(), verdict(run));
                    }
                }
                Format::Json => print_json(&Value::Array(
                    runs.iter()
                        .map(|(p, run)| {
                            let mut v = run_json(run);
                            v["preset"] = json!(p.name());
                            v
                        })
                        .collect(),
                )),
            }
            Ok(runs.iter().all(|(_, run)| run.passed()))
        }
    }
}

fn verdict(run: &ScenarioRun) -> String {
    let loops = if run.loops.is_empty() {
        "loop-free".to_string()
    } else {
        run.loops.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
    };
    let checks = if run.passed() { "assertions hold" } else { "ASSERTION FAILED" };
    format!("{loops}; {checks}")
}

fn run_one(scenario: &Scenario, cfg: &InterpretationConfig, output: &OutputArgs) -> Result<bool, InputError> {
    let run = scenario.run(cfg)?;
    if let Some(path) = &output.trace {
        let text = match output.format {
            Format::Text => render_trace(&run.state.trace),
            Format::Json => serde_json::to_string_pretty(&run.state.trace)? + "\n",
        };
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    match output.format {
        Format::Text => print!("{}", render_run(&run)),
        Format::Json => print_json(&run_json(&run)),
    }
    Ok(run.passed())
}

fn load_scenario(arg: &str) -> Result<Scenario, InputError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(s) = Scenario::builtin(arg) {
            return Ok(s);
        }
        return Err(anyhow!("no scenario file `{arg}` (built-ins: {})", BUILTINS.join(", ")).into());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
    Ok(Scenario::parse(&text).with_context(|| format!("parsing {arg}"))?)
}

fn write_witnesses(result: &ExploreResult, dir: &Path) -> Result<(), InputError> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let loops = result.loops.iter().enumerate().map(|(i, l)| {
        let name = format!("loop-{:03}", i + 1);
        (name.clone(), loop_scenario(result, l, &name))
    });
    let decrements = result.violation_witnesses.iter().enumerate().map(|(i, v)| {
        let name = format!("decrement-{:03}", i + 1);
        (name.clone(), violation_scenario(result, v, &name))
    });
    for (name, scenario) in loops.chain(decrements) {
        let path = dir.join(format!("{name}.scn"));
        fs::write(&path, scenario.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values serialize"));
}
