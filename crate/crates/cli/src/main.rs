//! `frozen-discord`: run scenarios and sweeps, evaluate correlations,
//! simulate tomography and compile pulse-schedule text.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use frozen_discord::channels::DephasingRates;
use frozen_discord::correlations::{correlations, discord_bruteforce, DEFAULT_GRID};
use frozen_discord::ddseq::{compile_dsl, schedule_timing, DslBindings, PulseErrorModel, SequenceKind};
use frozen_discord::engine::InitialState;
use frozen_discord::harness::{
    calibrate_ou, dd_comparison, run_scenario, sweep, write_scenario_outputs, write_sweep_csv, EngineKind, SampleGrid,
    Scenario, ScheduleSpec, SweepConfig, SweepRow, DEFAULT_CYCLES_PER_SAMPLE,
};
use frozen_discord::qstate::{bd_params_of, bd_state, BDParams, DensityMatrix};
use frozen_discord::tomography::reconstruct;

/// Proton and carbon T2* of the chloroform sample, seconds.
const T2_STAR: (f64, f64) = (0.41, 0.19);
const DEFAULT_C: [f64; 3] = [1.0, 0.7, -0.7];

#[derive(Parser)]
#[command(
    name = "frozen-discord",
    version,
    about = "Discord dynamics of dephasing qubit pairs under dynamical decoupling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory, plot data and summary.
    Simulate(RunArgs),
    /// Run a list of scenarios (or the built-in decoupling comparison).
    Sweep(SweepArgs),
    /// Classical correlation, discord and mutual information of one state.
    Discord(DiscordArgs),
    /// Simulated Pauli tomography of one state.
    Tomo(TomoArgs),
    /// Compile schedule text to JSON.
    Compile(CompileArgs),
    /// Show the built-in sequences and their cycle times.
    ListSequences(ListArgs),
}

#[derive(Args)]
struct Overrides {
    /// Scenario file (TOML or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed for noise trajectories.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte-Carlo trajectories.
    #[arg(long)]
    trajectories: Option<usize>,
    /// analytic, mc or ff.
    #[arg(long)]
    engine: Option<EngineKind>,
    /// Built-in sequence name or a file holding schedule text.
    #[arg(long)]
    sequence: Option<String>,
    /// Inter-pulse delay in seconds.
    #[arg(long)]
    tau: Option<f64>,
}

impl Overrides {
    /// Applies the flags to `s`. With `strict`, `--tau` on a scenario
    /// without a delay parameter is an error; otherwise it is skipped.
    fn apply(&self, s: &mut Scenario, strict: bool) -> Result<()> {
        if let Some(seed) = self.seed {
            s.base_seed = seed;
        }
        if let Some(n) = self.trajectories {
            s.n_trajectories = n;
        }
        if let Some(engine) = self.engine {
            s.engine = engine;
        }
        if let Some(seq) = &self.sequence {
            s.sequence = parse_sequence(seq, self.tau)?;
        } else if let Some(tau) = self.tau {
            match &mut s.sequence {
                ScheduleSpec::Builtin { tau: t, .. } | ScheduleSpec::Dsl { tau: t, .. } => *t = Some(tau),
                ScheduleSpec::None | ScheduleSpec::Explicit { .. } if strict => {
                    bail!("--tau needs a built-in or text sequence (use --sequence)")
                }
                ScheduleSpec::None | ScheduleSpec::Explicit { .. } => {}
            }
        }
        Ok(())
    }

    fn out_dir(&self, fallback: Option<&Path>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| fallback.map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn parse_sequence(text: &str, tau: Option<f64>) -> Result<ScheduleSpec> {
    if text.eq_ignore_ascii_case("none") {
        return Ok(ScheduleSpec::None);
    }
    if let Ok(kind) = text.parse::<SequenceKind>() {
        return Ok(ScheduleSpec::Builtin {
            name: kind,
            tau,
            cycles: None,
        });
    }
    let path = Path::new(text);
    if !path.exists() {
        bail!("`{text}` is neither a built-in sequence (XY4S, XY8S, XY16S, KDDXY, none) nor a file");
    }
    let source = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ScheduleSpec::Dsl {
        text: source,
        tau,
        cycles: None,
    })
}

fn read_config<T>(
    path: &Path,
    toml: fn(&str) -> frozen_discord::Result<T>,
    json: fn(&str) -> frozen_discord::Result<T>,
) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json { json(&text) } else { toml(&text) };
    parsed.with_context(|| format!("in {}", path.display()))
}

fn chloroform_rates() -> DephasingRates {
    DephasingRates::from_t2_star(T2_STAR.0, T2_STAR.1).expect("positive T2*")
}

/// Free dephasing of the chloroform BD state with the measured T2* rates.
fn default_scenario() -> Scenario {
    let [c1, c2, c3] = DEFAULT_C;
    let mut s = Scenario::new(
        "free",
        EngineKind::Analytic,
        InitialState::Bd(BDParams::new(c1, c2, c3)),
    );
    s.noise = frozen_discord::engine::NoiseModel::white(&chloroform_rates());
    s
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    over: Overrides,
}

fn simulate(args: &RunArgs) -> Result<ExitCode> {
    let mut s = match &args.over.config {
        Some(path) => read_config(path, Scenario::from_toml, Scenario::from_json)?,
        None => default_scenario(),
    };
    args.over.apply(&mut s, true)?;
    let r = run_scenario(&s).with_context(|| format!("scenario `{}`", s.label))?;
    let dir = args.over.out_dir(s.output_dir.as_deref());
    let files = write_scenario_outputs(&r, &dir)?;
    let t_bar = match r.transition {
        Some(t) if t.censored => format!("≥ {} (censored)", t.t_bar),
        Some(t) => t.t_bar.to_string(),
        None => "none".into(),
    };
    println!(
        "{}: engine {}, sequence {}, t_bar {}, final fidelity {:.6}, {} samples -> {}",
        r.label,
        r.engine,
        r.sequence,
        t_bar,
        r.final_fidelity,
        r.points.len(),
        files.trajectory_csv.display()
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    over: Overrides,
    /// Worker threads for scenarios (0 = all cores).
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Correlation time of the OU noise in the built-in comparison, seconds.
    #[arg(long, default_value_t = 5.8e-3)]
    tau_c: f64,
    /// Sample scenarios with a pulse sequence every 5 cycles up to this time, seconds.
    #[arg(long)]
    horizon: Option<f64>,
}

fn run_sweep(args: &SweepArgs) -> Result<ExitCode> {
    let mut list = match &args.over.config {
        Some(path) => read_config(path, SweepConfig::from_toml, SweepConfig::from_json)?.scenarios,
        None => {
            let mut base = default_scenario();
            base.engine = EngineKind::FilterFunction;
            base.error = PulseErrorModel::chloroform();
            base.noise = calibrate_ou(
                base.initial.bd_params().expect("BD"),
                chloroform_rates().as_array(),
                args.tau_c,
            )?;
            dd_comparison(&base)
        }
    };
    if args.over.sequence.is_some() {
        bail!("--sequence does not apply to sweeps; list the sequences in the config");
    }
    for s in &mut list {
        args.over.apply(s, false)?;
        if let (Some(end), false) = (args.horizon, s.sequence.is_none()) {
            s.grid = Some(SampleGrid::EveryCycles {
                cycles: DEFAULT_CYCLES_PER_SAMPLE,
                end,
            });
        }
    }
    let report = sweep(&list, args.parallelism)?;
    let dir = args.over.out_dir(None);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    for r in report.results.iter().flatten() {
        write_scenario_outputs(r, &dir)?;
    }
    let csv_path = dir.join("sweep.csv");
    let csv = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    write_sweep_csv(&report.rows, BufWriter::new(csv))?;
    let json_path = dir.join("sweep.json");
    let mut json = serde_json::to_string_pretty(&report.rows)?;
    json.push('\n');
    fs::write(&json_path, json).with_context(|| format!("writing {}", json_path.display()))?;
    print_rows(&report.rows);
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} scenarios failed", report.rows.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_rows(rows: &[SweepRow]) {
    println!(
        "{:<16} {:<8} {:<8} {:>14} {:>10}",
        "label", "engine", "sequence", "t_bar [s]", "fidelity"
    );
    for r in rows {
        match &r.error {
            Some(e) => println!("{:<16} {:<8} {:<8} error: {e}", r.label, r.engine, r.sequence),
            None => {
                let t = r
                    .t_bar
                    .map_or("-".into(), |t| format!("{t:.4}{}", if r.censored { "+" } else { "" }));
                let f = r.final_fidelity.map_or("-".into(), |f| format!("{f:.6}"));
                println!("{:<16} {:<8} {:<8} {:>14} {:>10}", r.label, r.engine, r.sequence, t, f);
            }
        }
    }
}

#[derive(Args)]
struct StateArgs {
    /// Bell-diagonal correlations c1 c2 c3.
    #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["C1", "C2", "C3"], conflicts_with = "matrix")]
    c: Option<Vec<f64>>,
    /// JSON file with a 4×4 density matrix of [re, im] pairs.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

impl StateArgs {
    fn state(&self) -> Result<DensityMatrix> {
        if let Some(path) = &self.matrix {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return serde_json::from_str(&text)
                .with_context(|| format!("parsing density matrix in {}", path.display()));
        }
        let c = self.c.clone().unwrap_or_else(|| DEFAULT_C.to_vec());
        Ok(bd_state(BDParams::new(c[0], c[1], c[2]))?)
    }
}

#[derive(Args)]
struct DiscordArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Also minimize over measurement directions numerically.
    #[arg(long)]
    bruteforce: bool,
}

fn discord_cmd(args: &DiscordArgs) -> Result<ExitCode> {
    let rho = args.state.state()?;
    let c = bd_params_of(rho);
    let report = correlations(&c);
    let mut out = serde_json::json!({
        "c1": c.c1, "c2": c.c2, "c3": c.c3,
        "chi": report.chi.0,
        "classical": report.triple.classical,
        "discord": report.triple.discord,
        "total": report.triple.total,
        "clamped": report.clamped,
    });
    if args.bruteforce {
        out["discord_bruteforce"] = discord_bruteforce(&rho, DEFAULT_GRID)?.into();
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct TomoArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Shots per Pauli operator.
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the measurement record and reconstructed state.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn tomo(args: &TomoArgs) -> Result<ExitCode> {
    let rho = args.state.state()?;
    let r = reconstruct(&rho, args.shots, args.seed)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let rec = dir.join("record.csv");
        r.record.write_csv(BufWriter::new(
            File::create(&rec).with_context(|| format!("creating {}", rec.display()))?,
        ))?;
        let state = dir.join("reconstructed.json");
        fs::write(&state, serde_json::to_string_pretty(&r.state)? + "\n")
            .with_context(|| format!("writing {}", state.display()))?;
    }
    let out = serde_json::json!({
        "shots": args.shots,
        "fidelity": r.fidelity,
        "linear_min_eigenvalue": r.linear_min_eigenvalue,
        "projected": r.linear_was_unphysical(),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct CompileArgs {
    /// File with schedule text.
    input: PathBuf,
    /// Value bound to `tau`, seconds.
    #[arg(long)]
    tau: Option<f64>,
    /// Value bound to `N`.
    #[arg(long)]
    repetitions: Option<u32>,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn compile(args: &CompileArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let bindings = DslBindings {
        tau: args.tau,
        repetitions: args.repetitions,
    };
    let schedule = compile_dsl(&text, &bindings).with_context(|| format!("in {}", args.input.display()))?;
    let json = schedule.to_json()? + "\n";
    match &args.out {
        Some(path) => fs::write(path, json).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
struct ListArgs {
    /// Use this delay for every sequence instead of the experimental ones.
    #[arg(long)]
    tau: Option<f64>,
}

fn list_sequences(args: &ListArgs) -> Result<ExitCode> {
    let err = PulseErrorModel::chloroform();
    println!(
        "{:<6} {:>6} {:>10} {:>12}  description",
        "name", "pulses", "tau [ms]", "cycle [ms]"
    );
    for kind in SequenceKind::ALL {
        let tau = args.tau.unwrap_or_else(|| kind.experimental_tau());
        let s = frozen_discord::ddseq::builtin_sequence(kind, tau)?;
        println!(
            "{:<6} {:>6} {:>10.3} {:>12.3}  {}",
            kind.name(),
            kind.pulse_count(),
            tau * 1e3,
            schedule_timing(&s, &err) * 1e3,
            kind.description()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Discord(a) => discord_cmd(a),
        Command::Tomo(a) => tomo(a),
        Command::Compile(a) => compile(a),
        Command::ListSequences(a) => list_sequences(a),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
