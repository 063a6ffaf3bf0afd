//! `mrfm` — command-line front end for the scanned-probe nuclear-spin
//! toolkit.
//!
//! Commands: `validate` (operating-window report), `reproduce` (regression
//! table against the published design estimates), `measure` (single-spin
//! measurement records, optionally with cantilever traces), `compile`
//! (circuit to pulse/move schedule), `run` (compile and execute, single
//! chain or statistical ensemble), and `sweep` (grid of validate reports).
//!
//! Exit codes: 0 success, 1 domain failure (design fails validation,
//! schedule violates selectivity windows), 2 malformed input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use mrfm_core::chain::{ChainState, ProbePosition, PulseMode};
use mrfm_core::compiler::{compile, verify_schedule, Circuit, CompileMode, Schedule};
use mrfm_core::config::{parse_length, RunConfig, RunMode};
use mrfm_core::executor::execute_schedule;
use mrfm_core::protocol::{
    ensemble_column_readout, Device, DetectionBackend, MeasurementEngine,
};
use mrfm_core::spectroscopy::IsingChainSpec;
use mrfm_core::validator;

#[derive(Parser)]
#[command(name = "mrfm", version, about = "Scanned-probe nuclear-spin design and simulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for every output file.
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check every operating-window inequality for the configured design.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Override the margin factor for order-of-magnitude separations.
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Recompute the published design estimates for the reference device.
    Reproduce {
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Measure one nuclear spin and emit the record (and optionally the
    /// cantilever trace).
    Measure {
        #[command(flatten)]
        common: Common,
        /// Site to park the probe over.
        #[arg(long)]
        site: usize,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured initial register (bit string, site 0 first).
        #[arg(long)]
        initial: Option<String>,
        /// Also write the analyzed cantilever trace as CSV.
        #[arg(long)]
        trace: bool,
    },
    /// Compile a circuit into a probe-move/pulse schedule.
    Compile {
        #[command(flatten)]
        common: Common,
        /// Circuit file: `rotx <site> <angle_rad>` / `icn <control> <target>`.
        #[arg(long)]
        circuit: PathBuf,
        /// Override the configured mode (single_spin | ising_array).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Compile and execute a circuit, emitting final-state records or
    /// ensemble readouts.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fan validate out over a parameter grid, one JSON line per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Axis spec `name=min:max:steps`; lengths accept unit suffixes
        /// (e.g. `probe_gap=50A:400A:20`). Repeatable; axes form a grid.
        #[arg(long = "param", required = true)]
        params: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(2)
        }
    }
}

/// Errors escaping `dispatch` are input problems (exit 2); domain failures
/// return exit 1 inline.
fn dispatch(command: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match command {
        Command::Validate { common, margin } => cmd_validate(&common, margin),
        Command::Reproduce { output_dir } => cmd_reproduce(&output_dir),
        Command::Measure {
            common,
            site,
            seed,
            initial,
            trace,
        } => cmd_measure(&common, site, seed, initial.as_deref(), trace),
        Command::Compile {
            common,
            circuit,
            mode,
        } => cmd_compile(&common, &circuit, mode.as_deref()),
        Command::Run {
            common,
            circuit,
            mode,
            seed,
        } => cmd_run(&common, &circuit, mode.as_deref(), seed),
        Command::Sweep { common, params } => cmd_sweep(&common, &params),
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Box<dyn std::error::Error>> {
    Ok(RunConfig::load(&common.config)?)
}

fn output_file(dir: &Path, name: &str) -> Result<fs::File, std::io::Error> {
    fs::create_dir_all(dir)?;
    fs::File::create(dir.join(name))
}

fn cmd_validate(
    common: &Common,
    margin: Option<f64>,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let config = load_config(common)?;
    let device = config.build_device()?;
    let mut settings = config.validator_settings();
    if let Some(m) = margin {
        settings.margin = m;
    }
    let report = validator::validate(&device, &settings)?;

    let mut json = output_file(&common.output_dir, "report.json")?;
    serde_json::to_writer_pretty(&mut json, &report)?;
    json.write_all(b"\n")?;
    let mut text = output_file(&common.output_dir, "report.txt")?;
    text.write_all(report.render_text().as_bytes())?;

    print!("{}", report.render_text());
    Ok(if report.overall_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_reproduce(output_dir: &Path) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let rows = validator::reproduce_published_table();
    let csv = validator::regression_table_csv(&rows);
    let mut file = output_file(output_dir, "reproduce.csv")?;
    file.write_all(csv.as_bytes())?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn engine_from_config(config: &RunConfig) -> Result<MeasurementEngine, Box<dyn std::error::Error>> {
    let device = config.build_device()?;
    let mut engine = MeasurementEngine::new(device, DetectionBackend::Simulated);
    engine.settings = config.detection_settings();
    engine.pulse_mode = config.pulse_mode()?;
    Ok(engine)
}

fn cmd_measure(
    common: &Common,
    site: usize,
    seed: Option<u64>,
    initial: Option<&str>,
    trace: bool,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let config = load_config(common)?;
    let mut engine = engine_from_config(&config)?;
    let seed = seed.unwrap_or(config.run.seed);

    let bits = match initial {
        Some(text) => {
            let mut override_config = config.clone();
            override_config.run.initial_nuclear = Some(text.to_string());
            override_config.initial_bits()?
        }
        None => config.initial_bits()?,
    };
    let mut state = ChainState::from_basis(&bits)?;
    state.move_probe(ProbePosition::AtSite(site))?;
    let record = engine.measure(&mut state, site, seed)?;

    let mut records = output_file(&common.output_dir, "measurement.jsonl")?;
    writeln!(records, "{}", serde_json::to_string(&record)?)?;
    let mut snapshot = output_file(&common.output_dir, "state.jsonl")?;
    state.write_jsonl(&mut snapshot)?;
    if trace {
        let driven = record.collapsed_outcome == 0;
        let response = engine.reference_trace(driven, seed)?;
        let mut csv = output_file(&common.output_dir, "trace.csv")?;
        response.write_csv(&mut csv)?;
    }
    println!(
        "site {site}: outcome {} detected {} elapsed {:.4} s",
        record.collapsed_outcome, record.detected, record.elapsed_s
    );
    Ok(ExitCode::SUCCESS)
}

fn compile_mode(
    config: &RunConfig,
    flag: Option<&str>,
) -> Result<CompileMode, Box<dyn std::error::Error>> {
    let mode = match flag {
        Some("single_spin") => CompileMode::SingleSpin,
        Some("ising_array") => CompileMode::IsingArray,
        Some(other) => return Err(format!("unknown mode '{other}'").into()),
        None => match config.run.mode {
            RunMode::SingleSpin => CompileMode::SingleSpin,
            RunMode::IsingArray | RunMode::StatisticalEnsemble => CompileMode::IsingArray,
        },
    };
    Ok(mode)
}

struct Compiled {
    device: Device,
    schedule: Schedule,
    ising: Option<IsingChainSpec>,
}

fn compile_from_files(
    config: &RunConfig,
    circuit_path: &Path,
    mode_flag: Option<&str>,
) -> Result<Compiled, Box<dyn std::error::Error>> {
    let device = config.build_device()?;
    let mode = compile_mode(config, mode_flag)?;
    let text = fs::read_to_string(circuit_path)?;
    let circuit = Circuit::parse(&text, config.device.chain_length)?;
    let ising = config.ising_spec()?;
    let schedule = compile(&circuit, mode, &device, ising.as_ref())?;
    Ok(Compiled {
        device,
        schedule,
        ising,
    })
}

fn cmd_compile(
    common: &Common,
    circuit_path: &Path,
    mode_flag: Option<&str>,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let config = load_config(common)?;
    let Compiled {
        device,
        schedule,
        ising,
    } = compile_from_files(&config, circuit_path, mode_flag)?;
    let margin = config.validator_settings().margin;
    let report = verify_schedule(&schedule, &device, ising.as_ref(), margin)?;

    let mut file = output_file(&common.output_dir, "schedule.json")?;
    serde_json::to_writer_pretty(&mut file, &schedule)?;
    file.write_all(b"\n")?;
    let mut checks = output_file(&common.output_dir, "schedule_checks.json")?;
    serde_json::to_writer_pretty(&mut checks, &report)?;
    checks.write_all(b"\n")?;

    println!(
        "{} steps, total duration {:.6e} s, {} checks",
        schedule.steps.len(),
        schedule.total_duration_s,
        report.checks.len()
    );
    if report.all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        for check in report.checks.iter().filter(|c| !c.pass) {
            eprintln!(
                "selectivity violation: pulse {} {} ({})",
                check.pulse_index, check.name, check.detail
            );
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_run(
    common: &Common,
    circuit_path: &Path,
    mode_flag: Option<&str>,
    seed: Option<u64>,
) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let config = load_config(common)?;
    let Compiled {
        device,
        schedule,
        ising,
    } = compile_from_files(&config, circuit_path, mode_flag)?;
    let margin = config.validator_settings().margin;
    let report = verify_schedule(&schedule, &device, ising.as_ref(), margin)?;
    if !report.all_pass {
        for check in report.checks.iter().filter(|c| !c.pass) {
            eprintln!(
                "selectivity violation: pulse {} {} ({})",
                check.pulse_index, check.name, check.detail
            );
        }
        return Ok(ExitCode::from(1));
    }

    let mut schedule_file = output_file(&common.output_dir, "schedule.json")?;
    serde_json::to_writer_pretty(&mut schedule_file, &schedule)?;
    schedule_file.write_all(b"\n")?;

    let pulse_mode = config.pulse_mode()?;
    let seed = seed.unwrap_or(config.run.seed);

    if config.run.mode == RunMode::StatisticalEnsemble {
        let spec = ising.ok_or("statistical_ensemble mode needs an [ising] section")?;
        let chains = run_ensemble(&config, &device, &schedule, &spec, pulse_mode, seed)?;
        let mut readouts = output_file(&common.output_dir, "readouts.jsonl")?;
        for column in 0..config.device.chain_length {
            let readout = ensemble_column_readout(&chains, column)?;
            writeln!(readouts, "{}", serde_json::to_string(&readout)?)?;
        }
        println!("ensemble of {} chains evolved", chains.len());
    } else {
        let mut state = ChainState::from_basis(&config.initial_bits()?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        execute_schedule(
            &device,
            &schedule,
            ising.as_ref(),
            &mut state,
            pulse_mode,
            Some(&mut rng),
        )?;
        let mut snapshot = output_file(&common.output_dir, "state.jsonl")?;
        state.write_jsonl(&mut snapshot)?;
        println!("final state written (norm {:.12})", state.norm_sqr());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_ensemble(
    config: &RunConfig,
    device: &Device,
    schedule: &Schedule,
    spec: &IsingChainSpec,
    pulse_mode: PulseMode,
    seed: u64,
) -> Result<Vec<ChainState>, Box<dyn std::error::Error>> {
    let probabilities = config.excitation_probabilities();
    if probabilities.len() != config.device.chain_length {
        return Err("ensemble.excitation_probability length must match the chain".into());
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(u64, Vec<bool>)> = (0..config.ensemble_chains())
        .map(|_| {
            let chain_seed: u64 = seeder.random();
            let bits: Vec<bool> = probabilities
                .iter()
                .map(|&p| seeder.random::<f64>() < p)
                .collect();
            (chain_seed, bits)
        })
        .collect();
    let chains: Result<Vec<ChainState>, mrfm_core::Error> = jobs
        .into_par_iter()
        .map(|(chain_seed, bits)| {
            let mut state = ChainState::from_basis(&bits)?;
            let mut rng = ChaCha8Rng::seed_from_u64(chain_seed);
            execute_schedule(
                device,
                schedule,
                Some(spec),
                &mut state,
                pulse_mode,
                Some(&mut rng),
            )?;
            Ok(state)
        })
        .collect();
    Ok(chains?)
}

struct SweepAxis {
    name: String,
    values: Vec<f64>,
}

fn parse_axis(text: &str) -> Result<SweepAxis, Box<dyn std::error::Error>> {
    let (name, range) = text
        .split_once('=')
        .ok_or_else(|| format!("axis '{text}' must look like name=min:max:steps"))?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("axis '{text}' must look like name=min:max:steps").into());
    }
    let is_length = matches!(name, "probe_gap" | "probe_radius" | "atom_spacing");
    let parse = |value: &str| -> Result<f64, Box<dyn std::error::Error>> {
        if is_length {
            Ok(parse_length(value)?)
        } else {
            Ok(value.parse::<f64>()?)
        }
    };
    let min = parse(parts[0])?;
    let max = parse(parts[1])?;
    let steps: usize = parts[2].parse()?;
    if steps == 0 {
        return Err("axis needs at least one step".into());
    }
    let values = if steps == 1 {
        vec![min]
    } else {
        (0..steps)
            .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    Ok(SweepAxis {
        name: name.to_string(),
        values,
    })
}

fn apply_override(device: &mut Device, name: &str, value: f64) -> Result<(), String> {
    match name {
        "probe_gap" => device.geometry.probe_gap_m = value,
        "probe_radius" => device.geometry.probe_radius_m = value,
        "atom_spacing" => device.geometry.atom_spacing_m = value,
        "probe_magnetization_t" => device.geometry.probe_magnetization_t = value,
        "external_field_t" => device.geometry.external_field_t = value,
        "temperature_k" => device.geometry.temperature_k = value,
        "electron_rabi_hz" => device.pulses.electron_rabi_hz = value,
        "nuclear_rabi_hz" => device.pulses.nuclear_rabi_hz = value,
        other => return Err(format!("unknown sweep parameter '{other}'")),
    }
    Ok(())
}

fn cmd_sweep(common: &Common, params: &[String]) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let config = load_config(common)?;
    let base_device = config.build_device()?;
    let settings = config.validator_settings();

    let axes: Vec<SweepAxis> = params
        .iter()
        .map(|p| parse_axis(p))
        .collect::<Result<_, _>>()?;

    // cartesian product, first axis slowest
    let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for axis in &axes {
        let mut expanded = Vec::with_capacity(points.len() * axis.values.len());
        for point in &points {
            for &value in &axis.values {
                let mut next = point.clone();
                next.push((axis.name.clone(), value));
                expanded.push(next);
            }
        }
        points = expanded;
    }

    let lines: Result<Vec<String>, String> = points
        .par_iter()
        .map(|assignments| {
            let mut device = base_device.clone();
            for (name, value) in assignments {
                apply_override(&mut device, name, *value)?;
            }
            let report = validator::validate(&device, &settings).map_err(|e| e.to_string())?;
            let parameters: serde_json::Map<String, serde_json::Value> = assignments
                .iter()
                .map(|(name, value)| (name.clone(), serde_json::json!(value)))
                .collect();
            let line = serde_json::json!({
                "parameters": parameters,
                "overall_pass": report.overall_pass,
                "electron_window_low_hz": report.electron_window_low_hz,
                "electron_window_high_hz": report.electron_window_high_hz,
                "report": report,
            });
            Ok(line.to_string())
        })
        .collect();
    let lines = lines?;

    let mut file = output_file(&common.output_dir, "sweep.jsonl")?;
    for line in &lines {
        writeln!(file, "{line}")?;
    }
    println!("{} grid points", lines.len());
    Ok(ExitCode::SUCCESS)
}
