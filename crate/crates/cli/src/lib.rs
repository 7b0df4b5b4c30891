//! Command-line driver: mask counts, active-parameter tables, ground-truth
//! synthesis, two-stage characterization, mitigation reports and scaling data.
//!
//! Exit codes: 0 success, 1 verification mismatch or other failure,
//! 2 validation or input error, 3 capacity exceeded, 4 ill-conditioned model.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use hpo_core::hpo::{run_hpo, HpoConfig};
use hpo_core::io::{read_json, read_model, read_topology, write_json, write_model, write_traces};
use hpo_core::mask::{
    active_parameter_count, brute_force_count, compression_rate, count_by_letters, full_parameter_count,
    k_res_closed_form, materialize, MaskSpec, MAX_ENUMERATION_QUBITS,
};
use hpo_core::noise::{synthesize, NoiseParams, GENERATOR_NAME};
use hpo_core::pauli::MAX_QUBITS;
use hpo_core::ptm::{SparsePtm, TopologyGraph};
use hpo_core::qem::{build_mini_qpe, evaluate_scenarios, FidelityReport};
use hpo_core::HpoError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] HpoError),
    #[error("verification failed: {0}")]
    Mismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mismatch(_) => 1,
            CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                HpoError::Capacity { .. } => 3,
                HpoError::IllConditioned { .. } => 4,
                _ => 2,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Baseline,
    Residual,
}

#[derive(Debug, Parser)]
#[command(name = "hpo", version, about = "Sparse Pauli noise characterization and mitigation")]
pub struct Cli {
    /// Overrides the seed of the command's random draws.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory (command dependent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format for tabular commands.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count (and optionally dump or verify) a sparsity mask.
    Mask {
        n: usize,
        #[arg(value_enum)]
        kind: Kind,
        /// Print counts only.
        #[arg(long)]
        count_only: bool,
        /// Write the pair list as JSON.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
        /// Exit nonzero unless every counting method agrees.
        #[arg(long)]
        verify: bool,
    },
    /// Active-parameter comparison for n = 2..5.
    Table1,
    /// Synthesize a ground-truth channel; writes model files into --out.
    NoiseSynth {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        params: PathBuf,
    },
    /// Run the two-stage fit; writes models, traces and a manifest into --out.
    Characterize {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        noise: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Score ideal, raw and mitigated mini-QPE runs.
    Qem {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.25)]
        phase: f64,
        #[arg(long)]
        noise: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Coupling graph of the noise; defaults to a chain.
        #[arg(long)]
        topology: Option<PathBuf>,
    },
    /// Full versus active parameter counts for n = 2..max-n.
    Scaling {
        #[arg(long, default_value_t = 5)]
        max_n: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mask { .. } => "mask",
            Command::Table1 => "table1",
            Command::NoiseSynth { .. } => "noise-synth",
            Command::Characterize { .. } => "characterize",
            Command::Qem { .. } => "qem",
            Command::Scaling { .. } => "scaling",
        }
    }
}

/// Written next to every file output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub duration_seconds: f64,
}

struct Run {
    config: Value,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    /// Where the manifest goes, if anything was written to disk.
    manifest: Option<PathBuf>,
}

impl Run {
    fn new() -> Self {
        Self { config: Value::Null, inputs: BTreeMap::new(), outputs: Vec::new(), seed: None, manifest: None }
    }

    fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.to_string(), path.display().to_string());
    }
}

/// Parses `args` and runs the command, writing machine output to `stdout`.
/// Returns the process exit code; errors are reported on stderr.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let start = Instant::now();
    let mut run = Run::new();
    let result = match &cli.command {
        Command::Mask { n, kind, count_only, dump, verify } => {
            cmd_mask(cli, *n, *kind, *count_only, dump.as_deref(), *verify, &mut run, stdout)
        }
        Command::Table1 => cmd_table1(cli, &mut run, stdout),
        Command::NoiseSynth { topology, params } => cmd_noise_synth(cli, topology, params, &mut run, stdout),
        Command::Characterize { topology, noise, config } => {
            cmd_characterize(cli, topology, noise, config.as_deref(), &mut run, stdout)
        }
        Command::Qem { n, phase, noise, model, topology } => {
            cmd_qem(cli, *n, *phase, noise, model, topology.as_deref(), &mut run, stdout)
        }
        Command::Scaling { max_n } => cmd_scaling(cli, *max_n, &mut run, stdout),
    };
    result?;
    if let Some(path) = &run.manifest {
        let manifest = RunManifest {
            command: cli.command.name().to_string(),
            config: run.config,
            inputs: run.inputs,
            outputs: run.outputs.iter().map(|p| p.display().to_string()).collect(),
            seed: run.seed,
            version: VERSION.to_string(),
            duration_seconds: start.elapsed().as_secs_f64(),
        };
        write_json(path, &manifest)?;
    }
    Ok(())
}

fn manifest_beside(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

/// Sends tabular output to `--out` (plus manifest) or stdout.
fn emit(cli: &Cli, text: &str, run: &mut Run, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.out {
        Some(path) => {
            fs::write(path, text)?;
            run.outputs.push(path.clone());
            run.manifest = Some(manifest_beside(path));
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn out_dir(cli: &Cli) -> CliResult<PathBuf> {
    let dir =
        cli.out.clone().ok_or_else(|| HpoError::InvalidInput("--out <DIR> is required for this command".into()))?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn spec_for(n: usize, kind: Kind) -> MaskSpec {
    match kind {
        Kind::Baseline => MaskSpec::baseline(n),
        Kind::Residual => MaskSpec::residual(n),
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// `63.7%`, or `0%` when nothing is saved.
pub fn percent(rate: f64) -> String {
    if rate == 0.0 {
        "0%".to_string()
    } else {
        format!("{:.1}%", rate * 100.0)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_mask(
    cli: &Cli,
    n: usize,
    kind: Kind,
    count_only: bool,
    dump: Option<&Path>,
    verify: bool,
    run: &mut Run,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let spec = spec_for(n, kind);
    if n == 0 {
        return Err(HpoError::InvalidInput("mask needs at least one qubit".into()).into());
    }
    if n > MAX_QUBITS {
        return Err(HpoError::Capacity {
            what: "mask counting",
            n,
            limit: MAX_QUBITS,
            hint: "indices are packed into 24 bits",
        }
        .into());
    }
    run.config = json!({ "n": n, "kind": spec.kind_name(), "count_only": count_only, "verify": verify });
    let closed_form = match kind {
        Kind::Residual => k_res_closed_form(n),
        Kind::Baseline => count_by_letters(&spec)?,
    };
    let letters = count_by_letters(&spec)?;
    let feasible = n <= MAX_ENUMERATION_QUBITS;
    if verify && !feasible {
        // surfaces the enumeration capacity error
        brute_force_count(&spec)?;
    }
    let brute_force = if feasible { Some(brute_force_count(&spec)?) } else { None };
    let materialized = if (verify || dump.is_some()) && feasible { Some(materialize(&spec)?) } else { None };
    if let Some(path) = dump {
        let set = materialize(&spec)?;
        let pairs: Vec<[usize; 2]> = set.pairs().iter().map(|&(i, j)| [i, j]).collect();
        write_json(path, &json!({ "n": n, "kind": spec.kind_name(), "pairs": pairs }))?;
        run.outputs.push(path.to_path_buf());
        run.manifest = Some(manifest_beside(path));
    }
    let full = full_parameter_count(n);
    let summary = json!({
        "n": n,
        "kind": spec.kind_name(),
        "count": closed_form,
        "closed_form": closed_form,
        "brute_force": brute_force,
        "full": full,
        "compression": round4(1.0 - closed_form as f64 / full as f64),
    });
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => {
            if count_only {
                json!({ "closed_form": closed_form, "brute_force": brute_force }).to_string() + "\n"
            } else {
                summary.to_string() + "\n"
            }
        }
        Format::Csv => format!(
            "n,kind,count,brute_force,full\n{n},{},{closed_form},{},{full}\n",
            spec.kind_name(),
            brute_force.map(|b| b.to_string()).unwrap_or_default()
        ),
    };
    stdout.write_all(text.as_bytes())?;
    if verify {
        let mut counts = vec![("closed_form", closed_form), ("letter_count", letters)];
        counts.extend(brute_force.map(|b| ("brute_force", b)));
        counts.extend(materialized.map(|m| ("materialized", m.len() as u64)));
        if counts.iter().any(|&(_, c)| c != closed_form) {
            return Err(CliError::Mismatch(format!("{} mask at n = {n}: {counts:?}", spec.kind_name())));
        }
    }
    Ok(())
}

/// `(n, full, active, compression)` rows for n = 2..5.
pub fn table1_rows() -> Vec<(usize, u64, u64, String)> {
    (2..=5)
        .map(|n| {
            let rate = compression_rate(n).expect("n >= 2");
            (n, full_parameter_count(n), active_parameter_count(n), percent(rate))
        })
        .collect()
}

fn cmd_table1(cli: &Cli, run: &mut Run, stdout: &mut dyn Write) -> CliResult<()> {
    let rows = table1_rows();
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("n,full,active,compression\n");
            for (n, full, active, pct) in &rows {
                s.push_str(&format!("{n},{full},{active},{pct}\n"));
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(n, full, active, pct)| json!({ "n": n, "full": full, "active": active, "compression": pct }))
                .collect();
            Value::Array(rows).to_string() + "\n"
        }
    };
    emit(cli, &text, run, stdout)
}

fn cmd_scaling(cli: &Cli, max_n: usize, run: &mut Run, stdout: &mut dyn Write) -> CliResult<()> {
    if max_n > MAX_QUBITS {
        return Err(HpoError::Capacity {
            what: "scaling table",
            n: max_n,
            limit: MAX_QUBITS,
            hint: "16^n overflows beyond this",
        }
        .into());
    }
    if max_n < 2 {
        return Err(HpoError::InvalidInput(format!("--max-n must be at least 2, got {max_n}")).into());
    }
    run.config = json!({ "max_n": max_n });
    let rows: Vec<(usize, u64, u64)> =
        (2..=max_n).map(|n| (n, full_parameter_count(n), active_parameter_count(n))).collect();
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut s = String::from("n,full,active\n");
            for (n, full, active) in &rows {
                s.push_str(&format!("{n},{full},{active}\n"));
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> =
                rows.iter().map(|(n, full, active)| json!({ "n": n, "full": full, "active": active })).collect();
            Value::Array(rows).to_string() + "\n"
        }
    };
    emit(cli, &text, run, stdout)
}

fn load_noise(cli: &Cli, path: &Path, run: &mut Run) -> CliResult<NoiseParams> {
    let mut params: NoiseParams = read_json(path)?;
    if let Some(seed) = cli.seed {
        params.seed = seed;
    }
    params.validate()?;
    run.input("noise", path);
    Ok(params)
}

fn cmd_noise_synth(
    cli: &Cli,
    topology: &Path,
    params_path: &Path,
    run: &mut Run,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let graph = read_topology(topology)?;
    run.input("topology", topology);
    let params = load_noise(cli, params_path, run)?;
    let truth = synthesize(&graph, &params)?;
    let dir = out_dir(cli)?;
    let residual = SparsePtm::from_entries(graph.num_qubits(), truth.residual.clone())?;
    for (name, model) in
        [("ground_truth.json", &truth.channel), ("base.json", &truth.base), ("residual.json", &residual)]
    {
        let path = dir.join(name);
        write_model(&path, model, Some(GENERATOR_NAME))?;
        run.outputs.push(path);
    }
    run.seed = Some(params.seed);
    run.config = json!({ "noise": params, "topology": graph });
    run.manifest = Some(dir.join("manifest.json"));
    let summary =
        json!({ "n": graph.num_qubits(), "nnz": truth.channel.nnz(), "residual_entries": truth.residual.len() });
    writeln!(stdout, "{summary}")?;
    Ok(())
}

fn cmd_characterize(
    cli: &Cli,
    topology: &Path,
    noise: &Path,
    config_path: Option<&Path>,
    run: &mut Run,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let graph = read_topology(topology)?;
    run.input("topology", topology);
    let params = load_noise(cli, noise, run)?;
    let mut config = match config_path {
        Some(path) => {
            run.input("config", path);
            read_json::<HpoConfig>(path)?
        }
        None => HpoConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    let truth = synthesize(&graph, &params)?;
    let result = run_hpo(&truth, &config)?;
    let dir = out_dir(cli)?;
    let n = graph.num_qubits();

    let write = |name: String, model: &SparsePtm, run: &mut Run| -> CliResult<()> {
        let path = dir.join(name);
        write_model(&path, model, None)?;
        run.outputs.push(path);
        Ok(())
    };
    for (&(u, v), fit) in &result.baselines {
        write(format!("baseline_{u}-{v}.json"), &fit.model, run)?;
    }
    write("frozen.json".into(), &result.frozen, run)?;
    if let Some(res) = &result.residual {
        write("residual.json".into(), &SparsePtm::from_entries(n, res.residual.clone())?, run)?;
    }
    write("effective.json".into(), &result.model, run)?;

    let baseline_traces: Vec<_> = result.baselines.values().map(|b| &b.trace).collect();
    let residual_traces: Vec<_> = result.residual.iter().map(|r| &r.trace).collect();
    for (name, traces) in [("trace_baseline.csv", &baseline_traces), ("trace_residual.csv", &residual_traces)] {
        let path = dir.join(name);
        write_traces(&path, traces)?;
        run.outputs.push(path);
    }

    let stages: Vec<Value> = result
        .traces()
        .iter()
        .map(
            |t| json!({ "stage": t.stage, "epochs": t.rows.len(), "final_mse": t.final_mse, "converged": t.converged }),
        )
        .collect();
    let summary = json!({
        "n": n,
        "active_parameters": result.active_parameters,
        "stages": stages,
        "model_error_vs_truth": result.model.max_abs_diff(&truth.channel)?,
    });
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    run.outputs.push(summary_path);
    run.seed = Some(config.seed);
    run.config = json!({ "hpo": config, "noise": params, "topology": graph });
    run.manifest = Some(dir.join("manifest.json"));
    writeln!(stdout, "{summary}")?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_qem(
    cli: &Cli,
    n: usize,
    phase: f64,
    noise: &Path,
    model_path: &Path,
    topology: Option<&Path>,
    run: &mut Run,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let params = load_noise(cli, noise, run)?;
    let graph = match topology {
        Some(path) => {
            run.input("topology", path);
            read_topology(path)?
        }
        None => TopologyGraph::chain(n)?,
    };
    if graph.num_qubits() != n {
        return Err(HpoError::DimensionMismatch { expected: n, found: graph.num_qubits() }.into());
    }
    let learned = read_model(model_path)?;
    run.input("model", model_path);
    if learned.num_qubits() != n {
        return Err(HpoError::DimensionMismatch { expected: n, found: learned.num_qubits() }.into());
    }
    let plan = build_mini_qpe(n, phase)?;
    let truth = synthesize(&graph, &params)?;
    let report: FidelityReport = evaluate_scenarios(&plan, &truth.channel, &learned)?;
    run.seed = Some(params.seed);
    run.config = json!({ "n": n, "phase": phase, "noise": params });
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string(&report).map_err(HpoError::from)? + "\n",
        Format::Csv => {
            let f = report.fidelity;
            format!("scenario,fidelity\nideal,{}\nraw,{}\ndepol,{}\nhpo,{}\n", f.ideal, f.raw, f.depol, f.hpo)
        }
    };
    match &cli.out {
        Some(path) => {
            fs::write(path, &text)?;
            run.outputs.push(path.clone());
            run.manifest = Some(manifest_beside(path));
            stdout.write_all(text.as_bytes())?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}
