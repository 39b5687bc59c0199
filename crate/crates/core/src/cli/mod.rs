//! The `airs-lab` command-line surface.
//!
//! Exit codes: 0 ok, 1 domain or validation error, 2 I/O error. Every
//! command except `validate` writes one manifest JSON next to its outputs.

pub mod bench;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::ckm::{build_store, CkmStore, NeuralPredictor, OraclePredictor, PredictorKind, SePredictor, TablePredictor};
use crate::error::{Error, Result};
use crate::neural::WeightStore;
use crate::oracle::{gen_lps_dataset, gen_se_dataset};
use crate::scenario::Scenario;
use crate::sched::{build_se_matrix, exact_enum_eta, n_lp_calls, random_schedule, sm_ib_eta, Schedule, SmIbParams, DEFAULT_GUARD};
use crate::scene::SceneConfig;

pub use bench::{bench_phases, grid_for_count, PhaseRow};

pub const VERSION: &str = env!("AIRS_LAB_VERSION");
pub const THREADS_ENV: &str = "AIRS_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "airs-lab", version = VERSION, about = "Multi-AIRS downlink scheduling lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Lps,
    Se,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Smib,
    Random,
    Exact,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Smib => "smib",
            Algo::Random => "random",
            Algo::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictorArg {
    Oracle,
    Table,
    Neural,
}

#[derive(Debug, clap::Args)]
pub struct PredictorOpts {
    #[arg(long, value_enum, default_value = "oracle")]
    pub predictor: PredictorArg,
    #[arg(long)]
    pub weights_lps: Option<PathBuf>,
    #[arg(long)]
    pub weights_se: Option<PathBuf>,
    /// CKM store for the table predictor.
    #[arg(long)]
    pub ckm: Option<PathBuf>,
    /// Monte Carlo draws per table composition.
    #[arg(long, default_value_t = 2000)]
    pub compose_samples: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Generate an LPS or SE JSONL dataset.
    Dataset {
        #[arg(long, value_enum)]
        kind: DatasetKind,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict the SE matrix [η0, η1..ηI] for every UE.
    Predict {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        pred: PredictorOpts,
        /// Sample this many UEs instead of using the scenario's list.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a CKM table store at sampled positions.
    CkmBuild {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run schedulers over a seed list; writes per-run JSON, results.csv and manifest.json into `out`.
    Schedule {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "smib")]
        algo: Vec<Algo>,
        #[command(flatten)]
        pred: PredictorOpts,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seed: Vec<u64>,
        /// Sample this many UEs per seed instead of using the scenario's list.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 1e-2)]
        xi: f64,
        #[arg(long, default_value_t = 10)]
        nmax: usize,
        /// Upper limit on LP solves for the exact baseline.
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        guard: f64,
        /// Record wall-clock times (output is then not byte-reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean ergodic SE per phase scheme over AIRS element counts.
    BenchPhases {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "16,64,144")]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub params: serde_json::Value,
    pub version: String,
    pub outputs: Vec<String>,
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn manifest(command: &str, scenario: &Path, seeds: Vec<u64>, params: serde_json::Value, outputs: &[&Path]) -> RunManifest {
    RunManifest {
        command: command.into(),
        scenario: scenario.display().to_string(),
        seeds,
        params,
        version: VERSION.into(),
        // Relative to the manifest's directory.
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
            .collect(),
    }
}

fn with_ues(scenario: &Scenario, n: Option<usize>, seed: u64) -> SceneConfig {
    let mut scene = scenario.scene.clone();
    if let Some(n) = n {
        scene.ues = scenario.sampler.sample_n(&scene, seed, n);
    }
    scene
}

/// Loads weights and stores once; the oracle and table predictors are
/// re-seeded per run.
enum PredictorSource {
    Oracle,
    Table(CkmStore, usize),
    Neural(NeuralPredictor),
}

impl PredictorSource {
    fn load(o: &PredictorOpts) -> Result<Self> {
        Ok(match o.predictor {
            PredictorArg::Oracle => PredictorSource::Oracle,
            PredictorArg::Table => {
                let path = o.ckm.as_ref().ok_or_else(|| Error::invalid("--predictor table needs --ckm"))?;
                if o.compose_samples == 0 {
                    return Err(Error::invalid("--compose-samples must be >= 1"));
                }
                PredictorSource::Table(CkmStore::load(path)?, o.compose_samples)
            }
            PredictorArg::Neural => {
                let (Some(l), Some(s)) = (&o.weights_lps, &o.weights_se) else {
                    return Err(Error::invalid("--predictor neural needs --weights-lps and --weights-se"));
                };
                PredictorSource::Neural(NeuralPredictor::new(&WeightStore::load(l)?, &WeightStore::load(s)?)?)
            }
        })
    }

    fn kind(&self) -> PredictorKind {
        match self {
            PredictorSource::Oracle => PredictorKind::Oracle,
            PredictorSource::Table(..) => PredictorKind::Table,
            PredictorSource::Neural(_) => PredictorKind::Neural,
        }
    }

    fn with<T>(&self, scenario: &Scenario, seed: u64, f: impl FnOnce(&dyn SePredictor) -> Result<T>) -> Result<T> {
        match self {
            PredictorSource::Oracle => f(&OraclePredictor::new(scenario.fading.clone().with_seed(seed))),
            PredictorSource::Table(store, n) => f(&TablePredictor::new(store.clone(), *n, seed)),
            PredictorSource::Neural(p) => f(p),
        }
    }
}

#[derive(Debug, Serialize)]
struct CsvRow {
    seed: u64,
    #[serde(rename = "U")]
    u: usize,
    #[serde(rename = "I")]
    i: usize,
    #[serde(rename = "Q")]
    q: usize,
    algo: &'static str,
    min_throughput: f64,
    wall_ms: f64,
}

struct RunOutput {
    row: CsvRow,
    file: PathBuf,
    schedule: Schedule,
}

#[allow(clippy::too_many_arguments)]
fn run_one(
    scenario: &Scenario,
    source: &PredictorSource,
    algo: Algo,
    seed: u64,
    n: Option<usize>,
    params: &SmIbParams,
    guard: f64,
    out: &Path,
) -> Result<RunOutput> {
    let scene = with_ues(scenario, n, seed);
    let t0 = Instant::now();
    if algo == Algo::Exact {
        let needed = n_lp_calls(scene.ues.len(), scene.n_airs(), scene.n_slots);
        if needed > guard {
            return Err(Error::EnumerationGuard { needed, guard });
        }
    }
    let schedule = source.with(scenario, seed, |p| {
        let eta = build_se_matrix(p, &scene)?;
        let s = match algo {
            Algo::Smib => sm_ib_eta(&eta, scene.n_slots, scene.n_rb, &SmIbParams { seed, ..*params })?,
            Algo::Random => random_schedule(&eta, scene.n_slots, scene.n_rb, seed),
            Algo::Exact => exact_enum_eta(&eta, scene.n_slots, scene.n_rb, guard)?,
        };
        s.validate(&eta)?;
        Ok(s)
    })?;
    let wall_ms = if params.timing { t0.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    Ok(RunOutput {
        row: CsvRow {
            seed,
            u: scene.ues.len(),
            i: scene.n_airs(),
            q: scene.n_slots,
            algo: algo.name(),
            min_throughput: schedule.min_throughput,
            wall_ms,
        },
        file: out.join(format!("schedule_{}_{seed}.json", algo.name())),
        schedule,
    })
}

fn cmd_validate(scenario: &Path) -> Result<()> {
    let text = fs::read_to_string(scenario).map_err(|e| Error::io(format!("reading {}", scenario.display()), e))?;
    let s = Scenario::parse(&text)?;
    let v = s.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    println!("ok: {} AIRS, {} UEs, {} slots", s.scene.n_airs(), s.scene.ues.len(), s.scene.n_slots);
    Ok(())
}

/// Runs one parsed command.
pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::Dataset {
            kind,
            scenario,
            n,
            seed,
            out,
        } => {
            let sc = Scenario::load(scenario)?;
            let spec = sc.fading.clone().with_seed(*seed);
            let mut w = create(out)?;
            let written = match kind {
                DatasetKind::Lps => gen_lps_dataset(&sc.scene, &sc.sampler, *n, &spec, &mut w)?,
                DatasetKind::Se => gen_se_dataset(&sc.scene, &sc.sampler, *n, &spec, &mut w)?,
            };
            w.flush().map_err(|e| Error::io("writing dataset", e))?;
            let m = manifest("dataset", scenario, vec![*seed], json!({"kind": kind, "n": n, "written": written}), &[out]);
            write_json(&sidecar(out), &m)
        }
        Command::Predict {
            scenario,
            pred,
            n,
            seed,
            out,
        } => {
            let sc = Scenario::load(scenario)?;
            let source = PredictorSource::load(pred)?;
            let scene = with_ues(&sc, *n, *seed);
            let eta = source.with(&sc, *seed, |p| build_se_matrix(p, &scene))?;
            write_json(out, &eta)?;
            let m = manifest(
                "predict",
                scenario,
                vec![*seed],
                json!({"predictor": source.kind(), "n": n, "compose_samples": pred.compose_samples}),
                &[out],
            );
            write_json(&sidecar(out), &m)
        }
        Command::CkmBuild { scenario, n, seed, out } => {
            let sc = Scenario::load(scenario)?;
            let spec = sc.fading.clone().with_seed(*seed);
            let positions = sc.sampler.sample_n(&sc.scene, *seed, *n);
            build_store(&sc.scene, &positions, &spec)?.save(out)?;
            let m = manifest("ckm-build", scenario, vec![*seed], json!({"n": n}), &[out]);
            write_json(&sidecar(out), &m)
        }
        Command::Schedule {
            scenario,
            algo,
            pred,
            seed,
            n,
            eps,
            xi,
            nmax,
            guard,
            timing,
            out,
        } => {
            let sc = Scenario::load(scenario)?;
            let params = SmIbParams {
                eps: *eps,
                xi: *xi,
                n_max: *nmax,
                seed: 0,
                timing: *timing,
            };
            params.validate()?;
            if !(*guard > 0.0) {
                return Err(Error::invalid("--guard must be positive"));
            }
            let source = PredictorSource::load(pred)?;
            let mut algos = algo.clone();
            algos.sort_unstable();
            algos.dedup();
            fs::create_dir_all(out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
            let jobs: Vec<(u64, Algo)> = seed.iter().flat_map(|&s| algos.iter().map(move |&a| (s, a))).collect();
            let runs: Vec<RunOutput> = jobs
                .par_iter()
                .map(|&(s, a)| run_one(&sc, &source, a, s, *n, &params, *guard, out))
                .collect::<Result<_>>()?;
            for r in &runs {
                write_json(&r.file, &r.schedule)?;
            }
            let csv_path = out.join("results.csv");
            let mut w = csv::Writer::from_path(&csv_path)
                .map_err(|e| Error::io(format!("creating {}", csv_path.display()), e.into()))?;
            for r in &runs {
                w.serialize(&r.row).map_err(|e| Error::io("writing results.csv", e.into()))?;
            }
            w.flush().map_err(|e| Error::io("writing results.csv", e))?;
            let mut outputs: Vec<&Path> = runs.iter().map(|r| r.file.as_path()).collect();
            outputs.push(&csv_path);
            let m = manifest(
                "schedule",
                scenario,
                seed.clone(),
                json!({
                    "algo": algos,
                    "predictor": source.kind(),
                    "n": n,
                    "eps": eps,
                    "xi": xi,
                    "nmax": nmax,
                    "guard": guard,
                    "timing": timing,
                    "compose_samples": pred.compose_samples,
                }),
                &outputs,
            );
            write_json(&out.join("manifest.json"), &m)
        }
        Command::BenchPhases {
            scenario,
            counts,
            n,
            seed,
            out,
        } => {
            let sc = Scenario::load(scenario)?;
            let spec = sc.fading.clone().with_seed(*seed);
            let rows = bench_phases(&sc.scene, &sc.sampler, &spec, counts, *n)?;
            let mut w = csv::Writer::from_path(out).map_err(|e| Error::io(format!("creating {}", out.display()), e.into()))?;
            for r in &rows {
                w.serialize(r).map_err(|e| Error::io("writing csv", e.into()))?;
            }
            w.flush().map_err(|e| Error::io("writing csv", e))?;
            let m = manifest("bench-phases", scenario, vec![*seed], json!({"counts": counts, "n": n}), &[out]);
            write_json(&sidecar(out), &m)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        2
    } else {
        1
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::invalid(e.to_string()))
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return 1;
    }
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_appends() {
        assert_eq!(sidecar(Path::new("a/b.jsonl")), PathBuf::from("a/b.jsonl.manifest.json"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::invalid("x")), 1);
        assert_eq!(exit_code(&Error::io("x", std::io::Error::other("y"))), 2);
    }

    #[test]
    fn parses_lists() {
        let c = Cli::try_parse_from([
            "airs-lab", "schedule", "--scenario", "s.json", "--algo", "smib,random,exact", "--seed", "1,2", "--out", "o",
        ])
        .unwrap();
        let Command::Schedule { algo, seed, .. } = c.command else { panic!() };
        assert_eq!(algo, vec![Algo::Smib, Algo::Random, Algo::Exact]);
        assert_eq!(seed, vec![1, 2]);
    }
}
