// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 analysis error, 3 soundness flag
//! set on some run, 4 fusion and filtered runs disagree (`--mode diff`).

use crate::ci::{identify_contrib, CondPhase, NecessarySet, Reach};
use crate::conditions::BuiltinSolver;
use crate::engine::{analyze, AnalysisResult, EngineConfig};
use crate::frontend::{parse_program, print_program, CallGraph, ProgramIR};
use crate::metrics::{assemble_report, program_hash, Metrics, RunMode, RunRecord};
use crate::oracle;
use crate::pdg::{export_dot, export_json, Checker, Pdg};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;
pub const EXIT_UNSOUND: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "vfprune", version, about = "Path-sensitive value-flow analysis with summary pruning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Analyze programs and write a JSON report.
    Analyze {
        #[arg(long, value_enum, default_value_t = Mode::Fusion)]
        mode: Mode,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Dump the PDG or the necessary set.
    Dump {
        #[arg(long, value_enum, default_value_t = DumpWhat::Pdg)]
        what: DumpWhat,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Shorthand for `dump --what vn`.
    DumpVn {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Classify every summary of an unfiltered run.
    Classify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fusion,
    Light,
    CflLight,
    Diff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpWhat {
    /// Graphviz DOT.
    Pdg,
    PdgJson,
    Vn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReachArg {
    Bfs,
    Cfl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CheckerArg {
    Npd,
    Labels,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Input programs.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReachArg::Bfs)]
    reach: ReachArg,
    #[arg(long, value_enum, default_value_t = CheckerArg::Npd)]
    checker: CheckerArg,
    /// Source label globs for `--checker labels`, comma separated.
    #[arg(long, value_delimiter = ',')]
    sources: Vec<String>,
    /// Sink label globs for `--checker labels`, comma separated.
    #[arg(long, value_delimiter = ',')]
    sinks: Vec<String>,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    max_path_len: u64,
    /// Per function.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_summaries: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    guard_depth: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    scc_iters: u64,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero all timing fields.
    #[arg(long)]
    no_timing: bool,
    /// Force sequential layer processing (overrides --jobs).
    #[arg(long)]
    seq: bool,
    /// Worker threads for units of one call-graph layer.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

/// Everything a command needs besides the subcommand itself.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub mode: Mode,
    pub reach: Reach,
    pub checker: Checker,
    pub engine: EngineConfig,
    pub out: Option<PathBuf>,
    pub no_timing: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Analysis { path: String, msg: String },
    #[error("cannot write {path}: {msg}")]
    Output { path: String, msg: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_ANALYSIS,
        }
    }
}

impl RunConfig {
    /// Defaults for `mode` with no inputs.
    pub fn new(mode: Mode) -> RunConfig {
        RunConfig {
            inputs: Vec::new(),
            mode,
            reach: if mode == Mode::CflLight { Reach::Cfl } else { Reach::Bfs },
            checker: Checker::Npd,
            engine: EngineConfig::default(),
            out: None,
            no_timing: false,
        }
    }

    fn from_args(mode: Mode, a: CommonArgs) -> Result<RunConfig, CliError> {
        let checker = match a.checker {
            CheckerArg::Npd => {
                if !a.sources.is_empty() || !a.sinks.is_empty() {
                    return Err(CliError::Usage(
                        "--sources/--sinks need --checker labels".into(),
                    ));
                }
                Checker::Npd
            }
            CheckerArg::Labels => {
                if a.sources.is_empty() || a.sinks.is_empty() {
                    return Err(CliError::Usage(
                        "--checker labels needs --sources and --sinks".into(),
                    ));
                }
                Checker::Labels {
                    sources: a.sources,
                    sinks: a.sinks,
                }
            }
        };
        let reach = match (mode, a.reach) {
            (Mode::CflLight, _) | (_, ReachArg::Cfl) => Reach::Cfl,
            _ => Reach::Bfs,
        };
        Ok(RunConfig {
            inputs: a.inputs,
            mode,
            reach,
            checker,
            engine: EngineConfig {
                max_path_len: a.max_path_len as usize,
                max_summaries: a.max_summaries as usize,
                guard_depth: a.guard_depth as usize,
                scc_iters: a.scc_iters as usize,
                jobs: if a.seq { None } else { a.jobs.map(|j| j as usize) },
            },
            out: a.out,
            no_timing: a.no_timing,
        })
    }

    fn filtered_mode(&self) -> RunMode {
        match self.reach {
            Reach::Bfs => RunMode::Light,
            Reach::Cfl => RunMode::CflLight,
        }
    }
}

/// A parsed input with its PDG.
pub struct Loaded {
    pub path: String,
    pub program: ProgramIR,
    pub cg: CallGraph,
    pub pdg: Pdg,
    pub hash: String,
}

pub fn load(path: &std::path::Path, checker: &Checker) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Analysis {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let program = parse_program(&text).map_err(|e| CliError::Analysis {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    from_program(&path.display().to_string(), program, checker)
}

/// `name` only shows up in error messages.
pub fn from_program(name: &str, program: ProgramIR, checker: &Checker) -> Result<Loaded, CliError> {
    let cg = CallGraph::build(&program);
    let mut pdg = Pdg::build(&program, &cg);
    pdg.apply_checker(checker).map_err(|e| CliError::Analysis {
        path: name.to_string(),
        msg: e.to_string(),
    })?;
    let hash = program_hash(&print_program(&program));
    Ok(Loaded {
        path: name.to_string(),
        program,
        cg,
        pdg,
        hash,
    })
}

/// Outcome of one analysis run, ready for the report.
pub struct ModeRun {
    pub record: RunRecord,
    pub result: AnalysisResult,
    pub vn: Option<NecessarySet>,
}

pub fn run_mode(l: &Loaded, mode: RunMode, cfg: &RunConfig) -> Result<ModeRun, CliError> {
    let (vn, ci_time) = if mode.filtered() {
        let reach = match mode {
            RunMode::CflLight => Reach::Cfl,
            _ => Reach::Bfs,
        };
        let t = Instant::now();
        let vn = identify_contrib(&l.pdg, reach, CondPhase::Closure);
        (Some(vn), t.elapsed().as_secs_f64())
    } else {
        (None, 0.0)
    };
    let solver = BuiltinSolver::new();
    let result = analyze(&l.pdg, &l.cg, vn.as_ref(), &solver, &cfg.engine).map_err(|e| {
        CliError::Analysis {
            path: l.path.clone(),
            msg: e.to_string(),
        }
    })?;
    let mut metrics = Metrics::from_run(mode, &result, vn.as_ref().map(|v| v.counters.clone()), ci_time);
    if cfg.no_timing {
        metrics.zero_timings();
    }
    Ok(ModeRun {
        record: RunRecord {
            program_hash: l.hash.clone(),
            metrics,
            bugs: result.bugs.clone(),
        },
        result,
        vn,
    })
}

fn classify_into(full: &mut ModeRun, filtered: Option<&ModeRun>) -> Result<(), String> {
    let verdicts = oracle::classify(&full.result.store).map_err(|e| e.to_string())?;
    let redundant = oracle::redundant_ids(&verdicts);
    full.record.metrics.redun = Some(redundant.len());
    if let Some(f) = filtered {
        let pruned = oracle::pruned_ids(&full.result.store, &f.result.store);
        full.record.metrics.identified = Some(redundant.intersection(&pruned).count());
    }
    Ok(())
}

pub struct Outcome {
    pub text: String,
    /// Bugs of the first run.
    pub bugs: usize,
    pub unsound: bool,
    pub mismatch: bool,
}

/// Run the analysis `cfg.mode` asks for and assemble the report.
pub fn analyze_loaded(cfg: &RunConfig, l: &Loaded) -> Result<Outcome, CliError> {
    let analysis_err = |msg: String| CliError::Analysis {
        path: l.path.clone(),
        msg,
    };
    let runs = match cfg.mode {
        Mode::Fusion => {
            let mut f = run_mode(l, RunMode::Fusion, cfg)?;
            classify_into(&mut f, None).map_err(analysis_err)?;
            vec![f]
        }
        Mode::Light | Mode::CflLight => vec![run_mode(l, cfg.filtered_mode(), cfg)?],
        Mode::Diff => {
            let mut f = run_mode(l, RunMode::Fusion, cfg)?;
            let lr = run_mode(l, cfg.filtered_mode(), cfg)?;
            classify_into(&mut f, Some(&lr)).map_err(analysis_err)?;
            vec![f, lr]
        }
    };
    let mismatch = runs.windows(2).any(|w| w[0].record.bugs != w[1].record.bugs);
    let bugs = runs[0].record.bugs.len();
    let unsound = runs.iter().any(|r| r.record.metrics.soundness_flag);
    let records: Vec<RunRecord> = runs.into_iter().map(|r| r.record).collect();
    let text = assemble_report(&records).map_err(|e| analysis_err(e.to_string()))?;
    Ok(Outcome {
        text,
        bugs,
        unsound,
        mismatch,
    })
}

fn cmd_dump(cfg: &RunConfig, l: &Loaded, what: DumpWhat) -> Outcome {
    let text = match what {
        DumpWhat::Pdg => export_dot(&l.pdg),
        DumpWhat::PdgJson => export_json(&l.pdg),
        DumpWhat::Vn => {
            let t = Instant::now();
            let vn = identify_contrib(&l.pdg, cfg.reach, CondPhase::Closure);
            let elapsed = if cfg.no_timing { 0.0 } else { t.elapsed().as_secs_f64() };
            let mut doc = vn.to_json(&l.pdg);
            doc["reach"] = json!(cfg.reach);
            doc["ci_time_s"] = json!(elapsed);
            pretty(&doc)
        }
    };
    Outcome {
        text,
        bugs: 0,
        unsound: false,
        mismatch: false,
    }
}

fn cmd_classify(cfg: &RunConfig, l: &Loaded) -> Result<Outcome, CliError> {
    let f = run_mode(l, RunMode::Fusion, cfg)?;
    let verdicts = oracle::classify(&f.result.store).map_err(|e| CliError::Analysis {
        path: l.path.clone(),
        msg: e.to_string(),
    })?;
    let rows: Vec<Value> = verdicts
        .iter()
        .map(|v| {
            let s = f.result.store.get(v.id);
            json!({
                "id": v.id,
                "kind": s.kind,
                "status": s.status,
                "owner": l.pdg.functions()[s.owner.index()].name,
                "path": s.path_display(&l.pdg),
                "verdict": v.verdict,
                "witness": v.witness,
            })
        })
        .collect();
    let counts: serde_json::Map<String, Value> = oracle::counts(&verdicts)
        .into_iter()
        .map(|(k, n)| (serde_json::to_value(k).unwrap().as_str().unwrap().to_string(), json!(n)))
        .collect();
    let unsound = f.result.stats.soundness_flag;
    let doc = json!({
        "program_hash": l.hash,
        "verdicts": rows,
        "counts": counts,
        "soundness_flag": unsound,
    });
    Ok(Outcome {
        text: pretty(&doc),
        bugs: f.result.bugs.len(),
        unsound,
        mismatch: false,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

/// Joins per-input outputs. A single input is written as is; several JSON
/// documents become one array, several DOT graphs are concatenated.
fn join_outputs(texts: Vec<String>, json_docs: bool) -> String {
    if texts.len() == 1 || !json_docs {
        return texts.concat();
    }
    let docs: Vec<Value> = texts
        .iter()
        .map(|t| serde_json::from_str(t).expect("own output is json"))
        .collect();
    pretty(&Value::Array(docs))
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output {
            path: p.display().to_string(),
            msg: e.to_string(),
        }),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|e| CliError::Output {
                    path: "<stdout>".into(),
                    msg: e.to_string(),
                })
        }
    }
}

fn execute(cmd: Cmd) -> Result<i32, CliError> {
    let (cfg, what) = match cmd {
        Cmd::Analyze { mode, common } => (RunConfig::from_args(mode, common)?, None),
        Cmd::Dump { what, common } => (RunConfig::from_args(Mode::Light, common)?, Some(Some(what))),
        Cmd::DumpVn { common } => (RunConfig::from_args(Mode::Light, common)?, Some(Some(DumpWhat::Vn))),
        Cmd::Classify { common } => (RunConfig::from_args(Mode::Fusion, common)?, Some(None)),
    };
    let mut texts = Vec::new();
    let (mut unsound, mut mismatch) = (false, false);
    for input in &cfg.inputs {
        let l = load(input, &cfg.checker)?;
        let o = match what {
            None => analyze_loaded(&cfg, &l)?,
            Some(Some(w)) => cmd_dump(&cfg, &l, w),
            Some(None) => cmd_classify(&cfg, &l)?,
        };
        unsound |= o.unsound;
        mismatch |= o.mismatch;
        texts.push(o.text);
    }
    let json_docs = what != Some(Some(DumpWhat::Pdg));
    write_out(&cfg.out, &join_outputs(texts, json_docs))?;
    Ok(if mismatch {
        EXIT_MISMATCH
    } else if unsound {
        EXIT_UNSOUND
    } else {
        EXIT_OK
    })
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("vfprune: {e}");
            e.exit_code()
        }
    }
}
