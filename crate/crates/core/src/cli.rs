//! Command-line surface. [`execute`] is the whole program minus process
//! plumbing, so tests drive it directly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{compare_runs, embed_state, no_entanglement_audit, AuditResult};
use crate::compile::{
    compile_circuit, compile_pattern, compile_tm_to_cqtm, compile_tm_to_mqtm, compile_to_mqtm, compile_to_two_tapes,
    Decomposition,
};
use crate::exec::{run_distribution, run_sampled_with, DistOptions, MergePolicy, RunVerdict, DEFAULT_MAX_STEPS};
use crate::io::{self, Artifact};
use crate::machine::{validate_machine, MachineDescription};
use crate::quantum::{StateVector, COMPLETENESS_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAULT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cqtm", version, about = "Run, compile and compare classically-controlled quantum Turing machines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct InputArgs {
    /// State file, or an inline state such as `0.6|01> + 0.8|10>`.
    #[arg(long)]
    input: String,
    /// Rescale the input to unit norm instead of rejecting it.
    #[arg(long)]
    renorm: bool,
    /// Read the input over this machine's alphabet and map it through the
    /// compiled machine's embedding.
    #[arg(long)]
    source: Option<PathBuf>,
    /// Allow blanks inside the input word.
    #[arg(long)]
    allow_blank: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Pass {
    Tm2cqtm,
    Tm2mqtm,
    K2two,
    Circ2cqtm,
    Pat2cqtm,
    Cqtm2mqtm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Merge {
    Trace,
    State,
}

impl From<Merge> for MergePolicy {
    fn from(m: Merge) -> Self {
        match m {
            Merge::Trace => MergePolicy::Trace,
            Merge::State => MergePolicy::EquivalentState,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one run.
    Run {
        machine: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long)]
        json: bool,
    },
    /// Exact output distribution by branch enumeration.
    Dist {
        machine: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, default_value_t = 0.0)]
        prune: f64,
        /// `state` also merges branches whose states agree up to phase.
        #[arg(long, value_enum, default_value_t = Merge::Trace)]
        merge: Merge,
        #[arg(long)]
        json: bool,
    },
    /// Translate a TM, circuit, pattern or machine into a machine.
    Compile {
        #[arg(long, value_enum)]
        pass: Pass,
        src: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Transform decompositions for `k2two`.
        #[arg(long)]
        decomp: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Validate a machine and report completeness and projectivity.
    Verify {
        machine: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Compare output distributions of two machines on every state in a
    /// directory.
    Compare {
        m1: PathBuf,
        m2: PathBuf,
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long, default_value_t = 2000)]
        max_steps: usize,
        #[arg(long, value_enum, default_value_t = Merge::State)]
        merge: Merge,
        #[arg(long)]
        json: bool,
    },
    /// Check that a 1-tape machine never entangles its cells.
    AuditEntanglement {
        machine: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 50)]
        max_steps: usize,
        #[arg(long)]
        json: bool,
    },
    /// Summarize a machine.
    Info {
        machine: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Fault(String);

impl<E: std::fmt::Display> From<E> for Fault {
    fn from(e: E) -> Self {
        Fault(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Fault> {
    fs::read_to_string(path).map_err(|e| Fault(format!("{}: {e}", path.display())))
}

fn load_artifact(path: &Path) -> Result<Artifact, Fault> {
    io::parse_artifact(&read(path)?).map_err(|e| Fault(format!("{}:{e}", path.display())))
}

fn load_machine(path: &Path) -> Result<MachineDescription, Fault> {
    match load_artifact(path)? {
        Artifact::Machine(m) => Ok(m),
        other => Err(Fault(format!("{}: expected a machine, found a {}", path.display(), other.kind()))),
    }
}

fn load_state(m: &MachineDescription, args: &InputArgs) -> Result<StateVector, Fault> {
    let source = args.source.as_deref().map(load_machine).transpose()?;
    let alphabet = source.as_ref().map_or(&m.qalphabet, |s| &s.qalphabet);
    let path = Path::new(&args.input);
    let (text, origin) = if !path.exists() && args.input.contains('|') {
        (args.input.clone(), "<inline>".to_string())
    } else {
        (read(path)?, path.display().to_string())
    };
    let s = io::parse_state(&text, alphabet, args.renorm).map_err(|e| Fault(format!("{origin}:{e}")))?;
    match &source {
        Some(src) => Ok(embed_state(m, src, &s)?),
        None => Ok(s),
    }
}

pub fn state_json(s: &StateVector, m: &MachineDescription) -> Value {
    let terms: Vec<Value> = s
        .terms()
        .iter()
        .map(|(i, a)| {
            let word: Vec<&str> = s.digits(*i).into_iter().map(|g| m.qalphabet.symbol(g)).collect();
            json!({ "word": word, "re": a.re, "im": a.im })
        })
        .collect();
    json!({ "cells": s.cells(), "amplitudes": terms })
}

fn verdict_json(v: &RunVerdict, m: &MachineDescription) -> Value {
    match v {
        RunVerdict::Output(s) => json!({ "verdict": "Output", "state": state_json(s, m) }),
        other => json!({ "verdict": other.label() }),
    }
}

fn emit_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn run(cmd: Command) -> Result<(i32, String), Fault> {
    let mut out = String::new();
    let code = match cmd {
        Command::Run { machine, input, seed, max_steps, json } => {
            let m = load_machine(&machine)?;
            let psi = load_state(&m, &input)?;
            let r = run_sampled_with(&m, &psi, seed, max_steps, input.allow_blank)?;
            let trace: Vec<&str> = r.trace.iter().map(|o| o.as_str()).collect();
            if json {
                let mut v = verdict_json(&r.verdict, &m);
                v["steps"] = json!(r.steps);
                v["trace"] = json!(trace);
                v["seed"] = json!(seed);
                out = emit_json(&v);
            } else {
                let _ = writeln!(out, "{}", r.verdict.label());
                let _ = writeln!(out, "steps {}", r.steps);
                if let RunVerdict::Output(s) = &r.verdict {
                    out.push_str(&io::render_state(s, &m.qalphabet));
                }
            }
            if r.verdict.is_fault() {
                EXIT_FAULT
            } else {
                EXIT_OK
            }
        }
        Command::Dist { machine, input, max_steps, prune, merge, json } => {
            let m = load_machine(&machine)?;
            let psi = load_state(&m, &input)?;
            let opts = DistOptions {
                max_steps,
                prune_eps: prune,
                merge: merge.into(),
                allow_blank_input: input.allow_blank,
                ..DistOptions::default()
            };
            let d = run_distribution(&m, &psi, &opts)?;
            let mut totals: BTreeMap<String, f64> = BTreeMap::new();
            for e in &d.entries {
                *totals.entry(e.verdict.label()).or_insert(0.0) += e.probability;
            }
            if json {
                let entries: Vec<Value> = d
                    .entries
                    .iter()
                    .map(|e| {
                        let mut v = verdict_json(&e.verdict, &m);
                        v["probability"] = json!(e.probability);
                        v["trace"] = json!(e.trace.iter().map(|o| o.as_str()).collect::<Vec<_>>());
                        v["halting_steps"] = json!(e.steps.iter().map(|(s, p)| json!([s, p])).collect::<Vec<_>>());
                        v
                    })
                    .collect();
                out = emit_json(&json!({
                    "probabilities": totals,
                    "entries": entries,
                    "nonhalt_mass": d.nonhalt_mass,
                    "pruned_mass": d.pruned_mass,
                    "residual": d.residual(),
                    "max_steps": max_steps,
                }));
            } else {
                for e in &d.entries {
                    let _ = writeln!(out, "{} {}", e.verdict.label(), e.probability);
                    if let RunVerdict::Output(s) = &e.verdict {
                        out.push_str(&io::render_state(s, &m.qalphabet));
                    }
                }
                let _ = writeln!(out, "residual {}", d.residual());
            }
            EXIT_OK
        }
        Command::Compile { pass, src, output, decomp, json } => {
            let art = load_artifact(&src)?;
            let wrong = |want: &str| Fault(format!("{}: pass needs a {want} file, found a {}", src.display(), art.kind()));
            let (m, loops) = match (pass, &art) {
                (Pass::Tm2cqtm, Artifact::Tm(tm)) => (compile_tm_to_cqtm(tm)?, Vec::new()),
                (Pass::Tm2mqtm, Artifact::Tm(tm)) => compile_tm_to_mqtm(tm)?,
                (Pass::Circ2cqtm, Artifact::Circuit(c)) => (compile_circuit(c)?, Vec::new()),
                (Pass::Pat2cqtm, Artifact::Pattern(p)) => (compile_pattern(p)?.machine, Vec::new()),
                (Pass::Cqtm2mqtm, Artifact::Machine(m)) => {
                    let c = compile_to_mqtm(m)?;
                    (c.machine, c.loops)
                }
                (Pass::K2two, Artifact::Machine(m)) => {
                    let d = match &decomp {
                        Some(p) => match load_artifact(p)? {
                            Artifact::Decomposition(d) => d,
                            other => return Err(Fault(format!("{}: expected decompositions, found a {}", p.display(), other.kind()))),
                        },
                        None => Decomposition::new(),
                    };
                    (compile_to_two_tapes(m, &d)?, Vec::new())
                }
                (Pass::Tm2cqtm | Pass::Tm2mqtm, _) => return Err(wrong("tm")),
                (Pass::Circ2cqtm, _) => return Err(wrong("circuit")),
                (Pass::Pat2cqtm, _) => return Err(wrong("pattern")),
                (Pass::Cqtm2mqtm | Pass::K2two, _) => return Err(wrong("machine")),
            };
            fs::write(&output, io::render_machine(&m)).map_err(|e| Fault(format!("{}: {e}", output.display())))?;
            let summary = json!({
                "output": output.display().to_string(),
                "kind": m.kind,
                "tapes": m.tapes,
                "states": m.states().len(),
                "transforms": m.transforms().count(),
                "transitions": m.delta.len(),
                "rus_loops": loops.iter().map(|l| l.head.clone()).collect::<Vec<_>>(),
            });
            if json {
                out = emit_json(&summary);
            } else {
                let _ = writeln!(
                    out,
                    "wrote {} ({}, {} tapes, {} states, {} transitions)",
                    output.display(),
                    m.kind,
                    m.tapes,
                    m.states().len(),
                    m.delta.len()
                );
            }
            EXIT_OK
        }
        Command::Verify { machine, json } => {
            let m = load_machine(&machine)?;
            let issues = validate_machine(&m).err().unwrap_or_default();
            let non_projective: Vec<&str> = m
                .transforms()
                .filter(|t| !t.full.is_projective(COMPLETENESS_TOL))
                .map(|t| t.name.as_str())
                .collect();
            if json {
                out = emit_json(&json!({
                    "valid": issues.is_empty(),
                    "issues": issues.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
                    "transforms": m.transforms().count(),
                    "all_projective": non_projective.is_empty(),
                    "non_projective": non_projective,
                }));
            } else {
                for i in &issues {
                    let _ = writeln!(out, "{i}");
                }
                if issues.is_empty() {
                    let _ = writeln!(out, "valid: {} transforms complete", m.transforms().count());
                }
                if non_projective.is_empty() {
                    let _ = writeln!(out, "all transforms projective");
                } else {
                    let _ = writeln!(out, "non-projective: {}", non_projective.join(" "));
                }
            }
            if issues.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAULT
            }
        }
        Command::Compare { m1, m2, inputs, max_steps, merge, json } => {
            let a = load_machine(&m1)?;
            let b = load_machine(&m2)?;
            let mut files: Vec<PathBuf> = fs::read_dir(&inputs)
                .map_err(|e| Fault(format!("{}: {e}", inputs.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            let states = files
                .iter()
                .map(|p| io::parse_state(&read(p)?, &a.qalphabet, false).map_err(|e| Fault(format!("{}:{e}", p.display()))))
                .collect::<Result<Vec<_>, _>>()?;
            let mut opts = DistOptions::steps(max_steps);
            opts.merge = merge.into();
            let r = compare_runs(&a, &b, &states, &opts);
            let same = r.verdict_match;
            if json {
                out = emit_json(&serde_json::to_value(&r)?);
            } else {
                let _ = writeln!(out, "inputs {}", r.inputs);
                let _ = writeln!(out, "verdict_match {}", r.verdict_match);
                let _ = writeln!(out, "max_probability_gap {}", r.max_probability_gap);
                let _ = writeln!(out, "min_output_fidelity {}", r.min_output_fidelity);
                let _ = writeln!(out, "max_tv {}", r.max_tv);
                for u in &r.unmatched_entries {
                    let _ = writeln!(out, "unmatched {u}");
                }
            }
            if same {
                EXIT_OK
            } else {
                EXIT_FAULT
            }
        }
        Command::AuditEntanglement { machine, input, max_steps, json } => {
            let m = load_machine(&machine)?;
            let psi = load_state(&m, &input)?;
            let r = no_entanglement_audit(&m, &psi, max_steps)?;
            if json {
                out = emit_json(&serde_json::to_value(&r)?);
            } else {
                match &r {
                    AuditResult::Pass { steps, configurations, dropped_mass } => {
                        let _ = writeln!(out, "pass: product state for {steps} steps over {configurations} configurations");
                        if *dropped_mass > 0.0 {
                            let _ = writeln!(out, "branch mass {dropped_mass:.3e} dropped by the frontier budget");
                        }
                    }
                    AuditResult::Counterexample { step, bipartition, rank, purity } => {
                        let _ = writeln!(
                            out,
                            "entangled at step {step}: cell {bipartition:?} has Schmidt rank {rank}, purity {purity}"
                        );
                    }
                }
            }
            if r.passed() {
                EXIT_OK
            } else {
                EXIT_FAULT
            }
        }
        Command::Info { machine, json } => {
            let m = load_machine(&machine)?;
            let transforms: Vec<Value> = m
                .transforms()
                .map(|t| {
                    json!({
                        "name": t.name,
                        "arity": t.base.arity_in(),
                        "outcomes": t.base.outcomes().map(|o| o.as_str()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let v = json!({
                "name": m.name,
                "kind": m.kind,
                "tapes": m.tapes,
                "start": m.start,
                "qalphabet": m.qalphabet.symbols(),
                "calphabet": m.calphabet,
                "states": m.states().into_iter().collect::<Vec<_>>(),
                "transitions": m.delta.len(),
                "transforms": transforms,
            });
            if json {
                out = emit_json(&v);
            } else {
                let _ = writeln!(out, "{} ({}, {} tapes)", m.name, m.kind, m.tapes);
                let _ = writeln!(out, "Σ_Q {}", m.qalphabet.symbols().join(" "));
                let _ = writeln!(out, "Σ_C {}", m.calphabet.join(" "));
                let _ = writeln!(out, "states {}", m.states().len());
                let _ = writeln!(out, "transitions {}", m.delta.len());
                for t in m.transforms() {
                    let outs: Vec<&str> = t.base.outcomes().map(|o| o.as_str()).collect();
                    let _ = writeln!(out, "transform {} arity {} outcomes {}", t.name, t.base.arity_in(), outs.join(" "));
                }
            }
            EXIT_OK
        }
    };
    Ok((code, out))
}

/// Runs the command line `argv` (program name first).
pub fn execute<I, S>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CliOutput {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match run(cli.command) {
        Ok((code, stdout)) => CliOutput {
            code,
            stdout,
            stderr: String::new(),
        },
        Err(Fault(msg)) => CliOutput {
            code: EXIT_FAULT,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
    }
}
