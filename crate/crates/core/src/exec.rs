//! Whole-run drivers: seeded sampling, exact branch enumeration and run
//! statistics.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::machine::{extract_output, init_configuration, step, Configuration, MachineDescription, MachineError, Verdict};
use crate::quantum::{sample_index, Outcome, StateVector};

pub const DEFAULT_MAX_STEPS: usize = 100_000;
pub const DEFAULT_BRANCH_CAP: usize = 1_000_000;
/// Halted outputs closer than this are reported as one entry.
pub const OUTPUT_MERGE_FIDELITY: f64 = 1.0 - 1e-9;
const STATE_MERGE_FIDELITY: f64 = 1.0 - 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum RunVerdict {
    Accept,
    Reject,
    Output(StateVector),
    NonHalt,
    Fault(String),
}

impl RunVerdict {
    fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Accept => RunVerdict::Accept,
            Verdict::Reject => RunVerdict::Reject,
            Verdict::Output(s) => RunVerdict::Output(s),
        }
    }

    pub fn label(&self) -> String {
        match self {
            RunVerdict::Accept => "Accept".into(),
            RunVerdict::Reject => "Reject".into(),
            RunVerdict::Output(_) => "Output".into(),
            RunVerdict::NonHalt => "NonHalt".into(),
            RunVerdict::Fault(k) => format!("Fault({k})"),
        }
    }

    /// Equality with output states compared up to global phase.
    pub fn equivalent(&self, other: &RunVerdict, fidelity: f64) -> bool {
        match (self, other) {
            (RunVerdict::Output(a), RunVerdict::Output(b)) => {
                a.d() == b.d() && a.cells() == b.cells() && a.fidelity(b).is_ok_and(|f| f >= fidelity)
            }
            _ => self == other,
        }
    }

    pub fn is_fault(&self) -> bool {
        matches!(self, RunVerdict::Fault(_))
    }
}

impl fmt::Display for RunVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunVerdict::Output(s) => write!(f, "Output({} cells)", s.cells()),
            other => f.write_str(&other.label()),
        }
    }
}

fn fault_kind(e: &MachineError) -> String {
    match e {
        MachineError::UndefinedTransition { state, outcome } => format!("undefined-transition δ({state}, {outcome})"),
        MachineError::EntangledOutput(_) => "entangled-output".into(),
        other => other.to_string(),
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub verdict: RunVerdict,
    pub steps: usize,
    pub trace: Vec<Outcome>,
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("branch count {0} exceeds the cap {1}")]
    BranchCap(usize, usize),
}

/// Samples one run: every step draws its outcome from a ChaCha8 stream
/// seeded with `seed`.
pub fn run_sampled(
    m: &MachineDescription,
    input: &StateVector,
    seed: u64,
    max_steps: usize,
) -> Result<RunOutcome, MachineError> {
    run_sampled_with(m, input, seed, max_steps, false)
}

pub fn run_sampled_with(
    m: &MachineDescription,
    input: &StateVector,
    seed: u64,
    max_steps: usize,
    allow_blank: bool,
) -> Result<RunOutcome, MachineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = init_configuration(m, input, allow_blank)?;
    loop {
        if c.control.is_halting() {
            let verdict = match extract_output(m, &c) {
                Ok(v) => RunVerdict::from_verdict(v),
                Err(e) => RunVerdict::Fault(fault_kind(&e)),
            };
            return Ok(RunOutcome {
                verdict,
                steps: c.steps,
                trace: c.trace.to_vec(),
            });
        }
        if c.steps >= max_steps {
            return Ok(RunOutcome {
                verdict: RunVerdict::NonHalt,
                steps: c.steps,
                trace: c.trace.to_vec(),
            });
        }
        let branches = match step(m, &c) {
            Ok(b) => b,
            Err(e @ (MachineError::UndefinedTransition { .. } | MachineError::EntangledOutput(_))) => {
                return Ok(RunOutcome {
                    verdict: RunVerdict::Fault(fault_kind(&e)),
                    steps: c.steps,
                    trace: c.trace.to_vec(),
                })
            }
            Err(e) => return Err(e),
        };
        let weights: Vec<f64> = branches.iter().map(|b| b.probability).collect();
        let idx = sample_index(&weights, &mut rng).map_err(MachineError::from)?;
        c = branches.into_iter().nth(idx).expect("index in range").config;
    }
}

/// How live branches may be combined during enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MergePolicy {
    /// Branches stay apart unless classical configuration and outcome
    /// trace both coincide.
    #[default]
    Trace,
    /// Also combine branches with equal classical configuration whose
    /// quantum states agree up to global phase; their futures coincide.
    EquivalentState,
}

#[derive(Clone, Debug)]
pub struct DistOptions {
    pub max_steps: usize,
    pub prune_eps: f64,
    pub branch_cap: usize,
    pub merge: MergePolicy,
    pub allow_blank_input: bool,
}

impl Default for DistOptions {
    fn default() -> Self {
        DistOptions {
            max_steps: DEFAULT_MAX_STEPS,
            prune_eps: 0.0,
            branch_cap: DEFAULT_BRANCH_CAP,
            merge: MergePolicy::Trace,
            allow_blank_input: false,
        }
    }
}

impl DistOptions {
    pub fn steps(max_steps: usize) -> Self {
        DistOptions {
            max_steps,
            ..Self::default()
        }
    }

    pub fn merged(mut self) -> Self {
        self.merge = MergePolicy::EquivalentState;
        self
    }
}

#[derive(Clone, Debug)]
pub struct DistEntry {
    pub verdict: RunVerdict,
    pub probability: f64,
    /// Outcome trace of the first branch aggregated into this entry.
    pub trace: Vec<Outcome>,
    /// Halting steps with the mass that halted at each.
    pub steps: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, Default)]
pub struct BranchDistribution {
    pub entries: Vec<DistEntry>,
    /// Mass still running at the step cap.
    pub nonhalt_mass: f64,
    /// Mass dropped below the prune threshold.
    pub pruned_mass: f64,
    /// Live branches at the cap plus dropped branches.
    pub unresolved_branches: usize,
    /// Largest frontier seen.
    pub peak_branches: usize,
}

impl BranchDistribution {
    pub fn residual(&self) -> f64 {
        self.nonhalt_mass + self.pruned_mass
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum::<f64>() + self.residual()
    }

    pub fn probability_of(&self, v: &RunVerdict) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.verdict.equivalent(v, OUTPUT_MERGE_FIDELITY))
            .map(|e| e.probability)
            .sum()
    }

    pub fn halting_times(&self) -> BTreeMap<usize, f64> {
        let mut h = BTreeMap::new();
        for e in &self.entries {
            for (s, p) in &e.steps {
                *h.entry(*s).or_insert(0.0) += p;
            }
        }
        h
    }

    pub fn max_halting_step(&self) -> Option<usize> {
        self.entries.iter().filter_map(|e| e.steps.keys().next_back().copied()).max()
    }

    fn record(&mut self, verdict: RunVerdict, p: f64, c: &Configuration) {
        if let Some(e) = self
            .entries
            .iter_mut()
            .find(|e| e.verdict.equivalent(&verdict, OUTPUT_MERGE_FIDELITY))
        {
            e.probability += p;
            *e.steps.entry(c.steps).or_insert(0.0) += p;
            return;
        }
        self.entries.push(DistEntry {
            verdict,
            probability: p,
            trace: c.trace.to_vec(),
            steps: BTreeMap::from([(c.steps, p)]),
        });
    }
}

fn merge_into(frontier: &mut Vec<(Configuration, f64)>, c: Configuration, p: f64, policy: MergePolicy) {
    let found = frontier.iter_mut().find(|(f, _)| {
        f.same_classical(&c)
            && match policy {
                MergePolicy::Trace => f.trace == c.trace,
                MergePolicy::EquivalentState => f.state.fidelity(&c.state).is_ok_and(|x| x >= STATE_MERGE_FIDELITY),
            }
    });
    match found {
        Some((_, q)) => *q += p,
        None => frontier.push((c, p)),
    }
}

/// Breadth-first enumeration of every branch up to `max_steps`.
pub fn run_distribution(
    m: &MachineDescription,
    input: &StateVector,
    opts: &DistOptions,
) -> Result<BranchDistribution, ExecError> {
    let mut dist = BranchDistribution::default();
    let mut frontier = vec![(init_configuration(m, input, opts.allow_blank_input)?, 1.0)];
    loop {
        let mut next: Vec<(Configuration, f64)> = Vec::new();
        for (c, p) in frontier {
            if c.control.is_halting() {
                let v = match extract_output(m, &c) {
                    Ok(v) => RunVerdict::from_verdict(v),
                    Err(e) => RunVerdict::Fault(fault_kind(&e)),
                };
                dist.record(v, p, &c);
                continue;
            }
            if c.steps >= opts.max_steps {
                dist.nonhalt_mass += p;
                dist.unresolved_branches += 1;
                continue;
            }
            match step(m, &c) {
                Ok(branches) => {
                    for b in branches {
                        let q = p * b.probability;
                        if q <= opts.prune_eps {
                            dist.pruned_mass += q;
                            dist.unresolved_branches += 1;
                        } else {
                            merge_into(&mut next, b.config, q, opts.merge);
                        }
                    }
                }
                Err(e @ (MachineError::UndefinedTransition { .. } | MachineError::EntangledOutput(_))) => {
                    dist.record(RunVerdict::Fault(fault_kind(&e)), p, &c);
                }
                Err(e) => return Err(e.into()),
            }
            if next.len() > opts.branch_cap {
                return Err(ExecError::BranchCap(next.len(), opts.branch_cap));
            }
        }
        if next.is_empty() {
            return Ok(dist);
        }
        dist.peak_branches = dist.peak_branches.max(next.len());
        frontier = next;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStatistics {
    pub samples: usize,
    pub acceptance_rate: f64,
    pub verdict_counts: BTreeMap<String, usize>,
    pub halting_histogram: BTreeMap<usize, usize>,
    pub las_vegas_empirical: bool,
    pub monte_carlo_certified: bool,
}

/// Samples `samples` runs with seeds `seed ^ i` and certifies a step bound
/// by exact enumeration.
pub fn run_statistics(
    m: &MachineDescription,
    input: &StateVector,
    samples: usize,
    seed: u64,
    max_steps: usize,
    merge: MergePolicy,
) -> Result<RunStatistics, ExecError> {
    assert!(samples >= 1);
    let runs: Vec<RunOutcome> = (0..samples as u64)
        .into_par_iter()
        .map(|i| run_sampled(m, input, seed ^ i, max_steps))
        .collect::<Result<_, _>>()?;
    let mut counts = BTreeMap::new();
    let mut hist = BTreeMap::new();
    let mut accepted = 0;
    for r in &runs {
        *counts.entry(r.verdict.label()).or_insert(0) += 1;
        if !matches!(r.verdict, RunVerdict::NonHalt) {
            *hist.entry(r.steps).or_insert(0) += 1;
        }
        if r.verdict == RunVerdict::Accept {
            accepted += 1;
        }
    }
    let settled: Vec<&RunVerdict> = runs
        .iter()
        .map(|r| &r.verdict)
        .filter(|v| !v.is_fault() && !matches!(v, RunVerdict::NonHalt))
        .collect();
    let las_vegas = settled
        .windows(2)
        .all(|w| w[0].equivalent(w[1], OUTPUT_MERGE_FIDELITY));
    let mut opts = DistOptions::steps(max_steps);
    opts.merge = merge;
    let dist = run_distribution(m, input, &opts)?;
    Ok(RunStatistics {
        samples,
        acceptance_rate: accepted as f64 / samples as f64,
        verdict_counts: counts,
        halting_histogram: hist,
        las_vegas_empirical: las_vegas,
        monte_carlo_certified: dist.unresolved_branches == 0,
    })
}
