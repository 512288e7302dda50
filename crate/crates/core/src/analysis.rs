//! Distribution comparison, compiler equivalence reports and audits.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use serde::Serialize;

use crate::compile::RusLoop;
use crate::exec::{run_distribution, BranchDistribution, DistOptions, ExecError, MergePolicy, RunVerdict};
use crate::machine::{init_configuration, step, Configuration, Control, MachineDescription, MachineError};
use crate::quantum::{apply_branching, entanglement_profile, factor_out, Outcome, QuantumError, StateVector};

/// Output states at least this close are the same verdict when comparing
/// distributions.
pub const MATCH_FIDELITY: f64 = 1.0 - 1e-6;

/// Entries below this mass are ignored when deciding whether two verdict
/// sets agree.
pub const VERDICT_MASS_TOL: f64 = 1e-9;

/// `(verdict, probability)` with non-halting and pruned mass folded into one
/// `NonHalt` entry.
fn canonical(d: &BranchDistribution) -> Vec<(RunVerdict, f64)> {
    let mut v: Vec<(RunVerdict, f64)> = d.entries.iter().map(|e| (e.verdict.clone(), e.probability)).collect();
    if d.residual() > 0.0 {
        v.push((RunVerdict::NonHalt, d.residual()));
    }
    v
}

fn fidelity(a: &RunVerdict, b: &RunVerdict) -> Option<f64> {
    match (a, b) {
        (RunVerdict::Output(x), RunVerdict::Output(y)) if x.d() == y.d() && x.cells() == y.cells() => x.fidelity(y).ok(),
        (RunVerdict::Output(_), _) | (_, RunVerdict::Output(_)) => None,
        _ => (a == b).then_some(1.0),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Matching {
    /// `(index in a, index in b, fidelity)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
    /// Entries of `a` with more than one candidate above the threshold.
    pub ambiguous: Vec<usize>,
}

/// Greedy matching of verdicts, best fidelity first, threshold
/// [`MATCH_FIDELITY`].
pub fn match_verdicts(a: &[(RunVerdict, f64)], b: &[(RunVerdict, f64)]) -> Matching {
    let mut cands = Vec::new();
    let mut ambiguous = Vec::new();
    for (i, (va, _)) in a.iter().enumerate() {
        let mut n = 0;
        for (j, (vb, _)) in b.iter().enumerate() {
            if let Some(f) = fidelity(va, vb).filter(|&f| f >= MATCH_FIDELITY) {
                cands.push((i, j, f));
                n += 1;
            }
        }
        if n > 1 {
            ambiguous.push(i);
        }
    }
    cands.sort_by(|x, y| y.2.total_cmp(&x.2));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut pairs = Vec::new();
    for (i, j, f) in cands {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j, f));
        }
    }
    Matching {
        pairs,
        unmatched_a: (0..a.len()).filter(|&i| !used_a[i]).collect(),
        unmatched_b: (0..b.len()).filter(|&j| !used_b[j]).collect(),
        ambiguous,
    }
}

/// Total variation distance: half the summed gaps over matched verdicts
/// plus all unmatched mass.
pub fn tv_distance(a: &BranchDistribution, b: &BranchDistribution) -> f64 {
    tv_of(&canonical(a), &canonical(b))
}

fn tv_of(a: &[(RunVerdict, f64)], b: &[(RunVerdict, f64)]) -> f64 {
    let m = match_verdicts(a, b);
    let matched: f64 = m.pairs.iter().map(|&(i, j, _)| (a[i].1 - b[j].1).abs()).sum();
    let lone: f64 = m.unmatched_a.iter().map(|&i| a[i].1).sum::<f64>() + m.unmatched_b.iter().map(|&j| b[j].1).sum::<f64>();
    0.5 * (matched + lone)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub verdict_match: bool,
    pub max_probability_gap: f64,
    pub min_output_fidelity: f64,
    /// Human-readable descriptions of unmatched or ambiguous entries and of
    /// inputs on which a run failed.
    pub unmatched_entries: Vec<String>,
    pub max_tv: f64,
    pub inputs: usize,
}

impl EquivalenceReport {
    fn zero() -> Self {
        EquivalenceReport {
            verdict_match: true,
            max_probability_gap: 0.0,
            min_output_fidelity: 1.0,
            unmatched_entries: Vec::new(),
            max_tv: 0.0,
            inputs: 0,
        }
    }
}

/// Re-expresses a state over the source alphabet in a compiled machine's
/// alphabet through its embedding, or by symbol name when there is none.
pub fn embed_state(target: &MachineDescription, source: &MachineDescription, s: &StateVector) -> Result<StateVector, MachineError> {
    let map = source
        .qalphabet
        .symbols()
        .iter()
        .map(|a| {
            let t = match &target.embedding {
                Some(e) => e.map.get(a).ok_or_else(|| MachineError::Invalid(format!("embedding has no image for `{a}`")))?,
                None => a,
            };
            Ok(target.qalphabet.digit(t)?)
        })
        .collect::<Result<Vec<_>, MachineError>>()?;
    Ok(s.relabel(target.d(), &map)?)
}

fn embed_verdicts(
    target: &MachineDescription,
    source: &MachineDescription,
    v: Vec<(RunVerdict, f64)>,
) -> Result<Vec<(RunVerdict, f64)>, MachineError> {
    v.into_iter()
        .map(|(verdict, p)| {
            Ok(match verdict {
                RunVerdict::Output(s) => (RunVerdict::Output(embed_state(target, source, &s)?), p),
                other => (other, p),
            })
        })
        .collect()
}

/// Runs both machines on every input (inputs are over the source alphabet)
/// and reports the worst disagreement. Failures are recorded, not raised.
pub fn compare_runs(
    source: &MachineDescription,
    target: &MachineDescription,
    inputs: &[StateVector],
    opts: &DistOptions,
) -> EquivalenceReport {
    let mut r = EquivalenceReport::zero();
    for (n, input) in inputs.iter().enumerate() {
        r.inputs += 1;
        let pair = (|| -> Result<_, String> {
            let a = run_distribution(source, input, opts).map_err(|e| e.to_string())?;
            let tin = embed_state(target, source, input).map_err(|e| e.to_string())?;
            let b = run_distribution(target, &tin, opts).map_err(|e| e.to_string())?;
            let a = embed_verdicts(target, source, canonical(&a)).map_err(|e| e.to_string())?;
            Ok((a, canonical(&b)))
        })();
        let (a, b) = match pair {
            Ok(p) => p,
            Err(e) => {
                r.verdict_match = false;
                r.unmatched_entries.push(format!("input {n}: {e}"));
                continue;
            }
        };
        let m = match_verdicts(&a, &b);
        for &(i, j, f) in &m.pairs {
            r.max_probability_gap = r.max_probability_gap.max((a[i].1 - b[j].1).abs());
            if matches!(a[i].0, RunVerdict::Output(_)) {
                r.min_output_fidelity = r.min_output_fidelity.min(f);
            }
        }
        for (side, idx, list) in [("source", &m.unmatched_a, &a), ("target", &m.unmatched_b, &b)] {
            for &i in idx {
                let (v, p) = &list[i];
                r.max_probability_gap = r.max_probability_gap.max(*p);
                if *p > VERDICT_MASS_TOL {
                    r.verdict_match = false;
                }
                r.unmatched_entries.push(format!("input {n}: {side} {v} with probability {p:.3e}"));
            }
        }
        for &i in &m.ambiguous {
            r.unmatched_entries.push(format!("input {n}: source {} matches several target entries", a[i].0));
        }
        r.max_tv = r.max_tv.max(tv_of(&a, &b));
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum AuditResult {
    Pass {
        steps: usize,
        configurations: usize,
        /// Branch mass dropped by the frontier budget; 0 when every branch
        /// was followed.
        dropped_mass: f64,
    },
    Counterexample {
        step: usize,
        /// The cell cut off from the rest of the register.
        bipartition: Vec<usize>,
        rank: usize,
        purity: f64,
    },
}

impl AuditResult {
    pub fn passed(&self) -> bool {
        matches!(self, AuditResult::Pass { .. })
    }
}

/// Support size above which the audit continues a verified product state
/// cell by cell instead of on the joint register.
const AUDIT_JOINT_SUPPORT: usize = 81;

/// Configurations kept per step; the least probable ones beyond this are
/// dropped and their mass reported.
pub const AUDIT_FRONTIER: usize = 2048;

/// A verified product configuration of a 1-tape machine, stored as one
/// factor per tape cell. Cells not in the map are `|#⟩`.
#[derive(Clone)]
struct Factored {
    control: Control,
    last_outcome: Outcome,
    head: i64,
    cells: BTreeMap<i64, Rc<StateVector>>,
}

impl Factored {
    fn from_config(c: &Configuration) -> Result<Self, QuantumError> {
        let mut cells = BTreeMap::new();
        let mut rest = c.state.clone();
        let lo = c.windows[0].0;
        for i in 0..c.state.cells() {
            let f = if rest.cells() == 1 {
                rest.clone()
            } else {
                let (f, r) = factor_out(&rest, &[0], 1e-9)?.ok_or(QuantumError::Bipartition)?;
                rest = r;
                f
            };
            cells.insert(lo + i as i64, Rc::new(f));
        }
        Ok(Factored {
            control: c.control.clone(),
            last_outcome: c.last_outcome.clone(),
            head: c.heads[0],
            cells,
        })
    }

    fn same(&self, o: &Factored) -> bool {
        self.control == o.control
            && self.last_outcome == o.last_outcome
            && self.head == o.head
            && self.cells.len() == o.cells.len()
            && self
                .cells
                .iter()
                .zip(&o.cells)
                .all(|((p, a), (q, b))| p == q && (Rc::ptr_eq(a, b) || a.fidelity(b).is_ok_and(|f| f >= 1.0 - 1e-12)))
    }
}

enum AuditNode {
    Joint(Configuration),
    Factored(Factored),
}

impl AuditNode {
    fn classical_key(&self) -> (String, String, i64, i64, i64) {
        match self {
            AuditNode::Joint(c) => (c.control.to_string(), c.last_outcome.to_string(), c.heads[0], c.windows[0].0, c.windows[0].1),
            AuditNode::Factored(f) => {
                let lo = f.cells.keys().next().copied().unwrap_or(0);
                let hi = f.cells.keys().next_back().copied().unwrap_or(0);
                (f.control.to_string(), f.last_outcome.to_string(), f.head, lo, hi)
            }
        }
    }

    fn same(&self, o: &AuditNode) -> bool {
        match (self, o) {
            (AuditNode::Joint(a), AuditNode::Joint(b)) => {
                a.same_classical(b) && a.state.fidelity(&b.state).is_ok_and(|f| f >= 1.0 - 1e-12)
            }
            (AuditNode::Factored(a), AuditNode::Factored(b)) => a.same(b),
            _ => false,
        }
    }
}

/// One step of a factored configuration. The transform is applied to the
/// head cell together with its two neighbours; the neighbours start as a
/// product, so checking the head cell's cut covers the whole register.
fn step_factored(
    m: &MachineDescription,
    f: &Factored,
    k: usize,
) -> Result<Result<Vec<(Factored, f64)>, AuditResult>, ExecError> {
    let Control::State(q) = &f.control else {
        return Ok(Ok(Vec::new()));
    };
    let Some(action) = m.transition(q, f.last_outcome.as_str()) else {
        return Ok(Ok(Vec::new()));
    };
    let t = m
        .transform(&action.transform)
        .ok_or_else(|| MachineError::UnknownTransform(action.transform.clone()))?;
    let head = f.head + action.moves[0].delta();
    let blank = StateVector::basis(m.d(), &[m.blank_digit()]).map_err(MachineError::from)?;
    let cell = |p: i64| f.cells.get(&p).map_or_else(|| blank.clone(), |c| (**c).clone());
    let joint = cell(head - 1)
        .tensor(&cell(head))
        .and_then(|s| s.tensor(&cell(head + 1)))
        .map_err(MachineError::from)?;
    let mut out = Vec::new();
    for b in apply_branching(&joint, &[1], &t.full).map_err(MachineError::from)? {
        let p = entanglement_profile(&b.state, &[1]).map_err(MachineError::from)?;
        if p.schmidt_rank != 1 || (p.purity - 1.0).abs() > 1e-9 {
            return Ok(Err(AuditResult::Counterexample {
                step: k + 1,
                bipartition: vec![f.cells.range(..head).count()],
                rank: p.schmidt_rank,
                purity: p.purity,
            }));
        }
        let (mid, _) = factor_out(&b.state, &[1], 1e-9)
            .map_err(MachineError::from)?
            .ok_or(MachineError::from(QuantumError::Bipartition))?;
        let mut next = f.clone();
        next.cells.insert(head, Rc::new(mid));
        next.head = head;
        next.control = action.next.clone();
        next.last_outcome = b.outcome;
        out.push((next, b.probability));
    }
    Ok(Ok(out))
}

/// Steps the branches of a 1-tape machine with only 1-cell transforms and
/// checks that the register stays a product state. Every single-cell cut is
/// checked; a state with rank 1 across all of them has rank 1 across every
/// bipartition. Once a verified product state's support exceeds
/// `AUDIT_JOINT_SUPPORT` terms the branch continues in factored form. At
/// most `AUDIT_FRONTIER` configurations are kept per step, most probable
/// first.
pub fn no_entanglement_audit(
    m: &MachineDescription,
    input: &StateVector,
    max_steps: usize,
) -> Result<AuditResult, ExecError> {
    if m.tapes != 1 {
        return Err(MachineError::Invalid(format!("audit needs a 1-tape machine, got {} tapes", m.tapes)).into());
    }
    if let Some(t) = m.transforms().find(|t| t.base.arity_in() != 1) {
        return Err(MachineError::Invalid(format!("audit needs 1-cell transforms, `{}` has arity {}", t.name, t.base.arity_in())).into());
    }
    let mut frontier = vec![(AuditNode::Joint(init_configuration(m, input, false)?), 1.0)];
    let (mut seen, mut dropped) = (0, 0.0);
    for k in 0..=max_steps {
        let mut next: Vec<(AuditNode, f64)> = Vec::new();
        let mut index: HashMap<(String, String, i64, i64, i64), Vec<usize>> = HashMap::new();
        let mut push = |node: AuditNode, p: f64, next: &mut Vec<(AuditNode, f64)>| {
            let slot = index.entry(node.classical_key()).or_default();
            match slot.iter().find(|&&i| next[i].0.same(&node)) {
                Some(&i) => next[i].1 += p,
                None => {
                    slot.push(next.len());
                    next.push((node, p));
                }
            }
        };
        for (node, p) in frontier {
            seen += 1;
            let c = match node {
                AuditNode::Factored(f) => {
                    if k < max_steps {
                        match step_factored(m, &f, k)? {
                            Ok(bs) => bs.into_iter().for_each(|(n, q)| push(AuditNode::Factored(n), p * q, &mut next)),
                            Err(cx) => return Ok(cx),
                        }
                    }
                    continue;
                }
                AuditNode::Joint(c) => c,
            };
            if let Some(cx) = product_violation(&c.state, k).map_err(MachineError::from)? {
                return Ok(cx);
            }
            if c.control.is_halting() || k == max_steps {
                continue;
            }
            if c.state.terms().len() > AUDIT_JOINT_SUPPORT {
                let f = Factored::from_config(&c).map_err(MachineError::from)?;
                match step_factored(m, &f, k)? {
                    Ok(bs) => bs.into_iter().for_each(|(n, q)| push(AuditNode::Factored(n), p * q, &mut next)),
                    Err(cx) => return Ok(cx),
                }
                continue;
            }
            match step(m, &c) {
                Ok(bs) => bs.into_iter().for_each(|b| push(AuditNode::Joint(b.config), p * b.probability, &mut next)),
                Err(MachineError::UndefinedTransition { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        if next.is_empty() {
            return Ok(AuditResult::Pass {
                steps: k,
                configurations: seen,
                dropped_mass: dropped,
            });
        }
        if next.len() > AUDIT_FRONTIER {
            next.sort_by(|a, b| b.1.total_cmp(&a.1));
            dropped += next[AUDIT_FRONTIER..].iter().map(|n| n.1).sum::<f64>();
            next.truncate(AUDIT_FRONTIER);
        }
        frontier = next;
    }
    Ok(AuditResult::Pass {
        steps: max_steps,
        configurations: seen,
        dropped_mass: dropped,
    })
}

fn product_violation(s: &StateVector, step: usize) -> Result<Option<AuditResult>, QuantumError> {
    if s.cells() < 2 {
        return Ok(None);
    }
    for cell in 0..s.cells() {
        let p = entanglement_profile(s, &[cell])?;
        if p.schmidt_rank != 1 || (p.purity - 1.0).abs() > 1e-9 {
            return Ok(Some(AuditResult::Counterexample {
                step,
                bipartition: vec![cell],
                rank: p.schmidt_rank,
                purity: p.purity,
            }));
        }
    }
    Ok(None)
}

/// Success probability of one round of a repeat-until-success loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundProbability {
    pub head: String,
    pub step: usize,
    pub success: f64,
}

/// Enumerates a run and, every time a branch enters the head of one of
/// `loops`, measures the probability that this round leaves the loop rather
/// than returning to its head.
pub fn rus_round_probabilities(
    m: &MachineDescription,
    loops: &[RusLoop],
    input: &StateVector,
    max_steps: usize,
) -> Result<Vec<RoundProbability>, ExecError> {
    let mut out = Vec::new();
    let mut frontier = vec![(init_configuration(m, input, false)?, 1.0)];
    let in_loop = |c: &Configuration| -> Option<&RusLoop> {
        let Control::State(q) = &c.control else { return None };
        loops.iter().find(|l| l.contains(q))
    };
    for _ in 0..max_steps {
        let mut next: Vec<(Configuration, f64)> = Vec::new();
        for (c, p) in frontier {
            if c.control.is_halting() {
                continue;
            }
            if let Some(l) = in_loop(&c).filter(|l| c.control.name() == l.head) {
                out.push(RoundProbability {
                    head: l.head.clone(),
                    step: c.steps,
                    success: round_success(m, l, &c)?,
                });
            }
            let bs = match step(m, &c) {
                Ok(bs) => bs,
                Err(MachineError::UndefinedTransition { .. }) => continue,
                Err(e) => return Err(e.into()),
            };
            for b in bs {
                let q = p * b.probability;
                let dup = next.iter_mut().find(|(n, _)| {
                    n.same_classical(&b.config) && n.state.fidelity(&b.config.state).is_ok_and(|f| f >= 1.0 - 1e-12)
                });
                match dup {
                    Some((_, w)) => *w += q,
                    None => next.push((b.config, q)),
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out)
}

fn round_success(m: &MachineDescription, l: &RusLoop, start: &Configuration) -> Result<f64, MachineError> {
    let mut success = 0.0;
    let mut frontier = vec![(start.clone(), 1.0)];
    let mut first = true;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for (c, p) in frontier {
            if !first {
                let Control::State(q) = &c.control else {
                    success += p;
                    continue;
                };
                if *q == l.head {
                    continue;
                }
                if !l.body.contains(q) {
                    success += p;
                    continue;
                }
            }
            for b in step(m, &c)? {
                next.push((b.config, p * b.probability));
            }
        }
        first = false;
        frontier = next;
    }
    Ok(success)
}

/// `compare_runs` with the options used for compiler checks: merged
/// enumeration so repeat-until-success loops stay small.
pub fn compare_compiled(
    source: &MachineDescription,
    target: &MachineDescription,
    inputs: &[StateVector],
    max_steps: usize,
) -> EquivalenceReport {
    let mut opts = DistOptions::steps(max_steps);
    opts.merge = MergePolicy::EquivalentState;
    compare_runs(source, target, inputs, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{Kind, Move, TransformExpr};
    use crate::quantum::{Alphabet, Complex64, Matrix};

    /// Walks right applying a Hadamard on {0, 1} to every cell, optionally
    /// measuring each one, and halts on the first blank.
    fn hadamard_walk(measure: bool) -> MachineDescription {
        let mut m = MachineDescription::new(
            "walk",
            Kind::Cqtm,
            1,
            Alphabet::new(["#", "0", "1"]).unwrap(),
            ["#", "!#", "_", "0", "1"].iter().map(|s| s.to_string()).collect(),
        )
        .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |x: f64| Complex64::new(x, 0.0);
        let had = Matrix::from_rows(vec![
            vec![c(1.0), c(0.0), c(0.0)],
            vec![c(0.0), c(h), c(h)],
            vec![c(0.0), c(h), c(-h)],
        ])
        .unwrap();
        m.define("T#", TransformExpr::Test("#".into())).unwrap();
        m.define("H", TransformExpr::Unitary(had)).unwrap();
        m.define("Std", TransformExpr::Std).unwrap();
        m.add_transition("s", "#", Control::parse("t"), vec![Move::R], "T#").unwrap();
        m.add_transition("t", "#", Control::Halt, vec![Move::S], "-").unwrap();
        m.add_transition("t", "!#", Control::parse("u"), vec![Move::S], "H").unwrap();
        if measure {
            m.add_transition("u", "_", Control::parse("v"), vec![Move::S], "Std").unwrap();
            for o in ["0", "1"] {
                m.add_transition("v", o, Control::parse("t"), vec![Move::R], "T#").unwrap();
            }
        } else {
            m.add_transition("u", "_", Control::parse("t"), vec![Move::R], "T#").unwrap();
        }
        m
    }

    #[test]
    fn superposition_is_not_entanglement() {
        let input = StateVector::basis(3, &[1; 10]).unwrap();
        for measure in [false, true] {
            match no_entanglement_audit(&hadamard_walk(measure), &input, 60).unwrap() {
                AuditResult::Pass { dropped_mass, .. } => assert_eq!(dropped_mass, 0.0),
                cx => panic!("{cx:?}"),
            }
        }
    }

    #[test]
    fn bell_state_is_a_counterexample() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::from_terms(2, 2, [(0, Complex64::new(h, 0.0)), (3, Complex64::new(h, 0.0))], 1e-12).unwrap();
        match product_violation(&s, 4).unwrap() {
            Some(AuditResult::Counterexample { step, rank, .. }) => assert_eq!((step, rank), (4, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multi_tape_machines_are_refused() {
        let m = crate::library::separation().unwrap();
        assert!(no_entanglement_audit(&m, &StateVector::basis(m.d(), &[1]).unwrap(), 5).is_err());
    }
}
