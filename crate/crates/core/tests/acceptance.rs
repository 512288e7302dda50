//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits nonzero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use cqtm::analysis::{compare_compiled, no_entanglement_audit, rus_round_probabilities, tv_distance, embed_state};
use cqtm::compile::circuit::qubits_to_cells;
use cqtm::compile::pattern::{interpret, signal_key, trace_signals};
use cqtm::compile::*;
use cqtm::exec::{run_distribution, run_sampled, run_statistics, DistOptions, MergePolicy, RunVerdict};
use cqtm::machine::{extract_output, init_configuration, step, validate_machine, MachineDescription, Verdict};
use cqtm::quantum::*;

type Outcome_ = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome_);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn basis_of(m: &MachineDescription, word: &[&str]) -> StateVector {
    StateVector::basis(m.d(), &m.qalphabet.digits(word).unwrap()).unwrap()
}

fn words(symbols: &[&'static str], max_len: usize) -> Vec<Vec<&'static str>> {
    let mut all = vec![vec![]];
    let mut layer: Vec<Vec<&str>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| symbols.iter().map(move |s| [w.clone(), vec![*s]].concat()))
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let r = f();
    (r, t.elapsed())
}

fn c1_palindrome() -> Outcome_ {
    let m = load_machine("palindrome.cqtm");
    let opts = DistOptions::steps(10_000);
    let eps = load_state("states/eps30.qst", &m.qalphabet);
    let (d, t) = timed(|| run_distribution(&m, &eps, &opts).unwrap());
    let (acc, rej) = (d.probability_of(&RunVerdict::Accept), d.probability_of(&RunVerdict::Reject));
    ensure!((acc - 0.7).abs() <= 1e-9 && (rej - 0.3).abs() <= 1e-9, "eps=0.3: accept {acc}, reject {rej}");
    ensure!(t < Duration::from_secs(1), "eps=0.3 took {t:?}");
    let c = step_bound("palindrome_c");
    for f in ["states/010.qst", "states/010_i111.qst"] {
        let s = load_state(f, &m.qalphabet);
        let (d, t) = timed(|| run_distribution(&m, &s, &opts).unwrap());
        let acc = d.probability_of(&RunVerdict::Accept);
        ensure!((acc - 1.0).abs() <= 1e-9, "{f}: accept {acc}");
        ensure!(t < Duration::from_secs(1), "{f} took {t:?}");
        let n = s.cells() as f64;
        let worst = d.max_halting_step().unwrap() as f64;
        ensure!(worst <= c * n * n, "{f}: {worst} steps > {c}·n²");
    }
    Ok(format!("accept {acc:.12}, reject {rej:.12}; palindromes accepted with mass 1"))
}

fn c2_blank_insertion() -> Outcome_ {
    let m = load_machine("blank_insertion.cqtm");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let cases = [
        (load_state("states/abba.qst", &m.qalphabet), basis_of(&m, &["a", "#", "b", "b", "a"])),
        (
            load_state("states/aa_bb.qst", &m.qalphabet),
            StateVector::from_terms(
                3,
                3,
                [(9 + 1, Complex64::new(h, 0.0)), (2 * 9 + 2, Complex64::new(h, 0.0))],
                1e-12,
            )
            .unwrap(),
        ),
    ];
    let mut worst = 1.0f64;
    for (input, want) in &cases {
        let d = run_distribution(&m, input, &DistOptions::steps(100)).unwrap();
        ensure!(d.entries.len() == 1, "expected one outcome, got {}", d.entries.len());
        let f = fidelity_output(&d.entries[0].verdict, want).ok_or("not an output of the right length")?;
        worst = worst.min(f);
        ensure!(f >= 1.0 - 1e-9, "fidelity {f}");
        let steps: Vec<usize> = d.entries[0].steps.keys().copied().collect();
        ensure!(steps == vec![3], "halting steps {steps:?}");
    }
    Ok(format!("both outputs at fidelity ≥ {worst:.12}, 3 steps"))
}

fn c3_separation() -> Outcome_ {
    let m = load_machine("separation.cqtm");
    let input = load_state("states/0.qst", &m.qalphabet);
    let c0 = init_configuration(&m, &input, false).unwrap();
    let branches = step(&m, &c0).unwrap();
    ensure!(branches.len() == 1, "one branch expected");
    let c = &branches[0].config;
    let pointed = c.pointed();
    let (cells, rest) = factor_out(&c.state, &pointed, 1e-9).unwrap().ok_or("scanned cells entangled with the rest")?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // (|#0⟩ + |0#⟩)/√2 with # = 0, 0 = 1.
    let want = StateVector::from_terms(2, 2, [(1, Complex64::new(h, 0.0)), (2, Complex64::new(h, 0.0))], 1e-12).unwrap();
    let f = cells.fidelity(&want).unwrap();
    ensure!(f >= 1.0 - 1e-9, "pointed-cell fidelity {f}");
    ensure!(rest.cells() + 2 == c.state.cells(), "bookkeeping");
    let tape1: Vec<usize> = (0..c.window_len(0)).collect();
    let prof = entanglement_profile(&c.state, &tape1).unwrap();
    ensure!(prof.schmidt_rank == 2, "Schmidt rank {}", prof.schmidt_rank);

    let mut r = rng(3);
    let (mut checked, mut dropped) = (0, 0.0f64);
    for id in 0..20 {
        let rm = random_one_tape_machine(&mut r, id);
        for _ in 0..5 {
            let n = r.gen_range(1..=4);
            let word: Vec<&str> = (0..n).map(|_| ["0", "1"][r.gen_range(0..2)]).collect();
            match no_entanglement_audit(&rm, &basis_of(&rm, &word), 50).unwrap() {
                cqtm::analysis::AuditResult::Pass { configurations, dropped_mass, .. } => {
                    checked += configurations;
                    dropped = dropped.max(dropped_mass);
                }
                cx => return Err(format!("random machine {id} on {word:?}: {cx:?}")),
            }
        }
    }
    Ok(format!("fidelity {f:.12}, Schmidt rank 2; audit passed on 100 runs ({checked} configurations, \
         at most {dropped:.3} branch mass beyond the frontier budget)"))
}

use rand::Rng;

fn tm_fixtures() -> Vec<(ClassicalTM, Vec<&'static str>)> {
    vec![
        (io_tm("increment.tm"), vec!["1"]),
        (io_tm("parity.tm"), vec!["0", "1"]),
    ]
}

fn io_tm(rel: &str) -> ClassicalTM {
    cqtm::io::parse_tm(&read_fixture(rel)).unwrap()
}

fn tm_expected(m: &MachineDescription, v: &TmVerdict) -> RunVerdict {
    match v {
        TmVerdict::Accept => RunVerdict::Accept,
        TmVerdict::Reject => RunVerdict::Reject,
        TmVerdict::Output(w) => {
            let w: Vec<&str> = w.iter().map(String::as_str).collect();
            RunVerdict::Output(basis_of(m, &w))
        }
        other => panic!("fixture TM did not halt: {other:?}"),
    }
}

fn c4_tm_to_cqtm() -> Outcome_ {
    let (res, t) = timed(|| -> Outcome_ {
        let mut total = 0;
        for (tm, symbols) in tm_fixtures() {
            let m = compile_tm_to_cqtm(&tm).map_err(|e| e.to_string())?;
            for w in words(&symbols, 6) {
                let run = tm.run(&w, 10_000);
                let want = tm_expected(&m, &run.verdict);
                let d = run_distribution(&m, &basis_of(&m, &w), &DistOptions::steps(10_000)).unwrap();
                ensure!(d.entries.len() == 1 && d.residual() == 0.0, "{} on {w:?}: not a single branch", tm.name);
                let e = &d.entries[0];
                ensure!(e.verdict.equivalent(&want, 1.0 - 1e-9), "{} on {w:?}: {} vs {}", tm.name, e.verdict, want);
                let steps: Vec<usize> = e.steps.keys().copied().collect();
                ensure!(steps == vec![2 * run.steps + 1], "{} on {w:?}: {steps:?} vs 2·{}+1", tm.name, run.steps);
                total += 1;
            }
        }
        Ok(format!("{total} inputs match, all single-branch, steps 2f+1"))
    });
    let msg = res?;
    ensure!(t < Duration::from_secs(10), "took {t:?}");
    Ok(format!("{msg} ({:.2}s)", t.as_secs_f64()))
}

fn c5_tm_to_mqtm() -> Outcome_ {
    let mut total = 0;
    let mut worst_residual = 0.0f64;
    let (mut visits, mut entries) = (0usize, 0usize);
    for (tm, symbols) in tm_fixtures() {
        let (m, loops) = compile_tm_to_mqtm(&tm).map_err(|e| e.to_string())?;
        validate_machine(&m).map_err(|e| format!("{e:?}"))?;
        for w in words(&symbols, 6) {
            let run = tm.run(&w, 10_000);
            let want = tm_expected(&m, &run.verdict);
            let cap = 40 * run.steps.max(1);
            let d = run_distribution(&m, &basis_of(&m, &w), &DistOptions::steps(cap).merged()).unwrap();
            for e in &d.entries {
                ensure!(e.verdict.equivalent(&want, 1.0 - 1e-9), "{} on {w:?}: halted on {}", tm.name, e.verdict);
            }
            worst_residual = worst_residual.max(d.residual());
            ensure!(d.residual() <= 2f64.powi(-30), "{} on {w:?}: residual {} at cap {cap}", tm.name, d.residual());
            total += 1;
        }
        // Rounds per permutation: visits to a loop head, per entry into it.
        let mut r = rng(5);
        let input = basis_of(&m, &symbols.iter().cycle().take(4).copied().collect::<Vec<_>>());
        let heads: Vec<&str> = loops.iter().map(|l| l.head.as_str()).collect();
        for _ in 0..10_000 {
            let path = sample_controls(&m, &input, &mut r, 100_000);
            let mut prev: Option<&str> = None;
            for q in &path {
                if heads.contains(&q.as_str()) {
                    visits += 1;
                    let inside = prev.is_some_and(|p| loops.iter().any(|l| l.head == *q && l.contains(p)));
                    if !inside {
                        entries += 1;
                    }
                }
                prev = Some(q);
            }
        }
    }
    let mean = visits as f64 / entries as f64;
    let sigma = (2.0f64).sqrt() / (entries as f64).sqrt();
    ensure!((mean - 2.0).abs() <= 3.0 * sigma, "mean rounds {mean} vs 2 ± {}", 3.0 * sigma);
    Ok(format!(
        "{total} inputs, worst residual {worst_residual:.3e}; mean rounds {mean:.4} over {entries} permutations (3σ = {:.4})",
        3.0 * sigma
    ))
}

fn c6_circuits() -> Outcome_ {
    let (res, t) = timed(|| -> Outcome_ {
        let mut r = rng(6);
        let mut worst = 1.0f64;
        for k in 0..10 {
            let mut c = Circuit::new(3);
            for _ in 0..6 {
                match r.gen_range(0..3) {
                    0 => c.push("H", &[r.gen_range(0..3)]),
                    1 => c.push("T", &[r.gen_range(0..3)]),
                    _ => {
                        let a = r.gen_range(0..3);
                        let b = (a + r.gen_range(1..3)) % 3;
                        c.push("CZ", &[a, b])
                    }
                };
            }
            let m = compile_circuit(&c).map_err(|e| e.to_string())?;
            let bits: Vec<usize> = (0..3).map(|_| r.gen_range(0..2)).collect();
            let q = StateVector::basis(2, &bits).unwrap();
            let want = qubits_to_cells(&c.simulate(&q).unwrap()).unwrap();
            let d = run_distribution(&m, &qubits_to_cells(&q).unwrap(), &DistOptions::steps(10_000)).unwrap();
            ensure!(d.entries.len() == 1, "circuit {k}: {} outcomes", d.entries.len());
            let f = fidelity_output(&d.entries[0].verdict, &want).ok_or(format!("circuit {k}: {}", d.entries[0].verdict))?;
            ensure!(f >= 1.0 - 1e-9, "circuit {k}: fidelity {f}");
            worst = worst.min(f);
        }
        Ok(format!("10 circuits, worst fidelity {worst:.12}"))
    });
    let msg = res?;
    ensure!(t < Duration::from_secs(30), "took {t:?}");
    Ok(format!("{msg} ({:.2}s)", t.as_secs_f64()))
}

fn c7_patterns() -> Outcome_ {
    let c = step_bound("pattern_c");
    let mut r = rng(7);
    let mut report = Vec::new();
    for f in ["h.pat", "two_measurements.pat"] {
        let p = cqtm::io::parse_pattern(&read_fixture(f)).unwrap();
        let compiled = compile_pattern(&p).map_err(|e| e.to_string())?;
        let s = p.size() as f64;
        let (mut worst_f, mut worst_p, mut max_steps) = (1.0f64, 0.0f64, 0usize);
        for _ in 0..5 {
            let phi = random_state(&mut r, 2, p.inputs.len());
            let oracle = interpret(&p, &phi).map_err(|e| e.to_string())?;
            let (leaves, running) = enumerate_branches(&compiled.machine, &qubits_to_cells(&phi).unwrap(), 10_000);
            ensure!(running == 0.0, "{f}: branches still running");
            let mut groups: BTreeMap<BTreeMap<usize, u8>, Vec<&Leaf>> = BTreeMap::new();
            for l in &leaves {
                let trace = l.config.trace.to_vec();
                groups.entry(signal_key(&trace_signals(&p, &trace))).or_default().push(l);
                max_steps = max_steps.max(l.config.steps);
            }
            ensure!(groups.len() == oracle.len(), "{f}: {} machine signal histories vs {} oracle branches", groups.len(), oracle.len());
            for b in &oracle {
                let key = signal_key(&b.signals);
                let ls = groups.get(&key).ok_or(format!("{f}: oracle branch {key:?} missing"))?;
                let mass: f64 = ls.iter().map(|l| l.probability).sum();
                worst_p = worst_p.max((mass - b.probability).abs());
                ensure!((mass - b.probability).abs() <= 1e-9, "{f} {key:?}: probability {mass} vs {}", b.probability);
                let want = qubits_to_cells(&b.output).unwrap();
                for l in ls {
                    let out = match extract_output(&compiled.machine, &l.config) {
                        Ok(Verdict::Output(s)) => s,
                        other => return Err(format!("{f}: {other:?}")),
                    };
                    let fid = out.fidelity(&want).map_err(|e| e.to_string())?;
                    worst_f = worst_f.min(fid);
                    ensure!(fid >= 1.0 - 1e-9, "{f} {key:?}: fidelity {fid}");
                }
            }
        }
        ensure!(max_steps as f64 <= c * s * s, "{f}: {max_steps} steps > {c}·{s}²");
        report.push(format!("{f}: fidelity ≥ {worst_f:.12}, Δp ≤ {worst_p:.1e}, {max_steps} steps"));
    }
    Ok(report.join("; "))
}

fn dir_states(dir: &str, m: &MachineDescription) -> Vec<StateVector> {
    let mut files: Vec<_> = std::fs::read_dir(fixture(dir)).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .iter()
        .map(|p| cqtm::io::parse_state(&std::fs::read_to_string(p).unwrap(), &m.qalphabet, false).unwrap())
        .collect()
}

fn c8_cqtm_to_mqtm() -> Outcome_ {
    let mut report = Vec::new();
    for (f, dir) in [("tiny.cqtm", "inputs/binary"), ("measure.cqtm", "inputs/binary"), ("palindrome0.cqtm", "inputs/zeros")] {
        let src = load_machine(f);
        let inputs = dir_states(dir, &src);
        let c = compile_to_mqtm(&src).map_err(|e| e.to_string())?;
        validate_machine(&c.machine).map_err(|e| format!("{f}: {e:?}"))?;
        let rep = compare_compiled(&src, &c.machine, &inputs, 2000);
        ensure!(rep.verdict_match, "{f}: {rep:?}");
        ensure!(rep.max_probability_gap <= 1e-6, "{f}: gap {}", rep.max_probability_gap);
        ensure!(rep.min_output_fidelity >= 1.0 - 1e-9, "{f}: fidelity {}", rep.min_output_fidelity);
        let mut rounds = 0;
        for input in &inputs {
            let tin = embed_state(&c.machine, &src, input).map_err(|e| e.to_string())?;
            for rp in rus_round_probabilities(&c.machine, &c.loops, &tin, 200).map_err(|e| e.to_string())? {
                ensure!((rp.success - 0.5).abs() <= 1e-9, "{f}: round at {} step {} succeeds with {}", rp.head, rp.step, rp.success);
                rounds += 1;
            }
        }
        ensure!(rounds > 0, "{f}: no repeat-until-success rounds seen");
        let pair = compile_to_pair_cqtm(&src).map_err(|e| e.to_string())?;
        let tv = compare_compiled(&src, &pair.machine, &inputs, 2000).max_tv;
        ensure!(tv <= 1e-9, "{f}: stage-1 TV {tv}");
        report.push(format!("{f}: gap {:.1e}, {rounds} rounds at 1/2, stage-1 TV {tv:.1e}", rep.max_probability_gap));
    }
    Ok(report.join("; "))
}

fn c9_hadamard() -> Outcome_ {
    let m = load_machine("hadamard.mqtm");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut r = rng(9);
    let (mut worst_f, mut worst_res) = (1.0f64, 0.0f64);
    for k in 0..5 {
        let phi = random_state(&mut r, 2, 1);
        let a = phi.to_dense().unwrap();
        let hphi = StateVector::new(2, 1, vec![(a[0] + a[1]) * h, (a[0] - a[1]) * h]).unwrap();
        let want = qubits_to_cells(&hphi).unwrap();
        let input = qubits_to_cells(&phi).unwrap();
        let d = run_distribution(&m, &input, &DistOptions::steps(60).merged()).unwrap();
        for e in &d.entries {
            let f = fidelity_output(&e.verdict, &want).ok_or(format!("input {k}: halted on {}", e.verdict))?;
            worst_f = worst_f.min(f);
            ensure!(f >= 1.0 - 1e-9, "input {k}: fidelity {f}");
        }
        worst_res = worst_res.max(d.residual());
        ensure!(d.residual() <= 2f64.powi(-15), "input {k}: residual {}", d.residual());
        let stats = run_statistics(&m, &input, 200, 90 + k, 400, MergePolicy::EquivalentState).unwrap();
        ensure!(stats.las_vegas_empirical, "input {k}: sampled outputs differ");
        ensure!(!stats.monte_carlo_certified, "input {k}: unexpectedly certified");
    }
    Ok(format!("fidelity ≥ {worst_f:.12}, residual ≤ {worst_res:.3e} (bound {:.3e}), Las Vegas", 2f64.powi(-15)))
}

fn c10_ktape() -> Outcome_ {
    let src = load_machine("three_tape.cqtm");
    let t = compile_to_two_tapes(&src, &Decomposition::new()).map_err(|e| e.to_string())?;
    validate_machine(&t).map_err(|e| format!("{e:?}"))?;
    let inputs = dir_states("inputs/ab", &src);
    let rep = compare_compiled(&src, &t, &inputs, 100_000);
    ensure!(rep.verdict_match && rep.max_probability_gap <= 1e-6, "{rep:?}");
    ensure!(rep.min_output_fidelity >= 1.0 - 1e-9, "fidelity {}", rep.min_output_fidelity);
    let c = step_bound("ktape_c");
    let mut worst = 0.0f64;
    for s in &inputs {
        let f = run_distribution(&src, s, &DistOptions::steps(1000)).unwrap().max_halting_step().unwrap() as f64;
        let tin = embed_state(&t, &src, s).unwrap();
        let g = run_distribution(&t, &tin, &DistOptions::steps(100_000).merged()).unwrap().max_halting_step().unwrap() as f64;
        worst = worst.max(g / (f * f));
        ensure!(g <= c * f * f, "{g} steps > {c}·{f}²");
    }
    Ok(format!("gap {:.1e}, fidelity {:.12}, steps/f² ≤ {worst:.2} (C = {c})", rep.max_probability_gap, rep.min_output_fidelity))
}

fn one_cell_pool(r: &mut rand_chacha::ChaCha8Rng, d: usize) -> Vec<Transform> {
    let a = Alphabet::new((0..d).map(|i| if i == 0 { "#".to_string() } else { (i - 1).to_string() })).unwrap();
    let mut v = vec![
        std_measurement(&a),
        blank_test(&a, "#").unwrap(),
        perm(&a, "#", "0").unwrap(),
        diag(&a, "#", "0").unwrap(),
        identity(&a, 1),
        unitary("U", &a, random_unitary(r, d)).unwrap(),
    ];
    let iso = random_unitary(r, 2 * d);
    let ks = (0..2)
        .map(|k| {
            let rows = (0..d).map(|i| (0..d).map(|j| iso[(k * d + i, j)]).collect()).collect();
            (Outcome::new(["a", "b"][k]), Matrix::from_rows(rows).unwrap())
        })
        .collect();
    v.push(Transform::new("K", d, 1, 1, ks).unwrap());
    v
}

fn c11_core() -> Outcome_ {
    let mut r = rng(11);
    // Completeness of primitives and random compositions.
    let mut composed = 0;
    for d in 2..=4 {
        let a = Alphabet::new((0..d).map(|i| if i == 0 { "#".to_string() } else { (i - 1).to_string() })).unwrap();
        let mut pool = one_cell_pool(&mut r, d);
        pool.extend([swap(&a), identity(&a, 2), initialization(&a, "#").unwrap(), destructive_measurement(&a)]);
        for t in &pool {
            ensure!(check_completeness(t).is_ok(), "{} over d={d} incomplete", t.name());
        }
        for _ in 0..40 {
            let x = &pool[r.gen_range(0..pool.len())];
            let y = &pool[r.gen_range(0..pool.len())];
            if x.arity_in() + y.arity_in() <= 3 {
                let s = compose_spatial(x, y).unwrap();
                ensure!(check_completeness(&s).is_ok(), "{} ⊗ {} incomplete", x.name(), y.name());
                composed += 1;
            }
            if x.arity_out() == y.arity_in() {
                let s = compose_sequential(x, y).unwrap();
                ensure!(check_completeness(&s).is_ok(), "{} ; {} incomplete", x.name(), y.name());
                composed += 1;
            }
        }
    }
    // Perturbed Kraus sets are rejected.
    for k in 0..20 {
        let t = &one_cell_pool(&mut r, 2 + k % 3)[6];
        let mut ops: Vec<(Outcome, Matrix)> = t.branches().to_vec();
        ops[0].1[(0, 0)] += Complex64::new(1e-6, 0.0);
        ensure!(Transform::new("bad", t.d(), 1, 1, ops.clone()).is_err(), "perturbed set {k} accepted");
        ensure!(check_completeness(&Transform::unchecked("bad", t.d(), 1, 1, ops).unwrap()).is_err(), "perturbed set {k} passes");
    }
    // Dilations reproduce branching statistics.
    let mut dilated = 0;
    let mut worst_tv = 0.0f64;
    for d in 2..=4 {
        for t in one_cell_pool(&mut r, d) {
            let mut class = vec!["#".to_string()];
            for o in t.outcomes() {
                if !class.contains(&o.as_str().to_string()) {
                    class.push(o.as_str().to_string());
                }
            }
            if d * class.len() > 16 {
                continue;
            }
            let dil = dilate_admissible(&t, &Alphabet::new(class).unwrap()).unwrap();
            for _ in 0..5 {
                let psi = random_state(&mut r, d, 1);
                let want = apply_branching(&psi, &[0], &t).unwrap();
                let got = dil.readout(&psi.to_dense().unwrap());
                let mut tv = 0.0;
                for w in &want {
                    let g = got.iter().find(|g| g.0 == w.outcome).map_or(0.0, |g| g.2);
                    tv += (g - w.probability).abs();
                }
                for g in &got {
                    if !want.iter().any(|w| w.outcome == g.0) {
                        tv += g.2;
                    }
                }
                worst_tv = worst_tv.max(tv / 2.0);
                ensure!(tv / 2.0 <= 1e-9, "dilation of {} over d={d}: TV {}", t.name(), tv / 2.0);
            }
            dilated += 1;
        }
    }
    // Reflections.
    for k in 0..10 {
        let v = random_unitary(&mut r, 2 + k % 3);
        let refl = reflection_measurement(&v, 1).unwrap();
        let id = Matrix::identity(refl.r.rows());
        ensure!(refl.r.mul(&refl.r).unwrap().approx_eq(&id, 1e-9), "R² ≠ I for unitary {k}");
        ensure!(refl.r.approx_eq(&refl.r.adjoint(), 1e-9), "R ≠ R† for unitary {k}");
    }
    // Seeded runs are reproducible; sampled frequencies match exact ones.
    let pal = load_machine("palindrome.cqtm");
    let eps = load_state("states/eps30.qst", &pal.qalphabet);
    for seed in 0..20 {
        let a = run_sampled(&pal, &eps, seed, 10_000).unwrap();
        let b = run_sampled(&pal, &eps, seed, 10_000).unwrap();
        ensure!(a.verdict == b.verdict && a.steps == b.steps && a.trace == b.trace, "seed {seed} not reproducible");
    }
    let n = 10_000;
    let stats = run_statistics(&pal, &eps, n, 2024, 10_000, MergePolicy::Trace).unwrap();
    let exact = run_distribution(&pal, &eps, &DistOptions::steps(10_000)).unwrap().probability_of(&RunVerdict::Accept);
    let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
    ensure!((stats.acceptance_rate - exact).abs() <= 3.0 * sigma, "sampled {} vs exact {exact}", stats.acceptance_rate);
    let _ = tv_distance;
    Ok(format!(
        "{composed} compositions complete, 20 perturbed sets rejected, {dilated} dilations (TV ≤ {worst_tv:.1e}), 10 reflections, sampled {:.4} vs {exact:.4}",
        stats.acceptance_rate
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 palindrome acceptance", c1_palindrome),
        ("2 blank insertion", c2_blank_insertion),
        ("3 entanglement separation", c3_separation),
        ("4 TM to CQTM", c4_tm_to_cqtm),
        ("5 TM to MQTM", c5_tm_to_mqtm),
        ("6 circuit to CQTM", c6_circuits),
        ("7 pattern to CQTM", c7_patterns),
        ("8 CQTM to MQTM", c8_cqtm_to_mqtm),
        ("9 Hadamard MQTM", c9_hadamard),
        ("10 k to 2 tapes", c10_ktape),
        ("11 core properties", c11_core),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let (res, t) = timed(|| std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into())));
        match res {
            Ok(msg) => println!("criterion {name}: PASS ({:.2}s) {msg}", t.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {name}: FAIL ({:.2}s) {msg}", t.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
