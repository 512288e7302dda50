#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cqtm::io;
use cqtm::machine::{init_configuration, step, Configuration, Control, Kind, MachineDescription, Move, TransformExpr};
use cqtm::quantum::{Alphabet, Complex64, Matrix, Outcome, StateVector};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn load_machine(rel: &str) -> MachineDescription {
    io::parse_machine(&read_fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn load_state(rel: &str, alphabet: &Alphabet) -> StateVector {
    io::parse_state(&read_fixture(rel), alphabet, false).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Step-count constants measured once and frozen in the fixtures.
pub fn step_bound(key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(&read_fixture("step_bounds.json")).unwrap();
    v[key].as_f64().unwrap_or_else(|| panic!("no step bound `{key}`"))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of R's diagonal moved into Q.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| random_complex(rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = r[(j, j)];
                    q[(i, j)] * (d / d.norm())
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(rows).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, d: usize, n: usize) -> StateVector {
    let amps: Vec<Complex64> = (0..d.pow(n as u32)).map(|_| random_complex(rng)).collect();
    StateVector::normalize(d, n, amps).unwrap()
}

/// Random state supported on basis words over the given digits.
pub fn random_state_over(rng: &mut ChaCha8Rng, d: usize, n: usize, digits: &[usize]) -> StateVector {
    let k = digits.len();
    let terms: Vec<(u128, Complex64)> = (0..k.pow(n as u32))
        .map(|mut w| {
            let mut idx = 0u128;
            let mut place = 1u128;
            for _ in 0..n {
                idx += digits[w % k] as u128 * place;
                place *= d as u128;
                w /= k;
            }
            (idx, random_complex(rng))
        })
        .collect();
    StateVector::normalize_terms(d, n, terms).unwrap()
}

/// A leaf of the unmerged branch tree.
pub struct Leaf {
    pub config: Configuration,
    pub probability: f64,
}

/// Every branch kept apart, depth first. Returns halted leaves and the
/// mass still running at the cap.
pub fn enumerate_branches(m: &MachineDescription, input: &StateVector, max_steps: usize) -> (Vec<Leaf>, f64) {
    let mut stack = vec![(init_configuration(m, input, false).unwrap(), 1.0)];
    let (mut leaves, mut running) = (Vec::new(), 0.0);
    while let Some((c, p)) = stack.pop() {
        if c.control.is_halting() {
            leaves.push(Leaf { config: c, probability: p });
        } else if c.steps >= max_steps {
            running += p;
        } else {
            for b in step(m, &c).unwrap() {
                stack.push((b.config, p * b.probability));
            }
        }
    }
    (leaves, running)
}

/// One sampled run, returning the control state before every step.
pub fn sample_controls(m: &MachineDescription, input: &StateVector, rng: &mut ChaCha8Rng, max_steps: usize) -> Vec<String> {
    let mut c = init_configuration(m, input, false).unwrap();
    let mut seen = Vec::new();
    while !c.control.is_halting() && c.steps < max_steps {
        seen.push(c.control.name().to_string());
        let branches = step(m, &c).unwrap();
        let mut u: f64 = rng.gen();
        let mut pick = branches.len() - 1;
        for (i, b) in branches.iter().enumerate() {
            if u < b.probability {
                pick = i;
                break;
            }
            u -= b.probability;
        }
        c = branches.into_iter().nth(pick).unwrap().config;
    }
    seen
}

/// A random complete 1-tape CQTM over `{#, 0, 1}` whose transforms all act
/// on one cell: blank test, Std, two random unitaries, a permutation and a
/// random two-outcome Kraus set.
pub fn random_one_tape_machine(rng: &mut ChaCha8Rng, id: usize) -> MachineDescription {
    let qa = Alphabet::new(["#", "0", "1"]).unwrap();
    let outcomes = ["#", "!#", "0", "1", "_", "a", "b"];
    let mut m = MachineDescription::new(
        format!("random{id}"),
        Kind::Cqtm,
        1,
        qa,
        outcomes.iter().map(|s| s.to_string()).collect(),
    )
    .unwrap();
    m.define("T#", TransformExpr::Test("#".into())).unwrap();
    m.define("Std", TransformExpr::Std).unwrap();
    m.define("U", TransformExpr::Unitary(random_unitary(rng, 3))).unwrap();
    m.define("W", TransformExpr::Unitary(random_unitary(rng, 3))).unwrap();
    m.define("P", TransformExpr::Perm("0".into(), "1".into())).unwrap();
    let iso = random_unitary(rng, 6);
    let kraus: Vec<(Outcome, Matrix)> = ["a", "b"]
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let rows = (0..3).map(|i| (0..3).map(|j| iso[(3 * k + i, j)]).collect()).collect();
            (Outcome::new(*o), Matrix::from_rows(rows).unwrap())
        })
        .collect();
    m.define("K", TransformExpr::Kraus(kraus)).unwrap();
    let names = ["T#", "Std", "U", "W", "P", "K", "-"];
    let states = ["s", "q1", "q2", "q3"];
    for q in states {
        for o in outcomes {
            let next = if rng.gen::<f64>() < 0.1 {
                Control::parse(["h", "yes", "no"][rng.gen_range(0..3)])
            } else {
                Control::parse(states[rng.gen_range(0..states.len())])
            };
            let mv = [Move::L, Move::R, Move::S][rng.gen_range(0..3)];
            let t = names[rng.gen_range(0..names.len())];
            m.add_transition(q, o, next, vec![mv], t).unwrap();
        }
    }
    m
}

pub fn fidelity_output(v: &cqtm::exec::RunVerdict, want: &StateVector) -> Option<f64> {
    match v {
        cqtm::exec::RunVerdict::Output(s) if s.cells() == want.cells() => s.fidelity(want).ok(),
        _ => None,
    }
}
