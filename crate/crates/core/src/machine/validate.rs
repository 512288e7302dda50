use std::fmt;

use crate::quantum::{blank_test, check_completeness, embed_on_cells, COMPLETENESS_TOL};

use super::{Control, Kind, MachineDescription, HALTING_NAMES};

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationIssue {
    pub location: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn issue(location: impl Into<String>, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue {
        location: location.into(),
        message: message.into(),
    }
}

/// Checks every structural invariant of a description and returns all
/// violations found.
pub fn validate_machine(m: &MachineDescription) -> Result<(), Vec<ValidationIssue>> {
    let mut issues = Vec::new();
    let sigma_c = |s: &str| m.calphabet.iter().any(|c| c == s);

    if !m.qalphabet.contains("#") {
        issues.push(issue("qalphabet", "Σ_Q must contain the blank #"));
    }
    for required in ["#", "!#"] {
        if !sigma_c(required) {
            issues.push(issue("calphabet", format!("Σ_C must contain {required}")));
        }
    }
    if HALTING_NAMES.contains(&m.start.as_str()) {
        issues.push(issue("start", format!("start state `{}` is a halting state", m.start)));
    }

    for t in m.transforms() {
        let loc = format!("transform {}", t.name);
        for o in t.full.outcomes() {
            if !sigma_c(o.as_str()) {
                issues.push(issue(&loc, format!("outcome {o} of {} not in Σ_C", t.name)));
            }
        }
        if t.base.arity_in() > m.tapes {
            issues.push(issue(&loc, format!("arity {} exceeds {} tapes", t.base.arity_in(), m.tapes)));
        }
        if let Err(v) = check_completeness(&t.full) {
            issues.push(issue(&loc, v.to_string()));
        }
        if m.kind == Kind::Mqtm {
            if let Some(why) = t.full.projective_violation(COMPLETENESS_TOL) {
                issues.push(issue(&loc, format!("{} is not a projective measurement: {why}", t.name)));
            }
        }
    }

    if m.qalphabet.contains("#") {
        let test = blank_test(&m.qalphabet, "#").expect("blank present");
        for tape in 0..m.tapes {
            let found = m.transforms().any(|t| {
                let branches = t.full.branches();
                branches.len() == 2
                    && test.branches().iter().all(|(o, p)| {
                        let want = embed_on_cells(p, m.d(), &[tape], m.tapes).expect("in range");
                        t.full.operator(o).is_some_and(|q| q.approx_eq(&want, COMPLETENESS_TOL))
                    })
            });
            if !found {
                issues.push(issue(
                    "transforms",
                    format!("no blank test for tape {}", tape + 1),
                ));
            }
        }
    }

    for ((q, tau), a) in &m.delta {
        let loc = format!("delta {q} {tau}");
        if !sigma_c(tau) {
            issues.push(issue(&loc, format!("outcome {tau} not in Σ_C")));
        }
        if m.transform(&a.transform).is_none() {
            issues.push(issue(&loc, format!("unknown transform `{}`", a.transform)));
        }
        if a.moves.len() != m.tapes {
            issues.push(issue(
                &loc,
                format!("direction arity {} ≠ tapes {}", a.moves.len(), m.tapes),
            ));
        }
        if let Control::State(p) = &a.next {
            if HALTING_NAMES.contains(&p.as_str()) {
                issues.push(issue(&loc, format!("`{p}` is reserved")));
            }
        }
    }

    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}
