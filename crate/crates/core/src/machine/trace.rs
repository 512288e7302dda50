use std::sync::Arc;

use crate::quantum::Outcome;

struct Node {
    outcome: Outcome,
    prev: Option<Arc<Node>>,
}

impl Drop for Node {
    // Unlink iteratively so long traces do not recurse on drop.
    fn drop(&mut self) {
        let mut next = self.prev.take();
        while let Some(n) = next {
            match Arc::try_unwrap(n) {
                Ok(mut owned) => next = owned.prev.take(),
                Err(_) => break,
            }
        }
    }
}

/// Outcome history of a branch. Branches share their common prefix, so
/// extending a trace after a split costs O(1).
#[derive(Clone, Default)]
pub struct Trace {
    last: Option<Arc<Node>>,
    len: usize,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, outcome: Outcome) {
        let prev = self.last.take();
        self.last = Some(Arc::new(Node { outcome, prev }));
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Outcomes, oldest first.
    pub fn to_vec(&self) -> Vec<Outcome> {
        let mut v = Vec::with_capacity(self.len);
        let mut cur = self.last.as_deref();
        while let Some(n) = cur {
            v.push(n.outcome.clone());
            cur = n.prev.as_deref();
        }
        v.reverse();
        v
    }
}

impl PartialEq for Trace {
    /// Walks back from the newest outcome until the lists share a node.
    fn eq(&self, other: &Self) -> bool {
        if self.len != other.len {
            return false;
        }
        let (mut a, mut b) = (self.last.as_ref(), other.last.as_ref());
        loop {
            match (a, b) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if Arc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.outcome != y.outcome {
                        return false;
                    }
                    a = x.prev.as_ref();
                    b = y.prev.as_ref();
                }
                _ => return false,
            }
        }
    }
}

impl std::fmt::Debug for Trace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.to_vec()).finish()
    }
}

impl From<&[Outcome]> for Trace {
    fn from(v: &[Outcome]) -> Self {
        let mut t = Trace::new();
        for o in v {
            t.push(o.clone());
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_prefix_and_equality() {
        let mut a = Trace::new();
        a.push(Outcome::new("#"));
        let mut b = a.clone();
        a.push(Outcome::new("0"));
        b.push(Outcome::new("0"));
        assert_eq!(a, b);
        b.push(Outcome::new("1"));
        assert_ne!(a, b);
        assert_eq!(b.to_vec().len(), 3);
        assert_eq!(b.to_vec()[2], Outcome::new("1"));
    }

    #[test]
    fn long_trace_drops() {
        let mut t = Trace::new();
        for _ in 0..1_000_000 {
            t.push(Outcome::lambda());
        }
        assert_eq!(t.len(), 1_000_000);
    }
}
