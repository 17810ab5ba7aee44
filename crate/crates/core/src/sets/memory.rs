use std::collections::VecDeque;

use super::Atom;

/// FIFO buffer of the `capacity` most recent oracle atoms.
///
/// Re-inserting an atom already held moves it to the back and refreshes its
/// stamp. Atoms are matched by id when both carry one, by exact point otherwise.
#[derive(Debug, Clone)]
pub struct AtomMemory {
    capacity: usize,
    entries: VecDeque<(usize, Atom)>,
}

impl AtomMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, atom: Atom, iter: usize) {
        if self.capacity == 0 {
            return;
        }
        if let Some(pos) = self.entries.iter().position(|(_, a)| same_atom(a, &atom)) {
            self.entries.remove(pos);
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((iter, atom));
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.entries.iter().map(|(_, a)| a)
    }

    pub fn stamps(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(t, _)| *t)
    }
}

fn same_atom(a: &Atom, b: &Atom) -> bool {
    match (&a.id, &b.id) {
        (Some(x), Some(y)) => x == y,
        _ => a.point == b.point,
    }
}
