//! Deliberate convention faults, used by tests to confirm the identity suite can fail.
//!
//! A fault is active only on the calling thread and only for the duration of
//! [`with_mutation`]. Shared caches are bypassed while a fault is active.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// `merge_sign` returns `-ε` instead of `ε`.
    MergeSignNegated,
    /// `merge_sign` ignores the inversion count and always returns `+1`.
    MergeSignParityDropped,
    /// `compose(a, b)` evaluates `b ∘ a` whenever the shapes allow it.
    ComposeSwapped,
}

thread_local! {
    static ACTIVE: Cell<Mutation> = const { Cell::new(Mutation::None) };
}

struct Restore(Mutation);

impl Drop for Restore {
    fn drop(&mut self) {
        ACTIVE.with(|m| m.set(self.0));
    }
}

/// Runs `f` with `m` active on this thread. Work spawned onto other threads does not see it.
pub fn with_mutation<T>(m: Mutation, f: impl FnOnce() -> T) -> T {
    let prev = ACTIVE.with(|c| c.replace(m));
    let _restore = Restore(prev);
    f()
}

pub(crate) fn active() -> Mutation {
    ACTIVE.with(|c| c.get())
}

pub(crate) fn any_active() -> bool {
    active() != Mutation::None
}
