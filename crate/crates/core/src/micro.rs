//! The per-rate "micro" chain that tracks consecutive successes and failures
//! while the algorithm stays at one rate.
//!
//! States are labeled by a signed run counter: `run > 0` means `run`
//! consecutive successes, `run < 0` means `-run` consecutive failures and
//! `run == 0` is the entry state. The chain also remembers whether any
//! success happened since entry, because the DCF back-off counter of a
//! failure run that started at entry continues from the counter the state was
//! entered with. That flag never changes when or where the chain exits, so
//! expected transmission counts and exit probabilities are those of the plain
//! chain.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Absorption, AbsorbingChain, Matrix};

/// Where a rate sits on the ladder, which decides which exits exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Position {
    /// Only an upward exit after `s` consecutive successes.
    Lowest,
    /// Upward after `s` successes, downward after `f` failures.
    Interior,
    /// Only a downward exit after `f` consecutive failures.
    Highest,
}

impl Position {
    /// Position of rate `i` (zero-based) on an `n`-rate ladder. `n` must be at
    /// least 2.
    pub fn of(i: usize, n: usize) -> Self {
        debug_assert!(n >= 2 && i < n);
        if i == 0 {
            Position::Lowest
        } else if i + 1 == n {
            Position::Highest
        } else {
            Position::Interior
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MicroPosition {
    pub run: i64,
    /// No success has happened since the macro state was entered.
    pub fresh: bool,
}

impl MicroPosition {
    pub fn failures(&self) -> u64 {
        if self.run < 0 {
            self.run.unsigned_abs()
        } else {
            0
        }
    }

    /// Back-off counter in effect for a transmission made from this state,
    /// given the counter at entry.
    pub fn backoff_counter(&self, entry_counter: u32, gamma_max: u32) -> u32 {
        let m = u64::from(gamma_max) + 1;
        let base = if self.fresh { u64::from(entry_counter) } else { 0 };
        ((base + self.failures() % m) % m) as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Next {
    State(usize),
    Up,
    /// `fresh`: the `f` failures started at entry with no success in between.
    Down { fresh: bool },
}

#[derive(Clone, Debug)]
pub struct MicroChain {
    pub alpha: f64,
    pub position: Position,
    pub states: Vec<MicroPosition>,
    pub on_success: Vec<Next>,
    pub on_failure: Vec<Next>,
}

impl MicroChain {
    /// Builds the reachable chain for success probability `alpha` and
    /// thresholds `s`, `f`. State 0 is the entry state.
    pub fn new(alpha: f64, s: u64, f: u64, position: Position) -> Self {
        debug_assert!(alpha > 0.0 && alpha < 1.0);
        debug_assert!(s >= 1 && f >= 1);
        let s = s as i64;
        let f = f as i64;
        let start = MicroPosition { run: 0, fresh: true };
        let mut states = vec![start];
        let mut on_success = Vec::new();
        let mut on_failure = Vec::new();

        let mut k = 0;
        while k < states.len() {
            let cur = states[k];
            let succ = match position {
                Position::Highest => Some(MicroPosition { run: 0, fresh: false }),
                _ => {
                    let run = cur.run.max(0) + 1;
                    (run < s).then_some(MicroPosition { run, fresh: false })
                }
            };
            let fail = match position {
                Position::Lowest => Some(MicroPosition { run: 0, fresh: cur.fresh }),
                _ => {
                    let run = (-cur.run).max(0) + 1;
                    (run < f).then_some(MicroPosition { run: -run, fresh: cur.fresh })
                }
            };
            on_success.push(match succ {
                Some(p) => Next::State(intern(&mut states, p)),
                None => Next::Up,
            });
            on_failure.push(match fail {
                Some(p) => Next::State(intern(&mut states, p)),
                None => Next::Down { fresh: cur.fresh },
            });
            k += 1;
        }

        Self {
            alpha,
            position,
            states,
            on_success,
            on_failure,
        }
    }

    /// Transient transition matrix plus exit probabilities into
    /// (up, down before any success, down after a success).
    pub fn absorbing(&self) -> AbsorbingChain {
        let n = self.states.len();
        let mut q = Matrix::zeros(n);
        let mut exits = vec![vec![0.0; 3]; n];
        for i in 0..n {
            for (next, p) in [
                (self.on_success[i], self.alpha),
                (self.on_failure[i], 1.0 - self.alpha),
            ] {
                match next {
                    Next::State(j) => q[(i, j)] += p,
                    Next::Up => exits[i][0] += p,
                    Next::Down { fresh: true } => exits[i][1] += p,
                    Next::Down { fresh: false } => exits[i][2] += p,
                }
            }
        }
        AbsorbingChain { q, exits }
    }

    pub fn solve(&self) -> MicroSolution {
        // Every state can exit when 0 < alpha < 1, so no pivot vanishes.
        let Absorption { visits, absorbed } = self
            .absorbing()
            .solve_from(0)
            .expect("micro chain has an absorbing exit");
        MicroSolution {
            expected_transmissions: visits.iter().sum(),
            states: self.states.clone(),
            visits,
            p_up: absorbed[0],
            p_down_fresh: absorbed[1],
            p_down_after_success: absorbed[2],
        }
    }
}

fn intern(states: &mut Vec<MicroPosition>, p: MicroPosition) -> usize {
    match states.iter().position(|q| *q == p) {
        Some(k) => k,
        None => {
            states.push(p);
            states.len() - 1
        }
    }
}

#[derive(Clone, Debug)]
pub struct MicroSolution {
    pub states: Vec<MicroPosition>,
    /// Expected visits per state, aligned with `states`.
    pub visits: Vec<f64>,
    /// Expected transmissions before exit, `X(0)`.
    pub expected_transmissions: f64,
    pub p_up: f64,
    /// Down-exit after `f` failures with no success since entry.
    pub p_down_fresh: f64,
    /// Down-exit after some success.
    pub p_down_after_success: f64,
}

impl MicroSolution {
    pub fn p_down(&self) -> f64 {
        self.p_down_fresh + self.p_down_after_success
    }

    /// Expected visits per run counter `j`, merging the before/after first
    /// success copies. Sorted by `j`.
    pub fn visits_by_run(&self) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for (p, y) in self.states.iter().zip(&self.visits) {
            match out.iter_mut().find(|(j, _)| *j == p.run) {
                Some(entry) => entry.1 += y,
                None => out.push((p.run, *y)),
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }

    pub fn visits_at(&self, run: i64) -> f64 {
        self.states
            .iter()
            .zip(&self.visits)
            .filter(|(p, _)| p.run == run)
            .map(|(_, y)| y)
            .sum()
    }
}

/// Linear-solve counterpart of the closed forms in [`crate::arf`]: expected
/// transmissions, upward exit probability and visit counts.
pub fn micro_chain_solve(alpha: f64, s: u64, f: u64, position: Position) -> MicroSolution {
    MicroChain::new(alpha, s, f, position).solve()
}
