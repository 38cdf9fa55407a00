//! Statechart graph analyses: reachability (E008) and DA lifecycle path
//! facts (W101/W103).
//!
//! Path facts use exists-path over-approximation: branches of `if` and
//! guarded transitions are all considered possible, and a `while` body may
//! run zero or more times. The per-state fixed point tracks the set of
//! possible "satisfier already executed" flags; a trigger statement fires
//! when it is reachable with the satisfier still unexecuted.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::*;

/// Reachability from the initial state, ignoring guards and events.
pub fn reachability(sm: &StateMachine) -> BTreeMap<String, bool> {
    let mut reach: BTreeMap<String, bool> = sm.states.iter().map(|s| (s.name.clone(), false)).collect();
    let mut work = vec![sm.initial.clone()];
    while let Some(name) = work.pop() {
        match reach.get_mut(&name) {
            Some(seen) if !*seen => *seen = true,
            _ => continue,
        }
        if let Some(state) = sm.state(&name) {
            for t in &state.transitions {
                work.push(t.target.clone());
            }
        }
    }
    reach
}

/// Spans where a trigger DA action may execute before its satisfier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DaPathFacts {
    /// `da_predict` reachable with no prior `da_train` (feeds W101).
    pub untrained_predicts: Vec<Span>,
    /// `da_train` reachable with no prior `da_preprocess` (feeds W103).
    pub unprepared_trains: Vec<Span>,
}

pub fn da_path_facts(sm: &StateMachine) -> DaPathFacts {
    DaPathFacts {
        untrained_predicts: trigger_before_satisfier(sm, DaActionKind::Predict, DaActionKind::Train),
        unprepared_trains: trigger_before_satisfier(sm, DaActionKind::Train, DaActionKind::Preprocess),
    }
}

/// Possible values of the "satisfier executed" flag at a program point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Flags {
    can_unsat: bool,
    can_sat: bool,
}

impl Flags {
    fn union(self, other: Flags) -> Flags {
        Flags { can_unsat: self.can_unsat || other.can_unsat, can_sat: self.can_sat || other.can_sat }
    }
    fn is_empty(self) -> bool {
        !self.can_unsat && !self.can_sat
    }
}

fn trigger_before_satisfier(
    sm: &StateMachine,
    trigger: DaActionKind,
    satisfier: DaActionKind,
) -> Vec<Span> {
    let Some(initial) = sm.state(&sm.initial) else {
        return Vec::new();
    };
    let mut fired: BTreeSet<(usize, usize)> = BTreeSet::new(); // (span.start, span.end)
    let mut spans: Vec<Span> = Vec::new();
    let fire = |span: Span, fired: &mut BTreeSet<(usize, usize)>, spans: &mut Vec<Span>| {
        if fired.insert((span.start, span.end)) {
            spans.push(span);
        }
    };

    // resident flags per state (after its entry actions have run)
    let mut resident: BTreeMap<&str, Flags> = BTreeMap::new();
    let start = scan_stmts(
        &initial.on_entry,
        Flags { can_unsat: true, can_sat: false },
        trigger,
        satisfier,
        &mut |s| fire(s, &mut fired, &mut spans),
    );
    resident.insert(initial.name.as_str(), start);

    let mut changed = true;
    while changed {
        changed = false;
        for state in &sm.states {
            let inflow = match resident.get(state.name.as_str()) {
                Some(f) if !f.is_empty() => *f,
                _ => continue,
            };
            for t in &state.transitions {
                let Some(target) = sm.state(&t.target) else { continue };
                let mut f = inflow;
                let mut cb = |s: Span| fire(s, &mut fired, &mut spans);
                f = scan_stmts(&state.on_exit, f, trigger, satisfier, &mut cb);
                f = scan_stmts(&t.actions, f, trigger, satisfier, &mut cb);
                f = scan_stmts(&target.on_entry, f, trigger, satisfier, &mut cb);
                let entry = resident.entry(target.name.as_str()).or_default();
                let merged = entry.union(f);
                if merged != *entry {
                    *entry = merged;
                    changed = true;
                }
            }
        }
    }
    spans.sort_by_key(|s| (s.start, s.end));
    spans
}

fn scan_stmts(
    stmts: &[Stmt],
    mut flags: Flags,
    trigger: DaActionKind,
    satisfier: DaActionKind,
    fire: &mut dyn FnMut(Span),
) -> Flags {
    for s in stmts {
        flags = scan_stmt(s, flags, trigger, satisfier, fire);
    }
    flags
}

fn scan_stmt(
    s: &Stmt,
    flags: Flags,
    trigger: DaActionKind,
    satisfier: DaActionKind,
    fire: &mut dyn FnMut(Span),
) -> Flags {
    match s {
        Stmt::DaAction { kind, span } => {
            if *kind == trigger && flags.can_unsat {
                fire(*span);
            }
            if *kind == satisfier {
                // every path through this point is now satisfied
                Flags { can_unsat: false, can_sat: true }
            } else {
                flags
            }
        }
        Stmt::If { then_body, else_body, .. } => {
            let t = scan_stmts(then_body, flags, trigger, satisfier, fire);
            let e = match else_body {
                Some(eb) => scan_stmts(eb, flags, trigger, satisfier, fire),
                None => flags,
            };
            t.union(e)
        }
        Stmt::While { body, .. } => {
            // zero or more iterations; iterate to a fixed point on the tiny
            // flag lattice
            let mut acc = flags;
            loop {
                let once = scan_stmts(body, acc, trigger, satisfier, fire);
                let merged = acc.union(once);
                if merged == acc {
                    return merged;
                }
                acc = merged;
            }
        }
        _ => flags,
    }
}
