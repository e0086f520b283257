//! Bounded model finder used as an independent check on saturation.
//!
//! Grounds the family rule set over a finite domain (the named persons plus
//! `extra` anonymous individuals) as propositional clauses and decides them
//! with a small DPLL solver. Existentials become disjunctions over the domain
//! via auxiliary variables. Intended for tests at desk scale only.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::kb::{Constraint, HornRule, Relation, RelationAtom, RuleSet};

pub const MAX_DOMAIN: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleVerdict {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("domain of {size} individuals exceeds the limit of {MAX_DOMAIN}")]
pub struct DomainTooLarge {
    pub size: usize,
}

type Lit = i32;

struct Grounding {
    n: usize,
    clauses: Vec<Vec<Lit>>,
    vars: usize,
}

impl Grounding {
    fn var(&self, rel: Relation, x: usize, y: usize) -> Lit {
        let r = Relation::ALL.iter().position(|&q| q == rel).unwrap();
        (1 + r * self.n * self.n + x * self.n + y) as Lit
    }

    fn fresh(&mut self) -> Lit {
        self.vars += 1;
        self.vars as Lit
    }

    fn horn(&mut self, rule: &HornRule) {
        let n = self.n;
        match *rule {
            HornRule::Compose {
                left,
                right,
                head,
                distinct_ends,
            } => {
                for x in 0..n {
                    for y in 0..n {
                        if distinct_ends && x == y {
                            continue;
                        }
                        for z in 0..n {
                            let c = vec![
                                -self.var(left, x, z),
                                -self.var(right, z, y),
                                self.var(head, x, y),
                            ];
                            self.clauses.push(c);
                        }
                    }
                }
            }
            HornRule::Inverse { rel, inv } => {
                for x in 0..n {
                    for y in 0..n {
                        let (a, b) = (self.var(rel, x, y), self.var(inv, y, x));
                        self.clauses.push(vec![-a, b]);
                        self.clauses.push(vec![-b, a]);
                    }
                }
            }
            HornRule::Symmetric(rel) => {
                for x in 0..n {
                    for y in 0..n {
                        let c = vec![-self.var(rel, x, y), self.var(rel, y, x)];
                        self.clauses.push(c);
                    }
                }
            }
            HornRule::Flip { body, head } => {
                for x in 0..n {
                    for y in 0..n {
                        let c = vec![-self.var(body, x, y), self.var(head, y, x)];
                        self.clauses.push(c);
                    }
                }
            }
        }
    }

    fn constraint(&mut self, constraint: Constraint) {
        let n = self.n;
        for x in 0..n {
            for y in 0..n {
                let c = match constraint {
                    Constraint::NotOwnSibling if x == y => vec![-self.var(Relation::Sibling, x, x)],
                    Constraint::NotOwnSibling => continue,
                    Constraint::NotOwnAncestor => vec![
                        -self.var(Relation::Ancestor, x, y),
                        -self.var(Relation::Ancestor, y, x),
                    ],
                    Constraint::ParentNotAuntOrUncle => vec![
                        -self.var(Relation::Un, x, y),
                        -self.var(Relation::InvChild, x, y),
                    ],
                    Constraint::SpouseNotSibling => vec![
                        -self.var(Relation::So, x, y),
                        -self.var(Relation::Sibling, x, y),
                    ],
                };
                self.clauses.push(c);
            }
        }
    }

    /// `trigger(x, y) ⇒ ∨_z w_z` with `w_z ⇒ first ∧ second`.
    fn existential(&mut self, trigger: Relation, body: impl Fn(usize, usize, usize) -> [(Relation, usize, usize); 2]) {
        let n = self.n;
        for x in 0..n {
            for y in 0..n {
                let mut disjunction = vec![-self.var(trigger, x, y)];
                for z in 0..n {
                    let w = self.fresh();
                    disjunction.push(w);
                    for (rel, a, b) in body(x, y, z) {
                        let c = vec![-w, self.var(rel, a, b)];
                        self.clauses.push(c);
                    }
                }
                self.clauses.push(disjunction);
            }
        }
    }
}

/// Decide whether `facts` plus the rule set have a model over the named
/// persons in `facts` and `extra` further individuals.
pub fn model_find(
    rules: &RuleSet,
    facts: &[RelationAtom],
    extra: usize,
) -> Result<OracleVerdict, DomainTooLarge> {
    let names: BTreeSet<&str> = facts
        .iter()
        .flat_map(|f| [f.subject.as_str(), f.object.as_str()])
        .collect();
    let n = names.len() + extra;
    if n > MAX_DOMAIN {
        return Err(DomainTooLarge { size: n });
    }
    let index = |name: &str| names.iter().position(|&m| m == name).unwrap();

    let mut g = Grounding {
        n,
        clauses: Vec::new(),
        vars: Relation::ALL.len() * n * n,
    };
    for rule in rules.horn_rules() {
        g.horn(rule);
    }
    for &c in &rules.constraints {
        g.constraint(c);
    }
    for ex in &rules.existentials {
        use super::kb::Existential::*;
        match ex {
            NephewHasParentSibling => g.existential(Relation::InvUn, |x, y, z| {
                [(Relation::Sibling, x, z), (Relation::Child, z, y)]
            }),
            SiblingsShareParent => g.existential(Relation::Sibling, |x, y, z| {
                [(Relation::Child, z, x), (Relation::Child, z, y)]
            }),
        }
    }
    for f in facts {
        let v = g.var(f.rel, index(&f.subject), index(&f.object));
        g.clauses.push(vec![v]);
    }

    Ok(if Dpll::new(g.vars, g.clauses).solve() {
        OracleVerdict::Sat
    } else {
        OracleVerdict::Unsat
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Value {
    Unset,
    True,
    False,
}

/// Plain DPLL: unit propagation over occurrence lists and chronological
/// backtracking. Branches on the first unassigned literal of the first
/// clause that is not yet satisfied.
struct Dpll {
    clauses: Vec<Vec<Lit>>,
    occurs: Vec<Vec<usize>>,
    values: Vec<Value>,
    trail: Vec<Lit>,
    // (trail length before the decision, decision literal, already flipped)
    decisions: Vec<(usize, Lit, bool)>,
}

impl Dpll {
    fn new(vars: usize, clauses: Vec<Vec<Lit>>) -> Self {
        let mut occurs = vec![Vec::new(); 2 * (vars + 1)];
        for (i, c) in clauses.iter().enumerate() {
            for &l in c {
                occurs[Self::slot(-l)].push(i);
            }
        }
        Self {
            clauses,
            occurs,
            values: vec![Value::Unset; vars + 1],
            trail: Vec::new(),
            decisions: Vec::new(),
        }
    }

    /// Occurrence slot keyed by the literal whose assignment falsifies the clause literal.
    fn slot(l: Lit) -> usize {
        2 * l.unsigned_abs() as usize + usize::from(l < 0)
    }

    fn value(&self, l: Lit) -> Value {
        match (self.values[l.unsigned_abs() as usize], l > 0) {
            (Value::Unset, _) => Value::Unset,
            (Value::True, true) | (Value::False, false) => Value::True,
            _ => Value::False,
        }
    }

    fn assign(&mut self, l: Lit) {
        self.values[l.unsigned_abs() as usize] = if l > 0 { Value::True } else { Value::False };
        self.trail.push(l);
    }

    /// Propagate from trail position `from`; false on conflict.
    fn propagate(&mut self, mut from: usize) -> bool {
        while from < self.trail.len() {
            let l = self.trail[from];
            from += 1;
            for k in 0..self.occurs[Self::slot(l)].len() {
                let ci = self.occurs[Self::slot(l)][k];
                let mut unit = None;
                let mut open = 0;
                let mut satisfied = false;
                for &m in &self.clauses[ci] {
                    match self.value(m) {
                        Value::True => {
                            satisfied = true;
                            break;
                        }
                        Value::Unset => {
                            open += 1;
                            unit = Some(m);
                        }
                        Value::False => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match open {
                    0 => return false,
                    1 => self.assign(unit.unwrap()),
                    _ => {}
                }
            }
        }
        true
    }

    fn initial_units(&mut self) -> bool {
        for ci in 0..self.clauses.len() {
            if let [l] = self.clauses[ci][..] {
                match self.value(l) {
                    Value::False => return false,
                    Value::Unset => self.assign(l),
                    Value::True => {}
                }
            }
        }
        true
    }

    fn pick(&self) -> Option<Lit> {
        self.clauses.iter().find_map(|c| {
            if c.iter().any(|&l| self.value(l) == Value::True) {
                None
            } else {
                c.iter().copied().find(|&l| self.value(l) == Value::Unset)
            }
        })
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let l = self.trail.pop().unwrap();
            self.values[l.unsigned_abs() as usize] = Value::Unset;
        }
    }

    fn solve(mut self) -> bool {
        if !self.initial_units() || !self.propagate(0) {
            return false;
        }
        loop {
            let Some(l) = self.pick() else {
                return true;
            };
            let mark = self.trail.len();
            self.decisions.push((mark, l, false));
            self.assign(l);
            let mut ok = self.propagate(mark);
            while !ok {
                // flip the most recent unflipped decision
                loop {
                    let Some((mark, lit, flipped)) = self.decisions.pop() else {
                        return false;
                    };
                    self.undo_to(mark);
                    if !flipped {
                        self.decisions.push((mark, -lit, true));
                        self.assign(-lit);
                        ok = self.propagate(mark);
                        break;
                    }
                }
            }
        }
    }
}
