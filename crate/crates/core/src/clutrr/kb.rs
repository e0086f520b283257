//! Kinship knowledge base: ground relation atoms saturated under the family
//! rule set, with contradiction detection.
//!
//! Relations read left to right: `child(x, y)` is "the child of x is y",
//! `un(x, y)` is "the aunt/uncle of x is y", and `inv_*` are inverses.
//! Gendered words never reach this module.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "child")]
    Child,
    #[serde(rename = "inv_child")]
    InvChild,
    #[serde(rename = "grand")]
    Grand,
    #[serde(rename = "inv_grand")]
    InvGrand,
    #[serde(rename = "sibling")]
    Sibling,
    #[serde(rename = "SO")]
    So,
    #[serde(rename = "un")]
    Un,
    #[serde(rename = "inv_un")]
    InvUn,
    #[serde(rename = "in_law")]
    InLaw,
    #[serde(rename = "inv_in_law")]
    InvInLaw,
    #[serde(rename = "ancestor")]
    Ancestor,
}

impl Relation {
    pub const ALL: [Relation; 11] = [
        Relation::Child,
        Relation::InvChild,
        Relation::Grand,
        Relation::InvGrand,
        Relation::Sibling,
        Relation::So,
        Relation::Un,
        Relation::InvUn,
        Relation::InLaw,
        Relation::InvInLaw,
        Relation::Ancestor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Child => "child",
            Relation::InvChild => "inv_child",
            Relation::Grand => "grand",
            Relation::InvGrand => "inv_grand",
            Relation::Sibling => "sibling",
            Relation::So => "SO",
            Relation::Un => "un",
            Relation::InvUn => "inv_un",
            Relation::InLaw => "in_law",
            Relation::InvInLaw => "inv_in_law",
            Relation::Ancestor => "ancestor",
        }
    }

    pub fn from_name(name: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.name() == name)
    }

    pub fn inverse(self) -> Option<Relation> {
        match self {
            Relation::Child => Some(Relation::InvChild),
            Relation::InvChild => Some(Relation::Child),
            Relation::Grand => Some(Relation::InvGrand),
            Relation::InvGrand => Some(Relation::Grand),
            Relation::Un => Some(Relation::InvUn),
            Relation::InvUn => Some(Relation::Un),
            Relation::InLaw => Some(Relation::InvInLaw),
            Relation::InvInLaw => Some(Relation::InLaw),
            Relation::Sibling | Relation::So | Relation::Ancestor => None,
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, Relation::Sibling | Relation::So)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A ground atom over person names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationAtom {
    pub rel: Relation,
    pub subject: String,
    pub object: String,
}

impl RelationAtom {
    pub fn new(rel: Relation, subject: &str, object: &str) -> Self {
        Self {
            rel,
            subject: subject.to_string(),
            object: object.to_string(),
        }
    }

    /// Orders the arguments of symmetric relations so equal facts compare equal.
    pub fn canonical(&self) -> Self {
        if self.rel.is_symmetric() && self.object < self.subject {
            Self::new(self.rel, &self.object, &self.subject)
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for RelationAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.rel, self.subject, self.object)
    }
}

type PersonId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Atom {
    rel: Relation,
    subject: PersonId,
    object: PersonId,
}

/// One Horn rule of the family rule set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HornRule {
    /// `left(x, z) ∧ right(z, y) ⇒ head(x, y)`, optionally guarded by `x ≠ y`.
    Compose {
        left: Relation,
        right: Relation,
        head: Relation,
        distinct_ends: bool,
    },
    /// `rel(x, y) ⇔ inv(y, x)`.
    Inverse { rel: Relation, inv: Relation },
    /// `rel(x, y) ⇔ rel(y, x)`.
    Symmetric(Relation),
    /// `body(x, y) ⇒ head(y, x)`.
    Flip { body: Relation, head: Relation },
}

/// `trigger(x, y) ⇒ ∃z. first(..) ∧ second(..)`; see [`Existential::witness_atoms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Existential {
    /// `inv_un(x, y) ⇒ ∃z. sibling(x, z) ∧ child(z, y)`
    NephewHasParentSibling,
    /// `sibling(x, y) ⇒ ∃z. child(z, x) ∧ child(z, y)`
    SiblingsShareParent,
}

impl Existential {
    pub fn trigger(self) -> Relation {
        match self {
            Existential::NephewHasParentSibling => Relation::InvUn,
            Existential::SiblingsShareParent => Relation::Sibling,
        }
    }

    fn witness_atoms(self, x: PersonId, y: PersonId, z: PersonId) -> [Atom; 2] {
        let atom = |rel, subject, object| Atom {
            rel,
            subject,
            object,
        };
        match self {
            Existential::NephewHasParentSibling => {
                [atom(Relation::Sibling, x, z), atom(Relation::Child, z, y)]
            }
            Existential::SiblingsShareParent => {
                [atom(Relation::Child, z, x), atom(Relation::Child, z, y)]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// `¬sibling(x, x)`
    NotOwnSibling,
    /// `ancestor(x, y) ⇒ ¬ancestor(y, x)`, including `x = y`
    NotOwnAncestor,
    /// `un(x, y) ⇒ ¬inv_child(x, y)`
    ParentNotAuntOrUncle,
    /// `SO(x, y) ⇒ ¬sibling(x, y)`
    SpouseNotSibling,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::NotOwnSibling => "you can't be your own sibling",
            Constraint::NotOwnAncestor => "you can't be your own ancestor",
            Constraint::ParentNotAuntOrUncle => "parents can't be aunts/uncles",
            Constraint::SpouseNotSibling => "you can't be married to your sibling",
        })
    }
}

/// The family rule set, partitioned by role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub compositions: Vec<HornRule>,
    pub inverses: Vec<HornRule>,
    pub symmetries: Vec<HornRule>,
    pub ancestry: Vec<HornRule>,
    pub sibling_transitivity: HornRule,
    pub constraints: Vec<Constraint>,
    pub existentials: Vec<Existential>,
}

impl Default for RuleSet {
    fn default() -> Self {
        use Relation::*;
        let compose = |left, right, head| HornRule::Compose {
            left,
            right,
            head,
            distinct_ends: false,
        };
        RuleSet {
            compositions: vec![
                compose(Child, Child, Grand),
                compose(Grand, Sibling, Grand),
                compose(InvChild, InvChild, InvGrand),
                compose(Sibling, InvGrand, InvGrand),
                compose(Child, Sibling, Child),
                compose(So, Child, Child),
                compose(Sibling, InvChild, InvChild),
                compose(Child, InvGrand, InvChild),
                HornRule::Compose {
                    left: InvChild,
                    right: Child,
                    head: Sibling,
                    distinct_ends: true,
                },
                compose(Child, So, InLaw),
                compose(So, InvChild, InvInLaw),
                compose(Sibling, Child, InvUn),
                compose(InvChild, Sibling, Un),
            ],
            inverses: vec![
                HornRule::Inverse {
                    rel: Child,
                    inv: InvChild,
                },
                HornRule::Inverse {
                    rel: InvInLaw,
                    inv: InLaw,
                },
                HornRule::Inverse {
                    rel: InvGrand,
                    inv: Grand,
                },
                HornRule::Inverse { rel: InvUn, inv: Un },
            ],
            symmetries: vec![HornRule::Symmetric(Sibling), HornRule::Symmetric(So)],
            ancestry: vec![
                HornRule::Flip {
                    body: Child,
                    head: Ancestor,
                },
                HornRule::Flip {
                    body: Grand,
                    head: Ancestor,
                },
                compose(Ancestor, Ancestor, Ancestor),
            ],
            sibling_transitivity: HornRule::Compose {
                left: Sibling,
                right: Sibling,
                head: Sibling,
                distinct_ends: true,
            },
            constraints: vec![
                Constraint::NotOwnSibling,
                Constraint::NotOwnAncestor,
                Constraint::ParentNotAuntOrUncle,
                Constraint::SpouseNotSibling,
            ],
            existentials: vec![
                Existential::NephewHasParentSibling,
                Existential::SiblingsShareParent,
            ],
        }
    }
}

impl RuleSet {
    pub fn horn_rules(&self) -> impl Iterator<Item = &HornRule> {
        self.compositions
            .iter()
            .chain(&self.inverses)
            .chain(&self.symmetries)
            .chain(&self.ancestry)
            .chain(std::iter::once(&self.sibling_transitivity))
    }
}

/// A violated constraint and the atoms that instantiate it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{constraint}: {}", witness.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ∧ "))]
pub struct Contradiction {
    pub constraint: Constraint,
    pub witness: Vec<RelationAtom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("unknown person {0}")]
    UnknownPerson(String),
    #[error("malformed knowledge base document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum AssertOutcome {
    Consistent(KnowledgeBase),
    Contradiction(Contradiction),
}

impl AssertOutcome {
    pub fn is_consistent(&self) -> bool {
        matches!(self, AssertOutcome::Consistent(_))
    }
}

pub const SKOLEM_PREFIX: &str = "_sk";

/// Bound on witness-search nodes per assertion; past it the search fails open.
pub const SEARCH_NODE_LIMIT: usize = 20_000;

enum Search {
    Consistent(KnowledgeBase),
    /// Gave up (budget or node limit) without a contradiction on every branch.
    Open(KnowledgeBase),
    Contradiction(Contradiction),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkolemBudget {
    /// Fresh witnesses allowed per asserted existential trigger atom.
    pub per_trigger: usize,
    /// Hard cap on Skolem individuals in one knowledge base.
    pub global_cap: usize,
}

impl Default for SkolemBudget {
    fn default() -> Self {
        Self {
            per_trigger: 2,
            global_cap: 64,
        }
    }
}

/// Knowledge base value. Every mutation goes through [`KnowledgeBase::assert_facts`],
/// which returns a new value and leaves `self` untouched.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    rules: RuleSet,
    persons: Vec<String>,
    ids: HashMap<String, PersonId>,
    atoms: BTreeSet<Atom>,
    asserted: BTreeSet<Atom>,
    // (rel, subject) -> objects and (rel, object) -> subjects
    forward: HashMap<(Relation, PersonId), BTreeSet<PersonId>>,
    backward: HashMap<(Relation, PersonId), BTreeSet<PersonId>>,
    skolems: usize,
    budget: SkolemBudget,
    budget_exceeded: bool,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.to_json() == other.to_json()
    }
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::with_rules(RuleSet::default())
    }

    pub fn with_rules(rules: RuleSet) -> Self {
        Self {
            rules,
            persons: Vec::new(),
            ids: HashMap::new(),
            atoms: BTreeSet::new(),
            asserted: BTreeSet::new(),
            forward: HashMap::new(),
            backward: HashMap::new(),
            skolems: 0,
            budget: SkolemBudget::default(),
            budget_exceeded: false,
        }
    }

    pub fn with_persons<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let mut kb = Self::new();
        for name in names {
            kb.add_person(name);
        }
        kb
    }

    pub fn set_skolem_budget(&mut self, budget: SkolemBudget) {
        self.budget = budget;
    }

    pub fn skolem_budget(&self) -> SkolemBudget {
        self.budget
    }

    /// Whether an existential went unwitnessed because the Skolem budget ran out.
    pub fn skolem_budget_exceeded(&self) -> bool {
        self.budget_exceeded
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn persons(&self) -> &[String] {
        &self.persons
    }

    pub fn skolem_count(&self) -> usize {
        self.skolems
    }

    pub fn add_person(&mut self, name: &str) -> bool {
        if self.ids.contains_key(name) {
            return false;
        }
        self.intern(name);
        true
    }

    fn intern(&mut self, name: &str) -> PersonId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.persons.len() as PersonId;
        self.persons.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    fn fresh_individual(&mut self) -> PersonId {
        let mut n = self.skolems;
        while self.ids.contains_key(&format!("{SKOLEM_PREFIX}{n}")) {
            n += 1;
        }
        self.skolems += 1;
        self.intern(&format!("{SKOLEM_PREFIX}{n}"))
    }

    fn name(&self, id: PersonId) -> &str {
        &self.persons[id as usize]
    }

    fn external(&self, atom: &Atom) -> RelationAtom {
        RelationAtom::new(atom.rel, self.name(atom.subject), self.name(atom.object))
    }

    fn has(&self, rel: Relation, subject: PersonId, object: PersonId) -> bool {
        self.atoms.contains(&Atom {
            rel,
            subject,
            object,
        })
    }

    fn objects_of(&self, rel: Relation, subject: PersonId) -> Vec<PersonId> {
        self.forward
            .get(&(rel, subject))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    fn subjects_of(&self, rel: Relation, object: PersonId) -> Vec<PersonId> {
        self.backward
            .get(&(rel, object))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    fn insert(&mut self, atom: Atom, queue: &mut VecDeque<Atom>) {
        if self.atoms.insert(atom) {
            self.forward
                .entry((atom.rel, atom.subject))
                .or_default()
                .insert(atom.object);
            self.backward
                .entry((atom.rel, atom.object))
                .or_default()
                .insert(atom.subject);
            queue.push_back(atom);
        }
    }

    /// Atoms derivable in one step with `atom` as one of the premises.
    fn consequences(&self, rule: &HornRule, atom: Atom) -> Vec<Atom> {
        let mk = |rel, subject, object| Atom {
            rel,
            subject,
            object,
        };
        let mut out = Vec::new();
        match *rule {
            HornRule::Compose {
                left,
                right,
                head,
                distinct_ends,
            } => {
                if atom.rel == left {
                    let (x, z) = (atom.subject, atom.object);
                    for y in self.objects_of(right, z) {
                        if !distinct_ends || x != y {
                            out.push(mk(head, x, y));
                        }
                    }
                }
                if atom.rel == right {
                    let (z, y) = (atom.subject, atom.object);
                    for x in self.subjects_of(left, z) {
                        if !distinct_ends || x != y {
                            out.push(mk(head, x, y));
                        }
                    }
                }
            }
            HornRule::Inverse { rel, inv } => {
                if atom.rel == rel {
                    out.push(mk(inv, atom.object, atom.subject));
                }
                if atom.rel == inv {
                    out.push(mk(rel, atom.object, atom.subject));
                }
            }
            HornRule::Symmetric(rel) => {
                if atom.rel == rel {
                    out.push(mk(rel, atom.object, atom.subject));
                }
            }
            HornRule::Flip { body, head } => {
                if atom.rel == body {
                    out.push(mk(head, atom.object, atom.subject));
                }
            }
        }
        out
    }

    /// Least fixpoint of the Horn rules, seeded with every atom in `queue`.
    fn horn_closure(&mut self, mut queue: VecDeque<Atom>) {
        let rules: Vec<HornRule> = self.rules.horn_rules().copied().collect();
        while let Some(atom) = queue.pop_front() {
            for rule in &rules {
                for derived in self.consequences(rule, atom) {
                    self.insert(derived, &mut queue);
                }
            }
        }
    }

    fn has_witness(&self, ex: Existential, x: PersonId, y: PersonId) -> bool {
        match ex {
            Existential::NephewHasParentSibling => self
                .objects_of(Relation::Sibling, x)
                .into_iter()
                .any(|z| self.has(Relation::Child, z, y)),
            Existential::SiblingsShareParent => self
                .subjects_of(Relation::Child, x)
                .into_iter()
                .any(|z| self.has(Relation::Child, z, y)),
        }
    }

    fn skolem_allowance(&self) -> usize {
        let triggers = self
            .asserted
            .iter()
            .filter(|a| matches!(a.rel, Relation::Sibling | Relation::InvUn | Relation::Un))
            .count();
        (triggers * self.budget.per_trigger).min(self.budget.global_cap)
    }

    /// First trigger atom (in atom order) whose existential has no witness.
    fn unwitnessed(&self) -> Option<(Existential, Atom)> {
        let existentials = &self.rules.existentials;
        self.atoms.iter().find_map(|atom| {
            existentials
                .iter()
                .find(|ex| ex.trigger() == atom.rel && !self.has_witness(**ex, atom.subject, atom.object))
                .map(|ex| (*ex, *atom))
        })
    }

    fn with_witness(&self, ex: Existential, trigger: Atom, z: PersonId) -> KnowledgeBase {
        let mut kb = self.clone();
        let mut queue = VecDeque::new();
        for atom in ex.witness_atoms(trigger.subject, trigger.object, z) {
            kb.insert(atom, &mut queue);
        }
        kb.horn_closure(queue);
        kb
    }

    /// Satisfy the existentials of a Horn-closed knowledge base.
    ///
    /// Each unwitnessed existential branches on its witness: a fresh Skolem
    /// individual first, then every existing individual in turn. Reuse matters
    /// because the `x ≠ y` guards make a fresh witness stronger than an
    /// existing one, so a fresh witness alone can report spurious
    /// contradictions.
    fn witness_search(self, nodes: &mut usize) -> Search {
        *nodes += 1;
        if let Some(c) = self.violation() {
            return Search::Contradiction(c);
        }
        let Some((ex, trigger)) = self.unwitnessed() else {
            return Search::Consistent(self);
        };
        if *nodes > SEARCH_NODE_LIMIT {
            let mut kb = self;
            kb.budget_exceeded = true;
            return Search::Open(kb);
        }

        let mut first_contradiction = None;
        let mut open = None;
        let fresh_allowed = self.skolems < self.skolem_allowance();
        if fresh_allowed {
            let mut kb = self.clone();
            let z = kb.fresh_individual();
            match kb.with_witness(ex, trigger, z).witness_search(nodes) {
                Search::Consistent(kb) => return Search::Consistent(kb),
                Search::Open(kb) => open = Some(kb),
                Search::Contradiction(c) => first_contradiction = Some(c),
            }
        }
        for z in 0..self.persons.len() as PersonId {
            match self.with_witness(ex, trigger, z).witness_search(nodes) {
                Search::Consistent(kb) => return Search::Consistent(kb),
                Search::Open(kb) => {
                    open.get_or_insert(kb);
                }
                Search::Contradiction(c) => {
                    first_contradiction.get_or_insert(c);
                }
            }
        }
        if let Some(kb) = open {
            return Search::Open(kb);
        }
        if !fresh_allowed {
            // a witness outside the budget might still exist
            let mut kb = self;
            kb.budget_exceeded = true;
            return Search::Open(kb);
        }
        Search::Contradiction(first_contradiction.expect("fresh branch was explored"))
    }

    fn close(mut self, seed: VecDeque<Atom>) -> Search {
        self.budget_exceeded = false;
        self.horn_closure(seed);
        self.witness_search(&mut 0)
    }

    /// Close the atom set under the rule set, choosing witnesses for the
    /// existentials (fresh Skolem individuals within the budget, or existing
    /// individuals). When no consistent choice exists the fresh-witness
    /// closure is returned.
    pub fn saturate(&self) -> KnowledgeBase {
        let seed: VecDeque<Atom> = self.atoms.iter().copied().collect();
        match self.clone().close(seed.clone()) {
            Search::Consistent(kb) | Search::Open(kb) => kb,
            Search::Contradiction(_) => {
                let mut kb = self.clone();
                kb.horn_closure(seed);
                kb
            }
        }
    }

    /// First violated negative constraint, if any.
    pub fn violation(&self) -> Option<Contradiction> {
        for constraint in &self.rules.constraints {
            let found = match constraint {
                Constraint::NotOwnSibling => self
                    .atoms
                    .iter()
                    .find(|a| a.rel == Relation::Sibling && a.subject == a.object)
                    .map(|a| vec![*a]),
                Constraint::NotOwnAncestor => self
                    .atoms
                    .iter()
                    .filter(|a| a.rel == Relation::Ancestor)
                    .find(|a| self.has(Relation::Ancestor, a.object, a.subject))
                    .map(|a| {
                        if a.subject == a.object {
                            vec![*a]
                        } else {
                            vec![
                                *a,
                                Atom {
                                    rel: Relation::Ancestor,
                                    subject: a.object,
                                    object: a.subject,
                                },
                            ]
                        }
                    }),
                Constraint::ParentNotAuntOrUncle => self
                    .atoms
                    .iter()
                    .filter(|a| a.rel == Relation::Un)
                    .find(|a| self.has(Relation::InvChild, a.subject, a.object))
                    .map(|a| {
                        vec![
                            *a,
                            Atom {
                                rel: Relation::InvChild,
                                ..*a
                            },
                        ]
                    }),
                Constraint::SpouseNotSibling => self
                    .atoms
                    .iter()
                    .filter(|a| a.rel == Relation::So)
                    .find(|a| self.has(Relation::Sibling, a.subject, a.object))
                    .map(|a| {
                        vec![
                            *a,
                            Atom {
                                rel: Relation::Sibling,
                                ..*a
                            },
                        ]
                    }),
            };
            if let Some(atoms) = found {
                return Some(Contradiction {
                    constraint: *constraint,
                    witness: atoms.iter().map(|a| self.external(a)).collect(),
                });
            }
        }
        None
    }

    /// Add `facts`, saturate, and check every negative constraint. Unknown
    /// names are registered as new persons. On contradiction `self` is unchanged.
    pub fn assert_facts(&self, facts: &[RelationAtom]) -> AssertOutcome {
        // Witness choices are recomputed from the asserted atoms every time:
        // a witness that suited earlier facts may not suit the new ones.
        let mut kb = KnowledgeBase::with_rules(self.rules.clone());
        kb.budget = self.budget;
        for name in self.persons.iter().filter(|p| !p.starts_with(SKOLEM_PREFIX)) {
            kb.intern(name);
        }
        let mut queue = VecDeque::new();
        let previous = self.asserted.iter().map(|a| self.external(a));
        for fact in previous.chain(facts.iter().cloned()) {
            let atom = Atom {
                rel: fact.rel,
                subject: kb.intern(&fact.subject),
                object: kb.intern(&fact.object),
            };
            kb.asserted.insert(atom);
            kb.insert(atom, &mut queue);
        }
        match kb.close(queue) {
            Search::Consistent(kb) | Search::Open(kb) => AssertOutcome::Consistent(kb),
            Search::Contradiction(c) => AssertOutcome::Contradiction(c),
        }
    }

    pub fn entails(&self, atom: &RelationAtom) -> Result<bool, KbError> {
        let id = |name: &str| {
            self.ids
                .get(name)
                .copied()
                .ok_or_else(|| KbError::UnknownPerson(name.to_string()))
        };
        Ok(self.has(atom.rel, id(&atom.subject)?, id(&atom.object)?))
    }

    pub fn atoms(&self) -> impl Iterator<Item = RelationAtom> + '_ {
        self.atoms.iter().map(|a| self.external(a))
    }

    pub fn asserted(&self) -> impl Iterator<Item = RelationAtom> + '_ {
        self.asserted.iter().map(|a| self.external(a))
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn to_document(&self) -> KbDocument {
        KbDocument {
            persons: self.persons.clone(),
            atoms: self
                .atoms
                .iter()
                .map(|a| KbAtomRecord {
                    rel: a.rel,
                    subject: self.name(a.subject).to_string(),
                    object: self.name(a.object).to_string(),
                    asserted: self.asserted.contains(a),
                })
                .collect(),
            skolem_budget: self.budget,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("kb serializes")
    }

    /// Rebuild a knowledge base from an exported document. Only asserted
    /// atoms are replayed; the rest is recomputed by saturation.
    pub fn from_document(doc: &KbDocument) -> Result<KnowledgeBase, KbError> {
        let mut kb = KnowledgeBase::new();
        kb.budget = doc.skolem_budget;
        for p in &doc.persons {
            if p.starts_with(SKOLEM_PREFIX) {
                continue;
            }
            kb.intern(p);
        }
        let facts: Vec<RelationAtom> = doc
            .atoms
            .iter()
            .filter(|a| a.asserted)
            .map(|a| RelationAtom::new(a.rel, &a.subject, &a.object))
            .collect();
        if let Some(skolem) = facts
            .iter()
            .flat_map(|f| [&f.subject, &f.object])
            .find(|n| n.starts_with(SKOLEM_PREFIX))
        {
            return Err(KbError::Malformed(format!(
                "asserted atom mentions Skolem individual {skolem}"
            )));
        }
        match kb.assert_facts(&facts) {
            AssertOutcome::Consistent(kb) => Ok(kb),
            AssertOutcome::Contradiction(c) => Err(KbError::Malformed(c.to_string())),
        }
    }

    pub fn from_json(json: &str) -> Result<KnowledgeBase, KbError> {
        let doc: KbDocument =
            serde_json::from_str(json).map_err(|e| KbError::Malformed(e.to_string()))?;
        Self::from_document(&doc)
    }

    /// Persons related to `name` by `rel` (i.e. all `y` with `rel(name, y)`).
    pub fn related(&self, rel: Relation, name: &str) -> Vec<String> {
        let Some(&id) = self.ids.get(name) else {
            return Vec::new();
        };
        self.objects_of(rel, id)
            .into_iter()
            .map(|o| self.name(o).to_string())
            .collect()
    }

    /// Atoms grouped by relation, for debugging output.
    pub fn summary(&self) -> BTreeMap<Relation, usize> {
        let mut out = BTreeMap::new();
        for a in &self.atoms {
            *out.entry(a.rel).or_insert(0) += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbAtomRecord {
    pub rel: Relation,
    pub subject: String,
    pub object: String,
    pub asserted: bool,
}

/// JSON import/export shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbDocument {
    pub persons: Vec<String>,
    pub atoms: Vec<KbAtomRecord>,
    #[serde(default)]
    pub skolem_budget: SkolemBudget,
}

#[cfg(test)]
mod tests {
    use super::*;
    use Relation::*;

    fn atom(rel: Relation, s: &str, o: &str) -> RelationAtom {
        RelationAtom::new(rel, s, o)
    }

    fn consistent(kb: &KnowledgeBase, facts: &[RelationAtom]) -> KnowledgeBase {
        match kb.assert_facts(facts) {
            AssertOutcome::Consistent(kb) => kb,
            AssertOutcome::Contradiction(c) => panic!("unexpected contradiction: {c}"),
        }
    }

    fn contradiction(kb: &KnowledgeBase, facts: &[RelationAtom]) -> Contradiction {
        match kb.assert_facts(facts) {
            AssertOutcome::Consistent(_) => panic!("expected a contradiction for {facts:?}"),
            AssertOutcome::Contradiction(c) => c,
        }
    }

    #[test]
    fn rule_set_partition_sizes() {
        let rules = RuleSet::default();
        assert_eq!(rules.compositions.len(), 13);
        assert_eq!(rules.inverses.len(), 4);
        assert_eq!(rules.symmetries.len(), 2);
        assert_eq!(rules.ancestry.len(), 3);
        assert_eq!(rules.constraints.len(), 4);
        assert_eq!(rules.existentials.len(), 2);
    }

    #[test]
    fn grandchild_and_ancestors() {
        let kb = consistent(&KnowledgeBase::new(), &[atom(Child, "A", "B"), atom(Child, "B", "C")]);
        assert!(kb.entails(&atom(Grand, "A", "C")).unwrap());
        assert!(kb.entails(&atom(Ancestor, "C", "A")).unwrap());
        assert!(kb.entails(&atom(Ancestor, "B", "A")).unwrap());
        assert!(kb.entails(&atom(InvGrand, "C", "A")).unwrap());
        assert!(!kb.entails(&atom(Ancestor, "A", "C")).unwrap());
    }

    #[test]
    fn empty_fixpoint() {
        let kb = KnowledgeBase::new().saturate();
        assert_eq!(kb.atom_count(), 0);
    }

    #[test]
    fn sibling_gets_skolem_parent() {
        let kb = consistent(&KnowledgeBase::new(), &[atom(Sibling, "X", "Y")]);
        assert_eq!(kb.skolem_count(), 1);
        let parents = kb.related(InvChild, "X");
        assert_eq!(parents.len(), 1);
        let p = &parents[0];
        assert!(p.starts_with(SKOLEM_PREFIX));
        assert!(kb.entails(&atom(Child, p, "Y")).unwrap());
    }

    #[test]
    fn existing_parent_is_reused_as_witness() {
        let kb = consistent(
            &KnowledgeBase::new(),
            &[atom(Child, "P", "X"), atom(Child, "P", "Y")],
        );
        assert!(kb.entails(&atom(Sibling, "X", "Y")).unwrap());
        assert_eq!(kb.skolem_count(), 0);
    }

    #[test]
    fn parent_cannot_be_uncle() {
        let kb = consistent(&KnowledgeBase::new(), &[atom(InvChild, "J", "M")]);
        let c = contradiction(&kb, &[atom(Un, "J", "M")]);
        assert_eq!(c.constraint, Constraint::ParentNotAuntOrUncle);
    }

    #[test]
    fn own_sibling() {
        let c = contradiction(&KnowledgeBase::new(), &[atom(Sibling, "X", "X")]);
        assert_eq!(c.constraint, Constraint::NotOwnSibling);
    }

    #[test]
    fn own_child_is_own_ancestor() {
        let c = contradiction(&KnowledgeBase::new(), &[atom(Child, "X", "X")]);
        assert_eq!(c.constraint, Constraint::NotOwnAncestor);
    }

    #[test]
    fn ancestor_two_cycle() {
        let c = contradiction(
            &KnowledgeBase::new(),
            &[atom(Child, "A", "B"), atom(Child, "B", "A")],
        );
        assert_eq!(c.constraint, Constraint::NotOwnAncestor);
    }

    #[test]
    fn spouse_sibling_exclusion() {
        let c = contradiction(
            &KnowledgeBase::new(),
            &[atom(So, "A", "B"), atom(Sibling, "B", "A")],
        );
        assert_eq!(c.constraint, Constraint::SpouseNotSibling);
    }

    #[test]
    fn fig3_accepted_option() {
        let kb = consistent(
            &KnowledgeBase::new(),
            &[atom(Child, "Tracy", "Aaron"), atom(Grand, "Harold", "Aaron")],
        );
        consistent(&kb, &[atom(Child, "Harold", "Tracy")]);
    }

    #[test]
    fn stepchild_rule() {
        let kb = consistent(&KnowledgeBase::new(), &[atom(So, "L", "T"), atom(Child, "L", "A")]);
        assert!(kb.entails(&atom(Child, "T", "A")).unwrap());
    }

    #[test]
    fn entails_unknown_person() {
        let kb = KnowledgeBase::new();
        assert_eq!(
            kb.entails(&atom(Sibling, "A", "B")),
            Err(KbError::UnknownPerson("A".into()))
        );
        let kb = KnowledgeBase::with_persons(["A", "B"]);
        assert_eq!(kb.entails(&atom(Sibling, "A", "B")), Ok(false));
    }

    #[test]
    fn contradiction_is_transactional() {
        let kb = consistent(&KnowledgeBase::new(), &[atom(Child, "A", "B")]);
        let before = kb.to_json();
        contradiction(&kb, &[atom(Child, "B", "A")]);
        assert_eq!(before, kb.to_json());
    }

    #[test]
    fn uncle_chain_uses_two_skolems() {
        let kb = consistent(&KnowledgeBase::new(), &[atom(Un, "A", "B")]);
        assert_eq!(kb.skolem_count(), 2);
        assert!(!kb.skolem_budget_exceeded());
    }

    #[test]
    fn budget_exhaustion_fails_open() {
        let mut kb = KnowledgeBase::new();
        kb.set_skolem_budget(SkolemBudget {
            per_trigger: 2,
            global_cap: 1,
        });
        let kb = consistent(&kb, &[atom(Un, "A", "B")]);
        assert_eq!(kb.skolem_count(), 1);
        assert!(kb.skolem_budget_exceeded());
    }

    #[test]
    fn json_round_trip() {
        let kb = consistent(
            &KnowledgeBase::new(),
            &[atom(Child, "A", "B"), atom(Sibling, "B", "C")],
        );
        let back = KnowledgeBase::from_json(&kb.to_json()).unwrap();
        assert_eq!(back.to_json(), kb.to_json());
        assert!(KnowledgeBase::from_json("{").is_err());
    }
}
