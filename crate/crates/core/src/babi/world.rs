//! Minimal world model for bAbI task #2: people move between places and
//! carry objects around.
//!
//! Knowledge is partial. A location that has never been stated is unknown,
//! and unknown values never cause a rejection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    CauseKind, InvalidHandle, Rejection, SnapshotHandle, SnapshotStack, Verdict, WorldModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Person,
    Object,
    Location,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Person => "person",
            EntityKind::Object => "object",
            EntityKind::Location => "location",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum BabiAction {
    Go { person: String, location: String },
    Pickup { person: String, object: String },
    Drop { person: String, object: String },
}

impl BabiAction {
    pub fn go(person: &str, location: &str) -> Self {
        BabiAction::Go {
            person: person.to_string(),
            location: location.to_string(),
        }
    }

    pub fn pickup(person: &str, object: &str) -> Self {
        BabiAction::Pickup {
            person: person.to_string(),
            object: object.to_string(),
        }
    }

    pub fn drop(person: &str, object: &str) -> Self {
        BabiAction::Drop {
            person: person.to_string(),
            object: object.to_string(),
        }
    }

    pub fn person(&self) -> &str {
        match self {
            BabiAction::Go { person, .. }
            | BabiAction::Pickup { person, .. }
            | BabiAction::Drop { person, .. } => person,
        }
    }

    /// Argument names paired with the kind their position implies.
    pub fn typed_args(&self) -> [(&str, EntityKind); 2] {
        match self {
            BabiAction::Go { person, location } => {
                [(person, EntityKind::Person), (location, EntityKind::Location)]
            }
            BabiAction::Pickup { person, object } | BabiAction::Drop { person, object } => {
                [(person, EntityKind::Person), (object, EntityKind::Object)]
            }
        }
    }
}

impl fmt::Display for BabiAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BabiAction::Go { person, location } => write!(f, "go({person}, {location})"),
            BabiAction::Pickup { person, object } => write!(f, "pickup({person}, {object})"),
            BabiAction::Drop { person, object } => write!(f, "drop({person}, {object})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonState {
    pub location: Option<String>,
    pub inventory: BTreeSet<String>,
}

/// While `holder` is set the object's own `location` stays empty; its
/// effective location is the holder's.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectState {
    pub holder: Option<String>,
    pub location: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BabiError {
    #[error("{action} violates a precondition: {reason}")]
    PreconditionViolation { action: String, reason: String },
    #[error("{name} is a {existing}, not a {requested}")]
    KindConflict {
        name: String,
        existing: EntityKind,
        requested: EntityKind,
    },
    #[error("unknown entity {0}")]
    UnknownEntity(String),
}

impl BabiError {
    pub fn to_rejection(&self) -> Rejection {
        Rejection::new(CauseKind::PreconditionViolation, self.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub kinds: BTreeMap<String, EntityKind>,
    pub persons: BTreeMap<String, PersonState>,
    pub objects: BTreeMap<String, ObjectState>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn kind_of(&self, name: &str) -> Option<EntityKind> {
        self.kinds.get(name).copied()
    }

    pub fn person(&self, name: &str) -> Option<&PersonState> {
        self.persons.get(name)
    }

    pub fn object(&self, name: &str) -> Option<&ObjectState> {
        self.objects.get(name)
    }

    fn check_kinds(&self, action: &BabiAction) -> Result<(), BabiError> {
        let args = action.typed_args();
        for (name, kind) in args {
            if let Some(existing) = self.kind_of(name) {
                if existing != kind {
                    return Err(BabiError::KindConflict {
                        name: name.to_string(),
                        existing,
                        requested: kind,
                    });
                }
            }
        }
        // go(X, X) and friends would register one name under two kinds
        if args[0].0 == args[1].0 {
            return Err(BabiError::KindConflict {
                name: args[1].0.to_string(),
                existing: args[0].1,
                requested: args[1].1,
            });
        }
        Ok(())
    }

    /// Pure precondition check.
    pub fn check(&self, action: &BabiAction) -> Result<(), BabiError> {
        self.check_kinds(action)?;
        let violation = |reason: String| BabiError::PreconditionViolation {
            action: action.to_string(),
            reason,
        };
        match action {
            BabiAction::Go { person, location } => {
                let here = self.persons.get(person).and_then(|p| p.location.as_ref());
                if here == Some(location) {
                    return Err(violation(format!("{person} is already in the {location}")));
                }
            }
            BabiAction::Pickup { person, object } => {
                let obj = self.objects.get(object);
                if let Some(holder) = obj.and_then(|o| o.holder.as_ref()) {
                    if holder != person {
                        return Err(violation(format!("{holder} is holding the {object}")));
                    }
                }
                let obj_loc = obj.and_then(|o| o.location.as_ref());
                let person_loc = self.persons.get(person).and_then(|p| p.location.as_ref());
                if let (Some(ol), Some(pl)) = (obj_loc, person_loc) {
                    if ol != pl {
                        return Err(violation(format!(
                            "the {object} is in the {ol} but {person} is in the {pl}"
                        )));
                    }
                }
            }
            BabiAction::Drop { person, object } => {
                let holder = self.objects.get(object).and_then(|o| o.holder.as_ref());
                if holder != Some(person) {
                    return Err(violation(format!("{person} is not holding the {object}")));
                }
            }
        }
        Ok(())
    }

    fn register(&mut self, action: &BabiAction) {
        for (name, kind) in action.typed_args() {
            self.kinds.entry(name.to_string()).or_insert(kind);
            match kind {
                EntityKind::Person => {
                    self.persons.entry(name.to_string()).or_default();
                }
                EntityKind::Object => {
                    self.objects.entry(name.to_string()).or_default();
                }
                EntityKind::Location => {}
            }
        }
    }

    /// Check `action` and, if it passes, apply it.
    pub fn check_and_apply(&mut self, action: &BabiAction) -> Result<(), BabiError> {
        self.check(action)?;
        self.register(action);
        match action {
            BabiAction::Go { person, location } => {
                // held objects follow through `holder`
                self.persons.get_mut(person).expect("registered").location = Some(location.clone());
            }
            BabiAction::Pickup { person, object } => {
                let obj = self.objects.get_mut(object).expect("registered");
                let seen_at = obj.location.take();
                obj.holder = Some(person.clone());
                let p = self.persons.get_mut(person).expect("registered");
                p.inventory.insert(object.clone());
                // the person must be wherever the object was
                if p.location.is_none() {
                    p.location = seen_at;
                }
            }
            BabiAction::Drop { person, object } => {
                let p = self.persons.get_mut(person).expect("registered");
                p.inventory.remove(object);
                let here = p.location.clone();
                let obj = self.objects.get_mut(object).expect("registered");
                obj.holder = None;
                obj.location = here;
            }
        }
        Ok(())
    }

    /// Where is `object`? `Ok(None)` means the story does not say.
    pub fn query_obj_loc(&self, object: &str) -> Result<Option<String>, BabiError> {
        match self.kind_of(object) {
            Some(EntityKind::Object) => {}
            Some(existing) => {
                return Err(BabiError::KindConflict {
                    name: object.to_string(),
                    existing,
                    requested: EntityKind::Object,
                })
            }
            None => return Err(BabiError::UnknownEntity(object.to_string())),
        }
        let obj = &self.objects[object];
        let via_holder = obj
            .holder
            .as_ref()
            .and_then(|h| self.persons.get(h))
            .and_then(|p| p.location.clone());
        Ok(via_holder.or_else(|| obj.location.clone()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("world state serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjLocQuery {
    pub object: String,
}

impl fmt::Display for ObjLocQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "queryObjLoc({})", self.object)
    }
}

/// A fact extracted from one bAbI line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BabiFact {
    Action(BabiAction),
    Query(ObjLocQuery),
}

/// [`WorldState`] plus snapshot bookkeeping, usable by the engine.
#[derive(Debug, Clone, Default)]
pub struct BabiWorld {
    state: WorldState,
    snapshots: SnapshotStack<WorldState>,
}

impl BabiWorld {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    fn run(state: &mut WorldState, facts: &[BabiFact]) -> Result<(), BabiError> {
        for fact in facts {
            match fact {
                BabiFact::Action(action) => state.check_and_apply(action)?,
                BabiFact::Query(q) => {
                    if state.query_obj_loc(&q.object)?.is_none() {
                        return Err(BabiError::PreconditionViolation {
                            action: q.to_string(),
                            reason: format!("the location of the {} is not known", q.object),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

impl WorldModel for BabiWorld {
    type Fact = BabiFact;

    fn check(&self, facts: &[BabiFact]) -> Verdict {
        let mut scratch = self.state.clone();
        match Self::run(&mut scratch, facts) {
            Ok(()) => Verdict::Accept,
            Err(e) => Verdict::Reject(e.to_rejection()),
        }
    }

    fn apply(&mut self, facts: &[BabiFact]) -> Verdict {
        let mut next = self.state.clone();
        match Self::run(&mut next, facts) {
            Ok(()) => {
                self.state = next;
                Verdict::Accept
            }
            Err(e) => Verdict::Reject(e.to_rejection()),
        }
    }

    fn snapshot(&mut self) -> SnapshotHandle {
        self.snapshots.push(self.state.clone())
    }

    fn restore(&mut self, handle: SnapshotHandle) -> Result<(), InvalidHandle> {
        self.state = self.snapshots.restore(handle)?;
        Ok(())
    }

    fn release(&mut self, handle: SnapshotHandle) -> Result<(), InvalidHandle> {
        self.snapshots.release(handle)
    }

    fn serialize_state(&self) -> String {
        self.state.to_json()
    }

    fn answer(&self, facts: &[BabiFact]) -> Option<String> {
        facts.iter().find_map(|f| match f {
            BabiFact::Query(q) => self.state.query_obj_loc(&q.object).ok().flatten(),
            BabiFact::Action(_) => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(actions: &[BabiAction]) -> WorldState {
        let mut w = WorldState::new();
        for a in actions {
            w.check_and_apply(a).unwrap();
        }
        w
    }

    #[test]
    fn pickup_of_held_object_rejected() {
        let mut w = world(&[
            BabiAction::go("John", "bedroom"),
            BabiAction::pickup("John", "apple"),
            BabiAction::go("Mary", "office"),
        ]);
        let err = w.check_and_apply(&BabiAction::pickup("Mary", "apple")).unwrap_err();
        assert!(matches!(err, BabiError::PreconditionViolation { .. }));
    }

    #[test]
    fn go_to_current_room_rejected() {
        let mut w = world(&[BabiAction::go("Mary", "bedroom")]);
        assert!(w.check_and_apply(&BabiAction::go("Mary", "bedroom")).is_err());
        assert!(w.check_and_apply(&BabiAction::go("Mary", "kitchen")).is_ok());
    }

    #[test]
    fn first_fact_is_unconstrained() {
        let w = world(&[BabiAction::go("Max", "bathroom")]);
        assert_eq!(w.person("Max").unwrap().location.as_deref(), Some("bathroom"));
    }

    #[test]
    fn pickup_of_unplaced_object_accepted() {
        let mut w = world(&[BabiAction::go("Max", "bathroom")]);
        assert!(w.check_and_apply(&BabiAction::pickup("Max", "pie")).is_ok());
        assert_eq!(w.query_obj_loc("pie").unwrap().as_deref(), Some("bathroom"));
    }

    #[test]
    fn pickup_in_other_room_rejected() {
        let mut w = world(&[
            BabiAction::go("Max", "bathroom"),
            BabiAction::pickup("Max", "pie"),
            BabiAction::drop("Max", "pie"),
            BabiAction::go("Max", "garden"),
            BabiAction::go("Sue", "kitchen"),
        ]);
        assert!(w.check_and_apply(&BabiAction::pickup("Sue", "pie")).is_err());
        assert!(w.check_and_apply(&BabiAction::go("Sue", "bathroom")).is_ok());
        assert!(w.check_and_apply(&BabiAction::pickup("Sue", "pie")).is_ok());
    }

    #[test]
    fn pickup_infers_person_location() {
        let mut w = world(&[
            BabiAction::go("Max", "bathroom"),
            BabiAction::pickup("Max", "pie"),
            BabiAction::drop("Max", "pie"),
        ]);
        w.check_and_apply(&BabiAction::pickup("Sue", "pie")).unwrap();
        assert_eq!(w.person("Sue").unwrap().location.as_deref(), Some("bathroom"));
        assert!(w.check_and_apply(&BabiAction::go("Sue", "bathroom")).is_err());
    }

    #[test]
    fn drop_requires_holding() {
        let mut w = world(&[
            BabiAction::go("Daniel", "garden"),
            BabiAction::pickup("Daniel", "apple"),
        ]);
        assert!(w.check_and_apply(&BabiAction::drop("Mary", "apple")).is_err());
        assert!(w.check_and_apply(&BabiAction::drop("Daniel", "apple")).is_ok());
        assert!(w.check_and_apply(&BabiAction::drop("Daniel", "apple")).is_err());
    }

    #[test]
    fn fig2_story_answer() {
        let w = world(&[
            BabiAction::go("John", "bedroom"),
            BabiAction::pickup("John", "apple"),
            BabiAction::go("Mary", "office"),
            BabiAction::go("Daniel", "garden"),
            BabiAction::go("Mary", "bedroom"),
            BabiAction::go("Sandra", "bedroom"),
            BabiAction::go("Sandra", "office"),
            BabiAction::go("Mary", "office"),
        ]);
        assert_eq!(w.query_obj_loc("apple").unwrap().as_deref(), Some("bedroom"));
    }

    #[test]
    fn dropped_by_unplaced_person_is_unknown() {
        let w = world(&[BabiAction::pickup("Bob", "cup"), BabiAction::drop("Bob", "cup")]);
        assert_eq!(w.query_obj_loc("cup").unwrap(), None);
    }

    #[test]
    fn inventory_moves_with_person() {
        let w = world(&[
            BabiAction::go("Bob", "kitchen"),
            BabiAction::pickup("Bob", "cup"),
            BabiAction::go("Bob", "garden"),
        ]);
        assert_eq!(w.query_obj_loc("cup").unwrap().as_deref(), Some("garden"));
    }

    #[test]
    fn query_unknown_entity() {
        let w = WorldState::new();
        assert_eq!(w.query_obj_loc("cup"), Err(BabiError::UnknownEntity("cup".into())));
    }

    #[test]
    fn kind_conflicts() {
        let mut w = world(&[BabiAction::go("Bob", "kitchen")]);
        assert!(matches!(
            w.check_and_apply(&BabiAction::pickup("Bob", "kitchen")),
            Err(BabiError::KindConflict { .. })
        ));
        assert!(matches!(
            w.check_and_apply(&BabiAction::go("kitchen", "garden")),
            Err(BabiError::KindConflict { .. })
        ));
        assert!(matches!(
            w.check_and_apply(&BabiAction::go("Ann", "Ann")),
            Err(BabiError::KindConflict { .. })
        ));
    }

    #[test]
    fn rejected_action_leaves_state_unchanged() {
        let mut w = world(&[BabiAction::go("Bob", "kitchen")]);
        let before = w.to_json();
        assert!(w.check_and_apply(&BabiAction::go("Bob", "kitchen")).is_err());
        assert_eq!(before, w.to_json());
    }

    #[test]
    fn snapshot_restore_round_trip() {
        let mut w = BabiWorld::new();
        w.apply(&[BabiFact::Action(BabiAction::go("Bob", "kitchen"))]);
        let before = w.serialize_state();
        let h = w.snapshot();
        assert!(w.apply(&[BabiFact::Action(BabiAction::go("Bob", "garden"))]).is_accept());
        assert_ne!(before, w.serialize_state());
        w.restore(h).unwrap();
        assert_eq!(before, w.serialize_state());
        assert_eq!(w.restore(h), Err(InvalidHandle(h)));
    }

    #[test]
    fn nested_snapshots_unwind() {
        let mut w = BabiWorld::new();
        let s0 = w.serialize_state();
        let outer = w.snapshot();
        w.apply(&[BabiFact::Action(BabiAction::go("Bob", "kitchen"))]);
        let s1 = w.serialize_state();
        let inner = w.snapshot();
        w.apply(&[BabiFact::Action(BabiAction::go("Ann", "garden"))]);
        w.restore(inner).unwrap();
        assert_eq!(w.serialize_state(), s1);
        w.restore(outer).unwrap();
        assert_eq!(w.serialize_state(), s0);
    }

    #[test]
    fn rejected_check_needs_no_restore() {
        let mut w = BabiWorld::new();
        w.apply(&[BabiFact::Action(BabiAction::go("Bob", "kitchen"))]);
        let before = w.serialize_state();
        let v = w.check(&[BabiFact::Action(BabiAction::drop("Bob", "cup"))]);
        assert!(!v.is_accept());
        assert_eq!(before, w.serialize_state());
    }

    #[test]
    fn multi_fact_apply_is_transactional() {
        let mut w = BabiWorld::new();
        let before = w.serialize_state();
        let v = w.apply(&[
            BabiFact::Action(BabiAction::go("Bob", "kitchen")),
            BabiFact::Action(BabiAction::go("Bob", "kitchen")),
        ]);
        assert!(!v.is_accept());
        assert_eq!(before, w.serialize_state());
    }

    #[test]
    fn unanswerable_question_rejected() {
        let mut w = BabiWorld::new();
        w.apply(&[
            BabiFact::Action(BabiAction::pickup("Bob", "cup")),
            BabiFact::Action(BabiAction::drop("Bob", "cup")),
        ]);
        let q = BabiFact::Query(ObjLocQuery {
            object: "cup".into(),
        });
        assert!(!w.check(std::slice::from_ref(&q)).is_accept());
        assert!(!w
            .check(&[BabiFact::Query(ObjLocQuery {
                object: "ball".into()
            })])
            .is_accept());
    }
}
