//! Brute-force bAbI checker: every action sequence of length at most 4 over
//! two persons, two objects and two locations, replayed through a small
//! array-based transition system and through `BabiWorld`.

use dualsys_core::babi::{BabiAction, BabiFact, BabiWorld};
use dualsys_core::engine::WorldModel;

pub const PERSONS: [&str; 2] = ["Mary", "John"];
pub const OBJECTS: [&str; 2] = ["apple", "milk"];
pub const LOCATIONS: [&str; 2] = ["garden", "kitchen"];
pub const MAX_LEN: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Act {
    Go(usize, usize),
    Pickup(usize, usize),
    Drop(usize, usize),
}

impl Act {
    pub fn all() -> Vec<Act> {
        let mut out = Vec::new();
        for p in 0..2 {
            for x in 0..2 {
                out.extend([Act::Go(p, x), Act::Pickup(p, x), Act::Drop(p, x)]);
            }
        }
        out
    }

    fn to_action(self) -> BabiAction {
        match self {
            Act::Go(p, l) => BabiAction::go(PERSONS[p], LOCATIONS[l]),
            Act::Pickup(p, o) => BabiAction::pickup(PERSONS[p], OBJECTS[o]),
            Act::Drop(p, o) => BabiAction::drop(PERSONS[p], OBJECTS[o]),
        }
    }
}

#[derive(Clone, Copy, Default, Debug)]
struct Tiny {
    at: [Option<usize>; 2],
    holder: [Option<usize>; 2],
    placed: [Option<usize>; 2],
}

impl Tiny {
    /// Returns the successor state, or None when a precondition fails.
    fn step(mut self, act: Act) -> Option<Tiny> {
        match act {
            Act::Go(p, l) => {
                if self.at[p] == Some(l) {
                    return None;
                }
                self.at[p] = Some(l);
            }
            Act::Pickup(p, o) => {
                if matches!(self.holder[o], Some(h) if h != p) {
                    return None;
                }
                let obj_at = match self.holder[o] {
                    Some(h) => self.at[h],
                    None => self.placed[o],
                };
                if let (Some(a), Some(b)) = (obj_at, self.at[p]) {
                    if a != b {
                        return None;
                    }
                }
                if self.at[p].is_none() {
                    self.at[p] = obj_at;
                }
                self.holder[o] = Some(p);
                self.placed[o] = None;
            }
            Act::Drop(p, o) => {
                if self.holder[o] != Some(p) {
                    return None;
                }
                self.holder[o] = None;
                self.placed[o] = self.at[p];
            }
        }
        Some(self)
    }

    fn where_is(&self, o: usize) -> Option<usize> {
        match self.holder[o] {
            Some(h) => self.at[h],
            None => self.placed[o],
        }
    }
}

pub struct Report {
    pub sequences: usize,
    pub verdicts: usize,
    pub mismatches: Vec<String>,
}

fn sequences() -> Vec<Vec<Act>> {
    let acts = Act::all();
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..MAX_LEN {
        let mut next = Vec::new();
        for seq in &frontier {
            for a in &acts {
                let mut s: Vec<Act> = seq.clone();
                s.push(*a);
                next.push(s);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// Compare per-step verdicts and the final answers for every object.
pub fn run() -> Report {
    let mut report = Report {
        sequences: 0,
        verdicts: 0,
        mismatches: Vec::new(),
    };
    for seq in sequences() {
        report.sequences += 1;
        let mut tiny = Tiny::default();
        let mut world = BabiWorld::new();
        for (i, act) in seq.iter().enumerate() {
            let expected = tiny.step(*act);
            let got = world.apply(&[BabiFact::Action(act.to_action())]).is_accept();
            report.verdicts += 1;
            if got != expected.is_some() {
                report
                    .mismatches
                    .push(format!("{seq:?} step {i}: world {got}, oracle {}", expected.is_some()));
                break;
            }
            if let Some(t) = expected {
                tiny = t;
            }
        }
        for (o, name) in OBJECTS.iter().enumerate() {
            let mentioned = world.state().object(name).is_some();
            let got = if mentioned {
                world.state().query_obj_loc(name).unwrap()
            } else {
                None
            };
            let expected = tiny.where_is(o).map(|l| LOCATIONS[l].to_string());
            if got != expected {
                report
                    .mismatches
                    .push(format!("{seq:?} query {name}: world {got:?}, oracle {expected:?}"));
            }
        }
    }
    report
}
