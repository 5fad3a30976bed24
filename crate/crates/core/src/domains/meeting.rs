//! Meeting as many friends as possible across a city in one day.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::DomainError;
use crate::engine::clock12;
use crate::repr::{Plan, StructuredRepresentation, StructuredSolution};
use crate::value::Value;

pub const MAX_FRIENDS: usize = 8;

const PLACE_POOL: &[&str] = &[
    "Alamo Square", "Bayview", "Chinatown", "Embarcadero", "Financial District",
    "Fisherman's Wharf", "Golden Gate Park", "Haight-Ashbury", "Marina District", "Mission District",
    "Nob Hill", "North Beach", "Pacific Heights", "Presidio", "Richmond District", "Russian Hill",
    "Sunset District", "The Castro", "Union Square",
];

const NAME_POOL: &[&str] = &[
    "Amanda", "Barbara", "Betty", "Brian", "Carol", "Daniel", "David", "Deborah", "Emily",
    "George", "James", "Jason", "Jeffrey", "Jessica", "John", "Joseph", "Karen", "Kenneth",
    "Kevin", "Laura", "Mark", "Mary", "Matthew", "Melissa", "Michelle", "Nancy", "Paul",
    "Rebecca", "Robert", "Ronald", "Sandra", "Sarah", "Stephanie", "Steven", "Thomas",
    "Timothy", "William",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub place: String,
    /// Minutes after midnight.
    pub time: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Friend {
    pub name: String,
    pub place: String,
    pub open: i64,
    pub close: i64,
    pub min_minutes: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeetingInstance {
    pub origin: Origin,
    pub friends: Vec<Friend>,
    /// Directed travel minutes, `travel[from][to]`.
    pub travel: BTreeMap<String, BTreeMap<String, i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Meeting {
    pub friend: String,
    pub from: String,
    pub place: String,
    pub travel: i64,
    pub arrive: i64,
    pub start: i64,
    pub end: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MeetingSchedule {
    pub visits: Vec<Meeting>,
}

impl MeetingSchedule {
    pub fn friends_met(&self) -> usize {
        self.visits.len()
    }
}

impl MeetingInstance {
    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |m: String| Err(DomainError::InvalidInstance(m));
        if self.friends.len() > MAX_FRIENDS {
            return bad(format!("at most {MAX_FRIENDS} friends"));
        }
        let mut places = vec![&self.origin.place];
        for f in &self.friends {
            if f.open > f.close || f.min_minutes < 0 {
                return bad(format!("window for {} is not well-ordered", f.name));
            }
            places.push(&f.place);
        }
        for a in &places {
            for b in &places {
                if a != b && self.minutes(a, b).is_none() {
                    return bad(format!("no travel time from {a} to {b}"));
                }
            }
        }
        Ok(())
    }

    pub fn minutes(&self, from: &str, to: &str) -> Option<i64> {
        if from == to {
            return Some(0);
        }
        self.travel.get(from)?.get(to).copied()
    }

    /// Walks `order` greedily; `None` if some meeting misses its window.
    pub fn schedule(&self, order: &[usize]) -> Option<MeetingSchedule> {
        let mut at = self.origin.place.clone();
        let mut time = self.origin.time;
        let mut visits = Vec::with_capacity(order.len());
        for &i in order {
            let f = &self.friends[i];
            let travel = self.minutes(&at, &f.place)?;
            let arrive = time + travel;
            let start = arrive.max(f.open);
            let end = start + f.min_minutes;
            if end > f.close {
                return None;
            }
            visits.push(Meeting {
                friend: f.name.clone(),
                from: at.clone(),
                place: f.place.clone(),
                travel,
                arrive,
                start,
                end,
            });
            at = f.place.clone();
            time = end;
        }
        Some(MeetingSchedule { visits })
    }

    pub fn to_representation(&self) -> StructuredRepresentation {
        let friends = self
            .friends
            .iter()
            .map(|f| {
                Value::Map(BTreeMap::from([
                    ("name".to_string(), Value::text(&f.name)),
                    ("place".to_string(), Value::text(&f.place)),
                    ("open".to_string(), Value::Int(f.open)),
                    ("close".to_string(), Value::Int(f.close)),
                    ("min_minutes".to_string(), Value::Int(f.min_minutes)),
                ]))
            })
            .collect();
        let travel = self
            .travel
            .iter()
            .map(|(a, row)| {
                (
                    a.clone(),
                    Value::Map(row.iter().map(|(b, m)| (b.clone(), Value::Int(*m))).collect()),
                )
            })
            .collect();
        let combinations = BTreeMap::from([
            (
                "origin".to_string(),
                Value::Map(BTreeMap::from([
                    ("place".to_string(), Value::text(&self.origin.place)),
                    ("time".to_string(), Value::Int(self.origin.time)),
                ])),
            ),
            ("friends".to_string(), Value::List(friends)),
            ("travel".to_string(), Value::Map(travel)),
        ]);
        StructuredRepresentation::new(
            combinations,
            BTreeMap::new(),
            "origin: starting place and time in minutes after midnight; friends: name, place, availability window [open, close] in minutes after midnight and minimum meeting minutes; travel: travel[from][to] in minutes",
            "no separate constraints; the goal is to meet as many friends as possible",
        )
        .expect("meeting representation keys are disjoint")
    }

    pub fn query_text(&self) -> String {
        let mut s = String::from(
            "You are visiting San Francisco for the day and want to meet as many friends as possible. Solve the problem by considering various different schedules and picking the best one to optimize your goals.\n\nTravel distances (in minutes):\n",
        );
        for (a, row) in &self.travel {
            for (b, m) in row {
                s.push_str(&format!("{a} to {b}: {m}.\n"));
            }
        }
        s.push_str(&format!(
            "\nCONSTRAINTS: You arrive at {} at {}.",
            self.origin.place,
            clock12(self.origin.time)
        ));
        for f in &self.friends {
            s.push_str(&format!(
                " {} will be at {} from {} to {}. You'd like to meet {} for a minimum of {} minutes.",
                f.name,
                f.place,
                clock12(f.open),
                clock12(f.close),
                f.name,
                f.min_minutes
            ));
        }
        s
    }

    /// Reads an instance back from query text in the style of [`query_text`].
    ///
    /// [`query_text`]: MeetingInstance::query_text
    pub fn parse_query(text: &str) -> Result<Self, DomainError> {
        let bad = |m: &str| DomainError::UnparseableQuery(m.to_string());
        let time = r"(\d{1,2}:\d{2}[AP]M)";
        let travel_re = Regex::new(r"(?m)^(.+) to (.+): (\d+)\.$").unwrap();
        let origin_re = Regex::new(&format!(r"You arrive at (.+?) at {time}\.")).unwrap();
        let friend_re = Regex::new(&format!(
            r"(\w+) will be at (.+?) from {time} to {time}\. You'd like to meet \w+ for a minimum of (\d+) minutes\."
        ))
        .unwrap();
        let mut travel: BTreeMap<String, BTreeMap<String, i64>> = BTreeMap::new();
        for m in travel_re.captures_iter(text) {
            travel
                .entry(m[1].to_string())
                .or_default()
                .insert(m[2].to_string(), m[3].parse().map_err(|_| bad("travel"))?);
        }
        let (_, constraints) = text
            .split_once("CONSTRAINTS:")
            .ok_or_else(|| bad("no constraints section"))?;
        let o = origin_re.captures(constraints).ok_or_else(|| bad("no origin"))?;
        let origin = Origin {
            place: o[1].to_string(),
            time: parse_clock(&o[2]).ok_or_else(|| bad("origin time"))?,
        };
        let friends = friend_re
            .captures_iter(constraints)
            .map(|m| {
                Ok(Friend {
                    name: m[1].to_string(),
                    place: m[2].to_string(),
                    open: parse_clock(&m[3]).ok_or_else(|| bad("open time"))?,
                    close: parse_clock(&m[4]).ok_or_else(|| bad("close time"))?,
                    min_minutes: m[5].parse().map_err(|_| bad("minutes"))?,
                })
            })
            .collect::<Result<Vec<_>, DomainError>>()?;
        let inst = MeetingInstance {
            origin,
            friends,
            travel,
        };
        inst.validate()?;
        Ok(inst)
    }
}

/// Inverse of `clock12`.
pub fn parse_clock(s: &str) -> Option<i64> {
    let (hm, suffix) = s.split_at(s.len().checked_sub(2)?);
    let (h, m) = hm.split_once(':')?;
    let (h, m): (i64, i64) = (h.parse().ok()?, m.parse().ok()?);
    if !(1..=12).contains(&h) || !(0..60).contains(&m) {
        return None;
    }
    let h = match suffix {
        "AM" => h % 12,
        "PM" => h % 12 + 12,
        _ => return None,
    };
    Some(h * 60 + m)
}

/// Orderings of every subset, in lexicographic order of friend indices.
fn for_each_ordering(n: usize, prefix: &mut Vec<usize>, used: &mut [bool], f: &mut impl FnMut(&[usize])) {
    f(prefix);
    for i in 0..n {
        if !used[i] {
            used[i] = true;
            prefix.push(i);
            for_each_ordering(n, prefix, used, f);
            prefix.pop();
            used[i] = false;
        }
    }
}

/// Exhaustive search: most friends met, then earliest final end, then the
/// lexicographically smallest friend order.
pub fn solve_meeting_oracle(inst: &MeetingInstance) -> MeetingSchedule {
    let n = inst.friends.len();
    let mut best: Option<(usize, i64, Vec<usize>)> = None;
    for_each_ordering(n, &mut Vec::new(), &mut vec![false; n], &mut |order| {
        let Some(s) = inst.schedule(order) else {
            return;
        };
        let end = s.visits.last().map_or(i64::MIN, |m| m.end);
        let better = match &best {
            None => true,
            Some((count, best_end, best_order)) => {
                (order.len(), std::cmp::Reverse(end), std::cmp::Reverse(order))
                    > (*count, std::cmp::Reverse(*best_end), std::cmp::Reverse(best_order.as_slice()))
            }
        };
        if better {
            best = Some((order.len(), end, order.to_vec()));
        }
    });
    best.and_then(|(_, _, order)| inst.schedule(&order))
        .unwrap_or_default()
}

pub fn schedule_to_solution(s: &MeetingSchedule) -> StructuredSolution {
    let records = s
        .visits
        .iter()
        .map(|m| {
            BTreeMap::from([
                ("friend".to_string(), Value::text(&m.friend)),
                ("from".to_string(), Value::text(&m.from)),
                ("place".to_string(), Value::text(&m.place)),
                ("travel".to_string(), Value::Int(m.travel)),
                ("arrive".to_string(), Value::Int(m.arrive)),
                ("start".to_string(), Value::Int(m.start)),
                ("end".to_string(), Value::Int(m.end)),
            ])
        })
        .collect();
    StructuredSolution {
        records: Plan::from_records(records).expect("uniform records"),
        description: "each record is one meeting in visiting order: friend, the place travelled from and to, travel minutes, and arrive/start/end times in minutes after midnight".into(),
    }
}

pub fn schedule_from_plan(plan: &Plan) -> Option<MeetingSchedule> {
    let text = |i, f| Some(plan.get(i, f)?.as_text()?.to_string());
    let int = |i, f| plan.get(i, f)?.as_int();
    let visits = (0..plan.len())
        .map(|i| {
            Some(Meeting {
                friend: text(i, "friend")?,
                from: text(i, "from")?,
                place: text(i, "place")?,
                travel: int(i, "travel")?,
                arrive: int(i, "arrive")?,
                start: int(i, "start")?,
                end: int(i, "end")?,
            })
        })
        .collect::<Option<Vec<_>>>()?;
    Some(MeetingSchedule { visits })
}

/// Checks a schedule against windows, travel times and minimum durations.
pub fn schedule_is_feasible(inst: &MeetingInstance, s: &MeetingSchedule) -> bool {
    let mut at = inst.origin.place.as_str();
    let mut time = inst.origin.time;
    let mut seen = Vec::new();
    for m in &s.visits {
        let Some(f) = inst.friends.iter().find(|f| f.name == m.friend) else {
            return false;
        };
        if seen.contains(&&f.name) || f.place != m.place || m.from != at {
            return false;
        }
        seen.push(&f.name);
        let Some(travel) = inst.minutes(at, &f.place) else {
            return false;
        };
        if m.travel != travel
            || m.arrive < time + travel
            || m.start < m.arrive.max(f.open)
            || m.end - m.start < f.min_minutes
            || m.end > f.close
        {
            return false;
        }
        at = &f.place;
        time = m.end;
    }
    true
}

/// Natural-language answer for a schedule.
pub fn render_meeting_answer(inst: &MeetingInstance, s: &MeetingSchedule) -> String {
    let mut out = format!(
        "SOLUTION: You start at {} at {}.",
        inst.origin.place,
        clock12(inst.origin.time)
    );
    for m in &s.visits {
        out.push_str(&format!(
            " You travel to {} in {} minutes and arrive at {}.",
            m.place,
            m.travel,
            clock12(m.arrive)
        ));
        if m.arrive < m.start {
            out.push_str(&format!(" You wait until {}.", clock12(m.start)));
        }
        out.push_str(&format!(
            " You meet {} for {} minutes from {} to {}.",
            m.friend,
            m.end - m.start,
            clock12(m.start),
            clock12(m.end)
        ));
    }
    out
}

pub fn generate_meeting_instance(seed: u64, n_friends: usize) -> Result<MeetingInstance, DomainError> {
    if !(1..=MAX_FRIENDS).contains(&n_friends) {
        return Err(DomainError::InvalidInstance(format!(
            "meeting generator needs 1..={MAX_FRIENDS} friends"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3e37_0000 ^ n_friends as u64);
    let places: Vec<&str> = PLACE_POOL.choose_multiple(&mut rng, n_friends + 1).copied().collect();
    let names: Vec<&str> = NAME_POOL.choose_multiple(&mut rng, n_friends).copied().collect();
    let mut travel: BTreeMap<String, BTreeMap<String, i64>> = BTreeMap::new();
    for a in &places {
        for b in &places {
            if a != b {
                travel
                    .entry(a.to_string())
                    .or_default()
                    .insert(b.to_string(), rng.gen_range(5..=30));
            }
        }
    }
    let origin = Origin {
        place: places[0].to_string(),
        time: 9 * 60,
    };
    let mut friends: Vec<Friend> = (0..n_friends)
        .map(|i| {
            let open = 9 * 60 + 15 * rng.gen_range(0..=44);
            let min_minutes = 15 * rng.gen_range(1..=8);
            let close = (open + min_minutes + 15 * rng.gen_range(0..=16)).min(22 * 60);
            Friend {
                name: names[i].to_string(),
                place: places[i + 1].to_string(),
                open,
                close: close.max(open),
                min_minutes,
            }
        })
        .collect();
    let inst = MeetingInstance {
        origin: origin.clone(),
        friends: friends.clone(),
        travel: travel.clone(),
    };
    if solve_meeting_oracle(&inst).friends_met() == 0 {
        // Widen the first friend's window so that it alone is reachable.
        let f = &mut friends[0];
        let arrive = origin.time + travel[&origin.place][&f.place];
        f.open = f.open.min(arrive);
        f.close = f.close.max(f.open.max(arrive) + f.min_minutes);
    }
    let inst = MeetingInstance {
        origin,
        friends,
        travel,
    };
    inst.validate()?;
    Ok(inst)
}
