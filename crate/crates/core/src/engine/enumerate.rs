use std::collections::BTreeMap;
use std::sync::Arc;

use super::eval::{eval, EvalError, Scope};
use super::EngineError;
use crate::dsl::{CombinationSpec, Emit, GeneratorKind, SequencePredicate, FRIEND_KEYS, SCHEDULE_FIELDS};
use crate::repr::{Namespace, Plan, StructuredRepresentation};
use crate::value::Value;

/// Default cap on the number of candidates an exhaustive enumeration may produce.
pub const DEFAULT_CANDIDATE_LIMIT: usize = 10_000_000;

/// Largest item list a generator accepts.
pub const MAX_ITEMS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    /// Enumerate everything; more than `n` candidates is an error.
    Exhaustive(usize),
    /// Stop silently after `n` candidates.
    Truncate(usize),
}

impl Default for Limit {
    fn default() -> Self {
        Limit::Exhaustive(DEFAULT_CANDIDATE_LIMIT)
    }
}

impl Limit {
    fn cap(self) -> usize {
        match self {
            Limit::Exhaustive(n) | Limit::Truncate(n) => n,
        }
    }
}

#[derive(Debug, Clone)]
struct Friend {
    name: Value,
    place: Arc<str>,
    open: i64,
    close: i64,
    min_minutes: i64,
}

/// Emit step with its parameters already resolved to item indices.
#[derive(Debug, Clone)]
enum Emitter {
    Days {
        stays: Vec<i64>,
        overlap: i64,
        /// Positions of the item and day fields within the sorted field list.
        item_pos: usize,
        fields: Arc<[String]>,
    },
    Schedule {
        origin_place: Arc<str>,
        origin_time: i64,
        friends: Vec<Friend>,
        /// `travel[from][to]` in minutes, indexed by place id; `None` when unknown.
        travel: Vec<Vec<Option<i64>>>,
        origin_id: usize,
        place_ids: Vec<usize>,
        fields: Arc<[String]>,
    },
}

/// Candidates held as item orderings, materialized into plans on demand.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Orderings {
        items: Vec<Value>,
        emitter: Emitter,
        offsets: Vec<u32>,
        orders: Vec<u8>,
    },
    Plans(Vec<Plan>),
}

impl CandidateSet {
    pub fn from_plans(plans: Vec<Plan>) -> Self {
        CandidateSet {
            inner: Inner::Plans(plans),
        }
    }

    pub fn len(&self) -> usize {
        match &self.inner {
            Inner::Orderings { offsets, .. } => offsets.len() - 1,
            Inner::Plans(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Materializes candidate `i`.
    pub fn get(&self, i: usize) -> Plan {
        match &self.inner {
            Inner::Plans(p) => p[i].clone(),
            Inner::Orderings {
                items,
                emitter,
                offsets,
                orders,
            } => {
                let order = &orders[offsets[i] as usize..offsets[i + 1] as usize];
                emitter.emit(items, order)
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Plan> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Index of the first candidate with the same records as `plan`.
    pub fn position(&self, plan: &Plan) -> Option<usize> {
        (0..self.len()).find(|&i| self.get(i).same_records(plan))
    }
}

impl Emitter {
    fn emit(&self, items: &[Value], order: &[u8]) -> Plan {
        match self {
            Emitter::Days {
                stays,
                overlap,
                item_pos,
                fields,
            } => {
                let mut start = 1;
                let rows = order
                    .iter()
                    .map(|&i| {
                        let stay = stays[i as usize];
                        let days = Value::List((start..start + stay).map(Value::Int).collect());
                        start += stay - overlap;
                        let item = items[i as usize].clone();
                        if *item_pos == 0 {
                            vec![item, days]
                        } else {
                            vec![days, item]
                        }
                    })
                    .collect();
                Plan::from_rows(fields.clone(), rows)
            }
            Emitter::Schedule {
                origin_place,
                origin_time,
                friends,
                travel,
                origin_id,
                place_ids,
                fields,
            } => {
                let mut rows = Vec::with_capacity(order.len());
                let mut time = *origin_time;
                let mut at = *origin_id;
                let mut at_name = origin_place.clone();
                for &i in order {
                    let f = &friends[i as usize];
                    let to = place_ids[i as usize];
                    let minutes = travel[at][to].expect("feasibility checked during enumeration");
                    let arrive = time + minutes;
                    let start = arrive.max(f.open);
                    let end = start + f.min_minutes;
                    // Sorted: arrive, end, friend, from, place, start, travel.
                    rows.push(vec![
                        Value::Int(arrive),
                        Value::Int(end),
                        f.name.clone(),
                        Value::Text(at_name.clone()),
                        Value::Text(f.place.clone()),
                        Value::Int(start),
                        Value::Int(minutes),
                    ]);
                    time = end;
                    at = to;
                    at_name = f.place.clone();
                }
                Plan::from_rows(fields.clone(), rows)
            }
        }
    }
}

fn data(msg: impl Into<String>) -> EngineError {
    EngineError::Eval(EvalError::Data(msg.into()))
}

fn shape(msg: impl Into<String>) -> EngineError {
    EngineError::Eval(EvalError::Shape(msg.into()))
}

fn int_field(map: &BTreeMap<String, Value>, key: &str) -> Result<i64, EngineError> {
    map.get(key)
        .and_then(Value::as_int)
        .ok_or_else(|| shape(format!("friend `{key}` must be an integer")))
}

fn text_field(map: &BTreeMap<String, Value>, key: &str) -> Result<Arc<str>, EngineError> {
    match map.get(key) {
        Some(Value::Text(t)) => Ok(t.clone()),
        _ => Err(shape(format!("friend `{key}` must be text"))),
    }
}

fn resolve_emitter(
    emit: &Emit,
    items: &[Value],
    scope: &Scope,
) -> Result<Emitter, EngineError> {
    match emit {
        Emit::SequentialDayAssignment {
            stays,
            overlap,
            item_field,
            days_field,
        } => {
            let stays_v = eval(stays, scope)?;
            let Value::Map(stay_map) = &*stays_v else {
                return Err(shape("stays must be a map"));
            };
            let stays = items
                .iter()
                .map(|item| {
                    let key = item.as_text().ok_or_else(|| shape("items must be text"))?;
                    let stay = stay_map
                        .get(key)
                        .ok_or_else(|| data(format!("no stay given for `{key}`")))?
                        .as_int()
                        .ok_or_else(|| shape("stays must be integers"))?;
                    if stay < 1 || stay > 10_000 {
                        return Err(data(format!("stay for `{key}` must be between 1 and 10000")));
                    }
                    Ok(stay)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let item_pos = usize::from(item_field > days_field);
            let mut fields = vec![item_field.clone(), days_field.clone()];
            fields.sort();
            Ok(Emitter::Days {
                stays,
                overlap: *overlap,
                item_pos,
                fields: Arc::from(fields),
            })
        }
        Emit::GreedySchedule {
            origin_place,
            origin_time,
            travel,
        } => {
            let origin_place = match &*eval(origin_place, scope)? {
                Value::Text(t) => t.clone(),
                _ => return Err(shape("origin place must be text")),
            };
            let origin_time = eval(origin_time, scope)?
                .as_int()
                .ok_or_else(|| shape("origin time must be an integer"))?;
            let friends = items
                .iter()
                .map(|item| {
                    let m = item.as_map().ok_or_else(|| shape("friends must be records"))?;
                    for key in FRIEND_KEYS {
                        if !m.contains_key(key) {
                            return Err(shape(format!("friend lacks `{key}`")));
                        }
                    }
                    let f = Friend {
                        name: Value::Text(text_field(m, "name")?),
                        place: text_field(m, "place")?,
                        open: int_field(m, "open")?,
                        close: int_field(m, "close")?,
                        min_minutes: int_field(m, "min_minutes")?,
                    };
                    if f.min_minutes < 0 || f.open > f.close {
                        return Err(data("friend window is not well-ordered"));
                    }
                    Ok(f)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mut places: Vec<Arc<str>> = vec![origin_place.clone()];
            for f in &friends {
                if !places.contains(&f.place) {
                    places.push(f.place.clone());
                }
            }
            let id = |p: &Arc<str>| places.iter().position(|q| q == p).unwrap();
            let place_ids = friends.iter().map(|f| id(&f.place)).collect();
            let travel_v = eval(travel, scope)?;
            let Value::Map(tm) = &*travel_v else {
                return Err(shape("travel must be a map of maps"));
            };
            let mut matrix = vec![vec![None; places.len()]; places.len()];
            for (a, from) in places.iter().enumerate() {
                for (b, to) in places.iter().enumerate() {
                    matrix[a][b] = if a == b {
                        Some(0)
                    } else {
                        match tm.get(&**from).map(|row| row.as_map()) {
                            Some(Some(row)) => row.get(&**to).and_then(Value::as_int),
                            Some(None) => return Err(shape("travel must be a map of maps")),
                            None => None,
                        }
                    };
                }
            }
            let mut fields: Vec<String> = SCHEDULE_FIELDS.iter().map(|s| s.to_string()).collect();
            fields.sort();
            Ok(Emitter::Schedule {
                origin_place,
                origin_time,
                friends,
                travel: matrix,
                origin_id: 0,
                place_ids,
                fields: Arc::from(fields),
            })
        }
    }
}

/// Search state for greedy schedules: where and when the walk currently is.
#[derive(Clone, Copy)]
struct Clock {
    at: usize,
    time: i64,
}

struct Search<'a> {
    n: usize,
    subsets: bool,
    allowed: Option<Vec<bool>>,
    emitter: &'a Emitter,
    limit: Limit,
    offsets: Vec<u32>,
    orders: Vec<u8>,
    prefix: Vec<u8>,
    used: Vec<bool>,
    stop: bool,
    exceeded: bool,
}

impl Search<'_> {
    fn edge_ok(&self, from: usize, to: usize) -> bool {
        match &self.allowed {
            None => true,
            Some(m) => m[from * self.n + to],
        }
    }

    fn step(&self, clock: Clock, i: usize) -> Option<Clock> {
        match self.emitter {
            Emitter::Days { .. } => Some(clock),
            Emitter::Schedule {
                friends,
                travel,
                place_ids,
                ..
            } => {
                let f = &friends[i];
                let to = place_ids[i];
                let arrive = clock.time.checked_add(travel[clock.at][to]?)?;
                let end = arrive.max(f.open).checked_add(f.min_minutes)?;
                (end <= f.close).then_some(Clock { at: to, time: end })
            }
        }
    }

    fn record(&mut self) {
        if self.len() >= self.limit.cap() {
            self.stop = true;
            self.exceeded = matches!(self.limit, Limit::Exhaustive(_));
            return;
        }
        self.orders.extend_from_slice(&self.prefix);
        self.offsets.push(self.orders.len() as u32);
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    fn dfs(&mut self, clock: Clock) {
        if self.stop {
            return;
        }
        if self.prefix.len() == self.n {
            if !self.subsets && self.n > 0 {
                self.record();
            }
            return;
        }
        for i in 0..self.n {
            if self.used[i] {
                continue;
            }
            if let Some(&last) = self.prefix.last() {
                if !self.edge_ok(last as usize, i) {
                    continue;
                }
            }
            let Some(next) = self.step(clock, i) else {
                continue;
            };
            self.used[i] = true;
            self.prefix.push(i as u8);
            if self.subsets {
                self.record();
            }
            self.dfs(next);
            self.prefix.pop();
            self.used[i] = false;
            if self.stop {
                return;
            }
        }
    }
}

fn edge_matrix(
    prune: &[SequencePredicate],
    items: &[Value],
    scope: &Scope,
) -> Result<Option<Vec<bool>>, EngineError> {
    if prune.is_empty() {
        return Ok(None);
    }
    let n = items.len();
    let mut allowed = vec![true; n * n];
    for p in prune {
        let SequencePredicate::PairsInEdgeSet { edges } = p;
        let v = eval(edges, scope)?;
        let Value::List(pairs) = &*v else {
            return Err(shape("edges must be a list of pairs"));
        };
        let mut set = std::collections::BTreeSet::new();
        for pair in pairs {
            match pair.as_list() {
                Some([a, b]) => {
                    set.insert((a, b));
                }
                Some(_) => return Err(data("every edge must have exactly two endpoints")),
                None => return Err(shape("edges must be a list of pairs")),
            }
        }
        for a in 0..n {
            for b in 0..n {
                allowed[a * n + b] &= set.contains(&(&items[a], &items[b]));
            }
        }
    }
    Ok(Some(allowed))
}

/// Enumerates candidate plans in lexicographic order of item positions.
pub fn enumerate_candidates(
    spec: &CombinationSpec,
    rep: &StructuredRepresentation,
    limit: Limit,
) -> Result<CandidateSet, EngineError> {
    if limit.cap() == 0 {
        return Err(data("candidate limit must be positive"));
    }
    let scope = Scope::params(rep, Namespace::Combinations);
    let g = &spec.root;
    let items = match &*eval(&g.source, &scope)? {
        Value::List(items) => items.clone(),
        _ => return Err(shape("generator source must be a list")),
    };
    if items.len() > MAX_ITEMS {
        return Err(data(format!("at most {MAX_ITEMS} items can be ordered")));
    }
    let emitter = resolve_emitter(&g.emit, &items, &scope)?;
    let allowed = edge_matrix(&g.prune, &items, &scope)?;
    let start = match &emitter {
        Emitter::Days { .. } => Clock { at: 0, time: 0 },
        Emitter::Schedule {
            origin_id,
            origin_time,
            ..
        } => Clock {
            at: *origin_id,
            time: *origin_time,
        },
    };
    let n = items.len();
    let mut search = Search {
        n,
        subsets: g.kind == GeneratorKind::SubsetOrderings,
        allowed,
        emitter: &emitter,
        limit,
        offsets: vec![0],
        orders: Vec::new(),
        prefix: Vec::with_capacity(n),
        used: vec![false; n],
        stop: false,
        exceeded: false,
    };
    search.dfs(start);
    if search.exceeded {
        return Err(EngineError::LimitExceeded {
            limit: limit.cap(),
        });
    }
    let (offsets, orders) = (search.offsets, search.orders);
    Ok(CandidateSet {
        inner: Inner::Orderings {
            items,
            emitter,
            offsets,
            orders,
        },
    })
}
