use std::fmt;

use crate::repr::Namespace;
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecKind {
    Combination,
    Filter,
    Deliver,
}

impl SpecKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecKind::Combination => "combination",
            SpecKind::Filter => "filter",
            SpecKind::Deliver => "deliver",
        }
    }

    /// Namespace that un-qualified `param_ref` paths resolve against.
    pub fn default_namespace(self) -> Option<Namespace> {
        match self {
            SpecKind::Combination => Some(Namespace::Combinations),
            SpecKind::Filter => Some(Namespace::Constraints),
            SpecKind::Deliver => None,
        }
    }
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverSpec {
    Combination(CombinationSpec),
    Filter(FilterSpec),
    Deliver(DeliverSpec),
}

impl SolverSpec {
    pub fn kind(&self) -> SpecKind {
        match self {
            SolverSpec::Combination(_) => SpecKind::Combination,
            SolverSpec::Filter(_) => SpecKind::Filter,
            SolverSpec::Deliver(_) => SpecKind::Deliver,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinationSpec {
    pub root: Generator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// Every ordering of all items.
    Permutations,
    /// Every non-empty ordering of every subset of the items.
    SubsetOrderings,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub source: Expr,
    pub prune: Vec<SequencePredicate>,
    pub emit: Emit,
}

/// Predicate over consecutive items of an ordering, checked while the
/// ordering is being built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SequencePredicate {
    /// Every consecutive pair `(a, b)` appears in the given list of pairs.
    PairsInEdgeSet { edges: Expr },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Emit {
    /// Consecutive day ranges: item `i` occupies `stays[item]` days starting
    /// where the previous item ended, minus `overlap` shared days.
    SequentialDayAssignment {
        stays: Expr,
        overlap: i64,
        item_field: String,
        days_field: String,
    },
    /// Meeting schedule built greedily along the ordering. Orderings with a
    /// meeting that cannot fit its window are dropped.
    GreedySchedule {
        origin_place: Expr,
        origin_time: Expr,
        travel: Expr,
    },
}

/// Fields of the records emitted by `greedy_schedule`.
pub const SCHEDULE_FIELDS: [&str; 7] = ["arrive", "end", "friend", "from", "place", "start", "travel"];
/// Keys every item fed to `greedy_schedule` must carry.
pub const FRIEND_KEYS: [&str; 5] = ["close", "min_minutes", "name", "open", "place"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            "==" => CmpOp::Eq,
            ">=" => CmpOp::Ge,
            ">" => CmpOp::Gt,
            _ => return None,
        })
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Eq => ord == Equal,
            CmpOp::Ge => ord != Less,
            CmpOp::Gt => ord == Greater,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => ArithOp::Add,
            "-" => ArithOp::Sub,
            "*" => ArithOp::Mul,
            _ => return None,
        })
    }
}

/// Which record a `record_field` reads, relative to the current one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordRel {
    Current,
    Prev,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Value),
    ParamRef {
        namespace: Option<Namespace>,
        path: Vec<String>,
    },
    RecordField {
        name: String,
        rel: RecordRel,
    },
    Compare {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Arith {
        op: ArithOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    AllOf(Vec<Expr>),
    AnyOf(Vec<Expr>),
    Not(Box<Expr>),
    /// Number of records for which the predicate holds.
    Count(Box<Expr>),
    /// Sum of an integer expression over records.
    Sum(Box<Expr>),
    /// Maximum of an integer expression over records, 0 for no records.
    MaxOver(Box<Expr>),
    EveryRecord(Box<Expr>),
    Len(Box<Expr>),
    First(Box<Expr>),
    Last(Box<Expr>),
    /// For each `key -> [day, ...]` entry of the windows map, some record
    /// whose `key_field` equals `key` lists every one of those days.
    ContainsDays {
        windows: Box<Expr>,
        key_field: String,
        days_field: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterSpec {
    pub mode: FilterMode,
    pub predicates: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterMode {
    SatisfyFirst,
    /// Integer metrics compared lexicographically; earlier candidates win ties.
    Maximize(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliverSpec {
    pub template: Vec<TemplateNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Plain,
    /// Minutes after midnight as `H:MMAM` / `H:MMPM`.
    Clock12,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    First,
    NotFirst,
    Last,
    NotLast,
}

impl Position {
    pub fn as_str(self) -> &'static str {
        match self {
            Position::First => "first",
            Position::NotFirst => "not_first",
            Position::Last => "last",
            Position::NotLast => "not_last",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "first" => Position::First,
            "not_first" => Position::NotFirst,
            "last" => Position::Last,
            "not_last" => Position::NotLast,
            _ => return None,
        })
    }

    pub fn holds(self, index: usize, len: usize) -> bool {
        match self {
            Position::First => index == 0,
            Position::NotFirst => index != 0,
            Position::Last => index + 1 == len,
            Position::NotLast => index + 1 != len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Condition {
    Position(Position),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplateNode {
    Text(String),
    Field { expr: Expr, format: FieldFormat },
    Each(Vec<TemplateNode>),
    When {
        cond: Condition,
        then: Vec<TemplateNode>,
        otherwise: Vec<TemplateNode>,
    },
}
