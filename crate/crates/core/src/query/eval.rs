use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::ast::*;
use super::QueryError;
use crate::kgstore::{Literal, Store, Term, TermId};

pub(crate) type Row = Vec<Option<TermId>>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionTable {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<Option<Term>>>,
}

impl SolutionTable {
    pub fn column(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryResult {
    Boolean(bool),
    Table(SolutionTable),
}

impl QueryResult {
    /// Number of rows; an ASK answer counts as one row.
    pub fn len(&self) -> usize {
        match self {
            QueryResult::Boolean(_) => 1,
            QueryResult::Table(t) => t.rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, QueryResult::Table(t) if t.rows.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalStats {
    /// Rows dropped because a filter compared or combined incompatible types.
    pub filter_type_mismatches: usize,
    /// Rows dropped because a filter read an unbound variable.
    pub filter_unbound: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub result: QueryResult,
    pub stats: EvalStats,
}

/// Maps variable names to row slots.
#[derive(Debug, Clone)]
pub(crate) struct Slots {
    pub names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Slots {
    pub fn new(q: &Query) -> Self {
        let names = q.pattern.vars();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Slots { names, index }
    }

    pub fn get(&self, v: &str) -> usize {
        self.index[v]
    }
}

/// A pattern position after substituting the current row.
#[derive(Clone, Copy)]
pub(crate) enum Slot {
    Bound(TermId),
    Free(usize),
    /// A constant absent from the store: nothing matches.
    Missing,
}

pub(crate) fn resolve(t: &TermPattern, row: &Row, slots: &Slots, store: &Store) -> Slot {
    match t {
        TermPattern::Const(c) => store.lookup(c).map_or(Slot::Missing, Slot::Bound),
        TermPattern::Var(v) => {
            let i = slots.get(v);
            row[i].map_or(Slot::Free(i), Slot::Bound)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FilterError {
    Type,
    Unbound,
}

#[derive(Debug, Clone)]
enum Val {
    Int(i64),
    Dec(f64),
    Str(Arc<str>),
    Bool(bool),
    Iri(Arc<str>),
    Other,
}

impl Val {
    fn of(t: &Term) -> Val {
        match t {
            Term::Iri(i) => Val::Iri(i.clone()),
            Term::Literal(Literal::Integer(i)) => Val::Int(*i),
            Term::Literal(Literal::Decimal(d)) => Val::Dec(d.get()),
            Term::Literal(Literal::String(s)) => Val::Str(s.clone()),
            Term::Literal(Literal::Boolean(b)) => Val::Bool(*b),
            Term::Geometry(_) => Val::Other,
        }
    }

    fn num(&self) -> Option<f64> {
        match self {
            Val::Int(i) => Some(*i as f64),
            Val::Dec(d) => Some(*d),
            _ => None,
        }
    }

    fn ebv(&self) -> Result<bool, FilterError> {
        match self {
            Val::Bool(b) => Ok(*b),
            Val::Int(i) => Ok(*i != 0),
            Val::Dec(d) => Ok(*d != 0.0),
            Val::Str(s) => Ok(!s.is_empty()),
            Val::Iri(_) | Val::Other => Err(FilterError::Type),
        }
    }
}

fn compare(op: CmpOp, a: &Val, b: &Val) -> Result<bool, FilterError> {
    let ord = match (a, b) {
        (Val::Int(x), Val::Int(y)) => Some(x.cmp(y)),
        (x, y) if x.num().is_some() && y.num().is_some() => x.num().unwrap().partial_cmp(&y.num().unwrap()),
        (Val::Str(x), Val::Str(y)) => Some(x.cmp(y)),
        (Val::Bool(x), Val::Bool(y)) => Some(x.cmp(y)),
        (Val::Iri(x), Val::Iri(y)) => match op {
            CmpOp::Eq | CmpOp::Ne => Some(x.cmp(y)),
            _ => return Err(FilterError::Type),
        },
        _ => None,
    };
    match (op, ord) {
        (CmpOp::Eq, o) => Ok(o == Some(Ordering::Equal)),
        (CmpOp::Ne, o) => Ok(o != Some(Ordering::Equal)),
        (_, None) => Err(FilterError::Type),
        (CmpOp::Lt, Some(o)) => Ok(o.is_lt()),
        (CmpOp::Le, Some(o)) => Ok(o.is_le()),
        (CmpOp::Gt, Some(o)) => Ok(o.is_gt()),
        (CmpOp::Ge, Some(o)) => Ok(o.is_ge()),
    }
}

fn arith(op: ArithOp, a: &Val, b: &Val) -> Result<Val, FilterError> {
    if let (Val::Int(x), Val::Int(y)) = (a, b) {
        let r = match op {
            ArithOp::Add => x.checked_add(*y),
            ArithOp::Sub => x.checked_sub(*y),
            ArithOp::Mul => x.checked_mul(*y),
            ArithOp::Div if *y == 0 => None,
            ArithOp::Div => return Ok(Val::Dec(*x as f64 / *y as f64)),
        };
        return r.map(Val::Int).ok_or(FilterError::Type);
    }
    let (Some(x), Some(y)) = (a.num(), b.num()) else {
        return Err(FilterError::Type);
    };
    let r = match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
        ArithOp::Div if y == 0.0 => return Err(FilterError::Type),
        ArithOp::Div => x / y,
    };
    if r.is_finite() {
        Ok(Val::Dec(r))
    } else {
        Err(FilterError::Type)
    }
}

fn value(e: &Expr, row: &Row, slots: &Slots, store: &Store) -> Result<Val, FilterError> {
    let truth = |e: &Expr| value(e, row, slots, store).and_then(|v| v.ebv());
    Ok(match e {
        Expr::Var(v) => match row[slots.get(v)] {
            Some(id) => Val::of(store.term(id)),
            None => return Err(FilterError::Unbound),
        },
        Expr::Const(l) => Val::of(&Term::Literal(l.clone())),
        Expr::Or(a, b) => match (truth(a), truth(b)) {
            (Ok(true), _) | (_, Ok(true)) => Val::Bool(true),
            (Err(e), _) | (_, Err(e)) => return Err(e),
            _ => Val::Bool(false),
        },
        Expr::And(a, b) => match (truth(a), truth(b)) {
            (Ok(false), _) | (_, Ok(false)) => Val::Bool(false),
            (Err(e), _) | (_, Err(e)) => return Err(e),
            _ => Val::Bool(true),
        },
        Expr::Not(a) => Val::Bool(!truth(a)?),
        Expr::Cmp(op, a, b) => Val::Bool(compare(*op, &value(a, row, slots, store)?, &value(b, row, slots, store)?)?),
        Expr::Arith(op, a, b) => arith(*op, &value(a, row, slots, store)?, &value(b, row, slots, store)?)?,
    })
}

pub(crate) fn filter_holds(e: &Expr, row: &Row, slots: &Slots, store: &Store) -> Result<bool, FilterError> {
    value(e, row, slots, store)?.ebv()
}

/// Applies a group's filters to rows that survived its patterns.
pub(crate) fn apply_filters(filters: &[&Expr], rows: Vec<Row>, slots: &Slots, store: &Store, stats: &mut EvalStats) -> Vec<Row> {
    rows.into_iter()
        .filter(|r| {
            filters.iter().all(|f| match filter_holds(f, r, slots, store) {
                Ok(b) => b,
                Err(FilterError::Type) => {
                    stats.filter_type_mismatches += 1;
                    false
                }
                Err(FilterError::Unbound) => {
                    stats.filter_unbound += 1;
                    false
                }
            })
        })
        .collect()
}

struct Evaluator<'a> {
    store: &'a Store,
    slots: Slots,
    stats: EvalStats,
}

impl Evaluator<'_> {
    fn group(&mut self, g: &Group, mut rows: Vec<Row>) -> Vec<Row> {
        let mut filters = Vec::new();
        let mut run: Vec<&TriplePattern> = Vec::new();
        for el in &g.elements {
            match el {
                GroupElement::Triple(t) => run.push(t),
                GroupElement::Filter(f) => filters.push(f),
                GroupElement::Optional(inner) => {
                    rows = self.bgp(std::mem::take(&mut run), rows);
                    let mut out = Vec::new();
                    for r in rows {
                        let ext = self.group(inner, vec![r.clone()]);
                        if ext.is_empty() {
                            out.push(r);
                        } else {
                            out.extend(ext);
                        }
                    }
                    rows = out;
                }
            }
        }
        rows = self.bgp(run, rows);
        apply_filters(&filters, rows, &self.slots, self.store, &mut self.stats)
    }

    /// Joins a run of triple patterns, most constrained pattern first.
    fn bgp(&self, mut run: Vec<&TriplePattern>, mut rows: Vec<Row>) -> Vec<Row> {
        let mut bound: HashSet<&str> = HashSet::new();
        if let Some(r) = rows.first() {
            // ordering heuristic only; rows after OPTIONAL may differ
            bound.extend(self.slots.names.iter().enumerate().filter(|(i, _)| r[*i].is_some()).map(|(_, n)| n.as_str()));
        }
        while !run.is_empty() {
            let score = |t: &TriplePattern| t.positions().iter().filter(|p| p.var().is_none_or(|v| bound.contains(v))).count();
            let best = (0..run.len()).max_by_key(|&i| (score(run[i]), std::cmp::Reverse(i))).unwrap();
            let t = run.remove(best);
            bound.extend(t.vars());
            rows = rows.into_iter().flat_map(|r| self.extend(t, r)).collect();
        }
        rows
    }

    fn extend(&self, t: &TriplePattern, row: Row) -> Vec<Row> {
        let [s, p, o] = t.positions().map(|x| resolve(x, &row, &self.slots, self.store));
        let fixed = |x: Slot| match x {
            Slot::Bound(id) => Some(id),
            _ => None,
        };
        if [s, p, o].iter().any(|x| matches!(x, Slot::Missing)) {
            return vec![];
        }
        let mut out = Vec::new();
        'triples: for (ts, tp, to) in self.store.match_ids(fixed(s), fixed(p), fixed(o)) {
            let mut r = row.clone();
            for (slot, id) in [(s, ts), (p, tp), (o, to)] {
                if let Slot::Free(i) = slot {
                    // the same variable twice in one pattern
                    match r[i] {
                        Some(prev) if prev != id => continue 'triples,
                        _ => r[i] = Some(id),
                    }
                }
            }
            out.push(r);
        }
        out
    }
}

/// Runs `q` over a sealed store.
pub fn evaluate(q: &Query, store: &Store) -> Result<Evaluation, QueryError> {
    if !store.is_sealed() {
        return Err(QueryError::NotSealed);
    }
    let slots = Slots::new(q);
    let mut ev = Evaluator {
        store,
        slots: slots.clone(),
        stats: EvalStats::default(),
    };
    let rows = ev.group(&q.pattern, vec![vec![None; slots.names.len()]]);
    Ok(Evaluation {
        result: finish(q, rows, &slots, store),
        stats: ev.stats,
    })
}

/// Total order for ORDER BY, MIN and MAX: numbers, booleans, strings, IRIs, geometries.
pub fn term_order(a: &Term, b: &Term) -> Ordering {
    let rank = |t: &Term| match t {
        Term::Literal(Literal::Integer(_) | Literal::Decimal(_)) => 0,
        Term::Literal(Literal::Boolean(_)) => 1,
        Term::Literal(Literal::String(_)) => 2,
        Term::Iri(_) => 3,
        Term::Geometry(_) => 4,
    };
    match (a, b) {
        (Term::Literal(Literal::Integer(x)), Term::Literal(Literal::Integer(y))) => x.cmp(y),
        _ if rank(a) == 0 && rank(b) == 0 => a.as_f64().unwrap().total_cmp(&b.as_f64().unwrap()),
        _ => rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)),
    }
}

fn aggregate(a: &AggAlias, rows: &[&Vec<Option<Term>>], col: Option<usize>) -> Option<Term> {
    let values: Vec<&Term> = match col {
        Some(c) => rows.iter().filter_map(|r| r[c].as_ref()).collect(),
        None => vec![],
    };
    match a.func {
        Aggregate::Count if a.arg.is_none() => Some(Term::integer(rows.len() as i64)),
        Aggregate::Count => Some(Term::integer(values.len() as i64)),
        _ if values.is_empty() => None,
        Aggregate::Sum | Aggregate::Avg => {
            let nums: Option<Vec<&Literal>> = values
                .iter()
                .map(|t| t.as_literal().filter(|l| matches!(l, Literal::Integer(_) | Literal::Decimal(_))))
                .collect();
            let nums = nums?;
            let all_int = nums.iter().all(|l| matches!(l, Literal::Integer(_)));
            if a.func == Aggregate::Sum && all_int {
                let mut s: i64 = 0;
                for l in nums {
                    let Literal::Integer(i) = l else { unreachable!() };
                    s = s.checked_add(*i)?;
                }
                return Some(Term::integer(s));
            }
            let sum: f64 = nums.iter().map(|l| l.as_f64().unwrap()).sum();
            let v = if a.func == Aggregate::Avg { sum / nums.len() as f64 } else { sum };
            Term::decimal(v).ok()
        }
        Aggregate::Min => values.into_iter().min_by(|x, y| term_order(x, y)).cloned(),
        Aggregate::Max => values.into_iter().max_by(|x, y| term_order(x, y)).cloned(),
    }
}

/// Grouping, aggregation, ordering, projection, DISTINCT and slicing.
pub(crate) fn finish(q: &Query, rows: Vec<Row>, slots: &Slots, store: &Store) -> QueryResult {
    let s = match &q.form {
        Form::Ask => return QueryResult::Boolean(!rows.is_empty()),
        Form::Select(s) => s,
    };
    let mut columns = slots.names.clone();
    let mut table: Vec<Vec<Option<Term>>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|c| c.map(|id| store.term(id).clone())).collect())
        .collect();
    if s.is_grouped() {
        let keys: Vec<usize> = s.group_by.iter().map(|v| slots.get(v)).collect();
        let mut order: Vec<Vec<Option<Term>>> = Vec::new();
        let mut groups: HashMap<Vec<Option<Term>>, Vec<usize>> = HashMap::new();
        if keys.is_empty() {
            order.push(vec![]);
            groups.insert(vec![], (0..table.len()).collect());
        } else {
            for (i, r) in table.iter().enumerate() {
                let k: Vec<_> = keys.iter().map(|&c| r[c].clone()).collect();
                groups
                    .entry(k.clone())
                    .or_insert_with(|| {
                        order.push(k);
                        vec![]
                    })
                    .push(i);
            }
        }
        let aggs = s.aggregates();
        let grouped = order
            .into_iter()
            .map(|k| {
                let members: Vec<&Vec<Option<Term>>> = groups[&k].iter().map(|&i| &table[i]).collect();
                let mut out = k.clone();
                out.extend(aggs.iter().map(|a| aggregate(a, &members, a.arg.as_ref().map(|v| slots.get(v)))));
                out
            })
            .collect();
        table = grouped;
        columns = s.group_by.clone();
        columns.extend(aggs.iter().map(|a| a.alias.clone()));
    }
    let col = |v: &str| columns.iter().position(|c| c == v);
    if !s.order_by.is_empty() {
        let keys: Vec<(Option<usize>, bool)> = s.order_by.iter().map(|k| (col(&k.var), k.descending)).collect();
        table.sort_by(|x, y| {
            for &(c, desc) in &keys {
                let Some(c) = c else { continue };
                let o = match (&x[c], &y[c]) {
                    (None, None) => Ordering::Equal,
                    (None, Some(_)) => Ordering::Greater,
                    (Some(_), None) => Ordering::Less,
                    (Some(a), Some(b)) if desc => term_order(b, a),
                    (Some(a), Some(b)) => term_order(a, b),
                };
                if o != Ordering::Equal {
                    return o;
                }
            }
            Ordering::Equal
        });
    }
    let header = q.header();
    let picks: Vec<Option<usize>> = header.iter().map(|h| col(h)).collect();
    let mut out: Vec<Vec<Option<Term>>> = table
        .into_iter()
        .map(|r| picks.iter().map(|p| p.and_then(|c| r[c].clone())).collect())
        .collect();
    if s.distinct {
        let mut seen = HashSet::new();
        out.retain(|r| seen.insert(r.clone()));
    }
    let start = s.offset.unwrap_or(0).min(out.len());
    let end = s.limit.map_or(out.len(), |l| (start + l).min(out.len()));
    QueryResult::Table(SolutionTable {
        vars: header,
        rows: out[start..end].to_vec(),
    })
}
