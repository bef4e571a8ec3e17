//! Reference evaluator: enumerates variable assignments over the store's
//! whole term universe instead of using index joins.

use super::ast::*;
use super::eval::{apply_filters, finish, resolve, EvalStats, QueryResult, Row, Slot, Slots};
use super::QueryError;
use crate::kgstore::{Store, TermId};

struct Naive<'a> {
    store: &'a Store,
    slots: Slots,
    universe: Vec<TermId>,
    stats: EvalStats,
}

impl Naive<'_> {
    fn group(&mut self, g: &Group, rows: Vec<Row>) -> Vec<Row> {
        let mut out = Vec::new();
        for row in rows {
            out.extend(self.elements(&g.elements, row));
        }
        let filters: Vec<&Expr> = g
            .elements
            .iter()
            .filter_map(|e| match e {
                GroupElement::Filter(f) => Some(f),
                _ => None,
            })
            .collect();
        apply_filters(&filters, out, &self.slots, self.store, &mut self.stats)
    }

    /// Solutions of the element list extending `row`, ignoring filters.
    fn elements(&mut self, els: &[GroupElement], row: Row) -> Vec<Row> {
        let split = els.iter().position(|e| matches!(e, GroupElement::Optional(_)));
        let (head, tail) = els.split_at(split.unwrap_or(els.len()));
        let patterns: Vec<&TriplePattern> = head
            .iter()
            .filter_map(|e| match e {
                GroupElement::Triple(t) => Some(t),
                _ => None,
            })
            .collect();
        let mut free: Vec<usize> = Vec::new();
        for t in &patterns {
            for v in t.vars() {
                let i = self.slots.get(v);
                if row[i].is_none() && !free.contains(&i) {
                    free.push(i);
                }
            }
        }
        let mut solved = Vec::new();
        self.assign(&patterns, &free, row, &mut solved);
        let Some((GroupElement::Optional(opt), rest)) = tail.split_first() else {
            return solved;
        };
        let mut out = Vec::new();
        for r in solved {
            let ext = self.group(opt, vec![r.clone()]);
            let ext = if ext.is_empty() { vec![r] } else { ext };
            for e in ext {
                out.extend(self.elements(rest, e));
            }
        }
        out
    }

    fn assign(&self, patterns: &[&TriplePattern], free: &[usize], row: Row, out: &mut Vec<Row>) {
        let Some((&slot, rest)) = free.split_first() else {
            if patterns.iter().all(|t| self.holds(t, &row)) {
                out.push(row);
            }
            return;
        };
        for &id in &self.universe {
            let mut r = row.clone();
            r[slot] = Some(id);
            // prune on patterns that just became ground
            if patterns.iter().all(|t| !self.ground(t, &r) || self.holds(t, &r)) {
                self.assign(patterns, rest, r, out);
            }
        }
    }

    fn ground(&self, t: &TriplePattern, row: &Row) -> bool {
        t.vars().all(|v| row[self.slots.get(v)].is_some())
    }

    fn holds(&self, t: &TriplePattern, row: &Row) -> bool {
        match t.positions().map(|x| resolve(x, row, &self.slots, self.store)) {
            [Slot::Bound(s), Slot::Bound(p), Slot::Bound(o)] => self.store.contains_ids((s, p, o)),
            _ => false,
        }
    }
}

/// Same answers as [`super::evaluate`]; exponential in the number of variables.
pub fn evaluate_naive(q: &Query, store: &Store) -> Result<QueryResult, QueryError> {
    if !store.is_sealed() {
        return Err(QueryError::NotSealed);
    }
    let slots = Slots::new(q);
    let width = slots.names.len();
    let mut n = Naive {
        store,
        universe: store.term_ids().collect(),
        slots: slots.clone(),
        stats: EvalStats::default(),
    };
    let rows = n.group(&q.pattern, vec![vec![None; width]]);
    Ok(finish(q, rows, &slots, store))
}
