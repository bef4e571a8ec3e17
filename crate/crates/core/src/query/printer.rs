use std::fmt::Write;

use super::ast::*;
use crate::kgstore::{Literal, Term};

fn literal(l: &Literal) -> String {
    match l {
        Literal::String(s) => {
            let mut out = String::from("\"");
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\r' => out.push_str("\\r"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
        other => other.lexical(),
    }
}

fn term_pattern(t: &TermPattern) -> String {
    match t {
        TermPattern::Var(v) => format!("?{v}"),
        TermPattern::Const(Term::Iri(i)) => format!("<{i}>"),
        TermPattern::Const(Term::Literal(l)) => literal(l),
        // geometry handles have no query syntax
        TermPattern::Const(Term::Geometry(h)) => format!("_:geometry{}", h.0),
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Var(v) => format!("?{v}"),
        Expr::Const(l) => literal(l),
        Expr::Or(a, b) => format!("({} || {})", expr(a), expr(b)),
        Expr::And(a, b) => format!("({} && {})", expr(a), expr(b)),
        Expr::Not(a) => format!("(!({}))", expr(a)),
        Expr::Cmp(op, a, b) => format!("({} {} {})", expr(a), op.as_str(), expr(b)),
        Expr::Arith(op, a, b) => format!("({} {} {})", expr(a), op.as_str(), expr(b)),
    }
}

fn group(g: &Group, indent: usize, out: &mut String) {
    out.push_str("{\n");
    let pad = "  ".repeat(indent + 1);
    for el in &g.elements {
        out.push_str(&pad);
        match el {
            GroupElement::Triple(t) => {
                let [s, p, o] = t.positions();
                let _ = writeln!(out, "{} {} {} .", term_pattern(s), term_pattern(p), term_pattern(o));
            }
            GroupElement::Filter(e) => {
                let _ = writeln!(out, "FILTER({})", expr(e));
            }
            GroupElement::Optional(inner) => {
                out.push_str("OPTIONAL ");
                group(inner, indent + 1, out);
                out.push('\n');
            }
        }
    }
    out.push_str(&"  ".repeat(indent));
    out.push('}');
}

/// Canonical text with full IRIs; parsing it yields an equal AST.
pub fn print(q: &Query) -> String {
    let mut out = String::new();
    match &q.form {
        Form::Ask => {
            out.push_str("ASK ");
            group(&q.pattern, 0, &mut out);
        }
        Form::Select(s) => {
            out.push_str("SELECT ");
            if s.distinct {
                out.push_str("DISTINCT ");
            }
            match &s.projection {
                Projection::All => out.push('*'),
                Projection::Items(items) => {
                    let parts: Vec<String> = items
                        .iter()
                        .map(|i| match i {
                            SelectItem::Var(v) => format!("?{v}"),
                            SelectItem::Agg(a) => format!(
                                "({}({}) AS ?{})",
                                a.func.as_str(),
                                a.arg.as_ref().map_or("*".to_string(), |v| format!("?{v}")),
                                a.alias
                            ),
                        })
                        .collect();
                    out.push_str(&parts.join(" "));
                }
            }
            out.push_str(" WHERE ");
            group(&q.pattern, 0, &mut out);
            if !s.group_by.is_empty() {
                let vars: Vec<String> = s.group_by.iter().map(|v| format!("?{v}")).collect();
                let _ = write!(out, "\nGROUP BY {}", vars.join(" "));
            }
            if !s.order_by.is_empty() {
                let keys: Vec<String> = s
                    .order_by
                    .iter()
                    .map(|k| format!("{}(?{})", if k.descending { "DESC" } else { "ASC" }, k.var))
                    .collect();
                let _ = write!(out, "\nORDER BY {}", keys.join(" "));
            }
            if let Some(n) = s.limit {
                let _ = write!(out, "\nLIMIT {n}");
            }
            if let Some(n) = s.offset {
                let _ = write!(out, "\nOFFSET {n}");
            }
        }
    }
    out
}
