use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::lexer::{lex, Spanned, Tok};
use super::QueryError;
use crate::kgstore::vocab::DEFAULT_PREFIXES;
use crate::kgstore::{Decimal, Literal, Term};

pub fn parse(text: &str) -> Result<Query, QueryError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        prefixes: DEFAULT_PREFIXES.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
    };
    let q = p.query()?;
    check(&q)?;
    Ok(q)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    prefixes: HashMap<String, String>,
}

fn is_kw(t: &Tok, kw: &str) -> bool {
    matches!(t, Tok::Name(n) if n.eq_ignore_ascii_case(kw))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, QueryError> {
        let s = &self.toks[self.pos];
        Err(QueryError::Syntax {
            line: s.line,
            col: s.col,
            found: s.tok.describe(),
            expected: expected.iter().map(|e| e.to_string()).collect(),
        })
    }

    fn at_kw(&self, kw: &str) -> bool {
        is_kw(self.peek(), kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.at_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.fail(&[kw])
        }
    }

    fn eat(&mut self, p: &str) -> bool {
        let hit = matches!(self.peek(), Tok::Punct(q) if *q == p);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect(&mut self, p: &str) -> Result<(), QueryError> {
        if self.eat(p) {
            Ok(())
        } else {
            self.fail(&[&format!("'{p}'")])
        }
    }

    fn var(&mut self) -> Result<String, QueryError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.fail(&["variable"]),
        }
    }

    fn query(&mut self) -> Result<Query, QueryError> {
        while self.at_kw("PREFIX") {
            self.bump();
            let Tok::PName(name, local) = self.peek().clone() else {
                return self.fail(&["prefix name followed by ':'"]);
            };
            if !local.is_empty() {
                return self.fail(&["prefix name followed by ':'"]);
            }
            self.bump();
            let Tok::Iri(iri) = self.bump() else {
                self.pos -= 1;
                return self.fail(&["IRI"]);
            };
            self.prefixes.insert(name, iri);
        }
        let q = if self.eat_kw("ASK") {
            Query {
                form: Form::Ask,
                pattern: self.group()?,
            }
        } else if self.eat_kw("SELECT") {
            self.select()?
        } else {
            return self.fail(&["PREFIX", "SELECT", "ASK"]);
        };
        if *self.peek() != Tok::Eof {
            let mut expected = vec![];
            if matches!(q.form, Form::Select(_)) {
                expected.extend(["GROUP BY", "ORDER BY", "LIMIT", "OFFSET"]);
            }
            expected.push("end of input");
            return self.fail(&expected);
        }
        Ok(q)
    }

    fn select(&mut self) -> Result<Query, QueryError> {
        let distinct = self.eat_kw("DISTINCT");
        let projection = if self.eat("*") {
            Projection::All
        } else {
            let mut items = Vec::new();
            loop {
                match self.peek() {
                    Tok::Var(_) => items.push(SelectItem::Var(self.var()?)),
                    Tok::Punct("(") => items.push(SelectItem::Agg(self.agg_alias()?)),
                    _ if items.is_empty() => return self.fail(&["variable", "'('", "'*'"]),
                    _ => break,
                }
            }
            Projection::Items(items)
        };
        self.expect_kw("WHERE")?;
        let pattern = self.group()?;
        let mut s = Select {
            distinct,
            projection,
            group_by: vec![],
            order_by: vec![],
            limit: None,
            offset: None,
        };
        loop {
            if self.eat_kw("GROUP") {
                self.expect_kw("BY")?;
                s.group_by.push(self.var()?);
                while let Tok::Var(_) = self.peek() {
                    s.group_by.push(self.var()?);
                }
            } else if self.eat_kw("ORDER") {
                self.expect_kw("BY")?;
                s.order_by.push(self.order_key()?);
                while matches!(self.peek(), Tok::Var(_)) || self.at_kw("ASC") || self.at_kw("DESC") {
                    s.order_by.push(self.order_key()?);
                }
            } else if self.at_kw("LIMIT") || self.at_kw("OFFSET") {
                let limit = self.at_kw("LIMIT");
                self.bump();
                let Tok::Int(n) = self.peek().clone() else {
                    return self.fail(&["non-negative integer"]);
                };
                self.bump();
                let slot = if limit { &mut s.limit } else { &mut s.offset };
                if slot.is_some() {
                    return Err(QueryError::Semantic(format!("{} given twice", if limit { "LIMIT" } else { "OFFSET" })));
                }
                *slot = Some(n as usize);
            } else {
                break;
            }
        }
        Ok(Query {
            form: Form::Select(s),
            pattern,
        })
    }

    fn order_key(&mut self) -> Result<OrderKey, QueryError> {
        let descending = if self.eat_kw("DESC") {
            true
        } else {
            self.eat_kw("ASC");
            false
        };
        // bare `?v` as well as `DESC(?v)`
        if let Tok::Var(_) = self.peek() {
            let var = self.var()?;
            return Ok(OrderKey { var, descending });
        }
        self.expect("(")?;
        let var = self.var()?;
        self.expect(")")?;
        Ok(OrderKey { var, descending })
    }

    fn agg_alias(&mut self) -> Result<AggAlias, QueryError> {
        self.expect("(")?;
        let func = match self.peek() {
            Tok::Name(n) => Aggregate::ALL.into_iter().find(|a| n.eq_ignore_ascii_case(a.as_str())),
            _ => None,
        };
        let Some(func) = func else {
            return self.fail(&["COUNT", "SUM", "AVG", "MIN", "MAX"]);
        };
        self.bump();
        self.expect("(")?;
        let arg = if self.eat("*") {
            None
        } else {
            match self.peek() {
                Tok::Var(_) => Some(self.var()?),
                _ => return self.fail(&["'*'", "variable"]),
            }
        };
        self.expect(")")?;
        self.expect_kw("AS")?;
        let alias = self.var()?;
        self.expect(")")?;
        Ok(AggAlias { func, arg, alias })
    }

    fn group(&mut self) -> Result<Group, QueryError> {
        self.expect("{")?;
        let mut elements = Vec::new();
        loop {
            if self.eat("}") {
                break;
            }
            if self.eat_kw("FILTER") {
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(")")?;
                elements.push(GroupElement::Filter(e));
            } else if self.eat_kw("OPTIONAL") {
                elements.push(GroupElement::Optional(self.group()?));
            } else if self.starts_term() {
                // `;` repeats the subject, `,` repeats subject and predicate
                let subject = self.term_pattern()?;
                loop {
                    let predicate = self.term_pattern()?;
                    loop {
                        let object = self.term_pattern()?;
                        elements.push(GroupElement::Triple(TriplePattern {
                            subject: subject.clone(),
                            predicate: predicate.clone(),
                            object,
                        }));
                        if !self.eat(",") {
                            break;
                        }
                    }
                    if !self.eat(";") || !self.starts_term() {
                        break;
                    }
                }
                self.eat(".");
            } else {
                return self.fail(&["'}'", "FILTER", "OPTIONAL", "triple pattern"]);
            }
        }
        Ok(Group { elements })
    }

    fn starts_term(&self) -> bool {
        match self.peek() {
            Tok::Var(_) | Tok::Iri(_) | Tok::PName(..) | Tok::Str(_) | Tok::Int(_) | Tok::Dec(_) => true,
            Tok::Punct("-") => matches!(self.peek2(), Tok::Int(_) | Tok::Dec(_)),
            t => is_kw(t, "true") || is_kw(t, "false"),
        }
    }

    fn term_pattern(&mut self) -> Result<TermPattern, QueryError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.bump();
                Ok(TermPattern::Var(v))
            }
            Tok::Iri(i) => {
                self.bump();
                Ok(TermPattern::Const(Term::iri(i)))
            }
            Tok::PName(prefix, local) => {
                let Some(base) = self.prefixes.get(&prefix) else {
                    let s = &self.toks[self.pos];
                    return Err(QueryError::UnknownPrefix {
                        prefix,
                        line: s.line,
                        col: s.col,
                    });
                };
                let iri = format!("{base}{local}");
                self.bump();
                Ok(TermPattern::Const(Term::iri(iri)))
            }
            _ => match self.literal()? {
                Some(l) => Ok(TermPattern::Const(Term::Literal(l))),
                None => self.fail(&["variable", "IRI", "prefixed name", "literal"]),
            },
        }
    }

    /// STRING, optionally signed NUMBER, or BOOLEAN.
    fn literal(&mut self) -> Result<Option<Literal>, QueryError> {
        let negative = matches!(self.peek(), Tok::Punct("-")) && matches!(self.peek2(), Tok::Int(_) | Tok::Dec(_));
        if negative {
            self.bump();
        }
        let lit = match self.peek().clone() {
            Tok::Str(s) => Literal::string(s),
            Tok::Int(i) => Literal::Integer(if negative { -i } else { i }),
            Tok::Dec(d) => Literal::Decimal(Decimal::new(if negative { -d } else { d }).expect("lexed decimals are finite")),
            t if is_kw(&t, "true") => Literal::Boolean(true),
            t if is_kw(&t, "false") => Literal::Boolean(false),
            _ => return Ok(None),
        };
        self.bump();
        Ok(Some(lit))
    }

    fn expr(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.and()?;
        while self.eat("||") {
            e = Expr::Or(Box::new(e), Box::new(self.and()?));
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.not()?;
        while self.eat("&&") {
            e = Expr::And(Box::new(e), Box::new(self.not()?));
        }
        Ok(e)
    }

    fn not(&mut self) -> Result<Expr, QueryError> {
        if self.eat("!") {
            Ok(Expr::Not(Box::new(self.cmp()?)))
        } else {
            self.cmp()
        }
    }

    fn cmp(&mut self) -> Result<Expr, QueryError> {
        let left = self.add()?;
        let op = match self.peek() {
            Tok::Punct("=") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            _ => return Ok(left),
        };
        self.bump();
        Ok(Expr::Cmp(op, Box::new(left), Box::new(self.add()?)))
    }

    fn add(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("+") => ArithOp::Add,
                Tok::Punct("-") => ArithOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            e = Expr::Arith(op, Box::new(e), Box::new(self.mul()?));
        }
    }

    fn mul(&mut self) -> Result<Expr, QueryError> {
        let mut e = self.prim()?;
        loop {
            let op = match self.peek() {
                Tok::Punct("*") => ArithOp::Mul,
                Tok::Punct("/") => ArithOp::Div,
                _ => return Ok(e),
            };
            self.bump();
            e = Expr::Arith(op, Box::new(e), Box::new(self.prim()?));
        }
    }

    fn prim(&mut self) -> Result<Expr, QueryError> {
        if let Tok::Var(_) = self.peek() {
            return Ok(Expr::Var(self.var()?));
        }
        if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        match self.literal()? {
            Some(l) => Ok(Expr::Const(l)),
            None => self.fail(&["variable", "literal", "'('"]),
        }
    }
}

/// Scoping rules the grammar alone cannot express.
fn check(q: &Query) -> Result<(), QueryError> {
    let Form::Select(s) = &q.form else {
        return Ok(());
    };
    let bad = |m: String| Err(QueryError::Semantic(m));
    let pattern_vars: HashSet<String> = q.pattern.pattern_vars().into_iter().collect();
    let aggs = s.aggregates();
    let mut names = HashSet::new();
    if let Projection::Items(items) = &s.projection {
        for item in items {
            if !names.insert(item.name()) {
                return bad(format!("?{} is projected twice", item.name()));
            }
            match item {
                SelectItem::Var(v) if !pattern_vars.contains(v) => {
                    return bad(format!("projected variable ?{v} does not occur in the pattern"));
                }
                SelectItem::Var(v) if s.is_grouped() && !s.group_by.contains(v) => {
                    return bad(format!("?{v} must appear in GROUP BY when aggregates are used"));
                }
                SelectItem::Agg(a) if pattern_vars.contains(&a.alias) => {
                    return bad(format!("alias ?{} is already a pattern variable", a.alias));
                }
                _ => {}
            }
        }
    } else if s.is_grouped() {
        return bad("SELECT * cannot be combined with GROUP BY".into());
    }
    if s.is_grouped() {
        for k in &s.order_by {
            if !s.group_by.contains(&k.var) && !aggs.iter().any(|a| a.alias == k.var) {
                return bad(format!("ORDER BY ?{} must be a group key or an aggregate alias", k.var));
            }
        }
    }
    Ok(())
}
