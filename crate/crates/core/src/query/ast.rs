use crate::kgstore::{Literal, Term};

#[derive(Debug, Clone, PartialEq)]
pub enum TermPattern {
    Var(String),
    Const(Term),
}

impl TermPattern {
    pub fn var(&self) -> Option<&str> {
        match self {
            TermPattern::Var(v) => Some(v),
            TermPattern::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriplePattern {
    pub subject: TermPattern,
    pub predicate: TermPattern,
    pub object: TermPattern,
}

impl TriplePattern {
    pub fn positions(&self) -> [&TermPattern; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(TermPattern::var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn as_str(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Const(Literal),
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => out.push(v.clone()),
            Expr::Const(_) => {}
            Expr::Not(e) => e.vars(out),
            Expr::Or(a, b) | Expr::And(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Triple(TriplePattern),
    Filter(Expr),
    Optional(Group),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Group {
    pub elements: Vec<GroupElement>,
}

impl Group {
    /// Variables in first-appearance order, including optional blocks and filters.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out, true);
        let mut seen = std::collections::HashSet::new();
        out.retain(|v| seen.insert(v.clone()));
        out
    }

    /// Variables that can receive a binding (appear in some triple pattern).
    pub fn pattern_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out, false);
        let mut seen = std::collections::HashSet::new();
        out.retain(|v| seen.insert(v.clone()));
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>, with_filters: bool) {
        for el in &self.elements {
            match el {
                GroupElement::Triple(t) => out.extend(t.vars().map(str::to_string)),
                GroupElement::Filter(e) if with_filters => e.vars(out),
                GroupElement::Filter(_) => {}
                GroupElement::Optional(g) => g.collect_vars(out, with_filters),
            }
        }
    }

    /// Every triple pattern with its position path (1-based, through optional blocks).
    pub fn triples_with_paths(&self) -> Vec<(Vec<usize>, &TriplePattern)> {
        let mut out = Vec::new();
        self.walk(&mut vec![], &mut out);
        out
    }

    fn walk<'a>(&'a self, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a TriplePattern)>) {
        for (i, el) in self.elements.iter().enumerate() {
            path.push(i + 1);
            match el {
                GroupElement::Triple(t) => out.push((path.clone(), t)),
                GroupElement::Optional(g) => g.walk(path, out),
                GroupElement::Filter(_) => {}
            }
            path.pop();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregate {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl Aggregate {
    pub const ALL: [Aggregate; 5] = [Aggregate::Count, Aggregate::Sum, Aggregate::Avg, Aggregate::Min, Aggregate::Max];

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::Count => "COUNT",
            Aggregate::Sum => "SUM",
            Aggregate::Avg => "AVG",
            Aggregate::Min => "MIN",
            Aggregate::Max => "MAX",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggAlias {
    pub func: Aggregate,
    /// `None` is `*`.
    pub arg: Option<String>,
    pub alias: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Var(String),
    Agg(AggAlias),
}

impl SelectItem {
    pub fn name(&self) -> &str {
        match self {
            SelectItem::Var(v) => v,
            SelectItem::Agg(a) => &a.alias,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    All,
    Items(Vec<SelectItem>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderKey {
    pub var: String,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub distinct: bool,
    pub projection: Projection,
    pub group_by: Vec<String>,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

impl Select {
    pub fn aggregates(&self) -> Vec<&AggAlias> {
        match &self.projection {
            Projection::All => vec![],
            Projection::Items(items) => items
                .iter()
                .filter_map(|i| match i {
                    SelectItem::Agg(a) => Some(a),
                    SelectItem::Var(_) => None,
                })
                .collect(),
        }
    }

    pub fn is_grouped(&self) -> bool {
        !self.group_by.is_empty() || !self.aggregates().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Form {
    Select(Select),
    Ask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub form: Form,
    pub pattern: Group,
}

impl Query {
    /// Result header: projected names, or every pattern variable for `*`.
    pub fn header(&self) -> Vec<String> {
        match &self.form {
            Form::Ask => vec![],
            Form::Select(s) => match &s.projection {
                Projection::All => self.pattern.pattern_vars(),
                Projection::Items(items) => items.iter().map(|i| i.name().to_string()).collect(),
            },
        }
    }
}
