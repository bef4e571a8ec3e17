use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::kgstore::vocab::prop;
use crate::kgstore::{Store, Term};
use crate::llm::{complete, ChatRequest, Gateway, ScriptRule};
use crate::query::{evaluate, parse, QueryResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Property,
    Relationship,
    Qualifier,
    Aggregate,
    Superlative,
    SpatialTemporal,
    Overview,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerKind {
    Yesno,
    Numeric,
    /// A list of values, e.g. the years a feature type occurs in.
    List,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gold {
    YesNo(bool),
    Number(f64),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub question: String,
    pub category: Category,
    pub answer_kind: AnswerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<Gold>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchCounts {
    pub yesno: usize,
    pub numeric: usize,
    pub overview: usize,
    pub list: usize,
}

impl Default for BenchCounts {
    fn default() -> Self {
        Self {
            yesno: 45,
            numeric: 45,
            overview: 10,
            list: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub items: Vec<BenchmarkItem>,
    pub warnings: Vec<String>,
}

pub fn load_benchmark(text: &str) -> Result<Vec<BenchmarkItem>, EvalError> {
    Ok(serde_json::from_str(text)?)
}

/// Renders an evaluated gold query for the item's answer kind.
pub fn gold_answer(kind: AnswerKind, result: &QueryResult) -> Option<Gold> {
    match (kind, result) {
        (AnswerKind::Yesno, QueryResult::Boolean(b)) => Some(Gold::YesNo(*b)),
        (AnswerKind::Numeric, QueryResult::Table(t)) => t.rows.first()?.first()?.as_ref()?.as_f64().map(Gold::Number),
        (AnswerKind::List, QueryResult::Table(t)) => Some(Gold::List(
            t.rows
                .iter()
                .filter_map(|r| r.first()?.as_ref())
                .map(|term| match term {
                    Term::Literal(l) => l.lexical(),
                    other => other.to_string(),
                })
                .collect(),
        )),
        _ => None,
    }
}

struct Candidate {
    template: &'static str,
    category: Category,
    kind: AnswerKind,
    question: String,
    query: Option<String>,
}

fn lit(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn plural(t: &str) -> String {
    if t.ends_with('s') || t.ends_with("sh") || t.ends_with("ch") || t.ends_with('x') {
        format!("{t}es")
    } else {
        format!("{t}s")
    }
}

/// Two significant digits.
fn round_threshold(v: f64) -> i64 {
    if v <= 0.0 {
        return 0;
    }
    let mag = 10f64.powi(v.log10().floor() as i32 - 1);
    ((v / mag).round() * mag) as i64
}

fn quantile(sorted: &[i64], q: f64) -> i64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

struct Facts {
    municipalities: Vec<String>,
    years: Vec<i32>,
    types: Vec<String>,
    /// Types measured by length rather than area.
    linear: BTreeSet<String>,
    /// (municipality, year, type) combinations with at least one feature.
    present: BTreeSet<(String, i32, String)>,
    area_quantiles: BTreeMap<String, Vec<i64>>,
}

fn facts(store: &Store) -> Facts {
    let mut f = Facts {
        municipalities: vec![],
        years: vec![],
        types: vec![],
        linear: BTreeSet::new(),
        present: BTreeSet::new(),
        area_quantiles: BTreeMap::new(),
    };
    let (mut ms, mut ys, mut ts) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    let mut has_area = BTreeSet::new();
    let mut areas: BTreeMap<String, Vec<i64>> = BTreeMap::new();
    for v in store.features() {
        ys.insert(v.year);
        ts.insert(v.feature_type.clone());
        if let Some(a) = v.area_sqm {
            has_area.insert(v.feature_type.clone());
            areas.entry(v.feature_type.clone()).or_default().push(a);
        }
        for m in &v.municipalities {
            ms.insert(m.clone());
            f.present.insert((m.clone(), v.year, v.feature_type.clone()));
        }
    }
    f.linear = ts.difference(&has_area).cloned().collect();
    for (t, mut a) in areas {
        a.sort();
        let qs: BTreeSet<i64> = [0.25, 0.5, 0.75].iter().map(|q| round_threshold(quantile(&a, *q) as f64)).collect();
        f.area_quantiles.insert(t, qs.into_iter().filter(|q| *q > 0).collect());
    }
    f.municipalities = ms.into_iter().collect();
    f.years = ys.into_iter().collect();
    f.types = ts.into_iter().collect();
    f
}

fn candidates(f: &Facts) -> Vec<Candidate> {
    let mut out = Vec::new();
    let mut push = |template, category, kind, question: String, query: Option<String>| {
        out.push(Candidate {
            template,
            category,
            kind,
            question,
            query,
        })
    };
    let measure = |t: &str| {
        if f.linear.contains(t) {
            ("length", "longest", prop::LENGTH_M, "meters")
        } else {
            ("area", "largest", prop::AREA_SQM, "square meters")
        }
    };
    for m in &f.municipalities {
        let ml = lit(m);
        for t in &f.types {
            let (tl, ts) = (lit(t), plural(t));
            let present_years: Vec<i32> = f.years.iter().copied().filter(|y| f.present.contains(&(m.clone(), *y, t.clone()))).collect();
            if !present_years.is_empty() {
                push(
                    "property-years",
                    Category::Property,
                    AnswerKind::List,
                    format!("In which years were there {ts} in {m}?"),
                    Some(format!(
                        "SELECT DISTINCT ?y WHERE {{ ?f cmo:featureType {tl} . ?f cmo:municipality {ml} . ?f cmo:year ?y }} ORDER BY ?y"
                    )),
                );
            }
            for (i, y) in f.years.iter().enumerate() {
                let base = format!("?f cmo:featureType {tl} . ?f cmo:municipality {ml} . ?f cmo:year {y}");
                let present = f.present.contains(&(m.clone(), *y, t.clone()));
                let (what, most, p, unit) = measure(t);
                push(
                    "property-exists",
                    Category::Property,
                    AnswerKind::Yesno,
                    format!("Were there {ts} in {m} in {y}?"),
                    Some(format!("ASK {{ {base} }}")),
                );
                if present {
                    push(
                        "aggregate-count",
                        Category::Aggregate,
                        AnswerKind::Numeric,
                        format!("How many {ts} were there in {m} in {y}?"),
                        Some(format!("SELECT (COUNT(?f) AS ?n) WHERE {{ {base} }}")),
                    );
                    push(
                        "aggregate-total",
                        Category::Aggregate,
                        AnswerKind::Numeric,
                        format!("What was the total {what} of {ts} in {m} in {y} in {unit}?"),
                        Some(format!("SELECT (SUM(?v) AS ?total) WHERE {{ {base} . ?f cmo:{p} ?v }}")),
                    );
                    push(
                        "superlative-max",
                        Category::Superlative,
                        AnswerKind::Numeric,
                        format!("What was the {what} of the {most} {t} in {m} in {y} in {unit}?"),
                        Some(format!("SELECT (MAX(?v) AS ?max) WHERE {{ {base} . ?f cmo:{p} ?v }}")),
                    );
                    for x in f.area_quantiles.get(t).into_iter().flatten() {
                        push(
                            "qualifier-exists",
                            Category::Qualifier,
                            AnswerKind::Yesno,
                            format!("Was there a {t} larger than {x} m\u{b2} in {m} in {y}?"),
                            Some(format!("ASK {{ {base} . ?f cmo:areaSqm ?a FILTER(?a > {x}) }}")),
                        );
                        push(
                            "qualifier-count",
                            Category::Qualifier,
                            AnswerKind::Numeric,
                            format!("How many {ts} were larger than {x} m\u{b2} in {m} in {y}?"),
                            Some(format!("SELECT (COUNT(?f) AS ?n) WHERE {{ {base} . ?f cmo:areaSqm ?a FILTER(?a > {x}) }}")),
                        );
                    }
                    if let Some(next) = f.years.get(i + 1) {
                        push(
                            "temporal-change",
                            Category::SpatialTemporal,
                            AnswerKind::Yesno,
                            format!("Did any {t} in {m} change between {y} and {next}?"),
                            Some(format!("ASK {{ {base} . ?f cmr:changedTo ?g }}")),
                        );
                    }
                    for t2 in f.types.iter().filter(|t2| *t2 != t) {
                        let t2l = lit(t2);
                        let other = format!("?g cmo:featureType {t2l} . ?g cmo:year {y}");
                        push(
                            "relationship-intersects",
                            Category::Relationship,
                            AnswerKind::Yesno,
                            format!("Did any {t} intersect a {t2} in {m} in {y}?"),
                            Some(format!("ASK {{ {base} . ?f cmr:intersects ?g . {other} }}")),
                        );
                        push(
                            "spatial-near-count",
                            Category::SpatialTemporal,
                            AnswerKind::Numeric,
                            format!("How many near relations were there between {ts} and {} in {m} in {y}?", plural(t2)),
                            Some(format!("SELECT (COUNT(?g) AS ?n) WHERE {{ {base} . ?f cmr:near ?g . {other} }}")),
                        );
                    }
                }
            }
        }
        for y in &f.years {
            push(
                "overview",
                Category::Overview,
                AnswerKind::Open,
                format!("Please provide an overview about {m} in {y}."),
                None,
            );
            push(
                "overview-water",
                Category::Overview,
                AnswerKind::Open,
                format!("How were the water bodies distributed in {m} in {y}?"),
                None,
            );
        }
    }
    out
}

const PARAPHRASE_SYSTEM: &str = "Rephrase the question without changing its meaning. Keep every name, number and year. \
Reply with the rephrased question only.";

fn paraphrase(gateway: &Gateway, question: &str, warnings: &mut Vec<String>) -> String {
    let req = ChatRequest::new("paraphrase", PARAPHRASE_SYSTEM, question);
    let reply = match complete(gateway.judge.as_ref(), &req) {
        Ok(r) => r.text.trim().to_string(),
        Err(e) => {
            warnings.push(format!("paraphrase failed: {e}"));
            return question.to_string();
        }
    };
    let tokens = regex::Regex::new(r"\d+|\p{Lu}\w+").expect("static pattern");
    let kept = tokens.find_iter(question).skip(1).all(|m| reply.contains(m.as_str()));
    if reply.is_empty() || reply.lines().count() > 1 || !kept {
        warnings.push(format!("paraphrase of '{question}' dropped names or numbers; kept original"));
        return question.to_string();
    }
    reply
}

/// Seeded benchmark from the store's own values. Gold answers come from
/// evaluating hand-written template queries; `gateway` only rephrases
/// question text.
pub fn generate_benchmark(store: &Store, counts: BenchCounts, seed: u64, gateway: Option<&Gateway>) -> Result<Benchmark, EvalError> {
    if !store.is_sealed() {
        return Err(EvalError::Input("store must be sealed".into()));
    }
    let f = facts(store);
    if f.municipalities.is_empty() || f.years.len() < 2 {
        return Err(EvalError::Input(format!(
            "benchmark needs at least one municipality and two years, found {} and {}",
            f.municipalities.len(),
            f.years.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<(AnswerKind, &'static str), Vec<(Candidate, Option<Gold>)>> = BTreeMap::new();
    for c in candidates(&f) {
        let gold = match &c.query {
            Some(q) => {
                let q = parse(q).map_err(|e| EvalError::Input(format!("template query: {e}")))?;
                let r = evaluate(&q, store).map_err(|e| EvalError::Input(e.to_string()))?.result;
                match gold_answer(c.kind, &r) {
                    Some(g) => Some(g),
                    None => continue,
                }
            }
            None => None,
        };
        groups.entry((c.kind, c.template)).or_default().push((c, gold));
    }
    for g in groups.values_mut() {
        g.shuffle(&mut rng);
    }
    let mut warnings = Vec::new();
    let mut items = Vec::new();
    let mut seen = BTreeSet::new();
    for (kind, want) in [
        (AnswerKind::Yesno, counts.yesno),
        (AnswerKind::Numeric, counts.numeric),
        (AnswerKind::List, counts.list),
        (AnswerKind::Open, counts.overview),
    ] {
        let mut pools: Vec<_> = groups
            .iter_mut()
            .filter(|((k, _), _)| *k == kind)
            .map(|(_, v)| std::mem::take(v).into_iter())
            .collect();
        let mut got = 0;
        while got < want {
            let mut progressed = false;
            for pool in pools.iter_mut() {
                if got == want {
                    break;
                }
                if let Some((c, gold)) = pool.next() {
                    progressed = true;
                    if seen.insert(c.question.clone()) {
                        items.push(BenchmarkItem {
                            id: String::new(),
                            question: c.question,
                            category: c.category,
                            answer_kind: c.kind,
                            gold_query: c.query,
                            gold_answer: gold,
                        });
                        got += 1;
                    }
                }
            }
            if !progressed {
                break;
            }
        }
        if got < want {
            warnings.push(format!("only {got} of {want} {kind:?} questions could be generated"));
        }
    }
    for (i, it) in items.iter_mut().enumerate() {
        it.id = format!("q{:03}", i + 1);
        if let Some(gw) = gateway {
            it.question = paraphrase(gw, &it.question, &mut warnings);
        }
    }
    Ok(Benchmark { items, warnings })
}

/// Scripted rules that answer every benchmark question like a perfect model:
/// the gold query for generation, ACCEPT for validation, the solution value
/// for the answer and "correct" for the SPARQL judge.
pub fn oracle_rules(items: &[BenchmarkItem]) -> Vec<ScriptRule> {
    let mut rules = Vec::new();
    for it in items {
        if let Some(q) = &it.gold_query {
            let pat = format!(r"^Question: {}\n", regex::escape(&it.question));
            rules.push(ScriptRule::new(&pat, q.clone(), Some("generate")).expect("escaped pattern"));
        }
    }
    rules.extend(answering_rules());
    rules
}

/// Rules for every role except query generation.
pub fn answering_rules() -> Vec<ScriptRule> {
    let r = |p: &str, resp: &str, tag: &str| ScriptRule::new(p, resp, Some(tag)).expect("static pattern");
    vec![
        r(".*", "ACCEPT", "validate"),
        r(r"Result: true", "Yes.", "answer"),
        r(r"Result: false", "No.", "answer"),
        r(r"Result \(1 rows\):\n\?\w+ = (-?[\d.]+)$", "$1", "answer"),
        r(r"Result \(0 rows\)", "There is no matching feature.", "answer"),
        r(r"Result \(\d+ rows\):\n\?\w+ = (\S+)", "$1 and others.", "answer"),
        r(".*", "correct", "sparql-judge"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(round_threshold(12345.0), 12000);
        assert_eq!(round_threshold(987.0), 990);
        assert_eq!(round_threshold(7.0), 7);
        assert_eq!(quantile(&[1, 2, 3, 4, 5], 0.5), 3);
    }
}
