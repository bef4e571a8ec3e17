//! SPARQL 1.1 Query Results JSON.

use serde_json::{json, Map, Value};

use super::eval::QueryResult;
use crate::kgstore::vocab::{GEO_WKT_LITERAL, XSD_STRING};
use crate::kgstore::{Store, Term};

pub fn term_json(t: &Term, store: &Store) -> Value {
    match t {
        Term::Iri(i) => json!({ "type": "uri", "value": &**i }),
        Term::Literal(l) if l.datatype() == XSD_STRING => json!({ "type": "literal", "value": l.lexical() }),
        Term::Literal(l) => json!({ "type": "literal", "value": l.lexical(), "datatype": l.datatype() }),
        Term::Geometry(h) => json!({ "type": "literal", "value": store.wkt(*h), "datatype": GEO_WKT_LITERAL }),
    }
}

pub fn to_sparql_json(result: &QueryResult, store: &Store) -> Value {
    match result {
        QueryResult::Boolean(b) => json!({ "head": {}, "boolean": b }),
        QueryResult::Table(t) => {
            let bindings: Vec<Value> = t
                .rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (v, cell) in t.vars.iter().zip(row) {
                        if let Some(term) = cell {
                            m.insert(v.clone(), term_json(term, store));
                        }
                    }
                    Value::Object(m)
                })
                .collect();
            json!({ "head": { "vars": t.vars }, "results": { "bindings": bindings } })
        }
    }
}

/// Checks a document against the SPARQL 1.1 JSON results shape.
pub fn validate_sparql_json(doc: &Value) -> Result<(), String> {
    let obj = doc.as_object().ok_or("document is not an object")?;
    let head = obj.get("head").and_then(Value::as_object).ok_or("missing head object")?;
    if let Some(b) = obj.get("boolean") {
        if !b.is_boolean() {
            return Err("boolean must be true or false".into());
        }
        if obj.contains_key("results") {
            return Err("boolean result must not carry results".into());
        }
        return Ok(());
    }
    let vars: Vec<&str> = head
        .get("vars")
        .and_then(Value::as_array)
        .ok_or("head.vars must be an array")?
        .iter()
        .map(|v| v.as_str().ok_or("head.vars entries must be strings"))
        .collect::<Result<_, _>>()?;
    let bindings = obj
        .get("results")
        .and_then(|r| r.get("bindings"))
        .and_then(Value::as_array)
        .ok_or("results.bindings must be an array")?;
    for (i, b) in bindings.iter().enumerate() {
        let b = b.as_object().ok_or(format!("binding {i} is not an object"))?;
        for (var, term) in b {
            if !vars.contains(&var.as_str()) {
                return Err(format!("binding {i} uses undeclared variable {var}"));
            }
            let kind = term.get("type").and_then(Value::as_str);
            if !matches!(kind, Some("uri" | "literal" | "bnode")) {
                return Err(format!("binding {i}.{var} has invalid type {kind:?}"));
            }
            if !term.get("value").is_some_and(Value::is_string) {
                return Err(format!("binding {i}.{var} lacks a string value"));
            }
            for k in ["datatype", "xml:lang"] {
                if term.get(k).is_some_and(|v| !v.is_string()) {
                    return Err(format!("binding {i}.{var}.{k} must be a string"));
                }
            }
            if kind != Some("literal") && (term.get("datatype").is_some() || term.get("xml:lang").is_some()) {
                return Err(format!("binding {i}.{var}: only literals carry datatype or language"));
            }
        }
    }
    Ok(())
}
