use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::Deserialize;

use super::{ChatClient, ChatRequest, ChatResponse, LlmError};

#[derive(Debug, Clone, Deserialize)]
struct RawRule {
    pattern: String,
    response: String,
    #[serde(default)]
    tag: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScriptRule {
    pub pattern: Regex,
    /// May reference capture groups as `$1` or `${name}`.
    pub response: String,
    /// Restricts the rule to requests with this tag.
    pub tag: Option<String>,
}

impl ScriptRule {
    /// Case-insensitive; `.` matches newlines.
    pub fn new(pattern: &str, response: impl Into<String>, tag: Option<&str>) -> Result<Self, LlmError> {
        let pattern = RegexBuilder::new(pattern)
            .case_insensitive(true)
            .dot_matches_new_line(true)
            .build()
            .map_err(|e| LlmError::InvalidRequest(format!("bad rule pattern: {e}")))?;
        Ok(Self {
            pattern,
            response: response.into(),
            tag: tag.map(str::to_string),
        })
    }
}

/// Answers with the first rule whose pattern matches the last user text.
#[derive(Debug, Clone, Default)]
pub struct ScriptedClient {
    rules: Vec<ScriptRule>,
}

impl ScriptedClient {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        Self { rules }
    }

    pub fn push(&mut self, rule: ScriptRule) {
        self.rules.push(rule);
    }

    pub fn rules(&self) -> &[ScriptRule] {
        &self.rules
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let raw: Vec<RawRule> = serde_json::from_str(text).map_err(|e| LlmError::Malformed(format!("rules file: {e}")))?;
        raw.into_iter()
            .map(|r| ScriptRule::new(&r.pattern, r.response, r.tag.as_deref()))
            .collect::<Result<_, _>>()
            .map(Self::new)
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl ChatClient for ScriptedClient {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let text = req.last_text();
        for rule in &self.rules {
            if rule.tag.as_deref().is_some_and(|t| t != req.tag) {
                continue;
            }
            if let Some(caps) = rule.pattern.captures(text) {
                let mut out = String::new();
                caps.expand(&rule.response, &mut out);
                return Ok(ChatResponse::stop(out));
            }
        }
        Err(LlmError::NoMatch { tag: req.tag.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_matching_rule_wins() {
        let c = ScriptedClient::from_json(
            r#"[
                {"pattern": "how many lakes.*1916", "response": "SELECT (COUNT(?f) AS ?n) WHERE { ?f cmo:year 1916 }", "tag": "generate"},
                {"pattern": "year (\\d+)", "response": "echo $1"},
                {"pattern": ".*", "response": "fallback"}
            ]"#,
        )
        .unwrap();
        let r = c.complete(&ChatRequest::new("generate", "", "How many LAKES were there in Bargen in 1916?")).unwrap();
        assert!(r.text.starts_with("SELECT (COUNT"));
        // tag filter skips the first rule
        let r = c.complete(&ChatRequest::new("answer", "", "how many lakes in 1916")).unwrap();
        assert_eq!(r.text, "fallback");
        let r = c.complete(&ChatRequest::new("answer", "", "in the year 1901")).unwrap();
        assert_eq!(r.text, "echo 1901");
    }

    #[test]
    fn no_match_and_purity() {
        let c = ScriptedClient::new(vec![ScriptRule::new("^yes$", "ok", None).unwrap()]);
        let req = ChatRequest::new("judge.sparql", "", "no");
        assert_eq!(c.complete(&req).unwrap_err(), LlmError::NoMatch { tag: "judge.sparql".into() });
        let req = ChatRequest::new("judge.sparql", "", "yes");
        assert_eq!(c.complete(&req).unwrap(), c.complete(&req).unwrap());
        assert!(ScriptedClient::from_json("[{\"pattern\": \"(\", \"response\": \"\"}]").is_err());
    }
}
