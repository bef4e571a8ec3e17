use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::LlmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub title: String,
    pub url: String,
    pub snippet: String,
}

pub trait SearchClient: Send + Sync {
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchResult>, LlmError>;
}

/// Degrades failures to an empty list, recording a warning.
pub fn search_or_empty(client: &dyn SearchClient, query: &str, k: usize, warnings: &mut Vec<String>) -> Vec<SearchResult> {
    if k == 0 {
        return vec![];
    }
    match client.search(query, k) {
        Ok(mut r) => {
            r.truncate(k);
            r
        }
        Err(e) => {
            warnings.push(format!("search failed: {e}"));
            vec![]
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct NoSearch;

impl SearchClient for NoSearch {
    fn search(&self, _: &str, _: usize) -> Result<Vec<SearchResult>, LlmError> {
        Ok(vec![])
    }
}

/// Canned results keyed by a case-insensitive query substring; the first
/// matching key in sorted order wins.
#[derive(Debug, Clone, Default)]
pub struct FixtureSearch {
    entries: BTreeMap<String, Vec<SearchResult>>,
}

impl FixtureSearch {
    pub fn new(entries: BTreeMap<String, Vec<SearchResult>>) -> Result<Self, LlmError> {
        for r in entries.values().flatten() {
            url::Url::parse(&r.url).map_err(|e| LlmError::Malformed(format!("search fixture url {}: {e}", r.url)))?;
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        let entries = serde_json::from_str(&text).map_err(|e| LlmError::Malformed(format!("search fixture: {e}")))?;
        Self::new(entries)
    }
}

impl SearchClient for FixtureSearch {
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchResult>, LlmError> {
        let q = query.to_lowercase();
        Ok(self
            .entries
            .iter()
            .find(|(key, _)| q.contains(&key.to_lowercase()))
            .map(|(_, v)| v.iter().take(k).cloned().collect())
            .unwrap_or_default())
    }
}

/// Web search API taking `{api_key, query, max_results}` and answering with
/// `{results: [{title, url, content}]}`.
pub struct LiveSearch {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
}

impl LiveSearch {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(30))).build().into();
        Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            agent,
        }
    }

    /// `SEARCH_API_KEY`, and `SEARCH_BASE_URL` if set.
    pub fn from_env() -> Result<Self, LlmError> {
        let key = std::env::var("SEARCH_API_KEY").map_err(|_| LlmError::InvalidRequest("SEARCH_API_KEY is not set".into()))?;
        let endpoint = std::env::var("SEARCH_BASE_URL").unwrap_or_else(|_| "https://api.tavily.com/search".into());
        Ok(Self::new(endpoint, key))
    }
}

impl SearchClient for LiveSearch {
    fn search(&self, query: &str, k: usize) -> Result<Vec<SearchResult>, LlmError> {
        let body: Value = self
            .agent
            .post(&self.endpoint)
            .send_json(json!({ "api_key": self.api_key, "query": query, "max_results": k }))
            .map_err(|e| LlmError::Transport(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let results = body.get("results").and_then(Value::as_array).cloned().unwrap_or_default();
        Ok(results
            .iter()
            .filter_map(|r| {
                let s = |k: &str| r.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
                let url = s("url");
                url::Url::parse(&url).ok()?;
                Some(SearchResult {
                    title: s("title"),
                    url,
                    snippet: s("content"),
                })
            })
            .take(k)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> FixtureSearch {
        let r = |t: &str| SearchResult {
            title: t.into(),
            url: format!("https://example.org/{t}"),
            snippet: format!("about {t}"),
        };
        FixtureSearch::new(BTreeMap::from([("Aarberg".to_string(), vec![r("a"), r("b")])])).unwrap()
    }

    #[test]
    fn fixture_lookup() {
        let f = fixture();
        assert_eq!(f.search("overview of aarberg in 1901", 5).unwrap().len(), 2);
        assert!(f.search("Lyss", 5).unwrap().is_empty());
        assert_eq!(f.search("Aarberg", 1).unwrap().len(), 1);
    }

    #[test]
    fn failures_degrade() {
        struct Down;
        impl SearchClient for Down {
            fn search(&self, _: &str, _: usize) -> Result<Vec<SearchResult>, LlmError> {
                Err(LlmError::Transport("down".into()))
            }
        }
        let mut w = vec![];
        assert!(search_or_empty(&Down, "x", 3, &mut w).is_empty());
        assert_eq!(w.len(), 1);
        let bad = BTreeMap::from([("x".to_string(), vec![SearchResult { title: "".into(), url: "not a url".into(), snippet: "".into() }])]);
        assert!(FixtureSearch::new(bad).is_err());
    }
}
