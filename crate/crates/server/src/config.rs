//! `config.toml` loading. Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chronomap::eval::{AnswerNormalization, BenchCounts};
use chronomap::ingest::IngestConfig;
use chronomap::llm::{
    ChatClient, FixtureSearch, Gateway, LiveClient, LiveConfig, LiveSearch, NoSearch, OfflineClient, Recorder, ReplayClient,
    ScriptedClient, SearchClient,
};
use chronomap::qa::QaConfig;
use chronomap::relations::RelationConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FeatureFile {
    pub path: PathBuf,
    pub year: i32,
    pub sheet: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    /// Triple dump written by `ingest` and `relations`, read by everything else.
    pub store: PathBuf,
    pub features: Vec<FeatureFile>,
    pub boundaries: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub tiles_dir: Option<PathBuf>,
    pub few_shot: Option<PathBuf>,
    pub scripted_rules: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub search_fixture: Option<PathBuf>,
    /// Relation provenance JSONL written by `relations`.
    pub provenance: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Scripted,
    Replay,
    Live,
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchBackend {
    None,
    Fixture,
    Live,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub generator: Backend,
    pub validator: Backend,
    pub composer: Backend,
    pub judge: Backend,
    pub search: SearchBackend,
    /// Append every chat exchange to this transcript.
    pub record: Option<PathBuf>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            generator: Backend::Offline,
            validator: Backend::Offline,
            composer: Backend::Offline,
            judge: Backend::Offline,
            search: SearchBackend::None,
            record: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub cors_origins: Vec<String>,
    pub request_timeout_secs: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            cors_origins: vec!["http://localhost:5173".into()],
            request_timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: u64,
    pub counts: BenchCounts,
    /// Generator name shown in the report table.
    pub label: String,
    pub normalization: AnswerNormalization,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            counts: BenchCounts::default(),
            label: "generator".into(),
            normalization: AnswerNormalization::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub data: DataPaths,
    pub ingest: IngestConfig,
    pub relations: RelationConfig,
    pub qa: QaConfig,
    pub gateway: GatewayConfig,
    pub server: ServerConfig,
    pub bench: BenchConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() && !p.as_os_str().is_empty() {
        *p = base.join(&*p);
    }
}

fn resolve_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        resolve(base, p);
    }
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::User(format!("config {}: {e}", path.display())))?;
        let mut cfg: AppConfig = toml::from_str(&text).map_err(|e| CliError::User(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let d = &mut cfg.data;
        resolve(base, &mut d.store);
        for f in &mut d.features {
            resolve(base, &mut f.path);
        }
        for p in [
            &mut d.boundaries,
            &mut d.gazetteer,
            &mut d.tiles_dir,
            &mut d.few_shot,
            &mut d.scripted_rules,
            &mut d.transcript,
            &mut d.search_fixture,
            &mut d.provenance,
        ] {
            resolve_opt(base, p);
        }
        resolve_opt(base, &mut cfg.gateway.record);
        if cfg.data.tiles_dir.is_some() {
            cfg.qa.tiles_dir = cfg.data.tiles_dir.clone();
        }
        cfg.check()?;
        Ok(cfg)
    }

    /// Every configured input path must exist and every role must resolve.
    pub fn check(&self) -> Result<(), CliError> {
        let d = &self.data;
        let mut inputs: Vec<&Path> = d.features.iter().map(|f| f.path.as_path()).collect();
        inputs.extend(
            [&d.boundaries, &d.gazetteer, &d.tiles_dir, &d.few_shot, &d.scripted_rules, &d.search_fixture]
                .into_iter()
                .flatten()
                .map(PathBuf::as_path),
        );
        let roles = self.roles();
        if roles.contains(&Backend::Replay) {
            inputs.push(d.transcript.as_deref().ok_or_else(|| CliError::User("replay backend needs data.transcript".into()))?);
        }
        if roles.contains(&Backend::Scripted) && d.scripted_rules.is_none() {
            return Err(CliError::User("scripted backend needs data.scripted_rules".into()));
        }
        if self.gateway.search == SearchBackend::Fixture && d.search_fixture.is_none() {
            return Err(CliError::User("fixture search needs data.search_fixture".into()));
        }
        for p in inputs {
            if !p.exists() {
                return Err(CliError::User(format!("configured path does not exist: {}", p.display())));
            }
        }
        self.relations.validate().map_err(|e| CliError::User(e.to_string()))?;
        Ok(())
    }

    fn roles(&self) -> [Backend; 4] {
        let g = &self.gateway;
        [g.generator, g.validator, g.composer, g.judge]
    }

    /// Points every chat role at one backend.
    pub fn override_backend(&mut self, b: Backend) -> Result<(), CliError> {
        let g = &mut self.gateway;
        (g.generator, g.validator, g.composer, g.judge) = (b, b, b, b);
        self.check()
    }

    pub fn gateway(&self) -> Result<Gateway, CliError> {
        let d = &self.data;
        let user = |e: chronomap::llm::LlmError| CliError::User(e.to_string());
        let mut scripted: Option<Arc<dyn ChatClient>> = None;
        let mut replay: Option<Arc<dyn ChatClient>> = None;
        let mut live: Option<Arc<dyn ChatClient>> = None;
        let mut client = |b: Backend| -> Result<Arc<dyn ChatClient>, CliError> {
            Ok(match b {
                Backend::Offline => Arc::new(OfflineClient),
                Backend::Scripted => match &scripted {
                    Some(c) => c.clone(),
                    None => {
                        let path = d.scripted_rules.as_deref().expect("checked");
                        let c: Arc<dyn ChatClient> = Arc::new(ScriptedClient::from_file(path).map_err(user)?);
                        scripted = Some(c.clone());
                        c
                    }
                },
                Backend::Replay => match &replay {
                    Some(c) => c.clone(),
                    None => {
                        let path = d.transcript.as_deref().expect("checked");
                        let c: Arc<dyn ChatClient> = Arc::new(ReplayClient::from_file(path).map_err(user)?);
                        replay = Some(c.clone());
                        c
                    }
                },
                Backend::Live => match &live {
                    Some(c) => c.clone(),
                    None => {
                        let c: Arc<dyn ChatClient> = Arc::new(LiveClient::new(LiveConfig::from_env().map_err(user)?));
                        live = Some(c.clone());
                        c
                    }
                },
            })
        };
        let g = &self.gateway;
        let mut roles = [client(g.generator)?, client(g.validator)?, client(g.composer)?, client(g.judge)?];
        if let Some(path) = &g.record {
            let first = Recorder::new(roles[0].clone(), path).map_err(user)?;
            for r in roles.iter_mut().skip(1) {
                *r = Arc::new(first.wrap(r.clone()));
            }
            roles[0] = Arc::new(first);
        }
        let [generator, validator, composer, judge] = roles;
        let search: Arc<dyn SearchClient> = match g.search {
            SearchBackend::None => Arc::new(NoSearch),
            SearchBackend::Fixture => Arc::new(FixtureSearch::from_file(d.search_fixture.as_deref().expect("checked")).map_err(user)?),
            SearchBackend::Live => Arc::new(LiveSearch::from_env().map_err(user)?),
        };
        Ok(Gateway {
            generator,
            validator,
            composer,
            judge,
            search,
        })
    }
}
