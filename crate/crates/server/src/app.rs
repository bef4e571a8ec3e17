use std::path::Path;

use chronomap::kgstore::Store;
use chronomap::llm::Gateway;
use chronomap::qa::{build_prompt, load_few_shot, PromptBundle, QaConfig, QaPipeline};

use crate::config::AppConfig;
use crate::error::CliError;

/// A sealed store with everything the QA pipelines need.
pub struct App {
    pub store: Store,
    pub bundle: PromptBundle,
    pub gateway: Gateway,
    pub qa: QaConfig,
}

pub fn load_store(path: &Path) -> Result<Store, CliError> {
    if !path.exists() {
        return Err(CliError::User(format!(
            "store {} not found; run `chronomap ingest` and `chronomap relations` first",
            path.display()
        )));
    }
    let mut s = Store::load(path).map_err(CliError::user)?;
    s.seal();
    Ok(s)
}

impl App {
    pub fn load(cfg: &AppConfig) -> Result<Self, CliError> {
        let store = load_store(&cfg.data.store)?;
        Self::with_store(cfg, store)
    }

    pub fn with_store(cfg: &AppConfig, store: Store) -> Result<Self, CliError> {
        let few = cfg
            .data
            .few_shot
            .as_deref()
            .ok_or_else(|| CliError::User("data.few_shot is required for question answering".into()))?;
        let bundle = build_prompt(&store, load_few_shot(few).map_err(CliError::user)?).map_err(CliError::user)?;
        Ok(Self {
            store,
            bundle,
            gateway: cfg.gateway()?,
            qa: cfg.qa.clone(),
        })
    }

    pub fn pipeline(&self) -> QaPipeline<'_> {
        QaPipeline::new(&self.store, &self.bundle, &self.gateway, &self.qa)
    }
}
