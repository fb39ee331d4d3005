use std::time::Duration;

use narralive_core::bundle::BundleManifest;
use serde::de::DeserializeOwned;
use ureq::Agent;

use crate::store::{CatalogEntry, VersionInfo};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("version conflict: {0}")]
    VersionConflict(String),
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("unexpected status {status}: {message}")]
    Status { status: u16, message: String },
    #[error("http: {0}")]
    Http(#[from] ureq::Error),
    #[error("bad response body: {0}")]
    Body(#[from] serde_json::Error),
}

/// Blocking client for the catalog HTTP API.
#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    agent: Agent,
}

const MAX_RESPONSE_BYTES: u64 = 1 << 30;

impl Client {
    pub fn new(base_url: &str) -> Client {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Client {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/api/experiences{path}", self.base)
    }

    fn finish(resp: ureq::http::Response<ureq::Body>) -> Result<(u16, Vec<u8>), ClientError> {
        let status = resp.status().as_u16();
        let body = resp
            .into_body()
            .into_with_config()
            .limit(MAX_RESPONSE_BYTES)
            .read_to_vec()?;
        Ok((status, body))
    }

    fn error(status: u16, body: &[u8]) -> ClientError {
        let message = serde_json::from_slice::<serde_json::Value>(body)
            .ok()
            .and_then(|v| v.get("message").and_then(|m| m.as_str()).map(str::to_owned))
            .unwrap_or_else(|| String::from_utf8_lossy(body).into_owned());
        match status {
            404 => ClientError::NotFound(message),
            409 => ClientError::VersionConflict(message),
            422 => ClientError::InvalidBundle(message),
            _ => ClientError::Status { status, message },
        }
    }

    fn get_bytes(&self, path: &str) -> Result<Vec<u8>, ClientError> {
        let (status, body) = Self::finish(self.agent.get(&self.url(path)).call()?)?;
        if status != 200 {
            return Err(Self::error(status, &body));
        }
        Ok(body)
    }

    fn get_json<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Ok(serde_json::from_slice(&self.get_bytes(path)?)?)
    }

    pub fn list(&self) -> Result<Vec<CatalogEntry>, ClientError> {
        self.get_json("")
    }

    pub fn manifest(&self, story_id: &str) -> Result<BundleManifest, ClientError> {
        self.get_json(&format!("/{story_id}"))
    }

    pub fn version(&self, story_id: &str) -> Result<VersionInfo, ClientError> {
        self.get_json(&format!("/{story_id}/version"))
    }

    pub fn bundle(&self, story_id: &str, version: Option<u64>) -> Result<Vec<u8>, ClientError> {
        match version {
            Some(v) => self.get_bytes(&format!("/{story_id}/bundle?version={v}")),
            None => self.get_bytes(&format!("/{story_id}/bundle")),
        }
    }

    pub fn asset(&self, story_id: &str, path: &str) -> Result<Vec<u8>, ClientError> {
        self.get_bytes(&format!("/{story_id}/assets/{path}"))
    }

    pub fn publish(&self, bundle: &[u8]) -> Result<CatalogEntry, ClientError> {
        let resp = self
            .agent
            .post(&self.url(""))
            .header("content-type", "application/zip")
            .send(bundle)?;
        let (status, body) = Self::finish(resp)?;
        if status != 201 {
            return Err(Self::error(status, &body));
        }
        Ok(serde_json::from_slice(&body)?)
    }
}
