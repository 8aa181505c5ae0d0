use std::sync::Arc;
use std::time::Duration;

use crate::service::{Endpoint, Reply, Service};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transport failure: {0}")]
pub struct TransportError(pub String);

/// Delivers one POST to a rule endpoint.
pub trait Transport {
    fn send(&mut self, endpoint: Endpoint, version: &str, body: &str) -> Result<Reply, TransportError>;
}

/// Calls the service directly, without sockets.
#[derive(Debug, Clone)]
pub struct InProcess(pub Arc<Service>);

impl Transport for InProcess {
    fn send(&mut self, endpoint: Endpoint, version: &str, body: &str) -> Result<Reply, TransportError> {
        Ok(self.0.post(endpoint, version, body.as_bytes()))
    }
}

/// Talks HTTP/1.1 to a running service.
pub struct Http {
    agent: ureq::Agent,
    base_url: String,
}

impl Http {
    pub fn new(base_url: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
            base_url: base_url.into().trim_end_matches('/').to_string(),
        }
    }
}

impl Transport for Http {
    fn send(&mut self, endpoint: Endpoint, version: &str, body: &str) -> Result<Reply, TransportError> {
        let url = format!("{}{}", self.base_url, endpoint.path(version));
        let mut response = self
            .agent
            .post(&url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| TransportError(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(Reply { status, body })
    }
}
