use std::time::Duration;

use super::protocol::{AdapterRequest, AdapterResponse};
use super::Backend;

/// POSTs the request object as the body and expects a response object back.
pub struct HttpBackend {
    url: String,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>) -> Self {
        HttpBackend { url: url.into() }
    }
}

impl Backend for HttpBackend {
    fn exchange(&self, request: &AdapterRequest, timeout: Duration) -> Result<AdapterResponse, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        let mut response = agent
            .post(&self.url)
            .send_json(request)
            .map_err(|e| format!("POST {} failed: {e}", self.url))?;
        response
            .body_mut()
            .read_json::<AdapterResponse>()
            .map_err(|e| format!("malformed response from {}: {e}", self.url))
    }

    fn describe(&self) -> String {
        format!("http:{}", self.url)
    }
}
