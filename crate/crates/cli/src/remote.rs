//! HTTP oracle client: `POST /predict` with `{"text": …}`, answered by
//! `{"label": <int>}` and status 200. Any other status is a transport error.

use hardlabel::{HardLabelOracle, OracleError};
use serde::Deserialize;
use std::time::Duration;

#[derive(Deserialize)]
struct PredictResponse {
    label: i64,
}

pub struct RemoteOracle {
    endpoint: String,
    labels: usize,
    retries: u32,
    client: reqwest::blocking::Client,
}

impl RemoteOracle {
    /// `base` is the server root, e.g. `http://127.0.0.1:8000`; `labels` is
    /// the expected label count, used to validate responses.
    pub fn new(base: &str, labels: usize, timeout: Duration) -> Result<Self, OracleError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        Ok(RemoteOracle {
            endpoint: format!("{}/predict", base.trim_end_matches('/')),
            labels,
            retries: 2,
            client,
        })
    }

    fn predict_once(&self, text: &str) -> Result<usize, OracleError> {
        let response = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "text": text }))
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    OracleError::Timeout
                } else {
                    OracleError::Transport(e.to_string())
                }
            })?;
        let status = response.status();
        if status != reqwest::StatusCode::OK {
            return Err(OracleError::Transport(format!("status {status}")));
        }
        let body: PredictResponse = response
            .json()
            .map_err(|e| OracleError::Protocol(e.to_string()))?;
        if body.label < 0 || body.label as usize >= self.labels {
            return Err(OracleError::Protocol(format!(
                "label {} outside 0..{}",
                body.label, self.labels
            )));
        }
        Ok(body.label as usize)
    }
}

impl HardLabelOracle for RemoteOracle {
    fn predict_label(&self, text: &str) -> Result<usize, OracleError> {
        let mut last = None;
        for _ in 0..=self.retries {
            match self.predict_once(text) {
                Ok(label) => return Ok(label),
                // protocol violations are not transient; fail immediately
                Err(e @ OracleError::Protocol(_)) => return Err(e),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    fn label_count(&self) -> usize {
        self.labels
    }
}
