//! Minimal Overpass API client used to backfill tags for ways missing from
//! the local extract.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::Tags;
use crate::error::{Error, Result};

/// Environment variable that overrides the configured endpoint.
pub const OVERPASS_URL_ENV: &str = "CYCLETRAIL_OVERPASS_URL";

/// The node-to-edge lookup query for a set of way ids.
pub fn way_query(way_ids: &[i64]) -> String {
    let ids: Vec<String> = way_ids.iter().map(i64::to_string).collect();
    format!("[out:json];\nway(id:{});\nout meta;", ids.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverpassConfig {
    pub enabled: bool,
    pub endpoint: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub requests_per_minute: u32,
}

impl Default for OverpassConfig {
    fn default() -> Self {
        OverpassConfig {
            enabled: false,
            endpoint: "https://overpass-api.de/api/interpreter".into(),
            timeout_s: 30.0,
            max_retries: 2,
            requests_per_minute: 30,
        }
    }
}

impl OverpassConfig {
    /// Endpoint after applying the environment override.
    pub fn effective_endpoint(&self) -> String {
        std::env::var(OVERPASS_URL_ENV).ok().filter(|s| !s.is_empty()).unwrap_or_else(|| self.endpoint.clone())
    }
}

#[derive(Deserialize)]
struct Response {
    elements: Vec<Element>,
}

#[derive(Deserialize)]
struct Element {
    #[serde(rename = "type")]
    kind: String,
    id: i64,
    #[serde(default)]
    tags: Tags,
}

/// Blocking, rate-limited client. Requests are serialized through an
/// internal lock.
pub struct OverpassClient {
    endpoint: String,
    http: reqwest::blocking::Client,
    max_retries: u32,
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl OverpassClient {
    pub fn new(cfg: &OverpassConfig) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_s.max(0.001)))
            .build()
            .map_err(|e| Error::RemoteUnavailable(e.to_string()))?;
        let min_interval = if cfg.requests_per_minute == 0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(60.0 / f64::from(cfg.requests_per_minute))
        };
        Ok(OverpassClient {
            endpoint: cfg.effective_endpoint(),
            http,
            max_retries: cfg.max_retries,
            min_interval,
            last: Mutex::new(None),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Fetch raw tags for the given ways. Ways unknown to the server are
    /// simply absent from the result.
    pub fn fetch_way_tags(&self, way_ids: &[i64]) -> Result<BTreeMap<i64, Tags>> {
        if way_ids.is_empty() {
            return Ok(BTreeMap::new());
        }
        let query = way_query(way_ids);
        let mut last_err = None;
        for attempt in 0..=self.max_retries {
            self.throttle();
            debug!("overpass request (attempt {attempt}) for {} ways", way_ids.len());
            match self.http.post(&self.endpoint).form(&[("data", query.as_str())]).send() {
                Ok(resp) if resp.status().is_success() => {
                    let body = resp.bytes().map_err(|e| Error::RemoteUnavailable(e.to_string()))?;
                    return parse_way_tags(&body);
                }
                Ok(resp) if resp.status().is_server_error() || resp.status().as_u16() == 429 => {
                    last_err = Some(Error::RemoteRejected { code: resp.status().to_string(), message: "retryable".into() });
                }
                Ok(resp) => {
                    let code = resp.status().to_string();
                    let message = resp.text().unwrap_or_default();
                    return Err(Error::RemoteRejected { code, message });
                }
                Err(e) => last_err = Some(Error::RemoteUnavailable(e.to_string())),
            }
            warn!("overpass request failed: {:?}", last_err);
        }
        Err(last_err.unwrap_or_else(|| Error::RemoteUnavailable("no attempt made".into())))
    }

    fn throttle(&self) {
        let mut last = self.last.lock().expect("throttle lock");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

/// Extract `way id -> tags` from an Overpass JSON response.
pub fn parse_way_tags(body: &[u8]) -> Result<BTreeMap<i64, Tags>> {
    let resp: Response = serde_json::from_slice(body).map_err(|e| Error::ParseError(e.to_string()))?;
    Ok(resp.elements.into_iter().filter(|e| e.kind == "way").map(|e| (e.id, e.tags)).collect())
}
