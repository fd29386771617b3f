use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use super::Caption;

pub const REPHRASE_TIMEOUT_SECS: u64 = 30;

const PROMPT_HEAD: &str = "I have a song for which the caption is the following:";
const PROMPT_TAIL: &str = "I have made some changes to the audio file which are optionally described towards the end of the caption. Can you rephrase the caption more naturally in a single paragraph using all the musical terms provided above? You should generate only the caption and nothing else. Do not use the word modification in your generation. The length of the new caption should be no more than eight sentences.";

/// The instruction sent to a rephrasing service for `caption`.
pub fn rephrase_prompt(caption: &str) -> String {
    format!("{PROMPT_HEAD}\n{caption}\n{PROMPT_TAIL}")
}

/// A text rewriting backend.
pub trait Rephraser: Send + Sync {
    /// Rewrite `caption`; errors are reported as text.
    fn rephrase(&self, caption: &str) -> std::result::Result<String, String>;
}

/// Returns the caption unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityRephraser;

impl Rephraser for IdentityRephraser {
    fn rephrase(&self, caption: &str) -> std::result::Result<String, String> {
        Ok(caption.to_string())
    }
}

/// JSON-over-HTTP rephrasing client.
///
/// Request: `{"caption": ..., "instruction": ...}`. Response: `{"caption": ...}`.
#[derive(Debug, Clone)]
pub struct HttpRephraser {
    endpoint: String,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct RephraseRequest<'a> {
    caption: &'a str,
    instruction: String,
}

#[derive(Deserialize)]
struct RephraseResponse {
    caption: String,
}

impl HttpRephraser {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self::with_timeout(endpoint, Duration::from_secs(REPHRASE_TIMEOUT_SECS))
    }

    pub fn with_timeout(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Rephraser for HttpRephraser {
    fn rephrase(&self, caption: &str) -> std::result::Result<String, String> {
        let body = RephraseRequest {
            caption,
            instruction: rephrase_prompt(caption),
        };
        let reply: RephraseResponse = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| e.to_string())?;
        let text = reply.caption.split_whitespace().collect::<Vec<_>>().join(" ");
        if text.is_empty() {
            return Err("empty caption in response".into());
        }
        Ok(text)
    }
}

/// Rephrased caption and the warning raised if the service failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RephraseOutcome {
    pub caption: Caption,
    pub warning: Option<String>,
}

/// Rephrase through `client`, falling back to the input on failure. The
/// result is a single paragraph split back into untagged sentences.
pub fn rephrase_external(caption: &Caption, client: &dyn Rephraser) -> RephraseOutcome {
    match client.rephrase(&caption.text()) {
        Ok(text) => RephraseOutcome {
            caption: Caption::from_text(&text),
            warning: None,
        },
        Err(e) => {
            let msg = format!("rephrasing failed, keeping original caption: {e}");
            warn!("{msg}");
            RephraseOutcome {
                caption: caption.clone(),
                warning: Some(msg),
            }
        }
    }
}
