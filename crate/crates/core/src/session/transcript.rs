//! JSON-lines log of a session.

use serde::{Deserialize, Serialize};

use super::InputMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TranscriptEvent {
    Start { mode: InputMode, instruction: String },
    Override { index: usize, tag: String },
    Chunk { index: usize, offset: usize, bytes: usize },
    State { from: String, to: String, offset: usize },
    ProviderCall {
        pause: usize,
        layer_w: f64,
        layer_h: f64,
        bucket: String,
        width: u32,
        height: u32,
        description_tag: String,
        context_bytes: usize,
    },
    Asset { pause: usize, asset_id: String },
    DocClosed { offset: usize },
    Done { layers: usize, assets: usize },
    Failed { kind: String, offset: Option<usize>, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub events: Vec<TranscriptEvent>,
}

impl Transcript {
    pub fn push(&mut self, e: TranscriptEvent) {
        self.events.push(e);
    }

    /// One JSON object per line, newline-terminated.
    pub fn to_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
            .collect()
    }

    pub fn from_jsonl(s: &str) -> Result<Self, serde_json::Error> {
        let events = s.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(Self { events })
    }

    pub fn provider_calls(&self) -> impl Iterator<Item = &TranscriptEvent> {
        self.events.iter().filter(|e| matches!(e, TranscriptEvent::ProviderCall { .. }))
    }
}
