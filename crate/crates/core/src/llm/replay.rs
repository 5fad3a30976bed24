use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatExchange, ChatProvider, LlmError, Usage};

pub fn prompt_sha256(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// One line of a `.transcript.jsonl` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub role: String,
    pub prompt_sha256: String,
    pub prompt: String,
    pub response: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_s: f64,
}

impl TranscriptRecord {
    pub fn from_exchange(x: &ChatExchange) -> Self {
        TranscriptRecord {
            role: x.role.clone(),
            prompt_sha256: prompt_sha256(&x.prompt),
            prompt: x.prompt.clone(),
            response: x.response.clone(),
            input_tokens: x.usage.input_tokens,
            output_tokens: x.usage.output_tokens,
            latency_s: x.latency_s,
        }
    }

    pub fn to_exchange(&self) -> ChatExchange {
        ChatExchange {
            role: self.role.clone(),
            prompt: self.prompt.clone(),
            response: self.response.clone(),
            usage: Usage {
                input_tokens: self.input_tokens,
                output_tokens: self.output_tokens,
            },
            latency_s: self.latency_s,
        }
    }
}

/// Immutable recorded exchanges, shared by replay sessions.
#[derive(Debug, Clone, Default)]
pub struct ReplayStore {
    records: Arc<Vec<TranscriptRecord>>,
}

impl ReplayStore {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        ReplayStore {
            records: Arc::new(records),
        }
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let err = |msg: String| LlmError::Transcript {
            path: path.display().to_string(),
            msg,
        };
        let file = File::open(path).map_err(|e| err(e.to_string()))?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TranscriptRecord =
                serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
            records.push(rec);
        }
        Ok(ReplayStore::new(records))
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    /// A provider with a fresh cursor over this store.
    pub fn provider(&self) -> ReplayProvider {
        ReplayProvider {
            store: self.clone(),
            consumed: Mutex::new(vec![false; self.records.len()]),
        }
    }
}

/// Answers each request with the first unconsumed record of the same role
/// and prompt hash, in recorded order.
#[derive(Debug)]
pub struct ReplayProvider {
    store: ReplayStore,
    consumed: Mutex<Vec<bool>>,
}

impl ChatProvider for ReplayProvider {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError> {
        let sha256 = prompt_sha256(prompt);
        let mut consumed = self.consumed.lock().expect("replay cursor poisoned");
        let hit = self
            .store
            .records
            .iter()
            .enumerate()
            .position(|(i, r)| !consumed[i] && r.role == role && r.prompt_sha256 == sha256);
        match hit {
            Some(i) => {
                consumed[i] = true;
                Ok(self.store.records[i].to_exchange())
            }
            None => Err(LlmError::ReplayMiss {
                role: role.to_string(),
                sha256,
            }),
        }
    }

    fn session(&self) -> Box<dyn ChatProvider> {
        Box::new(self.store.provider())
    }
}

/// Forwards to an inner provider and appends every exchange to a transcript.
pub struct RecordingProvider<P> {
    inner: P,
    path: PathBuf,
    file: Arc<Mutex<File>>,
}

impl<P: ChatProvider> RecordingProvider<P> {
    /// Opens `path` for appending; existing records are kept.
    pub fn new(inner: P, path: &Path) -> Result<Self, LlmError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| LlmError::Transcript {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Transcript {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
        Ok(RecordingProvider {
            inner,
            path: path.to_path_buf(),
            file: Arc::new(Mutex::new(file)),
        })
    }
}

impl<P: ChatProvider> ChatProvider for RecordingProvider<P> {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError> {
        let x = self.inner.complete(role, prompt)?;
        let mut line = serde_json::to_string(&TranscriptRecord::from_exchange(&x))
            .expect("transcript records serialize");
        line.push('\n');
        let mut file = self.file.lock().expect("transcript file poisoned");
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| LlmError::Transcript {
                path: self.path.display().to_string(),
                msg: e.to_string(),
            })?;
        Ok(x)
    }

    fn session(&self) -> Box<dyn ChatProvider> {
        Box::new(RecordingProvider {
            inner: self.inner.session(),
            path: self.path.clone(),
            file: self.file.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(role: &str, prompt: &str, response: &str) -> TranscriptRecord {
        TranscriptRecord {
            role: role.into(),
            prompt_sha256: prompt_sha256(prompt),
            prompt: prompt.into(),
            response: response.into(),
            input_tokens: 3,
            output_tokens: 1,
            latency_s: 0.5,
        }
    }

    #[test]
    fn replays_in_recorded_order() {
        let store = ReplayStore::new(vec![
            rec("a", "p", "first"),
            rec("b", "p", "other role"),
            rec("a", "p", "second"),
        ]);
        let p = store.provider();
        assert_eq!(p.complete("a", "p").unwrap().response, "first");
        assert_eq!(p.complete("a", "p").unwrap().response, "second");
        assert!(matches!(p.complete("a", "p"), Err(LlmError::ReplayMiss { .. })));
        assert_eq!(p.complete("b", "p").unwrap().response, "other role");
        // A new session starts from the beginning.
        assert_eq!(p.session().complete("a", "p").unwrap().response, "first");
    }

    #[test]
    fn empty_prompt_misses() {
        let p = ReplayStore::new(vec![rec("a", "p", "x")]).provider();
        assert!(matches!(p.complete("a", ""), Err(LlmError::ReplayMiss { .. })));
    }
}
