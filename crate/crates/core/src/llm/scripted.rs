use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use super::{estimate_tokens, ChatExchange, ChatProvider, LlmError, Usage};

/// Serves canned responses per role, in order. Usage is estimated from text
/// length and latency is zero, so runs are fully deterministic.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    script: Arc<BTreeMap<String, Vec<String>>>,
    cursor: Arc<Mutex<BTreeMap<String, usize>>>,
}

impl ScriptedProvider {
    pub fn new(script: BTreeMap<String, Vec<String>>) -> Self {
        ScriptedProvider {
            script: Arc::new(script),
            cursor: Arc::default(),
        }
    }

    /// Builds a script from `(role, response)` pairs in call order.
    pub fn from_pairs<R: Into<String>, S: Into<String>>(pairs: impl IntoIterator<Item = (R, S)>) -> Self {
        let mut script: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (role, response) in pairs {
            script.entry(role.into()).or_default().push(response.into());
        }
        Self::new(script)
    }

    /// Reads a `{role: [response, ...]}` JSON document.
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let err = |msg: String| LlmError::Transcript {
            path: path.display().to_string(),
            msg,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let script: BTreeMap<String, Vec<String>> =
            serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(Self::new(script))
    }

    /// Responses not yet served, per role.
    pub fn remaining(&self) -> BTreeMap<String, usize> {
        let cursor = self.cursor.lock().expect("script cursor poisoned");
        self.script
            .iter()
            .map(|(role, rs)| (role.clone(), rs.len() - cursor.get(role).copied().unwrap_or(0)))
            .collect()
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError> {
        let mut cursor = self.cursor.lock().expect("script cursor poisoned");
        let next = cursor.entry(role.to_string()).or_insert(0);
        let response = self
            .script
            .get(role)
            .and_then(|rs| rs.get(*next))
            .ok_or_else(|| LlmError::ScriptExhausted(role.to_string()))?
            .clone();
        *next += 1;
        Ok(ChatExchange {
            role: role.to_string(),
            prompt: prompt.to_string(),
            usage: Usage {
                input_tokens: estimate_tokens(prompt),
                output_tokens: estimate_tokens(&response),
            },
            response,
            latency_s: 0.0,
        })
    }

    fn session(&self) -> Box<dyn ChatProvider> {
        Box::new(ScriptedProvider {
            script: self.script.clone(),
            cursor: Arc::default(),
        })
    }
}
