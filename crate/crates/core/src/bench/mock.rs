use crate::agents::{extract_block, wrap_block, AgentRole};
use crate::domains::Instance;
use crate::llm::{estimate_tokens, ChatExchange, ChatProvider, LlmError, Usage};
use crate::value::canonical_json;

/// An Input Agent stand-in that reads the test query with the domain's
/// query parser and answers with the oracle representation. Only serves the
/// `input` role.
#[derive(Debug, Clone, Default)]
pub struct OracleInputAgent {
    /// Domain to parse queries as; `None` tries each known domain.
    pub domain: Option<String>,
}

impl OracleInputAgent {
    pub fn new(domain: impl Into<String>) -> Self {
        OracleInputAgent {
            domain: Some(domain.into()),
        }
    }

    fn parse(&self, query: &str) -> Result<Instance, LlmError> {
        let domains = match &self.domain {
            Some(d) => vec![d.as_str()],
            None => vec!["trip", "meeting"],
        };
        let mut last = String::new();
        for d in domains {
            match Instance::parse_query(d, query) {
                Ok(inst) => return Ok(inst),
                Err(e) => last = e.to_string(),
            }
        }
        Err(LlmError::Provider(format!("oracle input agent: {last}")))
    }
}

impl ChatProvider for OracleInputAgent {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError> {
        if role != AgentRole::Input.name() {
            return Err(LlmError::Provider(format!(
                "oracle input agent only serves the input role, not `{role}`"
            )));
        }
        let query = extract_block(prompt, "query")
            .map_err(|e| LlmError::Provider(format!("oracle input agent: {e}")))?
            .trim();
        let inst = self.parse(query)?;
        let params = canonical_json(&inst.to_representation().parameters_json());
        let response = wrap_block("structured_output", &params);
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
        Box::new(self.clone())
    }
}
