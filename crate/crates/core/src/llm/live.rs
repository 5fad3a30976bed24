use std::time::{Duration, Instant};

use serde_json::{json, Value as Json};

use super::{ChatExchange, ChatProvider, LlmError, Usage};

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    /// Sampling temperature; `None` omits the field for models that reject it.
    pub temperature: Option<f64>,
    /// Retries after the first attempt on 5xx, 429 and transport errors.
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further retry.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl LiveConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        LiveConfig {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            temperature: Some(0.0),
            max_retries: 3,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(300),
        }
    }
}

/// Chat completions over HTTP.
#[derive(Debug, Clone)]
pub struct LiveProvider {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

enum Attempt {
    Done(Json),
    Retry(String),
    Fatal(String),
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Provider(e.to_string()))?;
        Ok(LiveProvider { config, client })
    }

    fn attempt(&self, body: &Json) -> Attempt {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let mut req = self.client.post(url).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Attempt::Fatal(format!("HTTP {status}: {}", text.chars().take(300).collect::<String>()));
        }
        match resp.json::<Json>() {
            Ok(j) => Attempt::Done(j),
            Err(e) => Attempt::Retry(format!("unreadable response body: {e}")),
        }
    }
}

fn parse_completion(j: &Json) -> Result<(String, Usage), LlmError> {
    let content = j
        .pointer("/choices/0/message/content")
        .and_then(Json::as_str)
        .ok_or_else(|| LlmError::Provider("response has no choices[0].message.content".into()))?;
    let usage = Usage {
        input_tokens: j.pointer("/usage/prompt_tokens").and_then(Json::as_u64).unwrap_or(0),
        output_tokens: j
            .pointer("/usage/completion_tokens")
            .and_then(Json::as_u64)
            .unwrap_or(0),
    };
    Ok((content.to_string(), usage))
}

impl ChatProvider for LiveProvider {
    fn complete(&self, role: &str, prompt: &str) -> Result<ChatExchange, LlmError> {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        let started = Instant::now();
        let mut delay = self.config.backoff;
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&body) {
                Attempt::Done(j) => {
                    let (response, usage) = parse_completion(&j)?;
                    return Ok(ChatExchange {
                        role: role.to_string(),
                        prompt: prompt.to_string(),
                        response,
                        usage,
                        latency_s: started.elapsed().as_secs_f64(),
                    });
                }
                Attempt::Fatal(msg) => return Err(LlmError::Provider(msg)),
                Attempt::Retry(msg) => last = msg,
            }
        }
        Err(LlmError::Provider(format!(
            "gave up after {} attempts: {last}",
            self.config.max_retries + 1
        )))
    }

    fn session(&self) -> Box<dyn ChatProvider> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// Serves one canned HTTP response per connection, in order.
    fn mock_server(responses: Vec<(u16, String)>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 4096];
                // Read headers, then the declared body length.
                loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    let text = String::from_utf8_lossy(&buf);
                    if let Some(end) = text.find("\r\n\r\n") {
                        let len = text[..end]
                            .lines()
                            .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                            .unwrap_or(0);
                        if buf.len() >= end + 4 + len {
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        format!("http://{addr}")
    }

    fn ok_body() -> String {
        json!({
            "choices": [{"message": {"role": "assistant", "content": "hello"}}],
            "usage": {"prompt_tokens": 12, "completion_tokens": 3}
        })
        .to_string()
    }

    fn config(url: String) -> LiveConfig {
        LiveConfig {
            backoff: Duration::from_millis(1),
            ..LiveConfig::new(url, "gpt-4o")
        }
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let url = mock_server(vec![
            (500, "{}".into()),
            (500, "{}".into()),
            (500, "{}".into()),
            (200, ok_body()),
        ]);
        let p = LiveProvider::new(config(url)).unwrap();
        let x = p.complete("planning", "hi").unwrap();
        assert_eq!(x.response, "hello");
        assert_eq!(x.usage, Usage { input_tokens: 12, output_tokens: 3 });
    }

    #[test]
    fn gives_up_after_four_attempts() {
        let url = mock_server(vec![(503, "{}".into()); 4]);
        let p = LiveProvider::new(config(url)).unwrap();
        assert!(matches!(p.complete("planning", "hi"), Err(LlmError::Provider(_))));
    }

    #[test]
    fn client_errors_are_not_retried() {
        let url = mock_server(vec![(400, "{\"error\": \"bad\"}".into())]);
        let p = LiveProvider::new(config(url)).unwrap();
        let err = p.complete("planning", "hi").unwrap_err().to_string();
        assert!(err.contains("400"), "{err}");
    }
}
