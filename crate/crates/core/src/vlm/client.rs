//! Live and mock agent clients.
//!
//! Both implement [`VlmClient`] and push every raw response through
//! [`parse_answer`], so parse behaviour is identical on either path. The
//! live client speaks a chat-completion style HTTP protocol with bounded
//! retries; the mock produces deterministic answers from the payload and a
//! per-trial seed.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{build_prompt, parse_answer, render_text, serialize_answer};
use super::{AgentAnswer, QueryPayload, VlmError};
use crate::rng::{mix_seed, seeded_rng};

/// Connection settings. The API key is read from the environment variable
/// named here; it is never passed directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub api_key_env_var_name: String,
    pub timeout_s: f64,
    pub max_in_flight: usize,
    pub retries: u32,
    /// Consumed by the mock client only.
    pub seed: u64,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model_name: "local-vlm".into(),
            api_key_env_var_name: "GAZEKIT_API_KEY".into(),
            timeout_s: 30.0,
            max_in_flight: 4,
            retries: 2,
            seed: 0,
        }
    }
}

impl ClientConfig {
    pub fn check(&self) -> Result<(), VlmError> {
        let ok = self.max_in_flight >= 1
            && self.timeout_s.is_finite()
            && self.timeout_s > 0.0
            && !self.endpoint_url.is_empty()
            && !self.model_name.is_empty()
            && !self.api_key_env_var_name.is_empty();
        if ok {
            Ok(())
        } else {
            Err(VlmError::InvalidConfig {
                reason: format!("{self:?}"),
            })
        }
    }
}

/// A queryable agent. Implementations must be shareable across worker
/// threads.
pub trait VlmClient: Send + Sync {
    /// Runs one query. `trial_seed` only affects stochastic mock
    /// behaviour; the live client ignores it.
    fn query(&self, payload: &QueryPayload, trial_seed: u64) -> Result<AgentAnswer, VlmError>;

    /// Stable one-line description recorded in result metadata.
    fn describe(&self) -> String;
}

/// Counting semaphore bounding in-flight requests.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut count = self.permits.lock().unwrap();
        while *count == 0 {
            count = self.available.wait(count).unwrap();
        }
        *count -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.permits.lock().unwrap() += 1;
        self.0.available.notify_one();
    }
}

/// Deterministic answer policies for the mock agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockStrategy {
    /// Answers with the most recent prior fixation; with no context,
    /// falls back to the first visible object.
    EchoPreviousFixation,
    /// Picks uniformly among the visible objects.
    UniformRandom,
}

impl MockStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            MockStrategy::EchoPreviousFixation => "echo-prev",
            MockStrategy::UniformRandom => "random",
        }
    }
}

impl std::str::FromStr for MockStrategy {
    type Err = VlmError;

    fn from_str(s: &str) -> Result<Self, VlmError> {
        match s {
            "echo-prev" => Ok(MockStrategy::EchoPreviousFixation),
            "random" => Ok(MockStrategy::UniformRandom),
            other => Err(VlmError::InvalidConfig {
                reason: format!("unknown mock strategy {other:?}"),
            }),
        }
    }
}

/// In-process stand-in for a live agent.
///
/// Garbage injection and answer choice draw from separate seed streams, so
/// changing `garbage_rate` never changes which answer a surviving trial
/// gets.
pub struct MockClient {
    strategy: MockStrategy,
    garbage_rate: f64,
    seed: u64,
}

const GARBAGE_STREAM: u64 = 0xA;
const ANSWER_STREAM: u64 = 0xB;

impl MockClient {
    pub fn new(strategy: MockStrategy, garbage_rate: f64, seed: u64) -> Result<Self, VlmError> {
        if !(0.0..=1.0).contains(&garbage_rate) {
            return Err(VlmError::InvalidConfig {
                reason: format!("garbage_rate {garbage_rate} outside [0, 1]"),
            });
        }
        Ok(Self {
            strategy,
            garbage_rate,
            seed,
        })
    }

    fn raw_response(&self, payload: &QueryPayload, trial_seed: u64) -> String {
        let base = mix_seed(self.seed, trial_seed);
        let mut garbage_rng = seeded_rng(mix_seed(base, GARBAGE_STREAM));
        if garbage_rng.gen::<f64>() < self.garbage_rate {
            return "Hmm, hard to tell from here; my best guess would be the \
                    thing near the middle."
                .into();
        }
        let mut answer_rng = seeded_rng(mix_seed(base, ANSWER_STREAM));
        let name = match self.strategy {
            MockStrategy::EchoPreviousFixation => payload
                .prior_fixations
                .last()
                .map(|p| p.object_name.as_str())
                .unwrap_or(payload.visible_objects[0].as_str()),
            MockStrategy::UniformRandom => {
                let i = answer_rng.gen_range(0..payload.visible_objects.len());
                payload.visible_objects[i].as_str()
            }
        };
        serialize_answer(name)
    }
}

impl VlmClient for MockClient {
    fn query(&self, payload: &QueryPayload, trial_seed: u64) -> Result<AgentAnswer, VlmError> {
        let raw = self.raw_response(payload, trial_seed);
        parse_answer(&raw, &payload.visible_objects)
    }

    fn describe(&self) -> String {
        format!(
            "mock:{}(seed={}, garbage_rate={:.2})",
            self.strategy.as_str(),
            self.seed,
            self.garbage_rate
        )
    }
}

/// HTTP client for a chat-completion style endpoint.
pub struct LiveClient {
    config: ClientConfig,
    api_key: String,
    agent: ureq::Agent,
    gate: Semaphore,
}

impl LiveClient {
    /// Reads the API key from the configured environment variable and
    /// fails fast if it is absent.
    pub fn new(config: ClientConfig) -> Result<Self, VlmError> {
        config.check()?;
        let api_key = std::env::var(&config.api_key_env_var_name)
            .ok()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| VlmError::MissingApiKey {
                var: config.api_key_env_var_name.clone(),
            })?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(config.timeout_s))
            .build();
        let gate = Semaphore::new(config.max_in_flight);
        Ok(Self {
            config,
            api_key,
            agent,
            gate,
        })
    }

    fn request_body(&self, payload: &QueryPayload) -> Result<Value, VlmError> {
        let text = render_text(&build_prompt(payload));
        let image = image_data_b64(&payload.image_ref)?;
        Ok(json!({
            "model": self.config.model_name,
            "messages": [{
                "role": "user",
                "content": [
                    { "type": "text", "text": text },
                    { "type": "image_b64", "data": image },
                ],
            }],
            "response_format": { "type": "json" },
        }))
    }
}

impl VlmClient for LiveClient {
    fn query(&self, payload: &QueryPayload, _trial_seed: u64) -> Result<AgentAnswer, VlmError> {
        let _permit = self.gate.acquire();
        let body = self.request_body(payload)?;
        let attempts = self.config.retries + 1;
        let mut last_failure = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(100u64 << (attempt - 1)));
            }
            let sent = self
                .agent
                .post(&self.config.endpoint_url)
                .set("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(&body);
            match sent {
                Ok(response) => match response.into_string() {
                    Ok(text) => {
                        return parse_answer(&extract_text(&text), &payload.visible_objects)
                    }
                    Err(err) => last_failure = format!("body read failed: {err}"),
                },
                Err(ureq::Error::Status(code, _)) if code == 429 || (500..600).contains(&code) => {
                    last_failure = format!("HTTP {code}");
                }
                Err(ureq::Error::Status(code, _)) => {
                    return Err(VlmError::Transport {
                        attempts: attempt + 1,
                        message: format!("HTTP {code}"),
                    });
                }
                Err(ureq::Error::Transport(err)) => last_failure = err.to_string(),
            }
        }
        Err(VlmError::Transport {
            attempts,
            message: last_failure,
        })
    }

    fn describe(&self) -> String {
        format!(
            "live:{}@{}",
            self.config.model_name, self.config.endpoint_url
        )
    }
}

const LABEL_CARD_PREFIX: &str = "label-card:";

/// Image reference for a synthesized card listing the visible objects.
pub fn label_card_ref(names: &[String]) -> String {
    format!("{LABEL_CARD_PREFIX}{}", names.join("|"))
}

/// Base64 payload for an image reference: label cards are rendered to
/// SVG on the fly, anything else is read as a file path.
fn image_data_b64(image_ref: &str) -> Result<String, VlmError> {
    if let Some(names) = image_ref.strip_prefix(LABEL_CARD_PREFIX) {
        let names: Vec<&str> = names.split('|').collect();
        return Ok(BASE64.encode(render_label_card_svg(&names)));
    }
    let bytes = std::fs::read(image_ref).map_err(|err| VlmError::InvalidPayload {
        reason: format!("cannot read image {image_ref:?}: {err}"),
    })?;
    Ok(BASE64.encode(bytes))
}

/// Plain white card with one text line per object name. Deterministic
/// bytes for fixed input.
pub fn render_label_card_svg(names: &[&str]) -> Vec<u8> {
    let line_height = 40;
    let height = line_height * names.len().max(1) + 40;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"{height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, name) in names.iter().enumerate() {
        let escaped = name
            .replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;");
        svg.push_str(&format!(
            "<text x=\"20\" y=\"{}\" font-family=\"monospace\" font-size=\"24\">{escaped}</text>\n",
            40 + i * line_height
        ));
    }
    svg.push_str("</svg>\n");
    svg.into_bytes()
}

/// Text to hand the parser: the chat-completion envelope's first message
/// content when present, otherwise the body itself.
fn extract_text(body: &str) -> String {
    if let Ok(value) = serde_json::from_str::<Value>(body) {
        if let Some(content) = value["choices"][0]["message"]["content"].as_str() {
            return content.to_string();
        }
    }
    body.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{chi_square_uniform, CHI_SQUARE_CRIT_DF3_P01};
    use crate::vlm::{PriorFixation, Question};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::{mpsc, Arc};

    fn payload(k: usize) -> QueryPayload {
        let visible = vec![
            "red mug".into(),
            "blue book".into(),
            "green pot".into(),
            "white bowl".into(),
        ];
        let priors = (0..k)
            .map(|i| PriorFixation {
                object_name: format!("prior {i}"),
                duration_ms: 300.0,
                ended_s_ago: (k - i) as f64,
            })
            .collect();
        QueryPayload::new(label_card_ref(&visible), visible, priors, Question::E1).unwrap()
    }

    #[test]
    fn mock_echo_returns_last_prior() {
        let client = MockClient::new(MockStrategy::EchoPreviousFixation, 0.0, 1).unwrap();
        let mut p = payload(0);
        p.prior_fixations = vec![
            PriorFixation {
                object_name: "blue book".into(),
                duration_ms: 200.0,
                ended_s_ago: 5.0,
            },
            PriorFixation {
                object_name: "green pot".into(),
                duration_ms: 200.0,
                ended_s_ago: 1.0,
            },
        ];
        assert_eq!(client.query(&p, 3).unwrap().chosen, "green pot");
    }

    #[test]
    fn mock_echo_without_context_uses_first_visible() {
        let client = MockClient::new(MockStrategy::EchoPreviousFixation, 0.0, 1).unwrap();
        assert_eq!(client.query(&payload(0), 3).unwrap().chosen, "red mug");
    }

    #[test]
    fn mock_echo_of_invisible_prior_is_a_parse_failure() {
        let client = MockClient::new(MockStrategy::EchoPreviousFixation, 0.0, 1).unwrap();
        // payload priors are named "prior 0" etc, none visible.
        assert!(matches!(
            client.query(&payload(2), 3),
            Err(VlmError::ParseFailure { .. })
        ));
    }

    #[test]
    fn mock_is_deterministic_per_trial_seed() {
        let a = MockClient::new(MockStrategy::UniformRandom, 0.0, 9).unwrap();
        let b = MockClient::new(MockStrategy::UniformRandom, 0.0, 9).unwrap();
        let p = payload(0);
        for trial in 0..20 {
            assert_eq!(
                a.query(&p, trial).unwrap().chosen,
                b.query(&p, trial).unwrap().chosen
            );
        }
    }

    #[test]
    fn mock_uniform_random_is_uniform() {
        let client = MockClient::new(MockStrategy::UniformRandom, 0.0, 5).unwrap();
        let p = payload(0);
        let mut counts = [0u64; 4];
        for trial in 0..10_000 {
            let chosen = client.query(&p, trial).unwrap().chosen;
            let i = p.visible_objects.iter().position(|v| *v == chosen).unwrap();
            counts[i] += 1;
        }
        let result = chi_square_uniform(&counts).unwrap();
        assert_eq!(result.df, 3);
        assert!(
            result.statistic < CHI_SQUARE_CRIT_DF3_P01,
            "chi-square {:.2} exceeds the df=3, p=0.01 critical value",
            result.statistic
        );
    }

    #[test]
    fn mock_garbage_rate_bounds() {
        let never = MockClient::new(MockStrategy::UniformRandom, 0.0, 2).unwrap();
        let always = MockClient::new(MockStrategy::UniformRandom, 1.0, 2).unwrap();
        let p = payload(0);
        for trial in 0..50 {
            assert!(never.query(&p, trial).is_ok());
            assert!(matches!(
                always.query(&p, trial),
                Err(VlmError::ParseFailure { .. })
            ));
        }
        assert!(MockClient::new(MockStrategy::UniformRandom, 1.5, 0).is_err());
    }

    #[test]
    fn garbage_injection_does_not_perturb_surviving_answers() {
        let clean = MockClient::new(MockStrategy::UniformRandom, 0.0, 7).unwrap();
        let noisy = MockClient::new(MockStrategy::UniformRandom, 0.4, 7).unwrap();
        let p = payload(0);
        let mut survivors = 0;
        for trial in 0..200 {
            if let Ok(answer) = noisy.query(&p, trial) {
                survivors += 1;
                assert_eq!(answer.chosen, clean.query(&p, trial).unwrap().chosen);
            }
        }
        assert!((80..200).contains(&survivors), "{survivors} survivors");
    }

    #[test]
    fn semaphore_bounds_concurrency() {
        let sem = Arc::new(Semaphore::new(2));
        let current = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (sem, current, peak) = (sem.clone(), current.clone(), peak.clone());
                std::thread::spawn(move || {
                    let _permit = sem.acquire();
                    let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(20));
                    current.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
        assert!(peak.load(Ordering::SeqCst) >= 1);
    }

    #[test]
    fn label_card_round_trip() {
        let names = vec!["red mug".to_string(), "a<b&c".to_string()];
        let image_ref = label_card_ref(&names);
        assert_eq!(image_ref, "label-card:red mug|a<b&c");
        let svg = render_label_card_svg(&["red mug", "a<b&c"]);
        let text = String::from_utf8(svg.clone()).unwrap();
        assert!(text.contains("red mug"));
        assert!(text.contains("a&lt;b&amp;c"));
        assert_eq!(svg, render_label_card_svg(&["red mug", "a<b&c"]));
        // The same bytes flow into the request body.
        let b64 = image_data_b64(&image_ref).unwrap();
        assert_eq!(BASE64.decode(b64).unwrap(), svg);
    }

    #[test]
    fn envelope_and_fallback_extraction() {
        let envelope = r#"{"choices":[{"message":{"content":"{\"answer\": \"x\"}"}}]}"#;
        assert_eq!(extract_text(envelope), r#"{"answer": "x"}"#);
        let plain = r#"{"answer": "x"}"#;
        assert_eq!(extract_text(plain), plain);
        assert_eq!(extract_text("not json"), "not json");
    }

    // -- live client against a local canned-response server --

    fn read_request(stream: &mut TcpStream) -> String {
        let mut reader = BufReader::new(stream);
        let mut head = String::new();
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" || line.is_empty() {
                break;
            }
            head.push_str(&line);
        }
        let length = head
            .lines()
            .find_map(|l| {
                l.to_lowercase()
                    .strip_prefix("content-length:")
                    .map(String::from)
            })
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0);
        let mut body = vec![0u8; length];
        reader.read_exact(&mut body).unwrap();
        head + &String::from_utf8_lossy(&body)
    }

    /// Serves one canned (status, body) per connection, forwarding each
    /// received request over the channel.
    fn canned_server(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}/v1/chat", listener.local_addr().unwrap());
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let request = read_request(&mut stream);
                tx.send(request).ok();
                let response = format!(
                    "HTTP/1.1 {status} S\r\nContent-Type: application/json\r\n\
                     Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(response.as_bytes()).unwrap();
            }
        });
        (endpoint, rx)
    }

    fn live_config(endpoint: String, key_var: &str) -> ClientConfig {
        ClientConfig {
            endpoint_url: endpoint,
            api_key_env_var_name: key_var.into(),
            timeout_s: 5.0,
            retries: 2,
            ..ClientConfig::default()
        }
    }

    fn envelope_body(answer: &str) -> String {
        json!({
            "choices": [{ "message": { "content": serialize_answer(answer) } }]
        })
        .to_string()
    }

    #[test]
    fn live_round_trip_sends_expected_request() {
        let (endpoint, rx) = canned_server(vec![(200, envelope_body("red mug"))]);
        std::env::set_var("GAZEKIT_TEST_KEY_RT", "secret-rt");
        let client = LiveClient::new(live_config(endpoint, "GAZEKIT_TEST_KEY_RT")).unwrap();
        let answer = client.query(&payload(2), 0).unwrap();
        assert_eq!(answer.chosen, "red mug");

        let request = rx.recv().unwrap();
        assert!(request.contains("Authorization: Bearer secret-rt"));
        assert!(request.contains("\"model\":\"local-vlm\""));
        assert!(request.contains("\"type\":\"text\""));
        assert!(request.contains("\"type\":\"image_b64\""));
        assert!(request.contains("\"response_format\":{\"type\":\"json\"}"));
        assert!(request.contains("What am I looking at?"));
    }

    #[test]
    fn live_plain_json_body_is_accepted() {
        let (endpoint, _rx) = canned_server(vec![(200, serialize_answer("blue book"))]);
        std::env::set_var("GAZEKIT_TEST_KEY_PL", "secret-pl");
        let client = LiveClient::new(live_config(endpoint, "GAZEKIT_TEST_KEY_PL")).unwrap();
        assert_eq!(client.query(&payload(0), 0).unwrap().chosen, "blue book");
    }

    #[test]
    fn live_retries_500s_until_success() {
        let (endpoint, rx) = canned_server(vec![
            (500, "{}".into()),
            (503, "{}".into()),
            (200, envelope_body("green pot")),
        ]);
        std::env::set_var("GAZEKIT_TEST_KEY_RS", "secret-rs");
        let client = LiveClient::new(live_config(endpoint, "GAZEKIT_TEST_KEY_RS")).unwrap();
        assert_eq!(client.query(&payload(0), 0).unwrap().chosen, "green pot");
        assert_eq!(rx.iter().count(), 3);
    }

    #[test]
    fn live_exhausts_retries_with_transport_error() {
        let (endpoint, rx) = canned_server(vec![
            (500, "{}".into()),
            (500, "{}".into()),
            (500, "{}".into()),
        ]);
        std::env::set_var("GAZEKIT_TEST_KEY_EX", "secret-ex");
        let client = LiveClient::new(live_config(endpoint, "GAZEKIT_TEST_KEY_EX")).unwrap();
        match client.query(&payload(0), 0) {
            Err(VlmError::Transport { attempts, message }) => {
                assert_eq!(attempts, 3);
                assert!(message.contains("500"), "{message}");
            }
            other => panic!("expected transport error, got {other:?}"),
        }
        assert_eq!(rx.iter().count(), 3);
    }

    #[test]
    fn live_client_errors_without_api_key() {
        let config = live_config("http://127.0.0.1:1/na".into(), "GAZEKIT_TEST_KEY_ABSENT");
        std::env::remove_var("GAZEKIT_TEST_KEY_ABSENT");
        assert!(matches!(
            LiveClient::new(config),
            Err(VlmError::MissingApiKey { .. })
        ));
    }

    #[test]
    fn client_config_validation() {
        let bad = ClientConfig {
            max_in_flight: 0,
            ..ClientConfig::default()
        };
        assert!(bad.check().is_err());
        assert!(ClientConfig::default().check().is_ok());
    }
}
