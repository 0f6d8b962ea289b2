//! LLM-backed oracle: HTTP chat-completion adapter with a persistent cache.
//!
//! Requests are `{model, messages, temperature: 0}`, prompts are versioned,
//! and the cache key is a digest of (template version, rendered request), so
//! any template change invalidates old recordings. With `offline` set, a
//! cache miss is an error instead of a network call.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Assertion, Mode, QAPair};

use super::cache::{timestamp, CacheRecord, OracleCache};
use super::{split_sentences, AnswerVerdict, DecompParts, SemanticOracle, TextSpan};

/// Bumped whenever any prompt template changes.
pub const PROMPT_TEMPLATE_VERSION: &str = "qadoc-prompts-v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    30
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

pub struct LlmOracle {
    endpoint: EndpointConfig,
    cache: OracleCache,
    offline: bool,
}

impl LlmOracle {
    pub fn new(endpoint: EndpointConfig, cache: OracleCache, offline: bool) -> Self {
        LlmOracle { endpoint, cache, offline }
    }

    pub fn cache(&self) -> &OracleCache {
        &self.cache
    }

    fn request_body(&self, system: &str, user: &str) -> serde_json::Value {
        serde_json::json!({
            "model": self.endpoint.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": 0,
        })
    }

    fn digest(&self, request: &serde_json::Value) -> String {
        let mut hasher = Sha256::new();
        hasher.update(PROMPT_TEMPLATE_VERSION.as_bytes());
        hasher.update(b"\n");
        hasher.update(serde_json::to_string(request).unwrap().as_bytes());
        hex::encode(hasher.finalize())
    }

    /// Cached chat-completion call; the returned string is the assistant
    /// message content.
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        let request = self.request_body(system, user);
        let digest = self.digest(&request);
        if let Some(record) = self.cache.get(&digest) {
            return Ok(record.response);
        }
        if self.offline {
            return Err(Error::OracleFailure(format!(
                "offline mode: cache miss for request digest {digest}"
            )));
        }
        let response = self.transport(&request)?;
        self.cache.put(CacheRecord {
            request_digest: digest,
            request,
            response: response.clone(),
            model_tag: self.endpoint.model.clone(),
            created_at: timestamp(),
        })?;
        Ok(response)
    }

    fn transport(&self, request: &serde_json::Value) -> Result<String> {
        let url = format!("{}/chat/completions", self.endpoint.base_url.trim_end_matches('/'));
        let body = serde_json::to_string(request)
            .map_err(|e| Error::OracleFailure(format!("request serialization: {e}")))?;
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.endpoint.timeout_secs)))
            .build();
        let agent: ureq::Agent = config.into();
        let mut req = agent.post(&url).header("content-type", "application/json");
        if let Some(env_name) = &self.endpoint.api_key_env {
            if let Ok(key) = std::env::var(env_name) {
                req = req.header("authorization", format!("Bearer {key}"));
            }
        }
        let text = req
            .send(&body)
            .map_err(|e| Error::OracleFailure(format!("transport: {e}")))?
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::OracleFailure(format!("transport read: {e}")))?;
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| Error::OracleFailure(format!("response parse: {e}")))?;
        parsed
            .choices
            .first()
            .map(|c| c.message.content.clone())
            .ok_or_else(|| Error::OracleFailure("response has no choices".into()))
    }
}

const SYSTEM: &str = "You analyze documents as question-answer structure. \
Answer exactly in the format requested, with no extra commentary.";

fn parse_yes_no(line: &str, field: &str) -> Result<bool> {
    let needle = format!("{field}:");
    for raw in line.lines() {
        let raw = raw.trim().to_lowercase();
        if let Some(rest) = raw.strip_prefix(&needle) {
            return match rest.trim() {
                "yes" => Ok(true),
                "no" => Ok(false),
                other => Err(Error::OracleFailure(format!("expected yes/no for {field}, got {other:?}"))),
            };
        }
    }
    Err(Error::OracleFailure(format!("missing field {field} in oracle reply")))
}

#[derive(Deserialize)]
struct QaJson {
    question: String,
    answer: String,
    #[serde(default)]
    condition: Option<String>,
}

fn qa_from_json(item: QaJson) -> Result<QAPair> {
    let statement = format!("{} ({})", item.question.trim_end_matches('?'), item.answer);
    let mut core = Assertion::new(statement, None)?;
    if let Some(cond) = item.condition {
        if !cond.trim().is_empty() {
            core = core.with_condition(Assertion::new(cond, None)?)?;
        }
    }
    Ok(QAPair::new(item.question, item.answer, core))
}

fn extract_json(content: &str) -> &str {
    // tolerate fenced replies
    let trimmed = content.trim();
    if let Some(start) = trimmed.find(['[', '{']) {
        let end = trimmed.rfind([']', '}']).map(|i| i + 1).unwrap_or(trimmed.len());
        &trimmed[start..end]
    } else {
        trimmed
    }
}

impl SemanticOracle for LlmOracle {
    fn mode(&self) -> Mode {
        Mode::Llm
    }

    fn answers(&self, a: &Assertion, qa: &QAPair) -> Result<AnswerVerdict> {
        let user = format!(
            "Assertion: {}\nQuestion: {}\nReference answer: {}\n\n\
             Can the assertion answer the question at all, and if so does its \
             answer agree with the reference answer?\nReply with exactly two lines:\n\
             addressable: yes|no\nconsistent: yes|no",
            a.display_text(),
            qa.question,
            qa.answer
        );
        let reply = self.complete(SYSTEM, &user)?;
        let addressable = parse_yes_no(&reply, "addressable")?;
        let consistent = parse_yes_no(&reply, "consistent")?;
        Ok(AnswerVerdict::new(addressable, consistent))
    }

    fn question_keys(&self, _a: &Assertion) -> Result<BTreeSet<String>> {
        // the canonical key universe exists only in fact-set mode
        Err(Error::ModeMismatch { expected: "fact-set" })
    }

    fn consistent(&self, a: &Assertion, b: &Assertion) -> Result<bool> {
        let user = format!(
            "Assertion 1: {}\nAssertion 2: {}\n\nAre these logically consistent \
             propositions?\nReply with exactly one line:\nconsistent: yes|no",
            a.display_text(),
            b.display_text()
        );
        let reply = self.complete(SYSTEM, &user)?;
        parse_yes_no(&reply, "consistent")
    }

    fn chunk(&self, text: &str, fanout_limit: usize) -> Result<Vec<TextSpan>> {
        if text.trim().is_empty() {
            return Err(Error::DegenerateInput("empty text".into()));
        }
        if split_sentences(text).len() <= 1 {
            return Ok(vec![TextSpan::new(0, text.len())]);
        }
        let user = format!(
            "Split the following text into between 2 and {fanout_limit} contiguous, \
             semantically meaningful chunks. Reproduce the text exactly; do not \
             paraphrase, reorder, or drop anything. Output the chunks in order, \
             separated by lines containing only ---\n\nTEXT:\n{text}"
        );
        let reply = self.complete(SYSTEM, &user)?;
        let mut spans = Vec::new();
        let mut cursor = 0usize;
        for part in reply.split("\n---\n").map(str::trim).filter(|p| !p.is_empty()) {
            let found = text[cursor..]
                .find(part)
                .map(|i| cursor + i)
                .ok_or_else(|| Error::OracleFailure(format!("chunk not found verbatim: {part:?}")))?;
            spans.push(TextSpan::new(found, found + part.len()));
            cursor = found + part.len();
        }
        if spans.is_empty() {
            return Err(Error::OracleFailure("oracle returned no chunks".into()));
        }
        // non-overlap and coverage: gaps may only contain whitespace
        let mut prev_end = 0usize;
        for span in &spans {
            if !text[prev_end..span.start].trim().is_empty() {
                return Err(Error::OracleFailure("chunks do not cover the text".into()));
            }
            prev_end = span.end;
        }
        if !text[prev_end..].trim().is_empty() {
            return Err(Error::OracleFailure("chunks do not cover the text".into()));
        }
        Ok(spans)
    }

    fn summarize_chunk(&self, text: &str) -> Result<Assertion> {
        let user = format!(
            "Summarize the following text in exactly one declarative sentence.\n\nTEXT:\n{text}"
        );
        let reply = self.complete(SYSTEM, &user)?;
        Assertion::new(reply.trim(), None)
    }

    fn core_qas(&self, a: &Assertion) -> Result<Vec<QAPair>> {
        let user = format!(
            "Restate the assertion as question-answer pairs that together capture \
             all of its information. Use one pair for a simple assertion; split a \
             compound assertion into sub-statements first, one pair each.\n\
             Assertion: {}\n\nReply with a JSON array: \
             [{{\"question\": \"...\", \"answer\": \"...\"}}]",
            a.display_text()
        );
        let reply = self.complete(SYSTEM, &user)?;
        let items: Vec<QaJson> = serde_json::from_str(extract_json(&reply))
            .map_err(|e| Error::OracleFailure(format!("core_qas parse: {e}")))?;
        if items.is_empty() {
            return Err(Error::OracleFailure("core_qas returned no pairs".into()));
        }
        items.into_iter().map(qa_from_json).collect()
    }

    fn decompose_pair(&self, qa1: &QAPair, qa2: &QAPair) -> Result<DecompParts> {
        let user = format!(
            "Decompose the two QA pairs into pieces that are either entirely \
             overlapping or entirely non-overlapping.\n\
             QA1: {} ({})\nQA2: {} ({})\n\n\
             Reply with JSON: {{\"overlap\": true|false, \"left\": [...], \"mid\": [...], \"right\": [...]}} \
             where left holds information only in QA1, mid holds shared information, \
             right holds information only in QA2, and each list item is \
             {{\"question\": \"...\", \"answer\": \"...\", \"condition\": \"...\"}} \
             (condition optional; use it to state the context removed from a complement). \
             If there is no overlap, reply {{\"overlap\": false, \"left\": [], \"mid\": [], \"right\": []}}.",
            qa1.question, qa1.answer, qa2.question, qa2.answer
        );
        let reply = self.complete(SYSTEM, &user)?;

        #[derive(Deserialize)]
        struct DecompJson {
            overlap: bool,
            #[serde(default)]
            left: Vec<QaJson>,
            #[serde(default)]
            mid: Vec<QaJson>,
            #[serde(default)]
            right: Vec<QaJson>,
        }
        let parsed: DecompJson = serde_json::from_str(extract_json(&reply))
            .map_err(|e| Error::OracleFailure(format!("decompose parse: {e}")))?;
        if !parsed.overlap {
            return Ok(DecompParts::default());
        }
        Ok(DecompParts {
            left: parsed.left.into_iter().map(qa_from_json).collect::<Result<_>>()?,
            mid: parsed.mid.into_iter().map(qa_from_json).collect::<Result<_>>()?,
            right: parsed.right.into_iter().map(qa_from_json).collect::<Result<_>>()?,
        })
    }

    fn probe_questions(&self, a: &Assertion, b: &Assertion) -> Result<Vec<String>> {
        let user = format!(
            "List the distinct questions that at least one of the two assertions \
             can answer. Merge paraphrases into one question.\n\
             Assertion 1: {}\nAssertion 2: {}\n\n\
             Reply with a JSON array of question strings.",
            a.display_text(),
            b.display_text()
        );
        let reply = self.complete(SYSTEM, &user)?;
        let probes: Vec<String> = serde_json::from_str(extract_json(&reply))
            .map_err(|e| Error::OracleFailure(format!("probe parse: {e}")))?;
        let mut seen = BTreeSet::new();
        Ok(probes.into_iter().filter(|q| seen.insert(q.trim().to_lowercase())).collect())
    }

    fn addresses_question(&self, a: &Assertion, question: &str) -> Result<bool> {
        let user = format!(
            "Assertion: {}\nQuestion: {}\n\nCan the assertion answer the question \
             at all (even with a negative or different answer)?\n\
             Reply with exactly one line:\naddressable: yes|no",
            a.display_text(),
            question
        );
        let reply = self.complete(SYSTEM, &user)?;
        parse_yes_no(&reply, "addressable")
    }
}
