//! Scripted chat-completion server for recording and replaying the llm-mode
//! pipeline. The script mirrors a small fact table over the EDU document, so
//! answerability, decomposition, and equivalence verdicts stay mutually
//! coherent no matter the call order.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::thread;

pub const EDU_S1: &str =
    "The integration of digital tools in education has grown rapidly over the past decade.";
pub const EDU_S2: &str =
    "Many teachers now use online platforms to assign homework and track student progress.";
pub const EDU_S3: &str =
    "Schools should invest more in digital learning infrastructure to enhance educational outcomes.";

pub fn edu_text() -> String {
    format!("{EDU_S1} {EDU_S2} {EDU_S3}")
}

const ROOT_SUMMARY: &str =
    "Digital tools now pervade education and schools should invest in them further.";
const LEAF1_SUMMARY: &str = "Digital tools have entered education rapidly over the past decade.";
const LEAF2_SUMMARY: &str = "Teachers rely on online platforms for homework and progress tracking.";
const LEAF3_SUMMARY: &str =
    "Schools should fund digital learning infrastructure to improve outcomes.";

/// phrase → fact keys; an assertion's keys are the union over all phrases it
/// contains.
const PHRASE_KEYS: &[(&str, &[&str])] = &[
    ("what now pervades education", &["tools-in-education"]),
    ("what should schools do about digital learning", &["schools-should-invest"]),
    (
        "how have digital tools entered education",
        &["tools-in-education", "entry-pace", "entry-period"],
    ),
    ("what do teachers assign on online platforms", &["platforms-homework"]),
    ("what do teachers track on online platforms", &["platforms-tracking"]),
    ("what should schools invest more in", &["schools-should-invest", "investment-target"]),
    (
        "why should schools invest in digital learning infrastructure",
        &["investment-goal"],
    ),
    // decomposition pieces
    ("digital tools have entered education", &["tools-in-education"]),
    (
        "how quickly and when did digital tools enter education",
        &["entry-pace", "entry-period"],
    ),
    ("should schools keep investing in digital learning", &["schools-should-invest"]),
    ("what exactly should the investment target be", &["investment-target"]),
];

/// key set → canned (question, answer) for decomposition pieces.
const PIECE_TABLE: &[(&[&str], (&str, &str))] = &[
    (&["tools-in-education"], ("digital tools have entered education", "yes")),
    (
        &["entry-pace", "entry-period"],
        ("how quickly and when did digital tools enter education", "rapidly, over the past decade"),
    ),
    (
        &["schools-should-invest"],
        ("should schools keep investing in digital learning", "yes"),
    ),
    (
        &["investment-target"],
        ("what exactly should the investment target be", "digital learning infrastructure"),
    ),
];

fn own_text(display: &str) -> &str {
    // strip the "| condition" suffix: the condition carries no information
    display.split(" | ").next().unwrap_or(display).trim()
}

fn keys_of(text: &str) -> BTreeSet<String> {
    let text = own_text(text);
    let mut keys = BTreeSet::new();
    for (phrase, phrase_keys) in PHRASE_KEYS {
        if text.contains(phrase) {
            keys.extend(phrase_keys.iter().map(|k| k.to_string()));
        }
    }
    if keys.is_empty() {
        // synthesized piece questions carry their keys inline
        if let Some(rest) = text.strip_prefix("about: ") {
            let tail = rest.split(['?', '(']).next().unwrap_or(rest);
            keys.extend(tail.split('|').map(|k| k.trim().to_string()).filter(|k| !k.is_empty()));
        }
    }
    keys
}

fn piece_for(keys: &BTreeSet<String>) -> (String, String) {
    for (table_keys, (q, a)) in PIECE_TABLE {
        let table: BTreeSet<String> = table_keys.iter().map(|k| k.to_string()).collect();
        if table == *keys {
            return (q.to_string(), a.to_string());
        }
    }
    let joined = keys.iter().cloned().collect::<Vec<_>>().join("|");
    (format!("about: {joined}?"), "stated".to_string())
}

fn line_after<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    text.lines().find_map(|l| l.strip_prefix(prefix)).map(str::trim)
}

fn after_marker<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    text.split_once(marker).map(|(_, rest)| rest.trim())
}

/// The scripted assistant. Takes the user message, returns the content.
pub fn script(user: &str) -> String {
    // answers(a, qa): addressable iff the question's keys are a subset
    if user.contains("does its \nanswer agree with the reference answer?")
        || user.contains("answer agree with the reference answer?")
    {
        let assertion = line_after(user, "Assertion: ").unwrap_or_default();
        let question = line_after(user, "Question: ").unwrap_or_default();
        let a_keys = keys_of(assertion);
        let q_keys = keys_of(question);
        let addressable = !q_keys.is_empty() && q_keys.is_subset(&a_keys);
        let word = if addressable { "yes" } else { "no" };
        return format!("addressable: {word}\nconsistent: {word}");
    }

    // consistent(a, b): the EDU corpus contains no contradictions
    if user.contains("Are these logically consistent") {
        return "consistent: yes".to_string();
    }

    // chunk: reproduce the text split at sentence boundaries
    if user.contains("Split the following text") {
        let text = after_marker(user, "TEXT:\n").unwrap_or_default();
        let mut parts = Vec::new();
        let mut rest = text;
        while let Some(pos) = rest.find(". ") {
            parts.push(&rest[..pos + 1]);
            rest = &rest[pos + 2..];
        }
        if !rest.trim().is_empty() {
            parts.push(rest.trim());
        }
        return parts.join("\n---\n");
    }

    // summarize_chunk: canned node summaries
    if user.contains("Summarize the following text") {
        let text = after_marker(user, "TEXT:\n").unwrap_or_default().trim();
        let summary = if text == edu_text() {
            ROOT_SUMMARY
        } else if text == EDU_S1 {
            LEAF1_SUMMARY
        } else if text == EDU_S2 {
            LEAF2_SUMMARY
        } else if text == EDU_S3 {
            LEAF3_SUMMARY
        } else {
            text.split_inclusive('.').next().unwrap_or(text)
        };
        return summary.to_string();
    }

    // core_qas: canned conversions per node summary
    if user.contains("Restate the assertion as question-answer pairs") {
        let assertion = line_after(user, "Assertion: ").unwrap_or_default();
        let pairs: Vec<(&str, &str)> = if assertion == ROOT_SUMMARY {
            vec![
                ("what now pervades education?", "digital tools"),
                ("what should schools do about digital learning?", "invest in it further"),
            ]
        } else if assertion == LEAF1_SUMMARY {
            vec![("how have digital tools entered education?", "rapidly, over the past decade")]
        } else if assertion == LEAF2_SUMMARY {
            vec![
                ("what do teachers assign on online platforms?", "homework"),
                ("what do teachers track on online platforms?", "student progress"),
            ]
        } else if assertion == LEAF3_SUMMARY {
            vec![
                ("what should schools invest more in?", "digital learning infrastructure"),
                (
                    "why should schools invest in digital learning infrastructure?",
                    "to enhance educational outcomes",
                ),
            ]
        } else {
            vec![("about: unknown?", "stated")]
        };
        let items: Vec<serde_json::Value> = pairs
            .into_iter()
            .map(|(q, a)| serde_json::json!({"question": q, "answer": a}))
            .collect();
        return serde_json::to_string(&items).unwrap();
    }

    // decompose_pair: signature split over the fact table
    if user.contains("Decompose the two QA pairs") {
        let qa1 = line_after(user, "QA1: ").unwrap_or_default();
        let qa2 = line_after(user, "QA2: ").unwrap_or_default();
        let k1 = keys_of(qa1);
        let k2 = keys_of(qa2);
        let shared: BTreeSet<String> = k1.intersection(&k2).cloned().collect();
        if shared.is_empty() {
            return r#"{"overlap": false, "left": [], "mid": [], "right": []}"#.to_string();
        }
        let left_keys: BTreeSet<String> = k1.difference(&shared).cloned().collect();
        let right_keys: BTreeSet<String> = k2.difference(&shared).cloned().collect();
        let (mid_q, mid_a) = piece_for(&shared);
        let side = |keys: &BTreeSet<String>| -> Vec<serde_json::Value> {
            if keys.is_empty() {
                vec![]
            } else {
                let (q, a) = piece_for(keys);
                vec![serde_json::json!({"question": q, "answer": a, "condition": mid_q})]
            }
        };
        let reply = serde_json::json!({
            "overlap": true,
            "left": side(&left_keys),
            "mid": [{"question": mid_q, "answer": mid_a}],
            "right": side(&right_keys),
        });
        return reply.to_string();
    }

    // probe_questions(a, b): one probe per key; echo probe for unknown text
    if user.contains("List the distinct questions") {
        let a = line_after(user, "Assertion 1: ").unwrap_or_default();
        let b = line_after(user, "Assertion 2: ").unwrap_or_default();
        let mut probes: Vec<String> = Vec::new();
        let ka = keys_of(a);
        let kb = keys_of(b);
        for key in ka.union(&kb) {
            probes.push(format!("key: {key}?"));
        }
        if ka.is_empty() {
            probes.push(format!("echo: {}", own_text(a)));
        }
        if kb.is_empty() {
            probes.push(format!("echo: {}", own_text(b)));
        }
        return serde_json::to_string(&probes).unwrap();
    }

    // addresses_question(a, q)
    if user.contains("Can the assertion answer the question \nat all (even with")
        || user.contains("at all (even with a negative or different answer)?")
    {
        let assertion = line_after(user, "Assertion: ").unwrap_or_default();
        let question = line_after(user, "Question: ").unwrap_or_default();
        let yes = if let Some(key) = question.strip_prefix("key: ") {
            keys_of(assertion).contains(key.trim_end_matches('?'))
        } else if let Some(echo) = question.strip_prefix("echo: ") {
            own_text(assertion) == echo.trim()
        } else {
            let q_keys = keys_of(question);
            !q_keys.is_empty() && q_keys.is_subset(&keys_of(assertion))
        };
        return format!("addressable: {}", if yes { "yes" } else { "no" });
    }

    panic!("mock oracle received an unscripted prompt:\n{user}");
}

/// Serves the script over HTTP on a random loopback port; returns the base
/// URL. The listener thread runs for the life of the test process.
pub fn spawn_mock() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock listener");
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let _ = handle(&mut stream);
        }
    });
    format!("http://{addr}")
}

fn handle(stream: &mut std::net::TcpStream) -> std::io::Result<()> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end;
    loop {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            return Ok(());
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = find_subslice(&buf, b"\r\n\r\n") {
            header_end = pos + 4;
            break;
        }
    }
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length: usize = headers
        .lines()
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            name.eq_ignore_ascii_case("content-length").then(|| value.trim().parse().ok())?
        })
        .unwrap_or(0);
    while buf.len() < header_end + content_length {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }
    let body = String::from_utf8_lossy(&buf[header_end..header_end + content_length]).to_string();
    let request: serde_json::Value = serde_json::from_str(&body).unwrap_or_default();
    let user = request["messages"]
        .as_array()
        .and_then(|msgs| msgs.iter().find(|m| m["role"] == "user"))
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default()
        .to_string();
    let content = script(&user);
    let reply = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string();
    let response = format!(
        "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
        reply.len(),
        reply
    );
    stream.write_all(response.as_bytes())?;
    stream.flush()
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}
