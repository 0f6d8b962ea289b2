//! Domain vocabulary: facts, assertions, QA pairs, content ids, documents.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. In fact-set (reference) mode an assertion carries an exact payload
//! of key/value facts; in llm mode it carries text only and all judgement is
//! delegated to the oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// One atomic unit of information: a canonical question key plus the set of
/// values that answer it. A multi-valued fact is a disjunction ("blue or gray").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub key: String,
    pub values: BTreeSet<String>,
}

impl Fact {
    pub fn new(key: impl Into<String>, values: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let key = normalize(&key.into());
        if key.is_empty() {
            return Err(Error::MalformedFact("empty fact key".into()));
        }
        let values: BTreeSet<String> = values
            .into_iter()
            .map(|v| normalize(&v.into()))
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(Error::MalformedFact(format!("fact {key} has no values")));
        }
        Ok(Fact { key, values })
    }

    /// Single-valued convenience constructor.
    pub fn definite(key: impl Into<String>, value: impl Into<String>) -> Result<Self> {
        Fact::new(key, [value.into()])
    }

    /// Values rendered as a disjunction: "blue or gray".
    pub fn value_text(&self) -> String {
        self.values.iter().cloned().collect::<Vec<_>>().join(" or ")
    }
}

/// A key-unique set of facts, kept in canonical sorted order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct FactSet(BTreeMap<String, BTreeSet<String>>);

impl FactSet {
    pub fn new() -> Self {
        FactSet::default()
    }

    /// Builds a fact set, rejecting duplicate keys.
    pub fn from_facts(facts: impl IntoIterator<Item = Fact>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for fact in facts {
            if map.insert(fact.key.clone(), fact.values).is_some() {
                return Err(Error::DuplicateFactKey(fact.key));
            }
        }
        Ok(FactSet(map))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(|k| k.as_str())
    }

    pub fn key_set(&self) -> BTreeSet<String> {
        self.0.keys().cloned().collect()
    }

    pub fn values_of(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.0.get(key)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.0.iter()
    }

    pub fn facts(&self) -> Vec<Fact> {
        self.0
            .iter()
            .map(|(k, v)| Fact { key: k.clone(), values: v.clone() })
            .collect()
    }

    /// Facts whose (key, values) pair appears identically in both sets.
    pub fn shared_exact(&self, other: &FactSet) -> FactSet {
        FactSet(
            self.0
                .iter()
                .filter(|(k, v)| other.0.get(*k) == Some(v))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }

    /// Facts of `self` minus the (key, values) pairs of `other`.
    pub fn minus_exact(&self, other: &FactSet) -> FactSet {
        FactSet(
            self.0
                .iter()
                .filter(|(k, v)| other.0.get(*k) != Some(v))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }

    /// Key-wise merge; equal keys with differing values take the value-set
    /// union (the disjunctive "or" of an inconsistent union).
    pub fn merge_union(&self, other: &FactSet) -> FactSet {
        let mut map = self.0.clone();
        for (k, v) in &other.0 {
            map.entry(k.clone())
                .and_modify(|existing| existing.extend(v.iter().cloned()))
                .or_insert_with(|| v.clone());
        }
        FactSet(map)
    }

    /// Keys present in both sets whose value-sets are disjoint.
    pub fn conflicting_keys(&self, other: &FactSet) -> Vec<String> {
        self.0
            .iter()
            .filter_map(|(k, v)| {
                other
                    .0
                    .get(k)
                    .filter(|w| v.is_disjoint(w))
                    .map(|_| k.clone())
            })
            .collect()
    }

    /// True when no (key, values) entry appears in both sets.
    pub fn disjoint_exact(&self, other: &FactSet) -> bool {
        self.shared_exact(other).is_empty()
    }

    pub fn keys_disjoint(&self, other: &FactSet) -> bool {
        self.0.keys().all(|k| !other.0.contains_key(k))
    }
}

impl FromIterator<Fact> for FactSet {
    /// Panics on duplicate keys; use [`FactSet::from_facts`] where duplicates
    /// are possible.
    fn from_iter<T: IntoIterator<Item = Fact>>(iter: T) -> Self {
        FactSet::from_facts(iter).expect("duplicate fact key")
    }
}

impl Serialize for FactSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.facts().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FactSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let facts = Vec::<Fact>::deserialize(deserializer)?;
        FactSet::from_facts(facts).map_err(serde::de::Error::custom)
    }
}

/// A unit of declarative meaning. `condition` holds the subtracted assertion
/// of a complement piece, read "core-text | condition-text".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub facts: Option<FactSet>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub condition: Option<Box<Assertion>>,
}

impl Assertion {
    pub fn new(text: impl Into<String>, facts: Option<FactSet>) -> Result<Self> {
        let text = normalize(&text.into());
        if text.is_empty() {
            return Err(Error::EmptyText);
        }
        Ok(Assertion { text, facts, condition: None })
    }

    /// Attaches a condition; own facts must be disjoint (by key and values)
    /// from the condition's facts.
    pub fn with_condition(mut self, condition: Assertion) -> Result<Self> {
        if let (Some(own), Some(theirs)) = (&self.facts, &condition.facts) {
            if !own.disjoint_exact(theirs) {
                return Err(Error::MalformedFact(format!(
                    "conditioned assertion repeats facts of its condition: {}",
                    condition.text
                )));
            }
        }
        self.condition = Some(Box::new(condition));
        Ok(self)
    }

    /// Rendered text, using the "X | Y" convention for conditioned assertions.
    pub fn display_text(&self) -> String {
        match &self.condition {
            Some(cond) => format!("{} | {}", self.text, cond.text),
            None => self.text.clone(),
        }
    }

    /// Keys of own facts with condition keys excluded; the condition carries
    /// no information of its own.
    pub fn information_keys(&self) -> BTreeSet<String> {
        let mut keys = match &self.facts {
            Some(f) => f.key_set(),
            None => BTreeSet::new(),
        };
        if let Some(cond) = &self.condition {
            if let Some(cf) = &cond.facts {
                for k in cf.keys() {
                    keys.remove(k);
                }
            }
        }
        keys
    }
}

/// Builds a normalized assertion from free text plus an optional fact payload.
pub fn make_assertion(text: &str, facts: Option<Vec<Fact>>) -> Result<Assertion> {
    let facts = match facts {
        Some(list) => Some(FactSet::from_facts(list)?),
        None => None,
    };
    Assertion::new(text, facts)
}

/// Content-derived identifier: 256-bit digest of the canonical serialization,
/// rendered as lowercase hex. Stable across runs and platforms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QAId(String);

impl QAId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Short prefix for node naming and logs.
    pub fn short(&self) -> &str {
        &self.0[..12]
    }
}

impl fmt::Display for QAId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Deterministic id of a QA pair: question and answer are NFC-normalized,
/// trimmed and case-folded; facts enter sorted by (key, joined values).
pub fn qa_id(question: &str, answer: &str, facts: Option<&FactSet>) -> QAId {
    let mut hasher = Sha256::new();
    hasher.update(b"q:");
    hasher.update(fold(question).as_bytes());
    hasher.update(b"\na:");
    hasher.update(fold(answer).as_bytes());
    hasher.update(b"\n");
    if let Some(fs) = facts {
        for (key, values) in fs.iter() {
            hasher.update(b"f:");
            hasher.update(key.as_bytes());
            hasher.update(b"=");
            hasher.update(values.iter().cloned().collect::<Vec<_>>().join("|").as_bytes());
            hasher.update(b"\n");
        }
    }
    QAId(hex::encode(hasher.finalize()))
}

/// A question plus its answer, with the core assertion restating both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub id: QAId,
    pub question: String,
    pub answer: String,
    pub core: Assertion,
}

impl QAPair {
    pub fn new(question: impl Into<String>, answer: impl Into<String>, core: Assertion) -> Self {
        let question = normalize(&question.into());
        let answer = normalize(&answer.into());
        let id = qa_id(&question, &answer, core.facts.as_ref());
        QAPair { id, question, answer, core }
    }

    /// Canonical QA for a fact payload, question and answer rendered from the
    /// keys and values. Used for generated pieces (decompositions, atoms).
    pub fn from_facts(facts: FactSet, condition: Option<Assertion>) -> Result<Self> {
        let question = render_question(&facts);
        let answer = render_answer(&facts);
        let mut core = Assertion::new(render_statement(&facts), Some(facts))?;
        if let Some(cond) = condition {
            core = core.with_condition(cond)?;
        }
        Ok(QAPair::new(question, answer, core))
    }

    pub fn facts(&self) -> Option<&FactSet> {
        self.core.facts.as_ref()
    }
}

/// All QAs answering exactly the same questions; an object of the category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivClass {
    pub representative: QAId,
    pub members: BTreeSet<QAId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FactSet,
    Llm,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::FactSet => f.write_str("factset"),
            Mode::Llm => f.write_str("llm"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "factset" | "fact-set" => Ok(Mode::FactSet),
            "llm" => Ok(Mode::Llm),
            other => Err(Error::InvalidFixture(format!("unknown mode: {other}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub mode: Mode,
    pub word_count: usize,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>, mode: Mode) -> Self {
        let raw_text = raw_text.into();
        let word_count = word_count(&raw_text);
        Document { id: id.into(), raw_text, mode, word_count }
    }
}

/// Whitespace-delimited token count; the |D| of every per-length measure.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// NFC normalization plus trimming; applied to all stored text.
pub fn normalize(s: &str) -> String {
    s.trim().nfc().collect()
}

fn fold(s: &str) -> String {
    normalize(s).to_lowercase()
}

/// "x" / "x and y" / "x, y, and z".
pub fn list_join(items: &[String]) -> String {
    match items.len() {
        0 => String::new(),
        1 => items[0].clone(),
        2 => format!("{} and {}", items[0], items[1]),
        _ => {
            let (last, init) = items.split_last().unwrap();
            format!("{}, and {}", init.join(", "), last)
        }
    }
}

pub fn render_question(facts: &FactSet) -> String {
    if facts.is_empty() {
        return "what is stated?".into();
    }
    let parts: Vec<String> = facts.iter().map(|(k, _)| format!("what is the {k}")).collect();
    format!("{}?", list_join(&parts))
}

pub fn render_answer(facts: &FactSet) -> String {
    if facts.is_empty() {
        return "nothing".into();
    }
    let parts: Vec<String> = facts
        .iter()
        .map(|(_, v)| v.iter().cloned().collect::<Vec<_>>().join(" or "))
        .collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("{}, respectively", list_join(&parts))
    }
}

pub fn render_statement(facts: &FactSet) -> String {
    if facts.is_empty() {
        return "nothing is stated".into();
    }
    let parts: Vec<String> = facts
        .iter()
        .map(|(k, v)| format!("the {k} is {}", v.iter().cloned().collect::<Vec<_>>().join(" or ")))
        .collect();
    parts.join("; ")
}
