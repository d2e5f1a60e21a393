//! Verb frame schemas parsed from abstract definitions.
//!
//! An abstract definition is a one-sentence pattern such as
//! `"an AGENT cooks a FOOD in a CONTAINER over a HEATSOURCE using a TOOL in a PLACE"`.
//! Uppercase tokens are frame-element slots; the lowercase token preceding a
//! slot (articles aside) is its connector; a slot directly after the verb is
//! the direct object; the slot before the verb is the subject.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// A named frame-element slot identifier (`AGENT`, `FOOD`, `CAUGHTITEM`, ...).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameElement(pub String);

impl FrameElement {
    /// True when `token` is a nonempty run of uppercase ASCII letters.
    pub fn is_element_token(token: &str) -> bool {
        !token.is_empty() && token.bytes().all(|b| b.is_ascii_uppercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FrameElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FrameElement {
    fn from(s: &str) -> Self {
        FrameElement(s.to_string())
    }
}

/// One slot of a verb frame, in definition order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub element: FrameElement,
    /// Preposition/particle linking the slot to the verb (`in`, `with`, `using`, ...).
    pub connector: Option<String>,
    pub is_direct_object: bool,
}

impl Slot {
    /// The subject slot carries neither a connector nor direct-object marking.
    pub fn is_subject(&self) -> bool {
        self.connector.is_none() && !self.is_direct_object
    }
}

/// The three verb forms needed to realize question surfaces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbForms {
    pub base: String,
    pub third_person: String,
    pub gerund: String,
}

impl VerbForms {
    pub fn new(base: &str, third_person: &str, gerund: &str) -> Self {
        VerbForms {
            base: base.to_string(),
            third_person: third_person.to_string(),
            gerund: gerund.to_string(),
        }
    }

    /// Naive morphology fallback for schema records that omit explicit forms:
    /// `-es` after sibilants, `y`→`ies`, final-e drop and CVC consonant
    /// doubling before `-ing`.
    pub fn derive(base: &str) -> Self {
        VerbForms {
            base: base.to_string(),
            third_person: naive_third_person(base),
            gerund: naive_gerund(base),
        }
    }
}

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u')
}

fn naive_third_person(base: &str) -> String {
    let b = base.as_bytes();
    if base.ends_with('s')
        || base.ends_with('x')
        || base.ends_with('z')
        || base.ends_with("ch")
        || base.ends_with("sh")
    {
        format!("{base}es")
    } else if base.ends_with('y') && b.len() >= 2 && !is_vowel(b[b.len() - 2]) {
        format!("{}ies", &base[..base.len() - 1])
    } else {
        format!("{base}s")
    }
}

fn naive_gerund(base: &str) -> String {
    let b = base.as_bytes();
    if base.ends_with('e') && !base.ends_with("ee") && b.len() >= 2 {
        return format!("{}ing", &base[..base.len() - 1]);
    }
    if b.len() >= 3 {
        let (c3, c2, c1) = (b[b.len() - 3], b[b.len() - 2], b[b.len() - 1]);
        let doubling = !is_vowel(c1)
            && !matches!(c1, b'w' | b'x' | b'y')
            && is_vowel(c2)
            && !is_vowel(c3);
        if doubling {
            return format!("{}{}ing", base, c1 as char);
        }
    }
    format!("{base}ing")
}

/// A verb with its ordered frame-element slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbFrame {
    pub verb_id: String,
    pub forms: VerbForms,
    pub slots: Vec<Slot>,
    pub definition_text: String,
}

impl VerbFrame {
    /// The subject slot, when the definition places a slot before the verb.
    pub fn subject(&self) -> Option<&Slot> {
        self.slots.first().filter(|s| s.is_subject())
    }

    pub fn slot(&self, name: &str) -> Option<&Slot> {
        self.slots.iter().find(|s| s.element.as_str() == name)
    }

    pub fn has_element(&self, name: &str) -> bool {
        self.slot(name).is_some()
    }
}

/// All loaded verb frames, keyed by verb id.
#[derive(Debug, Clone, Default)]
pub struct FrameSet {
    pub frames: BTreeMap<String, VerbFrame>,
}

impl FrameSet {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn get(&self, verb_id: &str) -> Option<&VerbFrame> {
        self.frames.get(verb_id)
    }

    pub fn insert(&mut self, frame: VerbFrame) -> Result<()> {
        if self.frames.contains_key(&frame.verb_id) {
            return Err(Error::DuplicateVerb(frame.verb_id));
        }
        self.frames.insert(frame.verb_id.clone(), frame);
        Ok(())
    }
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

fn strip_punct(token: &str) -> &str {
    token.trim_matches(|c: char| !c.is_ascii_alphanumeric())
}

/// Parse an abstract definition into a [`VerbFrame`].
///
/// Slots are the uppercase tokens in order of appearance. The connector of a
/// post-verb slot is the last non-article token between the previous slot (or
/// the verb) and the slot itself; a slot with no such token is the direct
/// object. A slot appearing before the verb is the subject.
pub fn parse_abstract_definition(text: &str, verb_id: &str, forms: VerbForms) -> Result<VerbFrame> {
    let tokens: Vec<&str> = text.split_whitespace().map(strip_punct).collect();

    let verb_idx = tokens
        .iter()
        .position(|t| *t == forms.third_person || *t == forms.base)
        .ok_or_else(|| Error::VerbNotFound {
            verb: verb_id.to_string(),
            text: text.to_string(),
        })?;

    let slot_positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| FrameElement::is_element_token(t))
        .map(|(i, _)| i)
        .collect();
    if slot_positions.is_empty() {
        return Err(Error::NoSlotsFound(text.to_string()));
    }

    let mut slots = Vec::with_capacity(slot_positions.len());
    let mut prev = verb_idx;
    for &idx in &slot_positions {
        let element = FrameElement(tokens[idx].to_string());
        if slots.iter().any(|s: &Slot| s.element == element) {
            return Err(Error::ParseError {
                file: String::new(),
                record: 0,
                message: format!("slot {element} repeated in definition {text:?}"),
            });
        }
        if idx < verb_idx {
            slots.push(Slot {
                element,
                connector: None,
                is_direct_object: false,
            });
            continue;
        }
        let connector = tokens[prev + 1..idx]
            .iter()
            .filter(|t| !ARTICLES.contains(&t.to_ascii_lowercase().as_str()))
            .next_back()
            .map(|t| t.to_string());
        let is_direct_object = connector.is_none();
        slots.push(Slot {
            element,
            connector,
            is_direct_object,
        });
        prev = idx;
    }

    Ok(VerbFrame {
        verb_id: verb_id.to_string(),
        forms,
        slots,
        definition_text: text.to_string(),
    })
}

/// On-disk schema record: `{"verb", "forms"?, "abstract"}`.
#[derive(Debug, Deserialize, Serialize)]
pub struct SchemaRecord {
    pub verb: String,
    #[serde(default)]
    pub forms: Option<FormsRecord>,
    #[serde(rename = "abstract")]
    pub abstract_def: String,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct FormsRecord {
    pub base: String,
    pub third: String,
    pub gerund: String,
}

/// Load a JSON array of schema records into a [`FrameSet`].
pub fn load_frameset(path: &Path) -> Result<FrameSet> {
    let file = path.display().to_string();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {file}"), e))?;
    let records: Vec<SchemaRecord> = serde_json::from_str(&raw).map_err(|e| Error::ParseError {
        file: file.clone(),
        record: 0,
        message: e.to_string(),
    })?;
    if records.is_empty() {
        return Err(Error::EmptyFrameSet);
    }

    let mut set = FrameSet::default();
    for (i, rec) in records.into_iter().enumerate() {
        let forms = match rec.forms {
            Some(f) => VerbForms::new(&f.base, &f.third, &f.gerund),
            None => VerbForms::derive(&rec.verb),
        };
        let frame =
            parse_abstract_definition(&rec.abstract_def, &rec.verb, forms).map_err(|e| {
                Error::ParseError {
                    file: file.clone(),
                    record: i + 1,
                    message: format!("verb {:?}: {e}", rec.verb),
                }
            })?;
        set.insert(frame)?;
    }
    Ok(set)
}
