//! Question-answer template generation.
//!
//! For each frame, every slot is held out once as the target (its filler
//! becomes the answer) and the remaining slots are included or excluded in
//! all combinations, giving `k * 2^(k-1)` templates for a `k`-slot frame,
//! plus one verb-target template (`"What is the AGENT doing?"`) when the
//! frame has an AGENT slot.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::schema::{FrameElement, FrameSet, Slot, VerbFrame};
use crate::Result;

/// Interrogative class assigned to a frame element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "wh", content = "text")]
pub enum WhClass {
    Who,
    Where,
    What,
    WhatPhrase(String),
}

impl WhClass {
    /// The question-initial phrase, lowercase.
    pub fn phrase(&self) -> &str {
        match self {
            WhClass::Who => "who",
            WhClass::Where => "where",
            WhClass::What => "what",
            WhClass::WhatPhrase(t) => t,
        }
    }
}

/// Frame element → wh-class mapping.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WhLexicon {
    pub entries: BTreeMap<String, WhClass>,
}

impl WhLexicon {
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, WhClass)>,
        S: Into<String>,
    {
        WhLexicon {
            entries: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    /// Mapping for the frame elements that have an established wh-word:
    /// agents and people to `who`, locations to `where`, concrete objects to
    /// `what` or an item phrase.
    pub fn builtin_defaults() -> Self {
        use WhClass::*;
        let item = || WhatPhrase("what item".to_string());
        WhLexicon::from_entries([
            ("AGENT", Who),
            ("SELLER", Who),
            ("VICTIM", Who),
            ("COAGENT", Who),
            ("PLACE", Where),
            ("LOCATION", Where),
            ("DESTINATION", Where),
            ("FOOD", What),
            ("TOOL", What),
            ("CONTAINER", What),
            ("HEATSOURCE", What),
            ("PAYMENT", What),
            ("OBJECT", What),
            ("TARGET", What),
            ("VEHICLE", What),
            ("ITEM", item()),
            ("GOODS", item()),
            ("CAUGHTITEM", item()),
        ])
    }

    /// Load a JSON map `element -> {"wh": ..., "text"?: ...}`.
    pub fn load(path: &Path) -> Result<Self> {
        let file = path.display().to_string();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {file}"), e))?;
        let entries: BTreeMap<String, WhClass> =
            serde_json::from_str(&raw).map_err(|e| Error::data(&file, 0, e.to_string()))?;
        Ok(WhLexicon { entries })
    }
}

/// Wh-class of `element`: the lexicon entry when present, otherwise the
/// default phrase `"what <element>"`. Total over all inputs.
pub fn wh_word_for(element: &FrameElement, lexicon: &WhLexicon) -> WhClass {
    lexicon
        .entries
        .get(element.as_str())
        .cloned()
        .unwrap_or_else(|| WhClass::WhatPhrase(format!("what {}", element.as_str().to_lowercase())))
}

/// Target of a template: a held-out frame element, or the verb itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemplateTarget {
    Element(FrameElement),
    Verb,
}

impl TemplateTarget {
    /// Name used in dataset records; the verb target is spelled `VERB`.
    pub fn name(&self) -> &str {
        match self {
            TemplateTarget::Element(e) => e.as_str(),
            TemplateTarget::Verb => "VERB",
        }
    }

    pub fn from_name(name: &str) -> Self {
        if name == "VERB" {
            TemplateTarget::Verb
        } else {
            TemplateTarget::Element(FrameElement(name.to_string()))
        }
    }
}

impl Serialize for TemplateTarget {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for TemplateTarget {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(TemplateTarget::from_name(&s))
    }
}

/// A question pattern with one held-out target and embedded context slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub verb_id: String,
    pub target: TemplateTarget,
    pub context: Vec<FrameElement>,
    pub surface: String,
}

/// Conjunctions such as `using` surface as `with` inside questions.
fn surface_connector(connector: &str) -> &str {
    if connector == "using" {
        "with"
    } else {
        connector
    }
}

/// An instrument slot triggers the `"What does the AGENT use to <verb>?"`
/// question form.
fn is_instrument(slot: &Slot) -> bool {
    slot.element.as_str() == "TOOL" || slot.connector.as_deref() == Some("using")
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Render the context phrases in slot order. The subject is always referenced
/// in the question body, so its membership in the context adds no phrase.
fn context_phrase(frame: &VerbFrame, context: &[FrameElement]) -> String {
    let mut parts = Vec::new();
    for slot in &frame.slots {
        if !context.contains(&slot.element) || slot.is_subject() {
            continue;
        }
        match &slot.connector {
            Some(c) => parts.push(format!("{} {}", surface_connector(c), slot.element)),
            None => parts.push(slot.element.to_string()),
        }
    }
    parts.join(" ")
}

fn build_surface(
    frame: &VerbFrame,
    target: &Slot,
    context: &[FrameElement],
    lexicon: &WhLexicon,
) -> String {
    let ctx = context_phrase(frame, context);
    let ctx_suffix = if ctx.is_empty() {
        String::new()
    } else {
        format!(" {ctx}")
    };
    let subject = frame
        .subject()
        .map(|s| s.element.as_str())
        .unwrap_or("AGENT");
    let wh = wh_word_for(&target.element, lexicon);

    let body = if target.is_subject() {
        format!("{} is {}{}", wh.phrase(), frame.forms.gerund, ctx_suffix)
    } else if is_instrument(target) {
        format!(
            "what does the {} use to {}{}",
            subject, frame.forms.base, ctx_suffix
        )
    } else if wh == WhClass::Where {
        format!(
            "where does the {} {}{}",
            subject, frame.forms.base, ctx_suffix
        )
    } else {
        let stranded = target
            .connector
            .as_deref()
            .map(|c| format!(" {}", surface_connector(c)))
            .unwrap_or_default();
        format!(
            "{} does the {} {}{}{}",
            wh.phrase(),
            subject,
            frame.forms.base,
            ctx_suffix,
            stranded
        )
    };
    format!("{}?", capitalize(&body))
}

/// Generate all templates for one frame.
///
/// Targets are emitted in slot order; for each target the context subsets of
/// the remaining slots are emitted in binary-counting order (bit `j` of the
/// counter selects the `j`-th remaining slot), filtered to `max_context` when
/// set. The verb-target template comes last. A frame without a subject slot
/// yields no templates.
pub fn generate_templates(
    frame: &VerbFrame,
    lexicon: &WhLexicon,
    max_context: Option<usize>,
) -> Vec<QuestionTemplate> {
    if frame.subject().is_none() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for target in &frame.slots {
        let rest: Vec<&Slot> = frame
            .slots
            .iter()
            .filter(|s| s.element != target.element)
            .collect();
        for mask in 0u64..(1u64 << rest.len()) {
            if let Some(cap) = max_context {
                if mask.count_ones() as usize > cap {
                    continue;
                }
            }
            let context: Vec<FrameElement> = rest
                .iter()
                .enumerate()
                .filter(|(j, _)| mask & (1 << j) != 0)
                .map(|(_, s)| s.element.clone())
                .collect();
            let surface = build_surface(frame, target, &context, lexicon);
            out.push(QuestionTemplate {
                verb_id: frame.verb_id.clone(),
                target: TemplateTarget::Element(target.element.clone()),
                context,
                surface,
            });
        }
    }
    if frame.has_element("AGENT") {
        out.push(QuestionTemplate {
            verb_id: frame.verb_id.clone(),
            target: TemplateTarget::Verb,
            context: Vec::new(),
            surface: "What is the AGENT doing?".to_string(),
        });
    }
    out
}

/// Templates for every frame in the set, keyed by verb id.
pub fn generate_all(
    frames: &FrameSet,
    lexicon: &WhLexicon,
    max_context: Option<usize>,
) -> BTreeMap<String, Vec<QuestionTemplate>> {
    frames
        .frames
        .iter()
        .map(|(verb, frame)| (verb.clone(), generate_templates(frame, lexicon, max_context)))
        .collect()
}

/// JSON-lines record for template output.
#[derive(Debug, Serialize, Deserialize)]
pub struct TemplateRecord {
    pub verb: String,
    pub target: String,
    pub context: Vec<String>,
    pub surface: String,
}

impl From<&QuestionTemplate> for TemplateRecord {
    fn from(t: &QuestionTemplate) -> Self {
        TemplateRecord {
            verb: t.verb_id.clone(),
            target: t.target.name().to_string(),
            context: t.context.iter().map(|e| e.0.clone()).collect(),
            surface: t.surface.clone(),
        }
    }
}
