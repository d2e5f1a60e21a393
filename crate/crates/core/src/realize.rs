//! Template realization: substituting image-annotation fillers into question
//! templates to produce concrete QA samples.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::jsonl;
use crate::schema::{FrameSet, VerbFrame};
use crate::template::{QuestionTemplate, TemplateTarget};
use crate::Result;

/// Dataset partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// One annotator's frame for one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageAnnotation {
    pub image_id: String,
    pub verb_id: String,
    /// Frame element name → noun filler; empty string means the element is
    /// not visible in the image.
    pub fillers: BTreeMap<String, String>,
    pub annotator_index: usize,
}

impl ImageAnnotation {
    fn filler(&self, element: &str) -> Option<&str> {
        self.fillers
            .get(element)
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
    }
}

/// A realized `<image, question, answer, frame-element>` record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QASample {
    /// Assigned by [`build_dataset`] after canonical ordering.
    pub id: u64,
    pub image_id: String,
    #[serde(rename = "verb")]
    pub verb_id: String,
    pub question: String,
    pub answer: String,
    #[serde(rename = "element")]
    pub frame_element: String,
    pub split: Split,
}

impl QASample {
    /// First question word, lowercased: the wh key used in reports.
    pub fn wh_key(&self) -> String {
        self.question
            .split_whitespace()
            .next()
            .unwrap_or("")
            .to_lowercase()
    }
}

/// Indexed vocabulary over strings; lookup is by exact match.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Build from an iterator; entries are deduplicated and sorted so the
    /// index assignment is deterministic.
    pub fn build<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: std::collections::BTreeSet<String> =
            items.into_iter().map(Into::into).collect();
        let items: Vec<String> = set.into_iter().collect();
        let index = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Vocab { items, index }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn id_of(&self, item: &str) -> Option<usize> {
        self.index.get(item).copied()
    }

    pub fn item(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    /// Order-sensitive FNV-1a digest over the entries, used to detect
    /// checkpoint/dataset vocabulary drift.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for item in &self.items {
            for b in item.as_bytes() {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x100000001b3);
            }
            h ^= 0xff;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// The realized dataset with vocabularies computed from the train split.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub samples: Vec<QASample>,
    pub answer_vocab: Vocab,
    pub element_vocab: Vocab,
    /// Exact `(image, question, answer)` duplicates removed during the build.
    pub duplicates_removed: usize,
}

impl Dataset {
    pub fn from_samples(samples: Vec<QASample>) -> Self {
        let answer_vocab = Vocab::build(
            samples
                .iter()
                .filter(|s| s.split == Split::Train)
                .map(|s| s.answer.clone()),
        );
        let element_vocab = Vocab::build(
            samples
                .iter()
                .filter(|s| s.split == Split::Train)
                .map(|s| s.frame_element.clone()),
        );
        Dataset {
            samples,
            answer_vocab,
            element_vocab,
            duplicates_removed: 0,
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &QASample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn by_id(&self, id: u64) -> Option<&QASample> {
        // ids are assigned sequentially by build_dataset
        self.samples
            .get(id as usize)
            .filter(|s| s.id == id)
            .or_else(|| self.samples.iter().find(|s| s.id == id))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Dataset::from_samples(jsonl::read_all(path)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        jsonl::write_all(path, self.samples.iter())
    }
}

fn token_core(token: &str) -> (&str, &str) {
    let end = token
        .char_indices()
        .rev()
        .take_while(|(_, c)| !c.is_ascii_alphanumeric())
        .map(|(i, _)| i)
        .last()
        .unwrap_or(token.len());
    (&token[..end], &token[end..])
}

/// Instantiate one template with one annotation.
///
/// Returns `None` when a referenced filler — the target (its filler is the
/// answer), the subject, or any context element — is empty or absent.
/// Substitution is verbatim and token-by-token; answers are lowercased.
pub fn realize(
    template: &QuestionTemplate,
    ann: &ImageAnnotation,
    frame: &VerbFrame,
) -> Result<Option<QASample>> {
    if template.verb_id != ann.verb_id {
        return Err(Error::VerbMismatch {
            template: template.verb_id.clone(),
            annotation: ann.verb_id.clone(),
        });
    }

    let answer = match &template.target {
        TemplateTarget::Verb => frame.forms.gerund.clone(),
        TemplateTarget::Element(e) => match ann.filler(e.as_str()) {
            Some(f) => f.to_lowercase(),
            None => return Ok(None),
        },
    };

    let mut words = Vec::new();
    for token in template.surface.split_whitespace() {
        let (core, punct) = token_core(token);
        if frame.has_element(core) {
            match ann.filler(core) {
                Some(f) => words.push(format!("{f}{punct}")),
                None => return Ok(None),
            }
        } else {
            words.push(token.to_string());
        }
    }
    let question = words.join(" ");
    debug_assert!(
        !question
            .split_whitespace()
            .any(|t| frame.has_element(token_core(t).0)),
        "unsubstituted placeholder in {question:?}"
    );

    Ok(Some(QASample {
        id: 0,
        image_id: ann.image_id.clone(),
        verb_id: ann.verb_id.clone(),
        question,
        answer,
        frame_element: template.target.name().to_string(),
        split: Split::Train,
    }))
}

/// Realize every applicable (template × annotation) pair into a [`Dataset`].
///
/// Output order is canonical — sorted by (image, verb, target, context) —
/// and exact `(image, question, answer)` duplicates are removed, keeping the
/// first in canonical order. Vocabularies are computed from the train split.
pub fn build_dataset(
    annotations: &[ImageAnnotation],
    templates: &BTreeMap<String, Vec<QuestionTemplate>>,
    frames: &FrameSet,
    split_assignment: &HashMap<String, Split>,
) -> Result<Dataset> {
    let mut keyed: Vec<((String, String, String, String, usize), QASample)> = Vec::new();

    for ann in annotations {
        let split = *split_assignment
            .get(&ann.image_id)
            .ok_or_else(|| Error::UnknownImage(ann.image_id.clone()))?;
        let frame = frames.get(&ann.verb_id).ok_or_else(|| Error::UnknownVerb {
            image: ann.image_id.clone(),
            verb: ann.verb_id.clone(),
        })?;
        for key in ann.fillers.keys() {
            if !frame.has_element(key) {
                return Err(Error::UnknownVerb {
                    image: ann.image_id.clone(),
                    verb: format!("{} (filler {key:?} is not a slot)", ann.verb_id),
                });
            }
        }
        let Some(verb_templates) = templates.get(&ann.verb_id) else {
            continue;
        };
        for template in verb_templates {
            if let Some(mut sample) = realize(template, ann, frame)? {
                sample.split = split;
                let context = template
                    .context
                    .iter()
                    .map(|e| e.as_str())
                    .collect::<Vec<_>>()
                    .join(",");
                keyed.push((
                    (
                        sample.image_id.clone(),
                        sample.verb_id.clone(),
                        template.target.name().to_string(),
                        context,
                        ann.annotator_index,
                    ),
                    sample,
                ));
            }
        }
    }

    keyed.sort_by(|a, b| a.0.cmp(&b.0));

    let mut seen: HashSet<(String, String, String)> = HashSet::new();
    let mut samples = Vec::with_capacity(keyed.len());
    let mut duplicates_removed = 0;
    for (_, mut sample) in keyed {
        let key = (
            sample.image_id.clone(),
            sample.question.clone(),
            sample.answer.clone(),
        );
        if seen.insert(key) {
            sample.id = samples.len() as u64;
            samples.push(sample);
        } else {
            duplicates_removed += 1;
        }
    }

    let mut dataset = Dataset::from_samples(samples);
    dataset.duplicates_removed = duplicates_removed;
    Ok(dataset)
}

/// Wire record: one image with one or more annotator frames.
#[derive(Debug, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub verb: String,
    pub frames: Vec<BTreeMap<String, String>>,
}

/// Load annotations, expanding each annotator frame into its own record.
pub fn load_annotations(path: &Path) -> Result<Vec<ImageAnnotation>> {
    let mut out = Vec::new();
    for record in jsonl::JsonlReader::<AnnotationRecord>::open(path)? {
        let record = record?;
        for (i, fillers) in record.frames.into_iter().enumerate() {
            out.push(ImageAnnotation {
                image_id: record.image_id.clone(),
                verb_id: record.verb.clone(),
                fillers,
                annotator_index: i,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitRecord {
    pub image_id: String,
    pub split: Split,
}

pub fn load_splits(path: &Path) -> Result<HashMap<String, Split>> {
    let mut out = HashMap::new();
    for record in jsonl::JsonlReader::<SplitRecord>::open(path)? {
        let record = record?;
        out.insert(record.image_id, record.split);
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The cooking annotation from the samples table: boy cooking meat in a
    /// wok with a spatula in a kitchen; heat source not visible.
    pub fn cooking_annotation() -> ImageAnnotation {
        ImageAnnotation {
            image_id: "cooking_21".into(),
            verb_id: "cooking".into(),
            fillers: [
                ("AGENT", "boy"),
                ("FOOD", "meat"),
                ("CONTAINER", "wok"),
                ("HEATSOURCE", ""),
                ("TOOL", "spatula"),
                ("PLACE", "kitchen"),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
            annotator_index: 0,
        }
    }

    /// Buying annotation with an empty SELLER cell.
    pub fn buying_annotation_no_seller() -> ImageAnnotation {
        ImageAnnotation {
            image_id: "buying_3".into(),
            verb_id: "buying".into(),
            fillers: [
                ("AGENT", "adolescent"),
                ("GOODS", "book"),
                ("PAYMENT", "cash"),
                ("SELLER", ""),
                ("PLACE", ""),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
            annotator_index: 0,
        }
    }
}
