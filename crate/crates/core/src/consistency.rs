//! Answer/frame-element consistency: a pair is consistent when at least one
//! training sample carries both the answer and the frame element.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::Error;
use crate::metrics::Prediction;
use crate::realize::QASample;
use crate::Result;

/// Set of `(answer, element)` pairs observed in the train split.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsistencyIndex {
    pairs: BTreeSet<(String, String)>,
    per_answer: BTreeMap<String, BTreeSet<String>>,
}

fn norm_answer(answer: &str) -> String {
    answer.trim().to_lowercase()
}

/// Collect the exact set of observed `(answer, element)` combinations.
/// Duplicates collapse; the index is a set.
pub fn build_index<'a, I>(train: I) -> ConsistencyIndex
where
    I: IntoIterator<Item = &'a QASample>,
{
    let mut index = ConsistencyIndex::default();
    for sample in train {
        index.insert(&sample.answer, &sample.frame_element);
    }
    index
}

impl ConsistencyIndex {
    pub fn insert(&mut self, answer: &str, element: &str) {
        let answer = norm_answer(answer);
        let element = element.trim().to_string();
        self.pairs.insert((answer.clone(), element.clone()));
        self.per_answer.entry(answer).or_default().insert(element);
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// JSON export `{answer: [elements...]}` for inspection.
    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(&self.per_answer).expect("index serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.export_json())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Membership test in the observed pair set.
pub fn is_consistent(answer: &str, element: &str, index: &ConsistencyIndex) -> bool {
    index
        .pairs
        .contains(&(norm_answer(answer), element.trim().to_string()))
}

/// Fraction of predictions whose `(answer, element)` pair was observed in
/// training, × 100. Every prediction must carry a frame element.
pub fn consistency_rate(preds: &[Prediction], index: &ConsistencyIndex) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::MissingElementPrediction(0));
    }
    let mut consistent = 0usize;
    for pred in preds {
        let element = pred
            .predicted_element
            .as_deref()
            .ok_or(Error::MissingElementPrediction(pred.sample_id))?;
        if is_consistent(&pred.predicted_answer, element, index) {
            consistent += 1;
        }
    }
    Ok(consistent as f64 / preds.len() as f64 * 100.0)
}

/// Number of distinct frame elements the answer fills in training; 0 for an
/// unseen answer.
pub fn distinct_element_count(answer: &str, index: &ConsistencyIndex) -> usize {
    index
        .per_answer
        .get(&norm_answer(answer))
        .map_or(0, BTreeSet::len)
}

/// Fill missing predicted elements from the element implied by each sample's
/// question template, for single-head models that predict answers only.
pub fn fill_elements_from_gold(
    preds: &[Prediction],
    gold: &[QASample],
) -> Result<Vec<Prediction>> {
    let by_id: BTreeMap<u64, &QASample> = gold.iter().map(|s| (s.id, s)).collect();
    preds
        .iter()
        .map(|p| {
            let mut filled = p.clone();
            if filled.predicted_element.is_none() {
                let sample = by_id
                    .get(&p.sample_id)
                    .ok_or(Error::UnknownSample(p.sample_id))?;
                filled.predicted_element = Some(sample.frame_element.clone());
            }
            Ok(filled)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realize::Split;

    fn sample(answer: &str, element: &str) -> QASample {
        QASample {
            id: 0,
            image_id: "img".into(),
            verb_id: "catching".into(),
            question: "who catches?".into(),
            answer: answer.into(),
            frame_element: element.into(),
            split: Split::Train,
        }
    }

    fn pred(id: u64, answer: &str, element: Option<&str>) -> Prediction {
        Prediction {
            sample_id: id,
            predicted_answer: answer.into(),
            predicted_element: element.map(String::from),
        }
    }

    #[test]
    fn observed_pairs_are_consistent_and_others_not() {
        let train = vec![sample("bear", "AGENT"), sample("bear", "CHASEE")];
        let index = build_index(&train);
        assert!(is_consistent("bear", "AGENT", &index));
        assert!(is_consistent("bear", "CHASEE", &index));
        assert!(!is_consistent("bear", "PLACE", &index));
        assert!(!is_consistent("fish", "AGENT", &index));
    }

    #[test]
    fn empty_train_makes_everything_inconsistent() {
        let index = build_index(&[]);
        assert!(index.is_empty());
        assert!(!is_consistent("bear", "AGENT", &index));
    }

    #[test]
    fn duplicate_samples_build_identical_index() {
        let once = build_index(&[sample("bear", "AGENT")]);
        let twice = build_index(&[sample("bear", "AGENT"), sample("bear", "AGENT")]);
        assert_eq!(once, twice);
    }

    #[test]
    fn rate_counts_observed_pairs() {
        let train = vec![
            sample("bear", "AGENT"),
            sample("fish", "CAUGHTITEM"),
            sample("kitchen", "PLACE"),
        ];
        let index = build_index(&train);
        let preds = vec![
            pred(0, "bear", Some("AGENT")),
            pred(1, "fish", Some("CAUGHTITEM")),
            pred(2, "kitchen", Some("PLACE")),
            pred(3, "bear", Some("PLACE")), // unseen pair
        ];
        assert_eq!(consistency_rate(&preds, &index).unwrap(), 75.0);

        let all_seen = &preds[..3];
        assert_eq!(consistency_rate(all_seen, &index).unwrap(), 100.0);

        let missing = vec![pred(7, "bear", None)];
        assert!(matches!(
            consistency_rate(&missing, &index).unwrap_err(),
            Error::MissingElementPrediction(7)
        ));
    }

    #[test]
    fn gold_labels_are_fully_consistent_with_their_own_index() {
        let train: Vec<QASample> = (0..20)
            .map(|i| {
                let mut s = sample(&format!("a{}", i % 7), if i % 2 == 0 { "AGENT" } else { "PLACE" });
                s.id = i;
                s
            })
            .collect();
        let index = build_index(&train);
        let gold_preds: Vec<Prediction> = train
            .iter()
            .map(|s| pred(s.id, &s.answer, Some(&s.frame_element)))
            .collect();
        assert_eq!(consistency_rate(&gold_preds, &index).unwrap(), 100.0);
    }

    #[test]
    fn distinct_element_counts_project_the_pair_set() {
        let mut index = ConsistencyIndex::default();
        for i in 0..81 {
            index.insert("man", &format!("ROLE{i}"));
        }
        index.insert("cafe", "PLACE");
        assert_eq!(distinct_element_count("man", &index), 81);
        for i in 0..81 {
            assert!(is_consistent("man", &format!("ROLE{i}"), &index));
        }
        assert_eq!(distinct_element_count("cafe", &index), 1);
        assert_eq!(distinct_element_count("unseen", &index), 0);
    }

    #[test]
    fn fill_elements_uses_the_template_target() {
        let mut gold = vec![sample("bear", "AGENT")];
        gold[0].id = 5;
        let filled =
            fill_elements_from_gold(&[pred(5, "wolf", None)], &gold).unwrap();
        assert_eq!(filled[0].predicted_element.as_deref(), Some("AGENT"));

        assert!(matches!(
            fill_elements_from_gold(&[pred(9, "wolf", None)], &gold).unwrap_err(),
            Error::UnknownSample(9)
        ));
    }

    #[test]
    fn export_is_answer_to_element_list() {
        let index = build_index(&[sample("bear", "AGENT"), sample("bear", "CHASEE")]);
        let json = index.export_json();
        let parsed: BTreeMap<String, Vec<String>> = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["bear"], vec!["AGENT", "CHASEE"]);
    }
}
