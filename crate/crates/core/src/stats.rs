//! Dataset distribution reports: frame-element and answer frequencies,
//! wh-word distribution, and question-length histogram.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::realize::{Dataset, Split};

/// Frequency distributions over one split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub split: String,
    pub samples: usize,
    pub element_freq: BTreeMap<String, usize>,
    pub answer_freq: BTreeMap<String, usize>,
    pub wh_dist: BTreeMap<String, usize>,
    /// Question length in whitespace tokens (the final `?` rides on the last
    /// word) → count.
    pub length_hist: BTreeMap<usize, usize>,
}

/// Count the distributions over the chosen split.
pub fn compute_stats(dataset: &Dataset, split: Split) -> StatsReport {
    let mut report = StatsReport {
        split: split.to_string(),
        ..StatsReport::default()
    };
    for sample in dataset.split(split) {
        report.samples += 1;
        *report
            .element_freq
            .entry(sample.frame_element.clone())
            .or_default() += 1;
        *report.answer_freq.entry(sample.answer.clone()).or_default() += 1;
        *report.wh_dist.entry(sample.wh_key()).or_default() += 1;
        let len = sample.question.split_whitespace().count();
        *report.length_hist.entry(len).or_default() += 1;
    }
    report
}

/// Top `k` entries by descending count, ties broken lexicographically.
pub fn top_k(freq: &BTreeMap<String, usize>, k: usize) -> Vec<(String, usize)> {
    let mut entries: Vec<(String, usize)> =
        freq.iter().map(|(s, &n)| (s.clone(), n)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    entries
}

impl StatsReport {
    /// Aligned-column text rendering of the top-`k` tables.
    pub fn render_table(&self, k: usize) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "split: {}   samples: {}\n\n",
            self.split, self.samples
        ));
        let section = |title: &str, rows: &[(String, usize)]| {
            let width = rows
                .iter()
                .map(|(s, _)| s.len())
                .chain([title.len()])
                .max()
                .unwrap_or(0);
            let mut s = format!("{title:<width$}  count\n");
            for (name, n) in rows {
                s.push_str(&format!("{name:<width$}  {n}\n"));
            }
            s.push('\n');
            s
        };
        out.push_str(&section("frame element", &top_k(&self.element_freq, k)));
        out.push_str(&section("answer", &top_k(&self.answer_freq, k)));
        out.push_str(&section("wh word", &top_k(&self.wh_dist, k)));

        out.push_str("length  count\n");
        for (len, n) in &self.length_hist {
            out.push_str(&format!("{len:<6}  {n}\n"));
        }
        out
    }

    /// CSV rows `distribution,key,count` for plotting.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("distribution,key,count\n");
        for (k, n) in &self.element_freq {
            out.push_str(&format!("element,{k},{n}\n"));
        }
        for (k, n) in &self.answer_freq {
            out.push_str(&format!("answer,{k},{n}\n"));
        }
        for (k, n) in &self.wh_dist {
            out.push_str(&format!("wh,{k},{n}\n"));
        }
        for (k, n) in &self.length_hist {
            out.push_str(&format!("length,{k},{n}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realize::QASample;
    use proptest::prelude::*;

    fn sample(question: &str, answer: &str, element: &str, split: Split) -> QASample {
        QASample {
            id: 0,
            image_id: "img".into(),
            verb_id: "cooking".into(),
            question: question.into(),
            answer: answer.into(),
            frame_element: element.into(),
            split,
        }
    }

    #[test]
    fn single_sample_counts() {
        let dataset = Dataset::from_samples(vec![sample(
            "Who is cooking?",
            "boy",
            "AGENT",
            Split::Train,
        )]);
        let report = compute_stats(&dataset, Split::Train);
        assert_eq!(report.samples, 1);
        assert_eq!(report.wh_dist, [("who".to_string(), 1)].into_iter().collect());
        assert_eq!(report.length_hist, [(3, 1)].into_iter().collect());
        assert_eq!(report.element_freq["AGENT"], 1);
        assert_eq!(report.answer_freq["boy"], 1);
    }

    #[test]
    fn split_filter_applies() {
        let dataset = Dataset::from_samples(vec![
            sample("Who is cooking?", "boy", "AGENT", Split::Train),
            sample("Where does the boy cook?", "kitchen", "PLACE", Split::Test),
        ]);
        let train = compute_stats(&dataset, Split::Train);
        assert_eq!(train.samples, 1);
        assert!(!train.element_freq.contains_key("PLACE"));
        let test = compute_stats(&dataset, Split::Test);
        assert_eq!(test.samples, 1);
        assert_eq!(test.wh_dist["where"], 1);
    }

    #[test]
    fn top_k_orders_by_count_then_name() {
        let freq: BTreeMap<String, usize> =
            [("a".to_string(), 2), ("b".to_string(), 5)].into_iter().collect();
        assert_eq!(top_k(&freq, 1), vec![("b".to_string(), 5)]);

        let tied: BTreeMap<String, usize> =
            [("b".to_string(), 2), ("a".to_string(), 2)].into_iter().collect();
        assert_eq!(
            top_k(&tied, 2),
            vec![("a".to_string(), 2), ("b".to_string(), 2)]
        );
    }

    #[test]
    fn renders_nonempty_outputs() {
        let dataset = Dataset::from_samples(vec![sample(
            "Who is cooking?",
            "boy",
            "AGENT",
            Split::Train,
        )]);
        let report = compute_stats(&dataset, Split::Train);
        assert!(report.render_table(10).contains("who"));
        assert!(report.render_csv().contains("wh,who,1"));
    }

    proptest! {
        /// Counts in each distribution sum to the number of samples, the
        /// report is invariant under input permutation, and top_k is a
        /// prefix of top_{k+1}.
        #[test]
        fn sum_law_and_permutation_invariance(
            answers in proptest::collection::vec("[a-z]{1,4}", 1..40),
            seed in proptest::num::u64::ANY,
        ) {
            let samples: Vec<QASample> = answers
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let q = if i % 2 == 0 { "Who is cooking?" } else { "Where does the boy cook?" };
                    sample(q, a, if i % 2 == 0 { "AGENT" } else { "PLACE" }, Split::Train)
                })
                .collect();
            let report = compute_stats(&Dataset::from_samples(samples.clone()), Split::Train);
            let n = samples.len();
            prop_assert_eq!(report.element_freq.values().sum::<usize>(), n);
            prop_assert_eq!(report.answer_freq.values().sum::<usize>(), n);
            prop_assert_eq!(report.wh_dist.values().sum::<usize>(), n);
            prop_assert_eq!(report.length_hist.values().sum::<usize>(), n);

            let mut shuffled = samples;
            let k = (seed as usize) % shuffled.len();
            shuffled.rotate_left(k);
            let report2 = compute_stats(&Dataset::from_samples(shuffled), Split::Train);
            prop_assert_eq!(&report, &report2);

            let k2 = (seed as usize) % 8;
            let shorter = top_k(&report.answer_freq, k2);
            let longer = top_k(&report.answer_freq, k2 + 1);
            prop_assert_eq!(&shorter[..], &longer[..shorter.len().min(longer.len())]);
        }
    }
}
