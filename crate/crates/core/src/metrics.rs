//! Accuracy, 2x2 chi-square significance, and fine-grained breakdowns.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::jsonl;
use crate::realize::QASample;
use crate::Result;

/// Critical value of the chi-square distribution at 1 degree of freedom,
/// alpha = 0.01.
pub const CHI_SQUARE_CRITICAL_1DOF_001: f64 = 6.635;

/// One model prediction, keyed to a dataset sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: u64,
    #[serde(rename = "answer")]
    pub predicted_answer: String,
    #[serde(rename = "element", default, skip_serializing_if = "Option::is_none")]
    pub predicted_element: Option<String>,
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    jsonl::read_all(path)
}

fn eq_ci(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

fn prediction_map(preds: &[Prediction]) -> HashMap<u64, &Prediction> {
    preds.iter().map(|p| (p.sample_id, p)).collect()
}

/// Exact case-insensitive match ratio × 100 over the gold samples.
pub fn accuracy(preds: &[Prediction], gold: &[QASample]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::MissingPrediction(0));
    }
    let by_id = prediction_map(preds);
    let mut correct = 0usize;
    for sample in gold {
        let pred = by_id
            .get(&sample.id)
            .ok_or(Error::MissingPrediction(sample.id))?;
        if eq_ci(&pred.predicted_answer, &sample.answer) {
            correct += 1;
        }
    }
    Ok(correct as f64 / gold.len() as f64 * 100.0)
}

/// A 2x2 contingency table: rows are systems, columns correct/incorrect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contingency2x2 {
    pub rows: [[u64; 2]; 2],
}

impl Contingency2x2 {
    pub fn new(row_a: (u64, u64), row_b: (u64, u64)) -> Self {
        Contingency2x2 {
            rows: [[row_a.0, row_a.1], [row_b.0, row_b.1]],
        }
    }

    /// Build the correct/incorrect table for two prediction sets over the
    /// same gold samples.
    pub fn from_predictions(
        preds_a: &[Prediction],
        preds_b: &[Prediction],
        gold: &[QASample],
    ) -> Result<Self> {
        let map_a = prediction_map(preds_a);
        let map_b = prediction_map(preds_b);
        let mut rows = [[0u64; 2]; 2];
        for sample in gold {
            let a = map_a
                .get(&sample.id)
                .ok_or(Error::MissingPrediction(sample.id))?;
            let b = map_b
                .get(&sample.id)
                .ok_or(Error::MissingPrediction(sample.id))?;
            rows[0][usize::from(!eq_ci(&a.predicted_answer, &sample.answer))] += 1;
            rows[1][usize::from(!eq_ci(&b.predicted_answer, &sample.answer))] += 1;
        }
        Ok(Contingency2x2 { rows })
    }
}

/// Pearson chi-square statistic for a 2x2 table, expected counts from the
/// row/column marginals. With `yates` the absolute deviation is reduced by
/// 0.5 (floored at zero, so independent tables stay at 0.0).
pub fn chi_square_2x2(table: &Contingency2x2, yates: bool) -> Result<f64> {
    let r = &table.rows;
    let row_totals = [r[0][0] + r[0][1], r[1][0] + r[1][1]];
    let col_totals = [r[0][0] + r[1][0], r[0][1] + r[1][1]];
    let n = row_totals[0] + row_totals[1];
    if row_totals.contains(&0) || col_totals.contains(&0) {
        return Err(Error::DegenerateTable);
    }
    let c = if yates { 0.5 } else { 0.0 };
    let mut stat = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = row_totals[i] as f64 * col_totals[j] as f64 / n as f64;
            let dev = ((r[i][j] as f64 - expected).abs() - c).max(0.0);
            stat += dev * dev / expected;
        }
    }
    Ok(stat)
}

/// Grouping key for per-group accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakdownKey {
    /// First question word, lowercased.
    Wh,
    Verb,
    Element,
}

impl BreakdownKey {
    fn of(self, sample: &QASample) -> String {
        match self {
            BreakdownKey::Wh => sample.wh_key(),
            BreakdownKey::Verb => sample.verb_id.clone(),
            BreakdownKey::Element => sample.frame_element.clone(),
        }
    }
}

impl std::str::FromStr for BreakdownKey {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "wh" => Ok(BreakdownKey::Wh),
            "verb" => Ok(BreakdownKey::Verb),
            "element" => Ok(BreakdownKey::Element),
            other => Err(format!("unknown breakdown key {other:?}")),
        }
    }
}

/// Per-group accuracy; groups with zero samples never appear.
pub fn breakdown(
    preds: &[Prediction],
    gold: &[QASample],
    key: BreakdownKey,
) -> Result<BTreeMap<String, f64>> {
    let by_id = prediction_map(preds);
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for sample in gold {
        let pred = by_id
            .get(&sample.id)
            .ok_or(Error::MissingPrediction(sample.id))?;
        let entry = counts.entry(key.of(sample)).or_default();
        entry.1 += 1;
        if eq_ci(&pred.predicted_answer, &sample.answer) {
            entry.0 += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(k, (correct, total))| (k, correct as f64 / total as f64 * 100.0))
        .collect())
}

/// One histogram bin: a half-open accuracy-difference interval, or the
/// dedicated exact-zero bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffBin {
    pub label: String,
    pub count: usize,
}

/// Histogram of per-group accuracy differences `acc_b - acc_a` over the bin
/// edges, with exact 0 in its own bin. Both maps must cover the same keys
/// and the edges must span every difference.
pub fn difference_histogram(
    acc_a: &BTreeMap<String, f64>,
    acc_b: &BTreeMap<String, f64>,
    bin_edges: &[f64],
) -> Result<Vec<DiffBin>> {
    for key in acc_a.keys() {
        if !acc_b.contains_key(key) {
            return Err(Error::KeyMismatch(key.clone()));
        }
    }
    for key in acc_b.keys() {
        if !acc_a.contains_key(key) {
            return Err(Error::KeyMismatch(key.clone()));
        }
    }
    if bin_edges.len() < 2 {
        return Err(Error::ValueOutOfBins(f64::NAN));
    }

    let mut intervals: Vec<(f64, f64, usize)> = bin_edges
        .windows(2)
        .map(|w| (w[0], w[1], 0))
        .collect();
    let mut zero_count = 0usize;

    for key in acc_a.keys() {
        let delta = acc_b[key] - acc_a[key];
        if delta == 0.0 {
            zero_count += 1;
            continue;
        }
        let slot = intervals
            .iter_mut()
            .find(|(lo, hi, _)| delta > *lo && delta <= *hi)
            .ok_or(Error::ValueOutOfBins(delta))?;
        slot.2 += 1;
    }

    let mut bins = Vec::new();
    let mut zero_emitted = false;
    for (lo, hi, count) in intervals {
        // the interval ending at 0 excludes 0 itself, which has its own bin
        let label = if hi == 0.0 {
            format!("({lo}%,0%)")
        } else {
            format!("({lo}%,{hi}%]")
        };
        bins.push(DiffBin { label, count });
        if hi == 0.0 {
            bins.push(DiffBin {
                label: "0%".to_string(),
                count: zero_count,
            });
            zero_emitted = true;
        }
    }
    if !zero_emitted {
        bins.insert(
            0,
            DiffBin {
                label: "0%".to_string(),
                count: zero_count,
            },
        );
    }
    Ok(bins)
}

/// The paper-style performance-interval edges: -100% to 100% in steps of 10.
pub fn default_bin_edges() -> Vec<f64> {
    (-10..=10).map(|i| i as f64 * 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realize::Split;
    use proptest::prelude::*;

    fn sample(id: u64, question: &str, answer: &str, verb: &str, element: &str) -> QASample {
        QASample {
            id,
            image_id: format!("img{id}"),
            verb_id: verb.into(),
            question: question.into(),
            answer: answer.into(),
            frame_element: element.into(),
            split: Split::Test,
        }
    }

    fn pred(id: u64, answer: &str) -> Prediction {
        Prediction {
            sample_id: id,
            predicted_answer: answer.into(),
            predicted_element: None,
        }
    }

    #[test]
    fn accuracy_counts_case_insensitive_matches() {
        let gold = vec![
            sample(0, "Who is cooking?", "boy", "cooking", "AGENT"),
            sample(1, "Who is cooking?", "girl", "cooking", "AGENT"),
            sample(2, "Who is cooking?", "man", "cooking", "AGENT"),
            sample(3, "Who is cooking?", "woman", "cooking", "AGENT"),
        ];
        let preds = vec![pred(0, "Boy"), pred(1, "boy"), pred(2, "boy"), pred(3, "boy")];
        assert_eq!(accuracy(&preds, &gold).unwrap(), 25.0);

        let all = vec![pred(0, "boy"), pred(1, "girl"), pred(2, "man"), pred(3, "woman")];
        assert_eq!(accuracy(&all, &gold).unwrap(), 100.0);

        assert!(matches!(
            accuracy(&preds[..2], &gold).unwrap_err(),
            Error::MissingPrediction(_)
        ));
    }

    /// Independent marginal-arithmetic oracle: build the expected table by
    /// hand and sum the textbook formula term by term.
    fn chi_square_oracle(rows: [[u64; 2]; 2], c: f64) -> f64 {
        let n = (rows[0][0] + rows[0][1] + rows[1][0] + rows[1][1]) as f64;
        let r0 = (rows[0][0] + rows[0][1]) as f64;
        let r1 = (rows[1][0] + rows[1][1]) as f64;
        let c0 = (rows[0][0] + rows[1][0]) as f64;
        let c1 = (rows[0][1] + rows[1][1]) as f64;
        let e = [[r0 * c0 / n, r0 * c1 / n], [r1 * c0 / n, r1 * c1 / n]];
        let mut stat = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let dev = ((rows[i][j] as f64 - e[i][j]).abs() - c).max(0.0);
                stat += dev * dev / e[i][j];
            }
        }
        stat
    }

    #[test]
    fn chi_square_reproduces_published_statistic() {
        let table = Contingency2x2::new((34905, 53065), (39522, 48448));
        let yates = chi_square_2x2(&table, true).unwrap();
        assert!((yates - 496.1854).abs() < 0.001, "yates = {yates}");
        assert!((yates - chi_square_oracle(table.rows, 0.5)).abs() < 1e-9);

        let uncorrected = chi_square_2x2(&table, false).unwrap();
        assert!((uncorrected - 496.40).abs() < 0.01, "uncorrected = {uncorrected}");
        assert!((uncorrected - chi_square_oracle(table.rows, 0.0)).abs() < 1e-9);
    }

    #[test]
    fn chi_square_identical_rows_is_zero() {
        let table = Contingency2x2::new((10, 20), (10, 20));
        assert_eq!(chi_square_2x2(&table, false).unwrap(), 0.0);
        assert_eq!(chi_square_2x2(&table, true).unwrap(), 0.0);
    }

    #[test]
    fn chi_square_small_table_matches_hand_computation() {
        // rows (10,10)/(15,5): E = 12.5/7.5 per column, stat = 2*(6.25/12.5)
        // + 2*(6.25/7.5) = 8/3
        let table = Contingency2x2::new((10, 10), (15, 5));
        let stat = chi_square_2x2(&table, false).unwrap();
        assert!((stat - 8.0 / 3.0).abs() < 1e-12);
        assert!((stat - chi_square_oracle(table.rows, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn chi_square_degenerate_marginals_error() {
        let table = Contingency2x2::new((0, 0), (15, 5));
        assert!(matches!(
            chi_square_2x2(&table, false).unwrap_err(),
            Error::DegenerateTable
        ));
        let table = Contingency2x2::new((10, 0), (15, 0));
        assert!(matches!(
            chi_square_2x2(&table, true).unwrap_err(),
            Error::DegenerateTable
        ));
    }

    #[test]
    fn breakdown_groups_by_key() {
        let gold = vec![
            sample(0, "Who is cooking?", "boy", "cooking", "AGENT"),
            sample(1, "Where does the boy cook?", "kitchen", "cooking", "PLACE"),
            sample(2, "Who is buying?", "woman", "buying", "AGENT"),
        ];
        let preds = vec![pred(0, "boy"), pred(1, "kitchen"), pred(2, "man")];

        let by_wh = breakdown(&preds, &gold, BreakdownKey::Wh).unwrap();
        assert_eq!(by_wh["who"], 50.0);
        assert_eq!(by_wh["where"], 100.0);

        let by_verb = breakdown(&preds, &gold, BreakdownKey::Verb).unwrap();
        assert_eq!(by_verb["cooking"], 100.0);
        assert_eq!(by_verb["buying"], 0.0);

        let by_element = breakdown(&preds, &gold, BreakdownKey::Element).unwrap();
        assert_eq!(by_element["AGENT"], 50.0);
        assert_eq!(by_element.len(), 2);
    }

    #[test]
    fn histogram_places_deltas_in_intervals() {
        let a: BTreeMap<String, f64> = [
            ("v1".to_string(), 50.0),
            ("v2".to_string(), 50.0),
            ("v3".to_string(), 50.0),
        ]
        .into_iter()
        .collect();
        let b: BTreeMap<String, f64> = [
            ("v1".to_string(), 38.0), // delta -12
            ("v2".to_string(), 50.0), // delta 0
            ("v3".to_string(), 55.0), // delta +5
        ]
        .into_iter()
        .collect();
        let bins = difference_histogram(&a, &b, &default_bin_edges()).unwrap();
        let by_label: BTreeMap<&str, usize> =
            bins.iter().map(|b| (b.label.as_str(), b.count)).collect();
        assert_eq!(by_label["(-20%,-10%]"], 1);
        assert_eq!(by_label["0%"], 1);
        assert_eq!(by_label["(0%,10%]"], 1);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 3);
    }

    #[test]
    fn histogram_edge_semantics() {
        let a: BTreeMap<String, f64> = [("v".to_string(), 10.0)].into_iter().collect();
        let b: BTreeMap<String, f64> = [("v".to_string(), 45.0)].into_iter().collect();
        // delta +35 → (30%,40%]
        let bins = difference_histogram(&a, &b, &default_bin_edges()).unwrap();
        let hit: Vec<&DiffBin> = bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(hit.len(), 1);
        assert_eq!(hit[0].label, "(30%,40%]");

        // identical maps → all mass at 0%
        let bins = difference_histogram(&a, &a, &default_bin_edges()).unwrap();
        for bin in &bins {
            assert_eq!(bin.count, usize::from(bin.label == "0%"));
        }
    }

    #[test]
    fn histogram_errors() {
        let a: BTreeMap<String, f64> = [("v".to_string(), 10.0)].into_iter().collect();
        let other: BTreeMap<String, f64> = [("w".to_string(), 10.0)].into_iter().collect();
        assert!(matches!(
            difference_histogram(&a, &other, &default_bin_edges()).unwrap_err(),
            Error::KeyMismatch(_)
        ));
        let b: BTreeMap<String, f64> = [("v".to_string(), 20.0)].into_iter().collect();
        assert!(matches!(
            difference_histogram(&a, &b, &[0.0, 5.0]).unwrap_err(),
            Error::ValueOutOfBins(_)
        ));
    }

    proptest! {
        /// Row and column swaps leave the statistic unchanged, and the Yates
        /// statistic never exceeds the uncorrected one.
        #[test]
        fn chi_square_symmetries(a in 1u64..2000, b in 1u64..2000, c in 1u64..2000, d in 1u64..2000) {
            let base = Contingency2x2::new((a, b), (c, d));
            let row_swapped = Contingency2x2::new((c, d), (a, b));
            let col_swapped = Contingency2x2::new((b, a), (d, c));
            let stat = chi_square_2x2(&base, false).unwrap();
            prop_assert!((stat - chi_square_2x2(&row_swapped, false).unwrap()).abs() < 1e-9);
            prop_assert!((stat - chi_square_2x2(&col_swapped, false).unwrap()).abs() < 1e-9);

            let yates = chi_square_2x2(&base, true).unwrap();
            prop_assert!(yates <= stat + 1e-12);
        }

        /// Histogram counts sum to the number of groups.
        #[test]
        fn histogram_sum_law(deltas in proptest::collection::vec(-99.0f64..99.0, 1..30)) {
            let a: BTreeMap<String, f64> =
                deltas.iter().enumerate().map(|(i, _)| (format!("k{i}"), 0.0)).collect();
            let b: BTreeMap<String, f64> =
                deltas.iter().enumerate().map(|(i, d)| (format!("k{i}"), *d)).collect();
            let bins = difference_histogram(&a, &b, &default_bin_edges()).unwrap();
            prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), deltas.len());
        }
    }
}
