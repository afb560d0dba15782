//! Word-level alignment and the three WER statistics.
//!
//! Words are opaque tokens compared by exact equality; callers normalize
//! text before tokenization. Alignment is full dynamic programming with
//! unit costs, so `total_errors` equals the word-level Levenshtein
//! distance between reference and hypothesis.

use std::collections::HashMap;
use std::path::Path;

use crate::data::{EvalDataset, EvalRecord};
use crate::error::{Error, Result};

/// Which ASR system's error counts to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    A,
    B,
}

impl EvalRecord {
    pub fn errors(&self, system: System) -> u64 {
        match system {
            System::A => self.e_a,
            System::B => self.e_b,
        }
    }
}

/// Error counts from one minimum-cost alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlignmentCounts {
    pub substitutions: u64,
    pub insertions: u64,
    pub deletions: u64,
    pub reference_len: u64,
}

impl AlignmentCounts {
    pub fn total_errors(&self) -> u64 {
        self.substitutions + self.insertions + self.deletions
    }
}

/// Splits already-normalized text into words on whitespace.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Aligns hypothesis to reference with unit substitution/insertion/deletion
/// costs and returns the error breakdown of a minimum-cost alignment.
///
/// When several alignments reach the minimum cost, the backtrace prefers
/// substitution over insertion over deletion; the total is unaffected.
pub fn align_and_count<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> AlignmentCounts {
    let n = reference.len();
    let m = hypothesis.len();

    // dist[i][j] = edit distance between reference[..i] and hypothesis[..j]
    let mut dist = vec![vec![0u64; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i as u64;
    }
    for j in 0..=m {
        dist[0][j] = j as u64;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub_cost = u64::from(reference[i - 1] != hypothesis[j - 1]);
            dist[i][j] = (dist[i - 1][j - 1] + sub_cost)
                .min(dist[i][j - 1] + 1)
                .min(dist[i - 1][j] + 1);
        }
    }

    let mut counts = AlignmentCounts {
        reference_len: n as u64,
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let sub_cost = u64::from(reference[i - 1] != hypothesis[j - 1]);
            if dist[i][j] == dist[i - 1][j - 1] + sub_cost {
                counts.substitutions += sub_cost;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && dist[i][j] == dist[i][j - 1] + 1 {
            counts.insertions += 1;
            j -= 1;
        } else {
            counts.deletions += 1;
            i -= 1;
        }
    }
    debug_assert_eq!(counts.total_errors(), dist[n][m]);
    counts
}

/// WER of one system over the dataset: sum of errors over sum of
/// reference words.
pub fn compute_wer(dataset: &EvalDataset, system: System) -> Result<f64> {
    let total_m = dataset.total_ref_words();
    if total_m == 0 {
        return Err(Error::UndefinedStatistic(
            "WER requires a positive total reference word count".into(),
        ));
    }
    let total_e: u64 = dataset.records().iter().map(|r| r.errors(system)).sum();
    Ok(total_e as f64 / total_m as f64)
}

/// The four statistics of interest plus their integer totals.
///
/// `delta_rel` is `None` when system A makes no errors at all, since the
/// relative difference divides by system A's error count.
#[derive(Debug, Clone, PartialEq)]
pub struct WerSummary {
    pub wer_a: f64,
    pub wer_b: f64,
    pub delta_abs: f64,
    pub delta_rel: Option<f64>,
    pub total_ref_words: u64,
    pub total_err_a: u64,
    pub total_err_b: u64,
}

/// Computes WERs of both systems and their absolute/relative difference.
pub fn compute_wer_summary(dataset: &EvalDataset) -> Result<WerSummary> {
    let total_m = dataset.total_ref_words();
    if total_m == 0 {
        return Err(Error::UndefinedStatistic(
            "WER requires a positive total reference word count".into(),
        ));
    }
    let total_a: u64 = dataset.records().iter().map(|r| r.e_a).sum();
    let total_b: u64 = dataset.records().iter().map(|r| r.e_b).sum();
    let m = total_m as f64;
    let diff = total_b as f64 - total_a as f64;
    Ok(WerSummary {
        wer_a: total_a as f64 / m,
        wer_b: total_b as f64 / m,
        delta_abs: diff / m,
        delta_rel: (total_a > 0).then(|| diff / total_a as f64),
        total_ref_words: total_m,
        total_err_a: total_a,
        total_err_b: total_b,
    })
}

/// A transcript file: `utt_id<TAB>text` per line, `#` comments ignored.
pub fn load_transcripts(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('\t') {
            Some((id, text)) => out.push((id.to_string(), text.to_string())),
            None => {
                return Err(Error::parse(
                    path,
                    lineno + 1,
                    "expected utt_id<TAB>text",
                ))
            }
        }
    }
    Ok(out)
}

/// Scores two systems' hypothesis transcripts against shared references,
/// producing the per-utterance record tuples.
///
/// All three inputs must cover exactly the same utt_ids; the first
/// mismatches (up to 10) are listed in the error. `speaker_of` supplies
/// each utterance's speaker label.
pub fn score_systems(
    refs: &[(String, String)],
    hyp_a: &[(String, String)],
    hyp_b: &[(String, String)],
    speaker_of: impl Fn(&str) -> String,
    name: impl Into<String>,
) -> Result<EvalDataset> {
    let index = |pairs: &[(String, String)]| -> HashMap<String, String> {
        pairs.iter().cloned().collect()
    };
    let a = index(hyp_a);
    let b = index(hyp_b);

    let mut mismatches: Vec<String> = Vec::new();
    for (id, _) in refs {
        if !a.contains_key(id) {
            mismatches.push(format!("{id} missing from hypothesis A"));
        }
        if !b.contains_key(id) {
            mismatches.push(format!("{id} missing from hypothesis B"));
        }
    }
    let ref_ids: HashMap<&str, ()> = refs.iter().map(|(id, _)| (id.as_str(), ())).collect();
    for (id, _) in hyp_a.iter().chain(hyp_b.iter()) {
        if !ref_ids.contains_key(id.as_str()) {
            mismatches.push(format!("{id} missing from references"));
        }
    }
    if !mismatches.is_empty() {
        mismatches.sort();
        mismatches.dedup();
        mismatches.truncate(10);
        return Err(Error::Validation(format!(
            "utt_id mismatch across transcript files: {}",
            mismatches.join("; ")
        )));
    }

    let mut records = Vec::with_capacity(refs.len());
    for (id, text) in refs {
        let ref_words = tokenize(text);
        let e_a = align_and_count(&ref_words, &tokenize(&a[id])).total_errors();
        let e_b = align_and_count(&ref_words, &tokenize(&b[id])).total_errors();
        records.push(EvalRecord {
            utt_id: id.clone(),
            speaker_id: speaker_of(id),
            m: ref_words.len() as u64,
            e_a,
            e_b,
        });
    }
    EvalDataset::new(name, records)
}

/// Default speaker labeling for transcript scoring: the utt_id prefix up
/// to the first `-` (the usual corpus convention), else the whole id.
pub fn speaker_from_utt_id(utt_id: &str) -> String {
    utt_id.split('-').next().unwrap_or(utt_id).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(r: &[&str], h: &[&str]) -> AlignmentCounts {
        align_and_count(r, h)
    }

    #[test]
    fn identical_sequences_have_zero_errors() {
        let c = counts(&["a", "b", "c"], &["a", "b", "c"]);
        assert_eq!(c.total_errors(), 0);
        assert_eq!(c.reference_len, 3);
    }

    #[test]
    fn empty_hypothesis_is_all_deletions() {
        let c = counts(&["a", "b"], &[]);
        assert_eq!(
            c,
            AlignmentCounts {
                substitutions: 0,
                insertions: 0,
                deletions: 2,
                reference_len: 2
            }
        );
    }

    #[test]
    fn empty_reference_is_all_insertions() {
        let c = counts(&[], &["x", "y", "z"]);
        assert_eq!(c.insertions, 3);
        assert_eq!(c.total_errors(), 3);
    }

    #[test]
    fn sub_plus_insertion_example() {
        // One substitution (b -> x) and one insertion (d).
        let c = counts(&["a", "b", "c"], &["a", "x", "c", "d"]);
        assert_eq!(c.total_errors(), 2);
        assert_eq!(c.substitutions, 1);
        assert_eq!(c.insertions, 1);
        assert_eq!(c.deletions, 0);
    }

    /// Plain recursion on suffixes; no table, no backtrace. Used as the
    /// independent distance oracle.
    fn recursive_distance(r: &[&str], h: &[&str]) -> u64 {
        if r.is_empty() {
            return h.len() as u64;
        }
        if h.is_empty() {
            return r.len() as u64;
        }
        let sub = recursive_distance(&r[1..], &h[1..]) + u64::from(r[0] != h[0]);
        let del = recursive_distance(&r[1..], h) + 1;
        let ins = recursive_distance(r, &h[1..]) + 1;
        sub.min(del).min(ins)
    }

    #[test]
    fn matches_recursive_oracle_on_short_pairs() {
        let words = ["a", "b", "c"];
        let seqs: Vec<Vec<&str>> = (0..=3)
            .flat_map(|len: u32| {
                (0..3u32.pow(len)).map(move |mut code| {
                    (0..len)
                        .map(|_| {
                            let w = words[(code % 3) as usize];
                            code /= 3;
                            w
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for r in &seqs {
            for h in &seqs {
                assert_eq!(
                    counts(r, h).total_errors(),
                    recursive_distance(r, h),
                    "r={r:?} h={h:?}"
                );
            }
        }
    }

    #[test]
    fn wer_summary_matches_hand_arithmetic() {
        let ds = EvalDataset::new(
            "toy",
            vec![
                EvalRecord {
                    utt_id: "u1".into(),
                    speaker_id: "s".into(),
                    m: 500,
                    e_a: 60,
                    e_b: 50,
                },
                EvalRecord {
                    utt_id: "u2".into(),
                    speaker_id: "s".into(),
                    m: 500,
                    e_a: 40,
                    e_b: 30,
                },
            ],
        )
        .unwrap();
        let s = compute_wer_summary(&ds).unwrap();
        assert_eq!(s.wer_a, 0.10);
        assert_eq!(s.wer_b, 0.08);
        assert_eq!(s.delta_abs, -0.02);
        assert_eq!(s.delta_rel, Some(-0.20));
        assert_eq!(compute_wer(&ds, System::A).unwrap(), 0.10);
    }

    #[test]
    fn delta_rel_undefined_when_system_a_perfect() {
        let ds = EvalDataset::new(
            "toy",
            vec![EvalRecord {
                utt_id: "u1".into(),
                speaker_id: "s".into(),
                m: 10,
                e_a: 0,
                e_b: 2,
            }],
        )
        .unwrap();
        let s = compute_wer_summary(&ds).unwrap();
        assert_eq!(s.wer_a, 0.0);
        assert_eq!(s.delta_abs, 0.2);
        assert_eq!(s.delta_rel, None);
    }

    #[test]
    fn zero_reference_words_is_an_error() {
        let ds = EvalDataset::new(
            "toy",
            vec![EvalRecord {
                utt_id: "u1".into(),
                speaker_id: "s".into(),
                m: 0,
                e_a: 1,
                e_b: 0,
            }],
        )
        .unwrap();
        assert!(matches!(
            compute_wer(&ds, System::A),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn score_systems_reports_mismatched_ids() {
        let refs = vec![("u1".to_string(), "a b".to_string())];
        let hyp_a: Vec<(String, String)> = vec![];
        let hyp_b = vec![("u1".to_string(), "a b".to_string())];
        let err = score_systems(&refs, &hyp_a, &hyp_b, speaker_from_utt_id, "t").unwrap_err();
        assert!(err.to_string().contains("u1 missing from hypothesis A"));
    }

    #[test]
    fn score_systems_counts_match_alignment() {
        let refs = vec![
            ("s1-1".to_string(), "the cat sat".to_string()),
            ("s1-2".to_string(), "on the mat".to_string()),
        ];
        let hyp_a = vec![
            ("s1-1".to_string(), "the cat sat".to_string()),
            ("s1-2".to_string(), "on a mat".to_string()),
        ];
        let hyp_b = vec![
            ("s1-1".to_string(), "a cat".to_string()),
            ("s1-2".to_string(), "on the mat".to_string()),
        ];
        let ds = score_systems(&refs, &hyp_a, &hyp_b, speaker_from_utt_id, "t").unwrap();
        assert_eq!(ds.records()[0].e_a, 0);
        assert_eq!(ds.records()[1].e_a, 1);
        assert_eq!(ds.records()[0].e_b, 2); // sub "the"->"a", del "sat"
        assert_eq!(ds.records()[1].e_b, 0);
        assert_eq!(ds.records()[0].speaker_id, "s1");
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(
            r in proptest::collection::vec(0u8..3, 0..7),
            h in proptest::collection::vec(0u8..3, 0..7),
        ) {
            prop_assert_eq!(
                align_and_count(&r, &h).total_errors(),
                align_and_count(&h, &r).total_errors()
            );
        }

        #[test]
        fn self_distance_is_zero(r in proptest::collection::vec(0u8..4, 0..12)) {
            prop_assert_eq!(align_and_count(&r, &r).total_errors(), 0);
        }

        #[test]
        fn triangle_inequality(
            a in proptest::collection::vec(0u8..3, 0..6),
            b in proptest::collection::vec(0u8..3, 0..6),
            c in proptest::collection::vec(0u8..3, 0..6),
        ) {
            let ab = align_and_count(&a, &b).total_errors();
            let bc = align_and_count(&b, &c).total_errors();
            let ac = align_and_count(&a, &c).total_errors();
            prop_assert!(ac <= ab + bc);
        }

        #[test]
        fn wer_invariant_under_permutation(
            mut recs in proptest::collection::vec((1u64..20, 0u64..25, 0u64..25), 1..12),
            seed in 0u64..1000,
        ) {
            let make = |rs: &[(u64, u64, u64)]| {
                EvalDataset::new(
                    "p",
                    rs.iter().enumerate().map(|(i, &(m, e_a, e_b))| EvalRecord {
                        utt_id: format!("u{i}"),
                        speaker_id: "s".into(),
                        m, e_a, e_b,
                    }).collect(),
                ).unwrap()
            };
            let before = compute_wer(&make(&recs), System::B).unwrap();
            // cheap deterministic shuffle
            let n = recs.len();
            let mut state = seed.wrapping_add(1);
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                recs.swap(i, (state >> 33) as usize % (i + 1));
            }
            let after = compute_wer(&make(&recs), System::B).unwrap();
            prop_assert_eq!(before, after);
        }
    }
}
