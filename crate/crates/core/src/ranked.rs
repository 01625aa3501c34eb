//! Ordered candidate lists passed between cascade stages.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Ranking order used everywhere: score descending, then doc id ascending.
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

/// Candidates in rank order with unique ids and non-increasing scores.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedList {
    pub entries: Vec<ScoredDoc>,
    /// Label of the stage that produced the list.
    pub provenance: String,
}

impl RankedList {
    pub fn empty(provenance: impl Into<String>) -> Self {
        RankedList {
            entries: Vec::new(),
            provenance: provenance.into(),
        }
    }

    /// Sorts `entries` by [`rank_order`]. Ids are assumed unique.
    pub fn from_unsorted(mut entries: Vec<ScoredDoc>, provenance: impl Into<String>) -> Self {
        entries.sort_by(|a, b| rank_order(a.score, &a.doc_id, b.score, &b.doc_id));
        RankedList {
            entries,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// Checks the ordering and uniqueness invariants.
    pub fn is_well_formed(&self) -> bool {
        let ordered = self
            .entries
            .windows(2)
            .all(|w| rank_order(w[0].score, &w[0].doc_id, w[1].score, &w[1].doc_id) == Ordering::Less);
        let mut ids: Vec<&str> = self.doc_ids().collect();
        ids.sort_unstable();
        let n = ids.len();
        ids.dedup();
        ordered && ids.len() == n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn doc(id: &str, score: f64) -> ScoredDoc {
        ScoredDoc {
            doc_id: id.into(),
            score,
        }
    }

    #[test]
    fn ties_break_on_doc_id() {
        let list = RankedList::from_unsorted(
            vec![doc("b", 1.0), doc("c", 2.0), doc("a", 1.0)],
            "t",
        );
        let ids: Vec<_> = list.doc_ids().collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert!(list.is_well_formed());
    }

    #[test]
    fn detects_duplicates() {
        let list = RankedList {
            entries: vec![doc("a", 2.0), doc("a", 1.0)],
            provenance: "t".into(),
        };
        assert!(!list.is_well_formed());
    }
}
