//! Sentence pairs, Pharaoh alignments and per-target sufficient source sets.
//!
//! Positions are 1-based everywhere inside the crate. Pharaoh text is 0-based
//! and is converted on the way in and out.

use std::fmt;

use crate::error::{Error, Result};

/// A whitespace-tokenized sentence pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentencePair {
    pub id: usize,
    source: Vec<String>,
    target: Vec<String>,
}

impl SentencePair {
    pub fn new(id: usize, source: Vec<String>, target: Vec<String>) -> Result<Self> {
        let invalid = |message: String| Error::InvalidPair { record: id, message };
        if source.is_empty() {
            return Err(invalid("empty source sentence".into()));
        }
        if target.is_empty() {
            return Err(invalid("empty target sentence".into()));
        }
        for w in source.iter().chain(target.iter()) {
            if w.is_empty() {
                return Err(invalid("empty word".into()));
            }
            if w.chars().any(char::is_whitespace) {
                return Err(invalid(format!("word {w:?} contains whitespace")));
            }
        }
        Ok(Self { id, source, target })
    }

    /// Splits both sides on whitespace.
    pub fn from_lines(id: usize, source: &str, target: &str) -> Result<Self> {
        Self::new(id, split_words(source), split_words(target))
    }

    pub fn source(&self) -> &[String] {
        &self.source
    }

    pub fn target(&self) -> &[String] {
        &self.target
    }

    pub fn source_len(&self) -> usize {
        self.source.len()
    }

    pub fn target_len(&self) -> usize {
        self.target.len()
    }

    /// Source word at 1-based position `i`.
    pub fn source_word(&self, i: usize) -> &str {
        &self.source[i - 1]
    }

    /// Target word at 1-based position `j`.
    pub fn target_word(&self, j: usize) -> &str {
        &self.target[j - 1]
    }

    /// Parses a Pharaoh line against this pair's lengths; errors carry the record id.
    pub fn parse_alignment(&self, line: &str) -> Result<AlignmentSet> {
        parse_pharaoh(line, self.source_len(), self.target_len()).map_err(|e| e.with_record(self.id))
    }
}

pub(crate) fn split_words(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_owned).collect()
}

/// A deduplicated set of 1-based `(source, target)` links.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AlignmentSet {
    links: Vec<(usize, usize)>,
}

impl AlignmentSet {
    /// Builds a set from 1-based links, rejecting anything outside `1..=source_len` / `1..=target_len`.
    pub fn new(
        links: impl IntoIterator<Item = (usize, usize)>,
        source_len: usize,
        target_len: usize,
    ) -> Result<Self> {
        let mut links: Vec<_> = links.into_iter().collect();
        for &(i, j) in &links {
            if i == 0 || j == 0 || i > source_len || j > target_len {
                return Err(Error::LinkOutOfBounds {
                    record: None,
                    src: i.wrapping_sub(1),
                    tgt: j.wrapping_sub(1),
                    source_len,
                    target_len,
                });
            }
        }
        if !links.is_sorted() {
            links.sort_unstable();
        }
        links.dedup();
        Ok(Self { links })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Links in ascending `(source, target)` order.
    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.binary_search(&(i, j)).is_ok()
    }

    /// Renders back to 0-based Pharaoh text.
    pub fn to_pharaoh(&self) -> String {
        let mut out = String::new();
        for (k, &(i, j)) in self.links.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{}-{}", i - 1, j - 1));
        }
        out
    }
}

/// Parses one Pharaoh line (`i-j` pairs, 0-based, whitespace separated).
///
/// A blank line is the empty alignment. Duplicates collapse.
pub fn parse_pharaoh(line: &str, source_len: usize, target_len: usize) -> Result<AlignmentSet> {
    let mut links = Vec::new();
    for token in line.split_whitespace() {
        let malformed = || Error::MalformedLink {
            record: None,
            token: token.to_owned(),
        };
        let (a, b) = token.split_once('-').ok_or_else(malformed)?;
        let i: usize = a.parse().map_err(|_| malformed())?;
        let j: usize = b.parse().map_err(|_| malformed())?;
        if i >= source_len || j >= target_len {
            return Err(Error::LinkOutOfBounds {
                record: None,
                src: i,
                tgt: j,
                source_len,
                target_len,
            });
        }
        links.push((i + 1, j + 1));
    }
    links.sort_unstable();
    links.dedup();
    Ok(AlignmentSet { links })
}

/// For each target position, the source positions aligned to it.
///
/// Stored flat: the set of target `j` is `positions[offsets[j-1]..offsets[j]]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SufficientSets {
    offsets: Vec<usize>,
    positions: Vec<usize>,
}

impl SufficientSets {
    /// Builds directly from per-target sets (index 0 is target position 1).
    pub fn from_sets(sets: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(sets.len() + 1);
        let mut positions = Vec::new();
        offsets.push(0);
        for mut set in sets {
            set.sort_unstable();
            set.dedup();
            positions.extend(set);
            offsets.push(positions.len());
        }
        Self { offsets, positions }
    }

    pub fn target_len(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Sufficient set of 1-based target position `j`, ascending.
    pub fn get(&self, j: usize) -> &[usize] {
        &self.positions[self.offsets[j - 1]..self.offsets[j]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.offsets.windows(2).map(|w| &self.positions[w[0]..w[1]])
    }

    /// Largest source position needed by `j`, or `None` when `j` is unaligned.
    pub fn max_of(&self, j: usize) -> Option<usize> {
        self.get(j).last().copied()
    }

    /// Adds extra `(source, target)` edges, e.g. those introduced by monotonicization.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Self {
        let mut sets: Vec<Vec<usize>> = self.iter().map(<[usize]>::to_vec).collect();
        for &(i, j) in edges {
            sets[j - 1].push(i);
        }
        Self::from_sets(sets)
    }
}

/// Inverse image of each target position under the alignment.
pub fn sufficient_sets(pair: &SentencePair, alignment: &AlignmentSet) -> SufficientSets {
    let target_len = pair.target_len();
    // counting sort by target; links are sorted by source, so each set comes out ascending
    let mut offsets = vec![0; target_len + 1];
    for &(_, j) in alignment.links() {
        offsets[j] += 1;
    }
    for j in 1..=target_len {
        offsets[j] += offsets[j - 1];
    }
    let mut fill = offsets.clone();
    let mut positions = vec![0; alignment.len()];
    for &(i, j) in alignment.links() {
        positions[fill[j - 1]] = i;
        fill[j - 1] += 1;
    }
    SufficientSets { offsets, positions }
}

/// True iff the maxima of the non-empty sets never decrease.
pub fn is_monotonic(sets: &SufficientSets) -> bool {
    let mut running = 0;
    for max in sets.iter().filter_map(|s| s.last().copied()) {
        if max < running {
            return false;
        }
        running = max;
    }
    true
}

impl fmt::Display for AlignmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pharaoh())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(i: usize, j: usize) -> SentencePair {
        let src = (1..=i).map(|k| format!("s{k}")).collect();
        let tgt = (1..=j).map(|k| format!("t{k}")).collect();
        SentencePair::new(0, src, tgt).unwrap()
    }

    #[test]
    fn parse_identity_diagonal() {
        let a = parse_pharaoh("0-0 1-1", 2, 2).unwrap();
        assert_eq!(a.links(), &[(1, 1), (2, 2)]);
    }

    #[test]
    fn parse_fan_in() {
        let a = parse_pharaoh("0-0 1-0", 2, 1).unwrap();
        assert_eq!(a.links(), &[(1, 1), (2, 1)]);
    }

    #[test]
    fn parse_out_of_range() {
        let err = parse_pharaoh("0-0 5-0", 2, 1).unwrap_err();
        match err {
            Error::LinkOutOfBounds { src, tgt, .. } => assert_eq!((src, tgt), (5, 0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_error_names_record() {
        let p = SentencePair::from_lines(17, "a b", "x").unwrap();
        let msg = p.parse_alignment("0-0 5-0").unwrap_err().to_string();
        assert!(msg.contains("record 17"), "{msg}");
        assert!(msg.contains("5-0"), "{msg}");
    }

    #[test]
    fn parse_malformed_tokens() {
        for bad in ["0-", "-1", "a-b", "0:1", "0-1-2", "-0-0"] {
            assert!(
                matches!(parse_pharaoh(bad, 3, 3), Err(Error::MalformedLink { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn parse_blank_and_duplicates() {
        assert!(parse_pharaoh("   ", 2, 2).unwrap().is_empty());
        assert_eq!(parse_pharaoh("1-1 1-1 0-0", 2, 2).unwrap().len(), 2);
    }

    #[test]
    fn pair_invariants() {
        assert!(SentencePair::from_lines(0, "", "x").is_err());
        assert!(SentencePair::from_lines(0, "x", "  ").is_err());
        assert!(SentencePair::new(0, vec!["a b".into()], vec!["x".into()]).is_err());
        assert!(SentencePair::new(0, vec!["".into()], vec!["x".into()]).is_err());
    }

    #[test]
    fn worked_example_sets() {
        let p = pair(2, 2);
        let a = AlignmentSet::new([(1, 1), (2, 1), (1, 2)], 2, 2).unwrap();
        let s = sufficient_sets(&p, &a);
        assert_eq!(s.get(1), &[1, 2]);
        assert_eq!(s.get(2), &[1]);
        assert!(!is_monotonic(&s));
    }

    #[test]
    fn diagonal_and_empty_sets() {
        let p = pair(3, 3);
        let a = AlignmentSet::new([(1, 1), (2, 2), (3, 3)], 3, 3).unwrap();
        let s = sufficient_sets(&p, &a);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![&[1][..], &[2], &[3]]);
        assert!(is_monotonic(&s));

        let s = sufficient_sets(&pair(2, 2), &AlignmentSet::empty());
        assert!(s.get(1).is_empty() && s.get(2).is_empty());
        assert!(is_monotonic(&s));
    }

    #[test]
    fn empty_sets_are_skipped() {
        let s = SufficientSets::from_sets(vec![vec![2], vec![], vec![2]]);
        assert!(is_monotonic(&s));
        let s = SufficientSets::from_sets(vec![vec![2], vec![], vec![1]]);
        assert!(!is_monotonic(&s));
    }

    fn brute_monotonic(s: &SufficientSets) -> bool {
        let maxima: Vec<Option<usize>> = (1..=s.target_len()).map(|j| s.max_of(j)).collect();
        for j in 0..maxima.len() {
            for k in 0..j {
                if let (Some(mj), Some(mk)) = (maxima[j], maxima[k]) {
                    if mj < mk {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn arb_alignment() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize)>)> {
        (1usize..=8, 1usize..=8).prop_flat_map(|(i, j)| {
            (
                Just(i),
                Just(j),
                proptest::collection::vec((1..=i, 1..=j), 0..=(i * j)),
            )
        })
    }

    proptest! {
        #[test]
        fn pharaoh_round_trip((i, j, links) in arb_alignment()) {
            let a = AlignmentSet::new(links, i, j).unwrap();
            let b = parse_pharaoh(&a.to_pharaoh(), i, j).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn monotonic_matches_pairwise_check((i, j, links) in arb_alignment()) {
            let p = pair(i, j);
            let a = AlignmentSet::new(links, i, j).unwrap();
            let s = sufficient_sets(&p, &a);
            prop_assert_eq!(&s, &sufficient_sets(&p, &a));
            prop_assert_eq!(is_monotonic(&s), brute_monotonic(&s));
            for jj in 1..=j {
                let expect: Vec<usize> = (1..=i).filter(|&ii| a.contains(ii, jj)).collect();
                prop_assert_eq!(s.get(jj), &expect[..]);
            }
        }
    }
}
