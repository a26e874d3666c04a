//! READ/WRITE trajectories and their JSONL form.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alignment::SentencePair;
use crate::error::{Error, Result};
use crate::monotonic::MonotonicPlan;

/// One READ/WRITE pair. Positions are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chunk {
    pub read: Vec<usize>,
    pub write: Vec<usize>,
    /// Leading write tokens moved in from the previous chunk by a shift.
    pub shifted_prefix_len: usize,
    /// Trailing read tokens that no write waits for; only the final chunk has any.
    pub flushed_suffix_len: usize,
}

impl Chunk {
    pub fn new(read: Vec<usize>, write: Vec<usize>) -> Self {
        Self {
            read,
            write,
            shifted_prefix_len: 0,
            flushed_suffix_len: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "meta")]
    Meta,
    #[serde(rename = "merged")]
    Merged,
    #[serde(rename = "merged+shifted")]
    MergedShifted,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Meta => "meta",
            Provenance::Merged => "merged",
            Provenance::MergedShifted => "merged+shifted",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub pair_id: usize,
    pub provenance: Provenance,
    pub chunks: Vec<Chunk>,
}

impl Trajectory {
    pub fn num_chunks(&self) -> usize {
        self.chunks.len()
    }

    /// Source positions read, in order.
    pub fn read_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.chunks.iter().flat_map(|c| c.read.iter().copied())
    }

    /// Target positions written, in order.
    pub fn write_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.chunks.iter().flat_map(|c| c.write.iter().copied())
    }

    /// Number of source words each target word waits for, in write order.
    /// Flushed trailing reads are not counted.
    pub fn delays(&self) -> Vec<usize> {
        let mut read = 0;
        let mut out = Vec::with_capacity(self.chunks.iter().map(|c| c.write.len()).sum());
        for c in &self.chunks {
            read += c.read.len();
            let waited = read - c.flushed_suffix_len.min(c.read.len());
            out.extend(std::iter::repeat_n(waited, c.write.len()));
        }
        out
    }
}

/// Segments a plan into the minimum-latency meta trajectory.
///
/// A new chunk starts whenever the requirement grows past what has been read;
/// it reads exactly the missing span. Source words nobody waits for are
/// flushed into the last chunk's read.
pub fn build_meta(plan: &MonotonicPlan, pair: &SentencePair) -> Trajectory {
    let source_len = plan.source_len();
    debug_assert_eq!(source_len, pair.source_len());
    debug_assert_eq!(plan.target_len(), pair.target_len());

    // requirements never decrease, so each run of equal values is one chunk
    let mut chunks = Vec::new();
    let (mut read, mut written) = (0, 0);
    for run in plan.prefix_req().chunk_by(|a, b| a == b) {
        let m = run[0];
        chunks.push(Chunk::new((read + 1..=m).collect(), (written + 1..=written + run.len()).collect()));
        read = m;
        written += run.len();
    }
    if let Some(last) = chunks.last_mut() {
        last.read.extend(read + 1..=source_len);
        last.flushed_suffix_len = source_len - read;
    }
    Trajectory {
        pair_id: pair.id,
        provenance: Provenance::Meta,
        chunks,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    SourceOrder,
    TargetOrder,
    SourceCoverage,
    TargetCoverage,
    EmptyWrite,
    EmptyRead,
    ShiftedPrefix,
    FlushedSuffix,
    TooManyChunks,
    Insufficient { target: usize },
}

/// A broken trajectory invariant, optionally tied to a chunk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub chunk: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::SourceOrder => f.write_str("source order violated")?,
            ViolationKind::TargetOrder => f.write_str("target order violated")?,
            ViolationKind::SourceCoverage => f.write_str("source coverage violated")?,
            ViolationKind::TargetCoverage => f.write_str("target coverage violated")?,
            ViolationKind::EmptyWrite => f.write_str("empty write")?,
            ViolationKind::EmptyRead => f.write_str("empty read in meta trajectory")?,
            ViolationKind::ShiftedPrefix => f.write_str("shifted prefix invalid")?,
            ViolationKind::FlushedSuffix => f.write_str("flushed suffix invalid")?,
            ViolationKind::TooManyChunks => f.write_str("chunk count exceeds source length")?,
            ViolationKind::Insufficient { target } => {
                write!(f, "insufficient source for target {target}")?
            }
        }
        if let Some(c) = self.chunk {
            write!(f, " @chunk {c}")?;
        }
        Ok(())
    }
}

/// Audits every trajectory invariant against the plan; empty means sound.
pub fn verify(traj: &Trajectory, plan: &MonotonicPlan) -> Vec<Violation> {
    let source_len = plan.source_len();
    let target_len = plan.target_len();
    let mut out = Vec::new();
    let at = |kind, chunk| Violation {
        kind,
        chunk: Some(chunk),
    };

    if traj.chunks.len() > source_len {
        out.push(Violation {
            kind: ViolationKind::TooManyChunks,
            chunk: None,
        });
    }

    let mut last_read = 0;
    let mut last_write = 0;
    for (c, chunk) in traj.chunks.iter().enumerate() {
        if chunk.write.is_empty() {
            out.push(at(ViolationKind::EmptyWrite, c));
        }
        if chunk.read.is_empty() && traj.provenance == Provenance::Meta {
            out.push(at(ViolationKind::EmptyRead, c));
        }
        let shifted_ok = if traj.provenance == Provenance::MergedShifted {
            chunk.shifted_prefix_len <= chunk.write.len()
        } else {
            chunk.shifted_prefix_len == 0
        };
        if !shifted_ok {
            out.push(at(ViolationKind::ShiftedPrefix, c));
        }
        let is_last = c + 1 == traj.chunks.len();
        if chunk.flushed_suffix_len > chunk.read.len() || (chunk.flushed_suffix_len > 0 && !is_last) {
            out.push(at(ViolationKind::FlushedSuffix, c));
        }
        if !advances(&chunk.read, &mut last_read) {
            out.push(at(ViolationKind::SourceOrder, c));
        }
        let waited = last_read.saturating_sub(chunk.flushed_suffix_len);
        if !advances(&chunk.write, &mut last_write) {
            out.push(at(ViolationKind::TargetOrder, c));
        }
        for &j in &chunk.write {
            if (1..=target_len).contains(&j) && plan.requirement(j) > waited {
                out.push(at(ViolationKind::Insufficient { target: j }, c));
            }
        }
    }

    if !covers(traj.read_order(), source_len) {
        out.push(Violation {
            kind: ViolationKind::SourceCoverage,
            chunk: None,
        });
    }
    if !covers(traj.write_order(), target_len) {
        out.push(Violation {
            kind: ViolationKind::TargetCoverage,
            chunk: None,
        });
    }
    out
}

/// Positions must be consecutive and start after everything already seen.
fn advances(positions: &[usize], last: &mut usize) -> bool {
    let Some(&first) = positions.first() else {
        return true;
    };
    let ok = first > *last && positions.windows(2).all(|w| w[1] == w[0] + 1);
    *last = (*last).max(positions.iter().copied().max().unwrap_or(0));
    ok
}

fn covers(positions: impl Iterator<Item = usize>, len: usize) -> bool {
    let mut seen = vec![false; len];
    for p in positions {
        if p == 0 || p > len || seen[p - 1] {
            return false;
        }
        seen[p - 1] = true;
    }
    seen.into_iter().all(|s| s)
}

/// Serialized chunk with words materialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub read: Vec<String>,
    pub write: Vec<String>,
    pub shifted: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub flushed: usize,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// Position-level detail kept alongside the words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDebug {
    pub read_idx: Vec<Vec<usize>>,
    pub write_idx: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix_req: Option<Vec<usize>>,
}

/// One line of trajectory JSONL.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub id: usize,
    pub provenance: Provenance,
    pub chunks: Vec<ChunkRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debug: Option<TrajectoryDebug>,
}

impl TrajectoryRecord {
    pub fn from_trajectory(
        traj: &Trajectory,
        pair: &SentencePair,
        plan: Option<&MonotonicPlan>,
    ) -> Self {
        let chunks = traj
            .chunks
            .iter()
            .map(|c| ChunkRecord {
                read: c.read.iter().map(|&i| pair.source_word(i).to_owned()).collect(),
                write: c.write.iter().map(|&j| pair.target_word(j).to_owned()).collect(),
                shifted: c.shifted_prefix_len,
                flushed: c.flushed_suffix_len,
            })
            .collect();
        let debug = TrajectoryDebug {
            read_idx: traj.chunks.iter().map(|c| c.read.clone()).collect(),
            write_idx: traj.chunks.iter().map(|c| c.write.clone()).collect(),
            prefix_req: plan.map(|p| p.prefix_req().to_vec()),
        };
        Self {
            id: traj.pair_id,
            provenance: traj.provenance,
            chunks,
            debug: Some(debug),
        }
    }

    /// Rebuilds the sentence pair, the trajectory and, when recorded, the plan.
    ///
    /// Without a debug block positions are assigned in reading order.
    pub fn into_parts(self) -> Result<(SentencePair, Trajectory, Option<MonotonicPlan>)> {
        let id = self.id;
        let invalid = |message: &str| Error::InvalidPair {
            record: id,
            message: message.to_owned(),
        };
        let debug = self.debug;
        if let Some(d) = &debug {
            if d.read_idx.len() != self.chunks.len() || d.write_idx.len() != self.chunks.len() {
                return Err(invalid("debug indices do not match chunk count"));
            }
        }

        let mut source = Vec::new();
        let mut target = Vec::new();
        let mut chunks = Vec::with_capacity(self.chunks.len());
        for (c, rec) in self.chunks.into_iter().enumerate() {
            let (read, write) = match &debug {
                Some(d) => (d.read_idx[c].clone(), d.write_idx[c].clone()),
                None => (
                    (source.len() + 1..=source.len() + rec.read.len()).collect(),
                    (target.len() + 1..=target.len() + rec.write.len()).collect(),
                ),
            };
            if read.len() != rec.read.len() || write.len() != rec.write.len() {
                return Err(invalid("debug indices do not match chunk words"));
            }
            source.extend(read.iter().copied().zip(rec.read));
            target.extend(write.iter().copied().zip(rec.write));
            chunks.push(Chunk {
                read,
                write,
                shifted_prefix_len: rec.shifted,
                flushed_suffix_len: rec.flushed,
            });
        }
        let pair = SentencePair::new(id, place(source, id)?, place(target, id)?)?;
        let plan = match debug.and_then(|d| d.prefix_req) {
            Some(req) => Some(
                MonotonicPlan::from_requirements(req, pair.source_len())
                    .filter(|p| p.target_len() == pair.target_len())
                    .ok_or_else(|| invalid("prefix_req is not a valid plan"))?,
            ),
            None => None,
        };
        let traj = Trajectory {
            pair_id: id,
            provenance: self.provenance,
            chunks,
        };
        Ok((pair, traj, plan))
    }
}

/// Orders words by their recorded position; positions must be a permutation of `1..=n`.
fn place(mut words: Vec<(usize, String)>, id: usize) -> Result<Vec<String>> {
    words.sort_by_key(|(p, _)| *p);
    if words.iter().enumerate().any(|(k, (p, _))| *p != k + 1) {
        return Err(Error::InvalidPair {
            record: id,
            message: "positions are not a permutation".into(),
        });
    }
    Ok(words.into_iter().map(|(_, w)| w).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{sufficient_sets, AlignmentSet, SufficientSets};
    use crate::monotonic::monotonicize;

    fn pair(i: usize, j: usize) -> SentencePair {
        SentencePair::new(
            3,
            (1..=i).map(|k| format!("s{k}")).collect(),
            (1..=j).map(|k| format!("t{k}")).collect(),
        )
        .unwrap()
    }

    fn reads_writes(t: &Trajectory) -> Vec<(Vec<usize>, Vec<usize>)> {
        t.chunks.iter().map(|c| (c.read.clone(), c.write.clone())).collect()
    }

    #[test]
    fn worked_example_is_one_chunk() {
        let plan = monotonicize(&SufficientSets::from_sets(vec![vec![1, 2], vec![1]]), 2);
        let t = build_meta(&plan, &pair(2, 2));
        assert_eq!(reads_writes(&t), vec![(vec![1, 2], vec![1, 2])]);
        assert!(verify(&t, &plan).is_empty());
    }

    #[test]
    fn diagonal_is_one_to_one() {
        let p = pair(3, 3);
        let a = AlignmentSet::new([(1, 1), (2, 2), (3, 3)], 3, 3).unwrap();
        let plan = monotonicize(&sufficient_sets(&p, &a), 3);
        let t = build_meta(&plan, &p);
        assert_eq!(
            reads_writes(&t),
            vec![(vec![1], vec![1]), (vec![2], vec![2]), (vec![3], vec![3])]
        );
    }

    #[test]
    fn trailing_source_is_flushed() {
        let plan = MonotonicPlan::from_requirements(vec![1, 3], 4).unwrap();
        let t = build_meta(&plan, &pair(4, 2));
        assert_eq!(
            reads_writes(&t),
            vec![(vec![1], vec![1]), (vec![2, 3, 4], vec![2])]
        );
        assert!(verify(&t, &plan).is_empty());
        assert_eq!(t.chunks[1].flushed_suffix_len, 1);
        // nothing waits on the flushed word
        assert_eq!(t.delays(), vec![1, 3]);

        let mut bad = t.clone();
        bad.chunks[1].flushed_suffix_len = 2;
        assert!(verify(&bad, &plan)
            .iter()
            .any(|v| v.kind == ViolationKind::Insufficient { target: 2 }));
        bad.chunks[0].flushed_suffix_len = 1;
        bad.chunks[1].flushed_suffix_len = 1;
        assert!(verify(&bad, &plan)
            .iter()
            .any(|v| v.kind == ViolationKind::FlushedSuffix));
    }

    #[test]
    fn verify_reports_target_order() {
        let plan = MonotonicPlan::from_requirements(vec![1, 1], 1).unwrap();
        let t = Trajectory {
            pair_id: 0,
            provenance: Provenance::Meta,
            chunks: vec![Chunk::new(vec![1], vec![2, 1])],
        };
        let v: Vec<String> = verify(&t, &plan).iter().map(ToString::to_string).collect();
        assert_eq!(v, vec!["target order violated @chunk 0"]);
    }

    #[test]
    fn verify_reports_missing_source() {
        let plan = MonotonicPlan::from_requirements(vec![1, 2], 3).unwrap();
        let t = Trajectory {
            pair_id: 0,
            provenance: Provenance::Meta,
            chunks: vec![Chunk::new(vec![1], vec![1]), Chunk::new(vec![2], vec![2])],
        };
        let v: Vec<String> = verify(&t, &plan).iter().map(ToString::to_string).collect();
        assert_eq!(v, vec!["source coverage violated"]);
    }

    #[test]
    fn verify_reports_premature_write() {
        let plan = MonotonicPlan::from_requirements(vec![2, 2], 2).unwrap();
        let t = Trajectory {
            pair_id: 0,
            provenance: Provenance::Meta,
            chunks: vec![Chunk::new(vec![1], vec![1]), Chunk::new(vec![2], vec![2])],
        };
        let v = verify(&t, &plan);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Insufficient { target: 1 });
        assert_eq!(v[0].chunk, Some(0));
    }

    #[test]
    fn record_round_trip() {
        let p = SentencePair::from_lines(5, "das Haus ist klein", "the house is small").unwrap();
        let a = p.parse_alignment("0-0 1-1 2-2 3-3").unwrap();
        let plan = monotonicize(&sufficient_sets(&p, &a), 4);
        let t = build_meta(&plan, &p);
        let rec = TrajectoryRecord::from_trajectory(&t, &p, Some(&plan));
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.starts_with(r#"{"id":5,"provenance":"meta","chunks":[{"read":["das"],"write":["the"],"shifted":0}"#));
        let back: TrajectoryRecord = serde_json::from_str(&json).unwrap();
        let (p2, t2, plan2) = back.into_parts().unwrap();
        assert_eq!(p2, p);
        assert_eq!(t2, t);
        assert_eq!(plan2.as_ref(), Some(&plan));

        let bare = r#"{"id":1,"provenance":"merged","chunks":[{"read":["a","b"],"write":["x"],"shifted":0},{"read":["c"],"write":["y","z"],"shifted":0}]}"#;
        let (p, t, plan) = serde_json::from_str::<TrajectoryRecord>(bare)
            .unwrap()
            .into_parts()
            .unwrap();
        assert_eq!(p.source(), &["a", "b", "c"]);
        assert_eq!(t.chunks[1].write, vec![2, 3]);
        assert!(plan.is_none());
    }
}
