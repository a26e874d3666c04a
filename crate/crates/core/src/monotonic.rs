//! Monotonic dependency plans.
//!
//! Every target token gets a source-prefix requirement that never decreases
//! along the target. Tokens whose alignment would force reordering, and
//! unaligned tokens, are anchored to the previous requirement with an added
//! edge.

use std::fmt::Write as _;

use crate::alignment::{SentencePair, SufficientSets};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotonicPlan {
    prefix_req: Vec<usize>,
    added_edges: Vec<(usize, usize)>,
    source_len: usize,
}

impl MonotonicPlan {
    /// Builds a plan from raw requirements, checking `1 <= m_1 <= ... <= m_J <= source_len`.
    pub fn from_requirements(prefix_req: Vec<usize>, source_len: usize) -> Option<Self> {
        let ok = !prefix_req.is_empty()
            && prefix_req.windows(2).all(|w| w[0] <= w[1])
            && prefix_req.iter().all(|&m| (1..=source_len).contains(&m));
        ok.then_some(Self {
            prefix_req,
            added_edges: Vec::new(),
            source_len,
        })
    }

    /// Minimal source prefix length required before each target word, indexed from target position 1.
    pub fn prefix_req(&self) -> &[usize] {
        &self.prefix_req
    }

    /// Requirement for 1-based target position `j`.
    pub fn requirement(&self, j: usize) -> usize {
        self.prefix_req[j - 1]
    }

    pub fn added_edges(&self) -> &[(usize, usize)] {
        &self.added_edges
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn target_len(&self) -> usize {
        self.prefix_req.len()
    }
}

/// Runs the edge-addition heuristic over the sufficient sets.
///
/// `m_j = max(m_{j-1}, max(a_j))` with `m_0 = 1`. When `a_j` is empty or its
/// maximum falls below `m_{j-1}`, the edge `(m_{j-1}, j)` is recorded.
pub fn monotonicize(sets: &SufficientSets, source_len: usize) -> MonotonicPlan {
    let target_len = sets.target_len();
    let mut prefix_req = Vec::with_capacity(target_len);
    let mut added_edges = Vec::new();
    let mut prev = 1;
    for j in 1..=target_len {
        let m = match sets.max_of(j) {
            Some(max) if max >= prev => max,
            _ => {
                added_edges.push((prev, j));
                prev
            }
        };
        prefix_req.push(m);
        prev = m;
    }
    MonotonicPlan {
        prefix_req,
        added_edges,
        source_len,
    }
}

/// Graphviz rendering: original links solid, added edges dashed.
pub fn export_dot(plan: &MonotonicPlan, sets: &SufficientSets, pair: &SentencePair) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph monotonic_{} {{", pair.id);
    out.push_str("  rankdir=TB;\n");
    out.push_str("  { rank=same;");
    for i in 1..=pair.source_len() {
        let _ = write!(out, " x{i};");
    }
    out.push_str(" }\n  { rank=same;");
    for j in 1..=pair.target_len() {
        let _ = write!(out, " y{j};");
    }
    out.push_str(" }\n");
    for (i, w) in pair.source().iter().enumerate() {
        let _ = writeln!(out, "  x{} [label=\"{}\"];", i + 1, escape(w));
    }
    for (j, w) in pair.target().iter().enumerate() {
        let _ = writeln!(out, "  y{} [label=\"{}\"];", j + 1, escape(w));
    }
    for j in 1..=sets.target_len() {
        for &i in sets.get(j) {
            let _ = writeln!(out, "  x{i} -> y{j};");
        }
    }
    for &(i, j) in plan.added_edges() {
        let _ = writeln!(out, "  x{i} -> y{j} [style=dashed];");
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{is_monotonic, sufficient_sets, AlignmentSet};
    use proptest::prelude::*;

    fn sets(v: Vec<Vec<usize>>) -> SufficientSets {
        SufficientSets::from_sets(v)
    }

    fn pair(i: usize, j: usize) -> SentencePair {
        SentencePair::new(
            0,
            (1..=i).map(|k| format!("s{k}")).collect(),
            (1..=j).map(|k| format!("t{k}")).collect(),
        )
        .unwrap()
    }

    #[test]
    fn worked_example() {
        let plan = monotonicize(&sets(vec![vec![1, 2], vec![1]]), 2);
        assert_eq!(plan.prefix_req(), &[2, 2]);
        assert_eq!(plan.added_edges(), &[(2, 2)]);
    }

    #[test]
    fn diagonal_is_untouched() {
        let plan = monotonicize(&sets(vec![vec![1], vec![2], vec![3]]), 3);
        assert_eq!(plan.prefix_req(), &[1, 2, 3]);
        assert!(plan.added_edges().is_empty());
    }

    #[test]
    fn leading_unaligned_anchors_to_first_word() {
        let s = sets(vec![vec![], vec![2]]);
        let plan = monotonicize(&s, 2);
        assert_eq!(plan.prefix_req(), &[1, 2]);
        assert_eq!(plan.added_edges(), &[(1, 1)]);
        assert!(is_monotonic(&s.with_edges(plan.added_edges())));
    }

    #[test]
    fn dot_marks_added_edges_dashed() {
        let p = pair(2, 2);
        let s = sets(vec![vec![1, 2], vec![1]]);
        let dot = export_dot(&monotonicize(&s, 2), &s, &p);
        assert!(dot.contains("x2 -> y2 [style=dashed]"), "{dot}");
        assert!(dot.contains("x1 -> y2;"));

        let s = sets(vec![vec![1], vec![2]]);
        let dot = export_dot(&monotonicize(&s, 2), &s, &p);
        assert!(!dot.contains("dashed"));

        let p = pair(1, 1);
        let s = sets(vec![vec![]]);
        let dot = export_dot(&monotonicize(&s, 1), &s, &p);
        assert_eq!(dot.matches("dashed").count(), 1);
        assert!(dot.contains("x1 -> y1 [style=dashed]"));
    }

    fn arb_sets() -> impl Strategy<Value = (usize, SufficientSets)> {
        (1usize..=8, 1usize..=8).prop_flat_map(|(i, j)| {
            let col = proptest::collection::vec(1..=i, 0..=3);
            (Just(i), proptest::collection::vec(col, j).prop_map(SufficientSets::from_sets))
        })
    }

    proptest! {
        #[test]
        fn plan_invariants((i, s) in arb_sets()) {
            let plan = monotonicize(&s, i);
            prop_assert!(plan.prefix_req().windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(plan.prefix_req().iter().all(|&m| m >= 1 && m <= i));
            for &(src, tgt) in plan.added_edges() {
                prop_assert!(!s.get(tgt).contains(&src));
            }
            let augmented = s.with_edges(plan.added_edges());
            prop_assert!(is_monotonic(&augmented));
            // every target has an incoming edge once the plan is applied
            prop_assert!(augmented.iter().all(|a| !a.is_empty()));
        }

        #[test]
        fn monotonic_input_is_idempotent((i, s) in arb_monotonic_sets()) {
            prop_assert!(is_monotonic(&s));
            let plan = monotonicize(&s, i);
            prop_assert!(plan.added_edges().is_empty());
            for j in 1..=s.target_len() {
                prop_assert_eq!(plan.requirement(j), s.max_of(j).unwrap());
            }
        }
    }

    /// Non-empty sets whose maxima never decrease.
    fn arb_monotonic_sets() -> impl Strategy<Value = (usize, SufficientSets)> {
        (1usize..=8, 1usize..=8).prop_flat_map(|(i, j)| {
            let maxima = proptest::collection::vec(1..=i, j).prop_map(|mut m| {
                m.sort_unstable();
                m
            });
            let extras = proptest::collection::vec(proptest::collection::vec(1..=i, 0..=2), j);
            (Just(i), maxima, extras).prop_map(|(i, maxima, extras)| {
                let sets = maxima
                    .iter()
                    .zip(extras)
                    .map(|(&m, ex)| {
                        let mut s: Vec<usize> = ex.into_iter().filter(|&e| e <= m).collect();
                        s.push(m);
                        s
                    })
                    .collect();
                (i, SufficientSets::from_sets(sets))
            })
        })
    }

    #[test]
    fn added_edges_are_locally_minimal() {
        // exhaustive over all alignments with I, J <= 3 plus sampled 4x4 masks
        let mut checked = 0;
        for i in 1..=4usize {
            for j in 1..=4usize {
                let cells = i * j;
                let limit = if cells > 12 { 4096 } else { 1usize << cells };
                for mask in 0..limit {
                    let links = (0..cells)
                        .filter(|b| mask >> b & 1 == 1)
                        .map(|b| (b % i + 1, b / i + 1));
                    let p = pair(i, j);
                    let a = AlignmentSet::new(links, i, j).unwrap();
                    let s = sufficient_sets(&p, &a);
                    let plan = monotonicize(&s, i);
                    for skip in 0..plan.added_edges().len() {
                        let mut edges = plan.added_edges().to_vec();
                        let (_, tgt) = edges.remove(skip);
                        let reduced = s.with_edges(&edges);
                        assert!(
                            !is_monotonic(&reduced) || reduced.get(tgt).is_empty(),
                            "edge {skip} removable for mask {mask:b}"
                        );
                    }
                    checked += 1;
                }
            }
        }
        assert!(checked > 10_000);
    }
}
