//! Latency metrics and corpus statistics.
//!
//! Word wall time here is a cost-model proxy, not a hardware measurement; it
//! is labelled "simulated" wherever it is printed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{cache_savings, PromptMode, SimEvent};
use crate::trajectory::{Provenance, Trajectory};

/// Word-level Average Lagging.
///
/// `delays[t]` is the number of source words read when target word `t + 1`
/// was written. With `r = J / I` and `tau` the first target written after the
/// whole source was read (or `J`),
/// `AL = 1/tau * sum_{t=1..tau} (delays[t] - (t - 1) / r)`.
pub fn average_lagging(delays: &[usize], source_len: usize, target_len: usize) -> Result<f64> {
    if target_len == 0 || source_len == 0 {
        return Err(Error::InvalidDelays("source and target lengths must be >= 1".into()));
    }
    if delays.len() != target_len {
        return Err(Error::InvalidDelays(format!(
            "{} delays for {target_len} target words",
            delays.len()
        )));
    }
    if delays.iter().any(|&g| g == 0 || g > source_len) {
        return Err(Error::InvalidDelays(format!("delays must lie in 1..={source_len}")));
    }
    if delays.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidDelays("delays must be nondecreasing".into()));
    }
    let rate = target_len as f64 / source_len as f64;
    let tau = delays
        .iter()
        .position(|&g| g == source_len)
        .map_or(target_len, |t| t + 1);
    let total: f64 = delays[..tau]
        .iter()
        .enumerate()
        .map(|(t, &g)| g as f64 - t as f64 / rate)
        .sum();
    Ok(total / tau as f64)
}

/// Per-word delays of a simulated run: every word committed in a round gets
/// that round's cumulative source count.
pub fn delays_from_events(events: &[SimEvent]) -> Vec<usize> {
    events
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.cumulative_source_read, e.committed_words.len()))
        .collect()
}

/// AL of a trajectory's READ/WRITE schedule.
pub fn trajectory_al(traj: &Trajectory) -> Result<f64> {
    let delays = traj.delays();
    let source_len = traj.read_order().count();
    average_lagging(&delays, source_len, delays.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub per_recomputed_token: f64,
    pub per_generated_word: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            per_recomputed_token: 1.0,
            per_generated_word: 1.0,
        }
    }
}

/// Cost-model word wall time for one run under a prompt mode.
pub fn simulated_wwt(events: &[SimEvent], cost: CostModel, mode: PromptMode) -> Result<f64> {
    let words: usize = events.iter().map(|e| e.committed_words.len()).sum();
    if words == 0 {
        return Err(Error::NoTargetWords);
    }
    let total: f64 = events
        .iter()
        .map(|e| {
            let recompute = match mode {
                PromptMode::Conversational => e.recompute_tokens_conversational,
                PromptMode::Offline => e.recompute_tokens_offline,
            };
            recompute as f64 * cost.per_recomputed_token
                + e.committed_words.len() as f64 * cost.per_generated_word
        })
        .sum();
    Ok(total / words as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub id: usize,
    pub al: f64,
    pub simulated_wwt_conversational: f64,
    pub simulated_wwt_offline: f64,
    pub rounds: usize,
    pub target_words: usize,
    pub recompute_conversational: usize,
    pub recompute_offline: usize,
}

/// Latency summary of one run's event log.
pub fn latency_report(events: &[SimEvent], cost: CostModel) -> Result<LatencyReport> {
    let first = events.first().ok_or(Error::EmptyCorpus)?;
    let delays = delays_from_events(events);
    let source_len = events.iter().map(|e| e.cumulative_source_read).max().unwrap_or(0);
    let savings = cache_savings(events);
    Ok(LatencyReport {
        id: first.id,
        al: average_lagging(&delays, source_len, delays.len())?,
        simulated_wwt_conversational: simulated_wwt(events, cost, PromptMode::Conversational)?,
        simulated_wwt_offline: simulated_wwt(events, cost, PromptMode::Offline)?,
        rounds: events.len(),
        target_words: delays.len(),
        recompute_conversational: savings.total_conversational,
        recompute_offline: savings.total_offline,
    })
}

/// Splits an event log into runs by consecutive `id`.
pub fn group_runs(events: &[SimEvent]) -> Vec<&[SimEvent]> {
    events.chunk_by(|a, b| a.id == b.id).collect()
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Welford accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn finish(&self) -> MeanStd {
        if self.n == 0 {
            return MeanStd::default();
        }
        MeanStd {
            mean: self.mean,
            std: (self.m2 / self.n as f64).max(0.0).sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceStats {
    pub trajectories: usize,
    pub chunks: MeanStd,
    /// Per-trajectory average source words per chunk, aggregated over trajectories.
    pub source_words_per_chunk: MeanStd,
    pub target_words_per_chunk: MeanStd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub by_provenance: BTreeMap<Provenance, ProvenanceStats>,
}

/// Single-pass accumulator behind [`corpus_stats`].
#[derive(Clone, Debug, Default)]
pub struct StatsAccumulator {
    groups: BTreeMap<Provenance, [Running; 3]>,
}

impl StatsAccumulator {
    pub fn add(&mut self, traj: &Trajectory) {
        let c = traj.chunks.len();
        if c == 0 {
            return;
        }
        let src: usize = traj.chunks.iter().map(|ch| ch.read.len()).sum();
        let tgt: usize = traj.chunks.iter().map(|ch| ch.write.len()).sum();
        let g = self.groups.entry(traj.provenance).or_default();
        g[0].push(c as f64);
        g[1].push(src as f64 / c as f64);
        g[2].push(tgt as f64 / c as f64);
    }

    pub fn finish(&self) -> Result<CorpusStats> {
        if self.groups.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let by_provenance = self
            .groups
            .iter()
            .map(|(&p, g)| {
                let stats = ProvenanceStats {
                    trajectories: g[0].n,
                    chunks: g[0].finish(),
                    source_words_per_chunk: g[1].finish(),
                    target_words_per_chunk: g[2].finish(),
                };
                (p, stats)
            })
            .collect();
        Ok(CorpusStats { by_provenance })
    }
}

pub fn corpus_stats<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> Result<CorpusStats> {
    let mut acc = StatsAccumulator::default();
    for t in trajs {
        acc.add(t);
    }
    acc.finish()
}

impl CorpusStats {
    /// Aligned plain-text table, one row per provenance and dimension.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:<18} {:>8} {:>14}", "trajectory", "dimension", "count", "mean±std");
        for (p, s) in &self.by_provenance {
            let rows = [
                ("#chunk", s.chunks),
                ("#src word/chunk", s.source_words_per_chunk),
                ("#tgt word/chunk", s.target_words_per_chunk),
            ];
            for (name, v) in rows {
                let _ = writeln!(
                    out,
                    "{:<16} {:<18} {:>8} {:>14}",
                    p.as_str(),
                    name,
                    s.trajectories,
                    format!("{:.2}±{:.2}", v.mean, v.std)
                );
            }
        }
        out
    }
}

/// Plain-text table of latency reports followed by their mean.
pub fn latency_table(reports: &[LatencyReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>8} {:>7} {:>6} {:>10} {:>10} {:>14} {:>14}",
        "id", "AL", "rounds", "words", "recomp_cp", "recomp_op", "sim_WWT_cp", "sim_WWT_op"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:>6} {:>8.3} {:>7} {:>6} {:>10} {:>10} {:>14.4} {:>14.4}",
            r.id,
            r.al,
            r.rounds,
            r.target_words,
            r.recompute_conversational,
            r.recompute_offline,
            r.simulated_wwt_conversational,
            r.simulated_wwt_offline
        );
    }
    if !reports.is_empty() {
        let n = reports.len() as f64;
        let mean = |f: fn(&LatencyReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let _ = writeln!(
            out,
            "{:>6} {:>8.3} {:>7.1} {:>6.1} {:>10.1} {:>10.1} {:>14.4} {:>14.4}",
            "mean",
            mean(|r| r.al),
            mean(|r| r.rounds as f64),
            mean(|r| r.target_words as f64),
            mean(|r| r.recompute_conversational as f64),
            mean(|r| r.recompute_offline as f64),
            mean(|r| r.simulated_wwt_conversational),
            mean(|r| r.simulated_wwt_offline)
        );
    }
    out
}

/// CSV rows for plotting quality/latency curves.
pub fn latency_csv(reports: &[LatencyReport]) -> String {
    let mut out = String::from(
        "id,al,rounds,target_words,recompute_conversational,recompute_offline,simulated_wwt_conversational,simulated_wwt_offline\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.id,
            r.al,
            r.rounds,
            r.target_words,
            r.recompute_conversational,
            r.recompute_offline,
            r.simulated_wwt_conversational,
            r.simulated_wwt_offline
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{run, EchoModel, SelectStrategy, SimConfig};
    use crate::trajectory::Chunk;

    fn wait_k(k: usize, len: usize) -> Vec<usize> {
        (1..=len).map(|t| (k + t - 1).min(len)).collect()
    }

    #[test]
    fn full_read_policy_lags_by_source_length() {
        for (i, j) in [(1, 1), (4, 7), (9, 3)] {
            assert_eq!(average_lagging(&vec![i; j], i, j).unwrap(), i as f64);
        }
    }

    #[test]
    fn wait_k_lags_by_k() {
        assert!((average_lagging(&wait_k(3, 10), 10, 10).unwrap() - 3.0).abs() < 1e-9);
        // scaling the sentence keeps wait-k at k
        for scale in 1..=4 {
            let len = 10 * scale;
            assert!((average_lagging(&wait_k(4, len), len, len).unwrap() - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn worked_pair_al() {
        assert_eq!(average_lagging(&[2, 2], 2, 2).unwrap(), 2.0);
    }

    #[test]
    fn al_rejects_bad_schedules() {
        assert!(average_lagging(&[2, 1], 2, 2).is_err());
        assert!(average_lagging(&[0, 1], 2, 2).is_err());
        assert!(average_lagging(&[3], 2, 1).is_err());
        assert!(average_lagging(&[1], 2, 2).is_err());
        assert!(average_lagging(&[], 2, 0).is_err());
    }

    fn echo_events(src: &str, n: usize) -> Vec<SimEvent> {
        let words: Vec<String> = src.split_whitespace().map(str::to_owned).collect();
        let cfg = SimConfig { chunk: n, beam: 1, strategy: SelectStrategy::Greedy, ..SimConfig::default() };
        run(0, &words, &EchoModel, &cfg).unwrap().events
    }

    #[test]
    fn wwt_cost_model() {
        let ev = echo_events("a b c d", 2);
        let gen_only = CostModel { per_recomputed_token: 0.0, per_generated_word: 2.5 };
        assert_eq!(simulated_wwt(&ev, gen_only, PromptMode::Conversational).unwrap(), 2.5);
        let recompute_only = CostModel { per_recomputed_token: 1.0, per_generated_word: 0.0 };
        let cp = simulated_wwt(&ev, recompute_only, PromptMode::Conversational).unwrap();
        let op = simulated_wwt(&ev, recompute_only, PromptMode::Offline).unwrap();
        assert!(cp <= op);

        let single = echo_events("a b", 5);
        assert_eq!(
            simulated_wwt(&single, recompute_only, PromptMode::Conversational).unwrap(),
            simulated_wwt(&single, recompute_only, PromptMode::Offline).unwrap()
        );
    }

    #[test]
    fn wwt_needs_target_words() {
        let mut ev = echo_events("a b", 5);
        ev[0].committed_words.clear();
        assert!(matches!(
            simulated_wwt(&ev, CostModel::default(), PromptMode::Offline),
            Err(Error::NoTargetWords)
        ));
    }

    #[test]
    fn run_and_trajectory_al_agree() {
        let ev = echo_events("a b c d e", 2);
        let report = latency_report(&ev, CostModel::default()).unwrap();
        let traj = Trajectory {
            pair_id: 0,
            provenance: Provenance::Meta,
            chunks: vec![
                Chunk::new(vec![1, 2], vec![1, 2]),
                Chunk::new(vec![3, 4], vec![3, 4]),
                Chunk::new(vec![5], vec![5]),
            ],
        };
        assert_eq!(report.al, trajectory_al(&traj).unwrap());
        assert_eq!(report.rounds, 3);
    }

    fn traj(prov: Provenance, sizes: &[(usize, usize)]) -> Trajectory {
        let (mut i, mut j) = (0, 0);
        let chunks = sizes
            .iter()
            .map(|&(r, w)| {
                let c = Chunk::new((i + 1..=i + r).collect(), (j + 1..=j + w).collect());
                i += r;
                j += w;
                c
            })
            .collect();
        Trajectory { pair_id: 0, provenance: prov, chunks }
    }

    #[test]
    fn stats_single_trajectory() {
        let t = traj(Provenance::Meta, &[(3, 3), (3, 3)]);
        let s = corpus_stats([&t]).unwrap();
        let m = &s.by_provenance[&Provenance::Meta];
        assert_eq!(m.chunks, MeanStd { mean: 2.0, std: 0.0 });
        assert_eq!(m.source_words_per_chunk, MeanStd { mean: 3.0, std: 0.0 });
        assert_eq!(m.target_words_per_chunk, MeanStd { mean: 3.0, std: 0.0 });
        assert!(s.to_table().contains("2.00±0.00"));
    }

    #[test]
    fn stats_are_population_and_self_concat_invariant() {
        let a = traj(Provenance::Meta, &[(1, 1)]);
        let b = traj(Provenance::Meta, &[(1, 1), (1, 2), (2, 1)]);
        let c = traj(Provenance::Merged, &[(4, 4)]);
        let s = corpus_stats([&a, &b, &c]).unwrap();
        let m = &s.by_provenance[&Provenance::Meta];
        assert_eq!(m.chunks.mean, 2.0);
        assert!((m.chunks.std - 1.0).abs() < 1e-12);
        assert_eq!(s.by_provenance[&Provenance::Merged].trajectories, 1);

        let doubled = corpus_stats([&a, &b, &c, &a, &b, &c]).unwrap();
        for (p, x) in &s.by_provenance {
            let y = &doubled.by_provenance[p];
            for (u, v) in [
                (x.chunks, y.chunks),
                (x.source_words_per_chunk, y.source_words_per_chunk),
                (x.target_words_per_chunk, y.target_words_per_chunk),
            ] {
                assert!((u.mean - v.mean).abs() < 1e-12 && (u.std - v.std).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stats_empty_corpus() {
        assert!(matches!(corpus_stats(std::iter::empty()), Err(Error::EmptyCorpus)));
    }
}
