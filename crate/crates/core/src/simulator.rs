//! Chunked incremental decoding with prefix selection.
//!
//! Each round reads `n` source words, asks the model for `B` continuations of
//! the committed target, keeps a stable prefix and commits it. The round where
//! the source runs out commits the top candidate in full.
//!
//! Recompute accounting works on content words (system, source and target
//! words, tagged by role); template markup is not counted. A round's
//! recompute is the number of prompt words past the longest common prefix with
//! the previous round's prompt followed by its commit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sftformat::{self, ChatTemplate};

/// Default agreement threshold for RALCP.
pub const DEFAULT_GAMMA: f64 = 0.6;

/// A beam candidate: continuation words after the committed target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub words: Vec<String>,
    /// The model considers the translation complete.
    #[serde(default)]
    pub end: bool,
}

impl Candidate {
    pub fn new<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Self {
        Self {
            words: words.into_iter().map(Into::into).collect(),
            end: false,
        }
    }
}

/// Everything a model sees in one round.
#[derive(Debug)]
pub struct ModelContext<'a> {
    pub round: usize,
    /// Rendered prompt for the run's prompt mode.
    pub prompt: &'a str,
    pub source_read: &'a [String],
    pub committed: &'a [String],
}

/// A translation model. Must be deterministic in `(context, beam)`.
pub trait ModelPort: Sync {
    fn generate(&self, ctx: &ModelContext<'_>, beam: usize) -> Result<Vec<Candidate>>;
}

/// Replays a fixed list of beams, one entry per round.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedModel {
    pub rounds: Vec<Vec<Vec<String>>>,
}

impl ScriptedModel {
    pub fn new(rounds: Vec<Vec<Vec<String>>>) -> Self {
        Self { rounds }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json { line: 1, source })
    }
}

impl ModelPort for ScriptedModel {
    fn generate(&self, ctx: &ModelContext<'_>, beam: usize) -> Result<Vec<Candidate>> {
        let beams = self
            .rounds
            .get(ctx.round)
            .ok_or(Error::ScriptExhausted { round: ctx.round })?;
        Ok(beams.iter().take(beam).map(|c| Candidate::new(c.iter().cloned())).collect())
    }
}

/// Test double: "translates" every uncommitted source word to upper case.
#[derive(Clone, Copy, Debug, Default)]
pub struct EchoModel;

impl ModelPort for EchoModel {
    fn generate(&self, ctx: &ModelContext<'_>, beam: usize) -> Result<Vec<Candidate>> {
        let start = ctx.committed.len().min(ctx.source_read.len());
        let words = ctx.source_read[start..].iter().map(|w| w.to_uppercase());
        let cand = Candidate::new(words);
        Ok(vec![cand; beam])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SelectStrategy {
    Lcp,
    Ralcp { gamma: f64 },
    Greedy,
}

impl SelectStrategy {
    pub fn ralcp(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma <= 1.0 {
            Ok(Self::Ralcp { gamma })
        } else {
            Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {gamma}")))
        }
    }
}

/// Picks the stable prefix of a beam.
///
/// RALCP walks positions while every candidate still has a word there and the
/// unique plurality word holds at least `gamma` of the votes. A tie for the
/// top vote stops the walk. LCP requires unanimity; GREEDY takes the first
/// candidate whole.
pub fn select_prefix<S: AsRef<str> + Clone>(candidates: &[Vec<S>], strategy: SelectStrategy) -> Vec<S> {
    let Some(first) = candidates.first() else {
        return Vec::new();
    };
    let gamma = match strategy {
        SelectStrategy::Greedy => return first.clone(),
        SelectStrategy::Lcp => None,
        SelectStrategy::Ralcp { gamma } => Some(gamma),
    };
    let beam = candidates.len();
    let mut out = Vec::new();
    for p in 0.. {
        if candidates.iter().any(|c| c.len() <= p) {
            break;
        }
        let accepted = match gamma {
            None => {
                let w = first[p].as_ref();
                candidates.iter().all(|c| c[p].as_ref() == w).then_some(&first[p])
            }
            Some(gamma) => plurality(candidates, p).filter(|&(_, votes)| {
                votes as f64 + 1e-9 >= gamma * beam as f64
            }).map(|(w, _)| w),
        };
        match accepted {
            Some(w) => out.push(w.clone()),
            None => break,
        }
    }
    out
}

/// Unique most-voted word at position `p`, with its vote count.
fn plurality<S: AsRef<str>>(candidates: &[Vec<S>], p: usize) -> Option<(&S, usize)> {
    let mut tally: Vec<(&S, usize)> = Vec::new();
    for c in candidates {
        let w = &c[p];
        match tally.iter_mut().find(|(t, _)| t.as_ref() == w.as_ref()) {
            Some(entry) => entry.1 += 1,
            None => tally.push((w, 1)),
        }
    }
    let best = tally.iter().map(|&(_, v)| v).max()?;
    let mut top = tally.into_iter().filter(|&(_, v)| v == best);
    let winner = top.next()?;
    top.next().is_none().then_some(winner)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    #[default]
    Conversational,
    Offline,
}

impl FromStr for PromptMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conversational" => Ok(Self::Conversational),
            "offline" => Ok(Self::Offline),
            other => Err(Error::InvalidConfig(format!("unknown prompt mode `{other}`"))),
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Conversational => "conversational",
            Self::Offline => "offline",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub chunk: usize,
    pub beam: usize,
    pub strategy: SelectStrategy,
    pub prompt_mode: PromptMode,
    pub system_msg: String,
    pub template: ChatTemplate,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            chunk: 5,
            beam: 5,
            strategy: SelectStrategy::Ralcp { gamma: DEFAULT_GAMMA },
            prompt_mode: PromptMode::Conversational,
            system_msg: String::new(),
            template: ChatTemplate::llama2(),
        }
    }
}

/// One decoding round as written to the event log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub id: usize,
    pub round: usize,
    pub read_words: Vec<String>,
    pub candidates: Vec<Vec<String>>,
    pub committed_words: Vec<String>,
    pub recompute_tokens_conversational: usize,
    pub recompute_tokens_offline: usize,
    pub cumulative_source_read: usize,
}

/// Rendered prompts of one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundPrompts {
    pub conversational: String,
    pub offline: String,
    /// Text the commit appends to the conversational prompt.
    pub commit: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRun {
    pub id: usize,
    pub source_len: usize,
    pub events: Vec<SimEvent>,
    pub prompts: Vec<RoundPrompts>,
    pub finished: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheSavings {
    pub total_conversational: usize,
    pub total_offline: usize,
}

impl SimRun {
    /// All committed target words in order.
    pub fn output(&self) -> Vec<String> {
        self.events.iter().flat_map(|e| e.committed_words.iter().cloned()).collect()
    }

    pub fn rounds(&self) -> usize {
        self.events.len()
    }
}

/// Sums per-round recompute counts under both prompt modes.
pub fn cache_savings(events: &[SimEvent]) -> CacheSavings {
    CacheSavings {
        total_conversational: events.iter().map(|e| e.recompute_tokens_conversational).sum(),
        total_offline: events.iter().map(|e| e.recompute_tokens_offline).sum(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    System,
    Source,
    Target,
}

type Unit = (Role, String);

fn units<'a>(role: Role, words: &'a [String]) -> impl Iterator<Item = Unit> + 'a {
    words.iter().map(move |w| (role, w.clone()))
}

fn common_prefix(a: &[Unit], b: &[Unit]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Simulates one sentence.
pub fn run(id: usize, source: &[String], model: &dyn ModelPort, cfg: &SimConfig) -> Result<SimRun> {
    if cfg.chunk == 0 || cfg.beam == 0 {
        return Err(Error::InvalidConfig("chunk size and beam must be >= 1".into()));
    }
    if source.is_empty() {
        return Err(Error::InvalidPair {
            record: id,
            message: "empty source sentence".into(),
        });
    }
    let system: Vec<String> = cfg.system_msg.split_whitespace().map(str::to_owned).collect();
    let mut read = 0;
    let mut committed: Vec<String> = Vec::new();
    let mut history: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    let mut events = Vec::new();
    let mut prompts = Vec::new();
    // previous round's prompt words followed by its commit, per mode
    let mut cached_conv: Vec<Unit> = Vec::new();
    let mut cached_off: Vec<Unit> = Vec::new();

    for round in 0.. {
        let take = cfg.chunk.min(source.len() - read);
        let chunk = source[read..read + take].to_vec();
        read += take;
        let exhausted = read == source.len();

        let conv_text =
            sftformat::conversational_prompt(&cfg.template, &cfg.system_msg, &history, &chunk);
        let off_text =
            sftformat::offline_prompt(&cfg.template, &cfg.system_msg, &source[..read], &committed);

        let ctx = ModelContext {
            round,
            prompt: match cfg.prompt_mode {
                PromptMode::Conversational => &conv_text,
                PromptMode::Offline => &off_text,
            },
            source_read: &source[..read],
            committed: &committed,
        };
        let mut beams = model.generate(&ctx, cfg.beam)?;
        beams.truncate(cfg.beam);
        if beams.is_empty() && !exhausted {
            return Err(Error::EmptyBeam { round });
        }
        // end-of-output flags are ignored: only source exhaustion ends a run
        let candidates: Vec<Vec<String>> = beams.into_iter().map(|c| c.words).collect();
        let commit = if exhausted {
            candidates.first().cloned().unwrap_or_default()
        } else {
            select_prefix(&candidates, cfg.strategy)
        };

        let mut conv: Vec<Unit> = units(Role::System, &system).collect();
        let mut off = conv.clone();
        for (src, tgt) in &history {
            conv.extend(units(Role::Source, src));
            conv.extend(units(Role::Target, tgt));
        }
        conv.extend(units(Role::Source, &chunk));
        off.extend(units(Role::Source, &source[..read]));
        off.extend(units(Role::Target, &committed));

        let recompute_conv = conv.len() - common_prefix(&conv, &cached_conv);
        let recompute_off = off.len() - common_prefix(&off, &cached_off);
        conv.extend(units(Role::Target, &commit));
        off.extend(units(Role::Target, &commit));
        cached_conv = conv;
        cached_off = off;

        prompts.push(RoundPrompts {
            conversational: conv_text,
            offline: off_text,
            commit: cfg.template.render_commit(&commit),
        });
        events.push(SimEvent {
            id,
            round,
            read_words: chunk.clone(),
            candidates,
            committed_words: commit.clone(),
            recompute_tokens_conversational: recompute_conv,
            recompute_tokens_offline: recompute_off,
            cumulative_source_read: read,
        });
        committed.extend(commit.iter().cloned());
        history.push((chunk, commit));
        if exhausted {
            break;
        }
    }
    Ok(SimRun {
        id,
        source_len: source.len(),
        events,
        prompts,
        finished: true,
    })
}
