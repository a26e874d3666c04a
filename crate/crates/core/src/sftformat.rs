//! Prompt rendering for conversational and offline prompting, and SFT records.
//!
//! Templates are plain data. Spans in [`SftRecord`] are half-open character
//! (Unicode scalar value) offsets into `text`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alignment::SentencePair;
use crate::error::{Error, Result};
use crate::trajectory::{Provenance, Trajectory};

/// Half-open `[start, end)` character range.
pub type Span = (usize, usize);

/// Literal strings wrapped around system, user and assistant content.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTemplate {
    pub id: String,
    pub bos: String,
    pub user_open: String,
    pub user_close: String,
    pub assistant_open: String,
    pub assistant_close: String,
    pub system_open: String,
    pub system_close: String,
}

impl ChatTemplate {
    pub fn llama2() -> Self {
        Self {
            id: "llama2".into(),
            bos: "<s>".into(),
            user_open: "[INST] ".into(),
            user_close: " [/INST]".into(),
            assistant_open: " ".into(),
            assistant_close: "</s>".into(),
            system_open: "<<SYS>>\n".into(),
            system_close: "\n<</SYS>>\n\n".into(),
        }
    }

    /// Text appended to an open turn when `words` are committed.
    pub fn render_commit<S: AsRef<str>>(&self, words: &[S]) -> String {
        if words.is_empty() {
            String::new()
        } else {
            format!("{}{}", self.assistant_open, join(words))
        }
    }
}

/// Known templates by id.
#[derive(Clone, Debug)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, ChatTemplate>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        let mut templates = BTreeMap::new();
        let llama2 = ChatTemplate::llama2();
        templates.insert(llama2.id.clone(), llama2);
        Self { templates }
    }
}

impl TemplateRegistry {
    pub fn register(&mut self, template: ChatTemplate) {
        self.templates.insert(template.id.clone(), template);
    }

    /// Registers a template from a JSON file holding one [`ChatTemplate`] object.
    pub fn load_json(&mut self, path: impl AsRef<Path>) -> Result<String> {
        let text = std::fs::read_to_string(path)?;
        let template: ChatTemplate =
            serde_json::from_str(&text).map_err(|source| Error::Json { line: 1, source })?;
        let id = template.id.clone();
        self.register(template);
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<&ChatTemplate> {
        self.templates
            .get(id)
            .ok_or_else(|| Error::UnknownTemplate(id.to_owned()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnSpans {
    pub user: Span,
    pub assistant: Span,
}

/// One SFT example.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub id: usize,
    pub text: String,
    pub turns: Vec<TurnSpans>,
    pub loss_mask_spans: Vec<Span>,
    pub template: String,
    pub provenance: Provenance,
}

impl SftRecord {
    /// Substring covered by a span.
    pub fn slice(&self, span: Span) -> String {
        self.text.chars().skip(span.0).take(span.1 - span.0).collect()
    }
}

/// String builder that tracks its length in characters.
#[derive(Default)]
struct Text {
    buf: String,
    chars: usize,
}

impl Text {
    fn push(&mut self, s: &str) -> Span {
        let start = self.chars;
        self.buf.push_str(s);
        self.chars += s.chars().count();
        (start, self.chars)
    }
}

fn join<S: AsRef<str>>(words: &[S]) -> String {
    let mut out = String::new();
    for (k, w) in words.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        out.push_str(w.as_ref());
    }
    out
}

/// Opens a user turn and returns the span of `content`.
fn open_turn(text: &mut Text, t: &ChatTemplate, system_msg: &str, first: bool, content: &str) -> Span {
    text.push(&t.bos);
    text.push(&t.user_open);
    if first && !system_msg.is_empty() {
        text.push(&t.system_open);
        text.push(system_msg);
        text.push(&t.system_close);
    }
    let span = text.push(content);
    text.push(&t.user_close);
    span
}

/// Renders a trajectory as a multi-turn dialogue, one turn per chunk.
///
/// Loss spans cover each assistant reply minus the words shifted in from the
/// previous chunk.
pub fn render_conversational(
    traj: &Trajectory,
    pair: &SentencePair,
    system_msg: &str,
    template: &ChatTemplate,
) -> SftRecord {
    let mut text = Text::default();
    let mut turns = Vec::with_capacity(traj.chunks.len());
    let mut loss_mask_spans = Vec::new();
    for (c, chunk) in traj.chunks.iter().enumerate() {
        let read: Vec<&str> = chunk.read.iter().map(|&i| pair.source_word(i)).collect();
        let write: Vec<&str> = chunk.write.iter().map(|&j| pair.target_word(j)).collect();
        let user = open_turn(&mut text, template, system_msg, c == 0, &join(&read));
        text.push(&template.assistant_open);
        let assistant = text.push(&join(&write));
        text.push(&template.assistant_close);

        let shifted = chunk.shifted_prefix_len.min(write.len());
        if shifted < write.len() {
            let skip = if shifted == 0 {
                0
            } else {
                join(&write[..shifted]).chars().count() + 1
            };
            loss_mask_spans.push((assistant.0 + skip, assistant.1));
        }
        turns.push(TurnSpans { user, assistant });
    }
    SftRecord {
        id: traj.pair_id,
        text: text.buf,
        turns,
        loss_mask_spans,
        template: template.id.clone(),
        provenance: traj.provenance,
    }
}

/// Single-instruction prompt: the source prefix as the user turn, the target
/// history as the start of the reply.
pub fn render_offline<S: AsRef<str>>(
    pair: &SentencePair,
    partial_source_len: usize,
    target_history: &[S],
    system_msg: &str,
    template: &ChatTemplate,
) -> String {
    let prefix = &pair.source()[..partial_source_len.min(pair.source_len())];
    offline_prompt(template, system_msg, prefix, target_history)
}

pub(crate) fn offline_prompt<A: AsRef<str>, B: AsRef<str>>(
    template: &ChatTemplate,
    system_msg: &str,
    source_prefix: &[A],
    target_history: &[B],
) -> String {
    let mut text = Text::default();
    open_turn(&mut text, template, system_msg, true, &join(source_prefix));
    text.push(&template.render_commit(target_history));
    text.buf
}

/// Dialogue so far plus an open user turn for `current_source`.
///
/// Completed turns with no reply are closed immediately, so each round's prompt
/// extends the previous prompt plus its commit.
pub(crate) fn conversational_prompt<A: AsRef<str>>(
    template: &ChatTemplate,
    system_msg: &str,
    history: &[(Vec<A>, Vec<A>)],
    current_source: &[A],
) -> String {
    let mut text = Text::default();
    for (k, (src, tgt)) in history.iter().enumerate() {
        open_turn(&mut text, template, system_msg, k == 0, &join(src));
        text.push(&template.render_commit(tgt));
        text.push(&template.assistant_close);
    }
    open_turn(
        &mut text,
        template,
        system_msg,
        history.is_empty(),
        &join(current_source),
    );
    text.buf
}
