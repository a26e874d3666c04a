//! Corpus-level drivers: curate, augment, format and simulate over line-oriented
//! files, in bounded batches, with output order equal to input order for any
//! worker count.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::alignment::{sufficient_sets, SentencePair};
use crate::augment::{augment_pipeline, AugmentConfig};
use crate::error::{Error, Result};
use crate::io::{read_jsonl, split_tsv, write_jsonl};
use crate::monotonic::{monotonicize, MonotonicPlan};
use crate::sftformat::{render_conversational, ChatTemplate, SftRecord};
use crate::simulator::{run, ModelPort, SimConfig, SimEvent};
use crate::trajectory::{build_meta, verify, Provenance, Trajectory, TrajectoryRecord};

/// Records held in memory at once.
pub const BATCH: usize = 4096;

/// Thread pool with `workers` threads; 0 lets rayon decide.
pub fn pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// A record that failed validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub id: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub written: usize,
    pub rejected: Vec<Rejection>,
}

impl Summary {
    pub fn ok(&self) -> bool {
        self.rejected.is_empty()
    }
}

/// Maps a batch in parallel and writes successes in input order.
fn flush_batch<T: Send, U: serde::Serialize + Send, W: Write>(
    batch: &mut Vec<(usize, T)>,
    pool: &ThreadPool,
    f: &(impl Fn(usize, T) -> Result<U> + Sync),
    out: &mut W,
    summary: &mut Summary,
) -> Result<()> {
    let results: Vec<(usize, Result<U>)> = pool.install(|| {
        std::mem::take(batch)
            .into_par_iter()
            .map(|(id, item)| (id, f(id, item)))
            .collect()
    });
    for (id, res) in results {
        match res {
            Ok(rec) => summary.written += write_jsonl(out, [&rec])?,
            Err(e) => summary.rejected.push(Rejection {
                id,
                reason: e.to_string(),
            }),
        }
    }
    Ok(())
}

fn drive<T: Send, U: serde::Serialize + Send, W: Write>(
    items: impl Iterator<Item = Result<(usize, T)>>,
    workers: usize,
    out: &mut W,
    f: impl Fn(usize, T) -> Result<U> + Sync,
) -> Result<Summary> {
    let pool = pool(workers)?;
    let mut summary = Summary::default();
    let mut batch = Vec::with_capacity(BATCH);
    for item in items {
        batch.push(item?);
        if batch.len() == BATCH {
            flush_batch(&mut batch, &pool, &f, out, &mut summary)?;
        }
    }
    flush_batch(&mut batch, &pool, &f, out, &mut summary)?;
    out.flush()?;
    Ok(summary)
}

/// A sentence pair carried through alignment, monotonicization and segmentation.
#[derive(Clone, Debug)]
pub struct Curated {
    pub pair: SentencePair,
    pub plan: MonotonicPlan,
    pub trajectory: Trajectory,
}

/// Builds the meta trajectory of one line triple.
pub fn curate_pair(id: usize, source: &str, target: &str, alignment: &str) -> Result<Curated> {
    let pair = SentencePair::from_lines(id, source, target)?;
    let links = pair.parse_alignment(alignment)?;
    let sets = sufficient_sets(&pair, &links);
    let plan = monotonicize(&sets, pair.source_len());
    let trajectory = build_meta(&plan, &pair);
    check(&trajectory, &plan)?;
    Ok(Curated {
        pair,
        plan,
        trajectory,
    })
}

fn check(traj: &Trajectory, plan: &MonotonicPlan) -> Result<()> {
    let violations = verify(traj, plan);
    if violations.is_empty() {
        Ok(())
    } else {
        let message = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        Err(Error::InvalidPair {
            record: traj.pair_id,
            message,
        })
    }
}

/// A numbered `(source, target, alignment)` line triple.
pub type LineTriple = Result<(usize, (String, String, String))>;

/// Line triples from parallel source/target/alignment readers.
///
/// Line counts must already agree; see [`check_counts`].
pub fn zip_lines<R1: BufRead, R2: BufRead, R3: BufRead>(
    src: R1,
    tgt: R2,
    align: R3,
) -> impl Iterator<Item = LineTriple> {
    src.lines()
        .zip(tgt.lines())
        .zip(align.lines())
        .enumerate()
        .map(|(id, ((s, t), a))| Ok((id, (s?, t?, a?))))
}

/// Line triples from a TSV bitext and an alignment reader.
pub fn zip_tsv<R1: BufRead, R2: BufRead>(
    bitext: R1,
    align: R2,
) -> impl Iterator<Item = LineTriple> {
    bitext.lines().zip(align.lines()).enumerate().map(|(id, (b, a))| {
        let b = b?;
        let (s, t) = split_tsv(&b);
        Ok((id, (s.to_owned(), t.to_owned(), a?)))
    })
}

pub fn check_counts(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::CountMismatch { what, left, right })
    }
}

/// Writes one meta-trajectory record per valid pair.
pub fn curate<W: Write>(
    lines: impl Iterator<Item = LineTriple>,
    workers: usize,
    out: &mut W,
) -> Result<Summary> {
    drive(lines, workers, out, |id, (s, t, a)| {
        let c = curate_pair(id, &s, &t, &a)?;
        Ok(TrajectoryRecord::from_trajectory(&c.trajectory, &c.pair, Some(&c.plan)))
    })
}

fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, TrajectoryRecord)>> {
    read_jsonl::<TrajectoryRecord, _>(reader).map(|r| r.map(|rec| (rec.id, rec)))
}

/// Merge + shift every meta trajectory.
pub fn augment<R: BufRead, W: Write>(
    reader: R,
    cfg: &AugmentConfig,
    workers: usize,
    out: &mut W,
) -> Result<Summary> {
    cfg.validate()?;
    drive(records(reader), workers, out, |_, rec| {
        let (pair, traj, plan) = rec.into_parts()?;
        if traj.provenance != Provenance::Meta {
            return Err(Error::InvalidPair {
                record: pair.id,
                message: format!("expected a meta trajectory, got {}", traj.provenance),
            });
        }
        let augmented = augment_pipeline(&traj, cfg);
        if let Some(plan) = &plan {
            check(&augmented, plan)?;
        }
        Ok(TrajectoryRecord::from_trajectory(&augmented, &pair, plan.as_ref()))
    })
}

/// Renders every trajectory as an SFT record.
pub fn format<R: BufRead, W: Write>(
    reader: R,
    template: &ChatTemplate,
    system_msg: &str,
    workers: usize,
    out: &mut W,
) -> Result<Summary> {
    drive(records(reader), workers, out, |_, rec| -> Result<SftRecord> {
        let (pair, traj, plan) = rec.into_parts()?;
        if let Some(plan) = &plan {
            check(&traj, plan)?;
        }
        Ok(render_conversational(&traj, &pair, system_msg, template))
    })
}

/// Runs the simulator per source line; `model_for(id)` supplies each line's model.
pub fn simulate<R: BufRead, W: Write, M: ModelPort>(
    sources: R,
    model_for: impl Fn(usize) -> Result<M> + Sync,
    cfg: &SimConfig,
    workers: usize,
    out: &mut W,
) -> Result<Summary> {
    let lines = sources.lines().enumerate().map(|(id, l)| -> Result<(usize, String)> { Ok((id, l?)) });
    let pool = pool(workers)?;
    let mut summary = Summary::default();
    let mut batch: Vec<(usize, String)> = Vec::with_capacity(BATCH);
    let mut lines = lines.peekable();
    while lines.peek().is_some() {
        batch.clear();
        for item in lines.by_ref().take(BATCH) {
            batch.push(item?);
        }
        let results: Vec<(usize, Result<Vec<SimEvent>>)> = pool.install(|| {
            batch
                .par_iter()
                .map(|(id, line)| {
                    let source: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
                    let res = model_for(*id).and_then(|m| run(*id, &source, &m, cfg)).map(|r| r.events);
                    (*id, res)
                })
                .collect()
        });
        for (id, res) in results {
            match res {
                Ok(events) => {
                    write_jsonl(out, &events)?;
                    summary.written += 1;
                }
                Err(e) => summary.rejected.push(Rejection {
                    id,
                    reason: e.to_string(),
                }),
            }
        }
    }
    out.flush()?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(src: &str, tgt: &str, align: &str) -> Vec<LineTriple> {
        zip_lines(src.as_bytes(), tgt.as_bytes(), align.as_bytes()).collect()
    }

    #[test]
    fn curate_two_lines() {
        let mut out = Vec::new();
        let s = curate(
            lines("das Haus\nein Hund\n", "the house\na dog\n", "0-0 1-1\n0-0 1-1\n").into_iter(),
            1,
            &mut out,
        )
        .unwrap();
        assert_eq!(s.written, 2);
        assert!(s.ok());
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
    }

    #[test]
    fn curate_empty_alignment_reads_everything_first() {
        let c = curate_pair(0, "a b c", "x y", "").unwrap();
        assert_eq!(c.trajectory.chunks.len(), 1);
        assert_eq!(c.trajectory.chunks[0].read, vec![1, 2, 3]);
        assert_eq!(c.trajectory.chunks[0].write, vec![1, 2]);
    }

    #[test]
    fn curate_rejects_and_continues() {
        let mut out = Vec::new();
        let s = curate(
            lines("a b\n\nc d\n", "x y\nz\nu v\n", "0-0\n\n0-5\n").into_iter(),
            2,
            &mut out,
        )
        .unwrap();
        assert_eq!(s.written, 1);
        assert_eq!(s.rejected.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1, 2]);
        assert!(s.rejected[1].reason.contains("record 2"));
    }

    #[test]
    fn count_mismatch_is_an_error() {
        assert!(matches!(check_counts("source/target", 2, 3), Err(Error::CountMismatch { .. })));
    }

    #[test]
    fn tsv_bitext() {
        let out: Vec<_> = zip_tsv("a b\tx y\n".as_bytes(), "0-0\n".as_bytes())
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(out[0].1 .0, "a b");
        assert_eq!(out[0].1 .1, "x y");
    }
}
