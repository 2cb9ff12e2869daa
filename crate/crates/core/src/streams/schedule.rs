use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::LabelledStream;
use crate::error::{Error, Result};
use crate::learners::{Example, Label};
use crate::marline::StreamId;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InterleavePolicy {
    /// One example from each source, then one target example, repeated.
    /// Exhausted streams are skipped.
    #[default]
    RoundRobin,
    /// The first `warmup_fraction` of every source up front, then round-robin.
    TargetPaced { warmup_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub stream: StreamId,
    /// Position within the originating stream.
    pub local_index: usize,
    pub example: Example,
}

/// Global arrival order across all streams.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSchedule {
    pub target: StreamId,
    pub entries: Vec<ScheduleEntry>,
    /// `(stream, global index)` of the first example of each new concept.
    pub drift_marks: Vec<(StreamId, usize)>,
}

impl StreamSchedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn target_len(&self) -> usize {
        self.entries.iter().filter(|e| e.stream == self.target).count()
    }

    /// Global indices of target drift marks.
    pub fn target_marks(&self) -> HashSet<usize> {
        self.drift_marks
            .iter()
            .filter(|(s, _)| *s == self.target)
            .map(|&(_, g)| g)
            .collect()
    }

    /// The same schedule restricted to the target stream.
    pub fn target_only(&self) -> StreamSchedule {
        let mut remap = vec![usize::MAX; self.entries.len()];
        let mut entries = Vec::new();
        for (g, e) in self.entries.iter().enumerate() {
            if e.stream == self.target {
                remap[g] = entries.len();
                entries.push(e.clone());
            }
        }
        let drift_marks = self
            .drift_marks
            .iter()
            .filter(|(s, _)| *s == self.target)
            .map(|&(s, g)| (s, remap[g]))
            .collect();
        StreamSchedule {
            target: self.target,
            entries,
            drift_marks,
        }
    }
}

struct Cursor<'a> {
    stream: &'a LabelledStream,
    next: usize,
}

impl Cursor<'_> {
    fn exhausted(&self) -> bool {
        self.next >= self.stream.examples.len()
    }
}

fn push(entries: &mut Vec<ScheduleEntry>, c: &mut Cursor<'_>) {
    entries.push(ScheduleEntry {
        stream: c.stream.id,
        local_index: c.next,
        example: c.stream.examples[c.next].clone(),
    });
    c.next += 1;
}

pub fn interleave(target: &LabelledStream, sources: &[LabelledStream], policy: InterleavePolicy) -> Result<StreamSchedule> {
    if target.is_empty() {
        return Err(Error::config("target stream is empty"));
    }
    if sources.iter().any(|s| s.id == target.id) {
        return Err(Error::config(format!("source reuses the target stream id {}", target.id)));
    }
    let total = target.len() + sources.iter().map(LabelledStream::len).sum::<usize>();
    let mut entries = Vec::with_capacity(total);
    let mut src: Vec<Cursor> = sources.iter().map(|stream| Cursor { stream, next: 0 }).collect();
    let mut tgt = Cursor { stream: target, next: 0 };

    if let InterleavePolicy::TargetPaced { warmup_fraction } = policy {
        if !(0.0..=1.0).contains(&warmup_fraction) {
            return Err(Error::config("warmup_fraction must lie in [0, 1]"));
        }
        for c in &mut src {
            let warm = (warmup_fraction * c.stream.len() as f64).ceil() as usize;
            while c.next < warm.min(c.stream.len()) {
                push(&mut entries, c);
            }
        }
    }
    while entries.len() < total {
        for c in &mut src {
            if !c.exhausted() {
                push(&mut entries, c);
            }
        }
        if !tgt.exhausted() {
            push(&mut entries, &mut tgt);
        }
    }

    let mut drift_marks = Vec::new();
    for (g, e) in entries.iter().enumerate() {
        let stream = if e.stream == target.id {
            target
        } else {
            sources.iter().find(|s| s.id == e.stream).expect("entry from a known stream")
        };
        if stream.drift_marks.contains(&e.local_index) {
            drift_marks.push((e.stream, g));
        }
    }
    Ok(StreamSchedule {
        target: target.id,
        entries,
        drift_marks,
    })
}

/// Writes `t,stream_id,f1..fd,label,is_drift_mark`, one row per entry.
/// Labels are written as 0 (negative) and 1 (positive).
pub fn write_schedule_csv<W: Write>(schedule: &StreamSchedule, mut out: W) -> std::io::Result<()> {
    let dims = schedule.entries.first().map_or(0, |e| e.example.dims());
    let marks: HashSet<usize> = schedule.drift_marks.iter().map(|&(_, g)| g).collect();
    let mut header = String::from("t,stream_id");
    for i in 1..=dims {
        header.push_str(&format!(",f{i}"));
    }
    header.push_str(",label,is_drift_mark\n");
    out.write_all(header.as_bytes())?;
    let mut line = String::new();
    for (t, e) in schedule.entries.iter().enumerate() {
        line.clear();
        line.push_str(&format!("{t},{}", e.stream));
        for x in &e.example.features {
            line.push_str(&format!(",{x}"));
        }
        let label = u8::from(e.example.label == Label::Pos);
        line.push_str(&format!(",{label},{}\n", u8::from(marks.contains(&t))));
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}
