//! Line sources and the deterministic k-way merge.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::io::BufRead;

use super::wire::{ChannelRegistry, FrameError, FrameParser, PerceptorFrame};

/// A rejected line or frame. `source` is the index of the merge input;
/// `line` is 1-based when known.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub source: usize,
    pub line: Option<usize>,
    pub error: FrameError,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "source {} line {}: {}", self.source, line, self.error),
            None => write!(f, "source {}: {}", self.source, self.error),
        }
    }
}

pub type SourceItem = Result<PerceptorFrame, Diagnostic>;

/// Reads wire lines from `reader`, yielding one item per line: a validated
/// frame or exactly one diagnostic. A read error ends the source.
pub struct LineSource<B, R> {
    reader: B,
    parser: FrameParser<R>,
    line: usize,
    buf: Vec<u8>,
    done: bool,
}

impl<B: BufRead, R: AsRef<ChannelRegistry>> LineSource<B, R> {
    pub fn new(reader: B, registry: R) -> Self {
        Self {
            reader,
            parser: FrameParser::new(registry),
            line: 0,
            buf: Vec::new(),
            done: false,
        }
    }
}

impl<B: BufRead, R: AsRef<ChannelRegistry>> Iterator for LineSource<B, R> {
    type Item = SourceItem;

    fn next(&mut self) -> Option<SourceItem> {
        if self.done {
            return None;
        }
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(_) => {
                self.line += 1;
                let line = self.line;
                Some(
                    self.parser
                        .parse_line(&self.buf)
                        .map_err(|error| Diagnostic {
                            source: 0,
                            line: Some(line),
                            error,
                        }),
                )
            }
            Err(e) => {
                self.done = true;
                Some(Err(Diagnostic {
                    source: 0,
                    line: None,
                    error: FrameError::Io(e.to_string()),
                }))
            }
        }
    }
}

/// Reads a whole trace, separating frames from diagnostics.
pub fn read_trace<B: BufRead>(
    reader: B,
    registry: &ChannelRegistry,
) -> (Vec<PerceptorFrame>, Vec<Diagnostic>) {
    let mut frames = Vec::new();
    let mut diagnostics = Vec::new();
    for item in LineSource::new(reader, registry) {
        match item {
            Ok(f) => frames.push(f),
            Err(d) => diagnostics.push(d),
        }
    }
    (frames, diagnostics)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MergeEvent {
    Frame(PerceptorFrame),
    Skipped(Diagnostic),
}

/// Merges individually ordered sources into one stream ordered by
/// `(t, channel, source index)`.
///
/// The merge only releases a frame once every open source has a pending
/// head, so its output depends on source contents alone, never on how the
/// sources' items interleave in wall-clock time. Frames that go backwards
/// within a source are skipped with a diagnostic. Source diagnostics are
/// passed through as [`MergeEvent::Skipped`].
pub struct MergedStream<S> {
    sources: Vec<S>,
    heads: Vec<Option<PerceptorFrame>>,
    last_t: Vec<Option<u64>>,
    heap: BinaryHeap<Reverse<(u64, String, usize)>>,
    pending: VecDeque<Diagnostic>,
    primed: bool,
}

impl<S: Iterator<Item = SourceItem>> MergedStream<S> {
    pub fn new(sources: Vec<S>) -> Self {
        let n = sources.len();
        Self {
            sources,
            heads: vec![None; n],
            last_t: vec![None; n],
            heap: BinaryHeap::with_capacity(n),
            pending: VecDeque::new(),
            primed: false,
        }
    }

    fn refill(&mut self, i: usize) {
        for item in self.sources[i].by_ref() {
            match item {
                Err(mut d) => {
                    d.source = i;
                    self.pending.push_back(d);
                }
                Ok(frame) => {
                    if let Some(previous) = self.last_t[i].filter(|p| frame.t < *p) {
                        self.pending.push_back(Diagnostic {
                            source: i,
                            line: None,
                            error: FrameError::SourceOutOfOrder {
                                t: frame.t,
                                previous,
                            },
                        });
                        continue;
                    }
                    self.last_t[i] = Some(frame.t);
                    self.heap.push(Reverse((frame.t, frame.channel.clone(), i)));
                    self.heads[i] = Some(frame);
                    return;
                }
            }
        }
    }
}

impl<S: Iterator<Item = SourceItem>> Iterator for MergedStream<S> {
    type Item = MergeEvent;

    fn next(&mut self) -> Option<MergeEvent> {
        if !self.primed {
            self.primed = true;
            for i in 0..self.sources.len() {
                self.refill(i);
            }
        }
        if let Some(d) = self.pending.pop_front() {
            return Some(MergeEvent::Skipped(d));
        }
        let Reverse((_, _, i)) = self.heap.pop()?;
        let frame = self.heads[i].take().expect("heap entry without head frame");
        self.refill(i);
        Some(MergeEvent::Frame(frame))
    }
}

/// Merges in-memory sources, returning only the frames.
pub fn merge_streams(sources: Vec<Vec<PerceptorFrame>>) -> Vec<PerceptorFrame> {
    let iters: Vec<_> = sources
        .into_iter()
        .map(|s| s.into_iter().map(Ok as fn(PerceptorFrame) -> SourceItem))
        .collect();
    MergedStream::new(iters)
        .filter_map(|e| match e {
            MergeEvent::Frame(f) => Some(f),
            MergeEvent::Skipped(_) => None,
        })
        .collect()
}
