//! Frame ingestion: wire format, channel registry, merging and synthetic traces.

mod merge;
mod synth;
mod wire;

pub use merge::{
    merge_streams, read_trace, Diagnostic, LineSource, MergeEvent, MergedStream, SourceItem,
};
pub use synth::{
    synth_trace, Emission, SynthChannel, SynthChannelFile, SynthError, SynthScript,
    SynthScriptFile, SynthSegment, SynthSegmentFile,
};
pub use wire::{
    format_frame, parse_frame, parse_frame_bytes, ChannelRegistry, ChannelSpec, FrameError,
    FrameKind, FrameParser, FramePayload, LabelTarget, PerceptorFrame, PresenceObservation,
    RegistryError, DROP_LABEL,
};

/// File extension of recorded perceptor traces.
pub const TRACE_EXTENSION: &str = "srft";
