//! Deterministic discrete-event core: simulated clock, a `(time, seq)`-ordered
//! event queue, named per-entity random streams and the append-only run trace.

mod engine;
mod event;
mod rng;
mod time;
mod trace;

pub use engine::{Engine, Handler};
pub use event::{Event, EventKind, EventPayload};
pub use rng::{derive_stream, RngStream};
pub use time::SimTime;
pub use trace::{
    read_trace_csv, CsvTraceWriter, NullTrace, RunTrace, TeeTrace, TraceError, TraceRow, TraceSink,
    TRACE_HEADER,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("event scheduled at {event} ms but the clock is already at {clock} ms")]
    PastEvent { event: SimTime, clock: SimTime },
    #[error("run_until({target} ms) is behind the clock ({clock} ms)")]
    PastHorizon { target: SimTime, clock: SimTime },
}
