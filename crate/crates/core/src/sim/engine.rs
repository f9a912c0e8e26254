use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Event, EventPayload, RunTrace, SimError, SimTime, TraceRow, TraceSink};

/// Reacts to dequeued events; may schedule follow-ups on the engine and
/// append effect rows to the trace.
pub trait Handler<P> {
    fn handle(&mut self, event: Event<P>, engine: &mut Engine<P>, trace: &mut dyn TraceSink);
}

/// Single-threaded event loop. Events dequeue in `(time, seq)` order and the
/// clock never moves backwards.
#[derive(Debug)]
pub struct Engine<P> {
    queue: BinaryHeap<Reverse<Event<P>>>,
    clock: SimTime,
    next_seq: u64,
    last_dequeued: Option<(SimTime, u64)>,
}

impl<P> Default for Engine<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Engine<P> {
    pub fn new() -> Self {
        Engine {
            queue: BinaryHeap::new(),
            clock: SimTime::ZERO,
            next_seq: 0,
            last_dequeued: None,
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Enqueues `payload` at `time`, returning the assigned sequence number.
    pub fn schedule(&mut self, time: SimTime, payload: P) -> Result<u64, SimError> {
        if time < self.clock {
            return Err(SimError::PastEvent {
                event: time,
                clock: self.clock,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(Event { time, seq, payload }));
        Ok(seq)
    }

    /// Schedules `delay_ms` after the current clock; cannot fail.
    pub fn schedule_in(&mut self, delay_ms: u64, payload: P) -> u64 {
        let time = self.clock + delay_ms;
        self.schedule(time, payload).expect("future event")
    }

    /// Removes the next event if it is due at or before `horizon`, advancing
    /// the clock to its timestamp.
    pub fn pop_due(&mut self, horizon: SimTime) -> Option<Event<P>> {
        if self.queue.peek().is_none_or(|Reverse(ev)| ev.time > horizon) {
            return None;
        }
        let Reverse(ev) = self.queue.pop()?;
        debug_assert!(
            self.last_dequeued
                .is_none_or(|last| last < (ev.time, ev.seq)),
            "event dequeued out of (time, seq) order"
        );
        debug_assert!(ev.time >= self.clock);
        self.last_dequeued = Some((ev.time, ev.seq));
        self.clock = ev.time;
        Some(ev)
    }
}

impl<P: EventPayload> Engine<P> {
    /// Processes every event with `time <= t_end` and leaves the clock at
    /// `t_end`. Each processed event is written to `trace` ahead of the rows
    /// its handler emits.
    pub fn run_until<H: Handler<P>>(
        &mut self,
        t_end: SimTime,
        handler: &mut H,
        trace: &mut dyn TraceSink,
    ) -> Result<(), SimError> {
        if t_end < self.clock {
            return Err(SimError::PastHorizon {
                target: t_end,
                clock: self.clock,
            });
        }
        while let Some(event) = self.pop_due(t_end) {
            if trace.enabled() {
                let mut attrs = Vec::new();
                event.payload.describe(&mut attrs);
                trace.record(TraceRow {
                    time_ms: event.time.as_ms(),
                    kind: event.kind(),
                    entity: event.payload.entity(),
                    attrs,
                });
            }
            handler.handle(event, self, trace);
        }
        self.clock = t_end;
        Ok(())
    }

    /// Convenience form of [`Engine::run_until`] collecting the trace in memory.
    pub fn run_until_collect<H: Handler<P>>(
        &mut self,
        t_end: SimTime,
        handler: &mut H,
    ) -> Result<RunTrace, SimError> {
        let mut trace = RunTrace::default();
        self.run_until(t_end, handler, &mut trace)?;
        Ok(trace)
    }
}
