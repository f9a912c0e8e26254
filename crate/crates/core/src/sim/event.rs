use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::SimTime;

/// Arrows of the offloading message sequence: request creation, bidding,
/// clearing, dispatch, execution outcome, state reports and feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    ServiceArrival,
    BidSubmission,
    AuctionClear,
    AssignmentDispatch,
    ExecutionComplete,
    DeadlineExpiry,
    UtilizationReportArrival,
    FeedbackDelivery,
    BackoffExpiry,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::ServiceArrival,
        EventKind::BidSubmission,
        EventKind::AuctionClear,
        EventKind::AssignmentDispatch,
        EventKind::ExecutionComplete,
        EventKind::DeadlineExpiry,
        EventKind::UtilizationReportArrival,
        EventKind::FeedbackDelivery,
        EventKind::BackoffExpiry,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ServiceArrival => "ServiceArrival",
            EventKind::BidSubmission => "BidSubmission",
            EventKind::AuctionClear => "AuctionClear",
            EventKind::AssignmentDispatch => "AssignmentDispatch",
            EventKind::ExecutionComplete => "ExecutionComplete",
            EventKind::DeadlineExpiry => "DeadlineExpiry",
            EventKind::UtilizationReportArrival => "UtilizationReportArrival",
            EventKind::FeedbackDelivery => "FeedbackDelivery",
            EventKind::BackoffExpiry => "BackoffExpiry",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown event kind `{s}`"))
    }
}

/// Kind-specific event data. `entity` and `describe` feed the trace row that
/// the engine writes for every processed event.
pub trait EventPayload {
    fn kind(&self) -> EventKind;

    fn entity(&self) -> String;

    fn describe(&self, _attrs: &mut Vec<(String, String)>) {}
}

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub time: SimTime,
    pub seq: u64,
    pub payload: P,
}

impl<P: EventPayload> Event<P> {
    pub fn kind(&self) -> EventKind {
        self.payload.kind()
    }
}

// Heap ordering only looks at (time, seq); seq is unique per engine.
impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl<P> Eq for Event<P> {}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Event<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}
