use serde::{Deserialize, Serialize};

/// Discrete time step index.
pub type Step = u32;

/// Identifier of an atomic tracklet piece as first emitted by the tracker.
///
/// Pieces survive merges (a merged vertex carries every piece of its chain)
/// and compound splitting (both halves keep the piece), so they are the
/// stable unit for comparing trajectories before and after graph surgery.
pub type PieceId = u64;

/// One contiguous observed interval of a tracklet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub piece: PieceId,
    pub start: Step,
    /// `None` while the tracklet is still being observed.
    pub end: Option<Step>,
}

impl Span {
    pub fn len_at(&self, now: Step) -> u64 {
        let end = self.end.unwrap_or(now);
        if end < self.start {
            0
        } else {
            u64::from(end - self.start) + 1
        }
    }

    pub fn steps(&self, now: Step) -> std::ops::RangeInclusive<Step> {
        self.start..=self.end.unwrap_or(now)
    }
}

/// The time support of a vertex: one span for a freshly detected tracklet,
/// several after solo or compound chains are concatenated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tracklet {
    spans: Vec<Span>,
}

impl Tracklet {
    pub fn open(piece: PieceId, start: Step) -> Self {
        Tracklet {
            spans: vec![Span {
                piece,
                start,
                end: None,
            }],
        }
    }

    pub fn closed(piece: PieceId, start: Step, end: Step) -> Self {
        Tracklet {
            spans: vec![Span {
                piece,
                start,
                end: Some(end),
            }],
        }
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn start(&self) -> Step {
        self.spans[0].start
    }

    pub fn end(&self) -> Option<Step> {
        self.spans.last().and_then(|s| s.end)
    }

    pub fn is_open(&self) -> bool {
        self.end().is_none()
    }

    /// Number of observed time steps, counting an open tail up to `now`.
    pub fn len_at(&self, now: Step) -> u64 {
        self.spans.iter().map(|s| s.len_at(now)).sum()
    }

    pub fn pieces(&self) -> impl Iterator<Item = PieceId> + '_ {
        self.spans.iter().map(|s| s.piece)
    }

    pub(crate) fn close(&mut self, end: Step) {
        let last = self.spans.last_mut().expect("tracklet has a span");
        debug_assert!(last.end.is_none(), "closing a closed tracklet");
        last.end = Some(end);
    }

    /// Appends `next` after `self`; `self` must be closed and strictly earlier.
    pub(crate) fn concat(&mut self, next: &Tracklet) {
        debug_assert!(self.end().is_some_and(|e| e < next.start()));
        self.spans.extend_from_slice(&next.spans);
    }
}
