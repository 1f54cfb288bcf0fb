//! Label organizer: packs the labels of a track into display lanes so that
//! no two labels in a lane overlap, using as few lanes as possible.
//!
//! Overlap is half-open. A label ending at `t` and one starting at `t` share
//! a lane, and a point label at `t` only collides with labels that strictly
//! contain `t`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use crate::model::{Dataset, TimePoint};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LaneAssignment {
    pub lanes: BTreeMap<String, usize>,
    pub lane_count: usize,
}

impl LaneAssignment {
    pub fn lane_of(&self, id: &str) -> Option<usize> {
        self.lanes.get(id).copied()
    }
}

/// Greedy interval partitioning.
///
/// Labels are visited in `(start, end, id)` order and each goes to the
/// lowest-numbered lane that is free at its start. The result does not
/// depend on input order.
pub fn assign_lanes<'a, I>(labels: I) -> LaneAssignment
where
    I: IntoIterator<Item = (&'a str, TimePoint, TimePoint)>,
{
    let mut sorted: Vec<_> = labels.into_iter().collect();
    sorted.sort_by(|a, b| (a.1, a.2, a.0).cmp(&(b.1, b.2, b.0)));
    let spans: Vec<_> = sorted.iter().map(|&(_, s, e)| (s, e)).collect();
    let (lanes, lane_count) = pack_lanes(&spans);
    LaneAssignment {
        lanes: sorted
            .iter()
            .zip(lanes)
            .map(|(l, lane)| (l.0.to_string(), lane))
            .collect(),
        lane_count,
    }
}

/// The greedy partitioning over bare spans, ties broken by input position.
/// Returns each span's lane, in input order, and the lane count.
pub fn pack_lanes(spans: &[(TimePoint, TimePoint)]) -> (Vec<usize>, usize) {
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by_key(|&i| (spans[i], i));

    let mut busy: BinaryHeap<Reverse<(TimePoint, usize)>> = BinaryHeap::with_capacity(spans.len());
    let mut free: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
    let mut lanes = vec![0; spans.len()];
    let mut lane_count = 0;

    for i in order {
        let (start, end) = spans[i];
        while let Some(&Reverse((busy_until, lane))) = busy.peek() {
            if busy_until > start {
                break;
            }
            busy.pop();
            free.push(Reverse(lane));
        }
        let lane = free.pop().map_or_else(
            || {
                lane_count += 1;
                lane_count - 1
            },
            |Reverse(lane)| lane,
        );
        busy.push(Reverse((end, lane)));
        lanes[i] = lane;
    }
    (lanes, lane_count)
}

/// Lanes for the labels of one track.
pub fn assign_track_lanes(d: &Dataset, track_id: &str) -> LaneAssignment {
    assign_lanes(
        d.labels
            .iter()
            .filter(|l| l.track_id == track_id)
            .map(|l| (l.id.as_str(), l.start, l.end)),
    )
}

/// Largest number of labels active at one instant.
///
/// At equal times, interval ends are processed before point labels, and
/// point labels before interval starts.
pub fn max_overlap_depth<'a, I>(labels: I) -> usize
where
    I: IntoIterator<Item = (&'a str, TimePoint, TimePoint)>,
{
    const END: u8 = 0;
    const POINT: u8 = 1;
    const START: u8 = 2;

    let mut events = Vec::new();
    for (_, start, end) in labels {
        if start == end {
            events.push((start, POINT));
        } else {
            events.push((start, START));
            events.push((end, END));
        }
    }
    events.sort_unstable();

    let (mut active, mut depth) = (0usize, 0usize);
    for (_, kind) in events {
        match kind {
            END => active -= 1,
            POINT => depth = depth.max(active + 1),
            _ => {
                active += 1;
                depth = depth.max(active);
            }
        }
    }
    depth
}
