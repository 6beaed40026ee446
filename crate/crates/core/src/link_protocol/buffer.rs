use std::collections::VecDeque;

use crate::ids::{FlowId, UavId};
use crate::time::{Duration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Item {
    flow: FlowId,
    bytes: u64,
    enqueued: SimTime,
}

/// Bytes handed on by a drain, with how long they waited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Drained {
    pub flow: FlowId,
    pub bytes: u64,
    pub enqueued: SimTime,
    pub queuing: Duration,
}

/// Store-and-forward queue for one train's traffic, FIFO across flows.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayBuffer {
    /// UAV holding the queue; `None` while the train has no server and the
    /// data waits at the ground side.
    pub owner: Option<UavId>,
    capacity: u64,
    occupancy: u64,
    items: VecDeque<Item>,
}

impl RelayBuffer {
    pub fn new(owner: Option<UavId>, capacity: u64) -> Self {
        RelayBuffer {
            owner,
            capacity,
            occupancy: 0,
            items: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn occupancy(&self) -> u64 {
        self.occupancy
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy == 0
    }

    pub fn buffered_for(&self, flow: FlowId) -> u64 {
        self.items
            .iter()
            .filter(|i| i.flow == flow)
            .map(|i| i.bytes)
            .sum()
    }

    /// Queues up to the free space; returns the bytes that did not fit.
    pub fn enqueue(&mut self, flow: FlowId, bytes: u64, now: SimTime) -> u64 {
        let free = self.capacity - self.occupancy;
        let taken = bytes.min(free);
        if taken > 0 {
            match self.items.back_mut() {
                Some(last) if last.flow == flow && last.enqueued == now => last.bytes += taken,
                _ => self.items.push_back(Item {
                    flow,
                    bytes: taken,
                    enqueued: now,
                }),
            }
            self.occupancy += taken;
        }
        bytes - taken
    }

    /// Delivers up to `budget` bytes in arrival order, splitting the head
    /// item if needed.
    pub fn drain(&mut self, budget: u64, now: SimTime) -> Vec<Drained> {
        let mut left = budget;
        let mut out = Vec::new();
        while left > 0 {
            let Some(head) = self.items.front_mut() else {
                break;
            };
            let n = head.bytes.min(left);
            out.push(Drained {
                flow: head.flow,
                bytes: n,
                enqueued: head.enqueued,
                queuing: now.saturating_sub(head.enqueued),
            });
            head.bytes -= n;
            left -= n;
            self.occupancy -= n;
            if head.bytes == 0 {
                self.items.pop_front();
            }
        }
        out
    }

    /// Discards everything queued, returning per-flow byte counts.
    pub fn flush(&mut self) -> Vec<(FlowId, u64)> {
        let mut out: Vec<(FlowId, u64)> = Vec::new();
        for i in self.items.drain(..) {
            match out.iter_mut().find(|(f, _)| *f == i.flow) {
                Some((_, b)) => *b += i.bytes,
                None => out.push((i.flow, i.bytes)),
            }
        }
        self.occupancy = 0;
        out.sort();
        out
    }
}

/// Bytes a link of `capacity_bps` moves in one tick, rounded down.
pub fn bytes_per_tick(capacity_bps: f64, dt: Duration) -> u64 {
    if !(capacity_bps > 0.0) {
        return 0;
    }
    (capacity_bps * dt.millis() as f64 / 8000.0).floor() as u64
}
