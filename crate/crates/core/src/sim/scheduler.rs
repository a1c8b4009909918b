use std::collections::BTreeMap;

use crate::domain::NodeId;

/// A message (or timer) waiting in the queue. The payload is the canonical
/// encoding of a [`crate::message::Message`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent {
    pub deliver_at: u64,
    pub seq: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub payload: Vec<u8>,
}

/// Priority queue keyed by `(deliver_at, seq)`. Sequence numbers are handed
/// out in scheduling order, so ties at the same instant resolve FIFO.
#[derive(Debug, Default)]
pub struct Scheduler {
    queue: BTreeMap<(u64, u64), SimEvent>,
    next_seq: u64,
    now: u64,
}

impl Scheduler {
    pub fn new(start: u64) -> Self {
        Self {
            queue: BTreeMap::new(),
            next_seq: 0,
            now: start,
        }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Reserves the next sequence number.
    pub fn next_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    /// Enqueues an event. Events cannot be scheduled in the past.
    pub fn push(&mut self, mut event: SimEvent) {
        event.deliver_at = event.deliver_at.max(self.now);
        self.queue.insert((event.deliver_at, event.seq), event);
    }

    /// Removes the earliest event and advances the clock to it.
    pub fn pop(&mut self) -> Option<SimEvent> {
        let (_, ev) = self.queue.pop_first()?;
        self.now = ev.deliver_at;
        Some(ev)
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &mut Scheduler, at: u64) -> SimEvent {
        SimEvent {
            deliver_at: at,
            seq: s.next_seq(),
            source: NodeId::Driver,
            destination: NodeId::Cidr,
            payload: vec![],
        }
    }

    #[test]
    fn orders_by_time_then_seq() {
        let mut s = Scheduler::new(100);
        let a = ev(&mut s, 105);
        let b = ev(&mut s, 101);
        let c = ev(&mut s, 105);
        s.push(c);
        s.push(a);
        s.push(b);
        let order: Vec<_> = std::iter::from_fn(|| s.pop()).map(|e| (e.deliver_at, e.seq)).collect();
        assert_eq!(order, vec![(101, 1), (105, 0), (105, 2)]);
        assert_eq!(s.now(), 105);
    }

    #[test]
    fn past_events_clamped_to_now() {
        let mut s = Scheduler::new(50);
        let e = ev(&mut s, 10);
        s.push(e);
        assert_eq!(s.pop().unwrap().deliver_at, 50);
    }
}
