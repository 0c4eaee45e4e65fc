use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Simulation time in seconds.
pub type SimTime = f64;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("event at t={at} is in the past (now={now})")]
    InPast { at: SimTime, now: SimTime },
    #[error("event time {0} is not finite")]
    NotFinite(SimTime),
}

/// Stable discriminant mixed into the trace hash for every dequeued event.
pub trait TraceTag {
    fn trace_tag(&self) -> u64;
}

impl TraceTag for () {
    fn trace_tag(&self) -> u64 {
        0
    }
}

/// A dequeued event: firing time, FIFO tiebreak and payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<K> {
    pub time: SimTime,
    pub sequence: u64,
    pub kind: K,
}

struct Entry<K>(Event<K>);

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K> Eq for Entry<K> {}

impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Entry<K> {
    // BinaryHeap is a max-heap; reverse so the earliest (time, sequence) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.time.total_cmp(&self.0.time).then_with(|| other.0.sequence.cmp(&self.0.sequence))
    }
}

/// FNV-1a over the dequeued (time, sequence, tag) stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceHash(u64);

impl Default for TraceHash {
    fn default() -> Self {
        TraceHash(0xcbf2_9ce4_8422_2325)
    }
}

impl TraceHash {
    pub fn mix(&mut self, word: u64) {
        for b in word.to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn value(&self) -> u64 {
        self.0
    }
}

/// Deterministic discrete-event queue ordered by (time, sequence).
pub struct Scheduler<K> {
    now: SimTime,
    next_sequence: u64,
    queue: BinaryHeap<Entry<K>>,
    trace: TraceHash,
    processed: u64,
}

impl<K> Default for Scheduler<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> Scheduler<K> {
    pub fn new() -> Self {
        Scheduler { now: 0.0, next_sequence: 0, queue: BinaryHeap::new(), trace: TraceHash::default(), processed: 0 }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn trace_hash(&self) -> u64 {
        self.trace.value()
    }

    pub fn schedule(&mut self, time: SimTime, kind: K) -> Result<u64, ScheduleError> {
        if !time.is_finite() {
            return Err(ScheduleError::NotFinite(time));
        }
        if time < self.now {
            return Err(ScheduleError::InPast { at: time, now: self.now });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Entry(Event { time, sequence, kind }));
        Ok(sequence)
    }

    /// Schedules `delay` seconds from now. Negative or non-finite delays are rejected.
    pub fn schedule_in(&mut self, delay: SimTime, kind: K) -> Result<u64, ScheduleError> {
        self.schedule(self.now + delay, kind)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|e| e.0.time)
    }

    /// Moves the clock forward without processing anything.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }
}

impl<K: TraceTag> Scheduler<K> {
    /// Pops the next event with `time <= t_end`, advancing the clock to it.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<Event<K>> {
        match self.queue.peek() {
            Some(e) if e.0.time <= t_end => {}
            _ => return None,
        }
        let Entry(ev) = self.queue.pop()?;
        self.now = ev.time;
        self.processed += 1;
        self.trace.mix(ev.time.to_bits());
        self.trace.mix(ev.sequence);
        self.trace.mix(ev.kind.trace_tag());
        Some(ev)
    }

    /// Processes every event up to and including `t_end`; the handler may schedule
    /// follow-ups, which are processed too if they fall inside the horizon.
    /// Returns the number of events handled by this call.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, Event<K>),
    {
        let mut count = 0;
        while let Some(ev) = self.pop_until(t_end) {
            handler(self, ev);
            count += 1;
        }
        self.advance_to(t_end);
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    impl TraceTag for &'static str {
        fn trace_tag(&self) -> u64 {
            self.len() as u64
        }
    }

    #[test]
    fn earlier_time_dequeues_first() {
        let mut s = Scheduler::new();
        s.schedule(5.0, "A").unwrap();
        s.schedule(3.0, "B").unwrap();
        assert_eq!(s.pop_until(10.0).unwrap().kind, "B");
        assert_eq!(s.pop_until(10.0).unwrap().kind, "A");
    }

    #[test]
    fn equal_times_are_fifo() {
        let mut s = Scheduler::new();
        s.schedule(5.0, "A").unwrap();
        s.schedule(5.0, "B").unwrap();
        assert_eq!(s.pop_until(10.0).unwrap().kind, "A");
        assert_eq!(s.pop_until(10.0).unwrap().kind, "B");
    }

    #[test]
    fn past_events_are_rejected() {
        let mut s: Scheduler<&str> = Scheduler::new();
        s.advance_to(4.0);
        assert_eq!(s.schedule(3.0, "late"), Err(ScheduleError::InPast { at: 3.0, now: 4.0 }));
        assert!(matches!(s.schedule(f64::NAN, "nan"), Err(ScheduleError::NotFinite(_))));
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut s: Scheduler<&str> = Scheduler::new();
        assert_eq!(s.run_until(12.5, |_, _| {}), 0);
        assert_eq!(s.now(), 12.5);
    }

    #[test]
    fn follow_ups_inside_horizon_are_processed() {
        let mut s = Scheduler::new();
        s.schedule(1.0, "seed").unwrap();
        let mut seen = Vec::new();
        let n = s.run_until(10.0, |sched, ev| {
            seen.push((ev.time, ev.kind));
            if ev.kind == "seed" {
                sched.schedule_in(2.0, "child").unwrap();
                sched.schedule_in(20.0, "beyond").unwrap();
            }
        });
        assert_eq!(n, 2);
        assert_eq!(seen, vec![(1.0, "seed"), (3.0, "child")]);
        assert_eq!(s.pending(), 1);
    }

    #[test]
    fn identical_schedules_hash_identically() {
        let build = || {
            let mut s = Scheduler::new();
            for i in 0..50 {
                s.schedule(f64::from(i % 7), if i % 2 == 0 { "even" } else { "odd!" }).unwrap();
            }
            s.run_until(100.0, |_, _| {});
            s.trace_hash()
        };
        assert_eq!(build(), build());
    }
}
