use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Stage numbers. Constructions consume stages in increasing order from 0.
pub type Stage = usize;

/// A monotone, stage-stamped approximation to a c.e. set.
///
/// The set is stored as an append-only event log `(element, entry stage)`;
/// snapshots are derived views. An element enters at most once and never
/// leaves, so `snapshot(s) ⊆ snapshot(t)` whenever `s ≤ t`.
#[derive(Debug, Clone, Default)]
pub struct StageSet {
    events: Vec<(usize, Stage)>,
    entry: BTreeMap<usize, Stage>,
    by_stage: BTreeMap<Stage, Vec<usize>>,
    horizon: Stage,
}

/// Two sets are equal when they have the same horizon and every element
/// enters both at the same stage; the order of the log does not matter.
impl PartialEq for StageSet {
    fn eq(&self, other: &Self) -> bool {
        self.horizon == other.horizon && self.entry == other.entry
    }
}

impl Eq for StageSet {}

impl StageSet {
    pub fn new(horizon: Stage) -> Self {
        StageSet {
            horizon,
            ..Default::default()
        }
    }

    /// Builds a scripted set; every stamp must be at most `horizon`.
    pub fn from_events<I>(events: I, horizon: Stage) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Stage)>,
    {
        let mut set = StageSet::new(horizon);
        for (x, s) in events {
            if !set.enumerate(x, s)? {
                return Err(Error::DuplicateElement { element: x });
            }
        }
        Ok(set)
    }

    /// Records `x` entering at stage `s`. Returns `false` (and changes
    /// nothing) when `x` is already present.
    pub fn enumerate(&mut self, x: usize, s: Stage) -> Result<bool> {
        if s > self.horizon {
            return Err(Error::HorizonExceeded {
                stage: s,
                horizon: self.horizon,
            });
        }
        if self.entry.contains_key(&x) {
            return Ok(false);
        }
        self.entry.insert(x, s);
        self.by_stage.entry(s).or_default().push(x);
        self.events.push((x, s));
        Ok(true)
    }

    pub fn horizon(&self) -> Stage {
        self.horizon
    }

    /// Construction-produced sets grow their horizon as the run advances.
    pub fn extend_horizon(&mut self, horizon: Stage) {
        self.horizon = self.horizon.max(horizon);
    }

    /// Drops every event stamped after `horizon` and lowers the horizon.
    pub fn truncated(&self, horizon: Stage) -> StageSet {
        let mut out = StageSet::new(horizon);
        for &(x, s) in &self.events {
            if s <= horizon {
                out.enumerate(x, s).expect("stamp checked against horizon");
            }
        }
        out
    }

    /// Events in insertion order.
    pub fn events(&self) -> &[(usize, Stage)] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn entry_stage(&self, x: usize) -> Option<Stage> {
        self.entry.get(&x).copied()
    }

    /// Membership at stage `s` without a horizon check.
    #[inline]
    pub fn contains_at(&self, x: usize, s: Stage) -> bool {
        matches!(self.entry.get(&x), Some(&t) if t <= s)
    }

    /// Membership at the horizon.
    pub fn contains(&self, x: usize) -> bool {
        self.entry.contains_key(&x)
    }

    /// The elements with entry stage at most `s`.
    pub fn snapshot(&self, s: Stage) -> Result<BTreeSet<usize>> {
        if s > self.horizon {
            return Err(Error::HorizonExceeded {
                stage: s,
                horizon: self.horizon,
            });
        }
        Ok(self
            .entry
            .iter()
            .filter(|&(_, &t)| t <= s)
            .map(|(&x, _)| x)
            .collect())
    }

    /// Elements whose entry stage is exactly `s`.
    pub fn entered_at(&self, s: Stage) -> &[usize] {
        self.by_stage.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Elements in `[lo, hi)` present at stage `s`.
    pub fn range_at(&self, lo: usize, hi: usize, s: Stage) -> impl Iterator<Item = usize> + '_ {
        self.entry
            .range(lo..hi)
            .filter(move |&(_, &t)| t <= s)
            .map(|(&x, _)| x)
    }

    pub fn max_element(&self) -> Option<usize> {
        self.entry.keys().next_back().copied()
    }

    /// Last stage at which anything entered.
    pub fn last_change(&self) -> Option<Stage> {
        self.by_stage.keys().next_back().copied()
    }

    /// Characteristic string of the stage-`s` snapshot on `[0, len)`.
    pub fn bits_at(&self, s: Stage, len: usize) -> Vec<bool> {
        let mut bits = vec![false; len];
        for (&x, &t) in self.entry.range(..len) {
            if t <= s {
                bits[x] = true;
            }
        }
        bits
    }
}

/// Issues "large" numbers: one more than the largest number seen so far.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreshCounter {
    max_seen: Option<usize>,
}

impl FreshCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, x: usize) {
        self.max_seen = Some(self.max_seen.map_or(x, |m| m.max(x)));
    }

    pub fn observe_all<I: IntoIterator<Item = usize>>(&mut self, xs: I) {
        for x in xs {
            self.observe(x);
        }
    }

    pub fn fresh(&mut self) -> usize {
        let n = self.max_seen.map_or(0, |m| m + 1);
        self.observe(n);
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_snapshot(events: &[(usize, Stage)], s: Stage) -> BTreeSet<usize> {
        events.iter().filter(|e| e.1 <= s).map(|e| e.0).collect()
    }

    #[test]
    fn snapshot_examples() {
        let set = StageSet::from_events([(3, 1), (5, 4)], 10).unwrap();
        assert_eq!(set.snapshot(2).unwrap(), BTreeSet::from([3]));
        assert_eq!(set.snapshot(4).unwrap(), brute_snapshot(&[(3, 1), (5, 4)], 4));
        assert_eq!(set.snapshot(4).unwrap(), BTreeSet::from([3, 5]));
        let empty = StageSet::new(7);
        for s in 0..=7 {
            assert!(empty.snapshot(s).unwrap().is_empty());
        }
    }

    #[test]
    fn snapshot_beyond_horizon_is_an_error() {
        let set = StageSet::from_events([(3, 1)], 5).unwrap();
        assert_eq!(
            set.snapshot(6),
            Err(Error::HorizonExceeded {
                stage: 6,
                horizon: 5
            })
        );
        assert!(StageSet::from_events([(3, 6)], 5).is_err());
    }

    #[test]
    fn duplicates_rejected_in_scripts() {
        assert_eq!(
            StageSet::from_events([(3, 1), (3, 2)], 5),
            Err(Error::DuplicateElement { element: 3 })
        );
        let mut set = StageSet::new(5);
        assert!(set.enumerate(3, 1).unwrap());
        assert!(!set.enumerate(3, 2).unwrap());
        assert_eq!(set.entry_stage(3), Some(1));
    }

    #[test]
    fn bits_and_ranges() {
        let set = StageSet::from_events([(0, 0), (2, 3), (9, 1)], 5).unwrap();
        assert_eq!(set.bits_at(2, 4), vec![true, false, false, false]);
        assert_eq!(set.bits_at(3, 4), vec![true, false, true, false]);
        assert_eq!(set.range_at(1, 10, 5).collect::<Vec<_>>(), vec![2, 9]);
        assert_eq!(set.entered_at(3), &[2]);
        assert_eq!(set.last_change(), Some(3));
    }

    #[test]
    fn fresh_counter_exceeds_everything_seen() {
        let mut c = FreshCounter::new();
        assert_eq!(c.fresh(), 0);
        c.observe(41);
        assert_eq!(c.fresh(), 42);
        assert_eq!(c.fresh(), 43);
    }
}
