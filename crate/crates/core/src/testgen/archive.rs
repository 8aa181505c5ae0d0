use std::collections::{BTreeMap, BTreeSet};

use super::{Target, TestCase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchivedTest {
    pub test: TestCase,
    /// Request index at which the test was generated.
    pub index: u64,
    /// Tracked targets the test covers.
    pub covers: BTreeSet<Target>,
}

/// Retained tests, each the first to cover some tracked target.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Archive {
    tests: Vec<ArchivedTest>,
    covered: BTreeSet<Target>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Targets of `candidate` not yet covered.
    pub fn novel(&self, candidate: &BTreeSet<Target>) -> BTreeSet<Target> {
        candidate.difference(&self.covered).cloned().collect()
    }

    /// Adds the test if it covers something new; returns the new targets.
    pub fn offer(&mut self, test: TestCase, index: u64, covers: BTreeSet<Target>) -> BTreeSet<Target> {
        let new = self.novel(&covers);
        if !new.is_empty() {
            self.covered.extend(new.iter().cloned());
            self.tests.push(ArchivedTest { test, index, covers });
        }
        new
    }

    pub fn is_covered(&self, t: &Target) -> bool {
        self.covered.contains(t)
    }

    pub fn covered(&self) -> &BTreeSet<Target> {
        &self.covered
    }

    pub fn tests(&self) -> &[ArchivedTest] {
        &self.tests
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    /// Drops tests whose targets are all covered by the others, scanning in
    /// retention order. Removal never adds coverage, so one pass leaves every
    /// remaining test with a target no other test covers.
    pub fn finalize(&mut self) {
        let mut counts: BTreeMap<&Target, usize> = BTreeMap::new();
        for t in &self.tests {
            for target in &t.covers {
                *counts.entry(target).or_default() += 1;
            }
        }
        let mut keep = vec![true; self.tests.len()];
        for (i, t) in self.tests.iter().enumerate() {
            if t.covers.iter().all(|target| counts[target] > 1) {
                keep[i] = false;
                for target in &t.covers {
                    *counts.get_mut(target).expect("counted") -= 1;
                }
            }
        }
        let mut flags = keep.into_iter();
        self.tests.retain(|_| flags.next().expect("one flag per test"));
    }

    /// The first retained test covering each target.
    pub fn first_covering(&self) -> BTreeMap<&Target, &ArchivedTest> {
        let mut map = BTreeMap::new();
        for t in &self.tests {
            for target in &t.covers {
                map.entry(target).or_insert(t);
            }
        }
        map
    }
}
