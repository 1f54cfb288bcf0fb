//! Undo/redo over committed edits, stored as `(edit, inverse)` pairs.

use std::collections::VecDeque;

use crate::annotator::{apply_edit, Applied, Edit};
use crate::error::{Error, Result};
use crate::model::{Dataset, TimePoint};

pub const DEFAULT_CAPACITY: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct EditPair {
    pub edit: Edit,
    pub inverse: Edit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    undo_stack: VecDeque<EditPair>,
    redo_stack: VecDeque<EditPair>,
    capacity: usize,
}

impl Default for History {
    fn default() -> Self {
        History::with_capacity(DEFAULT_CAPACITY)
    }
}

impl History {
    pub fn with_capacity(capacity: usize) -> Self {
        History {
            undo_stack: VecDeque::new(),
            redo_stack: VecDeque::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn can_undo(&self) -> bool {
        !self.undo_stack.is_empty()
    }

    pub fn can_redo(&self) -> bool {
        !self.redo_stack.is_empty()
    }

    /// Most recent last.
    pub fn undo_edits(&self) -> impl Iterator<Item = &Edit> {
        self.undo_stack.iter().map(|p| &p.edit)
    }

    pub fn redo_edits(&self) -> impl Iterator<Item = &Edit> {
        self.redo_stack.iter().map(|p| &p.edit)
    }

    /// Pushes a freshly committed edit. Any redo branch is discarded.
    pub fn record(&mut self, edit: Edit, inverse: Edit) {
        push_bounded(
            &mut self.undo_stack,
            EditPair { edit, inverse },
            self.capacity,
        );
        self.redo_stack.clear();
    }

    pub fn record_applied(&mut self, applied: &Applied) {
        self.record(applied.edit.clone(), applied.inverse.clone());
    }

    /// Applies `edit` to `d` and records it.
    pub fn commit(&mut self, d: &Dataset, edit: &Edit, duration: TimePoint) -> Result<Dataset> {
        let applied = apply_edit(d, edit, duration)?;
        self.record_applied(&applied);
        Ok(applied.dataset)
    }

    pub fn undo(&mut self, d: &Dataset, duration: TimePoint) -> Result<Dataset> {
        let pair = self.undo_stack.pop_back().ok_or(Error::NothingToUndo)?;
        match apply_edit(d, &pair.inverse, duration) {
            Ok(applied) => {
                push_bounded(&mut self.redo_stack, pair, self.capacity);
                Ok(applied.dataset)
            }
            Err(e) => {
                self.undo_stack.push_back(pair);
                Err(e)
            }
        }
    }

    pub fn redo(&mut self, d: &Dataset, duration: TimePoint) -> Result<Dataset> {
        let pair = self.redo_stack.pop_back().ok_or(Error::NothingToRedo)?;
        match apply_edit(d, &pair.edit, duration) {
            Ok(applied) => {
                push_bounded(&mut self.undo_stack, pair, self.capacity);
                Ok(applied.dataset)
            }
            Err(e) => {
                self.redo_stack.push_back(pair);
                Err(e)
            }
        }
    }
}

fn push_bounded(stack: &mut VecDeque<EditPair>, pair: EditPair, capacity: usize) {
    if stack.len() == capacity {
        stack.pop_front();
    }
    stack.push_back(pair);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::LabelDraft;
    use proptest::prelude::*;

    const DUR: TimePoint = TimePoint::from_secs(10);

    fn create(start: u64) -> Edit {
        Edit::Create {
            label: LabelDraft::new("track-1", "event", TimePoint(start), TimePoint(start + 1)),
            index: None,
        }
    }

    #[test]
    fn undo_redo_create() {
        let d0 = Dataset::with_defaults();
        let mut h = History::default();
        let d1 = h.commit(&d0, &create(0), DUR).unwrap();
        assert_eq!(d1.labels.len(), 1);
        let d2 = h.undo(&d1, DUR).unwrap();
        assert!(d2.labels.is_empty());
        let d3 = h.redo(&d2, DUR).unwrap();
        assert_eq!(d3.labels, d1.labels);
        assert_eq!(d3.labels[0].id, d1.labels[0].id);
    }

    #[test]
    fn empty_stacks() {
        let d = Dataset::with_defaults();
        let mut h = History::default();
        assert_eq!(h.undo(&d, DUR).unwrap_err().code(), "nothing_to_undo");
        assert_eq!(h.redo(&d, DUR).unwrap_err().code(), "nothing_to_redo");
    }

    #[test]
    fn recording_clears_redo() {
        let mut h = History::default();
        let (e1, e2, e3) = (create(1), create(2), create(3));
        h.record(e1.clone(), Edit::Delete { id: "1".into() });
        h.record(e2, Edit::Delete { id: "2".into() });
        let top = h.undo_stack.pop_back().unwrap();
        h.redo_stack.push_back(top);
        h.record(e3.clone(), Edit::Delete { id: "3".into() });
        assert!(!h.can_redo());
        assert_eq!(h.undo_edits().cloned().collect::<Vec<_>>(), vec![e1, e3]);
    }

    #[test]
    fn undo_then_record_drops_redo_through_datasets() {
        let mut h = History::default();
        let mut d = Dataset::with_defaults();
        d = h.commit(&d, &create(1), DUR).unwrap();
        d = h.commit(&d, &create(2), DUR).unwrap();
        d = h.undo(&d, DUR).unwrap();
        assert!(h.can_redo());
        h.commit(&d, &create(3), DUR).unwrap();
        assert!(!h.can_redo());
        assert_eq!(h.undo_edits().count(), 2);
    }

    #[test]
    fn capacity_drops_oldest() {
        let mut h = History::with_capacity(3);
        let mut d = Dataset::with_defaults();
        for i in 0..5 {
            d = h.commit(&d, &create(i * 10), DUR).unwrap();
        }
        assert_eq!(h.undo_edits().count(), 3);
        for _ in 0..3 {
            d = h.undo(&d, DUR).unwrap();
        }
        assert_eq!(h.undo(&d, DUR).unwrap_err(), Error::NothingToUndo);
        assert_eq!(d.labels.len(), 2);
    }

    proptest! {
        #[test]
        fn full_undo_and_redo(edits in proptest::collection::vec(crate::annotator::tests::edit_strategy(), 0..50)) {
            let initial = crate::annotator::tests::fixture();
            let mut h = History::default();
            let mut d = initial.clone();
            let mut n = 0;
            for e in &edits {
                if let Ok(next) = h.commit(&d, e, DUR) {
                    d = next;
                    n += 1;
                }
            }
            let fin = d.clone();
            for _ in 0..n {
                d = h.undo(&d, DUR).unwrap();
            }
            prop_assert!(!h.can_undo());
            let mut restored = d.clone();
            restored.revision = initial.revision;
            prop_assert_eq!(&restored, &initial);
            for _ in 0..n {
                d = h.redo(&d, DUR).unwrap();
            }
            d.revision = fin.revision;
            prop_assert_eq!(d, fin);
        }
    }
}
